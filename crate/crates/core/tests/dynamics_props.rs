use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use synthdim::dynamics::*;
use synthdim::effective::{MarkovRates, Placement};
use synthdim::model::*;
use synthdim::observables::{max_deviation, norm_defect};

const E: BasisLabel = BasisLabel::atom(Level::E);

fn small_params() -> impl Strategy<Value = ModelParams> {
    (0.0..5.0f64, 0.0..3.0f64, 10.0..40.0f64, -3.2..3.2f64, 1..5i64)
        .prop_map(|(g, eta, delta, theta, n)| ModelParams::symmetric(g, eta, delta, theta, n, 11))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn evolution_is_linear(p in small_params(), a in -1.0..1.0f64, b in -1.0..1.0f64, seed in 0..1000usize) {
        let g = build_full_static(&p).unwrap();
        let cfg = IntegratorConfig::auto(&g, 1.0);
        let prop = Propagator::new(&g, &cfg).unwrap();
        let dim = g.dim();
        let x = CVector::from_fn(dim, |i, _| C64::new(((i * 7 + seed) % 5) as f64 * 0.1, 0.05 * i as f64));
        let y = CVector::from_fn(dim, |i, _| C64::new(0.02 * i as f64, ((i * 3 + seed) % 4) as f64 * -0.1));
        let mix = &x * C64::new(a, 0.0) + &y * C64::new(0.0, b);
        let (_, sx) = prop.evolve(&x).unwrap();
        let (_, sy) = prop.evolve(&y).unwrap();
        let (_, sm) = prop.evolve(&mix).unwrap();
        for k in 0..sm.len() {
            let expect = &sx[k] * C64::new(a, 0.0) + &sy[k] * C64::new(0.0, b);
            prop_assert!((&sm[k] - expect).norm() <= 1e-12);
        }
    }

    #[test]
    fn norm_is_conserved(p in small_params(), t_end in 0.5..4.0f64) {
        for g in [build_full_static(&p).unwrap(), build_full_td(&p).unwrap(), build_auxiliary(&p).unwrap()] {
            let cfg = IntegratorConfig::auto(&g, t_end);
            let tr = propagate(&g, &init_state(&g.basis, &E).unwrap(), &cfg).unwrap();
            prop_assert!(norm_defect(&tr) <= 1e-9);
        }
    }

    #[test]
    fn frames_agree(p in small_params()) {
        let td = build_full_td(&p).unwrap();
        let st = build_full_static(&p).unwrap();
        let cfg = IntegratorConfig::auto(&td, 2.0);
        let a = propagate(&td, &init_state(&td.basis, &E).unwrap(), &cfg).unwrap();
        let b = propagate(&st, &init_state(&st.basis, &E).unwrap(), &cfg).unwrap();
        prop_assert!(max_deviation(&a, &b, st.basis.labels()).unwrap() <= 1e-6);
    }
}

#[test]
fn step_halving_on_fig2a() {
    let g = build_full_static(&ModelParams::symmetric(3.0, 2.0, 60.0, 0.0, 2, 25)).unwrap();
    let cfg = IntegratorConfig::auto(&g, 5.0);
    let psi = init_state(&g.basis, &E).unwrap();
    let a = propagate(&g, &psi, &cfg).unwrap();
    let b = propagate(&g, &psi, &cfg.halved()).unwrap();
    assert_eq!(a.times.len(), b.times.len());
    assert!(max_deviation(&a, &b, g.basis.labels()).unwrap() <= 1e-8);
    assert!(norm_defect(&a) <= 1e-9);
}

#[test]
fn switch_off_freezes_the_excited_level() {
    let p = ModelParams::symmetric(60.0, 5.0, 200.0, 0.0, 2, 25);
    let g = build_auxiliary_switched(&p, &DriveSchedule::switch_off(1.0, 3.0).unwrap()).unwrap();
    let tr = propagate(&g, &init_state(&g.basis, &BasisLabel::Site(1)).unwrap(), &IntegratorConfig::auto(&g, 5.0)).unwrap();
    let pe = tr.series(&E).unwrap();
    let k = tr.nearest_sample(3.0);
    assert!(pe[k..].iter().all(|&x| (x - pe[k]).abs() < 1e-9));
    assert!(pe[..k].iter().any(|&x| (x - pe[k]).abs() > 1e-3));
}

fn lattice_vs_delay(theta: f64, m: i64, init_small: bool) -> (Trajectory, AmplitudeSeries, AmplitudeSeries) {
    let (n, g, xi) = (3, 0.1, 0.1);
    let (m_min, m_max) = centered_extent(105, n);
    let gs = build_giant_small(&GiantSmallParams { j: 1.0, g, xi, theta, n, m, omega0: 0.0, m_min, m_max }).unwrap();
    let start = if init_small { SMALL } else { GIANT };
    let tr = propagate(&gs, &init_state(&gs.basis, &start).unwrap(), &IntegratorConfig::auto(&gs, 20.0)).unwrap();
    let init = if init_small { (C64::new(0.0, 0.0), C64::new(1.0, 0.0)) } else { (C64::new(1.0, 0.0), C64::new(0.0, 0.0)) };
    let rates = MarkovRates::band_center(g, xi, 1.0);
    let pl = Placement::from_sites(m, n).unwrap();
    let cfg = IntegratorConfig::new(0.01, 20.0, 4);
    let dde = integrate_dde(&rates, &pl, theta, init, &cfg, None).unwrap();
    let mk = integrate_markov(&rates, &pl, theta, init, &cfg).unwrap();
    (tr, dde, mk)
}

fn worst(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn giant_small_lattice_matches_delay_equations() {
    for (theta, m, init_small) in [(0.0, 1, false), (FRAC_PI_2, -2, true), (FRAC_PI_2, 5, false)] {
        let (tr, dde, mk) = lattice_vs_delay(theta, m, init_small);
        let (pb, pc) = (tr.series(&GIANT).unwrap(), tr.series(&SMALL).unwrap());
        assert!(worst(&pb, &dde.pop_b()) <= 0.05 && worst(&pc, &dde.pop_c()) <= 0.05, "theta {theta}, M {m}");
        assert!(worst(&pb, &mk.pop_b()) <= 0.07 && worst(&pc, &mk.pop_c()) <= 0.07, "theta {theta}, M {m}");
    }
}

#[test]
fn right_side_small_atom_cannot_excite_giant() {
    let (tr, _, mk) = lattice_vs_delay(FRAC_PI_2, 5, true);
    assert!(mk.pop_b().iter().all(|&x| x < 1e-20));
    assert!(tr.series(&GIANT).unwrap().iter().cloned().fold(0.0, f64::max) < 0.02);
}

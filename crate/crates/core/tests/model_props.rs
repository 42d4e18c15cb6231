use proptest::prelude::*;
use synthdim::model::*;

fn params() -> impl Strategy<Value = ModelParams> {
    (0.0..60.0f64, 0.0..60.0f64, 0.0..6.0f64, 0.0..6.0f64, 20.0..250.0f64, -250.0..-20.0f64, -3.2..3.2f64, 1..6i64, 0..12i64)
        .prop_map(|(g1, g2, eta1, eta2, d1, d2, theta, n, pad)| {
            let (m_min, m_max) = centered_extent(n + 1 + pad, n);
            ModelParams { j: 1.0, g1, g2, eta1, eta2, delta1: d1, delta2: d2, theta, n, m_min, m_max }
        })
}

proptest! {
    #[test]
    fn builders_are_hermitian(p in params(), t in 0.0..10.0f64) {
        for g in [
            build_full_static(&p).unwrap(),
            build_full_td(&p).unwrap(),
            build_auxiliary(&p).unwrap(),
            build_ladder_td(&p).unwrap(),
            build_two_atom_full(&p, p.n + 1).unwrap_or_else(|_| build_full_static(&p).unwrap()),
        ] {
            prop_assert!(g.hermiticity_defect() <= 1e-15);
            prop_assert!(hermiticity_defect(&g.hamiltonian_at(t)) <= 1e-12);
        }
    }

    #[test]
    fn lattice_spectrum_in_band(j in 0.01..5.0f64, lo in -30..0i64, len in 2..40i64) {
        let g = build_lattice(j, lo, lo + len - 1).unwrap();
        let ev = g.static_part.clone().symmetric_eigenvalues();
        for &e in ev.iter() {
            prop_assert!(e.abs() <= 2.0 * j + 1e-9 * j, "eigenvalue {e} outside band of j = {j}");
        }
    }

    #[test]
    fn basis_is_sorted_and_serializes_stably(p in params()) {
        let g = build_auxiliary(&p).unwrap();
        let labels = g.basis.labels();
        prop_assert!(labels.windows(2).all(|w| w[0] < w[1]));
        let a = serde_json::to_string(labels).unwrap();
        let b = serde_json::to_string(build_auxiliary(&p).unwrap().basis.labels()).unwrap();
        prop_assert_eq!(&a, &b);
        let back: Vec<BasisLabel> = serde_json::from_str(&a).unwrap();
        prop_assert_eq!(back.as_slice(), labels);
    }

    #[test]
    fn schedule_is_left_continuous(a in -5.0..5.0f64, t_off in 0.1..10.0f64, eps in 1e-9..1e-3f64) {
        let s = DriveSchedule::switch_off(a, t_off).unwrap();
        prop_assert_eq!(s.at(t_off - eps), a);
        prop_assert_eq!(s.at(t_off), 0.0);
        prop_assert_eq!(s.at(t_off + eps), 0.0);
        prop_assert_eq!(s.max_abs(), a.abs());
    }
}

#[test]
fn fig2_dimension_and_elements() {
    let p = ModelParams::symmetric(3.0, 2.0, 60.0, std::f64::consts::FRAC_PI_2, 2, 25);
    let g = build_full_static(&p).unwrap();
    assert_eq!(g.dim(), 28);
    let e = BasisLabel::atom(Level::E);
    let f1 = BasisLabel::atom(Level::F1);
    assert_eq!(g.element(&BasisLabel::Site(0), &f1).unwrap().re, 3.0);
    let phase = g.element(&e, &f1).unwrap();
    assert!(phase.re.abs() < 1e-15 && (phase.im - 2.0).abs() < 1e-15);
    assert_eq!(build_auxiliary(&p).unwrap().dim(), 30);
}

#[test]
fn init_state_outside_basis() {
    let g = build_lattice(1.0, -12, 12).unwrap();
    assert_eq!(init_state(&g.basis, &BasisLabel::Site(3)).unwrap().probability(&BasisLabel::Site(3)), Some(1.0));
    assert!(init_state(&g.basis, &BasisLabel::Site(13)).is_err());
    assert!(init_state(&g.basis, &BasisLabel::atom(Level::E)).is_err());
}

//! Fixed-step time integration.
//!
//! [`propagate`] advances `i d psi/dt = H(t) psi` for any [`Generator`] with the
//! classical fourth-order Runge–Kutta scheme. [`integrate_dde`] and
//! [`integrate_markov`] solve the giant–small amplitude equations with and
//! without retardation.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::effective::{cis_exact, EffectiveError, MarkovRates, Placement};
use crate::model::{BasisLabel, CMatrix, CVector, Generator, ModelError, StateVector};

/// Number of samples recorded by [`IntegratorConfig::auto`].
pub const DEFAULT_SAMPLES: usize = 500;
/// Hard stability limit: `dt * bound` may not exceed this.
pub const STABILITY_LIMIT: f64 = 0.1;
/// `dt * bound` targeted by [`IntegratorConfig::auto`].
pub const DEFAULT_STEP_FACTOR: f64 = 0.02;
/// Largest tolerated norm drift before a run aborts.
pub const NORM_ABORT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error("state basis does not match the generator basis")]
    BasisMismatch,
    #[error("invalid integrator config: {0}")]
    Config(String),
    #[error("dt = {dt} exceeds the stability limit {limit} (spectral bound {bound})")]
    Unstable { dt: f64, limit: f64, bound: f64 },
    #[error("norm drifted to {norm} at t = {t}")]
    NormDrift { t: f64, norm: f64 },
    #[error("delay {delay} is not a multiple of dt = {dt}")]
    DelayMisaligned { delay: f64, dt: f64 },
    #[error("rates must be non-negative")]
    NegativeRate,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Effective(#[from] EffectiveError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    pub sample_stride: usize,
    #[serde(default)]
    pub method: Method,
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64, sample_stride: usize) -> Self {
        IntegratorConfig { dt, t_end, sample_stride, method: Method::Rk4 }
    }

    /// Step of `DEFAULT_STEP_FACTOR / bound` or finer, with a step count that is a
    /// multiple of [`DEFAULT_SAMPLES`] so samples fall on a uniform grid.
    pub fn auto(g: &Generator, t_end: f64) -> Self {
        Self::with_factor(rate_bound(g), t_end, DEFAULT_STEP_FACTOR)
    }

    pub(crate) fn with_factor(bound: f64, t_end: f64, factor: f64) -> Self {
        if t_end <= 0.0 {
            return IntegratorConfig::new(factor / bound, 0.0, 1);
        }
        let per_sample = ((t_end / (factor / bound)) / DEFAULT_SAMPLES as f64).ceil().max(1.0) as usize;
        let steps = per_sample * DEFAULT_SAMPLES;
        IntegratorConfig::new(t_end / steps as f64, t_end, per_sample)
    }

    /// Same horizon and samples with the step halved.
    pub fn halved(&self) -> Self {
        IntegratorConfig { dt: self.dt / 2.0, sample_stride: self.sample_stride * 2, ..self.clone() }
    }

    pub fn steps(&self) -> Result<usize, DynamicsError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(DynamicsError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(DynamicsError::Config(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if self.sample_stride == 0 {
            return Err(DynamicsError::Config("sample_stride must be positive".into()));
        }
        let steps = (self.t_end / self.dt).round();
        if (steps * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(1.0) {
            return Err(DynamicsError::Config(format!(
                "t_end = {} is not a whole number of steps dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(steps as usize)
    }

    /// Step indices at which samples are taken; the last step is always included.
    fn sample_steps(&self, steps: usize) -> Vec<usize> {
        let mut s: Vec<usize> = (0..=steps).step_by(self.sample_stride).collect();
        if *s.last().unwrap() != steps {
            s.push(steps);
        }
        s
    }
}

/// `max(spectral bound, largest oscillation frequency, 1e-12)`.
pub fn rate_bound(g: &Generator) -> f64 {
    g.spectral_bound().max(g.max_frequency()).max(1e-12)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub model: String,
    pub params: serde_json::Value,
    pub config: IntegratorConfig,
}

/// Sampled populations of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub labels: Vec<BasisLabel>,
    pub times: Vec<f64>,
    pub probs: Vec<Vec<f64>>,
    pub amps: Option<Vec<CVector>>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn label_index(&self, label: &BasisLabel) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Populations of one label over time.
    pub fn series(&self, label: &BasisLabel) -> Option<Vec<f64>> {
        let i = self.label_index(label)?;
        Some(self.probs.iter().map(|p| p[i]).collect())
    }

    /// Index of the sample closest to `t`.
    pub fn nearest_sample(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &ti) in self.times.iter().enumerate() {
            if (ti - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    pub fn with_params(mut self, params: serde_json::Value) -> Self {
        self.meta.params = params;
        self
    }
}

#[derive(Debug, Clone)]
struct SparseOp {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseOp {
    fn from_dense(m: &CMatrix) -> Self {
        let (mut rows, mut cols, mut vals) = (vec![], vec![], vec![]);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v.re != 0.0 || v.im != 0.0 {
                    rows.push(i);
                    cols.push(j);
                    vals.push(v);
                }
            }
        }
        SparseOp { rows, cols, vals }
    }

    /// `out += scale * self * x`
    fn apply_add(&self, x: &[C64], scale: C64, out: &mut [C64]) {
        for k in 0..self.vals.len() {
            out[self.rows[k]] += scale * self.vals[k] * x[self.cols[k]];
        }
    }
}

struct DriveTerm {
    op: SparseOp,
    adj: SparseOp,
    frequency: f64,
    schedule: crate::model::DriveSchedule,
}

/// Precomputed sparse form of a generator, ready to step.
pub struct Propagator {
    static_part: SparseOp,
    terms: Vec<DriveTerm>,
    dim: usize,
    cfg: IntegratorConfig,
    steps: usize,
}

const MINUS_I: C64 = C64 { re: 0.0, im: -1.0 };

impl Propagator {
    pub fn new(g: &Generator, cfg: &IntegratorConfig) -> Result<Self, DynamicsError> {
        let steps = cfg.steps()?;
        let bound = rate_bound(g);
        let limit = STABILITY_LIMIT / bound;
        if cfg.dt > limit * (1.0 + 1e-12) {
            return Err(DynamicsError::Unstable { dt: cfg.dt, limit, bound });
        }
        Ok(Propagator {
            static_part: SparseOp::from_dense(&g.static_part),
            terms: g
                .td_terms
                .iter()
                .map(|t| DriveTerm {
                    op: SparseOp::from_dense(&t.op),
                    adj: SparseOp::from_dense(&t.op.adjoint()),
                    frequency: t.frequency,
                    schedule: t.schedule.clone(),
                })
                .collect(),
            dim: g.dim(),
            cfg: cfg.clone(),
            steps,
        })
    }

    /// `out = -i H(t) x`, drive amplitudes taken from `amps`.
    fn rhs(&self, t: f64, amps: &[f64], x: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        self.static_part.apply_add(x, MINUS_I, out);
        for (term, &a) in self.terms.iter().zip(amps) {
            if a == 0.0 {
                continue;
            }
            let phase = C64::from_polar(a, term.frequency * t);
            term.op.apply_add(x, MINUS_I * phase, out);
            term.adj.apply_add(x, MINUS_I * phase.conj(), out);
        }
    }

    /// Evolves raw amplitudes and returns `(sample times, sampled amplitudes)`.
    /// The input need not be normalized.
    pub fn evolve(&self, initial: &CVector) -> Result<(Vec<f64>, Vec<CVector>), DynamicsError> {
        if initial.len() != self.dim {
            return Err(DynamicsError::BasisMismatch);
        }
        let n = self.dim;
        let dt = self.cfg.dt;
        let sample_steps = self.cfg.sample_steps(self.steps);
        let norm0 = initial.norm();
        let mut y: Vec<C64> = initial.iter().copied().collect();
        let (mut k1, mut k2, mut k3, mut k4) = (vec![C64::default(); n], vec![C64::default(); n], vec![C64::default(); n], vec![C64::default(); n]);
        let mut tmp = vec![C64::default(); n];
        let mut amps = vec![0.0; self.terms.len()];
        let mut times = Vec::with_capacity(sample_steps.len());
        let mut samples = Vec::with_capacity(sample_steps.len());
        let mut next = 0;

        for step in 0..=self.steps {
            let t = step as f64 * dt;
            if next < sample_steps.len() && sample_steps[next] == step {
                let v = CVector::from_column_slice(&y);
                let norm = v.norm();
                if norm0 > 0.0 && ((norm - norm0) / norm0).abs() > NORM_ABORT {
                    return Err(DynamicsError::NormDrift { t, norm: norm / norm0 });
                }
                times.push(t);
                samples.push(v);
                next += 1;
            }
            if step == self.steps {
                break;
            }
            // piecewise-constant drives are sampled once per step at its midpoint
            for (a, term) in amps.iter_mut().zip(&self.terms) {
                *a = term.schedule.at(t + 0.5 * dt);
            }
            let h = C64::new(dt, 0.0);
            let half = C64::new(0.5 * dt, 0.0);
            self.rhs(t, &amps, &y, &mut k1);
            for i in 0..n {
                tmp[i] = y[i] + half * k1[i];
            }
            self.rhs(t + 0.5 * dt, &amps, &tmp, &mut k2);
            for i in 0..n {
                tmp[i] = y[i] + half * k2[i];
            }
            self.rhs(t + 0.5 * dt, &amps, &tmp, &mut k3);
            for i in 0..n {
                tmp[i] = y[i] + h * k3[i];
            }
            self.rhs(t + dt, &amps, &tmp, &mut k4);
            for i in 0..n {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        Ok((times, samples))
    }
}

/// Propagates `psi0` under `g`, recording populations every `sample_stride` steps.
pub fn propagate(g: &Generator, psi0: &StateVector, cfg: &IntegratorConfig) -> Result<Trajectory, DynamicsError> {
    propagate_with(g, psi0, cfg, false)
}

/// [`propagate`] that also keeps the complex amplitudes at each sample.
pub fn propagate_with(
    g: &Generator,
    psi0: &StateVector,
    cfg: &IntegratorConfig,
    keep_amplitudes: bool,
) -> Result<Trajectory, DynamicsError> {
    if psi0.basis != g.basis {
        return Err(DynamicsError::BasisMismatch);
    }
    let (times, samples) = Propagator::new(g, cfg)?.evolve(&psi0.amplitudes)?;
    let probs = samples.iter().map(|v| v.iter().map(|z| z.norm_sqr()).collect()).collect();
    Ok(Trajectory {
        labels: g.basis.labels().to_vec(),
        times,
        probs,
        amps: keep_amplitudes.then_some(samples),
        meta: TrajectoryMeta { model: g.model.clone(), params: serde_json::Value::Null, config: cfg.clone() },
    })
}

/// Sampled `(u_b, u_c)` of the giant–small amplitude equations.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSeries {
    pub times: Vec<f64>,
    pub u_b: Vec<C64>,
    pub u_c: Vec<C64>,
}

impl AmplitudeSeries {
    pub fn pop_b(&self) -> Vec<f64> {
        self.u_b.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn pop_c(&self) -> Vec<f64> {
        self.u_c.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Retardation times of the three paths, `N/v0`, `|M|/v0` and `|D|/v0` by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delays {
    pub n: f64,
    pub m: f64,
    pub d: f64,
}

impl Delays {
    pub fn from_geometry(placement: &Placement, v0: f64) -> Self {
        Delays {
            n: placement.n().abs() as f64 / v0,
            m: placement.m.abs() as f64 / v0,
            d: placement.d.abs() as f64 / v0,
        }
    }
}

/// Phase factors shared by the delayed and Markovian equations.
struct Coefficients {
    /// `cos(theta) e^{i k0 N}`
    self_echo: C64,
    /// `e^{i(k0 M' + theta)}`, coefficient of `u_c` in `du_b/dt`
    to_giant_m: C64,
    /// `e^{i(k0 M' - theta)}`, coefficient of `u_b` in `du_c/dt`
    to_small_m: C64,
    /// `e^{i k0 D'}`
    d_path: C64,
}

impl Coefficients {
    fn new(rates: &MarkovRates, placement: &Placement, theta: f64) -> Self {
        let (m, d) = placement.phase_indices();
        let k0 = rates.k0;
        Coefficients {
            self_echo: cis_exact(theta).re * cis_exact(k0 * placement.n() as f64),
            to_giant_m: cis_exact(k0 * m as f64 + theta),
            to_small_m: cis_exact(k0 * m as f64 - theta),
            d_path: cis_exact(k0 * d as f64),
        }
    }
}

fn check_rates(rates: &MarkovRates) -> Result<(), DynamicsError> {
    if rates.gamma_b < 0.0 || rates.gamma_c < 0.0 || rates.gamma_bc < 0.0 || !(rates.v0 > 0.0) {
        return Err(DynamicsError::NegativeRate);
    }
    Ok(())
}

fn delay_steps(delay: f64, dt: f64) -> Result<usize, DynamicsError> {
    if !(delay >= 0.0) {
        return Err(DynamicsError::DelayMisaligned { delay, dt });
    }
    let k = (delay / dt).round();
    if (k * dt - delay).abs() > 1e-9 {
        return Err(DynamicsError::DelayMisaligned { delay, dt });
    }
    Ok(k as usize)
}

/// Solves the delayed giant–small equations with RK4 on a grid that contains
/// every delay. History between grid points is interpolated linearly, and
/// delayed terms vanish while `t < delay`.
pub fn integrate_dde(
    rates: &MarkovRates,
    placement: &Placement,
    theta: f64,
    init: (C64, C64),
    cfg: &IntegratorConfig,
    delays: Option<Delays>,
) -> Result<AmplitudeSeries, DynamicsError> {
    check_rates(rates)?;
    let steps = cfg.steps()?;
    let dt = cfg.dt;
    let delays = delays.unwrap_or_else(|| Delays::from_geometry(placement, rates.v0));
    let (kn, km, kd) = (delay_steps(delays.n, dt)?, delay_steps(delays.m, dt)?, delay_steps(delays.d, dt)?);
    let c = Coefficients::new(rates, placement, theta);
    let (gb, gc, gbc) = (rates.gamma_b, rates.gamma_c, rates.gamma_bc);

    let mut hist: Vec<(C64, C64)> = Vec::with_capacity(steps + 1);
    hist.push(init);

    // value of the pair `k` steps before the stage at half-index `2 n + half`
    let delayed = |hist: &[(C64, C64)], n: usize, half: usize, k: usize, stage: (C64, C64)| -> (C64, C64) {
        if k == 0 {
            return stage;
        }
        let j = (2 * n + half) as i64 - 2 * k as i64;
        if j < 0 {
            return (C64::default(), C64::default());
        }
        let j = j as usize;
        if j % 2 == 0 {
            hist[j / 2]
        } else {
            let (a, b) = (hist[(j - 1) / 2], hist[(j + 1) / 2]);
            ((a.0 + b.0) * 0.5, (a.1 + b.1) * 0.5)
        }
    };
    let rhs = |hist: &[(C64, C64)], n: usize, half: usize, y: (C64, C64)| -> (C64, C64) {
        let yn = delayed(hist, n, half, kn, y);
        let ym = delayed(hist, n, half, km, y);
        let yd = delayed(hist, n, half, kd, y);
        let db = -2.0 * gb * (y.0 + c.self_echo * yn.0) - gbc * (c.to_giant_m * ym.1 + c.d_path * yd.1);
        let dc = -gc * y.1 - gbc * (c.to_small_m * ym.0 + c.d_path * yd.0);
        (db, dc)
    };

    let mut y = init;
    for n in 0..steps {
        let k1 = rhs(&hist, n, 0, y);
        let k2 = rhs(&hist, n, 1, (y.0 + k1.0 * (0.5 * dt), y.1 + k1.1 * (0.5 * dt)));
        let k3 = rhs(&hist, n, 1, (y.0 + k2.0 * (0.5 * dt), y.1 + k2.1 * (0.5 * dt)));
        let k4 = rhs(&hist, n, 2, (y.0 + k3.0 * dt, y.1 + k3.1 * dt));
        y = (
            y.0 + (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0) * (dt / 6.0),
            y.1 + (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1) * (dt / 6.0),
        );
        hist.push(y);
    }
    Ok(sample_pairs(&hist, cfg, steps))
}

fn sample_pairs(hist: &[(C64, C64)], cfg: &IntegratorConfig, steps: usize) -> AmplitudeSeries {
    let idx = cfg.sample_steps(steps);
    AmplitudeSeries {
        times: idx.iter().map(|&k| k as f64 * cfg.dt).collect(),
        u_b: idx.iter().map(|&k| hist[k].0).collect(),
        u_c: idx.iter().map(|&k| hist[k].1).collect(),
    }
}

/// Solves the delay-free limit `u' = A u` of the giant–small equations.
pub fn integrate_markov(
    rates: &MarkovRates,
    placement: &Placement,
    theta: f64,
    init: (C64, C64),
    cfg: &IntegratorConfig,
) -> Result<AmplitudeSeries, DynamicsError> {
    check_rates(rates)?;
    let steps = cfg.steps()?;
    let c = Coefficients::new(rates, placement, theta);
    let a = [
        [-2.0 * rates.gamma_b * (1.0 + c.self_echo), -rates.gamma_bc * (c.to_giant_m + c.d_path)],
        [-rates.gamma_bc * (c.to_small_m + c.d_path), C64::new(-rates.gamma_c, 0.0)],
    ];
    let f = |y: (C64, C64)| (a[0][0] * y.0 + a[0][1] * y.1, a[1][0] * y.0 + a[1][1] * y.1);
    let dt = cfg.dt;
    let mut hist = Vec::with_capacity(steps + 1);
    let mut y = init;
    hist.push(y);
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f((y.0 + k1.0 * (0.5 * dt), y.1 + k1.1 * (0.5 * dt)));
        let k3 = f((y.0 + k2.0 * (0.5 * dt), y.1 + k2.1 * (0.5 * dt)));
        let k4 = f((y.0 + k3.0 * dt, y.1 + k3.1 * dt));
        y = (
            y.0 + (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0) * (dt / 6.0),
            y.1 + (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1) * (dt / 6.0),
        );
        hist.push(y);
    }
    Ok(sample_pairs(&hist, cfg, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effective::Side;
    use crate::model::{build_lattice, init_state, Basis, BasisLabel};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn one() -> C64 {
        C64::new(1.0, 0.0)
    }

    fn zero() -> C64 {
        C64::new(0.0, 0.0)
    }

    #[test]
    fn zero_hamiltonian_keeps_state() {
        let g = build_lattice(0.0, -3, 3).unwrap();
        let psi = init_state(&g.basis, &BasisLabel::Site(1)).unwrap();
        let cfg = IntegratorConfig::new(0.01, 2.0, 10);
        let tr = propagate(&g, &psi, &cfg).unwrap();
        assert_eq!(tr.times.len(), 21);
        assert!(tr.series(&BasisLabel::Site(1)).unwrap().iter().all(|&p| p == 1.0));
    }

    #[test]
    fn two_site_rabi_transfer() {
        let g = build_lattice(1.0, 0, 1).unwrap();
        let psi = init_state(&g.basis, &BasisLabel::Site(0)).unwrap();
        let steps = 20_000;
        let cfg = IntegratorConfig::new(FRAC_PI_2 / steps as f64, FRAC_PI_2, 100);
        let tr = propagate(&g, &psi, &cfg).unwrap();
        let p1 = tr.series(&BasisLabel::Site(1)).unwrap();
        for (t, p) in tr.times.iter().zip(&p1) {
            assert!((p - t.sin().powi(2)).abs() < 1e-9, "t = {t}");
        }
        assert!((p1.last().unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_mismatch_and_unstable_steps() {
        let g = build_lattice(1.0, 0, 3).unwrap();
        let other = Basis::new(vec![BasisLabel::Site(0), BasisLabel::Site(1)]);
        let psi = init_state(&other, &BasisLabel::Site(0)).unwrap();
        assert_eq!(
            propagate(&g, &psi, &IntegratorConfig::new(0.01, 1.0, 1)).unwrap_err(),
            DynamicsError::BasisMismatch
        );
        let psi = init_state(&g.basis, &BasisLabel::Site(0)).unwrap();
        assert!(matches!(
            propagate(&g, &psi, &IntegratorConfig::new(0.5, 1.0, 1)),
            Err(DynamicsError::Unstable { .. })
        ));
        assert!(matches!(
            propagate(&g, &psi, &IntegratorConfig::new(0.03, 1.0, 1)),
            Err(DynamicsError::Config(_))
        ));
        assert!(matches!(
            propagate(&g, &psi, &IntegratorConfig::new(-0.01, 1.0, 1)),
            Err(DynamicsError::Config(_))
        ));
    }

    #[test]
    fn auto_config_uses_uniform_samples() {
        let g = build_lattice(1.0, -5, 5).unwrap();
        let cfg = IntegratorConfig::auto(&g, 5.0);
        let steps = cfg.steps().unwrap();
        assert_eq!(steps % DEFAULT_SAMPLES, 0);
        assert_eq!(steps / cfg.sample_stride, DEFAULT_SAMPLES);
        assert!(cfg.dt * rate_bound(&g) <= DEFAULT_STEP_FACTOR + 1e-12);
    }

    #[test]
    fn norm_drift_aborts() {
        // a non-Hermitian "generator" loses norm quickly
        let mut g = build_lattice(1.0, 0, 1).unwrap();
        g.static_part[(0, 0)] = C64::new(0.0, -0.5);
        let psi = init_state(&g.basis, &BasisLabel::Site(0)).unwrap();
        let err = propagate(&g, &psi, &IntegratorConfig::new(0.01, 1.0, 10)).unwrap_err();
        assert!(matches!(err, DynamicsError::NormDrift { .. }));
    }

    #[test]
    fn small_atom_decays_exponentially_without_cross_coupling() {
        let rates = MarkovRates { gamma_bc: 0.0, ..MarkovRates::band_center(0.1, 0.2, 1.0) };
        let place = Placement::new(Side::Between, 1, 2).unwrap();
        let cfg = IntegratorConfig::new(0.05, 20.0, 10);
        let s = integrate_dde(&rates, &place, 0.0, (zero(), one()), &cfg, None).unwrap();
        for (t, u) in s.times.iter().zip(&s.u_c) {
            assert!((u - C64::new((-rates.gamma_c * t).exp(), 0.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn zero_delays_reduce_to_markov() {
        let rates = MarkovRates::band_center(0.2, 0.15, 1.0);
        let place = Placement::new(Side::Between, 1, 2).unwrap();
        let cfg = IntegratorConfig::new(0.05, 30.0, 5);
        let zero_delays = Delays { n: 0.0, m: 0.0, d: 0.0 };
        for theta in [0.0, 0.8] {
            let a = integrate_dde(&rates, &place, theta, (one(), zero()), &cfg, Some(zero_delays)).unwrap();
            let b = integrate_markov(&rates, &place, theta, (one(), zero()), &cfg).unwrap();
            for k in 0..a.times.len() {
                assert!((a.u_b[k] - b.u_b[k]).norm() < 1e-8);
                assert!((a.u_c[k] - b.u_c[k]).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn decoherence_free_giant_atom_survives_retardation() {
        let rates = MarkovRates::band_center(0.1, 0.0, 1.0);
        assert!((rates.gamma_b - 0.005).abs() < 1e-15);
        let place = Placement::new(Side::Between, 1, 1).unwrap();
        let cfg = IntegratorConfig::new(0.05, 50.0, 10);
        let s = integrate_dde(&rates, &place, 0.0, (one(), zero()), &cfg, None).unwrap();
        let markov = integrate_markov(&rates, &place, 0.0, (one(), zero()), &cfg).unwrap();
        let df = markov.pop_b().last().copied().unwrap();
        assert!((df - 1.0).abs() < 1e-12);
        assert!(*s.pop_b().last().unwrap() >= df - 0.05);
    }

    #[test]
    fn markov_zero_couplings_block_transfer() {
        let rates = MarkovRates::band_center(0.1, 0.1, 1.0);
        let cfg = IntegratorConfig::new(0.05, 20.0, 10);
        let between = Placement::new(Side::Between, 1, 3).unwrap();
        let s = integrate_markov(&rates, &between, 0.0, (zero(), one()), &cfg).unwrap();
        assert!(s.u_b.iter().all(|z| z.norm() == 0.0));

        let right = Placement::from_sites(4, 3).unwrap();
        let s = integrate_markov(&rates, &right, FRAC_PI_2, (zero(), one()), &cfg).unwrap();
        assert!(s.u_b.iter().all(|z| z.norm() == 0.0));

        let dfree = Placement::new(Side::Between, 1, 1).unwrap();
        let r0 = MarkovRates { gamma_c: 0.0, gamma_bc: 0.0, ..rates };
        let s = integrate_markov(&r0, &dfree, 0.0, (one(), zero()), &cfg).unwrap();
        assert!(s.u_b.iter().all(|z| (*z - one()).norm() == 0.0));
    }

    #[test]
    fn dde_rejects_misaligned_delays_and_negative_rates() {
        let rates = MarkovRates::band_center(0.1, 0.1, 1.0);
        let place = Placement::new(Side::Between, 1, 2).unwrap();
        let cfg = IntegratorConfig::new(0.3, 3.0, 1);
        assert!(matches!(
            integrate_dde(&rates, &place, 0.0, (one(), zero()), &cfg, None),
            Err(DynamicsError::DelayMisaligned { .. })
        ));
        let bad = MarkovRates { gamma_b: -1.0, ..rates };
        let cfg = IntegratorConfig::new(0.05, 1.0, 1);
        assert_eq!(
            integrate_markov(&bad, &place, 0.0, (one(), zero()), &cfg).unwrap_err(),
            DynamicsError::NegativeRate
        );
        assert_eq!(
            integrate_dde(&bad, &place, 0.0, (one(), zero()), &cfg, None).unwrap_err(),
            DynamicsError::NegativeRate
        );
    }

    #[test]
    fn dde_history_not_read_before_zero() {
        // before the first delay elapses only the instantaneous term acts
        let rates = MarkovRates::band_center(0.3, 0.0, 1.0);
        let place = Placement::new(Side::Between, 2, 2).unwrap();
        let cfg = IntegratorConfig::new(0.01, 2.0, 1);
        let s = integrate_dde(&rates, &place, PI / 3.0, (one(), zero()), &cfg, None).unwrap();
        let k = s.times.iter().position(|&t| (t - 1.5).abs() < 1e-9).unwrap();
        let expected = (-2.0 * rates.gamma_b * 1.5).exp();
        assert!((s.u_b[k] - C64::new(expected, 0.0)).norm() < 1e-9);
    }
}

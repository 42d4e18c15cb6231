//! Quantities extracted from trajectories: populations, emission asymmetry,
//! decay-rate fits, trajectory comparison and boundary guards.

use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::model::{BasisLabel, Level};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ObservableError {
    #[error("label `{0}` is not recorded in the trajectory")]
    UnknownLabel(BasisLabel),
    #[error("t = {t} lies outside the sampled range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("only {found} samples inside the fit window, need at least {needed}")]
    TooFewSamples { found: usize, needed: usize },
    #[error("trajectories are sampled on different time grids")]
    GridMismatch,
    #[error("edge width {width} does not fit a lattice of {sites} sites")]
    EdgeWidth { width: usize, sites: usize },
    #[error("series lengths differ: {0} times, {1} values")]
    Length(usize, usize),
}

fn indices(tr: &Trajectory, labels: &[BasisLabel]) -> Result<Vec<usize>, ObservableError> {
    labels
        .iter()
        .map(|l| tr.label_index(l).ok_or(ObservableError::UnknownLabel(*l)))
        .collect()
}

/// Summed population of `labels` at each sample.
pub fn population_series(tr: &Trajectory, labels: &[BasisLabel]) -> Result<Vec<f64>, ObservableError> {
    let idx = indices(tr, labels)?;
    Ok(tr.probs.iter().map(|p| idx.iter().map(|&i| p[i]).sum()).collect())
}

/// Where the excitation sits relative to the coupling span `[0, N]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiralityReport {
    pub left_mass: f64,
    pub right_mass: f64,
    pub between_mass: f64,
    pub atom_mass: f64,
    /// `(right - left) / (right + left)`, zero when both vanish.
    pub asymmetry: f64,
}

impl ChiralityReport {
    pub fn total(&self) -> f64 {
        self.left_mass + self.right_mass + self.between_mass + self.atom_mass
    }
}

/// Mass distribution of one sample row.
pub fn chirality_at(tr: &Trajectory, sample: usize, n: i64) -> ChiralityReport {
    let row = &tr.probs[sample];
    let (mut left, mut right, mut between, mut atom) = (0.0, 0.0, 0.0, 0.0);
    for (label, &p) in tr.labels.iter().zip(row) {
        match label.site() {
            Some(m) if m < 0 => left += p,
            Some(m) if m > n => right += p,
            Some(_) => between += p,
            None => atom += p,
        }
    }
    let asymmetry = if left + right > 0.0 { (right - left) / (right + left) } else { 0.0 };
    ChiralityReport { left_mass: left, right_mass: right, between_mass: between, atom_mass: atom, asymmetry }
}

/// [`ChiralityReport`] at the sample nearest to `t`.
pub fn chirality(tr: &Trajectory, n: i64, t: f64) -> Result<ChiralityReport, ObservableError> {
    let (lo, hi) = (tr.times[0], *tr.times.last().unwrap());
    let slack = 1e-9 * hi.abs().max(1.0);
    if t < lo - slack || t > hi + slack {
        return Err(ObservableError::OutOfRange { t, lo, hi });
    }
    Ok(chirality_at(tr, tr.nearest_sample(t), n))
}

/// Lattice population on sites `0..=n` at each sample.
pub fn between_series(tr: &Trajectory, n: i64) -> Vec<f64> {
    (0..tr.times.len()).map(|k| chirality_at(tr, k, n).between_mass).collect()
}

/// Excitation held by the giant atom and the lattice segment it spans: sites
/// `0..=n` plus the excited level `atom_e`. Virtual populations of the
/// eliminated levels and auxiliary modes are not counted.
pub fn confined_series(tr: &Trajectory, n: i64) -> Vec<f64> {
    let e = tr.label_index(&BasisLabel::atom(Level::E));
    (0..tr.times.len())
        .map(|k| chirality_at(tr, k, n).between_mass + e.map_or(0.0, |i| tr.probs[k][i]))
        .collect()
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Largest `| ||psi|| - 1 |` implied by the recorded populations.
pub fn norm_defect(tr: &Trajectory) -> f64 {
    tr.probs.iter().map(|p| (p.iter().sum::<f64>().sqrt() - 1.0).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Population decay rate (slope of `-ln P`).
    pub rate: f64,
    /// Root-mean-square residual of `ln P` about the fitted line.
    pub residual: f64,
    pub samples: usize,
}

pub const DEFAULT_FIT_WINDOW: (f64, f64) = (0.9, 0.05);
const MIN_FIT_SAMPLES: usize = 10;

/// Least-squares slope of `-ln P(t)` over samples with `P` in `[p_lo, p_hi]`.
pub fn fit_decay(times: &[f64], series: &[f64], window: (f64, f64)) -> Result<DecayFit, ObservableError> {
    if times.len() != series.len() {
        return Err(ObservableError::Length(times.len(), series.len()));
    }
    let (p_hi, p_lo) = window;
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(series)
        .filter(|(_, &p)| p > 0.0 && p >= p_lo && p <= p_hi)
        .map(|(&t, &p)| (t, -p.ln()))
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(ObservableError::TooFewSamples { found: pts.len(), needed: MIN_FIT_SAMPLES });
    }
    let n = pts.len() as f64;
    let (mt, my) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t / n, b + y / n));
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |(sxy, sxx), (t, y)| (sxy + (t - mt) * (y - my), sxx + (t - mt) * (t - mt)));
    let rate = sxy / sxx;
    let intercept = my - rate * mt;
    let residual = (pts.iter().map(|(t, y)| (y - intercept - rate * t).powi(2)).sum::<f64>() / n).sqrt();
    Ok(DecayFit { rate, residual, samples: pts.len() })
}

/// Largest per-label population difference over all samples.
pub fn max_deviation(a: &Trajectory, b: &Trajectory, labels: &[BasisLabel]) -> Result<f64, ObservableError> {
    if a.times.len() != b.times.len()
        || a.times.iter().zip(&b.times).any(|(x, y)| (x - y).abs() > 1e-9 * x.abs().max(1.0))
    {
        return Err(ObservableError::GridMismatch);
    }
    let (ia, ib) = (indices(a, labels)?, indices(b, labels)?);
    let mut worst = 0.0f64;
    for (pa, pb) in a.probs.iter().zip(&b.probs) {
        for (&i, &k) in ia.iter().zip(&ib) {
            worst = worst.max((pa[i] - pb[k]).abs());
        }
    }
    Ok(worst)
}

/// Largest population found within `edge_width` sites of either lattice end.
pub fn boundary_contamination(tr: &Trajectory, edge_width: usize) -> Result<f64, ObservableError> {
    let sites: Vec<(usize, i64)> =
        tr.labels.iter().enumerate().filter_map(|(i, l)| l.site().map(|m| (i, m))).collect();
    if edge_width == 0 || 2 * edge_width > sites.len() {
        return Err(ObservableError::EdgeWidth { width: edge_width, sites: sites.len() });
    }
    let lo = sites.iter().map(|s| s.1).min().unwrap();
    let hi = sites.iter().map(|s| s.1).max().unwrap();
    let w = edge_width as i64;
    let edge: Vec<usize> = sites.iter().filter(|(_, m)| *m < lo + w || *m > hi - w).map(|s| s.0).collect();
    Ok(tr.probs.iter().map(|p| edge.iter().map(|&i| p[i]).sum::<f64>()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{IntegratorConfig, TrajectoryMeta};

    fn toy(labels: Vec<BasisLabel>, probs: Vec<Vec<f64>>) -> Trajectory {
        let times = (0..probs.len()).map(|k| k as f64).collect();
        Trajectory {
            labels,
            times,
            probs,
            amps: None,
            meta: TrajectoryMeta {
                model: "toy".into(),
                params: serde_json::Value::Null,
                config: IntegratorConfig::new(1.0, 1.0, 1),
            },
        }
    }

    fn e() -> BasisLabel {
        BasisLabel::atom(Level::E)
    }

    #[test]
    fn populations() {
        let labels = vec![BasisLabel::Site(0), BasisLabel::Site(1), e()];
        let tr = toy(labels.clone(), vec![vec![0.0, 0.0, 1.0], vec![0.25, 0.25, 0.5]]);
        assert_eq!(population_series(&tr, &labels).unwrap(), vec![1.0, 1.0]);
        assert_eq!(population_series(&tr, &[e()]).unwrap(), vec![1.0, 0.5]);
        assert!(matches!(
            population_series(&tr, &[BasisLabel::Site(5)]),
            Err(ObservableError::UnknownLabel(_))
        ));
    }

    #[test]
    fn chirality_regions() {
        let labels = vec![-1, 0, 1, 2, 3].into_iter().map(BasisLabel::Site).chain([e()]).collect();
        let tr = toy(labels, vec![vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0], vec![0.1, 0.2, 0.1, 0.1, 0.3, 0.2]]);
        let r = chirality(&tr, 0, 0.0).unwrap();
        assert_eq!((r.left_mass, r.right_mass, r.asymmetry, r.atom_mass), (0.0, 0.0, 0.0, 1.0));
        let r = chirality(&tr, 1, 1.0).unwrap();
        assert!((r.left_mass - 0.1).abs() < 1e-15);
        assert!((r.right_mass - 0.4).abs() < 1e-15);
        assert!((r.between_mass - 0.3).abs() < 1e-15);
        assert!((r.asymmetry - 0.6).abs() < 1e-12);
        assert!((r.total() - 1.0).abs() < 1e-12);
        assert!(matches!(chirality(&tr, 1, 2.5), Err(ObservableError::OutOfRange { .. })));
    }

    #[test]
    fn exact_exponential_fit() {
        let gamma = 0.37;
        let times: Vec<f64> = (0..400).map(|k| k as f64 * 0.05).collect();
        let series: Vec<f64> = times.iter().map(|t| (-gamma * t).exp()).collect();
        let fit = fit_decay(&times, &series, DEFAULT_FIT_WINDOW).unwrap();
        assert!((fit.rate - gamma).abs() < 1e-9);
        assert!(fit.residual < 1e-9);
    }

    #[test]
    fn constant_series_cannot_be_fit() {
        let times: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let err = fit_decay(&times, &vec![1.0; 100], DEFAULT_FIT_WINDOW).unwrap_err();
        assert_eq!(err, ObservableError::TooFewSamples { found: 0, needed: 10 });
    }

    #[test]
    fn deviation_and_grids() {
        let labels = vec![BasisLabel::Site(0), BasisLabel::Site(1)];
        let a = toy(labels.clone(), vec![vec![1.0, 0.0], vec![0.5, 0.5]]);
        assert_eq!(max_deviation(&a, &a, &labels).unwrap(), 0.0);
        let b = toy(labels.clone(), vec![vec![0.0, 1.0], vec![0.5, 0.5]]);
        assert_eq!(max_deviation(&a, &b, &labels).unwrap(), 1.0);
        let c = toy(labels.clone(), vec![vec![1.0, 0.0]]);
        assert_eq!(max_deviation(&a, &c, &labels), Err(ObservableError::GridMismatch));
    }

    #[test]
    fn confined_mass_counts_excited_level_only() {
        let f = BasisLabel::atom(Level::F1);
        let labels = vec![-1, 0, 1, 2, 3].into_iter().map(BasisLabel::Site).chain([e(), f]).collect();
        let tr = toy(labels, vec![vec![0.1, 0.2, 0.1, 0.1, 0.1, 0.3, 0.1]]);
        assert!((confined_series(&tr, 2)[0] - 0.7).abs() < 1e-15);
        assert!(norm_defect(&tr) < 1e-15);
        assert_eq!(mean(&[1.0, 2.0, 6.0]), 3.0);
        assert_eq!(mean(&[]), 0.0);
    }

    #[test]
    fn edges() {
        let labels: Vec<BasisLabel> = (-2..=2).map(BasisLabel::Site).chain([e()]).collect();
        let tr = toy(labels, vec![vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0], vec![0.1, 0.0, 0.5, 0.0, 0.2, 0.2]]);
        assert!((boundary_contamination(&tr, 1).unwrap() - 0.3).abs() < 1e-15);
        assert!(boundary_contamination(&tr, 0).is_err());
        assert!(boundary_contamination(&tr, 3).is_err());
    }
}

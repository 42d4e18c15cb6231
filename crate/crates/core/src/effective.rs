//! Effective giant-atom descriptions: adiabatic elimination of the
//! intermediate levels, the Markovian coupling algebra of the giant–small
//! model, and the second-order effective Hamiltonian of a set of rotating terms.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::model::{
    check_extent, check_finite, lattice_labels, ladder_basis, ladder_terms, re, Basis, BasisLabel, CMatrix,
    Generator, Level, MatrixBuilder, ModelError, ModelParams,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EffectiveError {
    #[error("detuning must be nonzero")]
    ZeroDetuning,
    #[error("operator {index} is {rows}x{cols}, expected {dim}x{dim}")]
    Dimension { index: usize, rows: usize, cols: usize, dim: usize },
    #[error("indices M = {m}, D = {d} are inconsistent with the {side:?} placement")]
    Placement { side: Side, m: i64, d: i64 },
    #[error("a reciprocal coupling requires sin(theta) = 0, got theta = {0}")]
    NotReciprocal(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `e^{i phase}`, exact when `phase` is a multiple of pi/2 up to 1e-9.
pub fn cis_exact(phase: f64) -> C64 {
    let quarters = phase / FRAC_PI_2;
    let k = quarters.round();
    if (quarters - k).abs() < 1e-9 {
        match (k as i64).rem_euclid(4) {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    } else {
        C64::from_polar(1.0, phase)
    }
}

/// Couplings and shifts of the two-level giant atom left after eliminating `f1`, `f2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    pub g_e1: f64,
    pub g_e2: f64,
    pub delta_ee: f64,
    pub delta_e1: f64,
    pub delta_e2: f64,
    pub theta: f64,
}

pub fn derive_effective(p: &ModelParams) -> Result<EffectiveParams, EffectiveError> {
    p.validate()?;
    if p.delta1 == 0.0 || p.delta2 == 0.0 {
        return Err(EffectiveError::ZeroDetuning);
    }
    Ok(EffectiveParams {
        g_e1: p.g1 * p.eta1 / p.delta1,
        g_e2: p.g2 * p.eta2 / p.delta2,
        delta_ee: (p.eta1 * p.eta1 * p.delta2 + p.eta2 * p.eta2 * p.delta1) / (p.delta1 * p.delta2),
        delta_e1: p.g1 * p.g1 / p.delta1,
        delta_e2: p.g2 * p.g2 / p.delta2,
        theta: p.theta,
    })
}

/// Two-level giant atom with the eliminated couplings, optionally keeping the
/// site shifts of `0` and `N`.
pub fn build_effective_generator(
    ep: &EffectiveParams,
    j: f64,
    n: i64,
    m_min: i64,
    m_max: i64,
    include_shifts: bool,
) -> Result<Generator, EffectiveError> {
    for (name, v) in [
        ("j", j),
        ("g_e1", ep.g_e1),
        ("g_e2", ep.g_e2),
        ("delta_ee", ep.delta_ee),
        ("delta_e1", ep.delta_e1),
        ("delta_e2", ep.delta_e2),
        ("theta", ep.theta),
    ] {
        check_finite(name, v)?;
    }
    check_extent(m_min, m_max, &[0, n])?;
    let e = BasisLabel::atom(Level::E);
    let mut labels = lattice_labels(m_min, m_max);
    labels.push(e);
    let basis = Basis::new(labels);
    let mut b = MatrixBuilder::new(&basis);
    b.hopping(j)
        .shift(e, ep.delta_ee)
        .couple(e, BasisLabel::Site(0), C64::from_polar(ep.g_e1, ep.theta))
        .couple(e, BasisLabel::Site(n), re(ep.g_e2));
    if include_shifts {
        b.shift(BasisLabel::Site(0), ep.delta_e1).shift(BasisLabel::Site(n), ep.delta_e2);
    }
    let static_part = b.finish();
    Ok(Generator { model: "effective".into(), basis, static_part, td_terms: vec![] })
}

/// Which way an effective coupling in the giant–small model points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Giant atom drives the small one (coefficient of `u_b` in `du_c/dt`).
    GiantToSmall,
    /// Small atom drives the giant one (coefficient of `u_c` in `du_b/dt`).
    SmallToGiant,
    /// Reciprocal coupling, valid when `sin(theta) = 0`.
    Symmetric,
}

/// Position of the small atom relative to the giant atom's coupling points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Between,
    Left,
    Right,
}

/// Small-atom site `m` and `d = N - m`, checked against the side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub side: Side,
    pub m: i64,
    pub d: i64,
}

impl Placement {
    pub fn new(side: Side, m: i64, d: i64) -> Result<Self, EffectiveError> {
        let ok = match side {
            Side::Between => m > 0 && d > 0,
            Side::Left => m < 0 && d >= -m,
            Side::Right => d < 0 && m >= -d,
        };
        if ok {
            Ok(Placement { side, m, d })
        } else {
            Err(EffectiveError::Placement { side, m, d })
        }
    }

    /// Placement of a small atom at site `m` next to a giant atom at `{0, n}`.
    pub fn from_sites(m: i64, n: i64) -> Result<Self, EffectiveError> {
        let side = if m < 0 {
            Side::Left
        } else if m > n {
            Side::Right
        } else {
            Side::Between
        };
        Self::new(side, m, n - m)
    }

    pub fn n(&self) -> i64 {
        self.m + self.d
    }

    /// Separations entering the phase factors: `|M|` on the left, `|D|` on the right.
    pub fn phase_indices(&self) -> (i64, i64) {
        match self.side {
            Side::Between => (self.m, self.d),
            Side::Left => (self.m.abs(), self.d),
            Side::Right => (self.m, self.d.abs()),
        }
    }
}

/// Interference factor `e^{i(k0 M' +- theta)} + e^{i k0 D'}` of the Markovian
/// giant–small coupling; `+theta` for small-to-giant, `-theta` for giant-to-small.
pub fn markov_coupling(
    direction: Direction,
    placement: &Placement,
    theta: f64,
    k0: f64,
) -> Result<C64, EffectiveError> {
    let sign = match direction {
        Direction::SmallToGiant => 1.0,
        Direction::GiantToSmall => -1.0,
        Direction::Symmetric => {
            if theta.sin().abs() > 1e-12 {
                return Err(EffectiveError::NotReciprocal(theta));
            }
            1.0
        }
    };
    let (m, d) = placement.phase_indices();
    Ok(cis_exact(k0 * m as f64 + sign * theta) + cis_exact(k0 * d as f64))
}

/// Amplitude decay constant `2 gamma_b (1 + cos(theta) cos(k0 N))` of a giant
/// atom in the Markovian limit. The population decays at twice this rate.
pub fn giant_decay_rate(gamma_b: f64, theta: f64, n: i64, k0: f64) -> f64 {
    2.0 * gamma_b * (1.0 + cis_exact(theta).re * cis_exact(k0 * n as f64).re)
}

/// Markovian rates of the giant–small model at a point of the band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovRates {
    pub gamma_b: f64,
    pub gamma_c: f64,
    pub gamma_bc: f64,
    pub v0: f64,
    pub k0: f64,
}

impl MarkovRates {
    /// Rates at the band center: `k0 = -pi/2`, `v0 = 2J`.
    pub fn band_center(g: f64, xi: f64, j: f64) -> Self {
        Self::at(g, xi, -FRAC_PI_2, 2.0 * j)
    }

    pub fn at(g: f64, xi: f64, k0: f64, v0: f64) -> Self {
        MarkovRates { gamma_b: g * g / v0, gamma_c: xi * xi / v0, gamma_bc: g * xi / v0, v0, k0 }
    }
}

/// Second-order effective Hamiltonian of `H(t) = sum_k h_k^dag e^{i w_k t} + h.c.`.
///
/// Each term is `(h_k^dag, w_k)`. Only products whose combined frequency is
/// exactly zero survive:
/// `-(1/w_n) [h_m^dag h_n^dag | w_m + w_n = 0] - (1/w_n) [h_m h_n^dag | w_m = w_n]
///  + (1/w_n) [h_m^dag h_n | w_m = w_n] + (1/w_n) [h_m h_n | w_m + w_n = 0]`.
pub fn effective_hamiltonian(dim: usize, terms: &[(CMatrix, f64)]) -> Result<CMatrix, EffectiveError> {
    for (index, (op, w)) in terms.iter().enumerate() {
        if op.nrows() != dim || op.ncols() != dim {
            return Err(EffectiveError::Dimension { index, rows: op.nrows(), cols: op.ncols(), dim });
        }
        if *w == 0.0 || !w.is_finite() {
            return Err(EffectiveError::ZeroDetuning);
        }
    }
    let lowering: Vec<CMatrix> = terms.iter().map(|(op, _)| op.adjoint()).collect();
    let mut out = CMatrix::zeros(dim, dim);
    for (m, (raise_m, w_m)) in terms.iter().enumerate() {
        for (n, (raise_n, w_n)) in terms.iter().enumerate() {
            let inv = 1.0 / w_n;
            if w_m + w_n == 0.0 {
                out -= raise_m * raise_n * re(inv);
                out += &lowering[m] * &lowering[n] * re(inv);
            }
            if w_m == w_n {
                out -= &lowering[m] * raise_n * re(inv);
                out += raise_m * &lowering[n] * re(inv);
            }
        }
    }
    Ok(out)
}

/// The ladder-scheme rotating terms `h_k^dag` with their detunings, on the
/// ladder basis (lattice sites, `e`, `f`).
pub fn ladder_term_list(p: &ModelParams) -> Result<(Basis, Vec<(CMatrix, f64)>), EffectiveError> {
    let basis = ladder_basis(p)?;
    let terms = ladder_terms(p, &basis);
    Ok((basis, terms))
}

/// Static effective model of the ladder scheme, with the `|f>` shifts and the
/// terms rotating at `delta2 - delta1` removed.
pub fn ladder_effective(p: &ModelParams) -> Result<Generator, EffectiveError> {
    let basis = ladder_basis(p)?;
    if p.delta1 == 0.0 || p.delta2 == 0.0 {
        return Err(EffectiveError::ZeroDetuning);
    }
    let e = BasisLabel::atom(Level::E);
    let mut b = MatrixBuilder::new(&basis);
    b.hopping(p.j)
        .shift(e, p.eta1 * p.eta1 / p.delta1 + p.eta2 * p.eta2 / p.delta2)
        .shift(BasisLabel::Site(0), p.g1 * p.g1 / p.delta1)
        .shift(BasisLabel::Site(p.n), p.g2 * p.g2 / p.delta2)
        .couple(e, BasisLabel::Site(0), C64::from_polar(p.g1 * p.eta1 / p.delta1, p.theta))
        .couple(e, BasisLabel::Site(p.n), re(p.g2 * p.eta2 / p.delta2));
    let static_part = b.finish();
    Ok(Generator { model: "ladder_effective".into(), basis, static_part, td_terms: vec![] })
}

/// Largest element-wise gap between [`ladder_effective`] (hopping removed) and
/// [`effective_hamiltonian`] on the ladder term list, ignoring the `|f>` row and
/// column that the static model drops.
pub fn combinator_mismatch(p: &ModelParams) -> Result<f64, EffectiveError> {
    let (basis, terms) = ladder_term_list(p)?;
    let comb = effective_hamiltonian(basis.len(), &terms)?;
    let lad = ladder_effective(p)?;
    let f = basis.require(&BasisLabel::atom(Level::F))?;
    let mut corr = lad.static_part;
    for (a, b) in basis.sites().zip(basis.sites().skip(1)) {
        corr[(a.0, b.0)] -= re(p.j);
        corr[(b.0, a.0)] -= re(p.j);
    }
    let mut worst = 0.0f64;
    for i in (0..basis.len()).filter(|&i| i != f) {
        for k in (0..basis.len()).filter(|&k| k != f) {
            worst = worst.max((corr[(i, k)] - comb[(i, k)]).norm());
        }
    }
    Ok(worst)
}

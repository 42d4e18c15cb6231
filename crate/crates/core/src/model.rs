//! Single-excitation basis and the Hamiltonian builders.
//!
//! Every model is expressed as a [`Generator`]: a static Hermitian matrix on
//! an ordered basis plus optional oscillating terms. The basis always holds
//! lattice sites (photon in mode `m`, atoms in the ground state) followed by
//! excited atomic levels and auxiliary modes, so the ground state `|g>` never
//! appears as a label of its own.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("parameter `{name}` is not finite ({value})")]
    NonFinite { name: &'static str, value: f64 },
    #[error("invalid lattice extent [{m_min}, {m_max}]: {reason}")]
    Extent { m_min: i64, m_max: i64, reason: String },
    #[error("label `{0}` is not part of the basis")]
    UnknownLabel(BasisLabel),
    #[error("cannot parse basis label `{0}`")]
    BadLabel(String),
    #[error("invalid drive schedule: {0}")]
    Schedule(String),
    #[error("state vector norm is {0}, expected 1")]
    NotNormalized(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// Atomic level. The declaration order fixes the basis ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    E,
    F1,
    F2,
    F,
    G,
}

impl Level {
    fn name(self) -> &'static str {
        match self {
            Level::E => "e",
            Level::F1 => "f1",
            Level::F2 => "f2",
            Level::F => "f",
            Level::G => "g",
        }
    }
}

/// One single-excitation basis state.
///
/// `Atom { atom: 0, .. }` is the primary emitter; multi-emitter models
/// (giant–small, two giant atoms) number further emitters from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BasisLabel {
    Site(i64),
    Atom { atom: u8, level: Level },
    Aux(u8),
}

impl BasisLabel {
    pub const fn atom(level: Level) -> Self {
        BasisLabel::Atom { atom: 0, level }
    }

    pub const fn atom_n(atom: u8, level: Level) -> Self {
        BasisLabel::Atom { atom, level }
    }

    pub fn is_site(&self) -> bool {
        matches!(self, BasisLabel::Site(_))
    }

    pub fn site(&self) -> Option<i64> {
        match self {
            BasisLabel::Site(m) => Some(*m),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            BasisLabel::Site(_) => 0,
            BasisLabel::Atom { .. } => 1,
            BasisLabel::Aux(_) => 2,
        }
    }
}

impl Ord for BasisLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        use BasisLabel::*;
        match (self, other) {
            (Site(a), Site(b)) => a.cmp(b),
            (Atom { atom: a, level: la }, Atom { atom: b, level: lb }) => (a, la).cmp(&(b, lb)),
            (Aux(a), Aux(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for BasisLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisLabel::Site(m) => write!(f, "m<{m}>"),
            BasisLabel::Atom { atom: 0, level } => write!(f, "atom_{}", level.name()),
            BasisLabel::Atom { atom, level } => write!(f, "atom{atom}_{}", level.name()),
            BasisLabel::Aux(i) => write!(f, "aux_{i}"),
        }
    }
}

impl FromStr for BasisLabel {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModelError::BadLabel(s.to_string());
        if let Some(rest) = s.strip_prefix("m<").and_then(|r| r.strip_suffix('>')) {
            return rest.parse().map(BasisLabel::Site).map_err(|_| bad());
        }
        // bare `m4`, `m-1`
        if let Some(Ok(m)) = s.strip_prefix('m').map(str::parse::<i64>) {
            return Ok(BasisLabel::Site(m));
        }
        if let Some(rest) = s.strip_prefix("aux_") {
            return rest.parse().map(BasisLabel::Aux).map_err(|_| bad());
        }
        if let Some(rest) = s.strip_prefix("atom") {
            let (idx, level) = rest.split_once('_').ok_or_else(bad)?;
            let atom = if idx.is_empty() { 0 } else { idx.parse().map_err(|_| bad())? };
            let level = match level {
                "e" => Level::E,
                "f1" => Level::F1,
                "f2" => Level::F2,
                "f" => Level::F,
                "g" => Level::G,
                _ => return Err(bad()),
            };
            return Ok(BasisLabel::Atom { atom, level });
        }
        Err(bad())
    }
}

impl TryFrom<String> for BasisLabel {
    type Error = ModelError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<BasisLabel> for String {
    fn from(l: BasisLabel) -> String {
        l.to_string()
    }
}

/// Ordered list of basis labels with index lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    labels: Vec<BasisLabel>,
    index: HashMap<BasisLabel, usize>,
}

impl Basis {
    /// Sorts the labels into canonical order and drops duplicates.
    pub fn new(mut labels: Vec<BasisLabel>) -> Self {
        labels.sort();
        labels.dedup();
        let index = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        Basis { labels, index }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[BasisLabel] {
        &self.labels
    }

    pub fn index_of(&self, label: &BasisLabel) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn require(&self, label: &BasisLabel) -> Result<usize, ModelError> {
        self.index_of(label).ok_or(ModelError::UnknownLabel(*label))
    }

    /// `(m_min, m_max)` of the lattice block, if any.
    pub fn site_range(&self) -> Option<(i64, i64)> {
        let mut sites = self.labels.iter().filter_map(BasisLabel::site);
        let first = sites.next()?;
        Some(sites.fold((first, first), |(lo, hi), m| (lo.min(m), hi.max(m))))
    }

    pub fn sites(&self) -> impl Iterator<Item = (usize, i64)> + '_ {
        self.labels.iter().enumerate().filter_map(|(i, l)| l.site().map(|m| (i, m)))
    }
}

/// Parameter record shared by the four-level, auxiliary and ladder builders.
///
/// Energies are in units of the hopping `j` (the CLI fixes `j = 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub j: f64,
    pub g1: f64,
    pub g2: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub theta: f64,
    pub n: i64,
    pub m_min: i64,
    pub m_max: i64,
}

/// Lattice window of `m_tot` sites placing the coupling span `[0, n]` in the middle.
pub fn centered_extent(m_tot: i64, n: i64) -> (i64, i64) {
    let m_min = -((m_tot - n - 1).max(0) / 2);
    (m_min, m_min + m_tot - 1)
}

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonFinite { name, value })
    }
}

pub(crate) fn check_extent(m_min: i64, m_max: i64, points: &[i64]) -> Result<(), ModelError> {
    let err = |reason: String| ModelError::Extent { m_min, m_max, reason };
    if m_min >= m_max {
        return Err(err("m_min must be below m_max".into()));
    }
    for &p in points {
        if p < m_min || p > m_max {
            return Err(err(format!("coupling site {p} lies outside the lattice")));
        }
    }
    Ok(())
}

impl ModelParams {
    /// Symmetric drive/coupling set (`g1 = g2`, `eta1 = eta2`, `delta1 = delta2`)
    /// on a centered window of `m_tot` sites.
    pub fn symmetric(g: f64, eta: f64, delta: f64, theta: f64, n: i64, m_tot: i64) -> Self {
        let (m_min, m_max) = centered_extent(m_tot, n);
        ModelParams {
            j: 1.0,
            g1: g,
            g2: g,
            eta1: eta,
            eta2: eta,
            delta1: delta,
            delta2: delta,
            theta,
            n,
            m_min,
            m_max,
        }
    }

    pub fn m_tot(&self) -> i64 {
        self.m_max - self.m_min + 1
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [
            ("j", self.j),
            ("g1", self.g1),
            ("g2", self.g2),
            ("eta1", self.eta1),
            ("eta2", self.eta2),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("theta", self.theta),
        ] {
            check_finite(name, v)?;
        }
        if self.n < 0 {
            return Err(ModelError::Extent {
                m_min: self.m_min,
                m_max: self.m_max,
                reason: format!("coupling separation N = {} is negative", self.n),
            });
        }
        check_extent(self.m_min, self.m_max, &[0, self.n])
    }
}

/// Piecewise-constant amplitude; a piece holds from its start time until the next one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveSchedule {
    pieces: Vec<(f64, f64)>,
}

impl DriveSchedule {
    pub fn new(pieces: Vec<(f64, f64)>) -> Result<Self, ModelError> {
        match pieces.first() {
            None => return Err(ModelError::Schedule("no pieces".into())),
            Some(&(t0, _)) if t0 != 0.0 => {
                return Err(ModelError::Schedule("first piece must start at t = 0".into()))
            }
            _ => {}
        }
        if pieces.iter().any(|(t, a)| !t.is_finite() || !a.is_finite()) {
            return Err(ModelError::Schedule("non-finite entry".into()));
        }
        if pieces.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(ModelError::Schedule("start times must increase strictly".into()));
        }
        Ok(DriveSchedule { pieces })
    }

    pub fn constant(amplitude: f64) -> Self {
        DriveSchedule { pieces: vec![(0.0, amplitude)] }
    }

    /// `amplitude` until `t_off`, zero afterwards (`t_off` itself is already off).
    pub fn switch_off(amplitude: f64, t_off: f64) -> Result<Self, ModelError> {
        Self::new(vec![(0.0, amplitude), (t_off, 0.0)])
    }

    pub fn at(&self, t: f64) -> f64 {
        let idx = self.pieces.partition_point(|&(start, _)| start <= t);
        if idx == 0 {
            self.pieces[0].1
        } else {
            self.pieces[idx - 1].1
        }
    }

    pub fn pieces(&self) -> &[(f64, f64)] {
        &self.pieces
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.pieces.iter().skip(1).map(|p| p.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.pieces.iter().map(|p| p.1.abs()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        DriveSchedule { pieces: self.pieces.iter().map(|&(t, a)| (t, a * factor)).collect() }
    }
}

/// Oscillating contribution `schedule(t) * (op e^{i w t} + op^dag e^{-i w t})`.
#[derive(Debug, Clone, PartialEq)]
pub struct TdTerm {
    pub op: CMatrix,
    pub frequency: f64,
    pub schedule: DriveSchedule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub model: String,
    pub basis: Basis,
    pub static_part: CMatrix,
    pub td_terms: Vec<TdTerm>,
}

impl Generator {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Instantaneous Hamiltonian as a dense matrix.
    pub fn hamiltonian_at(&self, t: f64) -> CMatrix {
        let mut h = self.static_part.clone();
        for term in &self.td_terms {
            let amp = term.schedule.at(t);
            if amp == 0.0 {
                continue;
            }
            let phase = C64::from_polar(amp, term.frequency * t);
            h += &term.op * phase + term.op.adjoint() * phase.conj();
        }
        h
    }

    pub fn element(&self, row: &BasisLabel, col: &BasisLabel) -> Result<C64, ModelError> {
        Ok(self.static_part[(self.basis.require(row)?, self.basis.require(col)?)])
    }

    /// Largest `|H0_ij - conj(H0_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.static_part)
    }

    /// Gershgorin bound on the instantaneous spectrum: static row sums plus the
    /// largest drive amplitude times the row and column sums of each oscillating operator.
    pub fn spectral_bound(&self) -> f64 {
        let n = self.dim();
        let mut rows: Vec<f64> = (0..n)
            .map(|i| self.static_part.row(i).iter().map(|z| z.norm()).sum())
            .collect();
        for term in &self.td_terms {
            let amp = term.schedule.max_abs();
            for (i, row) in rows.iter_mut().enumerate() {
                let r: f64 = term.op.row(i).iter().map(|z| z.norm()).sum();
                let c: f64 = term.op.column(i).iter().map(|z| z.norm()).sum();
                *row += amp * (r + c);
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    pub fn max_frequency(&self) -> f64 {
        self.td_terms.iter().map(|t| t.frequency.abs()).fold(0.0, f64::max)
    }

    /// Every schedule breakpoint of the oscillating terms.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.td_terms.iter().flat_map(|t| t.schedule.breakpoints()).collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub basis: Basis,
    pub amplitudes: CVector,
}

impl StateVector {
    pub fn new(basis: Basis, amplitudes: CVector) -> Result<Self, ModelError> {
        if amplitudes.len() != basis.len() {
            return Err(ModelError::Dimension { expected: basis.len(), got: amplitudes.len() });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(ModelError::NotNormalized(norm));
        }
        Ok(StateVector { basis, amplitudes })
    }

    pub fn probability(&self, label: &BasisLabel) -> Option<f64> {
        self.basis.index_of(label).map(|i| self.amplitudes[i].norm_sqr())
    }
}

/// Unit excitation on `label`.
pub fn init_state(basis: &Basis, label: &BasisLabel) -> Result<StateVector, ModelError> {
    let idx = basis.require(label)?;
    let mut amps = CVector::zeros(basis.len());
    amps[idx] = C64::new(1.0, 0.0);
    Ok(StateVector { basis: basis.clone(), amplitudes: amps })
}

/// Hermitian matrix assembly over a fixed basis.
pub(crate) struct MatrixBuilder<'a> {
    basis: &'a Basis,
    pub(crate) matrix: CMatrix,
}

impl<'a> MatrixBuilder<'a> {
    pub(crate) fn new(basis: &'a Basis) -> Self {
        MatrixBuilder { basis, matrix: CMatrix::zeros(basis.len(), basis.len()) }
    }

    fn idx(&self, l: BasisLabel) -> usize {
        self.basis.index_of(&l).unwrap_or_else(|| panic!("{l} missing from basis"))
    }

    /// Adds `value` at `<row|H|col>` and its conjugate at `<col|H|row>`.
    pub(crate) fn couple(&mut self, row: BasisLabel, col: BasisLabel, value: C64) -> &mut Self {
        let (r, c) = (self.idx(row), self.idx(col));
        self.matrix[(r, c)] += value;
        self.matrix[(c, r)] += value.conj();
        self
    }

    pub(crate) fn shift(&mut self, label: BasisLabel, value: f64) -> &mut Self {
        let i = self.idx(label);
        self.matrix[(i, i)] += C64::new(value, 0.0);
        self
    }

    pub(crate) fn hopping(&mut self, j: f64) -> &mut Self {
        let sites: Vec<(usize, i64)> = self.basis.sites().collect();
        for w in sites.windows(2) {
            let ((a, _), (b, _)) = (w[0], w[1]);
            self.matrix[(a, b)] += C64::new(j, 0.0);
            self.matrix[(b, a)] += C64::new(j, 0.0);
        }
        self
    }

    /// Single matrix element `<row|op|col> = value`, no conjugate partner.
    pub(crate) fn element(&mut self, row: BasisLabel, col: BasisLabel, value: C64) -> &mut Self {
        let (r, c) = (self.idx(row), self.idx(col));
        self.matrix[(r, c)] += value;
        self
    }

    pub(crate) fn finish(self) -> CMatrix {
        self.matrix
    }
}

pub(crate) fn lattice_labels(m_min: i64, m_max: i64) -> Vec<BasisLabel> {
    (m_min..=m_max).map(BasisLabel::Site).collect()
}

pub(crate) fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Open-boundary tight-binding chain with hopping `j`.
pub fn build_lattice(j: f64, m_min: i64, m_max: i64) -> Result<Generator, ModelError> {
    check_finite("j", j)?;
    check_extent(m_min, m_max, &[])?;
    let basis = Basis::new(lattice_labels(m_min, m_max));
    let mut b = MatrixBuilder::new(&basis);
    b.hopping(j);
    let static_part = b.finish();
    Ok(Generator { model: "lattice".into(), basis, static_part, td_terms: vec![] })
}

const E: BasisLabel = BasisLabel::atom(Level::E);
const F1: BasisLabel = BasisLabel::atom(Level::F1);
const F2: BasisLabel = BasisLabel::atom(Level::F2);
const F: BasisLabel = BasisLabel::atom(Level::F);

/// Optional extras of the four-level model: auxiliary modes and a drive envelope.
#[derive(Debug, Clone, Default)]
struct FourLevelOptions {
    aux_modes: bool,
    drive_envelope: Option<DriveSchedule>,
}

fn four_level(p: &ModelParams, opts: &FourLevelOptions, model: &str) -> Result<Generator, ModelError> {
    p.validate()?;
    let mut labels = lattice_labels(p.m_min, p.m_max);
    labels.extend([E, F1, F2]);
    if opts.aux_modes {
        labels.extend([BasisLabel::Aux(1), BasisLabel::Aux(2)]);
    }
    let basis = Basis::new(labels);
    let (s0, sn) = (BasisLabel::Site(0), BasisLabel::Site(p.n));
    let drive1 = C64::from_polar(1.0, p.theta);

    let mut b = MatrixBuilder::new(&basis);
    b.hopping(p.j)
        .shift(F1, -p.delta1)
        .shift(F2, -p.delta2)
        .couple(s0, F1, re(p.g1))
        .couple(sn, F2, re(p.g2));
    if opts.aux_modes {
        b.shift(BasisLabel::Aux(1), p.delta1)
            .shift(BasisLabel::Aux(2), p.delta2)
            .couple(BasisLabel::Aux(1), s0, re(p.g1))
            .couple(BasisLabel::Aux(2), sn, re(p.g2));
    }

    let mut td_terms = Vec::new();
    match &opts.drive_envelope {
        None => {
            b.couple(E, F1, drive1 * p.eta1).couple(E, F2, re(p.eta2));
        }
        Some(envelope) => {
            let mut op1 = MatrixBuilder::new(&basis);
            op1.element(E, F1, drive1);
            let mut op2 = MatrixBuilder::new(&basis);
            op2.element(E, F2, re(1.0));
            td_terms.push(TdTerm { op: op1.finish(), frequency: 0.0, schedule: envelope.scaled(p.eta1) });
            td_terms.push(TdTerm { op: op2.finish(), frequency: 0.0, schedule: envelope.scaled(p.eta2) });
        }
    }
    let static_part = b.finish();
    Ok(Generator { model: model.into(), basis, static_part, td_terms })
}

/// Rotating-frame four-level model with two-photon resonance built in.
pub fn build_full_static(p: &ModelParams) -> Result<Generator, ModelError> {
    four_level(p, &FourLevelOptions::default(), "full_static")
}

/// Same model in the frame where all four couplings oscillate.
pub fn build_full_td(p: &ModelParams) -> Result<Generator, ModelError> {
    p.validate()?;
    let mut labels = lattice_labels(p.m_min, p.m_max);
    labels.extend([E, F1, F2]);
    let basis = Basis::new(labels);
    let mut lattice = MatrixBuilder::new(&basis);
    lattice.hopping(p.j);
    let (s0, sn) = (BasisLabel::Site(0), BasisLabel::Site(p.n));
    let term = |row, col, value: C64, freq: f64| {
        let mut op = MatrixBuilder::new(&basis);
        op.element(row, col, value);
        TdTerm { op: op.finish(), frequency: freq, schedule: DriveSchedule::constant(1.0) }
    };
    let td_terms = vec![
        term(s0, F1, re(p.g1), p.delta1),
        term(sn, F2, re(p.g2), p.delta2),
        term(E, F1, C64::from_polar(p.eta1, p.theta), p.delta1),
        term(E, F2, re(p.eta2), p.delta2),
    ];
    let static_part = lattice.finish();
    Ok(Generator { model: "full_td".into(), basis, static_part, td_terms })
}

/// Two-level giant atom coupled at sites `0` and `n` with real couplings.
pub fn build_real_space(
    j: f64,
    lambda1: f64,
    lambda2: f64,
    n: i64,
    m_min: i64,
    m_max: i64,
) -> Result<Generator, ModelError> {
    for (name, v) in [("j", j), ("lambda1", lambda1), ("lambda2", lambda2)] {
        check_finite(name, v)?;
    }
    check_extent(m_min, m_max, &[0, n])?;
    let mut labels = lattice_labels(m_min, m_max);
    labels.push(E);
    let basis = Basis::new(labels);
    let mut b = MatrixBuilder::new(&basis);
    b.hopping(j)
        .couple(E, BasisLabel::Site(0), re(lambda1))
        .couple(E, BasisLabel::Site(n), re(lambda2));
    let static_part = b.finish();
    Ok(Generator { model: "real_space".into(), basis, static_part, td_terms: vec![] })
}

/// Four-level model plus two auxiliary modes detuned by `+delta` that cancel
/// the Stark shifts of sites `0` and `N`.
pub fn build_auxiliary(p: &ModelParams) -> Result<Generator, ModelError> {
    four_level(p, &FourLevelOptions { aux_modes: true, drive_envelope: None }, "auxiliary")
}

/// Auxiliary model whose drives follow `envelope(t) * eta_i`.
pub fn build_auxiliary_switched(p: &ModelParams, envelope: &DriveSchedule) -> Result<Generator, ModelError> {
    four_level(
        p,
        &FourLevelOptions { aux_modes: true, drive_envelope: Some(envelope.clone()) },
        "auxiliary_switched",
    )
}

/// Two identical four-level giant atoms sharing the lattice: atom 0 at
/// `{0, N}` and atom 1 at `{offset, offset + N}`.
pub fn build_two_atom_full(p: &ModelParams, offset: i64) -> Result<Generator, ModelError> {
    p.validate()?;
    check_extent(p.m_min, p.m_max, &[offset, offset + p.n])?;
    let mut labels = lattice_labels(p.m_min, p.m_max);
    for atom in [0u8, 1] {
        labels.extend([Level::E, Level::F1, Level::F2].map(|l| BasisLabel::atom_n(atom, l)));
    }
    let basis = Basis::new(labels);
    let mut b = MatrixBuilder::new(&basis);
    b.hopping(p.j);
    for (atom, start) in [(0u8, 0i64), (1, offset)] {
        let (e, f1, f2) = (
            BasisLabel::atom_n(atom, Level::E),
            BasisLabel::atom_n(atom, Level::F1),
            BasisLabel::atom_n(atom, Level::F2),
        );
        b.shift(f1, -p.delta1)
            .shift(f2, -p.delta2)
            .couple(BasisLabel::Site(start), f1, re(p.g1))
            .couple(BasisLabel::Site(start + p.n), f2, re(p.g2))
            .couple(e, f1, C64::from_polar(p.eta1, p.theta))
            .couple(e, f2, re(p.eta2));
    }
    let static_part = b.finish();
    Ok(Generator { model: "two_atom_full".into(), basis, static_part, td_terms: vec![] })
}

/// Giant atom (`atom_e`) at sites `0`, `N` plus a small atom (`atom1_e`) at site `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GiantSmallParams {
    pub j: f64,
    pub g: f64,
    pub xi: f64,
    pub theta: f64,
    pub n: i64,
    pub m: i64,
    pub omega0: f64,
    pub m_min: i64,
    pub m_max: i64,
}

pub const GIANT: BasisLabel = BasisLabel::atom(Level::E);
pub const SMALL: BasisLabel = BasisLabel::atom_n(1, Level::E);

pub fn build_giant_small(p: &GiantSmallParams) -> Result<Generator, ModelError> {
    for (name, v) in [("j", p.j), ("g", p.g), ("xi", p.xi), ("theta", p.theta), ("omega0", p.omega0)] {
        check_finite(name, v)?;
    }
    check_extent(p.m_min, p.m_max, &[0, p.n, p.m])?;
    let mut labels = lattice_labels(p.m_min, p.m_max);
    labels.extend([GIANT, SMALL]);
    let basis = Basis::new(labels);
    let mut b = MatrixBuilder::new(&basis);
    b.hopping(p.j)
        .shift(GIANT, p.omega0)
        .shift(SMALL, p.omega0)
        .couple(GIANT, BasisLabel::Site(0), C64::from_polar(p.g, p.theta))
        .couple(GIANT, BasisLabel::Site(p.n), re(p.g))
        .couple(SMALL, BasisLabel::Site(p.m), re(p.xi));
    let static_part = b.finish();
    Ok(Generator { model: "giant_small".into(), basis, static_part, td_terms: vec![] })
}

/// Ladder-type three-level atom: `g <-> f` couples off-resonantly to sites
/// `0` and `N`, `f <-> e` is driven at the two matching frequencies.
pub fn build_ladder_td(p: &ModelParams) -> Result<Generator, ModelError> {
    let basis = ladder_basis(p)?;
    let mut lattice = MatrixBuilder::new(&basis);
    lattice.hopping(p.j);
    let static_part = lattice.finish();
    let td_terms = ladder_terms(p, &basis)
        .into_iter()
        .map(|(op, freq)| TdTerm { op, frequency: freq, schedule: DriveSchedule::constant(1.0) })
        .collect();
    Ok(Generator { model: "ladder_td".into(), basis, static_part, td_terms })
}

pub(crate) fn ladder_basis(p: &ModelParams) -> Result<Basis, ModelError> {
    p.validate()?;
    let mut labels = lattice_labels(p.m_min, p.m_max);
    labels.extend([E, F]);
    Ok(Basis::new(labels))
}

/// The four raising operators `h_k^dag` of the ladder scheme with their detunings.
pub(crate) fn ladder_terms(p: &ModelParams, basis: &Basis) -> Vec<(CMatrix, f64)> {
    let op = |row, value| {
        let mut m = MatrixBuilder::new(basis);
        m.element(row, F, value);
        m.finish()
    };
    vec![
        (op(BasisLabel::Site(0), re(p.g1)), p.delta1),
        (op(BasisLabel::Site(p.n), re(p.g2)), p.delta2),
        (op(E, C64::from_polar(p.eta1, p.theta)), p.delta1),
        (op(E, re(p.eta2)), p.delta2),
    ]
}

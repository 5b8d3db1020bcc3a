//! Composite qubit ⊗ truncated-boson spaces, states and dense operators.
//!
//! Subsystem 0 is the slowest-varying tensor index. Qubit level 0 is |g⟩ and level 1 is |e⟩.

use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::linalg::{c, ensure_hermitian, real, CMatrix, CVector, Propagator, C64};

/// Default bound on the total dimension of a composite space.
pub const DEFAULT_DIM_CAP: usize = 1 << 14;

/// Environment variable overriding [`DEFAULT_DIM_CAP`].
pub const DIM_CAP_ENV: &str = "DAQSIM_DIM_CAP";

/// Protocols flag a run whose top Fock level population reaches this value.
pub const LEAKAGE_THRESHOLD: f64 = 1e-4;

pub const NORM_TOL: f64 = 1e-10;

/// The active dimension cap: `DAQSIM_DIM_CAP` if set and valid, else the default.
pub fn dim_cap() -> usize {
    std::env::var(DIM_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v > 0)
        .unwrap_or(DEFAULT_DIM_CAP)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SubsystemKind {
    Qubit,
    Boson,
}

impl SubsystemKind {
    pub fn name(self) -> &'static str {
        match self {
            SubsystemKind::Qubit => "qubit",
            SubsystemKind::Boson => "boson",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Subsystem {
    pub kind: SubsystemKind,
    pub dim: usize,
}

impl Subsystem {
    pub fn qubit() -> Self {
        Self {
            kind: SubsystemKind::Qubit,
            dim: 2,
        }
    }

    /// A bosonic mode keeping Fock levels `0..cutoff`.
    pub fn boson(cutoff: usize) -> Self {
        Self {
            kind: SubsystemKind::Boson,
            dim: cutoff,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HilbertSpec {
    subsystems: Vec<Subsystem>,
    dim: usize,
}

impl HilbertSpec {
    pub fn new(subsystems: Vec<Subsystem>) -> Result<Self> {
        Self::with_cap(subsystems, dim_cap())
    }

    pub fn with_cap(subsystems: Vec<Subsystem>, cap: usize) -> Result<Self> {
        if subsystems.is_empty() {
            return invalid("a Hilbert space needs at least one subsystem");
        }
        let mut dim: usize = 1;
        for s in &subsystems {
            match s.kind {
                SubsystemKind::Qubit if s.dim != 2 => {
                    return invalid(format!("qubit subsystem with dimension {}", s.dim))
                }
                SubsystemKind::Boson if s.dim < 2 => {
                    return invalid(format!("Fock cutoff {} is below 2", s.dim))
                }
                _ => {}
            }
            dim = dim.checked_mul(s.dim).ok_or(Error::DimensionCap {
                dim: usize::MAX,
                cap,
            })?;
        }
        if dim > cap {
            return Err(Error::DimensionCap { dim, cap });
        }
        Ok(Self { subsystems, dim })
    }

    pub fn qubits(n: usize) -> Result<Self> {
        Self::new(vec![Subsystem::qubit(); n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn subsystem(&self, site: usize) -> Result<Subsystem> {
        self.subsystems
            .get(site)
            .copied()
            .ok_or(Error::SiteOutOfRange {
                index: site,
                len: self.len(),
            })
    }

    pub fn require_kind(&self, site: usize, kind: SubsystemKind, op: &str) -> Result<Subsystem> {
        let sub = self.subsystem(site)?;
        if sub.kind != kind {
            return Err(Error::WrongSubsystemKind {
                op: op.to_string(),
                kind: sub.kind.name(),
                site,
            });
        }
        Ok(sub)
    }

    /// Index stride of each subsystem in the flattened basis.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.len()];
        for i in (0..self.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.subsystems[i + 1].dim;
        }
        strides
    }

    /// Per-subsystem levels of a flattened basis index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.len()];
        for (i, s) in self.subsystems.iter().enumerate().rev() {
            out[i] = index % s.dim;
            index /= s.dim;
        }
        out
    }

    pub fn index_of(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: levels.len(),
            });
        }
        let mut idx = 0;
        for (l, s) in levels.iter().zip(&self.subsystems) {
            if *l >= s.dim {
                return invalid(format!("level {l} outside a subsystem of dimension {}", s.dim));
            }
            idx = idx * s.dim + l;
        }
        Ok(idx)
    }

    pub fn sites_of_kind(&self, kind: SubsystemKind) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.subsystems[i].kind == kind)
            .collect()
    }
}

impl fmt::Display for HilbertSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .subsystems
            .iter()
            .map(|s| match s.kind {
                SubsystemKind::Qubit => "q".to_string(),
                SubsystemKind::Boson => format!("b{}", s.dim),
            })
            .collect();
        write!(f, "[{}]", parts.join("⊗"))
    }
}

/// Precomputed index maps for acting with a local operator on a subset of sites.
struct LocalAction {
    bases: Vec<usize>,
    offsets: Vec<usize>,
}

impl LocalAction {
    fn new(space: &HilbertSpec, sites: &[usize]) -> Result<(Self, usize)> {
        let strides = space.strides();
        let mut local_dims = Vec::with_capacity(sites.len());
        for (k, &s) in sites.iter().enumerate() {
            local_dims.push(space.subsystem(s)?.dim);
            if sites[..k].contains(&s) {
                return invalid(format!("site {s} listed twice"));
            }
        }
        let dl: usize = local_dims.iter().product();
        let mut offsets = vec![0usize; dl];
        for (li, off) in offsets.iter_mut().enumerate() {
            let mut rem = li;
            for (k, &s) in sites.iter().enumerate().rev() {
                *off += (rem % local_dims[k]) * strides[s];
                rem /= local_dims[k];
            }
        }
        let bases = (0..space.dim())
            .filter(|&i| {
                sites
                    .iter()
                    .zip(&local_dims)
                    .all(|(&s, &d)| (i / strides[s]) % d == 0)
            })
            .collect();
        Ok((Self { bases, offsets }, dl))
    }
}

/// Embeds `local` (acting on `sites`, first listed site slowest) into the full space.
pub fn embed_operator(local: &CMatrix, sites: &[usize], space: &HilbertSpec) -> Result<CMatrix> {
    let (action, dl) = LocalAction::new(space, sites)?;
    if local.nrows() != dl || local.ncols() != dl {
        return Err(Error::DimensionMismatch {
            expected: dl,
            found: local.nrows(),
        });
    }
    let mut out = CMatrix::zeros(space.dim(), space.dim());
    for &b in &action.bases {
        for (lr, &or) in action.offsets.iter().enumerate() {
            for (lc, &oc) in action.offsets.iter().enumerate() {
                let v = local[(lr, lc)];
                if v != C64::new(0.0, 0.0) {
                    out[(b + or, b + oc)] = v;
                }
            }
        }
    }
    Ok(out)
}

/// Applies `local` on `sites` to a full state vector without building the embedded matrix.
pub fn apply_local(
    local: &CMatrix,
    sites: &[usize],
    space: &HilbertSpec,
    v: &CVector,
) -> Result<CVector> {
    let (action, dl) = LocalAction::new(space, sites)?;
    if local.nrows() != dl || v.len() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: dl,
            found: local.nrows(),
        });
    }
    let mut out = CVector::zeros(space.dim());
    let mut buf = CVector::zeros(dl);
    for &b in &action.bases {
        for (k, &o) in action.offsets.iter().enumerate() {
            buf[k] = v[b + o];
        }
        let r = local * &buf;
        for (k, &o) in action.offsets.iter().enumerate() {
            out[b + o] = r[k];
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QubitOp {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

/// Single-qubit matrices in the (|g⟩, |e⟩) basis: σz = |e⟩⟨e| − |g⟩⟨g|, σ⁺ = |e⟩⟨g|.
pub fn qubit_operator(op: QubitOp) -> CMatrix {
    let z = real(0.0);
    let one = real(1.0);
    match op {
        QubitOp::X => CMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        QubitOp::Y => CMatrix::from_row_slice(2, 2, &[z, c(0.0, 1.0), c(0.0, -1.0), z]),
        QubitOp::Z => CMatrix::from_row_slice(2, 2, &[-one, z, z, one]),
        QubitOp::Plus => CMatrix::from_row_slice(2, 2, &[z, z, one, z]),
        QubitOp::Minus => CMatrix::from_row_slice(2, 2, &[z, one, z, z]),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BosonOp {
    Annihilation,
    Creation,
    Number,
    QuadX,
    QuadP,
}

/// Truncated Fock-space operators; x̂ = (a + a†)/√2 and p̂ = −i(a − a†)/√2.
pub fn boson_operator(kind: BosonOp, d: usize) -> Result<CMatrix> {
    if d < 2 {
        return invalid(format!("Fock cutoff {d} is below 2"));
    }
    let mut a = CMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = real((n as f64).sqrt());
    }
    let ad = a.adjoint();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok(match kind {
        BosonOp::Annihilation => a,
        BosonOp::Creation => ad,
        BosonOp::Number => CMatrix::from_diagonal(&CVector::from_fn(d, |n, _| real(n as f64))),
        BosonOp::QuadX => (a + ad) * real(s),
        BosonOp::QuadP => (a - ad) * c(0.0, -s),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    space: HilbertSpec,
    matrix: CMatrix,
}

impl OperatorMatrix {
    pub fn new(space: HilbertSpec, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: matrix.nrows(),
            });
        }
        Ok(Self { space, matrix })
    }

    pub fn zeros(space: &HilbertSpec) -> Self {
        Self {
            matrix: CMatrix::zeros(space.dim(), space.dim()),
            space: space.clone(),
        }
    }

    pub fn identity(space: &HilbertSpec) -> Self {
        Self {
            matrix: CMatrix::identity(space.dim(), space.dim()),
            space: space.clone(),
        }
    }

    /// A local operator on `sites` tensored with identities elsewhere.
    pub fn embed(space: &HilbertSpec, local: &CMatrix, sites: &[usize]) -> Result<Self> {
        Ok(Self {
            matrix: embed_operator(local, sites, space)?,
            space: space.clone(),
        })
    }

    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn is_hermitian(&self) -> bool {
        ensure_hermitian(&self.matrix).is_ok()
    }

    pub fn propagator(&self) -> Result<Propagator> {
        Propagator::new(&self.matrix)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    space: HilbertSpec,
    amplitudes: CVector,
}

impl QuantumState {
    pub fn from_amplitudes(space: HilbertSpec, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: amplitudes.len(),
            });
        }
        let n = amplitudes.norm();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n));
        }
        Ok(Self { space, amplitudes })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(space: HilbertSpec, amplitudes: CVector) -> Result<Self> {
        let n = amplitudes.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized(n));
        }
        Self::from_amplitudes(space, amplitudes / real(n))
    }

    /// Product basis state with the given level on each subsystem.
    pub fn basis(space: &HilbertSpec, levels: &[usize]) -> Result<Self> {
        let idx = space.index_of(levels)?;
        let mut v = CVector::zeros(space.dim());
        v[idx] = real(1.0);
        Ok(Self {
            space: space.clone(),
            amplitudes: v,
        })
    }

    /// Tensor product of normalized local vectors, one per subsystem.
    pub fn product(space: &HilbertSpec, factors: &[CVector]) -> Result<Self> {
        if factors.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                found: factors.len(),
            });
        }
        let mut v = CVector::from_element(1, real(1.0));
        for (f, s) in factors.iter().zip(space.subsystems()) {
            if f.len() != s.dim {
                return Err(Error::DimensionMismatch {
                    expected: s.dim,
                    found: f.len(),
                });
            }
            v = v.kronecker(f);
        }
        Self::normalized(space.clone(), v)
    }

    pub(crate) fn from_parts_unchecked(space: HilbertSpec, amplitudes: CVector) -> Self {
        Self { space, amplitudes }
    }

    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Probability of finding subsystem `site` in `level`.
    pub fn level_population(&self, site: usize, level: usize) -> Result<f64> {
        let sub = self.space.subsystem(site)?;
        if level >= sub.dim {
            return invalid(format!("level {level} outside subsystem {site}"));
        }
        let stride = self.space.strides()[site];
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| (i / stride) % sub.dim == level)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    pub fn top_fock_population(&self, site: usize) -> Result<f64> {
        let sub = self
            .space
            .require_kind(site, SubsystemKind::Boson, "top Fock population")?;
        self.level_population(site, sub.dim - 1)
    }

    /// Largest top-level population over all bosonic subsystems (0 without bosons).
    pub fn max_top_fock_population(&self) -> f64 {
        self.space
            .sites_of_kind(SubsystemKind::Boson)
            .into_iter()
            .map(|s| self.top_fock_population(s).unwrap_or(0.0))
            .fold(0.0, f64::max)
    }

    pub fn apply_matrix(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.space.dim() || u.ncols() != self.space.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.space.dim(),
                found: u.nrows(),
            });
        }
        Ok(Self {
            space: self.space.clone(),
            amplitudes: u * &self.amplitudes,
        })
    }
}

pub fn state_fidelity(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    if a.space != b.space {
        return Err(Error::SpaceMismatch);
    }
    Ok(a.amplitudes.dotc(&b.amplitudes).norm_sqr().min(1.0))
}

/// `⟨s|o|s⟩`.
pub fn expectation(s: &QuantumState, o: &OperatorMatrix) -> Result<C64> {
    if s.space != o.space {
        return Err(Error::SpaceMismatch);
    }
    Ok(s.amplitudes.dotc(&(&o.matrix * &s.amplitudes)))
}

/// `exp(−iht) s` through the Hermitian eigendecomposition of `h`.
pub fn evolve_exact(h: &OperatorMatrix, t: f64, s: &QuantumState) -> Result<QuantumState> {
    if h.space != s.space {
        return Err(Error::SpaceMismatch);
    }
    let p = h.propagator()?;
    Ok(QuantumState {
        space: s.space.clone(),
        amplitudes: p.apply(t, &s.amplitudes),
    })
}

/// Repeats `run` with a growing Fock cutoff until its reported top-level population
/// drops below [`LEAKAGE_THRESHOLD`], returning the cutoff used and the last result.
pub fn with_adaptive_fock<T>(
    start: usize,
    max: usize,
    mut run: impl FnMut(usize) -> Result<(T, f64)>,
) -> Result<(usize, T, f64)> {
    let mut fock = start.max(2);
    loop {
        let (value, leak) = run(fock)?;
        if leak < LEAKAGE_THRESHOLD || fock >= max {
            return Ok((fock, value, leak));
        }
        fock = (fock + fock / 2).min(max);
    }
}

//! Symbolic Hamiltonians: coefficient-weighted products of local operators.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::hilbert::{
    boson_operator, embed_operator, qubit_operator, BosonOp, HilbertSpec, OperatorMatrix,
    QubitOp, SubsystemKind,
};
use crate::linalg::{ensure_hermitian, real, CMatrix, C64};

/// Local operator label.
#[derive(Clone, Debug, PartialEq)]
pub enum LocalOp {
    Identity,
    SigmaX,
    SigmaY,
    SigmaZ,
    SigmaPlus,
    SigmaMinus,
    Annihilation,
    Creation,
    Number,
    QuadX,
    QuadP,
    /// An explicit matrix on one subsystem.
    Matrix(CMatrix),
}

impl LocalOp {
    pub fn name(&self) -> &'static str {
        match self {
            LocalOp::Identity => "I",
            LocalOp::SigmaX => "sigma_x",
            LocalOp::SigmaY => "sigma_y",
            LocalOp::SigmaZ => "sigma_z",
            LocalOp::SigmaPlus => "sigma_plus",
            LocalOp::SigmaMinus => "sigma_minus",
            LocalOp::Annihilation => "a",
            LocalOp::Creation => "a_dag",
            LocalOp::Number => "n",
            LocalOp::QuadX => "x",
            LocalOp::QuadP => "p",
            LocalOp::Matrix(_) => "matrix",
        }
    }

    /// Matrix of this operator on subsystem `site` of `space`.
    pub fn matrix(&self, space: &HilbertSpec, site: usize) -> Result<CMatrix> {
        let sub = space.subsystem(site)?;
        let qubit = |op| -> Result<CMatrix> {
            space.require_kind(site, SubsystemKind::Qubit, self.name())?;
            Ok(qubit_operator(op))
        };
        let boson = |op| -> Result<CMatrix> {
            space.require_kind(site, SubsystemKind::Boson, self.name())?;
            boson_operator(op, sub.dim)
        };
        match self {
            LocalOp::Identity => Ok(CMatrix::identity(sub.dim, sub.dim)),
            LocalOp::SigmaX => qubit(QubitOp::X),
            LocalOp::SigmaY => qubit(QubitOp::Y),
            LocalOp::SigmaZ => qubit(QubitOp::Z),
            LocalOp::SigmaPlus => qubit(QubitOp::Plus),
            LocalOp::SigmaMinus => qubit(QubitOp::Minus),
            LocalOp::Annihilation => boson(BosonOp::Annihilation),
            LocalOp::Creation => boson(BosonOp::Creation),
            LocalOp::Number => boson(BosonOp::Number),
            LocalOp::QuadX => boson(BosonOp::QuadX),
            LocalOp::QuadP => boson(BosonOp::QuadP),
            LocalOp::Matrix(m) => {
                if m.nrows() != sub.dim || m.ncols() != sub.dim {
                    return Err(Error::DimensionMismatch {
                        expected: sub.dim,
                        found: m.nrows(),
                    });
                }
                Ok(m.clone())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    pub site: usize,
    pub op: LocalOp,
    pub power: u32,
}

impl Factor {
    pub fn new(site: usize, op: LocalOp) -> Self {
        Self { site, op, power: 1 }
    }

    pub fn pow(site: usize, op: LocalOp, power: u32) -> Self {
        Self { site, op, power }
    }
}

/// `coeff · Π factors` plus its Hermitian conjugate when `add_hc` is set.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coeff: C64,
    pub factors: Vec<Factor>,
    pub add_hc: bool,
}

impl Term {
    pub fn new(coeff: f64, factors: Vec<Factor>) -> Self {
        Self::complex(real(coeff), factors)
    }

    pub fn complex(coeff: C64, factors: Vec<Factor>) -> Self {
        Self {
            coeff,
            factors,
            add_hc: false,
        }
    }

    pub fn with_hc(mut self) -> Self {
        self.add_hc = true;
        self
    }

    /// Per-site operator products in factor order; operators on distinct sites commute.
    pub fn local_matrices(&self, space: &HilbertSpec) -> Result<BTreeMap<usize, CMatrix>> {
        let mut per_site: BTreeMap<usize, CMatrix> = BTreeMap::new();
        for f in &self.factors {
            let m = f.op.matrix(space, f.site)?;
            let mut p = CMatrix::identity(m.nrows(), m.ncols());
            for _ in 0..f.power {
                p *= &m;
            }
            per_site
                .entry(f.site)
                .and_modify(|acc| *acc = &*acc * &p)
                .or_insert(p);
        }
        Ok(per_site)
    }

    /// Full-space matrix of `Π factors` (without the coefficient or conjugate).
    pub fn operator_matrix(&self, space: &HilbertSpec) -> Result<CMatrix> {
        let per_site = self.local_matrices(space)?;
        if per_site.is_empty() {
            return Ok(CMatrix::identity(space.dim(), space.dim()));
        }
        let sites: Vec<usize> = per_site.keys().copied().collect();
        let local = per_site
            .values()
            .fold(CMatrix::identity(1, 1), |acc, m| acc.kronecker(m));
        embed_operator(&local, &sites, space)
    }

    /// Full-space matrix including coefficient and conjugate.
    pub fn matrix(&self, space: &HilbertSpec) -> Result<CMatrix> {
        let op = self.operator_matrix(space)?;
        let mut m = &op * self.coeff;
        if self.add_hc {
            m += op.adjoint() * self.coeff.conj();
        }
        Ok(m)
    }

    /// Sites touched by a non-identity factor.
    pub fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self
            .factors
            .iter()
            .filter(|f| f.op != LocalOp::Identity && f.power > 0)
            .map(|f| f.site)
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    fn validate(&self, space: &HilbertSpec) -> Result<()> {
        for f in &self.factors {
            f.op.matrix(space, f.site)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    space: HilbertSpec,
    terms: Vec<Term>,
}

impl Hamiltonian {
    pub fn new(space: &HilbertSpec) -> Self {
        Self {
            space: space.clone(),
            terms: Vec::new(),
        }
    }

    pub fn from_terms(space: &HilbertSpec, terms: Vec<Term>) -> Result<Self> {
        let mut h = Self::new(space);
        for t in terms {
            h.push(t)?;
        }
        Ok(h)
    }

    pub fn push(&mut self, term: Term) -> Result<()> {
        term.validate(&self.space)?;
        self.terms.push(term);
        Ok(())
    }

    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<Term> {
        self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeff *= s;
        }
        out
    }

    pub fn plus(&self, other: &Hamiltonian) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        Ok(out)
    }

    /// Unordered pairs of sites that some term couples.
    pub fn coupled_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for t in &self.terms {
            let s = t.support();
            for i in 0..s.len() {
                for j in i + 1..s.len() {
                    pairs.push((s[i], s[j]));
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }

    /// Union of all term supports.
    pub fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.terms.iter().flat_map(|t| t.support()).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Sum of all terms as a matrix, without the Hermiticity check.
    pub fn matrix_unchecked(&self) -> Result<CMatrix> {
        let d = self.space.dim();
        let mut m = CMatrix::zeros(d, d);
        for t in &self.terms {
            m += t.matrix(&self.space)?;
        }
        Ok(m)
    }

    pub fn assemble(&self) -> Result<OperatorMatrix> {
        let m = self.matrix_unchecked()?;
        ensure_hermitian(&m)?;
        OperatorMatrix::new(self.space.clone(), m)
    }
}

pub fn assemble(h: &Hamiltonian) -> Result<OperatorMatrix> {
    h.assemble()
}

/// Hilbert-Schmidt projection coefficient `Tr(B†H)/Tr(B†B)` of `h` onto `basis`.
pub fn projection_coefficient(h: &CMatrix, basis: &CMatrix) -> C64 {
    let num: C64 = basis.adjoint().component_mul(&h.transpose()).sum();
    let den: C64 = basis.adjoint().component_mul(&basis.transpose()).sum();
    num / den
}

//! Fermionic ladder operators, Pauli strings and the Jordan-Wigner map.
//!
//! Mode `k` (0-based) of an `n`-mode register sits on qubit `n − 1 − k`, so the first
//! mode is the last tensor factor and its Z-chain runs over the lower-indexed modes.
//! Antifermion modes follow all fermion modes in the common ordering.

use std::collections::BTreeMap;
use std::ops::Mul;

use crate::error::{Error, Result};
use crate::hilbert::{embed_operator, qubit_operator, HilbertSpec, OperatorMatrix, QubitOp};
use crate::hilbert::SubsystemKind;
use crate::linalg::{c, real, CMatrix, C64};

const MERGE_TOL: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> CMatrix {
        qubit_operator(match self {
            Pauli::X => QubitOp::X,
            Pauli::Y => QubitOp::Y,
            Pauli::Z => QubitOp::Z,
        })
    }

    /// `self · other` as a phase and a remaining letter (`None` for identity).
    pub fn product(self, other: Pauli) -> (C64, Option<Pauli>) {
        use Pauli::*;
        let i = c(0.0, 1.0);
        match (self, other) {
            (a, b) if a == b => (real(1.0), None),
            (X, Y) => (i, Some(Z)),
            (Y, X) => (-i, Some(Z)),
            (Y, Z) => (i, Some(X)),
            (Z, Y) => (-i, Some(X)),
            (Z, X) => (i, Some(Y)),
            (X, Z) => (-i, Some(Y)),
            _ => unreachable!(),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// `coeff · Π_q letters[q]`, identities omitted.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliString {
    pub coeff: C64,
    pub letters: BTreeMap<usize, Pauli>,
}

impl PauliString {
    pub fn identity(coeff: C64) -> Self {
        Self {
            coeff,
            letters: BTreeMap::new(),
        }
    }

    pub fn new(coeff: C64, letters: impl IntoIterator<Item = (usize, Pauli)>) -> Self {
        Self {
            coeff,
            letters: letters.into_iter().collect(),
        }
    }

    pub fn single(qubit: usize, p: Pauli) -> Self {
        Self::new(real(1.0), [(qubit, p)])
    }

    /// Label like `XIZ` over `n` qubits, qubit 0 first.
    pub fn label(&self, n: usize) -> String {
        (0..n)
            .map(|q| self.letters.get(&q).map_or('I', |p| p.symbol()))
            .collect()
    }

    pub fn to_matrix(&self, space: &HilbertSpec) -> Result<OperatorMatrix> {
        pauli_to_matrix(self, space)
    }
}

impl Mul for &PauliString {
    type Output = PauliString;

    fn mul(self, rhs: &PauliString) -> PauliString {
        let mut coeff = self.coeff * rhs.coeff;
        let mut letters = self.letters.clone();
        for (&q, &b) in &rhs.letters {
            match letters.get(&q) {
                None => {
                    letters.insert(q, b);
                }
                Some(&a) => {
                    let (phase, p) = a.product(b);
                    coeff *= phase;
                    match p {
                        Some(p) => letters.insert(q, p),
                        None => letters.remove(&q),
                    };
                }
            }
        }
        PauliString { coeff, letters }
    }
}

/// Sum of Pauli strings.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PauliSum {
    pub terms: Vec<PauliString>,
}

impl PauliSum {
    pub fn new(terms: Vec<PauliString>) -> Self {
        Self { terms }.simplified()
    }

    /// Merges identical letter maps and drops vanishing coefficients.
    pub fn simplified(self) -> Self {
        let mut acc: BTreeMap<Vec<(usize, Pauli)>, C64> = BTreeMap::new();
        for t in self.terms {
            let key: Vec<(usize, Pauli)> = t.letters.into_iter().collect();
            *acc.entry(key).or_insert(real(0.0)) += t.coeff;
        }
        let terms = acc
            .into_iter()
            .filter(|(_, c)| c.norm() > MERGE_TOL)
            .map(|(k, c)| PauliString::new(c, k))
            .collect();
        Self { terms }
    }

    pub fn product(&self, other: &PauliSum) -> PauliSum {
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                out.push(a * b);
            }
        }
        PauliSum::new(out)
    }

    pub fn scaled(&self, s: C64) -> PauliSum {
        PauliSum {
            terms: self
                .terms
                .iter()
                .map(|t| PauliString {
                    coeff: t.coeff * s,
                    letters: t.letters.clone(),
                })
                .collect(),
        }
    }

    pub fn plus(&self, other: &PauliSum) -> PauliSum {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        PauliSum::new(terms)
    }

    pub fn to_matrix(&self, space: &HilbertSpec) -> Result<OperatorMatrix> {
        let mut m = OperatorMatrix::zeros(space).into_matrix();
        for t in &self.terms {
            m += pauli_to_matrix(t, space)?.into_matrix();
        }
        OperatorMatrix::new(space.clone(), m)
    }

    /// Coefficient of the string with exactly these letters (zero if absent).
    pub fn coefficient(&self, letters: &[(usize, Pauli)]) -> C64 {
        let key: BTreeMap<usize, Pauli> = letters.iter().copied().collect();
        self.terms
            .iter()
            .find(|t| t.letters == key)
            .map_or(real(0.0), |t| t.coeff)
    }
}

pub fn pauli_to_matrix(p: &PauliString, space: &HilbertSpec) -> Result<OperatorMatrix> {
    if p.letters.is_empty() {
        return OperatorMatrix::new(
            space.clone(),
            CMatrix::identity(space.dim(), space.dim()) * p.coeff,
        );
    }
    let mut sites = Vec::with_capacity(p.letters.len());
    let mut local = CMatrix::identity(1, 1);
    for (&q, &l) in &p.letters {
        space.require_kind(q, SubsystemKind::Qubit, "Pauli letter")?;
        sites.push(q);
        local = local.kronecker(&l.matrix());
    }
    OperatorMatrix::new(space.clone(), embed_operator(&local, &sites, space)? * p.coeff)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Species {
    Fermion,
    Antifermion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Ladder {
    pub mode: usize,
    pub dagger: bool,
    pub species: Species,
}

impl Ladder {
    pub fn create(mode: usize) -> Self {
        Self {
            mode,
            dagger: true,
            species: Species::Fermion,
        }
    }

    pub fn annihilate(mode: usize) -> Self {
        Self {
            mode,
            dagger: false,
            species: Species::Fermion,
        }
    }

    pub fn of(self, species: Species) -> Self {
        Self { species, ..self }
    }
}

/// `coeff · Π factors`, kept in the written order.
#[derive(Clone, Debug, PartialEq)]
pub struct FermionTerm {
    pub coeff: C64,
    pub factors: Vec<Ladder>,
}

impl FermionTerm {
    pub fn new(coeff: C64, factors: Vec<Ladder>) -> Self {
        Self { coeff, factors }
    }
}

/// Number of fermion and antifermion modes sharing one Jordan-Wigner ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModeLayout {
    pub fermions: usize,
    pub antifermions: usize,
}

impl ModeLayout {
    pub fn new(fermions: usize, antifermions: usize) -> Self {
        Self {
            fermions,
            antifermions,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.fermions + self.antifermions
    }

    /// Position of a mode in the common ordering.
    pub fn ordinal(&self, l: &Ladder) -> Result<usize> {
        let (limit, offset) = match l.species {
            Species::Fermion => (self.fermions, 0),
            Species::Antifermion => (self.antifermions, self.fermions),
        };
        if l.mode >= limit {
            return Err(Error::ModeOutOfRange {
                mode: l.mode,
                n_modes: limit,
            });
        }
        Ok(offset + l.mode)
    }

    /// Qubit carrying the mode with the given ordinal.
    pub fn qubit(&self, ordinal: usize) -> usize {
        self.n_modes() - 1 - ordinal
    }
}

impl From<usize> for ModeLayout {
    fn from(n: usize) -> Self {
        Self::new(n, 0)
    }
}

/// Jordan-Wigner image of a single ladder operator.
pub fn ladder_image(l: &Ladder, layout: ModeLayout) -> Result<PauliSum> {
    let k = layout.ordinal(l)?;
    let q = layout.qubit(k);
    let half = real(0.5);
    let ysign = if l.dagger { c(0.0, 0.5) } else { c(0.0, -0.5) };
    let chain: Vec<(usize, Pauli)> = (0..k).map(|j| (layout.qubit(j), Pauli::Z)).collect();
    let with = |p: Pauli, coeff: C64| {
        let mut letters = chain.clone();
        letters.push((q, p));
        PauliString::new(coeff, letters)
    };
    Ok(PauliSum::new(vec![with(Pauli::X, half), with(Pauli::Y, ysign)]))
}

/// Expands a fermionic product into merged Pauli strings.
pub fn jordan_wigner(t: &FermionTerm, layout: impl Into<ModeLayout>) -> Result<Vec<PauliString>> {
    let layout = layout.into();
    let mut acc = PauliSum::new(vec![PauliString::identity(t.coeff)]);
    for f in &t.factors {
        acc = acc.product(&ladder_image(f, layout)?);
    }
    Ok(acc.terms)
}

/// Jordan-Wigner image of a sum of fermionic terms.
pub fn jordan_wigner_sum(terms: &[FermionTerm], layout: impl Into<ModeLayout>) -> Result<PauliSum> {
    let layout = layout.into();
    let mut all = Vec::new();
    for t in terms {
        all.extend(jordan_wigner(t, layout)?);
    }
    Ok(PauliSum::new(all))
}

/// Dense matrix of one ladder operator on a register of `layout.n_modes()` qubits.
pub fn ladder_matrix(l: &Ladder, layout: ModeLayout, space: &HilbertSpec) -> Result<CMatrix> {
    Ok(ladder_image(l, layout)?.to_matrix(space)?.into_matrix())
}

//! Digital circuits for Heisenberg and frustrated Ising chains and the three-mode
//! Fermi-Hubbard encoding.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{invalid, Result};
use crate::fermion::{jordan_wigner_sum, FermionTerm, Ladder, PauliSum};
use crate::gates::{Axis, Circuit, Gate};
use crate::hamiltonian::{Factor, Hamiltonian, LocalOp, Term};
use crate::hilbert::{HilbertSpec, OperatorMatrix};
use crate::linalg::{real, CMatrix};
use crate::trotter::TrotterPlan;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpinModel {
    Heisenberg,
    Ising,
    IsingTransverse,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinProtocolParams {
    pub model: SpinModel,
    pub n_qubits: usize,
    pub j: f64,
    pub b: f64,
    pub t: f64,
    pub l: usize,
    /// Per-pair couplings replacing `j`, realized by scaling analog block durations.
    pub pair_couplings: Option<Vec<f64>>,
}

impl SpinProtocolParams {
    pub fn heisenberg(n_qubits: usize, j: f64, t: f64, l: usize) -> Self {
        Self {
            model: SpinModel::Heisenberg,
            n_qubits,
            j,
            b: 0.0,
            t,
            l,
            pair_couplings: None,
        }
    }

    pub fn ising(n_qubits: usize, j: f64, t: f64, l: usize) -> Self {
        Self {
            model: SpinModel::Ising,
            ..Self::heisenberg(n_qubits, j, t, l)
        }
    }

    pub fn ising_transverse(n_qubits: usize, j: f64, b: f64, t: f64, l: usize) -> Self {
        Self {
            model: SpinModel::IsingTransverse,
            b,
            ..Self::heisenberg(n_qubits, j, t, l)
        }
    }

    pub fn with_pair_couplings(mut self, couplings: Vec<f64>) -> Self {
        self.pair_couplings = Some(couplings);
        self
    }

    /// Open chain bonds for Heisenberg; all pairs (the periodic triangle) for Ising.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        match self.model {
            SpinModel::Heisenberg => (0..self.n_qubits - 1).map(|i| (i, i + 1)).collect(),
            _ => {
                let mut p = Vec::new();
                for i in 0..self.n_qubits {
                    for j in i + 1..self.n_qubits {
                        p.push((i, j));
                    }
                }
                p
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.n_qubits) {
            return invalid(format!("{} qubits unsupported (2 or 3)", self.n_qubits));
        }
        if self.l == 0 {
            return invalid("Trotter step count must be at least 1");
        }
        if let Some(c) = &self.pair_couplings {
            if c.len() != self.pairs().len() {
                return invalid(format!(
                    "{} pair couplings given for {} pairs",
                    c.len(),
                    self.pairs().len()
                ));
            }
            if self.j == 0.0 {
                return invalid("pair couplings need a nonzero device coupling J");
            }
        }
        Ok(())
    }

    fn coupling(&self, pair_index: usize) -> f64 {
        self.pair_couplings
            .as_ref()
            .map_or(self.j, |c| c[pair_index])
    }

    /// Duration multiplier realizing the pair's coupling with the device coupling `j`.
    fn duration_scale(&self, pair_index: usize) -> f64 {
        self.pair_couplings
            .as_ref()
            .map_or(1.0, |c| c[pair_index] / self.j)
    }

    pub fn space(&self) -> Result<HilbertSpec> {
        HilbertSpec::qubits(self.n_qubits)
    }
}

fn two_body(coeff: f64, i: usize, a: LocalOp, j: usize, b: LocalOp) -> Term {
    Term::new(coeff, vec![Factor::new(i, a), Factor::new(j, b)])
}

/// `c (σˣᵢσˣⱼ + σʸᵢσʸⱼ)`.
pub fn xy_block(space: &HilbertSpec, pair: (usize, usize), c: f64) -> Result<Hamiltonian> {
    Hamiltonian::from_terms(
        space,
        vec![
            two_body(c, pair.0, LocalOp::SigmaX, pair.1, LocalOp::SigmaX),
            two_body(c, pair.0, LocalOp::SigmaY, pair.1, LocalOp::SigmaY),
        ],
    )
}

/// `J Σ_bonds (XX + YY + ZZ)`.
pub fn heisenberg_hamiltonian(p: &SpinProtocolParams) -> Result<Hamiltonian> {
    p.validate()?;
    let space = p.space()?;
    let mut h = Hamiltonian::new(&space);
    for (k, &(i, j)) in p.pairs().iter().enumerate() {
        let c = p.coupling(k);
        for op in [LocalOp::SigmaX, LocalOp::SigmaY, LocalOp::SigmaZ] {
            h.push(two_body(c, i, op.clone(), j, op))?;
        }
    }
    Ok(h)
}

fn all_qubits(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// Per step: the yz, xz and xy layers, each from the native XY block `(J/2)(XX+YY)`
/// conjugated by collective quarter-turn rotations.
pub fn heisenberg_circuit(p: &SpinProtocolParams) -> Result<Circuit> {
    if p.model != SpinModel::Heisenberg {
        return invalid("heisenberg_circuit needs the Heisenberg model");
    }
    p.validate()?;
    let space = p.space()?;
    let tau = p.t / p.l as f64;
    let qubits = all_qubits(p.n_qubits);
    let blocks = |c: &mut Circuit| -> Result<()> {
        for (k, &pair) in p.pairs().iter().enumerate() {
            c.push(Gate::analog(
                xy_block(&space, pair, p.j / 2.0)?,
                tau * p.duration_scale(k),
                format!("xy{}{}", pair.0 + 1, pair.1 + 1),
            ))?;
        }
        Ok(())
    };
    let mut step = Circuit::new(&space);
    for axis in [Axis::Y, Axis::X] {
        step.push(Gate::rotation(axis, -FRAC_PI_2, qubits.clone()))?;
        blocks(&mut step)?;
        step.push(Gate::rotation(axis, FRAC_PI_2, qubits.clone()))?;
    }
    blocks(&mut step)?;
    Ok(step.repeated(p.l))
}

/// Per-layer Hamiltonians of [`heisenberg_circuit`] in time order.
pub fn heisenberg_trotter_plan(p: &SpinProtocolParams) -> Result<TrotterPlan> {
    p.validate()?;
    let space = p.space()?;
    let mut terms = Vec::new();
    for (a, b) in [
        (LocalOp::SigmaY, LocalOp::SigmaZ),
        (LocalOp::SigmaX, LocalOp::SigmaZ),
        (LocalOp::SigmaX, LocalOp::SigmaY),
    ] {
        for (k, &(i, j)) in p.pairs().iter().enumerate() {
            let c = p.coupling(k) / 2.0;
            terms.push(Hamiltonian::from_terms(
                &space,
                vec![
                    two_body(c, i, a.clone(), j, a.clone()),
                    two_body(c, i, b.clone(), j, b.clone()),
                ],
            )?);
        }
    }
    TrotterPlan::new(terms, p.t, p.l)
}

/// `J Σ_{i<j} XᵢXⱼ (+ B Σ Yᵢ)`.
pub fn ising_hamiltonian(p: &SpinProtocolParams) -> Result<Hamiltonian> {
    p.validate()?;
    let space = p.space()?;
    let mut h = Hamiltonian::new(&space);
    for (k, &(i, j)) in p.pairs().iter().enumerate() {
        h.push(two_body(p.coupling(k), i, LocalOp::SigmaX, j, LocalOp::SigmaX))?;
    }
    if p.model == SpinModel::IsingTransverse {
        for q in 0..p.n_qubits {
            h.push(Term::new(p.b, vec![Factor::new(q, LocalOp::SigmaY)]))?;
        }
    }
    Ok(h)
}

fn transverse_field(p: &SpinProtocolParams, space: &HilbertSpec) -> Result<Hamiltonian> {
    Hamiltonian::from_terms(
        space,
        (0..p.n_qubits)
            .map(|q| Term::new(p.b, vec![Factor::new(q, LocalOp::SigmaY)]))
            .collect(),
    )
}

/// Per step (time order): the transverse field, then for each pair the sign-flipped
/// block `R H^{xy} R†` followed by `H^{xy}`, with `H^{xy} = J(XX + YY)` and `R` a
/// π rotation about x on the pair's first qubit. Each pair therefore contributes `2J·XX`
/// and the circuit approaches `exp[−it(2J Σ XᵢXⱼ + B Σ Yᵢ)]`, the sum of
/// [`ising_trotter_plan`]'s terms.
pub fn ising_circuit(p: &SpinProtocolParams) -> Result<Circuit> {
    if p.model == SpinModel::Heisenberg {
        return invalid("ising_circuit needs an Ising model");
    }
    p.validate()?;
    let space = p.space()?;
    let tau = p.t / p.l as f64;
    let mut step = Circuit::new(&space);
    if p.model == SpinModel::IsingTransverse {
        step.push(Gate::rotation(Axis::Y, 2.0 * p.b * tau, all_qubits(p.n_qubits)))?;
    }
    let pairs = p.pairs();
    for (k, &pair) in pairs.iter().enumerate().rev() {
        let block = xy_block(&space, pair, p.j)?;
        let d = tau * p.duration_scale(k);
        let label = format!("{}{}", pair.0 + 1, pair.1 + 1);
        step.push(Gate::rotation(Axis::X, -PI, vec![pair.0]))?;
        step.push(Gate::analog(block.clone(), d, format!("xy{label}")))?;
        step.push(Gate::rotation(Axis::X, PI, vec![pair.0]))?;
        step.push(Gate::analog(block, d, format!("xy{label}")))?;
    }
    Ok(step.repeated(p.l))
}

/// Terms of [`ising_circuit`] in time order.
pub fn ising_trotter_plan(p: &SpinProtocolParams) -> Result<TrotterPlan> {
    p.validate()?;
    let space = p.space()?;
    let mut terms = Vec::new();
    if p.model == SpinModel::IsingTransverse {
        terms.push(transverse_field(p, &space)?);
    }
    for (k, &(i, j)) in p.pairs().iter().enumerate().rev() {
        let c = p.coupling(k);
        terms.push(Hamiltonian::from_terms(
            &space,
            vec![
                two_body(c, i, LocalOp::SigmaX, j, LocalOp::SigmaX),
                two_body(-c, i, LocalOp::SigmaY, j, LocalOp::SigmaY),
            ],
        )?);
        terms.push(xy_block(&space, (i, j), c)?);
    }
    TrotterPlan::new(terms, p.t, p.l)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum HubbardOrdering {
    /// The displayed product: both YY blocks, then both XX blocks.
    #[default]
    Displayed,
    /// XX and YY of one bond kept adjacent, which conserves particle number exactly.
    BondGrouped,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HubbardParams {
    pub h: f64,
    pub u: f64,
    pub t: f64,
    pub n: usize,
    pub ordering: HubbardOrdering,
}

impl HubbardParams {
    pub fn new(h: f64, u: f64, t: f64, n: usize) -> Self {
        Self {
            h,
            u,
            t,
            n,
            ordering: HubbardOrdering::Displayed,
        }
    }
}

pub const HUBBARD_MODES: usize = 3;

/// `−h Σ (b†ᵢbᵢ₊₁ + h.c.) + U Σ nᵢnᵢ₊₁` on three open-boundary modes.
pub fn hubbard_fermionic_terms(p: &HubbardParams) -> Vec<FermionTerm> {
    let c = |x: f64, f: Vec<Ladder>| FermionTerm::new(real(x), f);
    let (cr, an) = (Ladder::create, Ladder::annihilate);
    vec![
        c(-p.h, vec![cr(0), an(1)]),
        c(-p.h, vec![cr(1), an(0)]),
        c(-p.h, vec![cr(1), an(2)]),
        c(-p.h, vec![cr(2), an(1)]),
        c(p.u, vec![cr(0), an(0), cr(1), an(1)]),
        c(p.u, vec![cr(1), an(1), cr(2), an(2)]),
    ]
}

pub fn hubbard_jordan_wigner(p: &HubbardParams) -> Result<PauliSum> {
    jordan_wigner_sum(&hubbard_fermionic_terms(p), HUBBARD_MODES)
}

/// The Pauli form, with the `I⊗σz⊗I` entry listed twice as printed.
pub fn hubbard_spin_hamiltonian(p: &HubbardParams) -> Result<Hamiltonian> {
    let space = HilbertSpec::qubits(HUBBARD_MODES)?;
    use LocalOp::{SigmaX as X, SigmaY as Y, SigmaZ as Z};
    let h2 = p.h / 2.0;
    let u4 = p.u / 4.0;
    let one = |c: f64, i: usize| Term::new(c, vec![Factor::new(i, Z)]);
    Hamiltonian::from_terms(
        &space,
        vec![
            two_body(h2, 1, X, 2, X),
            two_body(h2, 1, Y, 2, Y),
            two_body(h2, 0, X, 1, X),
            two_body(h2, 0, Y, 1, Y),
            two_body(u4, 1, Z, 2, Z),
            one(u4, 1),
            one(u4, 2),
            two_body(u4, 0, Z, 1, Z),
            one(u4, 0),
            one(u4, 1),
        ],
    )
}

/// `Σ (I + Zᵢ)/2`, the Jordan-Wigner particle number.
pub fn hubbard_number_operator() -> Result<OperatorMatrix> {
    let space = HilbertSpec::qubits(HUBBARD_MODES)?;
    let terms = (0..HUBBARD_MODES)
        .flat_map(|q| {
            [
                Term::new(0.5, vec![]),
                Term::new(0.5, vec![Factor::new(q, LocalOp::SigmaZ)]),
            ]
        })
        .collect();
    Hamiltonian::from_terms(&space, terms)?.assemble()
}

/// The displayed Trotter product in time order, repeated `n` times. ZZ exponentials
/// `exp(−i c ZZ τ)` become `CZ_φ` gates with `φ = 2cτ` (equal up to global phase).
pub fn hubbard_circuit(p: &HubbardParams) -> Result<Circuit> {
    if p.n == 0 {
        return invalid("Trotter step count must be at least 1");
    }
    let space = HilbertSpec::qubits(HUBBARD_MODES)?;
    let tau = p.t / p.n as f64;
    let mut step = Circuit::new(&space);
    let zz = |c: f64, pair| Gate::CZPhi {
        phi: 2.0 * c * tau,
        pair,
    };
    let z = |c: f64, q| Gate::rotation(Axis::Z, 2.0 * c * tau, vec![q]);
    let (a, b) = ((0, 1), (1, 2));
    step.push(z(p.u / 4.0, 0))?;
    step.push(zz(p.u / 4.0, a))?;
    step.push(z(p.u / 4.0, 2))?;
    step.push(z(p.u / 2.0, 1))?;
    step.push(zz(p.u / 4.0, b))?;
    // (axis, angle before the block) for YY and XX conjugations.
    let yy = (Axis::X, FRAC_PI_2);
    let xx = (Axis::Y, -FRAC_PI_2);
    let order = match p.ordering {
        HubbardOrdering::Displayed => [(yy, a), (yy, b), (xx, a), (xx, b)],
        HubbardOrdering::BondGrouped => [(yy, a), (xx, a), (yy, b), (xx, b)],
    };
    for ((axis, angle), pair) in order {
        let targets = vec![pair.0, pair.1];
        step.push(Gate::rotation(axis, angle, targets.clone()))?;
        step.push(zz(p.h / 2.0, pair))?;
        step.push(Gate::rotation(axis, -angle, targets))?;
    }
    Ok(step.repeated(p.n))
}

/// `‖[U, N]‖` for the circuit unitary and the particle number.
pub fn hubbard_number_defect(p: &HubbardParams) -> Result<f64> {
    let u = hubbard_circuit(p)?.unitary()?.into_matrix();
    let n = hubbard_number_operator()?.into_matrix();
    Ok(crate::linalg::spectral_norm(&(&u * &n - &n * &u)))
}

/// Matrix identity check helper: `R (Z⊗Z) R†` for a collective rotation on both qubits.
pub fn conjugated_zz(axis: Axis, angle: f64) -> CMatrix {
    let r = crate::gates::rotation(axis, angle);
    let r2 = r.kronecker(&r);
    let z = crate::hilbert::qubit_operator(crate::hilbert::QubitOp::Z);
    &r2 * z.kronecker(&z) * r2.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermion::Pauli;
    use crate::hilbert::{evolve_exact, state_fidelity, QuantumState};
    use crate::linalg::{commutator, expm_hermitian, phase_aligned_distance, spectral_norm};
    use crate::trotter::{digital_error, trotter_unitary};

    fn pauli2(a: Pauli, b: Pauli) -> CMatrix {
        a.matrix().kronecker(&b.matrix())
    }

    #[test]
    fn two_qubit_heisenberg_is_exact_in_one_step() {
        let p = SpinProtocolParams::heisenberg(2, 1.0, 0.9, 1);
        let u = heisenberg_circuit(&p).unwrap().unitary().unwrap();
        let h = heisenberg_hamiltonian(&p).unwrap().assemble().unwrap();
        let exact = h.propagator().unwrap().unitary(0.9);
        assert!(spectral_norm(&(u.matrix() - exact)) < 1e-12);
    }

    #[test]
    fn heisenberg_plan_matches_circuit() {
        let p = SpinProtocolParams::heisenberg(3, 1.0, 1.0, 4);
        let c = heisenberg_circuit(&p).unwrap().unitary().unwrap();
        let plan = heisenberg_trotter_plan(&p).unwrap();
        assert!((c.matrix() - trotter_unitary(&plan).unwrap()).norm() < 1e-11);
        // Six two-qubit blocks and four collective rotations per step.
        let c1 = heisenberg_circuit(&SpinProtocolParams::heisenberg(3, 1.0, 1.0, 1)).unwrap();
        let blocks = c1
            .gates()
            .iter()
            .filter(|g| matches!(g, Gate::AnalogBlock { .. }))
            .count();
        assert_eq!((blocks, c1.len() - blocks), (6, 4));
    }

    #[test]
    fn three_qubit_heisenberg_fidelity() {
        let p = SpinProtocolParams::heisenberg(3, 1.0, 1.0, 20);
        let c = heisenberg_circuit(&p).unwrap();
        let h = heisenberg_hamiltonian(&p).unwrap().assemble().unwrap();
        let space = p.space().unwrap();
        let s = QuantumState::basis(&space, &[1, 0, 0]).unwrap();
        let f = state_fidelity(&c.apply(&s).unwrap(), &evolve_exact(&h, 1.0, &s).unwrap()).unwrap();
        assert!(f > 0.999, "fidelity {f}");
    }

    #[test]
    fn heisenberg_conserves_total_z_and_swap() {
        let p = SpinProtocolParams::heisenberg(2, 0.8, 1.4, 1);
        let u = heisenberg_circuit(&p).unwrap().unitary().unwrap().into_matrix();
        let i2 = CMatrix::identity(2, 2);
        let z = Pauli::Z.matrix();
        let sz = z.kronecker(&i2) + i2.kronecker(&z);
        let swap = (CMatrix::identity(4, 4)
            + pauli2(Pauli::X, Pauli::X)
            + pauli2(Pauli::Y, Pauli::Y)
            + pauli2(Pauli::Z, Pauli::Z))
            * real(0.5);
        assert!(spectral_norm(&commutator(&u, &sz)) < 1e-10);
        assert!(spectral_norm(&commutator(&u, &swap)) < 1e-10);
    }

    #[test]
    fn rotation_conjugation_identities() {
        let j = 1.3;
        let hxy = (pauli2(Pauli::X, Pauli::X) + pauli2(Pauli::Y, Pauli::Y)) * real(j / 2.0);
        let rx = crate::gates::rotation(Axis::X, FRAC_PI_2);
        let ry = crate::gates::rotation(Axis::Y, FRAC_PI_2);
        let rx2 = rx.kronecker(&rx);
        let ry2 = ry.kronecker(&ry);
        let hxz = (pauli2(Pauli::X, Pauli::X) + pauli2(Pauli::Z, Pauli::Z)) * real(j / 2.0);
        let hyz = (pauli2(Pauli::Y, Pauli::Y) + pauli2(Pauli::Z, Pauli::Z)) * real(j / 2.0);
        assert!((&rx2 * &hxy * rx2.adjoint() - hxz).norm() < 1e-12);
        assert!((&ry2 * &hxy * ry2.adjoint() - hyz).norm() < 1e-12);
        // Ising sign flip with a π rotation on the first qubit.
        let hxy_ising = &hxy * real(2.0);
        let r1 = crate::gates::rotation(Axis::X, PI).kronecker(&CMatrix::identity(2, 2));
        let flipped = (pauli2(Pauli::X, Pauli::X) - pauli2(Pauli::Y, Pauli::Y)) * real(j);
        assert!((&r1 * hxy_ising * r1.adjoint() - flipped).norm() < 1e-12);
        // XX and YY from ZZ.
        assert!((conjugated_zz(Axis::Y, FRAC_PI_2) - pauli2(Pauli::X, Pauli::X)).norm() < 1e-12);
        assert!((conjugated_zz(Axis::X, -FRAC_PI_2) - pauli2(Pauli::Y, Pauli::Y)).norm() < 1e-12);
    }

    #[test]
    fn zero_field_ising_is_exact() {
        let p = SpinProtocolParams::ising(3, 0.7, 1.1, 1);
        let u = ising_circuit(&p).unwrap().unitary().unwrap();
        let mut h = CMatrix::zeros(8, 8);
        for (i, j) in p.pairs() {
            let mut letters = vec![(i, Pauli::X), (j, Pauli::X)];
            letters.sort();
            h += crate::fermion::pauli_to_matrix(
                &crate::fermion::PauliString::new(real(1.0), letters),
                &p.space().unwrap(),
            )
            .unwrap()
            .into_matrix();
        }
        let exact = expm_hermitian(&h, 2.0 * 0.7 * 1.1).unwrap();
        assert!(phase_aligned_distance(u.matrix(), &exact) < 1e-12);
        assert!(digital_error(&ising_trotter_plan(&p).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn field_only_ising_is_exact() {
        let p = SpinProtocolParams::ising_transverse(3, 0.0, 0.6, 1.0, 1);
        let u = ising_circuit(&p).unwrap().unitary().unwrap();
        let h = ising_hamiltonian(&p).unwrap().assemble().unwrap();
        let exact = h.propagator().unwrap().unitary(1.0);
        assert!(phase_aligned_distance(u.matrix(), &exact) < 1e-12);
    }

    #[test]
    fn transverse_ising_error_falls_as_one_over_l() {
        let p = SpinProtocolParams::ising_transverse(3, 1.0, 1.0, 1.0, 4);
        let plan = ising_trotter_plan(&p).unwrap();
        let ls = [4usize, 8, 16, 32, 64];
        let pts = crate::trotter::scan(&plan, &ls).unwrap();
        let xs: Vec<f64> = ls.iter().map(|&l| l as f64).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.digital_error).collect();
        let slope = crate::trotter::loglog_slope(&xs, &ys);
        assert!((slope + 1.0).abs() < 0.15, "slope {slope}");
        let c = ising_circuit(&p).unwrap().unitary().unwrap();
        assert!((c.matrix() - trotter_unitary(&plan).unwrap()).norm() < 1e-11);
    }

    #[test]
    fn frustrated_ising_ground_state_is_degenerate() {
        let p = SpinProtocolParams::ising(3, 1.0, 1.0, 1);
        let h = ising_hamiltonian(&p).unwrap().assemble().unwrap();
        let mut ev: Vec<f64> = h.propagator().unwrap().eigenvalues().iter().cloned().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ev[1] - ev[0]).abs() < 1e-10);
    }

    #[test]
    fn hubbard_pauli_form_matches_jordan_wigner() {
        let p = HubbardParams::new(0.8, 1.7, 1.0, 1);
        let space = HilbertSpec::qubits(3).unwrap();
        let jw = hubbard_jordan_wigner(&p).unwrap().to_matrix(&space).unwrap();
        let spin = hubbard_spin_hamiltonian(&p).unwrap().assemble().unwrap();
        let diff = jw.matrix() - spin.matrix() - CMatrix::identity(8, 8) * real(p.u / 2.0);
        assert!(spectral_norm(&diff) < 1e-12);
    }

    #[test]
    fn hubbard_hopping_spectrum_is_symmetric() {
        let p = HubbardParams::new(1.0, 0.0, 1.0, 1);
        let h = hubbard_spin_hamiltonian(&p).unwrap().assemble().unwrap();
        let mut ev: Vec<f64> = h.propagator().unwrap().eigenvalues().iter().cloned().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for i in 0..ev.len() {
            assert!((ev[i] + ev[ev.len() - 1 - i]).abs() < 1e-12);
        }
        let zero = hubbard_spin_hamiltonian(&HubbardParams::new(0.0, 0.0, 1.0, 1))
            .unwrap()
            .assemble()
            .unwrap();
        assert!(zero.matrix().norm() == 0.0);
    }

    #[test]
    fn hubbard_single_step_matches_displayed_product() {
        let p = HubbardParams::new(1.0, 2.0, 0.7, 1);
        let u = hubbard_circuit(&p).unwrap().unitary().unwrap().into_matrix();
        let space = HilbertSpec::qubits(3).unwrap();
        let pm = |c: f64, l: &[(usize, Pauli)]| {
            crate::fermion::pauli_to_matrix(
                &crate::fermion::PauliString::new(real(c), l.iter().copied()),
                &space,
            )
            .unwrap()
            .into_matrix()
        };
        let e = |c: f64, l: &[(usize, Pauli)]| expm_hermitian(&pm(c, l), p.t).unwrap();
        let rot = |axis: Axis, angle: f64, qs: [usize; 2]| {
            let r = crate::gates::rotation(axis, angle);
            crate::hilbert::embed_operator(&r.kronecker(&r), &qs, &space).unwrap()
        };
        use Pauli::Z;
        let (h, uu) = (p.h, p.u);
        // Written left to right, as displayed.
        let product = rot(Axis::Y, FRAC_PI_2, [1, 2])
            * e(h / 2.0, &[(1, Z), (2, Z)])
            * rot(Axis::Y, -FRAC_PI_2, [1, 2])
            * rot(Axis::Y, FRAC_PI_2, [0, 1])
            * e(h / 2.0, &[(0, Z), (1, Z)])
            * rot(Axis::Y, -FRAC_PI_2, [0, 1])
            * rot(Axis::X, -FRAC_PI_2, [1, 2])
            * e(h / 2.0, &[(1, Z), (2, Z)])
            * rot(Axis::X, FRAC_PI_2, [1, 2])
            * rot(Axis::X, -FRAC_PI_2, [0, 1])
            * e(h / 2.0, &[(0, Z), (1, Z)])
            * rot(Axis::X, FRAC_PI_2, [0, 1])
            * e(uu / 4.0, &[(1, Z), (2, Z)])
            * e(uu / 2.0, &[(1, Z)])
            * e(uu / 4.0, &[(2, Z)])
            * e(uu / 4.0, &[(0, Z), (1, Z)])
            * e(uu / 4.0, &[(0, Z)]);
        assert!(phase_aligned_distance(&u, &product) < 1e-12);
    }

    #[test]
    fn hubbard_circuit_fidelity() {
        let p = HubbardParams::new(1.0, 2.0, 1.0, 20);
        let c = hubbard_circuit(&p).unwrap();
        let h = hubbard_spin_hamiltonian(&p).unwrap().assemble().unwrap();
        let space = HilbertSpec::qubits(3).unwrap();
        for levels in [[1, 0, 1], [0, 1, 0], [1, 1, 0]] {
            let s = QuantumState::basis(&space, &levels).unwrap();
            let f =
                state_fidelity(&c.apply(&s).unwrap(), &evolve_exact(&h, p.t, &s).unwrap()).unwrap();
            assert!(f >= 0.999, "{levels:?}: {f}");
        }
    }

    #[test]
    fn hubbard_number_conservation() {
        let mut p = HubbardParams::new(1.0, 2.0, 1.0, 3);
        let d3 = hubbard_number_defect(&p).unwrap();
        p.n = 24;
        let d24 = hubbard_number_defect(&p).unwrap();
        assert!(d3 > 1e-3);
        // The displayed ordering only conserves N as the step count grows.
        assert!(d24 < d3 / 4.0, "{d3} {d24}");
        p.ordering = HubbardOrdering::BondGrouped;
        p.n = 3;
        assert!(hubbard_number_defect(&p).unwrap() < 1e-10);
    }

    #[test]
    fn zero_time_circuits_are_identity() {
        let id = CMatrix::identity(8, 8);
        let cs = [
            heisenberg_circuit(&SpinProtocolParams::heisenberg(3, 1.0, 0.0, 3)).unwrap(),
            ising_circuit(&SpinProtocolParams::ising_transverse(3, 1.0, 1.0, 0.0, 2)).unwrap(),
            hubbard_circuit(&HubbardParams::new(1.0, 2.0, 0.0, 2)).unwrap(),
        ];
        for c in cs {
            assert!(phase_aligned_distance(c.unitary().unwrap().matrix(), &id) < 1e-12);
        }
    }

    #[test]
    fn inhomogeneous_couplings_scale_durations() {
        let p = SpinProtocolParams::heisenberg(3, 1.0, 0.8, 1).with_pair_couplings(vec![0.5, 1.5]);
        let u = heisenberg_circuit(&p).unwrap().unitary().unwrap().into_matrix();
        let plan = heisenberg_trotter_plan(&p).unwrap();
        assert!((u - trotter_unitary(&plan).unwrap()).norm() < 1e-11);
        assert!(heisenberg_circuit(&p.clone().with_pair_couplings(vec![1.0])).is_err());
    }

    #[test]
    fn unsupported_sizes_rejected() {
        assert!(heisenberg_circuit(&SpinProtocolParams::heisenberg(4, 1.0, 1.0, 1)).is_err());
        assert!(ising_circuit(&SpinProtocolParams::heisenberg(2, 1.0, 1.0, 1)).is_err());
    }
}

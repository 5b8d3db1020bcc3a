//! Gate unitaries, circuits and the Mølmer-Sørensen sandwich.

use std::f64::consts::FRAC_PI_4;

use crate::error::{invalid, Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::hilbert::{
    apply_local, embed_operator, qubit_operator, HilbertSpec, OperatorMatrix, QuantumState,
    QubitOp, SubsystemKind,
};
use crate::linalg::{c, real, unitarity_defect, CMatrix, Propagator, C64};

pub const UNITARY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn pauli(self) -> CMatrix {
        qubit_operator(match self {
            Axis::X => QubitOp::X,
            Axis::Y => QubitOp::Y,
            Axis::Z => QubitOp::Z,
        })
    }
}

/// `R_σ(θ) = exp(−iθσ/2)`.
pub fn rotation(axis: Axis, angle: f64) -> CMatrix {
    CMatrix::identity(2, 2) * real((angle / 2.0).cos()) - axis.pauli() * c(0.0, (angle / 2.0).sin())
}

/// `diag(1, e^{iφ}, e^{iφ}, 1)`.
pub fn cz_phi(phi: f64) -> CMatrix {
    let p = C64::from_polar(1.0, phi);
    CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![real(1.0), p, p, real(1.0)]))
}

fn collective_sum(k: usize, local: &CMatrix) -> CMatrix {
    let d = 1usize << k;
    let mut s = CMatrix::zeros(d, d);
    for i in 0..k {
        let mut term = CMatrix::identity(1, 1);
        for j in 0..k {
            term = if i == j {
                term.kronecker(local)
            } else {
                term.kronecker(&CMatrix::identity(2, 2))
            };
        }
        s += term;
    }
    s
}

/// `exp[−iθ(cosφ S_x + sinφ S_y)²/4]` on `k` qubits.
pub fn ms_gate(theta: f64, phi: f64, k: usize) -> Result<CMatrix> {
    if k < 2 {
        return invalid(format!("MS gate needs at least 2 qubits, got {k}"));
    }
    let sx = collective_sum(k, &qubit_operator(QubitOp::X));
    let sy = collective_sum(k, &qubit_operator(QubitOp::Y));
    let s = sx * real(phi.cos()) + sy * real(phi.sin());
    Ok(Propagator::new(&(&s * &s))?.unitary(theta / 4.0))
}

/// `exp[−i(π/4) Σ_{i<j} σᵢᶻσⱼᶻ]`, diagonal.
pub fn u_sz2(k: usize) -> Result<CMatrix> {
    if k < 2 {
        return invalid(format!("U_Sz2 needs at least 2 qubits, got {k}"));
    }
    let d = 1usize << k;
    let diag = nalgebra::DVector::from_fn(d, |idx, _| {
        // Bit k−1−q of idx is the level of qubit q; σz = +1 on |e⟩ = level 1.
        let z: Vec<f64> = (0..k)
            .map(|q| if (idx >> (k - 1 - q)) & 1 == 1 { 1.0 } else { -1.0 })
            .collect();
        let mut s = 0.0;
        for i in 0..k {
            for j in i + 1..k {
                s += z[i] * z[j];
            }
        }
        C64::from_polar(1.0, -FRAC_PI_4 * s)
    });
    Ok(CMatrix::from_diagonal(&diag))
}

/// Axis of the local gate in the sandwich: y for odd `k`, x for even `k`.
pub fn ms_sandwich_axis(k: usize) -> Axis {
    if k % 2 == 1 {
        Axis::Y
    } else {
        Axis::X
    }
}

/// Sign `s` with `φ′ = sφ` such that `U_Sz2 · exp(−iφ′σ₁) · U_Sz2†` equals
/// `exp[iφ σ₁ʸ σ₂ᶻ ⋯ σₖᶻ]`: `−1` for `k ≡ 1, 2 (mod 4)`, `+1` for `k ≡ 0, 3 (mod 4)`.
pub fn ms_sandwich_sign(k: usize) -> f64 {
    match k % 4 {
        1 | 2 => -1.0,
        _ => 1.0,
    }
}

fn single_on_first(k: usize, local: &CMatrix) -> CMatrix {
    local.kronecker(&CMatrix::identity(1 << (k - 1), 1 << (k - 1)))
}

/// `U_Sz2 · exp(−iφ′σ₁^{y|x}) · U_Sz2†`, equal to `exp[iφ σ₁ʸ⊗σ₂ᶻ⊗⋯⊗σₖᶻ]`.
pub fn ms_sandwich(phi: f64, k: usize) -> Result<CMatrix> {
    ms_sandwich_with_sign(phi, k, ms_sandwich_sign(k))
}

/// The sandwich with an explicit `φ′/φ` sign, for comparing sign tables.
pub fn ms_sandwich_with_sign(phi: f64, k: usize, sign: f64) -> Result<CMatrix> {
    let u = u_sz2(k)?;
    let axis = ms_sandwich_axis(k);
    // exp(−iφ′σ) = R_σ(2φ′)
    let mid = single_on_first(k, &rotation(axis, 2.0 * sign * phi));
    Ok(&u * mid * u.adjoint())
}

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    /// `R_axis(angle)` on each target; `collective` marks one simultaneous pulse.
    Rotation {
        axis: Axis,
        angle: f64,
        targets: Vec<usize>,
        collective: bool,
    },
    CZPhi {
        phi: f64,
        pair: (usize, usize),
    },
    MS {
        theta: f64,
        phi: f64,
        targets: Vec<usize>,
    },
    /// `exp(−iπσx/2)` on each target.
    QubitFlip { targets: Vec<usize> },
    /// `exp(−i H duration)`.
    AnalogBlock {
        hamiltonian: Hamiltonian,
        duration: f64,
        label: String,
    },
    /// Explicit unitary on `sites` (all sites when empty).
    CustomUnitary {
        matrix: CMatrix,
        sites: Vec<usize>,
        label: String,
    },
}

impl Gate {
    pub fn rotation(axis: Axis, angle: f64, targets: Vec<usize>) -> Self {
        let collective = targets.len() > 1;
        Gate::Rotation {
            axis,
            angle,
            targets,
            collective,
        }
    }

    pub fn analog(hamiltonian: Hamiltonian, duration: f64, label: impl Into<String>) -> Self {
        Gate::AnalogBlock {
            hamiltonian,
            duration,
            label: label.into(),
        }
    }

    pub fn flip(targets: Vec<usize>) -> Self {
        Gate::QubitFlip { targets }
    }

    pub fn name(&self) -> String {
        match self {
            Gate::Rotation { axis, angle, .. } => format!("R{axis:?}({angle:.4})"),
            Gate::CZPhi { phi, .. } => format!("CZ({phi:.4})"),
            Gate::MS { theta, phi, .. } => format!("MS({theta:.4},{phi:.4})"),
            Gate::QubitFlip { .. } => "flip".into(),
            Gate::AnalogBlock { label, .. } => format!("analog:{label}"),
            Gate::CustomUnitary { label, .. } => format!("custom:{label}"),
        }
    }

    /// Qubits or subsystems the gate acts on (empty for whole-space gates).
    pub fn sites(&self) -> Vec<usize> {
        match self {
            Gate::Rotation { targets, .. }
            | Gate::MS { targets, .. }
            | Gate::QubitFlip { targets } => targets.clone(),
            Gate::CZPhi { pair, .. } => vec![pair.0, pair.1],
            Gate::AnalogBlock { .. } => Vec::new(),
            Gate::CustomUnitary { sites, .. } => sites.clone(),
        }
    }

    fn check_qubits(&self, space: &HilbertSpec) -> Result<()> {
        let qubit_gate = !matches!(self, Gate::AnalogBlock { .. } | Gate::CustomUnitary { .. });
        let sites = self.sites();
        for (i, &s) in sites.iter().enumerate() {
            if qubit_gate {
                space.require_kind(s, SubsystemKind::Qubit, &self.name())?;
            } else {
                space.subsystem(s)?;
            }
            if sites[..i].contains(&s) {
                return invalid(format!("gate {} lists site {s} twice", self.name()));
            }
        }
        Ok(())
    }

    /// Local matrix and its sites; `None` for gates acting on the whole space.
    fn local(&self) -> Result<Option<(CMatrix, Vec<usize>)>> {
        let per_qubit = |m: CMatrix, targets: &[usize]| {
            let local = targets
                .iter()
                .fold(CMatrix::identity(1, 1), |acc, _| acc.kronecker(&m));
            Some((local, targets.to_vec()))
        };
        Ok(match self {
            Gate::Rotation {
                axis,
                angle,
                targets,
                ..
            } => per_qubit(rotation(*axis, *angle), targets),
            Gate::QubitFlip { targets } => {
                per_qubit(rotation(Axis::X, std::f64::consts::PI), targets)
            }
            Gate::CZPhi { phi, pair } => Some((cz_phi(*phi), vec![pair.0, pair.1])),
            Gate::MS {
                theta,
                phi,
                targets,
            } => Some((ms_gate(*theta, *phi, targets.len())?, targets.clone())),
            Gate::CustomUnitary { matrix, sites, .. } if !sites.is_empty() => {
                Some((matrix.clone(), sites.clone()))
            }
            _ => None,
        })
    }

    /// Full-space unitary.
    pub fn unitary(&self, space: &HilbertSpec) -> Result<CMatrix> {
        self.check_qubits(space)?;
        if let Some((local, sites)) = self.local()? {
            check_unitary(&local)?;
            return embed_operator(&local, &sites, space);
        }
        match self {
            Gate::AnalogBlock {
                hamiltonian,
                duration,
                ..
            } => {
                if hamiltonian.space() != space {
                    return Err(Error::SpaceMismatch);
                }
                Ok(hamiltonian.assemble()?.propagator()?.unitary(*duration))
            }
            Gate::CustomUnitary { matrix, .. } => {
                if matrix.nrows() != space.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: space.dim(),
                        found: matrix.nrows(),
                    });
                }
                check_unitary(matrix)?;
                Ok(matrix.clone())
            }
            _ => unreachable!(),
        }
    }
}

fn check_unitary(u: &CMatrix) -> Result<()> {
    let d = unitarity_defect(u);
    if d > UNITARY_TOL {
        Err(Error::NonUnitary(d))
    } else {
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    space: HilbertSpec,
    gates: Vec<Gate>,
}

/// Reuses eigendecompositions of repeated analog blocks within one evaluation.
#[derive(Default)]
struct PropagatorCache<'a> {
    entries: Vec<(&'a Hamiltonian, Propagator)>,
}

impl<'a> PropagatorCache<'a> {
    fn get(&mut self, h: &'a Hamiltonian) -> Result<&Propagator> {
        if let Some(i) = self.entries.iter().position(|(k, _)| *k == h) {
            return Ok(&self.entries[i].1);
        }
        let p = h.assemble()?.propagator()?;
        self.entries.push((h, p));
        Ok(&self.entries.last().unwrap().1)
    }
}

impl Circuit {
    pub fn new(space: &HilbertSpec) -> Self {
        Self {
            space: space.clone(),
            gates: Vec::new(),
        }
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.check_qubits(&self.space)?;
        if let Gate::AnalogBlock { hamiltonian, .. } = &gate {
            if hamiltonian.space() != &self.space {
                return Err(Error::SpaceMismatch);
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, other: &Circuit) -> Result<()> {
        if other.space != self.space {
            return Err(Error::SpaceMismatch);
        }
        self.gates.extend(other.gates.iter().cloned());
        Ok(())
    }

    /// This circuit repeated `n` times.
    pub fn repeated(&self, n: usize) -> Circuit {
        let mut gates = Vec::with_capacity(self.gates.len() * n);
        for _ in 0..n {
            gates.extend(self.gates.iter().cloned());
        }
        Circuit {
            space: self.space.clone(),
            gates,
        }
    }

    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Ordered product of gate unitaries, earliest gate rightmost.
    pub fn unitary(&self) -> Result<OperatorMatrix> {
        let d = self.space.dim();
        let mut u = CMatrix::identity(d, d);
        let mut cache = PropagatorCache::default();
        for g in &self.gates {
            let gu = match g {
                Gate::AnalogBlock {
                    hamiltonian,
                    duration,
                    ..
                } => cache.get(hamiltonian)?.unitary(*duration),
                other => other.unitary(&self.space)?,
            };
            u = gu * u;
        }
        OperatorMatrix::new(self.space.clone(), u)
    }

    pub fn apply(&self, s: &QuantumState) -> Result<QuantumState> {
        let mut out = s.clone();
        self.apply_with(&mut out, |_, _| Ok(()))?;
        Ok(out)
    }

    /// Applies the gates in order, calling `after(index, state)` after each gate.
    pub fn apply_with(
        &self,
        s: &mut QuantumState,
        mut after: impl FnMut(usize, &QuantumState) -> Result<()>,
    ) -> Result<()> {
        if s.space() != &self.space {
            return Err(Error::SpaceMismatch);
        }
        let mut cache = PropagatorCache::default();
        for (i, g) in self.gates.iter().enumerate() {
            let v = match g {
                Gate::AnalogBlock {
                    hamiltonian,
                    duration,
                    ..
                } => cache.get(hamiltonian)?.apply(*duration, s.amplitudes()),
                other => match other.local()? {
                    Some((local, sites)) => {
                        check_unitary(&local)?;
                        apply_local(&local, &sites, &self.space, s.amplitudes())?
                    }
                    None => other.unitary(&self.space)? * s.amplitudes(),
                },
            };
            *s = QuantumState::from_parts_unchecked(self.space.clone(), v);
            after(i, s)?;
        }
        Ok(())
    }
}

pub fn circuit_unitary(c: &Circuit) -> Result<OperatorMatrix> {
    c.unitary()
}

pub fn apply(c: &Circuit, s: &QuantumState) -> Result<QuantumState> {
    c.apply(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermion::{pauli_to_matrix, Pauli, PauliString};
    use crate::hamiltonian::{Factor, LocalOp, Term};
    use crate::linalg::{expm_hermitian, phase_aligned_distance, spectral_norm};
    use std::f64::consts::PI;

    fn yzz(k: usize) -> CMatrix {
        let mut letters = vec![(0, Pauli::Y)];
        letters.extend((1..k).map(|q| (q, Pauli::Z)));
        let p = PauliString::new(real(1.0), letters);
        pauli_to_matrix(&p, &HilbertSpec::qubits(k).unwrap())
            .unwrap()
            .into_matrix()
    }

    #[test]
    fn cz_phi_is_zz_exponential_times_phase() {
        let zz = Pauli::Z.matrix().kronecker(&Pauli::Z.matrix());
        for phi in [0.0, 0.3, 1.7, PI] {
            let lhs = cz_phi(phi);
            let rhs = expm_hermitian(&zz, phi / 2.0).unwrap() * C64::from_polar(1.0, phi / 2.0);
            assert!((lhs - rhs).norm() < 1e-13);
        }
        assert_eq!(cz_phi(0.0), CMatrix::identity(4, 4));
    }

    #[test]
    fn ms_gate_entangles_two_qubits() {
        let u = ms_gate(PI / 2.0, 0.0, 2).unwrap();
        let out = u.column(0).into_owned();
        // Schmidt coefficients of the 2x2 amplitude matrix.
        let m = CMatrix::from_row_slice(2, 2, &[out[0], out[1], out[2], out[3]]);
        let sv = m.svd(false, false).singular_values;
        for s in sv.iter() {
            assert!((s - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        }
        assert!((ms_gate(0.0, 0.3, 3).unwrap() - CMatrix::identity(8, 8)).norm() < 1e-13);
        assert!(ms_gate(1.0, 0.0, 1).is_err());
    }

    #[test]
    fn u_sz2_is_unitary_and_matches_exponential() {
        for k in 2..5 {
            let u = u_sz2(k).unwrap();
            assert!(unitarity_defect(&u) < 1e-14);
            let space = HilbertSpec::qubits(k).unwrap();
            let mut s = CMatrix::zeros(1 << k, 1 << k);
            for i in 0..k {
                for j in i + 1..k {
                    s += pauli_to_matrix(
                        &PauliString::new(real(1.0), [(i, Pauli::Z), (j, Pauli::Z)]),
                        &space,
                    )
                    .unwrap()
                    .into_matrix();
                }
            }
            assert!((u - expm_hermitian(&s, FRAC_PI_4).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn sandwich_sign_table() {
        for k in 2..=5 {
            for phi in [0.1, FRAC_PI_4, 1.3] {
                let target = expm_hermitian(&yzz(k), -phi).unwrap();
                let d = spectral_norm(&(ms_sandwich(phi, k).unwrap() - &target));
                assert!(d < 1e-9, "k={k} phi={phi} distance {d}");
                let flipped = ms_sandwich_with_sign(phi, k, -ms_sandwich_sign(k)).unwrap();
                assert!(spectral_norm(&(flipped - target)) > 1e-2);
            }
        }
    }

    #[test]
    fn inverse_rotations_cancel() {
        let space = HilbertSpec::qubits(2).unwrap();
        let mut c = Circuit::new(&space);
        c.push(Gate::rotation(Axis::X, PI / 2.0, vec![1])).unwrap();
        c.push(Gate::rotation(Axis::X, -PI / 2.0, vec![1])).unwrap();
        let u = c.unitary().unwrap();
        assert!((u.matrix() - CMatrix::identity(4, 4)).norm() < 1e-13);
        assert_eq!(
            Circuit::new(&space).unitary().unwrap().matrix(),
            &CMatrix::identity(4, 4)
        );
    }

    #[test]
    fn apply_matches_unitary() {
        let space = HilbertSpec::new(vec![
            crate::hilbert::Subsystem::qubit(),
            crate::hilbert::Subsystem::qubit(),
            crate::hilbert::Subsystem::boson(3),
        ])
        .unwrap();
        let h = Hamiltonian::from_terms(
            &space,
            vec![Term::new(
                0.4,
                vec![Factor::new(0, LocalOp::SigmaPlus), Factor::new(2, LocalOp::Annihilation)],
            )
            .with_hc()],
        )
        .unwrap();
        let mut c = Circuit::new(&space);
        c.push(Gate::rotation(Axis::Y, 0.7, vec![0, 1])).unwrap();
        c.push(Gate::CZPhi { phi: 0.4, pair: (1, 0) }).unwrap();
        c.push(Gate::analog(h, 1.3, "jc")).unwrap();
        c.push(Gate::MS { theta: 0.5, phi: 0.2, targets: vec![0, 1] }).unwrap();
        c.push(Gate::flip(vec![1])).unwrap();
        let s = QuantumState::basis(&space, &[0, 1, 1]).unwrap();
        let a = c.apply(&s).unwrap();
        let b = s.apply_matrix(c.unitary().unwrap().matrix()).unwrap();
        assert!((a.amplitudes() - b.amplitudes()).norm() < 1e-13);
    }

    #[test]
    fn invalid_targets_rejected() {
        let space = HilbertSpec::new(vec![
            crate::hilbert::Subsystem::qubit(),
            crate::hilbert::Subsystem::boson(3),
        ])
        .unwrap();
        let mut c = Circuit::new(&space);
        assert!(c.push(Gate::flip(vec![1])).is_err());
        assert!(c.push(Gate::flip(vec![4])).is_err());
        let bad = Gate::CustomUnitary {
            matrix: CMatrix::from_element(6, 6, real(1.0)),
            sites: vec![],
            label: "bad".into(),
        };
        c.push(bad).unwrap();
        assert!(matches!(c.unitary(), Err(Error::NonUnitary(_))));
    }

    #[test]
    fn flip_is_pi_rotation_about_x() {
        let f = rotation(Axis::X, PI);
        let expected = qubit_operator(QubitOp::X) * c(0.0, -1.0);
        assert!((f - expected).norm() < 1e-15);
        assert!(phase_aligned_distance(&rotation(Axis::X, PI), &qubit_operator(QubitOp::X)) < 1e-15);
    }
}

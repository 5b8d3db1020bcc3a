//! Fermion-antifermion pair coupled to a discretized bosonic continuum: comoving wave
//! packets, the interaction Hamiltonian and the MS-sandwich coupling circuit.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::fermion::{ladder_matrix, Ladder, ModeLayout, Pauli, PauliString, Species};
use crate::frames::TimeDependent;
use crate::gates::{Circuit, Gate};
use crate::hilbert::{
    boson_operator, embed_operator, BosonOp, HilbertSpec, OperatorMatrix, Subsystem,
};
use crate::linalg::{c, real, CMatrix, Propagator, C64};

/// Amplitude below which a packet counts as vanished at the grid edge.
pub const EDGE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Dispersion {
    Massless,
    Massive(f64),
}

impl Dispersion {
    pub fn omega(self, k: f64) -> f64 {
        match self {
            Dispersion::Massless => k.abs(),
            Dispersion::Massive(m) => (k * k + m * m).sqrt(),
        }
    }
}

/// Uniform momentum grid `p_j = p_min + j Δp`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumGrid {
    pub momenta: Vec<f64>,
    pub dp: f64,
    pub dispersion: Dispersion,
}

impl MomentumGrid {
    pub fn uniform(p_min: f64, p_max: f64, n: usize, dispersion: Dispersion) -> Result<Self> {
        if n < 2 || !(p_max > p_min) {
            return invalid(format!("bad momentum grid [{p_min}, {p_max}] with {n} points"));
        }
        let dp = (p_max - p_min) / (n - 1) as f64;
        Ok(Self {
            momenta: (0..n).map(|j| p_min + j as f64 * dp).collect(),
            dp,
            dispersion,
        })
    }

    pub fn len(&self) -> usize {
        self.momenta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.momenta.is_empty()
    }

    pub fn omega(&self, j: usize) -> f64 {
        self.dispersion.omega(self.momenta[j])
    }
}

/// Discrete bosonic modes standing in for the continuum; each mode is one boson.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeGrid {
    pub momenta: Vec<f64>,
    pub weights: Vec<f64>,
    pub couplings: Vec<f64>,
    pub dispersion: Dispersion,
}

impl ModeGrid {
    pub fn new(momenta: Vec<f64>, weights: Vec<f64>, couplings: Vec<f64>, dispersion: Dispersion) -> Result<Self> {
        if momenta.len() != weights.len() || momenta.len() != couplings.len() || momenta.is_empty() {
            return invalid("mode grid arrays must be non-empty and of equal length");
        }
        if momenta.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("mode momenta must be strictly increasing");
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return invalid("mode weights must be positive");
        }
        Ok(Self {
            momenta,
            weights,
            couplings,
            dispersion,
        })
    }

    /// `n` modes in `[k_min, k_max]` with `g_j = λ(k_j) √(ω_j/2) √Δk`, so that
    /// `∫dk λ_k √(ω_k/2) a_k` becomes `Σ_j g_j a_j` with unit-normalized `a_j`.
    pub fn from_continuum(
        k_min: f64,
        k_max: f64,
        n: usize,
        dispersion: Dispersion,
        lambda: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let (momenta, dk) = if n == 1 {
            (vec![0.5 * (k_min + k_max)], (k_max - k_min).max(f64::MIN_POSITIVE))
        } else {
            let g = MomentumGrid::uniform(k_min, k_max, n, dispersion)?;
            (g.momenta, g.dp)
        };
        let couplings = momenta
            .iter()
            .map(|&k| lambda(k) * (dispersion.omega(k) / 2.0).sqrt() * dk.sqrt())
            .collect();
        Self::new(momenta.clone(), vec![dk; momenta.len()], couplings, dispersion)
    }

    /// Zeroes couplings outside `[k_lo, k_hi]`, a band filter on the line.
    pub fn with_band(mut self, k_lo: f64, k_hi: f64) -> Self {
        for (g, k) in self.couplings.iter_mut().zip(&self.momenta) {
            if *k < k_lo || *k > k_hi {
                *g = 0.0;
            }
        }
        self
    }

    pub fn len(&self) -> usize {
        self.momenta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.momenta.is_empty()
    }
}

/// Wave packet amplitudes `Ω(p)` on a momentum grid, `Σ|Ω|²Δp = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct WavePacket {
    pub center: f64,
    pub width: f64,
    pub profile: Vec<C64>,
}

impl WavePacket {
    /// `Ω(p) ∝ exp[−(p − p̄)²/(4σ²)]`, so `|Ω|²` has standard deviation `σ`.
    pub fn gaussian(grid: &MomentumGrid, center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return invalid(format!("packet width must be positive, got {width}"));
        }
        let profile: Vec<C64> = grid
            .momenta
            .iter()
            .map(|p| real((-(p - center).powi(2) / (4.0 * width * width)).exp()))
            .collect();
        let mut w = Self {
            center,
            width,
            profile,
        };
        w.normalize(grid)?;
        Ok(w)
    }

    fn normalize(&mut self, grid: &MomentumGrid) -> Result<()> {
        let n = self.norm_sqr(grid).sqrt();
        if n < 1e-300 {
            return invalid("packet vanishes on the grid");
        }
        for x in &mut self.profile {
            *x /= n;
        }
        Ok(())
    }

    pub fn norm_sqr(&self, grid: &MomentumGrid) -> f64 {
        self.profile.iter().map(|x| x.norm_sqr()).sum::<f64>() * grid.dp
    }

    /// `Σ_p Δp Ω_a*(p) Ω_b(p)`.
    pub fn overlap(&self, other: &WavePacket, grid: &MomentumGrid) -> C64 {
        self.profile
            .iter()
            .zip(&other.profile)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            * grid.dp
    }

    pub fn check_support(&self) -> Result<()> {
        let edge = self.profile[0].norm().max(self.profile[self.profile.len() - 1].norm());
        if edge > EDGE_TOL {
            Err(Error::PacketSupport(edge))
        } else {
            Ok(())
        }
    }
}

/// Gram-Schmidt in the `Σ Δp` inner product, in the given order.
pub fn orthonormalize(packets: &[WavePacket], grid: &MomentumGrid) -> Result<Vec<WavePacket>> {
    let mut out: Vec<WavePacket> = Vec::with_capacity(packets.len());
    for p in packets {
        let mut w = p.clone();
        for q in &out {
            let proj = q.overlap(&w, grid);
            for (x, y) in w.profile.iter_mut().zip(&q.profile) {
                *x -= proj * y;
            }
        }
        w.normalize(grid)?;
        out.push(w);
    }
    Ok(out)
}

/// `Λ₁ = (2π)^{-1/2} Σ_p Δp Ω(p) e^{i(px−ω_p t)}/√(2ω_p)` and `Λ₂`, the same sum with the
/// conjugate phase.
pub fn comoving_overlap(w: &WavePacket, x: f64, t: f64, grid: &MomentumGrid) -> Result<(C64, C64)> {
    if w.profile.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: w.profile.len(),
        });
    }
    w.check_support()?;
    let mut l1 = C64::new(0.0, 0.0);
    let mut l2 = C64::new(0.0, 0.0);
    for (j, (&p, &om)) in grid.momenta.iter().zip(&w.profile).enumerate() {
        let wp = grid.omega(j);
        if wp <= 0.0 {
            return invalid("fermion dispersion vanishes on the grid; use a massive dispersion");
        }
        let s = grid.dp / (2.0 * wp).sqrt();
        let phase = p * x - wp * t;
        l1 += om * C64::from_polar(s, phase);
        l2 += om * C64::from_polar(s, -phase);
    }
    let norm = 1.0 / (2.0 * PI).sqrt();
    Ok((l1 * norm, l2 * norm))
}

/// Mode operator `b_in†(t) = Σ_p √Δp Ω(p) e^{−iω_p t} b_p†` on a register of one qubit per
/// grid momentum (Jordan-Wigner ordered).
pub fn comoving_creation(w: &WavePacket, grid: &MomentumGrid, t: f64) -> Result<CMatrix> {
    let layout = ModeLayout::new(grid.len(), 0);
    let space = HilbertSpec::qubits(grid.len())?;
    let mut m = CMatrix::zeros(space.dim(), space.dim());
    for (j, om) in w.profile.iter().enumerate() {
        let coeff = om * C64::from_polar(grid.dp.sqrt(), -grid.omega(j) * t);
        m += ladder_matrix(&Ladder::create(j), layout, &space)? * coeff;
    }
    Ok(m)
}

/// Qubits `0, 1` hold the fermion/antifermion pair, followed by one boson per mode.
pub fn scattering_space(n_qubits: usize, modes: usize, fock: usize) -> Result<HilbertSpec> {
    let mut subs = vec![Subsystem::qubit(); n_qubits];
    subs.extend(std::iter::repeat_n(Subsystem::boson(fock), modes));
    HilbertSpec::new(subs)
}

/// `i Σ_j g_j (a_j† e^{−ik_j x} − a_j e^{ik_j x})`, Hermitian, on the modes after
/// `first_mode`.
pub fn continuum_coupling(grid: &ModeGrid, x: f64, space: &HilbertSpec, first_mode: usize) -> Result<CMatrix> {
    let d = space.dim();
    let mut m = CMatrix::zeros(d, d);
    for (j, (&k, &g)) in grid.momenta.iter().zip(&grid.couplings).enumerate() {
        if g == 0.0 {
            continue;
        }
        let site = first_mode + j;
        let fock = space.subsystem(site)?.dim;
        let ad = boson_operator(BosonOp::Creation, fock)?;
        let cpl = ad * C64::from_polar(g, -k * x) * c(0.0, 1.0);
        let herm = &cpl + cpl.adjoint();
        m += embed_operator(&herm, &[site], space)?;
    }
    Ok(m)
}

/// The four pair bilinears `b†b, b†d†, d b, d d†` on qubits `0, 1` of `space`.
pub fn pair_bilinears(space: &HilbertSpec) -> Result<[CMatrix; 4]> {
    let layout = ModeLayout::new(1, 1);
    let reg = HilbertSpec::qubits(2)?;
    let b = ladder_matrix(&Ladder::annihilate(0), layout, &reg)?;
    let d = ladder_matrix(&Ladder::annihilate(0).of(Species::Antifermion), layout, &reg)?;
    let (bd, dd) = (b.adjoint(), d.adjoint());
    let emb = |m: CMatrix| embed_operator(&m, &[0, 1], space);
    Ok([emb(&bd * &b)?, emb(&bd * &dd)?, emb(&d * &b)?, emb(&d * &dd)?])
}

/// Interaction Hamiltonian of the pair and the continuum with the position integral
/// replaced by a sum over `x_grid` with uniform weights.
#[derive(Clone, Debug)]
pub struct ScatteringHamiltonian {
    space: HilbertSpec,
    fermion_grid: MomentumGrid,
    fermion: WavePacket,
    antifermion: WavePacket,
    x_grid: Vec<f64>,
    dx: f64,
    /// Per position, the four bilinears multiplied by the continuum coupling there.
    blocks: Vec<[CMatrix; 4]>,
}

impl ScatteringHamiltonian {
    pub fn new(
        modes: &ModeGrid,
        fermion_grid: &MomentumGrid,
        packets: (&WavePacket, &WavePacket),
        x_grid: &[f64],
        fock: usize,
    ) -> Result<Self> {
        if x_grid.is_empty() {
            return invalid("position grid is empty");
        }
        packets.0.check_support()?;
        packets.1.check_support()?;
        let space = scattering_space(2, modes.len(), fock)?;
        let dx = if x_grid.len() > 1 { x_grid[1] - x_grid[0] } else { 1.0 };
        let bil = pair_bilinears(&space)?;
        let blocks = x_grid
            .iter()
            .map(|&x| {
                let k = continuum_coupling(modes, x, &space, 2)?;
                Ok([&bil[0] * &k, &bil[1] * &k, &bil[2] * &k, &bil[3] * &k])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            space,
            fermion_grid: fermion_grid.clone(),
            fermion: packets.0.clone(),
            antifermion: packets.1.clone(),
            x_grid: x_grid.to_vec(),
            dx,
            blocks,
        })
    }

    pub fn try_matrix_at(&self, t: f64) -> Result<CMatrix> {
        let d = self.space.dim();
        let mut h = CMatrix::zeros(d, d);
        for (&x, blk) in self.x_grid.iter().zip(&self.blocks) {
            let (l1, _) = comoving_overlap(&self.fermion, x, t, &self.fermion_grid)?;
            let (_, l2) = comoving_overlap(&self.antifermion, x, t, &self.fermion_grid)?;
            let w = [
                real(l1.norm_sqr()),
                l1.conj() * l2,
                l2.conj() * l1,
                real(l2.norm_sqr()),
            ];
            for (wi, m) in w.iter().zip(blk) {
                h += m * (wi * self.dx);
            }
        }
        Ok(h)
    }

    pub fn pair_number(&self) -> Result<OperatorMatrix> {
        let layout = ModeLayout::new(1, 1);
        let reg = HilbertSpec::qubits(2)?;
        let b = ladder_matrix(&Ladder::annihilate(0), layout, &reg)?;
        let d = ladder_matrix(&Ladder::annihilate(0).of(Species::Antifermion), layout, &reg)?;
        let n = b.adjoint() * b + d.adjoint() * d;
        OperatorMatrix::embed(&self.space, &n, &[0, 1])
    }
}

impl TimeDependent for ScatteringHamiltonian {
    fn space(&self) -> &HilbertSpec {
        &self.space
    }

    fn matrix_at(&self, t: f64) -> CMatrix {
        // Packet support was checked on construction, so evaluation cannot fail.
        self.try_matrix_at(t).expect("packets validated on construction")
    }

    fn max_frequency(&self) -> f64 {
        2.0 * (0..self.fermion_grid.len())
            .map(|j| self.fermion_grid.omega(j))
            .fold(0.0, f64::max)
    }
}

/// The Pauli string `P` with `U_MS(−π/2,0) e^{−φ σᶻ_q B} U_MS(π/2,0) = e^{−φ P B}` on `k`
/// qubits, from `e^{iπ S_x²/8} σᶻ_q e^{−iπ S_x²/8} = σᶻ_q Π_{j≠q}(−i σˣ_q σˣ_j)`.
pub fn ms_sandwich_string(k: usize, q: usize) -> Result<PauliString> {
    if k < 2 || q >= k {
        return invalid(format!("sandwich needs k ≥ 2 qubits and a local qubit below k (k={k}, q={q})"));
    }
    let mut p = PauliString::single(q, Pauli::Z);
    for j in (0..k).filter(|&j| j != q) {
        let f = PauliString::new(c(0.0, -1.0), [(q, Pauli::X), (j, Pauli::X)]);
        p = &p * &f;
    }
    Ok(p)
}

/// The string as printed: `σᶻ ⊗ σˣ ⊗ σˣ ⊗ …` with coefficient `−1`, so `e^{−φPB}` reads
/// `e^{φ(σᶻ⊗σˣ⊗…)B}`.
pub fn displayed_sandwich_string(k: usize) -> PauliString {
    let mut letters = vec![(0, Pauli::Z)];
    letters.extend((1..k).map(|j| (j, Pauli::X)));
    PauliString::new(real(-1.0), letters)
}

/// `exp(−φ P ⊗ B)` with `B = Σ_k g_k(a_k† e^{−ikx} − a_k e^{ikx})`, via the Hermitian
/// generator `−φ P ⊗ (iB)`.
pub fn sandwich_exponential(phi: f64, p: &PauliString, grid: &ModeGrid, x: f64, n_qubits: usize, fock: usize) -> Result<CMatrix> {
    let space = scattering_space(n_qubits, grid.len(), fock)?;
    let ib = continuum_coupling(grid, x, &space, n_qubits)?;
    let pm = p.to_matrix(&space)?.into_matrix();
    let gen = (pm * ib) * real(-phi);
    Ok(Propagator::new(&gen)?.unitary(1.0))
}

/// Settings of the three-gate coupling circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct SandwichSpec {
    pub phi: f64,
    pub n_qubits: usize,
    /// Qubit carrying the local continuum gate.
    pub local_qubit: usize,
    pub x: f64,
    pub fock: usize,
}

/// `U_MS(−π/2, 0) · exp[−φ σᶻ_q B] · U_MS(π/2, 0)` in time order
/// `MS(π/2)`, local gate, `MS(−π/2)`.
pub fn scattering_ms_circuit(spec: &SandwichSpec, grid: &ModeGrid) -> Result<Circuit> {
    if spec.n_qubits < 2 || spec.local_qubit >= spec.n_qubits {
        return invalid("the sandwich needs at least two qubits and a local qubit among them");
    }
    let space = scattering_space(spec.n_qubits, grid.len(), spec.fock)?;
    let qubits: Vec<usize> = (0..spec.n_qubits).collect();
    let local = sandwich_exponential(
        spec.phi,
        &PauliString::single(spec.local_qubit, Pauli::Z),
        grid,
        spec.x,
        spec.n_qubits,
        spec.fock,
    )?;
    let mut c = Circuit::new(&space);
    c.push(Gate::MS { theta: PI / 2.0, phi: 0.0, targets: qubits.clone() })?;
    c.push(Gate::CustomUnitary { matrix: local, sites: Vec::new(), label: "continuum".into() })?;
    c.push(Gate::MS { theta: -PI / 2.0, phi: 0.0, targets: qubits })?;
    Ok(c)
}

/// `exp(−φ P B)` with the string the circuit realizes.
pub fn scattering_ms_target(spec: &SandwichSpec, grid: &ModeGrid) -> Result<CMatrix> {
    let p = ms_sandwich_string(spec.n_qubits, spec.local_qubit)?;
    sandwich_exponential(spec.phi, &p, grid, spec.x, spec.n_qubits, spec.fock)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::evolve_driven;
    use crate::hilbert::{expectation, QuantumState};
    use crate::linalg::{anticommutator, phase_aligned_distance, spectral_norm, unitarity_defect};

    fn fermion_grid(n: usize) -> MomentumGrid {
        MomentumGrid::uniform(-10.0, 10.0, n, Dispersion::Massive(1.0)).unwrap()
    }

    fn one_mode() -> ModeGrid {
        ModeGrid::new(vec![0.7], vec![1.0], vec![0.35], Dispersion::Massless).unwrap()
    }

    #[test]
    fn packets_are_normalized_and_orthonormalized() {
        let g = fermion_grid(64);
        let a = WavePacket::gaussian(&g, -1.0, 0.6).unwrap();
        let b = WavePacket::gaussian(&g, 0.5, 0.6).unwrap();
        assert!((a.norm_sqr(&g) - 1.0).abs() < 1e-10);
        let ortho = orthonormalize(&[a, b], &g).unwrap();
        assert!(ortho[0].overlap(&ortho[1], &g).norm() < 1e-8);
        assert!((ortho[1].norm_sqr(&g) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn symmetric_packet_overlap_is_real_positive() {
        let g = fermion_grid(65);
        let w = WavePacket::gaussian(&g, 0.0, 0.8).unwrap();
        let (l1, l2) = comoving_overlap(&w, 0.0, 0.0, &g).unwrap();
        assert!(l1.re > 0.0 && l1.im.abs() < 1e-14);
        assert!((l1 - l2).norm() < 1e-14);
    }

    #[test]
    fn translation_covariance() {
        let g = fermion_grid(64);
        let w = WavePacket::gaussian(&g, 1.0, 0.7).unwrap();
        let (x, dx, t) = (0.3, 0.45, 0.2);
        let (shifted, _) = comoving_overlap(&w, x + dx, t, &g).unwrap();
        let moved = WavePacket {
            profile: w.profile.iter().zip(&g.momenta).map(|(o, p)| o * C64::from_polar(1.0, p * dx)).collect(),
            ..w.clone()
        };
        let (direct, _) = comoving_overlap(&moved, x, t, &g).unwrap();
        assert!((shifted - direct).norm() < 1e-14);
    }

    #[test]
    fn quadrature_converges_at_least_quadratically() {
        let at = |n: usize| {
            let g = MomentumGrid::uniform(-12.0, 12.0, n, Dispersion::Massive(1.0)).unwrap();
            let w = WavePacket::gaussian(&g, 0.4, 0.9).unwrap();
            comoving_overlap(&w, 0.8, 0.5, &g).unwrap().0
        };
        let reference = at(1025);
        let (e1, e2) = ((at(33) - reference).norm(), (at(65) - reference).norm());
        assert!(e2 <= e1 / 4.0 || e2 < 1e-12, "{e1} {e2}");
    }

    #[test]
    fn packet_outside_grid_rejected() {
        let g = fermion_grid(32);
        let w = WavePacket::gaussian(&g, 9.5, 0.8).unwrap();
        assert!(matches!(comoving_overlap(&w, 0.0, 0.0, &g), Err(Error::PacketSupport(_))));
    }

    #[test]
    fn comoving_modes_anticommute() {
        let g = MomentumGrid::uniform(-3.0, 3.0, 8, Dispersion::Massive(1.0)).unwrap();
        let raw: Vec<WavePacket> = [-1.0, 0.0, 1.0]
            .iter()
            .map(|&p| WavePacket::gaussian(&g, p, 0.8).unwrap())
            .collect();
        let ws = orthonormalize(&raw, &g).unwrap();
        let ops: Vec<CMatrix> = ws.iter().map(|w| comoving_creation(w, &g, 0.4).unwrap()).collect();
        let id = CMatrix::identity(256, 256);
        for (i, a) in ops.iter().enumerate() {
            for (j, b) in ops.iter().enumerate() {
                let ac = anticommutator(&a.adjoint(), b);
                let expected = if i == j { id.clone() } else { CMatrix::zeros(256, 256) };
                assert!(spectral_norm(&(ac - expected)) < 1e-8, "{i} {j}");
            }
        }
    }

    #[test]
    fn zero_coupling_gives_zero_interaction() {
        let g = fermion_grid(48);
        let w = WavePacket::gaussian(&g, 0.0, 0.7).unwrap();
        let modes = ModeGrid::new(vec![0.5, 1.0], vec![0.5, 0.5], vec![0.0, 0.0], Dispersion::Massless).unwrap();
        let h = ScatteringHamiltonian::new(&modes, &g, (&w, &w), &[-1.0, 0.0, 1.0], 3).unwrap();
        assert_eq!(h.matrix_at(0.3).norm(), 0.0);
    }

    #[test]
    fn single_point_matches_hand_assembly() {
        let g = fermion_grid(48);
        let wf = WavePacket::gaussian(&g, 0.5, 0.7).unwrap();
        let wa = WavePacket::gaussian(&g, -0.5, 0.7).unwrap();
        let modes = one_mode();
        let (x, t) = (0.4, 0.25);
        let h = ScatteringHamiltonian::new(&modes, &g, (&wf, &wa), &[x], 4).unwrap();
        let (l1, _) = comoving_overlap(&wf, x, t, &g).unwrap();
        let (_, l2) = comoving_overlap(&wa, x, t, &g).unwrap();
        let reg = HilbertSpec::qubits(2).unwrap();
        let layout = ModeLayout::new(1, 1);
        let b = ladder_matrix(&Ladder::annihilate(0), layout, &reg).unwrap();
        let d = ladder_matrix(&Ladder::annihilate(0).of(Species::Antifermion), layout, &reg).unwrap();
        let f = b.adjoint() * &b * real(l1.norm_sqr())
            + b.adjoint() * d.adjoint() * (l1.conj() * l2)
            + &d * &b * (l2.conj() * l1)
            + &d * d.adjoint() * real(l2.norm_sqr());
        let a = boson_operator(BosonOp::Annihilation, 4).unwrap();
        let k = modes.momenta[0];
        let boson = (a.adjoint() * C64::from_polar(1.0, -k * x) - &a * C64::from_polar(1.0, k * x)) * c(0.0, modes.couplings[0]);
        let expected = f.kronecker(&boson);
        assert!((h.matrix_at(t) - expected).norm() < 1e-13);
        assert!(crate::linalg::hermiticity_defect(&h.matrix_at(t)) < 1e-12);
    }

    #[test]
    fn pair_creation_grows_quadratically() {
        let g = fermion_grid(48);
        let wf = WavePacket::gaussian(&g, 0.5, 0.7).unwrap();
        let wa = WavePacket::gaussian(&g, -0.5, 0.7).unwrap();
        let modes = ModeGrid::from_continuum(0.5, 1.5, 2, Dispersion::Massless, |_| 0.6).unwrap();
        let xs: Vec<f64> = (0..9).map(|i| -2.0 + 0.5 * i as f64).collect();
        let h = ScatteringHamiltonian::new(&modes, &g, (&wf, &wa), &xs, 3).unwrap();
        let vac = QuantumState::basis(h.space(), &[0, 0, 0, 0]).unwrap();
        let n = h.pair_number().unwrap();
        let h0v = h.matrix_at(0.0) * vac.amplitudes();
        // Each created pair contributes two quanta.
        // First order: ⟨N⟩(t) ≈ t² ⟨0|H(0) N H(0)|0⟩.
        let c2 = (n.matrix() * &h0v).dotc(&h0v).re;
        assert!(c2 > 0.0);
        for t in [1e-2, 5e-3] {
            let s = evolve_driven(&h, &vac, t, Some(t / 50.0)).unwrap();
            let occ = expectation(&s, &n).unwrap().re;
            assert!((occ / (t * t) - c2).abs() < 2e-2 * c2, "t={t}: {} vs {c2}", occ / (t * t));
        }
    }

    #[test]
    fn grid_refinement_changes_little() {
        let run = |nf: usize, nx: usize| {
            let g = fermion_grid(nf);
            let wf = WavePacket::gaussian(&g, 0.5, 0.7).unwrap();
            let wa = WavePacket::gaussian(&g, -0.5, 0.7).unwrap();
            let modes = ModeGrid::from_continuum(0.5, 1.5, 2, Dispersion::Massless, |_| 0.6).unwrap();
            let xs: Vec<f64> = (0..nx).map(|i| -3.0 + 6.0 * i as f64 / (nx - 1) as f64).collect();
            let h = ScatteringHamiltonian::new(&modes, &g, (&wf, &wa), &xs, 3).unwrap();
            let vac = QuantumState::basis(h.space(), &[0, 0, 0, 0]).unwrap();
            let s = evolve_driven(&h, &vac, 0.3, None).unwrap();
            expectation(&s, &h.pair_number().unwrap()).unwrap().re
        };
        let (coarse, fine) = (run(48, 25), run(96, 49));
        assert!((coarse - fine).abs() < 0.01 * fine, "{coarse} {fine}");
    }

    #[test]
    fn sandwich_strings() {
        assert_eq!(ms_sandwich_string(2, 0).unwrap(), PauliString::new(real(1.0), [(0, Pauli::Y), (1, Pauli::X)]));
        assert_eq!(ms_sandwich_string(3, 0).unwrap(), displayed_sandwich_string(3));
        let five = ms_sandwich_string(5, 0).unwrap();
        assert_eq!(five.letters, displayed_sandwich_string(5).letters);
        assert_eq!(five.coeff, real(1.0));
    }

    #[test]
    fn sandwich_matches_target_exponential() {
        let modes = one_mode();
        for (k, q) in [(2, 0), (2, 1), (3, 0), (3, 2)] {
            let spec = SandwichSpec { phi: 0.37, n_qubits: k, local_qubit: q, x: 0.2, fock: 4 };
            let c = scattering_ms_circuit(&spec, &modes).unwrap().unitary().unwrap();
            let target = scattering_ms_target(&spec, &modes).unwrap();
            assert!((c.matrix() - &target).norm() < 1e-10, "k={k} q={q}");
            assert!(unitarity_defect(&target) < 1e-12);
        }
    }

    #[test]
    fn displayed_string_differs_for_two_qubits() {
        let modes = one_mode();
        let spec = SandwichSpec { phi: 0.37, n_qubits: 2, local_qubit: 0, x: 0.2, fock: 4 };
        let c = scattering_ms_circuit(&spec, &modes).unwrap().unitary().unwrap();
        let shown = sandwich_exponential(0.37, &displayed_sandwich_string(2), &modes, 0.2, 2, 4).unwrap();
        assert!(phase_aligned_distance(c.matrix(), &shown) > 1e-2);
    }

    #[test]
    fn zero_angle_sandwich_is_identity() {
        let spec = SandwichSpec { phi: 0.0, n_qubits: 2, local_qubit: 0, x: 0.0, fock: 3 };
        let u = scattering_ms_circuit(&spec, &one_mode()).unwrap().unitary().unwrap();
        let d = u.dim();
        assert!((u.matrix() - CMatrix::identity(d, d)).norm() < 1e-12);
    }

    #[test]
    fn band_filter_zeroes_couplings() {
        let g = ModeGrid::from_continuum(0.0, 2.0, 5, Dispersion::Massless, |_| 1.0).unwrap().with_band(0.4, 1.1);
        assert_eq!(g.couplings.iter().filter(|&&c| c != 0.0).count(), 2);
    }
}

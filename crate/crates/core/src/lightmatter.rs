//! Qubit-resonator protocols: digital-analog Rabi, Dicke and Dirac simulations, the
//! two-tone analog Rabi and driven Dirac setups, and small cavity lattices.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use crate::error::{invalid, Result};
use crate::frames::{
    compare_lab_vs_effective, into_frames, rwa_effective, DriveTerm, RotatingFrame,
    TimeDependentHamiltonian,
};
use crate::gates::{Circuit, Gate};
use crate::hamiltonian::{Factor, Hamiltonian, LocalOp, Term};
use crate::hilbert::{
    evolve_exact, expectation, state_fidelity, HilbertSpec, OperatorMatrix, QuantumState,
    Subsystem, LEAKAGE_THRESHOLD,
};
use crate::linalg::{c, CVector, Propagator, C64};

fn f(site: usize, op: LocalOp) -> Factor {
    Factor::new(site, op)
}

/// `n_qubits` qubits on sites `0..n` followed by one resonator.
pub fn qubits_and_mode(n_qubits: usize, fock: usize) -> Result<HilbertSpec> {
    let mut subs = vec![Subsystem::qubit(); n_qubits];
    subs.push(Subsystem::boson(fock));
    HilbertSpec::new(subs)
}

/// `ω_r a†a + Σ (ω_q/2)σz + g Σ σx(a + a†)` on `n_qubits` qubits and one mode.
pub fn dicke_target(wr: f64, wq: f64, g: f64, n_qubits: usize, fock: usize) -> Result<Hamiltonian> {
    if fock < 2 {
        return invalid(format!("Fock cutoff {fock} is below 2"));
    }
    let space = qubits_and_mode(n_qubits, fock)?;
    let m = n_qubits;
    let mut terms = vec![Term::new(wr, vec![f(m, LocalOp::Number)])];
    for q in 0..n_qubits {
        terms.push(Term::new(wq / 2.0, vec![f(q, LocalOp::SigmaZ)]));
        terms.push(Term::new(g, vec![f(q, LocalOp::SigmaX), f(m, LocalOp::Annihilation)]).with_hc());
    }
    Hamiltonian::from_terms(&space, terms)
}

/// The quantum Rabi Hamiltonian `ω_r a†a + (ω_q/2)σz + g σx(a + a†)`.
pub fn da_rabi_target(wr: f64, wq: f64, g: f64, fock: usize) -> Result<Hamiltonian> {
    dicke_target(wr, wq, g, 1, fock)
}

/// Digital-analog Rabi/Dicke settings in terms of the physical detunings.
///
/// `dtilde_q1` and `dtilde_q2` are the full qubit detunings `ω_q − ω̃` of the two steps,
/// so the simulated qubit frequency is their difference.
#[derive(Clone, Debug, PartialEq)]
pub struct DaRabiParams {
    pub g: f64,
    pub dtilde_r: f64,
    pub dtilde_q1: f64,
    pub dtilde_q2: f64,
    pub t: f64,
    pub l: usize,
    pub fock: usize,
    pub n_qubits: usize,
}

impl DaRabiParams {
    /// Physical settings for the simulated `(ω_r^R, ω_q^R, g^R)`, splitting the qubit
    /// frequency symmetrically between the two steps.
    pub fn from_simulated(wr: f64, wq: f64, g: f64, t: f64, l: usize, fock: usize) -> Self {
        Self {
            g,
            dtilde_r: wr / 2.0,
            dtilde_q1: wq / 2.0,
            dtilde_q2: -wq / 2.0,
            t,
            l,
            fock,
            n_qubits: 1,
        }
    }

    pub fn with_qubits(mut self, n: usize) -> Self {
        self.n_qubits = n;
        self
    }

    pub fn simulated_wr(&self) -> f64 {
        2.0 * self.dtilde_r
    }

    pub fn simulated_wq(&self) -> f64 {
        self.dtilde_q1 - self.dtilde_q2
    }

    pub fn simulated_g(&self) -> f64 {
        self.g
    }

    fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return invalid("Trotter step count must be at least 1");
        }
        if self.fock < 2 {
            return invalid(format!("Fock cutoff {} is below 2", self.fock));
        }
        if self.n_qubits == 0 {
            return invalid("at least one qubit is required");
        }
        Ok(())
    }

    pub fn space(&self) -> Result<HilbertSpec> {
        qubits_and_mode(self.n_qubits, self.fock)
    }

    pub fn target(&self) -> Result<Hamiltonian> {
        dicke_target(
            self.simulated_wr(),
            self.simulated_wq(),
            self.g,
            self.n_qubits,
            self.fock,
        )
    }

    /// `|g…g⟩ ⊗ |0⟩`.
    pub fn ground_state(&self) -> Result<QuantumState> {
        QuantumState::basis(&self.space()?, &vec![0; self.n_qubits + 1])
    }
}

/// Tavis-Cummings block `Δ̃_r a†a + (δ/2) Σσz + g Σ(a†σ⁻ + aσ⁺)`, or its anti-JC partner.
fn tavis_cummings(p: &DaRabiParams, delta: f64, anti: bool) -> Result<Hamiltonian> {
    let space = p.space()?;
    let m = p.n_qubits;
    let mut terms = vec![Term::new(p.dtilde_r, vec![f(m, LocalOp::Number)])];
    let lower = if anti { LocalOp::SigmaPlus } else { LocalOp::SigmaMinus };
    for q in 0..p.n_qubits {
        terms.push(Term::new(delta / 2.0, vec![f(q, LocalOp::SigmaZ)]));
        terms.push(Term::new(p.g, vec![f(m, LocalOp::Creation), f(q, lower.clone())]).with_hc());
    }
    Hamiltonian::from_terms(&space, terms)
}

/// `H̃(δ)`, the detuned Jaynes-Cummings (Tavis-Cummings) form.
pub fn detuned_jc(p: &DaRabiParams, delta: f64) -> Result<Hamiltonian> {
    tavis_cummings(p, delta, false)
}

/// The two halves of the Rabi Hamiltonian:
/// `H1 = (ω_r/2)a†a + (δ¹/2)σz + g(a†σ⁻ + aσ⁺)` and
/// `H2 = (ω_r/2)a†a − (δ²/2)σz + g(a†σ⁺ + aσ⁻)`.
pub fn da_rabi_split(p: &DaRabiParams) -> Result<(Hamiltonian, Hamiltonian)> {
    p.validate()?;
    Ok((
        tavis_cummings(p, p.dtilde_q1, false)?,
        tavis_cummings(p, -p.dtilde_q2, true)?,
    ))
}

/// Per step: `H1` block, collective flip, `H̃(δ²)` block, collective flip.
pub fn da_rabi_circuit(p: &DaRabiParams) -> Result<Circuit> {
    p.validate()?;
    let space = p.space()?;
    let tau = p.t / p.l as f64;
    let qubits: Vec<usize> = (0..p.n_qubits).collect();
    let mut step = Circuit::new(&space);
    step.push(Gate::analog(detuned_jc(p, p.dtilde_q1)?, tau, "jc1"))?;
    step.push(Gate::flip(qubits.clone()))?;
    step.push(Gate::analog(detuned_jc(p, p.dtilde_q2)?, tau, "jc2"))?;
    step.push(Gate::flip(qubits))?;
    Ok(step.repeated(p.l))
}

/// The same interleaving on `n_qubits` qubits with collective flips.
pub fn dicke_circuit(p: &DaRabiParams) -> Result<Circuit> {
    da_rabi_circuit(p)
}

#[derive(Clone, Debug)]
pub struct DaRun {
    pub circuit_state: QuantumState,
    pub exact_state: QuantumState,
    pub fidelity: f64,
    /// Largest top-Fock population seen after any gate.
    pub max_leakage: f64,
    pub leaked: bool,
}

/// Runs the digital-analog circuit from `s0` and compares with `exp(−iH_R t)`.
pub fn run_da_rabi(p: &DaRabiParams, s0: &QuantumState) -> Result<DaRun> {
    let circuit = da_rabi_circuit(p)?;
    let target = p.target()?.assemble()?;
    let mut state = s0.clone();
    let mut max_leakage: f64 = s0.max_top_fock_population();
    circuit.apply_with(&mut state, |_, s| {
        max_leakage = max_leakage.max(s.max_top_fock_population());
        Ok(())
    })?;
    let exact = evolve_exact(&target, p.t, s0)?;
    max_leakage = max_leakage.max(exact.max_top_fock_population());
    Ok(DaRun {
        fidelity: state_fidelity(&state, &exact)?,
        circuit_state: state,
        exact_state: exact,
        max_leakage,
        leaked: max_leakage >= LEAKAGE_THRESHOLD,
    })
}

/// Quadrature series from the digital-analog circuit and from the exact target.
#[derive(Clone, Debug, PartialEq)]
pub struct DiracSeries {
    pub times: Vec<f64>,
    pub x_circuit: Vec<f64>,
    pub p_circuit: Vec<f64>,
    pub x_exact: Vec<f64>,
    pub p_exact: Vec<f64>,
    pub max_leakage: f64,
    pub leaked: bool,
}

impl DiracSeries {
    /// The Dirac particle position, conjugate to the `σx`-coupled quadrature: `−p̂`.
    pub fn position_exact(&self) -> Vec<f64> {
        self.p_exact.iter().map(|p| -p).collect()
    }

    pub fn position_circuit(&self) -> Vec<f64> {
        self.p_circuit.iter().map(|p| -p).collect()
    }
}

/// `⟨x̂⟩` and `⟨p̂⟩` of the resonator along `t_grid` for the Rabi model with `ω_r^R = 0`,
/// which is the Dirac Hamiltonian with `mc² = ω_q^R/2` and `c = √2 g^R` acting on
/// momentum `x̂`. Each sample runs a circuit of `p.l` steps up to that time.
pub fn dirac_rabi_observables(p: &DaRabiParams, s0: &QuantumState, t_grid: &[f64]) -> Result<DiracSeries> {
    if p.dtilde_r != 0.0 {
        return invalid("the Dirac correspondence needs a vanishing resonator detuning");
    }
    if p.n_qubits != 1 {
        return invalid("the Dirac correspondence uses a single qubit");
    }
    let space = p.space()?;
    let x = OperatorMatrix::embed(&space, &crate::hilbert::boson_operator(crate::hilbert::BosonOp::QuadX, p.fock)?, &[1])?;
    let pq = OperatorMatrix::embed(&space, &crate::hilbert::boson_operator(crate::hilbert::BosonOp::QuadP, p.fock)?, &[1])?;
    let target = p.target()?.assemble()?.propagator()?;
    let mut out = DiracSeries {
        times: t_grid.to_vec(),
        x_circuit: Vec::new(),
        p_circuit: Vec::new(),
        x_exact: Vec::new(),
        p_exact: Vec::new(),
        max_leakage: 0.0,
        leaked: false,
    };
    for &t in t_grid {
        let run = run_da_rabi(&DaRabiParams { t, ..p.clone() }, s0)?;
        out.max_leakage = out.max_leakage.max(run.max_leakage);
        let exact = QuantumState::from_parts_unchecked(space.clone(), target.apply(t, s0.amplitudes()));
        out.x_circuit.push(expectation(&run.circuit_state, &x)?.re);
        out.p_circuit.push(expectation(&run.circuit_state, &pq)?.re);
        out.x_exact.push(expectation(&exact, &x)?.re);
        out.p_exact.push(expectation(&exact, &pq)?.re);
    }
    out.leaked = out.max_leakage >= LEAKAGE_THRESHOLD;
    Ok(out)
}

/// Dominant angular frequency of a uniformly sampled series and its amplitude, after
/// removing a linear trend and applying a Hann window; the DFT is zero-padded `pad`-fold.
pub fn dominant_frequency(times: &[f64], values: &[f64], pad: usize) -> Option<(f64, f64)> {
    let n = values.len();
    if n < 4 || times.len() != n {
        return None;
    }
    let dt = times[1] - times[0];
    let mean_t = times.iter().sum::<f64>() / n as f64;
    let mean_v = values.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, v) in times.iter().zip(values) {
        sxy += (t - mean_t) * (v - mean_v);
        sxx += (t - mean_t).powi(2);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let w_sum: f64 = (0..n).map(|k| hann(k, n)).sum();
    let signal: Vec<f64> = (0..n)
        .map(|k| (values[k] - mean_v - slope * (times[k] - mean_t)) * hann(k, n))
        .collect();
    let m = n * pad.max(1);
    let mut best = (0.0, 0.0);
    for j in 1..m / 2 {
        let omega = 2.0 * PI * j as f64 / (m as f64 * dt);
        let s: C64 = signal
            .iter()
            .enumerate()
            .map(|(k, v)| C64::from_polar(*v, -2.0 * PI * (j * k) as f64 / m as f64))
            .sum();
        let amp = 2.0 * s.norm() / w_sum;
        if amp > best.1 {
            best = (omega, amp);
        }
    }
    Some(best)
}

fn hann(k: usize, n: usize) -> f64 {
    0.5 - 0.5 * (2.0 * PI * k as f64 / (n - 1) as f64).cos()
}

/// Two-tone driven qubit-resonator settings.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalogRabiParams {
    pub wq: f64,
    pub w: f64,
    pub g: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub w1: f64,
    pub w2: f64,
    pub fock: usize,
}

impl AnalogRabiParams {
    /// Settings meeting `ω₁ − ω₂ = 2Ω₁`, with the qubit resonant with the cavity.
    pub fn resonant(g: f64, omega1: f64, omega2: f64, w1: f64, w_eff: f64, fock: usize) -> Self {
        let w = w1 + w_eff;
        Self {
            wq: w,
            w,
            g,
            omega1,
            omega2,
            w1,
            w2: w1 - 2.0 * omega1,
            fock,
        }
    }

    pub fn space(&self) -> Result<HilbertSpec> {
        qubits_and_mode(1, self.fock)
    }

    /// Effective resonator frequency `ω − ω₁`.
    pub fn w_eff(&self) -> f64 {
        self.w - self.w1
    }

    pub fn g_eff(&self) -> f64 {
        self.g / 2.0
    }
}

/// `ω_q/2 σz + ω a†a − g(σ⁺a + σ⁻a†)`.
fn driven_jc_static(space: &HilbertSpec, wq: f64, w: f64, g: f64) -> Result<Hamiltonian> {
    Hamiltonian::from_terms(
        space,
        vec![
            Term::new(wq / 2.0, vec![f(0, LocalOp::SigmaZ)]),
            Term::new(w, vec![f(1, LocalOp::Number)]),
            Term::new(-g, vec![f(0, LocalOp::SigmaPlus), f(1, LocalOp::Annihilation)]).with_hc(),
        ],
    )
}

/// The two-tone driven Jaynes-Cummings Hamiltonian:
/// `ω_q/2 σz + ω a†a − g(σ⁺a + σ⁻a†) − Σ_j Ω_j(e^{iω_j t}σ⁻ + h.c.)`.
pub fn analog_rabi_lab(p: &AnalogRabiParams) -> Result<TimeDependentHamiltonian> {
    let space = p.space()?;
    TimeDependentHamiltonian::new(
        driven_jc_static(&space, p.wq, p.w, p.g)?,
        vec![
            DriveTerm::new(-p.omega1, p.w1, 0.0, vec![f(0, LocalOp::SigmaMinus)]),
            DriveTerm::new(-p.omega2, p.w2, 0.0, vec![f(0, LocalOp::SigmaMinus)]),
        ],
    )
}

/// Frame at `ω₁(a†a + σz/2)`, then the frame of the strong drive `−Ω₁σx`.
pub fn analog_rabi_frames(p: &AnalogRabiParams) -> Result<Vec<RotatingFrame>> {
    let space = p.space()?;
    Ok(vec![
        RotatingFrame::new(Hamiltonian::from_terms(
            &space,
            vec![
                Term::new(p.w1, vec![f(1, LocalOp::Number)]),
                Term::new(p.w1 / 2.0, vec![f(0, LocalOp::SigmaZ)]),
            ],
        )?)?,
        RotatingFrame::new(Hamiltonian::from_terms(
            &space,
            vec![Term::new(-p.omega1, vec![f(0, LocalOp::SigmaX)])],
        )?)?,
    ])
}

/// Rotating-wave effective model after both frames, keeping terms slower than `Ω₁`.
pub fn analog_rabi_effective(p: &AnalogRabiParams) -> Result<Hamiltonian> {
    let framed = into_frames(&analog_rabi_lab(p)?, &analog_rabi_frames(p)?)?;
    rwa_effective(&framed, p.omega1)
}

/// `(ω − ω₁)a†a + (Ω₂/2)σz − (g/2)σx(a + a†)`.
pub fn analog_rabi_displayed(p: &AnalogRabiParams) -> Result<Hamiltonian> {
    Hamiltonian::from_terms(
        &p.space()?,
        vec![
            Term::new(p.w_eff(), vec![f(1, LocalOp::Number)]),
            Term::new(p.omega2 / 2.0, vec![f(0, LocalOp::SigmaZ)]),
            Term::new(-p.g / 2.0, vec![f(0, LocalOp::SigmaX), f(1, LocalOp::Annihilation)]).with_hc(),
        ],
    )
}

/// Lab-frame versus effective-model fidelity along `t_grid`.
pub fn analog_rabi_compare(p: &AnalogRabiParams, s0: &QuantumState, t_grid: &[f64]) -> Result<Vec<f64>> {
    compare_lab_vs_effective(
        &analog_rabi_lab(p)?,
        &analog_rabi_frames(p)?,
        &analog_rabi_effective(p)?,
        s0,
        t_grid,
        None,
    )
}

/// Driven Dirac settings; the qubit is resonant with the cavity at `ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalogDiracParams {
    pub w: f64,
    pub g: f64,
    pub omega: f64,
    pub lambda: f64,
    pub xi: f64,
    pub nu: f64,
    pub phi: f64,
    pub fock: usize,
}

impl AnalogDiracParams {
    /// Settings with `ω − ν = 2Ω` and `φ = π/2`.
    pub fn resonant(w: f64, g: f64, omega: f64, lambda: f64, xi: f64, fock: usize) -> Self {
        Self {
            w,
            g,
            omega,
            lambda,
            xi,
            nu: w - 2.0 * omega,
            phi: PI / 2.0,
            fock,
        }
    }

    pub fn space(&self) -> Result<HilbertSpec> {
        qubits_and_mode(1, self.fock)
    }
}

/// `ω/2 σz + ω a†a − g(σ⁺a + σ⁻a†) − Ω(e^{i(ωt+φ)}σ⁻ + h.c.) − λ(e^{i(νt+φ)}σ⁻ + h.c.)
/// + ξ(e^{iωt}a + h.c.)`.
pub fn analog_dirac_lab(p: &AnalogDiracParams) -> Result<TimeDependentHamiltonian> {
    let space = p.space()?;
    TimeDependentHamiltonian::new(
        driven_jc_static(&space, p.w, p.w, p.g)?,
        vec![
            DriveTerm::new(-p.omega, p.w, p.phi, vec![f(0, LocalOp::SigmaMinus)]),
            DriveTerm::new(-p.lambda, p.nu, p.phi, vec![f(0, LocalOp::SigmaMinus)]),
            DriveTerm::new(p.xi, p.w, 0.0, vec![f(1, LocalOp::Annihilation)]),
        ],
    )
}

/// Frame at `ω(a†a + σz/2)`, then the frame of `−Ω(e^{iφ}σ⁻ + h.c.)`.
pub fn analog_dirac_frames(p: &AnalogDiracParams) -> Result<Vec<RotatingFrame>> {
    let space = p.space()?;
    Ok(vec![
        RotatingFrame::new(Hamiltonian::from_terms(
            &space,
            vec![
                Term::new(p.w, vec![f(1, LocalOp::Number)]),
                Term::new(p.w / 2.0, vec![f(0, LocalOp::SigmaZ)]),
            ],
        )?)?,
        RotatingFrame::new(Hamiltonian::from_terms(
            &space,
            vec![Term::complex(C64::from_polar(-p.omega, p.phi), vec![f(0, LocalOp::SigmaMinus)]).with_hc()],
        )?)?,
    ])
}

pub fn analog_dirac_effective(p: &AnalogDiracParams) -> Result<Hamiltonian> {
    let framed = into_frames(&analog_dirac_lab(p)?, &analog_dirac_frames(p)?)?;
    rwa_effective(&framed, p.omega)
}

/// `(λ/2)σz + (g/√2)σy p̂ + ξ√2 x̂`.
pub fn analog_dirac_displayed(p: &AnalogDiracParams) -> Result<Hamiltonian> {
    Hamiltonian::from_terms(
        &p.space()?,
        vec![
            Term::new(p.lambda / 2.0, vec![f(0, LocalOp::SigmaZ)]),
            Term::new(p.g * FRAC_1_SQRT_2, vec![f(0, LocalOp::SigmaY), f(1, LocalOp::QuadP)]),
            Term::new(p.xi * SQRT_2, vec![f(1, LocalOp::QuadX)]),
        ],
    )
}

pub fn analog_dirac_compare(p: &AnalogDiracParams, s0: &QuantumState, t_grid: &[f64]) -> Result<Vec<f64>> {
    compare_lab_vs_effective(
        &analog_dirac_lab(p)?,
        &analog_dirac_frames(p)?,
        &analog_dirac_effective(p)?,
        s0,
        t_grid,
        None,
    )
}

/// `|+x⟩ ⊗ |0⟩`, for which the massless particle stays put and the massive one trembles.
pub fn dirac_spinor_state(space: &HilbertSpec, spinor: [C64; 2]) -> Result<QuantumState> {
    let fock = space.subsystem(1)?.dim;
    let mut vac = CVector::zeros(fock);
    vac[0] = c(1.0, 0.0);
    let s = CVector::from_column_slice(&spinor);
    QuantumState::normalized(space.clone(), s.kronecker(&vac))
}

/// Undirected lattice graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    pub n_sites: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Topology {
    pub fn chain(n: usize) -> Self {
        Self {
            n_sites: n,
            edges: (1..n).map(|i| (i - 1, i)).collect(),
        }
    }

    pub fn ring(n: usize) -> Self {
        let mut t = Self::chain(n);
        if n > 2 {
            t.edges.push((n - 1, 0));
        }
        t
    }

    fn validate(&self) -> Result<()> {
        if self.n_sites == 0 {
            return invalid("lattice has no sites");
        }
        let mut seen = vec![false; self.n_sites];
        seen[0] = true;
        let mut changed = true;
        for &(a, b) in &self.edges {
            if a >= self.n_sites || b >= self.n_sites || a == b {
                return invalid(format!("bad edge ({a}, {b})"));
            }
        }
        while changed {
            changed = false;
            for &(a, b) in &self.edges {
                if seen[a] != seen[b] {
                    seen[a] = true;
                    seen[b] = true;
                    changed = true;
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return invalid("lattice edges do not connect every site");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LatticeModel {
    /// Jaynes-Cummings cells (`g` couples each qubit to its cavity) with photon hopping `J`.
    Jch { w0: f64, w: f64, g: f64, j: f64 },
    /// Driven Kerr array with nearest-neighbour cross-Kerr `V`.
    DrivenArray { delta: f64, omega: f64, j: f64, u: f64, v: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeParams {
    pub topology: Topology,
    pub model: LatticeModel,
    pub fock: usize,
}

impl LatticeParams {
    /// JCH cells place the qubit of site `i` at `2i` and its cavity at `2i + 1`.
    pub fn space(&self) -> Result<HilbertSpec> {
        let mut subs = Vec::new();
        for _ in 0..self.topology.n_sites {
            if matches!(self.model, LatticeModel::Jch { .. }) {
                subs.push(Subsystem::qubit());
            }
            subs.push(Subsystem::boson(self.fock));
        }
        HilbertSpec::new(subs)
    }

    pub fn cavity_site(&self, i: usize) -> usize {
        match self.model {
            LatticeModel::Jch { .. } => 2 * i + 1,
            LatticeModel::DrivenArray { .. } => i,
        }
    }

    /// Total excitation number `Σσ⁺σ⁻ + Σa†a`.
    pub fn excitation_number(&self) -> Result<OperatorMatrix> {
        let space = self.space()?;
        let mut terms = Vec::new();
        for i in 0..self.topology.n_sites {
            terms.extend(self.cell_excitation_terms(i));
        }
        Hamiltonian::from_terms(&space, terms)?.assemble()
    }

    fn cell_excitation_terms(&self, i: usize) -> Vec<Term> {
        let mut terms = vec![Term::new(1.0, vec![f(self.cavity_site(i), LocalOp::Number)])];
        if matches!(self.model, LatticeModel::Jch { .. }) {
            terms.push(Term::new(1.0, vec![f(2 * i, LocalOp::SigmaPlus), f(2 * i, LocalOp::SigmaMinus)]));
        }
        terms
    }

    pub fn cell_excitation(&self, i: usize) -> Result<OperatorMatrix> {
        Hamiltonian::from_terms(&self.space()?, self.cell_excitation_terms(i))?.assemble()
    }
}

/// The JCH or driven-array Hamiltonian on the given topology.
pub fn lattice_hamiltonian(p: &LatticeParams) -> Result<Hamiltonian> {
    p.topology.validate()?;
    let space = p.space()?;
    let n = p.topology.n_sites;
    let mut terms = Vec::new();
    let hop = |a: usize, b: usize| vec![f(a, LocalOp::Annihilation), f(b, LocalOp::Creation)];
    match p.model {
        LatticeModel::Jch { w0, w, g, j } => {
            for i in 0..n {
                let (q, m) = (2 * i, 2 * i + 1);
                terms.push(Term::new(w0, vec![f(q, LocalOp::SigmaPlus), f(q, LocalOp::SigmaMinus)]));
                terms.push(Term::new(w, vec![f(m, LocalOp::Number)]));
                terms.push(Term::new(g, vec![f(m, LocalOp::Creation), f(q, LocalOp::SigmaMinus)]).with_hc());
            }
            for &(a, b) in &p.topology.edges {
                terms.push(Term::new(j, hop(p.cavity_site(a), p.cavity_site(b))).with_hc());
            }
        }
        LatticeModel::DrivenArray { delta, omega, j, u, v } => {
            for i in 0..n {
                terms.push(Term::new(-delta, vec![f(i, LocalOp::Number)]));
                terms.push(Term::new(omega, vec![f(i, LocalOp::Annihilation)]).with_hc());
                // n(n − 1) = n² − n
                terms.push(Term::new(u, vec![Factor::pow(i, LocalOp::Number, 2)]));
                terms.push(Term::new(-u, vec![f(i, LocalOp::Number)]));
            }
            for &(a, b) in &p.topology.edges {
                terms.push(Term::new(-j, hop(a, b)).with_hc());
                terms.push(Term::new(v, vec![f(a, LocalOp::Number), f(b, LocalOp::Number)]));
            }
        }
    }
    Hamiltonian::from_terms(&space, terms)
}

/// Single-excitation hopping between two JCH cells.
#[derive(Clone, Debug)]
pub struct TransferReport {
    /// `2π/|E_s − E_a|` from the symmetric and antisymmetric lower polaritons.
    pub predicted_period: f64,
    /// Time of the first return of cell 1's excitation to its minimum, from the dynamics.
    pub measured_period: f64,
    pub initial_state: QuantumState,
}

/// Prepares the superposition of the lowest symmetric and antisymmetric single-excitation
/// polaritons that sits mostly in cell 0 and times the return of the excitation.
pub fn jch_transfer(p: &LatticeParams) -> Result<TransferReport> {
    if p.topology.n_sites != 2 || !matches!(p.model, LatticeModel::Jch { .. }) {
        return invalid("transfer period is defined for two JCH cells");
    }
    let h = lattice_hamiltonian(p)?.assemble()?;
    let space = h.space().clone();
    let prop = h.propagator()?;
    let n_exc = p.excitation_number()?;
    let n1 = p.cell_excitation(1)?;
    // Single-excitation eigenstates, split by parity (cell 0 ↔ cell 1 swap).
    let mut sym = Vec::new();
    let mut anti = Vec::new();
    let swap = cell_swap(&space)?;
    for k in 0..prop.eigenvalues().len() {
        let v = prop.eigenvectors().column(k).into_owned();
        let exc = v.dotc(&(n_exc.matrix() * &v)).re;
        if (exc - 1.0).abs() > 1e-8 {
            continue;
        }
        let parity = v.dotc(&(&swap * &v)).re;
        let e = prop.eigenvalues()[k];
        if parity > 0.5 {
            sym.push((e, v));
        } else if parity < -0.5 {
            anti.push((e, v));
        }
    }
    let lowest = |mut xs: Vec<(f64, CVector)>| {
        xs.sort_by(|a, b| a.0.total_cmp(&b.0));
        xs.into_iter().next()
    };
    let (Some((es, vs)), Some((ea, va))) = (lowest(sym), lowest(anti)) else {
        return invalid("single-excitation polaritons not found; raise the Fock cutoff");
    };
    let plus = QuantumState::normalized(space.clone(), &vs + &va)?;
    let minus = QuantumState::normalized(space.clone(), &vs - &va)?;
    let s0 = if expectation(&plus, &n1)?.re <= expectation(&minus, &n1)?.re { plus } else { minus };
    let predicted = 2.0 * PI / (es - ea).abs();
    let measured = first_return(&prop, &s0, &n1, 2.0 * predicted)?;
    Ok(TransferReport {
        predicted_period: predicted,
        measured_period: measured,
        initial_state: s0,
    })
}

fn cell_swap(space: &HilbertSpec) -> Result<crate::linalg::CMatrix> {
    let d = space.dim();
    let mut m = crate::linalg::CMatrix::zeros(d, d);
    for i in 0..d {
        let mut digits = space.digits(i);
        let (q0, m0) = (digits[0], digits[1]);
        digits[0] = digits[2];
        digits[1] = digits[3];
        digits[2] = q0;
        digits[3] = m0;
        m[(space.index_of(&digits)?, i)] = c(1.0, 0.0);
    }
    Ok(m)
}

/// First local minimum of `⟨o⟩(t)` after `t = 0`, bracketed on a grid over `(0, horizon]`
/// and refined by golden-section search.
fn first_return(prop: &Propagator, s0: &QuantumState, o: &OperatorMatrix, horizon: f64) -> Result<f64> {
    let value = |t: f64| {
        let v = prop.apply(t, s0.amplitudes());
        v.dotc(&(o.matrix() * &v)).re
    };
    let n = 2000;
    let dt = horizon / n as f64;
    let mut rising = false;
    let mut prev = value(0.0);
    let mut bracket = None;
    for k in 1..=n {
        let t = k as f64 * dt;
        let cur = value(t);
        if cur > prev {
            rising = true;
        } else if rising && cur < prev {
            // Past the maximum; look for the following minimum.
            rising = false;
            bracket = Some(usize::MAX);
        }
        if bracket == Some(usize::MAX) && cur > prev {
            bracket = Some(k);
            break;
        }
        prev = cur;
    }
    let Some(k) = bracket.filter(|&k| k != usize::MAX) else {
        return invalid("no return found within the search horizon");
    };
    let (mut a, mut b) = ((k as f64 - 2.0) * dt, k as f64 * dt);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (value(x1), value(x2));
    while b - a > 1e-12 * b.abs().max(1.0) {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = value(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = value(x2);
        }
    }
    Ok(0.5 * (a + b))
}

//! Driven Hamiltonians, rotating frames and the rotating-wave filter.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{Factor, Hamiltonian, LocalOp, Term};
use crate::hilbert::{HilbertSpec, OperatorMatrix, QuantumState};
use crate::linalg::{ensure_hermitian, spectral_norm, CMatrix, Propagator, C64};

/// Frequencies closer than this are treated as equal (and as zero near zero).
pub const FREQUENCY_TOL: f64 = 1e-9;
pub const DEFAULT_GUARD: f64 = 1.5;
/// Integrator steps per period of the fastest frequency.
pub const STEPS_PER_PERIOD: f64 = 400.0;

/// `coeff · e^{iωt} · Π factors`, plus its conjugate when `add_hc` is set.
#[derive(Clone, Debug, PartialEq)]
pub struct DriveTerm {
    pub coeff: C64,
    pub frequency: f64,
    pub factors: Vec<Factor>,
    pub add_hc: bool,
}

impl DriveTerm {
    /// `amplitude (e^{i(ωt+φ)} O + h.c.)`.
    pub fn new(amplitude: f64, frequency: f64, phase: f64, factors: Vec<Factor>) -> Self {
        Self {
            coeff: C64::from_polar(amplitude, phase),
            frequency,
            factors,
            add_hc: true,
        }
    }

    /// A single oscillating component without the conjugate partner.
    pub fn component(coeff: C64, frequency: f64, factors: Vec<Factor>) -> Self {
        Self {
            coeff,
            frequency,
            factors,
            add_hc: false,
        }
    }

    pub fn from_term(t: &Term) -> Self {
        Self {
            coeff: t.coeff,
            frequency: 0.0,
            factors: t.factors.clone(),
            add_hc: t.add_hc,
        }
    }

    fn as_term(&self) -> Term {
        Term {
            coeff: self.coeff,
            factors: self.factors.clone(),
            add_hc: self.add_hc,
        }
    }

    pub fn is_static(&self) -> bool {
        self.frequency.abs() < FREQUENCY_TOL
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeDependentHamiltonian {
    space: HilbertSpec,
    static_part: Hamiltonian,
    drives: Vec<DriveTerm>,
}

impl TimeDependentHamiltonian {
    pub fn new(static_part: Hamiltonian, drives: Vec<DriveTerm>) -> Result<Self> {
        let space = static_part.space().clone();
        for d in &drives {
            // Validates sites and operator kinds.
            Hamiltonian::from_terms(&space, vec![d.as_term()])?;
        }
        Ok(Self {
            space,
            static_part,
            drives,
        })
    }

    pub fn from_static(h: Hamiltonian) -> Self {
        Self {
            space: h.space().clone(),
            static_part: h,
            drives: Vec::new(),
        }
    }

    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    pub fn static_part(&self) -> &Hamiltonian {
        &self.static_part
    }

    pub fn drives(&self) -> &[DriveTerm] {
        &self.drives
    }

    /// Static terms and drives as one list of oscillating terms.
    pub fn all_terms(&self) -> Vec<DriveTerm> {
        self.static_part
            .terms()
            .iter()
            .map(DriveTerm::from_term)
            .chain(self.drives.iter().cloned())
            .collect()
    }

    /// Distinct nonzero term frequencies, ascending by magnitude.
    pub fn frequencies(&self) -> Vec<f64> {
        let mut f: Vec<f64> = self
            .drives
            .iter()
            .filter(|d| !d.is_static())
            .map(|d| d.frequency)
            .collect();
        f.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
        f.dedup_by(|a, b| (*a - *b).abs() < FREQUENCY_TOL);
        f
    }

    /// Precomputes full-space matrices grouped by frequency.
    pub fn assemble(&self) -> Result<DrivenMatrices> {
        let mut groups: Vec<(f64, CMatrix)> = Vec::new();
        let mut add = |freq: f64, m: CMatrix| {
            let freq = if freq.abs() < FREQUENCY_TOL { 0.0 } else { freq };
            match groups
                .iter_mut()
                .find(|(f, _)| (f - freq).abs() < FREQUENCY_TOL)
            {
                Some((_, acc)) => *acc += m,
                None => groups.push((freq, m)),
            }
        };
        for d in self.all_terms() {
            let op = d.as_term().operator_matrix(&self.space)? * d.coeff;
            if d.add_hc {
                add(-d.frequency, op.adjoint());
            }
            add(d.frequency, op);
        }
        let dim = self.space.dim();
        let static_matrix = groups
            .iter()
            .find(|(f, _)| *f == 0.0)
            .map_or_else(|| CMatrix::zeros(dim, dim), |(_, m)| m.clone());
        ensure_hermitian(&static_matrix)?;
        let oscillating: Vec<(f64, CMatrix)> =
            groups.into_iter().filter(|(f, _)| *f != 0.0).collect();
        Ok(DrivenMatrices {
            space: self.space.clone(),
            static_matrix,
            oscillating,
        })
    }
}

/// A Hamiltonian matrix that can be sampled at any time.
pub trait TimeDependent {
    fn space(&self) -> &HilbertSpec;
    fn matrix_at(&self, t: f64) -> CMatrix;
    /// Fastest angular frequency, used to pick the default integration step.
    fn max_frequency(&self) -> f64;
}

/// `H(t) = S + Σ_k e^{iω_k t} M_k`.
#[derive(Clone, Debug)]
pub struct DrivenMatrices {
    space: HilbertSpec,
    static_matrix: CMatrix,
    oscillating: Vec<(f64, CMatrix)>,
}

impl DrivenMatrices {
    pub fn static_matrix(&self) -> &CMatrix {
        &self.static_matrix
    }
}

impl TimeDependent for DrivenMatrices {
    fn space(&self) -> &HilbertSpec {
        &self.space
    }

    fn matrix_at(&self, t: f64) -> CMatrix {
        let mut h = self.static_matrix.clone();
        for (f, m) in &self.oscillating {
            h += m * C64::from_polar(1.0, f * t);
        }
        h
    }

    fn max_frequency(&self) -> f64 {
        let f = self
            .oscillating
            .iter()
            .map(|(f, _)| f.abs())
            .fold(0.0, f64::max);
        if f > 0.0 {
            f
        } else {
            spectral_norm(&self.static_matrix)
        }
    }
}

pub fn default_dt(h: &dyn TimeDependent) -> f64 {
    let w = h.max_frequency();
    if w > 0.0 {
        2.0 * PI / (STEPS_PER_PERIOD * w)
    } else {
        f64::INFINITY
    }
}

fn check_step(t_final: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0) {
        return invalid(format!("time step must be positive, got {dt}"));
    }
    if !(t_final >= 0.0) {
        return invalid(format!("final time must be non-negative, got {t_final}"));
    }
    Ok(())
}

fn step_span(h: &dyn TimeDependent, v: &mut crate::linalg::CVector, t0: f64, t1: f64, dt: f64) -> Result<()> {
    let span = t1 - t0;
    if span <= 0.0 {
        return Ok(());
    }
    let n = (span / dt).ceil().max(1.0) as usize;
    let h_step = span / n as f64;
    for k in 0..n {
        let mid = t0 + (k as f64 + 0.5) * h_step;
        let p = Propagator::new(&h.matrix_at(mid))?;
        *v = p.apply(h_step, v);
    }
    Ok(())
}

/// Ordered product of midpoint-sampled step propagators `Π exp(−iH(t_mid) dt)`.
/// `dt` defaults to `2π / (400 ω_max)`; the last step is shortened to land on `t_final`.
pub fn evolve_driven(
    h: &dyn TimeDependent,
    s0: &QuantumState,
    t_final: f64,
    dt: Option<f64>,
) -> Result<QuantumState> {
    Ok(evolve_driven_sampled(h, s0, &[t_final], dt)?.remove(0))
}

/// States at each of the ascending `times`, integrated from `t = 0`.
pub fn evolve_driven_sampled(
    h: &dyn TimeDependent,
    s0: &QuantumState,
    times: &[f64],
    dt: Option<f64>,
) -> Result<Vec<QuantumState>> {
    if s0.space() != h.space() {
        return Err(Error::SpaceMismatch);
    }
    let dt = dt.unwrap_or_else(|| default_dt(h));
    let mut v = s0.amplitudes().clone();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        check_step(target, dt)?;
        if target < t {
            return invalid("sample times must be ascending");
        }
        step_span(h, &mut v, t, target, dt)?;
        t = target;
        out.push(QuantumState::from_parts_unchecked(s0.space().clone(), v.clone()));
    }
    Ok(out)
}

pub fn evolve_timedep(
    h: &TimeDependentHamiltonian,
    s0: &QuantumState,
    t_final: f64,
    dt: Option<f64>,
) -> Result<QuantumState> {
    evolve_driven(&h.assemble()?, s0, t_final, dt)
}

/// The frame `U(t) = e^{iH₀t}` for a sum of single-site generators `H₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct RotatingFrame {
    generator: Hamiltonian,
}

impl RotatingFrame {
    pub fn new(generator: Hamiltonian) -> Result<Self> {
        for (i, t) in generator.terms().iter().enumerate() {
            if t.support().len() > 1 {
                return Err(Error::NonLocalGenerator(i));
            }
        }
        generator.assemble()?;
        Ok(Self { generator })
    }

    pub fn generator(&self) -> &Hamiltonian {
        &self.generator
    }

    pub fn generator_matrix(&self) -> Result<OperatorMatrix> {
        self.generator.assemble()
    }

    /// `e^{iH₀t}`, which maps lab states into the frame.
    pub fn unitary(&self, t: f64) -> Result<CMatrix> {
        Ok(self.generator_matrix()?.propagator()?.unitary(-t))
    }

    /// Per-site generator matrices; identity-only terms shift no frequency and are skipped.
    fn local_generators(&self) -> Result<BTreeMap<usize, CMatrix>> {
        let space = self.generator.space();
        let mut per_site: BTreeMap<usize, CMatrix> = BTreeMap::new();
        for t in self.generator.terms() {
            let Some(&site) = t.support().first() else {
                continue;
            };
            let local = t.local_matrices(space)?.remove(&site).expect("support site");
            let mut m = &local * t.coeff;
            if t.add_hc {
                m += local.adjoint() * t.coeff.conj();
            }
            per_site
                .entry(site)
                .and_modify(|acc| *acc += &m)
                .or_insert(m);
        }
        Ok(per_site)
    }
}

/// Eigenspace projectors of a Hermitian matrix with their eigenvalues.
fn eigen_projectors(g: &CMatrix) -> Result<Vec<(f64, CMatrix)>> {
    let p = Propagator::new(g)?;
    let mut order: Vec<usize> = (0..p.eigenvalues().len()).collect();
    order.sort_by(|&a, &b| p.eigenvalues()[a].total_cmp(&p.eigenvalues()[b]));
    let mut out: Vec<(f64, CMatrix)> = Vec::new();
    for i in order {
        let e = p.eigenvalues()[i];
        let v = p.eigenvectors().column(i);
        let proj = &v * v.adjoint();
        match out.last_mut() {
            Some((e0, acc)) if (e - *e0).abs() < FREQUENCY_TOL * e0.abs().max(1.0) => *acc += proj,
            _ => out.push((e, proj)),
        }
    }
    Ok(out)
}

/// `e^{iGt} O e^{−iGt} = Σ_s e^{ist} O_s` split by frequency shift `s = e_i − e_j`.
fn shift_components(projectors: &[(f64, CMatrix)], o: &CMatrix) -> Vec<(f64, CMatrix)> {
    let scale = o.norm().max(1e-300);
    let mut out: Vec<(f64, CMatrix)> = Vec::new();
    for (ei, pi) in projectors {
        for (ej, pj) in projectors {
            let m = pi * o * pj;
            if m.norm() < 1e-14 * scale {
                continue;
            }
            let s = ei - ej;
            match out.iter_mut().find(|(s0, _)| (s0 - s).abs() < FREQUENCY_TOL) {
                Some((_, acc)) => *acc += m,
                None => out.push((s, m)),
            }
        }
    }
    out
}

/// `H^I(t) = e^{iH₀t}(H − H₀)e^{−iH₀t}`, exact. Each term is split by the eigenspaces of
/// the local generators and every piece carries its shifted frequency.
pub fn into_frame(h: &TimeDependentHamiltonian, f: &RotatingFrame) -> Result<TimeDependentHamiltonian> {
    let space = h.space().clone();
    if f.generator.space() != &space {
        return Err(Error::SpaceMismatch);
    }
    let generators = f.local_generators()?;
    let mut projectors = BTreeMap::new();
    for (&site, g) in &generators {
        projectors.insert(site, eigen_projectors(g)?);
    }
    let mut drives = Vec::new();
    for term in h.all_terms() {
        let locals = term.as_term().local_matrices(&space)?;
        // Cartesian product of per-site components.
        let mut pieces: Vec<(f64, Vec<Factor>)> = vec![(term.frequency, Vec::new())];
        for (site, m) in locals {
            let comps = match projectors.get(&site) {
                Some(p) => shift_components(p, &m),
                None => vec![(0.0, m)],
            };
            let mut next = Vec::with_capacity(pieces.len() * comps.len());
            for (freq, factors) in &pieces {
                for (s, cm) in &comps {
                    let mut fs = factors.clone();
                    fs.push(Factor::new(site, LocalOp::Matrix(cm.clone())));
                    next.push((freq + s, fs));
                }
            }
            pieces = next;
        }
        for (freq, factors) in pieces {
            let freq = if freq.abs() < FREQUENCY_TOL { 0.0 } else { freq };
            drives.push(DriveTerm {
                coeff: term.coeff,
                frequency: freq,
                factors,
                add_hc: term.add_hc,
            });
        }
    }
    for t in f.generator.terms() {
        let mut neg = t.clone();
        neg.coeff = -neg.coeff;
        drives.push(DriveTerm::from_term(&neg));
    }
    let (statics, drives): (Vec<DriveTerm>, Vec<DriveTerm>) =
        drives.into_iter().partition(|d| d.is_static());
    let static_part = Hamiltonian::from_terms(&space, statics.iter().map(|d| d.as_term()).collect())?;
    TimeDependentHamiltonian::new(static_part, drives)
}

/// Applies the frames in order, each expressed in the picture produced by the previous one.
pub fn into_frames(h: &TimeDependentHamiltonian, frames: &[RotatingFrame]) -> Result<TimeDependentHamiltonian> {
    frames.iter().try_fold(h.clone(), |acc, f| into_frame(&acc, f))
}

/// Keeps the terms with `|frequency| < cutoff` and drops the rest.
pub fn rwa_effective(h: &TimeDependentHamiltonian, cutoff: f64) -> Result<Hamiltonian> {
    rwa_effective_with_guard(h, cutoff, DEFAULT_GUARD)
}

/// As [`rwa_effective`], rejecting any frequency inside `(cutoff/guard, cutoff·guard)`.
pub fn rwa_effective_with_guard(
    h: &TimeDependentHamiltonian,
    cutoff: f64,
    guard: f64,
) -> Result<Hamiltonian> {
    if !(cutoff > 0.0) || !(guard >= 1.0) {
        return invalid(format!("bad cutoff {cutoff} or guard {guard}"));
    }
    let offending: Vec<f64> = h
        .frequencies()
        .into_iter()
        .filter(|f| f.abs() > cutoff / guard && f.abs() < cutoff * guard)
        .collect();
    if !offending.is_empty() {
        return Err(Error::IllSeparatedSpectrum { cutoff, offending });
    }
    let mut out = h.static_part().clone();
    for d in h.drives() {
        if d.frequency.abs() < cutoff {
            if !d.is_static() {
                return Err(Error::KeptOscillation(d.frequency));
            }
            out.push(d.as_term())?;
        }
    }
    Ok(out)
}

/// `U_n(t)⋯U_1(t)` for a frame chain.
pub fn frame_chain_unitary(frames: &[RotatingFrame], t: f64) -> Result<CMatrix> {
    let mut u: Option<CMatrix> = None;
    for f in frames {
        let uf = f.unitary(t)?;
        u = Some(match u {
            None => uf,
            Some(acc) => uf * acc,
        });
    }
    Ok(u.unwrap_or_else(|| {
        let d = frames.first().map_or(0, |f| f.generator.space().dim());
        CMatrix::identity(d, d)
    }))
}

/// Fidelity between the lab state carried into the frame chain and the effective-model
/// state at each time in `t_grid` (ascending, starting at or after zero).
pub fn compare_lab_vs_effective(
    lab: &TimeDependentHamiltonian,
    frames: &[RotatingFrame],
    eff: &Hamiltonian,
    s0: &QuantumState,
    t_grid: &[f64],
    dt: Option<f64>,
) -> Result<Vec<f64>> {
    let space = lab.space();
    if eff.space() != space || s0.space() != space || frames.iter().any(|f| f.generator.space() != space) {
        return Err(Error::SpaceMismatch);
    }
    let lab_m = lab.assemble()?;
    let lab_states = evolve_driven_sampled(&lab_m, s0, t_grid, dt)?;
    let eff_p = eff.assemble()?.propagator()?;
    let frame_props = frames
        .iter()
        .map(|f| f.generator_matrix()?.propagator())
        .collect::<Result<Vec<_>>>()?;
    t_grid
        .iter()
        .zip(lab_states)
        .map(|(&t, s)| {
            let mut v = s.into_amplitudes();
            for p in &frame_props {
                v = p.apply(-t, &v);
            }
            let e = eff_p.apply(t, s0.amplitudes());
            Ok(e.dotc(&v).norm_sqr().min(1.0))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::projection_coefficient;
    use crate::hilbert::{evolve_exact, state_fidelity, Subsystem};
    use crate::linalg::{real, spectral_norm};

    fn qubit_cavity(fock: usize) -> HilbertSpec {
        HilbertSpec::new(vec![Subsystem::qubit(), Subsystem::boson(fock)]).unwrap()
    }

    fn f(site: usize, op: LocalOp) -> Factor {
        Factor::new(site, op)
    }

    fn jc(space: &HilbertSpec, wr: f64, wq: f64, g: f64) -> Hamiltonian {
        Hamiltonian::from_terms(
            space,
            vec![
                Term::new(wr, vec![f(1, LocalOp::Number)]),
                Term::new(wq / 2.0, vec![f(0, LocalOp::SigmaZ)]),
                Term::new(g, vec![f(1, LocalOp::Creation), f(0, LocalOp::SigmaMinus)]).with_hc(),
            ],
        )
        .unwrap()
    }

    fn ladder_frame(space: &HilbertSpec, w: f64) -> RotatingFrame {
        RotatingFrame::new(
            Hamiltonian::from_terms(
                space,
                vec![
                    Term::new(w, vec![f(1, LocalOp::Number)]),
                    Term::new(w / 2.0, vec![f(0, LocalOp::SigmaZ)]),
                ],
            )
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn static_evolution_matches_exact() {
        let space = qubit_cavity(5);
        let h = jc(&space, 1.0, 1.2, 0.3);
        let td = TimeDependentHamiltonian::from_static(h.clone());
        let s = QuantumState::basis(&space, &[1, 0]).unwrap();
        let a = evolve_timedep(&td, &s, 2.0, Some(0.1)).unwrap();
        let b = evolve_exact(&h.assemble().unwrap(), 2.0, &s).unwrap();
        assert!((a.amplitudes() - b.amplitudes()).norm() < 1e-10);
    }

    fn driven_qubit(w: f64, omega: f64) -> TimeDependentHamiltonian {
        let space = HilbertSpec::qubits(1).unwrap();
        TimeDependentHamiltonian::new(
            Hamiltonian::from_terms(&space, vec![Term::new(w / 2.0, vec![f(0, LocalOp::SigmaZ)])])
                .unwrap(),
            vec![DriveTerm::new(-omega, w, 0.0, vec![f(0, LocalOp::SigmaMinus)])],
        )
        .unwrap()
    }

    #[test]
    fn resonant_drive_gives_rabi_oscillation() {
        let (w, omega) = (40.0, 0.5);
        let td = driven_qubit(w, omega);
        let s = QuantumState::basis(td.space(), &[0]).unwrap();
        let times: Vec<f64> = (1..=8).map(|k| k as f64 * PI / (8.0 * omega)).collect();
        let m = td.assemble().unwrap();
        let dt = default_dt(&m) / 8.0;
        let states = evolve_driven_sampled(&m, &s, &times, Some(dt)).unwrap();
        for (t, st) in times.iter().zip(&states) {
            let pe = st.level_population(0, 1).unwrap();
            assert!((pe - (omega * t).sin().powi(2)).abs() < 1e-5, "t={t} pe={pe}");
        }
        // Back to |g⟩ after one period π/Ω.
        assert!(states[7].level_population(0, 0).unwrap() > 1.0 - 1e-5);
    }

    #[test]
    fn midpoint_error_is_second_order() {
        let td = driven_qubit(3.0, 0.7);
        let m = td.assemble().unwrap();
        let s = QuantumState::basis(td.space(), &[0]).unwrap();
        let reference = evolve_driven(&m, &s, 2.0, Some(1e-4)).unwrap();
        let err = |dt: f64| {
            let st = evolve_driven(&m, &s, 2.0, Some(dt)).unwrap();
            (st.amplitudes() - reference.amplitudes()).norm()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((ratio - 4.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn bad_steps_rejected() {
        let td = driven_qubit(1.0, 0.1);
        let s = QuantumState::basis(td.space(), &[0]).unwrap();
        assert!(evolve_timedep(&td, &s, 1.0, Some(0.0)).is_err());
        assert!(evolve_timedep(&td, &s, -1.0, Some(0.1)).is_err());
    }

    #[test]
    fn zero_generator_leaves_input_unchanged() {
        let td = driven_qubit(2.0, 0.3);
        let zero = RotatingFrame::new(Hamiltonian::new(td.space())).unwrap();
        let out = into_frame(&td, &zero).unwrap();
        let (a, b) = (td.assemble().unwrap(), out.assemble().unwrap());
        for t in [0.0, 0.37, 1.9] {
            assert!((a.matrix_at(t) - b.matrix_at(t)).norm() < 1e-13);
        }
    }

    #[test]
    fn jc_into_common_frame_gives_detuned_form() {
        let space = qubit_cavity(6);
        let (wr, wq, g, w) = (5.0, 5.3, 0.2, 4.9);
        let td = TimeDependentHamiltonian::from_static(jc(&space, wr, wq, g));
        let out = into_frame(&td, &ladder_frame(&space, w)).unwrap();
        assert!(out.frequencies().is_empty());
        let h = rwa_effective(&out, 1.0).unwrap().assemble().unwrap();
        let expected = jc(&space, wr - w, wq - w, g).assemble().unwrap();
        assert!(spectral_norm(&(h.matrix() - expected.matrix())) < 1e-12);
    }

    #[test]
    fn frame_matches_matrix_conjugation() {
        let space = qubit_cavity(4);
        let td = TimeDependentHamiltonian::new(
            jc(&space, 1.1, 0.9, 0.4),
            vec![DriveTerm::new(0.3, 1.7, 0.4, vec![f(0, LocalOp::SigmaMinus)])],
        )
        .unwrap();
        let frame = ladder_frame(&space, 0.8);
        let out = into_frame(&td, &frame).unwrap().assemble().unwrap();
        let lab = td.assemble().unwrap();
        let g = frame.generator_matrix().unwrap().into_matrix();
        for t in [0.0, 0.6, 2.3] {
            let u = frame.unitary(t).unwrap();
            let expected = &u * (lab.matrix_at(t) - &g) * u.adjoint();
            assert!((out.matrix_at(t) - expected).norm() < 1e-11);
        }
    }

    #[test]
    fn composed_commuting_frames_match_summed_generator() {
        let space = qubit_cavity(4);
        let td = TimeDependentHamiltonian::from_static(jc(&space, 1.0, 1.3, 0.2));
        let f1 = ladder_frame(&space, 0.4);
        let f2 = ladder_frame(&space, 0.5);
        let twice = into_frames(&td, &[f1, f2]).unwrap().assemble().unwrap();
        let once = into_frame(&td, &ladder_frame(&space, 0.9)).unwrap().assemble().unwrap();
        for t in [0.3, 1.7] {
            assert!((twice.matrix_at(t) - once.matrix_at(t)).norm() < 1e-11);
        }
    }

    #[test]
    fn rotated_generator_frame_is_exact() {
        // A generator that is not diagonal in the computational basis.
        let space = HilbertSpec::qubits(1).unwrap();
        let td = TimeDependentHamiltonian::new(
            Hamiltonian::from_terms(&space, vec![Term::new(0.4, vec![f(0, LocalOp::SigmaZ)])]).unwrap(),
            vec![DriveTerm::new(0.2, 1.5, 0.0, vec![f(0, LocalOp::SigmaMinus)])],
        )
        .unwrap();
        let frame = RotatingFrame::new(
            Hamiltonian::from_terms(&space, vec![Term::new(-2.0, vec![f(0, LocalOp::SigmaX)])]).unwrap(),
        )
        .unwrap();
        let out = into_frame(&td, &frame).unwrap().assemble().unwrap();
        let lab = td.assemble().unwrap();
        let g = frame.generator_matrix().unwrap().into_matrix();
        let u = frame.unitary(0.77).unwrap();
        let expected = &u * (lab.matrix_at(0.77) - &g) * u.adjoint();
        assert!((out.matrix_at(0.77) - expected).norm() < 1e-12);
    }

    #[test]
    fn nonlocal_generator_rejected() {
        let space = HilbertSpec::qubits(2).unwrap();
        let g = Hamiltonian::from_terms(
            &space,
            vec![Term::new(1.0, vec![f(0, LocalOp::SigmaZ), f(1, LocalOp::SigmaZ)])],
        )
        .unwrap();
        assert_eq!(RotatingFrame::new(g), Err(Error::NonLocalGenerator(0)));
    }

    #[test]
    fn rwa_filters_and_guards() {
        let td = driven_qubit(2.0, 0.3);
        let frame = RotatingFrame::new(
            Hamiltonian::from_terms(td.space(), vec![Term::new(1.5, vec![f(0, LocalOp::SigmaZ)])])
                .unwrap(),
        )
        .unwrap();
        // Residual drive oscillates at 2 − 3 = −1.
        let out = into_frame(&td, &frame).unwrap();
        assert_eq!(out.frequencies(), vec![-1.0]);
        let kept = rwa_effective(&out, 0.5).unwrap().assemble().unwrap();
        let z = projection_coefficient(kept.matrix(), &crate::hilbert::qubit_operator(crate::hilbert::QubitOp::Z));
        assert!((z - real(-0.5)).norm() < 1e-12);
        assert!(matches!(rwa_effective(&out, 0.9), Err(Error::IllSeparatedSpectrum { .. })));
        assert!(matches!(rwa_effective(&out, 3.0), Err(Error::KeptOscillation(_))));
        // Idempotent on its own output.
        let again = rwa_effective(&TimeDependentHamiltonian::from_static(rwa_effective(&out, 0.5).unwrap()), 0.5)
            .unwrap()
            .assemble()
            .unwrap();
        assert!((again.matrix() - kept.matrix()).norm() < 1e-14);
    }

    #[test]
    fn static_lab_compares_perfectly() {
        let space = qubit_cavity(5);
        let h = jc(&space, 1.0, 1.0, 0.3);
        let td = TimeDependentHamiltonian::from_static(h);
        let eff = rwa_effective(&td, f64::INFINITY).unwrap();
        let s = QuantumState::basis(&space, &[1, 0]).unwrap();
        let grid: Vec<f64> = (0..6).map(|k| k as f64 * 0.5).collect();
        for fid in compare_lab_vs_effective(&td, &[], &eff, &s, &grid, None).unwrap() {
            assert!((fid - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn frames_preserve_fidelities() {
        let space = qubit_cavity(4);
        let frame = ladder_frame(&space, 0.9);
        let a = QuantumState::basis(&space, &[1, 0]).unwrap();
        let b = QuantumState::normalized(space.clone(), crate::linalg::CVector::from_fn(8, |i, _| real(i as f64 + 1.0))).unwrap();
        let u = frame.unitary(1.3).unwrap();
        let before = state_fidelity(&a, &b).unwrap();
        let after = state_fidelity(&a.apply_matrix(&u).unwrap(), &b.apply_matrix(&u).unwrap()).unwrap();
        assert!((before - after).abs() < 1e-10);
    }
}

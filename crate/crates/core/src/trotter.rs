//! Lie-Trotter digitization with commutator error bounds and measured digital error.
//!
//! Gates follow the plan's term order in time, so one first-order step has unitary
//! `exp(−iH_M τ)⋯exp(−iH_1 τ)` with `τ = t/l`.

use crate::error::{invalid, Error, Result};
use crate::gates::{Circuit, Gate};
use crate::hamiltonian::Hamiltonian;
use crate::hilbert::HilbertSpec;
use crate::linalg::{commutator, spectral_norm, CMatrix, Propagator};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Splitting {
    #[default]
    FirstOrder,
    /// Strang splitting: half steps of `H_1..H_{M−1}` around a full step of `H_M`.
    Symmetric,
}

#[derive(Clone, Debug)]
pub struct TrotterPlan {
    terms: Vec<Hamiltonian>,
    matrices: Vec<CMatrix>,
    total_time: f64,
    steps: usize,
    splitting: Splitting,
}

impl TrotterPlan {
    pub fn new(terms: Vec<Hamiltonian>, total_time: f64, steps: usize) -> Result<Self> {
        if terms.is_empty() {
            return invalid("a Trotter plan needs at least one term");
        }
        if steps == 0 {
            return invalid("Trotter step count must be at least 1");
        }
        if !total_time.is_finite() {
            return invalid("total time must be finite");
        }
        let space = terms[0].space().clone();
        let mut matrices = Vec::with_capacity(terms.len());
        for t in &terms {
            if t.space() != &space {
                return Err(Error::SpaceMismatch);
            }
            matrices.push(t.assemble()?.into_matrix());
        }
        Ok(Self {
            terms,
            matrices,
            total_time,
            steps,
            splitting: Splitting::FirstOrder,
        })
    }

    pub fn with_splitting(mut self, splitting: Splitting) -> Self {
        self.splitting = splitting;
        self
    }

    pub fn with_steps(&self, steps: usize) -> Result<Self> {
        if steps == 0 {
            return invalid("Trotter step count must be at least 1");
        }
        let mut p = self.clone();
        p.steps = steps;
        Ok(p)
    }

    pub fn terms(&self) -> &[Hamiltonian] {
        &self.terms
    }

    pub fn space(&self) -> &HilbertSpec {
        self.terms[0].space()
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn splitting(&self) -> Splitting {
        self.splitting
    }

    pub fn total_matrix(&self) -> CMatrix {
        let d = self.space().dim();
        self.matrices
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, m| acc + m)
    }

    /// `(term index, fraction of τ)` pairs of one step in time order.
    fn step_schedule(&self) -> Vec<(usize, f64)> {
        let m = self.terms.len();
        match self.splitting {
            Splitting::FirstOrder => (0..m).map(|i| (i, 1.0)).collect(),
            Splitting::Symmetric if m == 1 => vec![(0, 1.0)],
            Splitting::Symmetric => {
                let mut s: Vec<(usize, f64)> = (0..m - 1).map(|i| (i, 0.5)).collect();
                s.push((m - 1, 1.0));
                s.extend((0..m - 1).rev().map(|i| (i, 0.5)));
                s
            }
        }
    }

    fn tau(&self) -> f64 {
        self.total_time / self.steps as f64
    }
}

pub fn trotterize(p: &TrotterPlan) -> Result<Circuit> {
    let mut c = Circuit::new(p.space());
    let tau = p.tau();
    for _ in 0..p.steps {
        for (i, frac) in p.step_schedule() {
            c.push(Gate::analog(
                p.terms[i].clone(),
                frac * tau,
                format!("H{}", i + 1),
            ))?;
        }
    }
    Ok(c)
}

/// `exp(−iHt)` for `H = Σ H_k`.
pub fn exact_unitary(p: &TrotterPlan) -> Result<CMatrix> {
    Ok(Propagator::new(&p.total_matrix())?.unitary(p.total_time))
}

fn matrix_power(m: &CMatrix, mut n: usize) -> CMatrix {
    let d = m.nrows();
    let mut result = CMatrix::identity(d, d);
    let mut base = m.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = &result * &base;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Unitary of [`trotterize`]'s circuit, via one step raised to the `l`-th power.
pub fn trotter_unitary(p: &TrotterPlan) -> Result<CMatrix> {
    let props: Vec<Propagator> = p
        .matrices
        .iter()
        .map(Propagator::new)
        .collect::<Result<_>>()?;
    let d = p.space().dim();
    let tau = p.tau();
    let mut step = CMatrix::identity(d, d);
    for (i, frac) in p.step_schedule() {
        step = props[i].unitary(frac * tau) * step;
    }
    Ok(matrix_power(&step, p.steps))
}

/// `Σ_{i<j} ‖[H_i, H_j]‖ t² / (2l)` in spectral norm (the first-order bound).
pub fn error_bound(p: &TrotterPlan) -> f64 {
    let mut s = 0.0;
    for i in 0..p.matrices.len() {
        for j in i + 1..p.matrices.len() {
            s += spectral_norm(&commutator(&p.matrices[i], &p.matrices[j]));
        }
    }
    s * p.total_time * p.total_time / (2.0 * p.steps as f64)
}

/// `‖U_exact − U_trotter‖` in spectral norm.
pub fn digital_error(p: &TrotterPlan) -> Result<f64> {
    Ok(spectral_norm(&(exact_unitary(p)? - trotter_unitary(p)?)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanPoint {
    pub steps: usize,
    pub digital_error: f64,
    pub error_bound: f64,
}

/// Digital error and bound for each step count.
pub fn scan(p: &TrotterPlan, steps: &[usize]) -> Result<Vec<ScanPoint>> {
    steps
        .iter()
        .map(|&l| {
            let q = p.with_steps(l)?;
            Ok(ScanPoint {
                steps: l,
                digital_error: digital_error(&q)?,
                error_bound: error_bound(&q),
            })
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len()) as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

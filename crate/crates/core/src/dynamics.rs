//! Semigroup evolution in the KMS-symmetrized frame and convergence diagnostics.

use alloc::vec::Vec;

use nalgebra::DVector;

use crate::error::invalid;
use crate::filters::linear_slope;
use crate::lindblad::{GibbsState, Superoperator};
use crate::linalg::{c, eigvalsh, herm_residual, trace, trace_norm_hermitian, unvec, vec_of, BlockEigen};
use crate::spectral::{kms_symmetrize, SymmetrizedGenerator};
use crate::{CMatrix, Error, Result, C64};
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub window: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub trace_distances: Vec<f64>,
    pub rate_fit: Option<RateFit>,
    /// |Tr ρ_t − 1| per time; reported, never corrected
    pub trace_errors: Vec<f64>,
    pub min_eigenvalues: Vec<f64>,
    /// eigenbasis density matrices, when requested
    pub states: Option<Vec<CMatrix>>,
}

/// e^{tL} = Γ e^{tM} Γ^{−1} with M the Hermitian KMS-symmetrized generator.
#[derive(Debug, Clone)]
pub struct Evolver {
    pub sym: SymmetrizedGenerator,
    pub eigen: BlockEigen,
    pub sigma: CMatrix,
}

impl Evolver {
    pub fn new(l: &Superoperator, gibbs: &GibbsState) -> Result<Self> {
        let sym = kms_symmetrize(l, gibbs)?;
        let eigen = BlockEigen::new(&sym.matrix, true);
        Ok(Evolver { sym, eigen, sigma: gibbs.eigen_matrix() })
    }

    pub fn dim(&self) -> usize {
        self.sym.dim
    }

    fn log_gamma(&self, a: usize) -> f64 {
        let d = self.sym.dim;
        self.sym.log_sigma_quarter[a % d] + self.sym.log_sigma_quarter[a / d]
    }

    /// Smallest nonzero |λ| among eigenmodes that ρ₀ − σ overlaps: the asymptotic decay rate of ρ_t.
    pub fn sector_gap(&self, rho0: &CMatrix) -> Option<f64> {
        let v = vec_of(&(rho0 - &self.sigma));
        let radius = self.eigen.values().iter().fold(0.0, |a: f64, x| a.max(x.abs()));
        let tau = 1e-8 * radius;
        let mut best: Option<f64> = None;
        for b in &self.eigen.blocks {
            let vecs = b.vectors.as_ref().unwrap();
            for (k, lam) in b.values.iter().enumerate() {
                if lam.abs() < tau {
                    continue;
                }
                let ov = b.indices.iter().enumerate().fold(c(0.0, 0.0), |s, (p, &a)| s + vecs[(p, k)].conj() * v[a] * (-self.log_gamma(a)).exp());
                if ov.norm() > 1e-12 && best.is_none_or(|x| lam.abs() < x) {
                    best = Some(lam.abs());
                }
            }
        }
        best
    }

    /// Evolves an eigenbasis density matrix; `fit_window` selects the times used for the log-slope fit.
    pub fn evolve(&self, rho0: &CMatrix, times: &[f64], fit_window: Option<(f64, f64)>, store: bool) -> Result<EvolutionResult> {
        let d = self.dim();
        check_density(rho0, d)?;
        if times.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(invalid("times", "must be ascending"));
        }
        let v = vec_of(rho0);
        let x: DVector<C64> = DVector::from_fn(d * d, |a, _| v[a] * (-self.log_gamma(a)).exp());
        // coefficients per block
        let coeffs: Vec<Vec<C64>> = self
            .eigen
            .blocks
            .iter()
            .map(|b| {
                let vecs = b.vectors.as_ref().unwrap();
                (0..b.values.len())
                    .map(|k| b.indices.iter().enumerate().fold(c(0.0, 0.0), |s, (p, &a)| s + vecs[(p, k)].conj() * x[a]))
                    .collect()
            })
            .collect();
        let mut out = EvolutionResult {
            times: times.to_vec(),
            trace_distances: Vec::with_capacity(times.len()),
            rate_fit: None,
            trace_errors: Vec::with_capacity(times.len()),
            min_eigenvalues: Vec::with_capacity(times.len()),
            states: if store { Some(Vec::new()) } else { None },
        };
        for &t in times {
            let rho = if t == 0.0 {
                rho0.clone()
            } else {
                let mut y = DVector::<C64>::zeros(d * d);
                for (b, cs) in self.eigen.blocks.iter().zip(&coeffs) {
                    let vecs = b.vectors.as_ref().unwrap();
                    for (k, (&lam, &ck)) in b.values.iter().zip(cs).enumerate() {
                        if ck == c(0.0, 0.0) {
                            continue;
                        }
                        let e = ck * (t * lam).exp();
                        for (p, &a) in b.indices.iter().enumerate() {
                            y[a] += vecs[(p, k)] * e;
                        }
                    }
                }
                for a in 0..d * d {
                    y[a] *= self.log_gamma(a).exp();
                }
                unvec(&y, d)
            };
            out.trace_distances.push(trace_distance(&rho, &self.sigma));
            out.trace_errors.push((trace(&rho) - c(1.0, 0.0)).norm());
            out.min_eigenvalues.push(eigvalsh(&crate::linalg::hermitian_part(&rho))[0]);
            if let Some(s) = out.states.as_mut() {
                s.push(rho);
            }
        }
        if let Some(w) = fit_window {
            out.rate_fit = fit_rate(&out.times, &out.trace_distances, w);
        }
        Ok(out)
    }
}

fn check_density(rho: &CMatrix, d: usize) -> Result<()> {
    if rho.nrows() != d || rho.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: rho.nrows() });
    }
    if herm_residual(rho) > 1e-10 {
        return Err(Error::NotDensity("not Hermitian".into()));
    }
    if (trace(rho) - c(1.0, 0.0)).norm() > 1e-10 {
        return Err(Error::NotDensity("trace differs from 1".into()));
    }
    if eigvalsh(rho)[0] < -1e-10 {
        return Err(Error::NotDensity("negative eigenvalue".into()));
    }
    Ok(())
}

pub fn evolve(l: &Superoperator, gibbs: &GibbsState, rho0: &CMatrix, times: &[f64]) -> Result<EvolutionResult> {
    Evolver::new(l, gibbs)?.evolve(rho0, times, None, false)
}

/// Least-squares slope of log(distance) on the window; points at or below 1e−300 are skipped.
pub fn fit_rate(times: &[f64], dist: &[f64], window: (f64, f64)) -> Option<RateFit> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(dist)
        .filter(|(t, d)| **t >= window.0 && **t <= window.1 && **d > 1e-300)
        .map(|(t, d)| (*t, d.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let slope = linear_slope(&pts);
    let (mt, my) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let n = pts.len() as f64;
    Some(RateFit { slope, intercept: my / n - slope * mt / n, window })
}

/// ‖ρ − σ‖₁ as the sum of absolute eigenvalues (no ½ factor).
pub fn trace_distance(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    trace_norm_hermitian(&(rho - sigma))
}

#[derive(Debug, Clone, PartialEq)]
pub struct L2Bound {
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// ‖σ^{−1/4}ρ₀σ^{−1/4} − σ^{1/2}‖₂
    pub x_norm: f64,
    pub holds: bool,
}

/// ‖ρ_t − σ‖₁ against e^{−λ₂t}‖σ^{−1/4}ρ₀σ^{−1/4} − σ^{1/2}‖₂ on the evolution's grid.
pub fn l2_convergence_bound(gap: f64, rho0: &CMatrix, gibbs: &GibbsState, result: &EvolutionResult) -> L2Bound {
    let q: Vec<f64> = gibbs.log_weights.iter().map(|x| x / 4.0).collect();
    let d = q.len();
    let mut s = 0.0;
    for j in 0..d {
        for i in 0..d {
            let mut x = rho0[(i, j)] * (-(q[i] + q[j])).exp();
            if i == j {
                x -= c((2.0 * q[i]).exp(), 0.0);
            }
            s += x.norm_sqr();
        }
    }
    let x_norm = s.sqrt();
    let rhs: Vec<f64> = result.times.iter().map(|t| (-gap * t).exp() * x_norm).collect();
    let lhs = result.trace_distances.clone();
    let holds = lhs.iter().zip(&rhs).all(|(l, r)| *l <= r + 1e-12);
    L2Bound { lhs, rhs, x_norm, holds }
}

/// First grid time with distance ≤ ε, interpolated linearly inside the crossing interval.
pub fn mixing_time_estimate(result: &EvolutionResult, eps: f64) -> Result<f64> {
    let (t, dist) = (&result.times, &result.trace_distances);
    if t.is_empty() {
        return Err(invalid("times", "empty grid"));
    }
    if dist[0] <= eps {
        return Ok(t[0]);
    }
    for k in 1..t.len() {
        if dist[k] <= eps {
            let f = (dist[k - 1] - eps) / (dist[k - 1] - dist[k]);
            return Ok(t[k - 1] + f * (t[k] - t[k - 1]));
        }
    }
    Err(Error::NeverMixed { final_distance: dist[dist.len() - 1] })
}

/// Eigenbasis projector onto the Fock state |n⟩ for diagonal Hamiltonians.
pub fn basis_projector(d: usize, n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    m[(n, n)] = c(1.0, 0.0);
    m
}

/// Uniform time grid 0, dt, …, t_max.
pub fn time_grid(t_max: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|k| t_max * k as f64 / steps as f64).collect()
}

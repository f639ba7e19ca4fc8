//! Coercivity of the cosh kernel on separated Bohr sets, and the phase-retrieval (Riesz) constant.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DVector;

use crate::error::invalid;
use crate::linalg::{c, eigvalsh};
use crate::{CMatrix, Error, Result, C64};
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq)]
pub struct CoercivityReport {
    pub m_beta: f64,
    pub c_beta: f64,
    pub s_beta: f64,
    pub riesz_a: Option<f64>,
}

/// K_{νμ} = 1/(2cosh((ν−μ)β/4)).
pub fn cosh_kernel(beta: f64, x: f64) -> f64 {
    0.5 / (x * beta / 4.0).cosh()
}

pub fn coercivity_constants(bohr: &[f64], beta: f64, delta: f64) -> Result<CoercivityReport> {
    if !(beta > 0.0) || !(delta > 0.0) {
        return Err(invalid("beta/delta", "must be positive"));
    }
    let m_beta = bohr
        .iter()
        .enumerate()
        .map(|(i, &nu)| bohr.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &mu)| cosh_kernel(beta, nu - mu)).sum::<f64>())
        .fold(0.0, f64::max);
    let mut s = 0.0;
    let mut m = 1usize;
    loop {
        let t = 2.0 * cosh_kernel(beta, m as f64 * delta);
        if t < 1e-16 {
            break;
        }
        s += t;
        m += 1;
    }
    Ok(CoercivityReport { m_beta, c_beta: 0.5 - s, s_beta: s, riesz_a: None })
}

/// Σ_{ν,μ} K_{νμ}⟨x_ν, x_μ⟩ for a family indexed by `bohr`.
pub fn coercive_form(bohr: &[f64], beta: f64, x: &[DVector<C64>]) -> f64 {
    let mut s = c(0.0, 0.0);
    for (i, &nu) in bohr.iter().enumerate() {
        for (j, &mu) in bohr.iter().enumerate() {
            s += x[i].dotc(&x[j]) * cosh_kernel(beta, nu - mu);
        }
    }
    s.re
}

/// k(s) = 1/(2cosh(βs/4)).
fn k(beta: f64, s: f64) -> f64 {
    cosh_kernel(beta, s)
}

/// m_{rs}(θ) = Σ_ℓ k(a_r − a_s + ℓω)e^{−iℓθ}.
pub fn riesz_matrix(residues: &[f64], omega: f64, beta: f64, theta: f64) -> CMatrix {
    let r = residues.len();
    CMatrix::from_fn(r, r, |i, j| {
        let base = residues[i] - residues[j];
        let mut s = c(k(beta, base), 0.0);
        for dir in [1.0f64, -1.0] {
            let mut l = 1.0;
            loop {
                let t = k(beta, base + dir * l * omega);
                if t < 1e-16 {
                    break;
                }
                let ph = -dir * l * theta;
                s += c(ph.cos(), ph.sin()) * t;
                l += 1.0;
            }
        }
        s
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RieszReport {
    pub a: f64,
    pub theta_min: f64,
}

pub fn riesz_constant(residues: &[f64], omega: f64, beta: f64, theta_samples: usize) -> Result<RieszReport> {
    if theta_samples < 64 {
        return Err(invalid("theta_samples", "need at least 64"));
    }
    if residues.is_empty() || !(omega > 0.0) || !(beta > 0.0) {
        return Err(invalid("residues", "need a non-empty set, omega > 0, beta > 0"));
    }
    for (i, a) in residues.iter().enumerate() {
        if !(*a >= 0.0 && *a < omega) {
            return Err(invalid("residues", "must lie in [0, omega)"));
        }
        if residues[..i].iter().any(|b| (a - b).abs() < 1e-12 * omega) {
            return Err(Error::DuplicateResidues);
        }
    }
    let lmin = |th: f64| eigvalsh(&riesz_matrix(residues, omega, beta, th))[0];
    let h = 2.0 * PI / (theta_samples - 1) as f64;
    let (mut best_t, mut best) = (-PI, f64::INFINITY);
    for s in 0..theta_samples {
        let th = -PI + h * s as f64;
        let v = lmin(th);
        if v < best {
            best = v;
            best_t = th;
        }
    }
    // golden-section refinement on [θ* − h, θ* + h]
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (best_t - h, best_t + h);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (lmin(x1), lmin(x2));
    for _ in 0..60 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = lmin(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = lmin(x2);
        }
    }
    let (t, v) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    let (theta_min, a) = if v < best { (t, v) } else { (best_t, best) };
    Ok(RieszReport { a, theta_min })
}

/// w(t) = 1/(β cosh(2πt/β)); its transform ∫w(t)e^{iνt}dt is k(ν).
pub fn riesz_weight(beta: f64, t: f64) -> f64 {
    1.0 / (beta * (2.0 * PI * t / beta).cosh())
}

/// Lattice points a_r + ℓω for |ℓ| ≤ l_max, grouped by residue.
pub fn lattice(residues: &[f64], omega: f64, l_max: i64) -> Vec<f64> {
    let mut v = Vec::new();
    for &a in residues {
        for l in -l_max..=l_max {
            v.push(a + l as f64 * omega);
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_value() {
        let r = coercivity_constants(&[0.0, 1.0], 8.0, 1.0).unwrap();
        let oracle: f64 = (1..200).map(|m| 1.0 / (2.0 * m as f64).cosh()).sum();
        assert!((r.s_beta - oracle).abs() < 1e-15);
        assert!((r.c_beta - 0.19188).abs() < 1e-4);
        let cold = coercivity_constants(&[0.0, 1.0], 200.0, 1.0).unwrap();
        assert!((cold.c_beta - 0.5).abs() < 1e-10);
    }

    #[test]
    fn single_residue() {
        let r = riesz_constant(&[0.0], 1.0, 4.0, 64).unwrap();
        assert!(r.a > 0.0);
        assert_eq!(riesz_constant(&[0.1, 0.1], 1.0, 4.0, 64).unwrap_err(), Error::DuplicateResidues);
    }

    #[test]
    fn wide_lattice_limit() {
        let res = [0.0, 0.3, 0.7];
        let beta = 1.0;
        let r = riesz_constant(&res, 1e4, beta, 64).unwrap();
        let gram = CMatrix::from_fn(3, 3, |i, j| c(k(beta, res[i] - res[j]), 0.0));
        assert!((r.a - eigvalsh(&gram)[0]).abs() < 1e-10);
    }
}

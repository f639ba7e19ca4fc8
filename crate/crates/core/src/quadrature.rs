//! Gauss–Hermite discretization of the Gaussian-convoluted generator.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::invalid;
use crate::filters::WindowFunction;
use crate::lindblad::{gkls_at_time, Lindbladian, SigmaE, Superoperator};
use crate::linalg::{c, tridiag_eig_first};
use crate::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureScheme {
    pub n: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Nodes and weights for ∫e^{−x²}F(x)dx from the Jacobi matrix of the Hermite polynomials.
pub fn gauss_hermite(n: usize) -> Result<QuadratureScheme> {
    if n == 0 {
        return Err(invalid("n", "need at least one node"));
    }
    let off: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    let (mut nodes, z) = tridiag_eig_first(&vec![0.0; n], &off);
    let sqrt_pi = core::f64::consts::PI.sqrt();
    let mut weights: Vec<f64> = z.iter().map(|z0| sqrt_pi * z0 * z0).collect();
    // exact symmetry: average mirrored pairs
    for k in 0..n / 2 {
        let x = 0.5 * (nodes[n - 1 - k] - nodes[k]);
        let w = 0.5 * (weights[k] + weights[n - 1 - k]);
        nodes[k] = -x;
        nodes[n - 1 - k] = x;
        weights[k] = w;
        weights[n - 1 - k] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureScheme { n, nodes, weights })
}

/// (1/√π)Σ_k w_k e^{iΩx_k/(√2σ_E)}, the quadrature image of e^{−Ω²/8σ_E²}.
fn phase_average(q: &QuadratureScheme, omega: f64, sigma_e: f64) -> f64 {
    let a = omega / (core::f64::consts::SQRT_2 * sigma_e);
    let s: f64 = q.nodes.iter().zip(&q.weights).map(|(x, w)| w * (a * x).cos()).sum();
    s / core::f64::consts::PI.sqrt()
}

fn sigma_value(lind: &Lindbladian) -> Result<f64> {
    match lind.sigma_e {
        SigmaE::Davies => Err(Error::DaviesQuadrature),
        SigmaE::Finite(s) => Ok(s),
        SigmaE::Infinite => Err(invalid("sigma_E", "quadrature needs a finite sigma_E")),
    }
}

/// L^{≤M,n} = (1/√π)Σ_k w_k·gkls_at_time(x_k/(√2σ_E)).
///
/// Entry ((i,k),(j,l)) of gkls_at_time(t) is the t=0 entry times e^{itΩ} with
/// Ω = (E_i−E_k)−(E_j−E_l), so the node sum is taken once per Bohr-cluster pair.
pub fn discretized_generator(lind: &Lindbladian, scheme: &QuadratureScheme, w: &WindowFunction) -> Result<Superoperator> {
    let sigma = sigma_value(lind)?;
    let mut s = gkls_at_time(lind, 0.0, w)?;
    let spec = &lind.spec;
    let d = spec.dim();
    let nb = spec.bohr.len();
    let mut cache: Vec<f64> = vec![f64::NAN; nb * nb];
    for b in 0..d * d {
        let (j, l) = (b % d, b / d);
        let c2 = spec.cluster_index(j, l);
        for a in 0..d * d {
            let z = s.matrix[(a, b)];
            if z == c(0.0, 0.0) {
                continue;
            }
            let (i, k) = (a % d, a / d);
            let c1 = spec.cluster_index(i, k);
            let slot = &mut cache[c1 * nb + c2];
            if slot.is_nan() {
                *slot = phase_average(scheme, spec.bohr[c1].nu - spec.bohr[c2].nu, sigma);
            }
            s.matrix[(a, b)] = z * *slot;
        }
    }
    Ok(s)
}

/// The node sum done literally, one GKLS superoperator per node.
pub fn discretized_generator_direct(lind: &Lindbladian, scheme: &QuadratureScheme, w: &WindowFunction) -> Result<Superoperator> {
    let sigma = sigma_value(lind)?;
    let d = lind.spec.dim();
    let mut out = Superoperator::zeros(d);
    let norm = 1.0 / core::f64::consts::PI.sqrt();
    for (x, wk) in scheme.nodes.iter().zip(&scheme.weights) {
        let g = gkls_at_time(lind, x / (core::f64::consts::SQRT_2 * sigma), w)?;
        out.matrix += g.matrix * c(wk * norm, 0.0);
    }
    Ok(out)
}

/// Constants of the bound K(C²/(4σ_E²n))ⁿ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretizationBound {
    /// Frobenius bound on the t=0 GKLS superoperator
    pub k: f64,
    /// 4‖H_{≤M}‖
    pub c: f64,
    pub sigma_e: f64,
}

impl DiscretizationBound {
    /// K from Σ‖L^α‖_F², the window's transform bound and the Hilbert-space dimension:
    /// ‖conj(L)⊗L‖_F = ‖L‖_F², ‖I⊗G‖_F = √D‖G‖_F with ‖G‖_F ≤ (½ + ‖t_κ‖_{L¹})Σ‖L^α‖_F².
    pub fn new(h_norm: f64, jump_norms: &[f64], window_l1: f64, sigma_e: f64, dim: usize) -> Result<Self> {
        if !(sigma_e > 0.0 && sigma_e.is_finite()) {
            return Err(invalid("sigma_E", "must be finite and positive"));
        }
        let ll: f64 = jump_norms.iter().map(|x| x * x).sum();
        let k = ll * (1.0 + 2.0 * (dim as f64).sqrt() * (0.5 + window_l1));
        Ok(DiscretizationBound { k, c: 4.0 * h_norm, sigma_e })
    }

    pub fn log_value(&self, n: usize) -> f64 {
        let n = n as f64;
        self.k.ln() + n * (self.c * self.c / (4.0 * self.sigma_e * self.sigma_e * n)).ln()
    }

    pub fn value(&self, n: usize) -> f64 {
        self.log_value(n).exp()
    }

    /// Smallest n with bound ≤ ε; the bound is decreasing once n ≥ C²/(4σ_E²).
    pub fn nodes_for(&self, eps: f64) -> usize {
        let a = self.c * self.c / (4.0 * self.sigma_e * self.sigma_e);
        let target = eps.ln();
        let mut lo = (a.ceil() as usize).max(1);
        if self.log_value(lo) <= target {
            while lo > 1 && self.log_value(lo - 1) <= target && (lo - 1) as f64 >= a {
                lo -= 1;
            }
            return lo;
        }
        let mut hi = lo * 2;
        while self.log_value(hi) > target {
            lo = hi;
            hi *= 2;
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.log_value(mid) <= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

pub fn discretization_error_bound(h_norm: f64, jump_norms: &[f64], window_l1: f64, sigma_e: f64, n: usize, dim: usize) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n", "need at least one node"));
    }
    Ok(DiscretizationBound::new(h_norm, jump_norms, window_l1, sigma_e, dim)?.value(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::window;
    use crate::model::{FilterSpec, HamiltonianModel, SamplerSetup};

    #[test]
    fn small_rules() {
        let sp = core::f64::consts::PI.sqrt();
        let q1 = gauss_hermite(1).unwrap();
        assert_eq!(q1.nodes, vec![0.0]);
        assert!((q1.weights[0] - sp).abs() < 1e-14);
        let q2 = gauss_hermite(2).unwrap();
        assert!((q2.nodes[1] - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((q2.weights[0] - sp / 2.0).abs() < 1e-14);
        let q = gauss_hermite(16).unwrap();
        let m2: f64 = q.nodes.iter().zip(&q.weights).map(|(x, w)| w * x * x).sum();
        assert!((m2 - sp / 2.0).abs() < 1e-13);
        assert!((q.weights.iter().sum::<f64>() - sp).abs() < 1e-12);
    }

    fn lind(sigma: f64) -> Lindbladian {
        let s = SamplerSetup::new(HamiltonianModel::Quadratic, 1.0, FilterSpec::MetropolisRegularized { delta: 0.05, theta: 0.3 }, 4);
        s.build(SigmaE::new(sigma).unwrap()).unwrap().lindbladian
    }

    #[test]
    fn grouped_matches_direct() {
        let l = lind(1.0);
        let w = window(4.0 * l.spec.h_norm(), 2.0).unwrap();
        for n in [1, 3, 6] {
            let q = gauss_hermite(n).unwrap();
            let a = discretized_generator(&l, &q, &w).unwrap();
            let b = discretized_generator_direct(&l, &q, &w).unwrap();
            assert!((a.matrix - b.matrix).norm() < 1e-11, "n={n}");
        }
        let one = discretized_generator(&l, &gauss_hermite(1).unwrap(), &w).unwrap();
        assert!((one.matrix - gkls_at_time(&l, 0.0, &w).unwrap().matrix).norm() < 1e-14);
    }

    #[test]
    fn wide_sigma_collapses_to_zero_time() {
        let l = lind(1e6);
        let w = window(4.0 * l.spec.h_norm(), 2.0).unwrap();
        let a = discretized_generator(&l, &gauss_hermite(12).unwrap(), &w).unwrap();
        let b = gkls_at_time(&l, 0.0, &w).unwrap();
        assert!((&a.matrix - &b.matrix).norm() <= 1e-6 * b.matrix.norm());
        assert!(a.trace_residual() < 1e-10);
    }

    #[test]
    fn davies_rejected() {
        let l = lind(0.0);
        let w = window(4.0 * l.spec.h_norm(), 2.0).unwrap();
        assert!(matches!(discretized_generator(&l, &gauss_hermite(4).unwrap(), &w), Err(Error::DaviesQuadrature)));
    }

    #[test]
    fn bound_solver() {
        let b = DiscretizationBound::new(64.0, &[3.0, 3.0], 1.0, 1.0, 9).unwrap();
        let n = b.nodes_for(1e-6);
        assert!(b.value(n) <= 1e-6 && b.value(n - 1) > 1e-6);
        // lemma's sufficient count
        let m = (b.c * b.c / 2.0 + (b.k / 1e-6).log2()).ceil() as usize;
        assert!(b.value(m) <= 1e-6);
    }
}

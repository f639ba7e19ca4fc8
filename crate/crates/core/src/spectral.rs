//! KMS symmetrization on Hilbert–Schmidt space, spectral gaps and gap scans.

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DVector;

use crate::error::invalid;
use crate::lindblad::{GibbsState, SigmaE, Superoperator};
use crate::linalg::{c, BlockEigen};
use crate::model::SamplerSetup;
use crate::{CMatrix, Error, Result, C64};
#[allow(unused_imports)]
use num_traits::Float;

/// Γ^{−1}∘L∘Γ with Γ(x) = σ^{1/4}xσ^{1/4}, in the eigenbasis product basis.
#[derive(Debug, Clone)]
pub struct SymmetrizedGenerator {
    pub dim: usize,
    pub matrix: CMatrix,
    pub herm_residual: f64,
    /// log of the diagonal of σ^{1/4}.
    pub log_sigma_quarter: Vec<f64>,
}

impl SymmetrizedGenerator {
    pub fn sigma_quarter(&self) -> Vec<f64> {
        self.log_sigma_quarter.iter().map(|x| x.exp()).collect()
    }

    /// vec(σ^{1/2}).
    pub fn sqrt_sigma(&self) -> DVector<C64> {
        let d = self.dim;
        let mut v = DVector::zeros(d * d);
        for i in 0..d {
            v[i + d * i] = c((2.0 * self.log_sigma_quarter[i]).exp(), 0.0);
        }
        v
    }
}

/// Beyond this exponent only the damped side of a pair is used.
const STABLE_EXP: f64 = 30.0;

pub fn kms_symmetrize(l: &Superoperator, sigma: &GibbsState) -> Result<SymmetrizedGenerator> {
    let d = l.dim;
    if sigma.log_weights.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: sigma.log_weights.len() });
    }
    let q: Vec<f64> = sigma.log_weights.iter().map(|x| x / 4.0).collect();
    let n = d * d;
    let lm = &l.matrix;
    let mut m = CMatrix::zeros(n, n);
    let mut diff2 = 0.0;
    for b in 0..n {
        let (j, ll) = (b % d, b / d);
        for a in 0..=b {
            let (i, k) = (a % d, a / d);
            // M_ab = L_ab (σ_j σ_l / σ_i σ_k)^{1/4}
            let x = q[j] + q[ll] - q[i] - q[k];
            let (lab, lba) = (lm[(a, b)], lm[(b, a)]);
            let v = if x.abs() <= STABLE_EXP {
                let p = lab * x.exp();
                let r = lba.conj() * (-x).exp();
                diff2 += (p - r).norm_sqr();
                (p + r) * 0.5
            } else if x > 0.0 {
                lba.conj() * (-x).exp()
            } else {
                lab * x.exp()
            };
            m[(a, b)] = v;
            m[(b, a)] = v.conj();
        }
    }
    let norm = m.norm();
    // each off-diagonal discrepancy appears twice in ‖M − M†‖_F
    let herm_residual = if norm > 0.0 { (2.0 * diff2).sqrt() / norm } else { 0.0 };
    if herm_residual > 1e-6 {
        return Err(Error::KmsViolated(herm_residual));
    }
    Ok(SymmetrizedGenerator { dim: d, matrix: m, herm_residual, log_sigma_quarter: q })
}

#[derive(Debug, Clone, PartialEq)]
#[derive(Default)]
pub struct GapMeta {
    pub sigma_e: Option<SigmaE>,
    pub cutoff: Option<usize>,
    pub filter: String,
    pub beta: Option<f64>,
}


#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub gap: f64,
    pub kernel_dim: usize,
    pub kernel_threshold: f64,
    /// The 10 eigenvalues of smallest modulus, ordered by modulus.
    pub spectrum_low: Vec<f64>,
    pub max_eigenvalue: f64,
    pub spectral_radius: f64,
    /// ‖P_ker vec(σ^{1/2})‖²/‖vec(σ^{1/2})‖².
    pub kernel_overlap: f64,
    pub herm_residual: f64,
    pub meta: GapMeta,
}

pub fn spectral_gap(sym: &SymmetrizedGenerator, tau: Option<f64>) -> Result<GapReport> {
    let d = sym.dim;
    let be = BlockEigen::new_selective(&sym.matrix, |idx| idx.iter().any(|&a| a % d == a / d));
    let vals = be.values();
    let radius = vals.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
    let tau = tau.unwrap_or(1e-8 * radius);
    let mut by_mod = vals.clone();
    by_mod.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let kernel_dim = by_mod.iter().take_while(|v| v.abs() < tau).count();
    let gap = by_mod.get(kernel_dim).map(|v| v.abs()).ok_or(Error::EmptyGap)?;
    let s = sym.sqrt_sigma();
    let s2 = s.norm_squared();
    let mut overlap = 0.0;
    for (bi, blk) in be.blocks.iter().enumerate() {
        if blk.vectors.is_none() {
            continue;
        }
        for (k, v) in blk.values.iter().enumerate() {
            if v.abs() < tau {
                let u = be.vector(bi, k).unwrap();
                overlap += u.dotc(&s).norm_sqr() / s2;
            }
        }
    }
    Ok(GapReport {
        gap,
        kernel_dim,
        kernel_threshold: tau,
        spectrum_low: by_mod.into_iter().take(10).collect(),
        max_eigenvalue: *vals.last().unwrap_or(&0.0),
        spectral_radius: radius,
        kernel_overlap: overlap,
        herm_residual: sym.herm_residual,
        meta: GapMeta::default(),
    })
}

/// Gap of the sampler at one σ_E.
pub fn gap_for(setup: &SamplerSetup, sigma: SigmaE) -> Result<GapReport> {
    let built = setup.build(sigma)?;
    let sym = kms_symmetrize(&built.superop, &built.gibbs)?;
    let mut r = spectral_gap(&sym, None)?;
    r.meta = GapMeta { sigma_e: Some(sigma), cutoff: Some(setup.cutoff), filter: String::from(setup.filter.kind()), beta: Some(setup.beta) };
    Ok(r)
}

#[derive(Debug, Clone)]
pub struct SigmaScan {
    pub reports: Vec<GapReport>,
    /// gap non-increasing along ascending σ_E within 1e−8.
    pub monotone: bool,
}

pub fn gap_scan_sigma(setup: &SamplerSetup, grid: &[SigmaE]) -> Result<SigmaScan> {
    if grid.windows(2).any(|w| w[0].value() > w[1].value()) {
        return Err(invalid("sigma_grid", "must be sorted ascending"));
    }
    let spec = setup.spectral()?;
    let mut reports = Vec::with_capacity(grid.len());
    for &s in grid {
        let built = setup.build_with(spec.clone(), s)?;
        let sym = kms_symmetrize(&built.superop, &built.gibbs)?;
        let mut r = spectral_gap(&sym, None)?;
        r.meta = GapMeta { sigma_e: Some(s), cutoff: Some(setup.cutoff), filter: String::from(setup.filter.kind()), beta: Some(setup.beta) };
        reports.push(r);
    }
    let monotone = reports.windows(2).all(|w| w[1].gap <= w[0].gap + 1e-8);
    Ok(SigmaScan { reports, monotone })
}

#[derive(Debug, Clone)]
pub struct TruncationScan {
    pub reports: Vec<GapReport>,
    pub strictly_decreasing: bool,
    pub min_over_max: f64,
    /// Least-squares slope of log gap against log M.
    pub log_log_slope: f64,
}

pub fn gap_scan_truncation(setup: &SamplerSetup, sigma: SigmaE, m_grid: &[usize]) -> Result<TruncationScan> {
    if m_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("M_grid", "must be strictly ascending"));
    }
    let reports = m_grid.iter().map(|&m| gap_for(&setup.with_cutoff(m), sigma)).collect::<Result<Vec<_>>>()?;
    Ok(summarize_truncation(reports))
}

pub fn summarize_truncation(reports: Vec<GapReport>) -> TruncationScan {
    let gaps: Vec<f64> = reports.iter().map(|r| r.gap).collect();
    let strictly_decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let (mn, mx) = gaps.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &g| (a.min(g), b.max(g)));
    let pts: Vec<(f64, f64)> = reports.iter().map(|r| ((r.meta.cutoff.unwrap_or(1) as f64).ln(), r.gap.ln())).collect();
    TruncationScan { reports, strictly_decreasing, min_over_max: mn / mx, log_log_slope: crate::filters::linear_slope(&pts) }
}

/// ℰ(x) = −⟨x, M x⟩.
pub fn dirichlet_form(sym: &SymmetrizedGenerator, x: &DVector<C64>) -> Result<f64> {
    if x.len() != sym.matrix.nrows() {
        return Err(Error::DimensionMismatch { expected: sym.matrix.nrows(), found: x.len() });
    }
    if x.norm() == 0.0 {
        return Err(invalid("x", "must be nonzero"));
    }
    let v = -x.dotc(&(&sym.matrix * x));
    let scale = x.norm_squared() * sym.matrix.norm();
    if v.im.abs() > 1e-10 * scale.max(v.re.abs()) {
        return Err(Error::Precondition(alloc::format!("Dirichlet form not real: imaginary part {:e}", v.im)));
    }
    Ok(v.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FilterSpec, HamiltonianModel};

    #[test]
    fn qou_hs_generator() {
        let setup = SamplerSetup::new(HamiltonianModel::Linear { gamma: 1.0 }, 1.0, FilterSpec::Metropolis, 10);
        let built = setup.build(SigmaE::Infinite).unwrap();
        let sym = kms_symmetrize(&built.superop, &built.gibbs).unwrap();
        let f = setup.filter_function().unwrap();
        let (np, nm) = (f.eval(1.0).norm_sqr(), f.eval(-1.0).norm_sqr());
        let a = &setup.bare_jumps().unwrap()[0].matrix;
        let d = a.nrows();
        let id = CMatrix::identity(d, d);
        let ad = a.adjoint();
        let (n, aad) = (&ad * a, a * &ad);
        let k = crate::linalg::kron;
        // −½ν₋{N,x} − ½ν₊{aa†,x} + √(ν₊ν₋)(a x a† + a† x a); aa† = N+1 away from the cutoff
        let expect = (k(&id, &n) + k(&n.transpose(), &id)) * c(-nm / 2.0, 0.0)
            + (k(&id, &aad) + k(&aad.transpose(), &id)) * c(-np / 2.0, 0.0)
            + (k(&a.conjugate(), a) + k(&ad.conjugate(), &ad)) * c((np * nm).sqrt(), 0.0);
        assert!((&sym.matrix - expect).norm() < 1e-10);
        assert!(sym.herm_residual < 1e-12);
        assert!((&sym.matrix * sym.sqrt_sigma()).norm() < 1e-10);
    }

    #[test]
    fn quadratic_kernel_is_one_dimensional() {
        let setup = SamplerSetup::new(HamiltonianModel::Quadratic, 1.0, FilterSpec::Metropolis, 10);
        let built = setup.build(SigmaE::Finite(1.0)).unwrap();
        let sym = kms_symmetrize(&built.superop, &built.gibbs).unwrap();
        assert!(sym.herm_residual < 1e-10);
        let r = spectral_gap(&sym, None).unwrap();
        assert_eq!(r.kernel_dim, 1);
        assert!(r.kernel_overlap > 1.0 - 1e-8);
        assert!(r.max_eigenvalue <= 1e-10 * r.spectral_radius);
    }

    #[test]
    fn broken_filter_detected() {
        let setup = SamplerSetup::new(HamiltonianModel::Quadratic, 1.0, FilterSpec::Metropolis, 5);
        let spec = setup.spectral().unwrap();
        let f = crate::filters::custom(1.0, "broken", |x| c((-x * x).exp(), 0.0)).unwrap();
        let (_, s) = crate::lindblad::assemble(spec.clone(), &setup.bare_jumps().unwrap(), &f, SigmaE::Infinite, 1.0).unwrap();
        let g = crate::lindblad::gibbs(&spec, 1.0).unwrap();
        assert!(matches!(kms_symmetrize(&s, &g), Err(Error::KmsViolated(_))));
    }

    #[test]
    fn linear_model_ignores_sigma() {
        let setup = SamplerSetup::new(HamiltonianModel::Linear { gamma: 1.0 }, 1.0, FilterSpec::Metropolis, 12);
        let scan = gap_scan_sigma(&setup, &[SigmaE::Davies, SigmaE::Finite(1.0), SigmaE::Infinite]).unwrap();
        let g: Vec<f64> = scan.reports.iter().map(|r| r.gap).collect();
        assert!((g[0] - g[1]).abs() < 1e-12 && (g[1] - g[2]).abs() < 1e-12);
        assert!(scan.monotone);
    }
}

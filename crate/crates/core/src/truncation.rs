//! Measured truncation and regularization errors against their analytic bounds.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::invalid;
use crate::filters::{f_diagnostics, metropolis_regularized, Eta};
use crate::fock::TruncatedOperator;
use crate::lindblad::{gibbs, lindbladian, SigmaE};
use crate::linalg::{c, eigh, op_norm, trace_norm_hermitian};
use crate::model::SamplerSetup;
use crate::spectrum::eigendecompose;
use crate::{CMatrix, Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// One line of a bound ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationReport {
    pub quantity: String,
    pub m_values: Vec<usize>,
    pub measured: Vec<f64>,
    pub bound: Vec<f64>,
    pub ratios: Vec<f64>,
    pub flags: Vec<String>,
}

impl TruncationReport {
    pub fn new(quantity: impl Into<String>) -> Self {
        TruncationReport { quantity: quantity.into(), m_values: Vec::new(), measured: Vec::new(), bound: Vec::new(), ratios: Vec::new(), flags: Vec::new() }
    }

    pub fn push(&mut self, m: usize, measured: f64, bound: f64, flag: impl Into<String>) {
        self.m_values.push(m);
        self.measured.push(measured);
        self.bound.push(bound);
        self.ratios.push(if bound > 0.0 { measured / bound } else { f64::NAN });
        self.flags.push(flag.into());
    }

    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().copied().filter(|r| r.is_finite()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpKind {
    Annihilation,
    Creation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpTruncPoint {
    pub measured: f64,
    pub bound: f64,
    pub argmax: usize,
    /// the scanned profile is non-increasing over its last half
    pub monotone_tail: bool,
}

/// Smallest admissible M for the power-k, exponent-κ lemma.
pub fn jump_trunc_threshold(k: usize, kappa: f64) -> f64 {
    (k as f64 / (2.0 * kappa)).powf(1.0 / kappa) + k as f64
}

/// sup_{n>M} of the weighted shift e^{(l−1)m^κ}√(n!/(n−k)!)e^{−l n^κ} (m = n∓k the target level)
/// against M^{k/2}e^{−M^κ}; the creation bound carries 2^{k/2}e^{(l−1)k^κ}.
pub fn jump_trunc_norm(k: usize, kappa: f64, m: usize, level: u32, kind: JumpKind) -> Result<JumpTruncPoint> {
    if !(kappa > 0.0 && kappa <= 0.5) {
        return Err(invalid("kappa", "must lie in (0, 1/2]"));
    }
    if !(level == 1 || level == 2) || k == 0 {
        return Err(invalid("level", "weight level must be 1 or 2 and k >= 1"));
    }
    let thr = jump_trunc_threshold(k, kappa);
    if (m as f64) < thr {
        return Err(Error::Precondition(format!("truncated-jump lemma needs M >= (k/2kappa)^(1/kappa) + k = {thr:.3}")));
    }
    let l = level as f64;
    let log_w = |n: usize| -> f64 {
        let nf = n as f64;
        match kind {
            JumpKind::Annihilation => {
                let s: f64 = (0..k).map(|i| ((n - i) as f64).ln()).sum();
                0.5 * s + (l - 1.0) * ((n - k) as f64).powf(kappa) - l * nf.powf(kappa)
            }
            JumpKind::Creation => {
                let s: f64 = (1..=k).map(|i| ((n + i) as f64).ln()).sum();
                0.5 * s + (l - 1.0) * ((n + k) as f64).powf(kappa) - l * nf.powf(kappa)
            }
        }
    };
    let hi = m + 10 * m;
    let vals: Vec<f64> = (m + 1..=hi).map(log_w).collect();
    let (arg, best) = vals.iter().enumerate().fold((0, f64::NEG_INFINITY), |a, (i, v)| if *v > a.1 { (i, *v) } else { a });
    let half = vals.len() / 2;
    let monotone_tail = vals[half..].windows(2).all(|w| w[1] <= w[0] + 1e-15);
    let mf = m as f64;
    let mut log_bound = 0.5 * k as f64 * mf.ln() - mf.powf(kappa);
    if kind == JumpKind::Creation {
        log_bound += 0.5 * k as f64 * 2f64.ln() + (l - 1.0) * (k as f64).powf(kappa);
    }
    Ok(JumpTruncPoint { measured: best.exp(), bound: log_bound.exp(), argmax: m + 1 + arg, monotone_tail })
}

fn total_number(op: &TruncatedOperator, i: usize) -> usize {
    (0..op.space.modes).map(|mode| op.space.occupation(i, mode)).sum()
}

fn in_cutoff(op: &TruncatedOperator, i: usize, m: usize) -> bool {
    (0..op.space.modes).all(|mode| op.space.occupation(i, mode) <= m)
}

/// P_M X P_M in the reference space.
pub fn project(op: &TruncatedOperator, m: usize) -> CMatrix {
    CMatrix::from_fn(op.dim(), op.dim(), |i, j| if in_cutoff(op, i, m) && in_cutoff(op, j, m) { op.matrix[(i, j)] } else { c(0.0, 0.0) })
}

fn damp(op: &TruncatedOperator, kappa: f64, level: f64) -> CMatrix {
    let d = op.dim();
    CMatrix::from_fn(d, d, |i, j| if i == j { c((-level * (total_number(op, i) as f64).powf(kappa)).exp(), 0.0) } else { c(0.0, 0.0) })
}

/// ‖(H − P_M H P_M)e^{−N^κ}‖ with the reference truncation standing in for H.
pub fn ham_trunc_residual(h_ref: &TruncatedOperator, m: usize, kappa: f64) -> Result<f64> {
    if m > h_ref.space.cutoff {
        return Err(invalid("M", "exceeds the reference cutoff"));
    }
    let diff = &h_ref.matrix - project(h_ref, m);
    Ok(op_norm(&(diff * damp(h_ref, kappa, 1.0))))
}

fn expm_i(h: &CMatrix, t: f64) -> CMatrix {
    let (vals, vecs) = eigh(h);
    let d = vals.len();
    let ph = CMatrix::from_fn(d, d, |i, j| if i == j { c((-t * vals[i]).cos(), (-t * vals[i]).sin()) } else { c(0.0, 0.0) });
    &vecs * ph * vecs.adjoint()
}

/// ‖(e^{−itH} − e^{−itH_{≤M}})e^{−N^κ}‖ on a time grid.
pub fn evol_trunc_residual(h_ref: &TruncatedOperator, m: usize, kappa: f64, t_grid: &[f64]) -> Result<Vec<f64>> {
    if m > h_ref.space.cutoff {
        return Err(invalid("M", "exceeds the reference cutoff"));
    }
    let hm = project(h_ref, m);
    let w = damp(h_ref, kappa, 1.0);
    Ok(t_grid
        .iter()
        .map(|&t| if t == 0.0 { 0.0 } else { op_norm(&((expm_i(&h_ref.matrix, t) - expm_i(&hm, t)) * &w)) })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorTruncation {
    pub m_values: Vec<usize>,
    pub measured: Vec<f64>,
    /// least-squares slope of ln(measured) against M
    pub log_slope: f64,
    /// log10(first/last)
    pub decades: f64,
    /// relative change when M_ref is doubled
    pub reference_change: Vec<f64>,
    pub reference_limited: Vec<bool>,
}

/// ‖(L_ref − L_{≤M})(ρ)‖₁ in the reference space, where L_{≤M} is built from P_M H P_M and P_M A P_M.
pub fn generator_trunc_error(setup: &SamplerSetup, m: usize, m_ref: usize, sigma: SigmaE, rho: &CMatrix) -> Result<f64> {
    if m > m_ref {
        return Err(invalid("M", "exceeds the reference cutoff"));
    }
    let r = setup.with_cutoff(m_ref);
    let f = r.filter_function()?;
    let full = lindbladian(r.spectral()?, &r.bare_jumps()?, &f, sigma, setup.beta)?;
    let h = r.hamiltonian()?;
    let hm = TruncatedOperator::new(h.space, project(&h, m), format!("P{m} H P{m}"))?;
    let spec_m = alloc::sync::Arc::new(eigendecompose(&hm, None, None)?);
    let bare: Vec<TruncatedOperator> = r
        .bare_jumps()?
        .iter()
        .map(|a| TruncatedOperator::new(a.space, project(a, m), format!("P{m} {} P{m}", a.label)))
        .collect::<Result<_>>()?;
    let lm = lindbladian(spec_m.clone(), &bare, &f, sigma, setup.beta)?;
    let spec = &full.spec;
    let a = spec.from_eigenbasis(&full.apply(&spec.to_eigenbasis(rho)));
    let b = spec_m.from_eigenbasis(&lm.apply(&spec_m.to_eigenbasis(rho)));
    let diff = a - b;
    Ok(trace_norm_hermitian(&((&diff + diff.adjoint()) * c(0.5, 0.0))))
}

/// Scan over M with ρ the Gibbs state at β′ in the reference space, repeated at 2·M_ref.
pub fn generator_trunc_scan(setup: &SamplerSetup, m_grid: &[usize], m_ref: usize, sigma: SigmaE, beta_prime: f64) -> Result<GeneratorTruncation> {
    let run = |mr: usize| -> Result<Vec<f64>> {
        let rho = gibbs(&*setup.with_cutoff(mr).spectral()?, beta_prime)?.matrix;
        m_grid.iter().map(|&m| generator_trunc_error(setup, m, mr, sigma, &rho)).collect()
    };
    let measured = run(m_ref)?;
    let doubled = run(2 * m_ref)?;
    let reference_change: Vec<f64> = measured.iter().zip(&doubled).map(|(a, b)| if *a == 0.0 && *b == 0.0 { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) }).collect();
    let reference_limited = reference_change.iter().map(|r| *r > 0.05).collect();
    let pts: Vec<(f64, f64)> = m_grid.iter().zip(&measured).filter(|(_, v)| **v > 0.0).map(|(m, v)| (*m as f64, f64::ln(*v))).collect();
    let log_slope = if pts.len() >= 2 { crate::filters::linear_slope(&pts) } else { f64::NAN };
    let decades = (measured[0] / measured[measured.len() - 1]).log10();
    Ok(GeneratorTruncation { m_values: m_grid.to_vec(), measured, log_slope, decades, reference_change, reference_limited })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGrowth {
    pub r_hat: f64,
    pub per_time: Vec<(f64, f64)>,
    /// weight of the extremal evolved vector on the top 10% of levels
    pub boundary_weight: f64,
    pub warning: Option<String>,
}

/// r̂ = max_t log λ_max(e^{−kN^κ/2}e^{−itH}e^{kN^κ}e^{itH}e^{−kN^κ/2})/|t|^{2κ}.
pub fn energy_growth_fit(h: &TruncatedOperator, kappa: f64, k: u32, t_grid: &[f64]) -> Result<EnergyGrowth> {
    if h.space.modes != 1 {
        return Err(invalid("H", "energy growth fit is single-mode"));
    }
    if !(k == 2 || k == 4) {
        return Err(invalid("k", "level must be 2 or 4"));
    }
    let kf = k as f64;
    let up = damp(h, kappa, -kf / 2.0);
    let down = damp(h, kappa, kf / 2.0);
    let d = h.dim();
    let top = d - (d / 10).max(1);
    let mut per_time = Vec::new();
    let mut boundary_weight: f64 = 0.0;
    for &t in t_grid {
        if t == 0.0 {
            continue;
        }
        let u = expm_i(&h.matrix, -t);
        let z = &up * &u * &down;
        let svd = z.clone().svd(true, true);
        let (imax, smax) = svd.singular_values.iter().enumerate().fold((0, 0.0), |a, (i, s)| if *s > a.1 { (i, *s) } else { a });
        per_time.push((t, 2.0 * smax.ln() / t.abs().powf(2.0 * kappa)));
        let v = svd.v_t.as_ref().unwrap().row(imax).adjoint();
        let w = &u * (&down * v);
        let tot = w.norm_squared();
        let edge: f64 = (top..d).map(|i| w[i].norm_sqr()).sum();
        boundary_weight = boundary_weight.max(edge / tot);
    }
    let r_hat = per_time.iter().map(|p| p.1).fold(0.0, f64::max);
    let warning = (boundary_weight > 1e-6).then(|| format!("boundary contamination: weight {boundary_weight:.3e} on the top 10% of levels"));
    Ok(EnergyGrowth { r_hat, per_time, boundary_weight, warning })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularizationPoint {
    pub delta: f64,
    pub measured: f64,
    pub measured_half: f64,
    /// measured(δ)/measured(δ/2)
    pub ratio: f64,
    pub rhs: f64,
}

/// ‖(L_{f̂_M} − L_{f̂_{M_δ}})(ρ)‖₁ for each δ, with the explicit right-hand side evaluated at
/// γ = μ = 0 and F̃ = F (so every Σ F/F̃ counts the truncated spectrum).
pub fn regularization_error(setup: &SamplerSetup, sigma_e: f64, delta_grid: &[f64], theta: f64, rho: &CMatrix) -> Result<Vec<RegularizationPoint>> {
    if !(sigma_e > 0.0 && sigma_e.is_finite()) {
        return Err(invalid("sigma_E", "must be finite and positive"));
    }
    let sigma = SigmaE::new(sigma_e)?;
    let spec = setup.spectral()?;
    let bare = setup.bare_jumps()?;
    let beta = setup.beta;
    let rho_e = spec.to_eigenbasis(rho);
    let build = |delta: f64| -> Result<CMatrix> {
        let f = metropolis_regularized(beta, delta, theta)?;
        Ok(lindbladian(spec.clone(), &bare, &f, sigma, beta)?.apply(&rho_e))
    };
    let base = build(0.0)?;
    let fm = metropolis_regularized(beta, 0.0, theta)?;
    let diag = f_diagnostics(&spec, &fm, sigma_e, Some(Eta::TwoTheta(theta)))?;
    let dn = spec.dim() as f64;
    let cst = (dn * dn).max(2.0 * dn);
    let fmat = |v: &[f64]| CMatrix::from_fn(v.len(), v.len(), |i, j| if i == j { c(v[i], 0.0) } else { c(0.0, 0.0) });
    let (f1, feta, fs1, fs2) = (fmat(&diag.f1), fmat(&diag.f_eta), fmat(&diag.f_eta_sigma_1), fmat(&diag.f_eta_sigma_2));
    let tn = |m: CMatrix| crate::linalg::trace_norm(&m);
    let energy = tn(&f1 * &rho_e * &feta);
    let energy_s = tn(&fs1 * &rho_e) + tn(&fs2 * &rho_e);
    let a2: f64 = bare.iter().map(|a| op_norm(&a.matrix).powi(2)).sum();
    let measure = |delta: f64| -> Result<f64> {
        if delta == 0.0 {
            return Ok(0.0);
        }
        let d = &base - build(delta)?;
        Ok(trace_norm_hermitian(&((&d + d.adjoint()) * c(0.5, 0.0))))
    };
    delta_grid
        .iter()
        .map(|&delta| {
            let measured = measure(delta)?;
            let measured_half = measure(delta / 2.0)?;
            Ok(RegularizationPoint {
                delta,
                measured,
                measured_half,
                ratio: measured / measured_half,
                rhs: cst * delta * a2 * (energy + energy_s),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_hn, FockSpace};
    use crate::model::{FilterSpec, HamiltonianModel};

    #[test]
    fn jump_closed_form() {
        let p = jump_trunc_norm(1, 0.5, 16, 1, JumpKind::Annihilation).unwrap();
        let x = 17f64.sqrt();
        assert!((p.measured - x * (-x).exp()).abs() < 1e-15);
        assert!((p.bound - 4.0 * (-4f64).exp()).abs() < 1e-15);
        assert!(p.measured <= p.bound && p.monotone_tail);
        let q = jump_trunc_norm(2, 0.25, 300, 1, JumpKind::Annihilation).unwrap();
        assert!(q.measured <= q.bound);
        assert!(jump_trunc_norm(1, 0.5, 2, 1, JumpKind::Annihilation).is_ok());
        assert!(matches!(jump_trunc_norm(2, 0.25, 200, 1, JumpKind::Annihilation), Err(Error::Precondition(_))));
        for kind in [JumpKind::Annihilation, JumpKind::Creation] {
            for l in [1, 2] {
                let r = jump_trunc_norm(1, 0.5, 20, l, kind).unwrap();
                assert!(r.measured <= r.bound, "{kind:?} {l}");
            }
        }
    }

    #[test]
    fn diagonal_residuals() {
        let sp = FockSpace::single(40).unwrap();
        let tab: Vec<f64> = (0..=40).map(|n| (n * n) as f64).collect();
        let h = build_hn(sp, &tab).unwrap();
        let r = ham_trunc_residual(&h, 16, 0.25).unwrap();
        let exact = (17..=40).map(|n| tab[n] * (-(n as f64).powf(0.25)).exp()).fold(0.0, f64::max);
        assert!((r - exact).abs() < 1e-10 * exact);
        assert_eq!(ham_trunc_residual(&h, 40, 0.25).unwrap(), 0.0);
        let ev = evol_trunc_residual(&h, 16, 0.25, &[0.0, 1.0, 1e-4, 2e-4]).unwrap();
        assert_eq!(ev[0], 0.0);
        assert!(ev[1] <= r * (1.0 + 1e-10));
        assert!((ev[3] / ev[2] - 2.0).abs() < 0.4);
    }

    #[test]
    fn commuting_growth_vanishes() {
        let sp = FockSpace::single(30).unwrap();
        let tab: Vec<f64> = (0..=30).map(|n| (n * n) as f64).collect();
        let h = build_hn(sp, &tab).unwrap();
        let g = energy_growth_fit(&h, 0.25, 2, &[0.5, 1.0, 2.0]).unwrap();
        assert!(g.r_hat <= 1e-10);
    }

    #[test]
    fn gibbs_is_annihilated_by_both() {
        let s = SamplerSetup::new(HamiltonianModel::Quadratic, 0.05, FilterSpec::Gaussian { sigma_gamma: 10.0 }, 20);
        let spec = s.spectral().unwrap();
        let rho = gibbs(&spec, 0.05).unwrap().matrix;
        let v = generator_trunc_error(&s, 8, 20, SigmaE::Infinite, &rho).unwrap();
        assert!(v < 1e-12, "{v}");
    }

    #[test]
    fn regularization_zero_delta() {
        let s = SamplerSetup::new(HamiltonianModel::Quadratic, 1.0, FilterSpec::Metropolis, 6);
        let spec = s.spectral().unwrap();
        let rho = gibbs(&spec, 2.0).unwrap().matrix;
        let p = regularization_error(&s, 1.0, &[0.0, 1e-3], 0.3, &rho).unwrap();
        assert_eq!(p[0].measured, 0.0);
        assert!(p[1].measured > 0.0 && p[1].measured <= p[1].rhs);
    }
}

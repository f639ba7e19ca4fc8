//! Birth–death structure of h(N) samplers and the Carbone–Fagnola gap certificate.

use alloc::vec::Vec;

use crate::error::invalid;
use crate::filters::{FilterFunction, FilterKind};
use crate::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq)]
pub struct BirthDeathRates {
    /// μ⁺_n = √(n+1)·f̂(E_{n+1}−E_n), n = 0..=n_max
    pub mu_plus: Vec<f64>,
    /// μ⁻_n = √n·f̂(E_{n−1}−E_n), n = 0..=n_max
    pub mu_minus: Vec<f64>,
    /// log⟨n|σ_β|n⟩ with Z summed over 0..=n_max
    pub gibbs_log_weights: Vec<f64>,
    /// ln μ⁺_n, finite where μ⁺_n underflows
    pub log_mu_plus: Vec<f64>,
    pub energies: Vec<f64>,
    pub beta: f64,
    pub n_max: usize,
}

/// ln f̂ for the Metropolis family, evaluated without underflow.
fn log_filter(f: &FilterFunction, nu: f64) -> f64 {
    let x = f.beta * nu;
    let base = -((1.0 + x * x).sqrt() + x) / 4.0;
    match f.kind {
        FilterKind::MetropolisRegularized { delta, theta } => base - delta * (1.0 + x * x).powf(theta).exp(),
        _ => base,
    }
}

/// Rates for energies `h[0..=n_max+1]`.
pub fn bd_rates(h: &[f64], f: &FilterFunction, beta: f64, n_max: usize) -> Result<BirthDeathRates> {
    if !matches!(f.kind, FilterKind::Metropolis | FilterKind::MetropolisRegularized { .. }) {
        return Err(invalid("filter", "birth-death certificate needs a Metropolis filter"));
    }
    if n_max < 10 {
        return Err(invalid("n_max", "must be at least 10"));
    }
    if h.len() < n_max + 2 {
        return Err(Error::DimensionMismatch { expected: n_max + 2, found: h.len() });
    }
    let log_mu_plus: Vec<f64> = (0..=n_max).map(|n| 0.5 * ((n + 1) as f64).ln() + log_filter(f, h[n + 1] - h[n])).collect();
    let mu_plus: Vec<f64> = log_mu_plus.iter().map(|x| x.exp()).collect();
    let mu_minus: Vec<f64> = (0..=n_max).map(|n| if n == 0 { 0.0 } else { (n as f64).sqrt() * f.eval(h[n - 1] - h[n]).re }).collect();
    let e0 = h[..=n_max].iter().copied().fold(f64::INFINITY, f64::min);
    let z: f64 = h[..=n_max].iter().map(|e| (-beta * (e - e0)).exp()).sum();
    let gibbs_log_weights = h[..=n_max].iter().map(|e| -beta * (e - e0) - z.ln()).collect();
    Ok(BirthDeathRates { mu_plus, mu_minus, gibbs_log_weights, log_mu_plus, energies: h[..=n_max + 1].to_vec(), beta, n_max })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Condition0 {
    pub value: f64,
    pub argmin: usize,
    /// (μ⁻_n)² increasing past the minimizer on the probed range.
    pub monotone_tail: bool,
}

/// inf_{n ≥ 1} ((μ⁻_n)² + (μ⁺_n − μ⁺_0)²).
pub fn check_condition0(r: &BirthDeathRates) -> Condition0 {
    let term = |n: usize| r.mu_minus[n].powi(2) + (r.mu_plus[n] - r.mu_plus[0]).powi(2);
    let (argmin, value) = (1..=r.n_max).map(|n| (n, term(n))).fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let monotone_tail = (argmin..r.n_max).all(|n| r.mu_minus[n + 1] >= r.mu_minus[n]);
    Condition0 { value, argmin, monotone_tail }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapCertificate {
    pub gamma: f64,
    pub c: f64,
    pub d: f64,
    pub cond0: f64,
    pub lower_bound: f64,
    /// (m, k) attaining c and d
    pub c_argmax: (usize, usize),
    pub d_argmax: (usize, usize),
    /// relative geometric tail added to the worst-case sums
    pub c_tail: f64,
    pub d_tail: f64,
    /// worst-case slack c·rhs − lhs over the scan for conditions 1 and 2 (0 at the argmax)
    pub residuals: [f64; 2],
}

/// Sum of `terms` plus a geometric tail from the last two terms; None when the terms do not decay.
fn sum_with_tail(terms: &[f64]) -> Option<(f64, f64)> {
    let s: f64 = terms.iter().sum();
    let n = terms.len();
    if n < 2 {
        return Some((s, 0.0));
    }
    let (a, b) = (terms[n - 2], terms[n - 1]);
    if b == 0.0 {
        return Some((s, 0.0));
    }
    let q = b / a;
    if !(q < 1.0) {
        return None;
    }
    let tail = b * q / (1.0 - q);
    Some((s + tail, tail / s.max(f64::MIN_POSITIVE)))
}

/// Ratio of condition 1 at (m, k): Σ_{j>m}√(w_j w_{j+k}) / (μ⁺_m μ⁺_{m+k}√(w_m w_{m+k})).
pub fn condition1_ratio(r: &BirthDeathRates, m: usize, k: usize) -> Option<(f64, f64)> {
    let lw = &r.gibbs_log_weights;
    let base = 0.5 * (lw[m] + lw[m + k]);
    let lm = &r.log_mu_plus;
    let base = base + lm[m] + lm[m + k];
    let terms: Vec<f64> = (m + 1..=r.n_max - k).map(|j| (0.5 * (lw[j] + lw[j + k]) - base).exp()).collect();
    sum_with_tail(&terms)
}

/// Ratio of condition 2 at (m, k) for a given γ.
pub fn condition2_ratio(r: &BirthDeathRates, gamma: f64, m: usize, k: usize) -> Option<(f64, f64)> {
    let lw = &r.gibbs_log_weights;
    let base = 0.5 * (lw[m] + lw[m + k]);
    let lm = &r.log_mu_plus;
    let base = base + lm[m] + lm[m + k];
    let terms: Vec<f64> = (m + 1..=r.n_max - k)
        .map(|j| (-((j - m) as f64) * gamma.ln() + 0.5 * (lw[j] + lw[j + k]) + lm[j] + lm[j + k] - base).exp())
        .collect();
    sum_with_tail(&terms)
}

struct Sup {
    value: f64,
    arg: (usize, usize),
    tail: f64,
}

fn scan_sup(r: &BirthDeathRates, k_min: usize, k_max: usize, f: impl Fn(usize, usize) -> Option<(f64, f64)>) -> Option<Sup> {
    let mut best = Sup { value: f64::NEG_INFINITY, arg: (0, 0), tail: 0.0 };
    for k in k_min..=k_max {
        for m in 0..r.n_max - k_max {
            let (v, t) = f(m, k)?;
            if v > best.value {
                best = Sup { value: v, arg: (m, k), tail: t };
            }
        }
    }
    Some(best)
}

/// The bound min{(1/c)(d+1+γ/(1−γ))^{−1}, inf_{n>0} ((μ⁻_n)²+(μ⁺_n−μ⁺_0)²)/(1+cμ⁺_0μ⁺_n(1+(d+1)/γ))}.
pub fn lower_bound_formula(r: &BirthDeathRates, gamma: f64, c: f64, d: f64) -> f64 {
    let first = 1.0 / (c * (d + 1.0 + gamma / (1.0 - gamma)));
    let second = (1..=r.n_max)
        .map(|n| {
            let num = r.mu_minus[n].powi(2) + (r.mu_plus[n] - r.mu_plus[0]).powi(2);
            num / (1.0 + c * r.mu_plus[0] * r.mu_plus[n] * (1.0 + (d + 1.0) / gamma))
        })
        .fold(f64::INFINITY, f64::min);
    first.min(second)
}

/// Fits c and d over m ∈ [0, n_max−k_max), k ∈ [1, k_max] and keeps the γ with the best bound.
pub fn fit_constants(r: &BirthDeathRates, gamma_candidates: &[f64], k_max: usize) -> Result<GapCertificate> {
    fit_constants_from(r, gamma_candidates, 1, k_max)
}

/// As [`fit_constants`] with the shift k starting at `k_min` (0 adds the diagonal conditions).
pub fn fit_constants_from(r: &BirthDeathRates, gamma_candidates: &[f64], k_min: usize, k_max: usize) -> Result<GapCertificate> {
    if k_max == 0 || k_max + 2 > r.n_max || k_min > k_max {
        return Err(invalid("k_max", "must satisfy k_min <= k_max, 1 <= k_max <= n_max - 2"));
    }
    let c = scan_sup(r, k_min, k_max, |m, k| condition1_ratio(r, m, k)).ok_or(Error::NotCertifiable)?;
    let cond0 = check_condition0(r).value;
    let mut best: Option<GapCertificate> = None;
    for &g in gamma_candidates {
        if !(g > 0.0 && g < 1.0) {
            continue;
        }
        let Some(d) = scan_sup(r, k_min, k_max, |m, k| condition2_ratio(r, g, m, k)) else { continue };
        if !d.value.is_finite() {
            continue;
        }
        let lb = lower_bound_formula(r, g, c.value, d.value);
        if best.as_ref().is_none_or(|b| lb > b.lower_bound) {
            best = Some(GapCertificate {
                gamma: g,
                c: c.value,
                d: d.value,
                cond0,
                lower_bound: lb,
                c_argmax: c.arg,
                d_argmax: d.arg,
                c_tail: c.tail,
                d_tail: d.tail,
                residuals: [0.0, 0.0],
            });
        }
    }
    best.ok_or(Error::NotCertifiable)
}

pub fn gap_lower_bound(cert: &GapCertificate, r: &BirthDeathRates) -> f64 {
    lower_bound_formula(r, cert.gamma, cert.c, cert.d)
}

/// 16 log-spaced γ in (e^{−βδ/s}+ε, 1−ε).
pub fn default_gamma_grid(beta: f64, delta: f64, s: usize) -> Vec<f64> {
    let lo = (-beta * delta / s as f64).exp() + 1e-3;
    let hi: f64 = 1.0 - 1e-3;
    (0..16).map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / 15.0).exp()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplicitConstants {
    pub c_tilde: f64,
    pub d_tilde: f64,
    pub gamma_tilde: f64,
    pub q: f64,
    pub c_gamma: f64,
}

/// c̃ and d̃ from separated energies (E_{m+s} − E_m ≥ δ beyond n₀).
pub fn explicit_kappa(beta: f64, n0: usize, delta: f64, s: usize, delta_e: f64, gamma: f64) -> Result<ExplicitConstants> {
    if !(beta > 0.0 && delta > 0.0 && s >= 1) {
        return Err(invalid("beta/delta/s", "must be positive"));
    }
    let floor = (-beta * delta / s as f64).exp();
    if !(gamma > floor && gamma < 1.0) {
        return Err(invalid("gamma", "must lie in (exp(-beta*delta/s), 1)"));
    }
    let gt = 0.5 * (gamma + 1.0);
    let q = floor / gt;
    if q >= 1.0 {
        return Err(invalid("q", "geometric ratio must be below 1"));
    }
    let n0f = (n0 + 1) as f64;
    let c_tilde = n0f * (beta * delta_e).exp() * (beta * delta).exp() / (1.0 - floor);
    // the ratio is largest at m = k = 0 for each j − m = i, leaving sup_i (γ/γ̃)^i (i+1);
    // that sequence decreases once i ≥ 1/ln(γ̃/γ) − 1
    let rr = gamma / gt;
    let i_stop = ((1.0 / (-rr.ln())).ceil() as usize).max(1) + 1;
    let c_gamma = (1..=i_stop).map(|i| rr.powi(i as i32) * (i + 1) as f64).fold(0.0, f64::max);
    let d_tilde = c_gamma * n0f * gt.powi(-(n0 as i32)) * (beta * delta_e).exp() * (beta * delta).exp() / (1.0 - q);
    Ok(ExplicitConstants { c_tilde, d_tilde, gamma_tilde: gt, q, c_gamma })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnProbe {
    pub n0: usize,
    /// E_{m+s} − E_m ≥ δ for all probed m ≥ n₀
    pub item1: bool,
    /// sup_m Σ_{j≥m} e^{−β(E_j−E_m)} settled on the probed range
    pub item3: bool,
    pub bound: f64,
    pub measured_sup: f64,
    pub delta_e: f64,
}

pub fn en_equivalence_probe(e: &[f64], beta: f64, s: usize, delta: f64) -> Result<EnProbe> {
    let n = e.len();
    if n < 4 || s == 0 || s >= n {
        return Err(invalid("E", "sequence too short for the probe"));
    }
    let mut n0 = n - 1;
    while n0 > 0 && e[n0 - 1] <= e[n0] {
        n0 -= 1;
    }
    let item1 = (n0..n - s).all(|m| e[m + s] - e[m] >= delta);
    let sup_sum = |len: usize| {
        (0..len)
            .map(|m| (m..len).map(|j| (-beta * (e[j] - e[m])).exp()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let measured_sup = sup_sum(n);
    let half = sup_sum(n / 2);
    let settled = (measured_sup - half).abs() <= 1e-6 * measured_sup;
    let top = (2 * n0).min(n - 1);
    let delta_e = (0..=top).flat_map(|j| (0..=top).map(move |m| (j, m))).map(|(j, m)| (e[j] - e[m]).abs()).fold(0.0, f64::max);
    let bound = (n0 + 1) as f64 * (beta * delta_e).exp() * (beta * delta).exp() / (1.0 - (-beta * delta / s as f64).exp());
    Ok(EnProbe { n0, item1, item3: settled && (!item1 || measured_sup <= bound), bound, measured_sup, delta_e })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::metropolis;

    fn rates(h: impl Fn(usize) -> f64, beta: f64) -> BirthDeathRates {
        let tab: Vec<f64> = (0..=201).map(h).collect();
        bd_rates(&tab, &metropolis(beta).unwrap(), beta, 200).unwrap()
    }

    #[test]
    fn linear_rates() {
        let r = rates(|n| n as f64, 1.0);
        let (p, m) = ((-(2f64.sqrt() + 1.0) / 4.0).exp(), (-(2f64.sqrt() - 1.0) / 4.0).exp());
        for n in 0..20 {
            assert!((r.mu_plus[n] - ((n + 1) as f64).sqrt() * p).abs() < 1e-14);
            assert!((r.mu_minus[n] - (n as f64).sqrt() * m).abs() < 1e-14);
        }
        assert_eq!(r.mu_minus[0], 0.0);
        let c0 = check_condition0(&r);
        assert_eq!(c0.argmin, 1);
        assert!((c0.value - (m * m + ((2f64.sqrt() - 1.0) * p).powi(2))).abs() < 1e-14);
    }

    #[test]
    fn quadratic_rate() {
        let r = rates(|n| (n * n) as f64, 1.0);
        assert!((r.mu_minus[3] - 3f64.sqrt() * metropolis(1.0).unwrap().eval(-5.0).re).abs() < 1e-15);
        let r2 = rates(|n| (n * n) as f64, 2.0);
        assert!(check_condition0(&r2).value > 0.0);
    }

    #[test]
    fn explicit_constant_value() {
        let k = explicit_kappa(1.0, 0, 1.0, 1, 0.0, 0.7).unwrap();
        let e = 1f64.exp();
        assert!((k.c_tilde - e / (1.0 - 1.0 / e)).abs() < 1e-12);
        assert!(explicit_kappa(1.0, 0, 1.0, 1, 0.0, 0.2).is_err());
    }

    #[test]
    fn small_gamma_diverges() {
        let r = rates(|n| n as f64, 1.0);
        assert!(condition2_ratio(&r, 0.3, 0, 1).is_none());
        assert!(condition2_ratio(&r, 0.9, 0, 1).is_some());
    }

    #[test]
    fn probe_items() {
        let lin: Vec<f64> = (0..=200).map(|n| n as f64).collect();
        let p = en_equivalence_probe(&lin, 1.0, 1, 1.0).unwrap();
        assert!(p.item1 && p.item3);
        assert!((p.measured_sup - 1.0 / (1.0 - (-1f64).exp())).abs() < 1e-12);
        let lg: Vec<f64> = (0..=200).map(|n| ((n + 1) as f64).ln()).collect();
        for s in [1, 2, 4] {
            for d in [0.1, 0.5, 1.0] {
                let q = en_equivalence_probe(&lg, 1.0, s, d).unwrap();
                assert!(!q.item1);
                assert!(!q.item3);
            }
        }
    }
}

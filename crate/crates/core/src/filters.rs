//! Filter functions f̂, their time-domain kernels, the window κ and energy diagnostics.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::error::invalid;
use crate::linalg::{c, pairwise_sum};
use crate::spectrum::SpectralData;
use crate::{Error, Result, C64};
#[allow(unused_imports)]
use num_traits::Float;

pub type CustomFn = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

#[derive(Clone)]
pub enum FilterKind {
    Gaussian { sigma_gamma: f64 },
    Metropolis,
    MetropolisRegularized { delta: f64, theta: f64 },
    Custom { name: String, f: CustomFn },
}

#[derive(Clone)]
pub struct FilterFunction {
    pub beta: f64,
    pub kind: FilterKind,
}

impl fmt::Debug for FilterFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FilterFunction({}, beta={}, params={:?})", self.name(), self.beta, self.params())
    }
}

fn positive(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, "must be positive and finite"))
    }
}

pub fn metropolis(beta: f64) -> Result<FilterFunction> {
    positive("beta", beta)?;
    Ok(FilterFunction { beta, kind: FilterKind::Metropolis })
}

pub fn gaussian(beta: f64, sigma_gamma: f64) -> Result<FilterFunction> {
    positive("beta", beta)?;
    positive("sigma_gamma", sigma_gamma)?;
    Ok(FilterFunction { beta, kind: FilterKind::Gaussian { sigma_gamma } })
}

pub fn metropolis_regularized(beta: f64, delta: f64, theta: f64) -> Result<FilterFunction> {
    positive("beta", beta)?;
    if !(0.0..=1.0).contains(&delta) {
        return Err(invalid("delta", "must lie in (0, 1]"));
    }
    if !(theta > 0.0 && theta < 0.5) {
        return Err(invalid("theta", "must lie in (0, 1/2)"));
    }
    if delta == 0.0 {
        return metropolis(beta);
    }
    Ok(FilterFunction { beta, kind: FilterKind::MetropolisRegularized { delta, theta } })
}

/// A user filter. KMS symmetry is not checked here; see [`kms_residual`].
pub fn custom(beta: f64, name: impl Into<String>, f: impl Fn(f64) -> C64 + Send + Sync + 'static) -> Result<FilterFunction> {
    positive("beta", beta)?;
    Ok(FilterFunction { beta, kind: FilterKind::Custom { name: name.into(), f: Arc::new(f) } })
}

fn metropolis_c(beta: f64, z: C64) -> C64 {
    let bz = z * beta;
    (-((bz * bz + 1.0).sqrt() + bz) / 4.0).exp()
}

fn regularizer_c(beta: f64, delta: f64, theta: f64, z: C64) -> C64 {
    let bz = z * beta;
    (-(((bz * bz + 1.0).powf(theta)).exp() * delta)).exp()
}

impl FilterFunction {
    pub fn name(&self) -> &str {
        match &self.kind {
            FilterKind::Gaussian { .. } => "gaussian",
            FilterKind::Metropolis => "metropolis",
            FilterKind::MetropolisRegularized { .. } => "metropolis_regularized",
            FilterKind::Custom { name, .. } => name,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match &self.kind {
            FilterKind::Gaussian { sigma_gamma } => alloc::vec![*sigma_gamma],
            FilterKind::MetropolisRegularized { delta, theta } => alloc::vec![*delta, *theta],
            _ => Vec::new(),
        }
    }

    pub fn is_custom(&self) -> bool {
        matches!(self.kind, FilterKind::Custom { .. })
    }

    pub fn is_schwartz(&self) -> bool {
        matches!(self.kind, FilterKind::Gaussian { .. } | FilterKind::MetropolisRegularized { .. })
    }

    pub fn eval(&self, nu: f64) -> C64 {
        let b = self.beta;
        match &self.kind {
            FilterKind::Gaussian { sigma_gamma } => c((-nu * nu / (4.0 * sigma_gamma * sigma_gamma) - b * nu / 4.0).exp(), 0.0),
            FilterKind::Metropolis => c(metropolis_real(b, nu), 0.0),
            FilterKind::MetropolisRegularized { delta, theta } => {
                let env = (-delta * ((1.0 + (b * nu).powi(2)).powf(*theta)).exp()).exp();
                c(metropolis_real(b, nu) * env, 0.0)
            }
            FilterKind::Custom { f, .. } => f(nu),
        }
    }

    /// Analytic continuation for the built-in kinds. Metropolis kinds are analytic
    /// in the strip |Im z| < 1/β.
    pub fn eval_complex(&self, z: C64) -> Option<C64> {
        let b = self.beta;
        match &self.kind {
            FilterKind::Gaussian { sigma_gamma } => Some((-z * z / (4.0 * sigma_gamma * sigma_gamma) - z * (b / 4.0)).exp()),
            FilterKind::Metropolis => Some(metropolis_c(b, z)),
            FilterKind::MetropolisRegularized { delta, theta } => Some(metropolis_c(b, z) * regularizer_c(b, *delta, *theta, z)),
            FilterKind::Custom { .. } => None,
        }
    }

    /// The unregularized Metropolis filter underlying a metropolis kind.
    pub fn base_metropolis(&self) -> Option<FilterFunction> {
        match self.kind {
            FilterKind::Metropolis | FilterKind::MetropolisRegularized { .. } => Some(FilterFunction { beta: self.beta, kind: FilterKind::Metropolis }),
            _ => None,
        }
    }

    /// sup |f̂| over the probe grid [−20/β, 20/β].
    pub fn sup_abs(&self) -> f64 {
        probe_grid(self.beta).iter().fold(0.0, |a: f64, &x| a.max(self.eval(x).norm()))
    }
}

fn metropolis_real(beta: f64, nu: f64) -> f64 {
    let bn = beta * nu;
    (-((1.0 + bn * bn).sqrt() + bn) / 4.0).exp()
}

/// 4001 equispaced points on [−20/β, 20/β].
pub fn probe_grid(beta: f64) -> Vec<f64> {
    let n = 4000;
    (0..=n).map(|k| (-20.0 + 40.0 * k as f64 / n as f64) / beta).collect()
}

/// max over the grid of |conj f̂(ν) − f̂(−ν)e^{−βν/2}|.
pub fn kms_residual(f: &FilterFunction, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(invalid("grid", "must be non-empty"));
    }
    Ok(grid.iter().fold(0.0, |acc: f64, &nu| {
        let r = (f.eval(nu).conj() - f.eval(-nu) * (-f.beta * nu / 2.0).exp()).norm();
        acc.max(r)
    }))
}

/// Smooth even cut-off: 1 on |ν| ≤ S/2, 0 on |ν| ≥ S.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowFunction {
    pub scale: f64,
    /// Gevrey order s > 1 of the transition.
    pub order: f64,
}

pub fn window(scale: f64, order: f64) -> Result<WindowFunction> {
    positive("S", scale)?;
    if !(order > 1.0) {
        return Err(invalid("shape_order", "Gevrey order must exceed 1"));
    }
    Ok(WindowFunction { scale, order })
}

impl WindowFunction {
    fn psi(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            (-x.powf(-1.0 / (self.order - 1.0))).exp()
        }
    }

    /// Transition B: 0 below 0, 1 above 1, ψ(x)/(ψ(x)+ψ(1−x)) in between.
    fn step(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            let a = self.psi(x);
            a / (a + self.psi(1.0 - x))
        }
    }

    pub fn eval(&self, nu: f64) -> f64 {
        self.step((self.scale - nu.abs()) / (self.scale / 2.0))
    }
}

/// Samples of a time-domain kernel on a uniform grid.
#[derive(Debug, Clone)]
pub struct KernelSamples {
    pub times: Vec<f64>,
    pub values: Vec<C64>,
    /// Exponential decay rate fitted on T/3 ≤ |t| ≤ T.
    pub tail_rate: f64,
    /// max(|k(±T)|)/max|k| plus the relative frequency-truncation level.
    pub aliasing: f64,
    /// Warning raised for custom (possibly non-smooth) filters.
    pub warning: Option<String>,
}

impl KernelSamples {
    pub fn step(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn half_range(&self) -> f64 {
        -self.times[0]
    }

    /// Trapezoidal ∫|k(t)|dt over the sampled range.
    pub fn l1_norm(&self) -> f64 {
        let a: Vec<f64> = self.values.iter().map(|v| v.norm()).collect();
        let n = a.len();
        (pairwise_sum(&a) - 0.5 * (a[0] + a[n - 1])) * self.step()
    }

    /// Slope of the log of the running-max envelope of |k(t)| against |t| on [lo, hi].
    pub fn fit_tail_rate(&self, lo: f64, hi: f64) -> f64 {
        let mut pts: Vec<(f64, f64)> = self
            .times
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| t.abs() >= lo && t.abs() <= hi)
            .map(|(t, v)| (t.abs(), v.norm()))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut env = f64::NEG_INFINITY;
        let mut data: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
        for &(t, v) in pts.iter().rev() {
            env = env.max(v.max(f64::MIN_POSITIVE).ln());
            data.push((t, env));
        }
        linear_slope(&data)
    }

    /// Trapezoidal ∫ k(t) e^{iνt} dt.
    pub fn forward(&self, nu: f64) -> C64 {
        let n = self.times.len();
        let terms: Vec<C64> = (0..n)
            .map(|j| {
                let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                let ph = nu * self.times[j];
                self.values[j] * c(ph.cos(), ph.sin()) * w
            })
            .collect();
        crate::linalg::pairwise_sum_c(&terms) * self.step()
    }
}

pub(crate) fn linear_slope(data: &[(f64, f64)]) -> f64 {
    let n = data.len() as f64;
    if data.len() < 2 {
        return f64::NAN;
    }
    let mx = data.iter().map(|p| p.0).sum::<f64>() / n;
    let my = data.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = data.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = data.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Options for the inverse transform k(t) = (1/2π)∫ k̂(ν)e^{−iνt}dν.
#[derive(Debug, Clone, Copy)]
pub struct TransformOptions {
    /// Contour shift c ≥ 0: for t ≠ 0 integrate along ν − i c·sgn(t), which must stay
    /// inside the strip of analyticity.
    pub shift: f64,
    /// Upper bound on the frequency range Ω.
    pub omega_cap: f64,
    /// Fixed frequency range (compactly supported transforms).
    pub omega: Option<f64>,
}

fn uniform_times(t_half: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| -t_half + 2.0 * t_half * j as f64 / n as f64).collect()
}

fn check_grid(t_half: f64, n: usize) -> Result<()> {
    positive("T", t_half)?;
    if n < 2 || !n.is_power_of_two() {
        return Err(invalid("N", "must be a power of two"));
    }
    Ok(())
}

/// Smallest Ω on a 1/(4β)-spaced scan with |k̂(±Ω)| ≤ 1e−14·sup, for every probed line.
fn choose_omega(khat: &dyn Fn(C64) -> C64, shifts: &[f64], scale: f64, cap: f64) -> (f64, f64) {
    let step = 0.25 / scale;
    let mut sup: f64 = 0.0;
    let mut x = 0.0;
    while x <= cap {
        for &s in shifts {
            sup = sup.max(khat(c(x, -s)).norm()).max(khat(c(-x, -s)).norm());
        }
        x += step;
    }
    let mut x = step;
    while x < cap {
        let edge = shifts.iter().fold(0.0, |a: f64, &s| a.max(khat(c(x, -s)).norm()).max(khat(c(-x, -s)).norm()));
        if edge <= 1e-14 * sup {
            return (x, edge / sup);
        }
        x += step;
    }
    let edge = shifts.iter().fold(0.0, |a: f64, &s| a.max(khat(c(cap, -s)).norm()).max(khat(c(-cap, -s)).norm()));
    (cap, edge / sup.max(f64::MIN_POSITIVE))
}

/// Shared trapezoidal inverse transform.
pub fn inverse_transform(
    khat: &dyn Fn(C64) -> C64,
    t_half: f64,
    n: usize,
    scale: f64,
    opts: TransformOptions,
) -> Result<KernelSamples> {
    check_grid(t_half, n)?;
    let shifts = [opts.shift, -opts.shift];
    let (omega, trunc) = match opts.omega {
        Some(o) => (o, 0.0),
        None => choose_omega(khat, &shifts, scale, opts.omega_cap),
    };
    // period 2π/h = 16T keeps the aliased copies far outside [−T, T]
    let mut h = PI / (8.0 * t_half);
    let mut k = (2.0 * omega / h).ceil() as usize;
    k = k.max(64);
    h = 2.0 * omega / k as f64;
    let xs: Vec<f64> = (0..=k).map(|j| -omega + h * j as f64).collect();
    let wts: Vec<f64> = (0..=k).map(|j| if j == 0 || j == k { 0.5 * h } else { h }).collect();
    let lines: [Vec<C64>; 3] = [
        xs.iter().zip(&wts).map(|(&x, &w)| khat(c(x, -opts.shift)) * w).collect(),
        xs.iter().zip(&wts).map(|(&x, &w)| khat(c(x, 0.0)) * w).collect(),
        xs.iter().zip(&wts).map(|(&x, &w)| khat(c(x, opts.shift)) * w).collect(),
    ];
    let times = uniform_times(t_half, n);
    let mut values = Vec::with_capacity(n);
    let mut buf = alloc::vec![c(0.0, 0.0); k + 1];
    for &t in &times {
        let (line, damp) = if t > 0.0 {
            (&lines[0], (-opts.shift * t).exp())
        } else if t < 0.0 {
            (&lines[2], (opts.shift * t).exp())
        } else {
            (&lines[1], 1.0)
        };
        // e^{−i x_j t} by recurrence, re-anchored every 32 steps
        let rot = c((h * t).cos(), -(h * t).sin());
        let mut ph = c(0.0, 0.0);
        for j in 0..=k {
            if j % 32 == 0 {
                let a = -xs[j] * t;
                ph = c(a.cos(), a.sin());
            }
            buf[j] = line[j] * ph;
            ph *= rot;
        }
        values.push(crate::linalg::pairwise_sum_c(&buf) * (damp / (2.0 * PI)));
    }
    let peak = values.iter().fold(0.0, |a: f64, v: &C64| a.max(v.norm()));
    let edge = values[0].norm().max(values[n - 1].norm());
    let mut ks = KernelSamples { times, values, tail_rate: f64::NAN, aliasing: edge / peak.max(f64::MIN_POSITIVE) + trunc, warning: None };
    ks.tail_rate = ks.fit_tail_rate(t_half / 3.0, t_half);
    Ok(ks)
}

/// f(t) = (1/2π)∫ f̂(ν)e^{−iνt}dν on `n` points of [−T, T).
pub fn time_domain(f: &FilterFunction, t_half: f64, n: usize) -> Result<KernelSamples> {
    time_domain_with(f, t_half, n, 0.0)
}

/// As [`time_domain`], integrating along a shifted contour for t ≠ 0. The shift must
/// stay inside the strip of analyticity (|c| < 1/β for Metropolis kinds); it makes
/// tails far below the unshifted rounding floor resolvable.
pub fn time_domain_with(f: &FilterFunction, t_half: f64, n: usize, shift: f64) -> Result<KernelSamples> {
    let b = f.beta;
    match &f.kind {
        FilterKind::Metropolis => Err(Error::NonIntegrableFilter),
        FilterKind::Custom { f: g, .. } => {
            let g = g.clone();
            let khat = move |z: C64| g(z.re);
            let mut ks = inverse_transform(&khat, t_half, n, b, TransformOptions { shift: 0.0, omega_cap: 200.0 / b, omega: None })?;
            ks.warning = Some(String::from("custom filter: smoothness and decay not verified"));
            Ok(ks)
        }
        _ => {
            if matches!(f.kind, FilterKind::MetropolisRegularized { .. }) && shift.abs() >= 1.0 / b {
                return Err(invalid("shift", "contour must stay inside |Im z| < 1/beta"));
            }
            let khat = |z: C64| f.eval_complex(z).unwrap_or(c(0.0, 0.0));
            inverse_transform(&khat, t_half, n, b, TransformOptions { shift, omega_cap: 200.0 / b, omega: None })
        }
    }
}

fn fermi_c(beta: f64, z: C64) -> C64 {
    let w = z * (beta / 2.0);
    if w.re > 0.0 {
        let e = (-w).exp();
        e / (e + 1.0)
    } else {
        (w.exp() + 1.0).inv()
    }
}

/// ĝ(ν) = e^{−ν²/8σ_E²}/(1+e^{βν/2}).
pub fn g_hat(beta: f64, sigma_e: f64, z: C64) -> C64 {
    (-z * z / (8.0 * sigma_e * sigma_e)).exp() * fermi_c(beta, z)
}

/// γ(t) = σ_E√(2/π)e^{−2σ_E²t²}, twice the even part of g.
pub fn gamma_kernel(sigma_e: f64, t: f64) -> f64 {
    sigma_e * (2.0 / PI).sqrt() * (-2.0 * sigma_e * sigma_e * t * t).exp()
}

/// Samples of g(t), integrated along Im ν = ∓min(π/β, 4σ_E) for t ≷ 0.
pub fn g_kernel(beta: f64, sigma_e: f64, t_half: f64, n: usize) -> Result<KernelSamples> {
    positive("beta", beta)?;
    positive("sigma_E", sigma_e)?;
    let shift = (PI / beta).min(4.0 * sigma_e);
    let khat = |z: C64| g_hat(beta, sigma_e, z);
    let scale = beta.max(1.0 / sigma_e);
    inverse_transform(&khat, t_half, n, scale, TransformOptions { shift, omega_cap: 200.0 * (1.0 / beta).max(sigma_e), omega: None })
}

/// max_j |g(t_j) + conj g(−t_j) − γ(t_j)| over the symmetric part of the grid.
pub fn g_split_residual(g: &KernelSamples, sigma_e: f64) -> f64 {
    let n = g.times.len();
    (1..n).fold(0.0, |a: f64, j| {
        let (p, m) = (g.values[j], g.values[n - j]);
        a.max((p + m.conj() - c(gamma_kernel(sigma_e, g.times[j]), 0.0)).norm())
    })
}

/// t̂_κ(μ) = −(i/2)tanh(−βμ/4)κ(μ).
pub fn tanh_hat(beta: f64, w: &WindowFunction, mu: f64) -> C64 {
    c(0.0, -0.5) * (-beta * mu / 4.0).tanh() * w.eval(mu)
}

/// Time samples of t_κ, the inverse transform of t̂_κ (supported on [−S, S]).
pub fn tanh_kernel(beta: f64, w: &WindowFunction, t_half: f64, n: usize) -> Result<KernelSamples> {
    positive("beta", beta)?;
    let khat = |z: C64| tanh_hat(beta, w, z.re);
    inverse_transform(&khat, t_half, n, beta, TransformOptions { shift: 0.0, omega_cap: w.scale, omega: Some(w.scale) })
}

/// Energy envelope η used in the regularization estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Eta {
    /// η_{2,θ}(ν) = exp(2(1+(βν)²)^θ)
    TwoTheta(f64),
    /// η₁(ν) = (βν)²
    One,
}

impl Eta {
    pub fn eval(&self, beta: f64, nu: f64) -> f64 {
        match *self {
            Eta::TwoTheta(theta) => (2.0 * (1.0 + (beta * nu).powi(2)).powf(theta)).exp(),
            Eta::One => (beta * nu).powi(2),
        }
    }
}

/// Energy-indexed filter sums over the truncated spectrum (energies counted with multiplicity).
#[derive(Debug, Clone, PartialEq)]
pub struct FDiagnostics {
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub f: Vec<f64>,
    pub f_eta: Vec<f64>,
    pub f_eta_sigma_1: Vec<f64>,
    pub f_eta_sigma_2: Vec<f64>,
}

/// F₁, F₂, F and the F_η family. The η-sums use the unregularized Metropolis
/// filter at the same β; for non-Metropolis filters they use f̂ itself.
pub fn f_diagnostics(spec: &SpectralData, f: &FilterFunction, sigma_e: f64, eta: Option<Eta>) -> Result<FDiagnostics> {
    let eta = match (eta, &f.kind) {
        (Some(e), _) => e,
        (None, FilterKind::MetropolisRegularized { theta, .. }) => Eta::TwoTheta(*theta),
        (None, _) => Eta::TwoTheta(0.25),
    };
    let base = f.base_metropolis().unwrap_or_else(|| f.clone());
    let e = &spec.energies;
    let d = e.len();
    let b = f.beta;
    let fa = |x: f64| f.eval(x).norm();
    let sum = |g: &dyn Fn(usize) -> f64| pairwise_sum(&(0..d).map(g).collect::<Vec<_>>());
    let f1: Vec<f64> = (0..d).map(|i| sum(&|j| fa(e[j] - e[i]))).collect();
    let ff: Vec<f64> = (0..d).map(|i| sum(&|j| fa(e[j] - e[i]).powi(2))).collect();
    let f2: Vec<f64> = (0..d)
        .map(|i| {
            sum(&|j| {
                sum(&|k| {
                    let x = b * (e[k] - e[i]) / 2.0;
                    let fermi = if x > 0.0 { (-x).exp() / (1.0 + (-x).exp()) } else { 1.0 / (1.0 + x.exp()) };
                    fa(e[j] - e[k]) * fa(e[j] - e[i]) * fermi
                })
            })
        })
        .collect();
    let f_eta: Vec<f64> = (0..d).map(|i| sum(&|j| eta.eval(b, e[j] - e[i]) * base.eval(e[j] - e[i]).norm())).collect();
    let gw = |x: f64| if sigma_e.is_infinite() { 1.0 } else { (-x * x / (8.0 * sigma_e * sigma_e)).exp() };
    let f_eta_sigma_1: Vec<f64> = (0..d).map(|i| sum(&|j| gw(e[j] - e[i]) * f_eta[j])).collect();
    let f_eta_sigma_2: Vec<f64> = (0..d).map(|i| f_eta[i] * sum(&|j| gw(e[j] - e[i]))).collect();
    Ok(FDiagnostics { f1, f2, f: ff, f_eta, f_eta_sigma_1, f_eta_sigma_2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metropolis_values() {
        let f = metropolis(1.0).unwrap();
        assert!((f.eval(0.0).re - 0.778801).abs() < 1e-6);
        assert!((f.eval(1.0).re - 0.5468649546968608).abs() < 1e-15);
        assert!((f.eval(1.0).re - f.eval(-1.0).re * (-0.5f64).exp()).abs() < 1e-15);
        assert!(f.eval(-100.0).re > 0.997);
        assert!(metropolis(0.0).is_err());
    }

    #[test]
    fn gaussian_values() {
        let f = gaussian(1.0, 1.0).unwrap();
        assert_eq!(f.eval(0.0).re, 1.0);
        assert!((f.eval(2.0).re - (-1.5f64).exp()).abs() < 1e-15);
        assert!(kms_residual(&f, &[3.0]).unwrap() < 1e-15);
    }

    #[test]
    fn regularized_values() {
        let f = metropolis_regularized(1.0, 0.1, 0.25).unwrap();
        assert!((f.eval(0.0).re - 0.5934346486165886).abs() < 1e-15);
        assert!(kms_residual(&f, &[-2.0, 2.0]).unwrap() < 1e-14);
        assert!(metropolis_regularized(1.0, 0.1, 0.7).is_err());
        assert!(metropolis_regularized(1.0, 0.0, 0.3).unwrap().eval(0.7) == metropolis(1.0).unwrap().eval(0.7));
        let m = metropolis(1.0).unwrap();
        for &nu in &[-3.0, 0.0, 2.0] {
            let d = 1e-6;
            let r = metropolis_regularized(1.0, d, 0.3).unwrap().eval(nu).re / m.eval(nu).re;
            assert!((1.0 - r).abs() <= d * (1.0 + nu * nu).powf(0.3).exp());
        }
    }

    #[test]
    fn broken_filter_residual() {
        let f = custom(1.0, "broken", |x| c((-x * x).exp(), 0.0)).unwrap();
        let r = kms_residual(&f, &[1.0]).unwrap();
        assert!((r - (-1.0f64).exp() * (1.0 - (-0.5f64).exp())).abs() < 1e-12);
        assert!((r - 0.1447492810230125).abs() < 1e-15);
    }

    #[test]
    fn window_plateau() {
        let w = window(10.0, 2.0).unwrap();
        assert_eq!(w.eval(0.0), 1.0);
        assert_eq!(w.eval(10.0), 0.0);
        assert_eq!(w.eval(4.9), 1.0);
        assert_eq!(w.eval(-7.3), w.eval(7.3));
        assert_eq!(tanh_hat(1.0, &w, 0.0), c(0.0, 0.0));
    }

    #[test]
    fn pure_gaussian_kernel() {
        let f = custom(1.0, "pure", |x| c((-x * x / 4.0).exp(), 0.0)).unwrap();
        let k = time_domain(&f, 20.0, 1024).unwrap();
        let mid = k.values[512];
        // (1/2π)∫e^{−ν²/4}dν = 1/√π
        assert!((mid.re - 1.0 / PI.sqrt()).abs() < 1e-10);
        assert!((k.forward(0.0).re - 1.0).abs() < 1e-8);
        assert!(k.warning.is_some());
    }

    #[test]
    fn metropolis_is_rejected() {
        assert_eq!(time_domain(&metropolis(1.0).unwrap(), 10.0, 256).unwrap_err(), Error::NonIntegrableFilter);
        assert!(time_domain(&gaussian(1.0, 1.0).unwrap(), 10.0, 100).is_err());
    }
}

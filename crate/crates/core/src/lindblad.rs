//! Gibbs-sampling Lindbladians in spectral form, their integral representation, and the Gibbs state.
//!
//! All generator matrices are kept in the energy eigenbasis of the truncated
//! Hamiltonian; [`SpectralData::from_eigenbasis`] maps them back to the Fock basis.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::invalid;
use crate::filters::{tanh_hat, FilterFunction, KernelSamples, WindowFunction};
use crate::fock::TruncatedOperator;
use crate::linalg::{self, c};
use crate::spectrum::SpectralData;
use crate::{CMatrix, Error, Result, C64};
#[allow(unused_imports)]
use num_traits::Float;

/// Width of the Gaussian Bohr-frequency envelope e^{−(ν₁−ν₂)²/8σ_E²}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaE {
    /// σ_E = 0: only coincident Bohr frequencies survive.
    Davies,
    Finite(f64),
    /// σ_E = ∞: unit weight.
    Infinite,
}

impl SigmaE {
    pub fn new(x: f64) -> Result<Self> {
        if x == 0.0 {
            Ok(SigmaE::Davies)
        } else if x == f64::INFINITY {
            Ok(SigmaE::Infinite)
        } else if x > 0.0 && x.is_finite() {
            Ok(SigmaE::Finite(x))
        } else {
            Err(invalid("sigma_E", "must be in [0, inf]"))
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            SigmaE::Davies => 0.0,
            SigmaE::Finite(s) => s,
            SigmaE::Infinite => f64::INFINITY,
        }
    }

    /// Weight for a pair of clustered frequencies.
    pub fn weight(&self, c1: usize, nu1: f64, c2: usize, nu2: f64) -> f64 {
        match *self {
            SigmaE::Davies => {
                if c1 == c2 {
                    1.0
                } else {
                    0.0
                }
            }
            SigmaE::Finite(s) => {
                let d = nu1 - nu2;
                (-d * d / (8.0 * s * s)).exp()
            }
            SigmaE::Infinite => 1.0,
        }
    }
}

impl fmt::Display for SigmaE {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigmaE::Davies => write!(f, "0"),
            SigmaE::Finite(s) => write!(f, "{s}"),
            SigmaE::Infinite => write!(f, "inf"),
        }
    }
}

impl PartialOrd for SigmaE {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        self.value().partial_cmp(&other.value())
    }
}

#[derive(Debug, Clone)]
pub struct GibbsState {
    pub beta: f64,
    /// σ_β in the Fock basis.
    pub matrix: CMatrix,
    pub partition_z: f64,
    pub log_partition_z: f64,
    /// log σ_ii in the eigenbasis.
    pub log_weights: Vec<f64>,
}

impl GibbsState {
    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|x| x.exp()).collect()
    }

    /// σ in the eigenbasis (diagonal).
    pub fn eigen_matrix(&self) -> CMatrix {
        let d = self.log_weights.len();
        CMatrix::from_fn(d, d, |i, j| if i == j { c(self.log_weights[i].exp(), 0.0) } else { c(0.0, 0.0) })
    }
}

pub fn gibbs(spec: &SpectralData, beta: f64) -> Result<GibbsState> {
    if !(beta > 0.0) {
        return Err(invalid("beta", "must be positive"));
    }
    let e0 = spec.energies[0];
    let shifted: Vec<f64> = spec.energies.iter().map(|e| -beta * (e - e0)).collect();
    let z_shift = linalg::pairwise_sum(&shifted.iter().map(|x| x.exp()).collect::<Vec<_>>());
    let log_z_shift = z_shift.ln();
    let log_weights: Vec<f64> = shifted.iter().map(|x| x - log_z_shift).collect();
    let d = spec.dim();
    let diag = CMatrix::from_fn(d, d, |i, j| if i == j { c(log_weights[i].exp(), 0.0) } else { c(0.0, 0.0) });
    let log_partition_z = log_z_shift - beta * e0;
    Ok(GibbsState { beta, matrix: spec.from_eigenbasis(&diag), partition_z: log_partition_z.exp(), log_partition_z, log_weights })
}

/// 1/(1+e^x) without overflow.
pub(crate) fn fermi(x: f64) -> f64 {
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

fn filter_values(spec: &SpectralData, f: &FilterFunction) -> Vec<C64> {
    spec.bohr.iter().map(|b| f.eval(b.nu)).collect()
}

fn filtered_eigen(spec: &SpectralData, a_eig: &CMatrix, fvals: &[C64]) -> CMatrix {
    CMatrix::from_fn(a_eig.nrows(), a_eig.ncols(), |i, j| a_eig[(i, j)] * fvals[spec.cluster_index(i, j)])
}

/// L^α = Σ_ν f̂(ν) A_ν, in the Fock basis.
pub fn filtered_jump(spec: &SpectralData, a: &TruncatedOperator, f: &FilterFunction) -> TruncatedOperator {
    let fv = filter_values(spec, f);
    let l = filtered_eigen(spec, &spec.to_eigenbasis(&a.matrix), &fv);
    TruncatedOperator { space: a.space, matrix: spec.from_eigenbasis(&l), label: alloc::format!("L[{}]", a.label) }
}

/// Which double-Bohr sum to form from Σ w·conj f̂(ν₁)f̂(ν₂)(A_{ν₁})†A_{ν₂}.
#[derive(Debug, Clone, Copy, PartialEq)]
enum PairSum {
    /// canonical drift, extra factor −(1+e^{β(ν₂−ν₁)/2})^{−1}
    Drift,
    /// extra factor −(i/2)tanh(β(ν₁−ν₂)/4)
    Coherent,
    /// no extra factor
    Plain,
}

/// Σ_α Σ_j conj(L'_{ji}) L'_{jk}·weight(ν_ji, ν_jk) in the eigenbasis, where L' = filtered jumps.
fn pair_sum(spec: &SpectralData, jumps: &[CMatrix], sigma: SigmaE, beta: f64, kind: PairSum) -> CMatrix {
    let d = spec.dim();
    let mut out = CMatrix::zeros(d, d);
    for l in jumps {
        for j in 0..d {
            let row: Vec<(usize, C64)> = (0..d).filter(|&i| l[(j, i)] != c(0.0, 0.0)).map(|i| (i, l[(j, i)])).collect();
            for &(i, x) in &row {
                let c1 = spec.cluster_index(j, i);
                let nu1 = spec.bohr[c1].nu;
                for &(k, y) in &row {
                    let c2 = spec.cluster_index(j, k);
                    let nu2 = spec.bohr[c2].nu;
                    let w = sigma.weight(c1, nu1, c2, nu2);
                    if w == 0.0 {
                        continue;
                    }
                    let coef = match kind {
                        PairSum::Drift => c(-w * fermi(beta * (nu2 - nu1) / 2.0), 0.0),
                        PairSum::Coherent => c(0.0, -0.5 * w * (beta * (nu1 - nu2) / 4.0).tanh()),
                        PairSum::Plain => c(w, 0.0),
                    };
                    out[(i, k)] += x.conj() * y * coef;
                }
            }
        }
    }
    out
}

fn jumps_eigen(spec: &SpectralData, bare: &[TruncatedOperator], f: &FilterFunction) -> (Vec<CMatrix>, Vec<CMatrix>) {
    let fv = filter_values(spec, f);
    let bare_e: Vec<CMatrix> = bare.iter().map(|a| spec.to_eigenbasis(&a.matrix)).collect();
    let jumps = bare_e.iter().map(|a| filtered_eigen(spec, a, &fv)).collect();
    (bare_e, jumps)
}

/// G_{σ_E} in the Fock basis.
pub fn drift(spec: &SpectralData, bare: &[TruncatedOperator], f: &FilterFunction, sigma: SigmaE, beta: f64) -> CMatrix {
    let (_, jumps) = jumps_eigen(spec, bare, f);
    spec.from_eigenbasis(&pair_sum(spec, &jumps, sigma, beta, PairSum::Drift))
}

/// Coherent term B in the Fock basis.
pub fn coherent_b(spec: &SpectralData, bare: &[TruncatedOperator], f: &FilterFunction, sigma: SigmaE, beta: f64) -> CMatrix {
    let (_, jumps) = jumps_eigen(spec, bare, f);
    spec.from_eigenbasis(&pair_sum(spec, &jumps, sigma, beta, PairSum::Coherent))
}

/// Σ_α weighted Σ conj f̂ f̂ (A_{ν₁})†A_{ν₂} without the Fermi or tanh factor, in the Fock basis.
pub fn weighted_normalization(spec: &SpectralData, bare: &[TruncatedOperator], f: &FilterFunction, sigma: SigmaE, beta: f64) -> CMatrix {
    let (_, jumps) = jumps_eigen(spec, bare, f);
    spec.from_eigenbasis(&pair_sum(spec, &jumps, sigma, beta, PairSum::Plain))
}

/// Dense D²×D² matrix acting on column-stacked density matrices in the energy eigenbasis.
#[derive(Debug, Clone)]
pub struct Superoperator {
    pub dim: usize,
    pub matrix: CMatrix,
}

impl Superoperator {
    pub const VEC_CONVENTION: &'static str = "column-stacking";

    pub fn zeros(d: usize) -> Self {
        Superoperator { dim: d, matrix: CMatrix::zeros(d * d, d * d) }
    }

    /// L(ρ) for ρ given in the eigenbasis.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        linalg::unvec(&(&self.matrix * linalg::vec_of(rho)), self.dim)
    }

    /// max_b |Σ_i S[(i,i), b]|: how far Tr∘L is from zero, column by column.
    pub fn trace_residual(&self) -> f64 {
        let d = self.dim;
        (0..d * d).fold(0.0, |acc: f64, b| {
            let t = (0..d).fold(c(0.0, 0.0), |s, i| s + self.matrix[(i + d * i, b)]);
            acc.max(t.norm())
        })
    }

    /// max-column-sum norm, an estimate of ‖L‖ as a map on vectorized states.
    pub fn norm_estimate(&self) -> f64 {
        (0..self.matrix.ncols()).fold(0.0, |a: f64, j| a.max(self.matrix.column(j).iter().map(|z| z.norm()).sum()))
    }
}

/// Adds Σ conj(L)⊗L-type CP terms with per-pair weights, and G ρ + ρ G†.
fn add_gkls(s: &mut CMatrix, spec: &SpectralData, jumps: &[CMatrix], drift: &CMatrix, sigma: SigmaE) {
    let d = spec.dim();
    for l in jumps {
        let nz: Vec<(usize, usize, C64, usize)> = (0..d)
            .flat_map(|j| (0..d).map(move |i| (i, j)))
            .filter(|&(i, j)| l[(i, j)] != c(0.0, 0.0))
            .map(|(i, j)| (i, j, l[(i, j)], spec.cluster_index(i, j)))
            .collect();
        for &(k, ll, y, c1) in &nz {
            let nu1 = spec.bohr[c1].nu;
            let yc = y.conj();
            for &(i, j, x, c2) in &nz {
                let w = sigma.weight(c1, nu1, c2, spec.bohr[c2].nu);
                if w != 0.0 {
                    s[(i + d * k, j + d * ll)] += x * yc * w;
                }
            }
        }
    }
    for k in 0..d {
        for j in 0..d {
            for i in 0..d {
                let g = drift[(i, j)];
                if g != c(0.0, 0.0) {
                    s[(i + d * k, j + d * k)] += g;
                }
            }
        }
    }
    for l in 0..d {
        for k in 0..d {
            let g = drift[(k, l)].conj();
            if g != c(0.0, 0.0) {
                for i in 0..d {
                    s[(i + d * k, i + d * l)] += g;
                }
            }
        }
    }
}

/// The assembled generator with its ingredients (eigenbasis matrices).
#[derive(Debug, Clone)]
pub struct Lindbladian {
    pub spec: Arc<SpectralData>,
    pub bare: Vec<CMatrix>,
    pub jumps: Vec<CMatrix>,
    pub drift: CMatrix,
    pub coherent: CMatrix,
    pub sigma_e: SigmaE,
    pub filter: FilterFunction,
    pub beta: f64,
}

impl Lindbladian {
    /// L(ρ) for an eigenbasis ρ, entry by entry as in the superoperator but without forming it.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let spec = &self.spec;
        let d = spec.dim();
        let mut out = &self.drift * rho + rho * self.drift.adjoint();
        for l in &self.jumps {
            let nz: Vec<(usize, usize, C64, usize)> = (0..d)
                .flat_map(|j| (0..d).map(move |i| (i, j)))
                .filter(|&(i, j)| l[(i, j)] != c(0.0, 0.0))
                .map(|(i, j)| (i, j, l[(i, j)], spec.cluster_index(i, j)))
                .collect();
            for &(k, ll, y, c1) in &nz {
                let nu1 = spec.bohr[c1].nu;
                let yc = y.conj();
                for &(i, j, x, c2) in &nz {
                    let w = self.sigma_e.weight(c1, nu1, c2, spec.bohr[c2].nu);
                    if w != 0.0 {
                        out[(i, k)] += x * yc * rho[(j, ll)] * w;
                    }
                }
            }
        }
        out
    }

    /// Σ_α (L^α)†L^α.
    pub fn jump_normalization(&self) -> CMatrix {
        let d = self.spec.dim();
        self.jumps.iter().fold(CMatrix::zeros(d, d), |acc, l| acc + l.adjoint() * l)
    }
}

fn check_adjoint_closed(bare: &[TruncatedOperator]) -> Result<()> {
    for a in bare {
        let ad = a.matrix.adjoint();
        let scale = 1.0 + ad.norm();
        if !bare.iter().any(|b| b.matrix.shape() == ad.shape() && (&b.matrix - &ad).norm() <= 1e-14 * scale) {
            return Err(Error::NotAdjointClosed);
        }
    }
    Ok(())
}

/// Builds L^{≤M}_{σ_E,f̂,H}: ρ ↦ Σ w·conj f̂(ν₁)f̂(ν₂)A_{ν₂}ρ(A_{ν₁})† + Gρ + ρG†.
pub fn assemble(
    spec: Arc<SpectralData>,
    bare: &[TruncatedOperator],
    f: &FilterFunction,
    sigma: SigmaE,
    beta: f64,
) -> Result<(Lindbladian, Superoperator)> {
    let lind = lindbladian(spec, bare, f, sigma, beta)?;
    let d = lind.spec.dim();
    let mut s = CMatrix::zeros(d * d, d * d);
    add_gkls(&mut s, &lind.spec, &lind.jumps, &lind.drift, sigma);
    Ok((lind, Superoperator { dim: d, matrix: s }))
}

/// The generator's ingredients without the dense superoperator; see [`Lindbladian::apply`].
pub fn lindbladian(spec: Arc<SpectralData>, bare: &[TruncatedOperator], f: &FilterFunction, sigma: SigmaE, beta: f64) -> Result<Lindbladian> {
    if bare.is_empty() {
        return Err(invalid("bare_jumps", "empty jump set"));
    }
    check_adjoint_closed(bare)?;
    if (f.beta - beta).abs() > 1e-15 * beta {
        return Err(invalid("beta", "filter and generator disagree on beta"));
    }
    let (bare_e, jumps) = jumps_eigen(&spec, bare, f);
    let g = pair_sum(&spec, &jumps, sigma, beta, PairSum::Drift);
    let b = pair_sum(&spec, &jumps, sigma, beta, PairSum::Coherent);
    Ok(Lindbladian { spec, bare: bare_e, jumps, drift: g, coherent: b, sigma_e: sigma, filter: f.clone(), beta })
}

fn tail_estimate(k: &KernelSamples) -> f64 {
    let n = k.values.len();
    let l1 = k.l1_norm().max(f64::MIN_POSITIVE);
    (k.values[0].norm() + k.values[n - 1].norm()) * k.half_range() / l1
}

/// L^α = ∫ f(s) e^{isH} A e^{−isH} ds by trapezoidal quadrature, with a relative tail estimate.
pub fn integral_jump(spec: &SpectralData, a: &TruncatedOperator, kernel: &KernelSamples, tol: f64) -> Result<(TruncatedOperator, f64)> {
    let tail = tail_estimate(kernel);
    if tail > tol {
        return Err(Error::InsufficientRange { tail, tol });
    }
    let ae = spec.to_eigenbasis(&a.matrix);
    let e = &spec.energies;
    let d = spec.dim();
    let mut cache: Vec<Option<C64>> = vec![None; spec.bohr.len()];
    let out = CMatrix::from_fn(d, d, |i, j| {
        if ae[(i, j)] == c(0.0, 0.0) {
            return c(0.0, 0.0);
        }
        let k = spec.cluster_index(i, j);
        let v = *cache[k].get_or_insert_with(|| kernel.forward(e[i] - e[j]));
        ae[(i, j)] * v
    });
    Ok((TruncatedOperator { space: a.space, matrix: spec.from_eigenbasis(&out), label: alloc::format!("L[{}]", a.label) }, tail))
}

/// G = −Σ_α ∫ g(t) e^{itH}(L^α)†L^α e^{−itH} dt, jumps given in the Fock basis.
pub fn integral_drift(spec: &SpectralData, jumps: &[TruncatedOperator], g: &KernelSamples, tol: f64) -> Result<(CMatrix, f64)> {
    let tail = tail_estimate(g);
    if tail > tol {
        return Err(Error::InsufficientRange { tail, tol });
    }
    let d = spec.dim();
    let e = &spec.energies;
    let ltl = jumps.iter().fold(CMatrix::zeros(d, d), |acc, l| acc + l.matrix.adjoint() * &l.matrix);
    let ltl = spec.to_eigenbasis(&ltl);
    let mut cache: Vec<Option<C64>> = vec![None; spec.bohr.len()];
    let out = CMatrix::from_fn(d, d, |i, k| {
        if ltl[(i, k)] == c(0.0, 0.0) {
            return c(0.0, 0.0);
        }
        let cl = spec.cluster_index(i, k);
        let v = *cache[cl].get_or_insert_with(|| g.forward(e[i] - e[k]));
        -ltl[(i, k)] * v
    });
    Ok((spec.from_eigenbasis(&out), tail))
}

fn check_window(spec: &SpectralData, w: &WindowFunction) -> Result<()> {
    let required = 4.0 * spec.h_norm();
    if w.scale < required {
        return Err(Error::WindowTooSmall { scale: w.scale, required });
    }
    Ok(())
}

/// Coherent term Σ_μ t̂_κ(μ)[Σ_α (L^α)†L^α]_μ (eigenbasis).
fn windowed_coherent(lind: &Lindbladian, w: &WindowFunction) -> CMatrix {
    let spec = &lind.spec;
    let ltl = lind.jump_normalization();
    CMatrix::from_fn(ltl.nrows(), ltl.ncols(), |i, k| ltl[(i, k)] * tanh_hat(lind.beta, w, spec.nu(i, k)))
}

/// GKLS generator with jumps e^{itH}L^α e^{−itH} and drift e^{itH}(−iB_κ − ½ΣL†L)e^{−itH}.
pub fn gkls_at_time(lind: &Lindbladian, t: f64, w: &WindowFunction) -> Result<Superoperator> {
    let spec = &lind.spec;
    check_window(spec, w)?;
    let d = spec.dim();
    let b = windowed_coherent(lind, w);
    let g0 = b * c(0.0, -1.0) - lind.jump_normalization() * c(0.5, 0.0);
    let g = spec.conjugate_eigen(&g0, t);
    let jumps: Vec<CMatrix> = lind.jumps.iter().map(|l| spec.conjugate_eigen(l, t)).collect();
    let mut s = CMatrix::zeros(d * d, d * d);
    add_gkls(&mut s, spec, &jumps, &g, SigmaE::Infinite);
    Ok(Superoperator { dim: d, matrix: s })
}

/// Phase e^{it(E_i−E_k−E_j+E_l)} of entry ((i,k),(j,l)) under 𝒰_t ∘ · ∘ 𝒰_{−t}.
pub fn covariance_phase(energies: &[f64], a: usize, b: usize, t: f64) -> C64 {
    let d = energies.len();
    let (i, k) = (a % d, a / d);
    let (j, l) = (b % d, b / d);
    let x = t * ((energies[i] - energies[k]) - (energies[j] - energies[l]));
    c(x.cos(), x.sin())
}

//! Eigen-decomposition of the truncated Hamiltonian and the Bohr-frequency index.

use alloc::vec;
use alloc::vec::Vec;

use crate::fock::TruncatedOperator;
use crate::linalg::{self, c};
use crate::{CMatrix, Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq)]
pub struct BohrCluster {
    pub nu: f64,
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct SpectralData {
    pub energies: Vec<f64>,
    /// Eigenvectors as columns, in the Fock basis.
    pub vectors: CMatrix,
    /// Clusters sorted by ascending ν.
    pub bohr: Vec<BohrCluster>,
    pub degeneracy_tol: f64,
    pub bohr_tol: f64,
    /// Two neighbouring clusters closer than 2·ε_bohr.
    pub ambiguous: bool,
    /// `vectors` is a permutation matrix (diagonal input Hamiltonian).
    pub exact: bool,
    cluster_of: Vec<usize>,
    perm: Vec<usize>,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// max |E|, the operator norm of the truncated Hamiltonian.
    pub fn h_norm(&self) -> f64 {
        self.energies.iter().fold(0.0, |a: f64, e| a.max(e.abs()))
    }

    /// h₀ = max(0, −E₀).
    pub fn h0(&self) -> f64 {
        (-self.energies[0]).max(0.0)
    }

    pub fn cluster_index(&self, i: usize, j: usize) -> usize {
        self.cluster_of[i * self.dim() + j]
    }

    /// Clustered Bohr frequency of the pair (i, j), i.e. E_i − E_j.
    pub fn nu(&self, i: usize, j: usize) -> f64 {
        self.bohr[self.cluster_index(i, j)].nu
    }

    pub fn find_cluster(&self, nu: f64) -> Option<usize> {
        let k = self.bohr.partition_point(|b| b.nu < nu - 2.0 * self.bohr_tol);
        (k..self.bohr.len()).take_while(|&k| self.bohr[k].nu <= nu + 2.0 * self.bohr_tol).min_by(|&a, &b| {
            (self.bohr[a].nu - nu).abs().total_cmp(&(self.bohr[b].nu - nu).abs())
        })
    }

    pub fn bohr_frequencies(&self) -> Vec<f64> {
        self.bohr.iter().map(|b| b.nu).collect()
    }

    /// V† A V.
    pub fn to_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        if self.exact {
            let p = &self.perm;
            CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(p[i], p[j])])
        } else {
            self.vectors.adjoint() * a * &self.vectors
        }
    }

    /// V A V†.
    pub fn from_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        if self.exact {
            let mut out = CMatrix::zeros(a.nrows(), a.ncols());
            for j in 0..a.ncols() {
                for i in 0..a.nrows() {
                    out[(self.perm[i], self.perm[j])] = a[(i, j)];
                }
            }
            out
        } else {
            &self.vectors * a * self.vectors.adjoint()
        }
    }

    /// Diagonal matrix exp(i t H) written in the eigenbasis, applied as phases to `a`:
    /// returns e^{itH} a e^{−itH} for `a` given in the eigenbasis.
    pub fn conjugate_eigen(&self, a: &CMatrix, t: f64) -> CMatrix {
        let e = &self.energies;
        CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| {
            let ph = t * (e[i] - e[j]);
            a[(i, j)] * c(ph.cos(), ph.sin())
        })
    }
}

/// Default Bohr clustering threshold 1e−9·(1+‖H‖).
pub fn default_bohr_tol(h_norm: f64) -> f64 {
    1e-9 * (1.0 + h_norm)
}

pub fn default_degeneracy_tol(h_norm: f64) -> f64 {
    1e-12 * (1.0 + h_norm)
}

fn is_diagonal(m: &CMatrix) -> bool {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if i != j && (m[(i, j)].re != 0.0 || m[(i, j)].im != 0.0) {
                return false;
            }
        }
    }
    true
}

pub fn eigendecompose(h: &TruncatedOperator, eps_deg: Option<f64>, eps_bohr: Option<f64>) -> Result<SpectralData> {
    let m = &h.matrix;
    let d = m.nrows();
    let fro = m.norm();
    let res = (m - m.adjoint()).norm();
    if res > 1e-12 * fro.max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian { residual: res / fro });
    }
    let (energies, vectors, exact, perm) = if is_diagonal(m) {
        let mut perm: Vec<usize> = (0..d).collect();
        perm.sort_by(|&a, &b| m[(a, a)].re.total_cmp(&m[(b, b)].re));
        let energies: Vec<f64> = perm.iter().map(|&k| m[(k, k)].re).collect();
        let mut v = CMatrix::zeros(d, d);
        for (j, &k) in perm.iter().enumerate() {
            v[(k, j)] = c(1.0, 0.0);
        }
        (energies, v, true, perm)
    } else {
        let (e, v) = linalg::eigh(m);
        (e, v, false, (0..d).collect())
    };
    let h_norm = energies.iter().fold(0.0, |a: f64, e| a.max(e.abs()));
    let bohr_tol = eps_bohr.unwrap_or_else(|| default_bohr_tol(h_norm));
    let degeneracy_tol = eps_deg.unwrap_or_else(|| default_degeneracy_tol(h_norm));

    // Single-linkage clustering of all ordered differences. The multiset of
    // differences is exactly antisymmetric, so clusters come in ± mirror pairs.
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            pairs.push((energies[i] - energies[j], i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut bohr: Vec<BohrCluster> = Vec::new();
    let mut cluster_of = vec![0usize; d * d];
    let mut lo = pairs[0].0;
    let mut hi = pairs[0].0;
    let mut cur: Vec<(usize, usize)> = Vec::new();
    let mut ambiguous = false;
    let mut last_hi = f64::NEG_INFINITY;
    let mut flush = |lo: f64, hi: f64, cur: &mut Vec<(usize, usize)>, bohr: &mut Vec<BohrCluster>| {
        let id = bohr.len();
        for &(i, j) in cur.iter() {
            cluster_of[i * d + j] = id;
        }
        bohr.push(BohrCluster { nu: 0.5 * (lo + hi), pairs: core::mem::take(cur) });
    };
    for &(x, i, j) in &pairs {
        if !cur.is_empty() && x - hi > bohr_tol {
            if lo - last_hi < 2.0 * bohr_tol {
                ambiguous = true;
            }
            last_hi = hi;
            flush(lo, hi, &mut cur, &mut bohr);
            lo = x;
        }
        hi = x;
        cur.push((i, j));
    }
    if lo - last_hi < 2.0 * bohr_tol {
        ambiguous = true;
    }
    flush(lo, hi, &mut cur, &mut bohr);
    // a cluster wider than a few thresholds means chained merging
    if bohr.iter().any(|b| {
        let (mn, mx) = b.pairs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(mn, mx), &(i, j)| {
            let x = energies[i] - energies[j];
            (mn.min(x), mx.max(x))
        });
        mx - mn > 2.0 * bohr_tol
    }) {
        ambiguous = true;
    }
    // the zero cluster must read exactly 0 and mirror clusters exactly ∓
    for b in bohr.iter_mut() {
        if b.pairs.iter().any(|&(i, j)| i == j) {
            b.nu = 0.0;
        }
    }
    Ok(SpectralData { energies, vectors, bohr, degeneracy_tol, bohr_tol, ambiguous, exact, cluster_of, perm })
}

/// Σ_{(i,j) ∈ cluster} |v_i⟩⟨v_i| A |v_j⟩⟨v_j|, returned in the Fock basis.
pub fn energy_jump(spec: &SpectralData, a: &TruncatedOperator, nu: f64) -> Result<TruncatedOperator> {
    let k = spec.find_cluster(nu).ok_or(Error::UnknownBohrFrequency(nu))?;
    let ae = spec.to_eigenbasis(&a.matrix);
    let mut out = CMatrix::zeros(ae.nrows(), ae.ncols());
    for &(i, j) in &spec.bohr[k].pairs {
        out[(i, j)] = ae[(i, j)];
    }
    Ok(TruncatedOperator {
        space: a.space,
        matrix: spec.from_eigenbasis(&out),
        label: alloc::format!("{}[{}]", a.label, spec.bohr[k].nu),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{annihilation, build_hn, FockSpace};

    fn diag_h(e: &[f64]) -> TruncatedOperator {
        build_hn(FockSpace::single(e.len() - 1).unwrap(), e).unwrap()
    }

    #[test]
    fn bohr_sets() {
        let s = eigendecompose(&diag_h(&[0.0, 1.0, 2.0]), None, None).unwrap();
        assert_eq!(s.bohr_frequencies(), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        let q = eigendecompose(&diag_h(&[0.0, 1.0, 4.0, 9.0]), None, None).unwrap();
        let f = q.bohr_frequencies();
        for x in [1.0, 3.0, 5.0, -1.0, -3.0, -5.0] {
            assert!(f.contains(&x));
        }
        assert!(!q.ambiguous);
    }

    #[test]
    fn unsorted_diagonal() {
        let s = eigendecompose(&diag_h(&[2.0, 0.0, 1.0]), None, None).unwrap();
        assert_eq!(s.energies, vec![0.0, 1.0, 2.0]);
        let h = diag_h(&[2.0, 0.0, 1.0]).matrix;
        let back = s.to_eigenbasis(&h);
        assert_eq!(back[(2, 2)].re, 2.0);
        assert_eq!(s.from_eigenbasis(&back), h);
    }

    #[test]
    fn ladder_components() {
        let sp = FockSpace::single(3).unwrap();
        let a = annihilation(sp, 0, 1).unwrap();
        let s = eigendecompose(&build_hn(sp, &[0.0, 1.0, 2.0, 3.0]).unwrap(), None, None).unwrap();
        assert_eq!(energy_jump(&s, &a, -1.0).unwrap().matrix, a.matrix);
        assert_eq!(energy_jump(&s, &a, 1.0).unwrap().matrix.norm(), 0.0);
        assert_eq!(energy_jump(&s, &a.adjoint(), 1.0).unwrap().matrix, a.adjoint().matrix);
        assert!(matches!(energy_jump(&s, &a, 0.5), Err(Error::UnknownBohrFrequency(_))));

        let q = eigendecompose(&build_hn(sp, &[0.0, 1.0, 4.0, 9.0]).unwrap(), None, None).unwrap();
        let a3 = energy_jump(&q, &a, -3.0).unwrap().matrix;
        assert_eq!(a3.iter().filter(|z| z.norm() > 0.0).count(), 1);
        assert!((a3[(1, 2)].re - 2f64.sqrt()).abs() < 1e-15);
    }
}

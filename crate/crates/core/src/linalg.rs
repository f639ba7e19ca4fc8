//! Dense linear-algebra helpers on top of nalgebra.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::{CMatrix, C64};
#[allow(unused_imports)]
use num_traits::Float;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Rotate every column so that its largest-magnitude entry is real and positive.
pub fn fix_phases(v: &mut CMatrix) {
    for j in 0..v.ncols() {
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for i in 0..v.nrows() {
            let a = v[(i, j)].norm();
            // ties broken towards the smaller index, with a little slack for rounding
            if a > best_abs * (1.0 + 1e-12) {
                best_abs = a;
                best = i;
            }
        }
        if best_abs > 0.0 {
            let ph = v[(best, j)] / best_abs;
            let rot = ph.conj();
            for i in 0..v.nrows() {
                v[(i, j)] *= rot;
            }
            v[(best, j)] = c(v[(best, j)].re, 0.0);
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending, phase-fixed vectors.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let h = hermitian_part(m);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (j, &k) in order.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(k));
    }
    fix_phases(&mut vecs);
    (vals, vecs)
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// ‖M − M†‖_F / ‖M‖_F (0 for the zero matrix).
pub fn herm_residual(m: &CMatrix) -> f64 {
    let n = m.norm();
    if n == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / n
}

/// Largest singular value.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().singular_values().iter().fold(0.0, |a: f64, &b| a.max(b))
}

/// Sum of singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    pairwise_sum(m.clone().singular_values().as_slice())
}

/// Sum of absolute eigenvalues of the Hermitian part.
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    let v: Vec<f64> = eigvalsh(m).iter().map(|x| x.abs()).collect();
    pairwise_sum(&v)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Column-stacking vectorization.
pub fn vec_of(m: &CMatrix) -> nalgebra::DVector<C64> {
    nalgebra::DVector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &nalgebra::DVector<C64>, d: usize) -> CMatrix {
    CMatrix::from_column_slice(d, d, v.as_slice())
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().fold(C64::new(0.0, 0.0), |a, &b| a + b)
}

/// Recursive pairwise summation; deterministic for a fixed input order.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 16 {
        return x.iter().sum();
    }
    let h = x.len() / 2;
    pairwise_sum(&x[..h]) + pairwise_sum(&x[h..])
}

pub fn pairwise_sum_c(x: &[C64]) -> C64 {
    if x.len() <= 16 {
        return x.iter().fold(C64::new(0.0, 0.0), |a, &b| a + b);
    }
    let h = x.len() / 2;
    pairwise_sum_c(&x[..h]) + pairwise_sum_c(&x[h..])
}

/// Connected components of the sparsity pattern of a (structurally symmetric) square matrix.
pub fn components(m: &CMatrix) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for j in 0..n {
        for i in 0..n {
            let z = m[(i, j)];
            if i != j && (z.re != 0.0 || z.im != 0.0) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                    parent[hi] = lo;
                }
            }
        }
    }
    let mut root_id = vec![usize::MAX; n];
    let mut out: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_id[r] == usize::MAX {
            root_id[r] = out.len();
            out.push(Vec::new());
        }
        out[root_id[r]].push(i);
    }
    out
}

/// One diagonal block of a block-diagonal Hermitian eigensolve.
#[derive(Debug, Clone)]
pub struct Block {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    /// Columns are eigenvectors in the block's local coordinates (empty if not requested).
    pub vectors: Option<CMatrix>,
}

/// Eigen-decomposition of a Hermitian matrix split along its connected components.
#[derive(Debug, Clone)]
pub struct BlockEigen {
    pub dim: usize,
    pub blocks: Vec<Block>,
}

impl BlockEigen {
    pub fn new(m: &CMatrix, with_vectors: bool) -> Self {
        Self::new_selective(m, |_| with_vectors)
    }

    /// Eigenvectors are computed only for blocks where `want(indices)` holds.
    pub fn new_selective(m: &CMatrix, want: impl Fn(&[usize]) -> bool) -> Self {
        let comps = components(m);
        let blocks = comps
            .into_iter()
            .map(|idx| {
                let k = idx.len();
                let sub = CMatrix::from_fn(k, k, |a, b| m[(idx[a], idx[b])]);
                if want(&idx) {
                    let (values, vecs) = eigh(&sub);
                    Block { indices: idx, values, vectors: Some(vecs) }
                } else {
                    Block { indices: idx, values: eigvalsh(&sub), vectors: None }
                }
            })
            .collect();
        BlockEigen { dim: m.nrows(), blocks }
    }

    /// All eigenvalues, ascending.
    pub fn values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.blocks.iter().flat_map(|b| b.values.iter().copied()).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Full-length eigenvector `k` of block `b`.
    pub fn vector(&self, b: usize, k: usize) -> Option<nalgebra::DVector<C64>> {
        let blk = &self.blocks[b];
        let vecs = blk.vectors.as_ref()?;
        let mut out = nalgebra::DVector::zeros(self.dim);
        for (a, &i) in blk.indices.iter().enumerate() {
            out[i] = vecs[(a, k)];
        }
        Some(out)
    }
}

/// Eigenvalues of a real symmetric tridiagonal matrix together with the first
/// component of each normalized eigenvector (implicit QL with Wilkinson shifts).
///
/// Runs in O(n²) since only the first row of the eigenvector matrix is tracked.
pub fn tridiag_eig_first(diag: &[f64], off: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&off[..n.saturating_sub(1)]);
    let mut z = vec![0.0; n];
    if n > 0 {
        z[0] = 1.0;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut cc, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut early = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = cc * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early = true;
                    break;
                }
                s = f / r;
                cc = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * cc * b;
                p = s * r;
                d[i + 1] = g + p;
                g = cc * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + cc * zf;
                z[i] = cc * z[i] - s * zf;
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    (order.iter().map(|&k| d[k]).collect(), order.iter().map(|&k| z[k]).collect())
}

pub fn real_to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| c(x, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vec_identity() {
        // vec(AXB) = (Bᵀ ⊗ A) vec(X)
        let a = CMatrix::from_fn(3, 3, |i, j| c(i as f64 + 0.5, j as f64 - 1.0));
        let x = CMatrix::from_fn(3, 3, |i, j| c((i * j) as f64, 1.0 + i as f64));
        let b = CMatrix::from_fn(3, 3, |i, j| c(1.0 / (1.0 + i as f64 + j as f64), 0.3));
        let lhs = vec_of(&(&a * &x * &b));
        let rhs = kron(&b.transpose(), &a) * vec_of(&x);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let diag = [1.0, -2.0, 0.5, 3.0, 0.0];
        let off = [0.7, 1.1, -0.4, 0.2];
        let (vals, first) = tridiag_eig_first(&diag, &off);
        let dense = DMatrix::from_fn(5, 5, |i, j| {
            if i == j {
                diag[i]
            } else if i + 1 == j {
                off[i]
            } else if j + 1 == i {
                off[j]
            } else {
                0.0
            }
        });
        let (dv, dvec) = eigh(&real_to_complex(&dense));
        for k in 0..5 {
            assert!((vals[k] - dv[k]).abs() < 1e-12);
            assert!((first[k].abs() - dvec[(0, k)].norm()).abs() < 1e-10);
        }
    }

    #[test]
    fn blocks_recover_spectrum() {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = c(1.0, 0.0);
        m[(2, 2)] = c(-1.0, 0.0);
        m[(0, 2)] = c(0.0, 0.5);
        m[(2, 0)] = c(0.0, -0.5);
        m[(1, 1)] = c(3.0, 0.0);
        m[(3, 3)] = c(2.0, 0.0);
        let be = BlockEigen::new(&m, true);
        assert_eq!(be.blocks.len(), 3);
        let full = eigvalsh(&m);
        let v = be.values();
        for k in 0..4 {
            assert!((full[k] - v[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_convention() {
        let m = CMatrix::from_fn(3, 3, |i, j| if i == j { c(i as f64, 0.0) } else { c(0.1, 0.2 * (i as f64 - j as f64)) });
        let (_, v) = eigh(&m);
        for j in 0..3 {
            let col = v.column(j);
            let (k, _) = col.iter().enumerate().fold((0, 0.0), |acc, (k, z)| if z.norm() > acc.1 * (1.0 + 1e-12) { (k, z.norm()) } else { acc });
            assert_eq!(v[(k, j)].im, 0.0);
            assert!(v[(k, j)].re > 0.0);
        }
    }
}

//! Truncated bosonic Fock spaces and ladder-operator algebra.

use alloc::format;
use alloc::string::String;

use crate::error::invalid;
use crate::linalg::c;
use crate::{CMatrix, Error, Result, C64};
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    pub modes: usize,
    pub cutoff: usize,
}

impl FockSpace {
    pub fn new(modes: usize, cutoff: usize) -> Result<Self> {
        if modes == 0 {
            return Err(invalid("modes", "must be at least 1"));
        }
        if cutoff == 0 {
            return Err(invalid("cutoff", "must be at least 1"));
        }
        Ok(Self { modes, cutoff })
    }

    pub fn single(cutoff: usize) -> Result<Self> {
        Self::new(1, cutoff)
    }

    pub fn dim(&self) -> usize {
        (self.cutoff + 1).pow(self.modes as u32)
    }

    /// Local occupation of `mode` in basis state `index` (row-major, last mode fastest).
    pub fn occupation(&self, index: usize, mode: usize) -> usize {
        let stride = (self.cutoff + 1).pow((self.modes - 1 - mode) as u32);
        (index / stride) % (self.cutoff + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    pub space: FockSpace,
    pub matrix: CMatrix,
    pub label: String,
}

impl TruncatedOperator {
    pub fn new(space: FockSpace, matrix: CMatrix, label: impl Into<String>) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: matrix.nrows() });
        }
        Ok(Self { space, matrix, label: label.into() })
    }

    pub fn adjoint(&self) -> Self {
        let label = match self.label.strip_suffix('†') {
            Some(s) => String::from(s),
            None => format!("{}†", self.label),
        };
        Self { space: self.space, matrix: self.matrix.adjoint(), label }
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }
}

fn falling_sqrt(n: usize, k: usize) -> f64 {
    // √(n!/(n−k)!)
    let mut p = 1.0;
    for j in (n + 1 - k)..=n {
        p *= j as f64;
    }
    p.sqrt()
}

/// Truncated `a^k` on one mode, identity on the others.
pub fn annihilation(space: FockSpace, mode: usize, power: usize) -> Result<TruncatedOperator> {
    if mode >= space.modes {
        return Err(invalid("mode", format!("{mode} out of range for {} modes", space.modes)));
    }
    if power == 0 {
        return Err(invalid("power", "must be positive"));
    }
    if power > space.cutoff {
        return Err(Error::PowerExceedsCutoff { power, cutoff: space.cutoff });
    }
    let d = space.dim();
    let stride = (space.cutoff + 1).pow((space.modes - 1 - mode) as u32);
    let mut m = CMatrix::zeros(d, d);
    for col in 0..d {
        let n = space.occupation(col, mode);
        if n >= power {
            m[(col - power * stride, col)] = c(falling_sqrt(n, power), 0.0);
        }
    }
    let label = if power == 1 { format!("a_{mode}") } else { format!("a_{mode}^{power}") };
    TruncatedOperator::new(space, m, label)
}

pub fn creation(space: FockSpace, mode: usize, power: usize) -> Result<TruncatedOperator> {
    annihilation(space, mode, power).map(|a| a.adjoint())
}

pub fn number(space: FockSpace, mode: usize) -> Result<TruncatedOperator> {
    if mode >= space.modes {
        return Err(invalid("mode", "out of range"));
    }
    let d = space.dim();
    let m = CMatrix::from_fn(d, d, |i, j| if i == j { c(space.occupation(i, mode) as f64, 0.0) } else { C64::new(0.0, 0.0) });
    TruncatedOperator::new(space, m, format!("N_{mode}"))
}

fn single_mode(space: FockSpace, h: &[f64]) -> Result<()> {
    if space.modes != 1 {
        return Err(invalid("space", "number-preserving Hamiltonians need a single mode"));
    }
    if h.len() != space.cutoff + 1 {
        return Err(Error::DimensionMismatch { expected: space.cutoff + 1, found: h.len() });
    }
    Ok(())
}

/// `h(N)` from a table `h[0..=M]`.
pub fn build_hn(space: FockSpace, h: &[f64]) -> Result<TruncatedOperator> {
    single_mode(space, h)?;
    let d = space.dim();
    let m = CMatrix::from_fn(d, d, |i, j| if i == j { c(h[i], 0.0) } else { c(0.0, 0.0) });
    TruncatedOperator::new(space, m, "H")
}

/// `h(N) + ψ̄ a + ψ a†`.
pub fn build_mf_hamiltonian(space: FockSpace, h: &[f64], psi: C64) -> Result<TruncatedOperator> {
    let mut hn = build_hn(space, h)?;
    let a = annihilation(space, 0, 1)?.matrix;
    hn.matrix += &a * psi.conj() + a.adjoint() * psi;
    Ok(hn)
}

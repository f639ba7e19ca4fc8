//! Named single-mode models and the sampler setup shared by scans and the CLI.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::invalid;
use crate::filters::{self, FilterFunction};
use crate::fock::{annihilation, build_hn, build_mf_hamiltonian, FockSpace, TruncatedOperator};
use crate::lindblad::{assemble, gibbs, GibbsState, Lindbladian, SigmaE, Superoperator};
use crate::spectrum::{eigendecompose, SpectralData};
use crate::{Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub enum HamiltonianModel {
    /// h(n) = γn
    Linear { gamma: f64 },
    /// h(n) = n²
    Quadratic,
    /// h(n) = n(n−1)/2 plus ψ̄a + ψa†
    MeanFieldBoseHubbard { psi: C64 },
    /// tabulated h(0), h(1), …
    Table(Vec<f64>),
}

impl HamiltonianModel {
    pub fn name(&self) -> String {
        match self {
            HamiltonianModel::Linear { gamma } => format!("linear(gamma={gamma})"),
            HamiltonianModel::Quadratic => String::from("quadratic"),
            HamiltonianModel::MeanFieldBoseHubbard { psi } => format!("mf_bh(psi={}{:+}i)", psi.re, psi.im),
            HamiltonianModel::Table(t) => format!("table[{}]", t.len()),
        }
    }

    pub fn h(&self, n: usize) -> Option<f64> {
        let x = n as f64;
        match self {
            HamiltonianModel::Linear { gamma } => Some(gamma * x),
            HamiltonianModel::Quadratic => Some(x * x),
            HamiltonianModel::MeanFieldBoseHubbard { .. } => Some(x * (x - 1.0) / 2.0),
            HamiltonianModel::Table(t) => t.get(n).copied(),
        }
    }

    /// h(0..=m).
    pub fn table(&self, m: usize) -> Result<Vec<f64>> {
        (0..=m).map(|n| self.h(n).ok_or_else(|| invalid("model", format!("table shorter than cutoff {m}")))).collect()
    }

    pub fn is_number_preserving(&self) -> bool {
        !matches!(self, HamiltonianModel::MeanFieldBoseHubbard { psi } if *psi != C64::new(0.0, 0.0))
    }

    pub fn build(&self, space: FockSpace) -> Result<TruncatedOperator> {
        let tab = self.table(space.cutoff)?;
        match self {
            HamiltonianModel::MeanFieldBoseHubbard { psi } => build_mf_hamiltonian(space, &tab, *psi),
            _ => build_hn(space, &tab),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FilterSpec {
    Gaussian { sigma_gamma: f64 },
    Metropolis,
    MetropolisRegularized { delta: f64, theta: f64 },
}

impl FilterSpec {
    pub fn build(&self, beta: f64) -> Result<FilterFunction> {
        match *self {
            FilterSpec::Gaussian { sigma_gamma } => filters::gaussian(beta, sigma_gamma),
            FilterSpec::Metropolis => filters::metropolis(beta),
            FilterSpec::MetropolisRegularized { delta, theta } => filters::metropolis_regularized(beta, delta, theta),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            FilterSpec::Gaussian { .. } => "gaussian",
            FilterSpec::Metropolis => "metropolis",
            FilterSpec::MetropolisRegularized { .. } => "metropolis_regularized",
        }
    }
}

/// Everything needed to build L^{≤M}_{σ_E,f̂,H} with ladder jumps {a, a†}.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerSetup {
    pub model: HamiltonianModel,
    pub beta: f64,
    pub filter: FilterSpec,
    pub cutoff: usize,
}

/// A built generator with the data it was built from.
#[derive(Debug, Clone)]
pub struct BuiltGenerator {
    pub lindbladian: Lindbladian,
    pub superop: Superoperator,
    pub gibbs: GibbsState,
}

impl SamplerSetup {
    pub fn new(model: HamiltonianModel, beta: f64, filter: FilterSpec, cutoff: usize) -> Self {
        SamplerSetup { model, beta, filter, cutoff }
    }

    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        SamplerSetup { cutoff, ..self.clone() }
    }

    pub fn space(&self) -> Result<FockSpace> {
        FockSpace::single(self.cutoff)
    }

    pub fn filter_function(&self) -> Result<FilterFunction> {
        self.filter.build(self.beta)
    }

    pub fn hamiltonian(&self) -> Result<TruncatedOperator> {
        self.model.build(self.space()?)
    }

    pub fn spectral(&self) -> Result<Arc<SpectralData>> {
        Ok(Arc::new(eigendecompose(&self.hamiltonian()?, None, None)?))
    }

    pub fn bare_jumps(&self) -> Result<Vec<TruncatedOperator>> {
        let a = annihilation(self.space()?, 0, 1)?;
        let ad = a.adjoint();
        Ok(alloc::vec![a, ad])
    }

    pub fn build_with(&self, spec: Arc<SpectralData>, sigma: SigmaE) -> Result<BuiltGenerator> {
        let f = self.filter_function()?;
        let g = gibbs(&spec, self.beta)?;
        let (lindbladian, superop) = assemble(spec, &self.bare_jumps()?, &f, sigma, self.beta)?;
        Ok(BuiltGenerator { lindbladian, superop, gibbs: g })
    }

    pub fn build(&self, sigma: SigmaE) -> Result<BuiltGenerator> {
        self.build_with(self.spectral()?, sigma)
    }
}

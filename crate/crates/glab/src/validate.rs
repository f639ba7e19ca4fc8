//! Precondition checks run before any computation (exit status 3).

use std::fmt;

use glab_core::model::{FilterSpec, HamiltonianModel};
use glab_core::truncation::jump_trunc_threshold;

use crate::config::{Experiment, ExperimentConfig, ParseError};

#[derive(Debug, Clone, PartialEq)]
pub enum Invalid {
    /// a value that does not parse (exit 2)
    Parse(ParseError),
    /// a value outside an operation's domain (exit 3)
    Precondition(String),
}

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Invalid::Parse(e) => write!(f, "parse error: {e}"),
            Invalid::Precondition(m) => write!(f, "precondition violated: {m}"),
        }
    }
}

impl From<ParseError> for Invalid {
    fn from(e: ParseError) -> Self {
        Invalid::Parse(e)
    }
}

fn fail<T>(msg: impl Into<String>) -> Result<T, Invalid> {
    Err(Invalid::Precondition(msg.into()))
}

fn positive(name: &str, x: f64, rule: &str) -> Result<(), Invalid> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        fail(format!("{name} = {x}: {rule} requires a finite positive value"))
    }
}

fn needs_h_table(cfg: &ExperimentConfig, what: &str) -> Result<(), Invalid> {
    if !cfg.model.is_number_preserving() {
        return fail(format!("{what} requires H = h(N) (number preserving); mf_bh with psi != 0 is not"));
    }
    Ok(())
}

pub fn validate(cfg: &ExperimentConfig) -> Result<(), Invalid> {
    positive("filter.beta", cfg.beta, "the KMS inverse temperature")?;
    match cfg.filter {
        FilterSpec::Gaussian { sigma_gamma } => positive("filter.sigma_gamma", sigma_gamma, "the Gaussian filter")?,
        FilterSpec::Metropolis => {}
        FilterSpec::MetropolisRegularized { delta, theta } => {
            if !(delta > 0.0 && delta <= 1.0) {
                return fail(format!("filter.delta = {delta}: the regularized Metropolis filter requires delta in (0,1]"));
            }
            if !(theta > 0.0 && theta < 0.5) {
                return fail(format!("filter.theta = {theta}: the regularized Metropolis filter requires theta in (0,1/2)"));
            }
        }
    }
    if let HamiltonianModel::Linear { gamma } = cfg.model {
        positive("model.gamma", gamma, "the linear model h(n) = gamma n")?;
    }
    if cfg.cutoffs.is_empty() || cfg.cutoffs.contains(&0) {
        return fail("experiment.M: every truncation level must be at least 1");
    }
    if let HamiltonianModel::Table(t) = &cfg.model {
        let need = cfg.cutoffs.iter().max().copied().unwrap_or(0);
        if t.len() <= need {
            return fail(format!("model.table has {} entries but M = {need} needs h(0..={need})", t.len()));
        }
    }
    if cfg.sigma_e.is_empty() || cfg.sigma_e.iter().any(|s| !(*s >= 0.0)) {
        return fail("experiment.sigma_E: the Gaussian-convoluted generator requires sigma_E in [0, inf]");
    }
    if cfg.experiment == Experiment::Quad && cfg.filter == FilterSpec::Metropolis {
        return fail("quad requires a Schwartz filter (gaussian or metropolis_regularized); the Metropolis kernel is not integrable");
    }

    match cfg.experiment {
        Experiment::Gap | Experiment::ScanTrunc => {}
        Experiment::ScanSigma => {
            if cfg.sigma_e.windows(2).any(|w| w[0] > w[1]) {
                return fail("scan-sigma requires sigma_E sorted ascending");
            }
        }
        Experiment::Dynamics => {
            positive("experiment.t_max", cfg.param_f64("t_max", 20.0)?, "the evolution grid")?;
            if cfg.param_usize("steps", 80)? < 2 {
                return fail("experiment.steps must be at least 2");
            }
            let (a, b) = fit_window(cfg)?;
            if !(a >= 0.0 && b > a) {
                return fail(format!("fit window [{a}, {b}] must satisfy 0 <= fit_start < fit_end"));
            }
            let eps = cfg.param_f64("eps", 1e-3)?;
            if !(eps > 0.0 && eps < 2.0) {
                return fail(format!("experiment.eps = {eps}: mixing threshold must lie in (0, 2)"));
            }
            let rho0 = rho0_spec(cfg)?;
            if let Rho0::Fock(n) = rho0 {
                if let Some(m) = cfg.cutoffs.iter().find(|&&m| m < n) {
                    return fail(format!("rho0 = fock:{n} lies outside the truncation M = {m}"));
                }
            }
            if let Rho0::Gibbs(b) = rho0 {
                positive("rho0 gibbs beta'", b, "the Gibbs initial state")?;
            }
        }
        Experiment::CertifyBd => {
            needs_h_table(cfg, "the birth-death certificate")?;
            if matches!(cfg.filter, FilterSpec::Gaussian { .. }) {
                return fail("the birth-death certificate requires a Metropolis-type filter");
            }
            let n_max = cfg.param_usize("n_max", 200)?;
            let k_max = cfg.param_usize("k_max", 10)?;
            let k_min = cfg.param_usize("k_min", 1)?;
            if n_max < 10 {
                return fail(format!("experiment.n_max = {n_max}: the birth-death scan needs n_max >= 10"));
            }
            if k_max == 0 || k_max + 2 > n_max || k_min > k_max {
                return fail(format!("experiment.k_max = {k_max}, k_min = {k_min}: need k_min <= k_max and 1 <= k_max <= n_max - 2"));
            }
            if let HamiltonianModel::Table(t) = &cfg.model {
                if t.len() < n_max + 2 {
                    return fail(format!("model.table has {} entries; the certificate needs h(0..={})", t.len(), n_max + 1));
                }
            }
            if let Some(g) = cfg.param_f64_list("gamma")? {
                if g.iter().any(|x| !(*x > 0.0 && *x < 1.0)) {
                    return fail("experiment.gamma: condition 2 requires every gamma in (0,1)");
                }
            }
        }
        Experiment::Quad => {
            if cfg.sigma_e.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                return fail("the Gauss-Hermite discretization requires 0 < sigma_E < inf");
            }
            let nodes = cfg.param_usize_list("nodes")?.unwrap_or_else(|| vec![4, 8, 16, 24]);
            if nodes.contains(&0) {
                return fail("experiment.nodes: every node count must be at least 1");
            }
            let eps = cfg.param_f64("eps", 1e-6)?;
            positive("experiment.eps", eps, "the node-count prediction")?;
            let order = cfg.param_f64("window_order", 2.0)?;
            if !(order > 1.0) {
                return fail(format!("experiment.window_order = {order}: the window must be Gevrey of order s > 1"));
            }
        }
        Experiment::TruncStudy => {
            let kappa = cfg.param_f64("kappa", 0.25)?;
            if !(kappa > 0.0 && kappa <= 0.5) {
                return fail(format!("experiment.kappa = {kappa}: the truncated-jump lemma requires kappa in (0,1/2]"));
            }
            let k = cfg.param_usize("k", 1)?;
            let level = cfg.param_usize("level", 1)?;
            if k == 0 || !(level == 1 || level == 2) {
                return fail("the truncated-jump lemma needs jump power k >= 1 and weight level 1 or 2");
            }
            if let Some(ms) = cfg.param_usize_list("jump_M")? {
                let thr = jump_trunc_threshold(k, kappa);
                if let Some(m) = ms.iter().find(|&&m| (m as f64) < thr) {
                    return fail(format!("jump_M = {m}: the truncated-jump lemma needs M >= (k/2kappa)^(1/kappa) + k = {thr:.3}"));
                }
            }
            let m_ref = cfg.param_usize("m_ref", 40)?;
            if let Some(m) = cfg.cutoffs.iter().find(|&&m| m > m_ref) {
                return fail(format!("M = {m} exceeds the reference truncation m_ref = {m_ref}"));
            }
            if let HamiltonianModel::Table(t) = &cfg.model {
                if t.len() <= 2 * m_ref {
                    return fail(format!("model.table needs h(0..={}) for the reference-stability check", 2 * m_ref));
                }
            }
            positive("experiment.beta_prime", cfg.param_f64("beta_prime", 2.0 * cfg.beta)?, "the Gibbs-dominated test state")?;
            if let Some(ds) = cfg.param_f64_list("reg_delta")? {
                if ds.iter().any(|d| !(*d > 0.0 && *d <= 1.0)) {
                    return fail("experiment.reg_delta: the regularized Metropolis filter requires each delta in (0,1]");
                }
                let th = cfg.param_f64("reg_theta", 0.3)?;
                if !(th > 0.0 && th < 0.5) {
                    return fail(format!("experiment.reg_theta = {th}: the regularized Metropolis filter requires theta in (0,1/2)"));
                }
                if cfg.sigma_e.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                    return fail("the regularization study requires 0 < sigma_E < inf");
                }
            }
        }
        Experiment::Coercivity => {
            positive("experiment.delta", cfg.param_f64("delta", 1.0)?, "the coercivity lemma's Bohr separation")?;
            let omega = cfg.param_f64("omega", 1.0)?;
            positive("experiment.omega", omega, "the phase-retrieval lattice")?;
            let res = cfg.param_f64_list("residues")?.unwrap_or_else(|| vec![0.0]);
            if res.is_empty() || res.iter().any(|a| !(*a >= 0.0 && *a < omega)) {
                return fail("experiment.residues: stable phase retrieval requires residues in [0, omega)");
            }
            for (i, a) in res.iter().enumerate() {
                if res[..i].iter().any(|b| (a - b).abs() < 1e-12 * omega) {
                    return fail("experiment.residues: stable phase retrieval requires residues distinct modulo omega");
                }
            }
            if cfg.param_usize("theta_samples", 256)? < 64 {
                return fail("experiment.theta_samples: at least 64 samples over [-pi, pi] are required");
            }
            if let Some(b) = cfg.param_f64_list("bohr")? {
                let delta = cfg.param_f64("delta", 1.0)?;
                for (i, x) in b.iter().enumerate() {
                    if b[..i].iter().any(|y| (x - y).abs() < delta * (1.0 - 1e-12)) {
                        return fail(format!("experiment.bohr: the coercivity lemma requires the set to be delta-separated (delta = {delta})"));
                    }
                }
            }
        }
        Experiment::Filters => {
            let n = cfg.param_usize("points", 1 << 13)?;
            if n < 2 || !n.is_power_of_two() {
                return fail(format!("experiment.points = {n}: the time-domain grid needs a power of two"));
            }
            positive("experiment.t_half", cfg.param_f64("t_half", 20.0 * cfg.beta * std::f64::consts::PI)?, "the time-domain grid")?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rho0 {
    Gibbs(f64),
    Fock(usize),
}

pub fn rho0_spec(cfg: &ExperimentConfig) -> Result<Rho0, Invalid> {
    let Some(e) = cfg.param("rho0") else { return Ok(Rho0::Gibbs(2.0 * cfg.beta)) };
    let bad = || {
        Invalid::Parse(ParseError { line: e.line, column: e.column, message: format!("expected `gibbs:<beta'>` or `fock:<n>`, found `{}`", e.value) })
    };
    let (kind, arg) = e.value.split_once(':').ok_or_else(bad)?;
    match kind.trim() {
        "gibbs" => arg.trim().parse::<f64>().map(Rho0::Gibbs).map_err(|_| bad()),
        "fock" => arg.trim().parse::<usize>().map(Rho0::Fock).map_err(|_| bad()),
        _ => Err(bad()),
    }
}

pub fn fit_window(cfg: &ExperimentConfig) -> Result<(f64, f64), Invalid> {
    let t_max = cfg.param_f64("t_max", 20.0)?;
    Ok((cfg.param_f64("fit_start", t_max / 5.0)?, cfg.param_f64("fit_end", 3.0 * t_max / 5.0)?))
}

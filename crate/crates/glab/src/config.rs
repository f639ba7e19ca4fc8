//! Flat key-value experiment configs.
//!
//! ```text
//! seed = 7
//! [model]
//! name = quadratic
//! [filter]
//! kind = metropolis
//! beta = 1
//! [experiment]
//! name = gap
//! M = 8, 12, 16
//! sigma_E = 0, 1, inf
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use glab_core::lindblad::SigmaE;
use glab_core::model::{FilterSpec, HamiltonianModel};
use glab_core::C64;

pub const SECTIONS: [&str; 5] = ["model", "filter", "experiment", "tolerances", "checks"];
const TOP_KEYS: [&str; 2] = ["seed", "output_dir"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Experiment {
    Gap,
    ScanSigma,
    ScanTrunc,
    Dynamics,
    CertifyBd,
    Quad,
    TruncStudy,
    Coercivity,
    Filters,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Gap,
        Experiment::ScanSigma,
        Experiment::ScanTrunc,
        Experiment::Dynamics,
        Experiment::CertifyBd,
        Experiment::Quad,
        Experiment::TruncStudy,
        Experiment::Coercivity,
        Experiment::Filters,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Gap => "gap",
            Experiment::ScanSigma => "scan-sigma",
            Experiment::ScanTrunc => "scan-trunc",
            Experiment::Dynamics => "dynamics",
            Experiment::CertifyBd => "certify-bd",
            Experiment::Quad => "quad",
            Experiment::TruncStudy => "trunc-study",
            Experiment::Coercivity => "coercivity",
            Experiment::Filters => "filters",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Experiment::Gap => "spectral gap of the KMS-symmetrized generator per (M, sigma_E)",
            Experiment::ScanSigma => "gap across the sigma_E grid, with the monotonicity check",
            Experiment::ScanTrunc => "gap across the truncation grid M",
            Experiment::Dynamics => "evolution to the Gibbs state, decay-rate fit and l2 bound",
            Experiment::CertifyBd => "birth-death gap certificate for h(N) models",
            Experiment::Quad => "Gauss-Hermite discretization error against the exact generator",
            Experiment::TruncStudy => "truncated-jump norms, generator truncation and regularization errors",
            Experiment::Coercivity => "coercivity and phase-retrieval constants with random probes",
            Experiment::Filters => "filter values, KMS residual, time-domain tails and energy sums",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Experiment::ALL.into_iter().find(|e| e.name() == s)
    }

    pub fn names() -> String {
        Experiment::ALL.map(|e| e.name()).join(", ")
    }

    /// Keys accepted in [experiment] besides `name`, `M` and `sigma_E`.
    pub fn param_keys(self) -> &'static [&'static str] {
        match self {
            Experiment::Gap | Experiment::ScanSigma | Experiment::ScanTrunc => &[],
            Experiment::Dynamics => &["rho0", "t_max", "steps", "fit_start", "fit_end", "eps"],
            Experiment::CertifyBd => &["n_max", "k_min", "k_max", "gamma"],
            Experiment::Quad => &["nodes", "eps", "run_predicted", "window_order"],
            Experiment::TruncStudy => &["kappa", "k", "level", "jump_M", "m_ref", "beta_prime", "reg_delta", "reg_theta"],
            Experiment::Coercivity => &["delta", "bohr", "residues", "omega", "theta_samples", "probes"],
            Experiment::Filters => &["nu", "t_half", "points"],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: String,
    pub line: usize,
    /// 1-based column of the first character of the value
    pub column: usize,
    pub key_column: usize,
}

impl Entry {
    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError { line: self.line, column: self.column, message: message.into() }
    }
}

/// Sections in file order are irrelevant; keys are kept sorted for a stable echo.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub sections: BTreeMap<String, BTreeMap<String, Entry>>,
    /// line of each section header
    pub headers: BTreeMap<String, usize>,
    pub lines: usize,
}

impl RawConfig {
    pub fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section).and_then(|s| s.get(key))
    }

    pub fn section(&self, section: &str) -> impl Iterator<Item = (&String, &Entry)> {
        self.sections.get(section).into_iter().flatten()
    }
}

pub fn parse_raw(text: &str) -> Result<RawConfig, ParseError> {
    let mut raw = RawConfig::default();
    raw.sections.insert(String::new(), BTreeMap::new());
    let mut current = String::new();
    for (i, full) in text.lines().enumerate() {
        let line = i + 1;
        let content = match full.find('#') {
            Some(p) => &full[..p],
            None => full,
        };
        let lead = content.len() - content.trim_start().len();
        let body = content.trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return Err(ParseError { line, column: lead + body.len() + 1, message: "expected `]` to close the section header".into() });
            };
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(ParseError {
                    line,
                    column: lead + 2,
                    message: format!("unknown section `[{name}]`; valid sections: {}", SECTIONS.join(", ")),
                });
            }
            if raw.sections.contains_key(name) {
                return Err(ParseError { line, column: lead + 2, message: format!("section `[{name}]` appears twice") });
            }
            raw.sections.insert(name.to_string(), BTreeMap::new());
            raw.headers.insert(name.to_string(), line);
            current = name.to_string();
            continue;
        }
        let Some(eq) = body.find('=') else {
            return Err(ParseError { line, column: lead + 1, message: "expected `key = value` or `[section]`".into() });
        };
        let key = body[..eq].trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(ParseError { line, column: lead + 1, message: format!("invalid key `{key}`") });
        }
        let after = &body[eq + 1..];
        let value = after.trim();
        let column = lead + eq + 2 + (after.len() - after.trim_start().len());
        if value.is_empty() {
            return Err(ParseError { line, column, message: format!("missing value for `{key}`") });
        }
        if current.is_empty() && !TOP_KEYS.contains(&key) {
            return Err(ParseError {
                line,
                column: lead + 1,
                message: format!("key `{key}` must appear inside a section; top-level keys: {}", TOP_KEYS.join(", ")),
            });
        }
        let sec = raw.sections.get_mut(&current).expect("section exists");
        if sec.contains_key(key) {
            return Err(ParseError { line, column: lead + 1, message: format!("duplicate key `{key}`") });
        }
        sec.insert(key.to_string(), Entry { value: value.to_string(), line, column, key_column: lead + 1 });
    }
    raw.lines = text.lines().count();
    Ok(raw)
}

fn parse_f64_token(tok: &str) -> Option<f64> {
    match tok.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => Some(f64::INFINITY),
        _ => tok.parse::<f64>().ok().filter(|x| !x.is_nan()),
    }
}

/// Splits `a, b, c` or `[a, b, c]` into tokens with their columns.
fn tokens(e: &Entry) -> Vec<(String, usize)> {
    let v = e.value.as_str();
    let (start, inner) = match v.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
        Some(inner) => (1, inner),
        None => (0, v),
    };
    let mut out = Vec::new();
    let mut offset = start;
    for part in inner.split(',') {
        let lead = part.len() - part.trim_start().len();
        out.push((part.trim().to_string(), e.column + offset + lead));
        offset += part.len() + 1;
    }
    out
}

pub fn f64_of(e: &Entry) -> Result<f64, ParseError> {
    parse_f64_token(&e.value).ok_or_else(|| e.err(format!("expected a number, found `{}`", e.value)))
}

pub fn f64_list(e: &Entry) -> Result<Vec<f64>, ParseError> {
    tokens(e)
        .into_iter()
        .map(|(t, col)| parse_f64_token(&t).ok_or(ParseError { line: e.line, column: col, message: format!("expected a number, found `{t}`") }))
        .collect()
}

pub fn usize_of(e: &Entry) -> Result<usize, ParseError> {
    e.value.parse::<usize>().map_err(|_| e.err(format!("expected a non-negative integer, found `{}`", e.value)))
}

pub fn usize_list(e: &Entry) -> Result<Vec<usize>, ParseError> {
    tokens(e)
        .into_iter()
        .map(|(t, col)| t.parse::<usize>().map_err(|_| ParseError { line: e.line, column: col, message: format!("expected a non-negative integer, found `{t}`") }))
        .collect()
}

pub fn bool_of(e: &Entry) -> Result<bool, ParseError> {
    match e.value.as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        v => Err(e.err(format!("expected true or false, found `{v}`"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Comparison {
    Approx(f64),
    AtLeast(f64),
    AtMost(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

/// A config whose values have been parsed and type-checked, but not yet validated
/// against the preconditions of the operations.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub raw: RawConfig,
    pub experiment: Experiment,
    pub model: HamiltonianModel,
    pub filter: FilterSpec,
    pub beta: f64,
    pub cutoffs: Vec<usize>,
    pub sigma_e: Vec<f64>,
    pub params: BTreeMap<String, Entry>,
    pub tolerances: Tolerances,
    pub checks: BTreeMap<String, Comparison>,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
}

fn check_keys(raw: &RawConfig, section: &str, allowed: &[&str]) -> Result<(), ParseError> {
    for (k, e) in raw.section(section) {
        if !allowed.contains(&k.as_str()) {
            return Err(ParseError {
                line: e.line,
                column: e.key_column,
                message: format!("unknown key `{k}` in [{section}]; valid keys: {}", allowed.join(", ")),
            });
        }
    }
    Ok(())
}

/// Points at the section header, or past the last line when the section is absent.
fn missing(raw: &RawConfig, section: &str, key: &str) -> ParseError {
    let line = raw.headers.get(section).copied().unwrap_or(raw.lines + 1);
    ParseError { line, column: 1, message: format!("missing required key `{key}` in [{section}]") }
}

pub fn parse(text: &str) -> Result<ExperimentConfig, ParseError> {
    let raw = parse_raw(text)?;

    let name_entry = raw.get("experiment", "name").ok_or_else(|| missing(&raw, "experiment", "name"))?;
    let experiment = Experiment::from_name(&name_entry.value)
        .ok_or_else(|| name_entry.err(format!("unknown experiment `{}`; valid experiments: {}", name_entry.value, Experiment::names())))?;
    let mut allowed = vec!["name", "M", "sigma_E"];
    allowed.extend_from_slice(experiment.param_keys());
    check_keys(&raw, "experiment", &allowed)?;
    check_keys(&raw, "model", &["name", "gamma", "psi", "psi_im", "table"])?;
    check_keys(&raw, "filter", &["kind", "beta", "sigma_gamma", "delta", "theta"])?;
    check_keys(&raw, "tolerances", &["rtol", "atol"])?;

    let model = match raw.get("model", "name") {
        None => HamiltonianModel::Quadratic,
        Some(e) => match e.value.as_str() {
            "linear" => HamiltonianModel::Linear { gamma: raw.get("model", "gamma").map(f64_of).transpose()?.unwrap_or(1.0) },
            "quadratic" => HamiltonianModel::Quadratic,
            "mf_bh" => {
                let re = raw.get("model", "psi").map(f64_of).transpose()?.unwrap_or(0.0);
                let im = raw.get("model", "psi_im").map(f64_of).transpose()?.unwrap_or(0.0);
                HamiltonianModel::MeanFieldBoseHubbard { psi: C64::new(re, im) }
            }
            "table" => HamiltonianModel::Table(f64_list(raw.get("model", "table").ok_or_else(|| missing(&raw, "model", "table"))?)?),
            v => return Err(e.err(format!("unknown model `{v}`; valid models: linear, quadratic, mf_bh, table"))),
        },
    };

    let beta = f64_of(raw.get("filter", "beta").ok_or_else(|| missing(&raw, "filter", "beta"))?)?;
    let get = |k: &str| raw.get("filter", k).map(f64_of).transpose();
    let filter = match raw.get("filter", "kind").map(|e| (e, e.value.as_str())) {
        None | Some((_, "metropolis")) => FilterSpec::Metropolis,
        Some((_, "gaussian")) => FilterSpec::Gaussian { sigma_gamma: get("sigma_gamma")?.unwrap_or(1.0) },
        Some((_, "metropolis_regularized")) => {
            FilterSpec::MetropolisRegularized { delta: get("delta")?.unwrap_or(0.05), theta: get("theta")?.unwrap_or(0.3) }
        }
        Some((e, v)) => return Err(e.err(format!("unknown filter kind `{v}`; valid kinds: gaussian, metropolis, metropolis_regularized"))),
    };

    let cutoffs = match raw.get("experiment", "M") {
        Some(e) => usize_list(e)?,
        None => vec![12],
    };
    let sigma_e = match raw.get("experiment", "sigma_E") {
        Some(e) => f64_list(e)?,
        None => vec![f64::INFINITY],
    };
    let params = raw.sections.get("experiment").cloned().unwrap_or_default().into_iter().filter(|(k, _)| experiment.param_keys().contains(&k.as_str())).collect();

    let tolerances = Tolerances {
        rtol: raw.get("tolerances", "rtol").map(f64_of).transpose()?.unwrap_or(1e-3),
        atol: raw.get("tolerances", "atol").map(f64_of).transpose()?.unwrap_or(0.0),
    };
    let mut checks = BTreeMap::new();
    for (k, e) in raw.section("checks") {
        let v = e.value.as_str();
        let (ctor, rest, shift): (fn(f64) -> Comparison, &str, usize) = if let Some(r) = v.strip_prefix(">=") {
            (Comparison::AtLeast, r, 2)
        } else if let Some(r) = v.strip_prefix("<=") {
            (Comparison::AtMost, r, 2)
        } else {
            (Comparison::Approx, v, 0)
        };
        let x = parse_f64_token(rest.trim()).ok_or(ParseError {
            line: e.line,
            column: e.column + shift + (rest.len() - rest.trim_start().len()),
            message: format!("expected a number, `>= number` or `<= number`, found `{v}`"),
        })?;
        checks.insert(k.clone(), ctor(x));
    }

    let seed = match raw.get("", "seed") {
        Some(e) => e.value.parse::<u64>().map_err(|_| e.err(format!("expected an unsigned integer seed, found `{}`", e.value)))?,
        None => 0,
    };
    let output_dir = raw.get("", "output_dir").map(|e| PathBuf::from(&e.value));

    Ok(ExperimentConfig { raw, experiment, model, filter, beta, cutoffs, sigma_e, params, tolerances, checks, seed, output_dir })
}

impl ExperimentConfig {
    pub fn param(&self, key: &str) -> Option<&Entry> {
        self.params.get(key)
    }

    pub fn param_f64(&self, key: &str, default: f64) -> Result<f64, ParseError> {
        self.param(key).map(f64_of).transpose().map(|v| v.unwrap_or(default))
    }

    pub fn param_usize(&self, key: &str, default: usize) -> Result<usize, ParseError> {
        self.param(key).map(usize_of).transpose().map(|v| v.unwrap_or(default))
    }

    pub fn param_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, ParseError> {
        self.param(key).map(f64_list).transpose()
    }

    pub fn param_usize_list(&self, key: &str) -> Result<Option<Vec<usize>>, ParseError> {
        self.param(key).map(usize_list).transpose()
    }

    pub fn sigma_values(&self) -> Vec<SigmaE> {
        self.sigma_e.iter().map(|&s| SigmaE::new(s).expect("validated")).collect()
    }

    /// Raw text echo, section → key → value.
    pub fn echo(&self) -> serde_json::Value {
        let mut out = serde_json::Map::new();
        for (sec, keys) in &self.raw.sections {
            if keys.is_empty() {
                continue;
            }
            let m: serde_json::Map<String, serde_json::Value> = keys.iter().map(|(k, e)| (k.clone(), serde_json::Value::String(e.value.clone()))).collect();
            out.insert(if sec.is_empty() { "top".into() } else { sec.clone() }, serde_json::Value::Object(m));
        }
        serde_json::Value::Object(out)
    }
}

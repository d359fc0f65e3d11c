use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{DerivativeScheme, KseParams, LogisticParams, LorenzParams, NoiseModel};
use crate::er::ErConfig;
use crate::solvers::SolverId;
use crate::{Error, Result};

/// One declarative benchmark: a system, a data budget, a noise model and the
/// solvers to compare.
///
/// ```json
/// {
///   "system": "lorenz",
///   "system_params": { "dt": 0.0005 },
///   "basis_degree": 5,
///   "n_samples": 1500,
///   "noise": { "eps1": 1e-5, "eps2": 0.2, "p": 0.2 },
///   "solvers": [{ "solver": "ls" }, { "solver": "er" }],
///   "n_runs": 20,
///   "seed": 1
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub system: SystemSpec,
    pub basis_degree: u32,
    /// Rows of the regression problem after derivative alignment.
    pub n_samples: usize,
    /// Observation noise. Its `seed` field is ignored; every run draws its
    /// own noise seed from the master seed.
    #[serde(default)]
    pub noise: NoiseModel,
    /// Defaults to central differences for flows and next-state targets for
    /// maps. Unused for static regression problems.
    #[serde(default)]
    pub derivative: Option<DerivativeScheme>,
    pub solvers: Vec<SolverEntry>,
    #[serde(default = "default_runs")]
    pub n_runs: usize,
    #[serde(default)]
    pub seed: u64,
    /// Attach the ER audit trail of every run and dimension to JSON reports.
    #[serde(default)]
    pub include_traces: bool,
}

fn default_runs() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "system", content = "system_params", rename_all = "snake_case")]
pub enum SystemSpec {
    Lorenz(LorenzSystem),
    Kse(KseSystem),
    DoubleWell(DoubleWellSystem),
    LogisticNet(LogisticSystem),
    CustomCsv(CustomCsvSystem),
}

// `system_params` may be omitted, which the derived adjacent-tag form
// does not allow.
impl<'de> Deserialize<'de> for SystemSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;

        #[derive(Deserialize)]
        struct Raw {
            system: String,
            #[serde(default)]
            system_params: Option<serde_json::Value>,
        }
        let raw = Raw::deserialize(d)?;
        let params = raw
            .system_params
            .unwrap_or_else(|| serde_json::Value::Object(Default::default()));
        let spec = match raw.system.as_str() {
            "lorenz" => serde_json::from_value(params).map(SystemSpec::Lorenz),
            "kse" => serde_json::from_value(params).map(SystemSpec::Kse),
            "double_well" => serde_json::from_value(params).map(SystemSpec::DoubleWell),
            "logistic_net" => serde_json::from_value(params).map(SystemSpec::LogisticNet),
            "custom_csv" => serde_json::from_value(params).map(SystemSpec::CustomCsv),
            other => return Err(D::Error::custom(format!("unknown system `{other}`"))),
        };
        spec.map_err(|e| D::Error::custom(format!("system_params: {e}")))
    }
}

impl SystemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SystemSpec::Lorenz(_) => "lorenz",
            SystemSpec::Kse(_) => "kse",
            SystemSpec::DoubleWell(_) => "double_well",
            SystemSpec::LogisticNet(_) => "logistic_net",
            SystemSpec::CustomCsv(_) => "custom_csv",
        }
    }

    /// Derivative scheme used when the config does not name one.
    pub fn default_scheme(&self) -> DerivativeScheme {
        match self {
            SystemSpec::LogisticNet(_) => DerivativeScheme::Map,
            SystemSpec::CustomCsv(c) if c.map => DerivativeScheme::Map,
            _ => DerivativeScheme::Central,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LorenzSystem {
    #[serde(flatten)]
    pub params: LorenzParams,
    /// Integration step.
    pub dt: f64,
    /// Integration steps per sample (default interval 0.01).
    pub stride: usize,
    pub burn_in: usize,
    /// Fixed start. When absent each run starts from `(1, 1, 1)` plus a
    /// seeded uniform perturbation in `[−1, 1]³`.
    pub z0: Option<[f64; 3]>,
}

impl Default for LorenzSystem {
    fn default() -> Self {
        LorenzSystem {
            params: LorenzParams::default(),
            dt: 0.0005,
            stride: 20,
            burn_in: 10_000,
            z0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KseSystem {
    #[serde(flatten)]
    pub params: KseParams,
    pub dt: f64,
    pub stride: usize,
    pub burn_in: usize,
    /// Initial modes are drawn uniformly from `[−init_scale, init_scale]`.
    pub init_scale: f64,
}

impl Default for KseSystem {
    fn default() -> Self {
        KseSystem {
            params: KseParams::default(),
            dt: 0.001,
            stride: 10,
            burn_in: 10_000,
            init_scale: 0.1,
        }
    }
}

/// `V(x) = x⁴ − x²` on an equally spaced grid of `n_samples` points.
/// Noise, if any, is added to the potential values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DoubleWellSystem {
    pub lo: f64,
    pub hi: f64,
    pub outlier: Option<(f64, f64)>,
}

impl Default for DoubleWellSystem {
    fn default() -> Self {
        DoubleWellSystem {
            lo: -1.2,
            hi: 1.2,
            outlier: Some((0.52, 0.5)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticSystem {
    pub n_nodes: usize,
    #[serde(flatten)]
    pub params: LogisticParams,
    /// Prescribed node degrees; random degrees in `2..=4` when absent.
    pub degrees: Option<Vec<usize>>,
    /// Seed of the network topology, shared by all runs. Derived from the
    /// master seed when absent.
    pub topology_seed: Option<u64>,
    pub burn_in: usize,
}

impl Default for LogisticSystem {
    fn default() -> Self {
        LogisticSystem {
            n_nodes: 20,
            params: LogisticParams::default(),
            degrees: None,
            topology_seed: None,
            burn_in: 1000,
        }
    }
}

/// A trajectory CSV (`t, z1..zN`) with an optional ground-truth JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomCsvSystem {
    pub path: PathBuf,
    #[serde(default)]
    pub truth: Option<PathBuf>,
    /// Treat rows as iterates of a map rather than samples of a flow.
    #[serde(default)]
    pub map: bool,
}

/// A solver and its hyperparameters. `label` distinguishes several entries
/// for the same solver and defaults to the solver name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(flatten)]
    pub spec: SolverSpec,
}

impl SolverEntry {
    pub fn new(spec: SolverSpec) -> Self {
        SolverEntry { label: None, spec }
    }

    pub fn labelled(label: &str, spec: SolverSpec) -> Self {
        SolverEntry {
            label: Some(label.to_string()),
            spec,
        }
    }

    pub fn name(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.spec.id().name().to_string())
    }
}

/// Hyperparameters left out fall back to cross-validation (OLS, Lasso, CS)
/// or to the published defaults (SINDy, TW).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver", rename_all = "snake_case")]
pub enum SolverSpec {
    Ls,
    Ols {
        #[serde(default)]
        threshold: Option<f64>,
    },
    Lasso {
        #[serde(default)]
        lambda: Option<f64>,
    },
    Cs {
        #[serde(default)]
        epsilon: Option<f64>,
    },
    Sindy {
        #[serde(default = "sindy_lambda")]
        lambda: f64,
    },
    Tw {
        #[serde(default = "tw_lambda")]
        lambda: f64,
        #[serde(default = "tw_mu")]
        mu: f64,
        #[serde(default = "tw_tol")]
        tol: f64,
    },
    Er(ErConfig),
}

pub(crate) fn sindy_lambda() -> f64 {
    0.02
}

pub(crate) fn tw_lambda() -> f64 {
    0.1
}

pub(crate) fn tw_mu() -> f64 {
    0.0125
}

pub(crate) fn tw_tol() -> f64 {
    1e-6
}

impl SolverSpec {
    pub fn id(&self) -> SolverId {
        match self {
            SolverSpec::Ls => SolverId::Ls,
            SolverSpec::Ols { .. } => SolverId::Ols,
            SolverSpec::Lasso { .. } => SolverId::Lasso,
            SolverSpec::Cs { .. } => SolverId::Cs,
            SolverSpec::Sindy { .. } => SolverId::Sindy,
            SolverSpec::Tw { .. } => SolverId::Tw,
            SolverSpec::Er(_) => SolverId::Er,
        }
    }

    /// The solver with its default hyperparameters.
    pub fn default_for(id: SolverId) -> Self {
        match id {
            SolverId::Ls => SolverSpec::Ls,
            SolverId::Ols => SolverSpec::Ols { threshold: None },
            SolverId::Lasso => SolverSpec::Lasso { lambda: None },
            SolverId::Cs => SolverSpec::Cs { epsilon: None },
            SolverId::Sindy => SolverSpec::Sindy { lambda: sindy_lambda() },
            SolverId::Tw => SolverSpec::Tw {
                lambda: tw_lambda(),
                mu: tw_mu(),
                tol: tw_tol(),
            },
            SolverId::Er => SolverSpec::Er(ErConfig::default()),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json(j) => Error::Config(format!("{}: {j}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_runs == 0 {
            return Err(Error::Config("n_runs must be at least 1".into()));
        }
        if self.solvers.is_empty() {
            return Err(Error::Config("at least one solver is required".into()));
        }
        let mut seen = BTreeSet::new();
        for s in &self.solvers {
            if !seen.insert(s.name()) {
                return Err(Error::Config(format!("duplicate solver label `{}`", s.name())));
            }
            match &s.spec {
                SolverSpec::Sindy { lambda } if !(*lambda > 0.0) => {
                    return Err(Error::Config("sindy lambda must be positive".into()));
                }
                SolverSpec::Tw { lambda, mu, tol } if !(*lambda > 0.0 && *mu > 0.0 && *tol > 0.0) => {
                    return Err(Error::Config("tw lambda, mu and tol must be positive".into()));
                }
                SolverSpec::Ols { threshold: Some(t) } if !(*t > 0.0) => {
                    return Err(Error::Config("ols threshold must be positive".into()));
                }
                SolverSpec::Lasso { lambda: Some(l) } if !(*l >= 0.0) => {
                    return Err(Error::Config("lasso lambda must be nonnegative".into()));
                }
                SolverSpec::Cs { epsilon: Some(e) } if !(*e >= 0.0) => {
                    return Err(Error::Config("cs epsilon must be nonnegative".into()));
                }
                SolverSpec::Er(cfg) => {
                    cfg.shuffle.validate().map_err(|e| Error::Config(e.to_string()))?;
                    if cfg.knn_k == 0 {
                        return Err(Error::Config("er knn_k must be at least 1".into()));
                    }
                }
                _ => {}
            }
        }
        self.noise.validate().map_err(|e| Error::Config(e.to_string()))?;
        let min_rows = match self.system {
            SystemSpec::DoubleWell(_) => 2,
            _ => 1,
        };
        if self.n_samples < min_rows {
            return Err(Error::Config(format!("n_samples must be at least {min_rows}")));
        }
        match &self.system {
            SystemSpec::Lorenz(s) => {
                check_sampling(s.dt, s.stride)?;
                require_degree(self.basis_degree, 2, "lorenz")?;
            }
            SystemSpec::Kse(s) => {
                check_sampling(s.dt, s.stride)?;
                if s.params.n_modes == 0 || !(s.params.nu > 0.0) {
                    return Err(Error::Config("kse needs n_modes ≥ 1 and nu > 0".into()));
                }
            }
            SystemSpec::DoubleWell(s) => {
                if !(s.hi > s.lo) {
                    return Err(Error::Config("double_well needs lo < hi".into()));
                }
                require_degree(self.basis_degree, 4, "double_well")?;
            }
            SystemSpec::LogisticNet(s) => {
                if s.n_nodes == 0 {
                    return Err(Error::Config("logistic_net needs at least one node".into()));
                }
                if let Some(d) = &s.degrees {
                    if d.len() != s.n_nodes {
                        return Err(Error::Config(format!("{} degrees for {} nodes", d.len(), s.n_nodes)));
                    }
                }
                require_degree(self.basis_degree, 2, "logistic_net")?;
            }
            SystemSpec::CustomCsv(_) => {}
        }
        if matches!(self.system, SystemSpec::DoubleWell(_)) && self.derivative.is_some() {
            return Err(Error::Config("double_well is a static regression; drop `derivative`".into()));
        }
        Ok(())
    }

    pub fn scheme(&self) -> DerivativeScheme {
        self.derivative.unwrap_or_else(|| self.system.default_scheme())
    }
}

fn check_sampling(dt: f64, stride: usize) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) || stride == 0 {
        return Err(Error::Config("dt must be positive and stride at least 1".into()));
    }
    Ok(())
}

fn require_degree(d: u32, min: u32, system: &str) -> Result<()> {
    if d < min {
        return Err(Error::Config(format!("{system} needs basis_degree ≥ {min}, got {d}")));
    }
    Ok(())
}

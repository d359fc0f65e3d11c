use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde_json::json;

use entreg::basis::{build_basis_matrix, enumerate_monomials};
use entreg::bench::{
    emit_report, generate_dataset, run_experiment, run_seed, run_solver, score_solution, ExperimentConfig,
    ReportFormat, SolverSpec, SystemSpec,
};
use entreg::dynamics::{
    estimate_derivatives, evaluate_polynomial_field, simulate_polynomial_model, DerivativeScheme, Sampling,
    TimeSeriesSet,
};
use entreg::infotheory::{estimate_cmi, shuffle_threshold, ShuffleTestConfig};
use entreg::io::{read_csv, read_csv_table, write_binary, write_csv};
use entreg::solvers::SolverId;
use entreg::{Error, Result};

#[derive(Parser)]
#[command(name = "entreg", version, about = "Sparse nonlinear system identification by Entropic Regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// json|csv for reports, csv|binary for trajectories.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the configured system (run 0) and write the observed trajectory.
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Fit one dataset with one solver and print the recovered equations.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Solver name (ls, ols, lasso, cs, sindy, tw, er). Defaults to the
        /// config's first solver.
        #[arg(long)]
        solver: Option<String>,
        /// Fit a trajectory CSV directly instead of a configured system.
        #[arg(long, conflicts_with = "config")]
        data: Option<PathBuf>,
        /// Library degree when fitting `--data`.
        #[arg(long, default_value_t = 2)]
        degree: u32,
        /// Treat `--data` rows as iterates of a map.
        #[arg(long)]
        map: bool,
        /// Integrate the recovered model for this many steps and write it.
        #[arg(long, value_name = "STEPS")]
        resimulate: Option<usize>,
    },
    /// Run a full experiment and write report files.
    Bench {
        #[command(flatten)]
        common: Common,
    },
    /// Estimate I(X;Y) or I(X;Y|Z) between CSV columns.
    EstimateMi {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated column names.
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long)]
        z: Option<String>,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Also report a shuffle-test threshold from this many permutations.
        #[arg(long)]
        shuffles: Option<usize>,
        #[arg(long, default_value_t = 0.95)]
        alpha: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Generate { common } => generate(&common),
        Command::Fit {
            common,
            solver,
            data,
            degree,
            map,
            resimulate,
        } => fit(&common, solver.as_deref(), data.as_deref(), degree, map, resimulate),
        Command::Bench { common } => bench(&common),
        Command::EstimateMi {
            common,
            data,
            x,
            y,
            z,
            k,
            shuffles,
            alpha,
        } => estimate_mi(&common, &data, &x, &y, z.as_deref(), k, shuffles, alpha),
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = match ExperimentConfig::from_path(path) {
        Err(Error::Io { path, source }) => {
            return Err(Error::Config(format!("cannot read {}: {source}", path.display())));
        }
        other => other?,
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn generate(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let data = generate_dataset(&cfg, run_seed(cfg.seed, 0))?;
    create_dir(&common.out_dir)?;
    let path = match common.format.as_deref().unwrap_or("csv") {
        "csv" => {
            let p = common.out_dir.join("trajectory.csv");
            write_csv(&data.observed, &p)?;
            p
        }
        "binary" => {
            let p = common.out_dir.join("trajectory.bin");
            write_binary(&data.observed, &p)?;
            p
        }
        other => return Err(Error::Config(format!("unknown trajectory format `{other}`"))),
    };
    if let Some(truth) = &data.truth {
        let p = common.out_dir.join("truth.json");
        std::fs::write(&p, serde_json::to_string_pretty(truth)?).map_err(|source| Error::Io { path: p, source })?;
    }
    println!("{}", path.display());
    Ok(())
}

fn fit(
    common: &Common,
    solver: Option<&str>,
    data_path: Option<&Path>,
    degree: u32,
    map: bool,
    resimulate: Option<usize>,
) -> Result<()> {
    let (phi, targets, truth, aligned, spec, scheme) = if let Some(path) = data_path {
        let series = read_csv(path).map_err(|e| match e {
            Error::Io { path, source } => Error::Config(format!("cannot read {}: {source}", path.display())),
            other => other,
        })?;
        let scheme = if map { DerivativeScheme::Map } else { DerivativeScheme::Central };
        let (targets, aligned) = estimate_derivatives(&series, scheme)?;
        let phi = build_basis_matrix(&aligned, degree)?;
        let id: SolverId = solver.unwrap_or("er").parse()?;
        (phi, targets, None, aligned, SolverSpec::default_for(id), scheme)
    } else {
        let cfg = load_config(common)?;
        let spec = match solver {
            Some(name) => {
                let id: SolverId = name.parse()?;
                cfg.solvers
                    .iter()
                    .find(|s| s.spec.id() == id)
                    .map(|s| s.spec.clone())
                    .unwrap_or_else(|| SolverSpec::default_for(id))
            }
            None => cfg.solvers[0].spec.clone(),
        };
        if resimulate.is_some() && matches!(cfg.system, SystemSpec::DoubleWell(_)) {
            return Err(Error::Config("double_well is static; there is nothing to resimulate".into()));
        }
        let data = generate_dataset(&cfg, run_seed(cfg.seed, 0))?;
        (data.phi, data.targets, data.truth, data.aligned, spec, cfg.scheme())
    };

    let seed = common.seed.unwrap_or(0);
    let mut coefficients = DMatrix::zeros(phi.n_candidates(), targets.ncols());
    let mut solutions = Vec::new();
    let mut equations = Vec::new();
    for i in 0..targets.ncols() {
        let f: Vec<f64> = targets.column(i).iter().copied().collect();
        let (sol, trace) = run_solver(&spec, &phi, &f, seed.wrapping_add(i as u64))?;
        coefficients.column_mut(i).copy_from_slice(&sol.coefficients);
        let terms: Vec<_> = sol
            .support
            .iter()
            .map(|&j| json!({ "term": phi.columns()[j].to_string(), "index": j, "coefficient": sol.coefficients[j] }))
            .collect();
        equations.push(json!({
            "equation": i,
            "terms": terms,
            "residual_norm": sol.residual_norm,
            "converged": sol.converged,
            "hyperparams": sol.hyperparams,
            "trace": trace,
        }));
        solutions.push(sol);
    }
    let score = match &truth {
        Some(t) => Some(score_solution(t, &solutions)?),
        None => None,
    };
    let out = json!({ "solver": spec.id().name(), "equations": equations, "score": score });
    println!("{}", serde_json::to_string_pretty(&out)?);

    if let Some(steps) = resimulate {
        let library = enumerate_monomials(aligned.state_dim(), phi.max_degree())?;
        let z0 = aligned.state(0).to_vec();
        let series = match scheme {
            DerivativeScheme::Map => iterate_map(&library, &coefficients, &z0, steps.max(2))?,
            _ => {
                let sampling = Sampling::every_step(aligned.dt(), steps.max(2));
                simulate_polynomial_model(&library, &coefficients, &z0, &sampling, 1e6)?
            }
        };
        create_dir(&common.out_dir)?;
        let p = common.out_dir.join("resimulated.csv");
        write_csv(&series, &p)?;
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn iterate_map(
    library: &[entreg::basis::Monomial],
    coefficients: &DMatrix<f64>,
    z0: &[f64],
    steps: usize,
) -> Result<TimeSeriesSet> {
    let mut rows = vec![z0.to_vec()];
    let mut next = vec![0.0; z0.len()];
    for step in 1..steps {
        evaluate_polynomial_field(library, coefficients, &rows[step - 1], &mut next);
        if next.iter().any(|v| !v.is_finite() || v.abs() > 1e6) {
            return Err(Error::Diverged { step });
        }
        rows.push(next.clone());
    }
    TimeSeriesSet::from_rows(rows, 1.0)
}

fn bench(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let format: ReportFormat = common.format.as_deref().unwrap_or("json").parse()?;
    let report = run_experiment(&cfg)?;
    for path in emit_report(&report, &common.out_dir, format)? {
        println!("{}", path.display());
    }
    for a in &report.aggregates {
        eprintln!(
            "{:<12} median error {:>12} p_exact {:>6}",
            a.solver,
            a.median_error.map_or("-".into(), |v| format!("{v:.4e}")),
            a.p_exact.map_or("-".into(), |v| format!("{v:.2}")),
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn estimate_mi(
    common: &Common,
    data: &Path,
    x: &str,
    y: &str,
    z: Option<&str>,
    k: usize,
    shuffles: Option<usize>,
    alpha: f64,
) -> Result<()> {
    let table = read_csv_table(data).map_err(|e| match e {
        Error::Io { path, source } => Error::Config(format!("cannot read {}: {source}", path.display())),
        other => other,
    })?;
    let pick = |spec: &str| -> Result<Vec<Vec<f64>>> {
        spec.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|name| {
                table
                    .column_index(name)
                    .map(|j| table.column(j))
                    .ok_or_else(|| Error::Config(format!("no column `{name}` in {}", data.display())))
            })
            .collect()
    };
    let (xs, ys) = (pick(x)?, pick(y)?);
    let zs = z.map(pick).transpose()?.unwrap_or_default();
    let xr: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
    let yr: Vec<&[f64]> = ys.iter().map(Vec::as_slice).collect();
    let zr: Vec<&[f64]> = zs.iter().map(Vec::as_slice).collect();
    let value = estimate_cmi(&xr, &yr, &zr, k)?;
    let threshold = match shuffles {
        Some(n) => {
            let cfg = ShuffleTestConfig {
                alpha,
                n_shuffles: n,
                seed: common.seed.unwrap_or(0),
            };
            Some(shuffle_threshold(&xr, &yr, &zr, k, &cfg)?)
        }
        None => None,
    };
    let out = json!({
        "estimate": value,
        "conditional": !zs.is_empty(),
        "k": k,
        "n_samples": xs.first().map_or(0, Vec::len),
        "threshold": threshold,
        "significant": threshold.map(|t| value > t),
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

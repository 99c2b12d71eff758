use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use stable_varma::estimate::{
    bayes_fit, mle_fit, yule_walker_var, ChainOptions, Diagnostics, FitOptions, FitResult, Method, PriorSpec,
};
use stable_varma::model::{forecast, log_likelihood, simulate, SamplePath, VarmaSpec};
use stable_varma::stable::root_moduli;

use crate::bench::{run_bench, save_bench_csv, write_bench_csv, BenchConfig, Scenario};
use crate::error::{CliError, CliResult};
use crate::io::{column_header, read_csv, write_rows, write_sample};
use crate::model_file::ModelFile;

#[derive(Debug, Parser)]
#[command(name = "stable-varma", version, about = "Causal-invertible VARMA estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a sample path from a model file.
    Simulate(SimulateArgs),
    /// Fit a VARMA(p, q) model to CSV data.
    Fit(FitArgs),
    /// Print the moduli of the AR and MA roots of a model.
    Roots(RootsArgs),
    /// Forecast from a model and observed data.
    Forecast(ForecastArgs),
    /// Run a Monte Carlo comparison of estimators.
    Bench(BenchArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Fit(_) => "fit",
            Command::Roots(_) => "roots",
            Command::Forecast(_) => "forecast",
            Command::Bench(_) => "bench",
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct EstimationArgs {
    /// Iteration cap of the quasi-Newton optimizer.
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// Order of the long autoregression used for starting values.
    #[arg(long)]
    pub init_order: Option<usize>,
    #[arg(long, default_value_t = 1e30)]
    pub bounds_ls: f64,
    #[arg(long, default_value_t = 1e10)]
    pub bounds_d: f64,
    /// Total MCMC iterations, burn-in included.
    #[arg(long, default_value_t = 20_000)]
    pub chain_length: usize,
    #[arg(long, default_value_t = 5_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    /// Initial random-walk step, adapted during burn-in.
    #[arg(long, default_value_t = 0.1)]
    pub rw_step: f64,
    /// Prior standard deviation of every real pre-parameter.
    #[arg(long, default_value_t = 5.0_f64.sqrt())]
    pub prior_sd: f64,
}

impl EstimationArgs {
    fn fit_options(&self) -> FitOptions {
        FitOptions {
            max_iter: self.max_iter,
            init_order: self.init_order,
            bounds_ls: self.bounds_ls,
            bounds_d: self.bounds_d,
            ..FitOptions::default()
        }
    }

    fn prior(&self) -> PriorSpec {
        PriorSpec { real_prior_sd: self.prior_sd, ..PriorSpec::default() }
    }

    fn chain(&self, seed: u64) -> ChainOptions {
        ChainOptions {
            length: self.chain_length,
            burn_in: self.burn_in,
            thin: self.thin,
            rw_step: self.rw_step,
            seed,
            ..ChainOptions::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub p: usize,
    #[arg(long, default_value_t = 0)]
    pub q: usize,
    /// yw, mle or bayes.
    #[arg(long, default_value = "mle")]
    pub method: Method,
    /// Subtract column means before fitting.
    #[arg(long)]
    pub demean: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub estimation: EstimationArgs,
}

#[derive(Debug, Args)]
pub struct RootsArgs {
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub h: usize,
    /// Forecast deviations from the column means and add the means back.
    #[arg(long)]
    pub demean: bool,
    /// Output CSV; printed to standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// sim_model1, sim_model2, sim_model3 or custom.
    #[arg(long)]
    pub scenario: String,
    /// Comma-separated values of the varied coefficient.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub grid: Vec<f64>,
    /// Fixed lower-left coefficient of sim_model2.
    #[arg(long, default_value_t = 0.1)]
    pub phi31: f64,
    /// True model for the custom scenario.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long, value_delimiter = ',', default_value = "yw,mle")]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub estimation: EstimationArgs,
}

/// Executes a parsed command and returns the text for standard output.
pub fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Fit(args) => cmd_fit(&args),
        Command::Roots(args) => cmd_roots(&args),
        Command::Forecast(args) => cmd_forecast(&args),
        Command::Bench(args) => cmd_bench(&args),
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<String> {
    let spec = ModelFile::load(&args.model)?.to_spec()?;
    let data = simulate(&spec, args.n, args.seed)?;
    write_sample(&args.out, &data)?;
    Ok(format!("wrote {} observations of {} series to {}\n", data.n(), data.m(), args.out.display()))
}

/// Fits one model; Yule-Walker is only available for pure autoregressions.
pub fn fit_data(
    data: &SamplePath,
    p: usize,
    q: usize,
    method: Method,
    seed: u64,
    est: &EstimationArgs,
) -> CliResult<FitResult> {
    match method {
        Method::YuleWalker => {
            if q > 0 {
                return Err(CliError::Usage("--method yw only fits pure autoregressions; use --q 0".into()));
            }
            let spec = yule_walker_var(data, p)?;
            let spectral_radii = spec.check_stable()?;
            Ok(FitResult {
                method,
                codec: spec.to_codec().ok(),
                loglik: log_likelihood(&spec, data)?,
                delta_profile: Vec::new(),
                diagnostics: Diagnostics { converged: true, spectral_radii, ..Diagnostics::default() },
                spec,
            })
        }
        Method::Mle => Ok(mle_fit(data, p, q, &est.fit_options())?),
        Method::Bayes => Ok(bayes_fit(data, p, q, &est.prior(), &est.chain(seed))?.result),
    }
}

fn write_matrix(out: &mut String, name: &str, m: &DMatrix<f64>) {
    let _ = writeln!(out, "{name}:");
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:>10.4}")).collect();
        let _ = writeln!(out, "  {}", cells.join(" "));
    }
}

pub fn fit_summary(fit: &FitResult) -> String {
    let mut out = String::new();
    let spec = &fit.spec;
    let _ = writeln!(out, "method: {}  (m = {}, p = {}, q = {})", fit.method, spec.m(), spec.p(), spec.q());
    for (j, c) in spec.phi().coeffs().iter().enumerate() {
        write_matrix(&mut out, &format!("Phi_{}", j + 1), c);
    }
    for (j, c) in spec.theta().coeffs().iter().enumerate() {
        write_matrix(&mut out, &format!("Theta_{}", j + 1), c);
    }
    write_matrix(&mut out, "Sigma", spec.sigma().as_matrix());
    let _ = writeln!(out, "log-likelihood: {:.6}", fit.loglik);
    let (ar, ma) = fit.diagnostics.spectral_radii;
    let _ = writeln!(out, "spectral radius: AR {ar:.6}, MA {ma:.6}");
    if !fit.delta_profile.is_empty() {
        let bits: Vec<&str> = fit.delta_profile.iter().map(|&b| if b { "1" } else { "0" }).collect();
        let _ = writeln!(out, "reflection bits: {}", bits.join(""));
    }
    if !fit.diagnostics.acceptance_rates.is_empty() {
        let rates: Vec<String> = fit.diagnostics.acceptance_rates.iter().map(|r| format!("{r:.3}")).collect();
        let _ = writeln!(out, "acceptance rates: {}", rates.join(", "));
    }
    for w in &fit.diagnostics.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

pub fn cmd_fit(args: &FitArgs) -> CliResult<String> {
    if args.method == Method::YuleWalker && args.q > 0 {
        return Err(CliError::Usage("--method yw only fits pure autoregressions; use --q 0".into()));
    }
    let raw = read_csv(&args.data)?;
    let data = if args.demean { raw.demeaned() } else { raw };
    let fit = fit_data(&data, args.p, args.q, args.method, args.seed, &args.estimation)?;
    let seed = (args.method == Method::Bayes).then_some(args.seed);
    let file = ModelFile::from_fit(&fit, seed)?;
    if file.meta.spectral_radii.iter().any(|&r| r >= 1.0) {
        return Err(CliError::Numerical("fitted model is not causal-invertible".into()));
    }
    if let Some(path) = &args.out {
        file.save(path)?;
    }
    Ok(fit_summary(&fit))
}

/// Root moduli of the AR and MA parts, each sorted in decreasing order.
pub fn roots_table(spec: &VarmaSpec) -> CliResult<Vec<(&'static str, f64)>> {
    let mut rows = Vec::new();
    for (part, poly) in [("AR", spec.phi().clone()), ("MA", spec.theta().negated())] {
        let mut moduli = root_moduli(&poly)?;
        moduli.sort_by(|a, b| b.total_cmp(a));
        rows.extend(moduli.into_iter().map(|r| (part, r)));
    }
    Ok(rows)
}

pub fn cmd_roots(args: &RootsArgs) -> CliResult<String> {
    let spec = ModelFile::load(&args.model)?.to_spec()?;
    let rows = roots_table(&spec)?;
    let mut out = String::from("part  |root|\n");
    if rows.is_empty() {
        out.push_str("(no roots)\n");
    }
    for (part, r) in rows {
        let flag = if r >= 1.0 { "  <- on or outside the unit circle" } else { "" };
        let _ = writeln!(out, "{part:<4}  {r:.6}{flag}");
    }
    Ok(out)
}

pub fn cmd_forecast(args: &ForecastArgs) -> CliResult<String> {
    if args.h < 1 {
        return Err(CliError::Usage("--h must be at least 1".into()));
    }
    let spec = ModelFile::load(&args.model)?.to_spec()?;
    let raw = read_csv(&args.data)?;
    let data = if args.demean { raw.demeaned() } else { raw };
    let fc = forecast(&spec, &data, args.h)?;
    let m = spec.m();
    let offset = data.mean().cloned().unwrap_or_else(|| nalgebra::DVector::zeros(m));
    let mut header = vec!["h".to_string()];
    header.extend(column_header(m).into_iter().map(|c| format!("mean_{c}")));
    header.extend(column_header(m).into_iter().map(|c| format!("se_{c}")));
    let rows: Vec<Vec<f64>> = fc
        .means
        .iter()
        .zip(&fc.mse)
        .enumerate()
        .map(|(step, (mean, mse))| {
            let mut row = vec![(step + 1) as f64];
            row.extend((mean + &offset).iter());
            row.extend(mse.diagonal().iter().map(|v| v.max(0.0).sqrt()));
            row
        })
        .collect();
    match &args.out {
        Some(path) => {
            write_rows(path, &header, &rows)?;
            Ok(format!("wrote {} forecast steps to {}\n", args.h, path.display()))
        }
        None => {
            let mut out = header.join(",");
            out.push('\n');
            for row in rows {
                let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            Ok(out)
        }
    }
}

pub fn bench_config(args: &BenchArgs) -> CliResult<BenchConfig> {
    let scenario = match args.scenario.as_str() {
        "sim_model1" => Scenario::SimModel1,
        "sim_model2" => Scenario::SimModel2 { phi31: args.phi31 },
        "sim_model3" => Scenario::SimModel3,
        "custom" => {
            let path = args.model.as_ref().ok_or_else(|| CliError::Usage("custom scenario needs --model".into()))?;
            Scenario::Custom(ModelFile::load(path)?.to_spec()?)
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown scenario '{other}' (expected sim_model1, sim_model2, sim_model3 or custom)"
            )))
        }
    };
    let mut config = BenchConfig::new(scenario);
    if !args.grid.is_empty() {
        config.grid = args.grid.clone();
    }
    config.n = args.n;
    config.replications = args.reps;
    config.methods = args.methods.clone();
    config.seed = args.seed;
    config.threads = args.threads;
    config.fit = args.estimation.fit_options();
    config.prior = args.estimation.prior();
    config.chain = args.estimation.chain(0);
    Ok(config)
}

pub fn cmd_bench(args: &BenchArgs) -> CliResult<String> {
    let config = bench_config(args)?;
    let rows = run_bench(&config)?;
    match &args.out {
        Some(path) => {
            save_bench_csv(path, &rows)?;
            Ok(format!("wrote {} rows to {}\n", rows.len(), path.display()))
        }
        None => {
            let mut buf = Vec::new();
            write_bench_csv(&mut buf, &rows).map_err(|e| CliError::Data(e.to_string()))?;
            Ok(String::from_utf8_lossy(&buf).into_owned())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use stable_varma::stable::{MatPoly, SpdMatrix};

    #[test]
    fn roots_sorted_and_flagged() {
        let spec = VarmaSpec::var(
            MatPoly::new(2, vec![DMatrix::from_row_slice(2, 2, &[0.99, 0.0, 2.0, 0.99])]).unwrap(),
            SpdMatrix::identity(2),
        )
        .unwrap();
        let rows = roots_table(&spec).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.0 == "AR" && (r.1 - 0.99).abs() < 1e-6));
        assert!(roots_table(&VarmaSpec::white_noise(SpdMatrix::identity(3))).unwrap().is_empty());
    }

    #[test]
    fn scalar_quadratic_roots() {
        let a1 = 3.0_f64.sqrt() * (2.0 - 2.0_f64.sqrt()) / 6.0;
        let a2 = 2.0_f64.sqrt() / 2.0;
        let spec = VarmaSpec::var(MatPoly::scalar(&[a1, a2]), SpdMatrix::identity(1)).unwrap();
        let rows = roots_table(&spec).unwrap();
        assert!((rows[0].1 - 0.9297).abs() < 1e-4, "{rows:?}");
        assert!((rows[1].1 - 0.7606).abs() < 1e-4, "{rows:?}");
    }

    #[test]
    fn yw_with_ma_is_usage_error() {
        let data = SamplePath::new(DMatrix::from_fn(50, 1, |i, _| (i as f64).sin())).unwrap();
        let est = EstimationArgs::parse_defaults();
        let err = fit_data(&data, 1, 1, Method::YuleWalker, 0, &est).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    impl EstimationArgs {
        fn parse_defaults() -> Self {
            #[derive(Parser)]
            struct Wrapper {
                #[command(flatten)]
                est: EstimationArgs,
            }
            Wrapper::parse_from(["x"]).est
        }
    }
}

//! Monte Carlo benchmark runner.
//!
//! Each grid point simulates `N` replications from the true model, fits every
//! requested method and reports entry-wise and overall RMSE, where
//! `RMSE = sqrt(n/N · Σ_j ‖est_j − truth‖²)`. Replication seeds come from a
//! ChaCha stream indexed by (grid point, replication), so results do not
//! depend on the number of worker threads.

use std::path::Path;

use nalgebra::DMatrix;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use stable_varma::estimate::{
    bayes_fit, entry_rmse, mle_fit, overall_nmse, yule_walker_var, ChainOptions, FitOptions, Method, PriorSpec,
};
use stable_varma::model::{simulate, SamplePath, VarmaSpec};
use stable_varma::stable::{MatPoly, SpdMatrix};

use crate::error::{CliError, CliResult};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "STABLE_VARMA_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    /// `Φ = [[g, 0], [1, 0.8]]`, `Σ = I`.
    SimModel1,
    /// `Φ = [[g, 0, 0], [0.1, 0.5, 0], [phi31, 0.4, 0.8]]`, `Σ = I`.
    SimModel2 { phi31: f64 },
    /// `Φ_1 = [[g, 0], [1, 0.4]]`, `Φ_2 = [[0, 0], [0, 0.45]]`, `Σ = I`.
    SimModel3,
    /// A fixed user-supplied model; the grid is ignored.
    Custom(VarmaSpec),
}

impl Scenario {
    pub fn id(&self) -> &'static str {
        match self {
            Scenario::SimModel1 => "sim_model1",
            Scenario::SimModel2 { .. } => "sim_model2",
            Scenario::SimModel3 => "sim_model3",
            Scenario::Custom(_) => "custom",
        }
    }

    /// Grid of the varied coefficient used when none is given.
    pub fn default_grid(&self) -> Vec<f64> {
        match self {
            Scenario::SimModel1 | Scenario::SimModel3 => vec![
                -0.99, -0.95, -0.9, -0.8, -0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6, 0.8, 0.9, 0.95, 0.99,
            ],
            Scenario::SimModel2 { .. } => vec![-0.99, -0.95, -0.5, 0.4, 0.9, 0.99],
            Scenario::Custom(_) => Vec::new(),
        }
    }

    pub fn truth(&self, g: f64) -> CliResult<VarmaSpec> {
        let mat = |m: usize, v: &[f64]| DMatrix::from_row_slice(m, m, v);
        let spec = match self {
            Scenario::SimModel1 => {
                VarmaSpec::var(MatPoly::new(2, vec![mat(2, &[g, 0.0, 1.0, 0.8])])?, SpdMatrix::identity(2))?
            }
            Scenario::SimModel2 { phi31 } => VarmaSpec::var(
                MatPoly::new(3, vec![mat(3, &[g, 0.0, 0.0, 0.1, 0.5, 0.0, *phi31, 0.4, 0.8])])?,
                SpdMatrix::identity(3),
            )?,
            Scenario::SimModel3 => VarmaSpec::var(
                MatPoly::new(2, vec![mat(2, &[g, 0.0, 1.0, 0.4]), mat(2, &[0.0, 0.0, 0.0, 0.45])])?,
                SpdMatrix::identity(2),
            )?,
            Scenario::Custom(spec) => spec.clone(),
        };
        spec.check_stable()
            .map_err(|e| CliError::Usage(format!("{} at grid value {g}: {e}", self.id())))?;
        Ok(spec)
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub scenario: Scenario,
    pub grid: Vec<f64>,
    /// Sample size of each replication.
    pub n: usize,
    pub replications: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub fit: FitOptions,
    pub prior: PriorSpec,
    pub chain: ChainOptions,
    /// Worker count; falls back to the environment, then to the rayon default.
    pub threads: Option<usize>,
}

impl BenchConfig {
    pub fn new(scenario: Scenario) -> Self {
        let grid = scenario.default_grid();
        Self {
            scenario,
            grid,
            n: 100,
            replications: 500,
            methods: vec![Method::YuleWalker, Method::Mle],
            seed: 0,
            fit: FitOptions::default(),
            prior: PriorSpec::default(),
            chain: ChainOptions::default(),
            threads: None,
        }
    }

    fn validate(&self) -> CliResult<()> {
        if self.replications < 1 {
            return Err(CliError::Usage("benchmark needs at least one replication".into()));
        }
        if self.n < 10 {
            return Err(CliError::Usage(format!("benchmark sample size must be at least 10, got {}", self.n)));
        }
        if self.methods.is_empty() {
            return Err(CliError::Usage("no estimation methods selected".into()));
        }
        if !matches!(self.scenario, Scenario::Custom(_)) && self.grid.is_empty() {
            return Err(CliError::Usage("empty parameter grid".into()));
        }
        let q = self.truth_at(0)?.q();
        if q > 0 && self.methods.contains(&Method::YuleWalker) {
            return Err(CliError::Usage("Yule-Walker only fits pure autoregressions (q = 0)".into()));
        }
        Ok(())
    }

    fn points(&self) -> Vec<Option<f64>> {
        match self.scenario {
            Scenario::Custom(_) => vec![None],
            _ => self.grid.iter().copied().map(Some).collect(),
        }
    }

    fn truth_at(&self, index: usize) -> CliResult<VarmaSpec> {
        let g = self.points().get(index).copied().flatten().unwrap_or(0.0);
        self.scenario.truth(g)
    }
}

/// One output line: RMSE of one parameter (or `overall`) for one method at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub scenario: String,
    pub grid_value: Option<f64>,
    pub method: Method,
    pub parameter: String,
    pub rmse: f64,
    pub replications: usize,
    pub failures: usize,
}

/// Seeds for the data and for the sampler of one replication.
pub fn replication_seeds(master: u64, grid_index: usize, replication: usize) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((grid_index as u64) << 32) | replication as u64);
    (rng.next_u64(), rng.next_u64())
}

fn thread_count(config: &BenchConfig) -> CliResult<usize> {
    if let Some(t) = config.threads {
        return Ok(t);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a non-negative integer, got '{v}'"))),
        Err(_) => Ok(0),
    }
}

fn fit_one(
    method: Method,
    data: &SamplePath,
    p: usize,
    q: usize,
    config: &BenchConfig,
    chain_seed: u64,
) -> stable_varma::Result<VarmaSpec> {
    let spec = match method {
        Method::YuleWalker => yule_walker_var(data, p)?,
        Method::Mle => mle_fit(data, p, q, &config.fit)?.spec,
        Method::Bayes => {
            let chain = ChainOptions { seed: chain_seed, ..config.chain.clone() };
            bayes_fit(data, p, q, &config.prior, &chain)?.result.spec
        }
    };
    spec.check_stable()?;
    Ok(spec)
}

fn coefficient_matrices(spec: &VarmaSpec) -> Vec<DMatrix<f64>> {
    spec.phi().coeffs().iter().chain(spec.theta().coeffs()).cloned().collect()
}

fn parameter_names(m: usize, p: usize, q: usize) -> Vec<Vec<String>> {
    let lag = |name: &str, j: usize| {
        (0..m).flat_map(move |r| (0..m).map(move |c| (r, c))).map(|(r, c)| format!("{name}{j}_{}{}", r + 1, c + 1)).collect()
    };
    (1..=p).map(|j| lag("phi", j)).chain((1..=q).map(|j| lag("theta", j))).collect()
}

type Replication = Vec<Result<Vec<DMatrix<f64>>, String>>;

/// Runs the benchmark; failing fits are logged and excluded, never fatal.
pub fn run_bench(config: &BenchConfig) -> CliResult<Vec<BenchRow>> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(config)?)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let mut rows = Vec::new();
    for (gi, point) in config.points().into_iter().enumerate() {
        let truth = config.truth_at(gi)?;
        let (m, p, q) = (truth.m(), truth.p(), truth.q());
        let reps: Vec<Replication> = pool.install(|| {
            (0..config.replications)
                .into_par_iter()
                .map(|rep| {
                    let (data_seed, chain_seed) = replication_seeds(config.seed, gi, rep);
                    let data = simulate(&truth, config.n, data_seed);
                    config
                        .methods
                        .iter()
                        .map(|&method| {
                            let data = data.as_ref().map_err(|e| format!("simulation failed: {e}"))?;
                            fit_one(method, data, p, q, config, chain_seed)
                                .map(|spec| coefficient_matrices(&spec))
                                .map_err(|e| e.to_string())
                        })
                        .collect()
                })
                .collect()
        });

        let truth_mats = coefficient_matrices(&truth);
        let names = parameter_names(m, p, q);
        for (k, &method) in config.methods.iter().enumerate() {
            let mut estimates = Vec::new();
            let mut failures = 0;
            for (rep, outcome) in reps.iter().enumerate() {
                match &outcome[k] {
                    Ok(mats) => estimates.push(mats.clone()),
                    Err(msg) => {
                        failures += 1;
                        eprintln!(
                            "warning: {} grid {:?} replication {rep} method {method}: {msg}",
                            config.scenario.id(),
                            point
                        );
                    }
                }
            }
            let row = |parameter: String, rmse: f64| BenchRow {
                scenario: config.scenario.id().to_string(),
                grid_value: point,
                method,
                parameter,
                rmse,
                replications: estimates.len(),
                failures,
            };
            for (j, truth_j) in truth_mats.iter().enumerate() {
                let column: Vec<DMatrix<f64>> = estimates.iter().map(|e| e[j].clone()).collect();
                let entries = if column.is_empty() {
                    DMatrix::from_element(m, m, f64::NAN)
                } else {
                    entry_rmse(&column, truth_j, config.n)?
                };
                for (idx, name) in names[j].iter().enumerate() {
                    rows.push(row(name.clone(), entries[(idx / m, idx % m)]));
                }
            }
            let overall = if estimates.is_empty() || truth_mats.is_empty() {
                f64::NAN
            } else {
                overall_nmse(&estimates, &truth_mats, config.n)?.sqrt()
            };
            rows.push(row("overall".into(), overall));
        }
    }
    Ok(rows)
}

pub const CSV_HEADER: [&str; 7] = ["scenario", "grid_value", "method", "parameter", "rmse", "replications", "failures"];

pub fn write_bench_csv<W: std::io::Write>(writer: W, rows: &[BenchRow]) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CSV_HEADER)?;
    for r in rows {
        wtr.write_record([
            r.scenario.clone(),
            r.grid_value.map(|g| g.to_string()).unwrap_or_default(),
            r.method.to_string(),
            r.parameter.clone(),
            r.rmse.to_string(),
            r.replications.to_string(),
            r.failures.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_bench_csv(path: &Path, rows: &[BenchRow]) -> CliResult<()> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_bench_csv(file, rows).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Looks up the RMSE for `(grid value, method, parameter)`.
pub fn lookup(rows: &[BenchRow], grid_value: Option<f64>, method: Method, parameter: &str) -> Option<f64> {
    rows.iter()
        .find(|r| r.grid_value == grid_value && r.method == method && r.parameter == parameter)
        .map(|r| r.rmse)
}

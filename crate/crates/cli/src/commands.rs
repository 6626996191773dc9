use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gknn::analytics::report_from_ranked;
use gknn::distribution::{limit_annual_yield, limit_m_var, EmpiricalDistribution};
use gknn::empirical::{compare_to_analytic, ensemble_from_ranked, EnsembleOptions, DEFAULT_Z_THRESHOLD};
use gknn::kernel::{convergence_experiment, EvalGrid, SyntheticProcess};
use gknn::tank::{aggregate_monthly, simulate_tank, TankConfig};
use gknn::upscaling::{gknn_problem, QueryTable, Schema, TrainingTable, Upscaler};
use gknn::{RankDistribution, RankedSeries, SeededSampler, TrainingSet};

use crate::error::{CliError, CliResult};
use crate::formats::{
    fmt_float, parse_dist, parse_list, read_actual, read_daily_climate, read_file, read_queries, read_training, sibling,
    write_atomic, write_training, CsvOut, KeyValue, Manifest,
};

#[derive(Debug, Parser)]
#[command(name = "gknn", version, about = "Generalized k-nearest-neighbour temporal upscaling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the daily tank balance and aggregate to monthly training rows.
    TankSim(TankSimArgs),
    /// Upscale a monthly query series with one of the method suite.
    Upscale(UpscaleArgs),
    /// Closed-form moments of the GkNN process.
    Moments(MomentsArgs),
    /// Monte Carlo ensemble checked against the closed-form moments.
    Verify(VerifyArgs),
    /// Kernel convergence table for the synthetic exponential process.
    KernelExp(KernelExpArgs),
    /// Ranking-class frequencies of a query series and their limit values.
    Nu(NuArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SchemaArg {
    Coombes,
    Knn,
    Bootstrap,
}

impl From<SchemaArg> for Schema {
    fn from(s: SchemaArg) -> Self {
        match s {
            SchemaArg::Coombes => Schema::Coombes,
            SchemaArg::Knn => Schema::Knn,
            SchemaArg::Bootstrap => Schema::Bootstrap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Nn,
    Knn,
    Bootstrap,
    ModifiedBootstrap,
}

impl Method {
    fn name(&self) -> &'static str {
        match self {
            Method::Nn => "nn",
            Method::Knn => "knn",
            Method::Bootstrap => "bootstrap",
            Method::ModifiedBootstrap => "modified-bootstrap",
        }
    }
}

#[derive(Debug, Args)]
pub struct TankSimArgs {
    /// Daily climate CSV (date,rain_mm,temp_c).
    #[arg(long)]
    pub climate: PathBuf,
    /// Tank configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Monthly training CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "coombes")]
    pub schema: SchemaArg,
    /// Daily balance CSV; defaults to `<out>.daily.csv`.
    #[arg(long)]
    pub daily_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct UpscaleArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    #[arg(long)]
    pub training: PathBuf,
    #[arg(long)]
    pub series: PathBuf,
    /// Neighbours for the kNN method.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub runs: u64,
    /// NN weights, one per climatic column (default all 1).
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    #[arg(long)]
    pub training: PathBuf,
    #[arg(long)]
    pub series: PathBuf,
    /// Rank distribution: topk:K, harmonic:K or explicit:p1,p2,...
    #[arg(long)]
    pub dist: String,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Actual yields (CSV with a yield_l column), one per query step.
    #[arg(long)]
    pub actual: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Summary file; defaults to `<out>.summary`.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub runs: usize,
    #[arg(long, default_value_t = DEFAULT_Z_THRESHOLD)]
    pub threshold: f64,
    #[arg(long)]
    pub actual: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct KernelExpArgs {
    /// Comma-separated training sizes, increasing.
    #[arg(long, default_value = "400,2500,10000")]
    pub n_values: String,
    /// Comma-separated seeds.
    #[arg(long, default_value = "1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19,20")]
    pub seeds: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NuArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Summary file; defaults to `<out>.summary`.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::TankSim(a) => cmd_tank_sim(&a),
        Command::Upscale(a) => cmd_upscale(&a),
        Command::Moments(a) => cmd_moments(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::KernelExp(a) => cmd_kernel_exp(&a),
        Command::Nu(a) => cmd_nu(&a),
    }
}

fn finish(manifest: &mut Manifest, outputs: &[(&str, &Path, Vec<u8>)]) -> CliResult<()> {
    for (name, path, bytes) in outputs {
        write_atomic(path, bytes)?;
        manifest.output(name, path, bytes);
    }
    let primary = outputs.first().expect("at least one output").1;
    write_atomic(&sibling(primary, "manifest"), manifest.render().as_bytes())
}

pub fn cmd_tank_sim(a: &TankSimArgs) -> CliResult<()> {
    let climate_bytes = read_file(&a.climate)?;
    let config_bytes = read_file(&a.config)?;
    let config_text = std::str::from_utf8(&config_bytes).map_err(|e| CliError::Input(format!("config: {e}")))?;
    let cfg: TankConfig = toml::from_str(config_text).map_err(|e| CliError::Input(format!("config: {e}")))?;
    let climate = read_daily_climate(&climate_bytes)?;
    let balance = simulate_tank(&climate, &cfg)?;
    let yields: Vec<f64> = balance.iter().map(|b| b.yield_value).collect();
    let schema: Schema = a.schema.into();
    let monthly = aggregate_monthly(&climate, &yields, schema)?;

    let mut daily = CsvOut::new(&["date", "rain_mm", "temp_c", "inflow_l", "demand_l", "yield_l", "storage_l", "spill_l"]);
    for (c, b) in climate.iter().zip(&balance) {
        daily.row([
            c.date.format("%Y-%m-%d").to_string(),
            fmt_float(c.rainfall),
            fmt_float(c.temperature),
            fmt_float(b.inflow),
            fmt_float(b.demand),
            fmt_float(b.yield_value),
            fmt_float(b.storage),
            fmt_float(b.spill),
        ]);
    }
    let daily_path = a.daily_out.clone().unwrap_or_else(|| sibling(&a.out, "daily.csv"));
    let mut manifest = Manifest::new("tank-sim");
    manifest
        .param("schema", schema.name())
        .input("climate", &a.climate, &climate_bytes)
        .input("config", &a.config, &config_bytes);
    finish(
        &mut manifest,
        &[("monthly", &a.out, write_training(&monthly)), ("daily", &daily_path, daily.into_bytes())],
    )
}

struct Problem {
    training: TrainingTable,
    queries: QueryTable,
    training_bytes: Vec<u8>,
    series_bytes: Vec<u8>,
}

fn load_problem(training: &Path, series: &Path) -> CliResult<Problem> {
    let training_bytes = read_file(training)?;
    let series_bytes = read_file(series)?;
    let training_table = read_training(&training_bytes)?;
    let queries = read_queries(&series_bytes)?;
    if training_table.schema != queries.schema {
        return Err(CliError::Input(format!(
            "schema mismatch: training is {}, series is {}",
            training_table.schema.name(),
            queries.schema.name()
        )));
    }
    Ok(Problem {
        training: training_table,
        queries,
        training_bytes,
        series_bytes,
    })
}

pub fn cmd_upscale(a: &UpscaleArgs) -> CliResult<()> {
    if a.runs < 1 {
        return Err(CliError::Input("--runs must be at least 1".into()));
    }
    let p = load_problem(&a.training, &a.series)?;
    let upscaler = match a.method {
        Method::Nn => {
            let weights = match &a.weights {
                Some(w) => parse_list(w, "--weights")?,
                None => vec![1.0; p.training.schema.climatic_columns().len()],
            };
            Upscaler::nn(&p.queries, &p.training, &weights)?
        }
        Method::Knn => Upscaler::knn(&p.queries, &p.training, a.k)?,
        Method::Bootstrap => Upscaler::bootstrap(&p.queries, &p.training)?,
        Method::ModifiedBootstrap => Upscaler::modified_bootstrap(&p.queries, &p.training)?,
    };
    let mut out = CsvOut::new(&["run", "t", "month_label", "yield_l"]);
    for run in 1..=a.runs {
        let y = upscaler.run(SeededSampler::new(a.seed, run));
        for (t, (yt, q)) in y.iter().zip(&p.queries.records).enumerate() {
            out.row([
                run.to_string(),
                (t + 1).to_string(),
                q.month_label.map(|l| l.to_string()).unwrap_or_default(),
                fmt_float(*yt),
            ]);
        }
    }
    let mut manifest = Manifest::new("upscale");
    manifest.param("method", a.method.name()).param("seed", a.seed).param("runs", a.runs);
    if a.method == Method::Knn {
        manifest.param("k", a.k);
    }
    if let Some(w) = &a.weights {
        manifest.param("weights", w);
    }
    manifest
        .input("training", &a.training, &p.training_bytes)
        .input("series", &a.series, &p.series_bytes);
    finish(&mut manifest, &[("yields", &a.out, out.into_bytes())])
}

struct Prepared {
    problem: Problem,
    ts: TrainingSet,
    rd: RankDistribution,
    ranked: RankedSeries,
}

fn prepare(args: &ProblemArgs) -> CliResult<Prepared> {
    let problem = load_problem(&args.training, &args.series)?;
    let (series, ts, metric) = gknn_problem(&problem.training, &problem.queries)?;
    let rd = RankDistribution::new(parse_dist(&args.dist)?, ts.len())?;
    let ranked = RankedSeries::build(&series, &ts, &metric, &rd)?;
    Ok(Prepared {
        problem,
        ts,
        rd,
        ranked,
    })
}

fn problem_manifest(command: &str, args: &ProblemArgs, p: &Prepared) -> Manifest {
    let mut m = Manifest::new(command);
    m.param("dist", &args.dist)
        .param("schema", p.problem.training.schema.name())
        .input("training", &args.training, &p.problem.training_bytes)
        .input("series", &args.series, &p.problem.series_bytes);
    m
}

fn load_actual(path: &Option<PathBuf>, manifest: &mut Manifest) -> CliResult<Option<Vec<f64>>> {
    path.as_ref()
        .map(|path| {
            let bytes = read_file(path)?;
            manifest.input("actual", path, &bytes);
            read_actual(&bytes)
        })
        .transpose()
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

pub fn cmd_moments(a: &MomentsArgs) -> CliResult<()> {
    let p = prepare(&a.problem)?;
    let mut manifest = problem_manifest("moments", &a.problem, &p);
    let actual = load_actual(&a.actual, &mut manifest)?;
    let report = report_from_ranked(&p.ranked, &p.ts, &p.rd, actual.as_deref())?;

    let mut out = CsvOut::new(&["t", "expected_yield", "variance", "bias_sq", "expected_error"]);
    for mm in &report.months {
        out.row([
            (mm.t + 1).to_string(),
            fmt_float(mm.expected_yield),
            fmt_float(mm.variance),
            opt(mm.bias_sq),
            opt(mm.expected_error),
        ]);
    }
    let mut kv = KeyValue::new();
    kv.push("steps", report.months.len().to_string());
    match &report.annual {
        Some(an) => {
            kv.push("years", an.years.to_string())
                .float("expected_annual_yield", an.expected_annual_yield)
                .float("var_annual_yield", an.variance)
                .float("variance_constant", an.variance_constant)
                .float("c_over_m", an.variance_bound())
                .push("bound_ok", an.bound_ok.to_string())
                .float("var_total_yield", an.total_yield_variance);
        }
        None => {
            kv.push("years", "");
        }
    }
    if let Some(e) = report.total_expected_error {
        kv.float("total_expected_error", e);
    }
    let summary = a.summary.clone().unwrap_or_else(|| sibling(&a.out, "summary"));
    finish(&mut manifest, &[("moments", &a.out, out.into_bytes()), ("summary", &summary, kv.render().into_bytes())])
}

pub fn cmd_verify(a: &VerifyArgs) -> CliResult<()> {
    let p = prepare(&a.problem)?;
    let mut manifest = problem_manifest("verify", &a.problem, &p);
    manifest.param("seed", a.seed).param("runs", a.runs).param("threshold", fmt_float(a.threshold));
    let actual = load_actual(&a.actual, &mut manifest)?;
    let report = report_from_ranked(&p.ranked, &p.ts, &p.rd, actual.as_deref())?;
    let opts = EnsembleOptions {
        actual: actual.as_deref(),
        ..Default::default()
    };
    let ensemble = ensemble_from_ranked(&p.ranked, &p.ts, &p.rd, a.seed, a.runs, &opts)?;
    let cmp = compare_to_analytic(&ensemble, &report, a.threshold)?;

    let mut out = CsvOut::new(&["quantity", "t", "analytic", "empirical", "se", "z", "flagged"]);
    for r in &cmp.rows {
        out.row([
            r.quantity.name().to_string(),
            r.t.map(|t| (t + 1).to_string()).unwrap_or_default(),
            fmt_float(r.analytic),
            fmt_float(r.empirical),
            fmt_float(r.se),
            fmt_float(r.z),
            r.flagged.to_string(),
        ]);
    }
    finish(&mut manifest, &[("comparison", &a.out, out.into_bytes())])?;
    let flagged = cmp.flagged().count();
    if flagged > 0 {
        return Err(CliError::Verification(format!(
            "{flagged} of {} quantities exceed |z| > {}",
            cmp.rows.len(),
            a.threshold
        )));
    }
    Ok(())
}

pub fn cmd_kernel_exp(a: &KernelExpArgs) -> CliResult<()> {
    let n_values: Vec<usize> = parse_list(&a.n_values, "--n-values")?;
    let seeds: Vec<u64> = parse_list(&a.seeds, "--seeds")?;
    let rows = convergence_experiment(&SyntheticProcess, &n_values, &seeds, &EvalGrid::default())?;
    let mut out = CsvOut::new(&["N", "k_N", "seed", "sup_error", "mean_error"]);
    for r in &rows {
        out.row([r.n.to_string(), r.k_n.to_string(), r.seed.to_string(), fmt_float(r.sup_error), fmt_float(r.mean_error)]);
    }
    let mut manifest = Manifest::new("kernel-exp");
    manifest.param("n_values", &a.n_values).param("seeds", &a.seeds);
    finish(&mut manifest, &[("table", &a.out, out.into_bytes())])
}

pub fn cmd_nu(a: &NuArgs) -> CliResult<()> {
    let p = prepare(&a.problem)?;
    let mut manifest = problem_manifest("nu", &a.problem, &p);
    let nu = EmpiricalDistribution::from_ranked(&p.ranked, p.ts.len());
    let mut out = CsvOut::new(&["class_key", "count", "frequency"]);
    for c in &nu.classes {
        let key: Vec<String> = c.key.iter().map(|i| (i + 1).to_string()).collect();
        out.row([key.join(";"), c.count.to_string(), fmt_float(c.frequency)]);
    }
    let mut kv = KeyValue::new();
    kv.push("classes", nu.classes.len().to_string())
        .push("steps", nu.series_len.to_string())
        .float("limit_annual_yield", limit_annual_yield(&nu, &p.ts, &p.rd)?)
        .float("limit_m_var", limit_m_var(&nu, &p.ts, &p.rd)?);
    let summary = a.summary.clone().unwrap_or_else(|| sibling(&a.out, "summary"));
    finish(&mut manifest, &[("classes", &a.out, out.into_bytes()), ("summary", &summary, kv.render().into_bytes())])
}

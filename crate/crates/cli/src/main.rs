//! `genoshare`: generate, sanitize, verify and audit SNP datasets.
//!
//! Reports go to stdout as JSON; failures go to stderr as a JSON error object.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use genoshare::calibration::{KappaVariant, DEFAULT_SMOOTHING};
use genoshare::data::{generate_synthetic, read_dataset, write_dataset, SnpMatrix, SyntheticParams};
use genoshare::gwas::{rank_snps, shift_findings, validate, TestKind};
use genoshare::pipeline::{sanitize, sweep, PrivacyBudget, SanitizeOptions, SweepConfig, DEFAULT_SPLIT};
use genoshare::privacy_eval::{attack_power, hdt_calibrate, utility_metrics, Calibration, Distance, HdtOptions};
use genoshare::Error;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "genoshare", version, about = "Differentially private SNP dataset sharing")]
struct Cli {
    /// Cap on worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate synthetic case and control datasets.
    Gen(GenArgs),
    /// Share a case dataset under differential privacy.
    Sanitize(SanitizeArgs),
    /// Write the reported findings window of a study, optionally shifted.
    Findings(FindingsArgs),
    /// Check reported findings against a shared dataset.
    Verify(VerifyArgs),
    /// Run the Hamming-distance membership attack against a shared dataset.
    Attack(AttackArgs),
    /// Utility loss of a shared dataset against the original.
    Metrics(MetricsArgs),
    /// Run an experiment grid over budgets and finding shifts.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Serialize)]
struct GenArgs {
    #[arg(long, default_value_t = 200)]
    n_case: usize,
    #[arg(long, default_value_t = 200)]
    n_control: usize,
    #[arg(long, default_value_t = 1000)]
    snps: usize,
    #[arg(long, default_value_t = 50)]
    n_assoc: usize,
    #[arg(long, default_value_t = 0.25)]
    maf_shift: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    case_out: PathBuf,
    #[arg(long)]
    control_out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum KappaArg {
    ProofPositivePart,
    TheoremLiteral,
}

impl From<KappaArg> for KappaVariant {
    fn from(k: KappaArg) -> Self {
        match k {
            KappaArg::ProofPositivePart => KappaVariant::ProofPositivePart,
            KappaArg::TheoremLiteral => KappaVariant::TheoremLiteral,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum TestArg {
    Chi2,
    Or,
}

impl From<TestArg> for TestKind {
    fn from(t: TestArg) -> Self {
        match t {
            TestArg::Chi2 => TestKind::Chi2,
            TestArg::Or => TestKind::OddsRatio,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct SanitizeArgs {
    /// Case dataset to share.
    #[arg(long)]
    input: PathBuf,
    /// Public reference dataset used to calibrate the noise.
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Total privacy budget.
    #[arg(long)]
    epsilon: f64,
    /// Fraction of the budget spent on the XOR stage.
    #[arg(long, default_value_t = DEFAULT_SPLIT)]
    split: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value_t = KappaArg::ProofPositivePart)]
    kappa: KappaArg,
    #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
    smoothing: f64,
    /// Also write the JSON report to this file.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the XOR-only dataset, before restoration, to this CSV.
    #[arg(long)]
    dump_perturbed: Option<PathBuf>,
    /// Write one JSON diagnostic record per SNP to this file.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct FindingsArgs {
    #[arg(long)]
    case: PathBuf,
    #[arg(long)]
    control: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    omega: f64,
    /// Shift of the window, in units of its width.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, value_enum, default_value_t = TestArg::Chi2)]
    test: TestArg,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    /// Shared case dataset.
    #[arg(long)]
    shared: PathBuf,
    #[arg(long)]
    control: PathBuf,
    /// Reported SNP ids, one per line.
    #[arg(long)]
    reported: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    omega: f64,
    #[arg(long, default_value_t = 0.7)]
    zeta: f64,
    /// Minimum retention ratio for a reproducible verdict.
    #[arg(long)]
    threshold: f64,
    #[arg(long, value_enum, default_value_t = TestArg::Chi2)]
    test: TestArg,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum CalibrationArg {
    LeaveOneOutControl,
    CaseMhd,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum DistanceArg {
    Genotype,
    Bit,
}

#[derive(Args, Debug, Serialize)]
struct AttackArgs {
    #[arg(long)]
    shared: PathBuf,
    #[arg(long)]
    control: PathBuf,
    /// True members whose recall is measured; defaults to the shared rows.
    #[arg(long)]
    members: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    fpr: f64,
    #[arg(long, value_enum, default_value_t = CalibrationArg::LeaveOneOutControl)]
    calibration: CalibrationArg,
    #[arg(long, value_enum, default_value_t = DistanceArg::Genotype)]
    distance: DistanceArg,
}

#[derive(Args, Debug, Serialize)]
struct MetricsArgs {
    #[arg(long)]
    original: PathBuf,
    #[arg(long)]
    shared: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct SweepArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    epsilons: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    deltas: Option<Vec<f64>>,
    #[arg(long)]
    split: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_enum)]
    test: Option<TestArg>,
    #[arg(long, value_enum)]
    kappa: Option<KappaArg>,
    #[arg(long = "case")]
    case: Option<PathBuf>,
    #[arg(long)]
    control: Option<PathBuf>,
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

type CliResult<T> = std::result::Result<T, Error>;

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source }
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| io_error(path, e))
}

/// Refuses to write any output over one of the inputs.
fn guard_outputs(inputs: &[&Path], outputs: &[Option<&Path>]) -> CliResult<()> {
    let canonical: Vec<PathBuf> = inputs.iter().filter_map(|p| fs::canonicalize(p).ok()).collect();
    for out in outputs.iter().flatten() {
        if let Ok(c) = fs::canonicalize(out) {
            if canonical.contains(&c) {
                return Err(Error::Parameter(format!("output {} would overwrite an input", out.display())));
            }
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("reports serialize to JSON")
}

fn report(command: &str, args: &impl Serialize, body: Value) -> Value {
    json!({ "command": command, "args": to_json(args), "result": body })
}

fn gen(args: &GenArgs) -> CliResult<Value> {
    let params = SyntheticParams {
        n_case: args.n_case,
        n_control: args.n_control,
        snps: args.snps,
        n_assoc: args.n_assoc,
        maf_shift: args.maf_shift,
    };
    let (case, control) = generate_synthetic(&params, args.seed)?;
    write_dataset(&case, &args.case_out)?;
    write_dataset(&control, &args.control_out)?;
    let planted = &case.snp_ids()[..args.n_assoc];
    Ok(report("gen", args, json!({ "planted": planted })))
}

fn run_sanitize(args: &SanitizeArgs) -> CliResult<Value> {
    guard_outputs(
        &[&args.input, &args.reference],
        &[
            Some(&args.output),
            args.report.as_deref(),
            args.dump_perturbed.as_deref(),
            args.diagnostics.as_deref(),
        ],
    )?;
    let d = read_dataset(&args.input)?;
    let reference = read_dataset(&args.reference)?;
    let options = SanitizeOptions {
        budget: PrivacyBudget::new(args.epsilon, args.split)?,
        kappa_variant: args.kappa.into(),
        smoothing: args.smoothing,
    };
    let out = sanitize(&d, &reference, &options, args.seed)?;
    write_dataset(&out.shared, &args.output)?;
    if let Some(path) = &args.dump_perturbed {
        write_dataset(&out.perturbed, path)?;
    }
    if let Some(path) = &args.diagnostics {
        let mut lines = String::new();
        for record in &out.diagnostics {
            lines.push_str(&serde_json::to_string(record).expect("diagnostics serialize"));
            lines.push('\n');
        }
        write_text(path, &lines)?;
    }
    let value = report(
        "sanitize",
        args,
        json!({
            "rows": out.shared.rows(),
            "snps": out.shared.cols(),
            "budget": to_json(&out.budget),
            "noise_profile": to_json(&out.profile),
        }),
    );
    if let Some(path) = &args.report {
        write_text(path, &format!("{}\n", serde_json::to_string_pretty(&value).expect("report serializes")))?;
    }
    Ok(value)
}

fn check_columns(a: &SnpMatrix, b: &SnpMatrix) -> CliResult<()> {
    a.check_same_snps(b)
}

fn run_findings(args: &FindingsArgs) -> CliResult<Value> {
    guard_outputs(&[&args.case, &args.control], &[Some(&args.output)])?;
    let case = read_dataset(&args.case)?;
    let control = read_dataset(&args.control)?;
    check_columns(&case, &control)?;
    let ranking = rank_snps(&case, &control, args.test.into())?;
    let picked: Vec<&str> = shift_findings(&ranking, args.omega, args.delta)?
        .into_iter()
        .map(|j| case.snp_ids()[j].as_str())
        .collect();
    let mut text = picked.join("\n");
    text.push('\n');
    write_text(&args.output, &text)?;
    Ok(report("findings", args, json!({ "findings": picked })))
}

fn read_reported(path: &Path, d: &SnpMatrix) -> CliResult<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|id| {
            d.snp_ids().iter().position(|s| s == id).ok_or_else(|| Error::Format {
                path: path.to_path_buf(),
                reason: format!("unknown SNP id {id:?}"),
            })
        })
        .collect()
}

fn run_verify(args: &VerifyArgs) -> CliResult<Value> {
    let shared = read_dataset(&args.shared)?;
    let control = read_dataset(&args.control)?;
    check_columns(&shared, &control)?;
    let reported = read_reported(&args.reported, &shared)?;
    let ranking = rank_snps(&shared, &control, args.test.into())?;
    let result = validate(&reported, &ranking, args.omega, args.zeta, args.threshold)?;
    Ok(report("verify", args, to_json(&result)))
}

fn run_attack(args: &AttackArgs) -> CliResult<Value> {
    let shared = read_dataset(&args.shared)?;
    let control = read_dataset(&args.control)?;
    let members = match &args.members {
        Some(path) => read_dataset(path)?,
        None => shared.clone(),
    };
    check_columns(&shared, &control)?;
    check_columns(&shared, &members)?;
    let options = HdtOptions {
        false_positive_rate: args.fpr,
        calibration: match args.calibration {
            CalibrationArg::LeaveOneOutControl => Calibration::LeaveOneOutControl,
            CalibrationArg::CaseMhd => Calibration::CaseMhd,
        },
        distance: match args.distance {
            DistanceArg::Genotype => Distance::Genotype,
            DistanceArg::Bit => Distance::Bit,
        },
    };
    let model = hdt_calibrate(&shared, &control, options)?;
    let power = attack_power(&model, &members)?;
    Ok(report(
        "attack",
        args,
        json!({ "threshold": model.threshold, "members": members.rows(), "attack_power": power }),
    ))
}

fn run_metrics(args: &MetricsArgs) -> CliResult<Value> {
    let original = read_dataset(&args.original)?;
    let shared = read_dataset(&args.shared)?;
    Ok(report("metrics", args, to_json(&utility_metrics(&original, &shared)?)))
}

fn run_sweep(args: &SweepArgs) -> CliResult<Value> {
    let text = fs::read_to_string(&args.config).map_err(|e| io_error(&args.config, e))?;
    let mut config = SweepConfig::from_toml(&text)?;
    // Relative dataset paths in the file resolve against the file's directory.
    let base = args.config.parent().unwrap_or(Path::new("."));
    for path in [&mut config.case, &mut config.control, &mut config.reference].into_iter().flatten() {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
    macro_rules! apply {
        ($($field:ident),*) => {$(
            if let Some(v) = &args.$field {
                config.$field = v.clone().into();
            }
        )*};
    }
    apply!(seed, trials, epsilons, deltas, split, omega, zeta, threshold, test, kappa);
    if args.case.is_some() {
        config.case = args.case.clone();
    }
    if args.control.is_some() {
        config.control = args.control.clone();
    }
    if args.reference.is_some() {
        config.reference = args.reference.clone();
    }
    let inputs: Vec<&Path> =
        [&args.config].into_iter().chain([&config.case, &config.control, &config.reference].into_iter().flatten()).map(PathBuf::as_path).collect();
    guard_outputs(&inputs, &[args.output.as_deref()])?;
    let result = sweep(&config)?;
    let value = report("sweep", args, to_json(&result));
    if let Some(path) = &args.output {
        write_text(path, &format!("{}\n", serde_json::to_string_pretty(&value).expect("report serializes")))?;
    }
    Ok(value)
}

fn error_object(kind: &str, message: String) -> Value {
    json!({ "error": { "kind": kind, "message": message } })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", error_object("usage", e.to_string().trim_end().to_owned()));
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("{}", error_object("threads", e.to_string()));
            return ExitCode::from(2);
        }
    }
    let outcome = match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Sanitize(a) => run_sanitize(a),
        Command::Findings(a) => run_findings(a),
        Command::Verify(a) => run_verify(a),
        Command::Attack(a) => run_attack(a),
        Command::Metrics(a) => run_metrics(a),
        Command::Sweep(a) => run_sweep(a),
    };
    match outcome {
        Ok(value) => {
            println!("{}", serde_json::to_string_pretty(&value).expect("report serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_object(e.kind(), e.to_string()));
            ExitCode::FAILURE
        }
    }
}

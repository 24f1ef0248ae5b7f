//! `tinyclf`: validate interchange models, emit C++ classifiers, and measure
//! their accuracy and memory on a test set.
//!
//! Exit status is 0 on success, 1 on domain errors (invalid model, bad data,
//! unsupported configuration) and 2 on usage errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tinyclf_core::codegen::{CodegenError, DEFAULT_PREFIX};
use tinyclf_core::eval::{compare_batch, compare_reports, CsvOptions, LabelColumn};
use tinyclf_core::ir::ModelError;
use tinyclf_core::{
    evaluate, generate, holdout_split, parse_model, EvalConfig, EvalReport, Family, GenOptions, ModelIR, NumericMode,
    QFormat, SigmoidVariant, TreeStyle,
};

const OUT_DIR_ENV: &str = "TINYCLF_OUT_DIR";

#[derive(Parser)]
#[command(name = "tinyclf", version, about = "Embedded classifier code generator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an interchange model and print its summary or its violations.
    Validate {
        #[arg(long, short)]
        model: PathBuf,
    },
    /// Emit a C++ classifier and a JSON metadata sidecar.
    Generate(GenerateArgs),
    /// Measure accuracy, range events and memory on a labelled CSV file.
    Eval(EvalArgs),
    /// Compare evaluation reports. Two reports give a metric table; more
    /// give one row per report against the first.
    Compare(CompareArgs),
}

#[derive(Args)]
struct NumericArgs {
    /// flt, fxp32, fxp16 or fxp8 [default: flt, or fixed point when
    /// --qformat is given].
    #[arg(long)]
    mode: Option<String>,
    /// Fixed-point format as n.m, overriding the mode's default.
    #[arg(long, value_name = "N.M")]
    qformat: Option<String>,
    /// Sigmoid variant for MLP models.
    #[arg(long, value_enum)]
    sigmoid: Option<SigmoidArg>,
    /// Traversal style for tree models.
    #[arg(long, value_enum)]
    tree: Option<TreeArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SigmoidArg {
    Exact,
    Rational,
    Pwl2,
    Pwl4,
}

#[derive(Clone, Copy, ValueEnum)]
enum TreeArg {
    Iterative,
    IfElse,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, short)]
    model: PathBuf,
    #[command(flatten)]
    numeric: NumericArgs,
    /// Prefix for every emitted symbol.
    #[arg(long, default_value = DEFAULT_PREFIX)]
    prefix: String,
    /// Also emit `<prefix>_scores`.
    #[arg(long)]
    test_hook: bool,
    /// Output file; defaults to `<model stem>.cpp` in $TINYCLF_OUT_DIR or the
    /// current directory.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Table,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, short)]
    model: PathBuf,
    /// Labelled CSV file.
    #[arg(long, short)]
    data: PathBuf,
    /// `last`, a zero-based index or a header name.
    #[arg(long, default_value = "last")]
    label_column: String,
    /// The CSV file has no header row.
    #[arg(long)]
    no_header: bool,
    /// Evaluate only the test part of a stratified holdout with this
    /// training fraction.
    #[arg(long, value_name = "FRACTION")]
    split: Option<f64>,
    /// Seed for --split.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    numeric: NumericArgs,
    /// Timed passes over the test set.
    #[arg(long, default_value_t = tinyclf_core::eval::DEFAULT_REPETITIONS)]
    repetitions: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: ReportFormat,
    /// Also write the JSON report here.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Report files; the first is the baseline.
    #[arg(required = true, num_args = 2..)]
    reports: Vec<PathBuf>,
    /// Accuracy drop (fraction) that counts as a regression.
    #[arg(long, default_value_t = 0.01)]
    threshold: f64,
    #[arg(long, value_enum, default_value = "table")]
    format: ReportFormat,
    /// Exit with status 1 when any report regresses.
    #[arg(long)]
    fail_on_regression: bool,
}

enum Failure {
    Usage(String),
    Domain(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Domain(e)
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn read_model(path: &Path) -> Result<ModelIR, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_model(&text)
        .with_context(|| format!("loading {}", path.display()))
        .map_err(Failure::Domain)
}

fn numeric_mode(args: &NumericArgs) -> Result<NumericMode, Failure> {
    let mode = match &args.mode {
        Some(m) => Some(m.parse::<NumericMode>().map_err(|e| usage(format!("--mode: {e}")))?),
        None => None,
    };
    let Some(q) = &args.qformat else {
        return Ok(mode.unwrap_or(NumericMode::Flt));
    };
    let q: QFormat = q.parse().map_err(|e| usage(format!("--qformat: {e}")))?;
    match mode {
        None => Ok(NumericMode::Fxp(q)),
        Some(NumericMode::Flt) => Err(usage("--qformat needs a fixed-point --mode")),
        Some(NumericMode::Fxp(d)) if d.total_bits() != q.total_bits() => Err(usage(format!(
            "--qformat: {q} has {} bits but the chosen --mode has {}",
            q.total_bits(),
            d.total_bits()
        ))),
        Some(_) => Ok(NumericMode::Fxp(q)),
    }
}

/// Options for `model`, rejecting flags that do not apply to its family.
fn gen_options(args: &NumericArgs, model: &ModelIR) -> Result<GenOptions, Failure> {
    let family = model.family();
    let mut opts = GenOptions::new(numeric_mode(args)?);
    if let Some(t) = args.tree {
        if family != Family::Tree {
            return Err(usage(format!(
                "--tree applies to tree models, but this model is {family}"
            )));
        }
        opts = opts.with_tree_style(match t {
            TreeArg::Iterative => TreeStyle::Iterative,
            TreeArg::IfElse => TreeStyle::IfElse,
        });
    }
    if let Some(s) = args.sigmoid {
        if family != Family::Mlp {
            return Err(usage(format!(
                "--sigmoid applies to MLP models, but this model is {family}"
            )));
        }
        opts = opts.with_sigmoid(match s {
            SigmoidArg::Exact => SigmoidVariant::Exact,
            SigmoidArg::Rational => SigmoidVariant::Rational,
            SigmoidArg::Pwl2 => SigmoidVariant::Pwl2,
            SigmoidArg::Pwl4 => SigmoidVariant::Pwl4,
        });
    }
    Ok(opts)
}

fn validate_cmd(model: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(model).with_context(|| format!("reading {}", model.display()))?;
    match parse_model(&text) {
        Ok(m) => {
            let s = m.stats();
            println!(
                "ok: {} model, {} features, {} classes, {} parameters",
                m.family(),
                m.n_features,
                m.n_classes(),
                s.param_count
            );
            println!("fingerprint {}", m.fingerprint());
            Ok(())
        }
        Err(ModelError::Structure(violations)) => {
            for v in &violations {
                println!("{v}");
            }
            Err(Failure::Domain(anyhow!(
                "{} violation(s) in {}",
                violations.len(),
                model.display()
            )))
        }
        Err(e) => Err(Failure::Domain(
            anyhow!(e).context(format!("loading {}", model.display())),
        )),
    }
}

fn default_output(model: &Path) -> PathBuf {
    let stem = model
        .file_stem()
        .map_or_else(|| "model".into(), |s| s.to_string_lossy().into_owned());
    let dir = std::env::var_os(OUT_DIR_ENV).map_or_else(PathBuf::new, PathBuf::from);
    dir.join(format!("{stem}.cpp"))
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn generate_cmd(args: &GenerateArgs) -> Result<(), Failure> {
    let model = read_model(&args.model)?;
    let opts = gen_options(&args.numeric, &model)?
        .with_prefix(args.prefix.clone())
        .with_test_hook(args.test_hook);
    let src = generate(&model, &opts).map_err(|e| match e {
        CodegenError::InvalidOptions(m) => usage(format!("--prefix: {m}")),
        e => Failure::Domain(e.into()),
    })?;
    let out = args.output.clone().unwrap_or_else(|| default_output(&args.model));
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(&out, &src.text).with_context(|| format!("writing {}", out.display()))?;
    let hash = src.text_hash();
    let sidecar = serde_json::json!({
        "source": out.display().to_string(),
        "sha256": hash,
        "model_fingerprint": src.model_fingerprint,
        "options": src.options_echo,
        "memory": src.memory,
        "warnings": src.warnings,
    });
    let side = sidecar_path(&out);
    let text = serde_json::to_string_pretty(&sidecar).context("encoding sidecar")? + "\n";
    fs::write(&side, text).with_context(|| format!("writing {}", side.display()))?;
    for w in &src.warnings {
        eprintln!("warning: {w}");
    }
    println!("{hash}  {}", out.display());
    Ok(())
}

fn eval_cmd(args: &EvalArgs) -> Result<(), Failure> {
    let model = read_model(&args.model)?;
    let opts = gen_options(&args.numeric, &model)?;
    if args.repetitions == 0 {
        return Err(usage("--repetitions must be at least 1"));
    }
    let label_column: LabelColumn = args.label_column.parse().expect("label columns always parse");
    let csv = CsvOptions {
        label_column,
        header: !args.no_header,
        class_labels: None,
    };
    let data = tinyclf_core::eval::load_csv_with(&args.data, &csv).context("loading data")?;
    let test = match args.split {
        Some(f) => holdout_split(&data, f, args.seed).context("splitting data")?.1,
        None => data,
    };
    let mut config = EvalConfig::new(opts.mode).with_repetitions(args.repetitions);
    if let Some(s) = opts.sigmoid {
        config = config.with_sigmoid(s);
    }
    if let Some(t) = opts.tree_style {
        config = config.with_tree_style(t);
    }
    let report = evaluate(&model, &test, &config).context("evaluating")?;
    let json = report.to_json_pretty();
    if let Some(out) = &args.output {
        fs::write(out, format!("{json}\n")).with_context(|| format!("writing {}", out.display()))?;
    }
    match args.format {
        ReportFormat::Json => println!("{json}"),
        ReportFormat::Table => println!("{report}"),
    }
    Ok(())
}

fn read_report(path: &Path) -> Result<EvalReport, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing report {}", path.display()))
        .map_err(Failure::Domain)
}

fn compare_cmd(args: &CompareArgs) -> Result<(), Failure> {
    if args.threshold.is_nan() || args.threshold < 0.0 {
        return Err(usage("--threshold must be a non-negative fraction"));
    }
    let reports = args
        .reports
        .iter()
        .map(|p| read_report(p))
        .collect::<Result<Vec<_>, _>>()?;
    let regression = if reports.len() == 2 {
        let c = compare_reports(&reports[0], &reports[1], args.threshold).context("comparing")?;
        match args.format {
            ReportFormat::Json => println!("{}", serde_json::to_string_pretty(&c).context("encoding")?),
            ReportFormat::Table => println!("{c}"),
        }
        c.regression
    } else {
        let b = compare_batch(&reports[0], &reports[1..], args.threshold).context("comparing")?;
        match args.format {
            ReportFormat::Json => println!("{}", serde_json::to_string_pretty(&b).context("encoding")?),
            ReportFormat::Table => print!("{b}"),
        }
        b.rows.iter().any(|r| r.regression)
    };
    if regression && args.fail_on_regression {
        return Err(Failure::Domain(anyhow!(
            "accuracy regression beyond {}",
            args.threshold
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { model } => validate_cmd(model),
        Command::Generate(a) => generate_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Compare(a) => compare_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rbexplain::data::{load_csv, DatasetSchema, LabeledDataset};
use rbexplain::models::{fit_model, load_model, save_model, AnyModel, FitFamily};
use rbexplain::registry::{self, parse_behavior, parse_removal, parse_summary, MethodSpec};
use rbexplain::{Error, ExplainContext, SharedModel};

const EXIT_VERIFY: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "rbexplain", version, about = "Removal-based model explanations")]
struct Cli {
    /// Worker threads for set-function evaluation (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write it as JSON.
    Fit(FitArgs),
    /// Explain a model with a preset or an explicit removal/behavior/summary triple.
    Explain(ExplainArgs),
    /// Write the grid of methods with occupancy and neighbors.
    Grid(GridArgs),
    /// Run invariance, extension, behavior-identity and Shapley-axiom checks.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    /// JSON column schema; defaults to `<data>.schema.json`.
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// linear | logistic | tree | tree-classifier
    #[arg(long)]
    model: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Model family to fit on the data, or a saved model file.
    #[arg(long)]
    model: String,
    #[arg(long, conflicts_with_all = ["removal", "behavior", "summary"])]
    preset: Option<String>,
    /// Removal id with optional parameters, e.g. `marginal:samples=64`.
    #[arg(long, requires_all = ["behavior", "summary"])]
    removal: Option<String>,
    #[arg(long, requires_all = ["removal", "summary"])]
    behavior: Option<String>,
    #[arg(long, requires_all = ["removal", "behavior"])]
    summary: Option<String>,
    /// Row explained by local behaviors.
    #[arg(long)]
    instance: Option<usize>,
    #[arg(long)]
    output_index: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Budget for every sampled estimator the method uses.
    #[arg(long)]
    samples: Option<usize>,
    /// Report path; stdout when unset.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Model family fitted for the checks.
    #[arg(long, default_value = "linear")]
    model: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, hide = true)]
    inject_fault: Option<String>,
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_)
            | Error::InvalidParameter(_)
            | Error::UnknownPreset(_)
            | Error::SchemaMismatch(_)
            | Error::Parse { .. }
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        };
        Self { code, message: e.to_string() }
    }
}

type CliResult<T> = Result<T, Failure>;

fn load_data(args: &DataArgs) -> CliResult<LabeledDataset> {
    let schema_path = args.schema.clone().unwrap_or_else(|| {
        let mut p = args.data.clone().into_os_string();
        p.push(".schema.json");
        PathBuf::from(p)
    });
    let schema = DatasetSchema::from_json_file(&schema_path)
        .map_err(|e| Failure::config(format!("--schema {}: {e}", schema_path.display())))?;
    load_csv(&args.data, &schema).map_err(|e| Failure::config(format!("--data {}: {e}", args.data.display())))
}

fn obtain_model(source: &str, data: &LabeledDataset) -> CliResult<AnyModel> {
    if Path::new(source).is_file() {
        return load_model(source).map_err(|e| Failure::config(format!("--model {source}: {e}")));
    }
    let family = FitFamily::parse(source)
        .ok_or_else(|| Failure::config(format!("--model: '{source}' is neither a file nor a model family")))?;
    Ok(fit_model(data, family)?)
}

/// Splits `id:k=v,k=v` (or `id k=v k=v`) into the id and its parameters.
fn parse_component(flag: &str, text: &str) -> CliResult<(String, Vec<(String, String)>)> {
    let (id, rest) = match text.find([':', ' ']) {
        Some(i) => (&text[..i], &text[i + 1..]),
        None => (text, ""),
    };
    let mut params = Vec::new();
    for kv in rest.split([',', ' ']).filter(|t| !t.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::config(format!("--{flag}: expected key=value, got '{kv}'")))?;
        params.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok((id.trim().to_string(), params))
}

fn method_from_args(args: &ExplainArgs) -> CliResult<MethodSpec> {
    let tag = |flag: &'static str| move |e: Error| Failure::config(format!("--{flag}: {e}"));
    let mut spec = match (&args.preset, &args.removal, &args.behavior, &args.summary) {
        (Some(name), ..) => registry::preset(name).map_err(tag("preset"))?,
        (None, Some(r), Some(b), Some(s)) => {
            let (rid, rp) = parse_component("removal", r)?;
            let (bid, bp) = parse_component("behavior", b)?;
            let (sid, sp) = parse_component("summary", s)?;
            MethodSpec::custom(
                parse_removal(&rid, &rp).map_err(tag("removal"))?,
                parse_behavior(&bid, &bp).map_err(tag("behavior"))?,
                parse_summary(&sid, &sp).map_err(tag("summary"))?,
            )
        }
        _ => return Err(Failure::config("either --preset or all of --removal, --behavior, --summary is required")),
    };
    if let Some(k) = args.output_index {
        spec.behavior.output_index = Some(k);
    }
    Ok(spec)
}

fn write_output(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::config(format!("--out {}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn cmd_fit(args: FitArgs) -> CliResult<()> {
    let data = load_data(&args.data)?;
    let model = obtain_model(&args.model, &data)?;
    save_model(&args.out, &model).map_err(|e| Failure::config(format!("--out {}: {e}", args.out.display())))
}

fn cmd_explain(args: ExplainArgs) -> CliResult<()> {
    let start = Instant::now();
    let spec = method_from_args(&args)?;
    let data = load_data(&args.data)?;
    let model = obtain_model(&args.model, &data)?;
    let shared: SharedModel = Arc::new(model.clone());
    let ctx = ExplainContext {
        data: &data,
        model: shared,
        is_classifier: model.is_classifier(),
        tree: model.as_tree(),
        instance: args.instance,
        seed: args.seed,
        samples: args.samples,
    };
    let outcome = registry::run_method(&spec, &ctx).map_err(|e| match e {
        Error::Config(msg) if msg.contains("instance") => Failure::config(format!("--instance: {msg}")),
        Error::Config(msg) if msg.contains("tree") => Failure::config(format!("--model: {msg}")),
        Error::Config(msg) if msg.contains("output index") => Failure::config(format!("--output-index: {msg}")),
        other => other.into(),
    })?;
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let text = registry::explain_report(&outcome, &data, args.seed, args.instance, wall_time_ms)?;
    write_output(args.out.as_deref(), &text)
}

fn cmd_grid(args: GridArgs) -> CliResult<()> {
    write_output(args.out.as_deref(), &registry::grid_report()?)
}

fn run(cli: Cli) -> CliResult<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Failure::config(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Explain(a) => cmd_explain(a),
        Command::Grid(a) => cmd_grid(a),
        Command::Verify(a) => {
            let data = load_data(&a.data)?;
            let passed = verify::run(&data, &a.model, a.seed, a.inject_fault.as_deref())?;
            if passed {
                Ok(())
            } else {
                Err(Failure { code: EXIT_VERIFY, message: "verification failed".into() })
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

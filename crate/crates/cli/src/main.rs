use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use devfnn::checkpoint;
use devfnn::config::{RunConfig, Source};
use devfnn::eval::{self, prequential_run, Record, RunSummary};
use devfnn::stack::DeepStack;
use devfnn::stream::{generate, load_csv, write_csv, Batch, GeneratorKind};
use devfnn::Error;

/// Deep evolving fuzzy neural network for drifting data streams.
#[derive(Parser)]
#[command(name = "devfnn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic stream to CSV.
    Generate(Options),
    /// Run a prequential experiment and emit per-batch metric records.
    Run(Options),
    /// Recompute mean and standard deviation from metric record files.
    Report {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct Options {
    /// Manifest of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["sea", "hyperplane"], conflicts_with = "dataset")]
    generator: Option<String>,
    /// CSV file with a header row.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    label_column: Option<String>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output for `generate`, metric records for `run`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where `run` saves the final stack.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Switch off layer growth and merging.
    #[arg(long)]
    layers_frozen: bool,
    /// Override any manifest key, e.g. `--set total_samples=10000`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Print the fully resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
}

impl Options {
    fn resolve(&self) -> devfnn::Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
                let mut config = RunConfig::default();
                config.apply_manifest(&text)?;
                config
            }
            None => RunConfig::default(),
        };
        for item in &self.overrides {
            let (key, value) = item.split_once('=').ok_or_else(|| Error::Config {
                field: item.clone(),
                reason: "expected KEY=VALUE".into(),
            })?;
            config.set(key.trim(), value.trim())?;
        }
        if let Some(kind) = &self.generator {
            config.source = Source::Generator(kind.parse::<GeneratorKind>()?);
        }
        if let Some(path) = &self.dataset {
            config.source = Source::Dataset(path.clone());
        }
        if let Some(column) = &self.label_column {
            config.label_column = column.clone();
        }
        if let Some(size) = self.batch_size {
            config.batch_size = size;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(out) = &self.out {
            config.out = Some(out.clone());
        }
        if let Some(path) = &self.checkpoint {
            config.checkpoint = Some(path.clone());
        }
        if self.layers_frozen {
            config.stack.layers_frozen = true;
        }
        config.validate()?;
        Ok(config)
    }
}

fn exit_code(error: &Error) -> u8 {
    match error {
        Error::Config { .. } => 1,
        Error::NonFinite(_) | Error::EmptyModel => 3,
        _ => 2,
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn cmd_generate(options: &Options) -> devfnn::Result<()> {
    let config = options.resolve()?;
    if options.print_config {
        print!("{}", config.serialize());
        return Ok(());
    }
    let generator = config.generator_config().ok_or_else(|| Error::Config {
        field: "generator".into(),
        reason: "generate needs a synthetic source, not a dataset".into(),
    })?;
    let out = config.out.clone().ok_or_else(|| Error::Config {
        field: "out".into(),
        reason: "generate needs --out".into(),
    })?;
    let batches: Vec<Batch> = generate(generator)?.collect();
    let rows = write_csv(&out, &batches)?;
    eprintln!("wrote {rows} rows to {}", out.display());
    Ok(())
}

fn load_stream(config: &RunConfig) -> devfnn::Result<(Vec<Batch>, usize, usize)> {
    let batches: Vec<Batch> = match &config.source {
        Source::Generator(_) => {
            let generator = config.generator_config().expect("generator source");
            generate(generator)?.collect()
        }
        Source::Dataset(path) => load_csv(path, &config.csv_options())?,
    };
    let first = batches.first().ok_or_else(|| Error::Config {
        field: "total_samples".into(),
        reason: "the stream is empty".into(),
    })?;
    let (n, m) = (first.input_dim(), first.class_count());
    Ok((batches, n, m))
}

fn cmd_run(options: &Options) -> devfnn::Result<()> {
    let config = options.resolve()?;
    if options.print_config {
        print!("{}", config.serialize());
        return Ok(());
    }
    let (batches, n, m) = load_stream(&config)?;
    let mut stack = DeepStack::new(n, m, config.stack_config(batches.len()))?;

    let mut sink = match &config.out {
        Some(path) => Some(BufWriter::new(File::create(path).map_err(io_error(path))?)),
        None => None,
    };
    let out_path = config.out.clone().unwrap_or_default();
    let (_, mut summary) = prequential_run(&mut stack, batches, |metrics| {
        if let Some(w) = sink.as_mut() {
            eval::write_record(w, &Record::Batch(metrics.clone())).map_err(io_error(&out_path))?;
        }
        Ok(())
    })?;
    summary.seed = Some(config.seed);
    summary.config = config.to_map();
    if let Some(mut w) = sink {
        eval::write_record(&mut w, &Record::Summary(summary.clone())).map_err(io_error(&out_path))?;
        w.flush().map_err(io_error(&out_path))?;
    }
    if let Some(path) = &config.checkpoint {
        checkpoint::save(path, &stack)?;
    }
    print_summary(&summary);
    Ok(())
}

fn print_summary(summary: &RunSummary) {
    println!("batches              {}", summary.batches);
    let rows = [
        ("classification_rate", summary.classification_rate),
        ("precision_macro", summary.precision_macro),
        ("recall_macro", summary.recall_macro),
        ("fuzzy_rule_count", summary.fuzzy_rule_count),
        ("hidden_layer_count", summary.hidden_layer_count),
        ("wall_time", summary.wall_time),
    ];
    for (name, stat) in rows {
        println!("{name:<20} {} ± {}", stat.mean, stat.std);
    }
}

fn cmd_report(files: &[PathBuf]) -> devfnn::Result<()> {
    let mut batches = Vec::new();
    for path in files {
        let file = File::open(path).map_err(io_error(path))?;
        let records = eval::read_batch_records(BufReader::new(file), 1).map_err(|e| match e {
            Error::Record { line, reason } => Error::Record {
                line,
                reason: format!("{}: {reason}", path.display()),
            },
            other => other,
        })?;
        batches.extend(records);
    }
    if batches.is_empty() {
        return Err(Error::Record {
            line: 0,
            reason: "no batch records found".into(),
        });
    }
    print_summary(&RunSummary::from_batches(&batches));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(options) => cmd_generate(options),
        Command::Run(options) => cmd_run(options),
        Command::Report { files } => cmd_report(files),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(exit_code(&error))
        }
    }
}

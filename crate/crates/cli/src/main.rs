use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use cia::experiment::{read_csv, regression_data, write_csv, write_corpus, Predictor, Response};
use cia::generate::GenParams;
use cia::{
    classify, compose, compose_pairwise_reduce, default_io_sets, export_dot, fit_logistic, metrics_record,
    parse_automaton, parse_document, partition_refine_traced, quotient_with, reduction_report, run_experiment,
    to_document, to_text, Action, Automaton, ExperimentConfig, InternalSemantics, IoSets, MetricsRecord,
    RefineOptions, RegressionReport,
};

#[derive(Parser)]
#[command(name = "cia", version, about = "Component Interaction Automata toolkit")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for corpus generation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Refinement time limit, e.g. `90s`, `2h`; a bare number means seconds.
    #[arg(long, global = true, value_parser = parse_duration)]
    timeout: Option<Duration>,
    /// Worker threads for the experiment.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file or directory (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone, Default)]
struct IoArgs {
    /// Provided actions, comma-separated. Giving either set replaces the
    /// defaults; the other set is then empty.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    provided: Option<Vec<String>>,
    /// Required actions, comma-separated.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    required: Option<Vec<String>>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a specification and print it in canonical form.
    Parse { file: PathBuf },
    /// Compose the automata of one or more files.
    Compose {
        files: Vec<PathBuf>,
        #[command(flatten)]
        io: IoArgs,
        /// Keep states unreachable from the initial states.
        #[arg(long)]
        keep_unreachable: bool,
        /// Compose two at a time, reducing after every step.
        #[arg(long)]
        pairwise: bool,
        /// With --pairwise, distinguish internal synchronizations by label.
        #[arg(long)]
        strict_internal: bool,
    },
    /// Reduce an automaton up to weak bisimulation.
    Refine {
        file: PathBuf,
        /// Distinguish internal synchronizations by label.
        #[arg(long)]
        strict_internal: bool,
        /// Print the blocks as comments before the quotient.
        #[arg(long)]
        show_partition: bool,
    },
    /// Structural metrics of every automaton in the given files.
    Metrics { files: Vec<PathBuf> },
    /// Generate a corpus of automaton pairs.
    Generate {
        #[arg(long, default_value_t = 1)]
        pairs: usize,
        #[arg(long, default_value_t = 1.36)]
        beta: f64,
        #[arg(long, default_value_t = 0.19)]
        beta_spread: f64,
        /// State count range `MIN..MAX` (inclusive).
        #[arg(long, default_value = "3..10", value_parser = parse_range)]
        states: (usize, usize),
        #[arg(long, default_value_t = 0.2)]
        clique_bias: f64,
        #[arg(long, default_value_t = 0.5)]
        pa: f64,
        #[arg(long, default_value_t = 6)]
        alphabet: usize,
        /// Give the two automata of a pair disjoint alphabets.
        #[arg(long)]
        disjoint_alphabets: bool,
    },
    /// Run the compose/refine pipeline over a corpus directory.
    Experiment {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        io: IoArgs,
        /// Distinguish internal synchronizations by label.
        #[arg(long)]
        strict_internal: bool,
        /// Record elapsed_ms as 0, making the output reproducible byte for byte.
        #[arg(long)]
        no_timing: bool,
        /// Write one DOT file per quotient into this directory.
        #[arg(long)]
        dot_dir: Option<PathBuf>,
    },
    /// Logistic regression over an experiment CSV.
    Regress {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, value_enum)]
        x: XVar,
        #[arg(long, value_enum)]
        y: YVar,
        #[arg(long, default_value_t = 0.5)]
        cutoff: f64,
        /// For `--y over-ms`: the time threshold in milliseconds.
        #[arg(long, default_value_t = 300_000)]
        over_ms: u64,
    },
    /// Render an automaton as a Graphviz digraph.
    Dot { file: PathBuf },
    /// Distribution of internal-synchronization removal by reduction band.
    Report {
        #[arg(long)]
        csv: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum XVar {
    Beta,
    States,
    GiniIn,
    GiniOut,
}

#[derive(Clone, Copy, ValueEnum)]
enum YVar {
    Success,
    #[value(name = "over5min", alias = "over-5min")]
    Over5min,
    OverMs,
}

fn parse_duration(s: &str) -> Result<Duration, String> {
    if let Ok(secs) = s.parse::<f64>() {
        return Duration::try_from_secs_f64(secs).map_err(|e| e.to_string());
    }
    humantime::parse_duration(s).map_err(|e| e.to_string())
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected MIN..MAX, got `{s}`"))?;
    let lo = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi = hi.trim_start_matches('=').trim().parse().map_err(|e| format!("{e}"))?;
    Ok((lo, hi))
}

/// Failure of a subcommand, mapped to the process exit code.
enum Failure {
    Usage(String),
    Data(String),
}

impl From<cia::Error> for Failure {
    fn from(e: cia::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome = Result<ExitCode, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn read_one(path: &Path) -> Result<Automaton, Failure> {
    parse_automaton(&read(path)?).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn read_all(files: &[PathBuf]) -> Result<Vec<Automaton>, Failure> {
    let mut out = Vec::new();
    for f in files {
        out.extend(parse_document(&read(f)?).map_err(|e| Failure::Data(format!("{}: {e}", f.display())))?);
    }
    Ok(out)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn actions(names: &[String]) -> Result<Vec<Action>, Failure> {
    names
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| Action::new(s).map_err(|e| Failure::Usage(e.to_string())))
        .collect()
}

/// Explicit io sets, if either flag was given; an omitted set is then empty.
fn io_sets(args: &IoArgs) -> Result<Option<IoSets>, Failure> {
    if args.provided.is_none() && args.required.is_none() {
        return Ok(None);
    }
    Ok(Some(IoSets {
        provided: actions(args.provided.as_deref().unwrap_or_default())?.into_iter().collect(),
        required: actions(args.required.as_deref().unwrap_or_default())?.into_iter().collect(),
    }))
}

fn semantics(strict: bool) -> InternalSemantics {
    if strict {
        InternalSemantics::Strict
    } else {
        InternalSemantics::Silent
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

fn metrics(global: &Global, files: &[PathBuf]) -> Outcome {
    let all = read_all(files)?;
    let records: Vec<(String, MetricsRecord<f64>)> = all.iter().map(|a| (a.name().to_string(), metrics_record(a))).collect();
    let text = match global.format {
        Format::Json => {
            let rows: Vec<_> = records
                .iter()
                .map(|(name, r)| {
                    json!({
                        "name": name,
                        "states": r.states,
                        "transitions": r.transitions,
                        "internal": r.internal_transitions,
                        "beta": r.beta,
                        "gini_in": r.gini_in,
                        "gini_out": r.gini_out,
                    })
                })
                .collect();
            serde_json::to_string_pretty(&rows).expect("serializable") + "\n"
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| Failure::Data(e.to_string());
            w.write_record(["name", "states", "transitions", "internal", "beta", "gini_in", "gini_out"])
                .map_err(csv_err)?;
            for (name, r) in &records {
                w.write_record([
                    name.clone(),
                    r.states.to_string(),
                    r.transitions.to_string(),
                    r.internal_transitions.to_string(),
                    fmt_opt(r.beta),
                    fmt_opt(r.gini_in),
                    fmt_opt(r.gini_out),
                ])
                .map_err(csv_err)?;
            }
            String::from_utf8(w.into_inner().map_err(|e| Failure::Data(e.to_string()))?).expect("utf-8")
        }
    };
    emit(&global.out, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Outcome {
    let global = &cli.global;
    let refine_options = |strict: bool| RefineOptions {
        timeout: global.timeout,
        semantics: semantics(strict),
    };
    match cli.command {
        Command::Parse { file } => {
            let all = parse_document(&read(&file)?).map_err(|e| Failure::Data(format!("{}: {e}", file.display())))?;
            emit(&global.out, &to_document(&all))?;
        }
        Command::Compose {
            files,
            io,
            keep_unreachable,
            pairwise,
            strict_internal,
        } => {
            let components = read_all(&files)?;
            let io = io_sets(&io)?.unwrap_or_else(|| default_io_sets(&components));
            let result = if pairwise {
                compose_pairwise_reduce(&components, &io, &refine_options(strict_internal))?
            } else {
                let product = compose(&components, &io)?;
                if keep_unreachable {
                    product
                } else {
                    product.reachable()
                }
            };
            emit(&global.out, &to_text(&result))?;
        }
        Command::Refine {
            file,
            strict_internal,
            show_partition,
        } => {
            let a = read_one(&file)?;
            let options = refine_options(strict_internal);
            let (x, _) = partition_refine_traced(&a, &options)?;
            let q = quotient_with(&a, &x, options.semantics);
            let mut text = String::new();
            if show_partition {
                for (i, block) in x.named_blocks(&a).iter().enumerate() {
                    let ids: Vec<&str> = block.iter().map(|s| s.as_str()).collect();
                    text.push_str(&format!("# r{i} = {{{}}}\n", ids.join(" ")));
                }
            }
            text.push_str(&to_text(&q));
            emit(&global.out, &text)?;
        }
        Command::Metrics { files } => return metrics(global, &files),
        Command::Generate {
            pairs,
            beta,
            beta_spread,
            states,
            clique_bias,
            pa,
            alphabet,
            disjoint_alphabets,
        } => {
            let Some(dir) = &global.out else {
                return Err(Failure::Usage("generate needs --out DIR".into()));
            };
            let params = GenParams {
                states: states.0..=states.1,
                target_beta: beta,
                beta_spread,
                alphabet_size: alphabet,
                clique_bias,
                pa_strength: pa,
                shared_alphabet: !disjoint_alphabets,
                seed: global.seed,
                ..GenParams::default()
            };
            let corpus = cia::generate_corpus(&params, pairs)?;
            let written = write_corpus(dir, &corpus)?;
            eprintln!("wrote {} files to {}", written.len(), dir.display());
        }
        Command::Experiment {
            corpus,
            io,
            strict_internal,
            no_timing,
            dot_dir,
        } => {
            let io = io_sets(&io)?;
            let config = ExperimentConfig {
                io,
                timeout: global.timeout.or(ExperimentConfig::default().timeout),
                semantics: semantics(strict_internal),
                workers: global.workers,
                timing: !no_timing,
                dot_dir,
            };
            let rows = run_experiment(&corpus, &config)?;
            let text = match global.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_csv(&rows, &mut buf)?;
                    String::from_utf8(buf).expect("utf-8")
                }
                Format::Json => serde_json::to_string_pretty(&rows).expect("serializable") + "\n",
            };
            emit(&global.out, &text)?;
            for r in rows.iter().filter(|r| r.is_error()) {
                eprintln!("{}: {}", r.pair_id, r.error);
            }
            if rows.iter().any(|r| r.timed_out == 1) {
                return Ok(ExitCode::from(3));
            }
        }
        Command::Regress {
            csv,
            x,
            y,
            cutoff,
            over_ms,
        } => {
            let rows = read_csv(fs::File::open(&csv).map_err(|e| Failure::Data(format!("{}: {e}", csv.display())))?)?;
            let predictor = match x {
                XVar::Beta => Predictor::Beta,
                XVar::States => Predictor::States,
                XVar::GiniIn => Predictor::GiniIn,
                XVar::GiniOut => Predictor::GiniOut,
            };
            let response = match y {
                YVar::Success => Response::Success,
                YVar::Over5min => Response::Over5Min,
                YVar::OverMs => Response::OverMs(over_ms),
            };
            let (xs, ys) = regression_data(&rows, predictor, response);
            let fit = fit_logistic(&xs, &ys)?;
            let report = classify(&fit, &xs, &ys, cutoff);
            let summary = RegressionReport::new(&fit, &report);
            emit(&global.out, &(serde_json::to_string_pretty(&summary).expect("serializable") + "\n"))?;
        }
        Command::Dot { file } => emit(&global.out, &export_dot(&read_one(&file)?))?,
        Command::Report { csv } => {
            let rows = read_csv(fs::File::open(&csv).map_err(|e| Failure::Data(format!("{}: {e}", csv.display())))?)?;
            let report = reduction_report(&rows)?;
            emit(&global.out, &(serde_json::to_string_pretty(&report).expect("serializable") + "\n"))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

//! Batch pipeline over a corpus of automaton pairs: compose, prune, measure,
//! refine and record one CSV row per pair.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::automaton::Automaton;
use crate::compose::{compose, compose_pairwise_reduce, default_io_sets, IoSets};
use crate::dot::export_dot;
use crate::error::{Error, Result};
use crate::format::{parse_document, to_document};
use crate::metrics::{metrics_record, MetricsRecord};
use crate::refine::{partition_refine, quotient_with, InternalSemantics, RefineOptions};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(2 * 60 * 60);
pub const FIVE_MINUTES_MS: u64 = 300_000;
pub const CORPUS_EXTENSION: &str = "cia";

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    /// Overrides the default provided/required sets of every pair.
    pub io: Option<IoSets>,
    pub timeout: Option<Duration>,
    pub semantics: InternalSemantics,
    pub workers: usize,
    /// When off, `elapsed_ms` is recorded as 0 so output depends only on the input.
    pub timing: bool,
    /// Directory receiving one quotient `.dot` file per pair.
    pub dot_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            io: None,
            timeout: Some(DEFAULT_TIMEOUT),
            semantics: InternalSemantics::Silent,
            workers: 1,
            timing: true,
            dot_dir: None,
        }
    }
}

mod na {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_f64(*x),
            None => s.serialize_str("NA"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        let s = String::deserialize(d)?;
        if s == "NA" {
            return Ok(None);
        }
        s.parse().map(Some).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub pair_id: String,
    /// Component state counts joined by `;`.
    pub sizes: String,
    pub states: usize,
    pub transitions: usize,
    pub internal: usize,
    #[serde(with = "na")]
    pub beta: Option<f64>,
    #[serde(with = "na")]
    pub gini_in: Option<f64>,
    #[serde(with = "na")]
    pub gini_out: Option<f64>,
    pub refined_states: usize,
    pub success: u8,
    pub reduction_ratio: f64,
    pub internal_removed_ratio: f64,
    pub elapsed_ms: u64,
    pub over_5min: u8,
    pub timed_out: u8,
    /// Empty unless the pair could not be processed.
    pub error: String,
}

impl ExperimentRow {
    fn failed(pair_id: &str, sizes: String, error: &Error) -> Self {
        ExperimentRow {
            pair_id: pair_id.to_string(),
            sizes,
            states: 0,
            transitions: 0,
            internal: 0,
            beta: None,
            gini_in: None,
            gini_out: None,
            refined_states: 0,
            success: 0,
            reduction_ratio: 0.0,
            internal_removed_ratio: 0.0,
            elapsed_ms: 0,
            over_5min: 0,
            timed_out: 0,
            error: error.to_string(),
        }
    }

    pub fn is_error(&self) -> bool {
        !self.error.is_empty()
    }
}

/// Result of processing one pair, kept for inspection by callers.
pub struct PairOutcome {
    pub row: ExperimentRow,
    pub composite: Option<Automaton>,
    pub quotient: Option<Automaton>,
}

fn ratio_removed(before: usize, after: usize) -> f64 {
    if before == 0 {
        0.0
    } else {
        1.0 - after as f64 / before as f64
    }
}

/// The composite a row measures: every component but the last is folded
/// pairwise with reduction, then composed with the last and pruned.
pub fn measured_composite(components: &[Automaton], config: &ExperimentConfig) -> Result<Automaton> {
    if components.len() < 2 {
        return Err(Error::TooFewComponents(components.len()));
    }
    let io = config.io.clone().unwrap_or_else(|| default_io_sets(components));
    let options = RefineOptions {
        timeout: config.timeout,
        semantics: config.semantics,
    };
    let (last, prefix) = components.split_last().expect("two or more");
    let head = if prefix.len() == 1 {
        prefix[0].clone()
    } else {
        compose_pairwise_reduce(prefix, &io, &options)?
    };
    Ok(compose(&[head, last.clone()], &io)?.reachable())
}

/// Runs the pipeline on one pair (or longer component list).
pub fn run_pair(pair_id: &str, components: &[Automaton], config: &ExperimentConfig) -> PairOutcome {
    let sizes = components
        .iter()
        .map(|c| c.state_count().to_string())
        .collect::<Vec<_>>()
        .join(";");
    let composite = match measured_composite(components, config) {
        Ok(c) => c,
        Err(e) => {
            return PairOutcome {
                row: ExperimentRow::failed(pair_id, sizes, &e),
                composite: None,
                quotient: None,
            }
        }
    };
    let pre: MetricsRecord<f64> = metrics_record(&composite);
    let options = RefineOptions {
        timeout: config.timeout,
        semantics: config.semantics,
    };
    let started = Instant::now();
    let refined = partition_refine(&composite, &options).map(|x| quotient_with(&composite, &x, config.semantics));
    let measured = started.elapsed();
    let timeout_ms = config.timeout.map_or(0, |t| t.as_millis() as u64);

    let mut row = ExperimentRow {
        pair_id: pair_id.to_string(),
        sizes,
        states: pre.states,
        transitions: pre.transitions,
        internal: pre.internal_transitions,
        beta: pre.beta,
        gini_in: pre.gini_in,
        gini_out: pre.gini_out,
        refined_states: pre.states,
        success: 0,
        reduction_ratio: 0.0,
        internal_removed_ratio: 0.0,
        elapsed_ms: 0,
        over_5min: 0,
        timed_out: 0,
        error: String::new(),
    };
    let quotient = match refined {
        Ok(q) => {
            row.refined_states = q.state_count();
            row.success = u8::from(q.state_count() < pre.states);
            row.reduction_ratio = ratio_removed(pre.states, q.state_count());
            row.internal_removed_ratio = ratio_removed(pre.internal_transitions, q.internal_transition_count());
            if config.timing {
                row.elapsed_ms = measured.as_millis() as u64;
            }
            Some(q)
        }
        Err(Error::Timeout { elapsed, .. }) => {
            row.timed_out = 1;
            row.elapsed_ms = if config.timing {
                (elapsed.as_millis() as u64).max(timeout_ms)
            } else {
                timeout_ms
            };
            None
        }
        Err(e) => {
            row.error = e.to_string();
            None
        }
    };
    row.over_5min = u8::from(row.elapsed_ms > FIVE_MINUTES_MS);
    PairOutcome {
        row,
        composite: Some(composite),
        quotient,
    }
}

/// A corpus entry: identifier and either its components or the load error.
pub type CorpusEntry = (String, Result<Vec<Automaton>>);

/// Reads every `*.cia` file of `dir` in file-name order.
pub fn read_corpus(dir: &Path) -> Result<Vec<CorpusEntry>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == CORPUS_EXTENSION))
        .collect();
    paths.sort();
    Ok(paths
        .into_iter()
        .map(|p| {
            let id = p.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
            let parsed = fs::read_to_string(&p)
                .map_err(Error::from)
                .and_then(|text| parse_document(&text));
            (id, parsed)
        })
        .collect())
}

/// Writes `pair_00000.cia`, `pair_00001.cia`, ... into `dir`.
pub fn write_corpus(dir: &Path, pairs: &[(Automaton, Automaton)]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    pairs
        .iter()
        .enumerate()
        .map(|(i, (a, b))| {
            let path = dir.join(format!("pair_{i:05}.{CORPUS_EXTENSION}"));
            fs::write(&path, to_document(&[a.clone(), b.clone()]))?;
            Ok(path)
        })
        .collect()
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Io(format!("cannot start worker pool: {e}")))
}

/// Runs every entry, in parallel across pairs; rows keep the input order.
pub fn run_entries(entries: &[CorpusEntry], config: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    if let Some(dir) = &config.dot_dir {
        fs::create_dir_all(dir)?;
    }
    let rows = pool(config.workers)?.install(|| {
        entries
            .par_iter()
            .map(|(id, parsed)| -> Result<ExperimentRow> {
                let components = match parsed {
                    Ok(c) => c,
                    Err(e) => return Ok(ExperimentRow::failed(id, String::new(), e)),
                };
                let outcome = run_pair(id, components, config);
                if let (Some(dir), Some(q)) = (&config.dot_dir, &outcome.quotient) {
                    fs::write(dir.join(format!("{id}.dot")), export_dot(q))?;
                }
                Ok(outcome.row)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(rows)
}

pub fn run_experiment(corpus_dir: &Path, config: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    let entries = read_corpus(corpus_dir)?;
    if entries.is_empty() {
        return Err(Error::Io(format!("no .{CORPUS_EXTENSION} files in {}", corpus_dir.display())));
    }
    run_entries(&entries, config)
}

pub fn write_csv<W: Write>(rows: &[ExperimentRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub const CSV_HEADER: [&str; 16] = [
    "pair_id",
    "sizes",
    "states",
    "transitions",
    "internal",
    "beta",
    "gini_in",
    "gini_out",
    "refined_states",
    "success",
    "reduction_ratio",
    "internal_removed_ratio",
    "elapsed_ms",
    "over_5min",
    "timed_out",
    "error",
];

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ExperimentRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Explanatory variable of a regression over experiment rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Predictor {
    Beta,
    States,
    GiniIn,
    GiniOut,
}

/// Response variable of a regression over experiment rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Response {
    Success,
    Over5Min,
    /// Elapsed time strictly above the given number of milliseconds.
    OverMs(u64),
}

/// `(x, y)` samples for a regression; rows with an error, a timeout (for the
/// success response) or an undefined predictor are skipped.
pub fn regression_data(rows: &[ExperimentRow], x: Predictor, y: Response) -> (Vec<f64>, Vec<bool>) {
    rows.iter()
        .filter(|r| !r.is_error())
        .filter(|r| !(y == Response::Success && r.timed_out == 1))
        .filter_map(|r| {
            let xv = match x {
                Predictor::Beta => r.beta,
                Predictor::States => Some(r.states as f64),
                Predictor::GiniIn => r.gini_in,
                Predictor::GiniOut => r.gini_out,
            }?;
            let yv = match y {
                Response::Success => r.success == 1,
                Response::Over5Min => r.over_5min == 1,
                Response::OverMs(ms) => r.elapsed_ms > ms,
            };
            Some((xv, yv))
        })
        .unzip()
}

/// Five-number summary plus mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Summary {
            count: v.len(),
            min: v[0],
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            max: v[v.len() - 1],
            mean: v.iter().sum::<f64>() / v.len() as f64,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionBand {
    pub min_reduction: f64,
    pub rows: usize,
    /// Distribution of `internal_removed_ratio` over the rows in the band.
    pub internal_removed: Option<Summary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub rows: usize,
    pub bands: Vec<ReductionBand>,
}

pub const REDUCTION_BANDS: [f64; 2] = [0.5, 0.75];

pub fn reduction_report(rows: &[ExperimentRow]) -> Result<ReductionReport> {
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let usable: Vec<&ExperimentRow> = rows.iter().filter(|r| !r.is_error() && r.timed_out == 0).collect();
    let bands = REDUCTION_BANDS
        .iter()
        .map(|&band| {
            let removed: Vec<f64> = usable
                .iter()
                .filter(|r| r.reduction_ratio >= band)
                .map(|r| r.internal_removed_ratio)
                .collect();
            ReductionBand {
                min_reduction: band,
                rows: removed.len(),
                internal_removed: Summary::of(&removed),
            }
        })
        .collect();
    Ok(ReductionReport {
        rows: rows.len(),
        bands,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_automaton;

    fn handshake() -> Vec<Automaton> {
        vec![
            parse_automaton("automaton A\nhierarchy (A)\nstates a0 a1\ninitial a0\ntrans a0 (-,m,A) a1\nend\n")
                .unwrap(),
            parse_automaton("automaton B\nhierarchy (B)\nstates b0 b1\ninitial b0\ntrans b0 (B,m,-) b1\nend\n")
                .unwrap(),
        ]
    }

    fn untimed() -> ExperimentConfig {
        ExperimentConfig {
            timing: false,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn handshake_row() {
        let config = ExperimentConfig {
            io: Some(IoSets::empty()),
            ..untimed()
        };
        let row = run_pair("p", &handshake(), &config).row;
        assert_eq!(row.sizes, "2;2");
        assert_eq!((row.states, row.transitions, row.internal), (2, 1, 1));
        assert_eq!(row.refined_states, 1);
        assert_eq!(row.success, 1);
        assert_eq!(row.reduction_ratio, 0.5);
        assert_eq!(row.internal_removed_ratio, 1.0);
        assert!(row.error.is_empty());
    }

    #[test]
    fn csv_round_trip_with_na() {
        let mut row = run_pair("p", &handshake(), &untimed()).row;
        row.beta = None;
        let mut buf = Vec::new();
        write_csv(std::slice::from_ref(&row), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&CSV_HEADER.join(",")));
        assert!(text.contains(",NA,"));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), vec![row]);
    }

    #[test]
    fn malformed_entry_is_marked() {
        let entries = vec![
            ("bad".to_string(), Err(Error::EmptyInitial)),
            ("good".to_string(), Ok(handshake())),
        ];
        let rows = run_entries(&entries, &untimed()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].is_error());
        assert!(!rows[1].is_error());
    }

    #[test]
    fn reports() {
        assert_eq!(reduction_report(&[]), Err(Error::EmptyInput));
        let config = ExperimentConfig {
            io: Some(IoSets::empty()),
            ..untimed()
        };
        let mut row = run_pair("p", &handshake(), &config).row;
        row.reduction_ratio = 0.0;
        let r = reduction_report(&[row.clone()]).unwrap();
        assert!(r.bands.iter().all(|b| b.rows == 0 && b.internal_removed.is_none()));
        row.reduction_ratio = 0.8;
        let r = reduction_report(&[row]).unwrap();
        assert_eq!(r.bands[1].rows, 1);
        assert_eq!(r.bands[1].internal_removed.as_ref().unwrap().median, 1.0);
    }

    #[test]
    fn quantiles() {
        let s = Summary::of(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (1.0, 1.75, 2.5, 3.25, 4.0));
    }
}

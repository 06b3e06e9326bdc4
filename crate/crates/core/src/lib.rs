//! Component Interaction Automata: a textual format, n-ary composition,
//! weak-bisimulation partition refinement, structural metrics, a seeded corpus
//! generator and the logistic-regression analysis of refinement outcomes.
//!
//! ```
//! use cia::{compose, default_io_sets, minimize, parse_automaton, RefineOptions};
//!
//! let a = parse_automaton("automaton A\nhierarchy (A)\nstates a0 a1\ninitial a0\ntrans a0 (-,m,A) a1\nend\n")?;
//! let b = parse_automaton("automaton B\nhierarchy (B)\nstates b0 b1\ninitial b0\ntrans b0 (B,m,-) b1\nend\n")?;
//! let pair = [a, b];
//! let product = compose(&pair, &default_io_sets(&pair))?.reachable();
//! let reduced = minimize(&product, &RefineOptions::default())?;
//! assert!(reduced.state_count() <= product.state_count());
//! # Ok::<(), cia::Error>(())
//! ```

pub mod automaton;
pub mod compose;
pub mod dot;
pub mod error;
pub mod experiment;
pub mod format;
pub mod generate;
pub mod metrics;
pub mod refine;
pub mod regress;
pub mod scalar;

pub use automaton::{reachable, Action, Automaton, AutomatonBuilder, ComponentName, Hierarchy, Label, LabelKind, StateId, Transition};
pub use compose::{compose, compose_pairwise_reduce, default_io_sets, sync_class, IoSets, SyncClass};
pub use dot::export_dot;
pub use error::{Error, Result};
pub use experiment::{reduction_report, run_experiment, ExperimentConfig, ExperimentRow, ReductionReport};
pub use format::{parse_automaton, parse_document, to_document, to_text};
pub use generate::{generate_corpus, generate_pair, generate_primitive, GenParams, KindMix};
pub use metrics::{beta, gini, gini_in, gini_out, metrics_record, MetricsRecord};
pub use refine::{
    minimize, partition_refine, partition_refine_traced, quotient, quotient_with, refine_step, silent_closure, splitter,
    weak_bisim_oracle, weak_targets, InternalSemantics, Partition, RefineOptions, RefineStats, SilentClosure,
    WeakBisimOracle,
};
pub use regress::{
    classify, fit_logistic, lr_p_value, predict, threshold_x, ClassificationReport, LogisticFit, RegressionReport,
};
pub use scalar::Scalar;

pub type MetricsRecordF64 = MetricsRecord<f64>;
pub type MetricsRecordF32 = MetricsRecord<f32>;
pub type LogisticFitF64 = LogisticFit<f64>;
pub type LogisticFitF32 = LogisticFit<f32>;
pub type ClassificationReportF64 = ClassificationReport<f64>;
pub type ClassificationReportF32 = ClassificationReport<f32>;

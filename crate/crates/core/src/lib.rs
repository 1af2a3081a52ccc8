//! Community-aware centrality measures and their evaluation as predictors
//! of single-seed SIR spreading power.
//!
//! The pipeline is: load a graph ([`graph`]), attach a partition
//! ([`community`]), score nodes with the seven measures ([`centrality`]),
//! estimate every node's spreading power by Monte Carlo ([`sir`]) and
//! compare the two with the imprecision function ([`evaluation`]).

pub mod centrality;
pub mod cli;
pub mod community;
pub mod error;
pub mod evaluation;
pub mod graph;
pub mod output;
pub mod sir;

pub use centrality::{CentralityParams, CentralityVector, Measure, Ranking};
pub use community::{LinkSplit, Partition, Provenance};
pub use error::{Error, Result};
pub use evaluation::{ImprecisionCurve, ReferenceSet};
pub use graph::{Graph, GraphStats, LoadOptions, LoadReport};
pub use sir::{SirConfig, SpreadScores};

//! Multi-criteria evaluation of radar resource management (RRM) algorithms.
//!
//! Raw per-track and per-scenario measurements are normalized by utility
//! functions, aggregated over samples by a pessimistic OWA (optionally read
//! off a kernel density estimate), and aggregated over criteria by 2-additive
//! Choquet integrals along a criteria tree. A seeded desk-scale simulator and
//! figure-of-merit extraction make the whole pipeline runnable end to end.
//!
//! ```
//! use rrm_eval::pipeline::{run_demo, DemoConfig};
//! use rrm_eval::model::ids;
//!
//! let cfg = DemoConfig { launch_scales: vec![1.0], ..DemoConfig::default() };
//! let demo = run_demo(&cfg)?;
//! let cmp = demo.policy_comparison(false)?;
//! assert!(cmp.node(ids::ROOT).is_some());
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```
//!
//! Modules, bottom up:
//!
//! * [`utility`]: piecewise-linear utility functions.
//! * [`aggregation`]: OWA, 2-additive Choquet integral, Shapley values and a
//!   brute-force set-function oracle.
//! * [`density`]: KDE and gauge scores.
//! * [`model`]: metrics, measurements and the criteria tree.
//! * [`fom`]: figures of merit from truth, tracks and radar timelines.
//! * [`simulator`]: the two resource management policies.
//! * [`evaluation`]: scoring a tree for every alternative.
//! * [`io`]: file formats and reports.
//! * [`pipeline`]: the bundled demo run.

pub mod aggregation;
pub mod density;
pub mod evaluation;
pub mod fom;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod simulator;
pub mod utility;

pub use aggregation::{choquet_2add, owa, owa_weights_from_quantifier, shapley, MobiusCapacity, OwaWeights};
pub use density::{gauge_score, kde, GaugeMode, GaugeScore};
pub use evaluation::{evaluate, EvalOptions, Evaluation};
pub use model::{default_paper_model, MeasurementSet, PreferenceModel};
pub use utility::PiecewiseLinearUtility;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/utilities.md")]
    mod utilities {}
    #[doc = include_str!("../../../book/src/owa.md")]
    mod owa {}
    #[doc = include_str!("../../../book/src/choquet.md")]
    mod choquet {}
    #[doc = include_str!("../../../book/src/gauges.md")]
    mod gauges {}
    #[doc = include_str!("../../../book/src/figures-of-merit.md")]
    mod figures_of_merit {}
    #[doc = include_str!("../../../book/src/simulator.md")]
    mod simulator {}
    #[doc = include_str!("../../../book/src/file-formats.md")]
    mod file_formats {}
}

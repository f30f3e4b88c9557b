//! Evaluation of trained models and the search for a dataset's best
//! ordered view-orientation triple.

pub mod error;
pub mod heatmap;
pub mod report;
pub mod search;

pub use error::{EvalError, Result};
pub use heatmap::render_heatmap;
pub use report::{confusion_pairs, evaluate, ConfusedPair, EvalReport};
pub use search::{vo_search, SearchBudget, VoSearchState, DEFAULT_TOP_K_PAIRS, DEFAULT_TOP_K_SINGLES};

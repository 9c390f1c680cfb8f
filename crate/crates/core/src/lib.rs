//! Maximum weakly stable matchings with ties: instance handling,
//! preprocessing, integer programming models and their solution.

pub mod format;
pub mod generate;
pub mod heuristics;
pub mod instance;
pub mod matching;
pub mod model;
pub mod preprocess;
pub mod solve;
pub mod stability;

pub use instance::{GrpInstance, Instance, InstanceError, PreferenceList, Side, TieDensity};
pub use matching::Matching;
pub use model::{IlpModel, ModelConfig, ModelError, ModelStats};
pub use solve::{Backend, SolveError, SolveResult, SolveStatus};
pub use stability::Objective;

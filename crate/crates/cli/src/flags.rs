use std::time::Duration;

use clap::{Args, ValueEnum};
use stabmatch::model::PriorityScheme;
use stabmatch::{Backend, Objective};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Text,
    Csv,
}

/// Flags shared by `solve`, `export-lp` and `bench`. Unset options fall back
/// to [`SolveOptions::default`]; in a bench manifest a row's flags are laid
/// over the command-line ones.
#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct SharedFlags {
    /// Model preset, m1..m6 for SMTI or n1..n12 for HRT.
    #[arg(long = "model", value_name = "PRESET")]
    pub model: Option<String>,
    #[arg(long, value_name = "size|weight")]
    pub objective: Option<Objective>,
    /// Drop pairs of a weighted instance whose weight is below this.
    #[arg(long, value_name = "T")]
    pub threshold: Option<f64>,
    /// Run the pair reductions to a fixpoint before building the model.
    #[arg(long)]
    pub preprocess: bool,
    /// Seed the solver with the best of K tie-broken Gale-Shapley runs.
    #[arg(long = "warm-start", value_name = "K")]
    pub warm_start: Option<usize>,
    #[arg(long, value_name = "none|dummy|z")]
    pub priorities: Option<PriorityScheme>,
    /// Leave out every stability constraint.
    #[arg(long = "no-stability")]
    pub no_stability: bool,
    /// Wall-clock limit in seconds, model construction included.
    #[arg(long = "time-limit", value_name = "SECONDS")]
    pub time_limit: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "builtin|cmd:PATH")]
    pub backend: Option<Backend>,
}

impl SharedFlags {
    /// `other`'s settings where present, ours otherwise.
    pub fn overlay(&self, other: &SharedFlags) -> SharedFlags {
        SharedFlags {
            model: other.model.clone().or_else(|| self.model.clone()),
            objective: other.objective.or(self.objective),
            threshold: other.threshold.or(self.threshold),
            preprocess: self.preprocess || other.preprocess,
            warm_start: other.warm_start.or(self.warm_start),
            priorities: other.priorities.or(self.priorities),
            no_stability: self.no_stability || other.no_stability,
            time_limit: other.time_limit.or(self.time_limit),
            seed: other.seed.or(self.seed),
            backend: other.backend.clone().or_else(|| self.backend.clone()),
        }
    }

    pub fn resolve(&self) -> anyhow::Result<SolveOptions> {
        let d = SolveOptions::default();
        let time_limit = match self.time_limit {
            Some(t) if !(t >= 0.0 && t.is_finite()) => {
                anyhow::bail!("time limit must be a non-negative number of seconds, got {t}")
            }
            Some(t) => Duration::from_secs_f64(t),
            None => d.time_limit,
        };
        Ok(SolveOptions {
            preset: self.model.clone().unwrap_or(d.preset),
            objective: self.objective.unwrap_or(d.objective),
            threshold: self.threshold.unwrap_or(d.threshold),
            preprocess: self.preprocess,
            warm_start: self.warm_start.unwrap_or(d.warm_start),
            priorities: self.priorities.unwrap_or(d.priorities),
            stability: !self.no_stability,
            time_limit,
            seed: self.seed.unwrap_or(d.seed),
            backend: self.backend.clone().unwrap_or(d.backend),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub preset: String,
    pub objective: Objective,
    pub threshold: f64,
    pub preprocess: bool,
    pub warm_start: usize,
    pub priorities: PriorityScheme,
    pub stability: bool,
    pub time_limit: Duration,
    pub seed: u64,
    pub backend: Backend,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            preset: "m1".into(),
            objective: Objective::Size,
            threshold: 0.0,
            preprocess: false,
            warm_start: 0,
            priorities: PriorityScheme::None,
            stability: true,
            time_limit: Duration::from_secs(3600),
            seed: 0,
            backend: Backend::Builtin,
        }
    }
}

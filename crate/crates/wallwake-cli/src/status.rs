//! Exit-status contract of the binary and the error classification behind
//! it.
//!
//! Every pipeline failure lands in one of three buckets: configuration
//! problems (the run never started), smallness/divergence violations (the
//! iteration left its contraction regime — a physical regime boundary, not a
//! bug), and numeric failures (everything else, including checks that ran to
//! completion but missed their thresholds).

use serde::Serialize;

/// Final status of a run, in exit-code order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RunStatus {
    /// Every requested check passed.
    Pass,
    /// A computation failed or a threshold was missed.
    NumericFailure,
    /// The configuration was unusable; nothing was computed.
    ConfigError,
    /// A fixed-point iteration diverged: the smallness condition the
    /// contraction argument needs does not hold at these parameters.
    SmallnessViolation,
}

impl RunStatus {
    /// Process exit code: 0 pass, 2 numeric failure, 3 configuration error,
    /// 4 divergence/smallness violation.
    pub fn code(self) -> i32 {
        match self {
            RunStatus::Pass => 0,
            RunStatus::NumericFailure => 2,
            RunStatus::ConfigError => 3,
            RunStatus::SmallnessViolation => 4,
        }
    }

    /// Merge two statuses, keeping the more severe classification; severity
    /// grows in the order pass < numeric < smallness < config (a broken
    /// configuration invalidates everything after it).
    pub fn worst(self, other: RunStatus) -> RunStatus {
        let rank = |s: RunStatus| match s {
            RunStatus::Pass => 0,
            RunStatus::NumericFailure => 1,
            RunStatus::SmallnessViolation => 2,
            RunStatus::ConfigError => 3,
        };
        if rank(other) > rank(self) {
            other
        } else {
            self
        }
    }
}

/// Marker error for configuration problems; anything carrying one of these
/// in its chain exits with the configuration code.
#[derive(Debug)]
pub struct ConfigProblem(pub String);

impl std::fmt::Display for ConfigProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigProblem {}

/// Map an error chain onto the exit-status contract. The first classifiable
/// cause wins: context strings are transparent, configuration markers take
/// the config code, and the solver's divergence variants take the smallness
/// code. Unrecognized errors count as numeric failures.
pub fn classify(err: &anyhow::Error) -> RunStatus {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigProblem>().is_some() {
            return RunStatus::ConfigError;
        }
        if let Some(w) = cause.downcast_ref::<wallwake::Error>() {
            return match w {
                wallwake::Error::PicardDiverged { .. }
                | wallwake::Error::PicardMaxIter { .. }
                | wallwake::Error::OracleDiverged { .. } => RunStatus::SmallnessViolation,
                _ => RunStatus::NumericFailure,
            };
        }
    }
    RunStatus::NumericFailure
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn classification_sees_through_context_layers() {
        let config: anyhow::Result<()> =
            Err(ConfigProblem("bad".into())).map_err(anyhow::Error::new);
        let config = config.context("outer").unwrap_err();
        assert_eq!(classify(&config), RunStatus::ConfigError);

        let small = anyhow::Error::new(wallwake::Error::PicardMaxIter {
            max_iter: 3,
            last_increment: 1.0,
            tol: 1e-9,
        })
        .context("alpha stage");
        assert_eq!(classify(&small), RunStatus::SmallnessViolation);

        let numeric = anyhow::Error::new(wallwake::Error::Domain("x".into()));
        assert_eq!(classify(&numeric), RunStatus::NumericFailure);

        let opaque = anyhow::anyhow!("some stage blew up");
        assert_eq!(classify(&opaque), RunStatus::NumericFailure);
    }

    #[test]
    fn worst_prefers_the_more_severe_code() {
        use RunStatus::*;
        assert_eq!(Pass.worst(NumericFailure), NumericFailure);
        assert_eq!(SmallnessViolation.worst(NumericFailure), SmallnessViolation);
        assert_eq!(NumericFailure.worst(ConfigError), ConfigError);
        assert_eq!(Pass.worst(Pass).code(), 0);
    }
}

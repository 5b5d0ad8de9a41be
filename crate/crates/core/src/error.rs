use thiserror::Error;

/// Errors raised by the q-arithmetic, zeta and extrapolation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QError {
    #[error("{op}: argument outside domain ({detail})")]
    Domain { op: &'static str, detail: String },

    #[error("{op}: non-finite input")]
    NonFinite { op: &'static str },

    #[error("q parameters differ: {left} vs {right}")]
    MismatchedQ { left: f64, right: f64 },

    #[error("{op}: result not representable, only its logarithm {log_value} is available")]
    Overflow { op: &'static str, log_value: f64 },

    #[error("{op}: q-exponential cutoff reached")]
    Cutoff { op: &'static str },

    #[error("fold failed at term {index}: {source}")]
    Fold {
        index: usize,
        #[source]
        source: Box<QError>,
    },

    #[error("no sign change of f over [{lo}, {hi}] (f = {f_lo}, {f_hi})")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("bracket [{lo}, {hi}] does not straddle target {target}")]
    Bracket { lo: f64, hi: f64, target: f64 },

    #[error("parabola fit needs at least 3 distinct abscissae, got {distinct}")]
    RankDeficient { distinct: usize },

    #[error("curvature does not change sign over exponents [{lo}, {hi}] (c = {c_lo}, {c_hi})")]
    NoCurvatureRoot {
        lo: f64,
        hi: f64,
        c_lo: f64,
        c_hi: f64,
    },

    #[error("requested {requested} exceeds configured cap {cap}")]
    Resource { requested: u64, cap: u64 },

    #[error("{context}: {source}")]
    Stage {
        context: String,
        #[source]
        source: Box<QError>,
    },
}

impl QError {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        QError::Domain {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn in_stage(self, context: impl Into<String>) -> Self {
        QError::Stage {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = QError> = std::result::Result<T, E>;

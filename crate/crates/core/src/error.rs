use thiserror::Error;

use crate::model::WeightedTrajectory;

pub type Result<T> = std::result::Result<T, HilferError>;

/// State carried out of a fixed-point iteration that ran out of budget or diverged.
#[derive(Debug, Clone, PartialEq)]
pub struct NotConvergedInfo {
    /// Last finite iterate on the window being solved.
    pub last_iterate: WeightedTrajectory,
    /// Ratio of the last two update norms (NaN when fewer than two updates happened).
    pub contraction: f64,
    pub iterations: usize,
    /// Node at which a marching solve gave up.
    pub at: Option<f64>,
    /// Component index for system solves.
    pub component: Option<usize>,
    /// True when the iterates left the representable range rather than stalling.
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HilferError {
    #[error("invalid {field}: {reason}")]
    Domain { field: &'static str, reason: String },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("{context}: no convergence after {terms} terms (partial sum {partial_sum})")]
    Accuracy {
        context: &'static str,
        terms: usize,
        partial_sum: f64,
    },

    #[error("{}", not_converged_message(.0))]
    NotConverged(Box<NotConvergedInfo>),
}

fn not_converged_message(info: &NotConvergedInfo) -> String {
    let mut msg = format!(
        "fixed-point iteration did not converge after {} iterations (contraction {:.3e})",
        info.iterations, info.contraction
    );
    if let Some(t) = info.at {
        msg.push_str(&format!(" at t = {t}"));
    }
    if let Some(c) = info.component {
        msg.push_str(&format!(" in component {c}"));
    }
    if info.diverged {
        msg.push_str(", iterates diverged");
    }
    msg
}

impl HilferError {
    pub(crate) fn domain(field: &'static str, reason: impl Into<String>) -> Self {
        HilferError::Domain {
            field,
            reason: reason.into(),
        }
    }

    pub fn not_converged_info(&self) -> Option<&NotConvergedInfo> {
        match self {
            HilferError::NotConverged(info) => Some(info),
            _ => None,
        }
    }
}

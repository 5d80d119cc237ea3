// SPDX-License-Identifier: Apache-2.0

use spraydirac_core::dirac::DiracError;
use spraydirac_core::expr::EvalError;
use spraydirac_core::motion::MotionError;

use crate::problem::{ProblemError, ProblemErrorKind};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("invalid problem: {0}")]
    Validation(String),
    #[error("numeric domain error: {0}")]
    Numeric(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<ProblemError> for CliError {
    fn from(e: ProblemError) -> Self {
        match e.kind {
            ProblemErrorKind::Invalid(_) => CliError::Validation(e.to_string()),
            _ => CliError::Parse(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<DiracError> for CliError {
    fn from(e: DiracError) -> Self {
        let msg = match &e {
            DiracError::AnnihilatorMismatch { witness, .. }
            | DiracError::RankDeficientDistribution { witness, .. }
            | DiracError::AnnihilatorTooLarge { witness, .. } => {
                format!("{e} at x = {:?}, y = {:?}", witness.x, witness.y)
            }
            _ => e.to_string(),
        };
        match e {
            DiracError::AnnihilatorMismatch { .. }
            | DiracError::RankDeficientDistribution { .. }
            | DiracError::AnnihilatorTooLarge { .. } => CliError::Validation(msg),
            _ => CliError::Numeric(msg),
        }
    }
}

impl From<MotionError> for CliError {
    fn from(e: MotionError) -> Self {
        match e {
            MotionError::NotInDistribution { residual, witness } => CliError::Validation(format!(
                "S is not in span(D) at x = {:?}, y = {:?} (residual {residual})",
                witness.x, witness.y
            )),
            MotionError::DistributionRequired(_) => CliError::Validation(e.to_string()),
            MotionError::NoSamplePoints => CliError::Numeric(e.to_string()),
            MotionError::Dirac(d) => d.into(),
            MotionError::Eval(v) => v.into(),
        }
    }
}

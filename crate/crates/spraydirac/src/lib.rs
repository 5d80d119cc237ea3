// SPDX-License-Identifier: Apache-2.0

//! Problem files, reports and the batch commands behind the `spraydirac`
//! binary.

pub mod commands;
pub mod error;
pub mod problem;
pub mod report;

pub use commands::{run, Command};
pub use error::CliError;
pub use problem::Problem;
pub use report::Report;

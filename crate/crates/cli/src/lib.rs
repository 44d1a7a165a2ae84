//! Library side of the `cfid` command: run reports, the query universe and
//! the verification harness.

pub mod commands;
pub mod report;
pub mod universe;
pub mod verify;

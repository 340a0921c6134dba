//! Reference implementations and random fixtures for the acceptance run.

pub mod fixtures;
pub mod oracle;

//! Command-line launcher and console service for guidebot sessions.

pub mod cli;
pub mod config;
pub mod service;

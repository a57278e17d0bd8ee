//! Command-line front end and HTTP service over [`stt_core`].

pub mod commands;
pub mod config;
pub mod server;

pub use config::{config_digest, FlagOverrides, Settings};
pub use server::{router, serve, AppState};

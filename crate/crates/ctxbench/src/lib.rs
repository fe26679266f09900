//! File formats, the versioned dataset registry, benchmark groups, the HTTP
//! benchmark service and the `bench` command line, built on `ctxbench-core`.

pub mod cli;
pub mod config;
pub mod groups;
pub mod hash;
pub mod io;
pub mod leaderboard;
pub mod registry;
pub mod service;

//! Std side of the RTDP benchmark: MDP files, record CSVs, run metadata,
//! multi-threaded experiments, plot data and the `rtdp` command line.

pub mod cli;
pub mod mdp_file;
pub mod meta;
pub mod plot;
pub mod records;
pub mod runner;

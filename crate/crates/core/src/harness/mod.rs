//! Configuration, test signals, scenario runners and CSV output.

pub mod config;
pub mod scenarios;
pub mod signal;
pub mod table;

pub use config::{load_config, parse_config, ScenarioConfig, SignalSource, SweepVariable};
pub use scenarios::{
    run_distortion_fit, run_fd_hd_comparison, run_optimality_check, run_scenario,
    run_tradeoff_sweep, Scenario,
};
pub use signal::{load_signal_csv, synth_eeg, write_signal_csv};

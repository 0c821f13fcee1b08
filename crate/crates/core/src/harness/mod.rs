//! Experiment drivers.

pub mod chains;
pub mod decode_eval;
pub mod housing;
pub mod inference;
pub mod presets;
pub mod run;
pub mod simulator;

pub use chains::{chain_timing, simulate_random_log, ChainTiming};
pub use decode_eval::{run_state_decoding_eval, DecodeReport, DecodeRow};
pub use inference::{run_parallel_chains, Engine, EngineKind};
pub use presets::{preset, preset_names, PRESETS};
pub use run::*;
pub use simulator::Simulator;

pub mod backtest;
pub mod baselines;
pub mod bn;
pub mod dbn;
pub mod direction;
pub mod indicators;
pub mod ingest;
pub mod synthetic;
pub mod whatif;

pub use direction::Direction;
pub use ingest::{AlignedTable, DirectionMatrix, TimeSeriesTable};

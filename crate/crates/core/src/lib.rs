//! Simulation library for massive wireless energy transfer.
//!
//! Multi-antenna power beacons (PBs) radiate RF energy towards many
//! energy-harvesting (EH) devices. The crate models the nonlinear harvester,
//! log-distance path loss with a distance-dependent Rician K-factor, the
//! CSI-free charging strategies (AA-SS, AA-IS, SA) and two CSI-based
//! benchmarks (OA-CSI, AA-CSI), and estimates the average harvested energy
//! (AHE) and average energy outage (AEO) per node by Monte Carlo.
//!
//! Energies are reported per coherence block of unit duration, so a value in
//! joules is numerically equal to the average harvested DC power in watts.

pub mod channel;
pub mod error;
pub mod montecarlo;
pub mod precoder;
pub mod strategies;
pub mod units;

pub use channel::{
    ChannelRealization, FadingMode, LinkBudget, PathLossModel, Point2D, RicianProfile,
};
pub use error::{Result, WetError};
pub use montecarlo::{Deployment, HeatmapGrid, HeatmapSpec, Metrics, NodeMetrics, Scenario};
pub use precoder::{Precoder, PrecoderOptions, PrecoderSolution};
pub use strategies::{BlockEnergy, SignalCorrelation, StrategyKind};
pub use units::{dbm_to_watts, watts_to_dbm, HarvesterModel};

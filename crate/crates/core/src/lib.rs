//! Outage analysis and coalition-game steering of cellular-connected UAVs
//! across mobile network operators.

pub mod channel;
pub mod config;
pub mod error;
pub mod experiment;
pub mod game;
pub mod geometry;
pub mod montecarlo;
pub mod outage;
pub mod specfun;

pub use channel::{link_statistics, LinkStatistics, LinkTable};
pub use config::{AssociationRule, BsPlacement, ScenarioConfig};
pub use error::{Error, Result};
pub use game::{run_coalition_game, CoalitionPartition, GameContext, GameTrace, Transfer};
pub use geometry::{generate_topology, BaseStation, Topology, UavNode};
pub use outage::{
    outage_closed_form, outage_closed_form_adaptive, outage_no_interference, outage_serving_residues, OutageMethod,
    OutageResult,
};
pub use montecarlo::{monte_carlo_outage, sample_snr, McConfig};

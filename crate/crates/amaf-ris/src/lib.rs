//! Link-level modeling of a multibeam base station built from passive
//! reflecting surfaces fed over the air by small active arrays.
//!
//! The crate covers the full chain: scenario geometry, array responses,
//! near-field feeder design by the principal singular mode of the
//! feeder-to-surface propagation matrix, stacking of several modules with
//! crosstalk, LOS multiuser rate simulation, and link/DC-power budgets.

pub mod array;
pub mod feeder;
pub mod geometry;
pub mod link;
pub mod sim;
pub mod stack;

pub use array::{ArrayLayout, CVector, PatternGrid, PatternSummary};
pub use feeder::{FeederModule, Illumination, PhaseMask, PrincipalMode};
pub use geometry::{Direction, ScenarioGeometry, Vec3};
pub use link::{LinkBudget, PowerReport};
pub use sim::{RateSample, SimConfig, UserPosition};
pub use stack::{StackedSystem, StackingAxis};

//! The embedded walk, its clock and the time-changed process.

pub mod analytics;
pub mod kernel;
pub mod trajectory;

pub use analytics::{
    check_detailed_balance, expected_visits, psi, reflected_stationary, return_probability, reversible_measure,
};
pub use kernel::{step_noise, Step, Walker};
pub use trajectory::{record_until, simulate_to_site, simulate_to_time, OccupationRecord, Trajectory, TrajectoryRow};

//! Engine and desk-scale simulator for sensor-guided knee rehabilitation.
//!
//! Data flows `protocol` → `kinematics` → `session` → `feedback`, with
//! `metrics` summarising finished sessions and `sim` closing the loop with a
//! synthetic patient and actuator emulator. [`pipeline`] wires the online
//! stages together for live, replayed and simulated streams alike.

pub mod feedback;
pub mod kinematics;
pub mod metrics;
pub mod pipeline;
pub mod protocol;
pub mod session;
pub mod sim;

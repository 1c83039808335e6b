//! Evaluation protocols: box-sweep collision statistics for occupancy maps,
//! relative drift for odometry and tracking metrics for flights.

mod collision;
mod flight;
mod odometry;

pub use collision::{mcc, mcc_eval, CollisionConfusion, MccConfig};
pub use flight::{flight_metrics, recovery_time, rms, FlightMetrics, RECOVERY_BAND};
pub use odometry::{arc_lengths, rel_trans_error, RelErrorReport, SEGMENT_LENGTHS};

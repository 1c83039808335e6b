//! Scenario configuration and the pipelines behind the command line.

mod config;
mod flight;
mod run;

pub use config::{
    load_config, parse_config, parse_toml, ControllerConfig, MapConfig, MissionConfig, PlanConfig, ScenarioConfig,
    ScenarioKind, SimulateConfig, VoScenarioConfig, WindStep,
};
pub use flight::{fly, FlightLog, FlightSetup, IMU_HEADER};
pub use run::{
    flight_setup, fly_path, full_mission, map_room, plan, run_scenario, simulate, visual_odometry, MapOutcome, Metrics,
    MissionOutcome, PathFlight, PlanOutcome, ARRIVAL_RADIUS,
};

//! Roadmap planning on an occupancy grid: proximity map, PRM query,
//! bounded-cost shortening and a curvature-limited speed plan.

mod edt;
mod pipeline;
mod query;
mod roadmap;
mod shorten;
mod speed;
mod world;

pub use edt::{build_proximity_map, ProximityMap};
pub use pipeline::{plan_route, timed_waypoints, RouteConfig};
pub use query::{dijkstra, plan_path, query_graph, PlannedPath, QueryGraph, QUERY_LINKS};
pub use roadmap::{build_roadmap, Clearance, CostWeights, Roadmap, RoadmapConfig};
pub use shorten::shorten_path;
pub use speed::{circumcircle_curvature, path_to_csv, resample, speed_plan, SpeedLimits, PATH_HEADER};
pub use world::{sphere_collides, IndustrialConfig, IndustrialWorld};

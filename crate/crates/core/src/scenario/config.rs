use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_path_to_error::Segment;

use crate::control::{PiConfig, PoleSet};
use crate::error::{Error, Result};
use crate::eval::MccConfig;
use crate::mapping::{CutWeights, RoomConfig};
use crate::planner::{CostWeights, IndustrialConfig, RoadmapConfig, RouteConfig};
use crate::sim::SimConfig;
use crate::textio::read_text;
use crate::vo::{StereoCalib, VoConfig, VoSceneConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Simulate,
    Plan,
    Map,
    Vo,
    FullMission,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Simulate => "simulate",
            ScenarioKind::Plan => "plan",
            ScenarioKind::Map => "map",
            ScenarioKind::Vo => "vo",
            ScenarioKind::FullMission => "full-mission",
        }
    }
}

/// Top-level scenario file. Only the section matching `kind` is used; the
/// others keep their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    /// Drives simulator noise, roadmap sampling, the VO scene and RANSAC.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub plan: PlanConfig,
    #[serde(default)]
    pub map: MapConfig,
    #[serde(default)]
    pub vo: VoScenarioConfig,
    #[serde(default)]
    pub mission: MissionConfig,
}

impl ScenarioConfig {
    pub fn new(kind: ScenarioKind) -> Self {
        ScenarioConfig {
            kind,
            seed: 0,
            sim: SimConfig::default(),
            controller: ControllerConfig::default(),
            simulate: SimulateConfig::default(),
            plan: PlanConfig::default(),
            map: MapConfig::default(),
            vo: VoScenarioConfig::default(),
            mission: MissionConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    pub poles: PoleSet<f64>,
    pub pi: PiConfig<f64>,
}

/// Wind velocity switched on at `at` and held to the end.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindStep {
    /// s
    pub at: f64,
    /// m/s
    pub velocity: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    /// s
    pub duration: f64,
    /// Hover reference, m.
    pub hover: [f64; 3],
    /// Initial position relative to the hover reference, m.
    pub offset: [f64; 3],
    /// Start of the metrics window, s.
    pub settle: f64,
    pub wind_step: Option<WindStep>,
    /// Optional timed waypoints `[x, y, z, heading, t]` flown instead of a
    /// hover.
    pub waypoints: Vec<[f64; 5]>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            duration: 60.0,
            hover: [0.0, 0.0, 2.0],
            offset: [0.0; 3],
            settle: 0.0,
            wind_step: None,
            waypoints: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanConfig {
    /// Occupancy grid file; the industrial hall is generated when unset.
    pub map: Option<PathBuf>,
    pub world: IndustrialConfig,
    /// Proximity map clamp, m.
    pub clamp: f64,
    /// Planning radius: vehicle radius plus a tracking margin, m.
    pub radius: f64,
    /// Vehicle radius used for the collision check of the flown path, m.
    pub vehicle_radius: f64,
    pub weights: CostWeights,
    pub roadmap: RoadmapConfig,
    pub route: RouteConfig,
    pub start: [f64; 3],
    pub goal: [f64; 3],
    /// Fly the planned path in simulation.
    pub fly: bool,
}

impl Default for PlanConfig {
    fn default() -> Self {
        let world = IndustrialConfig::default();
        PlanConfig {
            map: None,
            start: world.keep_clear[0],
            goal: world.keep_clear[1],
            world,
            clamp: 3.0,
            radius: 0.5,
            vehicle_radius: 0.3,
            weights: CostWeights::default(),
            roadmap: RoadmapConfig::default(),
            route: RouteConfig::default(),
            fly: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapConfig {
    pub room: RoomConfig,
    pub weights: CutWeights,
    pub mcc: MccConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VoScenarioConfig {
    pub scene: VoSceneConfig,
    pub calib: StereoCalib,
    pub odometry: VoConfig,
}

/// Map the room with the sparse pipeline, plan across it on the
/// reconstructed map and fly the plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MissionConfig {
    pub start: [f64; 3],
    pub goal: [f64; 3],
    pub roadmap: RoadmapConfig,
    pub route: RouteConfig,
    /// Planning radius, m.
    pub radius: f64,
    pub vehicle_radius: f64,
}

impl Default for MissionConfig {
    fn default() -> Self {
        MissionConfig {
            start: [2.0, 1.5, 1.5],
            goal: [7.0, 6.0, 1.5],
            roadmap: RoadmapConfig {
                samples: 800,
                connect_radius: 2.5,
                ..Default::default()
            },
            route: RouteConfig {
                spacing: 0.5,
                ..Default::default()
            },
            radius: 0.4,
            vehicle_radius: 0.3,
        }
    }
}

fn remove_at(value: &mut toml::Value, path: &[Segment]) -> bool {
    let Some((last, parents)) = path.split_last() else {
        return false;
    };
    let mut cur = value;
    for s in parents {
        cur = match (s, cur) {
            (Segment::Map { key }, toml::Value::Table(t)) => match t.get_mut(key) {
                Some(v) => v,
                None => return false,
            },
            (Segment::Seq { index }, toml::Value::Array(a)) => match a.get_mut(*index) {
                Some(v) => v,
                None => return false,
            },
            _ => return false,
        };
    }
    match (last, cur) {
        (Segment::Map { key }, toml::Value::Table(t)) => t.remove(key).is_some(),
        _ => false,
    }
}

/// Deserializes TOML text into `T`. Unknown keys are all collected and
/// reported together.
pub fn parse_toml<T: DeserializeOwned>(text: &str) -> Result<T> {
    let mut value: toml::Value = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let mut unknown = Vec::new();
    loop {
        match serde_path_to_error::deserialize::<_, T>(value.clone()) {
            Ok(cfg) if unknown.is_empty() => return Ok(cfg),
            Ok(_) => return Err(Error::Config(format!("unknown keys: {}", unknown.join(", ")))),
            Err(e) => {
                let segments: Vec<Segment> = e.path().iter().cloned().collect();
                if e.inner().to_string().starts_with("unknown field") && remove_at(&mut value, &segments) {
                    unknown.push(e.path().to_string());
                    continue;
                }
                let mut msg = format!("{}: {}", e.path(), e.inner());
                if !unknown.is_empty() {
                    msg = format!("unknown keys: {}; {msg}", unknown.join(", "));
                }
                return Err(Error::Config(msg));
            }
        }
    }
}

/// Parses a scenario from TOML text.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    parse_toml(text)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    parse_config(&read_text(path)?)
}

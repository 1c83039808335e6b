use std::path::Path;
use std::time::Instant;

use super::config::{ControllerConfig, MapConfig, PlanConfig, ScenarioConfig, ScenarioKind, VoScenarioConfig};
use super::{fly, FlightLog, FlightSetup};
use crate::control::{control_log_to_csv, fit_spline, ControllerGains, TimedWaypoint};
use crate::error::{Error, Result};
use crate::estimator::estimates_to_csv;
use crate::eval::{flight_metrics, mcc_eval, rel_trans_error, CollisionConfusion, RelErrorReport, SEGMENT_LENGTHS};
use crate::geom::trajectory_to_csv;
use crate::mapping::{dense_baseline, grid_to_text, read_grid, sparse_pipeline, OccupancyGrid, RoomScene, SparseMap};
use crate::planner::{
    build_proximity_map, build_roadmap, path_to_csv, plan_route, sphere_collides, timed_waypoints, Clearance,
    IndustrialWorld, PlannedPath, ProximityMap, RoadmapConfig, RouteConfig,
};
use crate::sim::{Gust, SimConfig, VehicleState};
use crate::textio::{fmt_fixed, key_values, write_text};
use crate::vo::{gen_scene, run_odometry, VoRun, VoScene};
use crate::{RefPoint, Vec3};

/// A flight counts as arrived once within this distance of the goal, m.
pub const ARRIVAL_RADIUS: f64 = 0.3;
/// Hover time appended after a planned trajectory, s.
const SETTLE_TIME: f64 = 3.0;

/// Ordered metric entries, rendered one `key=value` per line.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metrics {
    entries: Vec<(String, String)>,
}

impl Metrics {
    pub fn push(&mut self, key: impl Into<String>, v: f64) {
        self.entries.push((key.into(), fmt_fixed(v)));
    }

    pub fn push_count(&mut self, key: impl Into<String>, n: usize) {
        self.entries.push((key.into(), n.to_string()));
    }

    pub fn push_text(&mut self, key: impl Into<String>, v: impl Into<String>) {
        self.entries.push((key.into(), v.into()));
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .and_then(|(_, v)| v.parse().ok())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        key_values(&self.entries)
    }

    pub fn confusion(&mut self, prefix: &str, c: &CollisionConfusion, mcc: f64) {
        let p = c.percentages();
        self.push(format!("{prefix}_mcc"), mcc);
        self.push(format!("{prefix}_correct_collision_pct"), p[0]);
        self.push(format!("{prefix}_missed_collision_pct"), p[1]);
        self.push(format!("{prefix}_correct_free_pct"), p[2]);
        self.push(format!("{prefix}_false_collision_pct"), p[3]);
    }

    pub fn rel_errors(&mut self, r: &RelErrorReport) {
        for (d, e) in SEGMENT_LENGTHS.iter().zip(&r.errors) {
            if let Some(e) = e {
                self.push(format!("rel_error_{d}m_pct"), *e);
            }
        }
        self.push("rel_error_avg_pct", r.average);
        self.push_text("rel_error_complete", r.complete.to_string());
    }
}

pub fn flight_setup(sim: &SimConfig, ctrl: &ControllerConfig, initial: VehicleState, seed: u64) -> Result<FlightSetup> {
    let mut setup = FlightSetup::new(sim.clone(), initial, seed);
    setup.gains = ControllerGains::place(ctrl.poles, ctrl.pi)?;
    Ok(setup)
}

/// Hover or waypoint flight, optionally with a wind step.
pub fn simulate(cfg: &ScenarioConfig) -> Result<(FlightLog, Metrics)> {
    let s = &cfg.simulate;
    if !(s.duration > 0.0) {
        return Err(Error::Parameter("simulation duration must be positive".into()));
    }
    let mut sim = cfg.sim.clone();
    if let Some(w) = s.wind_step {
        sim.wind.gusts.push(Gust {
            start: w.at,
            duration: (s.duration - w.at).max(0.0) + 1.0,
            velocity: w.velocity,
        });
    }
    let hover = Vec3::from(s.hover);
    let spline = if s.waypoints.is_empty() {
        None
    } else {
        let wp: Vec<TimedWaypoint<f64>> = s
            .waypoints
            .iter()
            .map(|w| TimedWaypoint::new(Vec3::new(w[0], w[1], w[2]), w[3], w[4]))
            .collect();
        Some(fit_spline(&wp)?)
    };
    let start = match &spline {
        Some(sp) => sp.eval(sp.start_time()).position,
        None => hover,
    };
    let setup = flight_setup(
        &sim,
        &cfg.controller,
        VehicleState::at_rest(start + Vec3::from(s.offset)),
        cfg.seed,
    )?;
    let reference = |t: f64| match &spline {
        Some(sp) => sp.eval(t),
        None => RefPoint::hold(hover, 0.0, t),
    };
    let log = fly(&setup, &reference, s.duration)?;
    let fm = flight_metrics(&log, s.settle, s.duration, s.wind_step.map(|w| w.at))?;
    let mut m = Metrics::default();
    m.push_text("scenario", "simulate");
    m.push("position_rms_m", fm.position_rms);
    m.push("angular_rate_rms_rad_s", fm.angular_rate_rms);
    if s.wind_step.is_some() {
        match fm.recovery_time {
            Some(t) => m.push("recovery_time_s", t),
            None => m.push_text("recovery_time_s", "none"),
        }
    }
    let imax = log.control.iter().map(|c| c.output.integral.amax()).fold(0.0, f64::max);
    m.push("integral_max", imax);
    m.push_count("corrections_applied", log.corrections.0);
    m.push_count("corrections_gated", log.corrections.1);
    m.push_count("corrections_stale", log.corrections.2);
    Ok((log, m))
}

/// Flown execution of a planned path.
#[derive(Clone, Debug)]
pub struct PathFlight {
    pub log: FlightLog,
    /// s; `None` when the goal was never reached.
    pub arrival_time: Option<f64>,
    /// Flown distance over the arrival time, m/s.
    pub average_speed: f64,
    pub peak_speed: f64,
    /// Samples where the vehicle sphere met a blocked voxel.
    pub collisions: usize,
    /// Smallest distance to a blocked voxel center along the flight, m.
    pub min_distance: f64,
}

/// Fits the spline through the timed path and flies it from rest.
pub fn fly_path(
    path: &PlannedPath,
    grid: &OccupancyGrid,
    prox: &ProximityMap,
    vehicle_radius: f64,
    sim: &SimConfig,
    ctrl: &ControllerConfig,
    seed: u64,
) -> Result<PathFlight> {
    let spline = fit_spline(&timed_waypoints(path, 0.0))?;
    let start = path.waypoints[0];
    let goal = *path.waypoints.last().unwrap_or(&start);
    let setup = flight_setup(sim, ctrl, VehicleState::at_rest(start), seed)?;
    let log = fly(&setup, &|t| spline.eval(t), spline.end_time() + SETTLE_TIME)?;
    let dt = sim.timing.imu_period();
    let arrive = log
        .truth
        .iter()
        .position(|s| (s.pose.position - goal).norm() < ARRIVAL_RADIUS);
    let arrival_time = arrive.map(|i| (i + 1) as f64 * dt);
    let average_speed = match arrive {
        Some(i) if i > 0 => {
            let mut d = (log.truth[0].pose.position - start).norm();
            for w in log.truth[..=i].windows(2) {
                d += (w[1].pose.position - w[0].pose.position).norm();
            }
            d / ((i + 1) as f64 * dt)
        }
        _ => 0.0,
    };
    let peak_speed = log.truth.iter().map(|s| s.twist.linear.norm()).fold(0.0, f64::max);
    let collisions = log
        .truth
        .iter()
        .filter(|s| sphere_collides(grid, &s.pose.position, vehicle_radius))
        .count();
    let min_distance = log
        .truth
        .iter()
        .map(|s| prox.distance(&s.pose.position))
        .fold(f64::INFINITY, f64::min);
    Ok(PathFlight {
        log,
        arrival_time,
        average_speed,
        peak_speed,
        collisions,
        min_distance,
    })
}

#[derive(Clone, Debug)]
pub struct PlanOutcome {
    pub grid: OccupancyGrid,
    pub path: PlannedPath,
    /// Proximity map and roadmap construction, s.
    pub setup_seconds: f64,
    /// Query, shortening and speed plan, s.
    pub plan_seconds: f64,
    pub flight: Option<PathFlight>,
}

fn plan_on_grid(
    grid: OccupancyGrid,
    pc: &PlanSettings,
    sim: &SimConfig,
    ctrl: &ControllerConfig,
    seed: u64,
) -> Result<PlanOutcome> {
    let t = Instant::now();
    let prox = build_proximity_map(&grid, pc.clamp)?;
    let clear = Clearance {
        prox: &prox,
        radius: pc.radius,
        weights: pc.weights,
    };
    let rm_cfg = RoadmapConfig {
        seed,
        ..pc.roadmap.clone()
    };
    let rm = build_roadmap(&clear, grid.origin(), grid.max_corner(), &rm_cfg)?;
    let setup_seconds = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let path = plan_route(&rm, &clear, pc.start, pc.goal, &pc.route)?;
    let plan_seconds = t.elapsed().as_secs_f64();
    let flight = if pc.fly {
        Some(fly_path(&path, &grid, &prox, pc.vehicle_radius, sim, ctrl, seed)?)
    } else {
        None
    };
    Ok(PlanOutcome {
        grid,
        path,
        setup_seconds,
        plan_seconds,
        flight,
    })
}

struct PlanSettings {
    clamp: f64,
    radius: f64,
    vehicle_radius: f64,
    weights: crate::planner::CostWeights,
    roadmap: RoadmapConfig,
    route: RouteConfig,
    start: Vec3,
    goal: Vec3,
    fly: bool,
}

/// Plans on the configured map (the industrial hall by default) and flies
/// the result.
pub fn plan(cfg: &PlanConfig, sim: &SimConfig, ctrl: &ControllerConfig, seed: u64) -> Result<PlanOutcome> {
    let grid = match &cfg.map {
        Some(p) => read_grid(p)?,
        None => IndustrialWorld::generate(&cfg.world)?.to_grid(cfg.world.resolution)?,
    };
    let settings = PlanSettings {
        clamp: cfg.clamp,
        radius: cfg.radius,
        vehicle_radius: cfg.vehicle_radius,
        weights: cfg.weights,
        roadmap: cfg.roadmap.clone(),
        route: cfg.route,
        start: Vec3::from(cfg.start),
        goal: Vec3::from(cfg.goal),
        fly: cfg.fly,
    };
    plan_on_grid(grid, &settings, sim, ctrl, seed)
}

fn path_metrics(m: &mut Metrics, p: &PlanOutcome) {
    m.push_count("path_waypoints", p.path.waypoints.len());
    m.push("path_length_m", p.path.length());
    m.push("path_cost", p.path.cost);
    m.push("path_duration_s", p.path.duration());
    m.push("planned_average_speed_m_s", p.path.length() / p.path.duration());
    if let Some(f) = &p.flight {
        match f.arrival_time {
            Some(t) => m.push("arrival_time_s", t),
            None => m.push_text("arrival_time_s", "none"),
        }
        m.push("average_speed_m_s", f.average_speed);
        m.push("peak_speed_m_s", f.peak_speed);
        m.push_count("collisions", f.collisions);
        m.push("min_obstacle_distance_m", f.min_distance);
    }
}

#[derive(Clone, Debug)]
pub struct MapOutcome {
    pub scene: RoomScene,
    pub ground_truth: OccupancyGrid,
    pub sparse: SparseMap,
    pub dense: OccupancyGrid,
    pub dense_seconds: f64,
    pub sparse_eval: (CollisionConfusion, f64),
    pub dense_eval: (CollisionConfusion, f64),
}

/// Sparse pipeline and dense baseline on the room scene, both scored
/// against the ground truth.
pub fn map_room(cfg: &MapConfig) -> Result<MapOutcome> {
    let scene = RoomScene::generate(&cfg.room)?;
    let frame = scene.grid_frame()?;
    let ground_truth = scene.ground_truth()?;
    let sparse = sparse_pipeline(&scene.keyframes, &cfg.weights, &frame)?;
    let scans: Vec<_> = scene
        .keyframes
        .iter()
        .map(|k| (k.pose, scene.range_scan(&k.pose)))
        .collect();
    let (dense, dense_seconds) = dense_baseline(&scans, &frame)?;
    let sparse_eval = mcc_eval(&ground_truth, &sparse.grid, &cfg.mcc)?;
    let dense_eval = mcc_eval(&ground_truth, &dense, &cfg.mcc)?;
    Ok(MapOutcome {
        scene,
        ground_truth,
        sparse,
        dense,
        dense_seconds,
        sparse_eval,
        dense_eval,
    })
}

fn map_metrics(m: &mut Metrics, o: &MapOutcome) {
    m.push_count("keyframes", o.scene.keyframes.len());
    m.push_count("sparse_points", o.scene.keyframes.iter().map(|k| k.points.len()).sum());
    m.confusion("sparse", &o.sparse_eval.0, o.sparse_eval.1);
    m.confusion("dense", &o.dense_eval.0, o.dense_eval.1);
}

pub fn visual_odometry(cfg: &VoScenarioConfig, seed: u64) -> Result<(VoScene, VoRun, RelErrorReport)> {
    let scene = gen_scene(&cfg.scene, &cfg.calib, seed)?;
    let run = run_odometry(&scene, &cfg.odometry, seed)?;
    let report = rel_trans_error(&scene.poses, &run.poses)?;
    Ok((scene, run, report))
}

#[derive(Clone, Debug)]
pub struct MissionOutcome {
    pub map: MapOutcome,
    pub plan: PlanOutcome,
    /// Flight samples colliding with the ground-truth room.
    pub truth_collisions: usize,
}

/// Maps the room with the sparse pipeline, plans on the reconstruction and
/// flies the plan; the flight is checked against the ground truth.
pub fn full_mission(cfg: &ScenarioConfig) -> Result<MissionOutcome> {
    let map = map_room(&cfg.map)?;
    let mc = &cfg.mission;
    let settings = PlanSettings {
        clamp: 3.0,
        radius: mc.radius,
        vehicle_radius: mc.vehicle_radius,
        weights: cfg.plan.weights,
        roadmap: mc.roadmap.clone(),
        route: mc.route,
        start: Vec3::from(mc.start),
        goal: Vec3::from(mc.goal),
        fly: true,
    };
    let plan = plan_on_grid(map.sparse.grid.clone(), &settings, &cfg.sim, &cfg.controller, cfg.seed)?;
    let truth_collisions = plan.flight.as_ref().map_or(0, |f| {
        f.log
            .truth
            .iter()
            .filter(|s| sphere_collides(&map.ground_truth, &s.pose.position, mc.vehicle_radius))
            .count()
    });
    Ok(MissionOutcome {
        map,
        plan,
        truth_collisions,
    })
}

fn write_flight(out: &Path, log: &FlightLog) -> Result<()> {
    write_text(&out.join("truth.csv"), &trajectory_to_csv(&log.truth_poses()))?;
    write_text(&out.join("estimate.csv"), &estimates_to_csv(&log.estimates))?;
    write_text(&out.join("control.csv"), &control_log_to_csv(&log.control))?;
    write_text(&out.join("imu.csv"), &log.imu_csv())
}

/// Runs the configured pipeline, writes its artifacts and `metrics.txt`
/// into `out`, and returns the metrics. Wall-clock timings go to
/// `timing.txt` so the metrics stay reproducible.
pub fn run_scenario(cfg: &ScenarioConfig, out: &Path) -> Result<Metrics> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut m = Metrics::default();
    let mut timing = Metrics::default();
    match cfg.kind {
        ScenarioKind::Simulate => {
            let (log, sm) = simulate(cfg)?;
            write_flight(out, &log)?;
            m = sm;
        }
        ScenarioKind::Plan => {
            let p = plan(&cfg.plan, &cfg.sim, &cfg.controller, cfg.seed)?;
            m.push_text("scenario", "plan");
            path_metrics(&mut m, &p);
            write_text(&out.join("path.csv"), &path_to_csv(&p.path))?;
            if let Some(f) = &p.flight {
                write_flight(out, &f.log)?;
            }
            timing.push("setup_s", p.setup_seconds);
            timing.push("plan_s", p.plan_seconds);
        }
        ScenarioKind::Map => {
            let o = map_room(&cfg.map)?;
            m.push_text("scenario", "map");
            map_metrics(&mut m, &o);
            write_text(&out.join("ground_truth.grid"), &grid_to_text(&o.ground_truth))?;
            write_text(&out.join("sparse.grid"), &grid_to_text(&o.sparse.grid))?;
            write_text(&out.join("dense.grid"), &grid_to_text(&o.dense))?;
            timing.push("sparse_s", o.sparse.seconds);
            timing.push("dense_s", o.dense_seconds);
        }
        ScenarioKind::Vo => {
            let (scene, run, report) = visual_odometry(&cfg.vo, cfg.seed)?;
            m.push_text("scenario", "vo");
            m.rel_errors(&report);
            m.push_count("held_frames", run.held.len());
            let n = run.inliers.len().max(1) as f64;
            m.push("mean_quads", run.quads.iter().sum::<usize>() as f64 / n);
            m.push("mean_inliers", run.inliers.iter().sum::<usize>() as f64 / n);
            write_text(&out.join("trajectory.csv"), &trajectory_to_csv(&run.poses))?;
            write_text(&out.join("ground_truth.csv"), &trajectory_to_csv(&scene.poses))?;
            write_text(&out.join("timing.csv"), &run.timing_csv())?;
        }
        ScenarioKind::FullMission => {
            let o = full_mission(cfg)?;
            m.push_text("scenario", "full-mission");
            map_metrics(&mut m, &o.map);
            path_metrics(&mut m, &o.plan);
            m.push_count("truth_collisions", o.truth_collisions);
            write_text(&out.join("sparse.grid"), &grid_to_text(&o.map.sparse.grid))?;
            write_text(&out.join("path.csv"), &path_to_csv(&o.plan.path))?;
            if let Some(f) = &o.plan.flight {
                write_flight(out, &f.log)?;
            }
            timing.push("sparse_s", o.map.sparse.seconds);
            timing.push("plan_s", o.plan.plan_seconds);
        }
    }
    m.push_text("seed", cfg.seed.to_string());
    write_text(&out.join("metrics.txt"), &m.to_text())?;
    if !timing.entries().is_empty() {
        write_text(&out.join("timing.txt"), &timing.to_text())?;
    }
    Ok(m)
}

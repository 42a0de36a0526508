//! Mission configuration read from XML, and the serial/parallel mission
//! runner shared by the `plan` and `bench` commands.
//!
//! The document layout is described in `docs/mission-schema.md`. Every
//! element and attribute is optional; omitted values take the defaults of
//! the corresponding Rust types. Unknown elements or attributes are errors.

use std::path::Path;
use std::time::{Duration, Instant};

use roxmltree::{Document, Node};
use thiserror::Error;

use crate::cost::{CostModel, CostParamError, IntegrationParams, SerialEvaluator, VehicleParams};
use crate::engine::{EngineConfig, EngineError, Task, WorkerPool};
use crate::grid::{build_grid, Graph, GridError, GridSpec, TerminalRole};
use crate::ocean::{FlowEnvironment, FlowError, FlowMode, JetParams, SurfaceCurrentParams};
use crate::profiles::{generate_dive_profiles, DiveProfileParams, ProfileError};
use crate::search::{plan_with_options, PathResult, SearchError, SearchOptions, SearchStats};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed mission document: {0}")]
    Xml(#[from] roxmltree::Error),

    #[error("<{element}>: {message}")]
    Schema { element: String, message: String },

    #[error("<{element}> `{field}`: {reason}")]
    Invalid {
        element: &'static str,
        field: String,
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecutionMode {
    #[default]
    Serial,
    Parallel,
}

impl ExecutionMode {
    pub fn name(&self) -> &'static str {
        match self {
            ExecutionMode::Serial => "serial",
            ExecutionMode::Parallel => "parallel",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionConfig {
    pub env: FlowEnvironment,
    pub vehicle: VehicleParams,
    pub integration: IntegrationParams,
    pub grid: GridSpec,
    pub profiles: DiveProfileParams,
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub t0: f64,
    pub engine: EngineConfig,
    pub mode: ExecutionMode,
    /// Put workers to sleep during serial phases.
    pub auto_sleep: bool,
}

impl Default for MissionConfig {
    fn default() -> Self {
        Self {
            env: FlowEnvironment::default(),
            vehicle: VehicleParams::default(),
            integration: IntegrationParams::default(),
            grid: GridSpec::default(),
            profiles: DiveProfileParams::default(),
            start: [0.2, 0.0],
            goal: [7.8, 0.0],
            t0: 0.0,
            engine: EngineConfig::default(),
            mode: ExecutionMode::Serial,
            auto_sleep: false,
        }
    }
}

impl MissionConfig {
    /// Checks every component invariant, naming the offending element.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.env.jet.validate().map_err(|e| flow_err("jet", e))?;
        self.env.surface.validate().map_err(|e| flow_err("surface", e))?;
        self.env.validate().map_err(|e| flow_err("uniform", e))?;
        self.vehicle.validate().map_err(|e| cost_err("vehicle", e))?;
        self.integration.validate().map_err(|e| cost_err("integration", e))?;
        self.grid.validate().map_err(grid_err)?;
        generate_dive_profiles(&self.profiles).map_err(profile_err)?;
        for (element, [x, y]) in [("start", self.start), ("goal", self.goal)] {
            if !x.is_finite() || !y.is_finite() || !self.grid.contains(x, y) {
                return Err(ConfigError::Invalid {
                    element,
                    field: "x,y".into(),
                    reason: format!("({x}, {y}) lies outside the grid bounding box"),
                });
            }
        }
        if !self.t0.is_finite() {
            return Err(ConfigError::Invalid {
                element: "departure",
                field: "t0".into(),
                reason: format!("must be finite, got {}", self.t0),
            });
        }
        self.engine.validate().map_err(|e| ConfigError::Invalid {
            element: "engine",
            field: "workers".into(),
            reason: e.to_string(),
        })?;
        Ok(())
    }
}

fn flow_err(element: &'static str, e: FlowError) -> ConfigError {
    let (field, reason) = match e {
        FlowError::InvalidParameter { name, reason } => (name.to_string(), reason),
        other => (String::new(), other.to_string()),
    };
    ConfigError::Invalid { element, field, reason }
}

fn cost_err(element: &'static str, e: CostParamError) -> ConfigError {
    let CostParamError::Invalid { field, reason } = e;
    ConfigError::Invalid {
        element,
        field: field.into(),
        reason,
    }
}

fn grid_err(e: GridError) -> ConfigError {
    match e {
        GridError::InvalidSpec { field, reason } => ConfigError::Invalid {
            element: "grid",
            field: field.into(),
            reason,
        },
        other => ConfigError::Invalid {
            element: "grid",
            field: "h".into(),
            reason: other.to_string(),
        },
    }
}

fn profile_err(e: ProfileError) -> ConfigError {
    match e {
        ProfileError::InvalidParameter { field, reason } => ConfigError::Invalid {
            element: "profiles",
            field: field.into(),
            reason,
        },
        other => ConfigError::Invalid {
            element: "profiles",
            field: "d_min_range".into(),
            reason: other.to_string(),
        },
    }
}

pub fn parse_mission(path: impl AsRef<Path>) -> Result<MissionConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_mission_str(&text)
}

pub fn parse_mission_str(text: &str) -> Result<MissionConfig, ConfigError> {
    let doc = Document::parse(text)?;
    let root = doc.root_element();
    if root.tag_name().name() != "mission" {
        return Err(schema(root.tag_name().name(), "root element must be <mission>"));
    }
    check_attrs(root, &[])?;
    let mut cfg = MissionConfig::default();
    let mut seen: Vec<&str> = Vec::new();

    for child in root.children().filter(Node::is_element) {
        let name = child.tag_name().name();
        if seen.contains(&name) {
            return Err(schema(name, "element may appear only once"));
        }
        seen.push(name);
        match name {
            "flow" => parse_flow(child, &mut cfg.env)?,
            "vehicle" => {
                let mut a = Attrs::new(child, &["v_bf", "w_vert"])?;
                cfg.vehicle.v_bf = a.f64("v_bf", cfg.vehicle.v_bf)?;
                cfg.vehicle.w_vert = a.f64("w_vert", cfg.vehicle.w_vert)?;
                no_children(child)?;
            }
            "integration" => {
                let mut a = Attrs::new(child, &["dt", "max_steps", "eps_speed"])?;
                cfg.integration.dt = a.f64("dt", cfg.integration.dt)?;
                cfg.integration.max_steps = a.parse("max_steps", cfg.integration.max_steps)?;
                cfg.integration.eps_speed = a.f64("eps_speed", cfg.integration.eps_speed)?;
                no_children(child)?;
            }
            "grid" => {
                let mut a = Attrs::new(child, &["x_min", "x_max", "y_min", "y_max", "h", "sector_order"])?;
                let g = &mut cfg.grid;
                g.x_min = a.f64("x_min", g.x_min)?;
                g.x_max = a.f64("x_max", g.x_max)?;
                g.y_min = a.f64("y_min", g.y_min)?;
                g.y_max = a.f64("y_max", g.y_max)?;
                g.h = a.f64("h", g.h)?;
                g.sector_order = a.parse("sector_order", g.sector_order)?;
                no_children(child)?;
            }
            "profiles" => {
                let mut a = Attrs::new(
                    child,
                    &[
                        "z_min",
                        "z_max",
                        "z_climb_to_max",
                        "d_min_range",
                        "n_climb_levels",
                        "n_dive_levels",
                    ],
                )?;
                let p = &mut cfg.profiles;
                p.z_min = a.f64("z_min", p.z_min)?;
                p.z_max = a.f64("z_max", p.z_max)?;
                p.z_climb_to_max = a.f64("z_climb_to_max", p.z_climb_to_max)?;
                p.d_min_range = a.f64("d_min_range", p.d_min_range)?;
                p.n_climb_levels = a.parse("n_climb_levels", p.n_climb_levels)?;
                p.n_dive_levels = a.parse("n_dive_levels", p.n_dive_levels)?;
                no_children(child)?;
            }
            "start" | "goal" => {
                let mut a = Attrs::new(child, &["x", "y"])?;
                let target = if name == "start" { &mut cfg.start } else { &mut cfg.goal };
                target[0] = a.f64("x", target[0])?;
                target[1] = a.f64("y", target[1])?;
                no_children(child)?;
            }
            "departure" => {
                let mut a = Attrs::new(child, &["t0"])?;
                cfg.t0 = a.f64("t0", cfg.t0)?;
                no_children(child)?;
            }
            "engine" => {
                let mut a = Attrs::new(child, &["mode", "workers", "sleep_poll_ms", "auto_sleep"])?;
                cfg.mode = match a.text("mode") {
                    None => cfg.mode,
                    Some("serial") => ExecutionMode::Serial,
                    Some("parallel") => ExecutionMode::Parallel,
                    Some(other) => return Err(schema("engine", format!("unknown mode `{other}`"))),
                };
                cfg.engine.n_workers = a.parse("workers", cfg.engine.n_workers)?;
                let ms: u64 = a.parse("sleep_poll_ms", cfg.engine.sleep_poll_interval.as_millis() as u64)?;
                cfg.engine.sleep_poll_interval = Duration::from_millis(ms);
                cfg.auto_sleep = a.parse("auto_sleep", cfg.auto_sleep)?;
                no_children(child)?;
            }
            other => return Err(schema(other, "unknown element")),
        }
    }

    cfg.validate()?;
    Ok(cfg)
}

fn parse_flow(node: Node, env: &mut FlowEnvironment) -> Result<(), ConfigError> {
    let mut a = Attrs::new(node, &["mode"])?;
    let mode = a.text("mode").unwrap_or(env.mode.name()).to_string();
    let mut uniform = (0.0, 0.0);
    let mut seen: Vec<&str> = Vec::new();

    for child in node.children().filter(Node::is_element) {
        let name = child.tag_name().name();
        if seen.contains(&name) {
            return Err(schema(name, "element may appear only once"));
        }
        seen.push(name);
        match name {
            "jet" => {
                let mut a = Attrs::new(child, &["b0", "epsilon", "omega", "theta", "k", "c"])?;
                let j: &mut JetParams = &mut env.jet;
                j.b0 = a.f64("b0", j.b0)?;
                j.epsilon = a.f64("epsilon", j.epsilon)?;
                j.omega = a.f64("omega", j.omega)?;
                j.theta = a.f64("theta", j.theta)?;
                j.k = a.f64("k", j.k)?;
                j.c = a.f64("c", j.c)?;
                no_children(child)?;
            }
            "surface" => {
                let mut a = Attrs::new(child, &["w0", "d", "z_decay"])?;
                let s: &mut SurfaceCurrentParams = &mut env.surface;
                s.w0 = a.f64("w0", s.w0)?;
                s.d = a.f64("d", s.d)?;
                s.z_decay = a.f64("z_decay", s.z_decay)?;
                no_children(child)?;
            }
            "uniform" => {
                let mut a = Attrs::new(child, &["u", "v"])?;
                uniform = (a.f64("u", 0.0)?, a.f64("v", 0.0)?);
                no_children(child)?;
            }
            other => return Err(schema(other, "unknown element inside <flow>")),
        }
    }

    env.mode = match mode.as_str() {
        "full" => FlowMode::Full,
        "jet" => FlowMode::JetOnly,
        "surface" => FlowMode::SurfaceOnly,
        "uniform" => FlowMode::Uniform {
            u: uniform.0,
            v: uniform.1,
        },
        "still" => FlowMode::StillWater,
        other => return Err(schema("flow", format!("unknown mode `{other}`"))),
    };
    Ok(())
}

fn schema(element: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Schema {
        element: element.to_string(),
        message: message.into(),
    }
}

fn check_attrs(node: Node, allowed: &[&str]) -> Result<(), ConfigError> {
    for attr in node.attributes() {
        if !allowed.contains(&attr.name()) {
            return Err(schema(
                node.tag_name().name(),
                format!("unknown attribute `{}`", attr.name()),
            ));
        }
    }
    Ok(())
}

fn no_children(node: Node) -> Result<(), ConfigError> {
    match node.children().find(Node::is_element) {
        Some(child) => Err(schema(
            node.tag_name().name(),
            format!("unexpected child <{}>", child.tag_name().name()),
        )),
        None => Ok(()),
    }
}

struct Attrs<'a, 'input> {
    node: Node<'a, 'input>,
}

impl<'a, 'input> Attrs<'a, 'input> {
    fn new(node: Node<'a, 'input>, allowed: &[&str]) -> Result<Self, ConfigError> {
        check_attrs(node, allowed)?;
        Ok(Self { node })
    }

    fn text(&mut self, name: &str) -> Option<&'a str> {
        self.node.attribute(name)
    }

    fn parse<T: std::str::FromStr>(&mut self, name: &str, default: T) -> Result<T, ConfigError> {
        match self.node.attribute(name) {
            None => Ok(default),
            Some(raw) => raw.trim().parse().map_err(|_| {
                schema(
                    self.node.tag_name().name(),
                    format!("attribute `{name}` has unparsable value `{raw}`"),
                )
            }),
        }
    }

    fn f64(&mut self, name: &str, default: f64) -> Result<f64, ConfigError> {
        self.parse(name, default)
    }
}

#[derive(Debug, Error)]
pub enum MissionError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("terminal placement failed: {0}")]
    Grid(#[from] GridError),

    #[error(transparent)]
    Search(#[from] SearchError),

    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Graph with terminals plus the cost model for a mission.
#[derive(Debug, Clone)]
pub struct PreparedMission {
    pub graph: Graph,
    pub model: CostModel,
}

pub fn prepare(config: &MissionConfig) -> Result<PreparedMission, MissionError> {
    let profiles = generate_dive_profiles(&config.profiles).map_err(profile_err)?;
    let mut graph = build_grid(&config.grid)?;
    graph.insert_terminal(config.start[0], config.start[1], TerminalRole::Start)?;
    graph.insert_terminal(config.goal[0], config.goal[1], TerminalRole::Goal)?;
    Ok(PreparedMission {
        graph,
        model: CostModel {
            profiles,
            env: config.env,
            vehicle: config.vehicle,
            integration: config.integration,
        },
    })
}

#[derive(Debug, Clone)]
pub struct MissionRun {
    pub path: PathResult,
    pub stats: SearchStats,
    pub mission: PreparedMission,
    /// Everything from pool startup (if any) to teardown.
    pub total: Duration,
    /// The search call alone.
    pub search: Duration,
}

/// Plans the mission once. `Parallel` starts a pool of `n_workers` (from
/// the config when `None`) and honours the auto-sleep policy.
pub fn run_mission(
    config: &MissionConfig,
    mode: ExecutionMode,
    n_workers: Option<usize>,
) -> Result<MissionRun, MissionError> {
    let started = Instant::now();
    match mode {
        ExecutionMode::Serial => {
            let mission = prepare(config)?;
            let search_started = Instant::now();
            let (path, stats) = plan_with_options(
                &mission.graph,
                config.t0,
                &mission.model,
                &mut SerialEvaluator,
                SearchOptions::default(),
            )?;
            let search = search_started.elapsed();
            Ok(MissionRun {
                path,
                stats,
                mission,
                total: started.elapsed(),
                search,
            })
        }
        ExecutionMode::Parallel => {
            let engine = EngineConfig {
                n_workers: n_workers.unwrap_or(config.engine.n_workers),
                ..config.engine
            };
            let mut pool = WorkerPool::<Task>::start(engine)?;
            if config.auto_sleep {
                pool.sleep_all();
            }
            let mission = prepare(config)?;
            if config.auto_sleep {
                pool.wake(mission.model.profiles.len());
            }
            let search_started = Instant::now();
            let outcome = plan_with_options(
                &mission.graph,
                config.t0,
                &mission.model,
                &mut pool,
                SearchOptions::default(),
            );
            let search = search_started.elapsed();
            if config.auto_sleep {
                pool.sleep_all();
            }
            pool.shutdown();
            let (path, stats) = outcome?;
            Ok(MissionRun {
                path,
                stats,
                mission,
                total: started.elapsed(),
                search,
            })
        }
    }
}

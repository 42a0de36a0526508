//! Edge travel time for a glider flying a sawtooth dive profile through the
//! current field, and the minimum over a profile set.
//!
//! The vehicle holds its track by crabbing into the cross-track current, so
//! with along-track current `c_par` and cross-track current `c_perp` the
//! ground speed is `c_par + sqrt(v_bf² - c_perp²)`. Horizontal speed through
//! the water does not depend on the vertical motion; depth only selects
//! which layer of the current field is sampled.

use thiserror::Error;

use crate::engine::{EngineError, Task};
use crate::grid::Segment;
use crate::ocean::{FlowEnvironment, FlowSample};
use crate::profiles::DiveProfile;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    /// Horizontal speed through the water.
    pub v_bf: f64,
    /// Vertical rate in metres per unit time.
    pub w_vert: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            v_bf: 0.5,
            w_vert: 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationParams {
    pub dt: f64,
    pub max_steps: u64,
    /// Ground speeds at or below this are treated as stalled.
    pub eps_speed: f64,
}

impl Default for IntegrationParams {
    fn default() -> Self {
        Self {
            dt: 0.01,
            max_steps: 1_000_000,
            eps_speed: 1e-6,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostParamError {
    #[error("invalid cost parameter `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), CostParamError> {
        positive("v_bf", self.v_bf)?;
        positive("w_vert", self.w_vert)
    }
}

impl IntegrationParams {
    pub fn validate(&self) -> Result<(), CostParamError> {
        positive("dt", self.dt)?;
        if self.max_steps == 0 {
            return Err(CostParamError::Invalid {
                field: "max_steps",
                reason: "must be > 0".into(),
            });
        }
        if !(self.eps_speed >= 0.0 && self.eps_speed.is_finite()) {
            return Err(CostParamError::Invalid {
                field: "eps_speed",
                reason: format!("must be finite and >= 0, got {}", self.eps_speed),
            });
        }
        Ok(())
    }
}

fn positive(field: &'static str, v: f64) -> Result<(), CostParamError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CostParamError::Invalid {
            field,
            reason: format!("must be finite and > 0, got {v}"),
        })
    }
}

/// Why an edge cannot be flown with a given profile and departure time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Infeasible {
    /// Cross-track current at least as strong as the vehicle speed.
    CrossCurrent {
        t: f64,
        c_perp: f64,
    },
    /// Ground speed at or below `eps_speed`.
    Stalled {
        t: f64,
        ground_speed: f64,
    },
    StepLimit,
}

/// Travel time on success.
pub type Traversal = Result<f64, Infeasible>;

/// Depth of the sawtooth `t_rel` time units after leaving the edge origin.
/// Starts at `z_climb_to` heading down.
pub fn sawtooth_depth(t_rel: f64, profile: &DiveProfile, w_vert: f64) -> f64 {
    let amplitude = profile.amplitude();
    let leg = amplitude / w_vert;
    let phase = t_rel.rem_euclid(2.0 * leg);
    if phase <= leg {
        profile.z_climb_to + amplitude * (phase / leg)
    } else {
        profile.z_dive_to - amplitude * ((phase - leg) / leg)
    }
}

/// One integrator step, as emitted by [`trace_edge`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub t: f64,
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub current: FlowSample,
    pub ground_speed: f64,
}

fn integrate(
    segment: &Segment,
    t_start: f64,
    profile: &DiveProfile,
    env: &FlowEnvironment,
    vehicle: &VehicleParams,
    integ: &IntegrationParams,
    mut observe: impl FnMut(TraceStep),
) -> Traversal {
    let [dx, dy] = segment.direction;
    let v_sq = vehicle.v_bf * vehicle.v_bf;
    let mut s = 0.0;
    for step in 0..integ.max_steps {
        let elapsed = step as f64 * integ.dt;
        let t = t_start + elapsed;
        let z = sawtooth_depth(elapsed, profile, vehicle.w_vert);
        let [x, y] = segment.point_at(s);
        let current = env.sample(x, y, z, t);

        let c_par = current.u * dx + current.v * dy;
        let c_perp = current.v * dx - current.u * dy;
        if c_perp.abs() >= vehicle.v_bf {
            return Err(Infeasible::CrossCurrent { t, c_perp });
        }
        let ground_speed = c_par + (v_sq - c_perp * c_perp).sqrt();
        if ground_speed <= integ.eps_speed {
            return Err(Infeasible::Stalled { t, ground_speed });
        }
        observe(TraceStep {
            t,
            s,
            x,
            y,
            z,
            current,
            ground_speed,
        });

        let remaining = segment.length - s;
        let advance = ground_speed * integ.dt;
        if advance >= remaining {
            return Ok(elapsed + remaining / ground_speed);
        }
        s += advance;
    }
    Err(Infeasible::StepLimit)
}

/// Time to fly `segment` departing at `t_start` with `profile`.
pub fn traverse_edge(
    segment: &Segment,
    t_start: f64,
    profile: &DiveProfile,
    env: &FlowEnvironment,
    vehicle: &VehicleParams,
    integ: &IntegrationParams,
) -> Traversal {
    integrate(segment, t_start, profile, env, vehicle, integ, |_| {})
}

/// Like [`traverse_edge`] but also returns every integrator step plus the
/// arrival point.
pub fn trace_edge(
    segment: &Segment,
    t_start: f64,
    profile: &DiveProfile,
    env: &FlowEnvironment,
    vehicle: &VehicleParams,
    integ: &IntegrationParams,
) -> (Vec<TraceStep>, Traversal) {
    let mut steps = Vec::new();
    let outcome = integrate(segment, t_start, profile, env, vehicle, integ, |s| steps.push(s));
    if let (Ok(time), Some(last)) = (outcome, steps.last().copied()) {
        let [x, y] = segment.end();
        let t = t_start + time;
        let z = sawtooth_depth(time, profile, vehicle.w_vert);
        steps.push(TraceStep {
            t,
            s: segment.length,
            x,
            y,
            z,
            current: env.sample(x, y, z, t),
            ground_speed: last.ground_speed,
        });
    }
    (steps, outcome)
}

/// Everything besides the graph that determines edge costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    pub profiles: Vec<DiveProfile>,
    pub env: FlowEnvironment,
    pub vehicle: VehicleParams,
    pub integration: IntegrationParams,
}

impl CostModel {
    /// One self-contained task per profile, ids in profile order.
    pub fn tasks(&self, segment: &Segment, departure: f64) -> Vec<Task> {
        self.profiles
            .iter()
            .enumerate()
            .map(|(id, profile)| Task {
                id,
                segment: *segment,
                departure,
                profile: *profile,
                env: self.env,
                vehicle: self.vehicle,
                integration: self.integration,
            })
            .collect()
    }
}

/// How a batch of per-profile tasks gets evaluated.
pub trait ProfileEvaluator {
    /// Returns one outcome per task, in task order.
    fn evaluate(&mut self, tasks: Vec<Task>) -> Result<Vec<Traversal>, EngineError>;
}

/// Evaluates tasks one after another on the calling thread.
#[derive(Debug, Default, Clone, Copy)]
pub struct SerialEvaluator;

impl ProfileEvaluator for SerialEvaluator {
    fn evaluate(&mut self, tasks: Vec<Task>) -> Result<Vec<Traversal>, EngineError> {
        Ok(tasks.iter().map(Task::evaluate).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileChoice {
    pub index: usize,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeCostResult {
    /// Fastest feasible profile; `None` when every profile is infeasible.
    pub best: Option<ProfileChoice>,
    /// One entry per profile, aligned with profile indices.
    pub per_profile: Vec<Traversal>,
}

impl EdgeCostResult {
    /// Minimum feasible time, lowest index on ties.
    pub fn from_outcomes(per_profile: Vec<Traversal>) -> Self {
        let mut best: Option<ProfileChoice> = None;
        for (index, outcome) in per_profile.iter().enumerate() {
            if let Ok(time) = *outcome {
                if best.is_none_or(|b| time < b.time) {
                    best = Some(ProfileChoice { index, time });
                }
            }
        }
        Self { best, per_profile }
    }

    pub fn best_time(&self) -> Option<f64> {
        self.best.map(|b| b.time)
    }
}

/// Cost of flying `segment` from `t_start`: every profile is evaluated
/// through `evaluator` and the fastest one wins.
pub fn edge_cost(
    segment: &Segment,
    t_start: f64,
    model: &CostModel,
    evaluator: &mut dyn ProfileEvaluator,
) -> Result<EdgeCostResult, EngineError> {
    let tasks = model.tasks(segment, t_start);
    let outcomes = evaluator.evaluate(tasks)?;
    Ok(EdgeCostResult::from_outcomes(outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ocean::FlowMode;
    use crate::profiles::{generate_dive_profiles, DiveProfileParams};

    fn east(length: f64) -> Segment {
        Segment {
            origin: [0.0, 0.0],
            direction: [1.0, 0.0],
            length,
        }
    }

    fn profile(c: f64, d: f64) -> DiveProfile {
        DiveProfile {
            index: 0,
            z_climb_to: c,
            z_dive_to: d,
        }
    }

    #[test]
    fn sawtooth_turning_points() {
        let p = profile(10.0, 110.0);
        let w = 100.0;
        assert_eq!(sawtooth_depth(0.0, &p, w), 10.0);
        assert!((sawtooth_depth(1.0, &p, w) - 110.0).abs() < 1e-12);
        assert!((sawtooth_depth(2.0, &p, w) - 10.0).abs() < 1e-12);
        assert!((sawtooth_depth(0.5, &p, w) - 60.0).abs() < 1e-12);
        assert!((sawtooth_depth(1.5, &p, w) - 60.0).abs() < 1e-12);
        assert!((sawtooth_depth(2.25, &p, w) - 35.0).abs() < 1e-12);
        let q = profile(80.0 / 3.0, 200.0);
        let half = q.amplitude() / w;
        assert!((sawtooth_depth(half, &q, w) - 200.0).abs() < 1e-12);
        assert!((sawtooth_depth(2.0 * half, &q, w) - 80.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn still_water_time_is_length_over_speed() {
        let t = traverse_edge(
            &east(1.0),
            0.0,
            &profile(0.0, 200.0),
            &FlowEnvironment::still_water(),
            &VehicleParams::default(),
            &IntegrationParams::default(),
        )
        .unwrap();
        assert!((t - 2.0).abs() < 1e-9, "{t}");
    }

    #[test]
    fn uniform_along_track_current() {
        let t = traverse_edge(
            &east(1.0),
            3.0,
            &profile(0.0, 200.0),
            &FlowEnvironment::uniform(0.1, 0.0),
            &VehicleParams::default(),
            &IntegrationParams::default(),
        )
        .unwrap();
        assert!((t - 1.0 / 0.6).abs() < 1e-9, "{t}");
    }

    #[test]
    fn uniform_cross_current_with_crab_angle() {
        // |c_perp| = 0.3 leaves sqrt(0.25 - 0.09) = 0.4 along track
        let t = traverse_edge(
            &east(1.0),
            0.0,
            &profile(0.0, 200.0),
            &FlowEnvironment::uniform(0.0, 0.3),
            &VehicleParams::default(),
            &IntegrationParams::default(),
        )
        .unwrap();
        assert!((t - 2.5).abs() < 1e-9, "{t}");
    }

    #[test]
    fn strong_cross_current_is_infeasible() {
        let r = traverse_edge(
            &east(1.0),
            0.0,
            &profile(0.0, 200.0),
            &FlowEnvironment::uniform(0.0, 0.6),
            &VehicleParams::default(),
            &IntegrationParams::default(),
        );
        assert!(matches!(r, Err(Infeasible::CrossCurrent { .. })));
    }

    #[test]
    fn adverse_current_stalls() {
        let r = traverse_edge(
            &east(1.0),
            0.0,
            &profile(0.0, 200.0),
            &FlowEnvironment::uniform(-0.5, 0.0),
            &VehicleParams::default(),
            &IntegrationParams::default(),
        );
        assert!(matches!(r, Err(Infeasible::Stalled { .. })));
    }

    #[test]
    fn step_limit() {
        let integ = IntegrationParams {
            max_steps: 10,
            ..IntegrationParams::default()
        };
        let r = traverse_edge(
            &east(1.0),
            0.0,
            &profile(0.0, 200.0),
            &FlowEnvironment::still_water(),
            &VehicleParams::default(),
            &integ,
        );
        assert_eq!(r, Err(Infeasible::StepLimit));
    }

    #[test]
    fn adverse_current_monotonicity() {
        let mut last = 0.0;
        for i in 0..8 {
            let c = -0.05 * i as f64;
            let t = traverse_edge(
                &east(0.8),
                0.0,
                &profile(0.0, 200.0),
                &FlowEnvironment::uniform(c, 0.0),
                &VehicleParams::default(),
                &IntegrationParams::default(),
            )
            .unwrap();
            assert!(t > last);
            last = t;
        }
    }

    #[test]
    fn halving_dt_changes_still_water_time_by_at_most_dt() {
        for length in [0.4, 0.4 * 5f64.sqrt(), 1.0, 1.7] {
            let run = |dt: f64| {
                traverse_edge(
                    &east(length),
                    0.0,
                    &profile(0.0, 200.0),
                    &FlowEnvironment::still_water(),
                    &VehicleParams::default(),
                    &IntegrationParams {
                        dt,
                        ..IntegrationParams::default()
                    },
                )
                .unwrap()
            };
            let coarse = run(0.01);
            assert!((coarse - run(0.005)).abs() <= 0.01);
        }
    }

    #[test]
    fn depth_shielding_is_bit_exact() {
        let env = FlowEnvironment::default();
        let jet_only = env.with_mode(FlowMode::JetOnly);
        let seg = Segment {
            origin: [0.47, 0.9],
            direction: [1.0, 0.0],
            length: 0.4,
        };
        for t in [0.0, 2.0, 3.9, 6.1] {
            for p in [profile(15.0, 200.0), profile(80.0 / 3.0, 110.0), profile(40.0, 90.0)] {
                let a = traverse_edge(
                    &seg,
                    t,
                    &p,
                    &env,
                    &VehicleParams::default(),
                    &IntegrationParams::default(),
                );
                let b = traverse_edge(
                    &seg,
                    t,
                    &p,
                    &jet_only,
                    &VehicleParams::default(),
                    &IntegrationParams::default(),
                );
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn travel_time_lower_bound() {
        let env = FlowEnvironment::default();
        let seg = Segment {
            origin: [1.0, 0.0],
            direction: [0.6, 0.8],
            length: 0.4 * 5f64.sqrt(),
        };
        let vehicle = VehicleParams::default();
        for t0 in [0.0, 1.0, 4.0] {
            for p in [profile(0.0, 200.0), profile(40.0, 110.0)] {
                let (steps, outcome) = trace_edge(&seg, t0, &p, &env, &vehicle, &IntegrationParams::default());
                if let Ok(time) = outcome {
                    let c_max = steps.iter().map(|s| s.current.magnitude()).fold(0.0, f64::max);
                    assert!(time >= seg.length / (vehicle.v_bf + c_max));
                }
            }
        }
    }

    #[test]
    fn trace_ends_at_segment_end() {
        let seg = east(1.0);
        let (steps, outcome) = trace_edge(
            &seg,
            0.5,
            &profile(0.0, 200.0),
            &FlowEnvironment::still_water(),
            &VehicleParams::default(),
            &IntegrationParams::default(),
        );
        let time = outcome.unwrap();
        let last = steps.last().unwrap();
        assert_eq!(last.s, 1.0);
        assert_eq!(last.t, 0.5 + time);
        assert_eq!(steps[0].z, 0.0);
        assert!(steps.windows(2).all(|w| w[1].t > w[0].t && w[1].s > w[0].s));
    }

    #[test]
    fn edge_cost_single_and_still_water() {
        let profiles = generate_dive_profiles(&DiveProfileParams::default()).unwrap();
        let model = CostModel {
            profiles: profiles[..1].to_vec(),
            env: FlowEnvironment::default(),
            vehicle: VehicleParams::default(),
            integration: IntegrationParams::default(),
        };
        let r = edge_cost(&east(0.4), 1.0, &model, &mut SerialEvaluator).unwrap();
        assert_eq!(r.best.unwrap().index, 0);
        assert_eq!(r.per_profile.len(), 1);

        let model = CostModel {
            profiles,
            env: FlowEnvironment::still_water(),
            ..model
        };
        let r = edge_cost(&east(1.0), 1.0, &model, &mut SerialEvaluator).unwrap();
        assert_eq!(r.best.unwrap().index, 0);
        let first = r.per_profile[0].unwrap();
        assert!((first - 2.0).abs() < 1e-9);
        assert!(r.per_profile.iter().all(|t| *t == Ok(first)));
    }

    #[test]
    fn edge_cost_all_infeasible() {
        let model = CostModel {
            profiles: generate_dive_profiles(&DiveProfileParams::default()).unwrap(),
            env: FlowEnvironment::uniform(0.0, 0.7),
            vehicle: VehicleParams::default(),
            integration: IntegrationParams::default(),
        };
        let r = edge_cost(&east(1.0), 0.0, &model, &mut SerialEvaluator).unwrap();
        assert_eq!(r.best, None);
        assert!(r.per_profile.iter().all(Result::is_err));
    }

    #[test]
    fn best_choice_tie_breaks_to_lowest_index() {
        let r = EdgeCostResult::from_outcomes(vec![Err(Infeasible::StepLimit), Ok(2.0), Ok(1.5), Ok(1.5)]);
        assert_eq!(r.best, Some(ProfileChoice { index: 2, time: 1.5 }));
    }
}

//! Fixed-step integration and numerical checks of the conjugacy laws.
//!
//! The integrator is classical four-stage Runge-Kutta with a fixed step.
//! All stage arithmetic happens blockwise on the node-keyed representation,
//! never on a flattened vector. That choice carries a strong consequence:
//! pulling back a family along a fibration makes every domain node evaluate
//! the same expressions on the same bits as its image node, so one RK4 step
//! commutes with the pullback of points exactly, not just approximately.
//! The trajectory-level checks below exploit this and expect deviations at
//! rounding scale or literally zero.

use crate::graph::NodeId;
use crate::network::{NetworkMorphism, TotalPoint};
use crate::system::{pullback_family, ControlFamily, InterconnectedField, SystemError};
use crate::graph::FibrationWitness;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("step size must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("end time must be positive and finite, got {0}")]
    BadEndTime(f64),
    #[error("step size {h} exceeds end time {t_end}")]
    StepExceedsEndTime { h: f64, t_end: f64 },
    #[error("integration produced a non-finite value at step {step} (t = {time})")]
    NonFinite { step: usize, time: f64 },
    #[error("field network does not match the morphism side it is checked against")]
    NetworkMismatch,
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Network(#[from] crate::network::NetworkError),
    #[error(transparent)]
    Shape(#[from] crate::network::ShapeError),
}

/// Fixed-step integration plan. The step count is `round(t_end / h)`,
/// fixed once at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub h: f64,
    pub t_end: f64,
}

impl IntegratorConfig {
    pub fn new(h: f64, t_end: f64) -> Result<Self, DynamicsError> {
        if !(h.is_finite() && h > 0.0) {
            return Err(DynamicsError::BadStep(h));
        }
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(DynamicsError::BadEndTime(t_end));
        }
        if h > t_end {
            return Err(DynamicsError::StepExceedsEndTime { h, t_end });
        }
        Ok(IntegratorConfig { h, t_end })
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.h).round() as usize
    }
}

/// States at uniformly spaced times; `states[0]` is the initial condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<TotalPoint>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &TotalPoint {
        self.states.last().expect("a trajectory holds at least its initial state")
    }
}

/// One classical RK4 step of size `h` from `x`.
pub fn rk4_step(field: &InterconnectedField, x: &TotalPoint, h: f64) -> Result<TotalPoint, SystemError> {
    let k1 = field.eval(x)?;
    let k2 = field.eval(&x.add_scaled(&[(h / 2.0, &k1)]))?;
    let k3 = field.eval(&x.add_scaled(&[(h / 2.0, &k2)]))?;
    let k4 = field.eval(&x.add_scaled(&[(h, &k3)]))?;
    Ok(x.add_scaled(&[(h / 6.0, &k1), (h / 3.0, &k2), (h / 3.0, &k3), (h / 6.0, &k4)]))
}

/// Integrate from `x0`. Aborts with the step index if any state or stage
/// stops being finite.
pub fn rk4_integrate(
    field: &InterconnectedField,
    x0: &TotalPoint,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, DynamicsError> {
    field.network().check_point(x0)?;
    if !x0.is_finite() {
        return Err(DynamicsError::NonFinite { step: 0, time: 0.0 });
    }
    let steps = cfg.steps();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(x0.clone());
    for step in 1..=steps {
        let next = rk4_step(field, states.last().unwrap(), cfg.h)?;
        let time = step as f64 * cfg.h;
        if !next.is_finite() {
            return Err(DynamicsError::NonFinite { step, time });
        }
        times.push(time);
        states.push(next);
    }
    Ok(Trajectory { times, states })
}

/// How closely two vector fields commute with a pullback at sampled points.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugacyReport {
    pub samples: usize,
    pub seed: u64,
    pub max_residual: f64,
    /// Worst residual per domain node across all samples.
    pub per_node: BTreeMap<NodeId, f64>,
}

/// Check that pulling back points intertwines two interconnected fields:
/// at sampled codomain points x', compare the domain field at the pulled
/// back point against the pulled back codomain derivative.
pub fn check_fields_conjugate(
    phi: &NetworkMorphism,
    domain_field: &InterconnectedField,
    codomain_field: &InterconnectedField,
    samples: usize,
    seed: u64,
) -> Result<ConjugacyReport, DynamicsError> {
    if domain_field.network() != phi.domain() || codomain_field.network() != phi.codomain() {
        return Err(DynamicsError::NetworkMismatch);
    }
    let mut rng = crate::sample::Rng::new(seed);
    let mut per_node: BTreeMap<NodeId, f64> =
        phi.domain().graph().nodes().map(|n| (n.clone(), 0.0)).collect();
    let mut max_residual: f64 = 0.0;
    for _ in 0..samples {
        let x_cod = phi.codomain().sample_point(&mut rng);
        let lhs = domain_field.eval(&phi.pullback_point(&x_cod)?)?;
        let rhs = phi.pullback_tangent(&codomain_field.eval(&x_cod)?)?;
        for (node, dev) in lhs.per_node_max_abs_diff(&rhs) {
            let entry = per_node.get_mut(&node).unwrap();
            *entry = entry.max(dev);
            max_residual = max_residual.max(dev);
        }
    }
    Ok(ConjugacyReport { samples, seed, max_residual, per_node })
}

/// Pull the codomain family back along the fibration, interconnect both
/// sides, and measure how closely the commuting square holds at sampled
/// points. The residual is expected to vanish, since both sides evaluate
/// the same expressions on the same arguments.
pub fn check_vectorfield_conjugacy(
    phi: &NetworkMorphism,
    witness: &FibrationWitness,
    codomain_family: &ControlFamily,
    samples: usize,
    seed: u64,
) -> Result<ConjugacyReport, DynamicsError> {
    let pulled = pullback_family(phi, witness, codomain_family)?;
    let domain_field = InterconnectedField::new(phi.domain().clone(), pulled)?;
    let codomain_field = InterconnectedField::new(phi.codomain().clone(), codomain_family.clone())?;
    check_fields_conjugate(phi, &domain_field, &codomain_field, samples, seed)
}

/// Worst distance over time between the pushed-forward codomain trajectory
/// and the domain trajectory started at the pulled-back initial point.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiconjugacyReport {
    pub h: f64,
    pub t_end: f64,
    pub steps: usize,
    pub max_deviation: f64,
    pub time_of_max: f64,
}

/// Integrate the codomain field from `x0_cod` and the domain field from the
/// pulled-back start, then compare the pulled-back codomain states against
/// the domain states at every step.
pub fn check_trajectories_semiconjugate(
    phi: &NetworkMorphism,
    domain_field: &InterconnectedField,
    codomain_field: &InterconnectedField,
    x0_cod: &TotalPoint,
    cfg: &IntegratorConfig,
) -> Result<SemiconjugacyReport, DynamicsError> {
    if domain_field.network() != phi.domain() || codomain_field.network() != phi.codomain() {
        return Err(DynamicsError::NetworkMismatch);
    }
    let cod_traj = rk4_integrate(codomain_field, x0_cod, cfg)?;
    let x0_dom = phi.pullback_point(x0_cod)?;
    let dom_traj = rk4_integrate(domain_field, &x0_dom, cfg)?;
    let mut max_deviation: f64 = 0.0;
    let mut time_of_max = 0.0;
    for ((time, cod_state), dom_state) in
        cod_traj.times.iter().zip(&cod_traj.states).zip(&dom_traj.states)
    {
        let pushed = phi.pullback_point(cod_state)?;
        let dev = pushed.max_abs_diff(dom_state);
        if dev > max_deviation {
            max_deviation = dev;
            time_of_max = *time;
        }
    }
    Ok(SemiconjugacyReport {
        h: cfg.h,
        t_end: cfg.t_end,
        steps: cfg.steps(),
        max_deviation,
        time_of_max,
    })
}

/// As [`check_trajectories_semiconjugate`], with the domain dynamics taken
/// to be the pullback of the codomain family.
pub fn check_trajectory_semiconjugacy(
    phi: &NetworkMorphism,
    witness: &FibrationWitness,
    codomain_family: &ControlFamily,
    x0_cod: &TotalPoint,
    cfg: &IntegratorConfig,
) -> Result<SemiconjugacyReport, DynamicsError> {
    let pulled = pullback_family(phi, witness, codomain_family)?;
    let domain_field = InterconnectedField::new(phi.domain().clone(), pulled)?;
    let codomain_field = InterconnectedField::new(phi.codomain().clone(), codomain_family.clone())?;
    check_trajectories_semiconjugate(phi, &domain_field, &codomain_field, x0_cod, cfg)
}

/// Worst distance from the polydiagonal along a trajectory, including the
/// initial state. A start on the polydiagonal is expected to stay on it; a
/// start off it simply has its deviation reported, with no claim made.
#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub tol: f64,
    pub max_deviation: f64,
    pub time_of_max: f64,
    pub initial_deviation: f64,
    pub within_tol: bool,
}

pub fn check_polydiagonal_invariance(
    phi: &NetworkMorphism,
    field: &InterconnectedField,
    x0: &TotalPoint,
    cfg: &IntegratorConfig,
    tol: f64,
) -> Result<InvarianceReport, DynamicsError> {
    if field.network() != phi.domain() {
        return Err(DynamicsError::NetworkMismatch);
    }
    let traj = rk4_integrate(field, x0, cfg)?;
    let mut max_deviation: f64 = 0.0;
    let mut time_of_max = 0.0;
    let mut initial_deviation = 0.0;
    for (time, state) in traj.times.iter().zip(&traj.states) {
        let membership = phi.polydiagonal_membership(state, tol)?;
        if *time == 0.0 {
            initial_deviation = membership.max_deviation;
        }
        if membership.max_deviation > max_deviation {
            max_deviation = membership.max_deviation;
            time_of_max = *time;
        }
    }
    Ok(InvarianceReport {
        tol,
        max_deviation,
        time_of_max,
        initial_deviation,
        within_tol: max_deviation <= tol,
    })
}

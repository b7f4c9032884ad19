//! Fixed-step closed-loop simulation.
//!
//! Plant, reference filters, the optional integral state and the optional
//! observer are packed into one augmented state vector and advanced together
//! by classical RK4, with the torque law re-evaluated inside the derivative
//! (continuous-control idealization). A zero-order-hold sample period can be
//! set instead for sampled-control studies. Runs are deterministic: identical
//! configurations produce bit-identical logs.

use nalgebra::DVector;

use crate::control::{self, ControllerParams, ControllerVariant, TrackingError};
use crate::dynamics::{self, ArmModel, FrictionParams, JointState, RobotParams};
use crate::error::{Error, Result};
use crate::observer::{self, ObserverParams, ObserverState};
use crate::reference::{self, RefModelParams, RefState};

/// Velocity norm beyond which a run is declared divergent.
pub const DIVERGENCE_SPEED: f64 = 1e4;

/// Everything one closed-loop run needs.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    /// Integration step (s).
    pub dt: f64,
    /// Duration (s).
    pub t_end: f64,
    /// Steps per logged row.
    pub log_stride: usize,
    /// Torque law; `None` simulates the open-loop plant (u = 0).
    pub controller: Option<ControllerParams>,
    /// Feed the controller the observer estimate instead of the plant state.
    pub use_observer: bool,
    pub observer: ObserverParams,
    /// Model the controller and observer believe in.
    pub nominal: RobotParams,
    /// Model the plant actually follows.
    pub plant: RobotParams,
    /// Plant-side friction, if any.
    pub friction: Option<FrictionParams>,
    pub reference: RefModelParams,
    pub initial: JointState,
    /// Observer initial position estimates (used when `use_observer`).
    pub qhat0: DVector<f64>,
    /// Observer initial velocity estimates.
    pub qdhat0: DVector<f64>,
    /// Error band for the settling-time metric (rad).
    pub settle_band: f64,
}

impl SimConfig {
    /// The benchmark two-link scenario: matched models, basic law with
    /// weights (1e7, 1e-14), h = 1 ms, critically damped 10 rad/s reference
    /// filters driven by a 1.5 rad smooth step, dt = 0.1 ms over 4 s.
    pub fn benchmark() -> Self {
        let arm = RobotParams::default();
        Self {
            dt: 1e-4,
            t_end: 4.0,
            log_stride: 10,
            controller: Some(
                ControllerParams::new(1e7, 1e-14, 1e-3, ControllerVariant::Basic)
                    .expect("valid defaults"),
            ),
            use_observer: false,
            observer: ObserverParams::default(),
            nominal: arm.clone(),
            plant: arm,
            friction: None,
            reference: RefModelParams::uniform(2, 10.0, 1.0, 1.5, 5.0).expect("valid defaults"),
            initial: JointState::zero(2),
            qhat0: DVector::from_element(2, 0.01),
            qdhat0: DVector::zeros(2),
            settle_band: 5e-3,
        }
    }

    /// Validate the configuration; returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config("sim.dt must be strictly positive".into()));
        }
        if self.t_end < 10.0 * self.dt {
            return Err(Error::Config(
                "sim.t_end must cover at least ten steps".into(),
            ));
        }
        if self.log_stride == 0 {
            return Err(Error::Config("sim.log_stride must be at least 1".into()));
        }
        self.nominal.validate()?;
        self.plant.validate()?;
        self.reference.validate()?;
        if let Some(f) = &self.friction {
            f.validate()?;
        }
        let n = self.plant.dof();
        if self.nominal.dof() != n {
            return Err(Error::Config(
                "nominal and plant must share the joint count".into(),
            ));
        }
        if self.reference.dof() != n || self.initial.q.len() != n {
            return Err(Error::Config(
                "reference and initial state must match the joint count".into(),
            ));
        }
        self.initial.check_finite()?;
        if let Some(cp) = &self.controller {
            cp.validate()?;
            if self.dt > cp.h / 10.0 {
                warnings.push(format!(
                    "sim.dt = {} does not resolve the prediction increment h = {} by 10x",
                    self.dt, cp.h
                ));
            }
            if let Some(p) = cp.sample_period {
                if p < self.dt {
                    warnings.push(
                        "controller.sample_period below sim.dt behaves as continuous control"
                            .into(),
                    );
                }
            }
        }
        if self.use_observer {
            self.observer.validate()?;
            if self.qhat0.len() != n || self.qdhat0.len() != n {
                return Err(Error::Config(
                    "observer initial estimates must match the joint count".into(),
                ));
            }
        }
        Ok(warnings)
    }
}

/// One logged instant. `e0`, `zhat` and `est_err` are present only when the
/// integral variant / observer are active.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub q: DVector<f64>,
    pub qd: DVector<f64>,
    pub qref: DVector<f64>,
    pub qdref: DVector<f64>,
    pub qddref: DVector<f64>,
    pub e0: Option<DVector<f64>>,
    /// q − q_ref of the true plant.
    pub e1: DVector<f64>,
    pub e2: DVector<f64>,
    /// Torque commanded at this instant (applied over the following step in
    /// sampled mode).
    pub u: DVector<f64>,
    pub zhat: Option<DVector<f64>>,
    /// ẑ − (q, q̇) interleaved.
    pub est_err: Option<DVector<f64>>,
}

/// Uniformly spaced trajectory record of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryLog {
    pub dof: usize,
    pub dt: f64,
    pub log_stride: usize,
    pub rows: Vec<LogRow>,
}

impl TrajectoryLog {
    pub fn last(&self) -> Option<&LogRow> {
        self.rows.last()
    }
}

/// Run metrics; error statistics are per joint.
#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    pub rms_e1: DVector<f64>,
    /// Mean |e1| over the final 10 % of the run.
    pub steady_state_e1: DVector<f64>,
    pub max_torque: DVector<f64>,
    /// First time after which every joint stays inside the band; `None` when
    /// the run never settles.
    pub settling_time: Option<f64>,
    /// ∫‖u‖² dt over the logged rows.
    pub energy_u: f64,
}

/// Classical fourth-order Runge–Kutta step. A non-finite stage derivative
/// aborts with the offending time.
pub fn rk4_step<F>(derivative: &F, state: &DVector<f64>, t: f64, dt: f64) -> Result<DVector<f64>>
where
    F: Fn(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let check = |k: &DVector<f64>, at: f64| -> Result<()> {
        if k.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFiniteDerivative { t: at })
        }
    };
    let k1 = derivative(t, state)?;
    check(&k1, t)?;
    let k2 = derivative(t + 0.5 * dt, &(state + &k1 * (0.5 * dt)))?;
    check(&k2, t + 0.5 * dt)?;
    let k3 = derivative(t + 0.5 * dt, &(state + &k2 * (0.5 * dt)))?;
    check(&k3, t + 0.5 * dt)?;
    let k4 = derivative(t + dt, &(state + &k3 * dt))?;
    check(&k4, t + dt)?;
    Ok(state + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// Offsets of the augmented state vector
/// [q, q̇, q_ref, q̇_ref, (e0), (ẑ)].
#[derive(Clone, Copy, Debug)]
struct Layout {
    n: usize,
    integral: bool,
    observer: bool,
}

impl Layout {
    fn new(cfg: &SimConfig) -> Self {
        let integral = matches!(
            cfg.controller.as_ref().map(|c| c.variant),
            Some(ControllerVariant::Integral)
        );
        Self {
            n: cfg.plant.dof(),
            integral,
            observer: cfg.use_observer,
        }
    }

    fn len(&self) -> usize {
        4 * self.n
            + if self.integral { self.n } else { 0 }
            + if self.observer { 2 * self.n } else { 0 }
    }

    fn q(&self, x: &DVector<f64>) -> DVector<f64> {
        x.rows(0, self.n).into_owned()
    }
    fn qd(&self, x: &DVector<f64>) -> DVector<f64> {
        x.rows(self.n, self.n).into_owned()
    }
    fn qref(&self, x: &DVector<f64>) -> DVector<f64> {
        x.rows(2 * self.n, self.n).into_owned()
    }
    fn qdref(&self, x: &DVector<f64>) -> DVector<f64> {
        x.rows(3 * self.n, self.n).into_owned()
    }
    fn e0_offset(&self) -> usize {
        4 * self.n
    }
    fn e0(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        self.integral
            .then(|| x.rows(self.e0_offset(), self.n).into_owned())
    }
    fn zhat_offset(&self) -> usize {
        4 * self.n + if self.integral { self.n } else { 0 }
    }
    fn zhat(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        self.observer
            .then(|| x.rows(self.zhat_offset(), 2 * self.n).into_owned())
    }
}

/// Reference state (with consistent acceleration) at time `t` from the
/// packed filter states.
fn ref_state_at(cfg: &SimConfig, lay: &Layout, t: f64, x: &DVector<f64>) -> RefState {
    let qref = lay.qref(x);
    let qdref = lay.qdref(x);
    let r = reference::input_signal(t, &cfg.reference);
    let qdd = reference::ref_acceleration(&qref, &qdref, &r, &cfg.reference);
    RefState {
        q: qref,
        qd: qdref,
        qdd,
    }
}

/// Torque commanded at (t, x). The controller sees the observer estimate in
/// output-feedback mode and only ever evaluates the nominal model.
fn control_torque(cfg: &SimConfig, lay: &Layout, t: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
    let n = lay.n;
    let Some(cp) = &cfg.controller else {
        return Ok(DVector::zeros(n));
    };
    let rs = ref_state_at(cfg, lay, t, x);
    let (qc, qdc) = if lay.observer {
        observer::split(&lay.zhat(x).expect("observer state present"))
    } else {
        (lay.q(x), lay.qd(x))
    };
    let e1 = &qc - &rs.q;
    let e2 = &qdc - &rs.qd;
    let state = JointState { q: qc, qd: qdc };
    match cp.variant {
        ControllerVariant::Basic => {
            let m0 = cfg.nominal.mass_matrix(&state.q)?;
            let drift = dynamics::drift_term_model(&cfg.nominal, &state)?;
            control::nrhc_torque(&TrackingError::new(e1, e2), &drift, &rs.qdd, &m0, cp)
        }
        ControllerVariant::ComputedTorque => {
            control::computed_torque(&TrackingError::new(e1, e2), &state, &rs, &cfg.nominal, cp.h)
        }
        ControllerVariant::Integral => {
            let e0 = lay.e0(x).expect("integral state present");
            let m0 = cfg.nominal.mass_matrix(&state.q)?;
            let drift = dynamics::drift_term_model(&cfg.nominal, &state)?;
            control::nrhc_integral_torque(
                &TrackingError::with_integral(e0, e1, e2),
                &drift,
                &rs.qdd,
                &m0,
                cp,
            )
        }
    }
}

/// Time derivative of the augmented state. `u_held` overrides the torque in
/// zero-order-hold mode.
fn derivative(
    cfg: &SimConfig,
    lay: &Layout,
    t: f64,
    x: &DVector<f64>,
    u_held: Option<&DVector<f64>>,
) -> Result<DVector<f64>> {
    let n = lay.n;
    let u = match u_held {
        Some(u) => u.clone(),
        None => control_torque(cfg, lay, t, x)?,
    };

    let q = lay.q(x);
    let qd = lay.qd(x);
    let plant_state = JointState {
        q: q.clone(),
        qd: qd.clone(),
    };
    let qdd = dynamics::forward_dynamics(&plant_state, &u, &cfg.plant, cfg.friction.as_ref())?;

    let qref = lay.qref(x);
    let qdref = lay.qdref(x);
    let r = reference::input_signal(t, &cfg.reference);
    let qddref = reference::ref_acceleration(&qref, &qdref, &r, &cfg.reference);

    let mut dx = DVector::zeros(lay.len());
    dx.rows_mut(0, n).copy_from(&qd);
    dx.rows_mut(n, n).copy_from(&qdd);
    dx.rows_mut(2 * n, n).copy_from(&qdref);
    dx.rows_mut(3 * n, n).copy_from(&qddref);
    if lay.integral {
        // ė0 = measured position error
        dx.rows_mut(lay.e0_offset(), n).copy_from(&(&q - &qref));
    }
    if lay.observer {
        let os = ObserverState::new(lay.zhat(x).expect("observer state present"))?;
        let dz = observer::observer_derivative(&os, &q, &u, &cfg.nominal, &cfg.observer)?;
        dx.rows_mut(lay.zhat_offset(), 2 * n).copy_from(&dz);
    }
    Ok(dx)
}

fn log_row(cfg: &SimConfig, lay: &Layout, t: f64, x: &DVector<f64>, u: &DVector<f64>) -> LogRow {
    let q = lay.q(x);
    let qd = lay.qd(x);
    let rs = ref_state_at(cfg, lay, t, x);
    let e1 = &q - &rs.q;
    let e2 = &qd - &rs.qd;
    let zhat = lay.zhat(x);
    let est_err = zhat.as_ref().map(|z| z - observer::interleave(&q, &qd));
    LogRow {
        t,
        q,
        qd,
        qref: rs.q,
        qdref: rs.qd,
        qddref: rs.qdd,
        e0: lay.e0(x),
        e1,
        e2,
        u: u.clone(),
        zhat,
        est_err,
    }
}

/// Integrate the closed loop and return the trajectory log.
///
/// Aborts with [`Error::Diverged`] as soon as the joint speed passes
/// [`DIVERGENCE_SPEED`], reporting the blow-up time.
pub fn run_scenario(cfg: &SimConfig) -> Result<TrajectoryLog> {
    cfg.validate()?;
    let lay = Layout::new(cfg);
    let n = lay.n;

    let mut x = DVector::zeros(lay.len());
    x.rows_mut(0, n).copy_from(&cfg.initial.q);
    x.rows_mut(n, n).copy_from(&cfg.initial.qd);
    // reference filters start at rest at zero; e0 starts at zero
    if lay.observer {
        x.rows_mut(lay.zhat_offset(), 2 * n)
            .copy_from(&observer::interleave(&cfg.qhat0, &cfg.qdhat0));
    }

    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let mut rows = Vec::with_capacity(steps / cfg.log_stride + 2);

    let sample_every = cfg
        .controller
        .as_ref()
        .and_then(|c| c.sample_period)
        .map(|p| ((p / cfg.dt).round() as usize).max(1));
    let mut held_u: Option<DVector<f64>> = None;

    for step in 0..steps {
        let t = step as f64 * cfg.dt;
        if let Some(every) = sample_every {
            if step % every == 0 {
                held_u = Some(control_torque(cfg, &lay, t, &x)?);
            }
        }
        let u_now = match &held_u {
            Some(u) => u.clone(),
            None => control_torque(cfg, &lay, t, &x)?,
        };
        if step % cfg.log_stride == 0 {
            rows.push(log_row(cfg, &lay, t, &x, &u_now));
        }

        x = rk4_step(
            &|tt, xx| derivative(cfg, &lay, tt, xx, held_u.as_ref()),
            &x,
            t,
            cfg.dt,
        )?;

        if let Some(cp) = &cfg.controller {
            if let Some(clamp) = cp.e0_clamp {
                if lay.integral {
                    let e0 = x.rows(lay.e0_offset(), n).into_owned();
                    let norm = e0.norm();
                    if norm > clamp {
                        x.rows_mut(lay.e0_offset(), n)
                            .copy_from(&(e0 * (clamp / norm)));
                    }
                }
            }
        }
        if let Some(clamp) = cfg.observer.zhat_clamp {
            if lay.observer {
                let z = x.rows(lay.zhat_offset(), 2 * n).into_owned();
                let norm = z.norm();
                if norm > clamp {
                    x.rows_mut(lay.zhat_offset(), 2 * n)
                        .copy_from(&(z * (clamp / norm)));
                }
            }
        }

        let t_next = (step + 1) as f64 * cfg.dt;
        let speed = x.rows(n, n).norm();
        if !speed.is_finite() || speed > DIVERGENCE_SPEED {
            return Err(Error::Diverged { t: t_next, speed });
        }
    }

    if steps.is_multiple_of(cfg.log_stride) {
        let t = steps as f64 * cfg.dt;
        let u_final = match &held_u {
            Some(u) => u.clone(),
            None => control_torque(cfg, &lay, t, &x)?,
        };
        rows.push(log_row(cfg, &lay, t, &x, &u_final));
    }

    Ok(TrajectoryLog {
        dof: n,
        dt: cfg.dt,
        log_stride: cfg.log_stride,
        rows,
    })
}

/// Run many scenarios (parallel under the default feature); result order
/// follows the input order.
pub fn run_batch(cfgs: &[SimConfig]) -> Vec<Result<TrajectoryLog>> {
    crate::parallel::par_map(cfgs, run_scenario)
}

/// Metrics over a logged run; `band` is the settling band on max-joint |e1|.
pub fn compute_metrics(log: &TrajectoryLog, band: f64) -> Result<Metrics> {
    if log.rows.is_empty() {
        return Err(Error::EmptyLog);
    }
    let n = log.dof;
    let rows = &log.rows;
    let t_last = rows.last().expect("nonempty").t;

    let mut rms = DVector::<f64>::zeros(n);
    let mut max_torque = DVector::<f64>::zeros(n);
    for row in rows {
        for j in 0..n {
            rms[j] += row.e1[j] * row.e1[j];
            max_torque[j] = max_torque[j].max(row.u[j].abs());
        }
    }
    rms = (rms / rows.len() as f64).map(f64::sqrt);

    let tail_start = t_last - 0.1 * t_last;
    let mut steady = DVector::zeros(n);
    let mut tail_count = 0usize;
    for row in rows.iter().filter(|r| r.t >= tail_start) {
        for j in 0..n {
            steady[j] += row.e1[j].abs();
        }
        tail_count += 1;
    }
    if tail_count > 0 {
        steady /= tail_count as f64;
    }

    // first time after which every joint stays inside the band: walk the
    // suffix maxima of |e1| backwards, then take the earliest covered row
    let mut settling_time = None;
    let mut suffix_max = f64::NEG_INFINITY;
    for row in rows.iter().rev() {
        suffix_max = suffix_max.max(row.e1.amax());
        if suffix_max <= band {
            settling_time = Some(row.t);
        } else {
            break;
        }
    }

    let dt_row = log.dt * log.log_stride as f64;
    let mut energy = 0.0;
    for pair in rows.windows(2) {
        energy += 0.5 * (pair[0].u.norm_squared() + pair[1].u.norm_squared()) * dt_row;
    }

    Ok(Metrics {
        rms_e1: rms,
        steady_state_e1: steady,
        max_torque,
        settling_time,
        energy_u: energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rk4_constant_derivative_is_exact() {
        // dt/6 exact in binary so the step lands exactly on state + c·dt
        let c = DVector::from_vec(vec![2.0, -4.0]);
        let f = |_t: f64, _x: &DVector<f64>| Ok(c.clone());
        let x0 = DVector::from_vec(vec![1.0, 1.0]);
        let dt = 0.75;
        let x1 = rk4_step(&f, &x0, 0.0, dt).unwrap();
        assert_eq!(x1[0], 1.0 + 2.0 * dt);
        assert_eq!(x1[1], 1.0 - 4.0 * dt);
    }

    #[test]
    fn rk4_zero_derivative_keeps_state() {
        let f = |_t: f64, x: &DVector<f64>| Ok(DVector::zeros(x.len()));
        let x0 = DVector::from_vec(vec![0.123456789, -9.87654321]);
        let x1 = rk4_step(&f, &x0, 1.0, 0.01).unwrap();
        assert_eq!(x0, x1);
    }

    #[test]
    fn rk4_harmonic_oscillator_order() {
        // ẍ = −x from x(0) = 1: global error at t = 1 shrinks ~16x per halving
        let f = |_t: f64, x: &DVector<f64>| Ok(DVector::from_vec(vec![x[1], -x[0]]));
        let run = |dt: f64| -> f64 {
            let mut x = DVector::from_vec(vec![1.0, 0.0]);
            let steps = (1.0 / dt).round() as usize;
            for k in 0..steps {
                x = rk4_step(&f, &x, k as f64 * dt, dt).unwrap();
            }
            (x[0] - 1.0f64.cos()).abs()
        };
        let e1 = run(0.01);
        let e2 = run(0.005);
        let e3 = run(0.0025);
        let order1 = (e1 / e2).log2();
        let order2 = (e2 / e3).log2();
        assert!(
            order1 >= 3.9 && order2 >= 3.9,
            "orders {order1:.2}, {order2:.2}"
        );
    }

    #[test]
    fn rk4_rejects_non_finite_derivative() {
        let f = |_t: f64, _x: &DVector<f64>| Ok(DVector::from_vec(vec![f64::NAN]));
        let x0 = DVector::from_vec(vec![1.0]);
        assert!(matches!(
            rk4_step(&f, &x0, 0.5, 0.1),
            Err(Error::NonFiniteDerivative { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimConfig::benchmark();
        assert!(cfg.validate().unwrap().is_empty());

        cfg.dt = 1e-3; // does not resolve h = 1e-3 by 10x
        assert_eq!(cfg.validate().unwrap().len(), 1);

        cfg.t_end = 5.0 * cfg.dt;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn open_loop_run_logs_uniformly() {
        let mut cfg = SimConfig::benchmark();
        cfg.controller = None;
        cfg.t_end = 0.1;
        cfg.log_stride = 7;
        let log = run_scenario(&cfg).unwrap();
        let spacing = cfg.dt * cfg.log_stride as f64;
        for pair in log.rows.windows(2) {
            assert_relative_eq!(pair[1].t - pair[0].t, spacing, max_relative = 1e-12);
        }
        assert!(log.rows.iter().all(|r| r.u.amax() == 0.0));
        assert!(log.rows[0].e0.is_none() && log.rows[0].zhat.is_none());
    }

    #[test]
    fn divergence_guard_reports_time() {
        // torque-free run with an enormous initial speed trips the guard
        let mut cfg = SimConfig::benchmark();
        cfg.controller = None;
        cfg.t_end = 0.5;
        cfg.initial =
            JointState::new(DVector::zeros(2), DVector::from_vec(vec![9.9e3, 1.5e3])).unwrap();
        match run_scenario(&cfg) {
            Err(Error::Diverged { t, speed }) => {
                assert!(t > 0.0 && t <= 0.5);
                assert!(speed > DIVERGENCE_SPEED);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn metrics_trivial_cases() {
        let zero = DVector::zeros(2);
        let mk_row = |t: f64, e1: DVector<f64>| LogRow {
            t,
            q: e1.clone(),
            qd: zero.clone(),
            qref: zero.clone(),
            qdref: zero.clone(),
            qddref: zero.clone(),
            e0: None,
            e1,
            e2: zero.clone(),
            u: zero.clone(),
            zhat: None,
            est_err: None,
        };
        let log = TrajectoryLog {
            dof: 2,
            dt: 0.1,
            log_stride: 1,
            rows: (0..11)
                .map(|k| mk_row(k as f64 * 0.1, DVector::zeros(2)))
                .collect(),
        };
        let m = compute_metrics(&log, 0.005).unwrap();
        assert_eq!(m.rms_e1.amax(), 0.0);
        assert_eq!(m.settling_time, Some(0.0));
        assert_eq!(m.energy_u, 0.0);

        let log = TrajectoryLog {
            dof: 2,
            dt: 0.1,
            log_stride: 1,
            rows: (0..11)
                .map(|k| mk_row(k as f64 * 0.1, DVector::from_element(2, 0.01)))
                .collect(),
        };
        let m = compute_metrics(&log, 0.005).unwrap();
        assert_relative_eq!(m.steady_state_e1[0], 0.01, max_relative = 1e-12);
        assert_eq!(m.settling_time, None);
    }

    #[test]
    fn zero_order_hold_changes_the_log() {
        // a 2-step hold stays stable at these gains but perturbs the trajectory
        let mut cont = SimConfig::benchmark();
        cont.t_end = 0.05;
        let log_cont = run_scenario(&cont).unwrap();

        let mut held = cont.clone();
        held.controller.as_mut().unwrap().sample_period = Some(2e-4);
        let log_held = run_scenario(&held).unwrap();
        assert_ne!(log_cont, log_held);
    }

    #[test]
    fn zero_order_hold_slower_than_the_loop_diverges() {
        // holding the 1 ms-horizon law for 5 ms destabilizes the sampled loop
        let mut cfg = SimConfig::benchmark();
        cfg.t_end = 0.5;
        cfg.controller.as_mut().unwrap().sample_period = Some(5e-3);
        assert!(matches!(run_scenario(&cfg), Err(Error::Diverged { .. })));
    }

    #[test]
    fn batch_matches_individual_runs() {
        let mut a = SimConfig::benchmark();
        a.t_end = 0.02;
        let mut b = a.clone();
        b.controller.as_mut().unwrap().r_weight = 0.0;
        let batch = run_batch(&[a.clone(), b.clone()]);
        assert_eq!(batch[0].as_ref().unwrap(), &run_scenario(&a).unwrap());
        assert_eq!(batch[1].as_ref().unwrap(), &run_scenario(&b).unwrap());
    }
}

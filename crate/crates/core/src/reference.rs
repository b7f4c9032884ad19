//! Reference trajectory generation.
//!
//! Each joint tracks the output of a second-order filter
//! q̈_ref = ω²(r − q_ref) − 2ξω·q̇_ref driven by a smooth bounded step
//! r(t) = a·(1 − e^{−kt}(1 + kt)), which starts at rest (r(0) = ṙ(0) = 0)
//! and settles at amplitude `a`. The filter is advanced by the caller as part
//! of the closed-loop ODE so that (q_ref, q̇_ref, q̈_ref) stay mutually
//! consistent.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Per-joint filter constants and the shared input-step shape.
#[derive(Clone, Debug, PartialEq)]
pub struct RefModelParams {
    /// Natural frequencies ω_i (rad/s).
    pub omega: DVector<f64>,
    /// Damping ratios ξ_i.
    pub zeta: DVector<f64>,
    /// Step amplitude a (rad).
    pub amplitude: f64,
    /// Step rate k (1/s).
    pub rate: f64,
    /// Use the unbounded variant a·(1 − e^{−kt})(1 + kt) instead of the
    /// bounded default. Off unless explicitly requested.
    pub literal_form: bool,
}

impl RefModelParams {
    /// Identical filters on every joint.
    pub fn uniform(n: usize, omega: f64, zeta: f64, amplitude: f64, rate: f64) -> Result<Self> {
        let p = Self {
            omega: DVector::from_element(n, omega),
            zeta: DVector::from_element(n, zeta),
            amplitude,
            rate,
            literal_form: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn dof(&self) -> usize {
        self.omega.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.omega.len() != self.zeta.len() || self.omega.is_empty() {
            return Err(Error::InvalidParams(
                "reference filter vectors must share one non-zero length".into(),
            ));
        }
        if self.omega.iter().any(|&w| w <= 0.0 || !w.is_finite()) {
            return Err(Error::InvalidParams(
                "reference omega must be strictly positive".into(),
            ));
        }
        if self.zeta.iter().any(|&z| z <= 0.0 || !z.is_finite()) {
            return Err(Error::InvalidParams(
                "reference zeta must be strictly positive".into(),
            ));
        }
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::InvalidParams(
                "reference rate must be strictly positive".into(),
            ));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::InvalidParams(
                "reference amplitude must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Reference position, velocity and acceleration at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct RefState {
    pub q: DVector<f64>,
    pub qd: DVector<f64>,
    pub qdd: DVector<f64>,
}

impl RefState {
    pub fn at_rest(n: usize) -> Self {
        Self {
            q: DVector::zeros(n),
            qd: DVector::zeros(n),
            qdd: DVector::zeros(n),
        }
    }
}

/// Filter input r(t) applied to every joint.
pub fn input_signal(t: f64, p: &RefModelParams) -> DVector<f64> {
    let kt = p.rate * t;
    let value = if p.literal_form {
        p.amplitude * (1.0 - (-kt).exp()) * (1.0 + kt)
    } else {
        p.amplitude * (1.0 - (-kt).exp() * (1.0 + kt))
    };
    DVector::from_element(p.dof(), value)
}

/// Filter acceleration q̈_ref = ω²(r − q_ref) − 2ξω·q̇_ref per joint.
pub fn ref_acceleration(
    qref: &DVector<f64>,
    qdref: &DVector<f64>,
    r: &DVector<f64>,
    p: &RefModelParams,
) -> DVector<f64> {
    DVector::from_fn(p.dof(), |i, _| {
        let w = p.omega[i];
        w * w * (r[i] - qref[i]) - 2.0 * p.zeta[i] * w * qdref[i]
    })
}

/// Time derivative of the filter state: (q̇_ref, q̈_ref), with q̈_ref also
/// refreshing the stored acceleration of `rs`.
pub fn ref_derivative(
    rs: &RefState,
    r: &DVector<f64>,
    p: &RefModelParams,
) -> (DVector<f64>, DVector<f64>) {
    let qdd = ref_acceleration(&rs.q, &rs.qd, r, p);
    (rs.qd.clone(), qdd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> RefModelParams {
        RefModelParams::uniform(2, 10.0, 1.0, 1.5, 5.0).unwrap()
    }

    #[test]
    fn input_starts_at_zero_and_settles_at_amplitude() {
        let p = params();
        let r0 = input_signal(0.0, &p);
        assert_eq!(r0[0], 0.0);
        assert_eq!(r0[1], 0.0);

        let r_inf = input_signal(50.0, &p);
        assert_relative_eq!(r_inf[0], 1.5, max_relative = 1e-12);
        assert_relative_eq!(r_inf[1], 1.5, max_relative = 1e-12);
    }

    #[test]
    fn input_reference_value_at_one_second() {
        let p = params();
        let r = input_signal(1.0, &p);
        let expected = 1.5 * (1.0 - 6.0 * (-5.0f64).exp());
        assert_relative_eq!(r[0], expected, max_relative = 1e-12);
        assert!((r[0] - 1.43936).abs() < 1e-4);
    }

    #[test]
    fn input_starts_at_rest() {
        // ṙ(0) = 0: forward difference at the origin is second order in t
        let p = params();
        let dt = 1e-6;
        let slope = (input_signal(dt, &p)[0] - input_signal(0.0, &p)[0]) / dt;
        assert!(slope.abs() < 1e-4);
    }

    #[test]
    fn literal_form_grows_past_amplitude() {
        let mut p = params();
        p.literal_form = true;
        assert!(input_signal(10.0, &p)[0] > 2.0 * p.amplitude);
    }

    #[test]
    fn derivative_pairs_velocity_with_fresh_acceleration() {
        let p = params();
        let rs = RefState {
            q: DVector::from_element(2, 0.2),
            qd: DVector::from_element(2, -0.3),
            qdd: DVector::zeros(2), // stale on purpose
        };
        let r = DVector::from_element(2, 1.0);
        let (dq, dqd) = ref_derivative(&rs, &r, &p);
        assert_eq!(dq, rs.qd);
        let want = 100.0 * (1.0 - 0.2) - 2.0 * 10.0 * (-0.3);
        assert_relative_eq!(dqd[0], want, max_relative = 1e-12);
        assert_relative_eq!(dqd[1], want, max_relative = 1e-12);
    }

    #[test]
    fn filter_acceleration_cases() {
        let p = params();
        let r = DVector::from_element(2, 0.7);
        // at rest on target: no acceleration
        let qdd = ref_acceleration(&r.clone(), &DVector::zeros(2), &r, &p);
        assert!(qdd.norm() < 1e-15);

        // unit step from rest: ω²·r
        let qdd = ref_acceleration(
            &DVector::zeros(2),
            &DVector::zeros(2),
            &DVector::from_element(2, 1.0),
            &p,
        );
        assert_relative_eq!(qdd[0], 100.0, max_relative = 1e-12);
    }

    // small RK4 driver local to the tests; the sim module has the real one
    fn simulate_filter(
        p: &RefModelParams,
        r_const: f64,
        t_end: f64,
        dt: f64,
    ) -> Vec<(f64, f64, f64)> {
        let r = DVector::from_element(p.dof(), r_const);
        let mut q = 0.0f64;
        let mut qd = 0.0f64;
        let mut out = vec![(0.0, q, qd)];
        let steps = (t_end / dt).round() as usize;
        let f = |q: f64, qd: f64| -> (f64, f64) {
            let w = p.omega[0];
            (qd, w * w * (r[0] - q) - 2.0 * p.zeta[0] * w * qd)
        };
        for k in 0..steps {
            let (k1q, k1v) = f(q, qd);
            let (k2q, k2v) = f(q + 0.5 * dt * k1q, qd + 0.5 * dt * k1v);
            let (k3q, k3v) = f(q + 0.5 * dt * k2q, qd + 0.5 * dt * k2v);
            let (k4q, k4v) = f(q + dt * k3q, qd + dt * k3v);
            q += dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
            qd += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            out.push(((k + 1) as f64 * dt, q, qd));
        }
        out
    }

    #[test]
    fn unit_dc_gain() {
        let p = params();
        let traj = simulate_filter(&p, 0.8, 2.0, 1e-4);
        let (_, q_end, _) = traj.last().unwrap();
        assert!((q_end - 0.8).abs() < 1e-6, "settled at {q_end}");
    }

    #[test]
    fn critically_damped_step_is_monotone() {
        let p = params();
        let traj = simulate_filter(&p, 1.0, 2.0, 1e-4);
        let mut prev = -1.0;
        for &(_, q, _) in &traj {
            assert!(q >= prev - 1e-12);
            assert!(q <= 1.0 + 1e-8, "overshoot to {q}");
            prev = q;
        }
    }
}

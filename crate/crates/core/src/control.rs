//! Closed-form receding-horizon torque laws.
//!
//! The horizon cost ∫ eᵀQe + uᵀRu over [t, t+2h] is collapsed by Simpson's
//! rule with the tracking error predicted by a first-order Taylor expansion,
//! which makes the minimizing torque available in closed form — no online
//! optimization. Setting the effort weight R to zero recovers the classic
//! computed-torque (feedback linearization) law; penalizing the integrated
//! position error instead yields the integral-action law that removes the
//! steady-state error left by model mismatch.
//!
//! All laws consume the *nominal* model only; the plant may differ.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{ArmModel, JointState};
use crate::error::{Error, Result};
use crate::linalg;
use crate::reference::RefState;

/// Controller family selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ControllerVariant {
    /// Closed-form receding-horizon law with tracking and effort weights.
    Basic,
    /// The effort-weight-zero limit assembled directly from the nominal
    /// model terms (feedback linearization).
    ComputedTorque,
    /// Receding-horizon law on the integrated position error.
    Integral,
}

/// Scalar weights and the prediction increment of the torque laws
/// (Q = q_weight·I, R = r_weight·I; the full horizon is 2·h).
#[derive(Clone, Debug, PartialEq)]
pub struct ControllerParams {
    pub q_weight: f64,
    pub r_weight: f64,
    /// Prediction increment h (s).
    pub h: f64,
    pub variant: ControllerVariant,
    /// Zero-order-hold period for sampled control; `None` re-evaluates the
    /// law continuously (at every integrator stage).
    pub sample_period: Option<f64>,
    /// Optional norm clamp on the integral state.
    pub e0_clamp: Option<f64>,
}

impl ControllerParams {
    pub fn new(q_weight: f64, r_weight: f64, h: f64, variant: ControllerVariant) -> Result<Self> {
        let p = Self {
            q_weight,
            r_weight,
            h,
            variant,
            sample_period: None,
            e0_clamp: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q_weight > 0.0 && self.q_weight.is_finite()) {
            return Err(Error::InvalidParams(
                "q_weight must be strictly positive".into(),
            ));
        }
        if !(self.r_weight >= 0.0 && self.r_weight.is_finite()) {
            return Err(Error::InvalidParams("r_weight must be non-negative".into()));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidParams(
                "prediction increment h must be strictly positive".into(),
            ));
        }
        if self.variant == ControllerVariant::ComputedTorque && self.r_weight != 0.0 {
            return Err(Error::InvalidParams(
                "computed_torque requires r_weight = 0".into(),
            ));
        }
        if let Some(p) = self.sample_period {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::InvalidParams(
                    "sample_period must be strictly positive".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Tracking error split: integral of position error (integral variant only),
/// position error e1 = q − q_ref, velocity error e2 = q̇ − q̇_ref.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackingError {
    /// ∫e1 dt (rad·s); advanced by the simulation loop, zero at t = 0.
    pub integral: DVector<f64>,
    /// q − q_ref (rad).
    pub position: DVector<f64>,
    /// q̇ − q̇_ref (rad/s).
    pub velocity: DVector<f64>,
}

impl TrackingError {
    pub fn new(position: DVector<f64>, velocity: DVector<f64>) -> Self {
        let n = position.len();
        Self {
            integral: DVector::zeros(n),
            position,
            velocity,
        }
    }

    pub fn with_integral(
        integral: DVector<f64>,
        position: DVector<f64>,
        velocity: DVector<f64>,
    ) -> Self {
        Self {
            integral,
            position,
            velocity,
        }
    }
}

/// Basic receding-horizon torque:
/// u = −h²·M·(h⁴Q + M·R·M)⁻¹·Q·(e1 + 2h·e2 + h²(drift − q̈_ref)).
///
/// The inner solve factors the symmetric positive definite h⁴Q + MRM.
pub fn nrhc_torque(
    err: &TrackingError,
    drift: &DVector<f64>,
    qddref: &DVector<f64>,
    m_nom: &DMatrix<f64>,
    cp: &ControllerParams,
) -> Result<DVector<f64>> {
    cp.validate()?;
    let h = cp.h;
    let n = err.position.len();
    let bracket = &err.position + &err.velocity * (2.0 * h) + (drift - qddref) * (h * h);
    let inner = DMatrix::identity(n, n) * (h.powi(4) * cp.q_weight) + m_nom * m_nom * cp.r_weight;
    let w = linalg::solve_spd(&inner, &(bracket * cp.q_weight), "horizon weight matrix")?;
    Ok(-(m_nom * w) * (h * h))
}

/// Computed-torque law (the effort-weight-zero limit), assembled from the
/// nominal model terms:
/// u = −(1/h²)·M₀·(e1 + 2h·e2) + C₀·q̇ + G₀ + M₀·q̈_ref.
pub fn computed_torque(
    err: &TrackingError,
    s: &JointState,
    reference: &RefState,
    nominal: &dyn ArmModel,
    h: f64,
) -> Result<DVector<f64>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParams(
            "prediction increment h must be strictly positive".into(),
        ));
    }
    let m0 = nominal.mass_matrix(&s.q)?;
    let c0 = nominal.coriolis_matrix(&s.q, &s.qd)?;
    let g0 = nominal.gravity_vector(&s.q)?;
    let feedback = &m0 * (&err.position + &err.velocity * (2.0 * h)) * (-1.0 / (h * h));
    Ok(feedback + c0 * &s.qd + g0 + m0 * &reference.qdd)
}

/// Integral-action receding-horizon torque:
/// u = −(2/3)h³·M₀·((5/9)h⁶Q + M₀RM₀)⁻¹·Q·(2e0 + 3h·e1 + 2h²·e2 + (5/6)h³(drift − q̈_ref)).
///
/// At R = 0 this reduces exactly to
/// u = −(9/5)·M₀·(4/(3h³)·e0 + 2/h²·e1 + 4/(3h)·e2 + (5/9)(drift − q̈_ref)).
pub fn nrhc_integral_torque(
    err: &TrackingError,
    drift: &DVector<f64>,
    qddref: &DVector<f64>,
    m_nom: &DMatrix<f64>,
    cp: &ControllerParams,
) -> Result<DVector<f64>> {
    cp.validate()?;
    let h = cp.h;
    let n = err.position.len();
    let bracket = &err.integral * 2.0
        + &err.position * (3.0 * h)
        + &err.velocity * (2.0 * h * h)
        + (drift - qddref) * (5.0 / 6.0 * h.powi(3));
    let inner = DMatrix::identity(n, n) * (5.0 / 9.0 * h.powi(6) * cp.q_weight)
        + m_nom * m_nom * cp.r_weight;
    let w = linalg::solve_spd(&inner, &(bracket * cp.q_weight), "horizon weight matrix")?;
    Ok(-(m_nom * w) * (2.0 / 3.0 * h.powi(3)))
}

/// Simpson approximation of the horizon cost from the three sampled
/// (error, torque) pairs at t, t+h, t+2h:
/// J ≈ (h/3)·[L(t) + 4L(t+h) + L(t+2h)], L = eᵀQe + uᵀRu.
///
/// Diagnostic only — the torque laws use the closed forms above.
pub fn simpson_cost(
    samples: &[(DVector<f64>, DVector<f64>); 3],
    q_weight: f64,
    r_weight: f64,
    h: f64,
) -> f64 {
    let l = |pair: &(DVector<f64>, DVector<f64>)| -> f64 {
        q_weight * pair.0.norm_squared() + r_weight * pair.1.norm_squared()
    };
    h / 3.0 * (l(&samples[0]) + 4.0 * l(&samples[1]) + l(&samples[2]))
}

/// First-order Taylor prediction of the tracking error:
/// e(t+h) = e + h·ė and e(t+2h) = e + 2h·ė + h²(drift − q̈_ref) + h²·P·u,
/// with P = M⁻¹.
pub fn predict_error(
    err: &TrackingError,
    drift: &DVector<f64>,
    qddref: &DVector<f64>,
    u: &DVector<f64>,
    p_inv: &DMatrix<f64>,
    h: f64,
) -> (DVector<f64>, DVector<f64>) {
    let e_h = &err.position + &err.velocity * h;
    let e_2h = &err.position
        + &err.velocity * (2.0 * h)
        + (drift - qddref) * (h * h)
        + (p_inv * u) * (h * h);
    (e_h, e_2h)
}

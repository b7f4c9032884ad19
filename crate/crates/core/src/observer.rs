//! High-gain velocity observer.
//!
//! Per joint the estimate ẑ_i = (q̂_i, q̇̂_i) follows a copy of the double
//! integrator driven by the nominal drift, the applied torque through
//! M₀(q)⁻¹, and a position innovation with gains scaled by 1/α and 1/α²:
//!
//! ```text
//! dq̂_i  = q̇̂_i        + K₁(y_i − q̂_i)
//! dq̇̂_i = f_i(ẑ) + [M₀(q)⁻¹u]_i + K₂(y_i − q̂_i)
//! ```
//!
//! Shrinking α speeds the error poles by 1/α, letting the linear correction
//! dominate the model nonlinearity.

use nalgebra::DVector;

use crate::dynamics::{ArmModel, JointState};
use crate::error::{Error, Result};
use crate::linalg;

/// Observer gain design: the per-joint pole pair and the gain scale α.
#[derive(Clone, Debug, PartialEq)]
pub struct ObserverParams {
    /// Gain scale, 0 < α ≤ 1. Smaller is faster.
    pub alpha: f64,
    /// Two strictly negative poles assigned per joint.
    pub poles: [f64; 2],
    /// Interpret `poles` as the pre-scaling design (effective poles become
    /// poles/α). When false, `poles` are the effective error poles and α is
    /// not applied.
    pub pre_scaling: bool,
    /// Evaluate M₀⁻¹ on the estimated positions instead of the measured ones.
    pub p_on_estimate: bool,
    /// Optional norm clamp on the estimate (peaking protection), off by default.
    pub zhat_clamp: Option<f64>,
}

impl Default for ObserverParams {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            poles: [-0.4, -0.8],
            pre_scaling: true,
            p_on_estimate: false,
            zhat_clamp: None,
        }
    }
}

impl ObserverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParams(
                "observer alpha must satisfy 0 < alpha <= 1".into(),
            ));
        }
        if self.poles.iter().any(|&p| p >= 0.0 || !p.is_finite()) {
            return Err(Error::InvalidParams(
                "observer poles must be strictly negative".into(),
            ));
        }
        Ok(())
    }
}

/// Interleaved estimate (q̂_1, q̇̂_1, q̂_2, q̇̂_2, …).
#[derive(Clone, Debug, PartialEq)]
pub struct ObserverState {
    pub zhat: DVector<f64>,
}

impl ObserverState {
    pub fn new(zhat: DVector<f64>) -> Result<Self> {
        if !zhat.len().is_multiple_of(2) {
            return Err(Error::InvalidParams(
                "observer state must interleave (position, velocity) pairs".into(),
            ));
        }
        if !zhat.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("observer state"));
        }
        Ok(Self { zhat })
    }

    pub fn from_parts(qhat: &DVector<f64>, qdhat: &DVector<f64>) -> Self {
        Self {
            zhat: interleave(qhat, qdhat),
        }
    }

    pub fn dof(&self) -> usize {
        self.zhat.len() / 2
    }

    /// (q̂, q̇̂) split out of the interleaved layout.
    pub fn split(&self) -> (DVector<f64>, DVector<f64>) {
        split(&self.zhat)
    }
}

pub fn interleave(q: &DVector<f64>, qd: &DVector<f64>) -> DVector<f64> {
    let n = q.len();
    DVector::from_fn(2 * n, |i, _| if i % 2 == 0 { q[i / 2] } else { qd[i / 2] })
}

pub fn split(zhat: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let n = zhat.len() / 2;
    (
        DVector::from_fn(n, |i, _| zhat[2 * i]),
        DVector::from_fn(n, |i, _| zhat[2 * i + 1]),
    )
}

/// Innovation gains (K₁, K₂) shared by every joint.
///
/// The pole pair (p₁, p₂) fixes V = (−(p₁+p₂), p₁p₂); scaling by Γ(α)⁻¹ =
/// diag(1/α, 1/α²) yields K. The per-joint error matrix [[−K₁, 1], [−K₂, 0]]
/// then has eigenvalues {p₁/α, p₂/α} (or exactly (p₁, p₂) without
/// pre-scaling).
pub fn observer_gain(op: &ObserverParams) -> Result<[f64; 2]> {
    op.validate()?;
    let [p1, p2] = op.poles;
    let v1 = -(p1 + p2);
    let v2 = p1 * p2;
    if op.pre_scaling {
        Ok([v1 / op.alpha, v2 / (op.alpha * op.alpha)])
    } else {
        Ok([v1, v2])
    }
}

/// Time derivative of the interleaved estimate given the measured positions
/// `y` and the applied torque `u`. The drift is evaluated on the estimate;
/// M₀⁻¹ on the measured positions unless `p_on_estimate` is set.
pub fn observer_derivative(
    os: &ObserverState,
    y: &DVector<f64>,
    u: &DVector<f64>,
    nominal: &dyn ArmModel,
    op: &ObserverParams,
) -> Result<DVector<f64>> {
    let n = os.dof();
    if y.len() != n || u.len() != n {
        return Err(Error::InvalidParams(
            "observer input dimensions must match the estimate".into(),
        ));
    }
    if !y.iter().chain(u.iter()).all(|v| v.is_finite()) {
        return Err(Error::NonFinite("observer inputs"));
    }
    let [k1, k2] = observer_gain(op)?;
    let (qhat, qdhat) = os.split();
    let q_for_p = if op.p_on_estimate { &qhat } else { y };
    let m0 = nominal.mass_matrix(q_for_p)?;
    let pu = linalg::solve_spd(&m0, u, "mass matrix")?;
    let fhat = crate::dynamics::drift_term_model(
        nominal,
        &JointState {
            q: qhat.clone(),
            qd: qdhat.clone(),
        },
    )?;

    let mut dz = DVector::zeros(2 * n);
    for i in 0..n {
        let innovation = y[i] - qhat[i];
        dz[2 * i] = qdhat[i] + k1 * innovation;
        dz[2 * i + 1] = fhat[i] + pu[i] + k2 * innovation;
    }
    Ok(dz)
}

//! Rigid-link manipulator model: inertia, Coriolis, gravity, friction and
//! forward dynamics.
//!
//! The built-in model is the planar two-link arm with a closed-form inertia
//! matrix; other kinematic chains can be plugged in through [`ArmModel`].
//! All functions are pure: the plant/controller split is achieved simply by
//! evaluating them with distinct parameter sets.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Physical constants of an n-link arm.
///
/// `motor_inertia` is a constant diagonal added to the link inertia matrix;
/// it stands in for reflected actuator inertia and defaults to zero.
#[derive(Clone, Debug, PartialEq)]
pub struct RobotParams {
    /// Link masses m_i (kg).
    pub masses: Vec<f64>,
    /// Link lengths l_i (m).
    pub lengths: Vec<f64>,
    /// Center-of-mass distances lc_i along each link (m).
    pub com: Vec<f64>,
    /// Link rotational inertias I_i (kg·m²).
    pub inertias: Vec<f64>,
    /// Gravitational acceleration (m/s²).
    pub gravity: f64,
    /// Reflected motor inertia per joint (kg·m²), added to diag(M).
    pub motor_inertia: Vec<f64>,
}

impl RobotParams {
    /// Number of links.
    pub fn dof(&self) -> usize {
        self.masses.len()
    }

    /// Two-link arm from per-link (mass, length, com, inertia) tuples.
    pub fn two_link(
        link1: (f64, f64, f64, f64),
        link2: (f64, f64, f64, f64),
        gravity: f64,
    ) -> Result<Self> {
        let p = Self {
            masses: vec![link1.0, link2.0],
            lengths: vec![link1.1, link2.1],
            com: vec![link1.2, link2.2],
            inertias: vec![link1.3, link2.3],
            gravity,
            motor_inertia: vec![0.0, 0.0],
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dof();
        if n == 0 {
            return Err(Error::InvalidParams("at least one link is required".into()));
        }
        if self.lengths.len() != n || self.com.len() != n || self.inertias.len() != n {
            return Err(Error::InvalidParams(
                "per-link parameter vectors must share one length".into(),
            ));
        }
        if self.motor_inertia.len() != n {
            return Err(Error::InvalidParams(
                "motor_inertia must have one entry per link".into(),
            ));
        }
        for i in 0..n {
            if !(self.masses[i] > 0.0 && self.masses[i].is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "link {} mass must be strictly positive",
                    i + 1
                )));
            }
            if !(self.lengths[i] > 0.0 && self.lengths[i].is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "link {} length must be strictly positive",
                    i + 1
                )));
            }
            if !(self.com[i] > 0.0 && self.com[i].is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "link {} com must be strictly positive",
                    i + 1
                )));
            }
            if self.com[i] > self.lengths[i] {
                return Err(Error::InvalidParams(format!(
                    "link {} com must not exceed its length",
                    i + 1
                )));
            }
            if !(self.inertias[i] > 0.0 && self.inertias[i].is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "link {} inertia must be strictly positive",
                    i + 1
                )));
            }
            if !(self.motor_inertia[i] >= 0.0 && self.motor_inertia[i].is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "link {} motor inertia must be non-negative",
                    i + 1
                )));
            }
        }
        if !self.gravity.is_finite() {
            return Err(Error::InvalidParams("gravity must be finite".into()));
        }
        Ok(())
    }
}

impl Default for RobotParams {
    /// The benchmark two-link arm used throughout the test suite:
    /// m = (10, 5) kg, l = (1, 1) m, lc = (0.5, 0.5) m,
    /// I = (10/12, 5/12) kg·m², g = 9.81 m/s².
    fn default() -> Self {
        Self {
            masses: vec![10.0, 5.0],
            lengths: vec![1.0, 1.0],
            com: vec![0.5, 0.5],
            inertias: vec![10.0 / 12.0, 5.0 / 12.0],
            gravity: 9.81,
            motor_inertia: vec![0.0, 0.0],
        }
    }
}

/// Joint positions and velocities: the plant state (q, q̇).
#[derive(Clone, Debug, PartialEq)]
pub struct JointState {
    /// Joint angles (rad).
    pub q: DVector<f64>,
    /// Joint velocities (rad/s).
    pub qd: DVector<f64>,
}

impl JointState {
    pub fn new(q: DVector<f64>, qd: DVector<f64>) -> Result<Self> {
        if q.len() != qd.len() {
            return Err(Error::InvalidParams(
                "q and qd must have equal lengths".into(),
            ));
        }
        let s = Self { q, qd };
        s.check_finite()?;
        Ok(s)
    }

    pub fn zero(n: usize) -> Self {
        Self {
            q: DVector::zeros(n),
            qd: DVector::zeros(n),
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.q.iter().chain(self.qd.iter()).all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("joint state"))
        }
    }
}

/// Joint friction: viscous gains, Coulomb levels, and the velocity scale of
/// the smooth sign replacement tanh(q̇/eps).
#[derive(Clone, Debug, PartialEq)]
pub struct FrictionParams {
    /// Viscous gains f_s (N·m·s/rad), diagonal.
    pub viscous: DVector<f64>,
    /// Coulomb levels f_v (N·m), diagonal.
    pub coulomb: DVector<f64>,
    /// Smoothing velocity scale (rad/s).
    pub eps: f64,
    /// Apply the viscous term to position instead of velocity. Off by
    /// default; exists only to reproduce a position-proportional variant.
    pub on_position: bool,
}

impl FrictionParams {
    pub fn new(viscous: DVector<f64>, coulomb: DVector<f64>, eps: f64) -> Result<Self> {
        let f = Self {
            viscous,
            coulomb,
            eps,
            on_position: false,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.viscous.len() != self.coulomb.len() {
            return Err(Error::InvalidParams(
                "friction vectors must share one length".into(),
            ));
        }
        if self
            .viscous
            .iter()
            .chain(self.coulomb.iter())
            .any(|&v| v < 0.0 || !v.is_finite())
        {
            return Err(Error::InvalidParams(
                "friction gains must be non-negative".into(),
            ));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParams(
                "friction eps must be strictly positive".into(),
            ));
        }
        Ok(())
    }
}

/// Extra load carried as part of the second link: mass, com shift, inertia.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PayloadPerturbation {
    /// Added mass on link 2 (kg).
    pub dm2: f64,
    /// Center-of-mass shift of link 2 (m).
    pub dlc2: f64,
    /// Added rotational inertia of link 2 (kg·m²).
    pub di2: f64,
}

impl PayloadPerturbation {
    pub const ZERO: Self = Self {
        dm2: 0.0,
        dlc2: 0.0,
        di2: 0.0,
    };

    pub fn is_zero(&self) -> bool {
        self.dm2 == 0.0 && self.dlc2 == 0.0 && self.di2 == 0.0
    }
}

/// Apply a payload perturbation to link 2, returning the true-plant
/// parameter set. The input is left untouched.
pub fn apply_payload(p: &RobotParams, d: &PayloadPerturbation) -> Result<RobotParams> {
    if p.dof() < 2 {
        return Err(Error::InvalidParams(
            "payload perturbation requires at least two links".into(),
        ));
    }
    let mut out = p.clone();
    out.masses[1] += d.dm2;
    out.com[1] += d.dlc2;
    out.inertias[1] += d.di2;
    out.validate()?;
    Ok(out)
}

/// Evaluators for an arbitrary kinematic chain. [`RobotParams`] implements
/// this with the closed-form two-link model; supplying another implementation
/// extends every consumer (controllers, observer, simulation) to n links.
pub trait ArmModel: Sync {
    fn dof(&self) -> usize;
    /// Inertia matrix M(q), symmetric positive definite.
    fn mass_matrix(&self, q: &DVector<f64>) -> Result<DMatrix<f64>>;
    /// Coriolis/centripetal matrix C(q, q̇) such that C·q̇ is the velocity
    /// coupling torque.
    fn coriolis_matrix(&self, q: &DVector<f64>, qd: &DVector<f64>) -> Result<DMatrix<f64>>;
    /// Gravity torque G(q) (N·m).
    fn gravity_vector(&self, q: &DVector<f64>) -> Result<DVector<f64>>;
    /// Potential energy U(q) (J) with gradient G(q); gauge U(0) = 0.
    fn potential_energy(&self, q: &DVector<f64>) -> Result<f64>;
}

fn check_two_link(p: &RobotParams) -> Result<()> {
    if p.dof() != 2 {
        return Err(Error::InvalidParams(
            "closed-form model covers two links; supply an ArmModel for other chains".into(),
        ));
    }
    Ok(())
}

fn check_finite(v: &DVector<f64>, what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn check_joint_vec(v: &DVector<f64>, n: usize, what: &'static str) -> Result<()> {
    if v.len() != n {
        return Err(Error::InvalidParams(format!(
            "{what} must have one entry per joint (expected {n}, got {})",
            v.len()
        )));
    }
    check_finite(v, what)
}

impl ArmModel for RobotParams {
    fn dof(&self) -> usize {
        self.masses.len()
    }

    fn mass_matrix(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_two_link(self)?;
        check_joint_vec(q, 2, "q")?;
        let (m1, m2) = (self.masses[0], self.masses[1]);
        let l1 = self.lengths[0];
        let (lc1, lc2) = (self.com[0], self.com[1]);
        let (i1, i2) = (self.inertias[0], self.inertias[1]);
        let c2 = q[1].cos();

        let m11 = m1 * lc1 * lc1
            + m2 * lc2 * lc2
            + m2 * l1 * l1
            + 2.0 * m2 * l1 * lc2 * c2
            + i1
            + i2
            + self.motor_inertia[0];
        let m12 = i2 + m2 * lc2 * lc2 + m2 * l1 * lc2 * c2;
        let m22 = i2 + m2 * lc2 * lc2 + self.motor_inertia[1];
        let m = DMatrix::from_row_slice(2, 2, &[m11, m12, m12, m22]);
        linalg::check_spd(&m, "mass matrix")?;
        Ok(m)
    }

    fn coriolis_matrix(&self, q: &DVector<f64>, qd: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_two_link(self)?;
        check_joint_vec(q, 2, "q")?;
        check_joint_vec(qd, 2, "qd")?;
        let k = self.masses[1] * self.lengths[0] * self.com[1];
        let s2 = q[1].sin();
        let c11 = -qd[1] * k * s2;
        let c12 = -(qd[0] + qd[1]) * k * s2;
        let c21 = qd[0] * k * s2;
        Ok(DMatrix::from_row_slice(2, 2, &[c11, c12, c21, 0.0]))
    }

    fn gravity_vector(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        check_two_link(self)?;
        check_joint_vec(q, 2, "q")?;
        let g = self.gravity;
        let a = (self.masses[0] * self.com[0] + self.masses[1] * self.lengths[0]) * g;
        let b = self.masses[1] * self.com[1] * g;
        let g1 = a * q[0].cos() + b * (q[0] + q[1]).cos();
        let g2 = b * (q[0] + q[1]).cos();
        Ok(DVector::from_vec(vec![g1, g2]))
    }

    fn potential_energy(&self, q: &DVector<f64>) -> Result<f64> {
        check_two_link(self)?;
        check_joint_vec(q, 2, "q")?;
        let g = self.gravity;
        let a = (self.masses[0] * self.com[0] + self.masses[1] * self.lengths[0]) * g;
        let b = self.masses[1] * self.com[1] * g;
        Ok(a * q[0].sin() + b * (q[0] + q[1]).sin())
    }
}

/// Inertia matrix M(q).
pub fn mass_matrix(q: &DVector<f64>, p: &RobotParams) -> Result<DMatrix<f64>> {
    p.mass_matrix(q)
}

/// Coriolis/centripetal matrix C(q, q̇).
pub fn coriolis_matrix(
    q: &DVector<f64>,
    qd: &DVector<f64>,
    p: &RobotParams,
) -> Result<DMatrix<f64>> {
    p.coriolis_matrix(q, qd)
}

/// Gravity torque G(q).
pub fn gravity_vector(q: &DVector<f64>, p: &RobotParams) -> Result<DVector<f64>> {
    p.gravity_vector(q)
}

/// Potential energy U(q), gauge U(0) = 0.
pub fn potential_energy(q: &DVector<f64>, p: &RobotParams) -> Result<f64> {
    p.potential_energy(q)
}

/// Friction torque f_s·q̇ + f_v·tanh(q̇/eps).
pub fn friction_torque(qd: &DVector<f64>, f: &FrictionParams) -> Result<DVector<f64>> {
    check_finite(qd, "qd")?;
    Ok(DVector::from_fn(qd.len(), |i, _| {
        f.viscous[i] * qd[i] + f.coulomb[i] * (qd[i] / f.eps).tanh()
    }))
}

/// Plant-side friction honoring the `on_position` switch.
pub fn plant_friction(
    q: &DVector<f64>,
    qd: &DVector<f64>,
    f: &FrictionParams,
) -> Result<DVector<f64>> {
    if !f.on_position {
        return friction_torque(qd, f);
    }
    check_finite(q, "q")?;
    check_finite(qd, "qd")?;
    Ok(DVector::from_fn(qd.len(), |i, _| {
        f.viscous[i] * q[i] + f.coulomb[i] * (qd[i] / f.eps).tanh()
    }))
}

/// Joint accelerations q̈ = M⁻¹(u − C·q̇ − G − friction) for any [`ArmModel`].
/// `friction` is the already-evaluated friction torque, if any.
pub fn forward_dynamics_model(
    model: &dyn ArmModel,
    s: &JointState,
    u: &DVector<f64>,
    friction: Option<&DVector<f64>>,
) -> Result<DVector<f64>> {
    s.check_finite()?;
    check_finite(u, "torque")?;
    let m = model.mass_matrix(&s.q)?;
    let c = model.coriolis_matrix(&s.q, &s.qd)?;
    let g = model.gravity_vector(&s.q)?;
    let mut rhs = u - c * &s.qd - g;
    if let Some(fr) = friction {
        rhs -= fr;
    }
    linalg::solve_spd(&m, &rhs, "mass matrix")
}

/// Joint accelerations of the built-in model under torque `u`.
pub fn forward_dynamics(
    s: &JointState,
    u: &DVector<f64>,
    p: &RobotParams,
    f: Option<&FrictionParams>,
) -> Result<DVector<f64>> {
    s.check_finite()?;
    check_finite(u, "torque")?;
    let m = p.mass_matrix(&s.q)?;
    let c = p.coriolis_matrix(&s.q, &s.qd)?;
    let g = p.gravity_vector(&s.q)?;
    let mut rhs = u - c * &s.qd - g;
    if let Some(fp) = f {
        rhs -= plant_friction(&s.q, &s.qd, fp)?;
    }
    linalg::solve_spd(&m, &rhs, "mass matrix")
}

/// Unforced, frictionless drift −M⁻¹(C·q̇ + G) seen by the controllers.
pub fn drift_term_model(model: &dyn ArmModel, s: &JointState) -> Result<DVector<f64>> {
    s.check_finite()?;
    let m = model.mass_matrix(&s.q)?;
    let c = model.coriolis_matrix(&s.q, &s.qd)?;
    let g = model.gravity_vector(&s.q)?;
    let rhs = -(c * &s.qd + g);
    linalg::solve_spd(&m, &rhs, "mass matrix")
}

/// Drift of the built-in model.
pub fn drift_term(s: &JointState, p: &RobotParams) -> Result<DVector<f64>> {
    drift_term_model(p, s)
}

/// Total mechanical energy ½·q̇ᵀM(q)q̇ + U(q).
pub fn total_energy(s: &JointState, p: &RobotParams) -> Result<f64> {
    let m = p.mass_matrix(&s.q)?;
    let kinetic = 0.5 * s.qd.dot(&(&m * &s.qd));
    Ok(kinetic + p.potential_energy(&s.q)?)
}

/// Eigenvalue bounds of M(q) sampled on a `grid`×`grid` joint-angle lattice
/// over [−π, π). Evaluated in parallel under the `parallel` feature.
pub fn mass_eig_bounds(p: &RobotParams, grid: usize) -> Result<(f64, f64)> {
    check_two_link(p)?;
    if grid < 2 {
        return Err(Error::InvalidParams(
            "grid must have at least two points per joint".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = lattice_2d(grid);
    let ranges = crate::parallel::par_map(&pts, |&(q1, q2)| {
        let q = DVector::from_vec(vec![q1, q2]);
        p.mass_matrix(&q).map(|m| linalg::sym_eig_range(&m))
    });
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in ranges {
        let (l, h) = r?;
        lo = lo.min(l);
        hi = hi.max(h);
    }
    Ok((lo, hi))
}

/// Numerical estimate of the velocity gain bound: max ‖C(q, x)‖ over unit
/// directions x and a joint-angle lattice. ‖C(q, x)‖ ≤ bound·‖x‖ follows
/// from linearity of C in its velocity argument.
pub fn coriolis_gain_bound(p: &RobotParams, grid: usize) -> Result<f64> {
    check_two_link(p)?;
    let pts = lattice_2d(grid.max(2));
    let dirs = 1024usize;
    let norms = crate::parallel::par_map(&pts, |&(q1, q2)| -> Result<f64> {
        let q = DVector::from_vec(vec![q1, q2]);
        let mut worst: f64 = 0.0;
        for k in 0..dirs {
            let phi = 2.0 * std::f64::consts::PI * (k as f64) / (dirs as f64);
            let x = DVector::from_vec(vec![phi.cos(), phi.sin()]);
            let c = p.coriolis_matrix(&q, &x)?;
            worst = worst.max(linalg::op_norm(&c));
        }
        Ok(worst)
    });
    let mut bound: f64 = 0.0;
    for n in norms {
        bound = bound.max(n?);
    }
    Ok(bound)
}

/// Numerical Lipschitz bound of the drift in the velocity argument over
/// ‖q̇‖ ≤ `v_max`: max finite-difference slope on a lattice.
pub fn drift_velocity_slope_bound(p: &RobotParams, grid: usize, v_max: f64) -> Result<f64> {
    check_two_link(p)?;
    let pts = lattice_2d(grid.max(2));
    let step = 1e-4;
    let slopes = crate::parallel::par_map(&pts, |&(q1, q2)| -> Result<f64> {
        let q = DVector::from_vec(vec![q1, q2]);
        let mut worst: f64 = 0.0;
        for a in 0..grid.max(2) {
            let frac = (a as f64) / ((grid.max(2) - 1) as f64);
            let v = -v_max + 2.0 * v_max * frac;
            for dir in 0..2 {
                let qd = DVector::from_vec(if dir == 0 {
                    vec![v, 0.3 * v]
                } else {
                    vec![0.3 * v, v]
                });
                let mut qd2 = qd.clone();
                qd2[dir] += step;
                let f1 = drift_term(&JointState { q: q.clone(), qd }, p)?;
                let f2 = drift_term(
                    &JointState {
                        q: q.clone(),
                        qd: qd2,
                    },
                    p,
                )?;
                worst = worst.max((f2 - f1).norm() / step);
            }
        }
        Ok(worst)
    });
    let mut bound: f64 = 0.0;
    for s in slopes {
        bound = bound.max(s?);
    }
    Ok(bound)
}

fn lattice_2d(grid: usize) -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(grid * grid);
    for i in 0..grid {
        for j in 0..grid {
            let q1 =
                -std::f64::consts::PI + 2.0 * std::f64::consts::PI * (i as f64) / (grid as f64);
            let q2 =
                -std::f64::consts::PI + 2.0 * std::f64::consts::PI * (j as f64) / (grid as f64);
            pts.push((q1, q2));
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn v2(a: f64, b: f64) -> DVector<f64> {
        DVector::from_vec(vec![a, b])
    }

    // Independent assembly of the textbook two-link terms, written out
    // separately from the implementation and solved by Cramer's rule.
    mod oracle {
        pub fn mass(q2: f64, p: &super::RobotParams) -> [[f64; 2]; 2] {
            let (m1, m2) = (p.masses[0], p.masses[1]);
            let (l1, lc1, lc2) = (p.lengths[0], p.com[0], p.com[1]);
            let (i1, i2) = (p.inertias[0], p.inertias[1]);
            let a = m1 * lc1.powi(2)
                + m2 * (l1.powi(2) + lc2.powi(2) + 2.0 * l1 * lc2 * q2.cos())
                + i1
                + i2;
            let b = m2 * (lc2.powi(2) + l1 * lc2 * q2.cos()) + i2;
            let d = m2 * lc2.powi(2) + i2;
            [[a + p.motor_inertia[0], b], [b, d + p.motor_inertia[1]]]
        }

        pub fn coriolis_torque(q2: f64, qd: (f64, f64), p: &super::RobotParams) -> [f64; 2] {
            let h = p.masses[1] * p.lengths[0] * p.com[1] * q2.sin();
            [-h * qd.1 * qd.0 - h * (qd.0 + qd.1) * qd.1, h * qd.0 * qd.0]
        }

        pub fn gravity(q1: f64, q2: f64, p: &super::RobotParams) -> [f64; 2] {
            let g = p.gravity;
            let t1 = (p.masses[0] * p.com[0] + p.masses[1] * p.lengths[0]) * g * q1.cos();
            let t2 = p.masses[1] * p.com[1] * g * (q1 + q2).cos();
            [t1 + t2, t2]
        }

        pub fn solve2(m: [[f64; 2]; 2], r: [f64; 2]) -> [f64; 2] {
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            [
                (m[1][1] * r[0] - m[0][1] * r[1]) / det,
                (m[0][0] * r[1] - m[1][0] * r[0]) / det,
            ]
        }
    }

    #[test]
    fn mass_matrix_reference_values() {
        let p = RobotParams::default();
        let m = mass_matrix(&v2(0.0, 0.0), &p).unwrap();
        assert_relative_eq!(m[(0, 0)], 15.0, max_relative = 1e-12);
        assert_relative_eq!(m[(0, 1)], 25.0 / 6.0, max_relative = 1e-12);
        assert_relative_eq!(m[(1, 0)], 25.0 / 6.0, max_relative = 1e-12);
        assert_relative_eq!(m[(1, 1)], 5.0 / 3.0, max_relative = 1e-12);

        let m = mass_matrix(&v2(0.0, PI / 2.0), &p).unwrap();
        assert_relative_eq!(m[(0, 0)], 10.0, max_relative = 1e-12);
        assert_relative_eq!(m[(0, 1)], 5.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(m[(1, 1)], 5.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn mass_matrix_rejects_non_finite() {
        let p = RobotParams::default();
        assert!(mass_matrix(&v2(f64::NAN, 0.0), &p).is_err());
    }

    #[test]
    fn coriolis_reference_values() {
        let p = RobotParams::default();
        let z = coriolis_matrix(&v2(0.7, -1.1), &v2(0.0, 0.0), &p).unwrap();
        assert_eq!(z.amax(), 0.0);
        let z = coriolis_matrix(&v2(0.4, 0.0), &v2(2.0, -3.0), &p).unwrap();
        assert_eq!(z.amax(), 0.0);

        let c = coriolis_matrix(&v2(0.0, PI / 2.0), &v2(1.0, 1.0), &p).unwrap();
        assert_relative_eq!(c[(0, 0)], -2.5, max_relative = 1e-12);
        assert_relative_eq!(c[(0, 1)], -5.0, max_relative = 1e-12);
        assert_relative_eq!(c[(1, 0)], 2.5, max_relative = 1e-12);
        assert_eq!(c[(1, 1)], 0.0);
    }

    #[test]
    fn gravity_reference_values() {
        let p = RobotParams::default();
        let g = gravity_vector(&v2(PI / 2.0, 0.0), &p).unwrap();
        assert!(g.norm() < 1e-12);

        let g = gravity_vector(&v2(0.0, 0.0), &p).unwrap();
        assert_relative_eq!(g[0], 122.625, max_relative = 1e-12);
        assert_relative_eq!(g[1], 24.525, max_relative = 1e-12);

        let g = gravity_vector(&v2(0.0, PI / 2.0), &p).unwrap();
        assert_relative_eq!(g[0], 98.1, max_relative = 1e-12);
        assert!(g[1].abs() < 1e-12);
    }

    #[test]
    fn potential_energy_gauge_and_gradient() {
        let p = RobotParams::default();
        assert_eq!(potential_energy(&v2(0.0, 0.0), &p).unwrap(), 0.0);

        // central differences, step 1e-5
        let fd_step = 1e-5;
        let q = v2(0.3, -0.7);
        let g = gravity_vector(&q, &p).unwrap();
        for j in 0..2 {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[j] += fd_step;
            qm[j] -= fd_step;
            let fd = (potential_energy(&qp, &p).unwrap() - potential_energy(&qm, &p).unwrap())
                / (2.0 * fd_step);
            assert_relative_eq!(fd, g[j], max_relative = 1e-6);
        }
    }

    #[test]
    fn potential_energy_periodic() {
        let p = RobotParams::default();
        let q = v2(0.9, -0.4);
        let u0 = potential_energy(&q, &p).unwrap();
        for shift in [(2.0 * PI, 0.0), (0.0, 2.0 * PI), (-2.0 * PI, 2.0 * PI)] {
            let u = potential_energy(&v2(q[0] + shift.0, q[1] + shift.1), &p).unwrap();
            assert_relative_eq!(u, u0, epsilon = 1e-9);
        }
    }

    #[test]
    fn gravity_matches_potential_gradient_at_random_configurations() {
        let p = RobotParams::default();
        let mut rng = rand::rngs::StdRng::seed_from_u64(42);
        let fd_step = 1e-5;
        for _ in 0..100 {
            let q = v2(rng.random_range(-PI..PI), rng.random_range(-PI..PI));
            let g = gravity_vector(&q, &p).unwrap();
            for j in 0..2 {
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[j] += fd_step;
                qm[j] -= fd_step;
                let fd = (potential_energy(&qp, &p).unwrap() - potential_energy(&qm, &p).unwrap())
                    / (2.0 * fd_step);
                let denom = g[j].abs().max(1.0);
                assert!((fd - g[j]).abs() / denom < 1e-6, "joint {j} at q = {q:?}");
            }
        }
    }

    #[test]
    fn friction_reference_values() {
        let f = FrictionParams::new(v2(5.0, 5.0), v2(5.0, 5.0), 1e-3).unwrap();
        let t = friction_torque(&v2(0.0, 0.0), &f).unwrap();
        assert_eq!(t.amax(), 0.0);

        let t = friction_torque(&v2(1.0, -1.0), &f).unwrap();
        assert!((t[0] - 10.0).abs() < 1e-6);
        assert!((t[1] + 10.0).abs() < 1e-6);

        let t = friction_torque(&v2(1e-6, 0.0), &f).unwrap();
        let expected = 5.0 * 1e-6 + 5.0 * (1e-3f64).tanh();
        assert_relative_eq!(t[0], expected, max_relative = 1e-12);
        assert_eq!(t[1], 0.0);
    }

    #[test]
    fn forward_dynamics_equilibria() {
        let p = RobotParams::default();
        // gravity vanishes at the upright configuration
        let s = JointState::new(v2(PI / 2.0, 0.0), v2(0.0, 0.0)).unwrap();
        let a = forward_dynamics(&s, &v2(0.0, 0.0), &p, None).unwrap();
        assert!(a.norm() < 1e-12);

        // gravity compensation holds anywhere
        let s = JointState::new(v2(0.3, -1.2), v2(0.0, 0.0)).unwrap();
        let u = gravity_vector(&s.q, &p).unwrap();
        let a = forward_dynamics(&s, &u, &p, None).unwrap();
        assert!(a.norm() < 1e-12);
    }

    #[test]
    fn forward_dynamics_matches_independent_assembly() {
        let p = RobotParams::default();
        let s = JointState::new(v2(0.2, 0.4), v2(0.1, -0.3)).unwrap();
        let u = v2(1.0, 1.0);
        let a = forward_dynamics(&s, &u, &p, None).unwrap();

        let m = oracle::mass(0.4, &p);
        let ct = oracle::coriolis_torque(0.4, (0.1, -0.3), &p);
        let g = oracle::gravity(0.2, 0.4, &p);
        let want = oracle::solve2(m, [u[0] - ct[0] - g[0], u[1] - ct[1] - g[1]]);
        assert!((a[0] - want[0]).abs() < 1e-10);
        assert!((a[1] - want[1]).abs() < 1e-10);
    }

    #[test]
    fn drift_equals_unforced_frictionless_dynamics() {
        let p = RobotParams::default();
        let s = JointState::new(v2(0.5, -0.5), v2(1.0, 2.0)).unwrap();
        let d = drift_term(&s, &p).unwrap();
        let a = forward_dynamics(&s, &v2(0.0, 0.0), &p, None).unwrap();
        assert!((d - &a).norm() < 1e-14);

        // against the independent assembly
        let m = oracle::mass(-0.5, &p);
        let ct = oracle::coriolis_torque(-0.5, (1.0, 2.0), &p);
        let g = oracle::gravity(0.5, -0.5, &p);
        let want = oracle::solve2(m, [-ct[0] - g[0], -ct[1] - g[1]]);
        assert!((a[0] - want[0]).abs() < 1e-10);
        assert!((a[1] - want[1]).abs() < 1e-10);
    }

    #[test]
    fn coriolis_consistent_with_mass_matrix_christoffel() {
        // C(q, q̇)·q̇ must equal the Christoffel torques derived from M(q);
        // finite differences of M give an implementation-independent route.
        let p = RobotParams::default();
        let step = 1e-6;
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let q = v2(rng.random_range(-PI..PI), rng.random_range(-PI..PI));
            let qd = v2(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let mut dm = [DMatrix::zeros(2, 2), DMatrix::zeros(2, 2)];
            for k in 0..2 {
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[k] += step;
                qm[k] -= step;
                dm[k] =
                    (mass_matrix(&qp, &p).unwrap() - mass_matrix(&qm, &p).unwrap()) / (2.0 * step);
            }
            let mut christoffel = v2(0.0, 0.0);
            for k in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        christoffel[k] +=
                            0.5 * (dm[i][(k, j)] + dm[j][(k, i)] - dm[k][(i, j)]) * qd[i] * qd[j];
                    }
                }
            }
            let c = coriolis_matrix(&q, &qd, &p).unwrap();
            let torque = c * &qd;
            assert!((torque - christoffel).norm() < 1e-7, "q = {q:?}");
        }
    }

    #[test]
    fn payload_reference_values() {
        let p = RobotParams::default();
        let same = apply_payload(&p, &PayloadPerturbation::ZERO).unwrap();
        assert_eq!(same, p);

        let d = PayloadPerturbation {
            dm2: 5.0,
            dlc2: 0.5,
            di2: 1.0 / 6.0,
        };
        let t = apply_payload(&p, &d).unwrap();
        assert_relative_eq!(t.masses[1], 10.0, max_relative = 1e-12);
        assert_relative_eq!(t.com[1], 1.0, max_relative = 1e-12);
        assert_relative_eq!(t.inertias[1], 7.0 / 12.0, max_relative = 1e-12);
        // nominal untouched
        assert_relative_eq!(p.masses[1], 5.0, max_relative = 1e-15);

        let bad = PayloadPerturbation {
            dm2: -10.0,
            dlc2: 0.0,
            di2: 0.0,
        };
        assert!(apply_payload(&p, &bad).is_err());
    }

    #[test]
    fn payload_rejects_com_beyond_length() {
        let p = RobotParams::default();
        let d = PayloadPerturbation {
            dm2: 0.0,
            dlc2: 0.8,
            di2: 0.0,
        };
        assert!(apply_payload(&p, &d).is_err());
    }

    #[test]
    fn mass_bounds_on_grid() {
        let p = RobotParams::default();
        let (lo, hi) = mass_eig_bounds(&p, 32).unwrap();
        assert!(lo > 0.0 && hi > lo);
        // spot check: bounds contain the eigenvalues at a random configuration
        let m = mass_matrix(&v2(0.123, -2.456), &p).unwrap();
        let (l, h) = linalg::sym_eig_range(&m);
        assert!(l >= lo - 1e-9 && h <= hi + 1e-9);
    }

    #[test]
    fn coriolis_gain_bound_scales_velocity() {
        // direction sampling leaves a small gap to the true supremum, so the
        // bound holds with a 0.1 % slack
        let p = RobotParams::default();
        let mu = coriolis_gain_bound(&p, 16).unwrap();
        assert!(mu > 0.0);
        let mut rng = rand::rngs::StdRng::seed_from_u64(9);
        for _ in 0..50 {
            let q = v2(rng.random_range(-PI..PI), rng.random_range(-PI..PI));
            let x = v2(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
            let c = coriolis_matrix(&q, &x, &p).unwrap();
            assert!(linalg::op_norm(&c) <= mu * x.norm() * 1.001 + 1e-9);
        }
    }

    #[test]
    fn drift_slope_bound_is_finite() {
        let p = RobotParams::default();
        let kappa = drift_velocity_slope_bound(&p, 8, 4.0).unwrap();
        assert!(kappa.is_finite() && kappa > 0.0);
    }

    // a hand-rolled single-link pendulum exercises the n-link model hook
    struct Pendulum {
        m: f64,
        lc: f64,
        inertia: f64,
        g: f64,
    }

    impl ArmModel for Pendulum {
        fn dof(&self) -> usize {
            1
        }
        fn mass_matrix(&self, _q: &DVector<f64>) -> crate::error::Result<DMatrix<f64>> {
            Ok(DMatrix::from_element(
                1,
                1,
                self.inertia + self.m * self.lc * self.lc,
            ))
        }
        fn coriolis_matrix(
            &self,
            _q: &DVector<f64>,
            _qd: &DVector<f64>,
        ) -> crate::error::Result<DMatrix<f64>> {
            Ok(DMatrix::zeros(1, 1))
        }
        fn gravity_vector(&self, q: &DVector<f64>) -> crate::error::Result<DVector<f64>> {
            Ok(DVector::from_element(
                1,
                self.m * self.g * self.lc * q[0].cos(),
            ))
        }
        fn potential_energy(&self, q: &DVector<f64>) -> crate::error::Result<f64> {
            Ok(self.m * self.g * self.lc * q[0].sin())
        }
    }

    #[test]
    fn user_supplied_model_drives_the_generic_paths() {
        let pend = Pendulum {
            m: 2.0,
            lc: 0.3,
            inertia: 0.1,
            g: 9.81,
        };
        let s = JointState::new(
            DVector::from_element(1, 0.4),
            DVector::from_element(1, -1.2),
        )
        .unwrap();
        let u = DVector::from_element(1, 0.7);
        let a = forward_dynamics_model(&pend, &s, &u, None).unwrap();
        let inertia_total = 0.1 + 2.0 * 0.09;
        let want = (0.7 - 2.0 * 9.81 * 0.3 * 0.4f64.cos()) / inertia_total;
        assert_relative_eq!(a[0], want, max_relative = 1e-12);

        let d = drift_term_model(&pend, &s).unwrap();
        assert_relative_eq!(
            d[0],
            -2.0 * 9.81 * 0.3 * 0.4f64.cos() / inertia_total,
            max_relative = 1e-12
        );

        // the built-in closed form refuses anything but two links
        let p = RobotParams::default();
        assert!(p.mass_matrix(&DVector::from_element(1, 0.0)).is_err());
    }

    proptest! {
        #[test]
        fn mass_matrix_symmetric_positive_definite(
            q1 in -10.0f64..10.0,
            q2 in -10.0f64..10.0,
        ) {
            let p = RobotParams::default();
            let m = mass_matrix(&v2(q1, q2), &p).unwrap();
            prop_assert_eq!(m[(0, 1)], m[(1, 0)]);
            let (lo, _) = linalg::sym_eig_range(&m);
            prop_assert!(lo > 0.0);
        }

        #[test]
        fn friction_is_odd_and_dissipative(
            v1 in -20.0f64..20.0,
            v2p in -20.0f64..20.0,
        ) {
            let f = FrictionParams::new(v2(5.0, 5.0), v2(5.0, 5.0), 1e-3).unwrap();
            let qd = v2(v1, v2p);
            let t = friction_torque(&qd, &f).unwrap();
            let tn = friction_torque(&(-&qd), &f).unwrap();
            prop_assert!((&t + &tn).norm() < 1e-12);
            // friction power qd·t is non-negative (it opposes motion)
            prop_assert!(qd.dot(&t) >= 0.0);
        }
    }
}

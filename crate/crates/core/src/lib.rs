//! Closed-form receding-horizon tracking control of rigid-link robot arms.
//!
//! The crate couples a rigid-link manipulator model with a family of
//! predictive tracking controllers that need no online optimization: the
//! horizon cost is collapsed by Simpson's rule and a short Taylor prediction
//! of the tracking error, which yields the control torque in closed form.
//! Three variants are provided — the basic law, its computed-torque limit
//! (effort weight zero), and an integral-action law that removes the steady
//! state error left by model mismatch. A high-gain observer reconstructs
//! joint velocities from position measurements for output-feedback runs.
//!
//! Modules:
//!
//! - [`dynamics`]: inertia, Coriolis, gravity, friction and forward dynamics
//!   of the built-in two-link arm (extensible to n links via [`dynamics::ArmModel`]).
//! - [`mod@reference`]: critically-damped second-order reference filters driven by
//!   a smooth bounded step input.
//! - [`control`]: the closed-form torque laws plus the Simpson cost and
//!   Taylor error-prediction diagnostics.
//! - [`observer`]: the high-gain velocity observer.
//! - [`analysis`]: closed-loop matrices, Hurwitz checks, Lyapunov solves and
//!   robustness margins evaluated at frozen configurations.
//! - [`sim`]: fixed-step RK4 integration of the full closed loop, trajectory
//!   logging and run metrics.
//!
//! With the default `parallel` feature, batch entry points
//! ([`sim::run_batch`], [`analysis::lemma1_random_sweep`],
//! [`dynamics::mass_eig_bounds`]) fan out over rayon; disabling the feature
//! swaps in a sequential fallback with identical results.
//!
//! ```
//! use rhcsim::sim::{compute_metrics, run_scenario, SimConfig};
//!
//! let mut cfg = SimConfig::benchmark();
//! cfg.t_end = 0.5;
//! let log = run_scenario(&cfg)?;
//! let metrics = compute_metrics(&log, cfg.settle_band)?;
//! assert!(metrics.steady_state_e1.max() < 1e-3);
//! # Ok::<(), rhcsim::Error>(())
//! ```

pub mod analysis;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod observer;
pub mod reference;
pub mod sim;

mod linalg;
mod parallel;

pub use error::{Error, Result};

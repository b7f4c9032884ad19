//! Closed-loop stability diagnostics at frozen configurations.
//!
//! The tracking-error dynamics of the three torque laws are linear in the
//! error with state-dependent coefficient blocks. This module assembles
//! those block matrices, verifies their Hurwitz property by two independent
//! routes (dense eigensolve vs. the per-eigenvalue factorization through the
//! inertia spectrum), solves algebraic Lyapunov equations at frozen states,
//! and evaluates the sufficient robustness thresholds together with
//! disturbance gains estimated from logged trajectories.

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};

use crate::dynamics::{self, FrictionParams, JointState, RobotParams};
use crate::error::{Error, Result};
use crate::linalg;
use crate::sim::TrajectoryLog;

/// Real parts in [−HURWITZ_TOL, 0] are conservatively reported as unstable.
pub const HURWITZ_TOL: f64 = 1e-10;

/// Smallest eigenvalue of b = M⁻¹M₀ for which the integral-action loop is
/// stable at a frozen state (Routh boundary of the per-eigenvalue cubic).
pub const MIN_STABLE_B_EIGENVALUE: f64 = 5.0 / 18.0;

/// Largest eigenvalue of M₀⁻¹ΔM compatible with the bound above.
pub const MAX_STABLE_MISMATCH: f64 = 2.6;

/// Which closed-loop matrix a report refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClosedLoopKind {
    /// Basic law on the exact model.
    Basic,
    /// Effort-weight-zero law under model mismatch.
    MismatchLimit,
    /// Integral-action law under model mismatch.
    IntegralMismatch,
}

impl ClosedLoopKind {
    /// Stable label used in report tables.
    pub fn label(&self) -> &'static str {
        match self {
            ClosedLoopKind::Basic => "A_basic",
            ClosedLoopKind::MismatchLimit => "B_bar",
            ClosedLoopKind::IntegralMismatch => "B_tilde",
        }
    }
}

/// Eigen-structure and certificate data for one closed-loop matrix.
#[derive(Clone, Debug)]
pub struct StabilityReport {
    pub kind: ClosedLoopKind,
    pub eigenvalues: Vec<Complex<f64>>,
    pub max_real: f64,
    pub hurwitz: bool,
    /// Lyapunov certificate, when one was solved for.
    pub lyapunov_p: Option<DMatrix<f64>>,
    /// Sufficient disturbance-gain threshold, when computed.
    pub threshold: Option<f64>,
    /// threshold − estimated gain; positive certifies the sufficient condition.
    pub margin: Option<f64>,
}

/// Operator-norm bounds on the model mismatch and the disturbance gains
/// estimated pointwise along a logged trajectory.
#[derive(Clone, Debug)]
pub struct UncertaintyBounds {
    /// max ‖ΔM(q)‖ along the log.
    pub m_bar: f64,
    /// max ‖ΔC(q, q̇)‖ along the log.
    pub c_bar: f64,
    /// max ‖ΔG(q)‖ along the log.
    pub g_bar: f64,
    /// max friction torque norm along the log.
    pub f_bar: f64,
    /// max ‖v‖/‖e‖ over samples with ‖e‖ > 1e-6 (lumped disturbance gain).
    pub gamma: f64,
    /// max ‖drift − q̈_ref‖/‖e‖ over the same samples.
    pub mu: f64,
    /// m_bar stayed below the smallest inertia eigenvalue along the log.
    pub m_bound_ok: bool,
    /// No sample had ‖e‖ > 1e-6: gamma and mu are reported as 0 and carry
    /// no information.
    pub all_converged: bool,
}

pub fn complex_eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    m.clone().complex_eigenvalues().iter().copied().collect()
}

pub fn max_real_part(eigs: &[Complex<f64>]) -> f64 {
    eigs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max)
}

pub fn is_hurwitz(eigs: &[Complex<f64>]) -> bool {
    eigs.iter().all(|l| l.re < -HURWITZ_TOL)
}

/// Eigen report (no certificate) for an already-assembled matrix.
pub fn stability_report(kind: ClosedLoopKind, matrix: &DMatrix<f64>) -> StabilityReport {
    let eigenvalues = complex_eigenvalues(matrix);
    let max_real = max_real_part(&eigenvalues);
    let hurwitz = is_hurwitz(&eigenvalues);
    StabilityReport {
        kind,
        eigenvalues,
        max_real,
        hurwitz,
        lyapunov_p: None,
        threshold: None,
        margin: None,
    }
}

/// Closed-loop error matrix of the basic law at a frozen inertia:
/// [[0, I], [−q·h²·P̄⁻¹, −2q·h³·P̄⁻¹]] with P̄ = q·h⁴·I + r·M².
pub fn closed_loop_a(h: f64, q_w: f64, r_w: f64, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    validate_weights(h, q_w, r_w)?;
    linalg::check_spd(m, "inertia matrix")?;
    let n = m.nrows();
    let p_bar = weighted_gram(h, q_w, r_w, m, 4);
    let p_inv = nalgebra::Cholesky::new(p_bar)
        .ok_or(Error::NotPositiveDefinite("horizon weight matrix"))?
        .inverse();
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    a.view_mut((0, n), (n, n))
        .copy_from(&DMatrix::identity(n, n));
    a.view_mut((n, 0), (n, n))
        .copy_from(&(&p_inv * (-q_w * h * h)));
    a.view_mut((n, n), (n, n))
        .copy_from(&(&p_inv * (-2.0 * q_w * h * h * h)));
    Ok(a)
}

/// P̄ = q·h^k·I + r·M² (k = 4 for the basic law, 6 for the integral law
/// with the extra 5/9 factor applied by the caller).
fn weighted_gram(h: f64, q_w: f64, r_w: f64, m: &DMatrix<f64>, pow: i32) -> DMatrix<f64> {
    let n = m.nrows();
    DMatrix::identity(n, n) * (q_w * h.powi(pow)) + m * m * r_w
}

fn validate_weights(h: f64, q_w: f64, r_w: f64) -> Result<()> {
    if !(q_w > 0.0 && q_w.is_finite()) {
        return Err(Error::InvalidParams(
            "q_weight must be strictly positive".into(),
        ));
    }
    if !(r_w >= 0.0 && r_w.is_finite()) {
        return Err(Error::InvalidParams("r_weight must be non-negative".into()));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParams(
            "prediction increment h must be strictly positive".into(),
        ));
    }
    Ok(())
}

/// Mismatch closed-loop matrix of the effort-weight-zero law:
/// [[0, I], [−b/h², −2b/h]] with b = M⁻¹M₀.
pub fn mismatch_matrix(b: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
    let n = b.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, n), (n, n))
        .copy_from(&DMatrix::identity(n, n));
    out.view_mut((n, 0), (n, n))
        .copy_from(&(b * (-1.0 / (h * h))));
    out.view_mut((n, n), (n, n)).copy_from(&(b * (-2.0 / h)));
    out
}

/// Mismatch closed-loop matrix of the integral-action law:
/// blocks −(12/5h³)b, −(18/5h²)b, −(12/5h)b on the last row.
pub fn integral_mismatch_matrix(b: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
    let n = b.nrows();
    let mut out = DMatrix::zeros(3 * n, 3 * n);
    out.view_mut((0, n), (n, n))
        .copy_from(&DMatrix::identity(n, n));
    out.view_mut((n, 2 * n), (n, n))
        .copy_from(&DMatrix::identity(n, n));
    out.view_mut((2 * n, 0), (n, n))
        .copy_from(&(b * (-12.0 / (5.0 * h.powi(3)))));
    out.view_mut((2 * n, n), (n, n))
        .copy_from(&(b * (-18.0 / (5.0 * h * h))));
    out.view_mut((2 * n, 2 * n), (n, n))
        .copy_from(&(b * (-12.0 / (5.0 * h))));
    out
}

/// b = M⁻¹(q)·M₀(q) together with its eigenvalues, which are real and
/// positive for symmetric positive definite inputs (computed through the
/// symmetric generalized form L⁻¹M₀L⁻ᵀ).
pub fn b_matrix(m_true: &DMatrix<f64>, m_nom: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    linalg::check_spd(m_true, "true inertia")?;
    linalg::check_spd(m_nom, "nominal inertia")?;
    let chol = nalgebra::Cholesky::new(m_true.clone())
        .ok_or(Error::NotPositiveDefinite("true inertia"))?;
    let b = chol.solve(m_nom);
    let eigs = congruent_sym_eigs(m_true, m_nom)?;
    if eigs.iter().any(|&l| l <= 1e-9) {
        return Err(Error::InvalidParams(
            "b eigenvalues must be real and positive".into(),
        ));
    }
    Ok((b, eigs))
}

/// Eigenvalues of M⁻¹N for SPD M and symmetric N via L⁻¹ N L⁻ᵀ.
fn congruent_sym_eigs(m: &DMatrix<f64>, n_mat: &DMatrix<f64>) -> Result<Vec<f64>> {
    let l = nalgebra::Cholesky::new(m.clone())
        .ok_or(Error::NotPositiveDefinite("congruence base"))?
        .l();
    let x = l
        .clone()
        .solve_lower_triangular(n_mat)
        .ok_or(Error::Singular("triangular solve"))?;
    let z = l
        .solve_lower_triangular(&x.transpose())
        .ok_or(Error::Singular("triangular solve"))?;
    let s = (z.transpose() + &z) * 0.5;
    let mut eigs: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(eigs)
}

/// Scaled worst-pair distance between two eigenvalue multisets
/// (greedy nearest matching; |Δλ| / max(1, |λ|)).
pub fn eig_multiset_gap(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for la in a {
        let mut best = f64::INFINITY;
        let mut best_i = 0;
        for (i, lb) in b.iter().enumerate() {
            if used[i] {
                continue;
            }
            let d = (la - lb).norm();
            if d < best {
                best = d;
                best_i = i;
            }
        }
        used[best_i] = true;
        worst = worst.max(best / la.norm().max(1.0));
    }
    worst
}

/// Monic polynomial coefficients (descending powers) from a root multiset.
fn poly_from_roots(roots: &[Complex<f64>]) -> Vec<Complex<f64>> {
    let mut coeffs = vec![Complex::new(1.0, 0.0)];
    for r in roots {
        coeffs.push(Complex::new(0.0, 0.0));
        for k in (1..coeffs.len()).rev() {
            let prev = coeffs[k - 1];
            coeffs[k] -= r * prev;
        }
    }
    coeffs
}

/// Monic polynomial coefficients (descending) from quadratic factors
/// λ² + b·λ + c.
fn poly_from_quadratics(factors: &[(f64, f64)]) -> Vec<f64> {
    let mut coeffs = vec![1.0];
    for &(b, c) in factors {
        let mut next = vec![0.0; coeffs.len() + 2];
        for (k, &a) in coeffs.iter().enumerate() {
            next[k] += a;
            next[k + 1] += a * b;
            next[k + 2] += a * c;
        }
        coeffs = next;
    }
    coeffs
}

/// One basic-law Hurwitz case: dense eigensolve of A against the
/// per-eigenvalue quadratic route through the spectrum of P̄.
#[derive(Clone, Debug)]
pub struct Lemma1Case {
    /// Largest real part seen by the dense eigensolve.
    pub max_real: f64,
    /// Conservative dense verdict (real parts below −HURWITZ_TOL).
    pub hurwitz: bool,
    /// Every quadratic-route eigenvalue has a strictly negative real part.
    /// This route computes −q·h³·λ̄ directly and carries no cancellation,
    /// so the sign is exact.
    pub strictly_stable: bool,
    /// Worst relative mismatch of characteristic-polynomial coefficients
    /// between the dense eigensolve and the product of the per-eigenvalue
    /// quadratics. Two monic polynomials agree iff the eigenvalue multisets
    /// do, and the coefficients stay well conditioned where the roots
    /// themselves are defective (double roots at r = 0, where any dense
    /// eigensolve splits them by O(√eps·‖A‖)).
    pub factorization_gap: f64,
}

pub fn lemma1_case(h: f64, q_w: f64, r_w: f64, m: &DMatrix<f64>) -> Result<Lemma1Case> {
    let a = closed_loop_a(h, q_w, r_w, m)?;
    let dense = complex_eigenvalues(&a);

    // quadratic route: per eigenvalue λ̄ of P̄⁻¹, the pair solves
    // λ² + 2q·h³·λ̄·λ + q·h²·λ̄ = 0, i.e. sum = −2q·h³·λ̄, product = q·h²·λ̄
    let p_bar = weighted_gram(h, q_w, r_w, m, 4);
    let mut strictly_stable = true;
    let mut factors = Vec::with_capacity(m.nrows());
    for lp in p_bar.symmetric_eigenvalues().iter() {
        let lam_bar = 1.0 / lp;
        let b = 2.0 * q_w * h.powi(3) * lam_bar;
        let c = q_w * h * h * lam_bar;
        factors.push((b, c));
        let disc = b * b - 4.0 * c;
        if disc >= 0.0 {
            // real pair (−b ± √disc)/2; both negative since c > 0
            strictly_stable &= -b + disc.sqrt() < 0.0;
        } else {
            strictly_stable &= -b < 0.0;
        }
    }

    // multiset comparison through the characteristic polynomial: all roots
    // share the left half plane, so the coefficients are cancellation-free
    let dense_poly = poly_from_roots(&dense);
    let quad_poly = poly_from_quadratics(&factors);
    let mut gap = 0.0f64;
    for (d, q) in dense_poly.iter().zip(quad_poly.iter()) {
        gap = gap.max((d - Complex::new(*q, 0.0)).norm() / q.abs().max(1.0));
    }

    Ok(Lemma1Case {
        max_real: max_real_part(&dense),
        hurwitz: is_hurwitz(&dense),
        strictly_stable,
        factorization_gap: gap,
    })
}

/// Hurwitz verification of the basic closed loop with the two eigenvalue
/// routes cross-checked; a disagreement beyond 1e-8 is an implementation
/// fault and comes back as an error.
pub fn lemma1_check(h: f64, q_w: f64, r_w: f64, m: &DMatrix<f64>) -> Result<StabilityReport> {
    let case = lemma1_case(h, q_w, r_w, m)?;
    if case.factorization_gap > 1e-8 {
        return Err(Error::Inconsistent(format!(
            "eigenvalue factorization gap {:.3e} exceeds 1e-8",
            case.factorization_gap
        )));
    }
    let a = closed_loop_a(h, q_w, r_w, m)?;
    Ok(stability_report(ClosedLoopKind::Basic, &a))
}

/// Random draw for the large-scale Hurwitz sweep.
#[derive(Clone, Debug)]
pub struct Lemma1Draw {
    pub h: f64,
    pub q_w: f64,
    pub r_w: f64,
    pub m: DMatrix<f64>,
}

/// Deterministic draws: h log-uniform in [1e-4, 1e-1], q log-uniform in
/// [1, 1e8], r uniform in [0, 1], M SPD with eigenvalues in [0.1, 50].
pub fn lemma1_draws(count: usize, seed: u64) -> Vec<Lemma1Draw> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let h = 10f64.powf(rng.random_range(-4.0..-1.0));
            let q_w = 10f64.powf(rng.random_range(0.0..8.0));
            let r_w = rng.random_range(0.0..1.0);
            let l1 = rng.random_range(0.1..50.0);
            let l2 = rng.random_range(0.1..50.0);
            let th = rng.random_range(0.0..std::f64::consts::PI);
            let (s, c) = th.sin_cos();
            let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
            let m =
                &rot * DMatrix::from_diagonal(&DVector::from_vec(vec![l1, l2])) * rot.transpose();
            Lemma1Draw { h, q_w, r_w, m }
        })
        .collect()
}

/// Aggregate of a random Hurwitz sweep.
#[derive(Clone, Debug)]
pub struct Lemma1Sweep {
    pub cases: usize,
    /// Worst dense-eigensolve real part; can sit at roundoff level (~1e-12)
    /// above zero for draws whose true real parts are below machine noise.
    pub worst_max_real: f64,
    pub worst_gap: f64,
    /// Conservative dense verdict held on every draw.
    pub all_hurwitz: bool,
    /// The exact-sign quadratic route was strictly stable on every draw.
    pub all_strictly_stable: bool,
}

/// Run `count` random basic-law cases (parallel under the default feature)
/// and fold the worst observations.
pub fn lemma1_random_sweep(count: usize, seed: u64) -> Result<Lemma1Sweep> {
    let draws = lemma1_draws(count, seed);
    let results = crate::parallel::par_map(&draws, |d| lemma1_case(d.h, d.q_w, d.r_w, &d.m));
    let mut worst_max_real = f64::NEG_INFINITY;
    let mut worst_gap = 0.0f64;
    let mut all_hurwitz = true;
    let mut all_strict = true;
    for r in results {
        let c = r?;
        worst_max_real = worst_max_real.max(c.max_real);
        worst_gap = worst_gap.max(c.factorization_gap);
        all_hurwitz &= c.hurwitz;
        all_strict &= c.strictly_stable;
    }
    Ok(Lemma1Sweep {
        cases: count,
        worst_max_real,
        worst_gap,
        all_hurwitz,
        all_strictly_stable: all_strict,
    })
}

/// Frozen-state stability data for the integral-action loop under mismatch.
#[derive(Clone, Debug)]
pub struct MismatchReport {
    /// λmax(M₀⁻¹ΔM).
    pub eps_max: f64,
    /// Eigenvalues of b = M⁻¹M₀, ascending.
    pub b_eigenvalues: Vec<f64>,
    /// eps_max < 2.6.
    pub eps_ok: bool,
    /// Every b eigenvalue exceeds 5/18.
    pub routh_ok: bool,
    /// Dense eigensolve of the integral mismatch matrix.
    pub report: StabilityReport,
    /// The three checks told the same story.
    pub consistent: bool,
}

pub fn lemma2_check(m_true: &DMatrix<f64>, m_nom: &DMatrix<f64>, h: f64) -> Result<MismatchReport> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParams(
            "prediction increment h must be strictly positive".into(),
        ));
    }
    let (b, b_eigs) = b_matrix(m_true, m_nom)?;
    let delta = m_true - m_nom;
    let eps_eigs = congruent_sym_eigs(m_nom, &delta)?;
    let eps_max = eps_eigs.last().copied().unwrap_or(0.0);
    let eps_ok = eps_max < MAX_STABLE_MISMATCH;
    let routh_ok = b_eigs.iter().all(|&l| l > MIN_STABLE_B_EIGENVALUE);
    let report = stability_report(
        ClosedLoopKind::IntegralMismatch,
        &integral_mismatch_matrix(&b, h),
    );
    let consistent = eps_ok == routh_ok && routh_ok == report.hurwitz;
    Ok(MismatchReport {
        eps_max,
        b_eigenvalues: b_eigs,
        eps_ok,
        routh_ok,
        report,
        consistent,
    })
}

/// Radix-2 Osborne balancing: returns D (as a diagonal vector of exact
/// powers of two) and the balanced matrix D⁻¹AD with equalized row/column
/// norms. Balancing is a similarity, so the spectrum is untouched.
fn balance(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut d = DVector::from_element(n, 1.0);
    let radix: f64 = 2.0;
    loop {
        let mut converged = true;
        for i in 0..n {
            let mut col = 0.0;
            let mut row = 0.0;
            for j in 0..n {
                if j != i {
                    col += m[(j, i)].abs();
                    row += m[(i, j)].abs();
                }
            }
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let start = col + row;
            let mut f = 1.0;
            let mut c = col;
            while c < row / radix {
                f *= radix;
                c *= radix * radix;
            }
            while c >= row * radix {
                f /= radix;
                c /= radix * radix;
            }
            if (c + row) / f < 0.95 * start && f != 1.0 {
                converged = false;
                d[i] *= f;
                for j in 0..n {
                    m[(i, j)] /= f;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
        if converged {
            break;
        }
    }
    (d, m)
}

/// Solve AᵀP + PA = −Q for Hurwitz A and SPD Q.
///
/// Kronecker vectorization after diagonal balancing and time scaling, with
/// iterative refinement. The residual and positive-definiteness checks run
/// in the balanced coordinates: balancing uses exact powers of two, so the
/// balanced equation is the original one under an exact congruence, while
/// its residual stays evaluable for the stiff closed-loop matrices here
/// (norms up to ~h⁻³, where the raw-units residual drowns in the roundoff
/// of forming AᵀP itself). Residual above 1e-8·‖Q‖ or an indefinite P
/// reports failure.
pub fn lyapunov_solve(a: &DMatrix<f64>, qm: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = a.nrows();
    if a.ncols() != m || qm.nrows() != m || qm.ncols() != m {
        return Err(Error::InvalidParams(
            "lyapunov operands must be square and share a size".into(),
        ));
    }
    linalg::check_spd(qm, "lyapunov right-hand side")?;

    // balanced similarity A = D·Ã·D⁻¹ turns the equation into
    // ÃᵀP̃ + P̃Ã = −DQD with P̃ = DPD
    let (d, a_bal) = balance(a);
    let eigs = complex_eigenvalues(&a_bal);
    if let Some(bad) = eigs.iter().find(|l| l.re >= -HURWITZ_TOL) {
        return Err(Error::NotHurwitz {
            re: bad.re,
            im: bad.im,
        });
    }
    let scale = eigs.iter().map(|l| l.norm()).fold(0.0f64, f64::max);
    let a_hat = &a_bal / scale;
    let d_mat = DMatrix::from_diagonal(&d);
    let q_bal = &d_mat * qm * &d_mat;

    let at = a_hat.transpose();
    let id = DMatrix::<f64>::identity(m, m);
    let k = id.kronecker(&at) + at.kronecker(&id);
    let rhs = -DVector::from_column_slice(q_bal.as_slice()) / scale;
    let lu = k.clone().lu();
    let mut p_vec = lu.solve(&rhs).ok_or(Error::Singular("lyapunov system"))?;
    for _ in 0..2 {
        let resid = &k * &p_vec - &rhs;
        match lu.solve(&resid) {
            Some(corr) => p_vec -= corr,
            None => break,
        }
    }

    let p_raw = DMatrix::from_column_slice(m, m, p_vec.as_slice());
    let p_bal = (&p_raw + p_raw.transpose()) * 0.5;

    let residual = (a_bal.transpose() * &p_bal + &p_bal * &a_bal + &q_bal).norm();
    if residual > 1e-8 * q_bal.norm() {
        return Err(Error::Inconsistent(format!(
            "lyapunov residual {:.3e} exceeds 1e-8 of the right-hand side",
            residual / q_bal.norm()
        )));
    }
    let (p_lo, _) = linalg::sym_eig_range(&p_bal);
    if p_lo <= 0.0 || p_lo.is_nan() {
        return Err(Error::NotPositiveDefinite("lyapunov solution"));
    }

    let d_inv = DMatrix::from_diagonal(&d.map(|v| 1.0 / v));
    Ok(&d_inv * p_bal * &d_inv)
}

/// Sufficient disturbance-gain threshold λmin(Q)/(2·λmax(P)) from a Lyapunov
/// certificate of `matrix`. Applies to both mismatch closed loops.
pub fn robustness_threshold(
    matrix: &DMatrix<f64>,
    qm: &DMatrix<f64>,
) -> Result<(f64, DMatrix<f64>)> {
    let p = lyapunov_solve(matrix, qm)?;
    let (q_lo, _) = linalg::sym_eig_range(qm);
    let (_, p_hi) = linalg::sym_eig_range(&p);
    Ok((q_lo / (2.0 * p_hi), p))
}

/// The two printed forms of the basic-law threshold on the drift gain μ.
/// They differ in which extreme of P̄ enters; `proof_consistent` follows the
/// chain of inequalities and is the one margins are judged against.
#[derive(Clone, Copy, Debug)]
pub struct EffortWeightThresholds {
    pub stated: f64,
    pub proof_consistent: f64,
}

/// Thresholds for the basic law with a non-zero effort weight at a frozen
/// inertia. `m_upper` is the workspace bound on ‖M‖; `qm` the Lyapunov
/// right-hand side. An effort weight of zero makes the condition vacuous
/// (both thresholds +∞).
pub fn effort_weight_thresholds(
    h: f64,
    q_w: f64,
    r_w: f64,
    m: &DMatrix<f64>,
    m_upper: f64,
    qm: &DMatrix<f64>,
) -> Result<(EffortWeightThresholds, DMatrix<f64>)> {
    let a = closed_loop_a(h, q_w, r_w, m)?;
    let p_a = lyapunov_solve(&a, qm)?;
    if r_w == 0.0 {
        return Ok((
            EffortWeightThresholds {
                stated: f64::INFINITY,
                proof_consistent: f64::INFINITY,
            },
            p_a,
        ));
    }
    let p_bar = weighted_gram(h, q_w, r_w, m, 4);
    let (pb_lo, pb_hi) = linalg::sym_eig_range(&p_bar);
    let (q_lo, _) = linalg::sym_eig_range(qm);
    let (_, pa_hi) = linalg::sym_eig_range(&p_a);
    let denom = 2.0 * r_w * m_upper * m_upper * pa_hi;
    Ok((
        EffortWeightThresholds {
            stated: q_lo * pb_hi / denom,
            proof_consistent: q_lo * pb_lo / denom,
        },
        p_a,
    ))
}

/// Evaluate the lumped disturbance v = −M⁻¹(ΔM·q̈_ref + ΔC·q̇ + ΔG + f)
/// pointwise along a log and estimate the gains γ (on ‖v‖) and μ (on the
/// drift difference), plus operator-norm bounds on each mismatch term.
pub fn estimate_gains(
    log: &TrajectoryLog,
    nominal: &RobotParams,
    plant: &RobotParams,
    friction: Option<&FrictionParams>,
) -> Result<UncertaintyBounds> {
    if log.rows.is_empty() {
        return Err(Error::EmptyLog);
    }
    let mut out = UncertaintyBounds {
        m_bar: 0.0,
        c_bar: 0.0,
        g_bar: 0.0,
        f_bar: 0.0,
        gamma: 0.0,
        mu: 0.0,
        m_bound_ok: true,
        all_converged: true,
    };
    let mut min_mass_eig = f64::INFINITY;
    for row in &log.rows {
        let s = JointState {
            q: row.q.clone(),
            qd: row.qd.clone(),
        };
        let m_t = dynamics::mass_matrix(&s.q, plant)?;
        let m_n = dynamics::mass_matrix(&s.q, nominal)?;
        let c_t = dynamics::coriolis_matrix(&s.q, &s.qd, plant)?;
        let c_n = dynamics::coriolis_matrix(&s.q, &s.qd, nominal)?;
        let g_t = dynamics::gravity_vector(&s.q, plant)?;
        let g_n = dynamics::gravity_vector(&s.q, nominal)?;
        let fr = match friction {
            Some(f) => dynamics::plant_friction(&s.q, &s.qd, f)?,
            None => DVector::zeros(s.q.len()),
        };

        let dm = &m_t - &m_n;
        let (dm_lo, dm_hi) = linalg::sym_eig_range(&dm);
        out.m_bar = out.m_bar.max(dm_lo.abs().max(dm_hi.abs()));
        out.c_bar = out.c_bar.max(linalg::op_norm(&(&c_t - &c_n)));
        out.g_bar = out.g_bar.max((&g_t - &g_n).norm());
        out.f_bar = out.f_bar.max(fr.norm());
        let (mass_lo, _) = linalg::sym_eig_range(&m_t);
        min_mass_eig = min_mass_eig.min(mass_lo);

        let forcing = &dm * &row.qddref + (&c_t - &c_n) * &s.qd + (&g_t - &g_n) + fr;
        let v = -linalg::solve_spd(&m_t, &forcing, "mass matrix")?;

        let e_norm = (row.e1.norm_squared() + row.e2.norm_squared()).sqrt();
        if e_norm > 1e-6 {
            out.all_converged = false;
            out.gamma = out.gamma.max(v.norm() / e_norm);
            let drift = dynamics::drift_term(&s, plant)?;
            out.mu = out.mu.max((drift - &row.qddref).norm() / e_norm);
        }
    }
    out.m_bound_ok = out.m_bar <= min_mass_eig;
    Ok(out)
}

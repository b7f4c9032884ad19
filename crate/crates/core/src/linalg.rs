//! Shared helpers for small symmetric positive definite systems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Condition-number ceiling above which an inertia matrix is treated as a
/// parameter fault instead of being solved.
pub(crate) const MAX_CONDITION: f64 = 1e12;

/// Eigenvalue range (min, max) of a symmetric matrix.
pub(crate) fn sym_eig_range(m: &DMatrix<f64>) -> (f64, f64) {
    if m.nrows() == 2 {
        // closed form, avoids an iterative eigensolve in the hot loop
        let (a, b, c) = (m[(0, 0)], m[(0, 1)], m[(1, 1)]);
        let mean = 0.5 * (a + c);
        let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        (mean - r, mean + r)
    } else {
        let ev = m.symmetric_eigenvalues();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in ev.iter() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

/// Validate that `m` is symmetric positive definite and well conditioned.
/// Returns the eigenvalue range on success.
pub(crate) fn check_spd(m: &DMatrix<f64>, what: &'static str) -> Result<(f64, f64)> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidParams(format!(
            "{what}: matrix must be square"
        )));
    }
    let scale = m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-9 * scale {
                return Err(Error::NotPositiveDefinite(what));
            }
        }
    }
    let (lo, hi) = sym_eig_range(m);
    if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 {
        return Err(Error::NotPositiveDefinite(what));
    }
    if hi / lo > MAX_CONDITION {
        return Err(Error::IllConditioned { cond: hi / lo });
    }
    Ok((lo, hi))
}

/// Solve `m x = rhs` for symmetric positive definite `m`.
///
/// The 2x2 case goes through an explicit Cramer solve (validated against the
/// factorization path in tests); larger systems use a Cholesky factorization.
pub(crate) fn solve_spd(
    m: &DMatrix<f64>,
    rhs: &DVector<f64>,
    what: &'static str,
) -> Result<DVector<f64>> {
    check_spd(m, what)?;
    if m.nrows() == 2 {
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(0, 1)];
        let x0 = (m[(1, 1)] * rhs[0] - m[(0, 1)] * rhs[1]) / det;
        let x1 = (m[(0, 0)] * rhs[1] - m[(0, 1)] * rhs[0]) / det;
        Ok(DVector::from_vec(vec![x0, x1]))
    } else {
        nalgebra::Cholesky::new(m.clone())
            .map(|ch| ch.solve(rhs))
            .ok_or(Error::NotPositiveDefinite(what))
    }
}

/// Cholesky-based solve without the 2x2 fast path; reference route for tests
/// and for callers that want the factorization unconditionally.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn solve_spd_factorized(
    m: &DMatrix<f64>,
    rhs: &DVector<f64>,
    what: &'static str,
) -> Result<DVector<f64>> {
    check_spd(m, what)?;
    nalgebra::Cholesky::new(m.clone())
        .map(|ch| ch.solve(rhs))
        .ok_or(Error::NotPositiveDefinite(what))
}

/// Largest singular value (operator 2-norm) of a general small matrix.
pub(crate) fn op_norm(m: &DMatrix<f64>) -> f64 {
    if m.amax() == 0.0 {
        return 0.0;
    }
    m.clone().singular_values().max()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_spd2(rng: &mut impl Rng) -> DMatrix<f64> {
        let l1: f64 = rng.random_range(0.1..50.0);
        let l2: f64 = rng.random_range(0.1..50.0);
        let th: f64 = rng.random_range(0.0..std::f64::consts::PI);
        let (s, c) = th.sin_cos();
        let r = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![l1, l2]));
        &r * d * r.transpose()
    }

    #[test]
    fn cramer_fast_path_matches_cholesky() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let m = random_spd2(&mut rng);
            let rhs = DVector::from_fn(2, |_, _| rng.random_range(-10.0..10.0));
            let fast = solve_spd(&m, &rhs, "test").unwrap();
            let slow = solve_spd_factorized(&m, &rhs, "test").unwrap();
            let denom = slow.norm().max(1.0);
            assert!((&fast - &slow).norm() / denom < 1e-12);
        }
    }

    #[test]
    fn spd_check_rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            check_spd(&m, "test"),
            Err(Error::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn spd_check_rejects_ill_conditioned() {
        let m = DMatrix::from_row_slice(2, 2, &[1e14, 0.0, 0.0, 1.0]);
        assert!(matches!(
            check_spd(&m, "test"),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn sym_range_matches_general_path() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..100 {
            let m = random_spd2(&mut rng);
            let (lo, hi) = sym_eig_range(&m);
            let ev = m.symmetric_eigenvalues();
            let lo_ref = ev.min();
            let hi_ref = ev.max();
            assert!((lo - lo_ref).abs() < 1e-9 * hi_ref.max(1.0));
            assert!((hi - hi_ref).abs() < 1e-9 * hi_ref.max(1.0));
        }
    }
}

//! Small dense linear algebra: 3-vectors, 3x3 matrices, the skew-symmetric
//! operator, and an Nx3 least-squares solver with rank diagnostics.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use thiserror::Error;

/// Ratio against the largest singular value below which a singular value is
/// treated as zero when deciding numerical rank.
pub const RANK_RATIO_TOL: f64 = 1e-8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NumericsError {
    #[error("least-squares system contains no sample blocks")]
    EmptySystem,
}

/// 3-vector; units depend on context (m, m/s, N, N·m).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Euclidean norm of the (x, y) components only.
    pub fn norm_xy(self) -> f64 {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn as_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        self.scale(s)
    }
}

/// 3x3 matrix, row-major storage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Mat3 {
    pub m: [f64; 9],
}

impl Mat3 {
    pub const fn new(m: [f64; 9]) -> Self {
        Mat3 { m }
    }

    pub const fn zero() -> Self {
        Mat3 { m: [0.0; 9] }
    }

    pub fn identity() -> Self {
        Mat3::diag(1.0, 1.0, 1.0)
    }

    pub fn diag(x: f64, y: f64, z: f64) -> Self {
        let mut m = [0.0; 9];
        m[0] = x;
        m[4] = y;
        m[8] = z;
        Mat3 { m }
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.m[3 * row + col]
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.m;
        Mat3::new([m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]])
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        let m = &self.m;
        Vec3::new(
            m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|e| e.is_finite())
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (self.at(0, 1) - self.at(1, 0)).abs() <= tol
            && (self.at(0, 2) - self.at(2, 0)).abs() <= tol
            && (self.at(1, 2) - self.at(2, 1)).abs() <= tol
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, o: Mat3) -> Mat3 {
        let mut m = [0.0; 9];
        for (i, e) in m.iter_mut().enumerate() {
            *e = self.m[i] + o.m[i];
        }
        Mat3 { m }
    }
}

/// Skew-symmetric matrix S of v, satisfying S·w = v × w for all w.
pub fn skew(v: Vec3) -> Mat3 {
    Mat3::new([0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0])
}

/// Right-handed cross product a × b.
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    Vec3::new(
        a.y * b.z - a.z * b.y,
        a.z * b.x - a.x * b.z,
        a.x * b.y - a.y * b.x,
    )
}

/// Stacked Nx3 linear system assembled from 3-row blocks.
#[derive(Clone, Debug, Default)]
pub struct StackedSystem {
    pub rows: Vec<(Mat3, Vec3)>,
}

impl StackedSystem {
    pub fn new() -> Self {
        StackedSystem { rows: Vec::new() }
    }

    pub fn push_block(&mut self, coeff: Mat3, rhs: Vec3) {
        self.rows.push((coeff, rhs));
    }

    pub fn sample_count(&self) -> usize {
        self.rows.len()
    }
}

/// Least-squares solution of a stacked system together with its diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeastSquares {
    pub solution: Vec3,
    /// Numerical rank of the coefficient matrix (0..=3).
    pub rank: usize,
    /// ‖A·x − b‖₂ at the returned solution.
    pub residual_norm: f64,
}

/// Minimum-norm least-squares solve of the stacked system via SVD.
///
/// Rank counts singular values above `RANK_RATIO_TOL` times the largest one;
/// singular directions below that are excluded from the solution, so a
/// rank-deficient system yields the minimum-norm minimizer and `rank < 3`
/// signals non-identifiability to the caller.
pub fn solve_least_squares(sys: &StackedSystem) -> Result<LeastSquares, NumericsError> {
    let n = sys.sample_count();
    if n == 0 {
        return Err(NumericsError::EmptySystem);
    }

    let mut a = DMatrix::<f64>::zeros(3 * n, 3);
    let mut b = DVector::<f64>::zeros(3 * n);
    for (k, (block, rhs)) in sys.rows.iter().enumerate() {
        for row in 0..3 {
            for col in 0..3 {
                a[(3 * k + row, col)] = block.at(row, col);
            }
        }
        b[3 * k] = rhs.x;
        b[3 * k + 1] = rhs.y;
        b[3 * k + 2] = rhs.z;
    }

    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let eps = RANK_RATIO_TOL * sigma_max;
    let rank = svd.rank(eps);
    let x = svd
        .solve(&b, eps)
        .expect("SVD computed with both U and V");
    let solution = Vec3::new(x[0], x[1], x[2]);
    let residual_norm = (a * &x - b).norm();

    Ok(LeastSquares {
        solution,
        rank,
        residual_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skew_of_zero_is_zero_matrix() {
        assert_eq!(skew(Vec3::ZERO), Mat3::zero());
    }

    #[test]
    fn skew_times_vector_is_cross_product() {
        let v = Vec3::new(1.0, 2.0, 3.0);
        let w = Vec3::new(4.0, 5.0, 6.0);
        assert_eq!(skew(v).mul_vec(w), Vec3::new(-3.0, 6.0, -3.0));
        assert_eq!(skew(v).mul_vec(w), cross(v, w));
    }

    #[test]
    fn skew_is_antisymmetric() {
        let v = Vec3::new(0.1, -0.2, 0.3);
        assert_eq!(skew(v) + skew(v).transpose(), Mat3::zero());
    }

    #[test]
    fn cross_basis_identity() {
        let x = Vec3::new(1.0, 0.0, 0.0);
        let y = Vec3::new(0.0, 1.0, 0.0);
        assert_eq!(cross(x, y), Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn cross_with_self_vanishes() {
        let a = Vec3::new(2.0, -1.0, 5.0);
        assert_eq!(cross(a, a), Vec3::ZERO);
    }

    #[test]
    fn cross_offset_with_vertical_force() {
        let r = Vec3::new(0.085, 0.0, 0.0);
        let f = Vec3::new(0.0, 0.0, 9.81);
        let tau = cross(r, f);
        assert!((tau.x).abs() < 1e-15);
        assert!((tau.y - (-0.83385)).abs() < 1e-12);
        assert!((tau.z).abs() < 1e-15);
    }

    #[test]
    fn identity_system_returns_rhs() {
        let mut sys = StackedSystem::new();
        sys.push_block(Mat3::identity(), Vec3::new(1.0, 2.0, 3.0));
        let ls = solve_least_squares(&sys).unwrap();
        assert_eq!(ls.rank, 3);
        assert!((ls.solution - Vec3::new(1.0, 2.0, 3.0)).norm() < 1e-12);
        assert!(ls.residual_norm < 1e-12);
    }

    #[test]
    fn parallel_skew_blocks_are_rank_two() {
        let mut sys = StackedSystem::new();
        sys.push_block(skew(Vec3::new(0.0, 0.0, 10.0)), Vec3::ZERO);
        sys.push_block(skew(Vec3::new(0.0, 0.0, 20.0)), Vec3::ZERO);
        let ls = solve_least_squares(&sys).unwrap();
        assert_eq!(ls.rank, 2);
    }

    #[test]
    fn orthogonal_skew_blocks_recover_solution() {
        let truth = Vec3::new(0.02, -0.01, 0.05);
        let b1 = skew(Vec3::new(10.0, 0.0, 0.0));
        let b2 = skew(Vec3::new(0.0, 10.0, 0.0));
        let mut sys = StackedSystem::new();
        sys.push_block(b1, b1.mul_vec(truth));
        sys.push_block(b2, b2.mul_vec(truth));
        let ls = solve_least_squares(&sys).unwrap();
        assert_eq!(ls.rank, 3);
        assert!((ls.solution - truth).norm() < 1e-12);
    }

    #[test]
    fn empty_system_is_an_error() {
        let sys = StackedSystem::new();
        assert_eq!(
            solve_least_squares(&sys).unwrap_err(),
            NumericsError::EmptySystem
        );
    }

    #[test]
    fn zero_system_reports_rank_zero() {
        let mut sys = StackedSystem::new();
        sys.push_block(Mat3::zero(), Vec3::ZERO);
        let ls = solve_least_squares(&sys).unwrap();
        assert_eq!(ls.rank, 0);
        assert_eq!(ls.solution, Vec3::ZERO);
    }
}

//! SU(2) and SO(3) rotation algebra.
//!
//! `su2_from_axis_angle(n, a)` is `exp(+i a/2 n·σ)`. Under the adjoint map
//! this element becomes the right-handed rotation `R_n(-a)`, so a sideband
//! block `Q_j(θ, φ)` acts on the Bloch sphere as a rotation by `√j θ` about
//! `(cos φ, sin φ, 0)` up to orientation.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::ops::Mul;

use nalgebra::{Matrix2, Matrix3, Vector3};
use num_complex::Complex64;

use crate::error::{invalid, Result};

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Vec3 = Vector3<f64>;

const UNIT_TOL: f64 = 1e-9;
const SU2_TOL: f64 = 1e-12;
const IDENTITY_TOL: f64 = 1e-12;

pub fn pauli_x() -> Mat2 {
    Mat2::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0))
}

pub fn pauli_y() -> Mat2 {
    Mat2::new(C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0))
}

pub fn pauli_z() -> Mat2 {
    Mat2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0))
}

fn paulis() -> [Mat2; 3] {
    [pauli_x(), pauli_y(), pauli_z()]
}

/// Rotation axis and angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    pub axis: Vec3,
    pub angle: f64,
    /// Set when the source element was ±I and the axis carries no information.
    pub axis_arbitrary: bool,
}

impl AxisAngle {
    pub fn new(axis: Vec3, angle: f64) -> Result<Self> {
        let norm = axis.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
            return invalid(format!("axis norm {norm} is not 1"));
        }
        if !angle.is_finite() {
            return invalid("angle is not finite");
        }
        Ok(Self { axis: axis / norm, angle, axis_arbitrary: false })
    }

    pub fn zero() -> Self {
        Self { axis: Vec3::x(), angle: 0.0, axis_arbitrary: true }
    }

    /// Angle folded into [0, π] with the axis flipped as needed.
    pub fn canonical_so3(&self) -> Self {
        let mut a = self.angle.rem_euclid(2.0 * PI);
        let mut axis = self.axis;
        if a > PI {
            a = 2.0 * PI - a;
            axis = -axis;
        }
        Self { axis, angle: a, axis_arbitrary: self.axis_arbitrary }
    }

    /// Right-handed rotation matrix (Rodrigues).
    pub fn to_so3(&self) -> So3Matrix {
        So3Matrix(rodrigues(&self.axis, self.angle))
    }

    pub fn is_in_plane(&self) -> bool {
        self.axis.z.abs() <= IDENTITY_TOL
    }
}

pub fn rodrigues(axis: &Vec3, angle: f64) -> Matrix3<f64> {
    let k = Matrix3::new(
        0.0, -axis.z, axis.y, //
        axis.z, 0.0, -axis.x, //
        -axis.y, axis.x, 0.0,
    );
    Matrix3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos())
}

/// 2×2 special unitary matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2Matrix(Mat2);

impl Su2Matrix {
    /// Validates unitarity and unit determinant to 1e-12.
    pub fn new(m: Mat2) -> Result<Self> {
        let dev = (m.adjoint() * m - Mat2::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !(dev <= SU2_TOL) {
            return invalid(format!("matrix is not unitary (deviation {dev:.3e})"));
        }
        let det = m.determinant();
        if !((det - C64::new(1.0, 0.0)).norm() <= SU2_TOL) {
            return invalid(format!("determinant {det} is not 1"));
        }
        Ok(Self(m))
    }

    /// Projects a near-SU(2) matrix onto SU(2) through its quaternion part.
    pub fn from_quaternion(w: f64, v: Vec3) -> Self {
        let n = (w * w + v.norm_squared()).sqrt();
        let (w, v) = (w / n, v / n);
        Self(Mat2::new(
            C64::new(w, v.z),
            C64::new(v.y, v.x),
            C64::new(-v.y, v.x),
            C64::new(w, -v.z),
        ))
    }

    pub fn identity() -> Self {
        Self(Mat2::identity())
    }

    pub fn minus_identity() -> Self {
        Self(-Mat2::identity())
    }

    /// `iσx`
    pub fn x() -> Self {
        Self(pauli_x() * C64::i())
    }

    /// `iσy`
    pub fn y() -> Self {
        Self(pauli_y() * C64::i())
    }

    /// `iσz`
    pub fn z() -> Self {
        Self(pauli_z() * C64::i())
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn neg(&self) -> Self {
        Self(-self.0)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// `(w, v)` with `u = w I + i v·σ`.
    pub fn quaternion(&self) -> (f64, Vec3) {
        let m = &self.0;
        let w = 0.5 * (m[(0, 0)] + m[(1, 1)]).re;
        let vx = 0.5 * (m[(0, 1)] + m[(1, 0)]).im;
        let vy = 0.5 * (m[(0, 1)] - m[(1, 0)]).re;
        let vz = 0.5 * (m[(0, 0)] - m[(1, 1)]).im;
        (w, Vec3::new(vx, vy, vz))
    }

    /// Max entrywise distance to `other`.
    pub fn distance(&self, other: &Su2Matrix) -> f64 {
        max_abs(&(self.0 - other.0))
    }

    /// `Some(+1)` or `Some(-1)` if the element is ±I within `tol`.
    pub fn sign_if_scalar(&self, tol: f64) -> Option<f64> {
        if self.distance(&Self::identity()) <= tol {
            Some(1.0)
        } else if self.distance(&Self::minus_identity()) <= tol {
            Some(-1.0)
        } else {
            None
        }
    }
}

impl Mul for Su2Matrix {
    type Output = Su2Matrix;
    fn mul(self, rhs: Su2Matrix) -> Su2Matrix {
        Su2Matrix(self.0 * rhs.0)
    }
}

pub fn max_abs(m: &Mat2) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Orthogonal 3×3 matrix with determinant +1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct So3Matrix(pub Matrix3<f64>);

impl So3Matrix {
    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn distance(&self, other: &So3Matrix) -> f64 {
        (self.0 - other.0).abs().max()
    }

    /// Angle in [0, π].
    pub fn angle(&self) -> f64 {
        (0.5 * (self.0.trace() - 1.0)).clamp(-1.0, 1.0).acos()
    }
}

impl Mul for So3Matrix {
    type Output = So3Matrix;
    fn mul(self, rhs: So3Matrix) -> So3Matrix {
        So3Matrix(self.0 * rhs.0)
    }
}

/// `R(first)` applied before `R(second)`: the source equals `R(second)·R(first)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XyRotationPair {
    pub first: AxisAngle,
    pub second: AxisAngle,
}

impl XyRotationPair {
    pub fn to_so3(&self) -> So3Matrix {
        self.second.to_so3() * self.first.to_so3()
    }
}

pub fn su2_from_axis_angle(axis: &Vec3, angle: f64) -> Result<Su2Matrix> {
    let aa = AxisAngle::new(*axis, angle)?;
    let (s, c) = (0.5 * aa.angle).sin_cos();
    Ok(Su2Matrix::from_quaternion(c, aa.axis * s))
}

/// Adjoint action `R_ij = ½ tr(σ_i u σ_j u†)`.
pub fn so3_from_su2(u: &Su2Matrix) -> So3Matrix {
    let s = paulis();
    let m = u.matrix();
    let mut r = Matrix3::zeros();
    for j in 0..3 {
        let rotated = m * s[j] * m.adjoint();
        for i in 0..3 {
            r[(i, j)] = 0.5 * (s[i] * rotated).trace().re;
        }
    }
    So3Matrix(r)
}

/// `u† g u`
pub fn conjugate(g: &Su2Matrix, u: &Su2Matrix) -> Su2Matrix {
    u.adjoint() * *g * *u
}

/// Inverse of `su2_from_axis_angle`; angle in [0, 2π].
pub fn axis_angle_of(u: &Su2Matrix) -> AxisAngle {
    let (w, v) = u.quaternion();
    let s = v.norm();
    if s < IDENTITY_TOL {
        let angle = if w > 0.0 { 0.0 } else { 2.0 * PI };
        return AxisAngle { axis: Vec3::x(), angle, axis_arbitrary: true };
    }
    AxisAngle { axis: v / s, angle: 2.0 * s.atan2(w), axis_arbitrary: false }
}

/// Splits a rotation into two rotations about axes in the xy-plane.
///
/// `free_angle` picks one member of the one-parameter family of solutions.
pub fn decompose_to_xy_plane(r: &AxisAngle, free_angle: f64) -> XyRotationPair {
    let n = r.axis;
    let theta = r.angle;
    if n.z.abs() <= IDENTITY_TOL {
        let axis = Vec3::new(n.x, n.y, 0.0).normalize();
        let first = AxisAngle { axis, angle: theta, axis_arbitrary: false };
        let second = AxisAngle { axis, angle: 0.0, axis_arbitrary: true };
        return XyRotationPair { first, second };
    }
    let r1p = Vec3::new(-n.z, 0.0, n.x) / (n.x * n.x + n.z * n.z).sqrt();
    let r2p = n.cross(&r1p).normalize();
    let z = Vec3::z();
    let solve = |phi: f64| {
        let n1 = r1p * phi.cos() + r2p * phi.sin();
        let n2 = r1p * (phi + 0.5 * theta).cos() + r2p * (phi + 0.5 * theta).sin();
        let c1 = n1.cross(&z);
        let c2 = z.cross(&n2);
        if c1.norm() < UNIT_TOL || c2.norm() < UNIT_TOL {
            return None;
        }
        let mut a1 = c1.normalize();
        let mut a2 = c2.normalize();
        a1.z = 0.0;
        a2.z = 0.0;
        Some(XyRotationPair {
            first: AxisAngle { axis: a1, angle: 2.0 * n1.dot(&z).clamp(-1.0, 1.0).acos(), axis_arbitrary: false },
            second: AxisAngle { axis: a2, angle: 2.0 * z.dot(&n2).clamp(-1.0, 1.0).acos(), axis_arbitrary: false },
        })
    };
    // Bad shifts occupy at most two residues mod π, so one of these succeeds.
    [0.0, FRAC_PI_2, FRAC_PI_4, 3.0 * FRAC_PI_4]
        .iter()
        .find_map(|shift| solve(free_angle + shift))
        .expect("xy decomposition retries cover all degenerate cases")
}

/// SU(2) factors `(g1, g2)` with axes in the xy-plane and `g1·g2 = u` exactly.
pub fn su2_in_plane_factors(u: &Su2Matrix, free_angle: f64) -> Vec<(Vec3, f64)> {
    let aa = axis_angle_of(u);
    if aa.axis_arbitrary {
        return if aa.angle == 0.0 { vec![] } else { vec![(Vec3::x(), 2.0 * PI)] };
    }
    // Geometric rotation of su2(n, a) is R_n(-a); geometric R_r(t) is su2(r, -t).
    let geo = AxisAngle { axis: aa.axis, angle: -aa.angle, axis_arbitrary: false };
    let pair = decompose_to_xy_plane(&geo, free_angle);
    let mut g1 = (pair.second.axis, -pair.second.angle);
    let g2 = (pair.first.axis, -pair.first.angle);
    let build = |f: &(Vec3, f64)| su2_from_axis_angle(&f.0, f.1).expect("unit axis");
    let prod = build(&g1) * build(&g2);
    if prod.distance(u) > prod.distance(&u.neg()) {
        g1.1 += 2.0 * PI;
    }
    [g1, g2].into_iter().filter(|f| f.1.abs() > 0.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn unit(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z).normalize()
    }

    fn arb_unit() -> impl Strategy<Value = Vec3> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
            .prop_filter("nonzero", |(x, y, z)| x * x + y * y + z * z > 1e-3)
            .prop_map(|(x, y, z)| unit(x, y, z))
    }

    fn arb_su2() -> impl Strategy<Value = Su2Matrix> {
        (arb_unit(), -2.0 * PI..2.0 * PI).prop_map(|(n, a)| su2_from_axis_angle(&n, a).unwrap())
    }

    #[test]
    fn zero_angle_is_identity() {
        let u = su2_from_axis_angle(&Vec3::x(), 0.0).unwrap();
        assert!(u.distance(&Su2Matrix::identity()) < 1e-15);
    }

    #[test]
    fn pi_about_x_is_i_sigma_x() {
        let u = su2_from_axis_angle(&Vec3::x(), PI).unwrap();
        let expect = Mat2::new(c(0.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(0.0, 0.0));
        assert!(max_abs(&(u.matrix() - expect)) < 1e-15);
    }

    #[test]
    fn x_conjugation_flips_z() {
        let x = su2_from_axis_angle(&Vec3::x(), PI).unwrap();
        for theta in [PI, 0.7, -2.1] {
            let z = su2_from_axis_angle(&Vec3::z(), theta).unwrap();
            let lhs = conjugate(&z, &x);
            let rhs = su2_from_axis_angle(&Vec3::z(), -theta).unwrap();
            assert!(lhs.distance(&rhs).min(lhs.distance(&rhs.neg())) < 1e-14);
        }
    }

    #[test]
    fn non_unit_axis_rejected() {
        assert!(su2_from_axis_angle(&Vec3::new(1.0, 1.0, 0.0), 0.3).is_err());
    }

    #[test]
    fn non_unitary_rejected() {
        assert!(Su2Matrix::new(Mat2::identity() * c(2.0, 0.0)).is_err());
        assert!(Su2Matrix::new(pauli_x()).is_err());
    }

    #[test]
    fn so3_examples() {
        assert!((so3_from_su2(&Su2Matrix::identity()).0 - Matrix3::identity()).abs().max() < 1e-15);
        let r = so3_from_su2(&Su2Matrix::x());
        assert!((r.0 - Matrix3::from_diagonal(&Vec3::new(1.0, -1.0, -1.0))).abs().max() < 1e-15);
    }

    #[test]
    fn so3_orientation() {
        let n = unit(0.3, -0.5, 0.8);
        let r = so3_from_su2(&su2_from_axis_angle(&n, 1.1).unwrap());
        assert!(r.distance(&AxisAngle::new(n, -1.1).unwrap().to_so3()) < 1e-14);
    }

    #[test]
    fn axis_angle_examples() {
        let aa = axis_angle_of(&Su2Matrix::x());
        assert!((aa.axis - Vec3::x()).norm() < 1e-15 && (aa.angle - PI).abs() < 1e-15);
        let id = axis_angle_of(&Su2Matrix::identity());
        assert!(id.axis_arbitrary && id.angle == 0.0);
        let mid = axis_angle_of(&Su2Matrix::minus_identity());
        assert!(mid.axis_arbitrary && (mid.angle - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn xy_in_plane_passthrough() {
        let r = AxisAngle::new(Vec3::x(), FRAC_PI_2).unwrap();
        let p = decompose_to_xy_plane(&r, 0.4);
        assert_eq!(p.first.axis, Vec3::x());
        assert_eq!(p.first.angle, FRAC_PI_2);
        assert_eq!(p.second.angle, 0.0);
    }

    #[test]
    fn xy_about_z() {
        let r = AxisAngle::new(Vec3::z(), FRAC_PI_2).unwrap();
        let p = decompose_to_xy_plane(&r, 0.0);
        assert!(p.to_so3().distance(&r.to_so3()) < 1e-10);
        assert_eq!(p.first.axis.z, 0.0);
        assert_eq!(p.second.axis.z, 0.0);
    }

    #[test]
    fn xy_degenerate_normals_resolve() {
        // Axis almost in-plane with θ = π: normals at φ and φ + π/2 both hit ẑ.
        let n = unit(1.0, 0.0, 5e-11);
        for theta in [PI, 0.5 * PI, 1.0] {
            let r = AxisAngle::new(n, theta).unwrap();
            for k in 0..16 {
                let p = decompose_to_xy_plane(&r, k as f64 * PI / 8.0);
                assert!(p.to_so3().distance(&r.to_so3()) < 1e-9);
            }
        }
    }

    #[test]
    fn in_plane_factors_exact() {
        for u in [Su2Matrix::x(), Su2Matrix::z(), Su2Matrix::minus_identity()] {
            let fs = su2_in_plane_factors(&u, 0.3);
            let prod = fs.iter().fold(Su2Matrix::identity(), |acc, (n, a)| acc * su2_from_axis_angle(n, *a).unwrap());
            assert!(prod.distance(&u) < 1e-12);
            assert!(fs.iter().all(|(n, _)| n.z == 0.0));
        }
        assert!(su2_in_plane_factors(&Su2Matrix::identity(), 0.0).is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn homomorphism(u in arb_su2(), v in arb_su2()) {
            let lhs = so3_from_su2(&(u * v));
            let rhs = so3_from_su2(&u) * so3_from_su2(&v);
            prop_assert!(lhs.distance(&rhs) <= 1e-10);
        }

        #[test]
        fn double_cover(u in arb_su2()) {
            prop_assert_eq!(so3_from_su2(&u), so3_from_su2(&u.neg()));
        }

        #[test]
        fn so3_is_rotation(u in arb_su2()) {
            let r = so3_from_su2(&u).0;
            prop_assert!((r.transpose() * r - Matrix3::identity()).abs().max() < 1e-12);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn conjugation_keeps_trace(g in arb_su2(), u in arb_su2()) {
            prop_assert!((conjugate(&g, &u).trace() - g.trace()).norm() <= 1e-12);
        }

        #[test]
        fn composition_triangle(g in arb_su2(), h in arb_su2()) {
            let ang = |u: &Su2Matrix| axis_angle_of(u).canonical_so3().angle;
            prop_assert!(ang(&(g * h)) <= ang(&g) + ang(&h) + 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn axis_angle_roundtrip(n in arb_unit(), a in 1e-3..(2.0 * PI - 1e-3)) {
            let u = su2_from_axis_angle(&n, a).unwrap();
            let aa = axis_angle_of(&u);
            prop_assert!((aa.angle - a).abs() <= 1e-10);
            prop_assert!((aa.axis - n).norm() <= 1e-10);
            prop_assert!(su2_from_axis_angle(&aa.axis, aa.angle).unwrap().distance(&u) <= 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn xy_roundtrip(n in arb_unit(), a in -2.0 * PI..2.0 * PI, phi in 0.0..2.0 * PI) {
            let r = AxisAngle::new(n, a).unwrap();
            let p = decompose_to_xy_plane(&r, phi);
            prop_assert!(p.to_so3().distance(&r.to_so3()) <= 1e-10);
            prop_assert!(p.first.axis.z.abs() <= 1e-12 && p.second.axis.z.abs() <= 1e-12);
        }

        #[test]
        fn in_plane_factors_reproduce(u in arb_su2(), phi in 0.0..2.0 * PI) {
            let fs = su2_in_plane_factors(&u, phi);
            let prod = fs.iter().fold(Su2Matrix::identity(), |acc, (n, a)| acc * su2_from_axis_angle(n, *a).unwrap());
            prop_assert!(prod.distance(&u) <= 1e-10);
        }
    }
}

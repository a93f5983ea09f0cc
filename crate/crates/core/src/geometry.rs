//! Spheres, planes and the tangency computations behind medial cones and slabs.
//!
//! A medial cone is the convex hull of two spheres and a medial slab the
//! convex hull of three. The envelope of a slab is bounded by two planes
//! tangent to all three spheres; the envelope of a cone is characterised by
//! its axis and the sine of its half-opening (slant) angle.

use nalgebra::{SVector, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

/// Relative tolerance used for all geometric predicates, scaled by the
/// bounding-box diagonal of the model being processed.
pub const REL_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("degenerate primitive: {0}")]
    Degenerate(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub center: Vec3,
    pub radius: f64,
}

impl Sphere {
    pub fn new(center: Vec3, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn is_valid(&self) -> bool {
        self.radius >= 0.0 && self.radius.is_finite() && self.center.iter().all(|c| c.is_finite())
    }

    /// Linear interpolation of center and radius.
    pub fn lerp(&self, other: &Sphere, t: f64) -> Sphere {
        Sphere {
            center: self.center + (other.center - self.center) * t,
            radius: self.radius + (other.radius - self.radius) * t,
        }
    }

    pub fn scaled(&self, s: f64) -> Sphere {
        Sphere { center: self.center * s, radius: self.radius * s }
    }
}

/// An oriented plane `{x : normal · x = offset}` with the normal pointing
/// away from the primitive it bounds. A sphere is tangent from the inside
/// when `offset - normal · center == radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentPlane {
    pub normal: Vec3,
    pub offset: f64,
}

impl TangentPlane {
    /// Signed depth of `p` below the plane (positive on the inner side).
    pub fn depth(&self, p: &Vec3) -> f64 {
        self.offset - self.normal.dot(p)
    }

    /// Absolute deviation of `s` from being tangent to this plane.
    pub fn tangency_residual(&self, s: &Sphere) -> f64 {
        (self.depth(&s.center) - s.radius).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeGeometry {
    /// Unit vector from the smaller-radius center to the larger-radius center.
    pub axis: Vec3,
    /// `(r_big - r_small) / |c_big - c_small|`.
    pub slant_sine: f64,
}

/// Unit normal of the plane through three points, following the winding
/// `(b - a) x (c - a)`. `None` when the points are (nearly) collinear.
pub fn triangle_normal(a: &Vec3, b: &Vec3, c: &Vec3) -> Option<Vec3> {
    let u = b - a;
    let v = c - a;
    let n = u.cross(&v);
    let scale = u.norm() * v.norm();
    if scale == 0.0 || n.norm() <= 1e-12 * scale {
        None
    } else {
        Some(n / n.norm())
    }
}

/// The two planes tangent to all three spheres of a slab.
///
/// The first returned plane lies on the side of the center-plane normal
/// `(c2 - c1) x (c3 - c1)`, the second on the opposite side.
pub fn slab_tangent_planes(
    s1: &Sphere,
    s2: &Sphere,
    s3: &Sphere,
) -> Result<[TangentPlane; 2], GeometryError> {
    let w = triangle_normal(&s1.center, &s2.center, &s3.center)
        .ok_or(GeometryError::Degenerate("collinear or coincident slab centers"))?;
    let u = s2.center - s1.center;
    let v = s3.center - s1.center;

    // n = p + t w with p in span(u, v):  n·u = r1 - r2,  n·v = r1 - r3,  |n| = 1.
    let (uu, uv, vv) = (u.dot(&u), u.dot(&v), v.dot(&v));
    let det = uu * vv - uv * uv;
    let b1 = s1.radius - s2.radius;
    let b2 = s1.radius - s3.radius;
    let alpha = (b1 * vv - b2 * uv) / det;
    let beta = (uu * b2 - uv * b1) / det;
    let p = u * alpha + v * beta;
    let p2 = p.norm_squared();
    if !(p2 <= 1.0) {
        return Err(GeometryError::Degenerate("no real tangent plane exists"));
    }
    let t = (1.0 - p2).sqrt();
    let plane = |n: Vec3| TangentPlane { normal: n, offset: n.dot(&s1.center) + s1.radius };
    Ok([plane(p + w * t), plane(p - w * t)])
}

/// Envelope planes of a slab, falling back to the center plane offset by the
/// mean radius when no tangent plane exists. The fallback for collinear
/// centers picks a deterministic normal perpendicular to the center line.
pub fn slab_envelope(s1: &Sphere, s2: &Sphere, s3: &Sphere) -> [TangentPlane; 2] {
    if let Ok(planes) = slab_tangent_planes(s1, s2, s3) {
        return planes;
    }
    let w = triangle_normal(&s1.center, &s2.center, &s3.center).unwrap_or_else(|| {
        let spread = [s2.center - s1.center, s3.center - s1.center, s3.center - s2.center]
            .into_iter()
            .max_by(|a, b| a.norm_squared().total_cmp(&b.norm_squared()))
            .unwrap();
        any_perpendicular(&spread)
    });
    let mean_r = (s1.radius + s2.radius + s3.radius) / 3.0;
    let centroid = (s1.center + s2.center + s3.center) / 3.0;
    let top = TangentPlane { normal: w, offset: w.dot(&centroid) + mean_r };
    let bottom = TangentPlane { normal: -w, offset: -w.dot(&centroid) + mean_r };
    [top, bottom]
}

pub fn cone_geometry(s1: &Sphere, s2: &Sphere) -> Result<ConeGeometry, GeometryError> {
    // Equal radii are ordered lexicographically by center so that swapping the
    // arguments yields the same axis.
    let swap = match s1.radius.total_cmp(&s2.radius) {
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Equal => lex_greater(&s1.center, &s2.center),
    };
    let (small, big) = if swap { (s2, s1) } else { (s1, s2) };
    let d = big.center - small.center;
    let len = d.norm();
    if len == 0.0 {
        return Err(GeometryError::Degenerate("coincident cone centers"));
    }
    let dr = big.radius - small.radius;
    if dr >= len {
        return Err(GeometryError::Degenerate("one sphere contains the other"));
    }
    Ok(ConeGeometry { axis: d / len, slant_sine: dr / len })
}

fn lex_greater(a: &Vec3, b: &Vec3) -> bool {
    for k in 0..3 {
        match a[k].total_cmp(&b[k]) {
            std::cmp::Ordering::Greater => return true,
            std::cmp::Ordering::Less => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    false
}

/// Angle between two unit vectors, in `[0, π]`.
pub fn angle_between(u: &Vec3, v: &Vec3) -> f64 {
    u.dot(v).clamp(-1.0, 1.0).acos()
}

/// A deterministic unit vector perpendicular to `v`.
pub fn any_perpendicular(v: &Vec3) -> Vec3 {
    let n = v.norm();
    if n == 0.0 {
        return Vec3::z();
    }
    let a = v / n;
    let pick = if a.x.abs() <= a.y.abs() && a.x.abs() <= a.z.abs() {
        Vec3::x()
    } else if a.y.abs() <= a.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let p = a.cross(&pick);
    p / p.norm()
}

pub fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Closest point on triangle `abc` to `p` (Ericson, Real-Time Collision
/// Detection). Only dot products are used, so it works in any dimension.
pub fn closest_point_on_triangle<const D: usize>(
    p: &SVector<f64, D>,
    a: &SVector<f64, D>,
    b: &SVector<f64, D>,
    c: &SVector<f64, D>,
) -> SVector<f64, D> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    if !denom.is_finite() {
        // Degenerate triangle: closest point over its three edges.
        let candidates = [(a, b), (b, c), (a, c)];
        return candidates
            .iter()
            .map(|(x, y)| closest_point_on_segment(p, x, y))
            .min_by(|u, v| (p - u).norm_squared().total_cmp(&(p - v).norm_squared()))
            .unwrap();
    }
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

pub fn closest_point_on_segment<const D: usize>(
    p: &SVector<f64, D>,
    a: &SVector<f64, D>,
    b: &SVector<f64, D>,
) -> SVector<f64, D> {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return *a;
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

pub fn point_triangle_distance(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    (p - closest_point_on_triangle(p, a, b, c)).norm()
}

/// Axis-aligned bounds of a point set, `None` when empty.
pub fn bounds<'a, I: IntoIterator<Item = &'a Vec3>>(points: I) -> Option<(Vec3, Vec3)> {
    let mut it = points.into_iter();
    let first = *it.next()?;
    Some(it.fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn s(x: f64, y: f64, z: f64, r: f64) -> Sphere {
        Sphere::new(Vec3::new(x, y, z), r)
    }

    #[test]
    fn equal_radii_slab_planes_are_offset_center_plane() {
        let [top, bottom] =
            slab_tangent_planes(&s(0., 0., 0., 1.), &s(2., 0., 0., 1.), &s(0., 2., 0., 1.)).unwrap();
        assert_abs_diff_eq!(top.normal, Vec3::z(), epsilon = 1e-12);
        assert_abs_diff_eq!(top.offset, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(bottom.normal, -Vec3::z(), epsilon = 1e-12);
        assert_abs_diff_eq!(bottom.offset, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn collinear_slab_is_degenerate() {
        let r = slab_tangent_planes(&s(0., 0., 0., 1.), &s(1., 0., 0., 1.), &s(2., 0., 0., 1.));
        assert!(matches!(r, Err(GeometryError::Degenerate(_))));
    }

    #[test]
    fn unequal_radii_slab_planes_are_tangent() {
        let spheres = [s(0., 0., 0., 1.), s(2., 0., 0., 1.), s(1., 2., 0., 0.5)];
        let planes = slab_tangent_planes(&spheres[0], &spheres[1], &spheres[2]).unwrap();
        for plane in &planes {
            assert_abs_diff_eq!(plane.normal.norm(), 1.0, epsilon = 1e-12);
            for sp in &spheres {
                assert!(plane.tangency_residual(sp) < 1e-9);
            }
        }
        assert!(planes[0].normal.z > 0.0 && planes[1].normal.z < 0.0);
    }

    #[test]
    fn dominated_slab_falls_back_to_center_plane() {
        let spheres = [s(0., 0., 0., 5.), s(1., 0., 0., 0.1), s(0., 1., 0., 0.1)];
        assert!(slab_tangent_planes(&spheres[0], &spheres[1], &spheres[2]).is_err());
        let [top, bottom] = slab_envelope(&spheres[0], &spheres[1], &spheres[2]);
        assert_abs_diff_eq!(top.normal, Vec3::z(), epsilon = 1e-12);
        assert_abs_diff_eq!(bottom.normal, -Vec3::z(), epsilon = 1e-12);
        assert_abs_diff_eq!(top.offset, 5.2 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn cone_equal_radii() {
        let c = cone_geometry(&s(0., 0., 0., 1.), &s(2., 0., 0., 1.)).unwrap();
        assert_abs_diff_eq!(c.axis, Vec3::x(), epsilon = 1e-15);
        assert_eq!(c.slant_sine, 0.0);
    }

    #[test]
    fn cone_slant_matches_external_tangent() {
        // External tangent of circles (0,0;1) and (2,0;0.5): the line touches
        // both circles with normal n = (sinβ, cosβ); n·c + r is constant, so
        // 2 sinβ = r1 - r2 = 0.5 and sinβ = 0.25.
        let c = cone_geometry(&s(0., 0., 0., 1.), &s(2., 0., 0., 0.5)).unwrap();
        assert_abs_diff_eq!(c.slant_sine, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(c.axis, -Vec3::x(), epsilon = 1e-15);
    }

    #[test]
    fn cone_containment_is_degenerate() {
        assert!(cone_geometry(&s(0., 0., 0., 1.), &s(1., 0., 0., 3.)).is_err());
        assert!(cone_geometry(&s(0., 0., 0., 1.), &s(0., 0., 0., 1.)).is_err());
    }

    #[test]
    fn cone_is_symmetric_under_swap() {
        let a = s(0., 1., 0., 1.);
        let b = s(2., 0., 3., 1.);
        let c1 = cone_geometry(&a, &b).unwrap();
        let c2 = cone_geometry(&b, &a).unwrap();
        assert_eq!(c1, c2);
    }

    #[test]
    fn angles() {
        assert_eq!(angle_between(&Vec3::x(), &Vec3::x()), 0.0);
        assert_abs_diff_eq!(angle_between(&Vec3::x(), &-Vec3::x()), PI);
        assert_abs_diff_eq!(angle_between(&Vec3::x(), &Vec3::y()), PI / 2.0);
    }

    #[test]
    fn closest_point_regions() {
        let (a, b, c) = (Vec3::zeros(), Vec3::x(), Vec3::y());
        assert_abs_diff_eq!(point_triangle_distance(&Vec3::new(0.2, 0.2, 1.0), &a, &b, &c), 1.0);
        assert_abs_diff_eq!(point_triangle_distance(&Vec3::new(-1.0, -1.0, 0.0), &a, &b, &c), 2f64.sqrt());
        assert_abs_diff_eq!(point_triangle_distance(&Vec3::new(1.0, 1.0, 0.0), &a, &b, &c), 0.5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(point_segment_distance(&Vec3::new(0.5, 1.0, 0.0), &a, &b), 1.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn unit() -> impl Strategy<Value = Vec3> {
            (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
                .prop_filter("non-zero", |(x, y, z)| x * x + y * y + z * z > 1e-3)
                .prop_map(|(x, y, z)| Vec3::new(x, y, z).normalize())
        }

        proptest! {
            #[test]
            fn angle_symmetric_and_bounded(u in unit(), v in unit()) {
                let a = angle_between(&u, &v);
                prop_assert_eq!(a, angle_between(&v, &u));
                prop_assert!((0.0..=PI).contains(&a));
            }

            #[test]
            fn perpendicular_is_unit_and_orthogonal(v in unit()) {
                let p = any_perpendicular(&v);
                prop_assert!((p.norm() - 1.0).abs() < 1e-12);
                prop_assert!(p.dot(&v).abs() < 1e-12);
            }
        }
    }
}

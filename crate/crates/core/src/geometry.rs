//! Convex primitives and the phalanx-capsule narrow phase.
//!
//! Every primitive exposes a signed distance. Along a phalanx axis the signed
//! distance is convex, so the deepest point is found by a golden-section
//! search; flat minima are resolved to the centre of the minimising interval
//! so that the reported contact point does not jitter with step size.

use nalgebra::{Isometry3, Rotation3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capsule {
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
    pub radius: f64,
}

impl Capsule {
    pub fn new(a: Vector3<f64>, b: Vector3<f64>, radius: f64) -> Self {
        Capsule { a, b, radius }
    }

    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    pub fn point_at(&self, t: f64) -> Vector3<f64> {
        self.a + (self.b - self.a) * t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Primitive {
    Sphere {
        center: Vector3<f64>,
        radius: f64,
    },
    Capsule {
        p0: Vector3<f64>,
        p1: Vector3<f64>,
        radius: f64,
    },
    Box {
        center: Vector3<f64>,
        half_extents: Vector3<f64>,
        /// Box-to-world rotation.
        #[serde(with = "rotation_rpy_deg", default = "Rotation3::identity")]
        rotation: Rotation3<f64>,
    },
}

mod rotation_rpy_deg {
    use nalgebra::Rotation3;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(r: &Rotation3<f64>, s: S) -> Result<S::Ok, S::Error> {
        let (roll, pitch, yaw) = r.euler_angles();
        [roll.to_degrees(), pitch.to_degrees(), yaw.to_degrees()].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rotation3<f64>, D::Error> {
        let [roll, pitch, yaw] = <[f64; 3]>::deserialize(d)?;
        Ok(Rotation3::from_euler_angles(
            roll.to_radians(),
            pitch.to_radians(),
            yaw.to_radians(),
        ))
    }
}

/// Closest approach between a capsule axis and a primitive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proximity {
    /// Parameter along the capsule axis, 0 at `a`.
    pub t: f64,
    /// Point on the primitive surface.
    pub point: Vector3<f64>,
    /// Unit vector from the primitive towards the capsule.
    pub normal: Vector3<f64>,
    /// Capsule radius minus signed distance; `>= 0` means touching.
    pub penetration: f64,
}

impl Primitive {
    pub fn sphere(center: Vector3<f64>, radius: f64) -> Self {
        Primitive::Sphere { center, radius }
    }

    pub fn capsule(p0: Vector3<f64>, p1: Vector3<f64>, radius: f64) -> Self {
        Primitive::Capsule { p0, p1, radius }
    }

    pub fn cuboid(center: Vector3<f64>, half_extents: Vector3<f64>, rotation: Rotation3<f64>) -> Self {
        Primitive::Box {
            center,
            half_extents,
            rotation,
        }
    }

    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        match self {
            Primitive::Sphere { center, radius } => (p - center).norm() - radius,
            Primitive::Capsule { p0, p1, radius } => (p - closest_on_segment(p0, p1, p)).norm() - radius,
            Primitive::Box {
                center,
                half_extents,
                rotation,
            } => {
                let local = rotation.inverse() * (p - center);
                let q = local.abs() - half_extents;
                let outside = q.map(|v| v.max(0.0)).norm();
                let inside = q.x.max(q.y).max(q.z).min(0.0);
                outside + inside
            }
        }
    }

    /// Outward unit normal of the distance field at `p`, if well defined.
    pub fn outward_normal(&self, p: &Vector3<f64>) -> Option<Vector3<f64>> {
        match self {
            Primitive::Sphere { center, .. } => (p - center).try_normalize(1e-12),
            Primitive::Capsule { p0, p1, .. } => (p - closest_on_segment(p0, p1, p)).try_normalize(1e-12),
            Primitive::Box {
                center,
                half_extents,
                rotation,
            } => {
                let local = rotation.inverse() * (p - center);
                let q = local.abs() - half_extents;
                let n_local = if q.max() > 0.0 {
                    Vector3::new(
                        local.x.signum() * q.x.max(0.0),
                        local.y.signum() * q.y.max(0.0),
                        local.z.signum() * q.z.max(0.0),
                    )
                } else {
                    let axis = q.imax();
                    let mut n = Vector3::zeros();
                    n[axis] = if local[axis] >= 0.0 { 1.0 } else { -1.0 };
                    n
                };
                n_local.try_normalize(1e-12).map(|n| rotation * n)
            }
        }
    }

    /// Reference point used for jitter and bounding checks.
    pub fn center(&self) -> Vector3<f64> {
        match self {
            Primitive::Sphere { center, .. } => *center,
            Primitive::Capsule { p0, p1, .. } => (p0 + p1) * 0.5,
            Primitive::Box { center, .. } => *center,
        }
    }

    pub fn bounding_radius(&self) -> f64 {
        match self {
            Primitive::Sphere { radius, .. } => *radius,
            Primitive::Capsule { p0, p1, radius } => (p1 - p0).norm() * 0.5 + radius,
            Primitive::Box { half_extents, .. } => half_extents.norm(),
        }
    }

    /// Smallest size parameter; must be > 0 for a valid primitive.
    pub fn min_extent(&self) -> f64 {
        match self {
            Primitive::Sphere { radius, .. } | Primitive::Capsule { radius, .. } => *radius,
            Primitive::Box { half_extents, .. } => half_extents.min(),
        }
    }

    pub fn transformed(&self, iso: &Isometry3<f64>) -> Self {
        match self {
            Primitive::Sphere { center, radius } => Primitive::Sphere {
                center: (iso * nalgebra::Point3::from(*center)).coords,
                radius: *radius,
            },
            Primitive::Capsule { p0, p1, radius } => Primitive::Capsule {
                p0: (iso * nalgebra::Point3::from(*p0)).coords,
                p1: (iso * nalgebra::Point3::from(*p1)).coords,
                radius: *radius,
            },
            Primitive::Box {
                center,
                half_extents,
                rotation,
            } => Primitive::Box {
                center: (iso * nalgebra::Point3::from(*center)).coords,
                half_extents: *half_extents,
                rotation: iso.rotation.to_rotation_matrix() * rotation,
            },
        }
    }

    /// Deepest approach of `capsule` to this primitive.
    pub fn proximity(&self, capsule: &Capsule) -> Proximity {
        let t = match self {
            Primitive::Sphere { center, .. } => segment_param(&capsule.a, &capsule.b, center),
            _ => deepest_param(|t| self.signed_distance(&capsule.point_at(t))),
        };
        let axis_point = capsule.point_at(t);
        let sd = self.signed_distance(&axis_point);
        let normal = self
            .outward_normal(&axis_point)
            .or_else(|| (axis_point - self.center()).try_normalize(1e-12))
            .unwrap_or_else(Vector3::z);
        Proximity {
            t,
            point: axis_point - normal * sd,
            normal,
            penetration: capsule.radius - sd,
        }
    }

    /// Cheap rejection: `true` if the capsule certainly does not touch.
    pub fn certainly_separated(&self, capsule: &Capsule) -> bool {
        let mid = (capsule.a + capsule.b) * 0.5;
        let reach = capsule.length() * 0.5 + capsule.radius + self.bounding_radius();
        (mid - self.center()).norm() > reach + 1e-9
    }
}

pub fn closest_on_segment(a: &Vector3<f64>, b: &Vector3<f64>, p: &Vector3<f64>) -> Vector3<f64> {
    a + (b - a) * segment_param(a, b, p)
}

fn segment_param(a: &Vector3<f64>, b: &Vector3<f64>, p: &Vector3<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 <= f64::EPSILON {
        return 0.0;
    }
    ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Minimiser of a convex function on `[0, 1]`; the midpoint of the
/// near-minimal interval when the minimum is flat.
fn deepest_param(f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-12 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2);
        }
    }
    let mut best = (0.5 * (lo + hi), f(0.5 * (lo + hi)));
    for t in [0.0, 1.0] {
        let v = f(t);
        if v < best.1 {
            best = (t, v);
        }
    }
    let (t_star, v_star) = best;
    let level = v_star + 1e-11 * (1.0 + v_star.abs());
    // Sublevel sets of a convex function are intervals; find both ends.
    let left = if f(0.0) <= level {
        0.0
    } else {
        bisect_edge(&f, 0.0, t_star, level)
    };
    let right = if f(1.0) <= level {
        1.0
    } else {
        bisect_edge(&f, 1.0, t_star, level)
    };
    0.5 * (left + right)
}

/// Boundary of `{f <= level}` between `outside` (above level) and `inside`.
fn bisect_edge(f: &impl Fn(f64) -> f64, mut outside: f64, mut inside: f64, level: f64) -> f64 {
    for _ in 0..60 {
        let mid = 0.5 * (outside + inside);
        if f(mid) <= level {
            inside = mid;
        } else {
            outside = mid;
        }
        if (outside - inside).abs() < 1e-13 {
            break;
        }
    }
    inside
}

/// Rigid transform about `pivot`: rotate by `yaw` about the palm normal, then
/// translate by `offset`.
pub fn planar_jitter(pivot: Vector3<f64>, offset: Vector3<f64>, yaw: f64) -> Isometry3<f64> {
    let rot = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw);
    let to_origin = Isometry3::from_parts(Translation3::from(-pivot), UnitQuaternion::identity());
    let back = Isometry3::from_parts(Translation3::from(pivot + offset), rot);
    back * to_origin
}

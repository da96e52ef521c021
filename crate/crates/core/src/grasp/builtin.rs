//! Built-in objects. Sizes and masses are estimates of common retail items,
//! posed as if the hand had come down on them from above: each object lies
//! just clear of the palm face near the grasp centre. None has a support
//! surface.

use nalgebra::{Rotation3, Vector3};

use crate::error::{Result, SimError};
use crate::geometry::Primitive;

use super::GraspObject;

/// Point on the palm the objects are centred on, mm.
const GRASP_CENTRE: (f64, f64) = (5.0, 100.0);
/// Clearance between an object and the palm face, mm.
const PALM_GAP: f64 = 1.0;

pub const TRAPEZOID_NAME: &str = "trapezoid";

fn at(dx: f64, dy: f64, z: f64) -> Vector3<f64> {
    Vector3::new(GRASP_CENTRE.0 + dx, GRASP_CENTRE.1 + dy, PALM_GAP + z)
}

fn sphere(name: &str, diameter: f64, dx: f64, dy: f64, mass_g: f64) -> GraspObject {
    let r = 0.5 * diameter;
    GraspObject::new(name, vec![Primitive::sphere(at(dx, dy, r), r)], Some(mass_g))
}

/// Cylinder of `diameter` lying across the palm (axis along hand x).
fn cylinder(name: &str, diameter: f64, length: f64, mass_g: f64) -> GraspObject {
    let r = 0.5 * diameter;
    let h = 0.5 * length;
    GraspObject::new(
        name,
        vec![Primitive::capsule(at(-h + r, 0.0, r), at(h - r, 0.0, r), r)],
        Some(mass_g),
    )
}

/// Rope spool: a short drum on the index side with the rope-wound core
/// running across to the little finger. Drum and core rest on the palm.
fn spool(name: &str, drum_diameter: f64, core_diameter: f64, mass_g: f64) -> GraspObject {
    const DRUM_DX: f64 = 20.0;
    const DRUM_HALF_WIDTH: f64 = 5.0;
    const CORE_END_DX: f64 = -40.0;
    let (rd, rc) = (0.5 * drum_diameter, 0.5 * core_diameter);
    GraspObject::new(
        name,
        vec![
            Primitive::capsule(
                at(DRUM_DX - DRUM_HALF_WIDTH, 0.0, rd),
                at(DRUM_DX + DRUM_HALF_WIDTH, 0.0, rd),
                rd,
            ),
            Primitive::capsule(at(CORE_END_DX + rc, 0.0, rc), at(DRUM_DX, 0.0, rc), rc),
        ],
        Some(mass_g),
    )
}

/// Rod with flat ends approximated by a capsule, axis across the palm.
fn rod(name: &str, diameter: f64, length: f64, dy: f64, mass_g: f64) -> GraspObject {
    let r = 0.5 * diameter;
    let h = 0.5 * length - r;
    GraspObject::new(
        name,
        vec![Primitive::capsule(at(-h, dy, r), at(h, dy, r), r)],
        Some(mass_g),
    )
}

/// Box lying on the palm; `size` is (across, along the fingers, height).
fn slab(name: &str, size: [f64; 3], dy: f64, mass_g: f64) -> GraspObject {
    let half = Vector3::new(size[0], size[1], size[2]) * 0.5;
    GraspObject::new(
        name,
        vec![Primitive::cuboid(
            at(0.0, dy, half.z),
            half,
            Rotation3::identity(),
        )],
        Some(mass_g),
    )
}

/// Trapezoidal prism lying across the palm, mm. The cross-section in the
/// plane along the fingers has `base` on the palm, `top` opposite it and
/// `height` between them; `length` runs across the palm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapezoidDims {
    pub base: f64,
    pub top: f64,
    pub height: f64,
    pub length: f64,
    /// Offset of the block centre along the fingers from the grasp centre.
    pub dy: f64,
    pub mass_g: f64,
}

impl Default for TrapezoidDims {
    fn default() -> Self {
        TrapezoidDims {
            base: 44.0,
            top: 28.0,
            height: 30.0,
            length: 80.0,
            dy: -15.0,
            mass_g: 150.0,
        }
    }
}

impl TrapezoidDims {
    fn tilt(&self) -> f64 {
        (0.5 * (self.base - self.top)).atan2(self.height)
    }

    /// Side plates fill the wedge beyond the core; their inner edge dips
    /// below the base, so the whole block is raised by this much.
    fn lift(&self) -> f64 {
        let run = 0.5 * (self.base - self.top);
        run * self.tilt().cos() * self.tilt().sin()
    }

    pub fn build(&self, name: &str) -> GraspObject {
        let run = 0.5 * (self.base - self.top);
        let tilt = self.tilt();
        let slant = run.hypot(self.height);
        let t = 0.5 * run * tilt.cos();
        let mid = at(0.0, self.dy, self.lift() + 0.5 * self.height);
        let core = Primitive::cuboid(
            mid,
            Vector3::new(0.5 * self.length, 0.5 * self.top, 0.5 * self.height),
            Rotation3::identity(),
        );
        let side = |sign: f64| {
            let face_mid = mid + Vector3::new(0.0, sign * 0.5 * (self.top + run), 0.0);
            let inward = Vector3::new(0.0, -sign * tilt.cos(), -tilt.sin());
            Primitive::cuboid(
                face_mid + inward * t,
                Vector3::new(0.5 * self.length, t, 0.5 * slant),
                Rotation3::from_axis_angle(&Vector3::x_axis(), sign * tilt),
            )
        };
        GraspObject::new(name, vec![core, side(1.0), side(-1.0)], Some(self.mass_g))
    }
}

/// Calibration block carrying the force sensor under its base.
pub fn trapezoid_block() -> GraspObject {
    TrapezoidDims::default().build(TRAPEZOID_NAME)
}

/// The bench corpus, in the order reported.
pub fn builtin_corpus() -> Vec<GraspObject> {
    vec![
        spool("large_spool", 70.0, 24.0, 120.0),
        cylinder("small_spool", 52.0, 60.0, 60.0),
        rod("screwdriver", 28.0, 180.0, 0.0, 90.0),
        cylinder("cling_wrap", 50.0, 120.0, 250.0),
        slab("mouse", [62.0, 110.0, 38.0], 0.0, 100.0),
        slab("coffee_box", [70.0, 60.0, 100.0], 0.0, 250.0),
        cylinder("detergent", 65.0, 90.0, 400.0),
        cylinder("tape", 55.0, 40.0, 120.0),
        rod("plier", 20.0, 160.0, 0.0, 200.0),
        rod("wrench", 16.0, 170.0, 0.0, 150.0),
        slab("phone_slab", [75.0, 150.0, 9.0], 0.0, 180.0),
        slab("keyboard_slab", [120.0, 140.0, 22.0], 0.0, 300.0),
        slab("card3mm", [86.0, 54.0, 3.0], -55.0, 5.0),
        slab("usb_stick", [45.0, 18.0, 8.0], -55.0, 10.0),
    ]
}

fn extras() -> Vec<GraspObject> {
    vec![sphere("sphere60", 60.0, -3.0, -15.0, 150.0), trapezoid_block()]
}

pub fn builtin_names() -> Vec<String> {
    builtin_corpus()
        .into_iter()
        .chain(extras())
        .map(|o| o.name)
        .collect()
}

pub fn builtin_object(name: &str) -> Result<GraspObject> {
    builtin_corpus()
        .into_iter()
        .chain(extras())
        .find(|o| o.name == name)
        .ok_or_else(|| {
            SimError::validation(
                "object",
                format!("unknown builtin {name:?}; known: {}", builtin_names().join(", ")),
            )
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_valid_and_named_uniquely() {
        let c = builtin_corpus();
        assert_eq!(c.len(), 14);
        let mut names = builtin_names();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 16);
        for o in c.iter().chain(&extras()) {
            o.validate().unwrap();
        }
    }

    #[test]
    fn objects_clear_the_palm() {
        for o in builtin_corpus().iter().chain(&extras()) {
            for p in &o.primitives {
                let below = Vector3::new(p.center().x, p.center().y, 0.0);
                assert!(p.signed_distance(&below) >= PALM_GAP - 1e-6, "{}", o.name);
            }
        }
    }

    #[test]
    fn trapezoid_faces() {
        let d = TrapezoidDims::default();
        let t = trapezoid_block();
        let sd = |p: Vector3<f64>| {
            t.primitives
                .iter()
                .map(|q| q.signed_distance(&p))
                .fold(f64::INFINITY, f64::min)
        };
        let l = d.lift();
        let y = d.dy;
        // Base corners, top edges and mid-slant points lie on the surface.
        assert!(sd(at(0.0, y + 22.0, l)).abs() < 1e-6);
        assert!(sd(at(10.0, y - 22.0, l)).abs() < 1e-6);
        assert!(sd(at(0.0, y + 14.0, l + 30.0)).abs() < 1e-6);
        assert!(sd(at(40.0, y, l + 15.0)).abs() < 1e-6);
        assert!(sd(at(0.0, y + 18.0, l + 15.0)).abs() < 1e-6);
        assert!(sd(at(-5.0, y - 18.0, l + 15.0)).abs() < 1e-6);
        for dy in [-20.0, -10.0, 0.0, 10.0, 20.0] {
            assert!(sd(at(0.0, y + dy, 0.0)) >= -1e-9);
        }
        assert!(sd(at(0.0, y, l + 15.0)) < 0.0);
    }

    #[test]
    fn unknown_name_lists_builtins() {
        let err = builtin_object("anvil").unwrap_err().to_string();
        assert!(err.contains("sphere60") && err.contains("card3mm"));
    }
}

use std::path::Path;

use nalgebra::{Isometry3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::geometry::Primitive;

/// Standard gravity in N per gram.
const GRAVITY_N_PER_G: f64 = 9.81e-3;

/// A rigid object built from primitives, posed in the hand frame (mm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraspObject {
    pub name: String,
    pub primitives: Vec<Primitive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_g: Option<f64>,
    /// Height above the palm face of the surface the object rests on, mm.
    /// Fingers cannot pass it, but touching it is not an object contact.
    #[serde(
        default,
        rename = "support_plane_mm",
        skip_serializing_if = "Option::is_none"
    )]
    pub support_plane: Option<f64>,
}

impl GraspObject {
    pub fn new(name: impl Into<String>, primitives: Vec<Primitive>, mass_g: Option<f64>) -> Self {
        GraspObject {
            name: name.into(),
            primitives,
            mass_g,
            support_plane: None,
        }
    }

    /// The same object resting on a surface `height` mm from the palm.
    pub fn on_support(mut self, height: f64) -> Self {
        self.support_plane = Some(height);
        self
    }

    /// Primitive standing in for the support surface.
    pub fn support_primitive(&self) -> Option<Primitive> {
        const HALF: f64 = 5000.0;
        self.support_plane.map(|h| {
            Primitive::cuboid(
                Vector3::new(0.0, 0.0, h + HALF),
                Vector3::new(HALF, HALF, HALF),
                nalgebra::Rotation3::identity(),
            )
        })
    }

    pub fn validate(&self) -> Result<()> {
        let field = |s: &str| format!("objects.{}.{s}", self.name);
        if self.name.trim().is_empty() {
            return Err(SimError::validation("objects.name", "must not be empty"));
        }
        if self.primitives.is_empty() {
            return Err(SimError::validation(
                field("primitives"),
                "object needs at least one primitive",
            ));
        }
        for (i, p) in self.primitives.iter().enumerate() {
            if !(p.min_extent() > 0.0) {
                return Err(SimError::validation(
                    field(&format!("primitives[{i}]")),
                    "radii and half extents must be > 0",
                ));
            }
        }
        if let Some(h) = self.support_plane {
            if !(h > 0.0) {
                return Err(SimError::validation(field("support_plane_mm"), "must be > 0"));
            }
        }
        if let Some(m) = self.mass_g {
            if !(m >= 0.0) {
                return Err(SimError::validation(field("mass_g"), "must be >= 0"));
            }
        }
        Ok(())
    }

    /// Weight in N; zero when no mass is given.
    pub fn weight(&self) -> f64 {
        self.mass_g.unwrap_or(0.0) * GRAVITY_N_PER_G
    }

    /// Mean of the primitive reference points.
    pub fn centroid(&self) -> Vector3<f64> {
        let sum: Vector3<f64> = self.primitives.iter().map(Primitive::center).sum();
        sum / self.primitives.len().max(1) as f64
    }

    pub fn transformed(&self, iso: &Isometry3<f64>) -> GraspObject {
        GraspObject {
            name: self.name.clone(),
            primitives: self.primitives.iter().map(|p| p.transformed(iso)).collect(),
            mass_g: self.mass_g,
            support_plane: self.support_plane,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusDoc {
    objects: Vec<GraspObject>,
}

pub fn parse_corpus(text: &str, origin: &Path) -> Result<Vec<GraspObject>> {
    let doc: CorpusDoc = serde_json::from_str(text).map_err(|e| SimError::Parse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })?;
    if doc.objects.is_empty() {
        return Err(SimError::Empty("corpus has no objects".into()));
    }
    for o in &doc.objects {
        o.validate()?;
    }
    Ok(doc.objects)
}

pub fn load_corpus(path: &Path) -> Result<Vec<GraspObject>> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    parse_corpus(&text, path)
}

pub fn corpus_to_json(objects: &[GraspObject]) -> String {
    let doc = CorpusDoc {
        objects: objects.to_vec(),
    };
    serde_json::to_string_pretty(&doc).expect("corpus serializes")
}

/// Single object from a file holding either one object or a corpus.
pub fn load_object(path: &Path) -> Result<GraspObject> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    if let Ok(o) = serde_json::from_str::<GraspObject>(&text) {
        o.validate()?;
        return Ok(o);
    }
    let mut objects = parse_corpus(&text, path)?;
    if objects.len() != 1 {
        return Err(SimError::validation(
            "objects",
            format!("expected one object, found {}", objects.len()),
        ));
    }
    Ok(objects.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball() -> GraspObject {
        GraspObject::new(
            "ball",
            vec![Primitive::sphere(Vector3::new(0.0, 100.0, 30.0), 30.0)],
            Some(100.0),
        )
    }

    #[test]
    fn validation_rules() {
        assert!(ball().validate().is_ok());
        let empty = GraspObject::new("e", vec![], None);
        assert!(matches!(empty.validate(), Err(SimError::Validation { .. })));
        let flat = GraspObject::new("f", vec![Primitive::sphere(Vector3::zeros(), 0.0)], None);
        assert!(flat.validate().is_err());
    }

    #[test]
    fn weight_from_mass() {
        assert!((ball().weight() - 0.981).abs() < 1e-12);
        assert_eq!(GraspObject::new("m", vec![], None).weight(), 0.0);
    }

    #[test]
    fn corpus_round_trip() {
        let objs = vec![ball()];
        let text = corpus_to_json(&objs);
        let back = parse_corpus(&text, Path::new("mem")).unwrap();
        assert_eq!(back, objs);
    }

    #[test]
    fn corpus_errors() {
        assert!(matches!(
            parse_corpus("{\"objects\": []}", Path::new("x")),
            Err(SimError::Empty(_))
        ));
        assert!(matches!(
            parse_corpus("{\"objects\": [", Path::new("x")),
            Err(SimError::Parse { .. })
        ));
    }
}

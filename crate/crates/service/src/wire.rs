//! JSON documents exchanged with the browser client.

use iat_core::{
    AnnotationSet, Ellipse, EntryStatus, Label, ModelError, Point, Polygon, Project, Rectangle, Shape, Taxonomy,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProjectDoc {
    pub labels_path: String,
    pub cursor: usize,
    pub entries: Vec<EntryDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EntryDoc {
    pub image_path: String,
    pub status: EntryStatus,
}

impl From<&Project> for ProjectDoc {
    fn from(p: &Project) -> Self {
        ProjectDoc {
            labels_path: p.labels_path().to_string(),
            cursor: p.cursor(),
            entries: p
                .entries()
                .iter()
                .map(|e| EntryDoc { image_path: e.image_path.clone(), status: e.status })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyDoc {
    pub classes: Vec<ClassDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDoc {
    pub name: String,
    pub types: Vec<String>,
}

impl From<&Taxonomy> for TaxonomyDoc {
    fn from(t: &Taxonomy) -> Self {
        let classes = t.classes().iter().map(|c| ClassDoc { name: c.name.clone(), types: c.types.clone() }).collect();
        TaxonomyDoc { classes }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ShapeDoc {
    #[serde(rename = "rect")]
    Rect {
        x: f64,
        y: f64,
        w: f64,
        h: f64,
    },
    Ellipse {
        cx: f64,
        cy: f64,
        rx: f64,
        ry: f64,
    },
    Polygon {
        points: Vec<[f64; 2]>,
    },
}

impl From<&Shape> for ShapeDoc {
    fn from(s: &Shape) -> Self {
        match s {
            Shape::Rectangle(r) => ShapeDoc::Rect { x: r.x, y: r.y, w: r.w, h: r.h },
            Shape::Ellipse(e) => ShapeDoc::Ellipse { cx: e.cx, cy: e.cy, rx: e.rx, ry: e.ry },
            Shape::Polygon(p) => ShapeDoc::Polygon { points: p.vertices.iter().map(|v| [v.x, v.y]).collect() },
        }
    }
}

impl From<ShapeDoc> for Shape {
    fn from(s: ShapeDoc) -> Self {
        match s {
            ShapeDoc::Rect { x, y, w, h } => Rectangle::new(x, y, w, h).into(),
            ShapeDoc::Ellipse { cx, cy, rx, ry } => Ellipse::new(cx, cy, rx, ry).into(),
            ShapeDoc::Polygon { points } => {
                Polygon::new(points.into_iter().map(|[x, y]| Point::new(x, y)).collect()).into()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<u64>,
    pub shape: ShapeDoc,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DocumentDoc {
    pub image_path: String,
    pub width: u32,
    pub height: u32,
    pub annotations: Vec<AnnotationDoc>,
}

impl From<&AnnotationSet> for DocumentDoc {
    fn from(set: &AnnotationSet) -> Self {
        DocumentDoc {
            image_path: set.image_path().to_string(),
            width: set.image_width(),
            height: set.image_height(),
            annotations: set
                .annotations()
                .iter()
                .map(|a| AnnotationDoc { id: Some(a.id), shape: (&a.shape).into(), label: a.label.clone() })
                .collect(),
        }
    }
}

/// Body of every 4xx response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ErrorDoc {
    pub code: String,
    pub message: String,
    pub annotation_index: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    InvalidShape,
    UnknownClass,
    UnknownType,
    DuplicateName,
    BadPayload,
    NotFound,
    Internal,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::InvalidShape => "invalid_shape",
            ErrorCode::UnknownClass => "unknown_class",
            ErrorCode::UnknownType => "unknown_type",
            ErrorCode::DuplicateName => "duplicate_name",
            ErrorCode::BadPayload => "bad_payload",
            ErrorCode::NotFound => "not_found",
            ErrorCode::Internal => "internal",
        }
    }
}

impl From<&ModelError> for ErrorCode {
    fn from(e: &ModelError) -> Self {
        match e {
            ModelError::InvalidShape(_) => ErrorCode::InvalidShape,
            ModelError::UnknownClass(_) => ErrorCode::UnknownClass,
            ModelError::UnknownType { .. } => ErrorCode::UnknownType,
            ModelError::DuplicateName(_) => ErrorCode::DuplicateName,
            _ => ErrorCode::BadPayload,
        }
    }
}

/// A rejected PUT payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub code: ErrorCode,
    pub message: String,
    pub annotation_index: Option<usize>,
}

impl Rejection {
    fn at(index: Option<usize>, code: ErrorCode, message: impl Into<String>) -> Self {
        Rejection { code, message: message.into(), annotation_index: index }
    }
}

/// Incoming PUT body. Annotations stay raw JSON so a malformed one can be
/// reported by position.
#[derive(Debug, Deserialize)]
struct PutDoc {
    #[serde(default)]
    width: Option<u32>,
    #[serde(default)]
    height: Option<u32>,
    annotations: Vec<serde_json::Value>,
}

/// Builds the annotation set for `image_path` from a PUT body.
///
/// Ids given in the payload are kept; annotations without one get fresh ids
/// above both the payload's ids and `previous_next_id`, in payload order.
/// Width and height fall back to `default_size` when absent. Every check runs
/// in payload order, so the reported index is the first offending annotation.
pub fn build_set(
    body: &[u8],
    image_path: &str,
    default_size: impl FnOnce() -> Option<(u32, u32)>,
    previous_next_id: u64,
    taxonomy: &Taxonomy,
) -> Result<AnnotationSet, Rejection> {
    let doc: PutDoc =
        serde_json::from_slice(body).map_err(|e| Rejection::at(None, ErrorCode::BadPayload, e.to_string()))?;
    let mut items = Vec::with_capacity(doc.annotations.len());
    for (i, raw) in doc.annotations.into_iter().enumerate() {
        let item: AnnotationDoc =
            serde_json::from_value(raw).map_err(|e| Rejection::at(Some(i), ErrorCode::BadPayload, e.to_string()))?;
        items.push(item);
    }

    let (width, height) = match (doc.width, doc.height) {
        (Some(w), Some(h)) => (w, h),
        (None, None) => default_size()
            .ok_or_else(|| Rejection::at(None, ErrorCode::BadPayload, "image size unknown; send width and height"))?,
        _ => return Err(Rejection::at(None, ErrorCode::BadPayload, "width and height go together")),
    };
    let mut scratch = AnnotationSet::new(image_path, width, height)
        .map_err(|e| Rejection::at(None, ErrorCode::BadPayload, e.to_string()))?;

    // Validate each item against a set holding the items before it, which
    // catches duplicate names at the later occurrence.
    let mut seen_ids = std::collections::HashSet::new();
    for (i, item) in items.iter().enumerate() {
        if let Some(id) = item.id {
            if !seen_ids.insert(id) {
                return Err(Rejection::at(Some(i), ErrorCode::BadPayload, format!("duplicate id {id}")));
            }
        }
        scratch
            .add(item.shape.clone().into(), item.label.clone(), taxonomy)
            .map_err(|e| Rejection::at(Some(i), (&e).into(), e.to_string()))?;
    }

    let mut fresh = seen_ids.iter().max().map_or(0, |m| m + 1).max(previous_next_id);
    let mut ordered: Vec<(u64, usize)> = items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let id = item.id.unwrap_or_else(|| {
                fresh += 1;
                fresh - 1
            });
            (id, i)
        })
        .collect();
    ordered.sort();
    let mut set = AnnotationSet::new(image_path, width, height)
        .map_err(|e| Rejection::at(None, ErrorCode::BadPayload, e.to_string()))?;
    for (id, i) in ordered {
        let item = &items[i];
        set.insert_with_id(id, item.shape.clone().into(), item.label.clone(), Some(taxonomy))
            .map_err(|e| Rejection::at(Some(i), (&e).into(), e.to_string()))?;
    }
    Ok(set)
}

//! All annotations of one image.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{InvalidShape, Point, Shape};
use crate::taxonomy::{Label, LabelError, Taxonomy};
use crate::text::field_problem;

pub type AnnotationId = u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub id: AnnotationId,
    pub shape: Shape,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    InvalidShape(#[from] InvalidShape),
    #[error("unknown class '{0}'")]
    UnknownClass(String),
    #[error("unknown type '{type_name}' in class '{class}'")]
    UnknownType { class: String, type_name: String },
    #[error("malformed label: {0}")]
    MalformedLabel(&'static str),
    #[error("name '{0}' is already used in this image")]
    DuplicateName(String),
    #[error("no annotation with id {0}")]
    UnknownId(AnnotationId),
    #[error("id {id} is not above the last assigned id (next is {next})")]
    StaleId { id: AnnotationId, next: AnnotationId },
    #[error("bad image reference: {0}")]
    BadImage(&'static str),
}

impl From<LabelError> for ModelError {
    fn from(e: LabelError) -> Self {
        match e {
            LabelError::UnknownClass(c) => ModelError::UnknownClass(c),
            LabelError::UnknownType { class, type_name } => ModelError::UnknownType { class, type_name },
            LabelError::Malformed(r) => ModelError::MalformedLabel(r),
        }
    }
}

/// The annotations of one image, in insertion (z-) order; the last one is
/// drawn on top.
///
/// Ids are handed out from `next_id` and never reused within the lifetime of
/// the set. Shapes are snapped to the micro-pixel grid on the way in so that
/// the text format stores them exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnotationSet {
    image_path: String,
    image_width: u32,
    image_height: u32,
    annotations: Vec<Annotation>,
    next_id: AnnotationId,
}

impl AnnotationSet {
    pub fn new(image_path: impl Into<String>, width: u32, height: u32) -> Result<Self, ModelError> {
        let image_path = image_path.into();
        if let Some(reason) = field_problem(&image_path) {
            return Err(ModelError::BadImage(reason));
        }
        if width == 0 || height == 0 {
            return Err(ModelError::BadImage("image dimensions must be positive"));
        }
        Ok(Self { image_path, image_width: width, image_height: height, annotations: Vec::new(), next_id: 0 })
    }

    pub fn image_path(&self) -> &str {
        &self.image_path
    }

    pub fn image_width(&self) -> u32 {
        self.image_width
    }

    pub fn image_height(&self) -> u32 {
        self.image_height
    }

    pub fn annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    pub fn next_id(&self) -> AnnotationId {
        self.next_id
    }

    pub fn len(&self) -> usize {
        self.annotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.annotations.is_empty()
    }

    pub fn get(&self, id: AnnotationId) -> Option<&Annotation> {
        self.annotations.iter().find(|a| a.id == id)
    }

    fn position(&self, id: AnnotationId) -> Result<usize, ModelError> {
        self.annotations.iter().position(|a| a.id == id).ok_or(ModelError::UnknownId(id))
    }

    fn name_taken(&self, name: &str, except: Option<AnnotationId>) -> bool {
        self.annotations.iter().any(|a| a.label.name == name && Some(a.id) != except)
    }

    fn checked_label(
        &self,
        label: &Label,
        taxonomy: Option<&Taxonomy>,
        except: Option<AnnotationId>,
    ) -> Result<(), ModelError> {
        label.check()?;
        if let Some(t) = taxonomy {
            t.validate_label(label)?;
        }
        if self.name_taken(&label.name, except) {
            return Err(ModelError::DuplicateName(label.name.clone()));
        }
        Ok(())
    }

    fn checked_shape(shape: &Shape) -> Result<Shape, ModelError> {
        shape.validate()?;
        let snapped = shape.quantized();
        snapped.validate()?;
        Ok(snapped)
    }

    /// Appends a new annotation on top and returns its id.
    pub fn add(&mut self, shape: Shape, label: Label, taxonomy: &Taxonomy) -> Result<AnnotationId, ModelError> {
        let id = self.next_id;
        self.insert_with_id(id, shape, label, Some(taxonomy))?;
        Ok(id)
    }

    /// Appends an annotation under a caller-chosen id, which must not be below
    /// `next_id`. Used when restoring a set from storage; the taxonomy check is
    /// skipped when `taxonomy` is `None`.
    pub fn insert_with_id(
        &mut self,
        id: AnnotationId,
        shape: Shape,
        label: Label,
        taxonomy: Option<&Taxonomy>,
    ) -> Result<(), ModelError> {
        if id < self.next_id {
            return Err(ModelError::StaleId { id, next: self.next_id });
        }
        let shape = Self::checked_shape(&shape)?;
        self.checked_label(&label, taxonomy, None)?;
        self.annotations.push(Annotation { id, shape, label });
        self.next_id = id + 1;
        Ok(())
    }

    pub fn update_shape(&mut self, id: AnnotationId, shape: Shape) -> Result<(), ModelError> {
        let at = self.position(id)?;
        let shape = Self::checked_shape(&shape)?;
        self.annotations[at].shape = shape;
        Ok(())
    }

    pub fn update_label(&mut self, id: AnnotationId, label: Label, taxonomy: &Taxonomy) -> Result<(), ModelError> {
        let at = self.position(id)?;
        self.checked_label(&label, Some(taxonomy), Some(id))?;
        self.annotations[at].label = label;
        Ok(())
    }

    pub fn remove(&mut self, id: AnnotationId) -> Result<Annotation, ModelError> {
        let at = self.position(id)?;
        Ok(self.annotations.remove(at))
    }

    /// Topmost annotation whose region contains `p`.
    pub fn find_at(&self, p: Point) -> Option<AnnotationId> {
        self.annotations.iter().rev().find(|a| a.shape.contains(p)).map(|a| a.id)
    }

    /// Annotation counts per (class, type), sorted by class then type.
    pub fn count_by_label(&self) -> Vec<((String, String), usize)> {
        let mut counts: BTreeMap<(String, String), usize> = BTreeMap::new();
        for a in &self.annotations {
            *counts.entry((a.label.class_name.clone(), a.label.type_name.clone())).or_default() += 1;
        }
        counts.into_iter().collect()
    }
}

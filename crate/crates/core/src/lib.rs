//! Engine of the `iat` image annotation tool.
//!
//! Regions of an image are outlined with rectangles, ellipses or polygons
//! ([`geometry`]), labeled with a class and type drawn from a predefined
//! [`taxonomy`] plus a free name unique within the image, and collected per
//! image in an [`annotation::AnnotationSet`]. Sets are stored in a plain text
//! format ([`persistence`]); several images can be worked through in order
//! as a [`project::Project`] that remembers where annotation stopped.
//!
//! ```
//! use iat_core::{AnnotationSet, Label, Rectangle, Taxonomy};
//!
//! let labels = Taxonomy::parse("vehicles\n\tcar\n\tbicycle\n").unwrap();
//! let mut set = AnnotationSet::new("street.png", 640, 480).unwrap();
//! let id = set
//!     .add(Rectangle::new(10.0, 20.0, 30.0, 40.0).into(), Label::new("vehicles", "car", "car_01"), &labels)
//!     .unwrap();
//! assert_eq!(id, 0);
//! assert!(iat_core::serialize_set(&set).starts_with("IAT\t1\nimage\tstreet.png\t640\t480\n"));
//! ```

// The file formats are tab-separated; doc examples show them verbatim.
#![allow(clippy::tabs_in_doc_comments)]

pub mod annotation;
pub mod geometry;
pub mod persistence;
pub mod project;
pub mod taxonomy;
pub mod text;

pub use annotation::{Annotation, AnnotationId, AnnotationSet, ModelError};
pub use geometry::{Ellipse, InvalidShape, Point, Polygon, Rectangle, Shape, ViewTransform};
pub use persistence::{atomic_write, parse_set, serialize_set};
pub use project::{EntryStatus, Project, ProjectEntry, ProjectError, ProjectStats};
pub use taxonomy::{Label, LabelError, Taxonomy, TaxonomyClass};
pub use text::ParseError;

/// Code listings of the guide in `book/`, compiled and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/shapes.md")]
    mod shapes {}
    #[doc = include_str!("../../../book/src/labels.md")]
    mod labels {}
    #[doc = include_str!("../../../book/src/annotation-files.md")]
    mod annotation_files {}
    #[doc = include_str!("../../../book/src/projects.md")]
    mod projects {}
    #[doc = include_str!("../../../book/src/service.md")]
    mod service {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

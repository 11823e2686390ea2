//! The predefined Class → Type label hierarchy and the per-annotation label.
//!
//! Label files are plain UTF-8 text. A line without indentation opens a
//! class; a line indented by exactly one tab adds a type to the class above
//! it. Lines starting with `#` and blank lines are skipped.
//!
//! ```text
//! # road scene labels
//! vehicles
//! 	car
//! 	bicycle
//! people
//! 	male
//! 	female
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{last_line, name_problem, numbered_lines, ParseError};

/// One class and its types, in file order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyClass {
    pub name: String,
    pub types: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TaxonomyClass>", into = "Vec<TaxonomyClass>")]
pub struct Taxonomy {
    classes: Vec<TaxonomyClass>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaxonomyError {
    #[error("taxonomy has no classes")]
    Empty,
    #[error("duplicate class '{0}'")]
    DuplicateClass(String),
    #[error("duplicate type '{type_name}' in class '{class}'")]
    DuplicateType { class: String, type_name: String },
    #[error("class '{0}' has no types")]
    EmptyClass(String),
    #[error("bad name {name:?}: {reason}")]
    BadName { name: String, reason: &'static str },
}

/// Result of checking a label against the taxonomy.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("unknown class '{0}'")]
    UnknownClass(String),
    #[error("unknown type '{type_name}' in class '{class}'")]
    UnknownType { class: String, type_name: String },
    #[error("malformed label: {0}")]
    Malformed(&'static str),
}

fn class_name_problem(name: &str) -> Option<&'static str> {
    name_problem(name).or_else(|| name.starts_with('#').then_some("class name starts with '#'"))
}

impl Taxonomy {
    pub fn new(classes: Vec<TaxonomyClass>) -> Result<Self, TaxonomyError> {
        if classes.is_empty() {
            return Err(TaxonomyError::Empty);
        }
        for (i, class) in classes.iter().enumerate() {
            if let Some(reason) = class_name_problem(&class.name) {
                return Err(TaxonomyError::BadName { name: class.name.clone(), reason });
            }
            if classes[..i].iter().any(|c| c.name == class.name) {
                return Err(TaxonomyError::DuplicateClass(class.name.clone()));
            }
            if class.types.is_empty() {
                return Err(TaxonomyError::EmptyClass(class.name.clone()));
            }
            for (j, t) in class.types.iter().enumerate() {
                if let Some(reason) = name_problem(t) {
                    return Err(TaxonomyError::BadName { name: t.clone(), reason });
                }
                if class.types[..j].contains(t) {
                    return Err(TaxonomyError::DuplicateType { class: class.name.clone(), type_name: t.clone() });
                }
            }
        }
        Ok(Self { classes })
    }

    pub fn classes(&self) -> &[TaxonomyClass] {
        &self.classes
    }

    pub fn class(&self, name: &str) -> Option<&TaxonomyClass> {
        self.classes.iter().find(|c| c.name == name)
    }

    /// Checks that the label's class and type are predefined. The free-form
    /// name is not checked here.
    pub fn validate_label(&self, label: &Label) -> Result<(), LabelError> {
        let class = self.class(&label.class_name).ok_or_else(|| LabelError::UnknownClass(label.class_name.clone()))?;
        if class.types.contains(&label.type_name) {
            Ok(())
        } else {
            Err(LabelError::UnknownType { class: label.class_name.clone(), type_name: label.type_name.clone() })
        }
    }

    /// Canonical label-file text: no comments, LF endings, one trailing newline.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for class in &self.classes {
            out.push_str(&class.name);
            out.push('\n');
            for t in &class.types {
                out.push('\t');
                out.push_str(t);
                out.push('\n');
            }
        }
        out
    }

    /// Parses a label file. Errors carry the first line at which the input can
    /// no longer be the start of a valid file.
    pub fn parse(source: &str) -> Result<Self, ParseError> {
        let mut classes: Vec<TaxonomyClass> = Vec::new();
        let mut open_class_line = 0;
        for (no, raw) in numbered_lines(source) {
            if raw.starts_with('#') {
                continue;
            }
            let line = raw.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(type_name) = line.strip_prefix('\t') {
                let Some(class) = classes.last_mut() else {
                    return Err(ParseError::new(no, "type before class"));
                };
                if type_name.starts_with(['\t', ' ']) {
                    return Err(ParseError::new(no, "types are indented by exactly one tab"));
                }
                if let Some(reason) = name_problem(type_name) {
                    return Err(ParseError::new(no, reason));
                }
                if class.types.iter().any(|t| t == type_name) {
                    return Err(ParseError::new(no, format!("duplicate type '{type_name}' in class '{}'", class.name)));
                }
                class.types.push(type_name.to_string());
            } else {
                if line.starts_with(' ') {
                    return Err(ParseError::new(no, "indentation must be a single tab"));
                }
                if let Some(prev) = classes.last() {
                    if prev.types.is_empty() {
                        return Err(ParseError::new(
                            no,
                            format!("class '{}' (line {open_class_line}) has no types", prev.name),
                        ));
                    }
                }
                if let Some(reason) = class_name_problem(line) {
                    return Err(ParseError::new(no, reason));
                }
                if classes.iter().any(|c| c.name == line) {
                    return Err(ParseError::new(no, format!("duplicate class '{line}'")));
                }
                classes.push(TaxonomyClass { name: line.to_string(), types: Vec::new() });
                open_class_line = no;
            }
        }
        match classes.last() {
            None => Err(ParseError::new(last_line(source), "no classes")),
            Some(c) if c.types.is_empty() => Err(ParseError::new(
                last_line(source),
                format!("class '{}' (line {open_class_line}) has no types", c.name),
            )),
            Some(_) => Ok(Self { classes }),
        }
    }
}

impl TryFrom<Vec<TaxonomyClass>> for Taxonomy {
    type Error = TaxonomyError;

    fn try_from(classes: Vec<TaxonomyClass>) -> Result<Self, Self::Error> {
        Self::new(classes)
    }
}

impl From<Taxonomy> for Vec<TaxonomyClass> {
    fn from(t: Taxonomy) -> Self {
        t.classes
    }
}

/// Class, type and per-image unique name of one annotated entity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Label {
    #[serde(rename = "class")]
    pub class_name: String,
    #[serde(rename = "type")]
    pub type_name: String,
    pub name: String,
}

impl Label {
    pub fn new(class_name: impl Into<String>, type_name: impl Into<String>, name: impl Into<String>) -> Self {
        Self { class_name: class_name.into(), type_name: type_name.into(), name: name.into() }
    }

    /// Structural check: every part non-empty, single line, free of tabs and `|`.
    pub fn check(&self) -> Result<(), LabelError> {
        [&self.class_name, &self.type_name, &self.name]
            .into_iter()
            .find_map(|s| name_problem(s))
            .map_or(Ok(()), |reason| Err(LabelError::Malformed(reason)))
    }
}

//! Multi-image projects: an ordered list of images annotated one after the
//! other, with a persisted cursor so work resumes where it stopped.
//!
//! The project file (`.iatproj`) is tab-separated UTF-8:
//!
//! ```text
//! IATPROJ	1
//! labels	labels.txt
//! cursor	1
//! entry	a.png	annotated	annotations/a.png.iat
//! entry	b.png	pending	annotations/b.png.iat
//! ```
//!
//! Image, label and annotation paths are relative to the directory holding
//! the project file (the project root).

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::AnnotationSet;
use crate::persistence::{atomic_write, parse_set, serialize_set};
use crate::taxonomy::Taxonomy;
use crate::text::{field_problem, last_line, numbered_lines, parse_index, ParseError};

pub const MAGIC: &str = "IATPROJ";
pub const VERSION: &str = "1";
pub const ANNOTATIONS_DIR: &str = "annotations";
pub const DEFAULT_EXTENSIONS: [&str; 4] = ["png", "jpg", "jpeg", "bmp"];
pub const PROJECT_EXTENSION: &str = "iatproj";
pub const ANNOTATION_EXTENSION: &str = "iat";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryStatus {
    Pending,
    /// Saved at least once, even if no region was drawn.
    Annotated,
}

impl EntryStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            EntryStatus::Pending => "pending",
            EntryStatus::Annotated => "annotated",
        }
    }
}

impl fmt::Display for EntryStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectEntry {
    pub image_path: String,
    pub status: EntryStatus,
    pub annotation_path: String,
}

#[derive(Debug, Error)]
pub enum ProjectError {
    #[error("no images found in {}", .0.display())]
    NoImages(PathBuf),
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", .path.display())]
    Parse { path: PathBuf, source: ParseError },
    #[error("entry index {index} out of range (project has {len} entries)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("unusable path {}: {reason}", .path.display())]
    BadPath { path: PathBuf, reason: &'static str },
}

impl ProjectError {
    fn io(path: &Path) -> impl FnOnce(io::Error) -> ProjectError + '_ {
        move |source| ProjectError::Io { path: path.to_path_buf(), source }
    }

    fn parse(path: &Path) -> impl FnOnce(ParseError) -> ProjectError + '_ {
        move |source| ProjectError::Parse { path: path.to_path_buf(), source }
    }
}

/// Per-status entry counts and per-(class, type) annotation counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProjectStats {
    pub pending: usize,
    pub annotated: usize,
    pub labels: Vec<((String, String), usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Project {
    root: PathBuf,
    labels_path: String,
    entries: Vec<ProjectEntry>,
    cursor: usize,
}

fn dir_or_dot(p: Option<&Path>) -> PathBuf {
    match p {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Path of `target` relative to `base`, both canonicalized, with `/`
/// separators. Falls back to the absolute target when no relative path exists.
fn relative_path(target: &Path, base: &Path) -> Result<String, ProjectError> {
    let target = target.canonicalize().map_err(ProjectError::io(target))?;
    let base = base.canonicalize().map_err(ProjectError::io(base))?;
    let t: Vec<Component> = target.components().collect();
    let b: Vec<Component> = base.components().collect();
    let common = t.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let rel = if common == 0 {
        target.to_string_lossy().into_owned()
    } else {
        let ups = std::iter::repeat_n("..".to_string(), b.len() - common);
        let downs = t[common..].iter().map(|c| c.as_os_str().to_string_lossy().into_owned());
        ups.chain(downs).collect::<Vec<_>>().join("/")
    };
    checked_field(&rel, &target)?;
    Ok(rel)
}

fn checked_field(text: &str, path: &Path) -> Result<(), ProjectError> {
    match field_problem(text) {
        Some(reason) => Err(ProjectError::BadPath { path: path.to_path_buf(), reason }),
        None => Ok(()),
    }
}

fn load_taxonomy(path: &Path) -> Result<Taxonomy, ProjectError> {
    let text = std::fs::read_to_string(path).map_err(ProjectError::io(path))?;
    Taxonomy::parse(&text).map_err(ProjectError::parse(path))
}

impl Project {
    /// Scans `root` (not recursively) for images whose lowercase extension is
    /// in `extensions` and builds a fresh project over them, sorted by file
    /// name, all pending, cursor on the first image.
    pub fn create(root: &Path, labels: &Path, extensions: &[&str]) -> Result<Project, ProjectError> {
        load_taxonomy(labels)?;
        let labels_path = relative_path(labels, root)?;
        let wanted: HashSet<String> = extensions.iter().map(|e| e.trim_start_matches('.').to_lowercase()).collect();
        let mut names = Vec::new();
        for dirent in std::fs::read_dir(root).map_err(ProjectError::io(root))? {
            let dirent = dirent.map_err(ProjectError::io(root))?;
            let path = dirent.path();
            let matches = path.extension().and_then(|e| e.to_str()).is_some_and(|e| wanted.contains(&e.to_lowercase()));
            if !matches || !path.is_file() {
                continue;
            }
            let Some(name) = dirent.file_name().to_str().map(str::to_owned) else {
                continue;
            };
            if field_problem(&name).is_none() {
                names.push(name);
            }
        }
        if names.is_empty() {
            return Err(ProjectError::NoImages(root.to_path_buf()));
        }
        names.sort();
        let entries = names
            .into_iter()
            .map(|name| ProjectEntry {
                annotation_path: format!("{ANNOTATIONS_DIR}/{name}.{ANNOTATION_EXTENSION}"),
                image_path: name,
                status: EntryStatus::Pending,
            })
            .collect();
        Ok(Project { root: root.to_path_buf(), labels_path, entries, cursor: 0 })
    }

    /// A one-image project that is never written to disk; its annotation file
    /// sits next to the image as `<image>.iat`.
    pub fn single_image(image: &Path, labels: &Path) -> Result<Project, ProjectError> {
        if !image.is_file() {
            return Err(ProjectError::Io {
                path: image.to_path_buf(),
                source: io::Error::new(io::ErrorKind::NotFound, "image not found"),
            });
        }
        load_taxonomy(labels)?;
        let root = dir_or_dot(image.parent());
        let labels_path = relative_path(labels, &root)?;
        let name = image
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or(ProjectError::BadPath { path: image.to_path_buf(), reason: "not a UTF-8 file name" })?
            .to_string();
        checked_field(&name, image)?;
        let status = if root.join(format!("{name}.{ANNOTATION_EXTENSION}")).is_file() {
            EntryStatus::Annotated
        } else {
            EntryStatus::Pending
        };
        Ok(Project {
            root,
            labels_path,
            entries: vec![ProjectEntry {
                annotation_path: format!("{name}.{ANNOTATION_EXTENSION}"),
                image_path: name,
                status,
            }],
            cursor: 0,
        })
    }

    /// Reads a project file; the root becomes the file's directory.
    pub fn open(path: &Path) -> Result<Project, ProjectError> {
        let text = std::fs::read_to_string(path).map_err(ProjectError::io(path))?;
        Project::parse(&text, dir_or_dot(path.parent())).map_err(ProjectError::parse(path))
    }

    /// Writes the canonical project file atomically.
    pub fn save(&self, path: &Path) -> Result<(), ProjectError> {
        atomic_write(path, &self.serialize()).map_err(ProjectError::io(path))
    }

    pub fn serialize(&self) -> String {
        let mut out = format!("{MAGIC}\t{VERSION}\nlabels\t{}\ncursor\t{}\n", self.labels_path, self.cursor);
        for e in &self.entries {
            out.push_str(&format!("entry\t{}\t{}\t{}\n", e.image_path, e.status, e.annotation_path));
        }
        out
    }

    pub fn parse(source: &str, root: PathBuf) -> Result<Project, ParseError> {
        let lines: Vec<(usize, &str)> = numbered_lines(source).collect();
        let content_end = lines.iter().rposition(|(_, l)| !l.is_empty()).map_or(0, |i| i + 1);
        let mut it = lines[..content_end].iter().copied();
        let eof = || ParseError::new(last_line(source), "unexpected end of file");

        let (no, header) = it.next().unwrap_or((1, ""));
        match header.split_once('\t') {
            Some((MAGIC, VERSION)) => {}
            Some((MAGIC, v)) if !v.contains('\t') => return Err(ParseError::new(no, "unsupported version")),
            _ => return Err(ParseError::new(no, "bad header")),
        }

        let (no, line) = it.next().ok_or_else(eof)?;
        let labels_path = match line.split('\t').collect::<Vec<_>>()[..] {
            ["labels", p] if field_problem(p).is_none() => p.to_string(),
            ["labels", ..] => return Err(ParseError::new(no, "labels line needs one non-empty path")),
            _ => return Err(ParseError::new(no, "expected labels line")),
        };

        let (cursor_line, line) = it.next().ok_or_else(eof)?;
        let cursor = match line.split('\t').collect::<Vec<_>>()[..] {
            ["cursor", c] => parse_index(c)
                .and_then(|c| usize::try_from(c).ok())
                .ok_or_else(|| ParseError::new(cursor_line, "bad cursor"))?,
            _ => return Err(ParseError::new(cursor_line, "expected cursor line")),
        };

        let mut entries: Vec<ProjectEntry> = Vec::new();
        let mut seen = HashSet::new();
        let mut blank_at = None;
        for (no, line) in it {
            if line.is_empty() {
                blank_at.get_or_insert(no);
                continue;
            }
            if let Some(blank) = blank_at {
                return Err(ParseError::new(no, format!("blank line {blank} inside the file")));
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f[0] != "entry" {
                return Err(ParseError::new(no, format!("unknown keyword '{}'", f[0])));
            }
            if f.len() != 4 {
                return Err(ParseError::new(no, "entry needs image path, status and annotation path"));
            }
            if f[1].is_empty() || f[3].is_empty() {
                return Err(ParseError::new(no, "empty path"));
            }
            let status = match f[2] {
                "pending" => EntryStatus::Pending,
                "annotated" => EntryStatus::Annotated,
                other => return Err(ParseError::new(no, format!("unknown status '{other}'"))),
            };
            if !seen.insert(f[1]) {
                return Err(ParseError::new(no, format!("duplicate image '{}'", f[1])));
            }
            entries.push(ProjectEntry { image_path: f[1].into(), status, annotation_path: f[3].into() });
        }
        if entries.is_empty() {
            return Err(ParseError::new(last_line(source), "project has no entries"));
        }
        if cursor >= entries.len() {
            return Err(ParseError::new(
                cursor_line,
                format!("cursor {cursor} out of range for {} entries", entries.len()),
            ));
        }
        Ok(Project { root, labels_path, entries, cursor })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn labels_path(&self) -> &str {
        &self.labels_path
    }

    pub fn labels_file(&self) -> PathBuf {
        self.root.join(&self.labels_path)
    }

    pub fn load_taxonomy(&self) -> Result<Taxonomy, ProjectError> {
        load_taxonomy(&self.labels_file())
    }

    pub fn entries(&self) -> &[ProjectEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    fn check_index(&self, index: usize) -> Result<&ProjectEntry, ProjectError> {
        self.entries.get(index).ok_or(ProjectError::IndexOutOfRange { index, len: self.entries.len() })
    }

    /// Moves the cursor by `delta`, clamped to the first and last entry.
    pub fn move_cursor(&mut self, delta: i64) {
        let last = self.entries.len() as i64 - 1;
        self.cursor = (self.cursor as i64).saturating_add(delta).clamp(0, last) as usize;
    }

    pub fn set_cursor(&mut self, index: usize) -> Result<(), ProjectError> {
        self.check_index(index)?;
        self.cursor = index;
        Ok(())
    }

    /// Marks entry `index` as annotated.
    pub fn record_save(&mut self, index: usize) -> Result<(), ProjectError> {
        self.check_index(index)?;
        self.entries[index].status = EntryStatus::Annotated;
        Ok(())
    }

    pub fn image_file(&self, index: usize) -> Result<PathBuf, ProjectError> {
        Ok(self.root.join(&self.check_index(index)?.image_path))
    }

    pub fn annotation_file(&self, index: usize) -> Result<PathBuf, ProjectError> {
        Ok(self.root.join(&self.check_index(index)?.annotation_path))
    }

    /// Stored annotations of entry `index`, or `None` when none were saved.
    pub fn load_annotations(&self, index: usize) -> Result<Option<AnnotationSet>, ProjectError> {
        let path = self.annotation_file(index)?;
        match std::fs::read_to_string(&path) {
            Ok(text) => parse_set(&text).map(Some).map_err(ProjectError::parse(&path)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(ProjectError::Io { path, source: e }),
        }
    }

    /// Writes the annotation file of entry `index` atomically, creating its
    /// directory if needed, and marks the entry annotated.
    pub fn save_annotations(&mut self, index: usize, set: &AnnotationSet) -> Result<(), ProjectError> {
        let path = self.annotation_file(index)?;
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(ProjectError::io(dir))?;
        }
        atomic_write(&path, &serialize_set(set)).map_err(ProjectError::io(&path))?;
        self.record_save(index)
    }

    /// Label counts over the annotation files of all annotated entries, plus
    /// entry counts per status.
    pub fn aggregate_stats(&self) -> Result<ProjectStats, ProjectError> {
        let mut stats = ProjectStats::default();
        let mut counts: BTreeMap<(String, String), usize> = BTreeMap::new();
        for (i, e) in self.entries.iter().enumerate() {
            match e.status {
                EntryStatus::Pending => stats.pending += 1,
                EntryStatus::Annotated => {
                    stats.annotated += 1;
                    let path = self.annotation_file(i)?;
                    let text = std::fs::read_to_string(&path).map_err(ProjectError::io(&path))?;
                    let set = parse_set(&text).map_err(ProjectError::parse(&path))?;
                    for (key, n) in set.count_by_label() {
                        *counts.entry(key).or_default() += n;
                    }
                }
            }
        }
        stats.labels = counts.into_iter().collect();
        Ok(stats)
    }

    /// Re-expresses all stored paths relative to `new_root`, for saving the
    /// project file in another directory.
    pub fn rebase(&mut self, new_root: &Path) -> Result<(), ProjectError> {
        self.labels_path = relative_path(&self.labels_file(), new_root)?;
        for e in &mut self.entries {
            let image = self.root.join(&e.image_path);
            e.image_path = relative_path(&image, new_root)?;
            let name = Path::new(&e.image_path).file_name().and_then(|n| n.to_str()).unwrap_or(&e.image_path);
            e.annotation_path = format!("{ANNOTATIONS_DIR}/{name}.{ANNOTATION_EXTENSION}");
        }
        self.root = new_root.to_path_buf();
        Ok(())
    }
}

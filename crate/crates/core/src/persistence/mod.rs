//! The `.iat` annotation file format.
//!
//! One file holds one image's annotations as tab-separated records:
//!
//! ```text
//! IAT	1
//! image	img/a.png	640	480
//! ann	0
//! shape	rect	10	20	30	40
//! label	vehicles	car	car_01
//! end
//! ```
//!
//! Shape lines are `shape rect x y w h`, `shape ellipse cx cy rx ry` or
//! `shape polygon x1 y1 ... xk yk`. Annotations are written in id order.

mod atomic;

pub use atomic::atomic_write;

use crate::annotation::{AnnotationId, AnnotationSet, ModelError};
use crate::geometry::{Ellipse, Point, Polygon, Rectangle, Shape};
use crate::taxonomy::Label;
use crate::text::{format_number, last_line, numbered_lines, parse_index, parse_number, ParseError};

pub const MAGIC: &str = "IAT";
pub const VERSION: &str = "1";

/// Canonical text of an annotation set. Equal sets give identical bytes.
pub fn serialize_set(set: &AnnotationSet) -> String {
    let mut out =
        format!("{MAGIC}\t{VERSION}\nimage\t{}\t{}\t{}\n", set.image_path(), set.image_width(), set.image_height());
    let mut ordered: Vec<_> = set.annotations().iter().collect();
    ordered.sort_by_key(|a| a.id);
    for a in ordered {
        out.push_str(&format!("ann\t{}\n", a.id));
        out.push_str(&shape_line(&a.shape));
        let l = &a.label;
        out.push_str(&format!("label\t{}\t{}\t{}\nend\n", l.class_name, l.type_name, l.name));
    }
    out
}

fn shape_line(shape: &Shape) -> String {
    let (kind, values): (&str, Vec<f64>) = match shape {
        Shape::Rectangle(r) => ("rect", vec![r.x, r.y, r.w, r.h]),
        Shape::Ellipse(e) => ("ellipse", vec![e.cx, e.cy, e.rx, e.ry]),
        Shape::Polygon(p) => ("polygon", p.vertices.iter().flat_map(|v| [v.x, v.y]).collect()),
    };
    let mut line = format!("shape\t{kind}");
    for v in values {
        line.push('\t');
        line.push_str(&format_number(v));
    }
    line.push('\n');
    line
}

enum Expect {
    Ann,
    Shape(AnnotationId),
    Label(AnnotationId, Shape),
    End(AnnotationId, Shape, Label),
}

/// Parses an `.iat` file, enforcing the record grammar and the annotation set
/// invariants. CRLF line endings and trailing blank lines are accepted.
///
/// The id counter of the returned set continues right after the highest
/// stored id.
pub fn parse_set(source: &str) -> Result<AnnotationSet, ParseError> {
    let lines: Vec<(usize, &str)> = numbered_lines(source).collect();
    let content_end = lines.iter().rposition(|(_, l)| !l.is_empty()).map_or(0, |i| i + 1);
    let mut it = lines[..content_end].iter().copied();
    let mut blank_at = None;

    let (no, header) = it.next().unwrap_or((1, ""));
    let fields: Vec<&str> = header.split('\t').collect();
    if fields.len() != 2 || fields[0] != MAGIC {
        return Err(ParseError::new(no, "bad header"));
    }
    if fields[1] != VERSION {
        return Err(ParseError::new(no, "unsupported version"));
    }

    let Some((no, image)) = it.next() else {
        return Err(ParseError::new(last_line(source), "missing image line"));
    };
    let f: Vec<&str> = image.split('\t').collect();
    if f[0] != "image" {
        return Err(ParseError::new(no, "expected image line"));
    }
    if f.len() != 4 {
        return Err(ParseError::new(no, "image line needs path, width and height"));
    }
    let dim = |s: &str| parse_index(s).and_then(|v| u32::try_from(v).ok()).filter(|v| *v > 0);
    let (Some(w), Some(h)) = (dim(f[2]), dim(f[3])) else {
        return Err(ParseError::new(no, "image size must be positive integers"));
    };
    let mut set = AnnotationSet::new(f[1], w, h).map_err(|e| ParseError::new(no, e.to_string()))?;

    let mut state = Expect::Ann;
    for (no, line) in it {
        if line.is_empty() {
            blank_at.get_or_insert(no);
            continue;
        }
        if let Some(blank) = blank_at {
            return Err(ParseError::new(no, format!("blank line {blank} inside the file")));
        }
        let f: Vec<&str> = line.split('\t').collect();
        state = match (state, f[0]) {
            (Expect::Ann, "ann") => {
                if f.len() != 2 {
                    return Err(ParseError::new(no, "ann line needs exactly one id"));
                }
                let id = parse_index(f[1]).ok_or_else(|| ParseError::new(no, "bad annotation id"))?;
                if id < set.next_id() {
                    return Err(ParseError::new(no, "annotation ids must strictly increase"));
                }
                Expect::Shape(id)
            }
            (Expect::Shape(id), "shape") => Expect::Label(id, parse_shape(no, &f)?),
            (Expect::Label(id, shape), "label") => {
                if f.len() != 4 {
                    return Err(ParseError::new(no, "label line needs class, type and name"));
                }
                let label = Label::new(f[1], f[2], f[3]);
                label.check().map_err(|e| ParseError::new(no, e.to_string()))?;
                if set.annotations().iter().any(|a| a.label.name == label.name) {
                    return Err(ParseError::new(no, format!("duplicate name '{}'", label.name)));
                }
                Expect::End(id, shape, label)
            }
            (Expect::End(id, shape, label), "end") => {
                if f.len() != 1 {
                    return Err(ParseError::new(no, "end line takes no fields"));
                }
                set.insert_with_id(id, shape, label, None)
                    .map_err(|e: ModelError| ParseError::new(no, e.to_string()))?;
                Expect::Ann
            }
            (state, keyword) => {
                let wanted = match state {
                    Expect::Ann => "ann",
                    Expect::Shape(_) => "shape",
                    Expect::Label(..) => "label",
                    Expect::End(..) => "end",
                };
                let known = matches!(keyword, "ann" | "shape" | "label" | "end" | "image");
                let msg = if known {
                    format!("expected '{wanted}' record, found '{keyword}'")
                } else {
                    format!("unknown keyword '{keyword}'")
                };
                return Err(ParseError::new(no, msg));
            }
        };
    }
    match state {
        Expect::Ann => Ok(set),
        _ => Err(ParseError::new(last_line(source), "unexpected end of file inside an annotation")),
    }
}

fn parse_shape(no: usize, f: &[&str]) -> Result<Shape, ParseError> {
    let kind = f.get(1).copied().unwrap_or("");
    let mut values = Vec::with_capacity(f.len().saturating_sub(2));
    for text in f.iter().skip(2) {
        values.push(parse_number(text).ok_or_else(|| ParseError::new(no, format!("bad number '{text}'")))?);
    }
    let arity = |n: usize| {
        if values.len() == n {
            Ok(())
        } else {
            Err(ParseError::new(no, format!("{kind} needs {n} numbers, found {}", values.len())))
        }
    };
    let shape = match kind {
        "rect" => {
            arity(4)?;
            Shape::Rectangle(Rectangle::new(values[0], values[1], values[2], values[3]))
        }
        "ellipse" => {
            arity(4)?;
            Shape::Ellipse(Ellipse::new(values[0], values[1], values[2], values[3]))
        }
        "polygon" => {
            if values.len() % 2 != 0 {
                return Err(ParseError::new(no, "polygon needs an even number of coordinates"));
            }
            Shape::Polygon(Polygon::new(values.chunks(2).map(|c| Point::new(c[0], c[1])).collect()))
        }
        other => return Err(ParseError::new(no, format!("unknown shape kind '{other}'"))),
    };
    shape.validate().map_err(|e| ParseError::new(no, e.to_string()))?;
    Ok(shape)
}

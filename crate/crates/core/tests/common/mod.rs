//! Generators and reference oracles shared by the integration and acceptance
//! tests. Nothing here calls into the geometry code it is used to check.

#![allow(dead_code)]

use iat_core::{AnnotationSet, Ellipse, Label, Point, Polygon, Rectangle, Shape, Taxonomy, TaxonomyClass};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    rand::SeedableRng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Exact segment oracle on integer coordinates (parametric form).
// ---------------------------------------------------------------------------

pub type IPt = (i64, i64);

fn sub(a: IPt, b: IPt) -> IPt {
    (a.0 - b.0, a.1 - b.1)
}

fn cross(a: IPt, b: IPt) -> i64 {
    a.0 * b.1 - a.1 * b.0
}

fn dot(a: IPt, b: IPt) -> i64 {
    a.0 * b.0 + a.1 * b.1
}

/// `num / den` lies in [0, 1] (den != 0).
fn unit_ratio(num: i64, den: i64) -> bool {
    let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
    0 <= num && num <= den
}

/// For segments p→p+r and q→q+s: returns the overlap length class.
/// `None` when disjoint, `Some(false)` when they share exactly one point,
/// `Some(true)` when they share a sub-segment of positive length.
pub fn segment_relation(p: IPt, p2: IPt, q: IPt, q2: IPt) -> Option<bool> {
    let r = sub(p2, p);
    let s = sub(q2, q);
    let qp = sub(q, p);
    let rxs = cross(r, s);
    if rxs != 0 {
        let t_num = cross(qp, s);
        let u_num = cross(qp, r);
        return (unit_ratio(t_num, rxs) && unit_ratio(u_num, rxs)).then_some(false);
    }
    if cross(qp, r) != 0 {
        return None; // parallel, distinct lines
    }
    // Collinear: project q and q+s onto r, in units of r·r.
    let rr = dot(r, r);
    let t0 = dot(qp, r);
    let t1 = t0 + dot(s, r);
    let (lo, hi) = (t0.min(t1), t0.max(t1));
    let a = lo.max(0);
    let b = hi.min(rr);
    if a > b {
        None
    } else {
        Some(a < b)
    }
}

/// Brute-force polygon validity over every pair of edges.
pub fn polygon_valid_oracle(v: &[IPt]) -> bool {
    let n = v.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        if v[i] == v[(i + 1) % n] {
            return false;
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let rel = segment_relation(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]);
            match (adjacent, rel) {
                (_, None) => {}
                (true, Some(false)) => {}
                _ => return false,
            }
        }
    }
    true
}

pub fn to_polygon(v: &[IPt]) -> Polygon {
    Polygon::new(v.iter().map(|&(x, y)| Point::new(x as f64, y as f64)).collect())
}

pub fn random_int_polygon(rng: &mut TestRng, span: i64) -> Vec<IPt> {
    let n = rng.gen_range(3..=10);
    (0..n).map(|_| (rng.gen_range(0..=span), rng.gen_range(0..=span))).collect()
}

// ---------------------------------------------------------------------------
// Point-in-polygon oracles.
// ---------------------------------------------------------------------------

/// Winding number by summing signed turning angles.
pub fn winding_number(poly: &[(f64, f64)], p: (f64, f64)) -> i64 {
    let n = poly.len();
    let mut total = 0.0;
    for i in 0..n {
        let a = (poly[i].0 - p.0, poly[i].1 - p.1);
        let b = (poly[(i + 1) % n].0 - p.0, poly[(i + 1) % n].1 - p.1);
        total += (a.0 * b.1 - a.1 * b.0).atan2(a.0 * b.0 + a.1 * b.1);
    }
    (total / std::f64::consts::TAU).round() as i64
}

pub fn distance_to_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

pub fn distance_to_boundary(poly: &[(f64, f64)], p: (f64, f64)) -> f64 {
    (0..poly.len()).map(|i| distance_to_segment(p, poly[i], poly[(i + 1) % poly.len()])).fold(f64::INFINITY, f64::min)
}

/// Scanline fill: for each sample row, sorted edge crossings delimit inside
/// spans (even-odd). Returns the sample centers found inside, on an
/// `n x n` grid over `[x0, x0+size] x [y0, y0+size]`.
pub fn scanline_raster(poly: &[(f64, f64)], x0: f64, y0: f64, size: f64, n: usize) -> Vec<Vec<bool>> {
    let cell = size / n as f64;
    let mut grid = vec![vec![false; n]; n];
    for (row, line) in grid.iter_mut().enumerate() {
        let y = y0 + (row as f64 + 0.5) * cell;
        let mut xs: Vec<f64> = Vec::new();
        for i in 0..poly.len() {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            if (a.1 <= y && y < b.1) || (b.1 <= y && y < a.1) {
                xs.push(a.0 + (y - a.1) / (b.1 - a.1) * (b.0 - a.0));
            }
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for span in xs.chunks(2) {
            if let [l, r] = span {
                for (col, cell_in) in line.iter_mut().enumerate() {
                    let x = x0 + (col as f64 + 0.5) * cell;
                    if *l <= x && x <= *r {
                        *cell_in = true;
                    }
                }
            }
        }
    }
    grid
}

/// Star-shaped polygon around `center`: one vertex per angular slot, jittered
/// inside the slot so consecutive angles stay less than pi apart. Always simple.
pub fn star_polygon(
    rng: &mut TestRng,
    center: (f64, f64),
    r_min: f64,
    r_max: f64,
    max_vertices: usize,
) -> Vec<(f64, f64)> {
    let n = rng.gen_range(3..=max_vertices);
    let slot = std::f64::consts::TAU / n as f64;
    (0..n)
        .map(|i| {
            let a = (i as f64 + rng.gen_range(0.25..0.75)) * slot;
            let r = rng.gen_range(r_min..r_max);
            (q6(center.0 + r * a.cos()), q6(center.1 + r * a.sin()))
        })
        .collect()
}

/// Round to 6 decimals so the value is stored exactly by the text format.
pub fn q6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6 + 0.0
}

// ---------------------------------------------------------------------------
// Shapes, taxonomies and annotation sets.
// ---------------------------------------------------------------------------

pub fn random_shape(rng: &mut TestRng, extent: f64) -> Shape {
    let coord = |rng: &mut TestRng| q6(rng.gen_range(0.0..extent));
    let size = |rng: &mut TestRng| q6(rng.gen_range(0.5..extent / 2.0));
    match rng.gen_range(0..3) {
        0 => Rectangle::new(coord(rng), coord(rng), size(rng), size(rng)).into(),
        1 => Ellipse::new(coord(rng), coord(rng), size(rng), size(rng)).into(),
        _ => {
            let c = (rng.gen_range(extent * 0.25..extent * 0.75), rng.gen_range(extent * 0.25..extent * 0.75));
            let pts = star_polygon(rng, c, extent * 0.05, extent * 0.25, 12);
            Polygon::new(pts.into_iter().map(|(x, y)| Point::new(x, y)).collect()).into()
        }
    }
}

const WORDS: &[&str] = &[
    "vehicles",
    "people",
    "foods",
    "car",
    "bicycle",
    "male",
    "female",
    "fruit",
    "vegetable",
    "dog",
    "sky",
    "tree",
    "büro",
    "straße",
    "két",
    "road sign",
    "x",
    "a-b",
    "#tag",
    "1",
    "人",
    "ünï",
];

pub fn random_name(rng: &mut TestRng) -> String {
    let w = *WORDS.choose(rng).unwrap();
    if rng.gen_bool(0.5) {
        format!("{w}_{}", rng.gen_range(0..50))
    } else {
        w.to_string()
    }
}

pub fn random_taxonomy(rng: &mut TestRng) -> Taxonomy {
    let n_classes = rng.gen_range(1..=5);
    let mut classes: Vec<TaxonomyClass> = Vec::new();
    while classes.len() < n_classes {
        let name = random_name(rng);
        if name.starts_with('#') || classes.iter().any(|c| c.name == name) {
            continue;
        }
        let mut types: Vec<String> = Vec::new();
        for _ in 0..rng.gen_range(1..=5) {
            let t = random_name(rng);
            if !types.contains(&t) {
                types.push(t);
            }
        }
        classes.push(TaxonomyClass { name, types });
    }
    Taxonomy::new(classes).expect("generator builds valid taxonomies")
}

pub fn random_label(rng: &mut TestRng, t: &Taxonomy, name: String) -> Label {
    let class = t.classes().choose(rng).unwrap();
    let ty = class.types.choose(rng).unwrap();
    Label::new(class.name.clone(), ty.clone(), name)
}

/// A valid set of up to `max` annotations built through the public model API.
pub fn random_set(rng: &mut TestRng, t: &Taxonomy, max: usize) -> AnnotationSet {
    let w = rng.gen_range(1..4000);
    let h = rng.gen_range(1..4000);
    let path = format!("img/{}.png", random_name(rng));
    let mut set = AnnotationSet::new(path, w, h).unwrap();
    let n = rng.gen_range(0..=max);
    for i in 0..n {
        let shape = random_shape(rng, 500.0);
        let name = format!("{}_{i}", random_name(rng));
        let label = random_label(rng, t, name);
        set.add(shape, label, t).expect("generated annotation is valid");
    }
    set
}

// ---------------------------------------------------------------------------
// Single-character mutations.
// ---------------------------------------------------------------------------

const MUTATION_CHARS: &[char] =
    &['\t', '\n', '\r', ' ', '0', '1', '7', '9', '-', '.', 'x', 'A', '#', '|', 'é', '\u{0}', 'e', 'n', 'd'];

/// Replaces, inserts or deletes one character. Returns the mutated text and
/// the 1-based line on which the mutation happened.
pub fn mutate(rng: &mut TestRng, text: &str) -> (String, usize) {
    let chars: Vec<char> = text.chars().collect();
    let at = rng.gen_range(0..=chars.len());
    let line = chars[..at].iter().filter(|&&c| c == '\n').count() + 1;
    let mut out = chars.clone();
    match rng.gen_range(0..3) {
        0 if at < chars.len() => out[at] = *MUTATION_CHARS.choose(rng).unwrap(),
        1 if at < chars.len() => {
            out.remove(at);
        }
        _ => {
            let c = *MUTATION_CHARS.choose(rng).unwrap();
            out.insert(at, c);
        }
    }
    (out.into_iter().collect(), line)
}

// ---------------------------------------------------------------------------
// Mutant checking for the three text formats.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Annotation,
    Project,
    Labels,
}

fn line_count(text: &str) -> usize {
    let body = text.strip_suffix('\n').unwrap_or(text);
    if text.is_empty() {
        1
    } else {
        body.split('\n').count()
    }
}

fn first_lines(text: &str, n: usize) -> String {
    text.split_inclusive('\n').take(n).collect()
}

fn parse_kind(kind: FileKind, text: &str) -> Result<Box<dyn std::any::Any>, iat_core::ParseError> {
    match kind {
        FileKind::Annotation => iat_core::parse_set(text).map(|s| Box::new(s) as Box<dyn std::any::Any>),
        FileKind::Project => iat_core::Project::parse(text, ".".into()).map(|p| Box::new(p) as _),
        FileKind::Labels => Taxonomy::parse(text).map(|t| Box::new(t) as _),
    }
}

/// Independent re-check of everything a parsed object must satisfy.
fn sound(kind: FileKind, parsed: &dyn std::any::Any) -> Result<(), String> {
    match kind {
        FileKind::Annotation => {
            let s = parsed.downcast_ref::<AnnotationSet>().unwrap();
            let mut names = std::collections::HashSet::new();
            let mut prev = None;
            for a in s.annotations() {
                a.shape.validate().map_err(|e| e.to_string())?;
                a.label.check().map_err(|e| e.to_string())?;
                if !names.insert(a.label.name.clone()) {
                    return Err("duplicate name".into());
                }
                if prev.is_some_and(|p| p >= a.id) || a.id >= s.next_id() {
                    return Err("id order".into());
                }
                prev = Some(a.id);
            }
            if s.image_width() == 0 || s.image_height() == 0 || s.image_path().contains(['\t', '\n']) {
                return Err("image".into());
            }
            let again = iat_core::parse_set(&iat_core::serialize_set(s)).map_err(|e| e.to_string())?;
            (again == *s).then_some(()).ok_or_else(|| "round trip".into())
        }
        FileKind::Project => {
            let p = parsed.downcast_ref::<iat_core::Project>().unwrap();
            if p.is_empty() || p.cursor() >= p.len() {
                return Err("cursor".into());
            }
            let paths: std::collections::HashSet<_> = p.entries().iter().map(|e| &e.image_path).collect();
            if paths.len() != p.len() {
                return Err("duplicate image".into());
            }
            let again = iat_core::Project::parse(&p.serialize(), ".".into()).map_err(|e| e.to_string())?;
            (again == *p).then_some(()).ok_or_else(|| "round trip".into())
        }
        FileKind::Labels => {
            let t = parsed.downcast_ref::<Taxonomy>().unwrap();
            Taxonomy::new(t.classes().to_vec()).map_err(|e| e.to_string())?;
            let again = Taxonomy::parse(&t.serialize()).map_err(|e| e.to_string())?;
            (again == *t).then_some(()).ok_or_else(|| "round trip".into())
        }
    }
}

/// Parses a mutant produced from a valid file by a change on `changed_line`.
/// Accepts either a sound object or an error located no earlier than the
/// change, within the file, and reproduced when the input is cut right after
/// the reported line. Returns whether the mutant parsed.
pub fn check_mutant(kind: FileKind, text: &str, changed_line: usize) -> Result<bool, String> {
    match parse_kind(kind, text) {
        Ok(obj) => sound(kind, obj.as_ref()).map(|_| true).map_err(|e| format!("unsound parse ({e}) of {text:?}")),
        Err(err) => {
            let last = line_count(text);
            if err.line < changed_line.min(last) || err.line > last {
                return Err(format!("error line {} outside [{changed_line}, {last}]: {err} in {text:?}", err.line));
            }
            match parse_kind(kind, &first_lines(text, err.line)) {
                Err(e) if e.line == err.line => Ok(false),
                other => Err(format!("truncated input disagrees ({:?}) with {err} in {text:?}", other.err())),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Pipelines shared with the acceptance target.
// ---------------------------------------------------------------------------

/// A random set whose annotations have each had one handle dragged to a
/// random (quantized) spot; drags the model rejects are skipped.
pub fn edited_set(rng: &mut TestRng, t: &Taxonomy, max: usize) -> AnnotationSet {
    let mut set = random_set(rng, t, max);
    let ids: Vec<_> = set.annotations().iter().map(|a| a.id).collect();
    for id in ids {
        let shape = set.get(id).unwrap().shape.clone();
        let handle = rng.gen_range(0..shape.handles().len());
        let to = Point::new(q6(rng.gen_range(0.0..500.0)), q6(rng.gen_range(0.0..500.0)));
        if let Ok(moved) = shape.move_handle(handle, to) {
            set.update_shape(id, moved).expect("a shape move_handle accepted is valid");
        }
    }
    set
}

/// A canonical project file with 1 to 6 entries.
pub fn random_project_text(rng: &mut TestRng) -> String {
    let n = rng.gen_range(1..=6);
    let mut out = format!("IATPROJ\t1\nlabels\t{}.txt\ncursor\t{}\n", random_name(rng), rng.gen_range(0..n));
    for i in 0..n {
        let ext = ["png", "jpg", "jpeg", "bmp"].choose(rng).unwrap();
        let image = format!("{}_{i}.{ext}", random_name(rng));
        let status = if rng.gen_bool(0.5) { "pending" } else { "annotated" };
        out.push_str(&format!("entry\t{image}\t{status}\tannotations/{image}.iat\n"));
    }
    out
}

/// Mutates `count` canonical files of `kind` and checks every mutant.
/// Returns how many mutants still parsed.
pub fn mutation_campaign(kind: FileKind, seed: u64, count: usize) -> Result<usize, String> {
    let mut rng = rng(seed);
    let t = random_taxonomy(&mut rng);
    let mut parsed = 0;
    for i in 0..count {
        let text = match kind {
            FileKind::Annotation => iat_core::serialize_set(&random_set(&mut rng, &t, 6)),
            FileKind::Project => random_project_text(&mut rng),
            FileKind::Labels => random_taxonomy(&mut rng).serialize(),
        };
        let (mutant, line) = mutate(&mut rng, &text);
        parsed += check_mutant(kind, &mutant, line).map_err(|e| format!("mutant #{i}: {e}"))? as usize;
    }
    Ok(parsed)
}

fn read(path: &std::path::Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Create a project, annotate entry 0, save, advance, reopen: everything
/// read back must match the last save byte for byte.
pub fn resume_scenario() -> Result<(), String> {
    use iat_core::{EntryStatus, Project};
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path();
    for name in ["a.png", "b.png", "c.jpg"] {
        std::fs::write(root.join(name), b"image bytes").unwrap();
    }
    std::fs::write(root.join("labels.txt"), "vehicles\n\tcar\npeople\n\tmale\n").unwrap();
    let project_file = root.join("project.iatproj");
    let mut project = Project::create(root, &root.join("labels.txt"), &["png", "jpg"]).map_err(|e| e.to_string())?;
    project.save(&project_file).map_err(|e| e.to_string())?;

    let taxonomy = project.load_taxonomy().map_err(|e| e.to_string())?;
    let mut set = AnnotationSet::new("a.png", 640, 480).unwrap();
    set.add(Rectangle::new(10.0, 20.0, 30.0, 40.0).into(), Label::new("vehicles", "car", "car_01"), &taxonomy).unwrap();
    set.add(Ellipse::new(100.5, 80.0, 12.0, 8.25).into(), Label::new("people", "male", "m1"), &taxonomy).unwrap();
    let poly = Polygon::from_coords(&[(200.0, 200.0), (260.0, 200.0), (230.0, 250.123456)]);
    set.add(poly.into(), Label::new("vehicles", "car", "car_02"), &taxonomy).unwrap();
    project.save_annotations(0, &set).map_err(|e| e.to_string())?;
    project.save(&project_file).map_err(|e| e.to_string())?;
    project.move_cursor(1);
    project.save(&project_file).map_err(|e| e.to_string())?;
    let saved_project = read(&project_file);
    let saved_set = read(&project.annotation_file(0).unwrap());

    let reopened = Project::open(&project_file).map_err(|e| e.to_string())?;
    let check = |ok: bool, what: &str| if ok { Ok(()) } else { Err(format!("{what} differs after reopen")) };
    check(reopened.cursor() == 1, "cursor")?;
    let statuses: Vec<_> = reopened.entries().iter().map(|e| e.status).collect();
    check(statuses == [EntryStatus::Annotated, EntryStatus::Pending, EntryStatus::Pending], "statuses")?;
    check(reopened.serialize().as_bytes() == saved_project.as_slice(), "project bytes")?;
    let loaded = reopened.load_annotations(0).map_err(|e| e.to_string())?.ok_or("annotations missing")?;
    check(loaded == set, "annotation set")?;
    check(iat_core::serialize_set(&loaded).as_bytes() == saved_set.as_slice(), "annotation bytes")?;
    check(reopened.load_annotations(1).map_err(|e| e.to_string())?.is_none(), "pending entry")?;
    check(reopened == project, "project")?;
    Ok(())
}

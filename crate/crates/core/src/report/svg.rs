use std::fmt::Write as _;
use std::path::Path;

use crate::embedding::Embedding2D;
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::scalar::Scalar;

use super::{escape_xml, write_atomic};

/// Group colors, cycled when there are more groups than entries.
pub const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 540.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const MARKER: f64 = 4.5;

/// Marker shapes for assignment labels: train/test for splits, then extra
/// shapes for further folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    TriangleDown,
    Circle,
    Square,
    Diamond,
    TriangleUp,
}

const FOLD_SHAPES: [Shape; 5] = [Shape::TriangleDown, Shape::Circle, Shape::Square, Shape::Diamond, Shape::TriangleUp];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit<T: Scalar>(e: &Embedding2D<T>) -> Self {
        let xs = e.coords.column(0).iter().map(|v| v.as_f64()).collect::<Vec<_>>();
        let ys = e.coords.column(1).iter().map(|v| v.as_f64()).collect::<Vec<_>>();
        let bounds = |v: &[f64]| {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let pad = if hi > lo { 0.05 * (hi - lo) } else { 1.0 };
            (lo - pad, hi + pad)
        };
        let (x0, x1) = bounds(&xs);
        let (y0, y1) = bounds(&ys);
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        let w = WIDTH - LEFT - RIGHT;
        let h = HEIGHT - TOP - BOTTOM;
        (LEFT + (x - self.x0) / (self.x1 - self.x0) * w, TOP + (self.y1 - y) / (self.y1 - self.y0) * h)
    }
}

fn color(group: usize) -> &'static str {
    PALETTE[group % PALETTE.len()]
}

fn shape_svg(out: &mut String, shape: Shape, cx: f64, cy: f64, r: f64, fill: &str, class: &str) {
    let poly = |out: &mut String, pts: &[(f64, f64)]| {
        let pts: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", cx + x, cy + y)).collect();
        let _ = writeln!(out, r#"<polygon class="{class}" points="{}" fill="{fill}"/>"#, pts.join(" "));
    };
    match shape {
        Shape::Circle => {
            let _ = writeln!(out, r#"<circle class="{class}" cx="{cx:.2}" cy="{cy:.2}" r="{r:.2}" fill="{fill}"/>"#);
        }
        Shape::TriangleDown => poly(out, &[(-r, -r * 0.8), (r, -r * 0.8), (0.0, r)]),
        Shape::TriangleUp => poly(out, &[(-r, r * 0.8), (r, r * 0.8), (0.0, -r)]),
        Shape::Diamond => poly(out, &[(0.0, -r), (r, 0.0), (0.0, r), (-r, 0.0)]),
        Shape::Square => {
            let _ = writeln!(
                out,
                r#"<rect class="{class}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                cx - r * 0.85,
                cy - r * 0.85,
                r * 1.7,
                r * 1.7
            );
        }
    }
}

fn open(title: &str, frame: &Frame) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, "<title>{}</title>", escape_xml(title));
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let _ = writeln!(
        s,
        r##"<rect class="frame" x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333333"/>"##
    );
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, TOP - 15.0, escape_xml(title));
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">embedding dimension 1</text>"#, LEFT + pw / 2.0, HEIGHT - 18.0);
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">embedding dimension 2</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    for (i, (x, y)) in [(frame.x0, frame.y0), (frame.x1, frame.y1)].into_iter().enumerate() {
        let (px, py) = frame.px(x, y);
        let anchor = if i == 0 { "start" } else { "end" };
        let _ = writeln!(s, r#"<text x="{px:.1}" y="{:.1}" text-anchor="{anchor}" font-size="10">{}</text>"#, TOP + ph + 14.0, super::format_sig6(x));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{py:.1}" text-anchor="end" font-size="10">{}</text>"#, LEFT - 4.0, super::format_sig6(y));
    }
    s
}

fn group_legend(s: &mut String, n_groups: usize) {
    let x = WIDTH - RIGHT + 15.0;
    let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}">BE group</text>"#, TOP + 10.0);
    for g in 0..n_groups {
        let y = TOP + 28.0 + 18.0 * g as f64;
        let _ = writeln!(s, r#"<rect class="swatch" x="{x:.1}" y="{:.1}" width="10" height="10" fill="{}"/>"#, y - 9.0, color(g));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{y:.1}">{g}</text>"#, x + 16.0);
    }
}

fn check_inputs<T: Scalar>(embedding: &Embedding2D<T>, groups: &[usize]) -> Result<usize> {
    if groups.len() != embedding.coords.nrows() {
        return Err(Error::LengthMismatch {
            left: groups.len(),
            right: embedding.coords.nrows(),
        });
    }
    if embedding.coords.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("embedding coordinates".into()));
    }
    Ok(groups.iter().max().map_or(0, |&g| g + 1))
}

/// Scatter plot of the embedding, one circle per patient colored by group.
pub fn render_embedding_plot<T: Scalar>(embedding: &Embedding2D<T>, groups: &[usize], path: &Path) -> Result<()> {
    let n_groups = check_inputs(embedding, groups)?;
    let frame = Frame::fit(embedding);
    let mut s = open(&format!("BE groups ({} embedding)", embedding.method), &frame);
    for (i, &g) in groups.iter().enumerate() {
        let (cx, cy) = frame.px(embedding.coords[[i, 0]].as_f64(), embedding.coords[[i, 1]].as_f64());
        shape_svg(&mut s, Shape::Circle, cx, cy, MARKER, color(g), "marker");
    }
    group_legend(&mut s, n_groups);
    s.push_str("</svg>\n");
    write_atomic(path, s.as_bytes())
}

/// Same layout as the group plot, with marker shape showing the assignment:
/// triangle-down for training, circle for testing (or one shape per fold).
pub fn render_assignment_plot<T: Scalar>(
    embedding: &Embedding2D<T>,
    groups: &[usize],
    partition: &Partition,
    path: &Path,
) -> Result<()> {
    let n_groups = check_inputs(embedding, groups)?;
    let frame = Frame::fit(embedding);
    let mut s = open(&format!("{} assignment ({} embedding)", partition.strategy(), embedding.method), &frame);
    let (names, shapes): (Vec<String>, Vec<Shape>) = match partition {
        Partition::Split(_) => (vec!["train".into(), "test".into()], vec![Shape::TriangleDown, Shape::Circle]),
        Partition::Folds(f) => (0..f.n_folds).map(|k| (format!("fold {k}"), FOLD_SHAPES[k % FOLD_SHAPES.len()])).unzip(),
    };
    for (i, (id, &g)) in embedding.patient_ids.iter().zip(groups).enumerate() {
        let label = partition
            .label_of(id)
            .ok_or_else(|| Error::InvalidGroups(format!("patient {id:?} has no assignment")))?;
        let (cx, cy) = frame.px(embedding.coords[[i, 0]].as_f64(), embedding.coords[[i, 1]].as_f64());
        let class = format!("marker {}", names[label].replace(' ', "-"));
        shape_svg(&mut s, shapes[label], cx, cy, MARKER, color(g), &class);
    }
    group_legend(&mut s, n_groups);
    let x = WIDTH - RIGHT + 20.0;
    let y0 = TOP + 50.0 + 18.0 * n_groups as f64;
    for (k, (name, &shape)) in names.iter().zip(&shapes).enumerate() {
        let y = y0 + 18.0 * k as f64;
        shape_svg(&mut s, shape, x, y - 4.0, MARKER, "#000000", "legend-shape");
        let _ = writeln!(s, r#"<text x="{:.1}" y="{y:.1}">{name}</text>"#, x + 11.0);
    }
    s.push_str("</svg>\n");
    write_atomic(path, s.as_bytes())
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use ndarray::Array2;
    use regex::Regex;

    use super::*;
    use crate::embedding::{EmbedMethod, InitKind};
    use crate::partition::{FoldAssignment, PartitionAssignment, Side, Strategy};

    fn embedding(n: usize) -> Embedding2D<f64> {
        Embedding2D {
            coords: Array2::from_shape_fn((n, 2), |(i, j)| ((i * 7 + j * 3) % 11) as f64 - 5.0),
            patient_ids: (0..n).map(|i| format!("p{i}")).collect(),
            params: None,
            method: EmbedMethod::Nonlinear,
            init: InitKind::Noise,
            sigma_floor_hits: 0,
            curve: None,
        }
    }

    fn render(e: &Embedding2D<f64>, groups: &[usize]) -> String {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.svg");
        render_embedding_plot(e, groups, &p).unwrap();
        std::fs::read_to_string(p).unwrap()
    }

    fn fills(svg: &str) -> BTreeSet<String> {
        Regex::new(r#"fill="(#[0-9a-f]{6})""#).unwrap().captures_iter(svg).map(|c| c[1].to_string()).collect()
    }

    #[test]
    fn palette_and_marker_count() {
        let e = embedding(12);
        let groups: Vec<usize> = (0..12).map(|i| i % 3).collect();
        let svg = render(&e, &groups);
        assert_eq!(fills(&svg).len(), 3);
        assert_eq!(svg.matches(r#"class="marker""#).count(), 12);
        assert!(svg.contains("embedding dimension 1"));
        assert_eq!(svg, render(&e, &groups));
    }

    #[test]
    fn palette_cycles() {
        let e = embedding(12);
        let groups: Vec<usize> = (0..12).collect();
        assert_eq!(fills(&render(&e, &groups)).len(), 10);
    }

    #[test]
    fn assignment_shapes_match_split() {
        let e = embedding(10);
        let groups = vec![0; 10];
        let split = PartitionAssignment {
            strategy: Strategy::BestCase,
            assignment: e
                .patient_ids
                .iter()
                .enumerate()
                .map(|(i, id)| (id.clone(), if i < 3 { Side::Test } else { Side::Train }))
                .collect(),
            seed: 0,
            requested_ratio: 0.3,
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.svg");
        render_assignment_plot(&e, &groups, &Partition::Split(split), &p).unwrap();
        let svg = std::fs::read_to_string(&p).unwrap();
        assert_eq!(svg.matches(r#"<polygon class="marker train""#).count(), 7);
        assert_eq!(svg.matches(r#"<circle class="marker test""#).count(), 3);
    }

    #[test]
    fn fold_shapes() {
        let e = embedding(9);
        let groups: Vec<usize> = (0..9).map(|i| i / 3).collect();
        let folds = FoldAssignment {
            strategy: Strategy::WorstCase,
            n_folds: 3,
            fold_of: e.patient_ids.iter().cloned().zip(groups.iter().copied()).collect(),
            seed: 0,
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.svg");
        render_assignment_plot(&e, &groups, &Partition::Folds(folds), &p).unwrap();
        let svg = std::fs::read_to_string(&p).unwrap();
        assert_eq!(svg.matches(r#"class="marker fold-2""#).count(), 3);
    }

    #[test]
    fn mismatched_groups_rejected() {
        let e = embedding(4);
        let dir = tempfile::tempdir().unwrap();
        assert!(render_embedding_plot(&e, &[0, 1], &dir.path().join("x.svg")).is_err());
    }
}

//! Level curves of scalar functions on ℝ² by marching squares, and a
//! box-relative component count across levels.
//!
//! Counts depend on the box: a fiber leaving `[-R, R]²` is seen as one or
//! more clipped arcs, and clipped arcs are never joined outside the box.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{ExprMap, MapDerivatives};

pub const MIN_RESOLUTION: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("level curves need a scalar function of two variables, got ℝ^{n_in} → ℝ^{n_out}")]
    Shape { n_in: usize, n_out: usize },
    #[error("grid resolution {0} is below {MIN_RESOLUTION}")]
    Resolution(usize),
    #[error("box half-width must be positive and finite, got {0}")]
    HalfWidth(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
    /// Ends on the box boundary or next to a cell that could not be evaluated.
    pub clipped: bool,
    /// Largest per-cell bound `max |∇g| at corners × cell diagonal` over the
    /// cells this curve passes through.
    pub cell_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCurveSet {
    pub function: String,
    pub level: f64,
    pub half_width: f64,
    pub resolution: usize,
    pub polylines: Vec<Polyline>,
    pub components: usize,
    /// Saddle cells resolved by the sign at the cell center.
    pub saddle_cells: usize,
    /// Cells with a non-finite corner value.
    pub skipped_cells: usize,
    pub heuristic: bool,
}

impl LevelCurveSet {
    pub fn clipped(&self) -> usize {
        self.polylines.iter().filter(|p| p.clipped).count()
    }

    pub fn closed(&self) -> usize {
        self.polylines.iter().filter(|p| p.closed).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# globinj-level-curves v1");
        let _ = writeln!(out, "# function: {}", self.function);
        let _ = writeln!(out, "# level: {:?}", self.level);
        let _ = writeln!(out, "# half_width: {:?}", self.half_width);
        let _ = writeln!(out, "# resolution: {}", self.resolution);
        out.push_str("polyline,vertex,x,y,closed,clipped,cell_bound\n");
        for (k, p) in self.polylines.iter().enumerate() {
            for (i, v) in p.points.iter().enumerate() {
                let _ = writeln!(out, "{k},{i},{:?},{:?},{},{},{:?}", v[0], v[1], p.closed, p.clipped, p.cell_bound);
            }
        }
        out
    }

    /// SVG 1.1 overlay of the curves in the box; clipped arcs are dashed.
    pub fn to_svg(&self) -> String {
        let size = 512.0;
        let r = self.half_width;
        let px = |v: &[f64; 2]| ((v[0] + r) / (2.0 * r) * size, (r - v[1]) / (2.0 * r) * size);
        let mut out = String::new();
        let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{s}" height="{s}" viewBox="0 0 {s} {s}">"#,
            s = size
        );
        let _ = writeln!(
            out,
            r#"<title>{} = {:?} on [-{r:?}, {r:?}]^2, N = {}, {} components</title>"#,
            xml_escape(&self.function),
            self.level,
            self.resolution,
            self.components
        );
        let _ = writeln!(out, r##"<rect x="0" y="0" width="{size}" height="{size}" fill="white" stroke="#888"/>"##);
        let (ox, oy) = px(&[0.0, 0.0]);
        let _ = writeln!(out, r##"<line x1="0" y1="{oy:.2}" x2="{size}" y2="{oy:.2}" stroke="#ddd"/>"##);
        let _ = writeln!(out, r##"<line x1="{ox:.2}" y1="0" x2="{ox:.2}" y2="{size}" stroke="#ddd"/>"##);
        for p in &self.polylines {
            let mut pts = String::new();
            for v in &p.points {
                let (a, b) = px(v);
                let _ = write!(pts, "{a:.2},{b:.2} ");
            }
            let tag = if p.closed { "polygon" } else { "polyline" };
            let dash = if p.clipped { r#" stroke-dasharray="4 2""# } else { "" };
            let _ = writeln!(out, r##"<{tag} points="{}" fill="none" stroke="#1f4e9c"{dash}/>"##, pts.trim_end());
        }
        out.push_str("</svg>\n");
        out
    }
}

pub(crate) fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn check_input(g: &ExprMap, r: f64, n: usize) -> Result<(), TopologyError> {
    if g.n_in() != 2 || g.n_out() != 1 {
        return Err(TopologyError::Shape { n_in: g.n_in(), n_out: g.n_out() });
    }
    if n < MIN_RESOLUTION {
        return Err(TopologyError::Resolution(n));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(TopologyError::HalfWidth(r));
    }
    Ok(())
}

/// Node values `g − c` on the `(n+1)²` grid, row-major from the bottom.
fn sample_grid(g: &ExprMap, c: f64, r: f64, n: usize) -> Vec<f64> {
    let e = g.component(0);
    let h = 2.0 * r / n as f64;
    let rows: Vec<Vec<f64>> = (0..=n)
        .into_par_iter()
        .map(|j| {
            let y = -r + h * j as f64;
            (0..=n)
                .map(|i| e.eval(&[-r + h * i as f64, y]).map(|v| v - c).unwrap_or(f64::NAN))
                .collect()
        })
        .collect();
    rows.concat()
}

/// Edge ids: horizontal `(i, j)–(i+1, j)` first, then vertical `(i, j)–(i, j+1)`.
struct Edges {
    n: usize,
}

impl Edges {
    fn h(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    fn v(&self, i: usize, j: usize) -> usize {
        self.n * (self.n + 1) + j * (self.n + 1) + i
    }

    fn on_boundary(&self, e: usize) -> bool {
        let n = self.n;
        if e < n * (n + 1) {
            let j = e / n;
            j == 0 || j == n
        } else {
            let i = (e - n * (n + 1)) % (n + 1);
            i == 0 || i == n
        }
    }
}

pub fn trace_level_curve(g: &ExprMap, c: f64, r: f64, n: usize) -> Result<LevelCurveSet, TopologyError> {
    let name = g.component(0).to_string();
    trace_named(g, &name, c, r, n)
}

pub fn trace_named(g: &ExprMap, name: &str, c: f64, r: f64, n: usize) -> Result<LevelCurveSet, TopologyError> {
    check_input(g, r, n)?;
    let s = sample_grid(g, c, r, n);
    let h = 2.0 * r / n as f64;
    let node = |i: usize, j: usize| s[j * (n + 1) + i];
    let coord = |i: usize, j: usize| [-r + h * i as f64, -r + h * j as f64];
    let edges = Edges { n };
    let d = MapDerivatives::first_order(g);
    let diag = h * std::f64::consts::SQRT_2;

    // Per row: crossing vertices, segments with their cell bound, counters.
    type Row = (Vec<(usize, [f64; 2])>, Vec<(usize, usize, f64)>, usize, Vec<usize>);
    let rows: Vec<Row> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut verts = Vec::new();
            let mut segs = Vec::new();
            let mut saddles = 0;
            let mut gaps = Vec::new();
            for i in 0..n {
                let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
                let vals = corners.map(|(a, b)| node(a, b));
                if vals.iter().any(|v| !v.is_finite()) {
                    gaps.extend([edges.h(i, j), edges.v(i + 1, j), edges.h(i, j + 1), edges.v(i, j)]);
                    continue;
                }
                let above = vals.map(|v| v > 0.0);
                // bottom, right, top, left
                let sides = [
                    (edges.h(i, j), 0, 1),
                    (edges.v(i + 1, j), 1, 2),
                    (edges.h(i, j + 1), 3, 2),
                    (edges.v(i, j), 0, 3),
                ];
                let crossed: Vec<usize> = (0..4).filter(|&k| above[sides[k].1] != above[sides[k].2]).collect();
                if crossed.is_empty() {
                    continue;
                }
                for &k in &crossed {
                    let (id, a, b) = sides[k];
                    let (pa, pb) = (coord(corners[a].0, corners[a].1), coord(corners[b].0, corners[b].1));
                    let t = vals[a] / (vals[a] - vals[b]);
                    verts.push((id, [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]));
                }
                let grad_max = corners
                    .iter()
                    .map(|&(a, b)| d.gradient(0, &coord(a, b)).map(|gr| gr[0].hypot(gr[1])).unwrap_or(f64::INFINITY))
                    .fold(0.0, f64::max);
                let bound = grad_max * diag;
                let id = |k: usize| sides[k].0;
                if crossed.len() == 2 {
                    segs.push((id(crossed[0]), id(crossed[1]), bound));
                } else {
                    saddles += 1;
                    let p = coord(i, j);
                    let centre = g.component(0).eval(&[p[0] + 0.5 * h, p[1] + 0.5 * h]).map(|v| v - c > 0.0);
                    // The corner pair sharing the centre's sign is joined through the cell.
                    if centre.unwrap_or(above[0]) == above[0] {
                        segs.push((id(0), id(1), bound));
                        segs.push((id(2), id(3), bound));
                    } else {
                        segs.push((id(0), id(3), bound));
                        segs.push((id(1), id(2), bound));
                    }
                }
            }
            (verts, segs, saddles, gaps)
        })
        .collect();

    let mut vertex: BTreeMap<usize, [f64; 2]> = BTreeMap::new();
    let mut adj: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    let mut gap_edges = std::collections::BTreeSet::new();
    let mut saddle_cells = 0;
    let mut skipped_cells = 0;
    for (verts, segs, saddles, gaps) in rows {
        vertex.extend(verts);
        for (a, b, w) in segs {
            adj.entry(a).or_default().push((b, w));
            adj.entry(b).or_default().push((a, w));
        }
        saddle_cells += saddles;
        skipped_cells += gaps.len() / 4;
        gap_edges.extend(gaps);
    }

    let mut used = std::collections::BTreeSet::new();
    let mut polylines = Vec::new();
    let walk = |start: usize, used: &mut std::collections::BTreeSet<usize>| -> (Vec<usize>, f64, bool) {
        let mut path = vec![start];
        let mut bound: f64 = 0.0;
        used.insert(start);
        let mut cur = start;
        let mut closed = false;
        loop {
            let next = adj[&cur].iter().find(|(b, _)| !used.contains(b)).copied();
            match next {
                Some((b, w)) => {
                    bound = bound.max(w);
                    used.insert(b);
                    path.push(b);
                    cur = b;
                }
                None => {
                    if let Some(&(_, w)) = adj[&cur].iter().find(|(b, _)| *b == start && path.len() > 2) {
                        bound = bound.max(w);
                        closed = true;
                    }
                    break;
                }
            }
        }
        (path, bound, closed)
    };
    // Open arcs first, starting from their degree-one ends.
    let ends: Vec<usize> = adj.iter().filter(|(_, v)| v.len() == 1).map(|(k, _)| *k).collect();
    for e in ends {
        if used.contains(&e) {
            continue;
        }
        let (path, bound, _) = walk(e, &mut used);
        polylines.push((path, bound, false));
    }
    let rest: Vec<usize> = adj.keys().copied().collect();
    for e in rest {
        if used.contains(&e) {
            continue;
        }
        let (path, bound, closed) = walk(e, &mut used);
        polylines.push((path, bound, closed));
    }

    let mut out: Vec<Polyline> = polylines
        .into_iter()
        .map(|(path, cell_bound, closed)| {
            let clipped = !closed
                && [path[0], path[path.len() - 1]]
                    .iter()
                    .any(|&e| edges.on_boundary(e) || gap_edges.contains(&e));
            let mut points: Vec<[f64; 2]> = path.iter().map(|e| vertex[e]).collect();
            normalize(&mut points, closed);
            // An open end in the interior means a degenerate linking; still an arc.
            Polyline { points, closed, clipped: clipped || !closed, cell_bound }
        })
        .collect();
    out.sort_by(|a, b| lex(&a.points[0], &b.points[0]));
    Ok(LevelCurveSet {
        function: name.to_string(),
        level: c,
        half_width: r,
        resolution: n,
        components: out.len(),
        polylines: out,
        saddle_cells,
        skipped_cells,
        heuristic: true,
    })
}

fn lex(a: &[f64; 2], b: &[f64; 2]) -> std::cmp::Ordering {
    a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1]))
}

/// Starts closed curves at their leftmost-lowest vertex and orients open
/// arcs from the smaller end.
fn normalize(points: &mut [[f64; 2]], closed: bool) {
    if closed {
        let k = (0..points.len()).min_by(|&a, &b| lex(&points[a], &points[b])).unwrap_or(0);
        points.rotate_left(k);
    } else if lex(&points[points.len() - 1], &points[0]).is_lt() {
        points.reverse();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelJump {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationScan {
    pub function: String,
    pub levels: Vec<f64>,
    pub radii: Vec<f64>,
    pub resolution: usize,
    /// `counts[k][i]`: components at `levels[i]` in the box of `radii[k]`.
    pub counts: Vec<Vec<usize>>,
    /// Consecutive levels whose counts differ in every box.
    pub jumps: Vec<LevelJump>,
    /// Interior levels whose count differs from both neighbours in every box.
    pub suspected_atypical: Vec<f64>,
    pub heuristic: bool,
}

/// Component counts over `levels` in the boxes `R, 2R, 4R`. Levels are
/// sorted; a change between neighbours counts only if it shows in all three
/// boxes, since growing the box alone can change a count.
pub fn bifurcation_scan(g: &ExprMap, levels: &[f64], r: f64, n: usize) -> Result<BifurcationScan, TopologyError> {
    check_input(g, r, n)?;
    let mut levels: Vec<f64> = levels.iter().copied().filter(|c| c.is_finite()).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let radii = vec![r, 2.0 * r, 4.0 * r];
    let name = g.component(0).to_string();
    let mut counts = Vec::with_capacity(radii.len());
    for &rr in &radii {
        let row: Vec<usize> = levels
            .iter()
            .map(|&c| trace_named(g, &name, c, rr, n).map(|s| s.components))
            .collect::<Result<_, _>>()?;
        counts.push(row);
    }
    let differs = |a: usize, b: usize| counts.iter().all(|row| row[a] != row[b]);
    let jumps = (1..levels.len())
        .filter(|&i| differs(i - 1, i))
        .map(|i| LevelJump { lower: levels[i - 1], upper: levels[i] })
        .collect();
    let suspected_atypical = (1..levels.len().saturating_sub(1))
        .filter(|&i| differs(i - 1, i) && differs(i, i + 1))
        .map(|i| levels[i])
        .collect();
    Ok(BifurcationScan {
        function: name,
        levels,
        radii,
        resolution: n,
        counts,
        jumps,
        suspected_atypical,
        heuristic: true,
    })
}

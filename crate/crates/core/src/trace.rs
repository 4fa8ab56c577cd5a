//! Tracing of the singular curve `J = 0`, its joint-space image, and the
//! characteristic curves (other preimages of the image curve).

use std::collections::HashMap;
use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::dkp::{DkpOptions, DkpSolver};
use crate::error::{Error, Result};
use crate::linalg::{self, Vec2};
use crate::maps::{
    family_scale, jacobian_det, jacobian_det_gradient, FamilyScale, JointPoint, MapFamily,
    WorkspaceBox, WorkspacePoint,
};
use crate::singular::{find_special_points_with, SearchOptions, SpecialKind, SpecialPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurveKind {
    Singularity,
    Characteristic,
}

/// How a polyline end was reached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndTag {
    /// Closed curve, or a chained point cloud that simply ran out.
    None,
    /// Left the analysis box.
    Boundary,
    /// Terminated on a corank-2 point, which is the final vertex.
    Corank2(WorkspacePoint),
    /// The step fell below the collapse threshold.
    Collapsed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline<P> {
    pub vertices: Vec<P>,
    pub closed: bool,
    pub cusp_indices: Vec<usize>,
    pub kind: CurveKind,
    pub start_tag: EndTag,
    pub end_tag: EndTag,
}

impl<P: Copy> Polyline<P> {
    fn map<Q>(&self, f: impl Fn(P) -> Q) -> Polyline<Q> {
        Polyline {
            vertices: self.vertices.iter().map(|&p| f(p)).collect(),
            closed: self.closed,
            cusp_indices: self.cusp_indices.clone(),
            kind: self.kind,
            start_tag: self.start_tag,
            end_tag: self.end_tag,
        }
    }

    pub fn cusps(&self) -> impl Iterator<Item = P> + '_ {
        self.cusp_indices.iter().map(|&i| self.vertices[i])
    }
}

pub type WorkspaceCurve = Polyline<WorkspacePoint>;
pub type JointCurve = Polyline<JointPoint>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CurveSet {
    pub curves: Vec<WorkspaceCurve>,
    /// Corank-2 elliptic points with no curve through them.
    pub isolated_points: Vec<WorkspacePoint>,
    /// Locations where a branch was truncated by step collapse.
    pub collapses: Vec<WorkspacePoint>,
}

impl CurveSet {
    pub fn cusp_count(&self) -> usize {
        self.curves.iter().map(|c| c.cusp_indices.len()).sum()
    }

    pub fn vertex_count(&self) -> usize {
        self.curves.iter().map(|c| c.vertices.len()).sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct JointCurveSet {
    pub curves: Vec<JointCurve>,
    pub isolated_points: Vec<JointPoint>,
}

impl JointCurveSet {
    /// Euclidean distance from `p` to the nearest curve segment or isolated
    /// point.
    pub fn distance_to(&self, p: JointPoint) -> f64 {
        let mut best = f64::INFINITY;
        for c in &self.curves {
            let v = &c.vertices;
            if v.len() == 1 {
                best = best.min(v[0].dist(p));
            }
            for w in v.windows(2) {
                best = best.min(segment_distance(p.to_array(), w[0].to_array(), w[1].to_array()));
            }
            if c.closed && v.len() > 2 {
                best = best.min(segment_distance(p.to_array(), v[v.len() - 1].to_array(), v[0].to_array()));
            }
        }
        for q in &self.isolated_points {
            best = best.min(q.dist(p));
        }
        best
    }
}

pub fn segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = linalg::dot(ab, ab);
    let t = if len2 > 0.0 {
        (linalg::dot(ap, ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    linalg::norm([ap[0] - t * ab[0], ap[1] - t * ab[1]])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    /// Nominal arclength between vertices.
    pub step: f64,
    /// Seed lattice for special points.
    pub special: SearchOptions,
    pub max_vertices_per_branch: usize,
}

impl TraceOptions {
    pub fn with_step(step: f64) -> Self {
        Self {
            step,
            special: SearchOptions::default(),
            max_vertices_per_branch: 200_000,
        }
    }
}

/// Branches end this close to a corank-2 point.
const NODE_RADIUS: f64 = 1e-4;
const MIN_STEP: f64 = 1e-12;
/// Corrector target, relative to the family's median `|J|`.
const CORRECT_REL: f64 = 1e-12;
const MAX_TURN: f64 = 0.35;

pub fn trace_singularity_curves(family: &dyn MapFamily, bbox: WorkspaceBox, step: f64) -> Result<CurveSet> {
    let opts = TraceOptions::with_step(step);
    let special = find_special_points_with(family, bbox, &opts.special)?.points;
    trace_with_special(family, bbox, &opts, &special)
}

/// Traces `J = 0` in `bbox` using already located special points for node
/// termination, isolated points and cusp marking.
pub fn trace_with_special(
    family: &dyn MapFamily,
    bbox: WorkspaceBox,
    opts: &TraceOptions,
    special: &[SpecialPoint],
) -> Result<CurveSet> {
    if !(opts.step > 0.0 && opts.step.is_finite()) {
        return Err(Error::PreconditionViolated("step must be positive".into()));
    }
    if !bbox.is_valid() {
        return Err(Error::PreconditionViolated("degenerate trace box".into()));
    }
    let tracer = Tracer {
        family,
        bbox,
        step: opts.step,
        scale: family_scale(family),
        corank2: special
            .iter()
            .filter(|s| s.kind.is_corank2() || s.kind == SpecialKind::Degenerate)
            .map(|s| s.location)
            .collect(),
        max_vertices: opts.max_vertices_per_branch,
    };

    let mut index = VertexIndex::new(family, opts.step);
    let mut out = CurveSet::default();
    for seed in tracer.seeds() {
        if index.any_within(seed, opts.step) {
            continue;
        }
        let curve = tracer.trace_branch(seed, &mut out.collapses);
        if curve.vertices.len() < 2 {
            continue;
        }
        for &v in &curve.vertices {
            index.insert(v);
        }
        out.curves.push(curve);
    }

    for s in special.iter().filter(|s| s.kind == SpecialKind::Corank2Elliptic) {
        if tracer.is_isolated(s.location) {
            out.isolated_points.push(family.canonical(s.location));
        }
    }
    for s in special.iter().filter(|s| s.kind == SpecialKind::Cusp) {
        mark_cusp(family, &mut out.curves, s.location, opts.step);
    }
    out.curves.sort_by(|a, b| {
        let (p, q) = (a.vertices[0], b.vertices[0]);
        p.phi.total_cmp(&q.phi).then(p.y.total_cmp(&q.y))
    });
    Ok(out)
}

struct Tracer<'a> {
    family: &'a dyn MapFamily,
    bbox: WorkspaceBox,
    step: f64,
    scale: FamilyScale,
    corank2: Vec<WorkspacePoint>,
    max_vertices: usize,
}

struct March {
    points: Vec<WorkspacePoint>,
    closed: bool,
    tag: EndTag,
}

impl Tracer<'_> {
    fn correct(&self, mut p: WorkspacePoint) -> Option<WorkspacePoint> {
        let target = CORRECT_REL * self.scale.det;
        for _ in 0..12 {
            let j = jacobian_det(self.family, p);
            if j.abs() <= target {
                return Some(p);
            }
            let g = jacobian_det_gradient(self.family, p);
            let g2 = linalg::dot(g, g);
            if g2 == 0.0 || !g2.is_finite() {
                return None;
            }
            p = p.offset(-j * g[0] / g2, -j * g[1] / g2);
        }
        (jacobian_det(self.family, p).abs() <= 1e3 * target).then_some(p)
    }

    fn tangent(&self, p: WorkspacePoint) -> Option<Vec2> {
        let g = jacobian_det_gradient(self.family, p);
        let n = linalg::norm(g);
        (n > 0.0 && n.is_finite()).then(|| [-g[1] / n, g[0] / n])
    }

    fn in_box(&self, p: WorkspacePoint) -> bool {
        if self.family.is_periodic() {
            p.y >= self.bbox.y_min && p.y <= self.bbox.y_max
        } else {
            self.bbox.contains(p, 0.0)
        }
    }

    fn nearest_corank2(&self, p: WorkspacePoint) -> Option<(WorkspacePoint, f64)> {
        self.corank2
            .iter()
            .map(|&c| (c, self.family.dist(c, p)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Seeds from sign changes of `J` along the edges of a lattice whose
    /// cells are about two steps wide.
    fn seeds(&self) -> Vec<WorkspacePoint> {
        let nx = ((self.bbox.width() / (2.0 * self.step)).ceil() as usize).clamp(16, 4096);
        let ny = ((self.bbox.height() / (2.0 * self.step)).ceil() as usize).clamp(16, 4096);
        let dx = self.bbox.width() / nx as f64;
        let dy = self.bbox.height() / ny as f64;
        let node = |i: usize, j: usize| {
            WorkspacePoint::new(self.bbox.phi_min + i as f64 * dx, self.bbox.y_min + j as f64 * dy)
        };
        let values: Vec<f64> = (0..=ny)
            .into_par_iter()
            .flat_map_iter(|j| (0..=nx).map(move |i| (i, j)))
            .map(|(i, j)| jacobian_det(self.family, node(i, j)))
            .collect();
        let at = |i: usize, j: usize| values[j * (nx + 1) + i];
        let mut seeds = Vec::new();
        for j in 0..=ny {
            for i in 0..=nx {
                let here = at(i, j);
                for (ni, nj) in [(i + 1, j), (i, j + 1)] {
                    if ni > nx || nj > ny {
                        continue;
                    }
                    let there = at(ni, nj);
                    if here * there >= 0.0 {
                        continue;
                    }
                    let t = here / (here - there);
                    let (a, b) = (node(i, j), node(ni, nj));
                    let guess = WorkspacePoint::new(a.phi + t * (b.phi - a.phi), a.y + t * (b.y - a.y));
                    let Some(s) = self.correct(guess) else { continue };
                    let near_node = self
                        .nearest_corank2(s)
                        .is_some_and(|(_, d)| d < 1.5 * self.step);
                    if self.in_box(s) && !near_node {
                        seeds.push(s);
                    }
                }
            }
        }
        seeds
    }

    fn march(&self, seed: WorkspacePoint, direction: f64, collapses: &mut Vec<WorkspacePoint>) -> March {
        let mut points = vec![seed];
        let Some(t0) = self.tangent(seed) else {
            return March { points, closed: false, tag: EndTag::Collapsed };
        };
        let mut t_prev = [direction * t0[0], direction * t0[1]];
        let mut q = seed;
        let mut h = self.step;
        let mut travelled = 0.0;
        let mut left_seed = false;
        loop {
            if points.len() >= self.max_vertices {
                return March { points, closed: false, tag: EndTag::None };
            }
            if let Some((c, d)) = self.nearest_corank2(q) {
                if d < NODE_RADIUS {
                    let delta = self.family.delta(c, q);
                    points.push(q.offset(delta[0], delta[1]));
                    return March { points, closed: false, tag: EndTag::Corank2(c) };
                }
                if d < 2.0 * self.step {
                    h = h.min(0.5 * d);
                }
            }
            if h < MIN_STEP {
                collapses.push(self.family.canonical(q));
                return March { points, closed: false, tag: EndTag::Collapsed };
            }
            let pred = q.offset(h * t_prev[0], h * t_prev[1]);
            let accepted = self.correct(pred).and_then(|p| {
                let moved = self.family.dist(p, q);
                let t = self.tangent(p)?;
                let t = if linalg::dot(t, t_prev) < 0.0 { [-t[0], -t[1]] } else { t };
                let turn = linalg::dot(t, t_prev).clamp(-1.0, 1.0).acos();
                (moved > 0.25 * h && moved < 1.5 * h && turn < MAX_TURN).then_some((p, t, moved))
            });
            let Some((p, t, moved)) = accepted else {
                h *= 0.5;
                continue;
            };
            if !self.in_box(p) {
                return March { points, closed: false, tag: EndTag::Boundary };
            }
            points.push(p);
            travelled += moved;
            q = p;
            t_prev = t;
            h = (2.0 * h).min(self.step);
            let from_seed = self.family.dist(q, seed);
            if from_seed > 2.0 * self.step {
                left_seed = true;
            }
            if left_seed && travelled > 3.0 * self.step && from_seed < self.step {
                return March { points, closed: true, tag: EndTag::None };
            }
        }
    }

    fn trace_branch(&self, seed: WorkspacePoint, collapses: &mut Vec<WorkspacePoint>) -> WorkspaceCurve {
        let forward = self.march(seed, 1.0, collapses);
        let (vertices, closed, start_tag) = if forward.closed {
            (forward.points, true, EndTag::None)
        } else {
            let backward = self.march(seed, -1.0, collapses);
            let mut v: Vec<_> = backward.points.into_iter().skip(1).rev().collect();
            v.extend(forward.points);
            (v, false, backward.tag)
        };
        WorkspaceCurve {
            vertices: vertices.into_iter().map(|p| self.family.canonical(p)).collect(),
            closed,
            cusp_indices: Vec::new(),
            kind: CurveKind::Singularity,
            start_tag,
            end_tag: if closed { EndTag::None } else { forward.tag },
        }
    }

    /// No sign change of `J` within ten steps of `p`.
    fn is_isolated(&self, p: WorkspacePoint) -> bool {
        let r = 10.0 * self.step;
        let n = 20;
        let mut sign = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                let q = p.offset(-r + 2.0 * r * i as f64 / n as f64, -r + 2.0 * r * j as f64 / n as f64);
                let v = jacobian_det(self.family, q);
                if v.abs() <= CORRECT_REL * self.scale.det {
                    continue;
                }
                if sign == 0.0 {
                    sign = v.signum();
                } else if v.signum() != sign {
                    return false;
                }
            }
        }
        true
    }
}

fn mark_cusp(family: &dyn MapFamily, curves: &mut [WorkspaceCurve], cusp: WorkspacePoint, step: f64) {
    let nearest = curves
        .iter()
        .enumerate()
        .flat_map(|(ci, c)| c.vertices.iter().enumerate().map(move |(vi, &v)| (ci, vi, v)))
        .map(|(ci, vi, v)| (ci, vi, family.dist(v, cusp)))
        .min_by(|a, b| a.2.total_cmp(&b.2));
    let Some((ci, vi, d)) = nearest else { return };
    if d > step {
        log::warn!("cusp at ({}, {}) has no traced vertex within one step", cusp.phi, cusp.y);
        return;
    }
    let curve = &mut curves[ci];
    let cusp = family.canonical(cusp);
    if curve.cusp_indices.contains(&vi) {
        curve.vertices.insert(vi + 1, cusp);
        for idx in curve.cusp_indices.iter_mut().filter(|i| **i > vi) {
            *idx += 1;
        }
        curve.cusp_indices.push(vi + 1);
    } else {
        curve.vertices[vi] = cusp;
        curve.cusp_indices.push(vi);
    }
    curve.cusp_indices.sort_unstable();
}

/// Spatial hash over canonical workspace points; wraps in φ for periodic
/// families.
struct VertexIndex<'a> {
    family: &'a dyn MapFamily,
    cell: f64,
    wrap: Option<i64>,
    buckets: HashMap<(i64, i64), Vec<WorkspacePoint>>,
}

impl<'a> VertexIndex<'a> {
    fn new(family: &'a dyn MapFamily, cell: f64) -> Self {
        let (cell, wrap) = if family.is_periodic() {
            let n = (TAU / cell).ceil().max(1.0);
            (TAU / n, Some(n as i64))
        } else {
            (cell, None)
        };
        Self {
            family,
            cell,
            wrap,
            buckets: HashMap::new(),
        }
    }

    fn key(&self, p: WorkspacePoint) -> (i64, i64) {
        let p = self.family.canonical(p);
        let i = (p.phi / self.cell).floor() as i64;
        let j = (p.y / self.cell).floor() as i64;
        (self.wrap_i(i), j)
    }

    fn wrap_i(&self, i: i64) -> i64 {
        match self.wrap {
            Some(n) => i.rem_euclid(n),
            None => i,
        }
    }

    fn insert(&mut self, p: WorkspacePoint) {
        let k = self.key(p);
        self.buckets.entry(k).or_default().push(p);
    }

    fn neighbours(&self, p: WorkspacePoint, radius: f64) -> impl Iterator<Item = WorkspacePoint> + '_ {
        let (i, j) = self.key(p);
        let r = (radius / self.cell).ceil() as i64;
        (-r..=r)
            .flat_map(move |di| (-r..=r).map(move |dj| (self.wrap_i(i + di), j + dj)))
            .filter_map(|k| self.buckets.get(&k))
            .flatten()
            .copied()
    }

    fn any_within(&self, p: WorkspacePoint, radius: f64) -> bool {
        self.neighbours(p, radius).any(|v| self.family.dist(v, p) < radius)
    }

    fn remove(&mut self, p: WorkspacePoint) {
        let k = self.key(p);
        if let Some(b) = self.buckets.get_mut(&k) {
            if let Some(pos) = b.iter().position(|&v| v == p) {
                b.swap_remove(pos);
            }
        }
    }

    fn contains(&self, p: WorkspacePoint) -> bool {
        self.buckets.get(&self.key(p)).is_some_and(|b| b.contains(&p))
    }

    fn nearest_within(&self, p: WorkspacePoint, radius: f64) -> Option<WorkspacePoint> {
        self.neighbours(p, radius)
            .map(|v| (v, self.family.dist(v, p)))
            .filter(|(_, d)| *d <= radius)
            .min_by(|a, b| {
                a.1.total_cmp(&b.1)
                    .then(a.0.phi.total_cmp(&b.0.phi))
                    .then(a.0.y.total_cmp(&b.0.y))
            })
            .map(|(v, _)| v)
    }
}

/// Pushes every vertex forward by the map.
pub fn image_curves(family: &dyn MapFamily, cs: &CurveSet) -> JointCurveSet {
    JointCurveSet {
        curves: cs.curves.iter().map(|c| c.map(|p| family.eval(p))).collect(),
        isolated_points: cs.isolated_points.iter().map(|&p| family.eval(p)).collect(),
    }
}

/// Characteristic curves: for every singular vertex, the other real
/// preimages of its image, chained into polylines.
///
/// Preimages closer than a quarter step to the vertex itself are dropped
/// (they are the vertex, resolved as a near-double root). Other preimages are
/// kept even when they lie on the singular set.
pub fn characteristic_curves(family: &dyn MapFamily, cs: &CurveSet, step: f64) -> Result<CurveSet> {
    characteristic_curves_with(family, cs, step, DkpOptions::default())
}

pub fn characteristic_curves_with(
    family: &dyn MapFamily,
    cs: &CurveSet,
    step: f64,
    dkp: DkpOptions,
) -> Result<CurveSet> {
    let solver = DkpSolver::new(family, dkp)?;
    let exclusion = 0.25 * step;
    let jobs: Vec<&[WorkspacePoint]> = cs
        .curves
        .iter()
        .filter(|c| c.kind == CurveKind::Singularity)
        .flat_map(|c| {
            let v = &c.vertices;
            (0..v.len()).step_by(CHUNK).map(move |s| &v[s..(s + CHUNK + 1).min(v.len())])
        })
        .collect();
    let points: Vec<WorkspacePoint> = jobs
        .par_iter()
        .flat_map_iter(|chunk| other_preimages(&solver, chunk, exclusion))
        .collect();
    Ok(CurveSet {
        curves: chain_points(family, points, CHAIN_JUMP * step),
        isolated_points: Vec::new(),
        collapses: Vec::new(),
    })
}

/// Characteristic points move faster than the vertices that generate them,
/// so chaining allows jumps of several steps.
const CHAIN_JUMP: f64 = 8.0;

/// Vertices between two full DKP solves.
const CHUNK: usize = 16;

/// Full solves at both ends of `chunk`; interior vertices get the solutions
/// continued forward from the first end and backward from the last.
fn other_preimages(solver: &DkpSolver, chunk: &[WorkspacePoint], exclusion: f64) -> Vec<WorkspacePoint> {
    let f = solver.family();
    let keep = |p: WorkspacePoint, sols: Vec<WorkspacePoint>| -> Vec<WorkspacePoint> {
        sols.into_iter().filter(|&s| f.dist(s, p) > exclusion).collect()
    };
    let full = |p: WorkspacePoint| match solver.solve(f.eval(p)) {
        Ok(set) => keep(p, set.solutions),
        Err(e) => {
            log::debug!("characteristic: vertex ({}, {}) skipped: {e}", p.phi, p.y);
            Vec::new()
        }
    };
    let n = chunk.len();
    let mut per_vertex: Vec<Vec<WorkspacePoint>> = vec![Vec::new(); n];
    per_vertex[0] = full(chunk[0]);
    if n > 1 {
        per_vertex[n - 1] = full(chunk[n - 1]);
    }
    let continue_to = |from: &[WorkspacePoint], p: WorkspacePoint| -> Vec<WorkspacePoint> {
        let target = f.eval(p);
        let tol = solver.tolerance(target);
        let found = from
            .iter()
            .filter_map(|&s| solver.continue_from(s, target, tol).map(|r| r.0))
            .collect();
        keep(p, found)
    };
    let mut forward = per_vertex[0].clone();
    let mut backward = per_vertex[n - 1].clone();
    for k in 1..n.saturating_sub(1) {
        forward = continue_to(&forward, chunk[k]);
        per_vertex[k].extend_from_slice(&forward);
    }
    for k in (1..n.saturating_sub(1)).rev() {
        backward = continue_to(&backward, chunk[k]);
        per_vertex[k].extend_from_slice(&backward);
    }
    per_vertex
        .into_iter()
        .flat_map(|mut v| {
            v.sort_by(|a, b| a.phi.total_cmp(&b.phi).then(a.y.total_cmp(&b.y)));
            v.dedup_by(|a, b| f.dist(*a, *b) < 1e-6);
            v
        })
        .collect()
}

/// Greedy nearest-neighbour chaining with a maximum jump. Points that
/// cannot be chained remain as single-vertex polylines.
pub fn chain_points(family: &dyn MapFamily, mut points: Vec<WorkspacePoint>, max_jump: f64) -> Vec<WorkspaceCurve> {
    points.sort_by(|a, b| a.phi.total_cmp(&b.phi).then(a.y.total_cmp(&b.y)));
    points.dedup_by(|a, b| family.dist(*a, *b) < 1e-12);
    let mut index = VertexIndex::new(family, max_jump);
    for &p in &points {
        index.insert(p);
    }
    let mut curves = Vec::new();
    for &start in &points {
        if !index.contains(start) {
            continue;
        }
        index.remove(start);
        let mut forward = vec![start];
        while let Some(n) = index.nearest_within(*forward.last().unwrap(), max_jump) {
            index.remove(n);
            forward.push(n);
        }
        let mut backward = Vec::new();
        let mut tail = start;
        while let Some(n) = index.nearest_within(tail, max_jump) {
            index.remove(n);
            backward.push(n);
            tail = n;
        }
        backward.reverse();
        backward.extend(forward);
        let closed = backward.len() > 2
            && family.dist(backward[0], *backward.last().unwrap()) <= max_jump;
        curves.push(WorkspaceCurve {
            vertices: backward,
            closed,
            cusp_indices: Vec::new(),
            kind: CurveKind::Characteristic,
            start_tag: EndTag::None,
            end_tag: EndTag::None,
        });
    }
    curves
}

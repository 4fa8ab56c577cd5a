//! Continuation of DKP solutions along closed joint-space loops and the
//! induced permutation of the solution set.

use std::f64::consts::TAU;
use std::fmt;

use crate::dkp::{DkpOptions, DkpSolver};
use crate::error::{Error, Result};
use crate::linalg;
use crate::maps::{family_scale, jacobian_det, FamilyScale, JointPoint, MapFamily, WorkspacePoint};
use crate::trace::JointCurveSet;

/// Closed piecewise-linear loop in joint space; `samples[0]` is the base
/// point and the last sample equals it.
#[derive(Debug, Clone, PartialEq)]
pub struct JointLoop {
    pub base: JointPoint,
    pub samples: Vec<JointPoint>,
    /// Smallest distance from a sample to the image curve, when known.
    pub min_singular_clearance: Option<f64>,
}

pub const DEFAULT_SAMPLES_PER_REV: usize = 720;

impl JointLoop {
    pub fn from_samples(samples: Vec<JointPoint>) -> Result<Self> {
        if samples.len() < 3 {
            return Err(Error::PreconditionViolated("a loop needs at least three samples".into()));
        }
        let (first, last) = (samples[0], samples[samples.len() - 1]);
        if first != last {
            return Err(Error::PreconditionViolated("loop is not closed".into()));
        }
        if samples.iter().any(|p| !(p.u.is_finite() && p.v.is_finite())) {
            return Err(Error::PreconditionViolated("non-finite loop sample".into()));
        }
        Ok(Self {
            base: first,
            samples,
            min_singular_clearance: None,
        })
    }

    /// Counter-clockwise circle traversed `turns` times, starting at angle
    /// `start_angle`.
    pub fn circle(center: JointPoint, radius: f64, turns: usize, samples_per_rev: usize, start_angle: f64) -> Self {
        let n = turns.max(1) * samples_per_rev.max(8);
        let at = |k: usize| {
            let t = start_angle + TAU * (k % samples_per_rev.max(8)) as f64 / samples_per_rev.max(8) as f64;
            JointPoint::new(center.u + radius * t.cos(), center.v + radius * t.sin())
        };
        let samples: Vec<_> = (0..=n).map(|k| if k == n { at(0) } else { at(k) }).collect();
        Self {
            base: samples[0],
            samples,
            min_singular_clearance: None,
        }
    }

    /// `self` followed by `other`; both must share the base point.
    pub fn concat(&self, other: &JointLoop) -> Result<Self> {
        if self.base != other.base {
            return Err(Error::PreconditionViolated("loops have different base points".into()));
        }
        let mut samples = self.samples.clone();
        samples.extend_from_slice(&other.samples[1..]);
        Ok(Self {
            base: self.base,
            samples,
            min_singular_clearance: match (self.min_singular_clearance, other.min_singular_clearance) {
                (Some(a), Some(b)) => Some(a.min(b)),
                _ => None,
            },
        })
    }

    pub fn reversed(&self) -> Self {
        let mut samples = self.samples.clone();
        samples.reverse();
        Self {
            base: self.base,
            samples,
            min_singular_clearance: self.min_singular_clearance,
        }
    }

    pub fn with_clearance(mut self, image: &JointCurveSet) -> Self {
        let c = self
            .samples
            .iter()
            .map(|&p| image.distance_to(p))
            .fold(f64::INFINITY, f64::min);
        self.min_singular_clearance = Some(c);
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopLift {
    pub start: WorkspacePoint,
    pub end: WorkspacePoint,
    /// Canonical workspace point for each loop sample reached.
    pub path: Vec<WorkspacePoint>,
    pub crossed_singularity: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftOptions {
    /// `|J|` below this fraction of the family's median `|J|` stops the lift.
    pub singular_rel: f64,
    pub max_newton: usize,
    pub max_depth: usize,
    pub tol_rel: f64,
    /// Largest accepted workspace move for a single sub-step.
    pub max_move: f64,
}

impl Default for LiftOptions {
    fn default() -> Self {
        Self {
            singular_rel: 1e-6,
            max_newton: 4,
            max_depth: 48,
            tol_rel: 1e-9,
            max_move: 0.25,
        }
    }
}

pub fn lift_loop(family: &dyn MapFamily, path: &JointLoop, start: WorkspacePoint) -> Result<LoopLift> {
    lift_loop_with(family, path, start, &LiftOptions::default())
}

pub fn lift_loop_with(
    family: &dyn MapFamily,
    path: &JointLoop,
    start: WorkspacePoint,
    opts: &LiftOptions,
) -> Result<LoopLift> {
    let lifter = Lifter {
        family,
        opts: *opts,
        scale: family_scale(family),
    };
    let base = path.samples[0];
    if family.eval(start).dist(base) > 1e-6 * (1.0 + base.max_abs()) {
        return Err(Error::PreconditionViolated("lift start is not a preimage of the base point".into()));
    }
    let mut lift = LoopLift {
        start: family.canonical(start),
        end: family.canonical(start),
        path: vec![family.canonical(start)],
        crossed_singularity: false,
    };
    if lifter.is_singular(start) {
        lift.crossed_singularity = true;
        return Err(Error::SingularEncounter {
            sample: 0,
            partial: Box::new(lift),
        });
    }
    let mut q = start;
    for (k, w) in path.samples.windows(2).enumerate() {
        match lifter.advance(q, w[0], w[1], 0) {
            Ok(next) => {
                q = next;
                lift.path.push(family.canonical(q));
                lift.end = family.canonical(q);
            }
            Err(Failure::Singular) => {
                lift.crossed_singularity = true;
                return Err(Error::SingularEncounter {
                    sample: k + 1,
                    partial: Box::new(lift),
                });
            }
            Err(Failure::Diverged) => {
                return Err(Error::DivergedLift {
                    sample: k + 1,
                    partial: Box::new(lift),
                });
            }
        }
    }
    Ok(lift)
}

enum Failure {
    Singular,
    Diverged,
}

struct Lifter<'a> {
    family: &'a dyn MapFamily,
    opts: LiftOptions,
    scale: FamilyScale,
}

impl Lifter<'_> {
    fn is_singular(&self, q: WorkspacePoint) -> bool {
        jacobian_det(self.family, q).abs() < self.opts.singular_rel * self.scale.det
    }

    fn advance(
        &self,
        q: WorkspacePoint,
        a: JointPoint,
        b: JointPoint,
        depth: usize,
    ) -> std::result::Result<WorkspacePoint, Failure> {
        if let Some(next) = self.step(q, a, b) {
            if self.is_singular(next) {
                return Err(Failure::Singular);
            }
            return Ok(next);
        }
        if depth >= self.opts.max_depth {
            let near = jacobian_det(self.family, q).abs() < 1e-3 * self.scale.det;
            return Err(if near { Failure::Singular } else { Failure::Diverged });
        }
        let mid = JointPoint::new(0.5 * (a.u + b.u), 0.5 * (a.v + b.v));
        let half = self.advance(q, a, mid, depth + 1)?;
        self.advance(half, mid, b, depth + 1)
    }

    /// Euler predictor then at most `max_newton` Newton iterations onto `b`.
    fn step(&self, q: WorkspacePoint, a: JointPoint, b: JointPoint) -> Option<WorkspacePoint> {
        let jet = self.family.jet(q);
        let dq = linalg::solve(&jet.jac, [b.u - a.u, b.v - a.v])?;
        let len = linalg::norm(dq);
        if len > self.opts.max_move {
            return None;
        }
        let pred = q.offset(dq[0], dq[1]);
        let tol = self.opts.tol_rel * (1.0 + b.max_abs());
        let mut p = pred;
        for _ in 0..=self.opts.max_newton {
            let jet = self.family.jet(p);
            let r = [jet.value.u - b.u, jet.value.v - b.v];
            if linalg::norm(r) <= tol {
                let drift = linalg::norm([p.phi - pred.phi, p.y - pred.y]);
                return (drift <= 0.25 * len + 1e-12).then_some(p);
            }
            let d = linalg::solve(&jet.jac, r)?;
            p = p.offset(-d[0], -d[1]);
        }
        None
    }
}

/// A permutation of `0..n`; `map[i]` is the image of `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self { map: (0..n).collect() }
    }

    pub fn from_vec(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &i in &map {
            if i >= map.len() || seen[i] {
                return Err(Error::PreconditionViolated(format!("{map:?} is not a permutation")));
            }
            seen[i] = true;
        }
        Ok(Self { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    /// `self` after `other`: `i ↦ self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation {
            map: other.map.iter().map(|&i| self.map[i]).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.map.len()];
        for (i, &j) in self.map.iter().enumerate() {
            inv[j] = i;
        }
        Permutation { map: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// Cycles of length at least two, each starting at its smallest element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.map.len()];
        let mut out = Vec::new();
        for i in 0..self.map.len() {
            if seen[i] {
                continue;
            }
            let mut c = vec![i];
            seen[i] = true;
            let mut j = self.map[i];
            while j != i {
                seen[j] = true;
                c.push(j);
                j = self.map[j];
            }
            if c.len() > 1 {
                out.push(c);
            }
        }
        out
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return write!(f, "()");
        }
        for c in cycles {
            let s: Vec<_> = c.iter().map(|i| i.to_string()).collect();
            write!(f, "({})", s.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LoopMonodromy {
    /// DKP solutions over the base point, in solver order.
    pub solutions: Vec<WorkspacePoint>,
    pub permutation: Permutation,
    pub lifts: Vec<LoopLift>,
}

/// Solves the DKP at the base point, lifts every solution around the loop
/// and matches lift endpoints back to the solution set.
pub fn loop_permutation(family: &dyn MapFamily, path: &JointLoop) -> Result<LoopMonodromy> {
    loop_permutation_with(family, path, DkpOptions::default(), &LiftOptions::default())
}

pub fn loop_permutation_with(
    family: &dyn MapFamily,
    path: &JointLoop,
    dkp: DkpOptions,
    lift: &LiftOptions,
) -> Result<LoopMonodromy> {
    let set = DkpSolver::new(family, dkp)?.solve(path.base)?;
    let solutions = set.solutions;
    let lifts = solutions
        .iter()
        .map(|&s| lift_loop_with(family, path, s, lift))
        .collect::<Result<Vec<_>>>()?;
    let permutation = match_endpoints(family, &solutions, &lifts)?;
    Ok(LoopMonodromy {
        solutions,
        permutation,
        lifts,
    })
}

fn match_endpoints(family: &dyn MapFamily, solutions: &[WorkspacePoint], lifts: &[LoopLift]) -> Result<Permutation> {
    let n = solutions.len();
    let mut min_pair = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            min_pair = min_pair.min(family.dist(solutions[i], solutions[j]));
        }
    }
    let accept = 0.5 * min_pair;
    let mut map = vec![usize::MAX; n];
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (i, l) in lifts.iter().enumerate() {
        let (j, d) = solutions
            .iter()
            .enumerate()
            .map(|(j, &s)| (j, family.dist(s, l.end)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty solution set");
        if d > accept {
            return Err(Error::DivergedLift {
                sample: l.path.len().saturating_sub(1),
                partial: Box::new(l.clone()),
            });
        }
        if let Some(first) = owner[j] {
            return Err(Error::PermutationInconsistent { first, second: i });
        }
        owner[j] = Some(i);
        map[i] = j;
    }
    Permutation::from_vec(map)
}

//! Direct kinematic problem: every real workspace preimage of a joint-space
//! target, found by multistart Newton over a dense seed lattice.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::maps::{JointPoint, MapFamily, WorkspaceBox, WorkspacePoint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DkpOptions {
    pub seeds_phi: usize,
    pub seeds_y: usize,
    /// Search window; `None` uses [`MapFamily::dkp_box`].
    pub bbox: Option<WorkspaceBox>,
    /// Residual tolerance relative to `1 + |target|`.
    pub tol_rel: f64,
    /// Max-norm radius under which two solutions are merged.
    pub dedup_radius: f64,
    pub max_iter: usize,
}

impl Default for DkpOptions {
    fn default() -> Self {
        Self {
            seeds_phi: 64,
            seeds_y: 64,
            bbox: None,
            tol_rel: 1e-9,
            dedup_radius: 1e-5,
            max_iter: 80,
        }
    }
}

/// All real solutions found for one target.
#[derive(Debug, Clone, PartialEq)]
pub struct DkpSolutionSet {
    pub target: JointPoint,
    pub solutions: Vec<WorkspacePoint>,
    pub residuals: Vec<f64>,
    /// Set when the Jacobian is singular at the solution, or when the solution
    /// belongs to a tight cluster of near-singular solutions.
    pub multiplicity_flags: Vec<bool>,
}

impl DkpSolutionSet {
    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }
}

/// Smallest singular value, in units of the double-root estimate, under
/// which a solution is flagged on its own.
const MULTIPLE_ROOT_FACTOR: f64 = 1e2;
/// Looser ratio applied to members of near-multiplicity clusters.
const CLUSTER_RATIO: f64 = 1e-2;
const CLUSTER_RADIUS: f64 = 1e-2;

/// Reusable solver bound to one family and option set.
#[derive(Debug, Clone, Copy)]
pub struct DkpSolver<'a> {
    family: &'a dyn MapFamily,
    opts: DkpOptions,
    bbox: WorkspaceBox,
}

impl<'a> DkpSolver<'a> {
    pub fn new(family: &'a dyn MapFamily, opts: DkpOptions) -> Result<Self> {
        let bbox = opts.bbox.unwrap_or_else(|| family.dkp_box());
        if !bbox.is_valid() {
            return Err(Error::PreconditionViolated("degenerate DKP box".into()));
        }
        if opts.seeds_phi < 2 || opts.seeds_y < 2 {
            return Err(Error::PreconditionViolated("seed lattice too small".into()));
        }
        Ok(Self { family, opts, bbox })
    }

    pub fn bbox(&self) -> WorkspaceBox {
        self.bbox
    }

    pub fn family(&self) -> &'a dyn MapFamily {
        self.family
    }

    pub fn tolerance(&self, target: JointPoint) -> f64 {
        self.opts.tol_rel * (1.0 + target.max_abs())
    }

    pub fn solve(&self, target: JointPoint) -> Result<DkpSolutionSet> {
        if !(target.u.is_finite() && target.v.is_finite()) {
            return Err(Error::PreconditionViolated("target must be finite".into()));
        }
        let seeds = self.bbox.cell_centers(self.opts.seeds_phi, self.opts.seeds_y);
        let tol = self.tolerance(target);
        let found: Vec<(WorkspacePoint, f64)> = seeds
            .par_iter()
            .filter_map(|&s| self.newton(s, target, tol))
            .collect();
        self.assemble(target, found)
    }

    /// Damped Newton from `seed`. Keeps iterating after the tolerance is met
    /// until the step stalls, which sharpens slowly converging multiple roots.
    pub fn newton(&self, seed: WorkspacePoint, target: JointPoint, tol: f64) -> Option<(WorkspacePoint, f64)> {
        self.iterate(seed, target, tol, false)
    }

    /// Newton from a nearby known solution. Falls back to damped
    /// least-squares steps, so it also follows roots sitting on a fold.
    pub fn continue_from(&self, seed: WorkspacePoint, target: JointPoint, tol: f64) -> Option<(WorkspacePoint, f64)> {
        self.iterate(seed, target, tol, true)
    }

    fn iterate(&self, seed: WorkspacePoint, target: JointPoint, tol: f64, robust: bool) -> Option<(WorkspacePoint, f64)> {
        let f = self.family;
        let far = 2.0 * self.bbox.height().max(self.bbox.width());
        let mut q = seed;
        let mut jet = f.jet(q);
        let mut r = [jet.value.u - target.u, jet.value.v - target.v];
        let mut rn = linalg::norm(r);
        for _ in 0..self.opts.max_iter {
            // Near a fold the Newton step runs off along the kernel.
            let candidates = [
                linalg::solve(&jet.jac, [-r[0], -r[1]]),
                robust.then(|| linalg::lm_step(&jet.jac, &r, 1e-6)).flatten(),
                robust.then(|| linalg::lm_step(&jet.jac, &r, 1e-2)).flatten(),
            ];
            let mut taken = None;
            for step in candidates.into_iter().flatten() {
                let mut lambda = 1.0;
                while lambda > 1e-4 {
                    let trial = q.offset(lambda * step[0], lambda * step[1]);
                    let jt = f.jet(trial);
                    let rt = [jt.value.u - target.u, jt.value.v - target.v];
                    let rtn = linalg::norm(rt);
                    if rtn.is_finite() && rtn < rn * (1.0 - 1e-4 * lambda) {
                        q = trial;
                        jet = jt;
                        r = rt;
                        rn = rtn;
                        taken = Some(lambda * linalg::norm(step));
                        break;
                    }
                    lambda *= 0.5;
                }
                if taken.is_some() {
                    break;
                }
            }
            let Some(moved) = taken else {
                break;
            };
            if (q.y - seed.y).abs() > far || (!f.is_periodic() && (q.phi - seed.phi).abs() > far) {
                return None;
            }
            let scale = 1.0 + q.phi.abs() + q.y.abs();
            if rn < tol && moved < 1e-12 * scale {
                break;
            }
        }
        let res = r[0].abs().max(r[1].abs());
        (res < tol).then(|| (f.canonical(q), res))
    }

    fn assemble(&self, target: JointPoint, mut found: Vec<(WorkspacePoint, f64)>) -> Result<DkpSolutionSet> {
        let f = self.family;
        found.sort_by(|a, b| a.0.phi.total_cmp(&b.0.phi).then(a.0.y.total_cmp(&b.0.y)));
        let mut reps: Vec<(WorkspacePoint, f64)> = Vec::new();
        for (q, res) in found {
            match reps
                .iter_mut()
                .find(|(p, _)| f.dist_max(*p, q) < self.opts.dedup_radius)
            {
                Some(rep) if res < rep.1 => *rep = (q, res),
                Some(_) => {}
                None => reps.push((q, res)),
            }
        }
        for &(q, _) in &reps {
            let inside = if f.is_periodic() {
                q.y >= self.bbox.y_min && q.y <= self.bbox.y_max
            } else {
                self.bbox.contains(q, 0.0)
            };
            if !inside {
                return Err(Error::BoxTooSmall(q));
            }
        }
        // At a double root a residual of `tol` is reached a distance δ away
        // with H δ² ≈ tol, where the smallest singular value is about H δ.
        let tol = self.tolerance(target);
        let stats: Vec<(f64, f64)> = reps
            .iter()
            .map(|(q, _)| {
                let jet = f.jet(*q);
                let (s1, s2) = linalg::singular_values(&jet.jac);
                let h = jet.hess.iter().flatten().flatten().fold(0.0_f64, |m, x| m.max(x.abs()));
                let ratio = if s1 == 0.0 { 0.0 } else { s2 / s1 };
                (s2 / (MULTIPLE_ROOT_FACTOR * (tol * (1.0 + h)).sqrt()), ratio)
            })
            .collect();
        let flags = (0..reps.len())
            .map(|i| {
                stats[i].0 < 1.0
                    || (stats[i].1 < CLUSTER_RATIO
                        && (0..reps.len()).any(|j| {
                            j != i && f.dist_max(reps[i].0, reps[j].0) < CLUSTER_RADIUS
                        }))
            })
            .collect();
        Ok(DkpSolutionSet {
            target,
            solutions: reps.iter().map(|r| r.0).collect(),
            residuals: reps.iter().map(|r| r.1).collect(),
            multiplicity_flags: flags,
        })
    }
}

/// Solves with default options.
pub fn solve_dkp(family: &dyn MapFamily, target: JointPoint) -> Result<DkpSolutionSet> {
    DkpSolver::new(family, DkpOptions::default())?.solve(target)
}

/// Axis-aligned rectangle in the joint space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointBox {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl JointBox {
    pub const fn new(u_min: f64, u_max: f64, v_min: f64, v_max: f64) -> Self {
        Self {
            u_min,
            u_max,
            v_min,
            v_max,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.u_max > self.u_min && self.v_max > self.v_min
    }
}

/// Per-cell solution counts; `-1` marks a cell whose solve failed.
#[derive(Debug, Clone, PartialEq)]
pub struct CountMap {
    pub bounds: JointBox,
    pub nu: usize,
    pub nv: usize,
    /// Row-major in `v`: index `j * nu + i`.
    pub counts: Vec<i32>,
}

pub const FAILED_CELL: i32 = -1;

impl CountMap {
    pub fn cell_center(&self, i: usize, j: usize) -> JointPoint {
        let b = &self.bounds;
        JointPoint::new(
            b.u_min + (i as f64 + 0.5) * (b.u_max - b.u_min) / self.nu as f64,
            b.v_min + (j as f64 + 0.5) * (b.v_max - b.v_min) / self.nv as f64,
        )
    }

    pub fn get(&self, i: usize, j: usize) -> i32 {
        self.counts[j * self.nu + i]
    }

    /// Cell indices containing `p`, if inside the bounds.
    pub fn cell_of(&self, p: JointPoint) -> Option<(usize, usize)> {
        let b = &self.bounds;
        let fi = (p.u - b.u_min) / (b.u_max - b.u_min) * self.nu as f64;
        let fj = (p.v - b.v_min) / (b.v_max - b.v_min) * self.nv as f64;
        (fi >= 0.0 && fj >= 0.0 && fi < self.nu as f64 && fj < self.nv as f64)
            .then(|| (fi as usize, fj as usize))
    }

    /// Distinct successful counts present in the map.
    pub fn levels(&self) -> BTreeSet<i32> {
        self.counts.iter().copied().filter(|&c| c >= 0).collect()
    }

    pub fn failed_cells(&self) -> usize {
        self.counts.iter().filter(|&&c| c == FAILED_CELL).count()
    }

    /// Cells whose count exceeds six, the largest expected for the families
    /// shipped with the crate.
    pub fn anomalies(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 6).count()
    }
}

pub fn count_map(family: &dyn MapFamily, bounds: JointBox, resolution: usize) -> Result<CountMap> {
    count_map_with(family, bounds, resolution, DkpOptions::default())
}

pub fn count_map_with(
    family: &dyn MapFamily,
    bounds: JointBox,
    resolution: usize,
    opts: DkpOptions,
) -> Result<CountMap> {
    if resolution < 8 {
        return Err(Error::PreconditionViolated("count map resolution must be at least 8".into()));
    }
    if !bounds.is_valid() {
        return Err(Error::PreconditionViolated("degenerate joint box".into()));
    }
    let solver = DkpSolver::new(family, opts)?;
    let mut map = CountMap {
        bounds,
        nu: resolution,
        nv: resolution,
        counts: Vec::new(),
    };
    map.counts = (0..resolution * resolution)
        .into_par_iter()
        .map(|k| {
            let target = map.cell_center(k % resolution, k / resolution);
            match solver.solve(target) {
                Ok(set) => set.len() as i32,
                Err(e) => {
                    log::warn!("count map cell ({}, {}): {e}", target.u, target.v);
                    FAILED_CELL
                }
            }
        })
        .collect();
    Ok(map)
}

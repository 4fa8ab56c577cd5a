//! Location and classification of cusps and corank-2 singular points.
//!
//! A point is special when it solves the overdetermined system
//! `J = 0, Jac·(−J_y, J_φ)ᵀ = 0`: either the singular curve is itself singular
//! there, or its tangent lies in the kernel of the Jacobian.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, Vec2};
use crate::maps::{
    det_gradient_from_jet, family_scale, jacobian_det, jacobian_det_gradient,
    jacobian_det_hessian, FamilyScale, JointPoint, MapFamily, WorkspaceBox, WorkspacePoint,
};

/// Default acceptance threshold on the max-norm of the detection system.
pub const DEFAULT_TOL: f64 = 1e-10;

/// `σ₂/σ₁` below this means rank ≤ 1.
const RANK_ONE_RATIO: f64 = 1e-7;
/// `σ₁` below this times the family scale means rank 0.
const RANK_ZERO_REL: f64 = 1e-7;
/// Arclength step for the cusp non-degeneracy difference quotient.
const CUSP_STEP: f64 = 1e-4;
const CUSP_THRESHOLD_REL: f64 = 1e-6;
const DELTA_THRESHOLD_REL: f64 = 1e-8;
const DEDUP_REL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionResidual {
    pub j: f64,
    pub k1: f64,
    pub k2: f64,
}

impl DetectionResidual {
    pub fn max_norm(&self) -> f64 {
        self.j.abs().max(self.k1.abs()).max(self.k2.abs())
    }
}

/// `(J, Jac·(−J_y, J_φ)ᵀ)` from analytic derivatives.
pub fn detection_system(family: &dyn MapFamily, q: WorkspacePoint) -> DetectionResidual {
    let jet = family.jet(q);
    let n = family.det_normalization();
    let g = det_gradient_from_jet(&jet, n);
    let k = linalg::mul_vec(&jet.jac, [-g[1], g[0]]);
    DetectionResidual {
        j: linalg::det(&jet.jac) / n,
        k1: k[0],
        k2: k[1],
    }
}

/// Residual and its 3×2 Jacobian (rows per component).
fn detection_with_jacobian(family: &dyn MapFamily, q: WorkspacePoint) -> ([f64; 3], [Vec2; 3]) {
    let jet = family.jet(q);
    let n = family.det_normalization();
    let g = det_gradient_from_jet(&jet, n);
    let hj = jacobian_det_hessian(family, q);
    let t = [-g[1], g[0]];
    let k = linalg::mul_vec(&jet.jac, t);
    let mut rows = [g, [0.0; 2], [0.0; 2]];
    for i in 0..2 {
        for m in 0..2 {
            let dt = [-hj[1][m], hj[0][m]];
            rows[i + 1][m] = jet.hess[i][0][m] * t[0]
                + jet.hess[i][1][m] * t[1]
                + jet.jac[i][0] * dt[0]
                + jet.jac[i][1] * dt[1];
        }
    }
    ([linalg::det(&jet.jac) / n, k[0], k[1]], rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpecialKind {
    Cusp,
    Corank2Elliptic,
    Corank2Hyperbolic,
    FoldOnly,
    Degenerate,
}

impl SpecialKind {
    pub fn is_corank2(self) -> bool {
        matches!(self, Self::Corank2Elliptic | Self::Corank2Hyperbolic)
    }
}

impl fmt::Display for SpecialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Cusp => "Cusp",
            Self::Corank2Elliptic => "Corank2Elliptic",
            Self::Corank2Hyperbolic => "Corank2Hyperbolic",
            Self::FoldOnly => "FoldOnly",
            Self::Degenerate => "Degenerate",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialPoint {
    pub location: WorkspacePoint,
    pub image: JointPoint,
    pub kind: SpecialKind,
    /// Discriminant of the quadratic part of `J`; only set for corank-2 points.
    pub delta: Option<f64>,
    pub residual: f64,
}

/// Binary quadratic form `yy·y² + y_phi·y·φ + phi_phi·φ²` in local
/// coordinates centred at the expansion point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticForm {
    pub yy: f64,
    pub y_phi: f64,
    pub phi_phi: f64,
}

impl QuadraticForm {
    pub fn from_hessian(h: &Mat2) -> Self {
        Self {
            yy: 0.5 * h[1][1],
            y_phi: 0.5 * (h[0][1] + h[1][0]),
            phi_phi: 0.5 * h[0][0],
        }
    }

    pub fn discriminant(&self) -> f64 {
        self.y_phi * self.y_phi - 4.0 * self.yy * self.phi_phi
    }

    pub fn max_coefficient(&self) -> f64 {
        self.yy.abs().max(self.y_phi.abs()).max(self.phi_phi.abs())
    }

    pub fn eval(&self, dphi: f64, dy: f64) -> f64 {
        self.yy * dy * dy + self.y_phi * dy * dphi + self.phi_phi * dphi * dphi
    }
}

/// Second-order Taylor data at a corank-2 point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticExpansion {
    pub center: WorkspacePoint,
    /// Quadratic part of `J`.
    pub det: QuadraticForm,
    /// Quadratic parts of `u − u(q)` and `v − v(q)`.
    pub outputs: [QuadraticForm; 2],
}

impl QuadraticExpansion {
    pub fn delta(&self) -> f64 {
        self.det.discriminant()
    }
}

fn is_corank2(jac: &Mat2, scale: &FamilyScale) -> bool {
    linalg::singular_values(jac).0 < RANK_ZERO_REL * scale.jac
}

/// Taylor coefficients of `J` and of both outputs through order 2 at a
/// corank-2 point `q`.
pub fn quadratic_expansion(family: &dyn MapFamily, q: WorkspacePoint) -> Result<QuadraticExpansion> {
    quadratic_expansion_scaled(family, q, &family_scale(family))
}

fn quadratic_expansion_scaled(
    family: &dyn MapFamily,
    q: WorkspacePoint,
    scale: &FamilyScale,
) -> Result<QuadraticExpansion> {
    let jet = family.jet(q);
    if !is_corank2(&jet.jac, scale) {
        return Err(Error::PreconditionViolated(format!(
            "Jacobian at ({}, {}) is not the zero matrix",
            q.phi, q.y
        )));
    }
    Ok(QuadraticExpansion {
        center: q,
        det: QuadraticForm::from_hessian(&jacobian_det_hessian(family, q)),
        outputs: [
            QuadraticForm::from_hessian(&jet.hess[0]),
            QuadraticForm::from_hessian(&jet.hess[1]),
        ],
    })
}

/// Moves `p` onto `J = 0` along the gradient.
fn project_to_curve(family: &dyn MapFamily, mut p: WorkspacePoint) -> WorkspacePoint {
    for _ in 0..30 {
        let j = jacobian_det(family, p);
        let g = jacobian_det_gradient(family, p);
        let g2 = linalg::dot(g, g);
        if g2 == 0.0 {
            break;
        }
        let step = j / g2;
        p = p.offset(-step * g[0], -step * g[1]);
        if (step * g2.sqrt()).abs() < 1e-15 * (1.0 + p.phi.abs() + p.y.abs()) {
            break;
        }
    }
    p
}

/// Arclength derivative of the kernel-alignment vector `Jac·t̂` along the
/// singular curve, or `None` where the curve itself is singular.
fn kernel_alignment_rate(family: &dyn MapFamily, q: WorkspacePoint) -> Option<f64> {
    let g = jacobian_det_gradient(family, q);
    let gn = linalg::norm(g);
    let jac_norm = linalg::frobenius(&family.jet(q).jac);
    if gn <= 1e-12 * jac_norm.max(1.0) {
        return None;
    }
    let t0 = [-g[1] / gn, g[0] / gn];
    let eta = |sign: f64| -> Vec2 {
        let p = project_to_curve(family, q.offset(sign * CUSP_STEP * t0[0], sign * CUSP_STEP * t0[1]));
        let gp = jacobian_det_gradient(family, p);
        let mut t = [-gp[1], gp[0]];
        let n = linalg::norm(t);
        t = [t[0] / n, t[1] / n];
        if linalg::dot(t, t0) < 0.0 {
            t = [-t[0], -t[1]];
        }
        linalg::mul_vec(&family.jet(p).jac, t)
    };
    let (ep, em) = (eta(1.0), eta(-1.0));
    Some(linalg::norm([ep[0] - em[0], ep[1] - em[1]]) / (2.0 * CUSP_STEP))
}

/// Classifies a point of the singular set.
///
/// A point with `J ≈ 0` where the kernel condition fails is reported as
/// [`SpecialKind::FoldOnly`]; a point off the singular set is an error.
pub fn classify_point(family: &dyn MapFamily, q: WorkspacePoint) -> Result<SpecialPoint> {
    classify_point_with(family, q, DEFAULT_TOL, &family_scale(family))
}

pub fn classify_point_with(
    family: &dyn MapFamily,
    q: WorkspacePoint,
    tol: f64,
    scale: &FamilyScale,
) -> Result<SpecialPoint> {
    let res = detection_system(family, q);
    if res.j.abs() > tol {
        return Err(Error::PreconditionViolated(format!(
            "|J| = {:.3e} exceeds tolerance {tol:e}",
            res.j.abs()
        )));
    }
    let jet = family.jet(q);
    let mut point = SpecialPoint {
        location: q,
        image: jet.value,
        kind: SpecialKind::Degenerate,
        delta: None,
        residual: res.max_norm(),
    };
    if res.k1.abs().max(res.k2.abs()) > tol {
        point.kind = SpecialKind::FoldOnly;
        return Ok(point);
    }

    let (s1, s2) = linalg::singular_values(&jet.jac);
    if s1 < RANK_ZERO_REL * scale.jac {
        let exp = quadratic_expansion_scaled(family, q, scale)?;
        let delta = exp.delta();
        let c = exp.det.max_coefficient();
        point.delta = Some(delta);
        point.kind = if delta.abs() < DELTA_THRESHOLD_REL * c * c {
            SpecialKind::Degenerate
        } else if delta > 0.0 {
            SpecialKind::Corank2Hyperbolic
        } else {
            SpecialKind::Corank2Elliptic
        };
        return Ok(point);
    }
    if s2 / s1.max(f64::MIN_POSITIVE) >= RANK_ONE_RATIO {
        return Err(Error::PreconditionViolated(format!(
            "Jacobian has full rank (σ₂/σ₁ = {:.3e})",
            s2 / s1
        )));
    }
    point.kind = match kernel_alignment_rate(family, q) {
        Some(rate) if rate > CUSP_THRESHOLD_REL * linalg::frobenius(&jet.jac) => SpecialKind::Cusp,
        _ => SpecialKind::Degenerate,
    };
    Ok(point)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Seeds per axis.
    pub grid: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            grid: 48,
            tol: DEFAULT_TOL,
            max_iter: 200,
        }
    }
}

/// Outcome of a multistart search, including per-seed soft failures.
#[derive(Debug, Clone, Default)]
pub struct SpecialSearch {
    pub points: Vec<SpecialPoint>,
    /// Seeds whose iteration diverged or left the neighbourhood of the box.
    pub nonconverged: usize,
    /// Seeds that ended at a local minimum of the residual above tolerance.
    pub stagnated: usize,
}

struct Candidate {
    point: WorkspacePoint,
    residual: f64,
}

/// Levenberg–Marquardt on the 3-component detection residual.
fn descend(family: &dyn MapFamily, seed: WorkspacePoint, opts: &SearchOptions, limit: &WorkspaceBox) -> Option<Candidate> {
    let mut q = seed;
    let (mut r, mut rows) = detection_with_jacobian(family, q);
    let mut norm2: f64 = r.iter().map(|v| v * v).sum();
    let mut damping = 1e-6;
    for _ in 0..opts.max_iter {
        if r.iter().fold(0.0_f64, |m, v| m.max(v.abs())) < 1e-3 * opts.tol {
            break;
        }
        let Some(step) = linalg::lm_step(&rows, &r, damping) else {
            damping *= 10.0;
            if damping > 1e10 {
                break;
            }
            continue;
        };
        let trial = q.offset(step[0], step[1]);
        if !limit.contains(trial, 0.0) {
            return None;
        }
        let (rt, rows_t) = detection_with_jacobian(family, trial);
        let nt: f64 = rt.iter().map(|v| v * v).sum();
        if nt.is_finite() && nt < norm2 {
            q = trial;
            r = rt;
            rows = rows_t;
            norm2 = nt;
            damping = (damping / 4.0).max(1e-15);
            if linalg::norm(step) < 1e-15 * (1.0 + q.phi.abs() + q.y.abs()) {
                break;
            }
        } else {
            damping *= 8.0;
            if damping > 1e10 {
                break;
            }
        }
    }
    Some(Candidate {
        point: q,
        residual: r.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
    })
}

/// Drives the Jacobian entries to zero; converges quadratically at a
/// multiplicity-4 point where the detection residual converges only linearly.
fn polish_corank2(family: &dyn MapFamily, start: WorkspacePoint, scale: &FamilyScale) -> Option<WorkspacePoint> {
    let mut q = start;
    for _ in 0..60 {
        let jet = family.jet(q);
        let r = [jet.jac[0][0], jet.jac[0][1], jet.jac[1][0], jet.jac[1][1]];
        if r.iter().all(|v| v.abs() < 1e-13 * scale.jac) {
            break;
        }
        let rows = [jet.hess[0][0], jet.hess[0][1], jet.hess[1][0], jet.hess[1][1]];
        let step = linalg::lm_step(&rows, &r, 0.0)?;
        q = q.offset(step[0], step[1]);
        if linalg::norm(step) < 1e-16 * (1.0 + q.phi.abs() + q.y.abs()) {
            break;
        }
    }
    let (s1, _) = linalg::singular_values(&family.jet(q).jac);
    (s1 < RANK_ZERO_REL * scale.jac && linalg::norm([q.phi - start.phi, q.y - start.y]) < 1e-2)
        .then_some(q)
}

/// Finds and classifies every special point reachable from a
/// `grid × grid` seed lattice over `bbox`.
pub fn find_special_points(family: &dyn MapFamily, bbox: WorkspaceBox, grid: usize) -> Result<Vec<SpecialPoint>> {
    let opts = SearchOptions {
        grid,
        ..SearchOptions::default()
    };
    Ok(find_special_points_with(family, bbox, &opts)?.points)
}

pub fn find_special_points_with(
    family: &dyn MapFamily,
    bbox: WorkspaceBox,
    opts: &SearchOptions,
) -> Result<SpecialSearch> {
    if !bbox.is_valid() {
        return Err(Error::PreconditionViolated("degenerate search box".into()));
    }
    if opts.grid < 16 {
        return Err(Error::PreconditionViolated("seed grid must have at least 16 points per axis".into()));
    }
    let scale = family_scale(family);
    // Iterates may wander outside the box; they are cut off well beyond it.
    let limit = if family.is_periodic() {
        WorkspaceBox::new(f64::NEG_INFINITY, f64::INFINITY, bbox.y_min - bbox.height(), bbox.y_max + bbox.height())
    } else {
        WorkspaceBox::new(
            bbox.phi_min - bbox.width(),
            bbox.phi_max + bbox.width(),
            bbox.y_min - bbox.height(),
            bbox.y_max + bbox.height(),
        )
    };
    let seeds = bbox.cell_centers(opts.grid, opts.grid);
    let outcomes: Vec<Option<Candidate>> = seeds
        .par_iter()
        .map(|&seed| {
            let mut c = descend(family, seed, opts, &limit)?;
            let (s1, _) = linalg::singular_values(&family.jet(c.point).jac);
            if s1 < 1e-2 * scale.jac {
                if let Some(p) = polish_corank2(family, c.point, &scale) {
                    c = Candidate {
                        point: p,
                        residual: detection_system(family, p).max_norm(),
                    };
                }
            }
            c.point = family.canonical(c.point);
            Some(c)
        })
        .collect();

    let mut search = SpecialSearch::default();
    let mut accepted: Vec<Candidate> = Vec::new();
    let mut stagnated: Vec<Candidate> = Vec::new();
    for outcome in outcomes {
        match outcome {
            None => search.nonconverged += 1,
            Some(c) if c.residual < opts.tol => {
                if bbox.contains(c.point, 1e-12) {
                    accepted.push(c);
                }
            }
            Some(c) => {
                search.stagnated += 1;
                stagnated.push(c);
            }
        }
    }
    accepted.sort_by(|a, b| a.point.phi.total_cmp(&b.point.phi).then(a.point.y.total_cmp(&b.point.y)));

    let radius = DEDUP_REL * bbox.diagonal();
    let mut reps: Vec<Candidate> = Vec::new();
    for c in accepted {
        match reps.iter_mut().find(|r| family.dist_max(r.point, c.point) < radius) {
            Some(r) if c.residual < r.residual => *r = c,
            Some(_) => {}
            None => reps.push(c),
        }
    }

    // A near-zero that no seed managed to polish is a real failure, not a
    // spurious local minimum.
    let near_zero = 1e3 * opts.tol;
    if let Some(c) = stagnated.iter().find(|c| {
        c.residual < near_zero
            && bbox.contains(c.point, 0.0)
            && !reps.iter().any(|r| family.dist(r.point, c.point) < 1e-3 * bbox.diagonal())
    }) {
        return Err(Error::ToleranceNotMet {
            point: c.point,
            residual: c.residual,
        });
    }

    for r in reps {
        search.points.push(classify_point_with(family, r.point, opts.tol, &scale)?);
    }
    Ok(search)
}

/// Runs the local solver from a single starting point; used to polish a
/// user-supplied approximate location before classification.
pub fn polish_special_point(family: &dyn MapFamily, start: WorkspacePoint, tol: f64) -> Result<WorkspacePoint> {
    let scale = family_scale(family);
    let opts = SearchOptions {
        tol,
        ..SearchOptions::default()
    };
    let unbounded = WorkspaceBox::new(f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY);
    let mut c = descend(family, start, &opts, &unbounded).ok_or(Error::NonConvergence(start))?;
    if linalg::singular_values(&family.jet(c.point).jac).0 < 1e-2 * scale.jac {
        if let Some(p) = polish_corank2(family, c.point, &scale) {
            c.point = p;
            c.residual = detection_system(family, p).max_norm();
        }
    }
    if c.residual >= tol {
        return Err(Error::ToleranceNotMet {
            point: c.point,
            residual: c.residual,
        });
    }
    Ok(family.canonical(c.point))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{ComplexSquareUnfolded, QuartoUnfolded, Rpr2PrExact};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn p(phi: f64, y: f64) -> WorkspacePoint {
        WorkspacePoint::new(phi, y)
    }

    #[test]
    fn detection_vanishes_at_corank_two_points() {
        let f = Rpr2PrExact::paper();
        assert_eq!(detection_system(&f, p(0.0, 0.0)).max_norm(), 0.0);
        assert!(detection_system(&f, p(PI, 0.0)).max_norm() < 1e-12);
    }

    #[test]
    fn detection_on_quarto_axis() {
        // J = xy, ∇J = (y, x), Jac = diag(2x, 2y): at (1, 0) the system is
        // (0, 2x·(−x), 2y·y) = (0, −2, 0).
        let f = QuartoUnfolded::new(0.0, 0.0).unwrap();
        let r = detection_system(&f, p(1.0, 0.0));
        assert_eq!((r.j, r.k1, r.k2), (0.0, -2.0, 0.0));
    }

    #[test]
    fn quadratic_forms_at_origin() {
        let exp = quadratic_expansion(&Rpr2PrExact::paper(), p(0.0, 0.0)).unwrap();
        assert_relative_eq!(exp.det.yy, 11.0, epsilon = 1e-6);
        assert_relative_eq!(exp.det.y_phi, -17.0, epsilon = 1e-6);
        assert_relative_eq!(exp.det.phi_phi, -300.0, epsilon = 1e-6);
        let [l1, l2] = exp.outputs;
        assert_relative_eq!(l1.yy, 1.0, epsilon = 1e-12);
        assert_relative_eq!(l1.y_phi, 12.0, epsilon = 1e-12);
        assert_relative_eq!(l1.phi_phi, 18.0, epsilon = 1e-12);
        assert_relative_eq!(l2.yy, 1.0, epsilon = 1e-12);
        assert_relative_eq!(l2.y_phi, -10.0, epsilon = 1e-12);
        assert_relative_eq!(l2.phi_phi, 35.0, epsilon = 1e-12);
    }

    #[test]
    fn quadratic_forms_at_pi() {
        let exp = quadratic_expansion(&Rpr2PrExact::paper(), p(PI, 0.0)).unwrap();
        let [l1, l2] = exp.outputs;
        assert_relative_eq!(l1.y_phi, -12.0, epsilon = 1e-12);
        assert_relative_eq!(l1.phi_phi, -18.0, epsilon = 1e-12);
        assert_relative_eq!(l2.y_phi, 10.0, epsilon = 1e-12);
        assert_relative_eq!(l2.phi_phi, -35.0, epsilon = 1e-12);
        assert_relative_eq!(exp.det.yy, -11.0, epsilon = 1e-6);
        assert_relative_eq!(exp.det.y_phi, 17.0, epsilon = 1e-6);
        assert_relative_eq!(exp.det.phi_phi, -300.0, epsilon = 1e-6);
    }

    #[test]
    fn complex_square_germ_is_elliptic() {
        let f = ComplexSquareUnfolded::new(0.0, 0.0).unwrap();
        let exp = quadratic_expansion(&f, p(0.0, 0.0)).unwrap();
        assert_relative_eq!(exp.det.phi_phi, 1.0, epsilon = 1e-8);
        assert_relative_eq!(exp.det.yy, 1.0, epsilon = 1e-8);
        assert!(exp.delta() < 0.0);
        assert_eq!(classify_point(&f, p(0.0, 0.0)).unwrap().kind, SpecialKind::Corank2Elliptic);
    }

    #[test]
    fn expansion_requires_corank_two() {
        let f = QuartoUnfolded::new(1.0, 1.0).unwrap();
        assert!(matches!(
            quadratic_expansion(&f, p(1.0, 1.0)),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn classify_rejects_regular_point() {
        let f = QuartoUnfolded::new(1.0, 1.0).unwrap();
        assert!(matches!(classify_point(&f, p(2.0, 2.0)), Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn classify_reports_fold() {
        let f = QuartoUnfolded::new(1.0, 1.0).unwrap();
        assert_eq!(classify_point(&f, p(2.0, 0.5)).unwrap().kind, SpecialKind::FoldOnly);
    }

    #[test]
    fn quarto_cusp() {
        let f = QuartoUnfolded::new(1.0, 1.0).unwrap();
        let sp = classify_point(&f, p(1.0, 1.0)).unwrap();
        assert_eq!(sp.kind, SpecialKind::Cusp);
        assert!(sp.delta.is_none());
    }

    #[test]
    fn search_rejects_coarse_grid() {
        let f = QuartoUnfolded::new(1.0, 1.0).unwrap();
        assert!(find_special_points(&f, WorkspaceBox::symmetric(4.0), 8).is_err());
    }
}

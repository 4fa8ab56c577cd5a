//! Parameterized smooth maps from the workspace `(φ, y)` to the joint space
//! `(u, v)`, with closed-form first and second derivatives.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use crate::linalg::{self, Mat2, Vec2};

mod manipulator;
mod normal_form;
mod registry;

pub use manipulator::{ManipulatorParams, Rpr2PrExact, Rpr2PrOffset};
pub use normal_form::{ComplexSquareUnfolded, QuartoUnfolded, UnfoldingParams};
pub use registry::{FamilyBuilder, FamilyEntry, FamilyParams, FamilyRegistry};

/// A point of the workspace. For the normal forms `phi` is simply the first
/// coordinate `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkspacePoint {
    pub phi: f64,
    pub y: f64,
}

impl WorkspacePoint {
    pub const fn new(phi: f64, y: f64) -> Self {
        Self { phi, y }
    }

    pub fn to_array(self) -> Vec2 {
        [self.phi, self.y]
    }

    pub fn from_array(v: Vec2) -> Self {
        Self::new(v[0], v[1])
    }

    pub fn offset(self, dphi: f64, dy: f64) -> Self {
        Self::new(self.phi + dphi, self.y + dy)
    }
}

/// A point of the joint space: `(ℓ₁², ℓ₂²)` for manipulators, `(u, v)` for
/// normal forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointPoint {
    pub u: f64,
    pub v: f64,
}

impl JointPoint {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn to_array(self) -> Vec2 {
        [self.u, self.v]
    }

    pub fn dist(self, other: JointPoint) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }

    pub fn max_abs(self) -> f64 {
        self.u.abs().max(self.v.abs())
    }
}

/// Axis-aligned rectangle in the workspace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkspaceBox {
    pub phi_min: f64,
    pub phi_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl WorkspaceBox {
    pub const fn new(phi_min: f64, phi_max: f64, y_min: f64, y_max: f64) -> Self {
        Self {
            phi_min,
            phi_max,
            y_min,
            y_max,
        }
    }

    /// The full period `[−π/2, 3π/2)` with `|y| ≤ y_max`.
    pub fn periodic(y_max: f64) -> Self {
        Self::new(-FRAC_PI_2, 3.0 * FRAC_PI_2, -y_max, y_max)
    }

    pub fn symmetric(half_width: f64) -> Self {
        Self::new(-half_width, half_width, -half_width, half_width)
    }

    pub fn width(&self) -> f64 {
        self.phi_max - self.phi_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn is_valid(&self) -> bool {
        self.width() > 0.0 && self.height() > 0.0 && self.diagonal().is_finite()
    }

    pub fn contains(&self, q: WorkspacePoint, slack: f64) -> bool {
        q.phi >= self.phi_min - slack
            && q.phi <= self.phi_max + slack
            && q.y >= self.y_min - slack
            && q.y <= self.y_max + slack
    }

    /// Cell centres of an `n_phi × n_y` grid, row-major in `y`.
    pub fn cell_centers(&self, n_phi: usize, n_y: usize) -> Vec<WorkspacePoint> {
        let dphi = self.width() / n_phi as f64;
        let dy = self.height() / n_y as f64;
        (0..n_y)
            .flat_map(|j| {
                (0..n_phi).map(move |i| {
                    WorkspacePoint::new(
                        self.phi_min + (i as f64 + 0.5) * dphi,
                        self.y_min + (j as f64 + 0.5) * dy,
                    )
                })
            })
            .collect()
    }
}

/// Value, Jacobian and second derivatives of a map at a point.
///
/// `jac[i][m] = ∂fᵢ/∂qₘ` and `hess[i][m][n] = ∂²fᵢ/∂qₘ∂qₙ`, with input index
/// 0 = φ and 1 = y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub value: JointPoint,
    pub jac: Mat2,
    pub hess: [Mat2; 2],
}

/// A smooth map ℝ² → ℝ² that the analysis modules can work on.
///
/// Implementations provide closed-form derivatives; nothing in the crate
/// differentiates a family's value numerically except the test suites.
pub trait MapFamily: Send + Sync + fmt::Debug {
    /// Registry name, e.g. `"rpr2pr_offset"`.
    fn name(&self) -> &'static str;

    fn eval(&self, q: WorkspacePoint) -> JointPoint;

    fn jet(&self, q: WorkspacePoint) -> Jet2;

    /// `J = det(Jac) / det_normalization()`. Chosen per family so that the
    /// closed forms for `J` quoted in the literature come out unscaled.
    fn det_normalization(&self) -> f64 {
        4.0
    }

    /// Whether `φ` is an angle (period 2π).
    fn is_periodic(&self) -> bool;

    /// Default window for special-point search and curve tracing.
    fn analysis_box(&self) -> WorkspaceBox;

    /// Default window for direct-kinematic enumeration.
    fn dkp_box(&self) -> WorkspaceBox;

    /// Parameters as `(key, value)` pairs using the config-file keys.
    fn params(&self) -> Vec<(&'static str, f64)>;

    /// Canonical representative of `q` (φ wrapped for periodic families).
    fn canonical(&self, q: WorkspacePoint) -> WorkspacePoint {
        if self.is_periodic() {
            WorkspacePoint::new(canonical_phi(q.phi), q.y)
        } else {
            q
        }
    }

    /// Difference `a − b`, with φ reduced to `(−π, π]` on periodic families.
    fn delta(&self, a: WorkspacePoint, b: WorkspacePoint) -> Vec2 {
        let mut dphi = a.phi - b.phi;
        if self.is_periodic() {
            dphi = (dphi + PI).rem_euclid(TAU) - PI;
        }
        [dphi, a.y - b.y]
    }

    /// Euclidean distance respecting periodicity.
    fn dist(&self, a: WorkspacePoint, b: WorkspacePoint) -> f64 {
        linalg::norm(self.delta(a, b))
    }

    /// Max-norm distance respecting periodicity.
    fn dist_max(&self, a: WorkspacePoint, b: WorkspacePoint) -> f64 {
        let d = self.delta(a, b);
        d[0].abs().max(d[1].abs())
    }
}

/// Maps `φ` into `[−π/2, 3π/2)`.
pub fn canonical_phi(phi: f64) -> f64 {
    let r = (phi + FRAC_PI_2).rem_euclid(TAU) - FRAC_PI_2;
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if r >= 3.0 * FRAC_PI_2 {
        r - TAU
    } else {
        r
    }
}

/// Normalized Jacobian determinant `J`.
pub fn jacobian_det(family: &dyn MapFamily, q: WorkspacePoint) -> f64 {
    linalg::det(&family.jet(q).jac) / family.det_normalization()
}

/// Exact gradient `(J_φ, J_y)` of the normalized determinant.
pub fn jacobian_det_gradient(family: &dyn MapFamily, q: WorkspacePoint) -> Vec2 {
    det_gradient_from_jet(&family.jet(q), family.det_normalization())
}

pub(crate) fn det_gradient_from_jet(jet: &Jet2, normalization: f64) -> Vec2 {
    let j = &jet.jac;
    let h = &jet.hess;
    let mut g = [0.0; 2];
    for (m, gm) in g.iter_mut().enumerate() {
        *gm = (h[0][0][m] * j[1][1] + j[0][0] * h[1][1][m]
            - h[0][1][m] * j[1][0]
            - j[0][1] * h[1][0][m])
            / normalization;
    }
    g
}

/// Second derivatives of `J`, obtained by Richardson-extrapolated central
/// differences of the analytic gradient. The result is symmetrized.
pub fn jacobian_det_hessian(family: &dyn MapFamily, q: WorkspacePoint) -> Mat2 {
    const H: f64 = 1e-3;
    let central = |m: usize, h: f64| -> Vec2 {
        let (dp, dy) = if m == 0 { (h, 0.0) } else { (0.0, h) };
        let gp = jacobian_det_gradient(family, q.offset(dp, dy));
        let gm = jacobian_det_gradient(family, q.offset(-dp, -dy));
        [(gp[0] - gm[0]) / (2.0 * h), (gp[1] - gm[1]) / (2.0 * h)]
    };
    let mut hess = [[0.0; 2]; 2];
    for m in 0..2 {
        let coarse = central(m, H);
        let fine = central(m, H / 2.0);
        for n in 0..2 {
            // column m holds ∂(∂ₙJ)/∂qₘ
            hess[n][m] = (4.0 * fine[n] - coarse[n]) / 3.0;
        }
    }
    let off = 0.5 * (hess[0][1] + hess[1][0]);
    hess[0][1] = off;
    hess[1][0] = off;
    hess
}

/// Reference magnitudes used to make thresholds scale-free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyScale {
    /// Median over a grid of the largest `|Jac|` entry.
    pub jac: f64,
    /// Median over the same grid of `|J|`.
    pub det: f64,
}

/// Samples a 32×32 grid over the family's analysis box.
pub fn family_scale(family: &dyn MapFamily) -> FamilyScale {
    let pts = family.analysis_box().cell_centers(32, 32);
    let mut jac: Vec<f64> = Vec::with_capacity(pts.len());
    let mut det: Vec<f64> = Vec::with_capacity(pts.len());
    for q in pts {
        let jet = family.jet(q);
        jac.push(linalg::max_abs(&jet.jac));
        det.push((linalg::det(&jet.jac) / family.det_normalization()).abs());
    }
    FamilyScale {
        jac: linalg::median(&mut jac).max(f64::MIN_POSITIVE),
        det: linalg::median(&mut det).max(f64::MIN_POSITIVE),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_phi_window() {
        assert_eq!(canonical_phi(0.0), 0.0);
        assert!((canonical_phi(-2.7368) - (-2.7368 + TAU)).abs() < 1e-15);
        assert!((canonical_phi(3.0 * FRAC_PI_2) - (-FRAC_PI_2)).abs() < 1e-15);
        for k in -5..5 {
            let p = canonical_phi(0.3 + k as f64 * TAU);
            assert!((-FRAC_PI_2..3.0 * FRAC_PI_2).contains(&p));
            assert!((p - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_distance_wraps() {
        let fam = Rpr2PrExact::paper();
        let f: &dyn MapFamily = &fam;
        let a = WorkspacePoint::new(-FRAC_PI_2 + 0.01, 0.0);
        let b = WorkspacePoint::new(3.0 * FRAC_PI_2 - 0.01, 0.0);
        assert!((f.dist(a, b) - 0.02).abs() < 1e-12);
    }
}

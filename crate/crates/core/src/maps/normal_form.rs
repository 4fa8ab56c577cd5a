use crate::error::{Error, Result};

use super::{JointPoint, Jet2, MapFamily, WorkspaceBox, WorkspacePoint};

/// Unfolding coefficients `(a, b)`; `a = b = 0` is the unperturbed germ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnfoldingParams {
    pub a: f64,
    pub b: f64,
}

impl UnfoldingParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidParams("a and b must be finite".into()));
        }
        Ok(Self { a, b })
    }
}

const ANALYSIS_HALF_WIDTH: f64 = 4.0;
const DKP_HALF_WIDTH: f64 = 8.0;

/// `(x, y) ↦ (x² − y² + 4a x, 2xy + 4b y)`.
///
/// `J = (x + a + b)² + y² − (a − b)²`: the singular set is the circle of
/// radius `|a − b|` about `(−a − b, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexSquareUnfolded {
    pub params: UnfoldingParams,
}

impl ComplexSquareUnfolded {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        Ok(Self {
            params: UnfoldingParams::new(a, b)?,
        })
    }
}

impl MapFamily for ComplexSquareUnfolded {
    fn name(&self) -> &'static str {
        "complex_square"
    }

    fn eval(&self, q: WorkspacePoint) -> JointPoint {
        let (x, y) = (q.phi, q.y);
        let UnfoldingParams { a, b } = self.params;
        JointPoint::new(x * x - y * y + 4.0 * a * x, 2.0 * x * y + 4.0 * b * y)
    }

    fn jet(&self, q: WorkspacePoint) -> Jet2 {
        let (x, y) = (q.phi, q.y);
        let UnfoldingParams { a, b } = self.params;
        Jet2 {
            value: self.eval(q),
            jac: [[2.0 * x + 4.0 * a, -2.0 * y], [2.0 * y, 2.0 * x + 4.0 * b]],
            hess: [[[2.0, 0.0], [0.0, -2.0]], [[0.0, 2.0], [2.0, 0.0]]],
        }
    }

    fn is_periodic(&self) -> bool {
        false
    }

    fn analysis_box(&self) -> WorkspaceBox {
        WorkspaceBox::symmetric(ANALYSIS_HALF_WIDTH)
    }

    fn dkp_box(&self) -> WorkspaceBox {
        WorkspaceBox::symmetric(DKP_HALF_WIDTH)
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("a", self.params.a), ("b", self.params.b)]
    }
}

/// `(x, y) ↦ (x² + 2a y, y² + 2b x)`; `J = xy − ab`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuartoUnfolded {
    pub params: UnfoldingParams,
}

impl QuartoUnfolded {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        Ok(Self {
            params: UnfoldingParams::new(a, b)?,
        })
    }
}

impl MapFamily for QuartoUnfolded {
    fn name(&self) -> &'static str {
        "quarto"
    }

    fn eval(&self, q: WorkspacePoint) -> JointPoint {
        let (x, y) = (q.phi, q.y);
        let UnfoldingParams { a, b } = self.params;
        JointPoint::new(x * x + 2.0 * a * y, y * y + 2.0 * b * x)
    }

    fn jet(&self, q: WorkspacePoint) -> Jet2 {
        let (x, y) = (q.phi, q.y);
        let UnfoldingParams { a, b } = self.params;
        Jet2 {
            value: self.eval(q),
            jac: [[2.0 * x, 2.0 * a], [2.0 * b, 2.0 * y]],
            hess: [[[2.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 2.0]]],
        }
    }

    fn is_periodic(&self) -> bool {
        false
    }

    fn analysis_box(&self) -> WorkspaceBox {
        WorkspaceBox::symmetric(ANALYSIS_HALF_WIDTH)
    }

    fn dkp_box(&self) -> WorkspaceBox {
        WorkspaceBox::symmetric(DKP_HALF_WIDTH)
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("a", self.params.a), ("b", self.params.b)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::jacobian_det;

    #[test]
    fn complex_square_origin() {
        let f = ComplexSquareUnfolded::new(0.0, 0.0).unwrap();
        assert_eq!(f.eval(WorkspacePoint::new(0.0, 0.0)), JointPoint::new(0.0, 0.0));
    }

    #[test]
    fn quarto_jacobian_is_diagonal() {
        let f = QuartoUnfolded::new(0.0, 0.0).unwrap();
        assert_eq!(f.jet(WorkspacePoint::new(1.0, 1.0)).jac, [[2.0, 0.0], [0.0, 2.0]]);
    }

    #[test]
    fn complex_square_det_is_shifted_circle() {
        let f = ComplexSquareUnfolded::new(1.0, -1.0).unwrap();
        for &(x, y) in &[(2.0, 0.0), (0.0, 2.0), (1.2, -1.6), (0.3, 0.1)] {
            let q = WorkspacePoint::new(x, y);
            assert!((jacobian_det(&f, q) - (x * x + y * y - 4.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn quarto_det_is_hyperbola() {
        let f = QuartoUnfolded::new(1.0, 1.0).unwrap();
        assert_eq!(jacobian_det(&f, WorkspacePoint::new(2.0, 0.5)), 0.0);
        assert!((jacobian_det(&f, WorkspacePoint::new(3.0, 2.0)) - 5.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(QuartoUnfolded::new(f64::INFINITY, 0.0).is_err());
    }
}

use crate::error::{Error, Result};

use super::{JointPoint, Jet2, MapFamily, WorkspaceBox, WorkspacePoint};

/// Geometry of the 2-RPR-PR manipulator.
///
/// Base anchors sit at `A₁ = (a₁, 0)` and `A₂ = (−a₂, 0)`; the platform joint
/// `B = (0, y)` slides on the vertical axis and the platform anchors are
/// `B₁ = B + R(φ)(b₁, −d)` and `B₂ = B + R(φ)(−b₂, −d)`. With `d = 0` the
/// three platform joints are collinear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManipulatorParams {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub d: f64,
}

impl ManipulatorParams {
    pub fn new(a1: f64, a2: f64, b1: f64, b2: f64, d: f64) -> Result<Self> {
        let p = Self { a1, a2, b1, b2, d };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let lengths = [self.a1, self.a2, self.b1, self.b2];
        if lengths.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidParams(
                "a1, a2, b1, b2 must be finite and strictly positive".into(),
            ));
        }
        if !(self.d.is_finite() && self.d >= 0.0) {
            return Err(Error::InvalidParams("d must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Conservative reach bound used as the default `|y|` limit for the
    /// direct kinematic problem.
    pub fn reach(&self) -> f64 {
        self.a1 + self.a2 + self.b1 + self.b2 + self.d
    }

    /// Signed `(anchor abscissa, platform offset along B₁B₂)` for each leg.
    fn signed_legs(&self) -> [(f64, f64); 2] {
        [(self.a1, self.b1), (-self.a2, -self.b2)]
    }
}

const DEFAULT_ANALYSIS_Y: f64 = 8.0;

fn param_list(p: &ManipulatorParams, with_d: bool) -> Vec<(&'static str, f64)> {
    let mut v = vec![("a1", p.a1), ("a2", p.a2), ("b1", p.b1), ("b2", p.b2)];
    if with_d {
        v.push(("d", p.d));
    }
    v
}

/// The manipulator with `B` on the line `B₁B₂`:
/// `ℓᵢ² = y² + 2βᵢ y sin φ + αᵢ² + βᵢ² − 2αᵢβᵢ cos φ`
/// with `(α₁, β₁) = (a₁, b₁)` and `(α₂, β₂) = (−a₂, −b₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rpr2PrExact {
    pub params: ManipulatorParams,
}

impl Rpr2PrExact {
    pub fn new(a1: f64, a2: f64, b1: f64, b2: f64) -> Result<Self> {
        Ok(Self {
            params: ManipulatorParams::new(a1, a2, b1, b2, 0.0)?,
        })
    }

    /// `a = (3, 7)`, `b = (6, 5)`.
    pub fn paper() -> Self {
        Self::new(3.0, 7.0, 6.0, 5.0).expect("valid literal parameters")
    }
}

impl MapFamily for Rpr2PrExact {
    fn name(&self) -> &'static str {
        "rpr2pr_exact"
    }

    fn eval(&self, q: WorkspacePoint) -> JointPoint {
        let (s, c) = q.phi.sin_cos();
        let y = q.y;
        let [l1, l2] = self.params.signed_legs().map(|(al, be)| {
            y * y + 2.0 * be * y * s + al * al + be * be - 2.0 * al * be * c
        });
        JointPoint::new(l1, l2)
    }

    fn jet(&self, q: WorkspacePoint) -> Jet2 {
        let (s, c) = q.phi.sin_cos();
        let y = q.y;
        let mut jet = Jet2 {
            value: self.eval(q),
            jac: [[0.0; 2]; 2],
            hess: [[[0.0; 2]; 2]; 2],
        };
        for (i, (al, be)) in self.params.signed_legs().into_iter().enumerate() {
            jet.jac[i] = [2.0 * be * y * c + 2.0 * al * be * s, 2.0 * y + 2.0 * be * s];
            let pp = -2.0 * be * y * s + 2.0 * al * be * c;
            let py = 2.0 * be * c;
            jet.hess[i] = [[pp, py], [py, 2.0]];
        }
        jet
    }

    fn is_periodic(&self) -> bool {
        true
    }

    fn analysis_box(&self) -> WorkspaceBox {
        WorkspaceBox::periodic(DEFAULT_ANALYSIS_Y)
    }

    fn dkp_box(&self) -> WorkspaceBox {
        WorkspaceBox::periodic(self.params.reach())
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        param_list(&self.params, false)
    }
}

/// The manipulator with `B` at distance `d` from the line `B₁B₂`:
/// `ℓᵢ² = αᵢ² + βᵢ² + d² − 2αᵢβᵢ cos φ − 2αᵢ d sin φ + y² + 2y(βᵢ sin φ − d cos φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rpr2PrOffset {
    pub params: ManipulatorParams,
}

impl Rpr2PrOffset {
    pub fn new(params: ManipulatorParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    /// `a = (3, 7)`, `b = (6, 5)` with offset `d`.
    pub fn paper_with_offset(d: f64) -> Result<Self> {
        Self::new(ManipulatorParams::new(3.0, 7.0, 6.0, 5.0, d)?)
    }

    /// `a = (3, 7)`, `b = (6, 5)`, `d = 3`.
    pub fn paper() -> Self {
        Self::paper_with_offset(3.0).expect("valid literal parameters")
    }
}

impl MapFamily for Rpr2PrOffset {
    fn name(&self) -> &'static str {
        "rpr2pr_offset"
    }

    fn eval(&self, q: WorkspacePoint) -> JointPoint {
        let (s, c) = q.phi.sin_cos();
        let (y, d) = (q.y, self.params.d);
        let [l1, l2] = self.params.signed_legs().map(|(al, be)| {
            al * al + be * be + d * d - 2.0 * al * be * c - 2.0 * al * d * s
                + y * y
                + 2.0 * y * (be * s - d * c)
        });
        JointPoint::new(l1, l2)
    }

    fn jet(&self, q: WorkspacePoint) -> Jet2 {
        let (s, c) = q.phi.sin_cos();
        let (y, d) = (q.y, self.params.d);
        let mut jet = Jet2 {
            value: self.eval(q),
            jac: [[0.0; 2]; 2],
            hess: [[[0.0; 2]; 2]; 2],
        };
        for (i, (al, be)) in self.params.signed_legs().into_iter().enumerate() {
            jet.jac[i] = [
                2.0 * al * be * s - 2.0 * al * d * c + 2.0 * y * (be * c + d * s),
                2.0 * y + 2.0 * (be * s - d * c),
            ];
            let pp = 2.0 * al * be * c + 2.0 * al * d * s + 2.0 * y * (d * c - be * s);
            let py = 2.0 * (be * c + d * s);
            jet.hess[i] = [[pp, py], [py, 2.0]];
        }
        jet
    }

    fn is_periodic(&self) -> bool {
        true
    }

    fn analysis_box(&self) -> WorkspaceBox {
        WorkspaceBox::periodic(DEFAULT_ANALYSIS_Y)
    }

    fn dkp_box(&self) -> WorkspaceBox {
        WorkspaceBox::periodic(self.params.reach())
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        param_list(&self.params, true)
    }
}

#![allow(dead_code)]

pub mod oracle;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

use cuspforge::dkp::JointBox;
use cuspforge::maps::{ComplexSquareUnfolded, QuartoUnfolded, Rpr2PrExact, Rpr2PrOffset};
use cuspforge::trace::{image_curves, trace_singularity_curves, JointCurveSet};
use cuspforge::{JointPoint, MapFamily, WorkspacePoint};

/// A family together with its independent reference formulas.
pub struct Case {
    pub family: Box<dyn MapFamily>,
    pub reference: Box<dyn Fn(f64, f64) -> oracle::Point + Sync>,
    pub scan: oracle::ScanBox,
    pub joint: JointBox,
}

impl Case {
    /// The four instances discussed throughout: unperturbed and offset
    /// manipulator, complex square with a = 1, b = −1, quarto with a = b = 1.
    pub fn paper_instances() -> Vec<Case> {
        vec![
            Case {
                family: Box::new(Rpr2PrExact::paper()),
                reference: Box::new(oracle::manipulator(3.0, 7.0, 6.0, 5.0, 0.0)),
                scan: oracle::ScanBox::manipulator(21.0),
                joint: JointBox::new(0.0, 250.0, 0.0, 250.0),
            },
            Case {
                family: Box::new(Rpr2PrOffset::paper()),
                reference: Box::new(oracle::manipulator(3.0, 7.0, 6.0, 5.0, 3.0)),
                scan: oracle::ScanBox::manipulator(24.0),
                joint: JointBox::new(0.0, 250.0, 0.0, 250.0),
            },
            Case {
                family: Box::new(ComplexSquareUnfolded::new(1.0, -1.0).unwrap()),
                reference: Box::new(oracle::complex_square(1.0, -1.0)),
                scan: oracle::ScanBox::square(8.0),
                joint: JointBox::new(-20.0, 20.0, -20.0, 20.0),
            },
            Case {
                family: Box::new(QuartoUnfolded::new(1.0, 1.0).unwrap()),
                reference: Box::new(oracle::quarto(1.0, 1.0)),
                scan: oracle::ScanBox::square(8.0),
                joint: JointBox::new(-5.0, 10.0, -5.0, 10.0),
            },
        ]
    }

    /// Image of the singular set over the whole DKP box.
    pub fn image_curve(&self, step: f64) -> JointCurveSet {
        let f = self.family.as_ref();
        let cs = trace_singularity_curves(f, f.dkp_box(), step).unwrap();
        image_curves(f, &cs)
    }

    /// Half images of random workspace points, half uniform joint targets;
    /// targets closer than `clearance` to the image curve are skipped.
    pub fn random_targets(&self, seed: u64, n: usize, image: &JointCurveSet, clearance: f64) -> Vec<JointPoint> {
        let f = self.family.as_ref();
        let wb = f.analysis_box();
        let jb = self.joint;
        let mut r = rng(seed);
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let t = if out.len() % 2 == 0 {
                f.eval(WorkspacePoint::new(uniform(&mut r, wb.phi_min, wb.phi_max), uniform(&mut r, wb.y_min, wb.y_max)))
            } else {
                JointPoint::new(uniform(&mut r, jb.u_min, jb.u_max), uniform(&mut r, jb.v_min, jb.v_max))
            };
            if image.distance_to(t) > clearance {
                out.push(t);
            }
        }
        out
    }
}

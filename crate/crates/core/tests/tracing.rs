mod common;

use std::f64::consts::PI;

use common::oracle;
use cuspforge::maps::{ComplexSquareUnfolded, ManipulatorParams, QuartoUnfolded, Rpr2PrExact, Rpr2PrOffset};
use cuspforge::singular::{find_special_points, SpecialKind};
use cuspforge::trace::{
    characteristic_curves, image_curves, trace_singularity_curves, CurveKind, CurveSet, EndTag,
};
use cuspforge::{family_scale, jacobian_det, jacobian_det_gradient, MapFamily, WorkspacePoint};

const STEP: f64 = 0.02;

fn p(phi: f64, y: f64) -> WorkspacePoint {
    WorkspacePoint::new(phi, y)
}

fn check_invariants(f: &dyn MapFamily, cs: &CurveSet, step: f64) {
    let scale = family_scale(f);
    let special = find_special_points(f, f.analysis_box(), 48).unwrap();
    let radius = 1e-6 * f.analysis_box().diagonal();
    for c in &cs.curves {
        assert_eq!(c.kind, CurveKind::Singularity);
        for w in c.vertices.windows(2) {
            assert!(f.dist(w[0], w[1]) < 2.0 * step, "{}: gap {}", f.name(), f.dist(w[0], w[1]));
        }
        for &v in &c.vertices {
            assert!(jacobian_det(f, v).abs() < 1e-9 * scale.det, "{}: |J| at {v:?}", f.name());
        }
        if c.closed {
            assert!(f.dist(c.vertices[0], *c.vertices.last().unwrap()) < 2.0 * step);
        }
        for cusp in c.cusps() {
            assert!(special
                .iter()
                .any(|s| s.kind == SpecialKind::Cusp && f.dist(s.location, cusp) < radius));
        }
    }
    let cusp_count = special.iter().filter(|s| s.kind == SpecialKind::Cusp).count();
    assert_eq!(cs.cusp_count(), cusp_count, "{}", f.name());
    let image = image_curves(f, cs);
    for (c, ic) in cs.curves.iter().zip(&image.curves) {
        assert_eq!(c.cusp_indices, ic.cusp_indices);
        for (&v, &w) in c.vertices.iter().zip(&ic.vertices) {
            assert_eq!(f.eval(v), w);
        }
    }
}

#[test]
fn unperturbed_node_and_isolated_point() {
    let f = Rpr2PrExact::paper();
    let cs = trace_singularity_curves(&f, f.analysis_box(), STEP).unwrap();
    check_invariants(&f, &cs, STEP);
    assert_eq!(cs.curves.len(), 4);
    for c in &cs.curves {
        let at_node = |t: EndTag| matches!(t, EndTag::Corank2(q) if q.phi.abs() < 1e-9 && q.y.abs() < 1e-9);
        assert!(at_node(c.start_tag) ^ at_node(c.end_tag), "{:?} {:?}", c.start_tag, c.end_tag);
        assert!(c.start_tag == EndTag::Boundary || c.end_tag == EndTag::Boundary);
    }
    assert_eq!(cs.isolated_points.len(), 1);
    let iso = cs.isolated_points[0];
    assert!((iso.phi - PI).abs() < 1e-8 && iso.y.abs() < 1e-8);
    assert_eq!(cs.cusp_count(), 0);
}

#[test]
fn perturbed_oval_and_branches() {
    let f = Rpr2PrOffset::paper();
    let cs = trace_singularity_curves(&f, f.analysis_box(), STEP).unwrap();
    check_invariants(&f, &cs, STEP);
    assert!(cs.isolated_points.is_empty());
    let closed: Vec<_> = cs.curves.iter().filter(|c| c.closed).collect();
    assert_eq!(closed.len(), 1);
    assert_eq!(closed[0].cusp_indices.len(), 3);
    let open_cusps: Vec<_> = cs.curves.iter().filter(|c| !c.closed).map(|c| c.cusp_indices.len()).collect();
    assert_eq!(open_cusps.iter().sum::<usize>(), 1);
    assert_eq!(open_cusps.iter().filter(|&&n| n == 1).count(), 1);
    // The oval surrounds the old isolated point.
    let oval = &closed[0].vertices;
    assert!(oval.iter().all(|v| f.dist(*v, p(PI, 0.0)) < 3.5));
}

#[test]
fn complex_square_circle() {
    let f = ComplexSquareUnfolded::new(1.0, -1.0).unwrap();
    let cs = trace_singularity_curves(&f, f.analysis_box(), STEP).unwrap();
    check_invariants(&f, &cs, STEP);
    assert_eq!(cs.curves.len(), 1);
    assert!(cs.curves[0].closed);
    assert_eq!(cs.curves[0].cusp_indices.len(), 3);
    for v in &cs.curves[0].vertices {
        assert!((v.phi.hypot(v.y) - 2.0).abs() < 1e-8);
    }
}

#[test]
fn quarto_hyperbola() {
    let f = QuartoUnfolded::new(1.0, 1.0).unwrap();
    let cs = trace_singularity_curves(&f, f.analysis_box(), STEP).unwrap();
    check_invariants(&f, &cs, STEP);
    assert_eq!(cs.curves.len(), 2);
    assert_eq!(cs.cusp_count(), 1);
    assert!(cs.curves.iter().all(|c| !c.closed));
    assert!(cs.isolated_points.is_empty());
}

#[test]
fn periodic_branches_cross_the_seam() {
    // This geometry's singular curve crosses φ = −π/2 near y = −2; the branch
    // must continue on the far side instead of ending at the seam.
    let f = Rpr2PrOffset::new(ManipulatorParams::new(2.0, 2.0, 1.0, 1.0, 1.0).unwrap()).unwrap();
    let bbox = f.analysis_box();
    let cs = trace_singularity_curves(&f, bbox, STEP).unwrap();
    check_invariants(&f, &cs, STEP);
    let mut jumps = 0;
    for c in &cs.curves {
        for w in c.vertices.windows(2) {
            if (w[0].phi - w[1].phi).abs() > PI {
                jumps += 1;
            }
        }
        for v in &c.vertices {
            assert!(v.phi >= -PI / 2.0 && v.phi < 1.5 * PI);
        }
        for (tag, end) in [(c.start_tag, c.vertices[0]), (c.end_tag, *c.vertices.last().unwrap())] {
            if tag == EndTag::Boundary {
                assert!(bbox.y_max - end.y.abs() < 2.0 * STEP, "{end:?}");
            }
        }
    }
    assert!(jumps > 0);
}

fn hausdorff(a: &CurveSet, b: &CurveSet) -> f64 {
    let polys = |cs: &CurveSet| -> Vec<Vec<[f64; 2]>> {
        cs.curves
            .iter()
            .map(|c| {
                let mut v: Vec<_> = c.vertices.iter().map(|q| [q.phi, q.y]).collect();
                if c.closed {
                    v.push(v[0]);
                }
                v
            })
            .collect()
    };
    let (pa, pb) = (polys(a), polys(b));
    let one_way = |from: &[Vec<[f64; 2]>], to: &[Vec<[f64; 2]>]| {
        from.iter()
            .flatten()
            .map(|&q| to.iter().map(|poly| oracle::polyline_distance(q, poly)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_way(&pa, &pb).max(one_way(&pb, &pa))
}

#[test]
fn halving_the_step_converges() {
    // Chord error on a circle of radius 2: h² / (8 · 2).
    let f = ComplexSquareUnfolded::new(1.0, -1.0).unwrap();
    let steps = [0.2, 0.1, 0.05, 0.025];
    let sets: Vec<_> = steps
        .iter()
        .map(|&h| trace_singularity_curves(&f, f.analysis_box(), h).unwrap())
        .collect();
    let dists: Vec<f64> = sets.windows(2).map(|w| hausdorff(&w[0], &w[1])).collect();
    for (k, d) in dists.iter().enumerate() {
        let h = steps[k];
        assert!(*d < 4.0 * h * h * 0.5, "step {h}: {d}");
    }
    assert!(dists.windows(2).all(|w| w[1] < w[0]), "{dists:?}");
}

/// Principal direction of the points within `radius` of `center`.
fn principal_direction(points: &[WorkspacePoint], center: WorkspacePoint, radius: f64) -> Option<[f64; 2]> {
    let near: Vec<_> = points
        .iter()
        .filter(|q| (q.phi - center.phi).hypot(q.y - center.y) < radius)
        .collect();
    if near.len() < 4 {
        return None;
    }
    let n = near.len() as f64;
    let mx = near.iter().map(|q| q.phi).sum::<f64>() / n;
    let my = near.iter().map(|q| q.y).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for q in near {
        sxx += (q.phi - mx) * (q.phi - mx);
        sxy += (q.phi - mx) * (q.y - my);
        syy += (q.y - my) * (q.y - my);
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    Some([theta.cos(), theta.sin()])
}

#[test]
fn characteristic_curves_are_tangent_at_cusps() {
    let fams: Vec<Box<dyn MapFamily>> = vec![
        Box::new(Rpr2PrOffset::paper()),
        Box::new(ComplexSquareUnfolded::new(1.0, -1.0).unwrap()),
        Box::new(QuartoUnfolded::new(1.0, 1.0).unwrap()),
    ];
    let step = 0.002;
    let radius = 0.05;
    for f in &fams {
        let f = f.as_ref();
        let cs = trace_singularity_curves(f, f.analysis_box(), step).unwrap();
        let mut checked = 0;
        for c in &cs.curves {
            for cusp in c.cusps() {
                // Only the stretch of curve around this cusp.
                let mut local = cs.clone();
                local.curves = vec![c.clone()];
                local.curves[0].vertices.retain(|v| f.dist(*v, cusp) < 3.0 * radius);
                local.curves[0].cusp_indices.clear();
                let ch = characteristic_curves(f, &local, step).unwrap();
                let pts: Vec<_> = ch
                    .curves
                    .iter()
                    .flat_map(|k| k.vertices.iter().copied())
                    .filter(|q| f.dist(*q, cusp) < radius)
                    .map(|q| {
                        let d = f.delta(cusp, q);
                        p(cusp.phi + d[0], cusp.y + d[1])
                    })
                    .collect();
                let dir = principal_direction(&pts, cusp, radius).expect("characteristic points near cusp");
                let g = jacobian_det_gradient(f, cusp);
                let n = g[0].hypot(g[1]);
                let t = [-g[1] / n, g[0] / n];
                let angle = (t[0] * dir[0] + t[1] * dir[1]).abs().min(1.0).acos();
                assert!(angle < 0.05, "{} cusp {cusp:?}: angle {angle}", f.name());
                checked += 1;
            }
        }
        assert!(checked > 0);
    }
}

#[test]
fn characteristic_points_share_images_with_singular_vertices() {
    let f = ComplexSquareUnfolded::new(1.0, -1.0).unwrap();
    let cs = trace_singularity_curves(&f, f.analysis_box(), 0.05).unwrap();
    let ch = characteristic_curves(&f, &cs, 0.05).unwrap();
    let image = image_curves(&f, &cs);
    assert!(ch.curves.iter().all(|c| c.kind == CurveKind::Characteristic));
    for c in &ch.curves {
        for &q in &c.vertices {
            let w = f.eval(q);
            assert!(image.distance_to(w) < 1e-6 * (1.0 + w.max_abs()), "{q:?}");
        }
    }
}

#[test]
fn bad_step_is_rejected() {
    let f = Rpr2PrExact::paper();
    assert!(trace_singularity_curves(&f, f.analysis_box(), -1.0).is_err());
}

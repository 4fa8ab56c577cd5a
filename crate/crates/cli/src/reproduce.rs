//! The four reference instances: unperturbed and offset manipulator, unfolded
//! complex square and unfolded quarto, each run through the full pipeline
//! and checked against known values.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use cuspforge::dkp::CountMap;
use cuspforge::monodromy::{loop_permutation_with, JointLoop, LiftOptions, LoopMonodromy, DEFAULT_SAMPLES_PER_REV};
use cuspforge::singular::{quadratic_expansion, SpecialKind, SpecialPoint};
use cuspforge::trace::EndTag;
use cuspforge::{FamilyRegistry, JointPoint, MapFamily, WorkspacePoint};

use crate::commands::{self, Report, Session, TraceData};
use crate::config::AnalysisConfig;
use crate::error::CliError;
use crate::svg::{self, Layer};

/// Published cusp locations of the offset manipulator with `d = 3`,
/// `φ` in the canonical window.
pub const OFFSET_CUSPS: [[f64; 2]; 4] = [
    [-0.0023, 2.9069],
    [2.6492, -2.2190],
    [-2.7368 + 2.0 * PI, -1.2968],
    [3.0855, 2.6935],
];
pub const OFFSET_CUSP_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Instance {
    Unperturbed,
    Offset,
    ComplexSquare,
    Quarto,
}

impl Instance {
    pub const ALL: [Instance; 4] = [Self::Unperturbed, Self::Offset, Self::ComplexSquare, Self::Quarto];

    pub fn name(self) -> &'static str {
        match self {
            Self::Unperturbed => "unperturbed",
            Self::Offset => "offset",
            Self::ComplexSquare => "complex_square",
            Self::Quarto => "quarto",
        }
    }

    pub fn config(self) -> AnalysisConfig {
        let manipulator = |family: &str| AnalysisConfig {
            a1: Some(3.0),
            a2: Some(7.0),
            b1: Some(6.0),
            b2: Some(5.0),
            u_min: Some(0.0),
            u_max: Some(250.0),
            v_min: Some(0.0),
            v_max: Some(250.0),
            ..AnalysisConfig::new(family)
        };
        match self {
            Self::Unperturbed => manipulator("rpr2pr_exact"),
            Self::Offset => AnalysisConfig {
                d: Some(3.0),
                ..manipulator("rpr2pr_offset")
            },
            Self::ComplexSquare => AnalysisConfig {
                a: Some(1.0),
                b: Some(-1.0),
                u_min: Some(-20.0),
                u_max: Some(20.0),
                v_min: Some(-20.0),
                v_max: Some(20.0),
                ..AnalysisConfig::new("complex_square")
            },
            Self::Quarto => AnalysisConfig {
                a: Some(1.0),
                b: Some(1.0),
                u_min: Some(-5.0),
                u_max: Some(10.0),
                v_min: Some(-5.0),
                v_max: Some(10.0),
                ..AnalysisConfig::new("quarto")
            },
        }
    }

    /// Closed joint loop whose monodromy is checked, if any.
    pub fn loop_around(self, f: &dyn MapFamily, special: &[SpecialPoint]) -> Option<JointLoop> {
        match self {
            Self::Unperturbed => Some(JointLoop::circle(
                f.eval(WorkspacePoint::new(PI, 0.0)),
                30.0,
                1,
                DEFAULT_SAMPLES_PER_REV,
                0.0,
            )),
            Self::Offset => {
                let (c, r) = deltoid(f, special, WorkspacePoint::new(PI, 0.0))?;
                Some(JointLoop::circle(c, 1.2 * r, 1, DEFAULT_SAMPLES_PER_REV, 0.0))
            }
            Self::ComplexSquare => {
                let (c, r) = deltoid(f, special, WorkspacePoint::new(0.0, 0.0))?;
                Some(JointLoop::circle(c, 1.2 * r, 1, DEFAULT_SAMPLES_PER_REV, 0.3))
            }
            Self::Quarto => None,
        }
    }
}

/// Centroid and circumradius of the images of the three cusps nearest
/// `around`.
pub fn deltoid(f: &dyn MapFamily, special: &[SpecialPoint], around: WorkspacePoint) -> Option<(JointPoint, f64)> {
    let mut cusps: Vec<_> = special
        .iter()
        .filter(|s| s.kind == SpecialKind::Cusp)
        .map(|s| s.location)
        .collect();
    if cusps.len() < 3 {
        return None;
    }
    cusps.sort_by(|a, b| f.dist(*a, around).total_cmp(&f.dist(*b, around)));
    let imgs: Vec<_> = cusps[..3].iter().map(|&c| f.eval(c)).collect();
    let c = JointPoint::new(
        imgs.iter().map(|p| p.u).sum::<f64>() / 3.0,
        imgs.iter().map(|p| p.v).sum::<f64>() / 3.0,
    );
    let r = imgs.iter().map(|p| p.dist(c)).fold(0.0, f64::max);
    Some((c, r))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub instance: &'static str,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(instance: Instance, name: &'static str, pass: bool, detail: String) -> Self {
        Self {
            instance: instance.name(),
            name,
            pass,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}/{}: {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.instance,
            self.name,
            self.detail
        )
    }
}

/// Everything computed for one instance.
pub struct InstanceRun {
    pub instance: Instance,
    pub special: Vec<SpecialPoint>,
    pub trace: TraceData,
    pub counts: CountMap,
    pub monodromy: Option<(JointLoop, LoopMonodromy, bool)>,
    pub checks: Vec<Check>,
}

pub fn run_instance(
    instance: Instance,
    registry: &FamilyRegistry,
    out_dir: &Path,
    resolution: usize,
    report: &mut Report,
) -> Result<InstanceRun, CliError> {
    let mut config = instance.config();
    config.resolution = Some(resolution);
    let cfg_path = out_dir.join(format!("{}.cfg", instance.name()));
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(&cfg_path, config.emit())?;
    report.files.push(cfg_path);
    let s = Session::new(config, registry, out_dir, instance.name())?;
    let f = s.family();

    let trace = commands::trace_data(&s, true)?;
    let special = trace.special.clone();
    commands::cusp_table(&special).save(&s.file("cusps.csv"))?;
    commands::trace_table(f, &trace).save(&s.file("trace.csv"))?;
    let counts = commands::count_map(&s, report)?;
    commands::regions_table(&counts).save(&s.file("regions.csv"))?;
    report.files.extend(["cusps.csv", "trace.csv", "regions.csv"].map(|x| s.file(x)));

    let mut monodromy = None;
    let mut joint_extra = Vec::new();
    let mut ws_extra = Vec::new();
    if let Some(path) = instance.loop_around(f, &special) {
        let m = loop_permutation_with(f, &path, s.config.dkp_options(), &LiftOptions::default())?;
        let twice = loop_permutation_with(f, &path.concat(&path)?, s.config.dkp_options(), &LiftOptions::default())?;
        let returns = twice.permutation.is_identity() && twice.lifts.iter().all(|l| f.dist(l.start, l.end) < 1e-6);
        commands::lift_table(&m, &path).save(&s.file("lift.csv"))?;
        report.files.push(s.file("lift.csv"));
        joint_extra.push(Layer::Loop(svg::loop_points(&path)));
        ws_extra.push(commands::lift_overlay(f, &m));
        monodromy = Some((path, m, returns));
    }
    for plot in [
        commands::workspace_plot(&s, &trace, ws_extra, "workspace.svg")?,
        commands::joint_plot(&s, &trace, Some(counts.clone()), joint_extra, "joint.svg")?,
    ] {
        plot.save()?;
        report.files.push(plot.path);
    }

    let mut run = InstanceRun {
        instance,
        special,
        trace,
        counts,
        monodromy,
        checks: Vec::new(),
    };
    run.checks = checks(f, &run);
    Ok(run)
}

fn near(f: &dyn MapFamily, a: WorkspacePoint, b: WorkspacePoint, tol: f64) -> bool {
    f.dist(a, b) < tol
}

fn cusp_points(special: &[SpecialPoint]) -> Vec<WorkspacePoint> {
    special
        .iter()
        .filter(|s| s.kind == SpecialKind::Cusp)
        .map(|s| s.location)
        .collect()
}

fn levels_text(levels: &BTreeSet<i32>) -> String {
    let v: Vec<_> = levels.iter().map(|c| c.to_string()).collect();
    format!("{{{}}}", v.join(", "))
}

/// Cells with count `inner` only touch cells with `inner` or `outer`.
pub fn bordered_by(cm: &CountMap, inner: i32, outer: i32) -> bool {
    for j in 0..cm.nv {
        for i in 0..cm.nu {
            if cm.get(i, j) != inner {
                continue;
            }
            let nbrs = [(i.wrapping_sub(1), j), (i + 1, j), (i, j.wrapping_sub(1)), (i, j + 1)];
            for (a, b) in nbrs {
                if a < cm.nu && b < cm.nv && ![inner, outer].contains(&cm.get(a, b)) {
                    return false;
                }
            }
        }
    }
    true
}

fn swap_check(instance: Instance, run: &InstanceRun) -> Check {
    match &run.monodromy {
        Some((_, m, returns)) => {
            let p = &m.permutation;
            let swap = !p.is_identity() && p.compose(p).is_identity() && p.cycles().len() == 1;
            Check::new(
                instance,
                "monodromy",
                swap && *returns,
                format!(
                    "{} solutions, permutation {p}, double traversal {}",
                    m.solutions.len(),
                    if *returns { "returns" } else { "does not return" }
                ),
            )
        }
        None => Check::new(instance, "monodromy", false, "no loop could be built".into()),
    }
}

pub fn checks(f: &dyn MapFamily, run: &InstanceRun) -> Vec<Check> {
    let inst = run.instance;
    let cs = &run.trace.curves;
    let levels = run.counts.levels();
    let mut out = Vec::new();
    match inst {
        Instance::Unperturbed => {
            let (o, e) = (WorkspacePoint::new(0.0, 0.0), WorkspacePoint::new(PI, 0.0));
            let kinds: Vec<_> = run.special.iter().map(|s| s.kind).collect();
            let ok = run.special.len() == 2
                && run
                    .special
                    .iter()
                    .any(|s| s.kind == SpecialKind::Corank2Hyperbolic && near(f, s.location, o, 1e-8))
                && run
                    .special
                    .iter()
                    .any(|s| s.kind == SpecialKind::Corank2Elliptic && near(f, s.location, e, 1e-8));
            out.push(Check::new(inst, "special points", ok, format!("{kinds:?}")));
            let q = |p| quadratic_expansion(f, p).map(|x| [x.det.yy, x.det.y_phi, x.det.phi_phi]);
            let (qo, qe) = (q(o), q(e));
            let ok = match (&qo, &qe) {
                (Ok(a), Ok(b)) => {
                    let close = |x: &[f64; 3], y: [f64; 3]| x.iter().zip(y).all(|(p, r)| (p - r).abs() < 1e-6);
                    close(a, [11.0, -17.0, -300.0]) && close(b, [-11.0, 17.0, -300.0])
                }
                _ => false,
            };
            out.push(Check::new(inst, "quadratic parts", ok, format!("{qo:?} / {qe:?}")));
            let at_node = |t: EndTag| matches!(t, EndTag::Corank2(p) if near(f, p, o, 1e-9));
            let ok = cs.curves.len() == 4
                && cs.curves.iter().all(|c| at_node(c.start_tag) ^ at_node(c.end_tag))
                && cs.isolated_points.len() == 1
                && near(f, cs.isolated_points[0], e, 1e-8)
                && cs.cusp_count() == 0;
            out.push(Check::new(
                inst,
                "curves",
                ok,
                format!(
                    "{} branches through the node, {} isolated points, {} cusps",
                    cs.curves.len(),
                    cs.isolated_points.len(),
                    cs.cusp_count()
                ),
            ));
            let ok = [0, 2, 4].iter().all(|c| levels.contains(c)) && levels.iter().all(|&c| c <= 4);
            out.push(Check::new(
                inst,
                "counts 4/2/0",
                ok,
                format!("levels {}", levels_text(&levels)),
            ));
            out.push(swap_check(inst, run));
        }
        Instance::Offset => {
            let cusps = cusp_points(&run.special);
            let matched = OFFSET_CUSPS
                .iter()
                .filter(|p| cusps.iter().any(|c| f.dist_max(*c, WorkspacePoint::new(p[0], p[1])) < OFFSET_CUSP_TOL))
                .count();
            out.push(Check::new(
                inst,
                "cusps",
                cusps.len() == 4 && matched == 4 && run.special.len() == 4,
                format!("{} cusps, {matched} match the reference coordinates", cusps.len()),
            ));
            let closed: Vec<_> = cs.curves.iter().filter(|c| c.closed).collect();
            let open: Vec<_> = cs.curves.iter().filter(|c| !c.closed).map(|c| c.cusp_indices.len()).collect();
            let ok = closed.len() == 1
                && closed[0].cusp_indices.len() == 3
                && open.iter().sum::<usize>() == 1
                && cs.isolated_points.is_empty();
            out.push(Check::new(
                inst,
                "curves",
                ok,
                format!(
                    "{} closed ({} cusps), {} open (cusps {open:?})",
                    closed.len(),
                    closed.first().map_or(0, |c| c.cusp_indices.len()),
                    open.len()
                ),
            ));
            let centre = deltoid(f, &run.special, WorkspacePoint::new(PI, 0.0))
                .and_then(|(c, _)| run.counts.cell_of(c))
                .map(|(i, j)| run.counts.get(i, j));
            let ok = levels == BTreeSet::from([0, 2, 4, 6]) && centre == Some(6) && bordered_by(&run.counts, 6, 4);
            out.push(Check::new(
                inst,
                "counts 6/4/2/0",
                ok,
                format!("levels {}, deltoid centre {centre:?}", levels_text(&levels)),
            ));
            out.push(swap_check(inst, run));
        }
        Instance::ComplexSquare => {
            let (a, b) = (1.0_f64, -1.0_f64);
            let cusps = cusp_points(&run.special);
            let dev = cusps
                .iter()
                .map(|c| ((c.phi + a + b).hypot(c.y) - (a - b).abs()).abs())
                .fold(0.0, f64::max);
            out.push(Check::new(
                inst,
                "cusps",
                cusps.len() == 3 && dev < 1e-8,
                format!("{} cusps, max distance to the circle {dev:.2e}", cusps.len()),
            ));
            let ok = cs.curves.len() == 1 && cs.curves[0].closed && cs.cusp_count() == 3;
            out.push(Check::new(inst, "curves", ok, format!("{} branches, {} cusps", cs.curves.len(), cs.cusp_count())));
            let ok = levels == BTreeSet::from([2, 4]);
            out.push(Check::new(inst, "counts 4/2", ok, format!("levels {}", levels_text(&levels))));
            out.push(swap_check(inst, run));
        }
        Instance::Quarto => {
            let (a, b) = (1.0, 1.0);
            let cusps = cusp_points(&run.special);
            let dev = cusps.iter().map(|c| (c.phi * c.y - a * b).abs()).fold(0.0, f64::max);
            out.push(Check::new(
                inst,
                "cusps",
                cusps.len() == 1 && dev < 1e-8,
                format!("{} cusps, |xy - ab| = {dev:.2e}", cusps.len()),
            ));
            let ok = cs.curves.len() == 2 && cs.curves.iter().all(|c| !c.closed) && cs.cusp_count() == 1;
            out.push(Check::new(inst, "curves", ok, format!("{} branches, {} cusps", cs.curves.len(), cs.cusp_count())));
            let ok = levels == BTreeSet::from([0, 2, 4]);
            out.push(Check::new(inst, "counts 4/2/0", ok, format!("levels {}", levels_text(&levels))));
        }
    }
    out
}

pub fn reproduce(registry: &FamilyRegistry, out_dir: &Path, resolution: usize) -> Result<Report, CliError> {
    let mut r = Report::default();
    let mut text = String::new();
    let mut failed = 0;
    for inst in Instance::ALL {
        let run = run_instance(inst, registry, out_dir, resolution, &mut r)?;
        for c in &run.checks {
            failed += usize::from(!c.pass);
            writeln!(text, "{}", c.line()).unwrap();
            r.lines.push(c.line());
        }
    }
    let path = out_dir.join("report.txt");
    std::fs::write(&path, &text)?;
    r.files.push(path);
    if failed > 0 {
        r.warnings.push(format!("{failed} checks failed, see report.txt"));
    }
    Ok(r)
}

//! Subcommand implementations. Each returns a [`Report`]; printing and exit
//! codes are handled by the caller.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use cuspforge::dkp::{count_map_with, CountMap, DkpSolutionSet, DkpSolver, FAILED_CELL};
use cuspforge::monodromy::{loop_permutation_with, JointLoop, LiftOptions, LoopMonodromy};
use cuspforge::singular::{
    classify_point_with, find_special_points_with, polish_special_point, quadratic_expansion, SpecialKind,
    SpecialPoint,
};
use cuspforge::trace::{characteristic_curves_with, image_curves, trace_with_special, CurveSet, JointCurveSet, TraceOptions};
use cuspforge::{family_scale, FamilyRegistry, JointPoint, MapFamily, WorkspacePoint};

use crate::config::AnalysisConfig;
use crate::error::CliError;
use crate::svg::{self, Layer, PlotSpec};
use crate::table::{fmt_sig, Table, CUSPS_HEADER, DKP_HEADER, LIFT_HEADER, REGIONS_HEADER, TRACE_HEADER};

/// Console output and artifacts of one command.
#[derive(Debug, Default)]
pub struct Report {
    pub lines: Vec<String>,
    /// Soft failures; the run still exits with 0.
    pub warnings: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl Report {
    fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    fn warn(&mut self, s: impl Into<String>) {
        self.warnings.push(s.into());
    }

    pub fn absorb(&mut self, other: Report) {
        self.lines.extend(other.lines);
        self.warnings.extend(other.warnings);
        self.files.extend(other.files);
    }
}

/// A loaded configuration, its family and where to put files.
pub struct Session {
    pub config: AnalysisConfig,
    pub family: Arc<dyn MapFamily>,
    pub out_dir: PathBuf,
    /// Prepended to every output file name.
    pub stem: String,
}

impl Session {
    pub fn new(config: AnalysisConfig, registry: &FamilyRegistry, out_dir: &Path, stem: &str) -> Result<Self, CliError> {
        let family = config.build_family(registry)?;
        std::fs::create_dir_all(out_dir)?;
        Ok(Self {
            config,
            family,
            out_dir: out_dir.to_owned(),
            stem: stem.to_owned(),
        })
    }

    pub fn family(&self) -> &dyn MapFamily {
        self.family.as_ref()
    }

    pub fn file(&self, suffix: &str) -> PathBuf {
        self.out_dir.join(format!("{}_{suffix}", self.stem))
    }

    fn save_table(&self, t: &Table, suffix: &str, report: &mut Report) -> Result<(), CliError> {
        let path = self.file(suffix);
        t.save(&path)?;
        report.files.push(path);
        Ok(())
    }

    fn save_plot(&self, plot: PlotSpec, report: &mut Report) -> Result<(), CliError> {
        plot.save()?;
        report.files.push(plot.path);
        Ok(())
    }
}

pub fn parse_pair(s: &str) -> Result<[f64; 2], CliError> {
    let parts: Vec<_> = s.split(',').map(str::trim).collect();
    let nums: Result<Vec<f64>, _> = parts.iter().map(|p| p.parse::<f64>()).collect();
    match nums {
        Ok(v) if v.len() == 2 && v.iter().all(|x| x.is_finite()) => Ok([v[0], v[1]]),
        _ => Err(CliError::Config(format!("expected two numbers `x,y`, got `{s}`"))),
    }
}

pub fn special_points(s: &Session) -> Result<Vec<SpecialPoint>, CliError> {
    let f = s.family();
    let search = find_special_points_with(f, s.config.workspace_box(f)?, &s.config.search_options())?;
    if search.nonconverged + search.stagnated > 0 {
        log::info!(
            "special-point search: {} seeds diverged, {} stagnated",
            search.nonconverged,
            search.stagnated
        );
    }
    Ok(search.points)
}

pub fn cusp_table(points: &[SpecialPoint]) -> Table {
    let mut t = Table::new(&CUSPS_HEADER);
    for p in points {
        t.push(vec![
            p.kind.to_string(),
            fmt_sig(p.location.phi),
            fmt_sig(p.location.y),
            fmt_sig(p.image.u),
            fmt_sig(p.image.v),
            p.delta.map(fmt_sig).unwrap_or_default(),
            fmt_sig(p.residual),
        ]);
    }
    t
}

pub fn cusps(s: &Session) -> Result<Report, CliError> {
    let mut r = Report::default();
    let points = special_points(s)?;
    r.line(format!("{:<18} {:>14} {:>14} {:>14} {:>14}", "kind", "phi", "y", "u", "v"));
    for p in &points {
        r.line(format!(
            "{:<18} {:>14.6} {:>14.6} {:>14.6} {:>14.6}",
            p.kind.to_string(),
            p.location.phi,
            p.location.y,
            p.image.u,
            p.image.v
        ));
    }
    if points.iter().any(|p| p.kind == SpecialKind::Degenerate) {
        r.warn("degenerate special points found; the family may be non-generic");
    }
    s.save_table(&cusp_table(&points), "cusps.csv", &mut r)?;
    Ok(r)
}

pub fn classify(s: &Session, point: [f64; 2], polish: bool) -> Result<Report, CliError> {
    let f = s.family();
    let mut r = Report::default();
    let opts = s.config.search_options();
    let mut q = WorkspacePoint::new(point[0], point[1]);
    if polish {
        q = polish_special_point(f, q, opts.tol)?;
        r.line(format!("polished to ({}, {})", fmt_sig(q.phi), fmt_sig(q.y)));
    }
    let sp = classify_point_with(f, q, opts.tol, &family_scale(f))?;
    r.line(match sp.delta {
        Some(d) => format!("{}, Δ = {} (normalized)", sp.kind, fmt_sig(d)),
        None => sp.kind.to_string(),
    });
    r.line(format!("image ({}, {})", fmt_sig(sp.image.u), fmt_sig(sp.image.v)));
    if sp.kind.is_corank2() || sp.delta.is_some() {
        let e = quadratic_expansion(f, q)?;
        r.line(format!(
            "quadratic part of J: {}",
            polynomial(&[(e.det.yy, "y^2"), (e.det.y_phi, "y phi"), (e.det.phi_phi, "phi^2")])
        ));
    }
    Ok(r)
}

fn polynomial(terms: &[(f64, &str)]) -> String {
    let mut out = String::new();
    for &(c, m) in terms.iter().filter(|t| t.0 != 0.0) {
        let sign = if c < 0.0 { "-" } else { "+" };
        if out.is_empty() {
            out = format!("{}{} {m}", if c < 0.0 { "-" } else { "" }, fmt_sig(c.abs()));
        } else {
            out = format!("{out} {sign} {} {m}", fmt_sig(c.abs()));
        }
    }
    if out.is_empty() {
        "0".into()
    } else {
        out
    }
}

/// Singular curves over the configured box, optionally with characteristic
/// curves, and their joint-space images.
pub struct TraceData {
    pub special: Vec<SpecialPoint>,
    pub curves: CurveSet,
    pub characteristic: Option<CurveSet>,
    /// Joint-space image over the DKP window, see [`joint_image`].
    pub image: JointCurveSet,
}

pub fn trace_data(s: &Session, characteristic: bool) -> Result<TraceData, CliError> {
    let f = s.family();
    let special = special_points(s)?;
    let opts = TraceOptions {
        special: s.config.search_options(),
        ..TraceOptions::with_step(s.config.step())
    };
    let curves = trace_with_special(f, s.config.workspace_box(f)?, &opts, &special)?;
    let characteristic = if characteristic {
        Some(characteristic_curves_with(f, &curves, s.config.step(), s.config.dkp_options())?)
    } else {
        None
    };
    let image = joint_image(s)?;
    Ok(TraceData {
        special,
        curves,
        characteristic,
        image,
    })
}

/// Image of the singular curve over the family's whole DKP window, so that
/// joint-space plots show every fold reaching the joint box.
pub fn joint_image(s: &Session) -> Result<JointCurveSet, CliError> {
    let f = s.family();
    let bbox = f.dkp_box();
    let opts = TraceOptions {
        special: s.config.search_options(),
        ..TraceOptions::with_step(s.config.step())
    };
    let special = find_special_points_with(f, bbox, &opts.special)?.points;
    Ok(image_curves(f, &trace_with_special(f, bbox, &opts, &special)?))
}

pub fn trace_table(f: &dyn MapFamily, data: &TraceData) -> Table {
    let mut t = Table::new(&TRACE_HEADER);
    let sets = std::iter::once(("singularity", &data.curves)).chain(data.characteristic.iter().map(|c| ("characteristic", c)));
    for (kind, set) in sets {
        for (ci, c) in set.curves.iter().enumerate() {
            for (vi, q) in c.vertices.iter().enumerate() {
                let p = f.eval(*q);
                t.push(vec![
                    ci.to_string(),
                    kind.into(),
                    u8::from(c.closed).to_string(),
                    vi.to_string(),
                    fmt_sig(q.phi),
                    fmt_sig(q.y),
                    fmt_sig(p.u),
                    fmt_sig(p.v),
                    u8::from(c.cusp_indices.contains(&vi)).to_string(),
                ]);
            }
        }
    }
    for (i, q) in data.curves.isolated_points.iter().enumerate() {
        let p = f.eval(*q);
        t.push(vec![
            i.to_string(),
            "isolated".into(),
            "0".into(),
            "0".into(),
            fmt_sig(q.phi),
            fmt_sig(q.y),
            fmt_sig(p.u),
            fmt_sig(p.v),
            "0".into(),
        ]);
    }
    t
}

pub fn workspace_plot(s: &Session, data: &TraceData, extra: Vec<Layer>, suffix: &str) -> Result<PlotSpec, CliError> {
    let f = s.family();
    let mut layers = vec![Layer::Singularity(svg::workspace_branches(&data.curves))];
    if let Some(ch) = &data.characteristic {
        layers.push(Layer::Characteristic(svg::workspace_branches(ch)));
    }
    layers.extend(extra);
    layers.push(Layer::Cusps(svg::workspace_cusps(&data.curves)));
    layers.push(Layer::IsolatedPoints(
        data.curves.isolated_points.iter().map(|q| [q.phi, q.y]).collect(),
    ));
    let frame = svg::workspace_frame(&s.config.workspace_box(f)?, f.is_periodic());
    Ok(PlotSpec::new(frame, layers, &s.file(suffix))?.with_title(&format!("{} workspace", f.name())))
}

pub fn joint_plot(
    s: &Session,
    data: &TraceData,
    heat: Option<CountMap>,
    extra: Vec<Layer>,
    suffix: &str,
) -> Result<PlotSpec, CliError> {
    let f = s.family();
    let mut layers = Vec::new();
    if let Some(cm) = heat {
        layers.push(Layer::Heat(cm));
    }
    layers.push(Layer::Singularity(svg::joint_branches(&data.image)));
    layers.extend(extra);
    layers.push(Layer::Cusps(svg::joint_cusps(&data.image)));
    layers.push(Layer::IsolatedPoints(
        data.image.isolated_points.iter().map(|p| [p.u, p.v]).collect(),
    ));
    let frame = svg::joint_frame(&s.config.joint_box(f)?);
    Ok(PlotSpec::new(frame, layers, &s.file(suffix))?.with_title(&format!("{} joint space", f.name())))
}

pub fn trace(s: &Session, characteristic: bool) -> Result<Report, CliError> {
    let mut r = Report::default();
    let data = trace_data(s, characteristic)?;
    let cs = &data.curves;
    r.line(format!(
        "{} singularity branches ({} closed), {} cusps, {} isolated points, {} vertices",
        cs.curves.len(),
        cs.curves.iter().filter(|c| c.closed).count(),
        cs.cusp_count(),
        cs.isolated_points.len(),
        cs.vertex_count()
    ));
    if let Some(ch) = &data.characteristic {
        r.line(format!("{} characteristic branches, {} vertices", ch.curves.len(), ch.vertex_count()));
    }
    if !cs.collapses.is_empty() {
        r.warn(format!("{} branches stopped on step collapse", cs.collapses.len()));
    }
    s.save_table(&trace_table(s.family(), &data), "trace.csv", &mut r)?;
    s.save_plot(workspace_plot(s, &data, vec![], "trace.svg")?, &mut r)?;
    s.save_plot(joint_plot(s, &data, None, vec![], "trace_joint.svg")?, &mut r)?;
    Ok(r)
}

pub fn dkp_table(set: &DkpSolutionSet) -> Table {
    let mut t = Table::new(&DKP_HEADER);
    for (i, q) in set.solutions.iter().enumerate() {
        t.push(vec![
            i.to_string(),
            fmt_sig(q.phi),
            fmt_sig(q.y),
            fmt_sig(set.residuals[i]),
            u8::from(set.multiplicity_flags[i]).to_string(),
        ]);
    }
    t
}

pub fn dkp(s: &Session, target: [f64; 2]) -> Result<Report, CliError> {
    let mut r = Report::default();
    let solver = DkpSolver::new(s.family(), s.config.dkp_options())?;
    let set = solver.solve(JointPoint::new(target[0], target[1]))?;
    r.line(format!("{} solutions", set.len()));
    for (i, q) in set.solutions.iter().enumerate() {
        r.line(format!("{i}: phi = {}, y = {}", fmt_sig(q.phi), fmt_sig(q.y)));
        if set.multiplicity_flags[i] {
            r.warn(format!("solution {i} may be a multiple root"));
        }
    }
    s.save_table(&dkp_table(&set), "dkp.csv", &mut r)?;
    Ok(r)
}

pub fn regions_table(cm: &CountMap) -> Table {
    let mut t = Table::new(&REGIONS_HEADER);
    for j in 0..cm.nv {
        for i in 0..cm.nu {
            let c = cm.cell_center(i, j);
            t.push(vec![fmt_sig(c.u), fmt_sig(c.v), cm.get(i, j).to_string()]);
        }
    }
    t
}

pub fn count_map(s: &Session, r: &mut Report) -> Result<CountMap, CliError> {
    let f = s.family();
    let cm = count_map_with(f, s.config.joint_box(f)?, s.config.resolution(), s.config.dkp_options())?;
    let failed = cm.failed_cells();
    if failed > 0 {
        r.warn(format!("{failed} cells failed and are marked {FAILED_CELL}"));
    }
    if cm.anomalies() > 0 {
        r.warn(format!("{} cells report more than six solutions", cm.anomalies()));
    }
    Ok(cm)
}

pub fn regions(s: &Session) -> Result<Report, CliError> {
    let mut r = Report::default();
    let cm = count_map(s, &mut r)?;
    let levels: Vec<_> = cm.levels().into_iter().map(|c| c.to_string()).collect();
    r.line(format!("{}x{} cells, solution counts {{{}}}", cm.nu, cm.nv, levels.join(", ")));
    s.save_table(&regions_table(&cm), "regions.csv", &mut r)?;
    let data = trace_data(s, false)?;
    s.save_plot(joint_plot(s, &data, Some(cm), vec![], "regions.svg")?, &mut r)?;
    Ok(r)
}

/// How the monodromy loop is given on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum LoopSpec {
    Circle {
        center: [f64; 2],
        radius: f64,
        turns: usize,
        samples_per_rev: usize,
        start_angle: f64,
    },
    File(PathBuf),
}

impl LoopSpec {
    pub fn build(&self) -> Result<JointLoop, CliError> {
        match self {
            Self::Circle {
                center,
                radius,
                turns,
                samples_per_rev,
                start_angle,
            } => {
                if !(*radius > 0.0) || *turns == 0 || *samples_per_rev < 8 {
                    return Err(CliError::Config(
                        "circle needs radius > 0, turns >= 1 and at least 8 samples per turn".into(),
                    ));
                }
                Ok(JointLoop::circle(
                    JointPoint::new(center[0], center[1]),
                    *radius,
                    *turns,
                    *samples_per_rev,
                    *start_angle,
                ))
            }
            Self::File(path) => read_loop(path),
        }
    }
}

/// Reads a `u,v` CSV sample list. The last sample must repeat the first.
pub fn read_loop(path: &Path) -> Result<JointLoop, CliError> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let header = rd.headers()?.clone();
    if header.len() < 2 || &header[0] != "u" || &header[1] != "v" {
        return Err(CliError::Config(format!("{}: header must start with `u,v`", path.display())));
    }
    let mut samples = Vec::new();
    for (n, rec) in rd.records().enumerate() {
        let rec = rec?;
        let parse = |k: usize| -> Result<f64, CliError> {
            rec.get(k)
                .and_then(|x| x.trim().parse().ok())
                .ok_or_else(|| CliError::Config(format!("{}: bad number on row {}", path.display(), n + 2)))
        };
        samples.push(JointPoint::new(parse(0)?, parse(1)?));
    }
    Ok(JointLoop::from_samples(samples)?)
}

pub fn lift_table(m: &LoopMonodromy, path: &JointLoop) -> Table {
    let mut t = Table::new(&LIFT_HEADER);
    for (li, lift) in m.lifts.iter().enumerate() {
        for (k, (q, p)) in lift.path.iter().zip(&path.samples).enumerate() {
            t.push(vec![
                li.to_string(),
                k.to_string(),
                fmt_sig(p.u),
                fmt_sig(p.v),
                fmt_sig(q.phi),
                fmt_sig(q.y),
            ]);
        }
    }
    t
}

pub fn monodromy_report(f: &dyn MapFamily, m: &LoopMonodromy, r: &mut Report) {
    r.line(format!("{} solutions over the base point", m.solutions.len()));
    for (i, q) in m.solutions.iter().enumerate() {
        let end = m.permutation.apply(i);
        r.line(format!("{i}: phi = {}, y = {} -> {end}", fmt_sig(f.canonical(*q).phi), fmt_sig(q.y)));
    }
    r.line(format!("permutation {}", m.permutation));
}

pub fn lift_overlay(f: &dyn MapFamily, m: &LoopMonodromy) -> Layer {
    Layer::Lifts(
        m.lifts
            .iter()
            .map(|l| svg::Branch {
                points: l.path.iter().map(|q| f.canonical(*q)).map(|q| [q.phi, q.y]).collect(),
                closed: false,
            })
            .collect(),
    )
}

pub fn monodromy(s: &Session, spec: &LoopSpec) -> Result<Report, CliError> {
    let f = s.family();
    let mut r = Report::default();
    let data = trace_data(s, false)?;
    let path = spec.build()?.with_clearance(&data.image);
    if let Some(c) = path.min_singular_clearance {
        r.line(format!("loop clearance from the image curve: {}", fmt_sig(c)));
    }
    let m = loop_permutation_with(f, &path, s.config.dkp_options(), &LiftOptions::default())?;
    monodromy_report(f, &m, &mut r);
    s.save_table(&lift_table(&m, &path), "lift.csv", &mut r)?;
    let loop_layer = Layer::Loop(svg::loop_points(&path));
    s.save_plot(joint_plot(s, &data, None, vec![loop_layer], "loop.svg")?, &mut r)?;
    s.save_plot(workspace_plot(s, &data, vec![lift_overlay(f, &m)], "lift.svg")?, &mut r)?;
    Ok(r)
}

//! Minimal SVG plots of curve sets, markers, count maps and loops.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cuspforge::dkp::CountMap;
use cuspforge::monodromy::JointLoop;
use cuspforge::trace::{CurveSet, JointCurveSet};

use crate::error::CliError;

pub type Xy = [f64; 2];

const WIDTH: u32 = 800;

/// One traced branch in plot coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub points: Vec<Xy>,
    pub closed: bool,
}

#[derive(Debug, Clone)]
pub enum Layer {
    /// Drawn blue, one `<path>` per branch.
    Singularity(Vec<Branch>),
    /// Drawn green, one `<path>` per branch.
    Characteristic(Vec<Branch>),
    Cusps(Vec<Xy>),
    IsolatedPoints(Vec<Xy>),
    Heat(CountMap),
    Loop(Vec<Xy>),
    Lifts(Vec<Branch>),
}

impl Layer {
    fn name(&self) -> &'static str {
        match self {
            Self::Singularity(_) => "singularity",
            Self::Characteristic(_) => "characteristic",
            Self::Cusps(_) => "cusps",
            Self::IsolatedPoints(_) => "isolated",
            Self::Heat(_) => "heat",
            Self::Loop(_) => "loop",
            Self::Lifts(_) => "lifts",
        }
    }
}

/// Plot window in data coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Horizontal period; paths are split where consecutive points jump by
    /// more than half of it.
    pub x_period: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub frame: Frame,
    pub layers: Vec<Layer>,
    pub path: PathBuf,
    pub width: u32,
    pub height: u32,
    pub title: String,
}

impl PlotSpec {
    pub fn new(frame: Frame, layers: Vec<Layer>, path: &Path) -> Result<Self, CliError> {
        if layers.is_empty() {
            return Err(CliError::Config("plot needs at least one layer".into()));
        }
        if !(frame.x_max > frame.x_min && frame.y_max > frame.y_min) {
            return Err(CliError::Config("degenerate plot frame".into()));
        }
        let aspect = (frame.y_max - frame.y_min) / (frame.x_max - frame.x_min);
        let height = (WIDTH as f64 * aspect).round().clamp(200.0, 1200.0) as u32;
        Ok(Self {
            frame,
            layers,
            path: path.to_owned(),
            width: WIDTH,
            height,
            title: String::new(),
        })
    }

    pub fn with_title(mut self, title: &str) -> Self {
        self.title = title.to_owned();
        self
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let (w, h) = (self.width, self.height);
        writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
        )
        .unwrap();
        if !self.title.is_empty() {
            writeln!(s, "<title>{}</title>", escape(&self.title)).unwrap();
        }
        writeln!(s, r##"<rect class="frame" x="0" y="0" width="{w}" height="{h}" fill="#ffffff" stroke="#000000"/>"##).unwrap();
        let map = Mapping::new(&self.frame, w as f64, h as f64);
        for layer in &self.layers {
            writeln!(s, r#"<g class="{}">"#, layer.name()).unwrap();
            match layer {
                Layer::Heat(cm) => heat(&mut s, &map, cm),
                Layer::Singularity(bs) => paths(&mut s, &map, bs, "singularity", "#1f4fd8", 1.5),
                Layer::Characteristic(bs) => paths(&mut s, &map, bs, "characteristic", "#1a9a3a", 1.0),
                Layer::Lifts(bs) => paths(&mut s, &map, bs, "lift", "#d0302a", 1.2),
                Layer::Loop(pts) => {
                    let b = [Branch {
                        points: pts.clone(),
                        closed: true,
                    }];
                    paths(&mut s, &map, &b, "loop", "#d0302a", 1.2)
                }
                Layer::Cusps(pts) => {
                    for p in pts {
                        let [x, y] = map.apply(*p);
                        writeln!(
                            s,
                            r##"<circle class="cusp" cx="{x:.3}" cy="{y:.3}" r="4" fill="none" stroke="#000000"/>"##
                        )
                        .unwrap();
                    }
                }
                Layer::IsolatedPoints(pts) => {
                    for p in pts {
                        let [x, y] = map.apply(*p);
                        writeln!(
                            s,
                            r##"<rect class="isolated" x="{:.3}" y="{:.3}" width="7" height="7" fill="#1f4fd8"/>"##,
                            x - 3.5,
                            y - 3.5
                        )
                        .unwrap();
                    }
                }
            }
            writeln!(s, "</g>").unwrap();
        }
        writeln!(s, "</svg>").unwrap();
        s
    }

    pub fn save(&self) -> Result<(), CliError> {
        std::fs::write(&self.path, self.render())
            .map_err(|e| CliError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", self.path.display()))))
    }
}

/// Affine map from the frame to pixels, y up.
struct Mapping {
    frame: Frame,
    sx: f64,
    sy: f64,
    h: f64,
}

impl Mapping {
    fn new(frame: &Frame, w: f64, h: f64) -> Self {
        Self {
            frame: *frame,
            sx: w / (frame.x_max - frame.x_min),
            sy: h / (frame.y_max - frame.y_min),
            h,
        }
    }

    fn apply(&self, p: Xy) -> Xy {
        [(p[0] - self.frame.x_min) * self.sx, self.h - (p[1] - self.frame.y_min) * self.sy]
    }

    fn jumps(&self, a: Xy, b: Xy) -> bool {
        self.frame.x_period.is_some_and(|t| (b[0] - a[0]).abs() > 0.5 * t)
    }
}

fn paths(s: &mut String, map: &Mapping, branches: &[Branch], class: &str, color: &str, width: f64) {
    for b in branches {
        let mut d = String::new();
        let mut split = false;
        for (i, p) in b.points.iter().enumerate() {
            let cmd = if i == 0 || map.jumps(b.points[i - 1], *p) {
                split |= i > 0;
                'M'
            } else {
                'L'
            };
            let [x, y] = map.apply(*p);
            write!(d, "{cmd}{x:.3},{y:.3} ").unwrap();
        }
        if b.closed && b.points.len() > 2 {
            let (first, last) = (b.points[0], b.points[b.points.len() - 1]);
            if !split && !map.jumps(last, first) {
                d.push('Z');
            } else if !map.jumps(last, first) {
                let [x, y] = map.apply(first);
                write!(d, "L{x:.3},{y:.3}").unwrap();
            }
        }
        writeln!(
            s,
            r#"<path class="{class}" d="{}" fill="none" stroke="{color}" stroke-width="{width}"/>"#,
            d.trim_end()
        )
        .unwrap();
    }
}

fn heat(s: &mut String, map: &Mapping, cm: &CountMap) {
    let b = &cm.bounds;
    let du = (b.u_max - b.u_min) / cm.nu as f64;
    let dv = (b.v_max - b.v_min) / cm.nv as f64;
    for j in 0..cm.nv {
        for i in 0..cm.nu {
            let c = cm.get(i, j);
            let lo = map.apply([b.u_min + i as f64 * du, b.v_min + j as f64 * dv]);
            let hi = map.apply([b.u_min + (i + 1) as f64 * du, b.v_min + (j + 1) as f64 * dv]);
            writeln!(
                s,
                r#"<rect class="cell" data-count="{c}" x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{}" shape-rendering="crispEdges"/>"#,
                lo[0],
                hi[1],
                hi[0] - lo[0],
                lo[1] - hi[1],
                heat_color(c)
            )
            .unwrap();
        }
    }
}

fn heat_color(count: i32) -> &'static str {
    match count {
        c if c < 0 => "#ff00ff",
        0 => "#ffffff",
        1 | 2 => "#e3e3e3",
        3 | 4 => "#bdbdbd",
        5 | 6 => "#8f8f8f",
        _ => "#5a5a5a",
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn workspace_frame(b: &cuspforge::WorkspaceBox, periodic: bool) -> Frame {
    Frame {
        x_min: b.phi_min,
        x_max: b.phi_max,
        y_min: b.y_min,
        y_max: b.y_max,
        x_period: periodic.then_some(2.0 * PI),
    }
}

pub fn joint_frame(b: &cuspforge::dkp::JointBox) -> Frame {
    Frame {
        x_min: b.u_min,
        x_max: b.u_max,
        y_min: b.v_min,
        y_max: b.v_max,
        x_period: None,
    }
}

pub fn workspace_branches(cs: &CurveSet) -> Vec<Branch> {
    cs.curves
        .iter()
        .map(|c| Branch {
            points: c.vertices.iter().map(|q| [q.phi, q.y]).collect(),
            closed: c.closed,
        })
        .collect()
}

pub fn workspace_cusps(cs: &CurveSet) -> Vec<Xy> {
    cs.curves.iter().flat_map(|c| c.cusps()).map(|q| [q.phi, q.y]).collect()
}

pub fn joint_branches(js: &JointCurveSet) -> Vec<Branch> {
    js.curves
        .iter()
        .map(|c| Branch {
            points: c.vertices.iter().map(|p| [p.u, p.v]).collect(),
            closed: c.closed,
        })
        .collect()
}

pub fn joint_cusps(js: &JointCurveSet) -> Vec<Xy> {
    js.curves.iter().flat_map(|c| c.cusps()).map(|p| [p.u, p.v]).collect()
}

pub fn loop_points(l: &JointLoop) -> Vec<Xy> {
    l.samples.iter().map(|p| [p.u, p.v]).collect()
}

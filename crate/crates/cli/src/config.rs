//! Line-oriented `key = value` analysis configuration.
//!
//! ```text
//! # offset manipulator
//! family = rpr2pr_offset
//! a1 = 3
//! d = 3
//! y_max = 8
//! ```
//!
//! Every key except `family` is optional; missing keys fall back to the
//! family's own defaults.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use cuspforge::dkp::{DkpOptions, JointBox};
use cuspforge::singular::SearchOptions;
use cuspforge::{FamilyParams, FamilyRegistry, MapFamily, WorkspaceBox};

use crate::error::CliError;

pub const PARAM_KEYS: [&str; 7] = ["a1", "a2", "b1", "b2", "d", "a", "b"];

pub const DEFAULT_STEP: f64 = 0.02;
pub const DEFAULT_RESOLUTION: usize = 64;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnalysisConfig {
    pub family: String,
    pub a1: Option<f64>,
    pub a2: Option<f64>,
    pub b1: Option<f64>,
    pub b2: Option<f64>,
    pub d: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// Workspace window. For normal forms `phi` is the first coordinate.
    pub phi_min: Option<f64>,
    pub phi_max: Option<f64>,
    /// Defaults to `-y_max` when only `y_max` is given.
    pub y_min: Option<f64>,
    pub y_max: Option<f64>,
    /// Joint window for count maps and joint-space plots.
    pub u_min: Option<f64>,
    pub u_max: Option<f64>,
    pub v_min: Option<f64>,
    pub v_max: Option<f64>,
    /// Seeds per axis of the special-point search.
    pub grid: Option<usize>,
    /// Count-map cells per axis.
    pub resolution: Option<usize>,
    /// Curve-tracing step.
    pub step: Option<f64>,
    /// Residual tolerance of the special-point search.
    pub tol: Option<f64>,
}

impl AnalysisConfig {
    pub fn new(family: &str) -> Self {
        Self {
            family: family.to_owned(),
            ..Self::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        text.parse()
            .map_err(|e: CliError| CliError::Config(format!("{}: {}", path.display(), e.message())))
    }

    fn float_slot(&mut self, key: &str) -> Option<&mut Option<f64>> {
        Some(match key {
            "a1" => &mut self.a1,
            "a2" => &mut self.a2,
            "b1" => &mut self.b1,
            "b2" => &mut self.b2,
            "d" => &mut self.d,
            "a" => &mut self.a,
            "b" => &mut self.b,
            "phi_min" => &mut self.phi_min,
            "phi_max" => &mut self.phi_max,
            "y_min" => &mut self.y_min,
            "y_max" => &mut self.y_max,
            "u_min" => &mut self.u_min,
            "u_max" => &mut self.u_max,
            "v_min" => &mut self.v_min,
            "v_max" => &mut self.v_max,
            "step" => &mut self.step,
            "tol" => &mut self.tol,
            _ => return None,
        })
    }

    fn floats(&self) -> [(&'static str, Option<f64>); 17] {
        [
            ("a1", self.a1),
            ("a2", self.a2),
            ("b1", self.b1),
            ("b2", self.b2),
            ("d", self.d),
            ("a", self.a),
            ("b", self.b),
            ("phi_min", self.phi_min),
            ("phi_max", self.phi_max),
            ("y_min", self.y_min),
            ("y_max", self.y_max),
            ("u_min", self.u_min),
            ("u_max", self.u_max),
            ("v_min", self.v_min),
            ("v_max", self.v_max),
            ("step", self.step),
            ("tol", self.tol),
        ]
    }

    /// Canonical text form; `emit(parse(emit(c))) == emit(c)`.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        writeln!(out, "family = {}", self.family).unwrap();
        for (key, value) in self.floats() {
            if let Some(v) = value {
                writeln!(out, "{key} = {v:?}").unwrap();
            }
        }
        if let Some(g) = self.grid {
            writeln!(out, "grid = {g}").unwrap();
        }
        if let Some(r) = self.resolution {
            writeln!(out, "resolution = {r}").unwrap();
        }
        out
    }

    pub fn family_params(&self) -> FamilyParams {
        let mut p = FamilyParams::new();
        for (key, value) in self.floats().into_iter().take(PARAM_KEYS.len()) {
            if let Some(v) = value {
                p.insert(key, v);
            }
        }
        p
    }

    pub fn build_family(&self, registry: &FamilyRegistry) -> Result<Arc<dyn MapFamily>, CliError> {
        registry
            .build(&self.family, &self.family_params())
            .map_err(|e| CliError::Config(e.to_string()))
    }

    /// Analysis window: the family default with any configured edges replaced.
    pub fn workspace_box(&self, family: &dyn MapFamily) -> Result<WorkspaceBox, CliError> {
        let base = family.analysis_box();
        let y_max = self.y_max.unwrap_or(base.y_max);
        let y_min = self.y_min.unwrap_or(if self.y_max.is_some() { -y_max } else { base.y_min });
        let b = WorkspaceBox::new(
            self.phi_min.unwrap_or(base.phi_min),
            self.phi_max.unwrap_or(base.phi_max),
            y_min,
            y_max,
        );
        if !b.is_valid() {
            return Err(CliError::Config(format!(
                "empty workspace box [{}, {}] x [{}, {}]",
                b.phi_min, b.phi_max, b.y_min, b.y_max
            )));
        }
        Ok(b)
    }

    /// Joint window. Unset edges come from the bounding box of the images of
    /// a 32 x 32 grid over the workspace box.
    pub fn joint_box(&self, family: &dyn MapFamily) -> Result<JointBox, CliError> {
        let mut auto = JointBox::new(f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        if [self.u_min, self.u_max, self.v_min, self.v_max].iter().any(Option::is_none) {
            for q in self.workspace_box(family)?.cell_centers(32, 32) {
                let p = family.eval(q);
                auto.u_min = auto.u_min.min(p.u);
                auto.u_max = auto.u_max.max(p.u);
                auto.v_min = auto.v_min.min(p.v);
                auto.v_max = auto.v_max.max(p.v);
            }
        }
        let b = JointBox::new(
            self.u_min.unwrap_or(auto.u_min),
            self.u_max.unwrap_or(auto.u_max),
            self.v_min.unwrap_or(auto.v_min),
            self.v_max.unwrap_or(auto.v_max),
        );
        if !b.is_valid() {
            return Err(CliError::Config(format!(
                "empty joint box [{}, {}] x [{}, {}]",
                b.u_min, b.u_max, b.v_min, b.v_max
            )));
        }
        Ok(b)
    }

    pub fn search_options(&self) -> SearchOptions {
        let d = SearchOptions::default();
        SearchOptions {
            grid: self.grid.unwrap_or(d.grid),
            tol: self.tol.unwrap_or(d.tol),
            ..d
        }
    }

    pub fn dkp_options(&self) -> DkpOptions {
        DkpOptions::default()
    }

    pub fn step(&self) -> f64 {
        self.step.unwrap_or(DEFAULT_STEP)
    }

    pub fn resolution(&self) -> usize {
        self.resolution.unwrap_or(DEFAULT_RESOLUTION)
    }
}

impl FromStr for AnalysisConfig {
    type Err = CliError;

    fn from_str(text: &str) -> Result<Self, CliError> {
        let mut cfg = AnalysisConfig::default();
        let mut family = None;
        let mut seen = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| CliError::Config(format!("line {}: {msg}", n + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if seen.contains(&key) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            seen.push(key);
            match key {
                "family" => {
                    if value.is_empty() || value.contains(char::is_whitespace) {
                        return Err(err(format!("bad family name `{value}`")));
                    }
                    family = Some(value.to_owned());
                }
                "grid" | "resolution" => {
                    let v: usize = value
                        .parse()
                        .map_err(|_| err(format!("`{key}` must be a non-negative integer, got `{value}`")))?;
                    if key == "grid" {
                        cfg.grid = Some(v);
                    } else {
                        cfg.resolution = Some(v);
                    }
                }
                _ => {
                    let slot = cfg.float_slot(key).ok_or_else(|| err(format!("unknown key `{key}`")))?;
                    let v: f64 = value
                        .parse()
                        .map_err(|_| err(format!("`{key}` must be a number, got `{value}`")))?;
                    if !v.is_finite() {
                        return Err(err(format!("`{key}` must be finite")));
                    }
                    *slot = Some(v);
                }
            }
        }
        cfg.family = family.ok_or_else(|| CliError::Config("missing `family` key".into()))?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blank_lines() {
        let cfg: AnalysisConfig = "# header\n\nfamily = quarto # trailing\na = 1\nb=-2.5\ngrid = 32\n"
            .parse()
            .unwrap();
        assert_eq!(cfg.family, "quarto");
        assert_eq!(cfg.a, Some(1.0));
        assert_eq!(cfg.b, Some(-2.5));
        assert_eq!(cfg.grid, Some(32));
        assert_eq!(cfg.d, None);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "a = 1",
            "family = quarto\nfamily = quarto",
            "family = quarto\nwidth = 3",
            "family = quarto\na = one",
            "family = quarto\na = inf",
            "family = quarto\ngrid = -1",
            "family = quarto\njust words",
        ] {
            assert!(matches!(text.parse::<AnalysisConfig>(), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn emit_round_trips() {
        let mut cfg = AnalysisConfig::new("rpr2pr_offset");
        cfg.d = Some(0.1);
        cfg.y_max = Some(1.0 / 3.0);
        cfg.resolution = Some(16);
        let back: AnalysisConfig = cfg.emit().parse().unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn boxes_follow_overrides() {
        let reg = FamilyRegistry::builtin();
        let mut cfg = AnalysisConfig::new("complex_square");
        cfg.y_max = Some(2.0);
        let f = cfg.build_family(&reg).unwrap();
        let b = cfg.workspace_box(f.as_ref()).unwrap();
        assert_eq!((b.y_min, b.y_max), (-2.0, 2.0));
        assert_eq!(b.phi_min, f.analysis_box().phi_min);
        cfg.phi_min = Some(5.0);
        assert!(cfg.workspace_box(f.as_ref()).is_err());
    }

    #[test]
    fn unknown_family_is_a_config_error() {
        let cfg = AnalysisConfig::new("swallowtail");
        assert!(matches!(cfg.build_family(&FamilyRegistry::builtin()), Err(CliError::Config(_))));
    }
}

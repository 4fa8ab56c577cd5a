use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};

use super::{
    ComplexSquareUnfolded, ManipulatorParams, MapFamily, QuartoUnfolded, Rpr2PrExact,
    Rpr2PrOffset,
};

/// Numeric parameters keyed by config name (`a1`, `d`, `a`, ...).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FamilyParams {
    values: BTreeMap<String, f64>,
}

impl FamilyParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.values.insert(key.to_owned(), value);
        self
    }

    pub fn insert(&mut self, key: &str, value: f64) {
        self.values.insert(key.to_owned(), value);
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }

    pub fn get_or(&self, key: &str, default: f64) -> f64 {
        self.get(key).unwrap_or(default)
    }

    pub fn require(&self, key: &str) -> Result<f64> {
        self.get(key)
            .ok_or_else(|| Error::InvalidParams(format!("missing parameter `{key}`")))
    }
}

pub type FamilyBuilder = fn(&FamilyParams) -> Result<Arc<dyn MapFamily>>;

#[derive(Clone)]
pub struct FamilyEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub build: FamilyBuilder,
}

/// Name → constructor table for map families.
#[derive(Clone, Default)]
pub struct FamilyRegistry {
    entries: BTreeMap<&'static str, FamilyEntry>,
}

impl FamilyRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Registry holding the four built-in families.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(
            "rpr2pr_exact",
            "2-RPR-PR manipulator, joint B on line B1B2 (keys a1 a2 b1 b2)",
            build_exact,
        );
        r.register(
            "rpr2pr_offset",
            "2-RPR-PR manipulator with B at distance d from B1B2 (keys a1 a2 b1 b2 d)",
            build_offset,
        );
        r.register(
            "complex_square",
            "unfolded complex square (x^2-y^2+4ax, 2xy+4by) (keys a b)",
            build_complex_square,
        );
        r.register(
            "quarto",
            "unfolded quarto (x^2+2ay, y^2+2bx) (keys a b)",
            build_quarto,
        );
        r
    }

    pub fn register(&mut self, name: &'static str, description: &'static str, build: FamilyBuilder) {
        self.entries.insert(
            name,
            FamilyEntry {
                name,
                description,
                build,
            },
        );
    }

    pub fn build(&self, name: &str, params: &FamilyParams) -> Result<Arc<dyn MapFamily>> {
        let entry = self
            .entries
            .get(name)
            .ok_or_else(|| Error::UnknownFamily(name.to_owned()))?;
        (entry.build)(params)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = &FamilyEntry> {
        self.entries.values()
    }
}

fn manipulator_params(p: &FamilyParams, d: f64) -> Result<ManipulatorParams> {
    ManipulatorParams::new(
        p.get_or("a1", 3.0),
        p.get_or("a2", 7.0),
        p.get_or("b1", 6.0),
        p.get_or("b2", 5.0),
        d,
    )
}

fn build_exact(p: &FamilyParams) -> Result<Arc<dyn MapFamily>> {
    if p.get("d").is_some_and(|d| d != 0.0) {
        return Err(Error::InvalidParams(
            "rpr2pr_exact has no offset; use rpr2pr_offset for d != 0".into(),
        ));
    }
    Ok(Arc::new(Rpr2PrExact {
        params: manipulator_params(p, 0.0)?,
    }))
}

fn build_offset(p: &FamilyParams) -> Result<Arc<dyn MapFamily>> {
    let d = p.get_or("d", 3.0);
    Ok(Arc::new(Rpr2PrOffset::new(manipulator_params(p, d)?)?))
}

fn build_complex_square(p: &FamilyParams) -> Result<Arc<dyn MapFamily>> {
    Ok(Arc::new(ComplexSquareUnfolded::new(
        p.get_or("a", 0.0),
        p.get_or("b", 0.0),
    )?))
}

fn build_quarto(p: &FamilyParams) -> Result<Arc<dyn MapFamily>> {
    Ok(Arc::new(QuartoUnfolded::new(p.get_or("a", 0.0), p.get_or("b", 0.0))?))
}

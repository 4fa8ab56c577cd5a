//! CSV emission. Floats are written with 12 significant digits.

use std::io::Write;
use std::path::Path;

use crate::error::CliError;

pub const CUSPS_HEADER: [&str; 7] = ["kind", "phi", "y", "u", "v", "delta", "residual"];
pub const TRACE_HEADER: [&str; 9] = ["curve", "kind", "closed", "index", "phi", "y", "u", "v", "cusp"];
pub const DKP_HEADER: [&str; 5] = ["index", "phi", "y", "residual", "multiple"];
pub const REGIONS_HEADER: [&str; 3] = ["u", "v", "count"];
pub const LIFT_HEADER: [&str; 6] = ["lift", "sample", "u", "v", "phi", "y"];

/// `%.12g`-style formatting: fixed notation for exponents in `[-5, 12)`,
/// scientific otherwise, trailing zeros removed.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.11e}", x.abs());
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mant.chars().filter(char::is_ascii_digit).collect();
    let sign = if x < 0.0 { "-" } else { "" };
    let body = if (0..12).contains(&exp) {
        let (int, frac) = digits.split_at(exp as usize + 1);
        join_decimal(int, frac)
    } else if (-5..0).contains(&exp) {
        let frac = format!("{}{}", "0".repeat((-exp - 1) as usize), digits);
        join_decimal("0", &frac)
    } else {
        format!("{}e{exp}", join_decimal(&digits[..1], &digits[1..]))
    };
    format!("{sign}{body}")
}

fn join_decimal(int: &str, frac: &str) -> String {
    let frac = frac.trim_end_matches('0');
    if frac.is_empty() {
        int.to_owned()
    } else {
        format!("{int}.{frac}")
    }
}

/// Buffered CSV table with a fixed header.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<(), CliError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let file = std::fs::File::create(path)
            .map_err(|e| CliError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        self.write_to(std::io::BufWriter::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(-0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(-2.5), "-2.5");
        assert_eq!(fmt_sig(std::f64::consts::PI), "3.14159265359");
        assert_eq!(fmt_sig(13489.0), "13489");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(2.0e-4 / 3.0), "0.0000666666666667");
        assert_eq!(fmt_sig(1.5e-9), "1.5e-9");
        assert_eq!(fmt_sig(123456789012345.0), "1.23456789012e14");
        assert_eq!(fmt_sig(999999999999.9), "1e12");
    }

    #[test]
    fn parses_back_within_precision() {
        for &x in &[1.2345678901234e-3, -98765.4321012345, 7.0e20, 3.3e-12] {
            let y: f64 = fmt_sig(x).parse().unwrap();
            assert!(((y - x) / x).abs() < 1e-11, "{x} -> {y}");
        }
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new(&REGIONS_HEADER);
        t.push(vec![fmt_sig(0.5), fmt_sig(1.0), "4".into()]);
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "u,v,count\n0.5,1,4\n");
    }
}

//! CSV tables with a schema line `# polytree-csv v1`.
//!
//! Floats are written with 17 significant digits so a table read back
//! reproduces every value bit for bit.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::oracle::{FirstPassageTable, SeriesValue};
use crate::solvers::ConvergenceReport;
use crate::spectral::SpectralContext;
use crate::spherical::ProfileRow;

pub const SCHEMA_LINE: &str = "# polytree-csv v1";

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{SCHEMA_LINE}")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_string_lossy(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8_lossy(&buf).into_owned()
    }

    /// Parses a table written by [`CsvTable::write_to`].
    pub fn parse(text: &str) -> Result<Self> {
        let body = text
            .strip_prefix(SCHEMA_LINE)
            .ok_or_else(|| Error::Parse(format!("missing schema line '{SCHEMA_LINE}'")))?;
        let mut r = csv::Reader::from_reader(body.trim_start().as_bytes());
        let header = r
            .headers()
            .map_err(csv_error)?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()
            .map_err(csv_error)?;
        Ok(CsvTable { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::from(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

fn c2(z: Complex64) -> [String; 2] {
    [fmt_f64(z.re), fmt_f64(z.im)]
}

/// One row with every field of the context and its identity residuals.
pub fn spectral_table(ctx: &SpectralContext) -> CsvTable {
    let mut t = CsvTable::new(&[
        "q", "lambda_re", "lambda_im", "rho", "regime", "s_re", "s_im", "F_re", "F_im",
        "Fc_re", "Fc_im", "a_re", "a_im", "ac_re", "ac_im", "res_quadratic", "res_product",
        "res_coefficient_sum", "res_s_squared", "margin_lower", "margin_upper",
    ]);
    let r = ctx.residuals();
    let mut row = vec![ctx.q().to_string()];
    row.extend(c2(ctx.lambda));
    row.push(fmt_f64(ctx.rho()));
    row.push(format!("{:?}", ctx.regime));
    for z in [ctx.s, ctx.f, ctx.fc, ctx.a, ctx.ac] {
        row.extend(c2(z));
    }
    for x in [
        r.quadratic,
        r.product,
        r.coefficient_sum,
        r.s_squared,
        r.lower_margin,
        r.upper_margin,
    ] {
        row.push(fmt_f64(x));
    }
    t.push(row);
    t
}

pub fn profile_table(rows: &[ProfileRow]) -> CsvTable {
    let mut t = CsvTable::new(&[
        "radius", "re", "im", "abs", "asymptotic_re", "asymptotic_im", "ratio_abs",
    ]);
    for r in rows {
        let mut row = vec![r.radius.to_string()];
        row.extend(c2(r.value));
        row.push(fmt_f64(r.value.norm()));
        match r.asymptotic {
            Some(a) => row.extend(c2(a)),
            None => row.extend([String::new(), String::new()]),
        }
        row.push(r.ratio_abs.map(fmt_f64).unwrap_or_default());
        t.push(row);
    }
    t
}

pub fn probe_table(reports: &[ConvergenceReport]) -> CsvTable {
    let mut t = CsvTable::new(&[
        "end", "a", "depth", "vertex", "value_re", "value_im", "target_re", "target_im",
        "abs_error",
    ]);
    for rep in reports {
        for r in &rep.rows {
            let mut row = vec![rep.end.to_string(), rep.a.to_string()];
            row.push(r.depth.to_string());
            row.push(r.vertex.to_string());
            row.extend(c2(r.value));
            row.extend(c2(r.target));
            row.push(fmt_f64(r.abs_error));
            t.push(row);
        }
    }
    t
}

pub fn coefficient_table(table: &FirstPassageTable) -> CsvTable {
    let mut t = CsvTable::new(&["n", "d", "coefficient"]);
    for d in 1..=table.max_distance() {
        for n in 0..=table.max_steps {
            t.push(vec![
                n.to_string(),
                d.to_string(),
                fmt_f64(table.coefficient(d, n)),
            ]);
        }
    }
    t
}

/// Series against the closed form `F(λ)^d`.
pub fn oracle_table(
    ctx: &SpectralContext,
    steps: usize,
    rows: &[(usize, SeriesValue)],
) -> CsvTable {
    let mut t = CsvTable::new(&[
        "q", "lambda_re", "lambda_im", "d", "N", "series_re", "series_im", "closed_re",
        "closed_im", "abs_diff", "tail_bound",
    ]);
    for (d, s) in rows {
        let closed = ctx.f_pow(*d as i64);
        let mut row = vec![ctx.q().to_string()];
        row.extend(c2(ctx.lambda));
        row.push(d.to_string());
        row.push(steps.to_string());
        row.extend(c2(s.value));
        row.extend(c2(closed));
        row.push(fmt_f64((s.value - closed).norm()));
        row.push(fmt_f64(s.tail_bound));
        t.push(row);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_keeps_bits() {
        let ctx = SpectralContext::new(2, Complex64::new(1.0, 1.0)).unwrap();
        let t = spectral_table(&ctx);
        let text = t.to_string_lossy();
        assert!(text.starts_with(SCHEMA_LINE));
        let back = CsvTable::parse(&text).unwrap();
        assert_eq!(back, t);
        let f: f64 = back.column("F_re").unwrap()[0].parse().unwrap();
        assert_eq!(f, ctx.f.re);
        assert!(CsvTable::parse("a,b\n1,2\n").is_err());
    }

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        for x in [1.0 / 3.0, -2.5e-300, 6.02e23, std::f64::consts::PI] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}

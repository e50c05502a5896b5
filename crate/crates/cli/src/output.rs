//! CSV and JSON emission.

use std::io::Write;

use anyhow::Result;
use num_complex::Complex64;
use serde_json::{json, Value};

use holoseries::series::PolyInX;

use crate::engine::{Comparison, Row};

/// 17 significant digits, enough to round-trip any double.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn axis_headers(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}_{i}")).collect()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn point_fields(r: &Row) -> Vec<String> {
    let mut f = vec![num(r.s)];
    f.extend(r.x.iter().map(|&v| num(v)));
    f.extend(r.u.iter().map(|&v| num(v)));
    f
}

fn value_fields(v: Option<Complex64>) -> [String; 2] {
    let v = v.unwrap_or(Complex64::new(f64::NAN, f64::NAN));
    [num(v.re), num(v.im)]
}

pub fn write_rows(out: &mut dyn Write, n: usize, rows: &[Row]) -> Result<()> {
    let mut header = vec!["s".to_string()];
    header.extend(axis_headers("x", n));
    header.extend(axis_headers("u", n));
    header.extend(
        ["re_phat", "im_phat", "method", "n_terms", "tail_estimate", "status"].map(String::from),
    );
    writeln!(out, "{}", header.join(","))?;
    for r in rows {
        let mut f = point_fields(r);
        f.extend(value_fields(r.value));
        f.push(r.method.to_string());
        f.push(r.n_terms.to_string());
        f.push(num(r.tail_estimate));
        f.push(csv_field(&r.status));
        writeln!(out, "{}", f.join(","))?;
    }
    Ok(())
}

pub fn write_comparison(out: &mut dyn Write, n: usize, cmp: &Comparison) -> Result<()> {
    let mut header = vec!["s".to_string()];
    header.extend(axis_headers("x", n));
    header.extend(axis_headers("u", n));
    header.extend(
        ["method_a", "re_a", "im_a", "method_b", "re_b", "im_b", "abs_diff"].map(String::from),
    );
    writeln!(out, "{}", header.join(","))?;
    for (a, b, d) in &cmp.rows {
        let mut f = point_fields(a);
        f.push(a.method.to_string());
        f.extend(value_fields(a.value));
        f.push(b.method.to_string());
        f.extend(value_fields(b.value));
        f.push(num(*d));
        writeln!(out, "{}", f.join(","))?;
    }
    Ok(())
}

/// `[{"alpha": [...], "re": .., "im": ..}, ...]` in graded-lex order.
pub fn poly_json(p: &PolyInX) -> Value {
    Value::Array(
        p.terms()
            .iter()
            .map(|(alpha, c)| json!({ "alpha": alpha.exponents(), "re": c.re, "im": c.im }))
            .collect(),
    )
}

pub fn complex_json(c: Complex64) -> Value {
    json!([c.re, c.im])
}

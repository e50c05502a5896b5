//! Grid syntax: a value `v`, or `start:stop:count` (inclusive, evenly spaced).

use anyhow::{bail, Context, Result};

pub fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.trim().split(':').collect();
    match parts.as_slice() {
        [v] => Ok(vec![parse_f64(v)?]),
        [a, b, n] => {
            let (a, b) = (parse_f64(a)?, parse_f64(b)?);
            let n: usize = n.trim().parse().with_context(|| format!("bad count in range {spec:?}"))?;
            match n {
                0 => bail!("range {spec:?} has zero points"),
                1 => Ok(vec![a]),
                _ => Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
            }
        }
        _ => bail!("range {spec:?} is neither a number nor start:stop:count"),
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().with_context(|| format!("not a number: {s:?}"))?;
    if !v.is_finite() {
        bail!("not a finite number: {s:?}");
    }
    Ok(v)
}

/// Comma-separated components of one vector.
pub fn parse_vector(spec: &str) -> Result<Vec<f64>> {
    spec.split(',').map(parse_f64).collect()
}

/// Comma-separated per-axis ranges, expanded to their Cartesian product
/// (last axis varies fastest).
pub fn parse_points(spec: &str) -> Result<Vec<Vec<f64>>> {
    let axes: Vec<Vec<f64>> = spec.split(',').map(parse_range).collect::<Result<_>>()?;
    Ok(cartesian(&axes))
}

pub fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_range("2.5").unwrap(), vec![2.5]);
        assert_eq!(parse_range("1:2:1").unwrap(), vec![1.0]);
        assert!(parse_range("0:1:0").is_err());
        assert!(parse_range("0:1").is_err());
        assert!(parse_range("nan").is_err());
    }

    #[test]
    fn points() {
        let p = parse_points("0:1:2,5").unwrap();
        assert_eq!(p, vec![vec![0.0, 5.0], vec![1.0, 5.0]]);
        assert_eq!(parse_vector("1,-2").unwrap(), vec![1.0, -2.0]);
    }
}

//! Solution CSV files and fixed-precision JSON.
//!
//! A solution file is a block of `# key=value` metadata lines followed by a
//! `r,logu,v` table. Floats are written with 17 significant digits, so a
//! reload reproduces every stored value exactly.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::params::{Nonlinearity, ProblemParams};
use crate::radial_ode::{Chart, RadialSolution, Termination};

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn solution_to_csv(sol: &RadialSolution) -> String {
    let mut out = String::new();
    let meta = [
        ("chart", sol.chart.tag().to_string()),
        ("N", fmt_f64(sol.params.dim)),
        ("p", fmt_f64(sol.params.p)),
        ("mu", fmt_f64(sol.params.mu)),
        ("m", fmt_f64(sol.params.m)),
        ("amplitude", fmt_f64(sol.amplitude)),
        ("gamma1", fmt_f64(sol.gamma1)),
        ("terms", sol.f.encode_terms()),
        ("termination", sol.termination.tag().to_string()),
    ];
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}={v}");
    }
    out.push_str("r,logu,v\n");
    for i in 0..sol.len() {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_f64(sol.r[i]),
            fmt_f64(sol.logu[i]),
            fmt_f64(sol.v[i])
        );
    }
    out
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("{key}: cannot parse '{s}': {e}")))
}

pub fn solution_from_csv(text: &str) -> Result<RadialSolution> {
    let mut chart = None;
    let (mut dim, mut p, mut mu, mut m) = (None, None, None, None);
    let mut amplitude = f64::NAN;
    let mut gamma1 = f64::NAN;
    let mut terms = Vec::new();
    let mut termination = Termination::Completed;
    let (mut r, mut logu, mut v) = (Vec::new(), Vec::new(), Vec::new());
    let mut seen_header = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            let (k, val) = meta
                .trim()
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected '# key=value'", lineno + 1)))?;
            let val = val.trim();
            match k.trim() {
                "chart" => chart = Some(Chart::from_tag(val)?),
                "N" => dim = Some(parse_f64("N", val)?),
                "p" => p = Some(parse_f64("p", val)?),
                "mu" => mu = Some(parse_f64("mu", val)?),
                "m" => m = Some(parse_f64("m", val)?),
                "amplitude" => amplitude = parse_f64("amplitude", val)?,
                "gamma1" => gamma1 = parse_f64("gamma1", val)?,
                "terms" => terms = Nonlinearity::decode_terms(val)?,
                "termination" => termination = Termination::from_tag(val)?,
                // unknown metadata is tolerated so files can carry notes
                _ => {}
            }
            continue;
        }
        if !seen_header {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols != ["r", "logu", "v"] {
                return Err(Error::Parse(format!("line {}: expected header 'r,logu,v'", lineno + 1)));
            }
            seen_header = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(Error::Parse(format!("line {}: expected 3 columns", lineno + 1)));
        }
        r.push(parse_f64("r", cols[0])?);
        logu.push(parse_f64("logu", cols[1])?);
        v.push(parse_f64("v", cols[2])?);
    }
    let missing = |name: &str| Error::Parse(format!("missing '# {name}=' metadata"));
    let params = ProblemParams {
        dim: dim.ok_or_else(|| missing("N"))?,
        p: p.ok_or_else(|| missing("p"))?,
        mu: mu.ok_or_else(|| missing("mu"))?,
        m: m.ok_or_else(|| missing("m"))?,
    };
    params.validate()?;
    if !r.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Parse("radii are not strictly increasing".into()));
    }
    Ok(RadialSolution {
        chart: chart.ok_or_else(|| missing("chart"))?,
        r,
        logu,
        v,
        params,
        f: Nonlinearity::from_terms(terms),
        amplitude,
        gamma1,
        termination,
    })
}

pub fn write_solution(path: &Path, sol: &RadialSolution) -> Result<()> {
    std::fs::write(path, solution_to_csv(sol))?;
    Ok(())
}

pub fn read_solution(path: &Path) -> Result<RadialSolution> {
    solution_from_csv(&std::fs::read_to_string(path)?)
}

/// Pretty JSON with every float written as `{:.16e}` and non-finite values as `null`.
/// Object keys come out sorted, so equal inputs give byte-identical text.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Parse(e.to_string()))?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().unwrap();
                if x.is_finite() {
                    out.push_str(&fmt_f64(x));
                } else {
                    out.push_str("null");
                }
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RadialSolution {
        let params = ProblemParams::new(3.0, 2.0, 0.1875, 1.0).unwrap();
        let r: Vec<f64> = (1..50).map(|i| 0.1 * i as f64 + 1.0 / 3.0).collect();
        RadialSolution {
            chart: Chart::InfinityPhi,
            logu: r.iter().map(|x| -x - x.ln()).collect(),
            v: r.iter().map(|x| 1.0 + 1.0 / x).collect(),
            r,
            params,
            f: Nonlinearity::power(1.0, 4.0),
            amplitude: std::f64::consts::PI,
            gamma1: 0.25,
            termination: Termination::Completed,
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let sol = sample();
        let back = solution_from_csv(&solution_to_csv(&sol)).unwrap();
        assert_eq!(back, sol);
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(solution_from_csv("# chart=NOPE\nr,logu,v\n").is_err());
        let text = solution_to_csv(&sample()).replace("r,logu,v", "a,b");
        assert!(solution_from_csv(&text).is_err());
    }

    #[test]
    fn json_fixed_digits() {
        #[derive(Serialize)]
        struct S {
            b: f64,
            a: Vec<f64>,
            n: usize,
            bad: f64,
        }
        let s = S {
            b: 0.1,
            a: vec![1.0, -2.5e-300],
            n: 7,
            bad: f64::NAN,
        };
        let text = to_json(&s).unwrap();
        assert!(text.contains("\"b\": 1.0000000000000001e-1"));
        assert!(text.contains("\"n\": 7"));
        assert!(text.contains("\"bad\": null"));
        assert!(text.find("\"a\"").unwrap() < text.find("\"b\"").unwrap());
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["a"][1].as_f64().unwrap(), -2.5e-300);
    }
}

//! Run configuration: flat `key = value` lines grouped under `[section]`
//! headers. `#` starts a comment. Unknown sections and keys are errors.
//!
//! ```text
//! [problem]
//! N = 3
//! p = 2
//! mu = 0.1875
//! m = 1
//!
//! [nonlinearity]
//! terms = 1:4          # f(u) = u^3, as coeff:exponent pairs separated by ';'
//!
//! [sweep]
//! mu = 0, 0.1, 0.1875
//! ```

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::params::{Nonlinearity, ProblemParams};
use crate::radial_ode::ShootingConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct Windows {
    pub origin: (f64, f64),
    pub infinity: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub dir: PathBuf,
    pub stem: String,
}

/// Value lists for a parameter sweep; an empty list keeps the base value.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sweep {
    pub dim: Vec<f64>,
    pub p: Vec<f64>,
    pub mu: Vec<f64>,
    pub m: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ProblemParams,
    pub f: Nonlinearity,
    pub solver: ShootingConfig,
    /// Starting amplitude for the bracket search.
    pub guess: f64,
    /// `None` uses the integer `k` with `k <= p < k+1`.
    pub expansion_order: Option<usize>,
    pub windows: Windows,
    pub output: Output,
    pub sweep: Sweep,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ProblemParams {
                dim: 3.0,
                p: 2.0,
                mu: 0.0,
                m: 1.0,
            },
            f: Nonlinearity::power(1.0, 4.0),
            solver: ShootingConfig::default(),
            guess: 1.0,
            expansion_order: None,
            windows: Windows {
                origin: (1e-5, 1e-3),
                infinity: (10.0, 20.0),
            },
            output: Output {
                dir: PathBuf::from("out"),
                stem: "run".into(),
            },
            sweep: Sweep::default(),
        }
    }
}

fn num(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|e| Error::Parse(format!("{key}: cannot parse '{v}': {e}")))
}

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

impl RunConfig {
    /// Parses config text on top of the defaults. Values are validated
    /// separately by [`RunConfig::validate`] so that command-line overrides can
    /// be applied first.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let at = |msg: String| Error::Parse(format!("line {}: {msg}", i + 1));
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_string();
                if ![
                    "problem",
                    "nonlinearity",
                    "solver",
                    "expansion",
                    "windows",
                    "output",
                    "sweep",
                ]
                .contains(&section.as_str())
                {
                    return Err(at(format!("unknown section [{section}]")));
                }
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| at("expected key = value".into()))?;
            let (k, v) = (k.trim(), v.trim());
            let key = format!("{section}.{k}");
            let s = &mut cfg.solver;
            match key.as_str() {
                "problem.N" => cfg.params.dim = num(&key, v)?,
                "problem.p" => cfg.params.p = num(&key, v)?,
                "problem.mu" => cfg.params.mu = num(&key, v)?,
                "problem.m" => cfg.params.m = num(&key, v)?,
                "nonlinearity.terms" => cfg.f = Nonlinearity::from_terms(Nonlinearity::decode_terms(v)?),
                "solver.r0" => s.r0 = num(&key, v)?,
                "solver.r_switch" => s.r_switch = num(&key, v)?,
                "solver.r_max" => s.r_max = num(&key, v)?,
                "solver.tol" => s.tol = num(&key, v)?,
                "solver.tol_C" => s.tol_c = num(&key, v)?,
                "solver.w_max" => s.w_max = Some(num(&key, v)?),
                "solver.max_iter" => {
                    s.max_iter = v.parse().map_err(|e| at(format!("{key}: {e}")))?;
                }
                "solver.stable_tail" => {
                    s.stable_tail = v.parse().map_err(|e| at(format!("{key}: {e}")))?;
                }
                "solver.splice_tol" => s.splice_tol = num(&key, v)?,
                "solver.guess" => cfg.guess = num(&key, v)?,
                "expansion.order" => {
                    cfg.expansion_order = Some(v.parse().map_err(|e| at(format!("{key}: {e}")))?);
                }
                "windows.origin_lo" => cfg.windows.origin.0 = num(&key, v)?,
                "windows.origin_hi" => cfg.windows.origin.1 = num(&key, v)?,
                "windows.infinity_lo" => cfg.windows.infinity.0 = num(&key, v)?,
                "windows.infinity_hi" => cfg.windows.infinity.1 = num(&key, v)?,
                "output.dir" => cfg.output.dir = PathBuf::from(v),
                "output.stem" => cfg.output.stem = v.to_string(),
                "sweep.N" => cfg.sweep.dim = list(&key, v)?,
                "sweep.p" => cfg.sweep.p = list(&key, v)?,
                "sweep.mu" => cfg.sweep.mu = list(&key, v)?,
                "sweep.m" => cfg.sweep.m = list(&key, v)?,
                _ if section.is_empty() => return Err(at(format!("key '{k}' outside any section"))),
                _ => return Err(at(format!("unknown key '{k}' in [{section}]"))),
            }
        }
        Ok(cfg)
    }

    /// Checks everything an end-to-end run needs before it starts.
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.f.validate(&self.params)?;
        let s = &self.solver;
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(s.r0 > 0.0 && s.r0 < s.r_switch && s.r_switch < s.r_max) {
            return bad(format!(
                "need 0 < r0 < r_switch < r_max (got {}, {}, {})",
                s.r0, s.r_switch, s.r_max
            ));
        }
        if !(s.tol > 0.0 && s.tol_c > 0.0 && s.splice_tol > 0.0) {
            return bad("tol, tol_C and splice_tol must be positive".into());
        }
        if let Some(w) = s.w_max {
            if !(w > 0.0) {
                return bad(format!("w_max must be positive (got {w})"));
            }
        }
        if !(self.guess > 0.0 && self.guess.is_finite()) {
            return bad(format!("guess must be a positive amplitude (got {})", self.guess));
        }
        for (name, (lo, hi)) in [("origin", self.windows.origin), ("infinity", self.windows.infinity)] {
            if !(lo > 0.0 && lo < hi) {
                return bad(format!("{name} window must satisfy 0 < lo < hi (got [{lo}, {hi}])"));
            }
        }
        if self.output.stem.is_empty() || self.output.stem.contains(['/', '\\']) {
            return bad(format!(
                "output stem must be a plain file name (got '{}')",
                self.output.stem
            ));
        }
        Ok(())
    }

    /// Every parameter tuple of the sweep, in `N`, `p`, `mu`, `m` nesting order.
    pub fn sweep_points(&self) -> Vec<ProblemParams> {
        let pick = |v: &Vec<f64>, base: f64| if v.is_empty() { vec![base] } else { v.clone() };
        let b = self.params;
        let mut out = Vec::new();
        for &dim in &pick(&self.sweep.dim, b.dim) {
            for &p in &pick(&self.sweep.p, b.p) {
                for &mu in &pick(&self.sweep.mu, b.mu) {
                    for &m in &pick(&self.sweep.m, b.m) {
                        out.push(ProblemParams { dim, p, mu, m });
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections() {
        let text = "\
# model run
[problem]
N = 3
p = 2
mu = 0.1875   # gamma1 = 1/4
[nonlinearity]
terms = 1:4; 0.5:5
[solver]
tol_C = 1e-9
stable_tail = false
[expansion]
order = 3
[windows]
infinity_hi = 18
[sweep]
mu = 0, 0.1
m = 1, 2
";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.params.mu, 0.1875);
        assert_eq!(c.f.terms.len(), 2);
        assert_eq!(c.f.q, 4.0);
        assert_eq!(c.solver.tol_c, 1e-9);
        assert!(!c.solver.stable_tail);
        assert_eq!(c.expansion_order, Some(3));
        assert_eq!(c.windows.infinity, (10.0, 18.0));
        assert_eq!(c.sweep_points().len(), 4);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        assert!(RunConfig::parse("[problem]\nmuu = 1\n").is_err());
        assert!(RunConfig::parse("[probem]\n").is_err());
        assert!(RunConfig::parse("N = 3\n").is_err());
        assert!(RunConfig::parse("[problem]\nN 3\n").is_err());
        assert!(RunConfig::parse("[problem]\nN = three\n").is_err());
    }

    #[test]
    fn validation_names_constraint() {
        let c = RunConfig::parse("[problem]\nmu = 0.3\n").unwrap();
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("mu_bar"), "{msg}");
        let c = RunConfig::parse("[solver]\nr0 = 2\n").unwrap();
        assert!(c.validate().is_err());
    }
}

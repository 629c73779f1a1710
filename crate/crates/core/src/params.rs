//! Problem data: the ambient PDE parameters and the nonlinearity model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of `-Δ_p u - μ|x|^{-p}|u|^{p-2}u + m|u|^{p-2}u = f(u)` in `R^N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    /// Spatial dimension `N`.
    pub dim: f64,
    /// p-Laplacian exponent.
    pub p: f64,
    /// Hardy strength.
    pub mu: f64,
    /// Mass coefficient.
    pub m: f64,
}

impl ProblemParams {
    /// Builds and validates a parameter set.
    pub fn new(dim: f64, p: f64, mu: f64, m: f64) -> Result<Self> {
        let params = Self { dim, p, mu, m };
        params.validate()?;
        Ok(params)
    }

    /// Checks `1 < p < N` and `0 <= μ < μ̄`. The mass may be any finite real.
    pub fn validate(&self) -> Result<()> {
        self.validate_exponent()?;
        if !self.mu.is_finite() || self.mu < 0.0 {
            return Err(Error::InvalidParams(format!(
                "mu must satisfy mu >= 0 (got {})",
                self.mu
            )));
        }
        let bar = self.mu_bar_unchecked();
        if self.mu >= bar {
            return Err(Error::InvalidParams(format!(
                "mu must satisfy mu < mu_bar = ((N-p)/p)^p = {bar} (got {})",
                self.mu
            )));
        }
        if !self.m.is_finite() {
            return Err(Error::InvalidParams("m must be finite".into()));
        }
        Ok(())
    }

    /// Checks only `1 < p < N`.
    pub fn validate_exponent(&self) -> Result<()> {
        if !(self.dim.is_finite() && self.p.is_finite()) || !(self.p > 1.0 && self.p < self.dim) {
            return Err(Error::InvalidParams(format!(
                "p must satisfy 1 < p < N (got N = {}, p = {})",
                self.dim, self.p
            )));
        }
        Ok(())
    }

    /// Validation for anything addressing behavior at infinity, which needs `m > 0`.
    pub fn validate_for_infinity(&self) -> Result<()> {
        self.validate()?;
        if self.m <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "m must satisfy m > 0 for behavior at infinity (got {})",
                self.m
            )));
        }
        Ok(())
    }

    pub(crate) fn mu_bar_unchecked(&self) -> f64 {
        ((self.dim - self.p) / self.p).powf(self.p)
    }

    /// `(N-p)/p`, the Hardy-critical exponent separating the two roots.
    pub fn critical_exponent(&self) -> f64 {
        (self.dim - self.p) / self.p
    }

    /// Sobolev exponent `p* = Np/(N-p)`.
    pub fn sobolev_exponent(&self) -> f64 {
        self.dim * self.p / (self.dim - self.p)
    }

    /// `φ_∞ = (m/(p-1))^{(p-1)/p}`.
    pub fn phi_inf(&self) -> f64 {
        (self.m / (self.p - 1.0)).powf((self.p - 1.0) / self.p)
    }

    /// Exponential decay rate `β = (m/(p-1))^{1/p}`.
    pub fn decay_rate(&self) -> f64 {
        (self.m / (self.p - 1.0)).powf(1.0 / self.p)
    }

    /// Algebraic decay exponent `(N-1)/(p(p-1))` at infinity.
    pub fn algebraic_decay(&self) -> f64 {
        (self.dim - 1.0) / (self.p * (self.p - 1.0))
    }
}

/// One term `a |u|^{e-2} u` of the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub coeff: f64,
    pub exponent: f64,
}

/// `f(u) = Σ a_j |u|^{e_j - 2} u` with declared growth constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub terms: Vec<PowerTerm>,
    /// Subcritical growth exponent at zero, `min e_j` unless declared otherwise.
    pub q: f64,
    /// Growth constant bounding `|f(t)|/|t|^{q-1}` near 0 and `|f(t)|/|t|^{p*-1}` at infinity.
    pub growth: f64,
}

impl Nonlinearity {
    /// The zero nonlinearity.
    pub fn zero() -> Self {
        Self {
            terms: Vec::new(),
            q: f64::INFINITY,
            growth: 0.0,
        }
    }

    /// A single power `f(u) = coeff |u|^{exponent-2} u`.
    pub fn power(coeff: f64, exponent: f64) -> Self {
        Self::from_terms(vec![PowerTerm { coeff, exponent }])
    }

    /// Sum of power terms; `q = min e_j` and `A = Σ|a_j|`.
    pub fn from_terms(terms: Vec<PowerTerm>) -> Self {
        let q = terms.iter().map(|t| t.exponent).fold(f64::INFINITY, f64::min);
        let growth = terms.iter().map(|t| t.coeff.abs()).sum();
        Self { terms, q, growth }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coeff == 0.0)
    }

    /// Checks `p < e_j <= p*` for every term and the small-u decay of `f(u)/u^{p-1}`.
    pub fn validate(&self, params: &ProblemParams) -> Result<()> {
        params.validate_exponent()?;
        let p_star = params.sobolev_exponent();
        for t in &self.terms {
            if !t.coeff.is_finite() || !t.exponent.is_finite() {
                return Err(Error::InvalidParams("nonlinearity terms must be finite".into()));
            }
            if !(t.exponent > params.p && t.exponent <= p_star * (1.0 + 1e-14)) {
                return Err(Error::InvalidParams(format!(
                    "nonlinearity exponent must satisfy p < e <= p* = {p_star} (got {})",
                    t.exponent
                )));
            }
        }
        if !self.terms.is_empty() {
            let small = self.ratio(1e-8f64.ln(), params.p).abs();
            let scale = self.growth.max(1.0);
            if small > 1e-3 * scale {
                return Err(Error::InvalidParams(format!(
                    "f(u)/u^(p-1) does not vanish as u -> 0 (value {small:e} at u = 1e-8)"
                )));
            }
        }
        Ok(())
    }

    /// `f(u)` for real `u`.
    pub fn eval(&self, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        let a = u.abs();
        self.terms.iter().map(|t| t.coeff * a.powf(t.exponent - 2.0) * u).sum()
    }

    /// `f(u)/u^{p-1}` for `u = exp(logu) > 0`, evaluated in log space.
    pub fn ratio(&self, logu: f64, p: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff * ((t.exponent - p) * logu).exp())
            .sum()
    }

    /// Compact `coeff:exponent;...` form used in file headers and config.
    pub fn encode_terms(&self) -> String {
        self.terms
            .iter()
            .map(|t| format!("{:.16e}:{:.16e}", t.coeff, t.exponent))
            .collect::<Vec<_>>()
            .join(";")
    }

    /// Parses the `coeff:exponent` list (separators `;` or `,`). An empty string gives `f ≡ 0`.
    pub fn decode_terms(s: &str) -> Result<Vec<PowerTerm>> {
        let mut out = Vec::new();
        for item in s.split([';', ',']).map(str::trim).filter(|x| !x.is_empty()) {
            let (a, e) = item
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("expected coeff:exponent, got '{item}'")))?;
            let coeff = a
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad coefficient '{a}': {e}")))?;
            let exponent = e
                .trim()
                .parse::<f64>()
                .map_err(|err| Error::Parse(format!("bad exponent '{e}': {err}")))?;
            out.push(PowerTerm { coeff, exponent });
        }
        Ok(out)
    }
}

//! Asymptotic expansion of `(-u'/u)^{p-1}` at infinity.
//!
//! With `φ_∞ = (m/(p-1))^{(p-1)/p}` and `α₀ = p φ_∞^{1/(p-1)}`, a positive
//! radial ground state satisfies
//!
//! ```text
//! (-u'/u)^{p-1} = Σ_{i=0}^{k} c_i r^{-i} + d₁ r^{-p} + O(r^{-(k+1)}),   d₁ = -μ/α₀,
//! ```
//!
//! where `c₀ = φ_∞` and, for `i >= 1`,
//!
//! ```text
//! (N-i) c_{i-1} - α₀ c_i = Σ_{n=2}^{i} F^{(n)}(0)/n! · [x^i] S(x)^n,
//! F(t) = (p-1)(c₀ + t)^{p/(p-1)},   S(x) = Σ_{j>=1} c_j x^j.
//! ```
//!
//! The inner composition sums are the coefficients of truncated powers of `S`,
//! accumulated by convolution so every power only ever needs coefficients
//! that are already known.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ProblemParams;

/// Coefficients of the expansion together with the constants that define it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionSeries {
    pub k: usize,
    pub c: Vec<f64>,
    /// Coefficient `d₁ = -μ/α₀` of `r^{-p}`, kept separate from the `c_i`.
    pub hardy_coeff: f64,
    pub alpha0: f64,
    pub phi_inf: f64,
    /// `true` when `k` exceeds the order with `k <= p < k+1`.
    pub extrapolated: bool,
    pub params: ProblemParams,
}

/// The integer `k` with `k <= p < k+1`.
pub fn default_order(p: f64) -> usize {
    p.floor() as usize
}

/// `F^{(n)}(0)/n!` for `F(t) = (p-1)(c₀+t)^{p/(p-1)}`, a generalized binomial coefficient.
pub fn f_taylor_coeff(n: usize, c0: f64, p: f64) -> f64 {
    let a = p / (p - 1.0);
    let mut binom = 1.0;
    for j in 0..n {
        binom *= (a - j as f64) / (j as f64 + 1.0);
    }
    (p - 1.0) * binom * c0.powf(a - n as f64)
}

/// `F^{(n)}(0) = (p-1) [Π_{j<n} (p/(p-1) - j)] c₀^{p/(p-1) - n}`.
pub fn f_taylor_deriv(n: usize, c0: f64, p: f64) -> f64 {
    let a = p / (p - 1.0);
    let falling: f64 = (0..n).map(|j| a - j as f64).product();
    (p - 1.0) * falling * c0.powf(a - n as f64)
}

/// Builds `c₀ … c_k` and the Hardy coefficient. Requires `m > 0`.
pub fn build_series(params: &ProblemParams, k: usize) -> Result<ExpansionSeries> {
    params.validate_for_infinity()?;
    let p = params.p;
    let phi_inf = params.phi_inf();
    let alpha0 = p * phi_inf.powf(1.0 / (p - 1.0));

    let mut c = vec![0.0; k + 1];
    c[0] = phi_inf;
    // powers[n][j] = [x^j] S(x)^n for n >= 1, filled as coefficients become known.
    let mut powers = vec![vec![0.0; k + 1]; k + 1];
    let taylor: Vec<f64> = (0..=k).map(|n| f_taylor_coeff(n, phi_inf, p)).collect();

    for i in 1..=k {
        for n in 2..=i {
            let (head, tail) = powers.split_at_mut(n);
            let prev = &head[n - 1];
            let mut acc = 0.0;
            for j in 1..i {
                acc += c[j] * prev[i - j];
            }
            tail[0][i] = acc;
        }
        let rhs: f64 = (2..=i).map(|n| taylor[n] * powers[n][i]).sum();
        c[i] = ((params.dim - i as f64) * c[i - 1] - rhs) / alpha0;
        powers[1][i] = c[i];
    }

    Ok(ExpansionSeries {
        k,
        c,
        hardy_coeff: if params.mu == 0.0 { 0.0 } else { -params.mu / alpha0 },
        alpha0,
        phi_inf,
        extrapolated: k > default_order(p),
        params: *params,
    })
}

impl ExpansionSeries {
    /// `Σ c_i r^{-i} + d₁ r^{-p}`.
    pub fn eval(&self, r: f64) -> f64 {
        self.eval_polynomial(r) + self.hardy_coeff * r.powf(-self.params.p)
    }

    /// The series without the Hardy term.
    pub fn eval_polynomial(&self, r: f64) -> f64 {
        let x = 1.0 / r;
        self.c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
    }

    /// Predicted `u'/u = -(eval(r))^{1/(p-1)}`.
    pub fn log_derivative_prediction(&self, r: f64) -> Result<f64> {
        let s = self.eval(r);
        if !(s > 0.0) {
            return Err(Error::Domain(format!(
                "series value {s:e} <= 0 at r = {r:e}; r too small for the expansion"
            )));
        }
        Ok(-s.powf(1.0 / (self.params.p - 1.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(dim: f64, p: f64, mu: f64, m: f64) -> ProblemParams {
        ProblemParams::new(dim, p, mu, m).unwrap()
    }

    #[test]
    fn taylor_derivatives() {
        let pr = params(4.0, 2.5, 0.1, 1.7);
        let c0 = pr.phi_inf();
        let s = build_series(&pr, 2).unwrap();
        assert!((f_taylor_deriv(0, c0, pr.p) - pr.m).abs() < 1e-12);
        assert!((f_taylor_deriv(1, c0, pr.p) - s.alpha0).abs() < 1e-12);
        assert_eq!(f_taylor_deriv(2, 1.0, 2.0), 2.0);
        assert_eq!(f_taylor_deriv(3, 1.0, 2.0), 0.0);
        for n in 3..8 {
            assert_eq!(f_taylor_deriv(n, 1.3, 2.0), 0.0);
            assert_eq!(f_taylor_coeff(n, 1.3, 2.0), 0.0);
        }
        let fact: f64 = (1..=4).map(f64::from).product();
        assert!((f_taylor_coeff(4, 0.7, 3.0) - f_taylor_deriv(4, 0.7, 3.0) / fact).abs() < 1e-14);
    }

    #[test]
    fn p_two_leading_coefficients() {
        for dim in [3.0, 4.0, 7.0] {
            let s = build_series(&params(dim, 2.0, 0.0, 1.0), 2).unwrap();
            assert_eq!(s.c[0], 1.0);
            assert!((s.c[1] - (dim - 1.0) / 2.0).abs() < 1e-15);
            assert!((s.c[1] - (dim - 1.0) * s.phi_inf / s.alpha0).abs() < 1e-15);
        }
        // N = 3, p = 2: φ = 1 + 1/r exactly (u = e^{-r}/r), so c₂ = 0.
        let s = build_series(&params(3.0, 2.0, 0.0, 1.0), 2).unwrap();
        assert!(s.c[2].abs() < 1e-15);
        assert!((s.eval(10.0) - 1.1).abs() < 1e-15);
    }

    #[test]
    fn default_order_and_flag() {
        assert_eq!(default_order(2.0), 2);
        assert_eq!(default_order(1.5), 1);
        assert_eq!(default_order(3.7), 3);
        let pr = params(3.0, 1.5, 0.1, 1.0);
        assert!(!build_series(&pr, 1).unwrap().extrapolated);
        assert!(build_series(&pr, 3).unwrap().extrapolated);
    }

    #[test]
    fn hardy_coefficient_forms() {
        let pr = params(3.0, 1.6, 0.2, 2.0);
        let s = build_series(&pr, 1).unwrap();
        let alt = -((pr.p - 1.0) / pr.m).powf(1.0 / pr.p) * pr.mu / pr.p;
        assert!((s.hardy_coeff - alt).abs() < 1e-15);
        assert!((s.alpha0 - pr.p * s.c[0].powf(1.0 / (pr.p - 1.0))).abs() < 1e-14);
    }

    #[test]
    fn mass_scaling() {
        let a = build_series(&params(4.0, 2.5, 0.1, 1.0), 2).unwrap();
        let b = build_series(&params(4.0, 2.5, 0.1, 3.0), 2).unwrap();
        let p = 2.5f64;
        assert!((b.c[0] / a.c[0] - 3f64.powf((p - 1.0) / p)).abs() < 1e-13);
        assert!((b.hardy_coeff / a.hardy_coeff - 3f64.powf(-1.0 / p)).abs() < 1e-13);
    }

    #[test]
    fn rejects_nonpositive_mass() {
        assert!(build_series(&params(3.0, 2.0, 0.0, 0.0), 2).is_err());
        assert!(build_series(&params(3.0, 2.0, 0.0, -1.0), 2).is_err());
    }

    #[test]
    fn log_derivative_limits() {
        let pr = params(3.0, 2.0, 0.0, 1.0);
        let s = build_series(&pr, 2).unwrap();
        let far = s.log_derivative_prediction(1e12).unwrap();
        assert!((far + 1.0).abs() < 1e-11);
        // first-order slope -(N-1)/2 · r^{-1} for p = 2
        let r = 1e4;
        let first = s.log_derivative_prediction(r).unwrap() + 1.0;
        assert!((first * r + 1.0).abs() < 1e-8);
        let bad = ExpansionSeries { c: vec![-1.0], ..s };
        assert!(bad.log_derivative_prediction(1.0).is_err());
    }

    #[test]
    fn eval_tends_to_c0() {
        let s = build_series(&params(5.0, 3.0, 0.2, 2.0), 3).unwrap();
        assert!((s.eval(1e9) - s.c[0]).abs() < 1e-8);
    }
}

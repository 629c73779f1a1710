//! Explicit barrier functions and their exact source terms.
//!
//! Origin: `w₀(r) = r^{-γ₁}(1 + δ r^ε)` solves
//! `-Δ_p w - μ r^{-p} w^{p-1} = h̃(r) w^{p-1}` with
//! `h̃(r) = h(-δ r^ε) / ((1 + δ r^ε)^{p-1} r^p)`.
//!
//! Infinity: `w₁ = e^{-αr}` and `v_γ = r^{-a} e^{-βr}(1 - γ r^{-δ})` with
//! `a = (N-1)/(p(p-1))`, `β = (m/(p-1))^{1/p}`; `v_γ' = -A v_γ` and
//! `-Δ_p v_γ + m v_γ^{p-1} = Q v_γ^{p-1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{self, DEFAULT_TOL};
use crate::params::{Nonlinearity, ProblemParams};

/// `k(t) = (p-1)t² - (N-p)t`.
pub fn k_func(t: f64, params: &ProblemParams) -> f64 {
    (params.p - 1.0) * t * t - (params.dim - params.p) * t
}

/// `h(t) = |γ₁ - (γ₁-ε)t|^{p-2}[k(γ₁-ε)·t - k(γ₁)] - μ|1-t|^{p-2}(1-t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HFunction {
    pub params: ProblemParams,
    pub gamma1: f64,
    pub eps: f64,
}

impl HFunction {
    /// Requires `μ > 0` so that `γ₁ > 0`.
    pub fn new(params: &ProblemParams, eps: f64) -> Result<Self> {
        params.validate()?;
        if !(params.mu > 0.0) {
            return Err(Error::InvalidParams(
                "the origin barrier needs mu > 0 (gamma1 = 0 degenerates h'(0))".into(),
            ));
        }
        if !(eps > 0.0 && eps < params.p) {
            return Err(Error::InvalidParams(format!("eps must lie in (0, p) (got {eps})")));
        }
        let gamma1 = exponents::solve_exponents(params, DEFAULT_TOL)?.gamma1;
        Ok(Self {
            params: *params,
            gamma1,
            eps,
        })
    }

    pub fn value(&self, t: f64) -> f64 {
        let p = self.params.p;
        let g = self.gamma1;
        let base = (g - (g - self.eps) * t).abs();
        let one_minus = 1.0 - t;
        base.powf(p - 2.0) * (k_func(g - self.eps, &self.params) * t - k_func(g, &self.params))
            - self.params.mu * one_minus.abs().powf(p - 2.0) * one_minus
    }

    /// Closed form `h'(0) = (p-1)γ₁^{p-2}(-pγ₁ + N - p + ε)ε`.
    pub fn derivative_at_zero(&self) -> f64 {
        let p = self.params.p;
        let g = self.gamma1;
        (p - 1.0) * g.powf(p - 2.0) * (-p * g + self.params.dim - p + self.eps) * self.eps
    }
}

/// `w₀(r) = r^{-γ₁}(1 + δ r^ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OriginBarrier {
    pub delta: f64,
    pub eps: f64,
    pub gamma1: f64,
    pub params: ProblemParams,
}

impl OriginBarrier {
    pub fn new(params: &ProblemParams, delta: f64, eps: f64) -> Result<Self> {
        let h = HFunction::new(params, eps)?;
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParams(format!("delta must lie in (0, 1) (got {delta})")));
        }
        Ok(Self {
            delta,
            eps,
            gamma1: h.gamma1,
            params: *params,
        })
    }

    fn h(&self) -> HFunction {
        HFunction {
            params: self.params,
            gamma1: self.gamma1,
            eps: self.eps,
        }
    }

    /// `(w₀, w₀', w₀'')`.
    pub fn profile(&self, r: f64) -> (f64, f64, f64) {
        let g = self.gamma1;
        let e = self.eps;
        let d = self.delta;
        let a = r.powf(-g);
        let b = d * r.powf(e - g);
        let u = a + b;
        let du = -g * a / r + (e - g) * b / r;
        let d2u = g * (g + 1.0) * a / (r * r) + (e - g) * (e - g - 1.0) * b / (r * r);
        (u, du, d2u)
    }

    /// `h̃(r) = h(-δ r^ε) / ((1 + δ r^ε)^{p-1} r^p)`.
    pub fn source(&self, r: f64) -> f64 {
        let p = self.params.p;
        let s = self.delta * r.powf(self.eps);
        self.h().value(-s) / ((1.0 + s).powf(p - 1.0) * r.powf(p))
    }
}

/// `h̃` for a barrier.
pub fn origin_source(b: &OriginBarrier, r: f64) -> f64 {
    b.source(r)
}

/// Parameters picked for the origin barrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OriginBarrierChoice {
    pub delta_h: f64,
    pub eps: f64,
    /// Largest sampled radius below which `h̃ <= -m` at every sample.
    pub r2: f64,
}

/// Geometric sample `t = -2^{-j}`, `j = 1..=count`.
pub fn default_t_grid(count: usize) -> Vec<f64> {
    (1..=count).map(|j| -(0.5f64).powi(j as i32)).collect()
}

/// Log-spaced radii on `[lo, hi]`, `per_decade` points per decade.
pub fn log_radii(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(1);
    (0..=n)
        .map(|i| lo * 10f64.powf(decades * i as f64 / n as f64))
        .collect()
}

/// Picks `δ_h` as the largest sampled `|t|` such that `2h'(0)t <= h(t) <= h'(0)t/2`
/// at every grid point in `[-δ_h, 0)`, uses `ε = p/2`, and scans `radii` for `r₂`.
pub fn choose_origin_params(params: &ProblemParams, t_grid: &[f64], radii: &[f64]) -> Result<OriginBarrierChoice> {
    let eps = params.p / 2.0;
    let h = HFunction::new(params, eps)?;
    let hp0 = h.derivative_at_zero();
    let mut ts: Vec<f64> = t_grid.iter().copied().filter(|&t| t < 0.0 && t > -1.0).collect();
    if ts.is_empty() {
        return Err(Error::NoValidDelta("t grid has no points in (-1, 0)".into()));
    }
    // closest to zero first
    ts.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let holds = |t: f64| {
        let v = h.value(t);
        2.0 * hp0 * t <= v && v <= 0.5 * hp0 * t
    };
    let mut delta_h = None;
    for &t in &ts {
        if !holds(t) {
            break;
        }
        delta_h = Some(-t);
    }
    let delta_h =
        delta_h.ok_or_else(|| Error::NoValidDelta(format!("the two-sided bound fails already at t = {}", ts[0])))?;
    let barrier = OriginBarrier::new(params, delta_h, eps)?;
    let mut rs: Vec<f64> = radii.iter().copied().filter(|&r| r > 0.0).collect();
    rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut r2 = 0.0;
    for &r in &rs {
        if barrier.source(r) <= -params.m {
            r2 = r;
        } else {
            break;
        }
    }
    Ok(OriginBarrierChoice { delta_h, eps, r2 })
}

/// `w₁ = e^{-αr}` and its source `(N-1)α^{p-1}/r` for mass `m - ε = (p-1)α^p`.
pub fn exp_profile_source(r: f64, alpha: f64, params: &ProblemParams) -> (f64, f64) {
    ((-alpha * r).exp(), (params.dim - 1.0) * alpha.powf(params.p - 1.0) / r)
}

/// `(w₁, w₁', w₁'')` for `w₁ = e^{-αr}`.
pub fn exp_profile(r: f64, alpha: f64) -> (f64, f64, f64) {
    let v = (-alpha * r).exp();
    (v, -alpha * v, alpha * alpha * v)
}

/// `v_γ(r) = r^{-a} e^{-βr}(1 - γ r^{-δ})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfinityBarrier {
    pub gamma: f64,
    pub delta: f64,
    /// `a = (N-1)/(p(p-1))`.
    pub alpha_decay: f64,
    /// `β = (m/(p-1))^{1/p}`.
    pub beta: f64,
    pub params: ProblemParams,
}

impl InfinityBarrier {
    pub fn new(params: &ProblemParams, gamma: f64, delta: f64) -> Result<Self> {
        params.validate_for_infinity()?;
        if !(delta > 0.0 && delta < 0.5) {
            return Err(Error::InvalidParams(format!(
                "delta must lie in (0, 1/2) (got {delta})"
            )));
        }
        Ok(Self {
            gamma,
            delta,
            alpha_decay: params.algebraic_decay(),
            beta: params.decay_rate(),
            params: *params,
        })
    }

    fn denom(&self, r: f64) -> Result<f64> {
        let d = 1.0 - self.gamma * r.powf(-self.delta);
        if d <= 0.0 {
            Err(Error::Pole(d))
        } else {
            Ok(d)
        }
    }

    /// `A = -v_γ'/v_γ = β + a/r - δγ r^{-δ-1}/(1 - γ r^{-δ})` and `dA/dr`.
    pub fn a_func(&self, r: f64) -> Result<(f64, f64)> {
        let den = self.denom(r)?;
        let (a, b, d, g) = (self.alpha_decay, self.beta, self.delta, self.gamma);
        let num = d * g * r.powf(-d - 1.0);
        let big_a = b + a / r - num / den;
        // (num/den)' = (num' den - num den')/den², den' = δγ r^{-δ-1} = num
        let num_p = -(d + 1.0) * d * g * r.powf(-d - 2.0);
        let ratio_p = (num_p * den - num * num) / (den * den);
        let d_a = -a / (r * r) - ratio_p;
        Ok((big_a, d_a))
    }

    /// `Q = m + (A^{p-1})' - (p-1)A^p + (N-1)A^{p-1}/r`.
    pub fn q_func(&self, r: f64) -> Result<f64> {
        let (a, da) = self.a_func(r)?;
        let p = self.params.p;
        Ok(self.params.m + (p - 1.0) * a.powf(p - 2.0) * da - (p - 1.0) * a.powf(p)
            + (self.params.dim - 1.0) * a.powf(p - 1.0) / r)
    }

    /// Leading coefficient `Q₀ = (m/(p-1))^{(p-1)/p} p(p-1) δ γ` of `Q r^{δ+1}`.
    pub fn q0(&self) -> f64 {
        let p = self.params.p;
        self.params.phi_inf() * p * (p - 1.0) * self.delta * self.gamma
    }

    pub fn value(&self, r: f64) -> f64 {
        r.powf(-self.alpha_decay) * (-self.beta * r).exp() * (1.0 - self.gamma * r.powf(-self.delta))
    }

    /// `(v, v', v'')` from `v' = -A v`, `v'' = (A² - A')v`.
    pub fn profile(&self, r: f64) -> Result<(f64, f64, f64)> {
        let (a, da) = self.a_func(r)?;
        let v = self.value(r);
        Ok((v, -a * v, (a * a - da) * v))
    }

    /// First radius in the log-spaced scan of `[lo, hi]` from which `Q <= 0`
    /// holds at every later sample.
    pub fn nonpositive_from(&self, lo: f64, hi: f64, per_decade: usize) -> Result<Option<f64>> {
        let rs = log_radii(lo, hi, per_decade);
        let mut start = None;
        for &r in &rs {
            let q = self.q_func(r)?;
            if q <= 0.0 {
                start.get_or_insert(r);
            } else {
                start = None;
            }
        }
        Ok(start)
    }
}

/// Strong-form operator
/// `-(p-1)|u'|^{p-2}u'' - (N-1)/r |u'|^{p-2}u' - μ r^{-p}|u|^{p-2}u + mass |u|^{p-2}u - f(u)`.
#[derive(Debug, Clone, Copy)]
pub struct StrongForm<'a> {
    pub dim: f64,
    pub p: f64,
    pub mu: f64,
    pub mass: f64,
    pub f: Option<&'a Nonlinearity>,
}

impl<'a> StrongForm<'a> {
    /// The full equation: Hardy term, mass `m` and `f`.
    pub fn equation(params: &ProblemParams, f: &'a Nonlinearity) -> Self {
        Self {
            dim: params.dim,
            p: params.p,
            mu: params.mu,
            mass: params.m,
            f: Some(f),
        }
    }

    /// Only `-Δ_p u` plus the given Hardy strength and mass.
    pub fn operator(params: &ProblemParams, mu: f64, mass: f64) -> Self {
        Self {
            dim: params.dim,
            p: params.p,
            mu,
            mass,
            f: None,
        }
    }

    pub fn apply(&self, r: f64, u: f64, du: f64, d2u: f64) -> f64 {
        let p = self.p;
        let gp = du.abs().powf(p - 2.0);
        let up = u.abs().powf(p - 2.0) * u;
        let fu = self.f.map_or(0.0, |f| f.eval(u));
        -(p - 1.0) * gp * d2u - (self.dim - 1.0) / r * gp * du - self.mu * r.powf(-p) * up + self.mass * up - fu
    }
}

/// Residual of an analytic profile `r ↦ (u, u', u'')`.
pub fn residual_radial<P>(profile: P, r: f64, form: &StrongForm) -> f64
where
    P: Fn(f64) -> (f64, f64, f64),
{
    let (u, du, d2u) = profile(r);
    form.apply(r, u, du, d2u)
}

/// Residual of tabulated data at interior index `i`, with three-point
/// (non-uniform) centered differences.
pub fn residual_tabulated(r: &[f64], u: &[f64], i: usize, form: &StrongForm) -> Result<f64> {
    if r.len() != u.len() {
        return Err(Error::GridMismatch(format!("{} radii vs {} values", r.len(), u.len())));
    }
    if i == 0 || i + 1 >= r.len() {
        return Err(Error::InsufficientStencil(i));
    }
    let (h0, h1) = (r[i] - r[i - 1], r[i + 1] - r[i]);
    let du = (-h1 / (h0 * (h0 + h1))) * u[i - 1] + ((h1 - h0) / (h0 * h1)) * u[i] + (h0 / (h1 * (h0 + h1))) * u[i + 1];
    let d2u = 2.0 * (u[i - 1] / (h0 * (h0 + h1)) - u[i] / (h0 * h1) + u[i + 1] / (h1 * (h0 + h1)));
    Ok(form.apply(r[i], u[i], du, d2u))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pr(dim: f64, p: f64, mu: f64, m: f64) -> ProblemParams {
        ProblemParams::new(dim, p, mu, m).unwrap()
    }

    #[test]
    fn k_roots_and_identity() {
        let params = pr(5.0, 2.5, 0.1, 1.0);
        assert_eq!(k_func(0.0, &params), 0.0);
        assert!(k_func((5.0 - 2.5) / 1.5, &params).abs() < 1e-14);
        let g = exponents::solve_exponents(&params, DEFAULT_TOL).unwrap().gamma1;
        assert!((g.powf(0.5) * k_func(g, &params) + params.mu).abs() < 1e-12);
    }

    #[test]
    fn h_at_zero_and_p_two_slope() {
        let params = pr(3.0, 2.0, 3.0 / 16.0, 1.0);
        let h = HFunction::new(&params, 0.5).unwrap();
        assert!(h.value(0.0).abs() < 1e-14);
        let step = 1e-6;
        let fd = (h.value(step) - h.value(-step)) / (2.0 * step);
        assert!((fd - 0.5).abs() < 1e-9);
        assert!((h.derivative_at_zero() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn h_rejects_zero_mu() {
        let params = pr(3.0, 2.0, 0.0, 1.0);
        assert!(HFunction::new(&params, 0.5).is_err());
        assert!(HFunction::new(&pr(3.0, 2.0, 0.1, 1.0), 2.5).is_err());
    }

    #[test]
    fn origin_barrier_residual_is_source() {
        let params = pr(3.0, 2.0, 3.0 / 16.0, 1.0);
        let b = OriginBarrier::new(&params, 0.3, 1.0).unwrap();
        let form = StrongForm::operator(&params, params.mu, 0.0);
        for r in [1e-4, 1e-2, 0.3, 0.9] {
            let res = residual_radial(|x| b.profile(x), r, &form);
            let (w, _, _) = b.profile(r);
            let expect = b.source(r) * w;
            assert!(
                (res - expect).abs() <= 1e-10 * expect.abs(),
                "r = {r}: {res} vs {expect}"
            );
        }
    }

    #[test]
    fn choose_params_p_two() {
        let params = pr(3.0, 2.0, 3.0 / 16.0, 1.0);
        let radii = log_radii(1e-8, 1.0, 40);
        let c = choose_origin_params(&params, &default_t_grid(40), &radii).unwrap();
        assert!(c.delta_h > 0.0 && c.delta_h < 1.0);
        assert_eq!(c.eps, 1.0);
        assert!(c.r2 > 0.0);
        let heavy = pr(3.0, 2.0, 3.0 / 16.0, 50.0);
        let c2 = choose_origin_params(&heavy, &default_t_grid(40), &radii).unwrap();
        assert!(c2.r2 < c.r2);
    }

    #[test]
    fn a_func_zero_gamma() {
        let params = pr(3.0, 2.0, 0.0, 1.0);
        let b = InfinityBarrier::new(&params, 0.0, 0.3).unwrap();
        let (a, da) = b.a_func(4.0).unwrap();
        assert!((a - (1.0 + 1.0 / 4.0)).abs() < 1e-15);
        assert!((da + 1.0 / 16.0).abs() < 1e-15);
        // γ = 0: the 1/r part of Q cancels, leaving O(r^{-2})
        for r in [10.0, 100.0, 1000.0] {
            let q = b.q_func(r).unwrap();
            assert!((q * r * r).abs() < 2.0, "r = {r}: {q}");
        }
    }

    #[test]
    fn a_func_pole() {
        let params = pr(3.0, 2.0, 0.0, 1.0);
        let b = InfinityBarrier::new(&params, 2.0, 0.3).unwrap();
        assert!(matches!(b.a_func(1.0), Err(Error::Pole(_))));
        assert!(b.a_func(20.0).is_ok());
    }

    #[test]
    fn a_func_tends_to_beta() {
        let params = pr(5.0, 3.0, 0.0, 2.0);
        let b = InfinityBarrier::new(&params, -1.0, 0.3).unwrap();
        let (a, _) = b.a_func(1e12).unwrap();
        assert!((a - b.beta).abs() < 1e-10);
    }

    #[test]
    fn tabulated_residual_of_exp_profile() {
        let params = pr(3.0, 2.0, 0.0, 1.0);
        let alpha: f64 = 0.8;
        let mass = (params.p - 1.0) * alpha.powf(params.p);
        let form = StrongForm::operator(&params, 0.0, mass);
        let r: Vec<f64> = (0..=200).map(|i| 1.0 + 0.005 * i as f64).collect();
        let u: Vec<f64> = r.iter().map(|&x| (-alpha * x).exp()).collect();
        let res = residual_tabulated(&r, &u, 100, &form).unwrap();
        let (w, src) = exp_profile_source(r[100], alpha, &params);
        assert!((res - src * w).abs() < 1e-5 * src * w);
        assert!(matches!(
            residual_tabulated(&r, &u, 0, &form),
            Err(Error::InsufficientStencil(0))
        ));
        assert!(residual_tabulated(&r, &u[..10], 5, &form).is_err());
    }

    #[test]
    fn pure_hardy_monomial_has_zero_residual() {
        let params = pr(4.0, 2.5, 0.2, 1.0);
        let g = exponents::solve_exponents(&params, DEFAULT_TOL).unwrap().gamma1;
        let form = StrongForm::operator(&params, params.mu, 0.0);
        for r in [0.01, 0.5, 3.0] {
            let prof = |x: f64| {
                let u = x.powf(-g);
                (u, -g * u / x, g * (g + 1.0) * u / (x * x))
            };
            let res = residual_radial(prof, r, &form);
            let scale = r.powf(-g * (params.p - 1.0) - params.p);
            assert!(res.abs() < 1e-11 * scale, "r = {r}: {res}");
        }
    }
}

//! Critical exponents: the two nonnegative roots of
//! `Γ_μ(γ) = γ^{p-1}[(p-1)γ - (N-p)] + μ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ProblemParams;

/// Default root tolerance in the natural scale of `γ`.
pub const DEFAULT_TOL: f64 = 1e-12;

const MAX_BISECTIONS: usize = 2200;
const NEWTON_POLISH_STEPS: usize = 4;

/// Roots `γ₁ < (N-p)/p < γ₂` of `Γ_μ`, with the Hardy constant `μ̄`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub gamma1: f64,
    pub gamma2: f64,
    pub mu_bar: f64,
}

/// Best Hardy constant `((N-p)/p)^p`.
pub fn mu_bar(params: &ProblemParams) -> Result<f64> {
    params.validate_exponent()?;
    Ok(params.mu_bar_unchecked())
}

/// `Γ_μ(γ)` exactly as written; `γ` must be nonnegative.
pub fn gamma_mu(gamma: f64, params: &ProblemParams) -> f64 {
    let p = params.p;
    gamma.powf(p - 1.0) * ((p - 1.0) * gamma - (params.dim - p)) + params.mu
}

fn gamma_mu_prime(gamma: f64, params: &ProblemParams) -> f64 {
    let p = params.p;
    // d/dγ [(p-1)γ^p - (N-p)γ^{p-1}]
    p * (p - 1.0) * gamma.powf(p - 1.0) - (p - 1.0) * (params.dim - p) * gamma.powf(p - 2.0)
}

/// Solves `Γ_μ(γ) = 0` on `[0, (N-p)/p]` and `[(N-p)/p, (N-p)/(p-1)]`.
pub fn solve_exponents(params: &ProblemParams, tol: f64) -> Result<Exponents> {
    params.validate()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tol must be positive (got {tol})")));
    }
    let mu_bar = params.mu_bar_unchecked();
    let mid = params.critical_exponent();
    let top = (params.dim - params.p) / (params.p - 1.0);
    if params.mu == 0.0 {
        return Ok(Exponents {
            gamma1: 0.0,
            gamma2: top,
            mu_bar,
        });
    }
    let g = |x: f64| gamma_mu(x, params);
    let gamma1 = bracketed_root(&g, 0.0, mid, tol, params)?;
    let gamma2 = bracketed_root(&g, mid, top, tol, params)?;
    Ok(Exponents { gamma1, gamma2, mu_bar })
}

/// Bisection on a sign bracket, then a few Newton steps kept inside the final bracket.
fn bracketed_root<F>(g: &F, mut lo: f64, mut hi: f64, tol: f64, params: &ProblemParams) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut g_lo = g(lo);
    let g_hi = g(hi);
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if g_lo.signum() == g_hi.signum() {
        return Err(Error::NoConvergence(format!(
            "no sign change of Gamma_mu on [{lo}, {hi}]"
        )));
    }
    let mut iters = 0;
    // width alone is not enough when the root sits near 0 and p is close to 1:
    // there Γ_μ is steep and a 1e-12-wide bracket can still have a large residual
    while hi - lo > tol || g(0.5 * (lo + hi)).abs() > tol {
        if iters == MAX_BISECTIONS {
            return Err(Error::NoConvergence(format!(
                "bisection budget exhausted on [{lo}, {hi}]"
            )));
        }
        iters += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = g(mid);
        if g_mid == 0.0 {
            return Ok(mid);
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    let mut gx = g(x);
    for _ in 0..NEWTON_POLISH_STEPS {
        let d = gamma_mu_prime(x, params);
        if !d.is_finite() || d == 0.0 {
            break;
        }
        let next = x - gx / d;
        if !(next >= lo && next <= hi) {
            break;
        }
        let g_next = g(next);
        if g_next.abs() >= gx.abs() {
            break;
        }
        x = next;
        gx = g_next;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(dim: f64, p: f64, mu: f64) -> ProblemParams {
        ProblemParams::new(dim, p, mu, 1.0).unwrap()
    }

    #[test]
    fn mu_bar_values() {
        assert_eq!(mu_bar(&params(3.0, 2.0, 0.0)).unwrap(), 0.25);
        assert_eq!(mu_bar(&params(4.0, 2.0, 0.0)).unwrap(), 1.0);
        let v = mu_bar(&params(5.0, 3.0, 0.0)).unwrap();
        assert!((v - 8.0 / 27.0).abs() < 1e-15);
        let bad = ProblemParams {
            dim: 3.0,
            p: 3.5,
            mu: 0.0,
            m: 1.0,
        };
        assert!(mu_bar(&bad).is_err());
    }

    #[test]
    fn gamma_mu_special_points() {
        let pr = params(3.0, 2.0, 3.0 / 16.0);
        assert_eq!(gamma_mu(0.0, &pr), pr.mu);
        assert!((gamma_mu(0.5, &pr) - (pr.mu - 0.25)).abs() < 1e-15);
        assert!(gamma_mu(0.25, &pr).abs() < 1e-15);
    }

    #[test]
    fn closed_form_roots() {
        let e = solve_exponents(&params(3.0, 2.0, 3.0 / 16.0), DEFAULT_TOL).unwrap();
        assert!((e.gamma1 - 0.25).abs() < 1e-12);
        assert!((e.gamma2 - 0.75).abs() < 1e-12);
        let e = solve_exponents(&params(4.0, 3.0, 0.0), DEFAULT_TOL).unwrap();
        assert_eq!(e.gamma1, 0.0);
        assert_eq!(e.gamma2, 0.5);
    }

    /// Plain interval halving with no polishing, run to 1e-12.
    fn halving_oracle(pr: &ProblemParams, mut lo: f64, mut hi: f64) -> f64 {
        let s_lo = gamma_mu(lo, pr).signum();
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if gamma_mu(mid, pr).signum() == s_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn general_p_matches_halving_oracle() {
        let pr = params(4.0, 3.0, 0.02);
        let e = solve_exponents(&pr, DEFAULT_TOL).unwrap();
        let g1 = halving_oracle(&pr, 0.0, 1.0 / 3.0);
        let g2 = halving_oracle(&pr, 1.0 / 3.0, 0.5);
        assert!((e.gamma1 - g1).abs() < 2e-12, "{} vs {}", e.gamma1, g1);
        assert!((e.gamma2 - g2).abs() < 2e-12, "{} vs {}", e.gamma2, g2);
    }

    #[test]
    fn rejects_nonpositive_tol() {
        assert!(solve_exponents(&params(3.0, 2.0, 0.1), 0.0).is_err());
    }

    fn valid_params() -> impl Strategy<Value = ProblemParams> {
        (2.0f64..8.0, 0.05f64..0.95, 0.0f64..0.999).prop_map(|(dim, s, frac)| {
            let p = 1.0 + s * (dim - 1.0);
            let bar = ((dim - p) / p).powf(p);
            ProblemParams {
                dim,
                p,
                mu: frac * bar,
                m: 1.0,
            }
        })
    }

    proptest! {
        #[test]
        fn sign_bracketing(pr in valid_params()) {
            let mid = pr.critical_exponent();
            let top = (pr.dim - pr.p) / (pr.p - 1.0);
            prop_assert!(gamma_mu(0.0, &pr) >= 0.0);
            prop_assert!(gamma_mu(mid, &pr) < 0.0);
            prop_assert!(gamma_mu(top, &pr) >= -1e-12);
        }

        #[test]
        fn monotone_on_each_side(pr in valid_params()) {
            let mid = pr.critical_exponent();
            let n = 50;
            for i in 1..n {
                let a = mid * i as f64 / n as f64;
                let b = mid * (i + 1) as f64 / n as f64;
                if i + 1 < n {
                    prop_assert!(gamma_mu(b, &pr) < gamma_mu(a, &pr));
                }
                let c = mid + mid * i as f64 / n as f64;
                let d = mid + mid * (i + 1) as f64 / n as f64;
                prop_assert!(gamma_mu(d, &pr) > gamma_mu(c, &pr));
            }
        }

        #[test]
        fn roots_are_ordered_with_small_residual(pr in valid_params()) {
            let e = solve_exponents(&pr, DEFAULT_TOL).unwrap();
            let mid = pr.critical_exponent();
            let top = (pr.dim - pr.p) / (pr.p - 1.0);
            prop_assert!(0.0 <= e.gamma1 && e.gamma1 < mid);
            prop_assert!(mid < e.gamma2 && e.gamma2 <= top);
            prop_assert!(gamma_mu(e.gamma1, &pr).abs() <= 1e-10);
            prop_assert!(gamma_mu(e.gamma2, &pr).abs() <= 1e-10);
        }

        #[test]
        fn p_two_closed_form(dim in 2.5f64..9.0, frac in 0.0f64..0.999) {
            let bar = ((dim - 2.0) / 2.0).powi(2);
            let pr = ProblemParams { dim, p: 2.0, mu: frac * bar, m: 1.0 };
            let e = solve_exponents(&pr, DEFAULT_TOL).unwrap();
            let s = bar.sqrt();
            let d = (bar - pr.mu).sqrt();
            prop_assert!((e.gamma1 - (s - d)).abs() < 1e-10);
            prop_assert!((e.gamma2 - (s + d)).abs() < 1e-10);
        }
    }
}

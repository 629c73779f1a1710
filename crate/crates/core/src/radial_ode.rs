//! Radial equation `-(r^{N-1}|u'|^{p-2}u')' = r^{N-1}(μ r^{-p} u^{p-1} - m u^{p-1} + f(u))`
//! in desingularized charts, and amplitude shooting for ground states.
//!
//! Near the origin the state is `(w, log u)` with `w = -r^{p-1}|u'|^{p-2}u'/u^{p-1}`:
//!
//! ```text
//! w' = Γ_μ(ψ(w))/r + r^{p-1}(-m + f(u)/u^{p-1}),     (log u)' = -ψ(w)/r,
//! ```
//!
//! and away from it `(φ, log u)` with `φ = w/r^{p-1}`:
//!
//! ```text
//! φ' = (p-1)|φ|^{p/(p-1)} - (N-1)φ/r + μ/r^p - m + f(u)/u^{p-1},   (log u)' = -ψ(φ),
//! ```
//!
//! where `ψ(x) = sign(x)|x|^{1/(p-1)}`. Both forms hold for either sign of the
//! chart variable, which lets the shooting classifier watch `w` cross zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion;
use crate::exponents::{self, Exponents};
use crate::ode::{self, Flow, StepControl};
use crate::params::{Nonlinearity, ProblemParams};

/// Which chart the stored variable `v` belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chart {
    #[serde(rename = "ORIGIN_W")]
    OriginW,
    #[serde(rename = "INFINITY_PHI")]
    InfinityPhi,
}

impl Chart {
    pub fn tag(self) -> &'static str {
        match self {
            Chart::OriginW => "ORIGIN_W",
            Chart::InfinityPhi => "INFINITY_PHI",
        }
    }

    pub fn from_tag(s: &str) -> Result<Self> {
        match s {
            "ORIGIN_W" => Ok(Chart::OriginW),
            "INFINITY_PHI" => Ok(Chart::InfinityPhi),
            other => Err(Error::Parse(format!("unknown chart '{other}'"))),
        }
    }
}

/// How an integration run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// Reached the requested end radius.
    Completed,
    /// Chart variable exceeded its cap: `u` is heading to a zero crossing.
    Blowup,
    /// Chart variable went negative: `u'` turned positive.
    Turnup,
    /// `log u` left its bounds or the state stopped being finite.
    Overflow,
}

impl Termination {
    pub fn tag(self) -> &'static str {
        match self {
            Termination::Completed => "COMPLETED",
            Termination::Blowup => "BLOWUP",
            Termination::Turnup => "TURNUP",
            Termination::Overflow => "OVERFLOW",
        }
    }

    pub fn from_tag(s: &str) -> Result<Self> {
        match s {
            "COMPLETED" => Ok(Termination::Completed),
            "BLOWUP" => Ok(Termination::Blowup),
            "TURNUP" => Ok(Termination::Turnup),
            "OVERFLOW" => Ok(Termination::Overflow),
            other => Err(Error::Parse(format!("unknown termination '{other}'"))),
        }
    }
}

/// Stopping thresholds applied after every accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Caps {
    /// Upper cap on the chart variable.
    pub v_max: f64,
    /// Stop as soon as the chart variable is negative.
    pub stop_on_negative: bool,
    pub logu_min: f64,
    pub logu_max: f64,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            v_max: 1e12,
            stop_on_negative: false,
            logu_min: -700.0,
            logu_max: 700.0,
        }
    }
}

/// A tabulated trajectory in one chart.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSolution {
    pub chart: Chart,
    pub r: Vec<f64>,
    pub logu: Vec<f64>,
    pub v: Vec<f64>,
    pub params: ProblemParams,
    pub f: Nonlinearity,
    /// Shooting amplitude `C` (`u ~ C r^{-γ₁}` at the origin).
    pub amplitude: f64,
    pub gamma1: f64,
    pub termination: Termination,
}

/// `sign(x)|x|^{1/(p-1)}`, computed through exp/log.
pub fn psi(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if a <= 1e-300 {
        return 0.0;
    }
    let mag = (a.ln() / (p - 1.0)).exp();
    if x < 0.0 {
        -mag
    } else {
        mag
    }
}

/// Right-hand side of the origin chart: `(dw/dr, dlogu/dr)`.
pub fn rhs_origin(r: f64, w: f64, logu: f64, params: &ProblemParams, f: &Nonlinearity) -> (f64, f64) {
    let p = params.p;
    let s = psi(w, p);
    // Γ_μ(ψ(w)) with ψ^{p-1} = w
    let gamma = w * ((p - 1.0) * s - (params.dim - p)) + params.mu;
    let source = -params.m + f.ratio(logu, p);
    let rp1 = ((p - 1.0) * r.ln()).exp();
    (gamma / r + rp1 * source, -s / r)
}

/// Right-hand side of the infinity chart: `(dφ/dr, dlogu/dr)`.
pub fn rhs_infinity(r: f64, phi: f64, logu: f64, params: &ProblemParams, f: &Nonlinearity) -> (f64, f64) {
    let p = params.p;
    let s = psi(phi, p);
    let dphi =
        (p - 1.0) * phi * s - (params.dim - 1.0) * phi / r + params.mu * r.powf(-p) - params.m + f.ratio(logu, p);
    (dphi, -s)
}

/// Chart-dispatched right-hand side.
pub fn rhs(chart: Chart, r: f64, v: f64, logu: f64, params: &ProblemParams, f: &Nonlinearity) -> (f64, f64) {
    match chart {
        Chart::OriginW => rhs_origin(r, v, logu, params, f),
        Chart::InfinityPhi => rhs_infinity(r, v, logu, params, f),
    }
}

/// Initial data `(r, v, log u)` for one chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialState {
    pub r: f64,
    pub v: f64,
    pub logu: f64,
}

/// Integrates one chart from `init` to `r_end` (forward or backward) with local
/// error `<= tol` per step. Cap events end the run early and are recorded in
/// [`RadialSolution::termination`]; the stored grid is always increasing in `r`.
pub fn integrate(
    chart: Chart,
    init: InitialState,
    r_end: f64,
    tol: f64,
    caps: &Caps,
    params: &ProblemParams,
    f: &Nonlinearity,
) -> Result<RadialSolution> {
    if !(init.r > 0.0 && r_end > 0.0) {
        return Err(Error::InvalidParams(format!(
            "radii must be positive (r0 = {}, r_end = {r_end})",
            init.r
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tol must be positive (got {tol})")));
    }
    let rhs_fn = |r: f64, y: &[f64; 2]| {
        let (dv, dl) = rhs(chart, r, y[0], y[1], params, f);
        [dv, dl]
    };
    let caps = *caps;
    let observe = |_r: f64, y: &[f64; 2]| {
        if !(y[1] >= caps.logu_min && y[1] <= caps.logu_max) {
            Flow::Stop(Termination::Overflow)
        } else if y[0] > caps.v_max {
            Flow::Stop(Termination::Blowup)
        } else if caps.stop_on_negative && y[0] < 0.0 {
            Flow::Stop(Termination::Turnup)
        } else {
            Flow::Continue
        }
    };
    let ctl = StepControl::with_tol(tol);
    let traj = ode::integrate(rhs_fn, init.r, [init.v, init.logu], r_end, &ctl, observe, |_, y| {
        if y[0] > 0.0 {
            Termination::Blowup
        } else {
            Termination::Overflow
        }
    })?;
    let mut r = traj.t;
    let mut v: Vec<f64> = traj.y.iter().map(|y| y[0]).collect();
    let mut logu: Vec<f64> = traj.y.iter().map(|y| y[1]).collect();
    if r_end < init.r {
        r.reverse();
        v.reverse();
        logu.reverse();
    }
    Ok(RadialSolution {
        chart,
        r,
        logu,
        v,
        params: *params,
        f: f.clone(),
        amplitude: f64::NAN,
        gamma1: f64::NAN,
        termination: traj.stop.unwrap_or(Termination::Completed),
    })
}

impl RadialSolution {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn r_first(&self) -> f64 {
        self.r[0]
    }

    pub fn r_last(&self) -> f64 {
        *self.r.last().expect("empty solution")
    }

    pub fn u(&self, i: usize) -> f64 {
        self.logu[i].exp()
    }

    /// `u'/u` at grid point `i`.
    pub fn log_derivative(&self, i: usize) -> f64 {
        let s = psi(self.v[i], self.params.p);
        match self.chart {
            Chart::OriginW => -s / self.r[i],
            Chart::InfinityPhi => -s,
        }
    }

    /// `u'` at grid point `i`.
    pub fn u_prime(&self, i: usize) -> f64 {
        self.u(i) * self.log_derivative(i)
    }

    /// `φ = -|u'|^{p-2}u'/u^{p-1}` at grid point `i`, whatever the chart.
    pub fn phi(&self, i: usize) -> f64 {
        match self.chart {
            Chart::OriginW => self.v[i] * self.r[i].powf(1.0 - self.params.p),
            Chart::InfinityPhi => self.v[i],
        }
    }

    fn derivs(&self, r: f64, v: f64, logu: f64) -> (f64, f64) {
        rhs(self.chart, r, v, logu, &self.params, &self.f)
    }

    /// Cubic Hermite interpolation of `(v, log u)` using the equation's own derivatives.
    pub fn interpolate(&self, r: f64) -> Result<(f64, f64)> {
        let n = self.r.len();
        if n == 0 {
            return Err(Error::OutOfGrid {
                r,
                lo: f64::NAN,
                hi: f64::NAN,
            });
        }
        let lo = self.r[0];
        let hi = self.r[n - 1];
        if !(r >= lo && r <= hi) {
            return Err(Error::OutOfGrid { r, lo, hi });
        }
        if n == 1 || r == hi {
            return Ok((self.v[n - 1], self.logu[n - 1]));
        }
        let i = match self.r.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
            Ok(i) => return Ok((self.v[i], self.logu[i])),
            Err(i) => i - 1,
        };
        let (r0, r1) = (self.r[i], self.r[i + 1]);
        let h = r1 - r0;
        let t = (r - r0) / h;
        let (dv0, dl0) = self.derivs(r0, self.v[i], self.logu[i]);
        let (dv1, dl1) = self.derivs(r1, self.v[i + 1], self.logu[i + 1]);
        let herm = |y0: f64, y1: f64, d0: f64, d1: f64| {
            let t2 = t * t;
            let t3 = t2 * t;
            (2.0 * t3 - 3.0 * t2 + 1.0) * y0
                + (t3 - 2.0 * t2 + t) * h * d0
                + (-2.0 * t3 + 3.0 * t2) * y1
                + (t3 - t2) * h * d1
        };
        Ok((
            herm(self.v[i], self.v[i + 1], dv0, dv1),
            herm(self.logu[i], self.logu[i + 1], dl0, dl1),
        ))
    }
}

/// Converts origin-chart data at `r_switch` into infinity-chart initial data.
pub fn handoff(origin: &RadialSolution, r_switch: f64) -> Result<InitialState> {
    if origin.chart != Chart::OriginW {
        return Err(Error::WrongChart {
            expected: "ORIGIN_W".into(),
            found: origin.chart.tag().into(),
        });
    }
    let (w, logu) = origin.interpolate(r_switch)?;
    if !(w > 0.0) {
        return Err(Error::Domain(format!("w({r_switch}) = {w:e} is not positive")));
    }
    Ok(InitialState {
        r: r_switch,
        v: w * r_switch.powf(1.0 - origin.params.p),
        logu,
    })
}

/// Outcome of one trajectory in the shooting dichotomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    #[serde(rename = "TYPE_BLOWUP")]
    Blowup,
    #[serde(rename = "TYPE_TURNUP")]
    Turnup,
    #[serde(rename = "UNDECIDED")]
    Undecided,
}

impl Classification {
    pub fn tag(self) -> &'static str {
        match self {
            Classification::Blowup => "TYPE_BLOWUP",
            Classification::Turnup => "TYPE_TURNUP",
            Classification::Undecided => "UNDECIDED",
        }
    }
}

/// Settings for [`shoot_ground_state`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingConfig {
    pub r0: f64,
    /// Radius where trajectories move from the origin chart to the infinity chart.
    pub r_switch: f64,
    pub r_max: f64,
    pub tol: f64,
    /// Relative amplitude tolerance for the bisection.
    pub tol_c: f64,
    /// Classification cap; `None` uses [`default_w_max`].
    pub w_max: Option<f64>,
    pub max_iter: usize,
    /// Replace the unstable far part of the shot with a backward-integrated tail.
    pub stable_tail: bool,
    /// Largest tolerated gap `|φ_lo - φ_hi|/φ_∞` between the final bracket trajectories
    /// before the tail takes over.
    pub splice_tol: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self {
            r0: 1e-6,
            r_switch: 1.0,
            r_max: 25.0,
            tol: 1e-10,
            tol_c: 1e-10,
            w_max: None,
            max_iter: 200,
            stable_tail: true,
            splice_tol: 1e-7,
        }
    }
}

/// `max(10 γ₂^{p-1}, 10 ((m+1)/(p-1))^{p-1})`.
pub fn default_w_max(params: &ProblemParams, exps: &Exponents) -> f64 {
    let p = params.p;
    (10.0 * exps.gamma2.powf(p - 1.0)).max(10.0 * ((params.m + 1.0) / (p - 1.0)).powf(p - 1.0))
}

/// One bisection step record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub amplitude: f64,
    pub class: Classification,
    /// Radius where the trajectory was classified.
    pub event_r: f64,
}

/// A single shot: origin-chart leg, optional infinity-chart leg, and its class.
#[derive(Debug, Clone)]
pub struct Shot {
    pub amplitude: f64,
    pub class: Classification,
    pub event_r: f64,
    pub origin: RadialSolution,
    pub infinity: Option<RadialSolution>,
}

/// Converged ground state and the shooting diagnostics.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub amplitude: f64,
    pub origin: RadialSolution,
    pub infinity: RadialSolution,
    pub history: Vec<ShotRecord>,
    /// Class observed for amplitudes above the converged value.
    pub large_amplitude_class: Classification,
    /// Final bracket `[C_lo, C_hi]` in increasing order.
    pub bracket: (f64, f64),
    /// Radius from which the infinity leg comes from the backward tail (`r_max` if none).
    pub splice_radius: f64,
    /// `|φ_shot - φ_tail|` at the splice radius.
    pub splice_defect: f64,
    pub exponents: Exponents,
}

/// Origin-chart start `w(r0) = γ₁^{p-1}`, `log u(r0) = log C - γ₁ log r0`.
pub fn origin_start(params: &ProblemParams, gamma1: f64, amplitude: f64, r0: f64) -> InitialState {
    InitialState {
        r: r0,
        v: gamma1.powf(params.p - 1.0),
        logu: amplitude.ln() - gamma1 * r0.ln(),
    }
}

struct Shooter<'a> {
    params: &'a ProblemParams,
    f: &'a Nonlinearity,
    cfg: ShootingConfig,
    gamma1: f64,
    w_max: f64,
}

impl Shooter<'_> {
    fn caps(&self) -> Caps {
        Caps {
            v_max: self.w_max,
            stop_on_negative: true,
            ..Caps::default()
        }
    }

    fn shoot(&self, amplitude: f64) -> Result<Shot> {
        let init = origin_start(self.params, self.gamma1, amplitude, self.cfg.r0);
        let r_switch = self.cfg.r_switch.min(self.cfg.r_max);
        let mut origin = match integrate(
            Chart::OriginW,
            init,
            r_switch,
            self.cfg.tol,
            &self.caps(),
            self.params,
            self.f,
        ) {
            Ok(s) => s,
            Err(Error::StepSizeUnderflow { r, v, .. }) => {
                // a finite-radius singularity of w only happens on the blow-up side
                let class = if v >= 0.0 {
                    Classification::Blowup
                } else {
                    Classification::Turnup
                };
                return Ok(Shot {
                    amplitude,
                    class,
                    event_r: r,
                    origin: RadialSolution {
                        chart: Chart::OriginW,
                        r: vec![init.r],
                        logu: vec![init.logu],
                        v: vec![init.v],
                        params: *self.params,
                        f: self.f.clone(),
                        amplitude,
                        gamma1: self.gamma1,
                        termination: Termination::Blowup,
                    },
                    infinity: None,
                });
            }
            Err(e) => return Err(e),
        };
        origin.amplitude = amplitude;
        origin.gamma1 = self.gamma1;
        if let Some(class) = classify(&origin) {
            let event_r = origin.r_last();
            return Ok(Shot {
                amplitude,
                class,
                event_r,
                origin,
                infinity: None,
            });
        }
        if r_switch >= self.cfg.r_max {
            let event_r = origin.r_last();
            return Ok(Shot {
                amplitude,
                class: Classification::Undecided,
                event_r,
                origin,
                infinity: None,
            });
        }
        if !(*origin.v.last().unwrap() > 0.0) {
            // u' >= 0 at the switch (u ≡ const is the borderline case)
            let event_r = origin.r_last();
            return Ok(Shot {
                amplitude,
                class: Classification::Turnup,
                event_r,
                origin,
                infinity: None,
            });
        }
        let start = handoff(&origin, r_switch)?;
        let mut inf = match integrate(
            Chart::InfinityPhi,
            start,
            self.cfg.r_max,
            self.cfg.tol,
            &self.caps(),
            self.params,
            self.f,
        ) {
            Ok(s) => s,
            Err(Error::StepSizeUnderflow { r, v, .. }) => {
                let class = if v >= 0.0 {
                    Classification::Blowup
                } else {
                    Classification::Turnup
                };
                return Ok(Shot {
                    amplitude,
                    class,
                    event_r: r,
                    origin,
                    infinity: None,
                });
            }
            Err(e) => return Err(e),
        };
        inf.amplitude = amplitude;
        inf.gamma1 = self.gamma1;
        let class = classify(&inf).unwrap_or(Classification::Undecided);
        let event_r = inf.r_last();
        Ok(Shot {
            amplitude,
            class,
            event_r,
            origin,
            infinity: Some(inf),
        })
    }
}

fn classify(sol: &RadialSolution) -> Option<Classification> {
    match sol.termination {
        Termination::Completed => None,
        Termination::Blowup => Some(Classification::Blowup),
        Termination::Turnup => Some(Classification::Turnup),
        Termination::Overflow => {
            if *sol.v.last().unwrap() >= 0.0 {
                Some(Classification::Blowup)
            } else {
                Some(Classification::Turnup)
            }
        }
    }
}

/// Classifies a single amplitude with the shooting settings.
pub fn shoot_once(params: &ProblemParams, f: &Nonlinearity, amplitude: f64, cfg: &ShootingConfig) -> Result<Shot> {
    let (shooter, _) = make_shooter(params, f, cfg)?;
    shooter.shoot(amplitude)
}

fn make_shooter<'a>(
    params: &'a ProblemParams,
    f: &'a Nonlinearity,
    cfg: &ShootingConfig,
) -> Result<(Shooter<'a>, Exponents)> {
    params.validate_for_infinity()?;
    f.validate(params)?;
    if !(cfg.r0 > 0.0 && cfg.r0 < cfg.r_switch && cfg.r_switch > 0.0 && cfg.r_max > cfg.r0) {
        return Err(Error::InvalidParams(format!(
            "need 0 < r0 < r_switch and r0 < r_max (r0 = {}, r_switch = {}, r_max = {})",
            cfg.r0, cfg.r_switch, cfg.r_max
        )));
    }
    if !(cfg.tol > 0.0 && cfg.tol_c > 0.0) {
        return Err(Error::InvalidParams("tol and tol_C must be positive".into()));
    }
    let exps = exponents::solve_exponents(params, exponents::DEFAULT_TOL)?;
    let w_max = cfg.w_max.unwrap_or_else(|| default_w_max(params, &exps));
    Ok((
        Shooter {
            params,
            f,
            cfg: *cfg,
            gamma1: exps.gamma1,
            w_max,
        },
        exps,
    ))
}

/// Geometric search for a bracket around `guess`: returns `(C_lo, C_hi)` whose
/// shots classify differently.
pub fn bracket_amplitude(
    params: &ProblemParams,
    f: &Nonlinearity,
    guess: f64,
    cfg: &ShootingConfig,
) -> Result<(f64, f64)> {
    let (shooter, _) = make_shooter(params, f, cfg)?;
    let first = shooter.shoot(guess)?;
    if first.class == Classification::Undecided {
        return Ok((guess * (1.0 - 1e-3), guess * (1.0 + 1e-3)));
    }
    let mut lo = guess;
    let mut hi = guess;
    for _ in 0..60 {
        lo *= 0.5;
        hi *= 2.0;
        for c in [lo, hi] {
            let s = shooter.shoot(c)?;
            if s.class != first.class {
                return Ok(if c < guess { (c, guess) } else { (guess, c) });
            }
        }
    }
    Err(Error::NoGroundState(format!(
        "every amplitude tried around {guess} classifies as {}",
        first.class.tag()
    )))
}

/// Bisects the amplitude between two differently classified shots until
/// `|C_hi - C_lo| <= tol_C · C*`, then assembles the ground state.
pub fn shoot_ground_state(
    params: &ProblemParams,
    f: &Nonlinearity,
    c_lo: f64,
    c_hi: f64,
    cfg: &ShootingConfig,
) -> Result<GroundState> {
    let (shooter, exps) = make_shooter(params, f, cfg)?;
    let (mut lo, mut hi) = if c_lo <= c_hi { (c_lo, c_hi) } else { (c_hi, c_lo) };
    if !(lo > 0.0) {
        return Err(Error::InvalidParams("amplitudes must be positive".into()));
    }
    let mut shot_lo = shooter.shoot(lo)?;
    let mut shot_hi = shooter.shoot(hi)?;
    let mut history = vec![record(&shot_lo), record(&shot_hi)];
    if shot_lo.class == shot_hi.class {
        return Err(Error::SameClassification(shot_lo.class.tag().into()));
    }
    let mut exact: Option<Shot> = None;
    for s in [&shot_lo, &shot_hi] {
        if s.class == Classification::Undecided {
            exact = Some(s.clone());
        }
    }
    let mut converged = exact.is_some();
    let mut iters = 0;
    while !converged {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= cfg.tol_c * mid || mid <= lo || mid >= hi {
            converged = true;
            break;
        }
        if iters == cfg.max_iter {
            break;
        }
        iters += 1;
        let s = shooter.shoot(mid)?;
        history.push(record(&s));
        match s.class {
            Classification::Undecided => {
                lo = mid;
                hi = mid;
                exact = Some(s);
                converged = true;
            }
            c if c == shot_lo.class => {
                lo = mid;
                shot_lo = s;
            }
            _ => {
                hi = mid;
                shot_hi = s;
            }
        }
    }
    if !converged {
        return Err(Error::NoGroundState(format!(
            "bracket [{lo}, {hi}] did not shrink to tol_C within {} iterations",
            cfg.max_iter
        )));
    }
    let large_amplitude_class = if shot_hi.class != Classification::Undecided {
        shot_hi.class
    } else {
        other_class(shot_lo.class)
    };
    let star = match exact {
        Some(s) => s,
        None => shooter.shoot(0.5 * (lo + hi))?,
    };
    let amplitude = star.amplitude;
    let mut origin = star.origin.clone();
    origin.amplitude = amplitude;

    let r_switch = cfg.r_switch.min(cfg.r_max);
    let star_inf = match star.infinity {
        Some(s) if origin.r_last() >= r_switch => s,
        _ => {
            return Err(Error::NoGroundState(format!(
                "converged amplitude {amplitude} is classified before the chart switch at r = {}",
                star.event_r
            )))
        }
    };

    let (infinity, splice_radius, splice_defect) = if cfg.stable_tail {
        let splice = splice_radius(&star_inf, &shot_lo, &shot_hi, cfg, params, r_switch)?;
        attach_tail(&star_inf, splice, cfg, params, f, exps.gamma1)?
    } else {
        (star_inf, cfg.r_max, 0.0)
    };

    Ok(GroundState {
        amplitude,
        origin,
        infinity,
        history,
        large_amplitude_class,
        bracket: (lo.min(hi), lo.max(hi)),
        splice_radius,
        splice_defect,
        exponents: exps,
    })
}

/// [`bracket_amplitude`] around `guess` followed by [`shoot_ground_state`].
pub fn find_ground_state(
    params: &ProblemParams,
    f: &Nonlinearity,
    guess: f64,
    cfg: &ShootingConfig,
) -> Result<GroundState> {
    let (lo, hi) = bracket_amplitude(params, f, guess, cfg)?;
    shoot_ground_state(params, f, lo, hi, cfg)
}

fn other_class(c: Classification) -> Classification {
    match c {
        Classification::Blowup => Classification::Turnup,
        Classification::Turnup => Classification::Blowup,
        Classification::Undecided => Classification::Undecided,
    }
}

fn record(s: &Shot) -> ShotRecord {
    ShotRecord {
        amplitude: s.amplitude,
        class: s.class,
        event_r: s.event_r,
    }
}

/// Largest radius on the converged trajectory up to which the two final bracket
/// trajectories still agree to `splice_tol` (relative to `φ_∞`).
fn splice_radius(
    star: &RadialSolution,
    lo: &Shot,
    hi: &Shot,
    cfg: &ShootingConfig,
    params: &ProblemParams,
    r_switch: f64,
) -> Result<f64> {
    let (Some(a), Some(b)) = (&lo.infinity, &hi.infinity) else {
        return Ok(r_switch);
    };
    let thresh = cfg.splice_tol * params.phi_inf();
    let limit = a.r_last().min(b.r_last()).min(star.r_last());
    let mut best = r_switch;
    for &r in star.r.iter().filter(|&&r| r <= limit) {
        let (va, _) = a.interpolate(r)?;
        let (vb, _) = b.interpolate(r)?;
        if (va - vb).abs() > thresh {
            break;
        }
        best = r;
    }
    Ok(best)
}

/// Integrates the infinity chart backward from well beyond `r_max` down to the
/// splice radius. Backward in `r` the decaying branch is attracting, so the far
/// start value is forgotten; `log u` at the far end is adjusted until the tail
/// meets the shot's `log u` at the splice.
fn attach_tail(
    star: &RadialSolution,
    splice: f64,
    cfg: &ShootingConfig,
    params: &ProblemParams,
    f: &Nonlinearity,
    gamma1: f64,
) -> Result<(RadialSolution, f64, f64)> {
    let series = expansion::build_series(params, 0)?;
    let alpha0 = series.alpha0;
    let phi_inf = series.phi_inf;
    let r_far = cfg.r_max + 36.0 / alpha0;
    let (phi_splice, logu_splice) = star.interpolate(splice)?;
    let slope = phi_inf.powf(1.0 / (params.p - 1.0));
    let mut logu_far = logu_splice - slope * (r_far - splice);
    let caps = Caps {
        logu_min: f64::NEG_INFINITY,
        logu_max: f64::INFINITY,
        ..Caps::default()
    };
    let tol = cfg.tol.min(1e-12);
    let mut tail = None;
    for _ in 0..12 {
        let far = integrate(
            Chart::InfinityPhi,
            InitialState {
                r: r_far,
                v: phi_inf,
                logu: logu_far,
            },
            cfg.r_max,
            tol,
            &caps,
            params,
            f,
        )?;
        let at_max = InitialState {
            r: cfg.r_max,
            v: far.v[0],
            logu: far.logu[0],
        };
        let near = integrate(Chart::InfinityPhi, at_max, splice, tol, &caps, params, f)?;
        if near.termination != Termination::Completed || near.r[0] > splice {
            return Err(Error::NoGroundState(format!(
                "backward tail ended with {} at r = {:e}",
                near.termination.tag(),
                near.r[0]
            )));
        }
        let shift = logu_splice - near.logu[0];
        logu_far += shift;
        let done = shift.abs() <= 1e-14 * logu_far.abs().max(1.0);
        tail = Some(near);
        if done {
            break;
        }
    }
    let mut tail = tail.expect("at least one pass");
    // close the last shift exactly; the coupling through f is far below tolerance by now
    let shift = logu_splice - tail.logu[0];
    for l in &mut tail.logu {
        *l += shift;
    }
    let defect = (tail.v[0] - phi_splice).abs();

    let keep = star.r.iter().take_while(|&&r| r < splice).count();
    let mut r: Vec<f64> = star.r[..keep].to_vec();
    let mut v: Vec<f64> = star.v[..keep].to_vec();
    let mut logu: Vec<f64> = star.logu[..keep].to_vec();
    r.extend_from_slice(&tail.r);
    v.extend_from_slice(&tail.v);
    logu.extend_from_slice(&tail.logu);
    Ok((
        RadialSolution {
            chart: Chart::InfinityPhi,
            r,
            logu,
            v,
            params: *params,
            f: f.clone(),
            amplitude: star.amplitude,
            gamma1,
            termination: Termination::Completed,
        },
        splice,
        defect,
    ))
}

impl GroundState {
    /// True when, sorted by amplitude, the recorded classes switch exactly once.
    pub fn history_is_monotone(&self) -> bool {
        let mut h: Vec<&ShotRecord> = self
            .history
            .iter()
            .filter(|s| s.class != Classification::Undecided)
            .collect();
        h.sort_by(|a, b| a.amplitude.partial_cmp(&b.amplitude).unwrap());
        h.windows(2).filter(|w| w[0].class != w[1].class).count() <= 1
    }
}

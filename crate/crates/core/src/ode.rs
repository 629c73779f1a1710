//! Dormand–Prince 5(4) with an embedded error estimate and step-size control.
//!
//! Fixed-size state vectors; the caller supplies a right-hand side and an
//! observer that may stop the integration after any accepted step.

use crate::error::{Error, Result};

// Butcher tableau (Dormand & Prince 1980).
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b̂ (fifth minus fourth order weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Step control settings.
#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step magnitude; `None` picks a fraction of the starting scale.
    pub first_step: Option<f64>,
    pub max_step: f64,
    pub max_steps: usize,
}

impl StepControl {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            first_step: None,
            max_step: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }
}

/// Why the observer halted the integration.
pub enum Flow<S> {
    Continue,
    Stop(S),
}

/// Result of a run: accepted points (including the start) and an optional stop payload.
pub struct Trajectory<const D: usize, S> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; D]>,
    pub stop: Option<S>,
}

/// Integrates `y' = rhs(t, y)` from `t0` toward `t_end` (either direction).
///
/// `observe` runs on each accepted state; returning `Flow::Stop` ends the run
/// with that state stored. A non-finite derivative or state also ends the run
/// through `on_nonfinite`.
pub fn integrate<const D: usize, S, R, O, N>(
    rhs: R,
    t0: f64,
    y0: [f64; D],
    t_end: f64,
    ctl: &StepControl,
    mut observe: O,
    on_nonfinite: N,
) -> Result<Trajectory<D, S>>
where
    R: Fn(f64, &[f64; D]) -> [f64; D],
    O: FnMut(f64, &[f64; D]) -> Flow<S>,
    N: Fn(f64, &[f64; D]) -> S,
{
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let span = (t_end - t0).abs();
    let mut t = t0;
    let mut y = y0;
    let mut out = Trajectory {
        t: vec![t0],
        y: vec![y0],
        stop: None,
    };
    if span == 0.0 {
        return Ok(out);
    }
    let mut k1 = rhs(t, &y);
    if !all_finite(&k1) {
        out.stop = Some(on_nonfinite(t, &y));
        return Ok(out);
    }
    let mut h = ctl
        .first_step
        .unwrap_or_else(|| initial_step(t0, &y, &k1, span, ctl))
        .min(span)
        .min(ctl.max_step);
    let mut steps = 0usize;
    let mut err_prev = 1e-4f64;

    while (t_end - t) * dir > 0.0 {
        if steps >= ctl.max_steps {
            return Err(Error::NoConvergence(format!(
                "integrator step budget exhausted at t = {t:e}"
            )));
        }
        steps += 1;
        let remaining = (t_end - t).abs();
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let hs = h * dir;
        let mut ytmp = [0.0; D];

        for i in 0..D {
            ytmp[i] = y[i] + hs * A21 * k1[i];
        }
        let k2 = rhs(t + C2 * hs, &ytmp);
        for i in 0..D {
            ytmp[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
        }
        let k3 = rhs(t + C3 * hs, &ytmp);
        for i in 0..D {
            ytmp[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        let k4 = rhs(t + C4 * hs, &ytmp);
        for i in 0..D {
            ytmp[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        let k5 = rhs(t + C5 * hs, &ytmp);
        for i in 0..D {
            ytmp[i] = y[i] + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let t_new = if last { t_end } else { t + hs };
        let k6 = rhs(t + hs, &ytmp);
        let mut y_new = [0.0; D];
        for i in 0..D {
            y_new[i] = y[i] + hs * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        let k7 = rhs(t_new, &y_new);

        let mut err = 0.0f64;
        let mut finite = all_finite(&y_new) && all_finite(&k7);
        for i in 0..D {
            let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = ctl.atol + ctl.rtol * y[i].abs().max(y_new[i].abs());
            let ratio = e / scale;
            err += ratio * ratio;
            finite &= e.is_finite();
        }
        err = (err / D as f64).sqrt();

        if !finite {
            // shrink and retry; a genuine singularity eventually underflows the step
            h *= MIN_FACTOR;
            if h <= min_step(t) {
                out.stop = Some(on_nonfinite(t, &y));
                return Ok(out);
            }
            continue;
        }

        if err <= 1.0 {
            t = t_new;
            y = y_new;
            k1 = k7;
            out.t.push(t);
            out.y.push(y);
            if let Flow::Stop(s) = observe(t, &y) {
                out.stop = Some(s);
                return Ok(out);
            }
            // PI controller
            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            err_prev = err.max(1e-4);
            h = (h * factor).min(ctl.max_step);
        } else {
            let factor = (SAFETY * err.powf(-1.0 / 5.0)).clamp(MIN_FACTOR, 1.0);
            h *= factor;
            if h <= min_step(t) {
                return Err(Error::StepSizeUnderflow {
                    r: t,
                    v: y[0],
                    logu: if D > 1 { y[1] } else { f64::NAN },
                });
            }
        }
    }
    Ok(out)
}

fn min_step(t: f64) -> f64 {
    16.0 * f64::EPSILON * t.abs().max(1e-300)
}

fn all_finite<const D: usize>(v: &[f64; D]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn initial_step<const D: usize>(t0: f64, y0: &[f64; D], f0: &[f64; D], span: f64, ctl: &StepControl) -> f64 {
    let mut d0 = 0.0f64;
    let mut d1 = 0.0f64;
    for i in 0..D {
        let sc = ctl.atol + ctl.rtol * y0[i].abs();
        d0 += (y0[i] / sc).powi(2);
        d1 += (f0[i] / sc).powi(2);
    }
    d0 = (d0 / D as f64).sqrt();
    d1 = (d1 / D as f64).sqrt();
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    // never start coarser than the local scale of t
    let local = if t0 != 0.0 { 1e-3 * t0.abs() } else { span * 1e-6 };
    h.min(local.max(span * 1e-12)).min(span)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run<const D: usize>(
        rhs: impl Fn(f64, &[f64; D]) -> [f64; D],
        t0: f64,
        y0: [f64; D],
        t1: f64,
        tol: f64,
    ) -> Trajectory<D, ()> {
        integrate(
            rhs,
            t0,
            y0,
            t1,
            &StepControl::with_tol(tol),
            |_, _| Flow::Continue,
            |_, _| (),
        )
        .unwrap()
    }

    #[test]
    fn exponential_growth() {
        let tr = run(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], 2.0, 1e-11);
        let end = tr.y.last().unwrap()[0];
        assert!((end - 2f64.exp()).abs() < 1e-9 * 2f64.exp());
        assert_eq!(*tr.t.last().unwrap(), 2.0);
    }

    #[test]
    fn harmonic_backward() {
        let tr = run(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            3.0,
            [3f64.sin(), 3f64.cos()],
            0.5,
            1e-11,
        );
        let end = tr.y.last().unwrap();
        assert!((end[0] - 0.5f64.sin()).abs() < 1e-9);
        assert!((end[1] - 0.5f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn observer_stops() {
        let tr = integrate(
            |_, y: &[f64; 1]| [y[0]],
            0.0,
            [1.0],
            10.0,
            &StepControl::with_tol(1e-8),
            |t, _| if t > 1.0 { Flow::Stop(t) } else { Flow::Continue },
            |t, _| -t,
        )
        .unwrap();
        assert!(tr.stop.unwrap() > 1.0);
        assert!(*tr.t.last().unwrap() < 10.0);
    }

    #[test]
    fn blowup_is_reported_not_looped() {
        // y' = y², y(0) = 1 blows up at t = 1
        let tr = integrate(
            |_, y: &[f64; 1]| [y[0] * y[0]],
            0.0,
            [1.0],
            2.0,
            &StepControl::with_tol(1e-9),
            |_, y| if y[0] > 1e12 { Flow::Stop(true) } else { Flow::Continue },
            |_, _| false,
        );
        match tr {
            Ok(tr) => assert!(tr.stop.is_some()),
            Err(Error::StepSizeUnderflow { r, .. }) => assert!((r - 1.0).abs() < 1e-3),
            Err(e) => panic!("unexpected {e}"),
        }
    }
}

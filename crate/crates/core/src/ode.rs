//! Dormand–Prince 5(4) integrator with event location.
//!
//! Events are located by Brent iteration on the event function evaluated at
//! the end of a single Runge–Kutta step of trial length taken from the start
//! of the step in which the sign change occurred.

use crate::error::{Error, Result};
use crate::roots::brent;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-14,
            h_init: 1e-3,
            h_max: 0.05,
            max_steps: 2_000_000,
        }
    }
}

/// Direction of the sign change an event reacts to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossing {
    Rising,
    Falling,
    Either,
}

impl Crossing {
    fn fires(self, before: f64, after: f64) -> bool {
        match self {
            Crossing::Rising => before < 0.0 && after >= 0.0,
            Crossing::Falling => before > 0.0 && after <= 0.0,
            Crossing::Either => {
                (before < 0.0 && after >= 0.0) || (before > 0.0 && after <= 0.0)
            }
        }
    }
}

/// Event function `g(t, y)`.
pub type EventFn<'a, const N: usize> = Box<dyn Fn(f64, &[f64; N]) -> f64 + 'a>;

/// Terminal event `g(t, y) = 0`.
pub struct Event<'a, const N: usize> {
    pub g: EventFn<'a, N>,
    pub crossing: Crossing,
}

impl<'a, const N: usize> Event<'a, N> {
    pub fn new(crossing: Crossing, g: impl Fn(f64, &[f64; N]) -> f64 + 'a) -> Self {
        Self {
            g: Box::new(g),
            crossing,
        }
    }
}

/// End state of an integration.
#[derive(Debug, Clone, Copy)]
pub struct Outcome<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    /// Index of the event that stopped the integration, if any.
    pub event: Option<usize>,
    pub steps: usize,
}

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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combo<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

/// One Dormand–Prince step; returns the fifth-order solution and the error estimate.
pub fn dopri_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], h: f64) -> ([f64; N], [f64; N])
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let k1 = f(t, y);
    let k2 = f(t + C2 * h, &combo(y, h, &[(A21, &k1)]));
    let k3 = f(t + C3 * h, &combo(y, h, &[(A31, &k1), (A32, &k2)]));
    let k4 = f(t + C4 * h, &combo(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(
        t + C5 * h,
        &combo(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = f(
        t + h,
        &combo(y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    );
    let y_new = combo(y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = f(t + h, &y_new);
    let mut err = [0.0; N];
    for i in 0..N {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    (y_new, err)
}

/// Integrates `y' = f(t, y)` from `t0` towards `t_end`, stopping at the first
/// event. `observe` sees the initial state and every accepted step.
pub fn integrate<const N: usize, F, O>(
    f: &F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &OdeOptions,
    events: &[Event<'_, N>],
    mut observe: O,
) -> Result<Outcome<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    O: FnMut(f64, &[f64; N]),
{
    let (mut t, mut y) = (t0, y0);
    observe(t, &y);
    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.g)(t, &y)).collect();
    let mut h = opts.h_init.min(opts.h_max).min(t_end - t0);
    let mut steps = 0;
    while t < t_end {
        if steps >= opts.max_steps {
            return Err(Error::StepLimit {
                t,
                max_steps: opts.max_steps,
            });
        }
        h = h.min(t_end - t);
        if h <= 1e-14 * t.abs().max(1.0) && t_end - t > h {
            return Err(Error::StepUnderflow { t });
        }
        let (y_new, err) = dopri_step(f, t, &y, h);
        let mut norm = 0.0;
        for i in 0..N {
            let scale = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            norm += (err[i] / scale).powi(2);
        }
        let norm = (norm / N as f64).sqrt();
        if !norm.is_finite() {
            h *= 0.2;
            continue;
        }
        if norm > 1.0 {
            h *= (0.9 * norm.powf(-0.2)).max(0.2);
            continue;
        }
        steps += 1;
        let t_new = t + h;
        // earliest event in this step
        let mut hit: Option<(f64, usize)> = None;
        for (idx, ev) in events.iter().enumerate() {
            let g_new = (ev.g)(t_new, &y_new);
            if ev.crossing.fires(g_prev[idx], g_new) {
                let (ts, ys) = (t, y);
                let trial = |tau: f64| (ev.g)(ts + tau, &dopri_step(f, ts, &ys, tau).0);
                let tau = brent(trial, 0.0, h, g_prev[idx], g_new, 1e-15 * (1.0 + t.abs()))
                    .unwrap_or(h);
                if hit.is_none_or(|(best, _)| tau < best) {
                    hit = Some((tau, idx));
                }
            }
            g_prev[idx] = g_new;
        }
        if let Some((tau, idx)) = hit {
            let y_ev = if tau == h { y_new } else { dopri_step(f, t, &y, tau).0 };
            observe(t + tau, &y_ev);
            return Ok(Outcome {
                t: t + tau,
                y: y_ev,
                event: Some(idx),
                steps,
            });
        }
        t = t_new;
        y = y_new;
        observe(t, &y);
        let grow = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * grow).min(opts.h_max);
    }
    Ok(Outcome {
        t,
        y,
        event: None,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_and_zero_event() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let ev = [Event::new(Crossing::Falling, |_t, y: &[f64; 2]| y[0])];
        let out = integrate(&f, 0.0, [0.0, 1.0], 10.0, &OdeOptions::default(), &ev, |_, _| {})
            .unwrap();
        assert_eq!(out.event, Some(0));
        assert!((out.t - std::f64::consts::PI).abs() < 1e-12, "{}", out.t);
        let free = integrate(&f, 0.0, [1.0, 0.0], 20.0, &OdeOptions::default(), &[], |_, _| {})
            .unwrap();
        assert!((free.y[0] - 20f64.cos()).abs() < 1e-10);
        assert_eq!(free.t, 20.0);
    }

    #[test]
    fn step_budget_is_enforced() {
        let f = |_t: f64, y: &[f64; 1]| [y[0]];
        let opts = OdeOptions {
            max_steps: 3,
            ..Default::default()
        };
        assert!(matches!(
            integrate(&f, 0.0, [1.0], 100.0, &opts, &[], |_, _| {}),
            Err(Error::StepLimit { .. })
        ));
    }
}

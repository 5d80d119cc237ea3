// SPDX-License-Identifier: Apache-2.0

//! Numerical integration of `ẋ = y, ẏ = −2G(x, y)` and conservation drift.

use alloc::vec::Vec;

use crate::expr::{EvalError, Expr, Point};
use crate::sample::Sampler;
use crate::spray::SemiSpray;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    /// Classical fixed-step fourth-order Runge–Kutta.
    Rk4,
    /// Dormand–Prince 5(4) with step rejection; `tol` bounds the mixed
    /// absolute/relative local error per step.
    Rk45 { tol: f64 },
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Rk4 => "rk4",
            Method::Rk45 { .. } => "rk45",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Point>,
    pub method: Method,
    /// Fixed step, or the initial step for adaptive methods.
    pub dt: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &Point)> {
        Some((*self.times.last()?, self.states.last()?))
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum IntegrationErrorKind {
    #[error("dt must be positive and finite")]
    BadStep,
    #[error("initial state lies on a singular locus")]
    SingularStart,
    #[error("state entered a singular locus at t = {0}")]
    SingularLocus(f64),
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
    #[error("adaptive step underflow at t = {0}")]
    StepUnderflow(f64),
    #[error(transparent)]
    Eval(EvalError),
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("{kind}")]
pub struct IntegrationError {
    pub kind: IntegrationErrorKind,
    /// States accepted before the failure.
    pub partial: Trajectory,
}

/// Exclusions closer to zero than this abort integration.
pub const SINGULAR_EPS: f64 = 1e-12;

struct Rhs<'a> {
    s: &'a SemiSpray,
    scratch: Point,
}

impl Rhs<'_> {
    fn set(&mut self, u: &[f64]) {
        let n = self.s.n;
        self.scratch.x.copy_from_slice(&u[..n]);
        self.scratch.y.copy_from_slice(&u[n..]);
    }

    fn eval(&mut self, u: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        let n = self.s.n;
        self.set(u);
        out[..n].copy_from_slice(&u[n..]);
        for (a, g) in self.s.g.iter().enumerate() {
            out[n + a] = -2.0 * g.eval(&self.scratch)?;
        }
        Ok(())
    }

    fn singular(&mut self, u: &[f64]) -> bool {
        self.set(u);
        let p = &self.scratch;
        self.s.singular.iter().any(|ex| match ex.eval(p) {
            Ok(v) => v.abs() < SINGULAR_EPS,
            Err(_) => true,
        })
    }
}

fn axpy(out: &mut [f64], u: &[f64], terms: &[(f64, &[f64])], h: f64) {
    for (k, o) in out.iter_mut().enumerate() {
        *o = u[k] + h * terms.iter().map(|(c, v)| c * v[k]).sum::<f64>();
    }
}

fn rk4_step(rhs: &mut Rhs<'_>, u: &[f64], h: f64, out: &mut [f64]) -> Result<(), EvalError> {
    let m = u.len();
    let (mut k1, mut k2, mut k3, mut k4) = (
        alloc::vec![0.0; m],
        alloc::vec![0.0; m],
        alloc::vec![0.0; m],
        alloc::vec![0.0; m],
    );
    let mut tmp = alloc::vec![0.0; m];
    rhs.eval(u, &mut k1)?;
    axpy(&mut tmp, u, &[(0.5, &k1)], h);
    rhs.eval(&tmp, &mut k2)?;
    axpy(&mut tmp, u, &[(0.5, &k2)], h);
    rhs.eval(&tmp, &mut k3)?;
    axpy(&mut tmp, u, &[(1.0, &k3)], h);
    rhs.eval(&tmp, &mut k4)?;
    axpy(
        out,
        u,
        &[
            (1.0 / 6.0, &k1),
            (1.0 / 3.0, &k2),
            (1.0 / 3.0, &k3),
            (1.0 / 6.0, &k4),
        ],
        h,
    );
    Ok(())
}

// Dormand–Prince tableau; the stage times are implicit since the system is autonomous.
const DP_A: [&[f64]; 7] = [
    &[],
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
    ],
    &[
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ],
    &[
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand–Prince step; returns the scaled error norm.
fn dp_step(
    rhs: &mut Rhs<'_>,
    u: &[f64],
    h: f64,
    tol: f64,
    out: &mut [f64],
) -> Result<f64, EvalError> {
    let m = u.len();
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| alloc::vec![0.0; m]).collect();
    let mut tmp = alloc::vec![0.0; m];
    for s in 0..7 {
        for (i, t) in tmp.iter_mut().enumerate() {
            *t = u[i]
                + h * DP_A[s]
                    .iter()
                    .enumerate()
                    .map(|(j, a)| a * k[j][i])
                    .sum::<f64>();
        }
        rhs.eval(&tmp, &mut k[s])?;
    }
    let mut err = 0.0f64;
    for i in 0..m {
        let hi: f64 = (0..7).map(|s| DP_B5[s] * k[s][i]).sum();
        let lo: f64 = (0..7).map(|s| DP_B4[s] * k[s][i]).sum();
        out[i] = u[i] + h * hi;
        let sc = tol * (1.0 + u[i].abs().max(out[i].abs()));
        err = err.max((h * (hi - lo)).abs() / sc);
    }
    Ok(err)
}

/// Integrates from `p0` for `steps × dt` time units.
pub fn integrate_sode(
    s: &SemiSpray,
    p0: &Point,
    dt: f64,
    steps: usize,
    method: Method,
) -> Result<Trajectory, IntegrationError> {
    let n = s.n;
    let mut traj = Trajectory {
        times: alloc::vec![0.0],
        states: alloc::vec![p0.clone()],
        method,
        dt,
    };
    let fail = |kind, traj: Trajectory| {
        Err(IntegrationError {
            kind,
            partial: traj,
        })
    };
    if !(dt > 0.0 && dt.is_finite()) {
        return fail(IntegrationErrorKind::BadStep, traj);
    }
    let mut rhs = Rhs {
        s,
        scratch: p0.clone(),
    };
    let mut u = p0.slots();
    if rhs.singular(&u) {
        return fail(IntegrationErrorKind::SingularStart, traj);
    }
    let mut next = alloc::vec![0.0; 2 * n];
    let t_end = dt * steps as f64;
    let mut t = 0.0;
    let mut h = dt;
    let mut k = 0usize;
    while match method {
        Method::Rk4 => k < steps,
        Method::Rk45 { .. } => t < t_end - 1e-14 * t_end.max(1.0),
    } {
        let t_next = match method {
            Method::Rk4 => {
                if let Err(e) = rk4_step(&mut rhs, &u, dt, &mut next) {
                    return fail(IntegrationErrorKind::Eval(e), traj);
                }
                k += 1;
                dt * k as f64
            }
            Method::Rk45 { tol } => {
                h = h.min(t_end - t);
                loop {
                    let err = match dp_step(&mut rhs, &u, h, tol, &mut next) {
                        Ok(e) => e,
                        Err(e) => return fail(IntegrationErrorKind::Eval(e), traj),
                    };
                    let factor = if err == 0.0 {
                        5.0
                    } else {
                        (0.9 * libm::pow(err, -0.2)).clamp(0.2, 5.0)
                    };
                    if err <= 1.0 && err.is_finite() {
                        let accepted = h;
                        h *= factor;
                        break t + accepted;
                    }
                    h *= if err.is_finite() { factor } else { 0.2 };
                    if h < 1e-14 * t_end.max(1.0) {
                        return fail(IntegrationErrorKind::StepUnderflow(t), traj);
                    }
                }
            }
        };
        if next.iter().any(|v| !v.is_finite()) {
            return fail(IntegrationErrorKind::NonFinite(t_next), traj);
        }
        if rhs.singular(&next) {
            return fail(IntegrationErrorKind::SingularLocus(t_next), traj);
        }
        core::mem::swap(&mut u, &mut next);
        t = t_next;
        traj.times.push(t);
        traj.states.push(Point::from_slots(&u, p0.params.clone()));
    }
    Ok(traj)
}

/// `max_t |H(u(t)) − H(u(0))|`.
pub fn conservation_drift(traj: &Trajectory, h: &Expr) -> Result<f64, EvalError> {
    let Some(p0) = traj.states.first() else {
        return Ok(0.0);
    };
    let h0 = h.eval(p0)?;
    let mut worst = 0.0f64;
    for p in &traj.states {
        worst = worst.max((h.eval(p)? - h0).abs());
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftRun {
    pub initial: Point,
    pub drift: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftBatch {
    pub runs: Vec<DriftRun>,
    /// Initial states discarded by the filter or by a failed integration.
    pub rejected: usize,
}

impl DriftBatch {
    pub fn max_drift(&self) -> f64 {
        self.runs.iter().fold(0.0, |m, r| m.max(r.drift))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Settings {
    pub t: f64,
    pub dt: f64,
    pub method: Method,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            t: 10.0,
            dt: 1e-3,
            method: Method::Rk4,
        }
    }
}

impl Settings {
    pub fn steps(&self) -> usize {
        libm::round(self.t / self.dt) as usize
    }
}

/// Drift of `H` over trajectories from up to `count` sampled initial states
/// accepted by `filter`, integrated without failure and with `H` finite
/// along the way.
pub fn drift_batch(
    s: &SemiSpray,
    h: &Expr,
    sampler: &Sampler,
    count: usize,
    settings: Settings,
    filter: impl Fn(&Point) -> bool,
) -> DriftBatch {
    let steps = settings.steps();
    let mut rng = sampler.rng();
    let mut batch = DriftBatch {
        runs: Vec::new(),
        rejected: 0,
    };
    let budget = count.saturating_mul(50).max(1);
    for _ in 0..budget {
        if batch.runs.len() == count {
            break;
        }
        let Some(p0) = sampler.points_from(&mut rng, 1).pop() else {
            break;
        };
        if !filter(&p0) {
            batch.rejected += 1;
            continue;
        }
        match integrate_sode(s, &p0, settings.dt, steps, settings.method) {
            Ok(traj) => match conservation_drift(&traj, h) {
                Ok(drift) => batch.runs.push(DriftRun { initial: p0, drift }),
                Err(_) => batch.rejected += 1,
            },
            Err(_) => batch.rejected += 1,
        }
    }
    batch
}

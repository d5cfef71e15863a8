//! Adaptive Dormand-Prince 5(4) integration of complex linear and nonlinear
//! systems, with step accounting.
//!
//! The integrator is direction-agnostic: `span = (start, end)` may run
//! backwards. Steps are controlled on the mixed norm
//! `max_i |err_i| / max(abs_tol, rel_tol * max(|z_i|, |z_new_i|))`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Right-hand side `z' = f(x, z)` of a complex ODE system.
pub trait OdeField {
    fn dimension(&self) -> usize;
    /// Writes `f(x, z)` into `dz`. Both slices have `dimension()` entries.
    fn eval(&self, x: f64, z: &[Complex64], dz: &mut [Complex64]);
}

/// Adapts a closure into an [`OdeField`].
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(f64, &[Complex64], &mut [Complex64]),
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> OdeField for FnField<F>
where
    F: Fn(f64, &[Complex64], &mut [Complex64]),
{
    fn dimension(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: f64, z: &[Complex64], dz: &mut [Complex64]) {
        (self.f)(x, z, dz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
    pub span: (f64, f64),
}

impl SolveStats {
    fn new(span: (f64, f64)) -> Self {
        Self {
            accepted_steps: 0,
            rejected_steps: 0,
            rhs_evaluations: 0,
            span,
        }
    }

    /// Mesh nodes visited, counting both endpoints.
    pub fn mesh_points(&self) -> usize {
        self.accepted_steps + 1
    }

    pub fn attempted_steps(&self) -> usize {
        self.accepted_steps + self.rejected_steps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Initial step as a fraction of `|span|`.
    pub initial_step_fraction: f64,
    /// Largest step as a fraction of `|span|`.
    pub max_step_fraction: f64,
    pub max_steps: usize,
}

pub const DEFAULT_TOL: f64 = 1e-5;
const ABS_FLOOR_RATIO: f64 = 1e-3;

impl Default for SolverOptions {
    fn default() -> Self {
        Self::with_tol(DEFAULT_TOL)
    }
}

impl SolverOptions {
    /// Relative tolerance `tol` with an absolute floor of `1e-3 tol`, so small
    /// components are still resolved relative to their own size.
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rel_tol: tol,
            abs_tol: ABS_FLOOR_RATIO * tol,
            initial_step_fraction: 1e-2,
            max_step_fraction: 0.1,
            max_steps: 5_000_000,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.rel_tol) || !ok(self.abs_tol) {
            return Err(Error::InvalidArgument(format!(
                "tolerances must be positive, got rel {} abs {}",
                self.rel_tol, self.abs_tol
            )));
        }
        if !ok(self.initial_step_fraction) || !ok(self.max_step_fraction) {
            return Err(Error::InvalidArgument("step fractions must be positive".into()));
        }
        Ok(())
    }
}

// Dormand-Prince 5(4) tableau.
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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Fifth-order weights minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// New right-hand side evaluations per attempted step (FSAL reuses the last stage).
pub const EVALS_PER_STEP: usize = 6;

const SAFETY: f64 = 0.8;
const MIN_FACTOR: f64 = 0.2;
const REJECT_MIN_FACTOR: f64 = 0.1;
const MAX_FACTOR: f64 = 5.0;
const UNDERFLOW_FRACTION: f64 = 1e-14;

/// Integrates `field` over `span` from `init` and returns the state at `span.1`.
pub fn integrate_adaptive<F: OdeField + ?Sized>(
    field: &F,
    span: (f64, f64),
    init: &[Complex64],
    opts: &SolverOptions,
) -> Result<(Vec<Complex64>, SolveStats)> {
    integrate_with_observer(field, span, init, opts, |_, _| {})
}

/// Like [`integrate_adaptive`], calling `observe(x, z)` at every accepted node
/// (including the start point).
pub fn integrate_with_observer<F, O>(
    field: &F,
    span: (f64, f64),
    init: &[Complex64],
    opts: &SolverOptions,
    mut observe: O,
) -> Result<(Vec<Complex64>, SolveStats)>
where
    F: OdeField + ?Sized,
    O: FnMut(f64, &[Complex64]),
{
    opts.validate()?;
    let n = field.dimension();
    if init.len() != n {
        return Err(Error::InvalidArgument(format!(
            "initial state has {} entries, field dimension is {n}",
            init.len()
        )));
    }
    let (x0, x1) = span;
    if !x0.is_finite() || !x1.is_finite() || x0 == x1 {
        return Err(Error::InvalidArgument(format!(
            "span endpoints must be finite and distinct, got ({x0}, {x1})"
        )));
    }

    let length = (x1 - x0).abs();
    let dir = (x1 - x0).signum();
    let h_max = opts.max_step_fraction * length;
    let h_min = UNDERFLOW_FRACTION * length;
    let mut h = (opts.initial_step_fraction * length).min(h_max);

    let mut stats = SolveStats::new(span);
    let mut x = x0;
    let mut z = init.to_vec();
    observe(x, &z);

    let zero = Complex64::new(0.0, 0.0);
    let mut k1 = vec![zero; n];
    let mut k2 = vec![zero; n];
    let mut k3 = vec![zero; n];
    let mut k4 = vec![zero; n];
    let mut k5 = vec![zero; n];
    let mut k6 = vec![zero; n];
    let mut k7 = vec![zero; n];
    let mut tmp = vec![zero; n];
    let mut z_new = vec![zero; n];

    field.eval(x, &z, &mut k1);
    stats.rhs_evaluations += 1;
    if !all_finite(&k1) {
        return Err(Error::NonFiniteState { at: x, stats });
    }

    let mut rejected_last = false;
    loop {
        let remaining = (x1 - x).abs();
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        let hs = dir * h;

        combine(&mut tmp, &z, hs, &[(A21, &k1)]);
        field.eval(x + C2 * hs, &tmp, &mut k2);
        combine(&mut tmp, &z, hs, &[(A31, &k1), (A32, &k2)]);
        field.eval(x + C3 * hs, &tmp, &mut k3);
        combine(&mut tmp, &z, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        field.eval(x + C4 * hs, &tmp, &mut k4);
        combine(&mut tmp, &z, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        field.eval(x + C5 * hs, &tmp, &mut k5);
        combine(
            &mut tmp,
            &z,
            hs,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        );
        field.eval(x + hs, &tmp, &mut k6);
        combine(
            &mut z_new,
            &z,
            hs,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let x_new = if last { x1 } else { x + hs };
        field.eval(x_new, &z_new, &mut k7);
        stats.rhs_evaluations += EVALS_PER_STEP;

        let mut err = 0.0_f64;
        for i in 0..n {
            let e = hs
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = (opts.rel_tol * z[i].norm().max(z_new[i].norm())).max(opts.abs_tol);
            err = err.max(e.norm() / scale);
        }

        if !err.is_finite() || !all_finite(&z_new) {
            return Err(Error::NonFiniteState { at: x, stats });
        }

        if err <= 1.0 {
            stats.accepted_steps += 1;
            x = x_new;
            std::mem::swap(&mut z, &mut z_new);
            std::mem::swap(&mut k1, &mut k7);
            observe(x, &z);
            if last {
                return Ok((z, stats));
            }
            let mut factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            if rejected_last {
                factor = factor.min(1.0);
            }
            rejected_last = false;
            h = (h * factor).min(h_max);
        } else {
            stats.rejected_steps += 1;
            rejected_last = true;
            let factor = (SAFETY * err.powf(-0.2)).clamp(REJECT_MIN_FACTOR, 1.0);
            h *= factor;
        }

        if h < h_min {
            return Err(Error::StepUnderflow { at: x, step: h, stats });
        }
        if stats.attempted_steps() >= opts.max_steps {
            return Err(Error::MaxStepsExceeded {
                at: x,
                limit: opts.max_steps,
                stats,
            });
        }
    }
}

#[inline]
fn combine(out: &mut [Complex64], z: &[Complex64], h: f64, terms: &[(f64, &Vec<Complex64>)]) {
    for i in 0..out.len() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, k) in terms {
            acc += *a * k[i];
        }
        out[i] = z[i] + h * acc;
    }
}

fn all_finite(v: &[Complex64]) -> bool {
    v.iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

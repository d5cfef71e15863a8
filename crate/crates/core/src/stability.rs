//! Stability drivers: counting unstable modes by the argument principle and
//! following roots of `D` under parameter changes.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evans::{evans, Method};
use crate::numerics::{
    newton_root_counted, refine_contour, winding_number, Contour, ContourSample, SolveStats, DEFAULT_MAX_DEPTH,
};
use crate::znd::{build_wave, GasWaveConfig, SteadyWave};

/// Offset of the semicircle's flat side from the imaginary axis, relative to the radius.
pub const AXIS_OFFSET_FRACTION: f64 = 1e-4;
/// A sample whose `|D|` is below this fraction of its smaller neighbour indicates a
/// root on the contour. Local rather than global, since `|D|` can span many
/// decades along a large arc.
pub const ROOT_FLOOR_FRACTION: f64 = 1e-8;
pub const MAX_PHASE_STEP: f64 = FRAC_PI_4;
pub const ARC_NODES: usize = 24;
pub const FLAT_NODES: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindingReport {
    pub contour: Contour,
    pub samples: Vec<ContourSample>,
    pub n_samples: usize,
    pub winding: i64,
    pub min_abs_d: f64,
    pub method: Method,
    /// Integration work summed over every evaluation of `D`, both passes.
    #[serde(default)]
    pub work: Work,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Work {
    pub evaluations: usize,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
}

#[derive(Default)]
struct WorkCounter {
    evaluations: AtomicUsize,
    accepted_steps: AtomicUsize,
    rejected_steps: AtomicUsize,
    rhs_evaluations: AtomicUsize,
}

impl WorkCounter {
    fn add(&self, stats: &SolveStats) {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        self.accepted_steps.fetch_add(stats.accepted_steps, Ordering::Relaxed);
        self.rejected_steps.fetch_add(stats.rejected_steps, Ordering::Relaxed);
        self.rhs_evaluations.fetch_add(stats.rhs_evaluations, Ordering::Relaxed);
    }

    fn total(&self) -> Work {
        Work {
            evaluations: self.evaluations.load(Ordering::Relaxed),
            accepted_steps: self.accepted_steps.load(Ordering::Relaxed),
            rejected_steps: self.rejected_steps.load(Ordering::Relaxed),
            rhs_evaluations: self.rhs_evaluations.load(Ordering::Relaxed),
        }
    }
}

/// Closed semicircle of `radius` in the right half-plane, offset from the axis.
pub fn semicircle(radius: f64) -> Result<Contour> {
    semicircle_with(radius, 1)
}

/// As [`semicircle`] with `density` times the default node counts.
pub fn semicircle_with(radius: f64, density: usize) -> Result<Contour> {
    let k = density.max(1);
    Contour::semicircle(radius, AXIS_OFFSET_FRACTION * radius, k * ARC_NODES, k * FLAT_NODES)
}

/// Winding number of `evaluator` around `contour`, after refinement.
pub fn winding_report<F>(evaluator: F, contour: &Contour, method: Method) -> Result<WindingReport>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    // Refinement stalls where the phase of D cannot be resolved: a root on the
    // contour, or |D| down at its integration noise.
    let samples = refine_contour(&evaluator, contour, MAX_PHASE_STEP, DEFAULT_MAX_DEPTH).map_err(|e| match e {
        Error::RefinementDepthExceeded { lambda } => Error::ContourThroughRoot {
            lambda,
            abs: evaluator(lambda).map_or(f64::NAN, |d| d.norm()),
        },
        other => other,
    })?;
    let mags: Vec<f64> = samples.iter().map(|s| s.value.norm()).collect();
    let n = mags.len() - 1;
    let mut min_abs = f64::INFINITY;
    for i in 0..n {
        let prev = mags[(i + n - 1) % n];
        let next = mags[i + 1];
        if !(mags[i] > ROOT_FLOOR_FRACTION * prev.min(next)) {
            return Err(Error::ContourThroughRoot {
                lambda: samples[i].lambda,
                abs: mags[i],
            });
        }
        min_abs = min_abs.min(mags[i]);
    }
    let values: Vec<Complex64> = samples.iter().map(|s| s.value).collect();
    let winding = winding_number(&values, f64::MIN_POSITIVE)?;
    Ok(WindingReport {
        contour: contour.clone(),
        n_samples: samples.len(),
        samples,
        winding,
        min_abs_d: min_abs,
        method,
        work: Work::default(),
    })
}

/// Number of unstable modes of `wave` inside the semicircle of `radius`.
///
/// `D` is taken in the neutral normalization, which differs from each method's
/// raw value by an analytic nonvanishing factor and so has the same zeros.
///
/// Phase refinement cannot see a phase turn of more than 2π between two initial
/// nodes, so the count is repeated on a contour with twice the nodes and the
/// two must agree.
pub fn count_unstable(wave: &SteadyWave, radius: f64, method: Method, m: f64, tol: f64) -> Result<WindingReport> {
    count_unstable_with(wave, radius, method, m, tol, 1)
}

/// As [`count_unstable`] starting from `density` times the default nodes.
pub fn count_unstable_with(
    wave: &SteadyWave,
    radius: f64,
    method: Method,
    m: f64,
    tol: f64,
    density: usize,
) -> Result<WindingReport> {
    let counter = WorkCounter::default();
    let eval = |lambda| {
        let r = evans(wave, lambda, method, m, tol)?;
        counter.add(&r.stats);
        Ok(r.normalized())
    };
    let coarse = winding_report(eval, &semicircle_with(radius, density)?, method)?;
    let fine = winding_report(eval, &semicircle_with(radius, 2 * density.max(1))?, method)?;
    if coarse.winding != fine.winding || fine.winding < 0 {
        return Err(Error::UnresolvedWinding {
            coarse: coarse.winding,
            fine: fine.winding,
        });
    }
    Ok(WindingReport {
        work: counter.total(),
        ..fine
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootTrace {
    pub parameter: String,
    pub values: Vec<f64>,
    pub roots: Vec<Complex64>,
    /// Newton iterations spent reaching each root, summed over substeps.
    pub iterations: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub newton_tol: f64,
    pub max_iter: usize,
    /// Number of step halvings allowed between consecutive parameter values.
    pub max_halvings: u32,
    /// Largest accepted root displacement per substep, relative to `max(1, |λ|)`.
    pub max_jump: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            newton_tol: 1e-8,
            max_iter: 30,
            max_halvings: 10,
            max_jump: 0.5,
        }
    }
}

/// Follows a root of `family(p, λ)` across `values`, seeding each Newton solve
/// with the previous root and halving the parameter step on failure.
pub fn sweep_roots<F>(parameter: &str, values: &[f64], seed: Complex64, opts: &SweepOptions, family: F) -> Result<RootTrace>
where
    F: Fn(f64, Complex64) -> Result<Complex64>,
{
    let Some(&first) = values.first() else {
        return Err(Error::InvalidArgument("empty parameter list".into()));
    };
    let solve = |p: f64, from: Complex64| newton_root_counted(|l| family(p, l), from, opts.newton_tol, opts.max_iter);
    let (mut root, its) = solve(first, seed).map_err(|e| Error::ContinuationBreakdown {
        last_good: first,
        reason: format!("seed did not converge: {e}"),
    })?;
    let mut trace = RootTrace {
        parameter: parameter.to_string(),
        values: vec![first],
        roots: vec![root],
        iterations: vec![its],
    };
    let mut p = first;
    for &target in &values[1..] {
        let full = target - p;
        let mut step = full;
        let mut spent = 0;
        while p != target {
            let attempt = solve(p + step, root).and_then(|(r, it)| {
                if r.re < -opts.newton_tol {
                    Err(Error::ContinuationBreakdown {
                        last_good: p,
                        reason: format!("root left the closed right half-plane at {r}"),
                    })
                } else if (r - root).norm() > opts.max_jump * root.norm().max(1.0) {
                    Err(Error::NewtonNoConvergence { last: r, iterations: it })
                } else {
                    Ok((r, it))
                }
            });
            match attempt {
                Ok((r, it)) => {
                    root = r;
                    spent += it;
                    p = if (p + step - target).abs() <= 1e-12 * full.abs() { target } else { p + step };
                    step = target - p;
                }
                Err(e @ Error::ContinuationBreakdown { .. }) => return Err(e),
                Err(e) => {
                    step *= 0.5;
                    if step.abs() < full.abs() / f64::from(1u32 << opts.max_halvings) {
                        return Err(Error::ContinuationBreakdown {
                            last_good: p,
                            reason: format!("step halving exhausted: {e}"),
                        });
                    }
                }
            }
        }
        trace.values.push(target);
        trace.roots.push(root);
        trace.iterations.push(spent);
    }
    Ok(trace)
}

/// Configuration field varied by a ZND root sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "Gamma")]
    Gamma,
    #[serde(rename = "q")]
    Q,
    #[serde(rename = "EA")]
    ActivationEnergy,
    #[serde(rename = "K")]
    K,
    /// Upstream velocity (sets the overdrive).
    #[serde(rename = "u_plus")]
    UpstreamVelocity,
}

impl SweepParameter {
    pub fn apply(self, base: &GasWaveConfig, value: f64) -> GasWaveConfig {
        let mut cfg = *base;
        match self {
            SweepParameter::Gamma => cfg.gamma = value,
            SweepParameter::Q => cfg.q = value,
            SweepParameter::ActivationEnergy => cfg.activation_energy = value,
            SweepParameter::K => cfg.k = value,
            SweepParameter::UpstreamVelocity => cfg.upstream.u = value,
        }
        cfg
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParameter::Gamma => "Gamma",
            SweepParameter::Q => "q",
            SweepParameter::ActivationEnergy => "EA",
            SweepParameter::K => "K",
            SweepParameter::UpstreamVelocity => "u_plus",
        })
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Gamma" => Ok(SweepParameter::Gamma),
            "q" => Ok(SweepParameter::Q),
            "EA" => Ok(SweepParameter::ActivationEnergy),
            "K" => Ok(SweepParameter::K),
            "u_plus" => Ok(SweepParameter::UpstreamVelocity),
            _ => Err(Error::InvalidArgument(format!(
                "unknown sweep parameter `{s}` (expected Gamma, q, EA, K or u_plus)"
            ))),
        }
    }
}

/// How `D` is evaluated during a ZND root sweep. `m = None` uses each wave's
/// default truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvansSettings {
    pub method: Method,
    pub m: Option<f64>,
    pub tol: f64,
}

/// Root sweep of the neutral-normalized determinant over one configuration field.
pub fn sweep_znd_roots(
    base: &GasWaveConfig,
    parameter: SweepParameter,
    values: &[f64],
    seed: Complex64,
    settings: &EvansSettings,
    opts: &SweepOptions,
) -> Result<RootTrace> {
    sweep_roots(&parameter.to_string(), values, seed, opts, |p, lambda| {
        let wave = build_wave(&parameter.apply(base, p))?;
        let m = settings.m.unwrap_or_else(|| wave.default_domain());
        Ok(evans(&wave, lambda, settings.method, m, settings.tol)?.normalized())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn synthetic_conjugate_pair_counts_two() {
        let l0 = cx(0.5, 1.0);
        let c = semicircle(3.0).unwrap();
        let r = winding_report(|l| Ok((l - l0) * (l - l0.conj())), &c, Method::Neutral).unwrap();
        assert_eq!(r.winding, 2);
        assert_eq!(r.n_samples, r.samples.len());
        let outside = winding_report(|l| Ok((l + 1.0) * (l - 5.0)), &c, Method::Neutral).unwrap();
        assert_eq!(outside.winding, 0);
    }

    #[test]
    fn radius_monotone_on_synthetic() {
        let roots = [cx(0.5, 0.5), cx(0.5, -0.5), cx(2.0, 3.0)];
        let f = |l: Complex64| Ok(roots.iter().fold(cx(1.0, 0.0), |acc, r| acc * (l - r)));
        let mut last = 0;
        for radius in [0.5, 1.0, 2.0, 4.0] {
            let w = winding_report(f, &semicircle(radius).unwrap(), Method::Neutral).unwrap().winding;
            assert!(w >= last);
            last = w;
        }
        assert_eq!(last, 3);
    }

    #[test]
    fn root_on_contour_is_reported() {
        let c = semicircle(2.0).unwrap();
        let on = c.nodes[3];
        assert!(matches!(
            winding_report(|l| Ok(l - on), &c, Method::Neutral),
            Err(Error::ContourThroughRoot { .. })
        ));
    }

    #[test]
    fn linear_family_traces_exactly() {
        let values: Vec<f64> = (0..=10).map(|k| 1.0 + 0.1 * k as f64).collect();
        let t = sweep_roots("a", &values, cx(1.0, 0.0), &SweepOptions::default(), |a, l| Ok(l - a)).unwrap();
        for (v, r) in t.values.iter().zip(&t.roots) {
            assert!((r - v).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_family_and_reversal() {
        let f = |a: f64, l: Complex64| Ok(l * l - cx(a, 1.0));
        let opts = SweepOptions::default();
        let seed = cx(1.0, 0.5);
        let t = sweep_roots("a", &[1.0, 1.0, 1.0], seed, &opts, f).unwrap();
        assert!(t.roots.iter().all(|r| (r - t.roots[0]).norm() < 1e-12));
        let fwd: Vec<f64> = (0..=20).map(|k| 1.0 + 0.2 * k as f64).collect();
        let there = sweep_roots("a", &fwd, seed, &opts, f).unwrap();
        let back: Vec<f64> = fwd.iter().rev().copied().collect();
        let again = sweep_roots("a", &back, *there.roots.last().unwrap(), &opts, f).unwrap();
        assert!((again.roots.last().unwrap() - there.roots[0]).norm() < 1e-6);
    }

    #[test]
    fn leaving_half_plane_breaks_down() {
        let values = [1.0, 0.5, -0.5];
        let e = sweep_roots("a", &values, cx(1.0, 0.0), &SweepOptions::default(), |a, l| Ok(l - a)).unwrap_err();
        match e {
            Error::ContinuationBreakdown { last_good, .. } => assert_eq!(last_good, 0.5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nonreactive_shock_is_stable() {
        let cfg = GasWaveConfig {
            q: 0.0,
            ..GasWaveConfig::default()
        };
        let wave = build_wave(&cfg).unwrap();
        let r = count_unstable(&wave, 2.0, Method::Neutral, wave.default_domain(), 1e-6).unwrap();
        assert_eq!(r.winding, 0);
        assert!(r.work.evaluations >= r.n_samples);
    }

    #[test]
    fn default_wave_counts_agree_across_radii() {
        let wave = build_wave(&GasWaveConfig::default()).unwrap();
        let m = wave.default_domain();
        let small = count_unstable(&wave, 1.0, Method::Neutral, m, 1e-6).unwrap().winding;
        let large = count_unstable(&wave, 4.0, Method::Neutral, m, 1e-6).unwrap().winding;
        assert!(0 <= small && small <= large);
    }

    #[test]
    fn parameter_names_round_trip() {
        for p in [
            SweepParameter::Gamma,
            SweepParameter::Q,
            SweepParameter::ActivationEnergy,
            SweepParameter::K,
            SweepParameter::UpstreamVelocity,
        ] {
            assert_eq!(p.to_string().parse::<SweepParameter>().unwrap(), p);
        }
        let cfg = SweepParameter::ActivationEnergy.apply(&GasWaveConfig::default(), 12.0);
        assert_eq!(cfg.activation_energy, 12.0);
    }
}

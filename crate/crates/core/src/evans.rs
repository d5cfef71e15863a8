//! Evans-Lopatinski determinant by shooting in the reaction coordinate.
//!
//! All three methods integrate in `y ∈ [-M, 0]` with the scaling
//! `s(y) = dx/dy`, using `ℓ` from the closed-form stable left mode and the
//! jump vector `J = λ[F⁰] + R(W̄(0⁻))`.
//!
//! * neutral: `w' = -s (Gᵀ - g₋) w`, `w(-M) = ℓ`, `D = w(0)ᵀ J`. The decay
//!   `e^{g₋ x}` is factored out so `w` stays O(1).
//! * Erpenbeck: the unfactored adjoint `Z̃' = -s Gᵀ Z̃` from
//!   `Z̃(-M) = e^{-g₋ x(-M)} ℓ`, with `D = Z̃(0)ᵀ λ[F⁰] + λ ∫ Z̃ᵀ A⁰ W̄_y dy`; the
//!   quadrature is carried as a fifth ODE component.
//! * Lee-Stewart: `Z₀' = s G Z₀` backwards from `Z₀(0) = J`, `D = ℓᵀ Z₀(-M)`.
//!
//! Products `Z̃ᵀZ₀` are constant in `y`, which ties the methods together:
//! `D_erpenbeck = D_neutral` and `D_lee_stewart = e^{g₋ x(-M)} D_neutral`.
//! The factor is reported as [`EvansResult::log_kappa`].

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{integrate_adaptive, integrate_with_observer, OdeField, SolveStats, SolverOptions};
use crate::spectral::{jump_vector, stable_left_mode, CVector, ProfileOperator};
use crate::znd::{conserved, SteadyWave};

/// Largest `|Re g₋| x-extent` for which the unfactored methods stay in floating range.
pub const MAX_EXPONENT: f64 = 700.0;
/// Growth of the neutral solution over the near-burned half `y < -M/2` that
/// indicates a mis-selected decay rate. Growth closer to the shock is physical
/// (long induction zones) and is not checked.
pub const MAX_NEUTRAL_GROWTH: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Neutral,
    Erpenbeck,
    LeeStewart,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Neutral, Method::Erpenbeck, Method::LeeStewart];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Neutral => "neutral",
            Method::Erpenbeck => "erpenbeck",
            Method::LeeStewart => "lee-stewart",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neutral" => Ok(Method::Neutral),
            "erpenbeck" => Ok(Method::Erpenbeck),
            "lee-stewart" | "lee_stewart" => Ok(Method::LeeStewart),
            _ => Err(Error::InvalidArgument(format!(
                "unknown method `{s}` (expected neutral, erpenbeck or lee-stewart)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvansResult {
    pub lambda: Complex64,
    pub d: Complex64,
    pub method: Method,
    /// Truncation length in `y`.
    pub m: f64,
    /// `|x(-M)|`, the physical length of the truncated reaction zone.
    pub x_extent: f64,
    /// Logarithm of the analytic, nonvanishing factor relating `d` to the
    /// neutral normalization.
    pub log_kappa: Complex64,
    pub stats: SolveStats,
}

impl EvansResult {
    /// `d` in the neutral normalization, comparable across methods.
    pub fn normalized(&self) -> Complex64 {
        self.d * (-self.log_kappa).exp()
    }

    pub fn record(&self) -> EvansRecord {
        EvansRecord {
            lambda: [self.lambda.re, self.lambda.im],
            d: [self.d.re, self.d.im],
            method: self.method,
            m: self.m,
            x_extent: self.x_extent,
            log_kappa: [self.log_kappa.re, self.log_kappa.im],
            accepted_steps: self.stats.accepted_steps,
            rejected_steps: self.stats.rejected_steps,
            rhs_evaluations: self.stats.rhs_evaluations,
        }
    }
}

/// Flat JSON form of an [`EvansResult`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvansRecord {
    pub lambda: [f64; 2],
    #[serde(rename = "D")]
    pub d: [f64; 2],
    pub method: Method,
    #[serde(rename = "M")]
    pub m: f64,
    pub x_extent: f64,
    pub log_kappa: [f64; 2],
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
}

/// Shared per-frequency data.
struct Setup<'a> {
    wave: &'a SteadyWave,
    lambda: Complex64,
    ell: CVector,
    g_minus: Complex64,
    jump: CVector,
    m: f64,
    x_end: f64,
    opts: SolverOptions,
}

impl<'a> Setup<'a> {
    fn new(wave: &'a SteadyWave, lambda: Complex64, m: f64, tol: f64) -> Result<Self> {
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::InvalidArgument(format!("truncation length M = {m} must be positive")));
        }
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
        }
        let mode = stable_left_mode(wave, lambda)?;
        Ok(Self {
            wave,
            lambda,
            ell: mode.ell,
            g_minus: mode.g_minus,
            jump: jump_vector(wave, lambda),
            m,
            x_end: wave.x_at(-m)?,
            opts: SolverOptions::with_tol(tol),
        })
    }

    fn operator(&self) -> ProfileOperator<'a> {
        ProfileOperator {
            wave: self.wave,
            lambda: self.lambda,
        }
    }

    /// `g₋ x(-M)`; its real part is the log-growth of the unfactored modes.
    fn decay_exponent(&self) -> Complex64 {
        self.g_minus * self.x_end
    }

    fn check_exponent(&self) -> Result<()> {
        let exponent = self.decay_exponent();
        if exponent.re.abs() > MAX_EXPONENT {
            return Err(Error::ExponentRange {
                lambda: self.lambda,
                exponent: exponent.re,
            });
        }
        Ok(())
    }

    fn result(&self, d: Complex64, method: Method, log_kappa: Complex64, stats: SolveStats) -> EvansResult {
        EvansResult {
            lambda: self.lambda,
            d,
            method,
            m: self.m,
            x_extent: -self.x_end,
            log_kappa,
            stats,
        }
    }

    /// `λ[F⁰]`.
    fn conserved_jump(&self) -> CVector {
        let jump = conserved(&self.wave.config.upstream_state()) - conserved(&self.wave.neumann);
        CVector::from_fn(|i, _| self.lambda * jump[i])
    }
}

fn to_vec(z: &[Complex64]) -> CVector {
    CVector::new(z[0], z[1], z[2], z[3])
}

/// `w' = -s (Gᵀ - g₋ I) w`.
struct NeutralField<'a> {
    op: ProfileOperator<'a>,
    g_minus: Complex64,
}

impl OdeField for NeutralField<'_> {
    fn dimension(&self) -> usize {
        4
    }

    fn eval(&self, y: f64, z: &[Complex64], dz: &mut [Complex64]) {
        let p = self.op.at(y);
        let w = to_vec(z);
        let out = (p.apply_transpose(&w) - w * self.g_minus) * Complex64::new(-p.scale, 0.0);
        dz.copy_from_slice(out.as_slice());
    }
}

/// `Z̃' = -s Gᵀ Z̃` with the quadrature `I' = λ Z̃ᵀ A⁰ W̄_y` as component 4.
struct AdjointField<'a> {
    op: ProfileOperator<'a>,
    with_quadrature: bool,
}

impl OdeField for AdjointField<'_> {
    fn dimension(&self) -> usize {
        if self.with_quadrature {
            5
        } else {
            4
        }
    }

    fn eval(&self, y: f64, z: &[Complex64], dz: &mut [Complex64]) {
        let p = self.op.at(y);
        let w = to_vec(z);
        let out = p.apply_transpose(&w) * Complex64::new(-p.scale, 0.0);
        dz[..4].copy_from_slice(out.as_slice());
        if self.with_quadrature {
            let f = self.op.a0_w_prime(y);
            let dot = (0..4).fold(Complex64::new(0.0, 0.0), |acc, i| acc + w[i] * f[i]);
            dz[4] = self.op.lambda * dot;
        }
    }
}

/// `Z₀' = s G Z₀`.
struct ForwardField<'a> {
    op: ProfileOperator<'a>,
}

impl OdeField for ForwardField<'_> {
    fn dimension(&self) -> usize {
        4
    }

    fn eval(&self, y: f64, z: &[Complex64], dz: &mut [Complex64]) {
        let p = self.op.at(y);
        let out = p.apply(&to_vec(z)) * Complex64::new(p.scale, 0.0);
        dz.copy_from_slice(out.as_slice());
    }
}

pub fn evans(wave: &SteadyWave, lambda: Complex64, method: Method, m: f64, tol: f64) -> Result<EvansResult> {
    match method {
        Method::Neutral => evans_neutral(wave, lambda, m, tol),
        Method::Erpenbeck => evans_erpenbeck(wave, lambda, m, tol),
        Method::LeeStewart => evans_lee_stewart(wave, lambda, m, tol),
    }
}

/// Forward shooting of the neutral adjoint mode.
pub fn evans_neutral(wave: &SteadyWave, lambda: Complex64, m: f64, tol: f64) -> Result<EvansResult> {
    let setup = Setup::new(wave, lambda, m, tol)?;
    let field = NeutralField {
        op: setup.operator(),
        g_minus: setup.g_minus,
    };
    let start = setup.ell.norm();
    let mut peak = start;
    let (end, stats) = integrate_with_observer(&field, (-m, 0.0), setup.ell.as_slice(), &setup.opts, |y, z| {
        if y < -0.5 * m {
            peak = peak.max(to_vec(z).norm());
        }
    })?;
    let growth = peak / start;
    if growth > MAX_NEUTRAL_GROWTH {
        return Err(Error::NonNeutralGrowth { lambda, growth });
    }
    let d = to_vec(&end).dot(&setup.jump);
    Ok(setup.result(d, Method::Neutral, Complex64::new(0.0, 0.0), stats))
}

/// Forward shooting of the unfactored adjoint with the Abel-relation quadrature.
///
/// The system is linear, so it is integrated from `ℓ` and the result scaled by
/// `e^{-g₋ x(-M)}` afterwards; the mesh then reflects O(1) data.
pub fn evans_erpenbeck(wave: &SteadyWave, lambda: Complex64, m: f64, tol: f64) -> Result<EvansResult> {
    let setup = Setup::new(wave, lambda, m, tol)?;
    setup.check_exponent()?;
    let field = AdjointField {
        op: setup.operator(),
        with_quadrature: true,
    };
    let mut init = setup.ell.as_slice().to_vec();
    init.push(Complex64::new(0.0, 0.0));
    let (end, stats) = integrate_adaptive(&field, (-m, 0.0), &init, &setup.opts)?;
    let unit = to_vec(&end).dot(&setup.conserved_jump()) + end[4];
    let d = unit * (-setup.decay_exponent()).exp();
    Ok(setup.result(d, Method::Erpenbeck, Complex64::new(0.0, 0.0), stats))
}

/// Backward shooting from the shock with projection onto `ℓ` at `y = -M`.
pub fn evans_lee_stewart(wave: &SteadyWave, lambda: Complex64, m: f64, tol: f64) -> Result<EvansResult> {
    let setup = Setup::new(wave, lambda, m, tol)?;
    setup.check_exponent()?;
    let field = ForwardField { op: setup.operator() };
    let (end, stats) = integrate_adaptive(&field, (0.0, -m), setup.jump.as_slice(), &setup.opts)?;
    let d = setup.ell.dot(&to_vec(&end));
    Ok(setup.result(d, Method::LeeStewart, setup.decay_exponent(), stats))
}

/// Largest relative deviation of `Z̃ᵀZ₀` from its median over `n_grid`
/// equally spaced points of `[-M, 0]`.
pub fn duality_check(wave: &SteadyWave, lambda: Complex64, m: f64, n_grid: usize, tol: f64) -> Result<f64> {
    if n_grid < 2 {
        return Err(Error::InvalidArgument("duality grid needs at least two points".into()));
    }
    if lambda.re <= 0.0 {
        return Err(Error::Domain {
            lambda,
            reason: "duality check requires Re λ > 0".into(),
        });
    }
    let setup = Setup::new(wave, lambda, m, tol)?;
    setup.check_exponent()?;
    let grid: Vec<f64> = (0..n_grid)
        .map(|i| -m + m * i as f64 / (n_grid - 1) as f64)
        .collect();

    let adjoint = AdjointField {
        op: setup.operator(),
        with_quadrature: false,
    };
    let mut adj = vec![setup.ell];
    for pair in grid.windows(2) {
        let last = *adj.last().expect("seeded");
        let (end, _) = integrate_adaptive(&adjoint, (pair[0], pair[1]), last.as_slice(), &setup.opts)?;
        adj.push(to_vec(&end));
    }

    let forward = ForwardField { op: setup.operator() };
    let mut fwd = vec![setup.jump];
    for pair in grid.windows(2).rev() {
        let last = *fwd.last().expect("seeded");
        let (end, _) = integrate_adaptive(&forward, (pair[1], pair[0]), last.as_slice(), &setup.opts)?;
        fwd.push(to_vec(&end));
    }
    fwd.reverse();

    let products: Vec<Complex64> = adj.iter().zip(&fwd).map(|(a, z)| a.dot(z)).collect();
    let median = |mut v: Vec<f64>| {
        v.sort_by(|a, b| a.total_cmp(b));
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    };
    let center = Complex64::new(
        median(products.iter().map(|p| p.re).collect()),
        median(products.iter().map(|p| p.im).collect()),
    );
    Ok(products
        .iter()
        .map(|p| (p - center).norm() / center.norm())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{limit_g_minus, stable_left_mode};
    use crate::znd::{build_wave, GasWaveConfig};

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn wave() -> SteadyWave {
        build_wave(&GasWaveConfig::default()).unwrap()
    }

    fn nonreactive() -> SteadyWave {
        let cfg = GasWaveConfig {
            q: 0.0,
            y0: 0.0,
            ..GasWaveConfig::default()
        };
        build_wave(&cfg).unwrap()
    }

    #[test]
    fn method_names() {
        for m in Method::ALL {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("shooting".parse::<Method>().is_err());
    }

    #[test]
    fn constant_coefficient_closed_forms() {
        let w = nonreactive();
        let lambda = cx(0.8, 1.5);
        let m = 5.0;
        let mode = stable_left_mode(&w, lambda).unwrap();
        let jump = jump_vector(&w, lambda);
        // ℓ is an exact left eigenvector of the constant G, so w(y) ≡ ℓ.
        let exact = mode.ell.dot(&jump);
        let n = evans_neutral(&w, lambda, m, 1e-10).unwrap();
        assert!((n.d - exact).norm() < 1e-9 * exact.norm());
        let s = w.dx_dy(0.0);
        let kappa = (mode.g_minus * (-m * s)).exp();
        let ls = evans_lee_stewart(&w, lambda, m, 1e-10).unwrap();
        assert!((ls.d - exact * kappa).norm() < 1e-7 * (exact * kappa).norm());
        let erp = evans_erpenbeck(&w, lambda, m, 1e-10).unwrap();
        assert!((erp.d - exact).norm() < 1e-7 * exact.norm());
        assert!(duality_check(&w, lambda, m, 11, 1e-10).unwrap() < 1e-10);
        let g = limit_g_minus(&w, lambda).unwrap();
        assert!(mode.residual(&g) < 1e-12);
    }

    #[test]
    fn methods_agree_after_normalization() {
        let w = wave();
        let m = w.default_domain();
        for lambda in [cx(0.5, 0.0), cx(1.0, 3.0), cx(0.2, -7.0)] {
            let n = evans_neutral(&w, lambda, m, 1e-9).unwrap();
            for method in [Method::Erpenbeck, Method::LeeStewart] {
                let r = evans(&w, lambda, method, m, 1e-9).unwrap();
                let rel = (r.normalized() - n.d).norm() / n.d.norm();
                assert!(rel < 1e-5, "{method} at {lambda}: {rel}");
            }
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let w = wave();
        let m = w.default_domain();
        let a = evans_neutral(&w, cx(0.4, 2.5), m, 1e-9).unwrap().d;
        let b = evans_neutral(&w, cx(0.4, -2.5), m, 1e-9).unwrap().d;
        assert!((a - b.conj()).norm() < 1e-7 * a.norm());
    }

    #[test]
    fn duality_tightens_with_tolerance() {
        let w = wave();
        let m = w.default_domain();
        let lambda = cx(1.0, 1.0);
        let coarse = duality_check(&w, lambda, m, 21, 1e-7).unwrap();
        let fine = duality_check(&w, lambda, m, 21, 1e-8).unwrap();
        assert!(fine < 1e-5, "{fine}");
        assert!(fine < coarse, "{fine} vs {coarse}");
    }

    #[test]
    fn erpenbeck_needs_more_mesh_at_high_frequency() {
        let w = wave();
        let m = w.default_domain();
        let lambda = cx(0.5, 60.0);
        let n = evans_neutral(&w, lambda, m, 1e-6).unwrap();
        let e = evans_erpenbeck(&w, lambda, m, 1e-6).unwrap();
        assert!(e.stats.mesh_points() > n.stats.mesh_points());
    }

    #[test]
    fn range_and_domain_errors() {
        let w = wave();
        let m = w.default_domain();
        assert!(matches!(evans_neutral(&w, cx(-0.1, 1.0), m, 1e-6), Err(Error::Domain { .. })));
        assert!(matches!(evans_erpenbeck(&w, cx(40.0, 0.0), m, 1e-6), Err(Error::ExponentRange { .. })));
        assert!(evans_neutral(&w, cx(40.0, 0.0), m, 1e-6).is_ok());
        assert!(evans_neutral(&w, cx(1.0, 0.0), -1.0, 1e-6).is_err());
    }

    #[test]
    fn record_shape() {
        let w = wave();
        let r = evans_neutral(&w, cx(1.0, 1.0), w.default_domain(), 1e-6).unwrap();
        let v: serde_json::Value = serde_json::to_value(r.record()).unwrap();
        for key in ["lambda", "D", "method", "M", "accepted_steps", "rejected_steps", "rhs_evaluations"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["method"], "neutral");
    }
}

//! Steady strong detonation in closed form.
//!
//! In the steady frame mass, momentum and total energy fluxes are constant
//! through the reaction zone:
//!
//! ```text
//! ρu = -m,   u + Γe/u = b,   u²/2 + (Γ+1)e + qY = c.
//! ```
//!
//! Eliminating `ρ` and `e` leaves a quadratic for `u` at each reactant level
//! `Ȳ`, and the kinetics in the reaction coordinate `y` give `Ȳ = Y0 e^{Ky}`, so
//! the whole profile is explicit. The physical coordinate follows from
//! `dx/dy = m / (ρ̄ φ(ē))`.

use nalgebra::Vector4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{thermo_unchecked, GasWaveConfig, StateW};
use crate::error::{Error, Result};
use crate::numerics::{integrate_adaptive, FnField, SolverOptions};

/// Smallest admissible discriminant; at or below it the wave is treated as
/// Chapman-Jouguet (sonic at the end of the reaction zone).
pub const CJ_EPSILON: f64 = 1e-10;
/// Residual reactant fraction at the truncated end of the reaction zone.
pub const DEFAULT_EPS_Y: f64 = 1e-8;
/// Lower bound on the default truncation length in `y`.
pub const MIN_DOMAIN: f64 = 5.0;

const X_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyWave {
    pub config: GasWaveConfig,
    /// Mass flux through the wave, `-ρu > 0`.
    pub m: f64,
    pub rh_b: f64,
    pub rh_c: f64,
    /// State just behind the shock.
    pub neumann: StateW,
    /// Fully burned end state.
    pub burned: StateW,
    /// Minimum over `Ȳ ∈ [0, Y0]` of the discriminant of the velocity quadratic.
    pub discriminant_min: f64,
}

pub fn build_wave(config: &GasWaveConfig) -> Result<SteadyWave> {
    config.validate()?;
    let cfg = *config;
    let plus = cfg.upstream_state();
    let th = thermo_unchecked(&plus, &cfg);
    if plus.u.abs() <= th.sound_speed {
        return Err(Error::SubsonicUpstream {
            speed: plus.u.abs(),
            sound: th.sound_speed,
        });
    }
    if th.temperature > cfg.ti_low {
        return Err(Error::InvalidIgnitionWindow(format!(
            "upstream temperature {} exceeds the ignition temperature {}",
            th.temperature, cfg.ti_low
        )));
    }

    let g = cfg.gamma;
    let (u, e) = (plus.u, plus.e);
    let mut wave = SteadyWave {
        config: cfg,
        m: -plus.rho * u,
        rh_b: u + g * e / u,
        rh_c: 0.5 * u * u + (g + 1.0) * e + cfg.q * cfg.y0,
        neumann: plus,
        burned: plus,
        discriminant_min: 0.0,
    };
    wave.discriminant_min = wave.discriminant(0.0).min(wave.discriminant(cfg.y0));
    if !(wave.discriminant_min > CJ_EPSILON) {
        return Err(Error::ChapmanJouguetOrSonic {
            discriminant_min: wave.discriminant_min,
        });
    }
    wave.neumann = wave.state_at_reactant(cfg.y0);
    wave.burned = wave.state_at_reactant(0.0);

    for s in [wave.neumann, wave.burned] {
        let c = thermo_unchecked(&s, &cfg).sound_speed;
        if s.u.abs() >= c {
            return Err(Error::ChapmanJouguetOrSonic {
                discriminant_min: wave.discriminant_min,
            });
        }
    }
    // ē is concave in ū and ū is monotone in Ȳ, so the minimum temperature
    // behind the shock is attained at an end of the reaction zone.
    let t_min = wave.neumann.temperature(&cfg).min(wave.burned.temperature(&cfg));
    if t_min < cfg.ti_high {
        return Err(Error::InvalidIgnitionWindow(format!(
            "temperature {t_min} behind the shock is below the cutoff {}",
            cfg.ti_high
        )));
    }
    Ok(wave)
}

impl SteadyWave {
    fn lead(&self) -> f64 {
        let g = self.config.gamma;
        (g + 1.0) / (g + 2.0)
    }

    /// Discriminant of the velocity quadratic at reactant level `ybar`.
    pub fn discriminant(&self, ybar: f64) -> f64 {
        let g = self.config.gamma;
        let a = self.lead() * self.rh_b;
        a * a + 2.0 * g * (self.config.q * ybar - self.rh_c) / (g + 2.0)
    }

    /// Both roots of the velocity quadratic at `ybar`, supersonic root first.
    pub fn velocity_roots(&self, ybar: f64) -> (f64, f64) {
        let a = self.lead() * self.rh_b;
        let r = self.discriminant(ybar).sqrt();
        (a - r, a + r)
    }

    /// Gas state on the compressive (subsonic) branch at reactant level `ybar`.
    pub fn state_at_reactant(&self, ybar: f64) -> StateW {
        let u = self.lead() * self.rh_b - self.rh_b.signum() * self.discriminant(ybar).sqrt();
        StateW {
            rho: -self.m / u,
            u,
            e: (self.rh_b * u - u * u) / self.config.gamma,
            reactant: ybar,
        }
    }

    /// Reactant fraction `Y0 e^{Ky}`.
    pub fn reactant(&self, y: f64) -> f64 {
        self.config.y0 * (self.config.k * y).exp()
    }

    /// Profile state at reaction coordinate `y ≤ 0`.
    pub fn profile_at(&self, y: f64) -> Result<StateW> {
        if !(y <= 0.0) {
            return Err(Error::InvalidArgument(format!("profile requested at y = {y} > 0")));
        }
        Ok(self.state_at(y))
    }

    pub(crate) fn state_at(&self, y: f64) -> StateW {
        self.state_at_reactant(self.reactant(y))
    }

    /// `dW̄/dy`, differentiated through the quadratic formula.
    pub fn profile_derivative(&self, y: f64) -> Vector4<f64> {
        let cfg = &self.config;
        let s = self.state_at(y);
        let g = cfg.gamma;
        let dy = cfg.k * s.reactant;
        let du = if dy == 0.0 {
            0.0
        } else {
            -self.rh_b.signum() * (g * cfg.q / (g + 2.0)) / self.discriminant(s.reactant).sqrt() * dy
        };
        Vector4::new(
            self.m / (s.u * s.u) * du,
            du,
            (self.rh_b - 2.0 * s.u) / g * du,
            dy,
        )
    }

    /// `dx/dy = m / (ρ̄ φ(ē))`.
    pub fn dx_dy(&self, y: f64) -> f64 {
        let s = self.state_at(y);
        self.m / (s.rho * self.config.arrhenius(s.e))
    }

    /// Truncation length `ln(Y0/eps_y)/K` at which `Ȳ` falls to `eps_y`.
    pub fn reaction_length(&self, eps_y: f64) -> f64 {
        if self.config.y0 <= eps_y {
            0.0
        } else {
            (self.config.y0 / eps_y).ln() / self.config.k
        }
    }

    /// Default truncation `max(M_y, 5)` with `M_y` at the default residual fraction.
    pub fn default_domain(&self) -> f64 {
        self.reaction_length(DEFAULT_EPS_Y).max(MIN_DOMAIN)
    }

    /// Physical position `x(y) = ∫_0^y dx/dy`, negative for `y < 0`.
    pub fn x_at(&self, y: f64) -> Result<f64> {
        Ok(x_of_y(self, &[y])?[0])
    }

    /// Rows of the profile table at the given `y` values.
    pub fn sample_profile(&self, ys: &[f64]) -> Result<Vec<ProfileRow>> {
        let xs = x_of_y(self, ys)?;
        Ok(ys
            .iter()
            .zip(xs)
            .map(|(&y, x)| {
                let s = self.state_at(y);
                let th = thermo_unchecked(&s, &self.config);
                ProfileRow {
                    y,
                    x,
                    rho: s.rho,
                    u: s.u,
                    e: s.e,
                    reactant: s.reactant,
                    p: th.p,
                    temperature: th.temperature,
                }
            })
            .collect())
    }

    /// `n` points from `y = 0` down to `-depth`, log-spaced away from the shock.
    pub fn log_grid(n: usize, depth: f64) -> Vec<f64> {
        match n {
            0 => vec![],
            1 => vec![0.0],
            2 => vec![0.0, -depth],
            _ => {
                let mut ys = vec![0.0];
                let k = (n - 2) as f64;
                ys.extend((0..n - 1).map(|i| -depth * 10f64.powf(-4.0 * (1.0 - i as f64 / k))));
                ys
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub y: f64,
    pub x: f64,
    pub rho: f64,
    pub u: f64,
    pub e: f64,
    #[serde(rename = "Y")]
    pub reactant: f64,
    pub p: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
}

/// Cumulative `x(y)` along a grid sorted in decreasing order with every entry `≤ 0`.
pub fn x_of_y(wave: &SteadyWave, y_grid: &[f64]) -> Result<Vec<f64>> {
    if y_grid.iter().any(|&y| !(y <= 0.0)) {
        return Err(Error::InvalidArgument("y grid entries must be ≤ 0".into()));
    }
    if y_grid.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidArgument("y grid must be sorted in decreasing order".into()));
    }
    let field = FnField::new(1, |y: f64, _: &[Complex64], dz: &mut [Complex64]| {
        dz[0] = Complex64::new(wave.dx_dy(y), 0.0);
    });
    let opts = SolverOptions::with_tol(X_TOL);
    let mut out = Vec::with_capacity(y_grid.len());
    let (mut y_prev, mut x_prev) = (0.0, 0.0);
    for &y in y_grid {
        if y < y_prev {
            let (end, _) = integrate_adaptive(&field, (y_prev, y), &[Complex64::new(x_prev, 0.0)], &opts)?;
            x_prev = end[0].re;
            y_prev = y;
        }
        out.push(x_prev);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::znd::fluxes;
    use proptest::prelude::*;

    fn default_wave() -> SteadyWave {
        build_wave(&GasWaveConfig::default()).unwrap()
    }

    // Mass, momentum and energy fluxes as computed directly from the conservation law.
    fn flux_invariants(s: &StateW, cfg: &GasWaveConfig) -> [f64; 3] {
        let f = fluxes(&StateW { reactant: 0.0, ..*s }, cfg).unwrap();
        [f.f1[0], f.f1[1], f.f1[2] + cfg.q * s.rho * s.u * s.reactant]
    }

    #[test]
    fn default_wave_states() {
        let w = default_wave();
        assert!((w.neumann.u + 0.3455).abs() < 1e-3, "{:?}", w.neumann);
        assert!((w.neumann.rho - 8.68).abs() < 1e-2);
        assert!((w.burned.u + 0.4903).abs() < 1e-3, "{:?}", w.burned);
        assert!(w.neumann.u > w.config.upstream.u);
        assert!(w.neumann.rho > w.config.upstream.rho);
    }

    #[test]
    fn both_roots_at_full_reactant() {
        let w = default_wave();
        let (sup, sub) = w.velocity_roots(w.config.y0);
        assert!((sup - w.config.upstream.u).abs() < 1e-12 * sup.abs());
        assert!((sub - w.neumann.u).abs() < 1e-15);
    }

    #[test]
    fn rankine_hugoniot_constants_from_both_sides() {
        let w = default_wave();
        let cfg = &w.config;
        let b = |s: &StateW| s.u + cfg.gamma * s.e / s.u;
        let c = |s: &StateW| 0.5 * s.u * s.u + (cfg.gamma + 1.0) * s.e + cfg.q * s.reactant;
        for s in [w.burned, w.neumann] {
            assert!((-s.rho * s.u - w.m).abs() < 1e-12 * w.m);
            assert!((b(&s) - w.rh_b).abs() < 1e-12 * w.rh_b.abs());
            assert!((c(&s) - w.rh_c).abs() < 1e-12 * w.rh_c.abs());
        }
    }

    #[test]
    fn nonreactive_profile_is_constant() {
        let mut cfg = GasWaveConfig::default();
        cfg.q = 0.0;
        let w = build_wave(&cfg).unwrap();
        let (sup, sub) = w.velocity_roots(0.3);
        assert!((sup - cfg.upstream.u).abs() < 1e-12 * 3.0);
        assert!((sub - w.neumann.u).abs() < 1e-15);
        for y in [-0.1, -1.0, -10.0] {
            let s = w.profile_at(y).unwrap();
            assert_eq!((s.rho, s.u, s.e), (w.neumann.rho, w.neumann.u, w.neumann.e));
        }
        let s = w.dx_dy(0.0);
        let xs = x_of_y(&w, &[0.0, -1.0, -2.5]).unwrap();
        assert!((xs[1] + s).abs() < 1e-10 * s && (xs[2] + 2.5 * s).abs() < 1e-10 * s);
    }

    #[test]
    fn profile_anchors_and_limits() {
        let w = default_wave();
        assert_eq!(w.profile_at(0.0).unwrap(), w.neumann);
        assert!((w.reactant(-(2f64.ln())) - 0.5).abs() < 1e-15);
        let far = w.profile_at(-40.0).unwrap();
        for (a, b) in far.to_vector().iter().zip(w.burned.to_vector().iter()) {
            assert!((a - b).abs() < 1e-12 * b.abs().max(1.0));
        }
        assert!(w.profile_at(0.5).is_err());
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let w = default_wave();
        for y in [-0.01, -0.7, -3.0, -12.0] {
            let h = 1e-5;
            let fd = (w.state_at(y + h).to_vector() - w.state_at(y - h).to_vector()) / (2.0 * h);
            let d = w.profile_derivative(y);
            assert!((fd - d).norm() < 1e-8 * d.norm() + 1e-9, "y={y}: {fd} vs {d}");
        }
    }

    #[test]
    fn momentum_flux_constant_along_profile() {
        let w = default_wave();
        let mom = |y: f64| {
            let s = w.state_at(y);
            s.rho * s.u * s.u + w.config.gamma * s.rho * s.e
        };
        for y in [-0.2, -1.0, -5.0] {
            let h = 1e-4;
            assert!(((mom(y + h) - mom(y - h)) / (2.0 * h)).abs() < 1e-8);
        }
    }

    #[test]
    fn chapman_jouguet_is_rejected_and_located() {
        let mut cfg = GasWaveConfig::default();
        let disc = |q: f64| {
            let mut c = cfg;
            c.q = q;
            match build_wave(&c) {
                Ok(w) => w.discriminant_min,
                Err(Error::ChapmanJouguetOrSonic { discriminant_min }) => discriminant_min,
                Err(e) => panic!("{e}"),
            }
        };
        let (mut lo, mut hi) = (2.0, 50.0);
        assert!(disc(lo) > 0.0 && disc(hi) <= 0.0);
        while hi - lo > 1e-8 {
            let mid = 0.5 * (lo + hi);
            if disc(mid) > CJ_EPSILON {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((lo - 9.69).abs() < 0.05, "q_max = {lo}");
        cfg.q = hi + 1e-3;
        assert!(matches!(build_wave(&cfg), Err(Error::ChapmanJouguetOrSonic { .. })));
    }

    #[test]
    fn invalid_waves() {
        let mut cfg = GasWaveConfig::default();
        cfg.upstream.u = -0.3;
        assert!(matches!(build_wave(&cfg), Err(Error::SubsonicUpstream { .. })));
        let mut cfg = GasWaveConfig::default();
        cfg.ti_low = 0.5;
        assert!(matches!(build_wave(&cfg), Err(Error::InvalidIgnitionWindow(_))));
        let mut cfg = GasWaveConfig::default();
        cfg.ti_high = 6.0;
        assert!(matches!(build_wave(&cfg), Err(Error::InvalidIgnitionWindow(_))));
    }

    #[test]
    fn domain_lengths() {
        let w = default_wave();
        assert!((w.reaction_length(1e-8) - 8.0 * 10f64.ln()).abs() < 1e-12);
        assert!(w.reactant(-w.reaction_length(1e-8)) <= 1e-8 * (1.0 + 1e-12));
        let mut cfg = GasWaveConfig::default();
        cfg.y0 = 0.0;
        cfg.q = 0.0;
        let w0 = build_wave(&cfg).unwrap();
        assert_eq!(w0.reaction_length(1e-8), 0.0);
        assert_eq!(w0.default_domain(), MIN_DOMAIN);
    }

    #[test]
    fn x_of_y_anchor_and_monotone() {
        let w = default_wave();
        assert_eq!(x_of_y(&w, &[0.0]).unwrap(), vec![0.0]);
        let ys = SteadyWave::log_grid(40, 20.0);
        let xs = x_of_y(&w, &ys).unwrap();
        assert!(xs.windows(2).all(|p| p[1] < p[0]));
        assert!(x_of_y(&w, &[-1.0, -0.5]).is_err());
    }

    #[test]
    fn sampled_rows() {
        let w = default_wave();
        let rows = w.sample_profile(&SteadyWave::log_grid(10, 18.0)).unwrap();
        assert_eq!(rows.len(), 10);
        assert_eq!(rows[0].rho, w.neumann.rho);
        for r in &rows {
            assert!((r.reactant - (w.config.k * r.y).exp()).abs() < 1e-15);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn residuals_vanish_along_profile(
            gamma in 0.1..0.6f64, q in 0.0..3.0f64, k in 0.2..3.0f64, speed in 3.0..6.0f64,
            y in -30.0..0.0f64,
        ) {
            let mut cfg = GasWaveConfig { gamma, q, k, ..GasWaveConfig::default() };
            cfg.upstream.u = -speed;
            prop_assume!(build_wave(&cfg).is_ok());
            let w = build_wave(&cfg).unwrap();
            let plus = flux_invariants(&cfg.upstream_state(), &cfg);
            let here = flux_invariants(&w.profile_at(y).unwrap(), &cfg);
            for i in 0..3 {
                prop_assert!((plus[i] - here[i]).abs() <= 1e-10 * plus[i].abs());
            }
        }

        #[test]
        fn velocity_monotone_in_reactant(q in 0.1..3.0f64, a in 0.0..1.0f64, b in 0.0..1.0f64) {
            let cfg = GasWaveConfig { q, ..GasWaveConfig::default() };
            let w = build_wave(&cfg).unwrap();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(w.state_at_reactant(lo).u <= w.state_at_reactant(hi).u);
        }
    }
}

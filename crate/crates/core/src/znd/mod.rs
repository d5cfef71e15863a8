//! Ideal-gas reactive Euler model with one-step Arrhenius kinetics.
//!
//! Variables are `W = (ρ, u, e, Y)`, written in the steady frame of a
//! right-moving detonation (`u < 0` on both sides of the shock). The pressure
//! law is `p = Γρe`, the temperature `T = e/C_v` and the gas constant
//! `R = (Γ+1) C_v`, so the Arrhenius factor `exp(-E_A/(R T))` depends on `e`
//! only.

mod wave;

use std::path::Path;

use nalgebra::Vector4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use wave::{build_wave, x_of_y, ProfileRow, SteadyWave, CJ_EPSILON, DEFAULT_EPS_Y, MIN_DOMAIN};

/// Number of reacting species carried by the model.
pub const SPECIES: usize = 1;
/// Size of the state vector `(ρ, u, e, Y)`.
pub const DIM: usize = 3 + SPECIES;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Upstream {
    pub rho: f64,
    pub u: f64,
    pub e: f64,
}

/// Physical parameters of one detonation problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasWaveConfig {
    #[serde(rename = "Gamma")]
    pub gamma: f64,
    #[serde(rename = "Cv")]
    pub cv: f64,
    pub q: f64,
    #[serde(rename = "EA")]
    pub activation_energy: f64,
    /// Ignition temperature: no reaction at or below it.
    #[serde(rename = "Ti_low")]
    pub ti_low: f64,
    /// Cutoff temperature: full reaction at or above it.
    #[serde(rename = "Ti_high")]
    pub ti_high: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "Y0")]
    pub y0: f64,
    pub upstream: Upstream,
}

impl Default for GasWaveConfig {
    /// An overdriven wave with moderate heat release, used by the CLI and tests.
    fn default() -> Self {
        Self {
            gamma: 0.2,
            cv: 1.0,
            q: 2.0,
            activation_energy: 10.0,
            ti_low: 1.5,
            ti_high: 3.0,
            k: 1.0,
            y0: 1.0,
            upstream: Upstream {
                rho: 1.0,
                u: -3.0,
                e: 1.0,
            },
        }
    }
}

impl GasWaveConfig {
    pub fn validate(&self) -> Result<()> {
        fn check(field: &'static str, ok: bool, reason: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidConfig {
                    field,
                    reason: reason.to_string(),
                })
            }
        }
        let pos = |v: f64| v.is_finite() && v > 0.0;
        check("Gamma", pos(self.gamma), "must be positive")?;
        check("Cv", pos(self.cv), "must be positive")?;
        check("q", self.q.is_finite() && self.q >= 0.0, "must be nonnegative")?;
        check(
            "EA",
            self.activation_energy.is_finite() && self.activation_energy >= 0.0,
            "must be nonnegative",
        )?;
        check("Ti_low", pos(self.ti_low), "must be positive")?;
        check(
            "Ti_high",
            self.ti_high.is_finite() && self.ti_high >= self.ti_low,
            "must be at least Ti_low",
        )?;
        check("K", pos(self.k), "must be positive")?;
        check("Y0", (0.0..=1.0).contains(&self.y0), "must lie in [0, 1]")?;
        check("upstream.rho", pos(self.upstream.rho), "must be positive")?;
        check("upstream.e", pos(self.upstream.e), "must be positive")?;
        check(
            "upstream.u",
            self.upstream.u.is_finite() && self.upstream.u < 0.0,
            "must be negative (right-moving wave in the steady frame)",
        )?;
        Ok(())
    }

    /// Upstream state including the unburned reactant fraction `Y0`.
    pub fn upstream_state(&self) -> StateW {
        StateW {
            rho: self.upstream.rho,
            u: self.upstream.u,
            e: self.upstream.e,
            reactant: self.y0,
        }
    }

    /// Arrhenius factor `φ = exp(-E_A / ((Γ+1) e))`.
    pub fn arrhenius(&self, e: f64) -> f64 {
        (-self.activation_energy / ((self.gamma + 1.0) * e)).exp()
    }

    /// `dφ/de`.
    pub fn arrhenius_de(&self, e: f64) -> f64 {
        self.arrhenius(e) * self.activation_energy / ((self.gamma + 1.0) * e * e)
    }

    /// Reaction switch `β(T)`: 0 at or below the ignition temperature, 1 at
    /// or above the cutoff. Inside the window the cutoff is not modelled.
    pub fn reaction_switch(&self, temperature: f64) -> Result<f64> {
        if temperature >= self.ti_high {
            Ok(1.0)
        } else if temperature <= self.ti_low {
            Ok(0.0)
        } else {
            Err(Error::InsideIgnitionWindow {
                temperature,
                low: self.ti_low,
                high: self.ti_high,
            })
        }
    }
}

/// A configuration document: gas parameters plus solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    #[serde(flatten)]
    pub gas: GasWaveConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(rename = "eps_Y", default, skip_serializing_if = "Option::is_none")]
    pub eps_y: Option<f64>,
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text)?;
        file.gas.validate()?;
        if let Some(t) = file.tol {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::InvalidConfig {
                    field: "tol",
                    reason: "must be positive".into(),
                });
            }
        }
        if let Some(eps) = file.eps_y {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::InvalidConfig {
                    field: "eps_Y",
                    reason: "must lie in (0, 1)".into(),
                });
            }
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Gas state `W = (ρ, u, e, Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateW {
    pub rho: f64,
    pub u: f64,
    pub e: f64,
    #[serde(rename = "Y")]
    pub reactant: f64,
}

impl StateW {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(Error::InadmissibleState(format!("density {} is not positive", self.rho)));
        }
        if !(self.e.is_finite() && self.e > 0.0) {
            return Err(Error::InadmissibleState(format!("internal energy {} is not positive", self.e)));
        }
        if !self.u.is_finite() || !(0.0..=1.0).contains(&self.reactant) {
            return Err(Error::InadmissibleState(format!(
                "velocity {} or reactant fraction {} out of range",
                self.u, self.reactant
            )));
        }
        Ok(())
    }

    pub fn to_vector(&self) -> Vector4<f64> {
        Vector4::new(self.rho, self.u, self.e, self.reactant)
    }

    pub fn temperature(&self, cfg: &GasWaveConfig) -> f64 {
        self.e / cfg.cv
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thermo {
    pub p: f64,
    pub temperature: f64,
    pub sound_speed: f64,
    pub p_rho: f64,
    pub p_e: f64,
}

pub fn thermo(state: &StateW, cfg: &GasWaveConfig) -> Result<Thermo> {
    state.validate()?;
    Ok(thermo_unchecked(state, cfg))
}

pub(crate) fn thermo_unchecked(state: &StateW, cfg: &GasWaveConfig) -> Thermo {
    let g = cfg.gamma;
    Thermo {
        p: g * state.rho * state.e,
        temperature: state.e / cfg.cv,
        sound_speed: (g * (g + 1.0) * state.e).sqrt(),
        p_rho: g * state.e,
        p_e: g * state.rho,
    }
}

/// Conserved density `F⁰`, flux `F¹` and source `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fluxes {
    pub f0: Vector4<f64>,
    pub f1: Vector4<f64>,
    pub r: Vector4<f64>,
}

/// Fluxes at `state`; the source carries the reaction switch at the state's
/// temperature.
pub fn fluxes(state: &StateW, cfg: &GasWaveConfig) -> Result<Fluxes> {
    let th = thermo(state, cfg)?;
    let beta = cfg.reaction_switch(th.temperature)?;
    let StateW { rho, u, e, reactant: y } = *state;
    let total = rho * (e + 0.5 * u * u);
    let rate = beta * cfg.k * y * rho * cfg.arrhenius(e);
    Ok(Fluxes {
        f0: Vector4::new(rho, rho * u, total, rho * y),
        f1: Vector4::new(rho * u, rho * u * u + th.p, (total + th.p) * u, rho * u * y),
        r: Vector4::new(0.0, 0.0, cfg.q * rate, -rate),
    })
}

/// Source with the reaction fully on, as on the burning side of the shock.
pub(crate) fn burning_source(state: &StateW, cfg: &GasWaveConfig) -> Vector4<f64> {
    let rate = cfg.k * state.reactant * state.rho * cfg.arrhenius(state.e);
    Vector4::new(0.0, 0.0, cfg.q * rate, -rate)
}

pub(crate) fn conserved(state: &StateW) -> Vector4<f64> {
    let StateW { rho, u, e, reactant } = *state;
    Vector4::new(rho, rho * u, rho * (e + 0.5 * u * u), rho * reactant)
}

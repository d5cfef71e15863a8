use std::path::PathBuf;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use zndstab::evans::Method;
use zndstab::stability::SweepParameter;

#[derive(Debug, Parser)]
#[command(name = "zndstab", version, about = "Spectral stability of steady ZND detonations")]
pub struct Cli {
    /// Problem file (JSON). The built-in overdriven wave is used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Integration tolerance. Overrides ZNDSTAB_TOL and the problem file.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Truncation length in the reaction coordinate.
    #[arg(long = "M", global = true)]
    pub m: Option<f64>,
    #[arg(long, global = true, default_value = "neutral")]
    pub method: Method,
    /// Worker threads for λ-parallel work.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output file; standard output when omitted (no manifest is written then).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Steady profile on a log-spaced grid in y, as CSV.
    Profile {
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Evans determinant at one λ, as JSON.
    Evans {
        #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
        lambda: Complex64,
    },
    /// Winding number over an offset semicircle; samples as CSV, report as JSON.
    Contour {
        #[arg(long)]
        radius: f64,
        /// Multiplier on the default contour node counts.
        #[arg(long, default_value_t = 1)]
        density: usize,
    },
    /// Follow a root of D while one configuration field varies.
    Roots {
        /// Gamma, q, EA, K or u_plus.
        #[arg(long)]
        parameter: SweepParameter,
        /// Comma-separated list or `start:end:count`.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        /// Converged root at the first value.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
        seed: Complex64,
        #[arg(long, default_value_t = 1e-8)]
        newton_tol: f64,
    },
    /// Model-problem mesh-count table, as CSV. Exits 4 if a trend check fails.
    Bench {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=2))]
        table: u32,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Profile { .. } => "profile",
            Command::Evans { .. } => "evans",
            Command::Contour { .. } => "contour",
            Command::Roots { .. } => "roots",
            Command::Bench { .. } => "bench",
        }
    }
}

/// Accepts `a+bi` forms and `re,im` pairs.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    if let Ok(z) = s.parse::<Complex64>() {
        return Ok(z);
    }
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [re, im] => match (re.parse::<f64>(), im.parse::<f64>()) {
            (Ok(re), Ok(im)) => Ok(Complex64::new(re, im)),
            _ => Err(format!("cannot parse `{s}` as a complex number")),
        },
        _ => Err(format!("cannot parse `{s}` as a complex number (use a+bi or re,im)")),
    }
}

pub fn parse_values(s: &str) -> Result<Vec<f64>, String> {
    let bad = || format!("cannot parse parameter values `{s}`");
    let values: Vec<f64> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, end, count] = parts.as_slice() else {
            return Err(bad());
        };
        let start: f64 = start.trim().parse().map_err(|_| bad())?;
        let end: f64 = end.trim().parse().map_err(|_| bad())?;
        let count: usize = count.trim().parse().map_err(|_| bad())?;
        match count {
            0 => vec![],
            1 => vec![start],
            n => (0..n).map(|i| start + (end - start) * i as f64 / (n - 1) as f64).collect(),
        }
    } else {
        s.split(',').map(|v| v.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(bad());
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms() {
        assert_eq!(parse_complex("1+1i").unwrap(), Complex64::new(1.0, 1.0));
        assert_eq!(parse_complex("2").unwrap(), Complex64::new(2.0, 0.0));
        assert_eq!(parse_complex("0.5,-3").unwrap(), Complex64::new(0.5, -3.0));
        assert!(parse_complex("x").is_err());
    }

    #[test]
    fn value_lists() {
        assert_eq!(parse_values("1:2:3").unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(parse_values("3, 4").unwrap(), vec![3.0, 4.0]);
        assert!(parse_values("1:2").is_err());
        assert!(parse_values("").is_err());
    }
}

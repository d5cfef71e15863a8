//! Closed contours in the λ-plane, argument-principle winding numbers, and
//! adaptive sampling so that consecutive phase steps stay small.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContourKind {
    /// Right half-disk of the given radius; the flat side sits at `Re λ = offset`.
    Semicircle { radius: f64, offset: f64 },
    Circle { center: Complex64, radius: f64 },
    Polyline,
}

/// Closed, positively oriented curve; `nodes.first() == nodes.last()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub nodes: Vec<Complex64>,
    pub kind: ContourKind,
}

pub const MIN_NODES: usize = 8;

impl Contour {
    pub fn circle(center: Complex64, radius: f64, n: usize) -> Result<Self> {
        if !(radius > 0.0) || n < MIN_NODES - 1 {
            return Err(Error::InvalidArgument(format!(
                "circle needs radius > 0 and at least {} distinct nodes",
                MIN_NODES - 1
            )));
        }
        let mut nodes: Vec<Complex64> = (0..n)
            .map(|k| center + Complex64::from_polar(radius, TAU * k as f64 / n as f64))
            .collect();
        nodes.push(nodes[0]);
        Ok(Self {
            nodes,
            kind: ContourKind::Circle { center, radius },
        })
    }

    /// Semicircle of `radius` in `Re λ ≥ offset`: the arc runs counter-clockwise
    /// from `offset - iR` to `offset + iR` through `offset + R`, and the flat side
    /// returns down the line `Re λ = offset`.
    pub fn semicircle(radius: f64, offset: f64, arc_nodes: usize, flat_nodes: usize) -> Result<Self> {
        if !(radius > 0.0) || !(offset >= 0.0) || arc_nodes < 4 || flat_nodes < 2 {
            return Err(Error::InvalidArgument(
                "semicircle needs radius > 0, offset >= 0, >= 4 arc and >= 2 flat nodes".into(),
            ));
        }
        let center = Complex64::new(offset, 0.0);
        let mut nodes = Vec::with_capacity(arc_nodes + flat_nodes + 1);
        for k in 0..=arc_nodes {
            let theta = -FRAC_PI_2 + PI * k as f64 / arc_nodes as f64;
            nodes.push(center + Complex64::from_polar(radius, theta));
        }
        for k in 1..flat_nodes {
            let im = radius - 2.0 * radius * k as f64 / flat_nodes as f64;
            nodes.push(Complex64::new(offset, im));
        }
        nodes.push(nodes[0]);
        Ok(Self {
            nodes,
            kind: ContourKind::Semicircle { radius, offset },
        })
    }

    pub fn polyline(mut nodes: Vec<Complex64>) -> Result<Self> {
        if nodes.first() != nodes.last() {
            nodes.push(nodes[0]);
        }
        let c = Self {
            nodes,
            kind: ContourKind::Polyline,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.len() < MIN_NODES {
            return Err(Error::InvalidArgument(format!(
                "contour has {} nodes, needs at least {MIN_NODES}",
                self.nodes.len()
            )));
        }
        if self.nodes.first() != self.nodes.last() {
            return Err(Error::InvalidArgument("contour is not closed".into()));
        }
        Ok(())
    }

    /// Point at fraction `s ∈ [0, 1]` between two nodes, following the curve:
    /// arcs are interpolated in angle, straight pieces linearly.
    pub fn between(&self, a: Complex64, b: Complex64, s: f64) -> Complex64 {
        let arc = match self.kind {
            ContourKind::Circle { center, radius } => Some((center, radius)),
            ContourKind::Semicircle { radius, offset } => {
                let center = Complex64::new(offset, 0.0);
                let on_arc = |p: Complex64| ((p - center).norm() - radius).abs() <= 1e-9 * radius;
                // The two flat-side corners lie on the circle too; the flat side is
                // the only piece whose endpoints share the real part `offset`.
                let flat = (a.re - offset).abs() <= 1e-12 * radius
                    && (b.re - offset).abs() <= 1e-12 * radius;
                (on_arc(a) && on_arc(b) && !flat).then_some((center, radius))
            }
            ContourKind::Polyline => None,
        };
        match arc {
            Some((center, radius)) => {
                let ta = (a - center).arg();
                let mut dt = (b - center).arg() - ta;
                if dt > PI {
                    dt -= TAU;
                } else if dt < -PI {
                    dt += TAU;
                }
                center + Complex64::from_polar(radius, ta + s * dt)
            }
            None => a + (b - a) * s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourSample {
    pub lambda: Complex64,
    pub value: Complex64,
}

/// Phase jump that flags an under-sampled contour.
pub const MAX_WINDING_PHASE_STEP: f64 = FRAC_PI_2;

/// Argument-principle winding number of a closed sample sequence.
///
/// `floor` rejects samples with `|D| < floor` (a zero on or near the contour).
pub fn winding_number(samples: &[Complex64], floor: f64) -> Result<i64> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    for (i, d) in samples.iter().enumerate() {
        if !(d.norm() > floor) {
            return Err(Error::NearRootOnContour { index: i, abs: d.norm() });
        }
    }
    let n = samples.len();
    // A closing duplicate contributes a zero step, so wrap-around is always safe.
    let mut total = 0.0;
    for i in 0..n {
        let a = samples[i];
        let b = samples[(i + 1) % n];
        let step = (b / a).arg();
        if step.abs() >= MAX_WINDING_PHASE_STEP {
            return Err(Error::UnderSampled { index: i, phase: step });
        }
        total += step;
    }
    Ok((total / TAU).round() as i64)
}

pub const DEFAULT_MAX_DEPTH: u32 = 12;

/// Samples `evaluator` on `contour`, bisecting arcs until every consecutive
/// phase step is below `max_phase_step`.
///
/// Evaluations within a refinement round run in parallel.
pub fn refine_contour<F>(
    evaluator: F,
    contour: &Contour,
    max_phase_step: f64,
    max_depth: u32,
) -> Result<Vec<ContourSample>>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    contour.validate()?;
    if !(max_phase_step > 0.0 && max_phase_step <= FRAC_PI_2) {
        return Err(Error::InvalidArgument(format!(
            "max_phase_step must lie in (0, π/2], got {max_phase_step}"
        )));
    }
    let open = &contour.nodes[..contour.nodes.len() - 1];
    let values: Vec<Complex64> = open
        .par_iter()
        .map(|&l| evaluator(l))
        .collect::<Result<_>>()?;

    // Each entry: (lambda, value, depth). The closing node is the first one again.
    let mut pts: Vec<(Complex64, Complex64, u32)> =
        open.iter().zip(values).map(|(&l, v)| (l, v, 0)).collect();
    for p in &pts {
        check_finite(p.0, p.1)?;
    }

    loop {
        let n = pts.len();
        let mut bisect = Vec::new();
        for i in 0..n {
            let (la, va, da) = pts[i];
            let (lb, vb, db) = pts[(i + 1) % n];
            let step = if va.norm() == 0.0 || vb.norm() == 0.0 {
                PI
            } else {
                (vb / va).arg().abs()
            };
            if step >= max_phase_step {
                let depth = da.max(db) + 1;
                if depth > max_depth {
                    return Err(Error::RefinementDepthExceeded { lambda: la });
                }
                bisect.push((i, contour.between(la, lb, 0.5), depth));
            }
        }
        if bisect.is_empty() {
            break;
        }
        let new_values: Vec<Complex64> = bisect
            .par_iter()
            .map(|&(_, l, _)| evaluator(l))
            .collect::<Result<_>>()?;
        let mut next = Vec::with_capacity(n + bisect.len());
        let mut queue = bisect.iter().zip(new_values).peekable();
        for (i, p) in pts.iter().enumerate() {
            next.push(*p);
            if let Some(&(&(j, l, d), v)) = queue.peek() {
                if j == i {
                    check_finite(l, v)?;
                    next.push((l, v, d));
                    queue.next();
                }
            }
        }
        pts = next;
    }

    let mut out: Vec<ContourSample> = pts
        .into_iter()
        .map(|(lambda, value, _)| ContourSample { lambda, value })
        .collect();
    out.push(out[0]);
    Ok(out)
}

fn check_finite(lambda: Complex64, v: Complex64) -> Result<()> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("evaluator returned {v} at λ = {lambda}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn contours_are_closed() {
        let c = Contour::circle(cx(1.0, 0.0), 0.5, 16).unwrap();
        assert_eq!(c.nodes.first(), c.nodes.last());
        let s = Contour::semicircle(2.0, 1e-4, 16, 8).unwrap();
        assert_eq!(s.nodes.first(), s.nodes.last());
        assert!(s.nodes.iter().all(|l| l.re >= 1e-4 - 1e-15));
        assert!(Contour::polyline(vec![cx(0.0, 0.0), cx(1.0, 0.0)]).is_err());
    }

    #[test]
    fn constant_map_has_zero_winding() {
        let c = Contour::circle(cx(0.0, 0.0), 1.0, 16).unwrap();
        let samples: Vec<_> = c.nodes.iter().map(|_| cx(1.0, 0.0)).collect();
        assert_eq!(winding_number(&samples, 1e-12).unwrap(), 0);
    }

    #[test]
    fn simple_zero_winds_once() {
        let z0 = cx(0.3, -0.2);
        let c = Contour::circle(cx(0.0, 0.0), 1.0, 32).unwrap();
        let samples: Vec<_> = c.nodes.iter().map(|&l| l - z0).collect();
        assert_eq!(winding_number(&samples, 1e-12).unwrap(), 1);
    }

    #[test]
    fn model_determinant_has_no_zero_near_one() {
        // λ / (c (λ + 2)) vanishes only at 0 and has its pole at -2.
        let c = Contour::circle(cx(1.0, 0.0), 0.5, 32).unwrap();
        let samples: Vec<_> = c.nodes.iter().map(|&l| l / (10.0 * (l + 2.0))).collect();
        assert_eq!(winding_number(&samples, 1e-12).unwrap(), 0);
    }

    #[test]
    fn winding_flags_undersampling_and_roots() {
        let c = Contour::circle(cx(0.0, 0.0), 1.0, 8).unwrap();
        let cubed: Vec<_> = c.nodes.iter().map(|&l| l * l * l).collect();
        assert!(matches!(winding_number(&cubed, 1e-12), Err(Error::UnderSampled { .. })));
        let through: Vec<_> = c.nodes.iter().map(|&l| l - c.nodes[3]).collect();
        assert!(matches!(
            winding_number(&through, 1e-12),
            Err(Error::NearRootOnContour { .. })
        ));
    }

    #[test]
    fn refine_leaves_constant_alone() {
        let c = Contour::circle(cx(0.0, 0.0), 1.0, 8).unwrap();
        let s = refine_contour(|_| Ok(cx(1.0, 0.0)), &c, FRAC_PI_4, DEFAULT_MAX_DEPTH).unwrap();
        assert_eq!(s.len(), c.nodes.len());
        for (a, b) in s.iter().zip(&c.nodes) {
            assert_eq!(a.lambda, *b);
        }
    }

    #[test]
    fn refine_identity_on_unit_circle() {
        let c = Contour::circle(cx(0.0, 0.0), 1.0, 8).unwrap();
        let s = refine_contour(Ok, &c, FRAC_PI_4, DEFAULT_MAX_DEPTH).unwrap();
        assert!(s.len() >= 9);
        for w in s.windows(2) {
            assert!((w[1].value / w[0].value).arg().abs() < FRAC_PI_4);
            assert!((w[0].lambda.norm() - 1.0).abs() < 1e-12);
        }
        let v: Vec<_> = s.iter().map(|p| p.value).collect();
        assert_eq!(winding_number(&v, 1e-12).unwrap(), 1);
    }

    #[test]
    fn refine_model_oracle_on_semicircle() {
        let oracle = |l: Complex64| Ok(l / (10.0 * (l + 2.0)));
        let c = Contour::semicircle(4.0, 1e-3, 8, 4).unwrap();
        let s = refine_contour(oracle, &c, FRAC_PI_4, DEFAULT_MAX_DEPTH).unwrap();
        let v: Vec<_> = s.iter().map(|p| p.value).collect();
        for (p, val) in s.iter().zip(&v) {
            assert_eq!(oracle(p.lambda).unwrap(), *val);
        }
        assert_eq!(winding_number(&v, 1e-12).unwrap(), 0);
    }

    #[test]
    fn refine_gives_up_on_root_on_contour() {
        let c = Contour::circle(cx(0.0, 0.0), 1.0, 8).unwrap();
        let root = c.between(c.nodes[1], c.nodes[2], 1.0 / 3.0);
        let err = refine_contour(|l| Ok(l - root), &c, FRAC_PI_4, 6).unwrap_err();
        assert!(matches!(err, Error::RefinementDepthExceeded { .. }));
    }
}

use num_complex::Complex64;

use crate::error::{Error, Result};

const DEGENERATE_DERIVATIVE: f64 = 1e-14;

/// Centered finite-difference step along the real direction.
pub fn fd_step(lambda: Complex64) -> f64 {
    1e-6 * lambda.norm().max(1.0)
}

/// Complex Newton iteration for an analytic `evaluator`, with the derivative
/// taken by centered differences along the real axis.
pub fn newton_root<F>(evaluator: F, seed: Complex64, tol: f64, max_iter: usize) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    newton_root_counted(evaluator, seed, tol, max_iter).map(|(root, _)| root)
}

/// As [`newton_root`], also returning the number of Newton updates taken.
pub fn newton_root_counted<F>(
    evaluator: F,
    seed: Complex64,
    tol: f64,
    max_iter: usize,
) -> Result<(Complex64, usize)>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let mut lambda = seed;
    for iter in 1..=max_iter {
        let d = evaluator(lambda)?;
        if d == Complex64::new(0.0, 0.0) {
            return Ok((lambda, iter - 1));
        }
        let h = fd_step(lambda);
        let deriv = (evaluator(lambda + h)? - evaluator(lambda - h)?) / (2.0 * h);
        if deriv.norm() < DEGENERATE_DERIVATIVE {
            return Err(Error::DegenerateDerivative {
                at: lambda,
                abs: deriv.norm(),
            });
        }
        let step = d / deriv;
        lambda -= step;
        if !(lambda.re.is_finite() && lambda.im.is_finite()) {
            break;
        }
        if step.norm() < tol {
            return Ok((lambda, iter));
        }
    }
    Err(Error::NewtonNoConvergence {
        last: lambda,
        iterations: max_iter,
    })
}

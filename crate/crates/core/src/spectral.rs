//! Linearization about the steady profile.
//!
//! Normal modes `W e^{λt}` of the linearized equations satisfy
//! `(A¹W)' = (C - λA⁰)W`. In the flux variable `Z = A¹W` this is `Z' = G Z`
//! with `G = (-λA⁰ + C)(A¹)⁻¹`. Behind the shock `G` tends to the block upper
//! triangular `G₋` whose single stable eigenvalue `g₋ = -λ/(u₋+c₋)` and left
//! eigenvector `ℓ` are known in closed form.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4, LU, U4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::znd::{burning_source, conserved, thermo_unchecked, GasWaveConfig, StateW, SteadyWave};

pub type CoefficientMatrix = Matrix4<Complex64>;
pub type CVector = Vector4<Complex64>;

/// Condition estimate of `A¹` above which it is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;
const CHARACTERISTIC_FLOOR: f64 = 1e-12;
const RESONANCE_FLOOR: f64 = 1e-12;
const COLLISION_FLOOR: f64 = 1e-8;

/// Jacobians of `F⁰`, `F¹` and of the burning source `R` with respect to
/// `W = (ρ, u, e, Y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobians {
    pub a0: Matrix4<f64>,
    pub a1: Matrix4<f64>,
    pub c: Matrix4<f64>,
}

pub fn jacobians(state: &StateW, cfg: &GasWaveConfig) -> Result<Jacobians> {
    state.validate()?;
    Ok(jacobians_unchecked(state, cfg))
}

pub(crate) fn jacobians_unchecked(state: &StateW, cfg: &GasWaveConfig) -> Jacobians {
    let StateW { rho, u, e, reactant: y } = *state;
    let th = thermo_unchecked(state, cfg);
    let (p, pr, pe) = (th.p, th.p_rho, th.p_e);
    let kin = e + 0.5 * u * u;
    #[rustfmt::skip]
    let a0 = Matrix4::new(
        1.0, 0.0, 0.0, 0.0,
        u, rho, 0.0, 0.0,
        kin, rho * u, rho, 0.0,
        y, 0.0, 0.0, rho,
    );
    #[rustfmt::skip]
    let a1 = Matrix4::new(
        u, rho, 0.0, 0.0,
        u * u + pr, 2.0 * rho * u, pe, 0.0,
        (kin + pr) * u, rho * kin + p + rho * u * u, (rho + pe) * u, 0.0,
        u * y, rho * y, 0.0, rho * u,
    );
    let k = cfg.k;
    let phi = cfg.arrhenius(e);
    let (psi_rho, psi_e, psi) = (phi, rho * cfg.arrhenius_de(e), rho * phi);
    let row = [k * y * psi_rho, 0.0, k * y * psi_e, k * psi];
    let mut c = Matrix4::zeros();
    for j in 0..4 {
        c[(2, j)] = cfg.q * row[j];
        c[(3, j)] = -row[j];
    }
    Jacobians { a0, a1, c }
}

/// Central-difference Jacobians of [`crate::znd::fluxes`] with the reaction on.
pub fn jacobians_fd(state: &StateW, cfg: &GasWaveConfig) -> Jacobians {
    let base = state.to_vector();
    let eval = |w: Vector4<f64>| {
        let s = StateW { rho: w[0], u: w[1], e: w[2], reactant: w[3] };
        let f1 = {
            let p = cfg.gamma * s.rho * s.e;
            let total = s.rho * (s.e + 0.5 * s.u * s.u);
            Vector4::new(s.rho * s.u, s.rho * s.u * s.u + p, (total + p) * s.u, s.rho * s.u * s.reactant)
        };
        (conserved(&s), f1, burning_source(&s, cfg))
    };
    let mut jac = Jacobians {
        a0: Matrix4::zeros(),
        a1: Matrix4::zeros(),
        c: Matrix4::zeros(),
    };
    for j in 0..4 {
        let h = 1e-6 * base[j].abs().max(1.0);
        let mut wp = base;
        let mut wm = base;
        wp[j] += h;
        wm[j] -= h;
        let (p0, p1, pr) = eval(wp);
        let (m0, m1, mr) = eval(wm);
        jac.a0.set_column(j, &((p0 - m0) / (2.0 * h)));
        jac.a1.set_column(j, &((p1 - m1) / (2.0 * h)));
        jac.c.set_column(j, &((pr - mr) / (2.0 * h)));
    }
    jac
}

/// Largest entrywise discrepancy between the analytic and finite-difference
/// Jacobians, relative to the largest entry of each matrix.
pub fn jacobian_self_check(state: &StateW, cfg: &GasWaveConfig) -> Result<f64> {
    let a = jacobians(state, cfg)?;
    let f = jacobians_fd(state, cfg);
    let rel = |x: &Matrix4<f64>, y: &Matrix4<f64>| (x - y).amax() / x.amax().max(f64::MIN_POSITIVE);
    Ok(rel(&a.a0, &f.a0).max(rel(&a.a1, &f.a1)).max(if a.c.amax() > 0.0 {
        rel(&a.c, &f.c)
    } else {
        f.c.amax()
    }))
}

/// `∂f⁰/∂V` and `∂f¹/∂V`, the gas-dynamic blocks of `A⁰` and `A¹`.
pub fn gas_blocks(state: &StateW, cfg: &GasWaveConfig) -> (Matrix3<f64>, Matrix3<f64>) {
    let j = jacobians_unchecked(state, cfg);
    (
        j.a0.fixed_view::<3, 3>(0, 0).into_owned(),
        j.a1.fixed_view::<3, 3>(0, 0).into_owned(),
    )
}

/// Whether `A¹` is invertible at `state`: `det ∂f¹/∂V` and `ρu` both clear of
/// zero relative to their natural scales. Fails at stagnation and sonic states.
pub fn check_noncharacteristic(state: &StateW, cfg: &GasWaveConfig) -> bool {
    if state.validate().is_err() {
        return false;
    }
    let c = thermo_unchecked(state, cfg).sound_speed;
    let speed = state.u.abs() + c;
    let (_, f1v) = gas_blocks(state, cfg);
    let det_scale = state.rho * state.rho * speed.powi(3);
    f1v.determinant().abs() >= CHARACTERISTIC_FLOOR * det_scale
        && (state.rho * state.u).abs() >= CHARACTERISTIC_FLOOR * state.rho * speed
}

fn condition_1(a: &Matrix4<f64>) -> f64 {
    let norm1 = |m: &Matrix4<f64>| m.column_iter().map(|c| c.lp_norm(1)).fold(0.0, f64::max);
    match a.try_inverse() {
        Some(inv) => norm1(a) * norm1(&inv),
        None => f64::INFINITY,
    }
}

fn complexify(m: &Matrix4<f64>) -> CoefficientMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}

fn assemble_g(jac: &Jacobians, lambda: Complex64) -> Result<CoefficientMatrix> {
    let condition = condition_1(&jac.a1);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::NearCharacteristic { condition });
    }
    let m = complexify(&jac.c) - complexify(&jac.a0) * lambda;
    // G A¹ = M, so A¹ᵀ Gᵀ = Mᵀ.
    let lu = complexify(&jac.a1.transpose()).lu();
    let gt = lu
        .solve(&m.transpose())
        .ok_or(Error::NearCharacteristic { condition })?;
    Ok(gt.transpose())
}

/// `G(λ, y) = (-λA⁰ + C)(A¹)⁻¹` on the profile.
pub fn coefficient_g(wave: &SteadyWave, lambda: Complex64, y: f64) -> Result<CoefficientMatrix> {
    let s = wave.profile_at(y)?;
    if !check_noncharacteristic(&s, &wave.config) {
        return Err(Error::NearCharacteristic { condition: f64::INFINITY });
    }
    assemble_g(&jacobians_unchecked(&s, &wave.config), lambda)
}

/// Limit of `G` behind the shock, assembled from its blocks
/// `[[-λ f⁰_V (f¹_V)⁻¹, (λ f⁰_V (f¹_V)⁻¹ f¹_Y + Q K ψ)/g¹], [0, -(λ g⁰ + K ψ)/g¹]]`.
pub fn limit_g_minus(wave: &SteadyWave, lambda: Complex64) -> Result<CoefficientMatrix> {
    let cfg = &wave.config;
    let s = wave.burned;
    if !check_noncharacteristic(&s, cfg) {
        return Err(Error::NearCharacteristic { condition: f64::INFINITY });
    }
    let (f0v, f1v) = gas_blocks(&s, cfg);
    let f1v_inv = f1v.try_inverse().ok_or(Error::NearCharacteristic { condition: f64::INFINITY })?;
    let transport = f0v * f1v_inv;
    let psi = s.rho * cfg.arrhenius(s.e);
    let (g0, g1) = (s.rho, s.rho * s.u);
    // p does not depend on Y, so f¹_Y vanishes.
    let f1y = Vector3::<f64>::zeros();
    let top = transport * f1y;
    let mut g = CoefficientMatrix::zeros();
    for i in 0..3 {
        for j in 0..3 {
            g[(i, j)] = -lambda * transport[(i, j)];
        }
        let q_k_psi = if i == 2 { cfg.q * cfg.k * psi } else { 0.0 };
        g[(i, 3)] = (lambda * top[i] + q_k_psi) / g1;
    }
    g[(3, 3)] = -(lambda * g0 + cfg.k * psi) / g1;
    Ok(g)
}

/// Constant coefficient matrix ahead of the shock, where the reaction is off.
pub fn limit_g_plus(wave: &SteadyWave, lambda: Complex64) -> Result<CoefficientMatrix> {
    let s = wave.config.upstream_state();
    let mut jac = jacobians_unchecked(&s, &wave.config);
    jac.c = Matrix4::zeros();
    assemble_g(&jac, lambda)
}

pub fn eigenvalues(g: &CoefficientMatrix) -> Result<[Complex64; 4]> {
    let ev = g
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::InvalidArgument("Schur form did not triangularize".into()))?;
    Ok([ev[0], ev[1], ev[2], ev[3]])
}

/// Number of eigenvalues with positive real part.
pub fn unstable_count(g: &CoefficientMatrix) -> Result<usize> {
    Ok(eigenvalues(g)?.iter().filter(|v| v.re > 0.0).count())
}

/// Stable left eigenpair of `G₋`: `ℓᵀG₋ = g₋ℓᵀ`, normalized so `ℓ₃ = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableMode {
    pub ell: CVector,
    pub g_minus: Complex64,
}

impl StableMode {
    /// `‖ℓᵀG₋ − g₋ℓᵀ‖ / ‖ℓ‖`.
    pub fn residual(&self, g_minus_matrix: &CoefficientMatrix) -> f64 {
        (g_minus_matrix.transpose() * self.ell - self.ell * self.g_minus).norm() / self.ell.norm()
    }
}

fn check_lambda(lambda: Complex64) -> Result<()> {
    if !(lambda.re.is_finite() && lambda.im.is_finite()) {
        return Err(Error::Domain { lambda, reason: "non-finite λ".into() });
    }
    if lambda.re < 0.0 {
        return Err(Error::Domain { lambda, reason: "Re λ < 0".into() });
    }
    if lambda.norm() == 0.0 {
        return Err(Error::Domain { lambda, reason: "λ = 0 makes the decaying mode neutral".into() });
    }
    Ok(())
}

/// Closed-form stable left mode at the burned state.
pub fn stable_left_mode(wave: &SteadyWave, lambda: Complex64) -> Result<StableMode> {
    check_lambda(lambda)?;
    let cfg = &wave.config;
    let s = wave.burned;
    let th = thermo_unchecked(&s, cfg);
    let (rho, u, e, c) = (s.rho, s.u, s.e, th.sound_speed);
    if !(u < 0.0 && u.abs() < c) {
        return Err(Error::ChapmanJouguetOrSonic { discriminant_min: wave.discriminant_min });
    }
    let pe_rho = th.p_e / rho;
    let ell_v = Vector3::new(
        th.p_rho - c * u + pe_rho * (0.5 * u * u - e),
        c - pe_rho * u,
        pe_rho,
    ) / pe_rho;

    let alpha = 1.0 / (u + c);
    let psi = rho * cfg.arrhenius(e);
    let (g0, g1) = (rho, rho * u);
    let (f0v, f1v) = gas_blocks(&s, cfg);
    let f1v_inv = f1v.try_inverse().ok_or(Error::NearCharacteristic { condition: f64::INFINITY })?;
    let f1y = Vector3::<f64>::zeros();
    let q_vec = Vector3::new(0.0, 0.0, cfg.q);
    let numer = lambda * ell_v.dot(&(f0v * f1v_inv * f1y)) + cfg.k * psi * ell_v.dot(&q_vec);
    let denom = lambda * (g0 - alpha * g1) + cfg.k * psi;
    if denom.norm() <= RESONANCE_FLOOR * (lambda.norm() * g0 + cfg.k * psi) {
        return Err(Error::ReactionResonance { lambda });
    }
    let ell_y = numer / denom;
    let cx = |v: f64| Complex64::new(v, 0.0);
    Ok(StableMode {
        ell: CVector::new(cx(ell_v[0]), cx(ell_v[1]), cx(ell_v[2]), ell_y),
        g_minus: -lambda * alpha,
    })
}

fn null_vector(m: &CoefficientMatrix) -> CVector {
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let idx = svd.singular_values.imin();
    v_t.row(idx).adjoint()
}

/// Index of the eigenvalue with `Re(g/λ) < 0`, which must be unique and
/// separated from the others.
fn select_stable(values: &[Complex64; 4], lambda: Complex64) -> Result<usize> {
    let ratios: Vec<f64> = values.iter().map(|g| (g / lambda).re).collect();
    let negatives: Vec<usize> = (0..4).filter(|&i| ratios[i] < 0.0).collect();
    if negatives.len() != 1 {
        return Err(Error::BranchAmbiguity { lambda });
    }
    let i = negatives[0];
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for (j, v) in values.iter().enumerate() {
        if j != i && (v - values[i]).norm() <= COLLISION_FLOOR * scale {
            return Err(Error::BranchAmbiguity { lambda });
        }
    }
    Ok(i)
}

/// Stable left eigenpair from a general eigensolve of `G₋`, normalized like
/// [`stable_left_mode`]. Independent of the closed form.
pub fn stable_left_mode_numeric(wave: &SteadyWave, lambda: Complex64) -> Result<StableMode> {
    check_lambda(lambda)?;
    let g = limit_g_minus(wave, lambda)?;
    let values = eigenvalues(&g)?;
    let i = select_stable(&values, lambda)?;
    let shifted = g.transpose() - CoefficientMatrix::identity() * values[i];
    let ell = null_vector(&shifted);
    Ok(StableMode {
        ell: ell / ell[2],
        g_minus: values[i],
    })
}

/// Rank-one spectral projection onto the stable eigenvalue of `G₋`.
fn stable_projection(wave: &SteadyWave, lambda: Complex64) -> Result<CoefficientMatrix> {
    let g = limit_g_minus(wave, lambda)?;
    let values = eigenvalues(&g)?;
    let i = select_stable(&values, lambda)?;
    let shift = CoefficientMatrix::identity() * values[i];
    let r = null_vector(&(g - shift));
    let l = null_vector(&(g.transpose() - shift));
    let pairing = l.dot(&r);
    if pairing.norm() <= COLLISION_FLOOR * l.norm() * r.norm() {
        return Err(Error::BranchAmbiguity { lambda });
    }
    Ok(r * l.transpose() / pairing)
}

/// Transports `ℓ` along a piecewise-linear path in `λ` by Kato's equation
/// `dℓᵀ/dt = ℓᵀ dP/dt`, starting from the closed-form mode at `path[0]`.
/// Returns `ℓ` at every path node.
pub fn kato_continuation(wave: &SteadyWave, path: &[Complex64]) -> Result<Vec<CVector>> {
    let Some(&start) = path.first() else {
        return Ok(vec![]);
    };
    let mut ell = stable_left_mode(wave, start)?.ell;
    let mut out = vec![ell];
    let dp = |lambda: Complex64, dl: Complex64| -> Result<CoefficientMatrix> {
        let h = 1e-5 * lambda.norm().max(1.0);
        let plus = stable_projection(wave, lambda + h)?;
        let minus = stable_projection(wave, lambda - h)?;
        Ok((plus - minus) * (dl / (2.0 * h)))
    };
    for seg in path.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let dl = b - a;
        let n = ((dl.norm() / (0.02 * a.norm().min(b.norm()).max(1.0))).ceil() as usize).max(8);
        let dt = 1.0 / n as f64;
        for k in 0..n {
            let t = k as f64 * dt;
            let at = |s: f64| a + dl * s;
            check_lambda(at(t))?;
            let rhs = |l: &CVector, s: f64| -> Result<CVector> { Ok(dp(at(s), dl)?.transpose() * l) };
            let half = Complex64::new(0.5 * dt, 0.0);
            let k1 = rhs(&ell, t)?;
            let k2 = rhs(&(ell + k1 * half), t + 0.5 * dt)?;
            let k3 = rhs(&(ell + k2 * half), t + 0.5 * dt)?;
            let k4 = rhs(&(ell + k3 * Complex64::new(dt, 0.0)), t + dt)?;
            ell += (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * Complex64::new(dt / 6.0, 0.0);
            // Remove drift out of the left eigenspace.
            ell = stable_projection(wave, at(t + dt))?.transpose() * ell;
        }
        out.push(ell);
    }
    Ok(out)
}

/// `λ[F⁰] + R(W̄(0⁻))` with `[F⁰] = F⁰(W₊) − F⁰(W̄(0⁻))`.
pub fn jump_vector(wave: &SteadyWave, lambda: Complex64) -> CVector {
    let jump = conserved(&wave.config.upstream_state()) - conserved(&wave.neumann);
    let r = burning_source(&wave.neumann, &wave.config);
    CVector::from_fn(|i, _| lambda * jump[i] + r[i])
}

/// Everything the shooting methods need at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralFrame {
    pub lambda: Complex64,
    pub ell: [Complex64; 4],
    pub g_minus: Complex64,
    pub jump: [Complex64; 4],
}

impl SpectralFrame {
    pub fn new(wave: &SteadyWave, lambda: Complex64) -> Result<Self> {
        let mode = stable_left_mode(wave, lambda)?;
        let jump = jump_vector(wave, lambda);
        Ok(Self {
            lambda,
            ell: mode.ell.into(),
            g_minus: mode.g_minus,
            jump: jump.into(),
        })
    }
}

/// Fast evaluation of `G` and `Gᵀ` products along the profile at fixed `λ`.
pub(crate) struct ProfileOperator<'a> {
    pub wave: &'a SteadyWave,
    pub lambda: Complex64,
}

pub(crate) struct PointOperator {
    m: Matrix4<Complex64>,
    lu: LU<f64, U4, U4>,
    lu_t: LU<f64, U4, U4>,
    /// `dx/dy`.
    pub scale: f64,
}

impl ProfileOperator<'_> {
    pub fn at(&self, y: f64) -> PointOperator {
        let s = self.wave.state_at(y);
        let jac = jacobians_unchecked(&s, &self.wave.config);
        PointOperator {
            m: complexify(&jac.c) - complexify(&jac.a0) * self.lambda,
            lu: jac.a1.lu(),
            lu_t: jac.a1.transpose().lu(),
            scale: self.wave.m / (s.rho * self.wave.config.arrhenius(s.e)),
        }
    }

    pub fn a0_w_prime(&self, y: f64) -> Vector4<f64> {
        let s = self.wave.state_at(y);
        jacobians_unchecked(&s, &self.wave.config).a0 * self.wave.profile_derivative(y)
    }
}

fn solve_real(lu: &LU<f64, U4, U4>, v: &CVector) -> CVector {
    let re = lu.solve(&v.map(|z| z.re)).unwrap_or_else(|| Vector4::repeat(f64::NAN));
    let im = lu.solve(&v.map(|z| z.im)).unwrap_or_else(|| Vector4::repeat(f64::NAN));
    CVector::from_fn(|i, _| Complex64::new(re[i], im[i]))
}

impl PointOperator {
    /// `G z`.
    pub fn apply(&self, z: &CVector) -> CVector {
        self.m * solve_real(&self.lu, z)
    }

    /// `Gᵀ w`.
    pub fn apply_transpose(&self, w: &CVector) -> CVector {
        solve_real(&self.lu_t, &(self.m.transpose() * w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::znd::build_wave;
    use proptest::prelude::*;

    fn wave() -> SteadyWave {
        build_wave(&GasWaveConfig::default()).unwrap()
    }

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn a0_first_row_and_burned_source_structure() {
        let w = wave();
        let j = jacobians(&w.neumann, &w.config).unwrap();
        assert_eq!(j.a0.row(0).clone_owned(), nalgebra::RowVector4::new(1.0, 0.0, 0.0, 0.0));
        let jb = jacobians(&w.burned, &w.config).unwrap();
        assert_eq!(jb.c.fixed_view::<4, 3>(0, 0).amax(), 0.0);
        assert!(jb.c[(2, 3)] > 0.0 && jb.c[(3, 3)] < 0.0);
    }

    #[test]
    fn determinant_of_gas_block() {
        let w = wave();
        for s in [w.neumann, w.burned] {
            let (_, f1v) = gas_blocks(&s, &w.config);
            let c = thermo_unchecked(&s, &w.config).sound_speed;
            let closed = s.rho * s.rho * s.u * (s.u * s.u - c * c);
            assert!((f1v.determinant() - closed).abs() < 1e-12 * closed.abs());
        }
    }

    #[test]
    fn noncharacteristic_detects_stagnation_and_sonic() {
        let w = wave();
        let cfg = &w.config;
        assert!(check_noncharacteristic(&w.neumann, cfg));
        assert!(check_noncharacteristic(&w.burned, cfg));
        let c = thermo_unchecked(&w.burned, cfg).sound_speed;
        assert!(!check_noncharacteristic(&StateW { u: 0.0, ..w.burned }, cfg));
        assert!(!check_noncharacteristic(&StateW { u: -c, ..w.burned }, cfg));
    }

    #[test]
    fn g_reconstructs_and_limits() {
        let w = wave();
        let lambda = cx(0.7, -2.0);
        let y = -0.8;
        let g = coefficient_g(&w, lambda, y).unwrap();
        let j = jacobians(&w.profile_at(y).unwrap(), &w.config).unwrap();
        let lhs = complexify(&j.c) - complexify(&j.a0) * lambda;
        assert!((g * complexify(&j.a1) - lhs).norm() < 1e-12 * lhs.norm());
        let far = coefficient_g(&w, lambda, -40.0 / w.config.k).unwrap();
        let lim = limit_g_minus(&w, lambda).unwrap();
        assert!((far - lim).norm() < 1e-10 * lim.norm());
        for j in 0..3 {
            assert_eq!(lim[(3, j)], cx(0.0, 0.0));
        }
        let op = ProfileOperator { wave: &w, lambda }.at(y);
        let z = CVector::new(cx(1.0, 0.5), cx(-0.2, 0.0), cx(0.0, 3.0), cx(0.1, 0.1));
        assert!((op.apply(&z) - g * z).norm() < 1e-12 * (g * z).norm());
        assert!((op.apply_transpose(&z) - g.transpose() * z).norm() < 1e-12 * (g.transpose() * z).norm());
    }

    #[test]
    fn zero_frequency_matrix() {
        let mut cfg = GasWaveConfig::default();
        cfg.q = 0.0;
        cfg.y0 = 0.0;
        let w = build_wave(&cfg).unwrap();
        let g = coefficient_g(&w, cx(0.0, 0.0), -1.0).unwrap();
        // With Y = 0 the source only couples through Y, so only the Y column survives.
        for i in 0..4 {
            for j in 0..3 {
                assert_eq!(g[(i, j)], cx(0.0, 0.0));
            }
        }
    }

    #[test]
    fn characteristic_speed_eigenvalue() {
        let w = wave();
        let (f0v, f1v) = gas_blocks(&w.burned, &w.config);
        let c = thermo_unchecked(&w.burned, &w.config).sound_speed;
        let a = w.burned.u + c;
        let m = f0v.try_inverse().unwrap() * f1v - Matrix3::identity() * a;
        assert!(m.determinant().abs() < 1e-12 * (f0v.try_inverse().unwrap() * f1v).norm().powi(3));
    }

    #[test]
    fn closed_form_mode() {
        let w = wave();
        for lambda in [cx(1.0, 0.0), cx(0.3, 5.0), cx(8.0, -60.0), cx(1e-3, 0.2)] {
            let mode = stable_left_mode(&w, lambda).unwrap();
            let g = limit_g_minus(&w, lambda).unwrap();
            assert!(mode.residual(&g) < 1e-10, "{lambda}: {}", mode.residual(&g));
            assert!(mode.g_minus.re < 0.0);
            assert_eq!(mode.ell[2], cx(1.0, 0.0));
            let numeric = stable_left_mode_numeric(&w, lambda).unwrap();
            assert!((numeric.ell - mode.ell).norm() < 1e-8 * mode.ell.norm());
            assert!((numeric.g_minus - mode.g_minus).norm() < 1e-10 * mode.g_minus.norm());
        }
        let l1 = stable_left_mode(&w, cx(1.0, 0.0)).unwrap().ell;
        let l2 = stable_left_mode(&w, cx(3.0, 9.0)).unwrap().ell;
        assert_eq!(l1.fixed_rows::<3>(0), l2.fixed_rows::<3>(0));
        assert!(matches!(stable_left_mode(&w, cx(0.0, 0.0)), Err(Error::Domain { .. })));
        assert!(matches!(stable_left_mode(&w, cx(-1.0, 0.0)), Err(Error::Domain { .. })));
    }

    #[test]
    fn kato_single_point_and_monodromy() {
        let w = wave();
        let l0 = cx(1.0, 0.0);
        assert_eq!(kato_continuation(&w, &[l0]).unwrap()[0], stable_left_mode(&w, l0).unwrap().ell);
        let path: Vec<Complex64> = (0..=24)
            .map(|k| l0 + Complex64::from_polar(0.3, std::f64::consts::TAU * k as f64 / 24.0) - 0.3)
            .collect();
        let ells = kato_continuation(&w, &path).unwrap();
        let (first, last) = (ells[0], ells[ells.len() - 1]);
        assert!((first - last).norm() < 1e-8 * first.norm(), "{}", (first - last).norm());
    }

    #[test]
    fn kato_parallel_to_closed_form() {
        let w = wave();
        let path: Vec<Complex64> = (0..10).map(|k| cx(0.05 + 0.5 * k as f64, 2.0 * k as f64)).collect();
        let ells = kato_continuation(&w, &path).unwrap();
        for (l, lambda) in ells.iter().zip(&path) {
            let closed = stable_left_mode(&w, *lambda).unwrap().ell;
            let ratio: Vec<Complex64> = (0..4).map(|i| l[i] / closed[i]).collect();
            for r in &ratio[1..] {
                assert!((r - ratio[0]).norm() < 1e-6 * ratio[0].norm(), "{lambda}: {ratio:?}");
            }
        }
    }

    #[test]
    fn jump_vector_cases() {
        let w = wave();
        let j0 = jump_vector(&w, cx(0.0, 0.0));
        let r = burning_source(&w.neumann, &w.config);
        for i in 0..4 {
            assert_eq!(j0[i], cx(r[i], 0.0));
        }
        assert!(jump_vector(&w, cx(1.0, 0.0))[0].re < 0.0);
        let mut cfg = GasWaveConfig::default();
        cfg.q = 0.0;
        cfg.y0 = 0.0;
        let w0 = build_wave(&cfg).unwrap();
        let j = jump_vector(&w0, cx(2.0, 1.0));
        let jf = conserved(&cfg.upstream_state()) - conserved(&w0.neumann);
        for i in 0..4 {
            assert_eq!(j[i], cx(2.0, 1.0) * jf[i]);
        }
    }

    #[test]
    fn kato_stays_on_decaying_branch_near_axis() {
        let w = wave();
        let path: Vec<Complex64> = (0..12).map(|k| cx(2.0 / (1.0 + k as f64), 1.0)).collect();
        kato_continuation(&w, &path).unwrap();
        for lambda in &path {
            let m = stable_left_mode_numeric(&w, *lambda).unwrap();
            assert!((m.g_minus / lambda).re < 0.0);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn fd_jacobians_agree(rho in 0.5..10.0f64, u in -4.0..-0.1f64, e in 3.0..8.0f64, y in 0.0..1.0f64) {
            let s = StateW { rho, u, e, reactant: y };
            prop_assert!(jacobian_self_check(&s, &GasWaveConfig::default()).unwrap() < 1e-6);
        }

        #[test]
        fn splitting_counts(re in 0.01..10.0f64, im in -100.0..100.0f64) {
            let w = wave();
            let lambda = cx(re, im);
            prop_assert_eq!(unstable_count(&limit_g_plus(&w, lambda).unwrap()).unwrap(), 4);
            prop_assert_eq!(unstable_count(&limit_g_minus(&w, lambda).unwrap()).unwrap(), 3);
            let lm = limit_g_minus(&w, lambda).unwrap();
            prop_assert!(lm[(3, 3)].re > 0.0);
        }

        #[test]
        fn jump_is_affine(a in -5.0..5.0f64, b in -5.0..5.0f64, c in -5.0..5.0f64, d in -5.0..5.0f64) {
            let w = wave();
            let (l1, l2) = (cx(a, b), cx(c, d));
            let lhs = jump_vector(&w, l1) + jump_vector(&w, l2) - jump_vector(&w, l1 + l2);
            let r = burning_source(&w.neumann, &w.config);
            for i in 0..4 {
                prop_assert!((lhs[i] - r[i]).norm() <= 1e-12 * (1.0 + r[i].abs()) * 10.0);
            }
        }
    }
}

//! Phase functions `φ±`, `φ̂`, the regularized closed-form Szegő kernel and
//! its oscillatory-integral representation.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{usage, Result, SzegoError};
use crate::quadrature::composite_gauss_legendre;
use crate::types::{HeisenbergPoint, LambdaSignature};

/// Which phase to evaluate. `Hat` is `φ₋` with every `λⱼ` replaced by `|λⱼ|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseChoice {
    Minus,
    Plus,
    Hat,
}

fn check_dims(x: &HeisenbergPoint, y: &HeisenbergPoint, sig: &LambdaSignature) -> Result<()> {
    sig.check_dim(x.n(), "x")?;
    sig.check_dim(y.n(), "y")
}

pub fn phase(
    choice: PhaseChoice,
    x: &HeisenbergPoint,
    y: &HeisenbergPoint,
    sig: &LambdaSignature,
) -> Result<Complex64> {
    check_dims(x, y, sig)?;
    let i = Complex64::i();
    let mut quad = 0.0;
    // Σ λ (z̄w − zw̄) in the minus orientation
    let mut anti = Complex64::new(0.0, 0.0);
    for ((z, w), &l) in x.z.iter().zip(&y.z).zip(sig.lambdas()) {
        quad += l.abs() * (z - w).norm_sqr();
        let coef = if choice == PhaseChoice::Hat { l.abs() } else { l };
        anti += coef * (z.conj() * w - z * w.conj());
    }
    let vertical = x.x_last - y.x_last;
    Ok(match choice {
        PhaseChoice::Minus | PhaseChoice::Hat => -vertical + i * quad + i * anti,
        PhaseChoice::Plus => vertical + i * quad - i * anti,
    })
}

/// `c₀ = |λ₁|···|λₙ| / (2π^{n+1})`.
pub fn kernel_constant(sig: &LambdaSignature) -> f64 {
    sig.abs_product() / (2.0 * PI.powi(sig.n() as i32 + 1))
}

pub(crate) fn factorial(m: usize) -> f64 {
    (1..=m).map(|k| k as f64).product()
}

/// `m! · s^{-(m+1)}`, the Laplace moment `∫₀^∞ tᵐ e^{-ts} dt`.
pub fn gamma_moment(m: usize, s: Complex64) -> Result<Complex64> {
    if !(s.re > 0.0) {
        return Err(SzegoError::Domain(format!(
            "gamma moment needs Re s > 0, got {s}"
        )));
    }
    Ok(factorial(m) * s.powi(-(m as i32 + 1)))
}

fn laplace_argument(phi: Complex64, epsilon: f64) -> Complex64 {
    -Complex64::i() * (phi + Complex64::new(0.0, epsilon))
}

/// `c₀ · n! · (−i(φ(x,y) + iε))^{−(n+1)}`.
pub fn szego_kernel_scalar(
    x: &HeisenbergPoint,
    y: &HeisenbergPoint,
    sig: &LambdaSignature,
    choice: PhaseChoice,
    epsilon: f64,
) -> Result<Complex64> {
    if !(epsilon > 0.0) {
        return usage(format!("epsilon must be positive, got {epsilon}"));
    }
    check_dims(x, y, sig)?;
    if sig.is_degenerate() {
        return Err(SzegoError::Domain(
            "a zero lambda makes the scalar kernel vanish identically".into(),
        ));
    }
    let phi = phase(choice, x, y, sig)?;
    let s = laplace_argument(phi, epsilon);
    Ok(kernel_constant(sig) * gamma_moment(sig.n(), s)?)
}

/// Result of the oscillatory-integral evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FioValue {
    pub value: Complex64,
    /// Set when `t_max · (Im φ + ε) < 20`, i.e. the truncated tail may matter.
    pub tail_warning: bool,
}

const PANEL_ORDER: usize = 16;

/// `c₀ ∫₀^{t_max} tⁿ e^{itφ(x,y)} e^{−εt} dt` by composite Gauss–Legendre with
/// `t_points` nodes (rounded up to whole 16-node panels).
pub fn fio_quadrature(
    x: &HeisenbergPoint,
    y: &HeisenbergPoint,
    sig: &LambdaSignature,
    choice: PhaseChoice,
    epsilon: f64,
    t_max: f64,
    t_points: usize,
) -> Result<FioValue> {
    if !(epsilon > 0.0) {
        return usage(format!("epsilon must be positive, got {epsilon}"));
    }
    if !(t_max > 0.0) || t_points == 0 {
        return usage("t_max and t_points must be positive");
    }
    let phi = phase(choice, x, y, sig)?;
    let s = laplace_argument(phi, epsilon);
    let n = sig.n() as i32;
    let panels = t_points.div_ceil(PANEL_ORDER);
    let (nodes, weights) = composite_gauss_legendre(0.0, t_max, panels, PANEL_ORDER);
    let integral: Complex64 = nodes
        .iter()
        .zip(&weights)
        .map(|(&t, &w)| w * t.powi(n) * (-t * s).exp())
        .sum();
    Ok(FioValue {
        value: kernel_constant(sig) * integral,
        tail_warning: t_max * (phi.im + epsilon) < 20.0,
    })
}

/// Picks `(t_max, t_points)` for [`fio_quadrature`] so that the tail is below
/// `1e-12` relative and every panel spans at most about one oscillation.
pub fn fio_resolution(phi: Complex64, epsilon: f64, n: usize) -> (f64, usize) {
    let decay = phi.im + epsilon;
    let t_max = (36.0 + 8.0 * n as f64) / decay;
    let rate = Complex64::new(decay, phi.re).norm();
    let panels = ((t_max * rate / 3.0).ceil() as usize).max(8);
    (t_max, panels * PANEL_ORDER)
}

//! Kernel-side route for rational Hardy test functions
//! `u(z, x) = F(z) · m! / (β + ψ(z) + ix)^{m+1}`, `ψ = Σ λⱼ|zⱼ|²`.
//!
//! The regularized kernel is `c₀ n! S^{−(n+1)}` with
//! `S = ε + Σλ|z−w|² + i(x − y + 2Σλ Im(z̄w))`. Against `u` the vertical
//! integral closes by residues:
//! `∫ c₀ n! S^{−(n+1)} m! (A + iy)^{−(m+1)} dy = 2π c₀ (m+n)! (S|_{y=0} + A)^{−(m+n+1)}`
//! with `A = β + ψ(w)`, leaving a smooth integral over `w ∈ ℂⁿ`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bergman::Polynomial;
use crate::error::{usage, Result};
use crate::phase::{factorial, kernel_constant};
use crate::types::{LambdaSignature, ScalarField};

#[derive(Debug, Clone)]
pub struct RationalHardy {
    pub holomorphic: Polynomial,
    pub m: usize,
    pub beta: f64,
}

impl RationalHardy {
    fn psi(sig: &LambdaSignature, z: &[Complex64]) -> f64 {
        z.iter().zip(sig.lambdas()).map(|(z, l)| l * z.norm_sqr()).sum()
    }

    pub fn eval(&self, sig: &LambdaSignature, z: &[Complex64], x: f64) -> Complex64 {
        let base = Complex64::new(self.beta + Self::psi(sig, z), x);
        self.holomorphic.eval(z) * factorial(self.m) * inv_pow(base, self.m + 1)
    }

    /// Value of `∫ c₀ n! S^{−(n+1)}(x, y) m!(A + iy_last)^{−(m+1)} dy_last` at one `w`.
    pub fn vertical_closed_form(
        &self,
        sig: &LambdaSignature,
        z: &[Complex64],
        x: f64,
        w: &[Complex64],
        epsilon: f64,
    ) -> Complex64 {
        let n = sig.n();
        let mut re = self.beta + epsilon + Self::psi(sig, w);
        let mut im = x;
        for ((zj, wj), &l) in z.iter().zip(w).zip(sig.lambdas()) {
            re += l * (zj - wj).norm_sqr();
            im += 2.0 * l * (zj.conj() * wj).im;
        }
        let c = 2.0 * std::f64::consts::PI * kernel_constant(sig) * factorial(self.m + n);
        c * inv_pow(Complex64::new(re, im), self.m + n + 1)
    }
}

/// `b^{−k}` by repeated squaring of `1/b`.
fn inv_pow(b: Complex64, k: usize) -> Complex64 {
    let mut base = b.inv();
    let mut acc = Complex64::new(1.0, 0.0);
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

/// Target nodes of the micro-grid: `(spatial index, vertical index)`.
pub fn micro_grid(field: &ScalarField, per_axis: usize, vertical: usize) -> Result<Vec<(usize, usize)>> {
    let g = field.grid();
    let n = field.n();
    if per_axis < 2 || vertical < 2 || g.spatial_points < per_axis || g.vertical_points < vertical {
        return usage("micro-grid is larger than the field grid");
    }
    let axis: Vec<usize> = (0..per_axis)
        .map(|k| (k * (g.spatial_points - 1) + (per_axis - 1) / 2) / (per_axis - 1))
        .collect();
    let step = (g.vertical_points / (2 * (vertical - 1))).max(1);
    let start = g.vertical_points / 2 - (vertical / 2) * step;
    let mut out = Vec::new();
    let total = per_axis.pow(2 * n as u32);
    for flat in 0..total {
        let mut rest = flat;
        let mut s = 0;
        let mut digits = vec![0; 2 * n];
        for d in digits.iter_mut().rev() {
            *d = axis[rest % per_axis];
            rest /= per_axis;
        }
        for d in digits {
            s = s * g.spatial_points + d;
        }
        for k in 0..vertical {
            out.push((s, start + k * step));
        }
    }
    Ok(out)
}

/// `∫ K_ε(x, y) u(y) dy` at each target, with the spatial integral taken by
/// the trapezoid rule on a box of half-width `half_width` around `z/2` (where
/// the integrand peaks) with step `h`; each plane carries the factor 2 of the
/// volume form, as on the field grids.
pub fn direct_kernel_values(
    u: &RationalHardy,
    sig: &LambdaSignature,
    targets: &[(Vec<Complex64>, f64)],
    epsilon: f64,
    half_width: f64,
    h: f64,
) -> Vec<Complex64> {
    let n = sig.n();
    let steps = (2.0 * half_width / h).round() as usize;
    let offsets: Vec<(f64, f64)> = (0..=steps)
        .map(|k| {
            let w = if k == 0 || k == steps { 0.5 * h } else { h };
            (-half_width + k as f64 * h, w)
        })
        .collect();
    let per_axis = offsets.len();
    let total = per_axis.pow(2 * n as u32);
    targets
        .par_iter()
        .map(|(z, x)| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut w = vec![Complex64::new(0.0, 0.0); n];
            for flat in 0..total {
                let mut rest = flat;
                let mut weight = 1.0;
                for j in (0..n).rev() {
                    let (bi, wb) = offsets[rest % per_axis];
                    rest /= per_axis;
                    let (ai, wa) = offsets[rest % per_axis];
                    rest /= per_axis;
                    w[j] = 0.5 * z[j] + Complex64::new(ai, bi);
                    weight *= 2.0 * wa * wb;
                }
                acc += weight * u.holomorphic.eval(&w) * u.vertical_closed_form(sig, z, *x, &w, epsilon);
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::composite_gauss_legendre;

    #[test]
    fn residue_formula_matches_vertical_quadrature() {
        let sig = LambdaSignature::new(vec![1.3]).unwrap();
        let u = RationalHardy {
            holomorphic: Polynomial::monomial(vec![1]),
            m: 3,
            beta: 1.5,
        };
        let z = [Complex64::new(0.4, -0.3)];
        let w = [Complex64::new(-0.2, 0.5)];
        let (x, eps) = (0.7, 0.3);
        let n = 1;
        let c0 = kernel_constant(&sig);
        let a = u.beta + 1.3 * w[0].norm_sqr();
        let q = 1.3 * (z[0] - w[0]).norm_sqr();
        let cross = 2.0 * 1.3 * (z[0].conj() * w[0]).im;
        // y = L tan θ maps ℝ onto (−π/2, π/2)
        let l = 2.0;
        let half = std::f64::consts::FRAC_PI_2;
        let (nodes, weights) = composite_gauss_legendre(-half, half, 200, 16);
        let mut sum = Complex64::new(0.0, 0.0);
        for (th, wt) in nodes.iter().zip(&weights) {
            let y = l * th.tan();
            let jac = l / th.cos().powi(2);
            let s = Complex64::new(eps + q, x - y + cross);
            let kern = c0 * factorial(n) * inv_pow(s, n + 1);
            let uy = factorial(u.m) * inv_pow(Complex64::new(a, y), u.m + 1);
            sum += wt * jac * kern * uy;
        }
        let closed = u.vertical_closed_form(&sig, &z, x, &w, eps);
        assert!((sum - closed).norm() < 1e-10 * closed.norm(), "{sum} vs {closed}");
    }

    #[test]
    fn inverse_power() {
        let b = Complex64::new(1.3, -0.4);
        assert!((inv_pow(b, 7) - b.powi(-7)).norm() < 1e-14);
    }
}

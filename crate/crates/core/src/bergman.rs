//! Weighted Bergman kernel and projection on `ℂⁿ` for the Gaussian weight
//! `tψ(w) = t Σ λⱼ|wⱼ|²`, plus the monomial-integral classifier that decides
//! when `∫ |z^α|² e^{−2η λ̃|z|²} dμ(z)` is finite.
//!
//! The kernel factors over complex axes. On one axis with `τ = tλ` and real
//! coordinates `z = a + ib`, `w = a' + ib'`,
//!
//! ```text
//! P(z, w) = (τ/π) e^{−τ(a−a')²} e^{−τ(b−b')²} e^{2iτ a'b} e^{−2iτ b'a}
//! ```
//!
//! so [`bergman_project`] contracts one plane at a time: first over `a'`
//! (cost `N⁴` per plane), then over `b'` (`N³`).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{usage, Result};
use crate::phase::factorial;
use crate::quadrature::composite_gauss_legendre;
use crate::types::{FrequencySlice, GridSpec, LambdaSignature, MultiIndex};

/// Gaussian weight `tψ` with `ψ(w) = Σ λⱼ|wⱼ|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSpec {
    pub sig: LambdaSignature,
    pub t: f64,
}

impl WeightSpec {
    pub fn new(sig: LambdaSignature, t: f64) -> Self {
        Self { sig, t }
    }

    fn check_positive(&self) -> Result<()> {
        if !self.sig.is_all_positive() {
            return usage(format!(
                "Bergman weight needs all-positive lambdas, got {:?}",
                self.sig.lambdas()
            ));
        }
        Ok(())
    }
}

/// `λ̃|z|² = Σ_{k∈J} λ_k|z_k|² − Σ_{k∉J} λ_k|z_k|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedWeightPattern {
    pub sig: LambdaSignature,
    pub j: MultiIndex,
}

impl SignedWeightPattern {
    pub fn new(sig: LambdaSignature, j: MultiIndex) -> Result<Self> {
        if j.entries().iter().any(|&k| k > sig.n()) {
            return usage(format!("multi-index {j} exceeds n = {}", sig.n()));
        }
        Ok(Self { sig, j })
    }

    /// `+1` on axes in `J`, `−1` elsewhere (axis is 0-based).
    pub fn sign(&self, axis: usize) -> f64 {
        if self.j.contains(axis + 1) {
            1.0
        } else {
            -1.0
        }
    }

    /// Per-axis exponent coefficients `c_j = 2η s_j λ_j`.
    pub fn coefficients(&self, eta: f64) -> Vec<f64> {
        self.sig
            .lambdas()
            .iter()
            .enumerate()
            .map(|(k, &l)| 2.0 * eta * self.sign(k) * l)
            .collect()
    }
}

pub fn bergman_kernel(z: &[Complex64], w: &[Complex64], weight: &WeightSpec) -> Result<Complex64> {
    weight.check_positive()?;
    weight.sig.check_dim(z.len(), "z")?;
    weight.sig.check_dim(w.len(), "w")?;
    let t = weight.t;
    if t <= 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let n = weight.sig.n();
    let mut exponent = Complex64::new(0.0, 0.0);
    for ((zj, wj), &l) in z.iter().zip(w).zip(weight.sig.lambdas()) {
        exponent -= t * l * ((wj - zj).norm_sqr() + (wj * zj.conj() - wj.conj() * zj));
    }
    let prefactor = (t / PI).powi(n as i32) * weight.sig.abs_product();
    Ok(prefactor * exponent.exp())
}

/// Entries of a 1D Gaussian factor below this are dropped; the dropped set is
/// symmetric, so the discrete operator stays Hermitian.
const GAUSS_CUTOFF: f64 = 1e-18;

struct PlaneOperator {
    m: usize,
    gauss: Vec<f64>,
    // bands[a] = range of a' with gauss[a][a'] above the cutoff
    bands: Vec<(usize, usize)>,
    twist_in: Vec<Complex64>,  // e^{2iτ x_{a'} x_b}, indexed [a'][b]
    twist_out: Vec<Complex64>, // e^{−2iτ x_{b'} x_a}, indexed [b'][a]
    weight: Vec<f64>,          // 2 w_{a'} w_{b'}
    scale: f64,
}

impl PlaneOperator {
    fn new(nodes: &[f64], w1: &[f64], tau: f64) -> Self {
        let m = nodes.len();
        let mut gauss = vec![0.0; m * m];
        let mut bands = Vec::with_capacity(m);
        for a in 0..m {
            let mut lo = m;
            let mut hi = 0;
            for ap in 0..m {
                let g = (-tau * (nodes[a] - nodes[ap]).powi(2)).exp();
                if g >= GAUSS_CUTOFF {
                    gauss[a * m + ap] = g;
                    lo = lo.min(ap);
                    hi = hi.max(ap + 1);
                }
            }
            bands.push((lo, hi));
        }
        let mut twist_in = vec![Complex64::new(0.0, 0.0); m * m];
        let mut twist_out = vec![Complex64::new(0.0, 0.0); m * m];
        for p in 0..m {
            for q in 0..m {
                let arg = 2.0 * tau * nodes[p] * nodes[q];
                twist_in[p * m + q] = Complex64::from_polar(1.0, arg);
                twist_out[p * m + q] = Complex64::from_polar(1.0, -arg);
            }
        }
        let weight = (0..m * m).map(|i| 2.0 * w1[i / m] * w1[i % m]).collect();
        Self {
            m,
            gauss,
            bands,
            twist_in,
            twist_out,
            weight,
            scale: tau / PI,
        }
    }

    /// Applies the plane kernel to `u` (row-major `[a'][b']`), writing `[a][b]`.
    fn apply(&self, u: &[Complex64], out: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        let m = self.m;
        let wu: Vec<Complex64> = u.iter().zip(&self.weight).map(|(v, w)| v * w).collect();
        // scratch[(a*m + b)*m + b'] = Σ_{a'} G[a][a'] e^{2iτ x_{a'} x_b} wu[a'][b']
        scratch.clear();
        scratch.resize(m * m * m, Complex64::new(0.0, 0.0));
        let mut row = vec![Complex64::new(0.0, 0.0); m];
        for a in 0..m {
            let (lo, hi) = self.bands[a];
            for b in 0..m {
                row.iter_mut().for_each(|r| *r = Complex64::new(0.0, 0.0));
                for ap in lo..hi {
                    let c = self.gauss[a * m + ap] * self.twist_in[ap * m + b];
                    let src = &wu[ap * m..(ap + 1) * m];
                    for (r, s) in row.iter_mut().zip(src) {
                        *r += c * s;
                    }
                }
                scratch[(a * m + b) * m..(a * m + b + 1) * m].copy_from_slice(&row);
            }
        }
        for a in 0..m {
            for b in 0..m {
                let (lo, hi) = self.bands[b];
                let t = &scratch[(a * m + b) * m..(a * m + b + 1) * m];
                let mut acc = Complex64::new(0.0, 0.0);
                for bp in lo..hi {
                    acc += self.gauss[b * m + bp] * self.twist_out[bp * m + a] * t[bp];
                }
                out[a * m + b] = self.scale * acc;
            }
        }
    }
}

/// Applies the per-plane operator of complex axis `axis` (0-based) to a
/// spatial array of dimension `n`.
fn apply_on_axis(values: &mut [Complex64], n: usize, axis: usize, op: &PlaneOperator) {
    let m = op.m;
    let plane = m * m;
    let inner = plane.pow((n - axis - 1) as u32);
    let outer = plane.pow(axis as u32);
    let mut buf = vec![Complex64::new(0.0, 0.0); plane];
    let mut res = vec![Complex64::new(0.0, 0.0); plane];
    let mut scratch = Vec::new();
    for o in 0..outer {
        for i in 0..inner {
            let base = o * plane * inner + i;
            for (p, slot) in buf.iter_mut().enumerate() {
                *slot = values[base + p * inner];
            }
            op.apply(&buf, &mut res, &mut scratch);
            for (p, v) in res.iter().enumerate() {
                values[base + p * inner] = *v;
            }
        }
    }
}

/// `v(z) = ∫ P_{tψ}(z, w) u(w) dμ(w)` on the spatial grid; zero for `t ≤ 0`.
pub fn bergman_project(
    slice: &FrequencySlice,
    weight: &WeightSpec,
    grid: &GridSpec,
) -> Result<FrequencySlice> {
    weight.check_positive()?;
    let n = weight.sig.n();
    if slice.values.len() != grid.spatial_len(n) {
        return usage(format!(
            "slice has {} values, grid needs {}",
            slice.values.len(),
            grid.spatial_len(n)
        ));
    }
    let mut values = slice.values.clone();
    if weight.t <= 0.0 {
        values.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
    } else {
        let nodes = grid.spatial_nodes();
        let w1 = grid.spatial_weights();
        for (axis, &l) in weight.sig.lambdas().iter().enumerate() {
            let op = PlaneOperator::new(&nodes, &w1, weight.t * l);
            apply_on_axis(&mut values, n, axis, &op);
        }
    }
    Ok(FrequencySlice {
        t: slice.t,
        values,
    })
}

/// A polynomial `Σ c_α z^α` on `ℂⁿ`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    pub terms: Vec<(Vec<usize>, Complex64)>,
}

impl Polynomial {
    pub fn monomial(alpha: Vec<usize>) -> Self {
        Self {
            terms: vec![(alpha, Complex64::new(1.0, 0.0))],
        }
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(alpha, c)| {
                c * alpha
                    .iter()
                    .zip(z)
                    .map(|(&k, zj)| zj.powi(k as i32))
                    .product::<Complex64>()
            })
            .sum()
    }
}

/// Both sides of the Gaussian reproducing identity at `z`:
/// `lhs = e^{−t|λ||z|²} g(z)` and
/// `rhs = (|λ₁|···|λₙ|/πⁿ) tⁿ ∫ e^{−t|λ||z−w|² − tλ(z̄w−zw̄)} e^{−t|λ||w|²} g(w) dμ(w)`.
///
/// Each monomial term factors over complex axes, so the quadrature is a
/// product of plane integrals on the grid's spatial rule.
pub fn gaussian_reproducing_check(
    g: &Polynomial,
    z: &[Complex64],
    t: f64,
    sig: &LambdaSignature,
    grid: &GridSpec,
) -> Result<(Complex64, Complex64)> {
    sig.check_dim(z.len(), "z")?;
    if !sig.is_all_positive() {
        return usage("reproducing check needs all-positive lambdas");
    }
    if !(t > 0.0) {
        return usage("reproducing check needs t > 0");
    }
    grid.validate()?;
    if let Some((alpha, _)) = g.terms.iter().find(|(a, _)| a.len() != sig.n()) {
        return usage(format!("monomial {alpha:?} has wrong dimension"));
    }
    let nodes = grid.spatial_nodes();
    let w1 = grid.spatial_weights();
    let lhs_weight: f64 = z
        .iter()
        .zip(sig.lambdas())
        .map(|(zj, l)| l.abs() * zj.norm_sqr())
        .sum();
    let lhs = (-t * lhs_weight).exp() * g.eval(z);
    let mut rhs = Complex64::new(0.0, 0.0);
    for (alpha, c) in &g.terms {
        let mut term = *c;
        for (j, (&l, zj)) in sig.lambdas().iter().zip(z).enumerate() {
            let la = l.abs();
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, wa) in nodes.iter().zip(&w1) {
                for (b, wb) in nodes.iter().zip(&w1) {
                    let w = Complex64::new(*a, *b);
                    let e = -t * la * (zj - w).norm_sqr()
                        - t * l * (zj.conj() * w - zj * w.conj())
                        - t * la * w.norm_sqr();
                    acc += 2.0 * wa * wb * e.exp() * w.powi(alpha[j] as i32);
                }
            }
            term *= la * t / PI * acc;
        }
        rhs += term;
    }
    Ok((lhs, rhs))
}

/// Outcome of the monomial-integral classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MonomialIntegral {
    Infinite,
    Finite(f64),
}

impl MonomialIntegral {
    pub fn is_finite(&self) -> bool {
        matches!(self, MonomialIntegral::Finite(_))
    }
}

/// Classifies `∫ |z^α|² e^{−2η λ̃|z|²} dμ(z)`; finite iff every axis has
/// `λⱼ ≠ 0` and `c_j = 2η s_j λ_j > 0`, in which case it equals
/// `Π_j 2π αⱼ! / c_j^{αⱼ+1}`.
pub fn monomial_integral(alpha: &[usize], eta: f64, pattern: &SignedWeightPattern) -> MonomialIntegral {
    if alpha.len() != pattern.sig.n() || pattern.sig.is_degenerate() {
        return MonomialIntegral::Infinite;
    }
    let coeffs = pattern.coefficients(eta);
    if coeffs.iter().any(|&c| !(c > 0.0)) {
        return MonomialIntegral::Infinite;
    }
    MonomialIntegral::Finite(
        alpha
            .iter()
            .zip(&coeffs)
            .map(|(&a, &c)| 2.0 * PI * factorial(a) / c.powi(a as i32 + 1))
            .product(),
    )
}

/// `∫_{|z|<R} |z^α|² e^{−2η λ̃|z|²} dμ(z)` by nested Gauss–Legendre in the
/// variables `ρⱼ = |zⱼ|²`, where the ball becomes the simplex `Σρⱼ < R²` and
/// each axis contributes `2π ρ^{αⱼ} e^{−c_j ρ} dρ`.
pub fn truncated_monomial_integral(
    alpha: &[usize],
    eta: f64,
    pattern: &SignedWeightPattern,
    radius: f64,
) -> Result<f64> {
    if alpha.len() != pattern.sig.n() {
        return usage("multi-exponent has wrong dimension");
    }
    if !(radius > 0.0) {
        return usage("radius must be positive");
    }
    let coeffs = pattern.coefficients(eta);
    let simplex = simplex_integral(alpha, &coeffs, radius * radius);
    Ok((2.0 * PI).powi(alpha.len() as i32) * simplex)
}

fn simplex_integral(alpha: &[usize], coeffs: &[f64], extent: f64) -> f64 {
    if alpha.is_empty() {
        return 1.0;
    }
    if extent <= 0.0 {
        return 0.0;
    }
    let (a, c) = (alpha[0] as i32, coeffs[0]);
    // beyond ρ = 45/c the factor e^{−cρ} is below e^{−45}
    let upper = if c > 0.0 { extent.min(45.0 / c) } else { extent };
    let panels = ((c.abs() * upper / 8.0).ceil() as usize).clamp(1, 64);
    let (nodes, weights) = composite_gauss_legendre(0.0, upper, panels, 12);
    nodes
        .iter()
        .zip(&weights)
        .map(|(&rho, &w)| {
            w * rho.powi(a) * (-c * rho).exp() * simplex_integral(&alpha[1..], &coeffs[1..], extent - rho)
        })
        .sum()
}

/// Default radius sweep for [`divergence_witness`]: `1..=5`, or up to 50 when
/// the only divergent axes are flat (`c_j = 0`, polynomial growth).
pub fn default_witness_radii(eta: f64, pattern: &SignedWeightPattern) -> Vec<f64> {
    let coeffs = pattern.coefficients(eta);
    if coeffs.iter().any(|&c| c < 0.0) {
        vec![1.0, 2.0, 3.0, 4.0, 5.0]
    } else {
        vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0]
    }
}

/// Truncated ball integrals for a monomial the classifier calls infinite.
pub fn divergence_witness(
    alpha: &[usize],
    eta: f64,
    pattern: &SignedWeightPattern,
    radii: &[f64],
) -> Result<Vec<f64>> {
    if monomial_integral(alpha, eta, pattern).is_finite() {
        return usage("divergence witness requested for a finite integral");
    }
    if radii.windows(2).any(|w| w[0] >= w[1]) {
        return usage("radii must be strictly increasing");
    }
    radii
        .iter()
        .map(|&r| truncated_monomial_integral(alpha, eta, pattern, r))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::QuadratureRule;

    fn sig(l: &[f64]) -> LambdaSignature {
        LambdaSignature::new(l.to_vec()).unwrap()
    }

    fn grid() -> GridSpec {
        GridSpec {
            spatial_radius: 4.0,
            spatial_points: 49,
            vertical_radius: 8.0,
            vertical_points: 8,
            freq_min: 0.5,
            freq_max: 3.0,
            quadrature_rule: QuadratureRule::UniformTrapezoid,
        }
    }

    fn sample(n: usize, g: &GridSpec, f: impl Fn(&[Complex64]) -> Complex64) -> Vec<Complex64> {
        let nodes = g.spatial_nodes();
        (0..g.spatial_len(n))
            .map(|s| f(&g.spatial_point(n, s, &nodes)))
            .collect()
    }

    fn rel_l2(a: &[Complex64], b: &[Complex64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
        (num / den).sqrt()
    }

    #[test]
    fn kernel_hand_values() {
        let w = WeightSpec::new(sig(&[1.0]), 1.0);
        let z = [Complex64::new(0.3, -0.7)];
        let k = bergman_kernel(&z, &z, &w).unwrap();
        assert!((k - 1.0 / PI).norm() < 1e-15);
        let w0 = WeightSpec::new(sig(&[1.0]), -1.0);
        assert_eq!(bergman_kernel(&z, &z, &w0).unwrap(), Complex64::new(0.0, 0.0));
        let bad = WeightSpec::new(sig(&[-1.0]), 1.0);
        assert!(bergman_kernel(&z, &z, &bad).is_err());
    }

    #[test]
    fn kernel_is_hermitian() {
        let w = WeightSpec::new(sig(&[1.0, 0.5]), 1.3);
        let z = [Complex64::new(0.3, -0.7), Complex64::new(1.1, 0.2)];
        let v = [Complex64::new(-0.4, 0.9), Complex64::new(0.0, -0.5)];
        let a = bergman_kernel(&z, &v, &w).unwrap();
        let b = bergman_kernel(&v, &z, &w).unwrap();
        assert!((a - b.conj()).norm() < 1e-15);
    }

    #[test]
    fn factorized_projection_matches_direct_sum() {
        let g = GridSpec {
            spatial_points: 9,
            spatial_radius: 2.0,
            ..grid()
        };
        let s = sig(&[1.0, 0.7]);
        let wspec = WeightSpec::new(s.clone(), 0.8);
        let u = sample(2, &g, |z| {
            Complex64::new(z[0].re * 0.3 + 1.0, z[1].im) * (-(z[0].norm_sqr() + z[1].norm_sqr())).exp()
        });
        let fast = bergman_project(&FrequencySlice { t: 0.8, values: u.clone() }, &wspec, &g).unwrap();
        let nodes = g.spatial_nodes();
        let wt = g.spatial_weight_table(2);
        for target in [0usize, 17, 2000, 6560] {
            let z = g.spatial_point(2, target, &nodes);
            let mut acc = Complex64::new(0.0, 0.0);
            for (src, (&us, &w)) in u.iter().zip(&wt).enumerate() {
                let wpt = g.spatial_point(2, src, &nodes);
                acc += bergman_kernel(&z, &wpt, &wspec).unwrap() * us * w;
            }
            assert!((acc - fast.values[target]).norm() < 1e-14, "target {target}");
        }
    }

    #[test]
    fn reproduces_constant_gaussian() {
        let g = grid();
        let u = sample(1, &g, |z| Complex64::new((-z[0].norm_sqr()).exp(), 0.0));
        let w = WeightSpec::new(sig(&[1.0]), 1.0);
        let v = bergman_project(&FrequencySlice { t: 1.0, values: u.clone() }, &w, &g).unwrap();
        assert!(rel_l2(&v.values, &u) < 1e-4);
    }

    #[test]
    fn annihilates_antiholomorphic_gaussian() {
        let g = grid();
        let u = sample(1, &g, |z| z[0].conj() * (-z[0].norm_sqr()).exp());
        let w = WeightSpec::new(sig(&[1.0]), 1.0);
        let v = bergman_project(&FrequencySlice { t: 1.0, values: u }, &w, &g).unwrap();
        let max = v.values.iter().map(|x| x.norm()).fold(0.0, f64::max);
        assert!(max < 1e-4, "max {max}");
    }

    #[test]
    fn negative_frequency_gives_zero() {
        let g = grid();
        let u = sample(1, &g, |z| z[0]);
        let w = WeightSpec::new(sig(&[1.0]), -1.0);
        let v = bergman_project(&FrequencySlice { t: -1.0, values: u }, &w, &g).unwrap();
        assert!(v.values.iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn reproducing_check_examples() {
        let g = grid();
        let s = sig(&[1.0]);
        let (l, r) = gaussian_reproducing_check(&Polynomial::monomial(vec![0]), &[Complex64::new(0.0, 0.0)], 1.0, &s, &g).unwrap();
        assert!((l - 1.0).norm() < 1e-15 && (r - 1.0).norm() < 1e-10);
        let (l, r) = gaussian_reproducing_check(&Polynomial::monomial(vec![1]), &[Complex64::new(0.0, 0.0)], 1.0, &s, &g).unwrap();
        assert!(l.norm() == 0.0 && r.norm() < 1e-12);
        let z = [Complex64::new(0.5, 0.0)];
        let (l, r) = gaussian_reproducing_check(&Polynomial::monomial(vec![1]), &z, 2.0, &s, &g).unwrap();
        assert!((l - 0.5 * (-0.5f64).exp()).norm() < 1e-15);
        assert!((l - r).norm() < 1e-6);
    }

    #[test]
    fn classifier_examples() {
        let p = SignedWeightPattern::new(sig(&[-1.0]), MultiIndex::empty()).unwrap();
        match monomial_integral(&[0], 1.0, &p) {
            MonomialIntegral::Finite(v) => assert!((v - PI).abs() < 1e-15),
            MonomialIntegral::Infinite => panic!("expected finite"),
        }
        let p = SignedWeightPattern::new(sig(&[1.0]), MultiIndex::empty()).unwrap();
        assert_eq!(monomial_integral(&[0], 1.0, &p), MonomialIntegral::Infinite);
        let p = SignedWeightPattern::new(sig(&[1.0, 0.0]), MultiIndex::new(vec![1], 2).unwrap()).unwrap();
        for eta in [-1.0, 1.0] {
            assert_eq!(monomial_integral(&[1, 0], eta, &p), MonomialIntegral::Infinite);
        }
    }

    #[test]
    fn witness_examples() {
        let p = SignedWeightPattern::new(sig(&[1.0]), MultiIndex::empty()).unwrap();
        let v = divergence_witness(&[0], 1.0, &p, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(v.windows(2).all(|w| w[1] > w[0]));
        // η = 0: integrand ≡ 1, ball volume times 2ⁿ = 2πR² for n = 1
        let v = divergence_witness(&[0], 0.0, &p, &[1.0, 3.0]).unwrap();
        assert!((v[0] - 2.0 * PI).abs() < 1e-12 && (v[1] - 18.0 * PI).abs() < 1e-10);
        let p = SignedWeightPattern::new(sig(&[-1.0]), MultiIndex::empty()).unwrap();
        assert!(divergence_witness(&[0], 1.0, &p, &[1.0]).is_err());
    }

    #[test]
    fn truncated_converges_to_closed_form() {
        let p = SignedWeightPattern::new(sig(&[-1.0, 1.0]), MultiIndex::new(vec![2], 2).unwrap()).unwrap();
        let MonomialIntegral::Finite(v) = monomial_integral(&[2, 1], 0.7, &p) else {
            panic!("expected finite")
        };
        let q = truncated_monomial_integral(&[2, 1], 0.7, &p, 8.0).unwrap();
        assert!((q - v).abs() < 1e-10 * v);
    }
}

//! Partial Fourier transform along the vertical axis and the scalar projector
//! assembled from slice-wise Bergman projections.
//!
//! Conventions: a slice at frequency `t` holds `∫ e^{+ixt} u(z, x) dx`, which
//! is `û(z, η)` at `η = −t` for `û(z, η) = ∫ e^{−ixη} u dx`. The inverse is
//! `u(z, x) = (1/2π) ∫ e^{−ixt} slice_t(z) dt`. On the periodic vertical grid
//! both are exact DFTs:
//!
//! ```text
//! slice_k = h_v (−1)^k Σ_m e^{+2πimk/N} u_m
//! u_m     = (Δt/2π) Σ_k (−1)^k e^{−2πimk/N} slice_k,   Δt = π/R_v
//! ```

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::bergman::{bergman_project, WeightSpec};
use crate::error::{usage, Result, SzegoError};
use crate::phase::kernel_constant;
use crate::types::{FrequencySlice, GridSpec, LambdaSignature, ScalarField};

/// All frequency slices of a field, ordered by increasing `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyField {
    n: usize,
    grid: GridSpec,
    slices: Vec<FrequencySlice>,
}

impl FrequencyField {
    pub fn new(n: usize, grid: GridSpec, slices: Vec<FrequencySlice>) -> Result<Self> {
        grid.validate()?;
        if slices.len() != grid.vertical_points {
            return usage("frequency field needs one slice per vertical node");
        }
        let len = grid.spatial_len(n);
        let freqs = grid.frequencies();
        for (s, &t) in slices.iter().zip(&freqs) {
            if s.values.len() != len {
                return usage("slice extent does not match the spatial grid");
            }
            if (s.t - t).abs() > 1e-12 * t.abs().max(1.0) {
                return usage(format!("slice frequency {} is not the grid node {t}", s.t));
            }
        }
        Ok(Self { n, grid, slices })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn slices(&self) -> &[FrequencySlice] {
        &self.slices
    }

    /// `Σ_k Δt Σ_z w(z) |slice_k(z)|²`.
    pub fn norm_sqr(&self) -> f64 {
        let w = self.grid.spatial_weight_table(self.n);
        let dt = self.grid.freq_step();
        self.slices
            .iter()
            .map(|s| dt * s.values.iter().zip(&w).map(|(v, w)| w * v.norm_sqr()).sum::<f64>())
            .sum()
    }
}

fn sign(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    }
}

pub fn partial_ft(field: &ScalarField) -> Result<FrequencyField> {
    let grid = field.grid().clone();
    let nv = grid.vertical_points;
    let fft = plan(nv, true);
    let labels: Vec<i64> = grid.freq_labels().collect();
    let hv = grid.vertical_step();
    let mut rows = field.values().to_vec();
    rows.par_chunks_mut(nv).for_each(|row| {
        fft.process(row);
    });
    let spatial = grid.spatial_len(field.n());
    let freqs = grid.frequencies();
    let slices = labels
        .iter()
        .zip(&freqs)
        .map(|(&k, &t)| {
            let bin = k.rem_euclid(nv as i64) as usize;
            let c = hv * sign(k);
            FrequencySlice {
                t,
                values: (0..spatial).map(|s| c * rows[s * nv + bin]).collect(),
            }
        })
        .collect();
    FrequencyField::new(field.n(), grid, slices)
}

pub fn partial_ift(freq: &FrequencyField) -> Result<ScalarField> {
    let grid = freq.grid().clone();
    let nv = grid.vertical_points;
    let spatial = grid.spatial_len(freq.n());
    let fft = plan(nv, false);
    let scale = grid.freq_step() / (2.0 * PI);
    let labels: Vec<i64> = grid.freq_labels().collect();
    let mut rows = vec![Complex64::new(0.0, 0.0); spatial * nv];
    rows.par_chunks_mut(nv).enumerate().for_each(|(s, row)| {
        for (slice, &k) in freq.slices().iter().zip(&labels) {
            row[k.rem_euclid(nv as i64) as usize] = scale * sign(k) * slice.values[s];
        }
        fft.process(row);
    });
    ScalarField::new(freq.n(), grid, rows)
}

/// Budget: a Gaussian of the slowest active slice must be negligible at the box edge.
pub const TRUNCATION_BUDGET: f64 = 1e-10;
/// Budget: the discrete kernel's aliasing error at the fastest active slice.
pub const RESOLUTION_BUDGET: f64 = 1e-5;

/// Frequencies of the slices the projector keeps.
pub fn active_frequencies(grid: &GridSpec) -> Vec<f64> {
    grid.frequencies().into_iter().filter(|&t| grid.in_band(t)).collect()
}

/// Checks the two discretization budgets of the projector for weight `tψ`,
/// `ψ = Σ λⱼ|zⱼ|²`, over the active band.
///
/// * `gaussian-truncation`: `exp(−2 t_min λ_min R²) < 1e-10`
/// * `spatial-resolution`: `exp(−π² / (4 t_max λ_max h²)) < 1e-5`
pub fn check_budgets(grid: &GridSpec, sig: &LambdaSignature) -> Result<()> {
    let active = active_frequencies(grid);
    match (active.first(), active.last()) {
        (Some(&t_min), Some(&t_max)) => check_slice_budgets(grid, sig, t_min, t_max),
        _ => Ok(()),
    }
}

/// The budgets of [`check_budgets`] for slices with `t ∈ [t_min, t_max]`.
pub fn check_slice_budgets(grid: &GridSpec, sig: &LambdaSignature, t_min: f64, t_max: f64) -> Result<()> {
    let abs: Vec<f64> = sig.lambdas().iter().map(|l| l.abs()).collect();
    let l_min = abs.iter().cloned().fold(f64::INFINITY, f64::min);
    let l_max = abs.iter().cloned().fold(0.0, f64::max);
    let r = grid.spatial_radius;
    let tail = (-2.0 * t_min * l_min * r * r).exp();
    if tail >= TRUNCATION_BUDGET {
        return Err(SzegoError::Budget {
            budget: "gaussian-truncation",
            detail: format!(
                "exp(-2 t λ R^2) = {tail:.3e} at t = {t_min:.4}, R = {r}; needs < {TRUNCATION_BUDGET:.0e}"
            ),
        });
    }
    let h = grid.spatial_step();
    let alias = (-PI * PI / (4.0 * t_max * l_max * h * h)).exp();
    if alias >= RESOLUTION_BUDGET {
        return Err(SzegoError::Budget {
            budget: "spatial-resolution",
            detail: format!(
                "exp(-π²/(4 t λ h²)) = {alias:.3e} at t = {t_max:.4}, h = {h:.4}; needs < {RESOLUTION_BUDGET:.0e}"
            ),
        });
    }
    Ok(())
}

/// Applies the slice-wise Bergman projection to a frequency field: slices
/// outside the band (and all `t ≤ 0`) are zeroed.
pub fn project_slices(freq: &FrequencyField, sig: &LambdaSignature) -> Result<FrequencyField> {
    let grid = freq.grid();
    let projected: Result<Vec<FrequencySlice>> = freq
        .slices()
        .par_iter()
        .map(|s| {
            if grid.in_band(s.t) {
                bergman_project(s, &WeightSpec::new(sig.clone(), s.t), grid)
            } else {
                Ok(FrequencySlice {
                    t: s.t,
                    values: vec![Complex64::new(0.0, 0.0); s.values.len()],
                })
            }
        })
        .collect();
    FrequencyField::new(freq.n(), grid.clone(), projected?)
}

/// Whether the projector refuses grids that violate [`check_budgets`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BudgetPolicy {
    #[default]
    Enforce,
    /// For structural checks on grids too small to be accurate.
    Skip,
}

/// The scalar projector for all-positive `λ`: transform, project each slice
/// with weight `tψ`, transform back.
pub fn scalar_pipeline_project(field: &ScalarField, sig: &LambdaSignature) -> Result<ScalarField> {
    scalar_pipeline_project_with(field, sig, BudgetPolicy::Enforce)
}

pub fn scalar_pipeline_project_with(
    field: &ScalarField,
    sig: &LambdaSignature,
    policy: BudgetPolicy,
) -> Result<ScalarField> {
    if !sig.is_all_positive() {
        return usage(format!(
            "scalar pipeline needs all-positive lambdas, got {:?}",
            sig.lambdas()
        ));
    }
    sig.check_dim(field.n(), "field")?;
    if policy == BudgetPolicy::Enforce {
        check_budgets(field.grid(), sig)?;
    }
    let freq = partial_ft(field)?;
    partial_ift(&project_slices(&freq, sig)?)
}

/// `(S̃u | g)` through the frequency-domain double integral
/// `c₀ Σ_k Δt t_kⁿ Σ_{z,w} û_k(w) conj(ĝ_k(z)) e^{−t|λ||z−w|² − tλ(z̄w−zw̄)} dμ(z) dμ(w)`
/// over the active band, by direct summation over node pairs.
pub fn frequency_pairing(u: &ScalarField, g: &ScalarField, sig: &LambdaSignature) -> Result<Complex64> {
    u.check_shape(g)?;
    if !sig.is_all_positive() {
        return usage("frequency pairing needs all-positive lambdas");
    }
    sig.check_dim(u.n(), "field")?;
    let n = u.n();
    let grid = u.grid();
    let uf = partial_ft(u)?;
    let gf = partial_ft(g)?;
    let nodes = grid.spatial_nodes();
    let points: Vec<Vec<Complex64>> = (0..grid.spatial_len(n))
        .map(|s| grid.spatial_point(n, s, &nodes))
        .collect();
    let w = grid.spatial_weight_table(n);
    let dt = grid.freq_step();
    let c0 = kernel_constant(sig);
    let per_slice: Vec<Complex64> = uf
        .slices()
        .par_iter()
        .zip(gf.slices())
        .map(|(us, gs)| {
            let t = us.t;
            if !grid.in_band(t) {
                return Complex64::new(0.0, 0.0);
            }
            let mut total = Complex64::new(0.0, 0.0);
            for (zi, z) in points.iter().enumerate() {
                let gz = gs.values[zi].conj() * w[zi];
                if gz == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let mut inner = Complex64::new(0.0, 0.0);
                for (wi, wpt) in points.iter().enumerate() {
                    let mut e = Complex64::new(0.0, 0.0);
                    for ((zj, wj), &l) in z.iter().zip(wpt).zip(sig.lambdas()) {
                        e -= t * (l.abs() * (zj - wj).norm_sqr() + l * (zj.conj() * wj - zj * wj.conj()));
                    }
                    inner += e.exp() * us.values[wi] * w[wi];
                }
                total += gz * inner;
            }
            c0 * dt * t.powi(n as i32) * total
        })
        .collect();
    Ok(per_slice.into_iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::QuadratureRule;

    fn grid() -> GridSpec {
        GridSpec {
            spatial_radius: 3.0,
            spatial_points: 7,
            vertical_radius: 4.0,
            vertical_points: 16,
            freq_min: 0.5,
            freq_max: 3.0,
            quadrature_rule: QuadratureRule::UniformTrapezoid,
        }
    }

    fn random_field(n: usize, g: &GridSpec, seed: u64) -> ScalarField {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let len = g.spatial_len(n) * g.vertical_points;
        let values = (0..len).map(|_| Complex64::new(next(), next())).collect();
        ScalarField::new(n, g.clone(), values).unwrap()
    }

    #[test]
    fn pure_tone_lands_in_one_bin() {
        let g = grid();
        let t0 = 3.0 * g.freq_step();
        let u = ScalarField::from_fn(1, g.clone(), |z, x| {
            Complex64::new(1.0 + z[0].re, 0.0) * Complex64::from_polar(1.0, -t0 * x)
        })
        .unwrap();
        let f = partial_ft(&u).unwrap();
        let nodes = g.spatial_nodes();
        for s in f.slices() {
            for (i, v) in s.values.iter().enumerate() {
                let z = g.spatial_point(1, i, &nodes);
                let expected = if (s.t - t0).abs() < 1e-12 {
                    2.0 * g.vertical_radius * (1.0 + z[0].re)
                } else {
                    0.0
                };
                assert!((v - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn slice_label_is_negated_eta() {
        // û(η) = ∫ e^{−ixη} u dx; the slice at t must equal û at η = −t
        let g = grid();
        let u = random_field(1, &g, 3);
        let f = partial_ft(&u).unwrap();
        let x = g.vertical_nodes();
        let s = &f.slices()[11];
        let eta = -s.t;
        let direct: Complex64 = x
            .iter()
            .enumerate()
            .map(|(m, &xm)| g.vertical_step() * Complex64::from_polar(1.0, -xm * eta) * u.values()[5 * 16 + m])
            .sum();
        assert!((direct - s.values[5]).norm() < 1e-12);
    }

    #[test]
    fn round_trip_and_parseval() {
        let g = grid();
        let u = random_field(1, &g, 9);
        let f = partial_ft(&u).unwrap();
        let back = partial_ift(&f).unwrap();
        assert!(back.sub(&u).unwrap().norm() < 1e-12 * u.norm());
        let lhs = f.norm_sqr();
        let rhs = 2.0 * PI * u.norm().powi(2);
        assert!((lhs - rhs).abs() < 1e-10 * rhs);
    }

    #[test]
    fn constant_in_x_sits_at_zero_frequency() {
        let g = grid();
        let u = ScalarField::from_fn(1, g.clone(), |z, _| z[0]).unwrap();
        let f = partial_ft(&u).unwrap();
        for s in f.slices() {
            let mass: f64 = s.values.iter().map(|v| v.norm()).sum();
            assert_eq!(s.t == 0.0, mass > 1e-9, "t = {}", s.t);
        }
    }

    #[test]
    fn pipeline_is_hermitian_and_pairing_agrees() {
        let g = grid();
        let sig = LambdaSignature::new(vec![1.0]).unwrap();
        let u = random_field(1, &g, 1);
        let v = random_field(1, &g, 2);
        let run = |f: &ScalarField| scalar_pipeline_project_with(f, &sig, BudgetPolicy::Skip).unwrap();
        let (pu, pv) = (run(&u), run(&v));
        let a = v.inner(&pu).unwrap();
        let b = pv.inner(&u).unwrap();
        assert!((a - b).norm() < 1e-12 * a.norm());
        let pair = frequency_pairing(&u, &v, &sig).unwrap();
        assert!((pair - a).norm() < 1e-10 * a.norm());
    }

    #[test]
    fn budgets_are_named() {
        let sig = LambdaSignature::new(vec![1.0]).unwrap();
        let mut g = grid();
        g.spatial_radius = 1.0;
        g.spatial_points = 101;
        match check_budgets(&g, &sig) {
            Err(SzegoError::Budget { budget, .. }) => assert_eq!(budget, "gaussian-truncation"),
            other => panic!("unexpected {other:?}"),
        }
        let mut g = grid();
        g.spatial_radius = 8.0;
        g.spatial_points = 9;
        match check_budgets(&g, &sig) {
            Err(SzegoError::Budget { budget, .. }) => assert_eq!(budget, "spatial-resolution"),
            other => panic!("unexpected {other:?}"),
        }
    }
}

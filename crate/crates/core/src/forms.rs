//! `(0,q)`-forms: CR vector fields and residuals, the component extractors
//! `τ±`, the reduction of mixed signatures to the `|λ|` structure, and the
//! assembled projector.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::bergman::{monomial_integral, SignedWeightPattern};
use crate::error::{usage, Result};
use crate::transform::{scalar_pipeline_project_with, BudgetPolicy, FrequencyField};
use crate::types::{FormField, GridSpec, LambdaSignature, MultiIndex, ScalarField};

/// `λ` as given, or `|λ|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrStructure {
    Standard,
    Hat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrField {
    /// `Zⱼ = ∂/∂zⱼ − iλⱼ z̄ⱼ ∂/∂x`
    Z,
    /// `Z̄ⱼ = ∂/∂z̄ⱼ + iλⱼ zⱼ ∂/∂x`
    ZBar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrOperator {
    pub field: CrField,
    /// 1-based complex axis.
    pub axis: usize,
    pub structure: CrStructure,
}

impl CrOperator {
    pub fn z(axis: usize) -> Self {
        Self {
            field: CrField::Z,
            axis,
            structure: CrStructure::Standard,
        }
    }

    pub fn zbar(axis: usize) -> Self {
        Self {
            field: CrField::ZBar,
            axis,
            structure: CrStructure::Standard,
        }
    }
}

/// Width of the spatial boundary band excluded from every residual norm.
pub const BOUNDARY_BAND: usize = 2;

fn check_fd_grid(grid: &GridSpec) -> Result<()> {
    if !grid.is_uniform() {
        return usage("finite differences need the uniform trapezoid grid");
    }
    if grid.spatial_points < 2 * BOUNDARY_BAND + 1 || grid.vertical_points < 5 {
        return usage("finite differences need at least 5 nodes per axis");
    }
    Ok(())
}

/// 4th-order centered derivative along spatial real axis `r` (0-based);
/// nodes in the boundary band are left at zero.
fn spatial_derivative(values: &[Complex64], n: usize, grid: &GridSpec, r: usize) -> Vec<Complex64> {
    let m = grid.spatial_points;
    let stride = m.pow((2 * n - 1 - r) as u32) * grid.vertical_points;
    let h = grid.spatial_step();
    let mut out = vec![Complex64::new(0.0, 0.0); values.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let i = (idx / stride) % m;
        if i < BOUNDARY_BAND || i + BOUNDARY_BAND >= m {
            continue;
        }
        let f = |d: isize| values[(idx as isize + d * stride as isize) as usize];
        *o = (f(-2) - 8.0 * f(-1) + 8.0 * f(1) - f(2)) / (12.0 * h);
    }
    out
}

/// 4th-order centered derivative along the periodic vertical axis.
fn vertical_derivative(values: &[Complex64], grid: &GridSpec) -> Vec<Complex64> {
    let nv = grid.vertical_points;
    let h = grid.vertical_step();
    let mut out = vec![Complex64::new(0.0, 0.0); values.len()];
    for (row_in, row_out) in values.chunks(nv).zip(out.chunks_mut(nv)) {
        for (m, o) in row_out.iter_mut().enumerate() {
            let f = |d: isize| row_in[(m as isize + d).rem_euclid(nv as isize) as usize];
            *o = (f(-2) - 8.0 * f(-1) + 8.0 * f(1) - f(2)) / (12.0 * h);
        }
    }
    out
}

/// Whether flattened field index `idx` lies off the spatial boundary band.
fn is_interior(idx: usize, n: usize, grid: &GridSpec) -> bool {
    let m = grid.spatial_points;
    let mut rest = idx / grid.vertical_points;
    for _ in 0..2 * n {
        let i = rest % m;
        if i < BOUNDARY_BAND || i + BOUNDARY_BAND >= m {
            return false;
        }
        rest /= m;
    }
    true
}

/// Applies a CR vector field by finite differences. Values in the spatial
/// boundary band are set to zero.
pub fn apply_cr(field: &ScalarField, op: CrOperator, sig: &LambdaSignature) -> Result<ScalarField> {
    let n = field.n();
    sig.check_dim(n, "field")?;
    let grid = field.grid();
    check_fd_grid(grid)?;
    if op.axis == 0 || op.axis > n {
        return usage(format!("CR operator axis {} outside 1..={n}", op.axis));
    }
    let j = op.axis - 1;
    let lambda = match op.structure {
        CrStructure::Standard => sig.lambdas()[j],
        CrStructure::Hat => sig.lambdas()[j].abs(),
    };
    let values = field.values();
    let da = spatial_derivative(values, n, grid, 2 * j);
    let db = spatial_derivative(values, n, grid, 2 * j + 1);
    let dx = vertical_derivative(values, grid);
    let nodes = grid.spatial_nodes();
    let nv = grid.vertical_points;
    let i = Complex64::i();
    let out = (0..values.len())
        .map(|idx| {
            if !is_interior(idx, n, grid) {
                return Complex64::new(0.0, 0.0);
            }
            let zj = grid.spatial_point(n, idx / nv, &nodes)[j];
            match op.field {
                CrField::Z => 0.5 * (da[idx] - i * db[idx]) - i * lambda * zj.conj() * dx[idx],
                CrField::ZBar => 0.5 * (da[idx] + i * db[idx]) + i * lambda * zj * dx[idx],
            }
        })
        .collect();
    Ok(field.with_values(out))
}

/// Discrete `L²` norm over the interior nodes.
pub fn interior_norm(field: &ScalarField) -> f64 {
    let n = field.n();
    let grid = field.grid();
    let w = grid.spatial_weight_table(n);
    let nv = grid.vertical_points;
    let hv = grid.vertical_step();
    field
        .values()
        .iter()
        .enumerate()
        .filter(|(idx, _)| is_interior(*idx, n, grid))
        .map(|(idx, v)| w[idx / nv] * hv * v.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Per component `u_J`: `(Σ_{j∈J} ‖Zⱼu_J‖² + Σ_{j∉J} ‖Z̄ⱼu_J‖²)^{1/2}` over the
/// interior.
pub fn cr_system_residual(u: &FormField, sig: &LambdaSignature) -> Result<BTreeMap<MultiIndex, f64>> {
    sig.check_dim(u.n(), "form")?;
    let mut out = BTreeMap::new();
    for (j, comp) in u.components() {
        let mut sq = 0.0;
        for axis in 1..=u.n() {
            let op = if j.contains(axis) {
                CrOperator::z(axis)
            } else {
                CrOperator::zbar(axis)
            };
            sq += interior_norm(&apply_cr(comp, op, sig)?).powi(2);
        }
        out.insert(j.clone(), sq.sqrt());
    }
    Ok(out)
}

/// Slice-wise residual of `(∂/∂zⱼ + λⱼz̄ⱼη)û = 0` for `j ∈ J` and
/// `(∂/∂z̄ⱼ − λⱼzⱼη)û = 0` for `j ∉ J`, `η = −t`, aggregated as
/// `(Σ_k Δt ‖r_k‖²)^{1/2}` over interior spatial nodes.
pub fn frequency_cr_residual(freq: &FrequencyField, j: &MultiIndex, sig: &LambdaSignature) -> Result<f64> {
    let n = freq.n();
    sig.check_dim(n, "frequency field")?;
    let grid = freq.grid();
    check_fd_grid(grid)?;
    // reuse the spatial stencils on a single-column layout
    let flat = GridSpec {
        vertical_points: 1,
        ..grid.clone()
    };
    let nodes = grid.spatial_nodes();
    let w = grid.spatial_weight_table(n);
    let interior: Vec<bool> = (0..grid.spatial_len(n)).map(|s| is_interior(s, n, &flat)).collect();
    let points: Vec<Vec<Complex64>> = (0..grid.spatial_len(n))
        .map(|s| grid.spatial_point(n, s, &nodes))
        .collect();
    let i = Complex64::i();
    let mut total = 0.0;
    for slice in freq.slices() {
        let eta = -slice.t;
        let mut sq = 0.0;
        for axis in 0..n {
            let l = sig.lambdas()[axis];
            let da = spatial_derivative(&slice.values, n, &flat, 2 * axis);
            let db = spatial_derivative(&slice.values, n, &flat, 2 * axis + 1);
            for s in 0..slice.values.len() {
                if !interior[s] {
                    continue;
                }
                let z = points[s][axis];
                let r = if j.contains(axis + 1) {
                    0.5 * (da[s] - i * db[s]) + l * z.conj() * eta * slice.values[s]
                } else {
                    0.5 * (da[s] + i * db[s]) - l * z * eta * slice.values[s]
                };
                sq += w[s] * r.norm_sqr();
            }
        }
        total += grid.freq_step() * sq;
    }
    Ok(total.sqrt())
}

fn require_nondegenerate(sig: &LambdaSignature) -> Result<()> {
    if sig.is_degenerate() {
        return usage("component extraction needs a non-degenerate signature");
    }
    Ok(())
}

fn extract(u: &FormField, j: MultiIndex) -> Result<FormField> {
    let mut components = BTreeMap::new();
    if let Some(c) = u.component(&j) {
        components.insert(j.clone(), c.clone());
    }
    FormField::new(u.n(), j.len(), u.grid().clone(), components)
}

/// Keeps only the component on the negative axes, as a degree-`n₋` form.
pub fn tau_minus(u: &FormField, sig: &LambdaSignature) -> Result<FormField> {
    require_nondegenerate(sig)?;
    sig.check_dim(u.n(), "form")?;
    extract(u, sig.negative_axes())
}

/// Keeps only the component on the positive axes, as a degree-`n₊` form;
/// for `n₋ = n` that is the scalar part.
pub fn tau_plus(u: &FormField, sig: &LambdaSignature) -> Result<FormField> {
    require_nondegenerate(sig)?;
    sig.check_dim(u.n(), "form")?;
    extract(u, sig.positive_axes())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    /// Conjugate the negative axes.
    Minus,
    /// Conjugate the positive axes and reflect the vertical coordinate.
    Plus,
}

/// Coordinate substitution carrying the `Block` branch to the `|λ|` structure.
/// An involution on the grid.
pub fn reflect_to_hat(field: &ScalarField, which: Block, sig: &LambdaSignature) -> Result<ScalarField> {
    let n = field.n();
    sig.check_dim(n, "field")?;
    let axes = match which {
        Block::Minus => sig.negative_axes(),
        Block::Plus => sig.positive_axes(),
    };
    let grid = field.grid();
    let m = grid.spatial_points;
    let nv = grid.vertical_points;
    let flip_x = which == Block::Plus;
    let values = field.values();
    let mut out = vec![Complex64::new(0.0, 0.0); values.len()];
    let mut digits = vec![0usize; 2 * n];
    for (s, chunk) in out.chunks_mut(nv).enumerate() {
        let mut rest = s;
        for d in digits.iter_mut().rev() {
            *d = rest % m;
            rest /= m;
        }
        let mut src = 0;
        for (r, &d) in digits.iter().enumerate() {
            let conj = r % 2 == 1 && axes.contains(r / 2 + 1);
            src = src * m + if conj { m - 1 - d } else { d };
        }
        let row = &values[src * nv..(src + 1) * nv];
        for (k, o) in chunk.iter_mut().enumerate() {
            *o = if flip_x { row[(nv - k) % nv] } else { row[k] };
        }
    }
    Ok(field.with_values(out))
}

/// Why a projection returned the zero form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VanishingReason {
    DegenerateSignature,
    DegreeOutsideSignature,
}

impl std::fmt::Display for VanishingReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::DegenerateSignature => {
                write!(f, "some lambda is zero, so the Hardy space is trivial in every degree")
            }
            Self::DegreeOutsideSignature => {
                write!(f, "the degree is neither n_minus nor n_plus, so the Hardy space is trivial")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormProjection {
    pub form: FormField,
    pub vanishing: Option<VanishingReason>,
}

fn zero_like(u: &FormField) -> Result<FormField> {
    let components = u
        .components()
        .iter()
        .map(|(j, c)| (j.clone(), c.scale(Complex64::new(0.0, 0.0))))
        .collect();
    FormField::new(u.n(), u.q(), u.grid().clone(), components)
}

fn project_branch(
    comp: &ScalarField,
    which: Block,
    sig: &LambdaSignature,
    policy: BudgetPolicy,
) -> Result<ScalarField> {
    let hat = reflect_to_hat(comp, which, sig)?;
    let projected = scalar_pipeline_project_with(&hat, &sig.abs(), policy)?;
    reflect_to_hat(&projected, which, sig)
}

/// The Szegő projector on `(0,q)`-forms.
///
/// Degree `n₋` keeps the negative-axes component, reflected to the `|λ|`
/// structure, projected by the scalar pipeline and reflected back; degree
/// `n₊` does the same for the positive-axes component with the vertical
/// reflection. All other components map to zero. Degenerate signatures and
/// degrees outside `{n₋, n₊}` give the zero form with a reason.
pub fn szego_project_form(u: &FormField, sig: &LambdaSignature) -> Result<FormProjection> {
    szego_project_form_with(u, sig, BudgetPolicy::Enforce)
}

pub fn szego_project_form_with(
    u: &FormField,
    sig: &LambdaSignature,
    policy: BudgetPolicy,
) -> Result<FormProjection> {
    sig.check_dim(u.n(), "form")?;
    let mut out = zero_like(u)?.into_components();
    if sig.is_degenerate() {
        return Ok(FormProjection {
            form: FormField::new(u.n(), u.q(), u.grid().clone(), out)?,
            vanishing: Some(VanishingReason::DegenerateSignature),
        });
    }
    let q = u.q();
    if q != sig.n_minus() && q != sig.n_plus() {
        return Ok(FormProjection {
            form: FormField::new(u.n(), q, u.grid().clone(), out)?,
            vanishing: Some(VanishingReason::DegreeOutsideSignature),
        });
    }
    let branch = |which: Block, active: bool| -> Result<Option<(MultiIndex, ScalarField)>> {
        if !active {
            return Ok(None);
        }
        let part = match which {
            Block::Minus => tau_minus(u, sig)?,
            Block::Plus => tau_plus(u, sig)?,
        };
        match part.into_components().into_iter().next() {
            Some((j, comp)) => Ok(Some((j, project_branch(&comp, which, sig, policy)?))),
            None => Ok(None),
        }
    };
    let (minus, plus) = rayon::join(
        || branch(Block::Minus, q == sig.n_minus()),
        || branch(Block::Plus, q == sig.n_plus()),
    );
    for (j, c) in [minus?, plus?].into_iter().flatten() {
        out.insert(j, c);
    }
    Ok(FormProjection {
        form: FormField::new(u.n(), q, u.grid().clone(), out)?,
        vanishing: None,
    })
}

/// Classifier outcome for one `(J, sign η)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct VanishingEntry {
    pub j: MultiIndex,
    pub eta_sign: i8,
    /// First multi-exponent with a finite integral, if any.
    pub finite_alpha: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VanishingReport {
    pub q: usize,
    pub entries: Vec<VanishingEntry>,
}

impl VanishingReport {
    pub fn all_infinite(&self) -> bool {
        self.entries.iter().all(|e| e.finite_alpha.is_none())
    }
}

/// Multi-exponents of dimension `n` with `|α| ≤ max_degree`, graded.
pub fn exponents_up_to(n: usize, max_degree: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0; n]];
    let mut frontier = out.clone();
    for _ in 0..max_degree {
        let mut next = Vec::new();
        for a in &frontier {
            let first = a.iter().rposition(|&k| k > 0).unwrap_or(0);
            for j in first..n {
                let mut b = a.clone();
                b[j] += 1;
                next.push(b);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Runs the monomial classifier over every `J` of length `q`, both signs of
/// `η` and `|α| ≤ 2`.
pub fn vanishing_evidence(q: usize, sig: &LambdaSignature) -> Result<VanishingReport> {
    if q > sig.n() {
        return usage(format!("degree {q} exceeds n = {}", sig.n()));
    }
    let alphas = exponents_up_to(sig.n(), 2);
    let mut entries = Vec::new();
    for j in MultiIndex::all(sig.n(), q) {
        let pattern = SignedWeightPattern::new(sig.clone(), j.clone())?;
        for eta_sign in [1i8, -1] {
            let finite_alpha = alphas
                .iter()
                .find(|a| monomial_integral(a, eta_sign as f64, &pattern).is_finite())
                .cloned();
            entries.push(VanishingEntry {
                j: j.clone(),
                eta_sign,
                finite_alpha,
            });
        }
    }
    Ok(VanishingReport { q, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::QuadratureRule;

    fn grid(points: usize) -> GridSpec {
        GridSpec {
            spatial_radius: 2.0,
            spatial_points: points,
            vertical_radius: 4.0,
            vertical_points: 16,
            freq_min: 0.5,
            freq_max: 3.0,
            quadrature_rule: QuadratureRule::UniformTrapezoid,
        }
    }

    fn sig(l: &[f64]) -> LambdaSignature {
        LambdaSignature::new(l.to_vec()).unwrap()
    }

    fn form1(g: &GridSpec, parts: &[(usize, ScalarField)]) -> FormField {
        let comps = parts
            .iter()
            .map(|(j, f)| (MultiIndex::new(vec![*j], 2).unwrap(), f.clone()))
            .collect();
        FormField::new(2, 1, g.clone(), comps).unwrap()
    }

    #[test]
    fn constant_and_holomorphic_are_cr() {
        let g = grid(9);
        let s = sig(&[1.0]);
        let c = ScalarField::from_fn(1, g.clone(), |_, _| Complex64::new(2.0, -1.0)).unwrap();
        let z = ScalarField::from_fn(1, g.clone(), |z, _| z[0]).unwrap();
        for op in [CrOperator::z(1), CrOperator::zbar(1)] {
            assert!(interior_norm(&apply_cr(&c, op, &s).unwrap()) < 1e-13);
        }
        assert!(interior_norm(&apply_cr(&z, CrOperator::zbar(1), &s).unwrap()) < 1e-13);
        let dz = apply_cr(&z, CrOperator::z(1), &s).unwrap();
        let idx = (4 * 9 + 4) * 16;
        assert!((dz.values()[idx] - 1.0).norm() < 1e-13);
    }

    #[test]
    fn coarse_or_nonuniform_grids_rejected() {
        let s = sig(&[1.0]);
        let f = ScalarField::zeros(1, grid(4)).unwrap();
        assert!(apply_cr(&f, CrOperator::z(1), &s).is_err());
        let mut g = grid(9);
        g.quadrature_rule = QuadratureRule::GaussLegendre;
        let f = ScalarField::zeros(1, g).unwrap();
        assert!(apply_cr(&f, CrOperator::z(1), &s).is_err());
    }

    #[test]
    fn tau_examples() {
        let g = grid(5);
        let s = sig(&[-1.0, 1.0]);
        let a = ScalarField::from_fn(2, g.clone(), |_, _| Complex64::new(1.0, 0.0)).unwrap();
        let b = ScalarField::from_fn(2, g.clone(), |_, _| Complex64::new(0.0, 1.0)).unwrap();
        let u = form1(&g, &[(1, a.clone()), (2, b.clone())]);
        let m = tau_minus(&u, &s).unwrap();
        assert_eq!(m.components().len(), 1);
        assert_eq!(m.component(&MultiIndex::new(vec![1], 2).unwrap()), Some(&a));
        let p = tau_plus(&u, &s).unwrap();
        assert_eq!(p.component(&MultiIndex::new(vec![2], 2).unwrap()), Some(&b));
        let only_b = form1(&g, &[(2, b)]);
        assert!(tau_minus(&only_b, &s).unwrap().components().is_empty());
        assert!(tau_minus(&u, &sig(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn tau_plus_takes_scalar_when_all_negative() {
        let g = grid(5);
        let s = sig(&[-2.0]);
        let u0 = ScalarField::from_fn(1, g.clone(), |z, _| z[0]).unwrap();
        let u = FormField::scalar(u0.clone());
        let p = tau_plus(&u, &s).unwrap();
        assert_eq!((p.q(), p.component(&MultiIndex::empty())), (0, Some(&u0)));
    }

    #[test]
    fn reflection_is_an_involution() {
        let g = grid(6);
        let s = sig(&[-1.0, 2.0]);
        let f = ScalarField::from_fn(2, g.clone(), |z, x| {
            z[0] * z[1].conj() + Complex64::new(x, z[1].im * x)
        })
        .unwrap();
        for b in [Block::Minus, Block::Plus] {
            let r = reflect_to_hat(&f, b, &s).unwrap();
            assert_ne!(r, f);
            assert_eq!(reflect_to_hat(&r, b, &s).unwrap(), f);
        }
        let pos = sig(&[1.0, 2.0]);
        assert_eq!(reflect_to_hat(&f, Block::Minus, &pos).unwrap(), f);
    }

    #[test]
    fn reflection_matches_substitution() {
        let g = grid(6);
        let s = sig(&[-1.0, 2.0]);
        let f = |z: &[Complex64], x: f64| z[0] * 2.0 + z[1] * z[1] + Complex64::new(0.0, x);
        let field = ScalarField::from_fn(2, g.clone(), f).unwrap();
        let plus = reflect_to_hat(&field, Block::Plus, &s).unwrap();
        let expected = ScalarField::from_fn(2, g.clone(), |z, x| {
            let xr = if (x + g.vertical_radius).abs() < 1e-12 { x } else { -x };
            f(&[z[0], z[1].conj()], xr)
        })
        .unwrap();
        assert!(plus.sub(&expected).unwrap().norm() < 1e-12);
    }

    #[test]
    fn vanishing_examples() {
        let r = vanishing_evidence(1, &sig(&[1.0, 1.0])).unwrap();
        assert_eq!(r.entries.len(), 4);
        assert!(r.all_infinite());
        let r = vanishing_evidence(1, &sig(&[-1.0, 1.0])).unwrap();
        let e = r
            .entries
            .iter()
            .find(|e| e.j.entries() == [1] && e.eta_sign > 0)
            .unwrap();
        // J = (1), η > 0: c₁ = 2η(+1)(−1) < 0 would diverge; finite case is η < 0
        assert!(e.finite_alpha.is_none());
        assert!(r.entries.iter().any(|e| e.j.entries() == [1] && e.finite_alpha.is_some()));
        assert!(vanishing_evidence(1, &sig(&[0.0, 1.0])).unwrap().all_infinite());
    }

    #[test]
    fn exponent_enumeration() {
        assert_eq!(exponents_up_to(2, 2).len(), 6);
        assert_eq!(exponents_up_to(3, 2).len(), 10);
        assert_eq!(exponents_up_to(1, 4).len(), 5);
    }

    #[test]
    fn structural_zero() {
        let g = grid(5);
        let s = sig(&[1.0, 1.0]);
        let a = ScalarField::from_fn(2, g.clone(), |z, _| z[0]).unwrap();
        let u = form1(&g, &[(1, a)]);
        let p = szego_project_form(&u, &s).unwrap();
        assert_eq!(p.vanishing, Some(VanishingReason::DegreeOutsideSignature));
        assert_eq!(p.form.norm(), 0.0);
        let p = szego_project_form(&u, &sig(&[0.0, 1.0])).unwrap();
        assert_eq!(p.vanishing, Some(VanishingReason::DegenerateSignature));
    }
}

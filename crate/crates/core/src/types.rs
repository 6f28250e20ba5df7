//! Shared domain types: the λ signature, points of the Heisenberg group,
//! multi-indices, tensor grids and sampled fields.
//!
//! Field layout: the spatial part of a grid has `2n` real axes ordered
//! `(Re z₁, Im z₁, Re z₂, Im z₂, …)`, row-major, and the vertical axis is the
//! fastest-varying index of a [`ScalarField`].

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Result, SzegoError};
use crate::quadrature::gauss_legendre_on;

/// The coefficients `(λ₁,…,λₙ)` together with their sign counts.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSignature {
    lambdas: Vec<f64>,
    n_minus: usize,
    n_plus: usize,
    degenerate: bool,
}

impl LambdaSignature {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return usage("lambda signature needs at least one entry");
        }
        if lambdas.iter().any(|l| !l.is_finite()) {
            return usage("lambda entries must be finite");
        }
        let n_minus = lambdas.iter().filter(|&&l| l < 0.0).count();
        let n_plus = lambdas.iter().filter(|&&l| l > 0.0).count();
        let degenerate = n_minus + n_plus < lambdas.len();
        Ok(Self {
            lambdas,
            n_minus,
            n_plus,
            degenerate,
        })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    pub fn n_minus(&self) -> usize {
        self.n_minus
    }

    pub fn n_plus(&self) -> usize {
        self.n_plus
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn is_all_positive(&self) -> bool {
        self.n_plus == self.n()
    }

    /// The signature with every entry replaced by its absolute value.
    pub fn abs(&self) -> Self {
        Self::new(self.lambdas.iter().map(|l| l.abs()).collect()).expect("finite entries")
    }

    /// `|λ₁|···|λₙ|`.
    pub fn abs_product(&self) -> f64 {
        self.lambdas.iter().map(|l| l.abs()).product()
    }

    /// Axes (1-based) carrying a negative coefficient, in increasing order.
    pub fn negative_axes(&self) -> MultiIndex {
        MultiIndex {
            entries: (1..=self.n()).filter(|&j| self.lambdas[j - 1] < 0.0).collect(),
        }
    }

    /// Axes (1-based) carrying a positive coefficient, in increasing order.
    pub fn positive_axes(&self) -> MultiIndex {
        MultiIndex {
            entries: (1..=self.n()).filter(|&j| self.lambdas[j - 1] > 0.0).collect(),
        }
    }

    pub(crate) fn check_dim(&self, n: usize, what: &str) -> Result<()> {
        if n != self.n() {
            return usage(format!(
                "{what} has dimension {n} but the signature has n = {}",
                self.n()
            ));
        }
        Ok(())
    }
}

/// A point `(z, x_last)` of `ℂⁿ × ℝ`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeisenbergPoint {
    pub z: Vec<Complex64>,
    pub x_last: f64,
}

impl HeisenbergPoint {
    pub fn new(z: Vec<Complex64>, x_last: f64) -> Self {
        Self { z, x_last }
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }
}

/// A strictly increasing multi-index with 1-based entries.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MultiIndex {
    entries: Vec<usize>,
}

impl MultiIndex {
    pub fn new(entries: Vec<usize>, n: usize) -> Result<Self> {
        if let Some(&bad) = entries.iter().find(|&&j| j == 0 || j > n) {
            return usage(format!("multi-index entry {bad} outside 1..={n}"));
        }
        if entries.windows(2).any(|w| w[0] >= w[1]) {
            return usage(format!("multi-index {entries:?} is not strictly increasing"));
        }
        Ok(Self { entries })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.entries.binary_search(&j).is_ok()
    }

    /// All strictly increasing multi-indices of length `q` over `1..=n`.
    pub fn all(n: usize, q: usize) -> Vec<MultiIndex> {
        fn rec(start: usize, n: usize, q: usize, cur: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
            if cur.len() == q {
                out.push(MultiIndex {
                    entries: cur.clone(),
                });
                return;
            }
            for j in start..=n {
                cur.push(j);
                rec(j + 1, n, q, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        if q <= n {
            rec(1, n, q, &mut Vec::new(), &mut out);
        }
        out
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, j) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, ")")
    }
}

/// Strictly increasing complement of `j` in `{1,…,n}`.
pub fn multiindex_complement(j: &MultiIndex, n: usize) -> Result<MultiIndex> {
    if let Some(&bad) = j.entries.iter().find(|&&k| k == 0 || k > n) {
        return usage(format!("multi-index entry {bad} outside 1..={n}"));
    }
    Ok(MultiIndex {
        entries: (1..=n).filter(|k| !j.contains(*k)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    #[default]
    UniformTrapezoid,
    GaussLegendre,
}

/// Tensor grid over `[-R, R]^{2n} × [-R_v, R_v)`.
///
/// The vertical axis is periodic with `vertical_points` equispaced nodes
/// `x_m = -R_v + m·h_v`, `h_v = 2R_v / N_v`. Its discrete dual is the
/// frequency axis `t_k = k·π/R_v`, `k ∈ [-⌊N_v/2⌋, N_v - ⌊N_v/2⌋)`; slices
/// outside `[freq_min, freq_max]` are dropped by the projector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub spatial_radius: f64,
    pub spatial_points: usize,
    pub vertical_radius: f64,
    pub vertical_points: usize,
    pub freq_min: f64,
    pub freq_max: f64,
    #[serde(default)]
    pub quadrature_rule: QuadratureRule,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.spatial_radius > 0.0 && self.spatial_radius.is_finite()) {
            return usage("grid.spatial_radius must be positive");
        }
        if !(self.vertical_radius > 0.0 && self.vertical_radius.is_finite()) {
            return usage("grid.vertical_radius must be positive");
        }
        if self.spatial_points < 2 || self.vertical_points < 2 {
            return usage("grid point counts must be at least 2");
        }
        if !(self.freq_max > 0.0 && self.freq_max.is_finite()) {
            return usage("grid.freq_max must be positive");
        }
        if !(self.freq_min >= 0.0 && self.freq_min < self.freq_max) {
            return usage("grid.freq_min must lie in [0, freq_max)");
        }
        Ok(())
    }

    /// Nodes of one real spatial axis.
    pub fn spatial_nodes(&self) -> Vec<f64> {
        self.spatial_axis().0
    }

    /// 1D quadrature weights of one real spatial axis (no measure factor).
    pub fn spatial_weights(&self) -> Vec<f64> {
        self.spatial_axis().1
    }

    fn spatial_axis(&self) -> (Vec<f64>, Vec<f64>) {
        let r = self.spatial_radius;
        let m = self.spatial_points;
        match self.quadrature_rule {
            QuadratureRule::UniformTrapezoid => {
                let h = self.spatial_step();
                let nodes = (0..m).map(|i| -r + i as f64 * h).collect();
                let weights = (0..m)
                    .map(|i| if i == 0 || i + 1 == m { 0.5 * h } else { h })
                    .collect();
                (nodes, weights)
            }
            QuadratureRule::GaussLegendre => gauss_legendre_on(m, -r, r),
        }
    }

    /// Spacing of the uniform spatial axis.
    pub fn spatial_step(&self) -> f64 {
        2.0 * self.spatial_radius / (self.spatial_points - 1) as f64
    }

    pub fn is_uniform(&self) -> bool {
        self.quadrature_rule == QuadratureRule::UniformTrapezoid
    }

    pub fn vertical_step(&self) -> f64 {
        2.0 * self.vertical_radius / self.vertical_points as f64
    }

    pub fn vertical_nodes(&self) -> Vec<f64> {
        let h = self.vertical_step();
        (0..self.vertical_points)
            .map(|m| -self.vertical_radius + m as f64 * h)
            .collect()
    }

    /// Spacing of the frequency axis dual to the vertical grid.
    pub fn freq_step(&self) -> f64 {
        std::f64::consts::PI / self.vertical_radius
    }

    /// Integer labels `k` of the frequency nodes, increasing.
    pub fn freq_labels(&self) -> std::ops::Range<i64> {
        let nv = self.vertical_points as i64;
        let lo = -(nv / 2);
        lo..lo + nv
    }

    /// Frequency nodes `t_k`, increasing.
    pub fn frequencies(&self) -> Vec<f64> {
        let dt = self.freq_step();
        self.freq_labels().map(|k| k as f64 * dt).collect()
    }

    /// Whether a positive frequency lies in the projector band.
    pub fn in_band(&self, t: f64) -> bool {
        t > 0.0 && t >= self.freq_min && t <= self.freq_max
    }

    /// Number of spatial nodes for dimension `n`.
    pub fn spatial_len(&self, n: usize) -> usize {
        self.spatial_points.pow(2 * n as u32)
    }

    /// Per-node spatial weights for `dμ(z)`, flattened in field order.
    pub fn spatial_weight_table(&self, n: usize) -> Vec<f64> {
        let w1 = self.spatial_weights();
        let m = self.spatial_points;
        let plane: Vec<f64> = (0..m * m).map(|i| 2.0 * w1[i / m] * w1[i % m]).collect();
        let mut table = vec![1.0];
        for _ in 0..n {
            table = table
                .iter()
                .flat_map(|&a| plane.iter().map(move |&b| a * b))
                .collect();
        }
        table
    }

    /// Complex coordinates of spatial node `s` (flattened index).
    pub fn spatial_point(&self, n: usize, s: usize, nodes: &[f64]) -> Vec<Complex64> {
        let m = self.spatial_points;
        let mut z = vec![Complex64::new(0.0, 0.0); n];
        let mut rest = s;
        for j in (0..n).rev() {
            let ib = rest % m;
            rest /= m;
            let ia = rest % m;
            rest /= m;
            z[j] = Complex64::new(nodes[ia], nodes[ib]);
        }
        z
    }
}

/// Location of a grid node: `2n` spatial axis indices and, for the full
/// measure, a vertical index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointIndex {
    pub spatial: Vec<usize>,
    pub vertical: Option<usize>,
}

/// Quadrature weight at a node, including the `2ⁿ` factor of the volume form.
///
/// With `vertical: None` this is the weight of `dμ(z)` on `ℂⁿ`.
pub fn volume_weight(grid: &GridSpec, index: &PointIndex) -> Result<f64> {
    if index.spatial.is_empty() || !index.spatial.len().is_multiple_of(2) {
        return usage("spatial index needs 2n entries");
    }
    if let Some(&bad) = index.spatial.iter().find(|&&i| i >= grid.spatial_points) {
        return usage(format!("spatial index {bad} out of range"));
    }
    let w1 = grid.spatial_weights();
    let mut w: f64 = index
        .spatial
        .chunks(2)
        .map(|p| 2.0 * w1[p[0]] * w1[p[1]])
        .product();
    if let Some(m) = index.vertical {
        if m >= grid.vertical_points {
            return usage(format!("vertical index {m} out of range"));
        }
        w *= grid.vertical_step();
    }
    Ok(w)
}

/// A complex field sampled on a [`GridSpec`] over `H_{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    n: usize,
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl ScalarField {
    pub fn new(n: usize, grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        grid.validate()?;
        if n == 0 {
            return usage("field dimension n must be at least 1");
        }
        let expected = grid
            .spatial_points
            .checked_pow(2 * n as u32)
            .and_then(|s| s.checked_mul(grid.vertical_points));
        if expected != Some(values.len()) {
            return usage(format!(
                "field has {} values, grid needs {expected:?}",
                values.len()
            ));
        }
        Ok(Self { n, grid, values })
    }

    pub fn zeros(n: usize, grid: GridSpec) -> Result<Self> {
        let len = grid.spatial_len(n) * grid.vertical_points;
        Self::new(n, grid, vec![Complex64::new(0.0, 0.0); len])
    }

    /// Samples `f(z, x_last)` at every node.
    pub fn from_fn(
        n: usize,
        grid: GridSpec,
        f: impl Fn(&[Complex64], f64) -> Complex64,
    ) -> Result<Self> {
        grid.validate()?;
        let nodes = grid.spatial_nodes();
        let vert = grid.vertical_nodes();
        let mut values = Vec::with_capacity(grid.spatial_len(n) * vert.len());
        for s in 0..grid.spatial_len(n) {
            let z = grid.spatial_point(n, s, &nodes);
            values.extend(vert.iter().map(|&x| f(&z, x)));
        }
        Self::new(n, grid, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn same_shape(&self, other: &ScalarField) -> bool {
        self.n == other.n && self.grid == other.grid
    }

    pub(crate) fn check_shape(&self, other: &ScalarField) -> Result<()> {
        if !self.same_shape(other) {
            return usage("fields live on different grids");
        }
        Ok(())
    }

    /// Discrete `L²(H_{n+1})` inner product `Σ w · conj(self) · other`.
    pub fn inner(&self, other: &ScalarField) -> Result<Complex64> {
        self.check_shape(other)?;
        let ws = self.grid.spatial_weight_table(self.n);
        let nv = self.grid.vertical_points;
        let hv = self.grid.vertical_step();
        let mut acc = Complex64::new(0.0, 0.0);
        for (s, &w) in ws.iter().enumerate() {
            let a = &self.values[s * nv..(s + 1) * nv];
            let b = &other.values[s * nv..(s + 1) * nv];
            let row: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
            acc += row * (w * hv);
        }
        Ok(acc)
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).expect("same grid").re.max(0.0).sqrt()
    }

    /// `self - other`.
    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        self.check_shape(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Self {
            n: self.n,
            grid: self.grid.clone(),
            values,
        })
    }

    /// `self + c · other`.
    pub fn add_scaled(&self, c: Complex64, other: &ScalarField) -> Result<ScalarField> {
        self.check_shape(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + c * b)
            .collect();
        Ok(Self {
            n: self.n,
            grid: self.grid.clone(),
            values,
        })
    }

    pub fn scale(&self, c: Complex64) -> ScalarField {
        Self {
            n: self.n,
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub(crate) fn with_values(&self, values: Vec<Complex64>) -> ScalarField {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            n: self.n,
            grid: self.grid.clone(),
            values,
        }
    }
}

/// A sampled `(0,q)`-form: components keyed by multi-indices of length `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormField {
    n: usize,
    q: usize,
    grid: GridSpec,
    components: BTreeMap<MultiIndex, ScalarField>,
}

impl FormField {
    pub fn new(
        n: usize,
        q: usize,
        grid: GridSpec,
        components: BTreeMap<MultiIndex, ScalarField>,
    ) -> Result<Self> {
        grid.validate()?;
        if q > n {
            return usage(format!("form degree {q} exceeds n = {n}"));
        }
        for (j, c) in &components {
            if j.len() != q {
                return usage(format!("component {j} has length {} not {q}", j.len()));
            }
            if j.entries().iter().any(|&k| k > n) {
                return usage(format!("component {j} has entries above n = {n}"));
            }
            if c.n() != n || c.grid() != &grid {
                return usage(format!("component {j} lives on a different grid"));
            }
        }
        Ok(Self {
            n,
            q,
            grid,
            components,
        })
    }

    /// The form with no components.
    pub fn zero(n: usize, q: usize, grid: GridSpec) -> Result<Self> {
        Self::new(n, q, grid, BTreeMap::new())
    }

    /// Wraps a scalar as a degree-0 form.
    pub fn scalar(field: ScalarField) -> Self {
        let mut components = BTreeMap::new();
        let (n, grid) = (field.n(), field.grid().clone());
        components.insert(MultiIndex::empty(), field);
        Self {
            n,
            q: 0,
            grid,
            components,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn components(&self) -> &BTreeMap<MultiIndex, ScalarField> {
        &self.components
    }

    pub fn component(&self, j: &MultiIndex) -> Option<&ScalarField> {
        self.components.get(j)
    }

    pub fn into_components(self) -> BTreeMap<MultiIndex, ScalarField> {
        self.components
    }

    /// Sum of component inner products; absent components count as zero.
    pub fn inner(&self, other: &FormField) -> Result<Complex64> {
        if self.n != other.n || self.q != other.q || self.grid != other.grid {
            return Err(SzegoError::Usage("forms have different shapes".into()));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, a) in &self.components {
            if let Some(b) = other.components.get(j) {
                acc += a.inner(b)?;
            }
        }
        Ok(acc)
    }

    pub fn norm(&self) -> f64 {
        self.components
            .values()
            .map(|c| c.norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Componentwise `self - other`; missing components count as zero.
    pub fn sub(&self, other: &FormField) -> Result<FormField> {
        if self.n != other.n || self.q != other.q || self.grid != other.grid {
            return usage("forms have different shapes");
        }
        let mut out = self.components.clone();
        for (j, b) in &other.components {
            let entry = match out.remove(j) {
                Some(a) => a.sub(b)?,
                None => b.scale(Complex64::new(-1.0, 0.0)),
            };
            out.insert(j.clone(), entry);
        }
        FormField::new(self.n, self.q, self.grid.clone(), out)
    }
}

/// Values of a frequency-domain slice at frequency `t` over the spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySlice {
    pub t: f64,
    pub values: Vec<Complex64>,
}

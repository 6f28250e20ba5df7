use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;

use super::direct::{direct_kernel_values, micro_grid, RationalHardy};
use super::Measurement;
use crate::bergman::{
    bergman_project, default_witness_radii, divergence_witness, gaussian_reproducing_check,
    monomial_integral, truncated_monomial_integral, MonomialIntegral, Polynomial,
    SignedWeightPattern, WeightSpec,
};
use crate::config::{default_grid, RunConfig};
use crate::error::{usage, Result};
use crate::forms::{
    cr_system_residual, exponents_up_to, frequency_cr_residual, interior_norm, szego_project_form,
    szego_project_form_with, vanishing_evidence,
};
use crate::packet::{make_wave_packet, Envelope, FrequencySide, WavePacketSpec};
use crate::phase::{fio_quadrature, fio_resolution, phase, szego_kernel_scalar, PhaseChoice};
use crate::quadrature::composite_gauss_legendre;
use crate::random::{localized_field, localized_slice, noise_field, stream_rng, uniform};
use crate::transform::{
    check_slice_budgets, frequency_pairing, partial_ft, scalar_pipeline_project, BudgetPolicy,
};
use crate::types::{
    FormField, FrequencySlice, GridSpec, HeisenbergPoint, LambdaSignature, MultiIndex,
    QuadratureRule, ScalarField,
};

fn signature(l: Vec<f64>) -> Result<LambdaSignature> {
    LambdaSignature::new(l)
}

fn unit(n: usize) -> Result<LambdaSignature> {
    signature(vec![1.0; n])
}

fn rel_err(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

fn random_signs(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let m = uniform(rng, lo, hi);
            if rng.random_bool(0.5) {
                -m
            } else {
                m
            }
        })
        .collect()
}

fn random_z(rng: &mut impl Rng, n: usize, rz: f64) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(uniform(rng, -rz, rz), uniform(rng, -rz, rz)))
        .collect()
}

fn random_point(rng: &mut impl Rng, n: usize, rz: f64, rx: f64) -> HeisenbergPoint {
    let z = random_z(rng, n, rz);
    HeisenbergPoint::new(z, uniform(rng, -rx, rx))
}

fn index(entries: &[usize], n: usize) -> Result<MultiIndex> {
    MultiIndex::new(entries.to_vec(), n)
}

fn form(n: usize, grid: &GridSpec, parts: Vec<(MultiIndex, ScalarField)>) -> Result<FormField> {
    let q = parts.first().map_or(0, |(j, _)| j.len());
    FormField::new(n, q, grid.clone(), parts.into_iter().collect())
}

fn field_rel(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    Ok(a.sub(b)?.norm() / b.norm())
}

/// `∫₀^∞ tᵐ e^{−ts} dt` by composite Gauss–Legendre along the ray
/// `t = r e^{−iθ/2}`, `θ = arg s`, which halves the oscillation of the
/// integrand (the rotation is allowed since `Re s > 0`).
fn laplace_quadrature(m: usize, s: Complex64) -> Complex64 {
    let dir = Complex64::from_polar(1.0, -0.5 * s.arg());
    let rate = s * dir;
    let r_max = (60.0 + 4.0 * m as f64) / rate.re;
    let panels = ((r_max * rate.norm() / 2.0).ceil() as usize).max(4);
    let (x, w) = composite_gauss_legendre(0.0, r_max, panels, 20);
    let sum: Complex64 = x
        .iter()
        .zip(&w)
        .map(|(&r, &w)| w * r.powi(m as i32) * (-r * rate).exp())
        .sum();
    sum * dir.powi(m as i32 + 1)
}

pub(super) fn gamma_moment(cfg: &RunConfig, quick: bool) -> Result<Vec<Measurement>> {
    let mut rng = stream_rng(cfg.seed, 1);
    let mut worst = 0.0f64;
    for _ in 0..if quick { 10 } else { 50 } {
        let s = Complex64::new(uniform(&mut rng, 0.2, 5.0), uniform(&mut rng, -5.0, 5.0));
        for m in 0..=6 {
            let exact = crate::phase::gamma_moment(m, s)?;
            worst = worst.max(rel_err(laplace_quadrature(m, s), exact));
        }
    }
    Ok(vec![Measurement::at_most(
        "max-rel-err",
        worst,
        cfg.tolerances.gamma_moment,
    )])
}

pub(super) fn kernel_routes(cfg: &RunConfig, quick: bool) -> Result<Vec<Measurement>> {
    let count = if quick { 10 } else { 100 };
    let choices = [PhaseChoice::Minus, PhaseChoice::Plus, PhaseChoice::Hat];
    let mut worst = 0.0f64;
    for (case, (n, eps)) in [(1, 0.25), (1, 1.0), (2, 0.25), (2, 1.0)].into_iter().enumerate() {
        let mut rng = stream_rng(cfg.seed, 200 + case as u64);
        for k in 0..count {
            let sig = signature(random_signs(&mut rng, n, 0.5, 2.0))?;
            let x = random_point(&mut rng, n, 1.5, 2.0);
            let y = random_point(&mut rng, n, 1.5, 2.0);
            let choice = choices[k % 3];
            let closed = szego_kernel_scalar(&x, &y, &sig, choice, eps)?;
            let (t_max, points) = fio_resolution(phase(choice, &x, &y, &sig)?, eps, n);
            let fio = fio_quadrature(&x, &y, &sig, choice, eps, t_max, points)?.value;
            worst = worst.max(rel_err(fio, closed));
        }
    }
    Ok(vec![Measurement::at_most(
        "max-rel-err",
        worst,
        cfg.tolerances.fio_agreement,
    )])
}

pub(super) fn phase_identities(cfg: &RunConfig, quick: bool) -> Result<Vec<Measurement>> {
    let tol = cfg.tolerances.phase_identity;
    let mut rng = stream_rng(cfg.seed, 3);
    let (mut ident, mut neg_im, mut diag_im) = (0.0f64, 0.0f64, 0.0f64);
    let mut off_ratio = f64::INFINITY;
    for k in 0..if quick { 100 } else { 1000 } {
        let n = 1 + k % 3;
        let sig = signature(random_signs(&mut rng, n, 0.2, 3.0))?;
        let x = random_point(&mut rng, n, 2.0, 3.0);
        let mut y = random_point(&mut rng, n, 2.0, 3.0);
        let diagonal = k % 10 == 0;
        if diagonal {
            y.z = x.z.clone();
        }
        let minus = phase(PhaseChoice::Minus, &x, &y, &sig)?;
        let plus = phase(PhaseChoice::Plus, &x, &y, &sig)?;
        let swapped = phase(PhaseChoice::Minus, &y, &x, &sig)?;
        let hat = phase(PhaseChoice::Hat, &x, &y, &sig)?;
        let scale = 1.0 + minus.norm();
        ident = ident
            .max((plus + minus.conj()).norm() / scale)
            .max((plus - swapped).norm() / scale);
        let l_min = sig.lambdas().iter().map(|l| l.abs()).fold(f64::INFINITY, f64::min);
        let dist: f64 = x.z.iter().zip(&y.z).map(|(z, w)| (z - w).norm_sqr()).sum();
        for v in [minus, plus, hat] {
            neg_im = neg_im.max(-v.im / scale);
            if diagonal {
                diag_im = diag_im.max(v.im.abs());
            } else {
                off_ratio = off_ratio.min(v.im / (l_min * dist));
            }
        }
    }
    Ok(vec![
        Measurement::at_most("identity-err", ident, tol),
        Measurement::at_most("negative-im", neg_im, tol),
        Measurement::at_most("diagonal-im", diag_im, tol),
        Measurement::at_least("off-diagonal-im-ratio", off_ratio, 1.0 - tol),
    ])
}

pub(super) fn gaussian_reproducing(cfg: &RunConfig, quick: bool) -> Result<Vec<Measurement>> {
    let grid = GridSpec {
        spatial_radius: 8.0,
        spatial_points: 161,
        vertical_radius: 1.0,
        vertical_points: 2,
        freq_min: 0.0,
        freq_max: 1.0,
        quadrature_rule: QuadratureRule::UniformTrapezoid,
    };
    let mut rng = stream_rng(cfg.seed, 4);
    let cases: Vec<LambdaSignature> = if quick {
        vec![unit(1)?]
    } else {
        vec![unit(1)?, signature(vec![0.7, 1.3])?]
    };
    let ts: &[f64] = if quick { &[1.0] } else { &[0.5, 1.0, 2.0] };
    let mut worst = 0.0f64;
    for sig in cases {
        let n = sig.n();
        let points: Vec<Vec<Complex64>> = (0..3).map(|_| random_z(&mut rng, n, 1.0)).collect();
        for alpha in exponents_up_to(n, 4) {
            let g = Polynomial::monomial(alpha);
            for &t in ts {
                for z in &points {
                    let (lhs, rhs) = gaussian_reproducing_check(&g, z, t, &sig, &grid)?;
                    worst = worst.max((lhs - rhs).norm() / (1.0 + lhs.norm()));
                }
            }
        }
    }
    Ok(vec![Measurement::at_most(
        "max-scaled-err",
        worst,
        cfg.tolerances.gaussian_reproducing,
    )])
}

pub(super) fn bergman_slice(cfg: &RunConfig, quick: bool) -> Result<Vec<Measurement>> {
    let tol = &cfg.tolerances;
    let grid = &cfg.grid;
    let sig = unit(1)?;
    let ts: &[f64] = if quick { &[1.0] } else { &[1.0, 2.0, 4.0] };
    check_slice_budgets(grid, &sig, ts[0], ts[ts.len() - 1])?;
    let nodes = grid.spatial_nodes();
    let weights = grid.spatial_weight_table(1);
    let points: Vec<Complex64> = (0..grid.spatial_len(1))
        .map(|s| grid.spatial_point(1, s, &nodes)[0])
        .collect();
    let norm = |v: &[Complex64]| -> f64 {
        v.iter().zip(&weights).map(|(v, w)| w * v.norm_sqr()).sum::<f64>().sqrt()
    };
    let diff = |a: &[Complex64], b: &[Complex64]| -> Vec<Complex64> {
        a.iter().zip(b).map(|(a, b)| a - b).collect()
    };
    let sup = |v: &[Complex64]| v.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut rng = stream_rng(cfg.seed, 5);
    let (mut repro, mut annih, mut excess, mut idem) = (0.0f64, 0.0f64, f64::NEG_INFINITY, 0.0f64);
    for &t in ts {
        let weight = WeightSpec::new(sig.clone(), t);
        let project = |values: Vec<Complex64>| -> Result<Vec<Complex64>> {
            Ok(bergman_project(&FrequencySlice { t, values }, &weight, grid)?.values)
        };
        for a in 0..=4 {
            let u: Vec<Complex64> = points.iter().map(|z| z.powi(a) * (-t * z.norm_sqr()).exp()).collect();
            let p = project(u.clone())?;
            repro = repro.max(norm(&diff(&p, &u)) / norm(&u));
            if a > 0 {
                let ubar: Vec<Complex64> = points.iter().map(|z| z.conj().powi(a) * (-t * z.norm_sqr()).exp()).collect();
                let p = project(ubar.clone())?;
                annih = annih.max(sup(&p) / sup(&ubar));
            }
        }
        for _ in 0..if quick { 1 } else { 3 } {
            let v = localized_slice(&mut rng, 1, grid);
            let p = project(v.clone())?;
            let pp = project(p.clone())?;
            excess = excess.max(norm(&p) / norm(&v) - 1.0);
            idem = idem.max(norm(&diff(&pp, &p)) / norm(&p));
        }
    }
    Ok(vec![
        Measurement::at_most("holomorphic-rel-err", repro, tol.slice_reproduction),
        Measurement::at_most("antiholomorphic-abs", annih, tol.slice_annihilation),
        Measurement::at_most("norm-excess", excess, tol.slice_contraction),
        Measurement::at_most("idempotency-gap", idem, tol.slice_idempotency),
    ])
}

pub(super) fn parseval(cfg: &RunConfig, quick: bool) -> Result<Vec<Measurement>> {
    let mut rng = stream_rng(cfg.seed, 6);
    let cases: Vec<(usize, GridSpec, usize)> = if quick {
        vec![(1, cfg.grid.clone(), 2)]
    } else {
        vec![(1, cfg.grid.clone(), 10), (2, default_grid(2), 10)]
    };
    let mut worst = 0.0f64;
    for (n, grid, count) in cases {
        for _ in 0..count {
            let u = localized_field(&mut rng, n, &grid)?;
            // ‖û‖² = 2π ‖u‖² with û(t) = ∫ e^{ixt} u dx
            let energy = 2.0 * std::f64::consts::PI * u.norm().powi(2);
            worst = worst.max((partial_ft(&u)?.norm_sqr() - energy).abs() / energy);
        }
    }
    Ok(vec![Measurement::at_most("max-rel-err", worst, cfg.tolerances.parseval)])
}

fn clipped_envelope(grid: &GridSpec, lo: f64, hi: f64) -> Result<Envelope> {
    let (lo, hi) = (lo.max(grid.freq_min), hi.min(grid.freq_max));
    if !(lo < hi) {
        return usage("packet envelope misses the grid band");
    }
    Ok(Envelope::new(lo, hi))
}

pub(super) fn hardy_reproduction(cfg: &RunConfig, quick: bool) -> Result<Vec<Measurement>> {
    let mut cases: Vec<(LambdaSignature, GridSpec, Vec<usize>, f64, f64)> = Vec::new();
    let n1: &[(usize, f64, f64)] = if quick {
        &[(1, 1.0, 6.0)]
    } else {
        &[(0, 1.0, 6.0), (1, 0.8, 4.0), (2, 2.0, 7.0), (1, 1.5, 5.0)]
    };
    for &(a, lo, hi) in n1 {
        cases.push((unit(1)?, cfg.grid.clone(), vec![a], lo, hi));
    }
    if !quick {
        cases.push((unit(2)?, default_grid(2), vec![1, 1], 0.9, 1.45));
    }
    let (mut repro, mut negative) = (0.0f64, 0.0f64);
    for (sig, grid, alpha, lo, hi) in cases {
        let hardy = WavePacketSpec::hardy(alpha, clipped_envelope(&grid, lo, hi)?);
        let u = make_wave_packet(&hardy, &sig, &grid)?;
        repro = repro.max(field_rel(&scalar_pipeline_project(&u, &sig)?, &u)?);
        let anti = WavePacketSpec {
            side: FrequencySide::Negative,
            ..hardy
        };
        let v = make_wave_packet(&anti, &sig, &grid)?;
        negative = negative.max(scalar_pipeline_project(&v, &sig)?.norm() / v.norm());
    }
    Ok(vec![
        Measurement::at_most("reproduction-rel-err", repro, cfg.tolerances.hardy_reproduction),
        Measurement::at_most("negative-frequency-ratio", negative, cfg.tolerances.negative_frequency),
    ])
}

struct Family {
    sig: LambdaSignature,
    grid: GridSpec,
    components: Vec<MultiIndex>,
    count: usize,
}

pub(super) fn projector_algebra(cfg: &RunConfig, quick: bool) -> Result<Vec<Measurement>> {
    let g1 = cfg.grid.clone();
    let g2 = default_grid(2);
    let mut families = vec![Family {
        sig: unit(1)?,
        grid: g1.clone(),
        components: vec![MultiIndex::empty()],
        count: if quick { 2 } else { 10 },
    }];
    if !quick {
        families.extend([
            Family {
                sig: signature(vec![-1.0])?,
                grid: g1.clone(),
                components: vec![index(&[1], 1)?],
                count: 3,
            },
            Family {
                sig: signature(vec![-1.0])?,
                grid: g1,
                components: vec![MultiIndex::empty()],
                count: 2,
            },
            Family {
                sig: signature(vec![-1.0, 1.0])?,
                grid: g2.clone(),
                components: vec![index(&[1], 2)?, index(&[2], 2)?],
                count: 3,
            },
            Family {
                sig: signature(vec![-1.0, -1.0])?,
                grid: g2,
                components: vec![index(&[1, 2], 2)?],
                count: 2,
            },
        ]);
    }
    let mut rng = stream_rng(cfg.seed, 8);
    let (mut idem, mut adjoint) = (0.0f64, 0.0f64);
    for fam in families {
        let n = fam.sig.n();
        let mut inputs = Vec::with_capacity(fam.count);
        for _ in 0..fam.count {
            let parts = fam
                .components
                .iter()
                .map(|j| Ok((j.clone(), localized_field(&mut rng, n, &fam.grid)?)))
                .collect::<Result<Vec<_>>>()?;
            inputs.push(form(n, &fam.grid, parts)?);
        }
        let mut images = Vec::with_capacity(fam.count);
        for u in &inputs {
            let p = szego_project_form(u, &fam.sig)?.form;
            let pp = szego_project_form(&p, &fam.sig)?.form;
            idem = idem.max(pp.sub(&p)?.norm() / p.norm());
            images.push(p);
        }
        for i in 0..fam.count {
            let k = (i + 1) % fam.count;
            let (u, v) = (&inputs[i], &inputs[k]);
            let gap = (images[i].inner(v)? - u.inner(&images[k])?).norm();
            adjoint = adjoint.max(gap / (u.norm() * v.norm()));
        }
    }
    Ok(vec![
        Measurement::at_most("idempotency-gap", idem, cfg.tolerances.projector_idempotency),
        Measurement::at_most("self-adjoint-gap", adjoint, cfg.tolerances.projector_self_adjoint),
    ])
}

fn pairing_grid() -> GridSpec {
    GridSpec {
        spatial_radius: 4.0,
        spatial_points: 33,
        vertical_radius: 4.0,
        vertical_points: 16,
        freq_min: 0.75,
        freq_max: 3.2,
        quadrature_rule: QuadratureRule::UniformTrapezoid,
    }
}

pub(super) fn two_route_pairing(cfg: &RunConfig, quick: bool) -> Result<Vec<Measurement>> {
    let sig = unit(1)?;
    let grid = pairing_grid();
    let mut rng = stream_rng(cfg.seed, 9);
    let mut pairing = 0.0f64;
    for _ in 0..if quick { 3 } else { 20 } {
        let u = localized_field(&mut rng, 1, &grid)?;
        let extra = localized_field(&mut rng, 1, &grid)?;
        let g = u.add_scaled(Complex64::new(0.5, 0.0), &extra)?;
        let via_frequency = frequency_pairing(&u, &g, &sig)?;
        let via_pipeline = g.inner(&scalar_pipeline_project(&u, &sig)?)?;
        pairing = pairing.max(rel_err(via_frequency, via_pipeline));
    }
    let mut out = vec![Measurement::at_most(
        "pairing-rel-err",
        pairing,
        cfg.tolerances.pairing_agreement,
    )];
    if !quick {
        out.push(Measurement::at_most(
            "direct-kernel-rel-err",
            direct_kernel_route(cfg)?,
            cfg.tolerances.direct_kernel,
        ));
    }
    Ok(out)
}

/// Pipeline output against the kernel integral on a 9² × 33 micro-grid, for
/// `u = (1 + z/2) · 45! / (15 + |z|² + ix)^{46}` whose spectrum peaks at `t = 3`.
/// The `ε → 0` limit is taken by Richardson extrapolation from `ε = 0.01, 0.005`.
fn direct_kernel_route(cfg: &RunConfig) -> Result<f64> {
    let sig = unit(1)?;
    let grid = &cfg.grid;
    let u = RationalHardy {
        holomorphic: Polynomial {
            terms: vec![(vec![0], Complex64::new(1.0, 0.0)), (vec![1], Complex64::new(0.5, 0.0))],
        },
        m: 45,
        beta: 15.0,
    };
    let field = ScalarField::from_fn(1, grid.clone(), |z, x| u.eval(&sig, z, x))?;
    let projected = scalar_pipeline_project(&field, &sig)?;
    let targets = micro_grid(&field, 9, 33)?;
    let nodes = grid.spatial_nodes();
    let vertical = grid.vertical_nodes();
    let points: Vec<(Vec<Complex64>, f64)> = targets
        .iter()
        .map(|&(s, k)| (grid.spatial_point(1, s, &nodes), vertical[k]))
        .collect();
    let coarse = direct_kernel_values(&u, &sig, &points, 0.01, 2.5, 1.0 / 16.0);
    let fine = direct_kernel_values(&u, &sig, &points, 0.005, 2.5, 1.0 / 16.0);
    let nv = grid.vertical_points;
    let (mut num, mut den) = (0.0, 0.0);
    for (((s, k), c), f) in targets.iter().zip(&coarse).zip(&fine) {
        let direct = 2.0 * f - c;
        num += (projected.values()[s * nv + k] - direct).norm_sqr();
        den += direct.norm_sqr();
    }
    Ok((num / den).sqrt())
}

fn packet(
    sig: &LambdaSignature,
    grid: &GridSpec,
    alpha: Vec<usize>,
    conjugated: &[usize],
    side: FrequencySide,
) -> Result<ScalarField> {
    let spec = WavePacketSpec {
        alpha,
        conjugated_axes: index(conjugated, sig.n())?,
        envelope: Envelope::new(grid.freq_min, grid.freq_max),
        side,
    };
    make_wave_packet(&spec, sig, grid)
}

fn cross_grid() -> GridSpec {
    GridSpec {
        spatial_radius: 3.5,
        spatial_points: 7,
        vertical_radius: 8.0,
        vertical_points: 8,
        freq_min: 0.5,
        freq_max: 2.0,
        quadrature_rule: QuadratureRule::UniformTrapezoid,
    }
}

pub(super) fn form_projection(cfg: &RunConfig, quick: bool) -> Result<Vec<Measurement>> {
    let tol = &cfg.tolerances;
    let mut out = Vec::new();
    if !quick {
        let grid = default_grid(2);
        let (pos, neg) = (FrequencySide::Positive, FrequencySide::Negative);
        // mixed signature, both distinguished components at once
        let mixed = signature(vec![-1.0, 1.0])?;
        let u = form(
            2,
            &grid,
            vec![
                (index(&[1], 2)?, packet(&mixed, &grid, vec![1, 0], &[1], pos)?),
                (index(&[2], 2)?, packet(&mixed, &grid, vec![0, 1], &[2], neg)?),
            ],
        )?;
        let p = szego_project_form(&u, &mixed)?.form;
        let mut mixed_err = 0.0f64;
        for (j, c) in u.components() {
            let pc = p.component(j).ok_or_else(|| crate::SzegoError::Domain(format!("lost component {j}")))?;
            mixed_err = mixed_err.max(field_rel(pc, c)?);
        }
        out.push(Measurement::at_most("mixed-component-rel-err", mixed_err, tol.form_reproduction));
        // all-negative signature: top degree and degree zero
        let negative = signature(vec![-1.0, -1.0])?;
        let mut pure_err = 0.0f64;
        for (j, conj, side) in [(vec![1, 2], vec![1, 2], pos), (vec![], vec![], neg)] {
            let c = packet(&negative, &grid, vec![1, 0], &conj, side)?;
            let u = form(2, &grid, vec![(index(&j, 2)?, c.clone())])?;
            let p = szego_project_form(&u, &negative)?.form;
            let pc = p.component(&index(&j, 2)?).expect("component kept");
            pure_err = pure_err.max(field_rel(pc, &c)?);
        }
        out.push(Measurement::at_most("single-block-rel-err", pure_err, tol.form_reproduction));
    }
    // components outside the distinguished pair, and degrees outside the
    // signature, must come back exactly zero
    let grid = cross_grid();
    let mut rng = stream_rng(cfg.seed, 10);
    let mut cross = 0.0f64;
    let cases: [(Vec<f64>, usize); 4] = [
        (vec![-1.0, 1.0, 1.0], 1),
        (vec![-1.0, 1.0, 1.0], 2),
        (vec![-1.0, 1.0, 1.0], 0),
        (vec![-1.0, -1.0, 1.0], 3),
    ];
    for (lambdas, q) in cases {
        let sig = signature(lambdas)?;
        let n = sig.n();
        let parts = MultiIndex::all(n, q)
            .into_iter()
            .map(|j| Ok((j, localized_field(&mut rng, n, &grid)?)))
            .collect::<Result<Vec<_>>>()?;
        let u = FormField::new(n, q, grid.clone(), parts.into_iter().collect())?;
        let p = szego_project_form_with(&u, &sig, BudgetPolicy::Skip)?.form;
        let neg_axes = sig.negative_axes();
        let pos_axes = sig.positive_axes();
        for (j, c) in p.components() {
            let kept = (q == sig.n_minus() && *j == neg_axes) || (q == sig.n_plus() && *j == pos_axes);
            if !kept {
                cross = cross.max(c.values().iter().map(|v| v.norm()).fold(0.0, f64::max));
            }
        }
    }
    out.push(Measurement::at_most("cross-component-max", cross, tol.cross_component));
    Ok(out)
}

pub(super) fn vanishing(cfg: &RunConfig, quick: bool) -> Result<Vec<Measurement>> {
    let magnitudes = [0.7, 1.3, 2.1];
    let max_n = if quick { 2 } else { 3 };
    let mut ratios: BTreeMap<(Vec<usize>, Vec<u64>), f64> = BTreeMap::new();
    let (mut misclassified, mut min_ratio, mut finite_err) = (0.0, f64::INFINITY, 0.0f64);
    for n in 1..=max_n {
        let alphas = exponents_up_to(n, 2);
        for code in 0..3usize.pow(n as u32) {
            let lambdas: Vec<f64> = (0..n)
                .map(|j| ((code / 3usize.pow(j as u32)) % 3) as f64 - 1.0)
                .zip(magnitudes)
                .map(|(s, m)| s * m)
                .collect();
            let sig = signature(lambdas)?;
            for q in 0..=n {
                let trivial = sig.is_degenerate() || (q != sig.n_minus() && q != sig.n_plus());
                let report = vanishing_evidence(q, &sig)?;
                if trivial {
                    misclassified += report.entries.iter().filter(|e| e.finite_alpha.is_some()).count() as f64;
                }
                for entry in &report.entries {
                    let pattern = SignedWeightPattern::new(sig.clone(), entry.j.clone())?;
                    let eta = entry.eta_sign as f64;
                    let coeffs: Vec<u64> = pattern.coefficients(eta).iter().map(|c| c.to_bits()).collect();
                    for alpha in &alphas {
                        match monomial_integral(alpha, eta, &pattern) {
                            MonomialIntegral::Finite(v) => {
                                let t = truncated_monomial_integral(alpha, eta, &pattern, 8.0)?;
                                finite_err = finite_err.max((t - v).abs() / v);
                            }
                            MonomialIntegral::Infinite if trivial => {
                                let key = (alpha.clone(), coeffs.clone());
                                let ratio = match ratios.get(&key) {
                                    Some(&r) => r,
                                    None => {
                                        let radii = default_witness_radii(eta, &pattern);
                                        let w = divergence_witness(alpha, eta, &pattern, &radii)?;
                                        let r = w[w.len() - 1] / w[0];
                                        ratios.insert(key, r);
                                        r
                                    }
                                };
                                min_ratio = min_ratio.min(ratio);
                            }
                            MonomialIntegral::Infinite => {}
                        }
                    }
                }
            }
        }
    }
    let tol = &cfg.tolerances;
    Ok(vec![
        Measurement::at_most("finite-entries-in-trivial-degrees", misclassified, 0.0),
        Measurement::at_least("min-witness-growth", min_ratio, tol.witness_ratio),
        Measurement::at_most("finite-rel-err", finite_err, tol.finite_integral),
    ])
}

/// Same smooth input on every refinement level: bumps drawn from a fixed
/// stream, modulated by the harmonics `e^{ikπx/4}`, `k ∈ {−1, 1, 2}`.
fn refinement_input(seed: u64, grid: &GridSpec) -> Result<ScalarField> {
    let mut rng = stream_rng(seed, 12);
    let bumps: Vec<(Complex64, f64, Complex64, f64)> = [-1.0, 1.0, 2.0]
        .into_iter()
        .map(|k| {
            let c = Complex64::new(uniform(&mut rng, -1.0, 1.0), uniform(&mut rng, -1.0, 1.0));
            let w = uniform(&mut rng, 0.7, 1.2);
            let a = Complex64::new(uniform(&mut rng, -1.0, 1.0), uniform(&mut rng, -1.0, 1.0));
            (c, w, a, k)
        })
        .collect();
    let omega = std::f64::consts::PI / grid.vertical_radius;
    ScalarField::from_fn(1, grid.clone(), |z, x| {
        bumps
            .iter()
            .map(|(c, w, a, k)| a * (-(z[0] - c).norm_sqr() / (w * w)).exp() * Complex64::from_polar(1.0, k * omega * x))
            .sum()
    })
}

fn relative_residual(u: &ScalarField, sig: &LambdaSignature) -> Result<f64> {
    let r = cr_system_residual(&FormField::scalar(u.clone()), sig)?;
    Ok(r.values().copied().sum::<f64>() / interior_norm(u))
}

pub(super) fn cr_refinement(cfg: &RunConfig, _quick: bool) -> Result<Vec<Measurement>> {
    let sig = unit(1)?;
    let mut rng = stream_rng(cfg.seed, 120);
    let mut history: Vec<[f64; 3]> = Vec::new();
    let mut noise_min = f64::INFINITY;
    for (points, vertical) in [(17, 16), (33, 32), (65, 64)] {
        // one active slice at t = π/4
        let grid = GridSpec {
            spatial_radius: 4.0,
            spatial_points: points,
            vertical_radius: 4.0,
            vertical_points: vertical,
            freq_min: 0.7,
            freq_max: 0.8,
            quadrature_rule: QuadratureRule::UniformTrapezoid,
        };
        let packet_grid = GridSpec {
            freq_min: 0.6,
            freq_max: 1.0,
            ..grid.clone()
        };
        let spec = WavePacketSpec::hardy(vec![1], Envelope::new(0.6, 1.0));
        let u = make_wave_packet(&spec, &sig, &packet_grid)?;
        let freq = partial_ft(&u)?;
        let freq_res = frequency_cr_residual(&freq, &MultiIndex::empty(), &sig)? / freq.norm_sqr().sqrt();
        let projected = scalar_pipeline_project(&refinement_input(cfg.seed, &grid)?, &sig)?;
        history.push([
            relative_residual(&u, &sig)?,
            relative_residual(&projected, &sig)?,
            freq_res,
        ]);
        let noise = noise_field(&mut rng, 1, &grid)?;
        noise_min = noise_min.min(relative_residual(&noise, &sig)?);
    }
    let order = |k: usize| {
        history
            .windows(2)
            .map(|w| (w[0][k] / w[1][k]).log2())
            .fold(f64::INFINITY, f64::min)
    };
    let tol = &cfg.tolerances;
    let finest = history[history.len() - 1];
    Ok(vec![
        Measurement::at_least("packet-order", order(0), tol.cr_order),
        Measurement::at_least("projected-order", order(1), tol.cr_order),
        Measurement::at_least("frequency-order", order(2), tol.cr_order),
        Measurement::at_most("packet-residual", finest[0], tol.cr_residual),
        Measurement::at_most("projected-residual", finest[1], tol.cr_residual),
        Measurement::at_least("noise-over-tolerance", noise_min / tol.cr_residual, tol.noise_factor),
    ])
}

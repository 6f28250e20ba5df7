use num_complex::Complex64;
use proptest::prelude::*;

use szego::bergman::{bergman_kernel, bergman_project, WeightSpec};
use szego::config::RunConfig;
use szego::fieldio::{decode, encode, FieldFormat};
use szego::forms::{reflect_to_hat, Block};
use szego::phase::{gamma_moment, phase, szego_kernel_scalar, PhaseChoice};
use szego::random::{localized_slice, stream_rng};
use szego::transform::{partial_ft, partial_ift, scalar_pipeline_project_with, BudgetPolicy};
use szego::types::{
    multiindex_complement, FormField, FrequencySlice, GridSpec, HeisenbergPoint, LambdaSignature,
    MultiIndex, QuadratureRule, ScalarField,
};

fn small_grid(points: usize, vertical: usize) -> GridSpec {
    GridSpec {
        spatial_radius: 2.0,
        spatial_points: points,
        vertical_radius: 3.0,
        vertical_points: vertical,
        freq_min: 0.5,
        freq_max: 3.0,
        quadrature_rule: QuadratureRule::UniformTrapezoid,
    }
}

fn lambda() -> impl Strategy<Value = f64> {
    (0.2f64..3.0, any::<bool>()).prop_map(|(m, neg)| if neg { -m } else { m })
}

fn signature(n: usize) -> impl Strategy<Value = LambdaSignature> {
    prop::collection::vec(lambda(), n).prop_map(|l| LambdaSignature::new(l).unwrap())
}

fn complex(r: f64) -> impl Strategy<Value = Complex64> {
    (-r..r, -r..r).prop_map(|(a, b)| Complex64::new(a, b))
}

fn point(n: usize) -> impl Strategy<Value = HeisenbergPoint> {
    (prop::collection::vec(complex(2.0), n), -3.0f64..3.0)
        .prop_map(|(z, x)| HeisenbergPoint::new(z, x))
}

fn case() -> impl Strategy<Value = (LambdaSignature, HeisenbergPoint, HeisenbergPoint)> {
    (1usize..=3).prop_flat_map(|n| (signature(n), point(n), point(n)))
}

fn values(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(complex(10.0), len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn phase_symmetries((sig, x, y) in case()) {
        let minus = phase(PhaseChoice::Minus, &x, &y, &sig).unwrap();
        let plus = phase(PhaseChoice::Plus, &x, &y, &sig).unwrap();
        let swapped = phase(PhaseChoice::Minus, &y, &x, &sig).unwrap();
        let scale = 1.0 + minus.norm();
        prop_assert!((plus + minus.conj()).norm() <= 1e-12 * scale);
        prop_assert!((plus - swapped).norm() <= 1e-12 * scale);
    }

    #[test]
    fn phase_imaginary_part_is_nonnegative((sig, x, y) in case()) {
        for choice in [PhaseChoice::Minus, PhaseChoice::Plus, PhaseChoice::Hat] {
            let v = phase(choice, &x, &y, &sig).unwrap();
            prop_assert!(v.im >= -1e-12 * (1.0 + v.norm()));
        }
        let mut diag = y.clone();
        diag.z = x.z.clone();
        let v = phase(PhaseChoice::Minus, &x, &diag, &sig).unwrap();
        prop_assert!(v.im.abs() <= 1e-12);
    }

    #[test]
    fn kernel_is_hermitian((sig, x, y) in case(), eps in 0.05f64..2.0) {
        let a = szego_kernel_scalar(&x, &y, &sig, PhaseChoice::Minus, eps).unwrap();
        let b = szego_kernel_scalar(&y, &x, &sig, PhaseChoice::Minus, eps).unwrap();
        prop_assert!((a - b.conj()).norm() <= 1e-12 * a.norm());
    }

    #[test]
    fn gamma_moment_times_power_is_factorial(m in 0usize..12, re in 0.05f64..6.0, im in -6.0f64..6.0) {
        let s = Complex64::new(re, im);
        let g = gamma_moment(m, s).unwrap();
        let fact: f64 = (1..=m).map(|k| k as f64).product();
        prop_assert!((g * s.powi(m as i32 + 1) - fact).norm() <= 1e-12 * fact);
    }

    #[test]
    fn signature_counts_add_up(l in prop::collection::vec(lambda(), 1..6)) {
        let sig = LambdaSignature::new(l.clone()).unwrap();
        prop_assert_eq!(sig.n_minus() + sig.n_plus(), sig.n());
        prop_assert_eq!(sig.n_minus(), l.iter().filter(|v| **v < 0.0).count());
        let (neg, pos) = (sig.negative_axes(), sig.positive_axes());
        prop_assert_eq!(multiindex_complement(&neg, sig.n()).unwrap(), pos);
    }

    #[test]
    fn complement_is_an_involution(n in 1usize..7, mask in 0u32..128) {
        let entries: Vec<usize> = (1..=n).filter(|k| mask & (1 << (k - 1)) != 0).collect();
        let j = MultiIndex::new(entries, n).unwrap();
        let c = multiindex_complement(&j, n).unwrap();
        prop_assert_eq!(j.len() + c.len(), n);
        prop_assert!((1..=n).all(|k| j.contains(k) != c.contains(k)));
        prop_assert_eq!(multiindex_complement(&c, n).unwrap(), j);
    }

    #[test]
    fn bergman_kernel_is_hermitian(
        sig in (1usize..=2).prop_flat_map(signature),
        t in 0.1f64..3.0,
        zw in prop::collection::vec(complex(2.0), 4),
    ) {
        let n = sig.n();
        let (z, w) = (&zw[..n], &zw[2..2 + n]);
        let weight = WeightSpec::new(sig.abs(), t);
        let a = bergman_kernel(z, w, &weight).unwrap();
        let b = bergman_kernel(w, z, &weight).unwrap();
        prop_assert!((a - b.conj()).norm() <= 1e-12 * a.norm().max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn binary_and_csv_round_trips_are_bit_exact(
        q in 0usize..=2,
        data in values(2 * 3usize.pow(4) * 4),
    ) {
        let grid = small_grid(3, 4);
        let len = 3usize.pow(4) * 4;
        let parts: Vec<(MultiIndex, ScalarField)> = MultiIndex::all(2, q)
            .into_iter()
            .enumerate()
            .map(|(k, j)| {
                let v = data[(k % 2) * len..(k % 2 + 1) * len].to_vec();
                (j, ScalarField::new(2, grid.clone(), v).unwrap())
            })
            .collect();
        let form = FormField::new(2, q, grid, parts.into_iter().collect()).unwrap();
        for format in [FieldFormat::Binary, FieldFormat::Csv] {
            let back = decode(&encode(&form, format), format).unwrap();
            prop_assert_eq!(&back, &form);
        }
    }

    #[test]
    fn transform_round_trip(data in values(7 * 7 * 16)) {
        let u = ScalarField::new(1, small_grid(7, 16), data).unwrap();
        let back = partial_ift(&partial_ft(&u).unwrap()).unwrap();
        prop_assert!(back.sub(&u).unwrap().norm() <= 1e-12 * u.norm());
    }

    #[test]
    fn reflection_is_an_involution(sig in signature(2), data in values(5usize.pow(4) * 6)) {
        let u = ScalarField::new(2, small_grid(5, 6), data).unwrap();
        for block in [Block::Minus, Block::Plus] {
            let once = reflect_to_hat(&u, block, &sig).unwrap();
            prop_assert_eq!(reflect_to_hat(&once, block, &sig).unwrap(), u.clone());
        }
    }

    #[test]
    fn scalar_pipeline_is_self_adjoint(a in values(9 * 9 * 8), b in values(9 * 9 * 8)) {
        let grid = small_grid(9, 8);
        let sig = LambdaSignature::new(vec![1.0]).unwrap();
        let u = ScalarField::new(1, grid.clone(), a).unwrap();
        let v = ScalarField::new(1, grid, b).unwrap();
        let run = |f: &ScalarField| scalar_pipeline_project_with(f, &sig, BudgetPolicy::Skip).unwrap();
        let (pu, pv) = (run(&u), run(&v));
        let gap = (pu.inner(&v).unwrap() - u.inner(&pv).unwrap()).norm();
        prop_assert!(gap <= 1e-12 * u.norm() * v.norm());
    }

    #[test]
    fn bergman_slice_contracts_and_is_idempotent(seed in any::<u64>(), t in 0.5f64..4.0) {
        let cfg = RunConfig::default();
        let grid = cfg.grid;
        let sig = LambdaSignature::new(vec![1.0]).unwrap();
        let values = localized_slice(&mut stream_rng(seed, 0), 1, &grid);
        let norm = |v: &[Complex64]| -> f64 {
            let w = grid.spatial_weight_table(1);
            v.iter().zip(&w).map(|(x, w)| x.norm_sqr() * w).sum::<f64>().sqrt()
        };
        let weight = WeightSpec::new(sig, t);
        let slice = FrequencySlice { t, values };
        let once = bergman_project(&slice, &weight, &grid).unwrap();
        let twice = bergman_project(&once, &weight, &grid).unwrap();
        prop_assert!(norm(&once.values) <= norm(&slice.values) * (1.0 + 1e-6));
        let diff: Vec<Complex64> = once.values.iter().zip(&twice.values).map(|(a, b)| a - b).collect();
        prop_assert!(norm(&diff) <= 2e-4 * norm(&once.values));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_rejects_nonpositive_tolerances(v in -1.0f64..=0.0) {
        let text = format!("[tolerances]\nparseval = {v:?}\n");
        prop_assert!(RunConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn config_accepts_positive_tolerances(v in 1e-14f64..1.0, seed in any::<u32>()) {
        let text = format!("seed = {seed}\n[tolerances]\nparseval = {v:?}\n");
        let cfg = RunConfig::from_toml_str(&text).unwrap();
        prop_assert_eq!(cfg.tolerances.parseval, v);
        prop_assert_eq!(cfg.seed, seed as u64);
    }
}

fn sample_form() -> FormField {
    let grid = small_grid(3, 4);
    let len = 3usize.pow(4) * 4;
    let values = (0..len).map(|k| Complex64::new(k as f64, -0.5 * k as f64)).collect();
    let field = ScalarField::new(2, grid.clone(), values).unwrap();
    let j = MultiIndex::new(vec![2], 2).unwrap();
    FormField::new(2, 1, grid, [(j, field)].into_iter().collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn binary_decoder_survives_corruption(
        edits in prop::collection::vec((any::<prop::sample::Index>(), any::<u8>()), 1..8),
        cut in any::<prop::sample::Index>(),
    ) {
        let mut bytes = encode(&sample_form(), FieldFormat::Binary);
        for (at, b) in edits {
            let i = at.index(bytes.len());
            bytes[i] = b;
        }
        let keep = cut.index(bytes.len() + 1);
        let _ = decode(&bytes, FieldFormat::Binary);
        let _ = decode(&bytes[..keep], FieldFormat::Binary);
    }

    #[test]
    fn csv_decoder_survives_corruption(
        edits in prop::collection::vec((any::<prop::sample::Index>(), any::<char>()), 1..8),
    ) {
        let mut chars: Vec<char> = String::from_utf8(encode(&sample_form(), FieldFormat::Csv))
            .unwrap()
            .chars()
            .collect();
        for (at, c) in edits {
            let i = at.index(chars.len());
            chars[i] = c;
        }
        let text: String = chars.into_iter().collect();
        let _ = decode(text.as_bytes(), FieldFormat::Csv);
    }

    #[test]
    fn text_parsers_never_panic(text in "[ -~\n]{0,200}") {
        let _ = RunConfig::from_toml_str(&text);
        let _ = szego::kernel_table::parse_samples(&text);
    }

    #[test]
    fn sample_parser_handles_numeric_noise(text in "([-0-9.;,e#]{0,30}\n){0,6}") {
        let _ = szego::kernel_table::parse_samples(&text);
    }
}

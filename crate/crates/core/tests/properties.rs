mod common;

use proptest::prelude::*;

use lhessian::analysis::{cca, diagnose, pca_architectures, score_stats, DiagnosticThresholds, FlagKind};
use lhessian::cli::ConfigFile;
use lhessian::datasets::{generate, standardize, DatasetSpec, Generator};
use lhessian::local_hessian::{hessian_closed_form, hessian_rowwise, neuron_blocks_rowwise};
use lhessian::network::{ActivationKind, FunctionalBlock};
use lhessian::numerics::{parseval_energy, pearson_corr, real_fft_power, sym_eigendecompose, DenseMatrix};
use lhessian::rng::Rng64;
use lhessian::snapshot::Snapshot;
use lhessian::spectral::{hessian_spectrum, near_zero_fraction, series_summary, HISTOGRAM_BINS};
use lhessian::training::Variant;

fn random_matrix(rng: &mut Rng64, rows: usize, cols: usize, scale: f64) -> DenseMatrix {
    DenseMatrix::new(rows, cols, (0..rows * cols).map(|_| scale * rng.normal()).collect()).unwrap()
}

fn random_block(seed: u64, q: usize, d: usize, kind: ActivationKind) -> (FunctionalBlock, Vec<f64>) {
    let mut rng = Rng64::new(seed);
    let w = random_matrix(&mut rng, q, d, 1.0);
    let b = (0..q).map(|_| rng.normal()).collect();
    let z = (0..d).map(|_| rng.normal()).collect();
    (FunctionalBlock::new(w, b, kind, 0).unwrap(), z)
}

fn smooth_kind() -> impl Strategy<Value = ActivationKind> {
    prop_oneof![Just(ActivationKind::Sigmoid), Just(ActivationKind::Tanh)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rowwise_matches_closed_form(seed in any::<u64>(), q in 1usize..9, d in 1usize..9, kind in smooth_kind()) {
        let (block, z) = random_block(seed, q, d, kind);
        let rw = hessian_rowwise(&block, &z).unwrap();
        let cf = hessian_closed_form(&block, &z).unwrap();
        prop_assert!(rw.matrix.max_abs_diff(&cf.matrix) <= 1e-9);
        prop_assert!(rw.matrix.max_asymmetry() <= 1e-14 * rw.matrix.frobenius().max(1.0));
        prop_assert_eq!(neuron_blocks_rowwise(&block, &z).unwrap().to_dense().matrix, rw.matrix);
    }

    #[test]
    fn spectrum_identities(seed in any::<u64>(), q in 1usize..7, d in 1usize..7, kind in smooth_kind()) {
        let (block, z) = random_block(seed, q, d, kind);
        let h = hessian_rowwise(&block, &z).unwrap();
        let s = hessian_spectrum(&h).unwrap();
        let sum: f64 = s.eigenvalues.iter().sum();
        prop_assert!((sum - s.trace).abs() <= 1e-8 * s.trace.abs().max(1e-300) + 1e-14);
        // Each unit contributes a rank-1 block.
        prop_assert!(s.rank <= q);
        prop_assert!(s.near_zero_fraction >= (q * d) as f64 / (q * (d + 1)) as f64 - 1e-12);
        prop_assert!((0.0..=1.0).contains(&s.symmetry_score));
    }

    #[test]
    fn saturation_never_lowers_near_zero_fraction(
        seed in any::<u64>(),
        q in 1usize..6,
        d in 9usize..14,
        mags in prop::collection::vec((0.5f64..1.0, 5.0f64..20.0, any::<bool>()), 6),
    ) {
        let mut rng = Rng64::new(seed);
        let z: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let with_bias = |pick_saturated: bool| {
            let b: Vec<f64> = mags[..q]
                .iter()
                .map(|&(lo, hi, neg)| {
                    let m = if pick_saturated { hi } else { lo };
                    if neg { -m } else { m }
                })
                .collect();
            let block = FunctionalBlock::new(DenseMatrix::zeros(q, d), b, ActivationKind::Tanh, 0).unwrap();
            hessian_spectrum(&hessian_rowwise(&block, &z).unwrap()).unwrap().near_zero_fraction
        };
        prop_assert!(with_bias(true) >= with_bias(false));
    }

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), n in 1usize..10) {
        let mut rng = Rng64::new(seed);
        let a = random_matrix(&mut rng, n, n, 1.0);
        let m = a.matmul(&a.transpose()).unwrap();
        let e = sym_eigendecompose(&m).unwrap();
        prop_assert!(e.reconstruct().max_abs_diff(&m) <= 1e-10 * m.frobenius().max(1.0));
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn parseval_holds(k in 1u32..9, seed in any::<u64>()) {
        let mut rng = Rng64::new(seed);
        let values: Vec<f64> = (0..1usize << k).map(|_| 100.0 * rng.normal()).collect();
        let p = real_fft_power(&values).unwrap();
        let energy: f64 = values.iter().map(|v| v * v).sum();
        prop_assert!((parseval_energy(&p, values.len()) - energy).abs() <= 1e-9 * energy.max(1.0));
    }

    #[test]
    fn summary_invariants(values in prop::collection::vec(-1e3f64..1e3, 1..600)) {
        let s = series_summary(&values).unwrap();
        prop_assert!(s.min <= s.mean && s.mean <= s.max);
        prop_assert!(s.std >= 0.0);
        prop_assert_eq!(s.histogram.bin_edges.len(), HISTOGRAM_BINS + 1);
        prop_assert_eq!(s.histogram.counts.iter().sum::<u64>(), values.len() as u64);
        prop_assert!(s.welch.iter().all(|p| *p >= 0.0));
    }

    #[test]
    fn near_zero_fraction_is_a_fraction(values in prop::collection::vec(-1e6f64..1e6, 0..50)) {
        let f = near_zero_fraction(&values);
        prop_assert!((0.0..=1.0).contains(&f));
    }

    #[test]
    fn pearson_bounded_and_symmetric(
        pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..50),
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        if let (Ok(a), Ok(b)) = (pearson_corr(&x, &y), pearson_corr(&y, &x)) {
            prop_assert!((-1.0..=1.0).contains(&a));
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn score_stats_permutation_invariant(
        values in prop::collection::vec(-10.0f64..10.0, 1..40),
        seed in any::<u64>(),
    ) {
        let mut shuffled = values.clone();
        Rng64::new(seed).shuffle(&mut shuffled);
        let (a, b) = (score_stats(&values).unwrap(), score_stats(&shuffled).unwrap());
        prop_assert_eq!(a.max, b.max);
        prop_assert_eq!(a.min, b.min);
        prop_assert_eq!(a.median, b.median);
        prop_assert!((a.avg - b.avg).abs() <= 1e-12);
        prop_assert!((a.std - b.std).abs() <= 1e-12);
        prop_assert_eq!(score_stats(&values[..1]).unwrap().std, 0.0);
    }

    #[test]
    fn cca_invariant_under_column_rescaling(
        seed in any::<u64>(),
        scale in prop_oneof![0.01f64..100.0, -100.0f64..-0.01],
        shift in -50.0f64..50.0,
        col in 0usize..3,
    ) {
        let mut rng = Rng64::new(seed);
        let a = random_matrix(&mut rng, 60, 3, 1.0);
        let mut b = a.matmul(&random_matrix(&mut rng, 3, 3, 1.0)).unwrap();
        let noise = random_matrix(&mut rng, 60, 3, 0.8);
        let mut rows: Vec<Vec<f64>> = (0..60).map(|i| b.row(i).iter().zip(noise.row(i)).map(|(x, e)| x + e).collect()).collect();
        b = DenseMatrix::from_rows(&rows).unwrap();
        let base = cca(&a, &b, 2).unwrap();
        for r in rows.iter_mut() {
            r[col] = r[col] * scale + shift;
        }
        let moved = cca(&a, &DenseMatrix::from_rows(&rows).unwrap(), 2).unwrap();
        for (x, y) in base.correlations.iter().zip(&moved.correlations) {
            prop_assert!((x - y).abs() <= 1e-8, "{} vs {}", x, y);
        }
        for c in 0..2 {
            let r = pearson_corr(&base.scores_x.column(c), &base.scores_y.column(c)).unwrap();
            prop_assert!((r - base.correlations[c]).abs() <= 1e-8);
        }
        // Successive variates uncorrelated.
        let r01 = pearson_corr(&base.scores_x.column(0), &base.scores_x.column(1)).unwrap();
        prop_assert!(r01.abs() <= 1e-8, "{}", r01);
    }

    #[test]
    fn dataset_generation_is_deterministic(seed in any::<u64>(), idx in 0usize..9) {
        let g = Generator::ALL[idx];
        let spec = DatasetSpec::new(g, 40, seed);
        let (a, b) = (generate(&spec).unwrap(), generate(&spec).unwrap());
        prop_assert_eq!(a.to_csv(), b.to_csv());
        let s = standardize(&a).unwrap();
        for j in 0..s.dim() {
            let c = s.features.column(j);
            let m = c.iter().sum::<f64>() / c.len() as f64;
            let sd = (c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / c.len() as f64).sqrt();
            prop_assert!(m.abs() <= 1e-12);
            prop_assert!((sd - 1.0).abs() <= 1e-12 || sd == 0.0);
        }
    }

    #[test]
    fn config_rejects_unknown_keys(key in "[a-z]{1,8}\\.[a-z_]{1,12}") {
        let known = lhessian::cli::KNOWN_KEYS.contains(&key.as_str());
        prop_assert_eq!(ConfigFile::parse(&format!("{key} = 1")).is_ok(), known);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn snapshot_json_round_trip_is_exact(seed in any::<u64>(), w in 1usize..6) {
        let s = common::synthetic_snapshot(seed, 3, &[3, w, 2], Variant::Sure, "rt");
        let back: Snapshot = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn pca_is_row_permutation_equivariant(seed in 0u64..1000, perm_seed in any::<u64>()) {
        let a = common::synthetic_stream(seed, 4, &[2, 3, 2], Variant::No);
        let b = common::synthetic_stream(seed + 1, 4, &[2, 6, 4, 2], Variant::Sure);
        let base = pca_architectures(&[&a, &b]).unwrap();
        let mut pa = a.clone();
        Rng64::new(perm_seed).shuffle(&mut pa);
        let moved = pca_architectures(&[&pa, &b]).unwrap();
        for p in &moved.points {
            let q = base.points.iter().find(|q| q.run_id == p.run_id && q.iteration == p.iteration).unwrap();
            prop_assert!((p.pc1 - q.pc1).abs() <= 1e-9 && (p.pc2 - q.pc2).abs() <= 1e-9);
        }
    }

    #[test]
    fn near_zero_flag_is_monotone(seed in any::<u64>(), start in 0.0f64..1.0, bump in 0.0f64..1.0) {
        let mut s = common::synthetic_snapshot(seed, 0, &[2, 4, 3], Variant::No, "mono");
        let last = s.layers.len() - 1;
        let t = DiagnosticThresholds::default();
        s.layers[last].near_zero_fraction = start;
        let before = diagnose(std::slice::from_ref(&s), &t).unwrap().fired_on(FlagKind::OverparameterizedNearZero, last);
        s.layers[last].near_zero_fraction = (start + bump).min(1.0);
        let after = diagnose(std::slice::from_ref(&s), &t).unwrap().fired_on(FlagKind::OverparameterizedNearZero, last);
        prop_assert!(!before || after);
    }
}

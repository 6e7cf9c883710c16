//! Cross-module identity checks: the continuous implementation against the
//! brute-force enumeration oracles, finite differences against analytic
//! gradients, and bit-level determinism across thread pools.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use svq_core::codebook::{CodeEntry, Codebook, CodebookMode};
use svq_core::data::{Dataset, InputVector};
use svq_core::gradcheck;
use svq_core::objective::{objective, objective_gradients, optimal_recons};
use svq_core::oracle::{DiscreteFmc, DiscreteNoisyFmc, DiscreteProductFmc};

fn small_codebook(seed: u64, d: usize, m: usize, thresholded: bool) -> Codebook {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let norm = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>().sqrt();
    let theta = 0.7;
    let entries = (0..m)
        .map(|_| {
            let weight: Vec<f64> = (0..d)
                .map(|_| rand::Rng::random_range(&mut rng, -1.5..1.5))
                .collect();
            let weight: Vec<f64> = if norm(&weight) < 0.3 {
                weight.iter().map(|c| c + 0.5).collect()
            } else {
                weight
            };
            let bias = if thresholded {
                -theta * norm(&weight)
            } else {
                rand::Rng::random_range(&mut rng, -0.5..0.5)
            };
            let recon: Vec<f64> = (0..d)
                .map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0))
                .collect();
            CodeEntry { weight, bias, recon, recon_scale: 1.0 }
        })
        .collect();
    let mode = if thresholded {
        CodebookMode::Thresholded { theta }
    } else {
        CodebookMode::Affine
    };
    Codebook::new(mode, 0.0, entries).unwrap()
}

fn small_dataset(seed: u64, n: usize, d: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let points = (0..n)
        .map(|_| {
            InputVector::new(
                (0..d)
                    .map(|_| rand::Rng::random_range(&mut rng, -2.0..2.0))
                    .collect(),
            )
            .unwrap()
        })
        .collect::<Vec<_>>();
    Dataset::from_points(points).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// The full Bayes-inverse triple sum and the conditional-mean reduced
    /// form are the same number on every enumerable instance.
    #[test]
    fn full_and_reduced_objectives_agree(
        seed in any::<u64>(),
        k in 2usize..6,
        m in 1usize..5,
        n in 1usize..4,
        dim in 1usize..4,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fmc = DiscreteFmc::random(&mut rng, k, m, n, dim);
        let full = fmc.objective_full().unwrap();
        let reduced = fmc.objective_reduced().unwrap();
        prop_assert!((full - reduced).abs() <= 1e-12 * full.max(1.0),
            "full {full} vs reduced {reduced}");
    }

    /// Measuring distortion against undistorted states equals the
    /// posterior-mean form plus an encoder-independent constant.
    #[test]
    fn noisy_objective_identity(
        seed in any::<u64>(),
        k0 in 2usize..5,
        kx in 2usize..5,
        m in 1usize..4,
        dim in 1usize..3,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noisy = DiscreteNoisyFmc::random(&mut rng, k0, kx, m, dim);
        let pair = noisy.objective_pair().unwrap();
        prop_assert!(
            (pair.d_direct - pair.d_integrated_plus_const).abs()
                <= 1e-12 * pair.d_direct.max(1.0),
            "{pair:?}"
        );
    }

    /// An encoder that ignores an independent nuisance pays a fixed,
    /// encoder-independent price for it, and the omitted cross-term is zero.
    #[test]
    fn nuisance_gap_is_encoder_independent(
        seed in any::<u64>(),
        k0 in 2usize..5,
        kp in 1usize..4,
        m in 1usize..4,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fmc = DiscreteProductFmc::random_invariant(&mut rng, k0, kp, m, 2);
        let base = fmc.invariance_reduction_check().unwrap();
        prop_assert!(base.cross_term.abs() <= 1e-12);
        for _ in 0..4 {
            let rows = (0..k0)
                .map(|_| {
                    let mut row: Vec<f64> =
                        (0..m).map(|_| rand::Rng::random_range(&mut rng, 0.05..1.0)).collect();
                    let s: f64 = row.iter().sum();
                    row.iter_mut().for_each(|p| *p /= s);
                    row
                })
                .collect();
            let check = fmc.with_encoder(rows).unwrap().invariance_reduction_check().unwrap();
            prop_assert!((check.gap - base.gap).abs() <= 1e-10,
                "gap moved with the encoder: {} vs {}", check.gap, base.gap);
            prop_assert!(check.cross_term.abs() <= 1e-12);
        }
    }

    /// The continuous objective with posterior-weighted-mean reconstructions
    /// equals the enumeration oracle run on the same support with a uniform
    /// prior and the codebook's own posteriors as the encoder table.
    #[test]
    fn continuous_objective_matches_enumeration_oracle(
        seed in any::<u64>(),
        n in 2usize..7,
        d in 1usize..4,
        m in 1usize..4,
        thresholded in any::<bool>(),
    ) {
        let mut cb = small_codebook(seed, d, m, thresholded);
        let data = small_dataset(seed, n, d);

        let encoder: Vec<Vec<f64>> = data
            .iter()
            .map(|x| cb.posterior(x).unwrap().probs)
            .collect();
        let prior = vec![1.0 / n as f64; n];
        let xs: Vec<Vec<f64>> = data.iter().map(|x| x.to_vec()).collect();
        let fmc = DiscreteFmc::new(xs, prior, encoder, 1).unwrap();

        // Oracle-optimal reconstructions coincide with the implementation's.
        let means = fmc.conditional_means().unwrap();
        let recons = optimal_recons(&cb, &data).unwrap();
        for (a, b) in means.iter().zip(&recons) {
            for (ca, cb_) in a.iter().zip(b) {
                prop_assert!((ca - cb_).abs() <= 1e-12, "{ca} vs {cb_}");
            }
        }

        // And with those reconstructions installed, the objectives agree.
        for (y, r) in recons.into_iter().enumerate() {
            cb.set_recon(y, r).unwrap();
        }
        let continuous = objective(&cb, &data).unwrap();
        let discrete = fmc.objective_reduced().unwrap();
        prop_assert!((continuous - discrete).abs() <= 1e-12 * continuous.max(1.0),
            "continuous {continuous} vs oracle {discrete}");
    }

    /// Analytic gradients agree with central finite differences on random
    /// instances across all constraint-mode combinations.
    #[test]
    fn gradients_match_finite_differences(
        seed in any::<u64>(),
        thresholded in any::<bool>(),
        parallel in any::<bool>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (cb, data) = gradcheck::random_instance(&mut rng, thresholded, parallel);
        let report = gradcheck::check_instance(&cb, &data, parallel, gradcheck::DEFAULT_STEP)
            .unwrap();
        prop_assert!(report.worst() < 1e-6, "worst relative error {}", report.worst());
    }

    /// Serialization round-trips preserve every bit of a codebook.
    #[test]
    fn codebook_bytes_round_trip(
        seed in any::<u64>(),
        d in 1usize..5,
        m in 1usize..5,
        thresholded in any::<bool>(),
    ) {
        let cb = small_codebook(seed, d, m, thresholded);
        let bytes = svq_core::io::to_bytes(&cb);
        let back = svq_core::io::from_bytes(&bytes).unwrap();
        prop_assert_eq!(svq_core::io::to_bytes(&back), bytes);
    }
}

/// The evaluation path must not depend on how many worker threads rayon has:
/// partial sums are chunked and merged in a fixed order.
#[cfg(feature = "parallel")]
#[test]
fn results_are_bit_identical_across_thread_pool_sizes() {
    let cb = small_codebook(99, 5, 3, true);
    let data = small_dataset(99, 257, 5); // forces many partial chunks
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let d = objective(&cb, &data).unwrap();
                let g = objective_gradients(&cb, &data, false).unwrap();
                (d, g)
            })
    };
    let (d1, g1) = run(1);
    let (d4, g4) = run(4);
    assert_eq!(d1.to_bits(), d4.to_bits());
    for (a, b) in g1.entries.iter().zip(&g4.entries) {
        let bits = |v: &[f64]| v.iter().map(|c| c.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.weight), bits(&b.weight));
        assert_eq!(a.bias.to_bits(), b.bias.to_bits());
        assert_eq!(bits(&a.recon), bits(&b.recon));
        assert_eq!(a.recon_scale.to_bits(), b.recon_scale.to_bits());
    }
}

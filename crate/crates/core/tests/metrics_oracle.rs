mod common;

use common::{oracle_clear, oracle_hota, random_instance, rel_close};
use framedrop::metrics::{compute_clear, compute_clear_sequence, compute_hota, compute_hota_sequence, MatchingConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hota_matches_oracle(seed: u64) {
        let seq = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), 5, 20);
        let config = MatchingConfig::default();
        let got = compute_hota_sequence(&seq, &config);
        prop_assume!(!got.vacuous);
        let want = oracle_hota(&seq, &config.hota_alphas);
        prop_assert!(rel_close(got.hota, 100.0 * want.hota, 1e-9), "{} vs {}", got.hota, 100.0 * want.hota);
        prop_assert!(rel_close(got.det_a, 100.0 * want.det_a, 1e-9));
        prop_assert!(rel_close(got.ass_a, 100.0 * want.ass_a, 1e-9));
    }

    #[test]
    fn clear_matches_oracle(seed: u64) {
        let seq = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), 5, 20);
        let config = MatchingConfig::default();
        let got = compute_clear_sequence(&seq, &config);
        let want = oracle_clear(&seq, config.clear_threshold);
        prop_assert_eq!((got.tp, got.fp, got.fn_, got.idsw), (want.tp, want.fp, want.fn_, want.idsw));
        prop_assert_eq!(got.mota.is_some(), want.mota.is_some());
        if let (Some(a), Some(b)) = (got.mota, want.mota) {
            prop_assert!(rel_close(a, 100.0 * b, 1e-9));
        }
        prop_assert!(rel_close(got.motp, 100.0 * want.motp, 1e-9));
    }

    #[test]
    fn invariant_under_prediction_relabeling(seed: u64, offset in 1u64..1000) {
        let seq = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), 5, 20);
        let mut relabeled = seq.clone();
        for f in &mut relabeled.frames {
            for p in &mut f.pred {
                p.id = (p.id ^ 0x5a5a) + offset;
            }
        }
        let config = MatchingConfig::default();
        let (a, b) = (compute_hota_sequence(&seq, &config), compute_hota_sequence(&relabeled, &config));
        for (x, y) in [(a.hota, b.hota), (a.det_a, b.det_a), (a.ass_a, b.ass_a)] {
            prop_assert!(rel_close(x, y, 1e-12), "{} vs {}", x, y);
        }
        prop_assert_eq!(compute_clear_sequence(&seq, &config), compute_clear_sequence(&relabeled, &config));
    }

    #[test]
    fn metrics_are_bounded(seed: u64) {
        let seq = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), 5, 20);
        let config = MatchingConfig::default();
        let h = compute_hota_sequence(&seq, &config);
        for v in [h.hota, h.det_a, h.ass_a] {
            prop_assert!((0.0..=100.0 + 1e-9).contains(&v));
        }
        let c = compute_clear_sequence(&seq, &config);
        if let Some(m) = c.mota {
            prop_assert!(m <= 100.0 + 1e-9);
        }
    }
}

#[test]
fn pooled_clear_counts_are_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let seqs: Vec<_> = (0..8).map(|_| random_instance(&mut rng, 4, 15)).collect();
    let config = MatchingConfig::default();
    let pooled = compute_clear(&seqs, &config);
    let parts: Vec<_> = seqs.iter().map(|s| oracle_clear(s, config.clear_threshold)).collect();
    assert_eq!(pooled.tp, parts.iter().map(|p| p.tp).sum::<u64>());
    assert_eq!(pooled.fp, parts.iter().map(|p| p.fp).sum::<u64>());
    assert_eq!(pooled.idsw, parts.iter().map(|p| p.idsw).sum::<u64>());
}

#[test]
fn single_sequence_pool_equals_sequence() {
    let seq = random_instance(&mut ChaCha8Rng::seed_from_u64(12), 5, 20);
    let config = MatchingConfig::default();
    assert_eq!(compute_hota(std::slice::from_ref(&seq), &config), compute_hota_sequence(&seq, &config));
}

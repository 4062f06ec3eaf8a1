mod common;

use common::cases::{association_case, drop_neutral_case, fusion_equivalence_case, psd_case};
use framedrop::dataset::SequenceData;
use framedrop::experiment::{run_setting, BASELINE_TARGETS};
use framedrop::metrics::MatchingConfig;
use framedrop::scenario::{generate, urban_scenario, NoiseSpec, UrbanParams};
use framedrop::{SchedulerConfig, TrackerConfig, TrackerVariant};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn dropped_frames_never_count_as_misses(seed: u64, fusion: bool) {
        let variant = if fusion { TrackerVariant::Fusion } else { TrackerVariant::LidarOnly };
        prop_assert!(drop_neutral_case(&mut ChaCha8Rng::seed_from_u64(seed), variant));
    }

    #[test]
    fn covariance_stays_symmetric_psd(seed: u64) {
        prop_assert!(psd_case(&mut ChaCha8Rng::seed_from_u64(seed)));
    }

    #[test]
    fn fusion_without_camera_is_lidar_only(seed: u64) {
        prop_assert!(fusion_equivalence_case(&mut ChaCha8Rng::seed_from_u64(seed)));
    }

    #[test]
    fn association_reaches_brute_force_optimum(seed: u64) {
        prop_assert!(association_case(&mut ChaCha8Rng::seed_from_u64(seed)));
    }
}

fn noiseless_urban(seed: u64) -> SequenceData {
    let mut spec = urban_scenario(&UrbanParams {
        duration_frames: 300,
        seed,
        ..UrbanParams::default()
    });
    spec.noise = NoiseSpec::default();
    generate(&spec).unwrap().into()
}

#[test]
fn mota_falls_with_processing_rate_on_clean_data() {
    let profile = framedrop::energy::reference::default_profile(framedrop::energy::ModelId::PvRcnn);
    for seed in [1, 7] {
        let seqs = [noiseless_urban(seed)];
        for variant in [TrackerVariant::LidarOnly, TrackerVariant::Fusion] {
            let tracker = TrackerConfig {
                variant,
                ..TrackerConfig::default()
            };
            let motas: Vec<f64> = BASELINE_TARGETS
                .iter()
                .map(|&(n, m)| {
                    let sched = SchedulerConfig::periodic(n, m, false);
                    run_setting(&seqs, &tracker, &sched, &MatchingConfig::default(), &profile, true)
                        .unwrap()
                        .report
                        .mota
                        .unwrap()
                })
                .collect();
            assert!(
                motas.windows(2).all(|w| w[0] >= w[1]),
                "seed {seed} {variant}: {motas:?}"
            );
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let seq = noiseless_urban(3);
    let tracker = TrackerConfig {
        variant: TrackerVariant::Fusion,
        ..TrackerConfig::default()
    };
    let sched = SchedulerConfig::periodic(1, 3, true);
    let a = framedrop::pipeline::run_sequence(&seq, &tracker, &sched).unwrap();
    let b = framedrop::pipeline::run_sequence(&seq, &tracker, &sched).unwrap();
    assert_eq!(a, b);
}

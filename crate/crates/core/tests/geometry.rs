use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stt_core::forge::oracle::oracle_classify;
use stt_core::testkit::{random_record, reverse_track, rotate_track, scale_track, translate_track};
use stt_core::track::scale_log_ratio;
use stt_core::{
    generate_synthetic, motion_descriptor, Direction, MotionConfig, MotionDescriptor, MotionKind, Scale, Speed,
    SyntheticSpec, Track,
};

const MOVING_SPEEDS: [Speed; 3] = [Speed::Slow, Speed::Moderate, Speed::Fast];

/// A straight-line track 10% clear of every bin edge.
fn straight_track(seed: u64) -> (Track, MotionDescriptor) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let direction = Direction::COMPASS[rng.random_range(0..8)];
    let speed = MOVING_SPEEDS[rng.random_range(0..3)];
    let scale = Scale::ALL[rng.random_range(0..3)];
    let target = MotionDescriptor::new(direction, speed, scale);
    let spec = SyntheticSpec {
        motion_kind: SyntheticSpec::natural_kind(&target, false),
        target_direction: direction,
        target_speed: speed,
        target_scale: scale,
        sample_count: rng.random_range(2..8),
        margin: 0.1,
        seed,
    };
    generate_synthetic(&spec, &MotionConfig::default()).expect("feasible spec")
}

fn describe(track: &Track) -> MotionDescriptor {
    motion_descriptor(track, &MotionConfig::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(250))]

    #[test]
    fn compass_equivariance(seed in any::<u64>()) {
        let (track, d) = straight_track(seed);
        prop_assert_eq!(describe(&track), d);
        let base = d.direction.compass_index().unwrap();
        for k in 0..8 {
            let rotated = rotate_track(&track, k).expect("rotation stays inside the image");
            let got = describe(&rotated);
            prop_assert_eq!(got.direction, Direction::from_compass_index(base + k), "k={}", k);
            prop_assert_eq!(got.speed, d.speed);
            prop_assert_eq!(got.scale, d.scale);
        }
    }

    #[test]
    fn translation_invariance(seed in any::<u64>(), fx in 0.0f64..1.0, fy in 0.0f64..1.0) {
        let (track, d) = straight_track(seed);
        let corners: Vec<[f64; 4]> = track.samples().iter().map(|s| s.bbox.corners()).collect();
        let lo_x = -corners.iter().map(|c| c[0]).fold(f64::INFINITY, f64::min);
        let hi_x = 1.0 - corners.iter().map(|c| c[2]).fold(0.0, f64::max);
        let lo_y = -corners.iter().map(|c| c[1]).fold(f64::INFINITY, f64::min);
        let hi_y = 1.0 - corners.iter().map(|c| c[3]).fold(0.0, f64::max);
        let dx = lo_x + fx * (hi_x - lo_x);
        let dy = lo_y + fy * (hi_y - lo_y);
        let moved = translate_track(&track, dx, dy).expect("offset keeps boxes inside");
        prop_assert_eq!(describe(&moved), d);
    }

    #[test]
    fn uniform_scaling_keeps_speed_and_scale(seed in any::<u64>(), factor in 0.3f64..1.0) {
        let (track, d) = straight_track(seed);
        let scaled = scale_track(&track, factor).expect("shrinking about the center stays inside");
        let got = describe(&scaled);
        prop_assert_eq!(got.speed, d.speed);
        prop_assert_eq!(got.scale, d.scale);
        prop_assert_eq!(got.direction, d.direction);
    }

    #[test]
    fn time_reversal(seed in any::<u64>()) {
        let (track, d) = straight_track(seed);
        let back = reverse_track(&track);
        let got = describe(&back);
        prop_assert_eq!(got.direction, d.direction.opposite());
        prop_assert_eq!(got.speed, d.speed);
        prop_assert_eq!(got.scale, d.scale.reversed());
        let (r, rb) = (scale_log_ratio(&track).unwrap(), scale_log_ratio(&back).unwrap());
        prop_assert!((r + rb).abs() < 1e-12, "{} vs {}", r, rb);
    }

    #[test]
    fn stat_coupling_on_arbitrary_tracks(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let record = random_record(&mut rng, 5, 6);
        for object in &record.objects {
            let track = object.track().unwrap();
            if let Ok(d) = motion_descriptor(&track, &MotionConfig::default()) {
                prop_assert!(d.is_coupled(), "{}", d);
            }
        }
    }
}

#[test]
fn oracle_agrees_on_clear_tracks() {
    let cfg = MotionConfig::default();
    let mut checked = 0;
    for (i, target) in MotionDescriptor::feasible().enumerate() {
        for j in 0..15u64 {
            let spec = SyntheticSpec {
                motion_kind: SyntheticSpec::natural_kind(&target, j % 3 == 2),
                target_direction: target.direction,
                target_speed: target.speed,
                target_scale: target.scale,
                sample_count: 2 + (j as usize % 6),
                margin: 0.1,
                seed: (i as u64) << 32 | j,
            };
            let (track, want) = generate_synthetic(&spec, &cfg).unwrap();
            assert_eq!(motion_descriptor(&track, &cfg).unwrap(), want, "{spec:?}");
            assert_eq!(oracle_classify(&track, &cfg), want, "{spec:?}");
            checked += 1;
        }
    }
    assert!(checked >= 1000);
}

#[test]
fn stationary_track_is_stat() {
    let (track, d) = generate_synthetic(
        &SyntheticSpec {
            motion_kind: MotionKind::Stationary,
            target_direction: Direction::Stat,
            target_speed: Speed::Stationary,
            target_scale: Scale::Approaching,
            sample_count: 4,
            margin: 0.1,
            seed: 3,
        },
        &MotionConfig::default(),
    )
    .unwrap();
    assert_eq!(describe(&track), d);
    assert_eq!(describe(&reverse_track(&track)).scale, Scale::Receding);
}

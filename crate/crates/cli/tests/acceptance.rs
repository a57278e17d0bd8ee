//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report is always printed. Exits
//! nonzero if any gated criterion fails. Throughput is reported only.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stt_core::forge::oracle::oracle_classify;
use stt_core::reward::{
    reward_grounding, reward_trajectory, rouge_l_f1, trajectory_pair_score, TagMap, ADJACENT_CREDIT, EXACT_CREDIT,
    GROUNDING_WEIGHTS, MISS_CREDIT, TRAJECTORY_WEIGHTS,
};
use stt_core::testkit::{
    mutate, random_descriptor, random_score_request, random_trace, reverse_track, rotate_track, scale_track,
    translate_track,
};
use stt_core::track::scale_log_ratio;
use stt_core::{
    densify_track, generate_synthetic, motion_descriptor, parse_trace, score, score_request, serialize_trace,
    validate_format, AnswerKind, BBox, DensifyConfig, Direction, GroundTruthRecord, MotionConfig, MotionDescriptor,
    MotionTag, ObjectAnnotation, RewardConfig, Sample, Scale, ScoreRequest, ScoreResponse, Speed, SyntheticSpec,
    Track,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

struct Criterion {
    name: &'static str,
    gated: bool,
    time_limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn bx(x1: f64, y1: f64, x2: f64, y2: f64) -> BBox {
    BBox::new(x1, y1, x2, y2).unwrap()
}

fn d(dir: Direction, speed: Speed, scale: Scale) -> MotionDescriptor {
    MotionDescriptor::new(dir, speed, scale)
}

fn reward_constants() -> Outcome {
    let east_track = GroundTruthRecord {
        video_id: "v".into(),
        duration: 10.0,
        question: "q".into(),
        answer_kind: AnswerKind::Mcq,
        gt_answer: "A".into(),
        objects: vec![ObjectAnnotation {
            name: "duck".into(),
            keyframes: vec![
                Sample::new(0.0, bx(0.05, 0.45, 0.15, 0.55)),
                Sample::new(2.0, bx(0.25, 0.45, 0.35, 0.55)),
            ],
        }],
        gt_descriptors: None,
    };
    let gt = d(Direction::E, Speed::Moderate, Scale::Stable);
    let tags = |desc| -> TagMap { [("duck".to_string(), vec![MotionTag::new("duck", desc)])].into() };
    let cfg = RewardConfig::default();
    let table: Vec<(&str, f64, f64)> = vec![
        ("traj weight dir", TRAJECTORY_WEIGHTS.direction, 0.4),
        ("traj weight speed", TRAJECTORY_WEIGHTS.speed, 0.3),
        ("traj weight scale", TRAJECTORY_WEIGHTS.scale, 0.3),
        ("ground weight dir", GROUNDING_WEIGHTS.direction, 0.5),
        ("ground weight speed", GROUNDING_WEIGHTS.speed, 0.3),
        ("ground weight scale", GROUNDING_WEIGHTS.scale, 0.2),
        ("exact credit", EXACT_CREDIT, 1.0),
        ("adjacent credit", ADJACENT_CREDIT, 0.5),
        ("other credit", MISS_CREDIT, 0.0),
        ("all exact", trajectory_pair_score(&gt, &gt), 1.0),
        (
            "dir exact, speed adjacent, scale exact",
            trajectory_pair_score(&d(Direction::E, Speed::Slow, Scale::Stable), &gt),
            0.85,
        ),
        (
            "dir adjacent, speed adjacent, scale exact",
            trajectory_pair_score(&d(Direction::NE, Speed::Fast, Scale::Stable), &gt),
            0.65,
        ),
        (
            "r_traj 0.85 through a record",
            reward_trajectory(&tags(d(Direction::E, Speed::Fast, Scale::Stable)), &east_track, &cfg),
            0.85,
        ),
        (
            "r_traj 0.65 through a record",
            reward_trajectory(&tags(d(Direction::SE, Speed::Slow, Scale::Stable)), &east_track, &cfg),
            0.65,
        ),
    ];
    let bad: Vec<String> = table
        .iter()
        .filter(|(_, got, want)| (got - want).abs() > 1e-12)
        .map(|(n, got, want)| format!("{n}: {got} != {want}"))
        .collect();
    outcome(bad.is_empty(), if bad.is_empty() { format!("{} values within 1e-12", table.len()) } else { bad.join("; ") })
}

fn grammar_round_trip() -> Outcome {
    let mut r = rng(0x5eed);
    let mut failures = 0;
    for _ in 0..1000 {
        let trace = random_trace(&mut r, 16);
        let text = serialize_trace(&trace);
        match parse_trace(&text) {
            Ok(back) => {
                let again = serialize_trace(&back);
                let idempotent = parse_trace(&again).map(|t| serialize_trace(&t)) == Ok(again.clone());
                if back != trace || !idempotent {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }

    let seeds: Vec<String> = (0..64).map(|_| serialize_trace(&random_trace(&mut r, 12))).collect();
    let soup = [
        "<think>", "</think>", "<answer>", "</answer>", "<obj>", "</obj>", "<box>", "</box>", "<t>", "</t>",
        "<motion ", "/>", "obj=\"x\"", "dir=\"N\"", "speed=\"slow\"", "scale=\"stable\"", "[0,0,1,1]", " at ", "s",
        "\"", "=", "-", "1e400", ".", ",", "<",
    ];
    let prev_hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let mut crashes = 0;
    let mut parsed = 0;
    let fuzz_cases = 100_000;
    for i in 0..fuzz_cases {
        let input = match i % 4 {
            0 | 1 => mutate(&mut r, &seeds[i % seeds.len()]),
            2 => (0..r.random_range(0..40)).map(|_| soup[r.random_range(0..soup.len())]).collect(),
            _ => {
                let bytes: Vec<u8> = (0..r.random_range(0..200)).map(|_| r.random()).collect();
                String::from_utf8_lossy(&bytes).into_owned()
            }
        };
        match catch_unwind(AssertUnwindSafe(|| (parse_trace(&input).is_ok(), validate_format(&input)))) {
            Ok((ok, report)) => {
                parsed += ok as usize;
                if report.valid && !ok {
                    crashes += 1;
                }
            }
            Err(_) => crashes += 1,
        }
    }
    std::panic::set_hook(prev_hook);
    outcome(
        failures == 0 && crashes == 0,
        format!("1000 traces, {failures} round-trip failures; {fuzz_cases} fuzz inputs ({parsed} parsed), {crashes} crashes"),
    )
}

fn oracle_equivalence() -> Outcome {
    let cfg = MotionConfig::default();
    let (mut combos, mut agree, mut total) = (0, 0, 0);
    let mut first_bad = None;
    for (i, target) in MotionDescriptor::feasible().enumerate() {
        combos += 1;
        for j in 0..100u64 {
            let spec = SyntheticSpec {
                motion_kind: SyntheticSpec::natural_kind(&target, j % 4 == 3),
                target_direction: target.direction,
                target_speed: target.speed,
                target_scale: target.scale,
                sample_count: 2 + (j as usize % 7),
                margin: 0.1,
                seed: (i as u64) << 32 | j,
            };
            total += 1;
            let ok = match generate_synthetic(&spec, &cfg) {
                Ok((track, want)) => {
                    let a = motion_descriptor(&track, &cfg);
                    a.ok() == Some(want) && oracle_classify(&track, &cfg) == want
                }
                Err(_) => false,
            };
            if ok {
                agree += 1;
            } else if first_bad.is_none() {
                first_bad = Some(format!("{spec:?}"));
            }
        }
    }
    let pass = combos == 75 && agree == total;
    let mut detail = format!("{combos} combinations, {agree}/{total} tracks agree");
    if let Some(b) = first_bad {
        detail.push_str(&format!("; first disagreement {b}"));
    }
    outcome(pass, detail)
}

fn straight_track(seed: u64) -> (Track, MotionDescriptor) {
    let mut r = rng(seed);
    let target = d(
        Direction::COMPASS[r.random_range(0..8)],
        [Speed::Slow, Speed::Moderate, Speed::Fast][r.random_range(0..3)],
        Scale::ALL[r.random_range(0..3)],
    );
    let spec = SyntheticSpec {
        motion_kind: SyntheticSpec::natural_kind(&target, false),
        target_direction: target.direction,
        target_speed: target.speed,
        target_scale: target.scale,
        sample_count: r.random_range(2..8),
        margin: 0.1,
        seed,
    };
    generate_synthetic(&spec, &MotionConfig::default()).unwrap()
}

fn geometric_invariance() -> Outcome {
    let cfg = MotionConfig::default();
    let describe = |t: &Track| motion_descriptor(t, &cfg).ok();
    let n = 250;
    let mut violations: BTreeMap<&str, usize> = BTreeMap::new();
    let mut count = |law: &'static str, ok: bool| *violations.entry(law).or_default() += (!ok) as usize;
    let mut r = rng(77);
    for i in 0..n {
        let (track, want) = straight_track(1000 + i);
        let base = want.direction.compass_index().unwrap();
        let rotations_ok = (0..8).all(|k| {
            rotate_track(&track, k).and_then(|t| describe(&t))
                == Some(d(Direction::from_compass_index(base + k), want.speed, want.scale))
        });
        count("rotation", rotations_ok);

        let corners: Vec<[f64; 4]> = track.samples().iter().map(|s| s.bbox.corners()).collect();
        let lo_x = -corners.iter().map(|c| c[0]).fold(f64::INFINITY, f64::min);
        let hi_x = 1.0 - corners.iter().map(|c| c[2]).fold(0.0, f64::max);
        let lo_y = -corners.iter().map(|c| c[1]).fold(f64::INFINITY, f64::min);
        let hi_y = 1.0 - corners.iter().map(|c| c[3]).fold(0.0, f64::max);
        let (dx, dy) = (r.random_range(lo_x..=hi_x), r.random_range(lo_y..=hi_y));
        count("translation", translate_track(&track, dx, dy).and_then(|t| describe(&t)) == Some(want));

        let scaled = scale_track(&track, r.random_range(0.3..1.0)).and_then(|t| describe(&t));
        count("scaling", scaled.is_some_and(|s| s.speed == want.speed && s.scale == want.scale));

        let back = reverse_track(&track);
        let negated = (scale_log_ratio(&track).unwrap() + scale_log_ratio(&back).unwrap()).abs() < 1e-12;
        let reversed = describe(&back) == Some(d(want.direction.opposite(), want.speed, want.scale.reversed()));
        count("time reversal", negated && reversed);
    }
    let total: usize = violations.values().sum();
    let detail = violations
        .iter()
        .map(|(law, v)| format!("{law} {v}/{n}"))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(total == 0, format!("violations: {detail}"))
}

fn grounding_laws() -> Outcome {
    let mut r = rng(9);
    let (mut self_fail, mut empty_fail) = (0, 0);
    for _ in 0..500 {
        let mut map = TagMap::new();
        for k in 0..r.random_range(1..6) {
            let name = format!("object {k}");
            let tags = (0..r.random_range(1..4)).map(|_| MotionTag::new(name.clone(), random_descriptor(&mut r))).collect();
            map.insert(name, tags);
        }
        self_fail += (reward_grounding(&map, &map) != 0.0) as usize;
        empty_fail += (reward_grounding(&map, &TagMap::new()) != 1.0) as usize;
    }
    let car = |desc| -> TagMap { [("car".to_string(), vec![MotionTag::new("car", desc)])].into() };
    let all_differ = reward_grounding(
        &car(d(Direction::N, Speed::Fast, Scale::Approaching)),
        &car(d(Direction::S, Speed::Slow, Scale::Receding)),
    );
    outcome(
        self_fail == 0 && empty_fail == 0 && all_differ == 1.0,
        format!("500 maps: r(x,x)!=0 in {self_fail}, r(x,empty)!=1 in {empty_fail}; all-differ = {all_differ}"),
    )
}

fn densification() -> Outcome {
    let a = bx(0.0, 0.0, 0.2, 0.2);
    let b = bx(0.4, 0.0, 0.6, 0.2);
    let sparse = Track::from_pairs("o", [(0.0, a), (1.0, b)]).unwrap();
    let dense = densify_track(&sparse, &DensifyConfig::default()).unwrap();
    let s = dense.samples();
    let mid_ok = s.len() == 3
        && (s[1].t - 0.5).abs() <= 1e-12
        && s[1].bbox.corners().iter().zip([0.2, 0.0, 0.4, 0.2]).all(|(g, w)| (g - w).abs() <= 1e-12);
    let ends_ok = s[0] == sparse.samples()[0] && s[2] == sparse.samples()[1];

    let cfg = MotionConfig::default();
    let mut r = rng(21);
    let cases = 250;
    let mut unstable = 0;
    for i in 0..cases {
        let (track, want) = straight_track(5000 + i);
        let stride = r.random_range(0.05..2.0);
        let dense = densify_track(&track, &DensifyConfig { stride, ..Default::default() }).unwrap();
        let ends = dense.samples().first() == track.samples().first() && dense.samples().last() == track.samples().last();
        if !ends || motion_descriptor(&dense, &cfg) != Ok(want) {
            unstable += 1;
        }
    }
    outcome(
        mid_ok && ends_ok && unstable == 0,
        format!("midpoint exact: {mid_ok}, endpoints kept: {ends_ok}; {unstable}/{cases} straight tracks changed"),
    )
}

fn rouge() -> Outcome {
    let same = rouge_l_f1("the quick brown fox", "the quick brown fox");
    let disjoint = rouge_l_f1("red green", "blue yellow");
    let cat = rouge_l_f1("the cat sat", "the cat");
    outcome(
        same == 1.0 && disjoint == 0.0 && (cat - 0.8).abs() <= 1e-9,
        format!("identical {same}, disjoint {disjoint}, \"the cat sat\"/\"the cat\" {cat}"),
    )
}

fn breakdown_bits(r: &ScoreResponse) -> Vec<u64> {
    let b = &r.breakdown;
    [b.r_fmt, b.r_acc, b.r_t, b.r_s, b.r_traj, b.r_ground, b.r_motion, b.r_thk, b.total]
        .iter()
        .map(|v| v.to_bits())
        .collect()
}

fn service_equivalence() -> Outcome {
    let runtime = tokio::runtime::Runtime::new().unwrap();
    runtime.block_on(async {
        let base = RewardConfig::default();
        let addr = common::spawn_server(base, 256).await;
        let client = reqwest::Client::new();
        let mut r = rng(0xacce);
        let requests: Vec<ScoreRequest> = (0..1000).map(|_| random_score_request(&mut r)).collect();

        let mut mismatches = 0;
        for req in &requests {
            let (status, bytes) = common::post(&client, addr, "/v1/score", serde_json::to_vec(req).unwrap()).await;
            let cfg = req.effective_config(&base).unwrap();
            let local = score(&req.prediction, &req.record, req.masked_prediction.as_deref(), &cfg);
            let expected = score_request(req, &base).unwrap();
            let ok = status == 200
                && serde_json::from_slice::<ScoreResponse>(&bytes).is_ok_and(|got| {
                    breakdown_bits(&got) == breakdown_bits(&expected) && got == expected && got.breakdown == local
                })
                && bytes == serde_json::to_vec(&expected).unwrap();
            mismatches += (!ok) as usize;
        }

        let mut order_errors = 0;
        for chunk in requests.chunks(200) {
            let (status, bytes) = common::post(&client, addr, "/v1/score", serde_json::to_vec(chunk).unwrap()).await;
            let got: Vec<ScoreResponse> = if status == 200 { serde_json::from_slice(&bytes).unwrap() } else { vec![] };
            order_errors += chunk.len() - got.len();
            for (req, resp) in chunk.iter().zip(&got) {
                order_errors += (score_request(req, &base).unwrap() != *resp) as usize;
            }
        }

        let mut drift = 0;
        for req in requests.iter().step_by(10) {
            let body = serde_json::to_vec(req).unwrap();
            let (_, a) = common::post(&client, addr, "/v1/score", body.clone()).await;
            let (_, b) = common::post(&client, addr, "/v1/score", body).await;
            drift += (a != b) as usize;
        }
        outcome(
            mismatches == 0 && order_errors == 0 && drift == 0,
            format!("1000 requests: {mismatches} differ from in-process; batches: {order_errors} misordered; repeats: {drift} differ"),
        )
    })
}

fn throughput() -> Outcome {
    let work = stt_bench::typical_workload(2000, 3);
    let cfg = RewardConfig::default();
    let start = Instant::now();
    let mut checksum = 0.0;
    for (prediction, record) in &work {
        checksum += score(prediction, record, None, &cfg).total;
    }
    let elapsed = start.elapsed().as_secs_f64();
    let rate = work.len() as f64 / elapsed;
    let build = if cfg!(debug_assertions) { "debug" } else { "release" };
    outcome(
        rate >= 5000.0,
        format!(
            "{rate:.0} traces/s on one thread ({build} build, mean {:.0} bytes, checksum {checksum:.3}); target 5000, not gated",
            stt_bench::mean_len(&work)
        ),
    )
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { name: "reward-constant fidelity", gated: true, time_limit: Some(Duration::from_secs(1)), run: reward_constants },
        Criterion { name: "grammar round trip and fuzz", gated: true, time_limit: Some(Duration::from_secs(60)), run: grammar_round_trip },
        Criterion { name: "descriptor oracle equivalence", gated: true, time_limit: Some(Duration::from_secs(30)), run: oracle_equivalence },
        Criterion { name: "geometric invariance", gated: true, time_limit: None, run: geometric_invariance },
        Criterion { name: "grounding-reward laws", gated: true, time_limit: None, run: grounding_laws },
        Criterion { name: "densification", gated: true, time_limit: None, run: densification },
        Criterion { name: "ROUGE-L", gated: true, time_limit: None, run: rouge },
        Criterion { name: "service equivalence", gated: true, time_limit: None, run: service_equivalence },
        Criterion { name: "throughput", gated: false, time_limit: None, run: throughput },
    ];
    let mut failed = 0;
    let count = criteria.len();
    for (i, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(c.run).unwrap_or_else(|_| outcome(false, "panicked"));
        let elapsed = start.elapsed();
        let in_time = c.time_limit.is_none_or(|limit| elapsed <= limit);
        let pass = result.pass && in_time;
        let mut detail = result.detail;
        if let Some(limit) = c.time_limit {
            detail.push_str(&format!("; limit {:.0} s", limit.as_secs_f64()));
        }
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("{tag} [{}/{count}] {}: {detail} ({:.2} s)", i + 1, c.name, elapsed.as_secs_f64());
        if c.gated && !pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} gated criteria failed");
        ExitCode::FAILURE
    } else {
        println!("all gated criteria passed");
        ExitCode::SUCCESS
    }
}

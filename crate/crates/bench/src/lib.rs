//! Workloads shared by the benchmarks and the throughput acceptance check.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stt_core::testkit::{grounded_prediction, random_record};
use stt_core::GroundTruthRecord;

/// Prediction/record pairs shaped like typical model output: up to five
/// objects, up to four keyframes each, a couple of kilobytes per trace.
pub fn typical_workload(n: usize, seed: u64) -> Vec<(String, GroundTruthRecord)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let record = random_record(&mut rng, 5, 4);
            let mut prediction = grounded_prediction(&mut rng, &record);
            // pad short traces with more observations of the same objects
            while prediction.len() < 1500 {
                let extra = grounded_prediction(&mut rng, &record);
                let body = &extra["<think>".len()..extra.find("</think>").unwrap()];
                let at = prediction.find("</think>").unwrap();
                prediction.insert_str(at, body);
            }
            (prediction, record)
        })
        .collect()
}

pub fn mean_len(workload: &[(String, GroundTruthRecord)]) -> f64 {
    workload.iter().map(|(p, _)| p.len()).sum::<usize>() as f64 / workload.len().max(1) as f64
}

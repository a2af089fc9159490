use std::cmp::Reverse;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ArgumentRecord, RecordId};
use crate::taxonomy::{LogicCategory, SentenceType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub per_class_quota: usize,
    pub per_combo_target: usize,
}

impl Default for SamplingParams {
    fn default() -> Self {
        SamplingParams {
            per_class_quota: 20,
            per_combo_target: 5,
        }
    }
}

/// Class-balanced evaluation set for human judgment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationSet {
    /// Sorted record ids.
    pub record_ids: Vec<RecordId>,
    pub seed: u64,
    pub per_class_quota: usize,
    pub per_combo_target: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SampleError {
    #[error("insufficient records for class {class}: need {needed}, have {available}")]
    Insufficient {
        class: SentenceType,
        needed: usize,
        available: usize,
    },
}

/// Splits `total` across buckets in proportion to `weights` by the
/// largest-remainder method. Equal remainders are ordered by a seeded
/// shuffle. Requires `total <= sum(weights)`; no bucket exceeds its weight.
fn apportion(weights: &[usize], total: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let sum: usize = weights.iter().sum();
    if sum == 0 || total == 0 {
        return vec![0; weights.len()];
    }
    let mut shares: Vec<usize> = weights.iter().map(|w| total * w / sum).collect();
    let assigned: usize = shares.iter().sum();
    let mut tie_order: Vec<usize> = (0..weights.len()).collect();
    tie_order.shuffle(rng);
    let mut rank = vec![0usize; weights.len()];
    for (pos, i) in tie_order.iter().enumerate() {
        rank[*i] = pos;
    }
    let mut order: Vec<usize> = (0..weights.len())
        .filter(|&i| !(total * weights[i]).is_multiple_of(sum))
        .collect();
    order.sort_by_key(|&i| (Reverse((total * weights[i]) % sum), rank[i]));
    for &i in order.iter().take(total - assigned) {
        shares[i] += 1;
    }
    shares
}

/// Draws `per_combo_target` records from every class × logic combination.
/// Combinations with fewer records contribute all of them, and the class
/// quota is backfilled proportionally from the records left over in that
/// class. Output depends only on the record set and the seed, never on
/// input order.
pub fn stratified_sample(
    records: &[ArgumentRecord],
    seed: u64,
    params: SamplingParams,
) -> Result<EvaluationSet, SampleError> {
    let mut sorted: Vec<&ArgumentRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));

    let mut chosen: Vec<RecordId> = Vec::new();
    for class in SentenceType::ALL {
        let available = sorted.iter().filter(|r| r.class == class).count();
        if available < params.per_class_quota {
            return Err(SampleError::Insufficient {
                class,
                needed: params.per_class_quota,
                available,
            });
        }

        let mut pools: Vec<Vec<&ArgumentRecord>> = LogicCategory::ALL
            .iter()
            .map(|&logic| {
                let mut pool: Vec<&ArgumentRecord> = sorted
                    .iter()
                    .copied()
                    .filter(|r| r.class == class && r.logic == logic)
                    .collect();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream((class.index() * 5 + logic.index()) as u64);
                pool.shuffle(&mut rng);
                pool
            })
            .collect();

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(100 + class.index() as u64);

        let mut take: Vec<usize> = pools
            .iter()
            .map(|p| p.len().min(params.per_combo_target))
            .collect();
        let drawn: usize = take.iter().sum();
        if drawn > params.per_class_quota {
            take = apportion(&take, params.per_class_quota, &mut rng);
        } else {
            let leftover: Vec<usize> = pools.iter().zip(&take).map(|(p, t)| p.len() - t).collect();
            let extra = apportion(&leftover, params.per_class_quota - drawn, &mut rng);
            for (t, e) in take.iter_mut().zip(extra) {
                *t += e;
            }
        }
        for (pool, n) in pools.iter_mut().zip(take) {
            chosen.extend(pool.drain(..n).map(|r| r.id.clone()));
        }
    }
    chosen.sort();
    Ok(EvaluationSet {
        record_ids: chosen,
        seed,
        per_class_quota: params.per_class_quota,
        per_combo_target: params.per_combo_target,
    })
}

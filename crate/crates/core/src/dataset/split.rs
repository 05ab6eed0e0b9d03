use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CommitRecord, DatasetError, Label, Provenance};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSet {
    pub train: Vec<CommitRecord>,
    pub validation: Vec<CommitRecord>,
    pub test: Vec<CommitRecord>,
    pub seed: u64,
}

impl SplitSet {
    pub fn repos(records: &[CommitRecord]) -> HashSet<&str> {
        records.iter().map(|r| r.repo.as_str()).collect()
    }

    /// Repositories that appear in validation or test.
    pub fn evaluation_repos(&self) -> HashSet<String> {
        self.validation
            .iter()
            .chain(&self.test)
            .map(|r| r.repo.clone())
            .collect()
    }
}

/// Splits records so that no repository contributes to more than one split.
///
/// Ground-truth repositories are shuffled with `seed`, ordered by commit count
/// (largest first, shuffle order among equals) and each assigned to the split
/// furthest below its target commit count. Mined records always go to train,
/// and are discarded when their repository landed in validation or test.
pub fn split_by_repository(
    records: Vec<CommitRecord>,
    ratios: [f64; 3],
    seed: u64,
) -> Result<SplitSet, DatasetError> {
    if ratios.iter().any(|r| !r.is_finite() || *r <= 0.0) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
        return Err(DatasetError::Split(format!(
            "ratios must be positive and sum to 1, got {ratios:?}"
        )));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records.iter().filter(|r| r.provenance == Provenance::GroundTruth) {
        *counts.entry(r.repo.as_str()).or_insert(0) += 1;
    }
    if counts.len() < 3 {
        return Err(DatasetError::Split(format!(
            "need ground-truth commits from at least 3 repositories, found {}",
            counts.len()
        )));
    }
    let mut repos: Vec<(&str, usize)> = counts.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    repos.shuffle(&mut rng);
    repos.sort_by(|a, b| b.1.cmp(&a.1));

    let total: usize = repos.iter().map(|r| r.1).sum();
    let targets = ratios.map(|r| r * total as f64);
    let mut filled = [0usize; 3];
    let mut assignment: HashMap<String, usize> = HashMap::new();
    for (repo, n) in repos {
        let mut best = 0;
        for s in 1..3 {
            if targets[s] - filled[s] as f64 > targets[best] - filled[best] as f64 {
                best = s;
            }
        }
        filled[best] += n;
        assignment.insert(repo.to_owned(), best);
    }
    if let Some(empty) = filled.iter().position(|&n| n == 0) {
        let name = ["train", "validation", "test"][empty];
        return Err(DatasetError::Split(format!("the {name} split would be empty")));
    }

    let mut out = SplitSet {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
        seed,
    };
    for r in records {
        let split = assignment.get(&r.repo).copied();
        match (r.provenance, split) {
            (Provenance::GroundTruth, Some(1)) => out.validation.push(r),
            (Provenance::GroundTruth, Some(2)) => out.test.push(r),
            (Provenance::GroundTruth, _) => out.train.push(r),
            (Provenance::Mined, Some(0) | None) => out.train.push(r),
            (Provenance::Mined, Some(_)) => {}
        }
    }
    Ok(out)
}

/// Samples non-security commits from `pool`, drawing per repository
/// `ratio` times as many as that repository has positives in `positives`.
/// Commits whose sha is already among the positives are never drawn.
pub fn sample_negatives(
    pool: &[CommitRecord],
    positives: &[CommitRecord],
    ratio: f64,
    seed: u64,
) -> Vec<CommitRecord> {
    let taken: HashSet<&str> = positives.iter().map(|r| r.sha.as_str()).collect();
    let mut wanted: BTreeMap<&str, usize> = BTreeMap::new();
    for r in positives {
        *wanted.entry(r.repo.as_str()).or_insert(0) += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (repo, n) in wanted {
        let mut candidates: Vec<&CommitRecord> = pool
            .iter()
            .filter(|r| r.repo == repo && !taken.contains(r.sha.as_str()))
            .collect();
        candidates.sort_by(|a, b| a.sha.cmp(&b.sha));
        candidates.dedup_by(|a, b| a.sha == b.sha);
        candidates.shuffle(&mut rng);
        let k = ((n as f64) * ratio).round() as usize;
        out.extend(candidates.into_iter().take(k).map(|r| CommitRecord {
            label: Label::NotSecurity,
            provenance: Provenance::GroundTruth,
            ..r.clone()
        }));
    }
    out
}

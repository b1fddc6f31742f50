use std::cmp::Ordering;
use std::collections::{HashMap, VecDeque};
use std::io::Write;

use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::archive::{ArchiveEntry, ParetoArchive};
use super::space::{mutate_with, sample_with, Candidate, SpaceConfig};
use super::NasError;
use crate::arch_ir::validate_model;
use crate::cost_model::{model_cost, HardwareProfile};
use crate::lacs::{reward, AccuracySurrogate, RewardConfig};

pub const DEFAULT_POPULATION: usize = 64;
pub const DEFAULT_SAMPLES: usize = 16;
pub const DEFAULT_MAX_SPACE: u128 = 1_000_000;

/// Attempts at drawing an unseen child before falling back to enumeration.
const REDRAWS: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionParams {
    pub population: usize,
    pub samples: usize,
    /// Distinct candidates to evaluate.
    pub budget: usize,
    pub seed: u64,
}

impl EvolutionParams {
    pub fn new(budget: usize, seed: u64) -> Self {
        Self {
            population: DEFAULT_POPULATION,
            samples: DEFAULT_SAMPLES,
            budget,
            seed,
        }
    }

    pub fn check(&self) -> Result<(), NasError> {
        if self.population == 0 || self.samples == 0 || self.samples > self.population {
            return Err(NasError::InvalidConfig(format!(
                "need 0 < samples <= population, got samples {} population {}",
                self.samples, self.population
            )));
        }
        if self.budget < self.population {
            return Err(NasError::BudgetTooSmall {
                budget: self.budget,
                population: self.population,
            });
        }
        Ok(())
    }
}

/// One line of the run log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub index: usize,
    pub candidate: Candidate,
    pub accuracy: f64,
    pub latency_s: f64,
    pub reward: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: EvalRecord,
    pub archive: ParetoArchive,
    pub log: Vec<EvalRecord>,
}

/// Shared scoring context.
pub struct Scorer<'a> {
    pub space: &'a SpaceConfig,
    pub surrogate: &'a dyn AccuracySurrogate,
    pub profile: &'a HardwareProfile,
    pub cfg: &'a RewardConfig,
}

impl Scorer<'_> {
    /// `(accuracy, latency_s, reward)` of one candidate.
    pub fn score(&self, cand: &Candidate) -> Result<(f64, f64, f64), NasError> {
        let spec = self.space.to_spec(cand, "candidate")?;
        let latency = model_cost(&validate_model(&spec)?, self.profile).total_latency;
        let acc = self.surrogate.predict(&spec)?;
        Ok((acc, latency, reward(acc, latency, self.cfg)))
    }

    fn record(&self, index: usize, cand: Candidate) -> Result<EvalRecord, NasError> {
        let (accuracy, latency_s, reward) = self.score(&cand)?;
        Ok(EvalRecord {
            index,
            candidate: cand,
            accuracy,
            latency_s,
            reward,
        })
    }
}

/// `Less` when `a` should win: higher reward, then higher accuracy, then lower
/// latency, then the smaller encoding.
fn preference(space: &SpaceConfig, a: &EvalRecord, b: &EvalRecord) -> Ordering {
    b.reward
        .total_cmp(&a.reward)
        .then(b.accuracy.total_cmp(&a.accuracy))
        .then(a.latency_s.total_cmp(&b.latency_s))
        .then_with(|| {
            let ka = space.encode(&a.candidate).unwrap_or_default();
            let kb = space.encode(&b.candidate).unwrap_or_default();
            ka.cmp(&kb)
        })
}

fn best<'r>(space: &SpaceConfig, recs: impl IntoIterator<Item = &'r EvalRecord>) -> Option<&'r EvalRecord> {
    recs.into_iter().min_by(|a, b| preference(space, a, b))
}

/// Enumerates every candidate and returns the reward argmax.
pub fn exhaustive_search(
    space: &SpaceConfig,
    surrogate: &dyn AccuracySurrogate,
    profile: &HardwareProfile,
    cfg: &RewardConfig,
    max_space: u128,
) -> Result<EvalRecord, NasError> {
    space.validate()?;
    cfg.check()?;
    let size = space.size();
    if size > max_space {
        return Err(NasError::SpaceTooLarge { size, cap: max_space });
    }
    let scorer = Scorer { space, surrogate, profile, cfg };
    let recs = (0..size as usize)
        .into_par_iter()
        .map(|i| scorer.record(i, space.nth(i as u128)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(best(space, &recs).expect("space is never empty").clone())
}

struct Tracker<'a> {
    space: &'a SpaceConfig,
    seen: HashMap<Vec<usize>, usize>,
    /// Next enumeration position to try when redraws keep hitting seen candidates.
    cursor: u128,
    enumerable: bool,
    size: u128,
}

impl Tracker<'_> {
    fn is_new(&self, c: &Candidate) -> bool {
        !self.seen.contains_key(&self.space.encode(c).expect("drawn from the space"))
    }

    fn exhausted(&self) -> bool {
        self.seen.len() as u128 >= self.size
    }

    fn next_unseen(&mut self) -> Option<Candidate> {
        if !self.enumerable {
            return None;
        }
        while self.cursor < self.size {
            let c = self.space.nth(self.cursor);
            self.cursor += 1;
            if self.is_new(&c) {
                return Some(c);
            }
        }
        None
    }

    fn mark(&mut self, c: &Candidate, log_index: usize) {
        self.seen.insert(self.space.encode(c).expect("drawn from the space"), log_index);
    }
}

/// Regularized evolution: a population of `P` drawn at random, then repeatedly mutate
/// the best of `S` sampled members and evict the oldest.
///
/// The budget counts distinct candidates. A child already evaluated is redrawn, first
/// by mutating again, then by random sampling, then by taking the next unseen candidate
/// in enumeration order when the space is small enough to enumerate. The run stops
/// early once every candidate has been evaluated.
pub fn evolutionary_search(
    space: &SpaceConfig,
    surrogate: &dyn AccuracySurrogate,
    profile: &HardwareProfile,
    cfg: &RewardConfig,
    params: &EvolutionParams,
) -> Result<SearchResult, NasError> {
    space.validate()?;
    cfg.check()?;
    params.check()?;
    let scorer = Scorer { space, surrogate, profile, cfg };
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let size = space.size();
    let mut tr = Tracker {
        space,
        seen: HashMap::new(),
        cursor: 0,
        enumerable: size <= DEFAULT_MAX_SPACE,
        size,
    };
    let mut log: Vec<EvalRecord> = Vec::with_capacity(params.budget);
    let mut archive = ParetoArchive::new();
    let push = |log: &mut Vec<EvalRecord>, archive: &mut ParetoArchive, r: EvalRecord| {
        archive.insert(ArchiveEntry {
            candidate: r.candidate.clone(),
            accuracy: r.accuracy,
            latency_s: r.latency_s,
        });
        log.push(r);
    };

    // Initial population: drawn sequentially, scored in parallel.
    let mut initial = Vec::with_capacity(params.population);
    while initial.len() < params.population && !tr.exhausted() {
        let mut c = sample_with(space, &mut rng);
        let mut tries = 0;
        while !tr.is_new(&c) && tries < REDRAWS {
            c = sample_with(space, &mut rng);
            tries += 1;
        }
        let c = if tr.is_new(&c) {
            c
        } else {
            match tr.next_unseen() {
                Some(c) => c,
                None => break,
            }
        };
        tr.mark(&c, initial.len());
        initial.push(c);
    }
    let scored = initial
        .into_par_iter()
        .enumerate()
        .map(|(i, c)| scorer.record(i, c))
        .collect::<Result<Vec<_>, _>>()?;
    let mut population: VecDeque<usize> = (0..scored.len()).collect();
    for r in scored {
        push(&mut log, &mut archive, r);
    }

    while log.len() < params.budget && !tr.exhausted() {
        let k = params.samples.min(population.len());
        let picked = sample_indices(&mut rng, population.len(), k);
        let parent_idx = picked
            .iter()
            .map(|i| population[i])
            .min_by(|&a, &b| preference(space, &log[a], &log[b]))
            .expect("population is never empty");
        let parent = log[parent_idx].candidate.clone();

        let mut child = None;
        for _ in 0..REDRAWS {
            match mutate_with(space, &parent, &mut rng) {
                Ok((c, _)) if tr.is_new(&c) => {
                    child = Some(c);
                    break;
                }
                Ok(_) => {}
                Err(NasError::NoMutationPossible) => break,
                Err(e) => return Err(e),
            }
        }
        if child.is_none() {
            for _ in 0..REDRAWS {
                let c = sample_with(space, &mut rng);
                if tr.is_new(&c) {
                    child = Some(c);
                    break;
                }
            }
        }
        let Some(child) = child.or_else(|| tr.next_unseen()) else {
            break;
        };
        let idx = log.len();
        tr.mark(&child, idx);
        let rec = scorer.record(idx, child)?;
        push(&mut log, &mut archive, rec);
        population.push_back(idx);
        if population.len() > params.population {
            population.pop_front();
        }
    }

    let best = best(space, &log).expect("at least one evaluation").clone();
    Ok(SearchResult { best, archive, log })
}

/// One JSON object per line, in evaluation order.
pub fn write_log<W: Write>(log: &[EvalRecord], mut out: W) -> std::io::Result<()> {
    for r in log {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

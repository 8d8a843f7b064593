//! Shared test support: a brute-force metric enumerator, independent of the
//! library's implementation, plus a random-corpus generator for
//! oracle-equivalence checks.

#![allow(dead_code)]

pub mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use selfpref::model::{
    BenchmarkInstance, FamilyRegistry, ModelId, Paradigm, Role, Rubric, RubricVerdict, Turn,
};
use selfpref::store::{Provenance, ReferenceSet};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn mid(s: &str) -> ModelId {
    ModelId::new(s).unwrap()
}

/// One randomized small corpus: judges are the first `n_judges` generators,
/// truth is complete, judge verdicts may be missing.
pub struct RandomCorpus {
    pub generators: Vec<ModelId>,
    pub judges: Vec<ModelId>,
    pub families: Vec<usize>,
    pub instances: Vec<usize>, // rubric count per instance
    /// (gen index, instance index, rubric index) -> truly met
    pub truth: BTreeMap<(usize, usize, usize), bool>,
    /// (judge index, gen index, instance index, rubric index) -> verdict
    pub verdicts: BTreeMap<(usize, usize, usize, usize), bool>,
}

impl RandomCorpus {
    pub fn generate(seed: u64) -> RandomCorpus {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_gens = rng.random_range(2..=5usize);
        let n_judges = rng.random_range(1..=3usize.min(n_gens));
        let n_instances = rng.random_range(1..=20usize);
        let families: Vec<usize> = (0..n_gens).map(|_| rng.random_range(0..3usize)).collect();
        let instances: Vec<usize> = (0..n_instances)
            .map(|_| rng.random_range(1..=4usize))
            .collect();
        let generators: Vec<ModelId> = (0..n_gens).map(|g| mid(&format!("g{g}"))).collect();
        let judges: Vec<ModelId> = generators.iter().take(n_judges).cloned().collect();

        let mut truth = BTreeMap::new();
        for g in 0..n_gens {
            for (i, n_rubrics) in instances.iter().enumerate() {
                for k in 0..*n_rubrics {
                    truth.insert((g, i, k), rng.random_bool(0.5));
                }
            }
        }
        let mut verdicts = BTreeMap::new();
        for j in 0..n_judges {
            for g in 0..n_gens {
                // Judges lean favorable on their own outputs so HSPP ratios
                // exercise values away from 1.
                let fp = if j == g { 0.55 } else { 0.3 };
                for (i, n_rubrics) in instances.iter().enumerate() {
                    for k in 0..*n_rubrics {
                        if !rng.random_bool(0.9) {
                            continue; // missing verdict
                        }
                        let truly_met = truth[&(g, i, k)];
                        let met = if truly_met {
                            rng.random_bool(0.85)
                        } else {
                            rng.random_bool(fp)
                        };
                        verdicts.insert((j, g, i, k), met);
                    }
                }
            }
        }
        RandomCorpus {
            generators,
            judges,
            families,
            instances,
            truth,
            verdicts,
        }
    }

    pub fn instance_id(&self, i: usize) -> String {
        format!("i{i:03}")
    }

    pub fn rubric_id(&self, k: usize) -> String {
        format!("r{k}")
    }

    pub fn dataset(&self) -> Vec<BenchmarkInstance> {
        self.instances
            .iter()
            .enumerate()
            .map(|(i, n_rubrics)| BenchmarkInstance {
                instance_id: self.instance_id(i),
                conversation: vec![Turn {
                    role: Role::User,
                    content: format!("prompt {i}"),
                }],
                rubrics: (0..*n_rubrics)
                    .map(|k| Rubric {
                        rubric_id: self.rubric_id(k),
                        text: format!("criterion {k}"),
                        weight: 1.0,
                        axis: None,
                        theme: None,
                        verifier: None,
                    })
                    .collect(),
            })
            .collect()
    }

    pub fn registry(&self) -> FamilyRegistry {
        let mut registry = FamilyRegistry::new();
        for (g, model) in self.generators.iter().enumerate() {
            registry
                .insert(model.clone(), format!("f{}", self.families[g]))
                .unwrap();
        }
        registry
    }

    pub fn roster(&self) -> BTreeSet<ModelId> {
        self.generators.iter().cloned().collect()
    }

    pub fn reference(&self) -> ReferenceSet {
        let mut reference = ReferenceSet::new(
            Provenance::External,
            selfpref::model::ScoreMode::UnweightedFraction,
        );
        for ((g, i, k), met) in &self.truth {
            reference.rubric_refs.insert(
                (
                    self.generators[*g].clone(),
                    self.instance_id(*i),
                    self.rubric_id(*k),
                ),
                *met,
            );
        }
        for g in 0..self.generators.len() {
            for (i, n_rubrics) in self.instances.iter().enumerate() {
                let met = (0..*n_rubrics).filter(|k| self.truth[&(g, i, *k)]).count() as u32;
                reference.score_refs.insert(
                    (self.generators[g].clone(), self.instance_id(i)),
                    selfpref::model::Score::Fraction(
                        selfpref::model::Fraction::new(met, *n_rubrics as u32).unwrap(),
                    ),
                );
            }
        }
        reference
    }

    pub fn rubric_verdicts(&self) -> Vec<RubricVerdict> {
        self.verdicts
            .iter()
            .map(|((j, g, i, k), met)| RubricVerdict {
                judge: self.judges[*j].clone(),
                generator: self.generators[*g].clone(),
                instance_id: self.instance_id(*i),
                rubric_id: self.rubric_id(*k),
                met: *met,
                paradigm: Paradigm::Sr,
                raw_ref: None,
            })
            .collect()
    }
}

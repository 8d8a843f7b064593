//! Synthetic judge populations with controlled error rates and bias
//! multipliers, plus the closed-form oracle used to calibrate the estimator
//! stack end to end without any API access.
//!
//! Bias is modeled multiplicatively on the false-positive rate only: on a
//! unit the generator truly fails, judge J marks it met with probability
//! `beta(J, G) * p_fp`, where beta is `beta_self` on J's own outputs,
//! `beta_fam` on same-family outputs, and 1 otherwise. Because every class
//! shares the `p_fp` factor, it cancels in the HSPP ratio and the expected
//! rubric-level ratios are exactly `beta_self` and `beta_fam`.
//!
//! Randomness: ChaCha8 seeded per unit through a SplitMix64 chain over
//! (master seed, domain, judge, generator, instance, rubric) indices, so
//! logs are byte-identical across platforms and any unit's draw is
//! independent of iteration order.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{hspp_entry, overestimation_rubric_table, HsppEntry};
use crate::model::{
    BenchmarkInstance, FamilyRegistry, Fraction, GeneratorClass, GeneratorPartition, ModelId,
    Paradigm, Role, Rubric, RubricVerdict, Score, Turn,
};
use crate::model::partition_generators;
use crate::store::{Provenance, ReferenceSet};

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

/// Per-judge bias override.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JudgeBias {
    pub beta_self: f64,
    pub beta_fam: f64,
}

/// A parameterized synthetic population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub n_instances: usize,
    pub rubrics_per_instance: usize,
    /// Ground-truth probability that a generator fails a rubric.
    pub fail_prob: f64,
    /// Base false-positive rate: P(judge says met | truly unmet).
    pub p_fp: f64,
    /// False-negative rate: P(judge says unmet | truly met).
    pub p_fn: f64,
    /// Default self-bias multiplier for every judge.
    pub beta_self: f64,
    /// Default family-bias multiplier for every judge.
    pub beta_fam: f64,
    /// Family layout: one entry per family, the number of member models.
    pub family_sizes: Vec<usize>,
    /// How many roster models also act as judges (the first `n_judges`).
    pub n_judges: usize,
    /// Per-judge overrides of the beta multipliers, keyed by model id.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub judge_overrides: BTreeMap<String, JudgeBias>,
    pub seed: u64,
}

impl Default for SimScenario {
    fn default() -> Self {
        SimScenario {
            n_instances: 400,
            rubrics_per_instance: 4,
            fail_prob: 0.5,
            p_fp: 0.1,
            p_fn: 0.1,
            beta_self: 1.5,
            beta_fam: 1.2,
            family_sizes: vec![2, 2, 2],
            n_judges: 1,
            judge_overrides: BTreeMap::new(),
            seed: 42,
        }
    }
}

impl SimScenario {
    pub fn n_generators(&self) -> usize {
        self.family_sizes.iter().sum()
    }

    /// Generator ids: `m01`, `m02`, ... in family order.
    pub fn generator_ids(&self) -> Vec<ModelId> {
        (1..=self.n_generators())
            .map(|i| ModelId::new(format!("m{i:02}")).expect("non-empty"))
            .collect()
    }

    pub fn judge_ids(&self) -> Vec<ModelId> {
        self.generator_ids().into_iter().take(self.n_judges).collect()
    }

    pub fn registry(&self) -> FamilyRegistry {
        let mut registry = FamilyRegistry::new();
        let ids = self.generator_ids();
        let mut idx = 0;
        for (fam, size) in self.family_sizes.iter().enumerate() {
            for _ in 0..*size {
                registry
                    .insert(ids[idx].clone(), format!("fam{}", fam + 1))
                    .expect("fresh registry");
                idx += 1;
            }
        }
        registry
    }

    fn bias_for(&self, judge: &ModelId) -> JudgeBias {
        self.judge_overrides
            .get(judge.as_str())
            .copied()
            .unwrap_or(JudgeBias {
                beta_self: self.beta_self,
                beta_fam: self.beta_fam,
            })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_instances == 0 || self.rubrics_per_instance == 0 {
            return Err(Error::Config("scenario needs instances and rubrics".into()));
        }
        if self.n_generators() == 0 {
            return Err(Error::Config("scenario needs at least one generator".into()));
        }
        if self.n_judges == 0 || self.n_judges > self.n_generators() {
            return Err(Error::Config(format!(
                "n_judges {} outside 1..={}",
                self.n_judges,
                self.n_generators()
            )));
        }
        if !(self.fail_prob > 0.0 && self.fail_prob < 1.0) {
            return Err(Error::Config(format!("fail_prob {} outside (0, 1)", self.fail_prob)));
        }
        for (name, p) in [("p_fp", self.p_fp), ("p_fn", self.p_fn)] {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::Config(format!("{name} {p} outside (0, 1)")));
            }
        }
        let mut betas = vec![(self.beta_self, self.beta_fam)];
        for bias in self.judge_overrides.values() {
            betas.push((bias.beta_self, bias.beta_fam));
        }
        for (beta_self, beta_fam) in betas {
            for (name, beta) in [("beta_self", beta_self), ("beta_fam", beta_fam)] {
                if !beta.is_finite() || beta < 0.0 {
                    return Err(Error::Config(format!("{name} {beta} must be >= 0")));
                }
                if beta * self.p_fp > 1.0 {
                    return Err(Error::Config(format!(
                        "{name} {beta} times p_fp {} exceeds 1",
                        self.p_fp
                    )));
                }
            }
        }
        for judge in self.judge_overrides.keys() {
            let ids = self.generator_ids();
            if !ids.iter().any(|m| m.as_str() == judge) {
                return Err(Error::Config(format!(
                    "judge override for '{judge}' which is not in the roster"
                )));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Deterministic per-unit streams
// ---------------------------------------------------------------------------

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Folds the unit coordinates into one seed. Domain 0 draws ground truth
/// (judge slot unused), domain 1 draws judge verdicts.
fn unit_seed(master: u64, domain: u64, judge: u64, generator: u64, instance: u64, rubric: u64) -> u64 {
    let mut s = splitmix64(master ^ domain);
    for part in [judge, generator, instance, rubric] {
        s = splitmix64(s ^ part);
    }
    s
}

fn unit_draw(master: u64, domain: u64, judge: u64, generator: u64, instance: u64, rubric: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(unit_seed(master, domain, judge, generator, instance, rubric));
    rng.random::<f64>()
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

/// Everything a simulation run produces: the corpus, the exact reference,
/// and per-judge SR verdicts.
pub struct SimOutput {
    pub dataset: Vec<BenchmarkInstance>,
    pub registry: FamilyRegistry,
    pub roster: BTreeSet<ModelId>,
    pub judges: Vec<ModelId>,
    pub reference: ReferenceSet,
    pub verdicts: Vec<RubricVerdict>,
}

const AXES: [&str; 3] = ["accuracy", "completeness", "communication"];
const THEMES: [&str; 2] = ["general", "safety"];

fn synthetic_dataset(scenario: &SimScenario) -> Vec<BenchmarkInstance> {
    let width = scenario.n_instances.to_string().len().max(5);
    (0..scenario.n_instances)
        .map(|i| BenchmarkInstance {
            instance_id: format!("i{:0width$}", i + 1),
            conversation: vec![Turn {
                role: Role::User,
                content: format!("Synthetic prompt {}", i + 1),
            }],
            rubrics: (0..scenario.rubrics_per_instance)
                .map(|k| {
                    let idx = i * scenario.rubrics_per_instance + k;
                    // Token length cycles 2..=13 so length slices have spread.
                    let filler = vec!["detail"; idx % 12 + 1].join(" ");
                    Rubric {
                        rubric_id: format!("r{}", k + 1),
                        text: format!("criterion {filler}"),
                        weight: if idx % 7 == 6 { -1.0 } else { 1.0 },
                        axis: Some(AXES[idx % AXES.len()].to_string()),
                        theme: Some(THEMES[idx % THEMES.len()].to_string()),
                        verifier: None,
                    }
                })
                .collect(),
        })
        .collect()
}

/// Draws the synthetic corpus, the exact reference, and every judge's SR
/// verdicts. Identical scenarios (including seed) produce identical output.
pub fn simulate(scenario: &SimScenario) -> Result<SimOutput> {
    scenario.validate()?;
    let dataset = synthetic_dataset(scenario);
    let registry = scenario.registry();
    let generators = scenario.generator_ids();
    let judges = scenario.judge_ids();
    let roster: BTreeSet<ModelId> = generators.iter().cloned().collect();

    let mut partitions: BTreeMap<ModelId, GeneratorPartition> = BTreeMap::new();
    for judge in &judges {
        partitions.insert(judge.clone(), partition_generators(judge, &roster, &registry)?);
    }

    let mut reference = ReferenceSet::new(Provenance::External, crate::model::ScoreMode::UnweightedFraction);
    let mut truth: BTreeMap<(usize, usize, usize), bool> = BTreeMap::new(); // (gen, inst, rubric) -> met
    for (g_idx, generator) in generators.iter().enumerate() {
        for (i_idx, instance) in dataset.iter().enumerate() {
            let mut met_count = 0u32;
            for (k_idx, rubric) in instance.rubrics.iter().enumerate() {
                let u = unit_draw(scenario.seed, 0, 0, g_idx as u64, i_idx as u64, k_idx as u64);
                let met = u >= scenario.fail_prob;
                truth.insert((g_idx, i_idx, k_idx), met);
                if met {
                    met_count += 1;
                }
                reference.rubric_refs.insert(
                    (generator.clone(), instance.instance_id.clone(), rubric.rubric_id.clone()),
                    met,
                );
            }
            reference.score_refs.insert(
                (generator.clone(), instance.instance_id.clone()),
                Score::Fraction(Fraction::new(met_count, instance.rubrics.len() as u32)?),
            );
        }
    }

    let mut verdicts = Vec::new();
    for (j_idx, judge) in judges.iter().enumerate() {
        let bias = scenario.bias_for(judge);
        let partition = &partitions[judge];
        for (g_idx, generator) in generators.iter().enumerate() {
            let beta = match partition.class_of(generator) {
                Some(GeneratorClass::Own) => bias.beta_self,
                Some(GeneratorClass::Family) => bias.beta_fam,
                _ => 1.0,
            };
            let p_met_given_fail = beta * scenario.p_fp;
            for (i_idx, instance) in dataset.iter().enumerate() {
                for (k_idx, rubric) in instance.rubrics.iter().enumerate() {
                    let truly_met = truth[&(g_idx, i_idx, k_idx)];
                    let u = unit_draw(
                        scenario.seed,
                        1,
                        j_idx as u64,
                        g_idx as u64,
                        i_idx as u64,
                        k_idx as u64,
                    );
                    let met = if truly_met {
                        u >= scenario.p_fn
                    } else {
                        u < p_met_given_fail
                    };
                    verdicts.push(RubricVerdict {
                        judge: judge.clone(),
                        generator: generator.clone(),
                        instance_id: instance.instance_id.clone(),
                        rubric_id: rubric.rubric_id.clone(),
                        met,
                        paradigm: Paradigm::Sr,
                        raw_ref: None,
                    });
                }
            }
        }
    }

    Ok(SimOutput {
        dataset,
        registry,
        roster,
        judges,
        reference,
        verdicts,
    })
}

// ---------------------------------------------------------------------------
// Analytic oracle
// ---------------------------------------------------------------------------

/// Closed-form expectations for one judge under a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectedHspp {
    /// Expected rubric-level self ratio: exactly beta_self.
    pub self_ratio: f64,
    /// Expected rubric-level family ratio: exactly beta_fam (undefined when
    /// the judge has no family members, reported as NaN-free None upstream).
    pub family_ratio: Option<f64>,
    /// First-order standard error of the estimated self ratio.
    pub se_self: f64,
    pub se_family: Option<f64>,
}

/// The analytic oracle for the rubric-level estimators. The p_fp factor is
/// common to every generator class, so it cancels in the ratios; the
/// standard errors come from binomial variance at the expected unit counts,
/// propagated to the ratio at first order.
pub fn expected_hspp(scenario: &SimScenario, judge: &ModelId) -> Result<ExpectedHspp> {
    scenario.validate()?;
    let registry = scenario.registry();
    let roster: BTreeSet<ModelId> = scenario.generator_ids().into_iter().collect();
    let partition = partition_generators(judge, &roster, &registry)?;
    let bias = scenario.bias_for(judge);

    // Expected reference-failed units per generator.
    let units_per_gen =
        scenario.fail_prob * (scenario.n_instances * scenario.rubrics_per_instance) as f64;
    let n_strangers = partition.strangers.len() as f64;
    let n_family = partition.family.len() as f64;

    let rel_var = |p: f64, n: f64| -> f64 {
        // Var(estimate)/p^2 for a binomial rate estimate.
        (1.0 - p) / (p * n)
    };
    let p_stranger = scenario.p_fp;
    let p_self = bias.beta_self * scenario.p_fp;
    let p_family = bias.beta_fam * scenario.p_fp;

    // Var of the stranger mean of independent rates (equal sizes).
    let stranger_rel = rel_var(p_stranger, units_per_gen) / n_strangers;
    let se_self = if p_self == 0.0 {
        0.0
    } else {
        bias.beta_self * (rel_var(p_self, units_per_gen) + stranger_rel).sqrt()
    };
    let (family_ratio, se_family) = if partition.family.is_empty() {
        (None, None)
    } else if p_family == 0.0 {
        (Some(0.0), Some(0.0))
    } else {
        let fam_rel = rel_var(p_family, units_per_gen) / n_family;
        (
            Some(bias.beta_fam),
            Some(bias.beta_fam * (fam_rel + stranger_rel).sqrt()),
        )
    };
    Ok(ExpectedHspp {
        self_ratio: bias.beta_self,
        family_ratio,
        se_self,
        se_family,
    })
}

// ---------------------------------------------------------------------------
// Recovery experiment
// ---------------------------------------------------------------------------

/// Estimate-versus-oracle comparison for one judge.
#[derive(Debug, Clone, Serialize)]
pub struct RecoveryRow {
    pub judge: ModelId,
    pub estimate_self: Option<f64>,
    pub estimate_family: Option<f64>,
    pub oracle_self: f64,
    pub oracle_family: Option<f64>,
    pub se_self: f64,
    pub se_family: Option<f64>,
    pub z_self: Option<f64>,
    pub z_family: Option<f64>,
    /// True when the estimated self ratio sits more than three analytic
    /// standard errors above 1.
    pub bias_detected: bool,
    #[serde(skip)]
    pub hspp: HsppEntry,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecoveryReport {
    pub rows: Vec<RecoveryRow>,
}

/// Runs the simulator, pushes the logs through the real estimator stack, and
/// reports estimates against the closed-form oracle.
pub fn recovery_experiment(scenario: &SimScenario) -> Result<RecoveryReport> {
    let output = simulate(scenario)?;
    Ok(RecoveryReport {
        rows: recovery_rows(scenario, &output)?,
    })
}

/// The estimator-versus-oracle rows for an existing simulation output.
pub fn recovery_rows(scenario: &SimScenario, output: &SimOutput) -> Result<Vec<RecoveryRow>> {
    let judges: BTreeSet<ModelId> = output.judges.iter().cloned().collect();
    let table =
        overestimation_rubric_table(&output.verdicts, &output.reference, &judges, &output.roster);
    let mut rows = Vec::new();
    for judge in &output.judges {
        let partition = partition_generators(judge, &output.roster, &output.registry)?;
        let entry = hspp_entry(judge, &table, &partition);
        let oracle = expected_hspp(scenario, judge)?;
        let z_self = match (entry.self_ratio, oracle.se_self > 0.0) {
            (Some(est), true) => Some((est - oracle.self_ratio) / oracle.se_self),
            _ => None,
        };
        let z_family = match (entry.family_ratio, oracle.family_ratio, oracle.se_family) {
            (Some(est), Some(expected), Some(se)) if se > 0.0 => Some((est - expected) / se),
            _ => None,
        };
        let bias_detected = match entry.self_ratio {
            Some(est) if oracle.se_self > 0.0 => (est - 1.0) / oracle.se_self > 3.0,
            _ => false,
        };
        rows.push(RecoveryRow {
            judge: judge.clone(),
            estimate_self: entry.self_ratio,
            estimate_family: entry.family_ratio,
            oracle_self: oracle.self_ratio,
            oracle_family: oracle.family_ratio,
            se_self: oracle.se_self,
            se_family: oracle.se_family,
            z_self,
            z_family,
            bias_detected,
            hspp: entry,
        });
    }
    Ok(rows)
}

//! Brute-force enumerators for the metric definitions, written as direct
//! nested loops over the corpus. Deliberately independent of the library's
//! implementation: fractions are compared by integer cross-multiplication
//! and rate means are accumulated over a plain common denominator, so any
//! agreement with the optimized implementation is evidence, not tautology.

use super::RandomCorpus;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Counts {
    pub num: u64,
    pub den: u64,
    pub excluded: u64,
}

/// Judge score as (met, total), defined only when the judge ruled on every
/// rubric of the instance.
fn judge_score(c: &RandomCorpus, j: usize, g: usize, i: usize) -> Option<(u64, u64)> {
    let n_rubrics = c.instances[i];
    let mut met = 0;
    for k in 0..n_rubrics {
        match c.verdicts.get(&(j, g, i, k)) {
            Some(true) => met += 1,
            Some(false) => {}
            None => return None,
        }
    }
    Some((met, n_rubrics as u64))
}

fn truth_score(c: &RandomCorpus, g: usize, i: usize) -> (u64, u64) {
    let n_rubrics = c.instances[i];
    let met = (0..n_rubrics).filter(|k| c.truth[&(g, i, *k)]).count() as u64;
    (met, n_rubrics as u64)
}

/// sgn(a/b - c/d) by cross-multiplication.
fn frac_sign(a: (u64, u64), b: (u64, u64)) -> i8 {
    let lhs = (a.0 as u128) * (b.1 as u128);
    let rhs = (b.0 as u128) * (a.1 as u128);
    match lhs.cmp(&rhs) {
        std::cmp::Ordering::Greater => 1,
        std::cmp::Ordering::Equal => 0,
        std::cmp::Ordering::Less => -1,
    }
}

/// Rubric-level overestimation counts for (judge, generator).
pub fn o_rub(c: &RandomCorpus, j: usize, g: usize) -> Counts {
    let mut counts = Counts {
        num: 0,
        den: 0,
        excluded: 0,
    };
    for (i, n_rubrics) in c.instances.iter().enumerate() {
        for k in 0..*n_rubrics {
            if c.truth[&(g, i, k)] {
                continue; // only rubrics the generator objectively fails
            }
            match c.verdicts.get(&(j, g, i, k)) {
                Some(met) => {
                    counts.den += 1;
                    if *met {
                        counts.num += 1;
                    }
                }
                None => counts.excluded += 1,
            }
        }
    }
    counts
}

/// Instance-level overestimation counts for (judge, generator).
pub fn o_inst(c: &RandomCorpus, j: usize, g: usize) -> Counts {
    let mut counts = Counts {
        num: 0,
        den: 0,
        excluded: 0,
    };
    for opp in 0..c.generators.len() {
        if opp == g {
            continue;
        }
        for i in 0..c.instances.len() {
            let w_star = frac_sign(truth_score(c, g, i), truth_score(c, opp, i));
            if w_star != -1 {
                continue;
            }
            match (judge_score(c, j, g, i), judge_score(c, j, opp, i)) {
                (Some(a), Some(b)) => {
                    counts.den += 1;
                    if frac_sign(a, b) > -1 {
                        counts.num += 1;
                    }
                }
                _ => counts.excluded += 1,
            }
        }
    }
    counts
}

/// Pairwise concordance (MIPA) counts for one judge, ties included.
pub fn mipa(c: &RandomCorpus, j: usize) -> Counts {
    let mut counts = Counts {
        num: 0,
        den: 0,
        excluded: 0,
    };
    for g1 in 0..c.generators.len() {
        for g2 in (g1 + 1)..c.generators.len() {
            for i in 0..c.instances.len() {
                match (judge_score(c, j, g1, i), judge_score(c, j, g2, i)) {
                    (Some(a), Some(b)) => {
                        counts.den += 1;
                        let w_judge = frac_sign(a, b);
                        let w_star = frac_sign(truth_score(c, g1, i), truth_score(c, g2, i));
                        if w_judge == w_star {
                            counts.num += 1;
                        }
                    }
                    _ => counts.excluded += 1,
                }
            }
        }
    }
    counts
}

/// Rubric verdict agreement (MRA) counts for one judge.
pub fn mra(c: &RandomCorpus, j: usize) -> Counts {
    let mut counts = Counts {
        num: 0,
        den: 0,
        excluded: 0,
    };
    for g in 0..c.generators.len() {
        for (i, n_rubrics) in c.instances.iter().enumerate() {
            for k in 0..*n_rubrics {
                match c.verdicts.get(&(j, g, i, k)) {
                    Some(met) => {
                        counts.den += 1;
                        if *met == c.truth[&(g, i, k)] {
                            counts.num += 1;
                        }
                    }
                    None => counts.excluded += 1,
                }
            }
        }
    }
    counts
}

/// Overestimation subtypes: loss-to-win and loss-to-tie counts.
pub fn subtypes(c: &RandomCorpus, j: usize, g: usize) -> (u64, u64) {
    let mut loss_to_win = 0;
    let mut loss_to_tie = 0;
    for opp in 0..c.generators.len() {
        if opp == g {
            continue;
        }
        for i in 0..c.instances.len() {
            if frac_sign(truth_score(c, g, i), truth_score(c, opp, i)) != -1 {
                continue;
            }
            if let (Some(a), Some(b)) = (judge_score(c, j, g, i), judge_score(c, j, opp, i)) {
                match frac_sign(a, b) {
                    1 => loss_to_win += 1,
                    0 => loss_to_tie += 1,
                    _ => {}
                }
            }
        }
    }
    (loss_to_win, loss_to_tie)
}

/// Exact ratio of a self rate to the mean of the defined rates in `others`,
/// as a (num, den) fraction over a plain product common denominator.
/// `None` when undefined (no defined components, zero mean, or an undefined
/// self rate).
pub fn hspp_fraction(self_counts: Counts, others: &[Counts]) -> Option<(u128, u128)> {
    ratio_of_fraction_to_mean((self_counts.num, self_counts.den), others)
}

/// Family variant: mean(family) / mean(strangers).
pub fn hspp_family_fraction(family: &[Counts], strangers: &[Counts]) -> Option<(u128, u128)> {
    let family_defined: Vec<Counts> = family.iter().copied().filter(|c| c.den > 0).collect();
    if family_defined.is_empty() {
        return None;
    }
    // mean(family) as a fraction over the product denominator.
    let (fam_num, fam_den) = sum_over_product(&family_defined)?;
    let k = family_defined.len() as u128;
    ratio_of_fraction_to_mean_u128((fam_num, fam_den.checked_mul(k)?), strangers)
}

fn sum_over_product(counts: &[Counts]) -> Option<(u128, u128)> {
    let mut den: u128 = 1;
    for c in counts {
        den = den.checked_mul(c.den as u128)?;
    }
    let mut num: u128 = 0;
    for c in counts {
        let mut term = c.num as u128;
        for other in counts {
            if !std::ptr::eq(c, other) {
                term = term.checked_mul(other.den as u128)?;
            }
        }
        num = num.checked_add(term)?;
    }
    Some((num, den))
}

fn ratio_of_fraction_to_mean(top: (u64, u64), others: &[Counts]) -> Option<(u128, u128)> {
    if top.1 == 0 {
        return None;
    }
    ratio_of_fraction_to_mean_u128((top.0 as u128, top.1 as u128), others)
}

fn ratio_of_fraction_to_mean_u128(top: (u128, u128), others: &[Counts]) -> Option<(u128, u128)> {
    let defined: Vec<Counts> = others.iter().copied().filter(|c| c.den > 0).collect();
    if defined.is_empty() {
        return None;
    }
    let (sum_num, sum_den) = sum_over_product(&defined)?;
    if sum_num == 0 {
        return None; // zero stranger mean: ratio undefined
    }
    let k = defined.len() as u128;
    // top / (sum / (k * sum_den)) = top.0 * k * sum_den / (top.1 * sum_num)
    let num = top.0.checked_mul(k)?.checked_mul(sum_den)?;
    let den = top.1.checked_mul(sum_num)?;
    Some((num, den))
}

/// Cross-multiplied fraction equality.
pub fn fractions_equal(a: (u128, u128), b: (u128, u128)) -> bool {
    a.0 * b.1 == b.0 * a.1
}

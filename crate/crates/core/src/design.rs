//! Forced-response designs and the sum-score misclassification matrix.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest questionnaire length accepted. Binomial coefficients stay exact in
/// `u64` well past this, and `p^M` stays far from underflow.
pub const MAX_ITEMS: usize = 30;

/// A forced-response design shared by all `m_items` sensitive questions.
///
/// Only the two "yes" probabilities are stored; the "no" probabilities are
/// their complements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RRDesign {
    p_yes_given_1: f64,
    p_yes_given_0: f64,
    m_items: usize,
}

impl RRDesign {
    pub fn p_yes_given_1(&self) -> f64 {
        self.p_yes_given_1
    }

    pub fn p_yes_given_0(&self) -> f64 {
        self.p_yes_given_0
    }

    pub fn p_no_given_1(&self) -> f64 {
        1.0 - self.p_yes_given_1
    }

    pub fn p_no_given_0(&self) -> f64 {
        1.0 - self.p_yes_given_0
    }

    pub fn m_items(&self) -> usize {
        self.m_items
    }

    /// Probability of answering "yes" to one item with the given true status.
    pub fn p_yes(&self, present: bool) -> f64 {
        if present {
            self.p_yes_given_1
        } else {
            self.p_yes_given_0
        }
    }

    pub fn is_identity(&self) -> bool {
        self.p_yes_given_1 == 1.0 && self.p_yes_given_0 == 0.0
    }
}

/// Validates and builds a forced-response design.
pub fn forced_response_design(
    p_yes_given_1: f64,
    p_yes_given_0: f64,
    m_items: usize,
) -> Result<RRDesign> {
    check_probability("p_yes_given_1", p_yes_given_1)?;
    check_probability("p_yes_given_0", p_yes_given_0)?;
    if p_yes_given_1 <= p_yes_given_0 {
        return Err(Error::NonIdentifiable {
            p1: p_yes_given_1,
            p0: p_yes_given_0,
        });
    }
    if m_items == 0 {
        return Err(Error::NoItems);
    }
    if m_items > MAX_ITEMS {
        return Err(Error::TooManyItems(m_items));
    }
    Ok(RRDesign {
        p_yes_given_1,
        p_yes_given_0,
        m_items,
    })
}

fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::ProbabilityOutOfRange { name, value })
    }
}

/// Design configuration as read from JSON: either the two probabilities
/// directly or a two-dice shorthand listing the forcing sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DesignConfig {
    Probabilities {
        p_yes_given_1: f64,
        p_yes_given_0: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m_items: Option<usize>,
    },
    Dice {
        dice: DiceRule,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m_items: Option<usize>,
    },
}

/// Sums of two fair dice that force a "yes" or a "no"; any other sum means
/// "answer truthfully".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiceRule {
    pub force_yes: Vec<u32>,
    pub force_no: Vec<u32>,
}

impl DiceRule {
    /// Returns `(p_yes_given_1, p_yes_given_0)`.
    pub fn probabilities(&self) -> Result<(f64, f64)> {
        let mut seen = [false; 13];
        for &sum in self.force_yes.iter().chain(&self.force_no) {
            if !(2..=12).contains(&sum) {
                return Err(Error::DesignConfig(format!(
                    "dice sum {sum} is not attainable with two dice"
                )));
            }
            if std::mem::replace(&mut seen[sum as usize], true) {
                return Err(Error::DesignConfig(format!(
                    "dice sum {sum} listed more than once"
                )));
            }
        }
        let p_force_yes: f64 = self.force_yes.iter().map(|&s| two_dice_pmf(s)).sum();
        let p_force_no: f64 = self.force_no.iter().map(|&s| two_dice_pmf(s)).sum();
        Ok((1.0 - p_force_no, p_force_yes))
    }
}

fn two_dice_pmf(sum: u32) -> f64 {
    let ways = 6 - (sum as i32 - 7).abs();
    f64::from(ways) / 36.0
}

impl DesignConfig {
    pub fn m_items(&self) -> Option<usize> {
        match self {
            DesignConfig::Probabilities { m_items, .. } | DesignConfig::Dice { m_items, .. } => {
                *m_items
            }
        }
    }

    /// Builds the design; `fallback_items` is used when the config omits
    /// `m_items`.
    pub fn resolve(&self, fallback_items: Option<usize>) -> Result<RRDesign> {
        let m = self.m_items().or(fallback_items).ok_or_else(|| {
            Error::DesignConfig("m_items is not given and cannot be inferred".into())
        })?;
        let (p1, p0) = match self {
            DesignConfig::Probabilities {
                p_yes_given_1,
                p_yes_given_0,
                ..
            } => (*p_yes_given_1, *p_yes_given_0),
            DesignConfig::Dice { dice, .. } => dice.probabilities()?,
        };
        forced_response_design(p1, p0, m)
    }
}

/// Conditional distribution of the observed sum score given the true sum
/// score. Row index is the observed score, column index the true score.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QMatrix {
    m_items: usize,
    entries: Vec<f64>,
}

impl QMatrix {
    pub fn m_items(&self) -> usize {
        self.m_items
    }

    pub fn dim(&self) -> usize {
        self.m_items + 1
    }

    /// `P(S* = observed | S = true_score)`.
    #[inline]
    pub fn get(&self, observed: usize, true_score: usize) -> f64 {
        self.entries[observed * self.dim() + true_score]
    }

    /// Row of the matrix for one observed score.
    #[inline]
    pub fn row(&self, observed: usize) -> &[f64] {
        let d = self.dim();
        &self.entries[observed * d..(observed + 1) * d]
    }

    pub fn column(&self, true_score: usize) -> Vec<f64> {
        (0..self.dim()).map(|r| self.get(r, true_score)).collect()
    }

    /// `Q · v`: observed-score distribution implied by a true-score
    /// distribution.
    pub fn apply(&self, true_dist: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|r| dot(self.row(r), true_dist))
            .collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|r| self.row(r).to_vec()).collect()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pascal's triangle up to row `n`, exact in `u64` for `n <= MAX_ITEMS`.
fn binomial_table(n: usize) -> Vec<Vec<u64>> {
    let mut rows: Vec<Vec<u64>> = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let mut row = vec![1u64; i + 1];
        for k in 1..i {
            row[k] = rows[i - 1][k - 1] + rows[i - 1][k];
        }
        rows.push(row);
    }
    rows
}

/// Builds the sum-score misclassification matrix of a design.
///
/// For true score `s` and observed score `t`, `j` counts the present
/// characteristics answered "no"; the remaining `t - (s - j)` "yes" answers
/// come from absent characteristics. Terms whose binomial arguments fall
/// outside their range are skipped.
pub fn build_q_matrix(design: &RRDesign) -> QMatrix {
    let m = design.m_items;
    let d = m + 1;
    let binom = binomial_table(m);
    let (p11, p01) = (design.p_yes_given_1(), design.p_no_given_1());
    let (p10, p00) = (design.p_yes_given_0(), design.p_no_given_0());

    let mut entries = vec![0.0; d * d];
    for s in 0..=m {
        for t in 0..=m {
            let mut total = 0.0;
            for j in 0..=s {
                // false "yes" answers among the m - s absent characteristics
                let Some(false_yes) = (t + j).checked_sub(s) else {
                    continue;
                };
                if false_yes > m - s {
                    continue;
                }
                let true_no = m - s - false_yes;
                total += binom[s][j] as f64
                    * binom[m - s][false_yes] as f64
                    * p11.powi((s - j) as i32)
                    * p01.powi(j as i32)
                    * p10.powi(false_yes as i32)
                    * p00.powi(true_no as i32);
            }
            entries[t * d + s] = total;
        }
    }
    QMatrix {
        m_items: m,
        entries,
    }
}

/// Univariate moment estimate of a prevalence from one item's "yes" count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomEstimate {
    /// Estimate clamped to `[0, 1]`.
    pub estimate: f64,
    /// Unclamped inversion of the observed "yes" rate.
    pub raw: f64,
    pub clamped: bool,
}

/// Inverts `P(yes) = p(yes|0) + (p(yes|1) - p(yes|0)) * prevalence`.
pub fn mom_prevalence(yes_count: u64, n: u64, design: &RRDesign) -> Result<MomEstimate> {
    if n == 0 {
        return Err(Error::NoData);
    }
    if yes_count > n {
        return Err(Error::LengthMismatch(format!(
            "yes count {yes_count} exceeds n = {n}"
        )));
    }
    let observed = yes_count as f64 / n as f64;
    let raw = (observed - design.p_yes_given_0) / (design.p_yes_given_1 - design.p_yes_given_0);
    let estimate = raw.clamp(0.0, 1.0);
    Ok(MomEstimate {
        estimate,
        raw,
        clamped: estimate != raw,
    })
}

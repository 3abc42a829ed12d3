//! Group summaries (median and quartiles) and the Kruskal-Wallis H test.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::checked_gamma_ur;

use crate::error::{Error, Result};
use crate::format::sig6;

/// One metric value per participant, labelled by group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSample {
    pub group_label: String,
    pub values: Vec<f64>,
}

impl GroupSample {
    pub fn new(group_label: impl Into<String>, values: Vec<f64>) -> Self {
        GroupSample {
            group_label: group_label.into(),
            values,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

/// Linear-interpolation quantile at position `q * (n - 1)` of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Median and quartiles by linear interpolation between order statistics.
pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::Statistics("cannot summarize an empty sample".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Statistics("non-finite value in sample".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Summary {
        median: quantile_sorted(&sorted, 0.5),
        q1: quantile_sorted(&sorted, 0.25),
        q3: quantile_sorted(&sorted, 0.75),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KwResult {
    pub h_statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// `1 - sum(t^3 - t) / (N^3 - N)` over tie blocks of size `t`.
    pub tie_correction: f64,
}

/// Upper tail of the chi-square distribution, `Q(df/2, x/2)`.
pub fn chi_square_sf(x: f64, df: usize) -> f64 {
    if df == 0 || x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    checked_gamma_ur(df as f64 / 2.0, x / 2.0)
        .unwrap_or(f64::NAN)
        .clamp(0.0, 1.0)
}

/// Midranks (1-based) of `values`, ties sharing their average rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

fn tie_block_sum(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut sum = 0.0;
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && sorted[end] == sorted[start] {
            end += 1;
        }
        let t = (end - start) as f64;
        sum += t * t * t - t;
        start = end;
    }
    sum
}

/// Tie-corrected Kruskal-Wallis test with a chi-square p-value.
pub fn kruskal_wallis(groups: &[GroupSample]) -> Result<KwResult> {
    if groups.len() < 2 {
        return Err(Error::Statistics(format!(
            "Kruskal-Wallis needs at least 2 groups, got {}",
            groups.len()
        )));
    }
    if let Some(g) = groups.iter().find(|g| g.values.is_empty()) {
        return Err(Error::Statistics(format!(
            "group `{}` is empty",
            g.group_label
        )));
    }
    let pooled: Vec<f64> = groups
        .iter()
        .flat_map(|g| g.values.iter().copied())
        .collect();
    if pooled.iter().any(|v| !v.is_finite()) {
        return Err(Error::Statistics("non-finite value in sample".into()));
    }
    let n = pooled.len();
    if n < 3 {
        return Err(Error::Statistics(format!(
            "need at least 3 observations, got {n}"
        )));
    }
    let nf = n as f64;
    let tie_correction = 1.0 - tie_block_sum(&pooled) / (nf * nf * nf - nf);
    if tie_correction <= 0.0 {
        return Err(Error::AllTied);
    }

    let ranks = midranks(&pooled);
    let mut per_group: Vec<(usize, f64)> = Vec::with_capacity(groups.len());
    let mut offset = 0;
    for g in groups {
        let len = g.values.len();
        let rank_sum: f64 = ranks[offset..offset + len].iter().sum();
        per_group.push((len, rank_sum));
        offset += len;
    }
    // canonical summation order makes H independent of group order
    per_group.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let centre = (nf + 1.0) / 2.0;
    let spread: f64 = per_group
        .iter()
        .map(|&(len, rank_sum)| {
            let d = rank_sum / len as f64 - centre;
            len as f64 * d * d
        })
        .sum();
    let h_statistic = 12.0 / (nf * (nf + 1.0)) * spread / tie_correction;
    let df = groups.len() - 1;
    Ok(KwResult {
        h_statistic,
        df,
        p_value: chi_square_sf(h_statistic, df),
        tie_correction,
    })
}

/// Per-group summaries plus the omnibus test for one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub metric: String,
    pub groups: Vec<GroupSummary>,
    pub kruskal_wallis: KwResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub n: usize,
    #[serde(flatten)]
    pub summary: Summary,
}

pub fn compare_groups(metric: &str, groups: &[GroupSample]) -> Result<Comparison> {
    let kruskal_wallis = kruskal_wallis(groups)?;
    let groups = groups
        .iter()
        .map(|g| {
            Ok(GroupSummary {
                group: g.group_label.clone(),
                n: g.values.len(),
                summary: summarize(&g.values)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison {
        metric: metric.to_string(),
        groups,
        kruskal_wallis,
    })
}

/// `"2.06 (1.792–2.126)"`: median to two decimals, quartiles to three.
pub fn format_median_iqr(s: &Summary) -> String {
    format!("{:.2} ({:.3}–{:.3})", s.median, s.q1, s.q3)
}

/// p-value to four decimals, starred when below 0.01.
pub fn format_p(p: f64) -> String {
    if p < 0.01 {
        format!("{p:.4}**")
    } else {
        format!("{p:.4}")
    }
}

impl Comparison {
    /// Machine-readable CSV: group rows, then a KW header and row.
    pub fn to_csv(&self, full_precision: bool) -> String {
        let num = |x: f64| {
            if full_precision {
                x.to_string()
            } else {
                sig6(x)
            }
        };
        let mut out = String::from("metric,group,median,q1,q3\n");
        for g in &self.groups {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                self.metric,
                g.group,
                num(g.summary.median),
                num(g.summary.q1),
                num(g.summary.q3)
            );
        }
        out.push_str("metric,KW_h,df,p\n");
        let kw = &self.kruskal_wallis;
        let _ = writeln!(
            out,
            "{},{},{},{}",
            self.metric,
            num(kw.h_statistic),
            kw.df,
            num(kw.p_value)
        );
        out
    }

    /// Human-readable one-line table in median (Q1–Q3) form.
    pub fn to_table(&self) -> String {
        let first = self.metric.len().max("Metric".len());
        let mut header = format!("{:<first$}", "Metric");
        let mut row = format!("{:<first$}", self.metric);
        for g in &self.groups {
            let cell = format_median_iqr(&g.summary);
            let width = cell.chars().count().max(g.group.len());
            let _ = write!(header, " | {:<width$}", g.group);
            let _ = write!(row, " | {cell:<width$}");
        }
        let _ = write!(header, " | KW p");
        let _ = write!(row, " | {}", format_p(self.kruskal_wallis.p_value));
        format!("{header}\n{row}\n")
    }
}

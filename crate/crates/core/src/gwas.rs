//! Verifier-side association statistics and the retention-ratio check.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::SnpMatrix;
use crate::error::{Error, Result};
use crate::special::{chi2_sf, normal_sf};

/// Two-sided 95% normal quantile used for odds-ratio intervals.
pub const Z_95: f64 = 1.96;

/// 3x2 genotype-by-group table at one SNP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    /// Case counts `S0, S1, S2`.
    pub case: [u64; 3],
    /// Control counts `R0, R1, R2`.
    pub control: [u64; 3],
}

impl ContingencyTable {
    pub fn new(case: [u64; 3], control: [u64; 3]) -> Result<Self> {
        if case.iter().sum::<u64>() == 0 || control.iter().sum::<u64>() == 0 {
            return Err(Error::InsufficientData("both groups need at least one individual".into()));
        }
        Ok(ContingencyTable { case, control })
    }

    pub fn case_total(&self) -> u64 {
        self.case.iter().sum()
    }

    pub fn control_total(&self) -> u64 {
        self.control.iter().sum()
    }

    pub fn genotype_total(&self, k: usize) -> u64 {
        self.case[k] + self.control[k]
    }

    pub fn total(&self) -> u64 {
        self.case_total() + self.control_total()
    }

    /// Same table with the groups exchanged.
    pub fn swapped(&self) -> Self {
        ContingencyTable { case: self.control, control: self.case }
    }
}

fn counts(col: &[u8]) -> [u64; 3] {
    let mut c = [0u64; 3];
    for &g in col {
        c[g as usize] += 1;
    }
    c
}

pub fn contingency(case: &SnpMatrix, control: &SnpMatrix, j: usize) -> Result<ContingencyTable> {
    case.check_same_snps(control)?;
    if j >= case.cols() {
        return Err(Error::Index { index: j, len: case.cols() });
    }
    ContingencyTable::new(counts(case.column(j)), counts(control.column(j)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
}

/// Pearson chi-square over the genotype columns that have any observations.
pub fn chi_square(t: &ContingencyTable) -> Result<ChiSquare> {
    let total = t.total() as f64;
    let included: Vec<usize> = (0..3).filter(|&k| t.genotype_total(k) > 0).collect();
    if included.len() < 2 {
        return Err(Error::UndefinedTest(format!(
            "chi-square needs two observed genotypes, table has {}",
            included.len()
        )));
    }
    if t.case_total() == 0 || t.control_total() == 0 {
        return Err(Error::UndefinedTest("chi-square needs both groups".into()));
    }
    let mut statistic = 0.0;
    for (observed, group_total) in [(&t.case, t.case_total()), (&t.control, t.control_total())] {
        for &k in &included {
            let expected = group_total as f64 * t.genotype_total(k) as f64 / total;
            let diff = observed[k] as f64 - expected;
            statistic += diff * diff / expected;
        }
    }
    let df = included.len() as u32 - 1;
    Ok(ChiSquare { statistic, df, p_value: chi2_sf(statistic, df)? })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OddsRatio {
    pub odds_ratio: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub se: f64,
    pub z: f64,
    pub p_value: f64,
    /// Whether 0.5 was added to each aggregate cell because one was zero.
    pub corrected: bool,
}

/// Odds ratio of carrying any minor allele, `R0 (S1 + S2) / (S0 (R1 + R2))`,
/// with its 95% interval and a two-sided z-test on `ln OR`.
pub fn odds_ratio(t: &ContingencyTable) -> Result<OddsRatio> {
    let mut s0 = t.case[0] as f64;
    let mut s12 = (t.case[1] + t.case[2]) as f64;
    let mut r0 = t.control[0] as f64;
    let mut r12 = (t.control[1] + t.control[2]) as f64;
    let corrected = [s0, s12, r0, r12].contains(&0.0);
    if corrected {
        s0 += 0.5;
        s12 += 0.5;
        r0 += 0.5;
        r12 += 0.5;
    }
    if [s0, s12, r0, r12].iter().any(|&c| !(c > 0.0)) {
        return Err(Error::UndefinedTest("odds ratio has an empty aggregate cell".into()));
    }
    let odds_ratio = r0 * s12 / (s0 * r12);
    let se = (1.0 / s12 + 1.0 / s0 + 1.0 / r12 + 1.0 / r0).sqrt();
    let log_or = odds_ratio.ln();
    let z = log_or / se;
    Ok(OddsRatio {
        odds_ratio,
        ci_low: (log_or - Z_95 * se).exp(),
        ci_high: (log_or + Z_95 * se).exp(),
        se,
        z,
        p_value: (2.0 * normal_sf(z.abs())).min(1.0),
        corrected,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    #[default]
    Chi2,
    OddsRatio,
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestKind::Chi2 => "chi2",
            TestKind::OddsRatio => "or",
        })
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chi2" => Ok(TestKind::Chi2),
            "or" | "odds_ratio" => Ok(TestKind::OddsRatio),
            other => Err(Error::Parameter(format!("unknown test {other:?}, expected chi2 or or"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSnp {
    pub index: usize,
    pub snp: String,
    /// Chi-square statistic, or the z-value of the odds-ratio test.
    pub statistic: f64,
    pub p_value: f64,
    /// Set when the test was undefined; such SNPs get `p = 1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// SNPs ordered by ascending p-value, ties by column index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnpRanking {
    pub test: TestKind,
    pub entries: Vec<RankedSnp>,
}

impl SnpRanking {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Column indices of the `k` most significant SNPs.
    pub fn top(&self, k: usize) -> Vec<usize> {
        self.entries.iter().take(k).map(|e| e.index).collect()
    }
}

fn test_snp(t: Result<ContingencyTable>, test: TestKind) -> Result<(f64, f64)> {
    let t = t?;
    match test {
        TestKind::Chi2 => chi_square(&t).map(|c| (c.statistic, c.p_value)),
        TestKind::OddsRatio => odds_ratio(&t).map(|o| (o.z, o.p_value)),
    }
}

/// Tests every SNP and ranks them; an undefined test ranks as `p = 1`.
pub fn rank_snps(case: &SnpMatrix, control: &SnpMatrix, test: TestKind) -> Result<SnpRanking> {
    case.check_same_snps(control)?;
    let mut entries: Vec<RankedSnp> = (0..case.cols())
        .into_par_iter()
        .map(|j| {
            let snp = case.snp_ids()[j].clone();
            match test_snp(contingency(case, control, j), test) {
                Ok((statistic, p_value)) => RankedSnp { index: j, snp, statistic, p_value, error: None },
                Err(e) => RankedSnp { index: j, snp, statistic: 0.0, p_value: 1.0, error: Some(e.to_string()) },
            }
        })
        .collect();
    entries.sort_by(|a, b| a.p_value.total_cmp(&b.p_value).then(a.index.cmp(&b.index)));
    Ok(SnpRanking { test, entries })
}

/// `floor(x)` with slack for products such as `0.05 * 1000` landing just below an integer.
pub(crate) fn floor_count(x: f64) -> usize {
    (x + 1e-9).floor().max(0.0) as usize
}

/// Findings shifted by `delta`: ranks `omega m delta + 1` through
/// `omega m (1 + delta)` (1-based), returned as column indices.
pub fn shift_findings(ranking: &SnpRanking, omega: f64, delta: f64) -> Result<Vec<usize>> {
    let m = ranking.len();
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(Error::Parameter(format!("omega must be in (0, 1], got {omega}")));
    }
    if !(delta >= 0.0) {
        return Err(Error::Parameter(format!("delta must be >= 0, got {delta}")));
    }
    let width = floor_count(omega * m as f64);
    let start = floor_count(omega * m as f64 * delta);
    if start + width > m {
        return Err(Error::Parameter(format!(
            "window of ranks {}..{} exceeds {m} SNPs",
            start + 1,
            start + width
        )));
    }
    Ok(ranking.entries[start..start + width].iter().map(|e| e.index).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Reproducible,
    Suspicious,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub omega: f64,
    pub zeta: f64,
    pub threshold: f64,
    /// Size of the relaxed top window, `floor(omega / zeta * m)`.
    pub window: usize,
    pub reported: usize,
    pub retained: usize,
    pub retention_ratio: f64,
    pub verdict: Verdict,
}

/// Fraction of `reported` SNPs found among the top `omega / zeta * m` SNPs
/// of the shared dataset's ranking.
pub fn validate(
    reported: &[usize],
    shared_ranking: &SnpRanking,
    omega: f64,
    zeta: f64,
    threshold: f64,
) -> Result<ValidationReport> {
    if reported.is_empty() {
        return Err(Error::Parameter("no reported SNPs to validate".into()));
    }
    if !(zeta > 0.0 && zeta <= 1.0) {
        return Err(Error::Parameter(format!("zeta must be in (0, 1], got {zeta}")));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Parameter(format!("threshold must be in [0, 1], got {threshold}")));
    }
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(Error::Parameter(format!("omega must be in (0, 1], got {omega}")));
    }
    let m = shared_ranking.len();
    let window = floor_count(omega / zeta * m as f64).min(m);
    let mut in_window = vec![false; m];
    for idx in shared_ranking.top(window) {
        in_window[idx] = true;
    }
    let retained = reported.iter().filter(|&&j| j < m && in_window[j]).count();
    let retention_ratio = retained as f64 / reported.len() as f64;
    Ok(ValidationReport {
        omega,
        zeta,
        threshold,
        window,
        reported: reported.len(),
        retained,
        retention_ratio,
        verdict: if retention_ratio >= threshold { Verdict::Reproducible } else { Verdict::Suspicious },
    })
}

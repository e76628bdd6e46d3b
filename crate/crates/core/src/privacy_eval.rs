//! Membership-inference auditing (Hamming distance test) and utility metrics.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Genotype, SnpMatrix};
use crate::error::{Error, Result};

/// Distance between two genotype rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distance {
    /// Number of SNPs whose genotypes differ.
    #[default]
    Genotype,
    /// Hamming distance of the 2-bit encodings, which equals `sum |g - h|`.
    Bit,
}

impl Distance {
    #[inline]
    pub fn between(self, a: &[Genotype], b: &[Genotype]) -> usize {
        match self {
            Distance::Genotype => a.iter().zip(b).filter(|(x, y)| x != y).count(),
            Distance::Bit => a.iter().zip(b).map(|(x, y)| x.abs_diff(*y) as usize).sum(),
        }
    }
}

impl FromStr for Distance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "genotype" => Ok(Distance::Genotype),
            "bit" => Ok(Distance::Bit),
            other => Err(Error::Parameter(format!("unknown distance {other:?}"))),
        }
    }
}

/// Population whose minimum distances set the attack threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Calibration {
    /// Each control individual against the rest of the control group.
    #[default]
    LeaveOneOutControl,
    /// Each shared individual against the control group.
    CaseMhd,
}

impl fmt::Display for Calibration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Calibration::LeaveOneOutControl => "leave-one-out-control",
            Calibration::CaseMhd => "case-mhd",
        })
    }
}

impl FromStr for Calibration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "leave-one-out-control" | "loo" => Ok(Calibration::LeaveOneOutControl),
            "case-mhd" => Ok(Calibration::CaseMhd),
            other => Err(Error::Parameter(format!("unknown calibration {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HdtOptions {
    pub false_positive_rate: f64,
    pub calibration: Calibration,
    pub distance: Distance,
}

impl Default for HdtOptions {
    fn default() -> Self {
        HdtOptions {
            false_positive_rate: 0.05,
            calibration: Calibration::default(),
            distance: Distance::default(),
        }
    }
}

/// Minimum distance from `victim` to any row of `rows`.
pub fn min_distance(victim: &[Genotype], rows: &[Vec<Genotype>], distance: Distance) -> usize {
    rows.iter().map(|r| distance.between(victim, r)).min().unwrap_or(usize::MAX)
}

/// Calibrated Hamming-distance-test attacker against one shared dataset.
#[derive(Debug, Clone)]
pub struct HdtModel {
    /// Victims with minimum distance strictly below this are called members.
    pub threshold: f64,
    pub options: HdtOptions,
    /// Sorted minimum distances of the calibration population.
    pub calibration_mhd: Vec<usize>,
    shared_rows: Vec<Vec<Genotype>>,
}

impl HdtModel {
    pub fn snps(&self) -> usize {
        self.shared_rows.first().map_or(0, Vec::len)
    }

    /// Minimum distance from `victim` to the shared dataset.
    pub fn mhd(&self, victim: &[Genotype]) -> usize {
        min_distance(victim, &self.shared_rows, self.options.distance)
    }
}

/// Fits the attack threshold so that at most `false_positive_rate` of the
/// calibration population's minimum distances fall below it.
pub fn hdt_calibrate(shared: &SnpMatrix, control: &SnpMatrix, options: HdtOptions) -> Result<HdtModel> {
    shared.check_same_snps(control)?;
    if control.rows() < 2 {
        return Err(Error::InsufficientData(format!(
            "control group needs at least 2 individuals, got {}",
            control.rows()
        )));
    }
    let fpr = options.false_positive_rate;
    if !(0.0..=1.0).contains(&fpr) {
        return Err(Error::Parameter(format!("false positive rate {fpr} outside [0, 1]")));
    }
    let control_rows = control.to_rows();
    let shared_rows = shared.to_rows();
    let d = options.distance;
    let mut mhd: Vec<usize> = match options.calibration {
        Calibration::LeaveOneOutControl => (0..control_rows.len())
            .into_par_iter()
            .map(|i| {
                control_rows
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != i)
                    .map(|(_, r)| d.between(&control_rows[i], r))
                    .min()
                    .unwrap_or(usize::MAX)
            })
            .collect(),
        Calibration::CaseMhd => shared_rows
            .par_iter()
            .map(|row| min_distance(row, &control_rows, d))
            .collect(),
    };
    mhd.sort_unstable();
    let k = ((fpr * mhd.len() as f64 + 1e-9).floor() as usize).min(mhd.len() - 1);
    Ok(HdtModel { threshold: mhd[k] as f64, options, calibration_mhd: mhd, shared_rows })
}

/// Member iff the victim's minimum distance to the shared dataset is below the threshold.
pub fn hdt_attack(model: &HdtModel, victim: &[Genotype]) -> Result<bool> {
    if victim.len() != model.snps() {
        return Err(Error::Dimension(format!(
            "victim has {} genotypes, model expects {}",
            victim.len(),
            model.snps()
        )));
    }
    Ok((model.mhd(victim) as f64) < model.threshold)
}

/// Recall of the attack over true members.
pub fn attack_power(model: &HdtModel, members: &SnpMatrix) -> Result<f64> {
    if members.cols() != model.snps() {
        return Err(Error::Dimension(format!(
            "members have {} SNPs, model expects {}",
            members.cols(),
            model.snps()
        )));
    }
    let rows = members.to_rows();
    let hits = rows
        .par_iter()
        .map(|r| hdt_attack(model, r))
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&m| m)
        .count();
    Ok(hits as f64 / rows.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    pub point_error: f64,
    pub sample_error: f64,
    pub mean_error: f64,
    pub variance_error: f64,
}

fn mean_var(values: &[Genotype]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().map(|&g| g as f64).sum::<f64>() / n;
    let var = values.iter().map(|&g| (g as f64 - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// Point, sample, mean and (population) variance errors between two datasets.
pub fn utility_metrics(original: &SnpMatrix, shared: &SnpMatrix) -> Result<UtilityReport> {
    original.check_same_shape(shared)?;
    let cells = (original.rows() * original.cols()) as f64;
    let (mut mismatched, mut l1) = (0usize, 0usize);
    for (a, b) in original.values().iter().zip(shared.values()) {
        if a != b {
            mismatched += 1;
            l1 += a.abs_diff(*b) as usize;
        }
    }
    let (m0, v0) = mean_var(original.values());
    let (m1, v1) = mean_var(shared.values());
    Ok(UtilityReport {
        point_error: mismatched as f64 / cells,
        sample_error: l1 as f64 / cells,
        mean_error: (m0 - m1).abs(),
        variance_error: (v0 - v1).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[Vec<u8>]) -> SnpMatrix {
        SnpMatrix::from_rows_default_ids(rows).unwrap()
    }

    #[test]
    fn identical_row_has_zero_mhd() {
        let rows = vec![vec![0, 1, 2], vec![2, 2, 2]];
        assert_eq!(min_distance(&[2, 2, 2], &rows, Distance::Genotype), 0);
        assert_eq!(min_distance(&[0, 0, 2], &rows, Distance::Genotype), 1);
        assert_eq!(min_distance(&[0, 0, 2], &rows, Distance::Bit), 1);
        assert_eq!(Distance::Bit.between(&[0, 2], &[2, 1]), 3);
    }

    #[test]
    fn expected_distance_of_independent_rows() {
        // Two independent uniform genotype rows differ at each SNP w.p. 2/3.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let snps = 30;
        let trials = 2000;
        let mut total = 0usize;
        for _ in 0..trials {
            let a: Vec<u8> = (0..snps).map(|_| rng.random_range(0..3)).collect();
            let b: Vec<u8> = (0..snps).map(|_| rng.random_range(0..3)).collect();
            total += min_distance(&a, &[b], Distance::Genotype);
        }
        let mean = total as f64 / trials as f64;
        assert!((mean - snps as f64 * 2.0 / 3.0).abs() < 0.3, "{mean}");
    }

    #[test]
    fn members_of_raw_shared_data_are_detected() {
        let (case, control) = crate::data::generate_synthetic(
            &crate::data::SyntheticParams { n_case: 60, n_control: 60, snps: 200, n_assoc: 10, maf_shift: 0.25 },
            4,
        )
        .unwrap();
        let model = hdt_calibrate(&case, &control, HdtOptions::default()).unwrap();
        assert!(model.threshold > 0.0);
        assert!(hdt_attack(&model, &case.row(3)).unwrap());
        assert_eq!(attack_power(&model, &case).unwrap(), 1.0);
        let far = vec![2u8; 200];
        let anti: Vec<u8> = case.row(0).iter().map(|&g| if g == 0 { 2 } else { 0 }).collect();
        assert!(!hdt_attack(&HdtModel { threshold: 1.0, ..model.clone() }, &far).unwrap());
        let solo = hdt_calibrate(&m(&[case.row(0)]), &control, HdtOptions::default()).unwrap();
        assert!(!hdt_attack(&solo, &anti).unwrap());
        assert!(hdt_attack(&model, &[0, 1]).is_err());
    }

    #[test]
    fn threshold_monotone_in_fpr() {
        let (case, control) = crate::data::generate_synthetic(
            &crate::data::SyntheticParams { n_case: 30, n_control: 50, snps: 80, n_assoc: 0, maf_shift: 0.0 },
            8,
        )
        .unwrap();
        let mut last = f64::NEG_INFINITY;
        for fpr in [0.0, 0.05, 0.1, 0.3, 0.6, 1.0] {
            let opts = HdtOptions { false_positive_rate: fpr, ..HdtOptions::default() };
            let model = hdt_calibrate(&case, &control, opts).unwrap();
            let below = model.calibration_mhd.iter().filter(|&&d| (d as f64) < model.threshold).count();
            assert!(below as f64 <= fpr * model.calibration_mhd.len() as f64 + 1e-9);
            assert!(model.threshold >= last);
            last = model.threshold;
        }
        let case_variant = HdtOptions { calibration: Calibration::CaseMhd, ..HdtOptions::default() };
        assert_eq!(hdt_calibrate(&case, &control, case_variant).unwrap().calibration_mhd.len(), 30);
    }

    #[test]
    fn tiny_control_is_rejected() {
        let d = m(&[vec![0, 1]]);
        assert!(matches!(hdt_calibrate(&d, &d, HdtOptions::default()), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn utility_examples() {
        let a = m(&[vec![0, 1], vec![2, 0]]);
        let zero = utility_metrics(&a, &a).unwrap();
        assert_eq!(zero, UtilityReport { point_error: 0.0, sample_error: 0.0, mean_error: 0.0, variance_error: 0.0 });

        let lo = m(&[vec![0, 0], vec![0, 0]]);
        let hi = m(&[vec![2, 2], vec![2, 2]]);
        let r = utility_metrics(&lo, &hi).unwrap();
        assert_eq!((r.point_error, r.sample_error, r.mean_error, r.variance_error), (1.0, 2.0, 2.0, 0.0));

        let r = utility_metrics(&m(&[vec![0, 1]]), &m(&[vec![0, 2]])).unwrap();
        assert_eq!((r.point_error, r.sample_error), (0.5, 0.5));
        assert!(utility_metrics(&a, &m(&[vec![0, 1]])).is_err());
    }

    fn row(len: usize) -> impl Strategy<Value = Vec<u8>> {
        proptest::collection::vec(0u8..3, len)
    }

    proptest! {
        #[test]
        fn hamming_is_a_metric(a in row(12), b in row(12), c in row(12)) {
            for d in [Distance::Genotype, Distance::Bit] {
                prop_assert_eq!(d.between(&a, &b), d.between(&b, &a));
                prop_assert_eq!(d.between(&a, &b) == 0, a == b);
                prop_assert!(d.between(&a, &c) <= d.between(&a, &b) + d.between(&b, &c));
            }
        }

        #[test]
        fn point_and_sample_error_bounds(a in row(24), b in row(24)) {
            let x = SnpMatrix::from_columns(4, a, crate::data::matrix::default_ids(6)).unwrap();
            let y = SnpMatrix::from_columns(4, b, crate::data::matrix::default_ids(6)).unwrap();
            let r = utility_metrics(&x, &y).unwrap();
            let s = utility_metrics(&y, &x).unwrap();
            prop_assert!(r.point_error <= r.sample_error + 1e-15);
            prop_assert!(r.sample_error <= 2.0 * r.point_error + 1e-15);
            prop_assert!((0.0..=1.0).contains(&r.point_error));
            prop_assert_eq!(r.point_error, s.point_error);
            prop_assert_eq!(r.sample_error, s.sample_error);
        }
    }
}

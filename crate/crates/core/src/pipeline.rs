//! End-to-end sharing: budget split, the two stages, and experiment sweeps.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::calibration::{self, KappaVariant, NoiseProfile, DEFAULT_SMOOTHING};
use crate::data::{self, encode, SnpMatrix, SyntheticParams};
use crate::error::{Error, Result};
use crate::gwas::{self, TestKind};
use crate::perturbation;
use crate::privacy_eval::{self, HdtOptions, UtilityReport};
use crate::restoration::{self, ColumnDiagnostics};
use crate::seed::{self, Domain};

/// Fraction of the total budget spent on the XOR stage by default.
pub const DEFAULT_SPLIT: f64 = 0.2;

/// Total budget and its split between the XOR stage and the count queries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub eps_total: f64,
    pub split_x: f64,
    pub eps_x: f64,
    pub eps_c: f64,
}

impl PrivacyBudget {
    pub fn new(eps_total: f64, split_x: f64) -> Result<Self> {
        if !(eps_total > 0.0 && eps_total.is_finite()) {
            return Err(Error::Parameter(format!("epsilon must be positive, got {eps_total}")));
        }
        if !(split_x > 0.0 && split_x < 1.0) {
            return Err(Error::Parameter(format!("split must be in (0, 1), got {split_x}")));
        }
        let eps_x = split_x * eps_total;
        Ok(PrivacyBudget { eps_total, split_x, eps_x, eps_c: eps_total - eps_x })
    }

    /// Budget with `eps_x = ratio * eps_c`.
    pub fn from_ratio(eps_total: f64, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0) {
            return Err(Error::Parameter(format!("ratio must be positive, got {ratio}")));
        }
        Self::new(eps_total, ratio / (1.0 + ratio))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SanitizeOptions {
    pub budget: PrivacyBudget,
    pub kappa_variant: KappaVariant,
    pub smoothing: f64,
}

impl SanitizeOptions {
    pub fn new(budget: PrivacyBudget) -> Self {
        SanitizeOptions { budget, kappa_variant: KappaVariant::default(), smoothing: DEFAULT_SMOOTHING }
    }
}

/// Output of [`sanitize`]: the shared dataset and the intermediate artefacts.
#[derive(Debug, Clone)]
pub struct Sanitized {
    /// The dataset to publish.
    pub shared: SnpMatrix,
    /// Stage-one output before restoration.
    pub perturbed: SnpMatrix,
    pub profile: NoiseProfile,
    pub budget: PrivacyBudget,
    pub diagnostics: Vec<ColumnDiagnostics>,
}

/// Calibrates noise on `reference`, perturbs `d`, then restores its per-SNP
/// genotype distributions from Laplace-noised counts.
///
/// The output is `(eps_x + eps_c)`-differentially private by sequential
/// composition.
pub fn sanitize(d: &SnpMatrix, reference: &SnpMatrix, options: &SanitizeOptions, seed: u64) -> Result<Sanitized> {
    if reference.cols() != d.cols() {
        return Err(Error::Dimension(format!(
            "reference has {} SNPs, dataset has {}",
            reference.cols(),
            d.cols()
        )));
    }
    let budget = options.budget;
    let stats = calibration::theta_tilde_stats(&encode(reference), options.smoothing)?;
    let profile = calibration::calibrate(&stats, budget.eps_x, d.cols(), options.kappa_variant)?;
    let perturbed = perturbation::perturb(d, &profile, seed)?;
    let (shared, diagnostics) = restoration::restore_detailed(&perturbed, d, budget.eps_c, seed)?;
    Ok(Sanitized { shared, perturbed, profile, budget, diagnostics })
}

/// Mean and 95% t-interval over trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub values: Vec<f64>,
}

impl Summary {
    pub fn of(values: Vec<f64>) -> Self {
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        if values.len() < 2 {
            return Summary { mean, ci_low: mean, ci_high: mean, values };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
        let t = StudentsT::new(0.0, 1.0, k - 1.0)
            .expect("degrees of freedom are positive")
            .inverse_cdf(0.975);
        let half = t * (var / k).sqrt();
        Summary { mean, ci_low: mean - half, ci_high: mean + half, values }
    }

    pub fn overlaps(&self, other: &Summary) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

fn default_trials() -> usize {
    5
}
fn default_split() -> f64 {
    DEFAULT_SPLIT
}
fn default_omega() -> f64 {
    0.05
}
fn default_zeta() -> f64 {
    0.7
}
fn default_threshold() -> f64 {
    0.5
}
fn default_smoothing() -> f64 {
    DEFAULT_SMOOTHING
}
fn default_deltas() -> Vec<f64> {
    vec![0.0]
}

/// Experiment grid, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub epsilons: Vec<f64>,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_split")]
    pub split: f64,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default = "default_zeta")]
    pub zeta: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub test: TestKind,
    #[serde(default)]
    pub kappa: KappaVariant,
    #[serde(default = "default_smoothing")]
    pub smoothing: f64,
    #[serde(default)]
    pub hdt: Option<HdtOptions>,
    /// Generate data instead of reading `case` / `control`.
    #[serde(default)]
    pub synthetic: Option<SyntheticParams>,
    #[serde(default)]
    pub case: Option<PathBuf>,
    #[serde(default)]
    pub control: Option<PathBuf>,
    /// Calibration reference; defaults to the control group.
    #[serde(default)]
    pub reference: Option<PathBuf>,
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.epsilons.is_empty() || self.deltas.is_empty() {
            return bad("epsilon and delta grids must be non-empty".into());
        }
        if let Some(e) = self.epsilons.iter().find(|&&e| !(e > 0.0 && e.is_finite())) {
            return bad(format!("epsilon {e} must be positive"));
        }
        if let Some(d) = self.deltas.iter().find(|&&d| !(d >= 0.0)) {
            return bad(format!("delta {d} must be >= 0"));
        }
        match (&self.synthetic, &self.case, &self.control) {
            (Some(_), None, None) | (None, Some(_), Some(_)) => Ok(()),
            _ => bad("give either [synthetic] or both case and control paths".into()),
        }
    }

    fn load(&self) -> Result<(SnpMatrix, SnpMatrix, SnpMatrix)> {
        let (case, control) = match (&self.synthetic, &self.case, &self.control) {
            (Some(p), _, _) => data::generate_synthetic(p, self.seed)?,
            (None, Some(case), Some(control)) => (data::read_dataset(case)?, data::read_dataset(control)?),
            _ => return Err(Error::Config("no data source".into())),
        };
        let reference = match &self.reference {
            Some(path) => data::read_dataset(path)?,
            None => control.clone(),
        };
        Ok((case, control, reference))
    }
}

/// One `(epsilon, delta)` cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub delta: f64,
    pub budget: PrivacyBudget,
    pub retention: Summary,
    pub attack_power: Summary,
    pub point_error: Summary,
    pub sample_error: Summary,
    pub mean_error: Summary,
    pub variance_error: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    /// Attack power against the unprotected case group.
    pub raw_attack_power: f64,
    pub rows: Vec<SweepRow>,
}

struct TrialOutcome {
    retention: Vec<f64>,
    attack_power: f64,
    utility: UtilityReport,
}

/// Runs every `(epsilon, trial)` sanitisation and scores it for every delta.
///
/// Trial `t` uses the same derived seed at every epsilon.
pub fn sweep(config: &SweepConfig) -> Result<SweepReport> {
    config.validate()?;
    let (case, control, reference) = config.load()?;
    let hdt = config.hdt.unwrap_or_default();
    let original = gwas::rank_snps(&case, &control, config.test)?;
    let reported: Vec<Vec<usize>> = config
        .deltas
        .iter()
        .map(|&d| gwas::shift_findings(&original, config.omega, d))
        .collect::<Result<_>>()?;
    let raw_model = privacy_eval::hdt_calibrate(&case, &control, hdt)?;
    let raw_attack_power = privacy_eval::attack_power(&raw_model, &case)?;

    let cells: Vec<(usize, usize)> = (0..config.epsilons.len())
        .flat_map(|e| (0..config.trials).map(move |t| (e, t)))
        .collect();
    let outcomes: Vec<TrialOutcome> = cells
        .par_iter()
        .map(|&(e, t)| {
            let budget = PrivacyBudget::new(config.epsilons[e], config.split)?;
            let options = SanitizeOptions { budget, kappa_variant: config.kappa, smoothing: config.smoothing };
            let trial_seed = seed::derive(config.seed, Domain::Sweep, t as u64);
            let out = sanitize(&case, &reference, &options, trial_seed)?;
            let shared_rank = gwas::rank_snps(&out.shared, &control, config.test)?;
            let retention = reported
                .iter()
                .map(|r| {
                    gwas::validate(r, &shared_rank, config.omega, config.zeta, config.threshold)
                        .map(|v| v.retention_ratio)
                })
                .collect::<Result<_>>()?;
            let model = privacy_eval::hdt_calibrate(&out.shared, &control, hdt)?;
            Ok(TrialOutcome {
                retention,
                attack_power: privacy_eval::attack_power(&model, &case)?,
                utility: privacy_eval::utility_metrics(&case, &out.shared)?,
            })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(config.epsilons.len() * config.deltas.len());
    for (e, &epsilon) in config.epsilons.iter().enumerate() {
        let trials = &outcomes[e * config.trials..(e + 1) * config.trials];
        let collect = |f: &dyn Fn(&TrialOutcome) -> f64| Summary::of(trials.iter().map(f).collect());
        for (d, &delta) in config.deltas.iter().enumerate() {
            rows.push(SweepRow {
                epsilon,
                delta,
                budget: PrivacyBudget::new(epsilon, config.split)?,
                retention: collect(&|o| o.retention[d]),
                attack_power: collect(&|o| o.attack_power),
                point_error: collect(&|o| o.utility.point_error),
                sample_error: collect(&|o| o.utility.sample_error),
                mean_error: collect(&|o| o.utility.mean_error),
                variance_error: collect(&|o| o.utility.variance_error),
            });
        }
    }
    Ok(SweepReport { config: config.clone(), raw_attack_power, rows })
}

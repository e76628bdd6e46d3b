//! Differentially private sharing of SNP genotype datasets, and the
//! verifier-side toolkit to check GWAS findings against the shared copy.
//!
//! Sharing runs in two stages. The genotype matrix is encoded two bits per
//! SNP and XOR-ed with noise bits whose flip probabilities are calibrated from
//! the column associations of a public reference dataset
//! ([`calibration`], [`perturbation`]). Per-SNP genotype counts of the
//! original data are then released under the Laplace mechanism and the
//! perturbed columns are moved toward them by one-dimensional optimal
//! transport ([`restoration`]). [`pipeline::sanitize`] runs both.
//!
//! ```
//! use genoshare::data::{generate_synthetic, SyntheticParams};
//! use genoshare::gwas::{rank_snps, shift_findings, validate, TestKind};
//! use genoshare::pipeline::{sanitize, PrivacyBudget, SanitizeOptions};
//!
//! let params = SyntheticParams { n_case: 50, n_control: 50, snps: 100, n_assoc: 5, maf_shift: 0.3 };
//! let (case, control) = generate_synthetic(&params, 7).unwrap();
//! let options = SanitizeOptions::new(PrivacyBudget::new(1.5, 0.2).unwrap());
//! let shared = sanitize(&case, &control, &options, 7).unwrap().shared;
//!
//! let findings = shift_findings(&rank_snps(&case, &control, TestKind::Chi2).unwrap(), 0.05, 0.0).unwrap();
//! let check = rank_snps(&shared, &control, TestKind::Chi2).unwrap();
//! let report = validate(&findings, &check, 0.05, 0.7, 0.5).unwrap();
//! assert!((0.0..=1.0).contains(&report.retention_ratio));
//! ```

// Negated float comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod calibration;
pub mod data;
pub mod error;
pub mod gwas;
pub mod perturbation;
pub mod pipeline;
pub mod privacy_eval;
pub mod restoration;
pub mod seed;
pub mod special;

pub use error::{Error, Result};

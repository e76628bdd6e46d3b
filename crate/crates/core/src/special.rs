//! Survival functions backing the association-test p-values.

use statrs::function::{erf, gamma};

use crate::error::{Error, Result};

/// `P(X > x)` for `X ~ chi^2(df)`, as the regularised upper incomplete
/// gamma function `Q(df / 2, x / 2)`.
pub fn chi2_sf(x: f64, df: u32) -> Result<f64> {
    if df == 0 {
        return Err(Error::Parameter("chi-square needs at least one degree of freedom".into()));
    }
    if !(x >= 0.0) {
        return Err(Error::Parameter(format!("chi-square statistic must be >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(gamma::gamma_ur(df as f64 / 2.0, x / 2.0))
}

/// Upper tail of the standard normal, `erfc(z / sqrt 2) / 2`.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erf::erfc(z / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn df2_is_exponential() {
        for &x in &[0.1, 1.0, 5.0, 20.0, 60.0, 300.0] {
            assert!(rel(chi2_sf(x, 2).unwrap(), (-x / 2.0).exp()) < 1e-10, "x={x}");
        }
    }

    #[test]
    fn df1_matches_normal_two_sided() {
        // chi^2(1) is the square of a standard normal.
        for &z in &[0.3, 1.0, 1.959964, 3.0, 5.0] {
            let a = chi2_sf(z * z, 1).unwrap();
            let b = 2.0 * normal_sf(z);
            assert!(rel(a, b) < 1e-10, "z={z}: {a} vs {b}");
        }
    }

    #[test]
    fn normal_reference_points() {
        assert_eq!(normal_sf(0.0), 0.5);
        assert!((normal_sf(1.959964) - 0.025).abs() < 1e-6);
        // Phi(-3) = 0.0013498980316301 (standard table value).
        assert!(rel(normal_sf(3.0), 0.001_349_898_031_630_1) < 1e-10);
        assert!((normal_sf(-1.0) + normal_sf(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn domain() {
        assert!(chi2_sf(-1.0, 2).is_err());
        assert!(chi2_sf(1.0, 0).is_err());
        assert!(chi2_sf(f64::NAN, 1).is_err());
        assert_eq!(chi2_sf(0.0, 1).unwrap(), 1.0);
    }
}

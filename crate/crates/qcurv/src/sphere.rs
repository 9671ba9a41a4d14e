//! GJMS spectra on the round sphere `S^n`.
//!
//! On `S^n` the operator `P_{2k}` diagonalises over spherical harmonics, with
//! the eigenvalue on degree-`l` harmonics given by the factored product
//! `λ_{k,l} = Π_{j=1}^{k} ( l(l+n-1) + (n+2j-2)(n-2j)/4 )`.
//!
//! The module computes these eigenvalues and the harmonic multiplicities
//! exactly, certifies coercivity of the quadratic form, checks that the
//! bottom eigenvalue reproduces the sharp constant from [`crate::energy`],
//! and probes positivity of the Green's function of `P_{2k}` through its
//! zonal eigenfunction expansion with a certified tail bound.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::energy::threshold_rational;
use crate::error::Error;
use crate::exactnum::{factorial, gamma_half, sphere_volume, HalfInt};
use crate::Result;

/// A sphere problem: dimension `n`, operator order half `k`, and the
/// truncation degree `l_max` used by the spectral probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SphereSpec {
    pub n: i64,
    pub k: i64,
    pub l_max: u32,
}

impl SphereSpec {
    pub fn new(n: i64, k: i64, l_max: u32) -> Result<Self> {
        if k < 1 {
            return Err(Error::domain(format!("sphere spec requires k >= 1, got k = {k}")));
        }
        if n <= 2 * k {
            return Err(Error::domain(format!(
                "sphere spec requires n > 2k, got n = {n}, k = {k}"
            )));
        }
        Ok(SphereSpec { n, k, l_max })
    }
}

/// The `j`-th factor `l(l+n-1) + (n+2j-2)(n-2j)/4` of the eigenvalue product.
fn eigenvalue_factor(n: i64, j: i64, l: i64) -> BigRational {
    let quad = BigInt::from(l) * BigInt::from(l + n - 1);
    let shift = BigRational::new(BigInt::from((n + 2 * j - 2) * (n - 2 * j)), BigInt::from(4));
    BigRational::from_integer(quad) + shift
}

/// Eigenvalue of `P_{2k}` on degree-`l` spherical harmonics, exactly.
///
/// The bottom eigenvalue is the rational part of the sharp constant:
///
/// ```
/// use qcurv::sphere::gjms_eigenvalue;
/// assert_eq!(gjms_eigenvalue(5, 2, 0).unwrap().to_string(), "105/16");
/// ```
pub fn gjms_eigenvalue(n: i64, k: i64, l: i64) -> Result<BigRational> {
    if k < 1 || n <= 2 * k {
        return Err(Error::domain(format!(
            "eigenvalue requires k >= 1 and n > 2k, got n = {n}, k = {k}"
        )));
    }
    if l < 0 {
        return Err(Error::domain(format!("harmonic degree must be >= 0, got l = {l}")));
    }
    let mut prod = BigRational::one();
    for j in 1..=k {
        prod *= eigenvalue_factor(n, j, l);
    }
    Ok(prod)
}

/// Dimension of the space of degree-`l` spherical harmonics on `S^n`:
/// `(2l+n-1) (l+n-2)! / (l! (n-1)!)`.
pub fn harmonic_dimension(n: i64, l: i64) -> Result<BigInt> {
    if n < 2 {
        return Err(Error::domain(format!("harmonic spaces need n >= 2, got n = {n}")));
    }
    if l < 0 {
        return Err(Error::domain(format!("harmonic degree must be >= 0, got l = {l}")));
    }
    let num = BigInt::from(2 * l + n - 1) * factorial((l + n - 2) as u64);
    let den = factorial(l as u64) * factorial((n - 1) as u64);
    debug_assert!((&num % &den).is_zero());
    Ok(num / den)
}

/// Outcome of the coercivity scan over `0 <= l <= l_max`.
#[derive(Debug, Clone)]
pub struct CoercivityReport {
    /// Smallest eigenvalue found, as an exact rational.
    pub min_eigenvalue: BigRational,
    /// Degree at which the minimum is attained.
    pub min_degree: i64,
    /// Whether every eigenvalue in the range is strictly positive.
    pub positive: bool,
    /// Whether every factor of the product is nondecreasing in `l`.
    pub factors_monotone: bool,
}

/// Scans the spectrum up to `l_max`, returning the exact minimum together
/// with positivity and monotonicity flags. Each factor of the eigenvalue
/// product is increasing in `l`, so a positive bottom eigenvalue certifies
/// coercivity for all degrees, not just the scanned range.
pub fn coercivity_check(spec: &SphereSpec) -> Result<CoercivityReport> {
    let (n, k) = (spec.n, spec.k);
    let mut min_eigenvalue = gjms_eigenvalue(n, k, 0)?;
    let mut min_degree = 0i64;
    let mut positive = min_eigenvalue.is_positive();
    let mut factors_monotone = true;
    let mut prev_factors: Vec<BigRational> =
        (1..=k).map(|j| eigenvalue_factor(n, j, 0)).collect();
    for l in 1..=(spec.l_max as i64) {
        let factors: Vec<BigRational> = (1..=k).map(|j| eigenvalue_factor(n, j, l)).collect();
        factors_monotone &= factors.iter().zip(&prev_factors).all(|(f, p)| f >= p);
        let lambda: BigRational = factors.iter().product();
        positive &= lambda.is_positive();
        if lambda < min_eigenvalue {
            min_eigenvalue = lambda;
            min_degree = l;
        }
        prev_factors = factors;
    }
    Ok(CoercivityReport { min_eigenvalue, min_degree, positive, factors_monotone })
}

/// Checks that the bottom eigenvalue `λ_{k,0}` equals the sharp constant
/// `Λ(n,k) / ω_n^{2k/n}` exactly.
pub fn sharpness_check(n: i64, k: i64) -> Result<bool> {
    let bottom = gjms_eigenvalue(n, k, 0)?;
    let thr = threshold_rational(n, k)?
        .as_rational()
        .ok_or_else(|| Error::domain("threshold is not rational"))?;
    Ok(bottom == thr)
}

/// Zonal eigenfunction values `P_l(t) = C_l^λ(t) / C_l^λ(1)` with
/// `λ = (n-1)/2`, normalised so `P_l(1) = 1` and `|P_l| <= 1` on `[-1, 1]`.
///
/// Computed by the three-term recurrence
/// `(l + 2λ - 1) P_l = 2 (l + λ - 1) t P_{l-1} - (l - 1) P_{l-2}`,
/// which is stable because every iterate stays in `[-1, 1]`.
pub fn zonal_values(n: i64, t: f64, l_max: u32) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::domain(format!("zonal values need n >= 2, got n = {n}")));
    }
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("zonal argument must lie in [-1, 1], got {t}")));
    }
    let lambda = (n - 1) as f64 / 2.0;
    let mut vals = Vec::with_capacity(l_max as usize + 1);
    vals.push(1.0);
    if l_max >= 1 {
        vals.push(t);
    }
    for l in 2..=(l_max as i64) {
        let lf = l as f64;
        let next = (2.0 * (lf + lambda - 1.0) * t * vals[l as usize - 1]
            - (lf - 1.0) * vals[l as usize - 2])
            / (lf + 2.0 * lambda - 1.0);
        vals.push(next);
    }
    Ok(vals)
}

/// Result of the zonal Green's function probe at one angle.
#[derive(Debug, Clone, Serialize)]
pub struct ZonalProbe {
    /// Geodesic angle `θ` between source and evaluation point.
    pub theta: f64,
    /// Partial sum of the zonal series through degree `l_max` (at `θ = π`,
    /// the Abel-regularised partial sum).
    pub value: f64,
    /// Certified bound on the omitted tail.
    pub tail_bound: f64,
    /// Whether the tail bound is valid for these parameters.
    pub conclusive: bool,
    /// `conclusive` and `value - tail_bound > 0`.
    pub positivity_certified: bool,
    /// Number of series terms summed.
    pub terms_used: u32,
}

/// Coefficients `a_l = dim H_l / (ω_n λ_{k,l})` of the zonal Green's series
/// for `l = 0, ..., l_hi`, as f64. The dimension is carried incrementally
/// through the binomial recurrence so the cost is linear in `l_hi`; the
/// magnitudes involved stay far below f64 overflow at the degrees used here.
fn zonal_coefficients(spec: &SphereSpec, omega_n: f64, l_hi: i64) -> Vec<f64> {
    let (n, k) = (spec.n, spec.k);
    let mut coeffs = Vec::with_capacity(l_hi as usize + 1);
    // binom = C(l + n - 2, l); dim H_l = (2l + n - 1) / (n - 1) · binom.
    let mut binom = 1.0f64;
    for l in 0..=l_hi {
        if l > 0 {
            binom *= (l + n - 2) as f64 / l as f64;
        }
        let dim = (2 * l + n - 1) as f64 / (n - 1) as f64 * binom;
        let lambda: f64 = (1..=k)
            .map(|j| {
                (l * (l + n - 1)) as f64 + ((n + 2 * j - 2) * (n - 2 * j)) as f64 / 4.0
            })
            .product();
        coeffs.push(dim / (omega_n * lambda));
    }
    coeffs
}

/// Centring constant for the alternating branch: the limit of `a_l`,
/// `2 / ((n-1)! ω_n)`, when `n = 2k + 1` (the series exponents balance
/// exactly there). For `n >= 2k + 2` the coefficients grow without bound
/// and no centring helps; zero is returned and the monotonicity check in
/// the caller reports the probe inconclusive.
fn coefficient_limit(spec: &SphereSpec, omega_n: f64) -> f64 {
    if spec.n == 2 * spec.k + 1 {
        2.0 / (factorial((spec.n - 1) as u64).to_f64().unwrap() * omega_n)
    } else {
        0.0
    }
}

/// Partial sum of the zonal expansion of the Green's function of `P_{2k}`
/// at geodesic angle `θ ∈ (0, π]`, with a certified tail bound.
///
/// For `θ < π` the tail uses the uniform zonal decay
/// `|P_l(cos θ)| <= (Γ(n/2)/√π) (π² / (2 l sin²θ))^{(n-1)/2}`
/// together with `a_l <= 3·2^{n-2} l^{n-1-2k} / ((n-1)! ω_n)` for `l >= n`;
/// the summed tail converges iff `(n-1)/2 - 2k < -1`, and the probe is
/// marked inconclusive otherwise or when `l_max < n`.
///
/// At `θ = π` the series is alternating with `P_l(-1) = (-1)^l`. The value
/// is Abel-regularised against the coefficient limit and the tail is the
/// first omitted term, certified by an explicit monotonicity check of the
/// centred coefficients over `[l_max + 1, 4 l_max]`.
///
/// ```
/// use qcurv::sphere::{green_zonal_partial_sum, SphereSpec};
/// let spec = SphereSpec::new(5, 2, 400).unwrap();
/// let probe = green_zonal_partial_sum(&spec, std::f64::consts::PI).unwrap();
/// assert!(probe.positivity_certified);
/// ```
pub fn green_zonal_partial_sum(spec: &SphereSpec, theta: f64) -> Result<ZonalProbe> {
    if !theta.is_finite() || theta <= 0.0 || theta > std::f64::consts::PI {
        return Err(Error::domain(format!(
            "probe angle must lie in (0, π], got {theta}"
        )));
    }
    let (n, k) = (spec.n, spec.k);
    let big_l = spec.l_max as i64;
    let omega_n = sphere_volume(n as u32)?.to_f64();

    if theta == std::f64::consts::PI {
        // Alternating branch: sum (-1)^l (a_l - c) + c/2, tail = first
        // omitted centred term once |a_l - c| is checked nonincreasing.
        let c = coefficient_limit(spec, omega_n);
        let coeffs = zonal_coefficients(spec, omega_n, 4 * big_l);
        let mut value = c / 2.0;
        for l in 0..=big_l {
            let b = coeffs[l as usize] - c;
            value += if l % 2 == 0 { b } else { -b };
        }
        let mut prev = f64::INFINITY;
        let mut monotone = true;
        for l in (big_l + 1)..=(4 * big_l) {
            let b = (coeffs[l as usize] - c).abs();
            monotone &= b <= prev;
            prev = b;
        }
        let tail_bound = (coeffs[big_l as usize + 1] - c).abs();
        let conclusive = monotone && big_l >= 1;
        return Ok(ZonalProbe {
            theta,
            value,
            tail_bound,
            conclusive,
            positivity_certified: conclusive && value - tail_bound > 0.0,
            terms_used: spec.l_max + 1,
        });
    }

    let zonal = zonal_values(n, theta.cos(), spec.l_max)?;
    let coeffs = zonal_coefficients(spec, omega_n, big_l);
    let value: f64 = (0..=big_l)
        .map(|l| coeffs[l as usize] * zonal[l as usize])
        .sum();

    // Tail: Σ_{l > L} a_l |P_l| <= Ca · K(θ) · Σ_{l > L} l^{q}  with
    // q = (n-1)/2 - 2k, bounded by L^{q+1} / (-q-1) when q < -1.
    let lambda = (n - 1) as f64 / 2.0;
    let q = lambda - (2 * k) as f64;
    let conclusive = q < -1.0 && big_l >= n;
    let gamma_n_half = gamma_half(HalfInt::from_twice(n))?.to_f64();
    let kay = gamma_n_half / std::f64::consts::PI.sqrt()
        * (std::f64::consts::PI.powi(2) / (2.0 * theta.sin().powi(2))).powf(lambda);
    let ca = 3.0 * 2f64.powi((n - 2) as i32)
        / (factorial((n - 1) as u64).to_f64().unwrap() * omega_n);
    let tail_bound = if conclusive {
        ca * kay * (big_l as f64).powf(q + 1.0) / (-q - 1.0)
    } else {
        f64::INFINITY
    };

    Ok(ZonalProbe {
        theta,
        value,
        tail_bound,
        conclusive,
        positivity_certified: conclusive && value - tail_bound > 0.0,
        terms_used: spec.l_max + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::rational_to_f64;
    use num_traits::FromPrimitive;

    fn rat(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    #[test]
    fn eigenvalue_spot_values() {
        assert_eq!(gjms_eigenvalue(5, 1, 0).unwrap(), rat(15, 4));
        assert_eq!(gjms_eigenvalue(5, 2, 0).unwrap(), rat(105, 16));
        // l = 1 on S^5, k = 1: 1·5 + 15/4 = 35/4.
        assert_eq!(gjms_eigenvalue(5, 1, 1).unwrap(), rat(35, 4));
    }

    #[test]
    fn eigenvalue_rejects_bad_parameters() {
        assert!(gjms_eigenvalue(5, 0, 0).is_err());
        assert!(gjms_eigenvalue(4, 2, 0).is_err());
        assert!(gjms_eigenvalue(5, 2, -1).is_err());
    }

    #[test]
    fn eigenvalues_positive_on_grid() {
        for k in 1..=5 {
            for n in (2 * k + 1)..=(2 * k + 10) {
                for l in 0..=12 {
                    assert!(
                        gjms_eigenvalue(n, k, l).unwrap().is_positive(),
                        "n = {n}, k = {k}, l = {l}"
                    );
                }
            }
        }
    }

    #[test]
    fn harmonic_dimension_spot_values() {
        assert_eq!(harmonic_dimension(5, 0).unwrap(), BigInt::from(1));
        assert_eq!(harmonic_dimension(5, 1).unwrap(), BigInt::from(6));
        assert_eq!(harmonic_dimension(5, 2).unwrap(), BigInt::from(20));
        assert_eq!(harmonic_dimension(4, 2).unwrap(), BigInt::from(14));
        // S^2: dim H_l = 2l + 1.
        assert_eq!(harmonic_dimension(2, 3).unwrap(), BigInt::from(7));
        for n in 2..=12 {
            assert_eq!(harmonic_dimension(n, 1).unwrap(), BigInt::from(n + 1));
        }
    }

    #[test]
    fn harmonic_dimension_matches_binomial_difference() {
        // dim H_l = C(n+l, l) - C(n+l-2, l-2).
        fn binom(n: i64, k: i64) -> BigInt {
            if k < 0 || k > n {
                return BigInt::zero();
            }
            factorial(n as u64) / (factorial(k as u64) * factorial((n - k) as u64))
        }
        for n in 2..=10 {
            for l in 0..=20 {
                let oracle = binom(n + l, l) - binom(n + l - 2, l - 2);
                assert_eq!(harmonic_dimension(n, l).unwrap(), oracle, "n = {n}, l = {l}");
            }
        }
    }

    #[test]
    fn coercivity_bottom_of_spectrum() {
        let spec = SphereSpec::new(5, 2, 50).unwrap();
        let report = coercivity_check(&spec).unwrap();
        assert_eq!(report.min_eigenvalue, rat(105, 16));
        assert_eq!(report.min_degree, 0);
        assert!(report.positive);
        assert!(report.factors_monotone);
    }

    #[test]
    fn coercivity_holds_at_critical_dimensions() {
        for k in 1..=10 {
            let spec = SphereSpec::new(2 * k + 1, k, 30).unwrap();
            let report = coercivity_check(&spec).unwrap();
            assert!(report.positive, "k = {k}");
            assert!(report.factors_monotone, "k = {k}");
            assert_eq!(report.min_degree, 0, "k = {k}");
        }
    }

    #[test]
    fn sharpness_bottom_eigenvalue_equals_threshold() {
        for k in 1..=6 {
            for n in (2 * k + 1)..=(2 * k + 20) {
                assert!(sharpness_check(n, k).unwrap(), "n = {n}, k = {k}");
            }
        }
    }

    #[test]
    fn zonal_matches_chebyshev_oracle_on_s3() {
        // On S^3 the zonal ratio is sin((l+1)θ) / ((l+1) sin θ).
        for &theta in &[0.3f64, 1.0, 2.0, 2.9] {
            let vals = zonal_values(3, theta.cos(), 40).unwrap();
            for l in 0..=40usize {
                let oracle =
                    ((l as f64 + 1.0) * theta).sin() / ((l as f64 + 1.0) * theta.sin());
                assert!(
                    (vals[l] - oracle).abs() < 1e-12,
                    "l = {l}, theta = {theta}: {} vs {oracle}",
                    vals[l]
                );
            }
        }
    }

    #[test]
    fn zonal_normalisation_and_bounds() {
        for n in 2..=9 {
            let at_one = zonal_values(n, 1.0, 30).unwrap();
            assert!(at_one.iter().all(|&v| (v - 1.0).abs() < 1e-12));
            let at_zero = zonal_values(n, 0.0, 30).unwrap();
            for (l, v) in at_zero.iter().enumerate() {
                if l % 2 == 1 {
                    assert_eq!(*v, 0.0, "odd degrees vanish at t = 0");
                }
            }
            let mid = zonal_values(n, -0.37, 200).unwrap();
            assert!(mid.iter().all(|&v| v.abs() <= 1.0 + 1e-12));
        }
    }

    #[test]
    fn zonal_rejects_bad_arguments() {
        assert!(zonal_values(1, 0.5, 10).is_err());
        assert!(zonal_values(5, 1.5, 10).is_err());
    }

    #[test]
    fn green_probe_certifies_positivity() {
        // Truncation degrees sized so the certified tail clears the
        // partial sum even at the extreme angles.
        for &(n, k, l_max) in &[(5i64, 2i64, 20_000u32), (7, 3, 2_000), (9, 4, 1_000)] {
            let spec = SphereSpec::new(n, k, l_max).unwrap();
            for j in 1..=8 {
                let theta = std::f64::consts::PI * j as f64 / 8.0;
                let probe = green_zonal_partial_sum(&spec, theta).unwrap();
                assert!(probe.conclusive, "n = {n}, k = {k}, j = {j}");
                assert!(probe.value > 0.0, "n = {n}, k = {k}, j = {j}");
                assert!(
                    probe.positivity_certified,
                    "n = {n}, k = {k}, j = {j}: value {}, tail {}",
                    probe.value, probe.tail_bound
                );
            }
        }
    }

    #[test]
    fn green_probe_antipodal_branch() {
        // n = 2k + 1 has a nonzero coefficient limit, exercising the
        // Abel regularisation.
        let spec = SphereSpec::new(5, 2, 400).unwrap();
        let probe = green_zonal_partial_sum(&spec, std::f64::consts::PI).unwrap();
        assert!(probe.conclusive);
        assert!(probe.positivity_certified);
        assert!(probe.tail_bound < 1e-6);
        // Value is stable against the truncation degree.
        let finer = SphereSpec::new(5, 2, 800).unwrap();
        let probe2 = green_zonal_partial_sum(&finer, std::f64::consts::PI).unwrap();
        assert!((probe.value - probe2.value).abs() < 1e-7);
    }

    #[test]
    fn green_probe_inconclusive_when_tail_diverges() {
        // (n, k) = (12, 3): (n-1)/2 - 2k = -1/2 >= -1, the tail bound
        // does not converge.
        let spec = SphereSpec::new(12, 3, 500).unwrap();
        let probe = green_zonal_partial_sum(&spec, 1.0).unwrap();
        assert!(!probe.conclusive);
        assert!(!probe.positivity_certified);
        assert!(probe.tail_bound.is_infinite());
    }

    #[test]
    fn green_probe_rejects_bad_angles() {
        let spec = SphereSpec::new(5, 2, 100).unwrap();
        assert!(green_zonal_partial_sum(&spec, 0.0).is_err());
        assert!(green_zonal_partial_sum(&spec, -0.5).is_err());
        assert!(green_zonal_partial_sum(&spec, 3.2).is_err());
        assert!(green_zonal_partial_sum(&spec, f64::NAN).is_err());
    }

    #[test]
    fn spec_rejects_bad_parameters() {
        assert!(SphereSpec::new(5, 0, 10).is_err());
        assert!(SphereSpec::new(4, 2, 10).is_err());
        assert!(SphereSpec::new(5, 2, 10).is_ok());
    }

    #[test]
    fn coefficient_limit_matches_large_degree_behaviour() {
        let spec = SphereSpec::new(5, 2, 10).unwrap();
        let omega = sphere_volume(5).unwrap().to_f64();
        let c = coefficient_limit(&spec, omega);
        assert!(c > 0.0);
        let a = *zonal_coefficients(&spec, omega, 100_000).last().unwrap();
        assert!((a / c - 1.0).abs() < 1e-3);
        // For n >= 2k + 2 the coefficients grow, so the alternating
        // branch must come back inconclusive rather than certify.
        let spec2 = SphereSpec::new(8, 2, 200).unwrap();
        let omega8 = sphere_volume(8).unwrap().to_f64();
        assert_eq!(coefficient_limit(&spec2, omega8), 0.0);
        let coeffs = zonal_coefficients(&spec2, omega8, 300);
        assert!(coeffs[300] > coeffs[200]);
        let probe = green_zonal_partial_sum(&spec2, std::f64::consts::PI).unwrap();
        assert!(!probe.conclusive);
        assert!(!probe.positivity_certified);
    }

    #[test]
    fn float_coefficients_match_exact_formula() {
        for &(n, k) in &[(5i64, 2i64), (7, 3), (9, 4), (8, 2)] {
            let spec = SphereSpec::new(n, k, 10).unwrap();
            let omega = sphere_volume(n as u32).unwrap().to_f64();
            let coeffs = zonal_coefficients(&spec, omega, 60);
            for l in 0..=60i64 {
                let dim = harmonic_dimension(n, l).unwrap().to_f64().unwrap();
                let lam = rational_to_f64(&gjms_eigenvalue(n, k, l).unwrap());
                let exact = dim / (omega * lam);
                assert!(
                    (coeffs[l as usize] / exact - 1.0).abs() < 1e-12,
                    "n = {n}, k = {k}, l = {l}"
                );
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn zonal_values_stay_in_unit_interval(n in 2i64..10, t in -1.0f64..=1.0) {
                let vals = zonal_values(n, t, 80).unwrap();
                prop_assert!(vals.iter().all(|v| v.abs() <= 1.0 + 1e-9));
                prop_assert_eq!(vals[0], 1.0);
            }

            #[test]
            fn eigenvalues_increase_in_degree(k in 1i64..5, gap in 1i64..8, l in 0i64..40) {
                let n = 2 * k + gap;
                let lo = gjms_eigenvalue(n, k, l).unwrap();
                let hi = gjms_eigenvalue(n, k, l + 1).unwrap();
                prop_assert!(hi > lo);
            }

            #[test]
            fn dimension_recurrence(n in 2i64..10, l in 2i64..30) {
                // branching: a degree-l harmonic on the bigger sphere
                // restricts to one harmonic of each degree 0..=l below
                let lhs = harmonic_dimension(n + 1, l).unwrap();
                let rhs: BigInt = (0..=l).map(|j| harmonic_dimension(n, j).unwrap()).sum();
                prop_assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn eigenvalue_agrees_with_float_product() {
        let ev = gjms_eigenvalue(9, 3, 7).unwrap();
        let float = BigRational::from_f64(rational_to_f64(&ev)).unwrap();
        // The exact value has small enough numerator to round-trip.
        assert!((rational_to_f64(&ev) - rational_to_f64(&float)).abs() == 0.0);
        let direct: f64 = (1..=3)
            .map(|j| 7.0 * 15.0 + ((9 + 2 * j - 2) * (9 - 2 * j)) as f64 / 4.0)
            .product();
        assert!((rational_to_f64(&ev) - direct).abs() / direct < 1e-14);
    }
}

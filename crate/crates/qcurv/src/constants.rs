//! Exact evaluation of the named constants of the energy expansion: the
//! auxiliary index-contraction constants, the bracket polynomial c(n,k,l) in
//! both its definitional and expanded forms, the fourth-order Weyl coefficient
//! C(n,k), the existence-criterion constant c(n,k), the Green's-function
//! normalization b_{n,k}, the mass coefficient, the curvature-scalar
//! coefficient table, and an exhaustive positivity scanner.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::exactnum::{beta, factorial, sphere_volume, ExactNumber, HalfInt};
use crate::{Error, Result};

fn fact_checked(x: i64, what: &str) -> Result<BigInt> {
    if x < 0 {
        return Err(Error::domain(format!(
            "factorial argument {what} = {x} is negative"
        )));
    }
    Ok(factorial(x as u64))
}

fn int(x: i64) -> ExactNumber {
    ExactNumber::from_integer(x)
}

fn rat_of_bigint(x: BigInt) -> ExactNumber {
    ExactNumber::from_rational(BigRational::from_integer(x))
}

/// The auxiliary contraction constant
/// `(-1)^(j'-m) B(n/2-k-1, j'-m+1)^{-1} (j'-m)! /
///  (m! (j'-2m)! (n+j'-m+l'-2k-1)! (j'-m-m'+l-k+2)!)`.
///
/// Always a π-free rational: the Beta has an integer second argument.
#[allow(clippy::too_many_arguments)]
pub fn c_aux(n: i64, k: i64, jp: i64, l: i64, lp: i64, m: i64, mp: i64) -> Result<ExactNumber> {
    if n <= 2 * k + 2 {
        return Err(Error::domain(format!(
            "c_aux requires n > 2k+2, got n = {n}, k = {k}"
        )));
    }
    let f_m = fact_checked(m, "m")?;
    let f_jm2m = fact_checked(jp - 2 * m, "j'-2m")?;
    let f_big = fact_checked(n + jp - m + lp - 2 * k - 1, "n+j'-m+l'-2k-1")?;
    let f_idx = fact_checked(jp - m - mp + l - k + 2, "j'-m-m'+l-k+2")?;
    let f_jpm = fact_checked(jp - m, "j'-m")?;

    let beta_inv = ExactNumber::one().div_exact(&beta(
        HalfInt::from_twice(n - 2 * k - 2),
        HalfInt::from_int(jp - m + 1),
    )?)?;
    let sign = if (jp - m) % 2 == 0 { 1 } else { -1 };
    let num = BigRational::new(BigInt::from(sign) * f_jpm, f_m * f_jm2m * f_big * f_idx);
    Ok(beta_inv.scale(&num))
}

fn c_nkl_check_range(k: i64, l: i64) -> Result<()> {
    if k < 2 {
        return Err(Error::domain(format!("bracket polynomial requires k >= 2, got k = {k}")));
    }
    if l < k - 2 || l > (2 * k - 4).max(k - 2) {
        return Err(Error::domain(format!(
            "bracket polynomial requires k-2 <= l <= 2k-4, got k = {k}, l = {l}"
        )));
    }
    Ok(())
}

/// The bracket polynomial c(n,k,l). For k >= 3 this is the definitional
/// three-group bracket; for k = 2 (where only l = 0 is admissible) it is the
/// closed form `5n(n+2)(n-4)²(n²-4n-4)`. Always an integer.
///
/// The two conventions differ: the definitional bracket evaluated at k = 2
/// equals exactly three times the closed form (see `c_nkl_bracket`). The
/// closed form is the normalization the downstream constants use at k = 2.
///
/// ```
/// use qcurv::constants::c_nkl;
/// let v = c_nkl(8, 2, 0).unwrap();
/// assert_eq!(v.as_rational().unwrap().to_string(), "179200");
/// ```
pub fn c_nkl(n: i64, k: i64, l: i64) -> Result<ExactNumber> {
    c_nkl_check_range(k, l)?;
    if k == 2 {
        let n = n as i128;
        let v = 5 * n * (n + 2) * (n - 4) * (n - 4) * (n * n - 4 * n - 4);
        return Ok(rat_of_bigint(BigInt::from(v)));
    }
    c_nkl_bracket(n, k, l)
}

/// The definitional three-group bracket, uniform in k >= 2. Agrees with
/// `c_nkl` for k >= 3; at k = 2 it evaluates to `15n(n+2)(n-4)²(n²-4n-4)`,
/// three times the closed form.
pub fn c_nkl_bracket(n: i64, k: i64, l: i64) -> Result<ExactNumber> {
    c_nkl_check_range(k, l)?;
    let (n, k, l) = (n as i128, k as i128, l as i128);
    let g1 = 5 * n * (n + 2) * (k - 1) * (3 * n + 2 * k - 4)
        - 30 * n * (n + 2) * (n - 2)
        - 20 * (n + 2) * (k - 1) * (k - 2) * (n + 3 * k + 1)
        + 24 * (k - 1) * (k - 2) * (k + 1) * (3 * k + 1);
    let g2 = 6 * (n + 2) * (n - 2) - (n + 2) * (k - 1) * (3 * n + 4 * k - 2)
        + 12 * (k + 1) * (k - 1) * (k - 2);
    let g3 = 4 * (k + 1) * (k - 1) * (n - 2 * k - 2 * l + 4)
        - 3 * (n - 2) * (2 * (n - 2 * k + 2) - n * (n + 2 * l - 2 * k));
    let v = 4 * (n + l - 2 * k) * (n + l - 2 * k + 1) * g1
        + 20 * n * (n - 2 * k) * (n + l - 2 * k + 1) * g2
        + 5 * n * (n + 2) * (n - 2 * k) * g3;
    Ok(rat_of_bigint(BigInt::from(v)))
}

/// The bracket polynomial in the shifted variables `a = k-3`, `b = n-2k-4`,
/// `c = l-k+2`, as the machine-expanded polynomial with all-positive
/// coefficients. Requires `k >= 3` and `n >= 2k+4` so the shifts are
/// nonnegative.
pub fn c_nkl_expanded(n: i64, k: i64, l: i64) -> Result<ExactNumber> {
    c_nkl_check_range(k, l)?;
    if k < 3 {
        return Err(Error::domain("expanded form requires k >= 3"));
    }
    if n < 2 * k + 4 {
        return Err(Error::domain(format!(
            "expanded form requires n >= 2k+4, got n = {n}, k = {k}"
        )));
    }
    let a = (k - 3) as i128;
    let b = (n - 2 * k - 4) as i128;
    let c = (l - k + 2) as i128;
    // (coefficient, a-power, b-power) triples per c-power group
    let quad: &[(i128, u32, u32)] = &[
        (15, 1, 3),
        (1200, 2, 1),
        (3880, 1, 1),
        (1920, 0, 0),
        (10656, 1, 0),
        (480, 0, 1),
        (4528, 2, 0),
        (624, 3, 0),
        (40, 0, 2),
        (450, 1, 2),
        (80, 3, 1),
        (80, 2, 2),
        (32, 4, 0),
    ];
    let lin: &[(i128, u32, u32)] = &[
        (71552, 2, 1),
        (414912, 1, 0),
        (500, 2, 3),
        (247984, 1, 1),
        (31840, 3, 0),
        (53660, 1, 2),
        (3200, 4, 0),
        (640, 3, 2),
        (11020, 0, 3),
        (150, 1, 4),
        (128, 5, 0),
        (9056, 3, 1),
        (660, 0, 4),
        (161440, 2, 0),
        (448, 4, 1),
        (15, 0, 5),
        (311040, 0, 1),
        (10520, 2, 2),
        (4830, 1, 3),
        (426240, 0, 0),
        (85840, 0, 2),
    ];
    let cst: &[(i128, u32, u32)] = &[
        (128, 6, 0),
        (576, 5, 1),
        (1088, 4, 2),
        (1020, 3, 3),
        (560, 2, 4),
        (150, 1, 5),
        (15, 0, 6),
        (3904, 5, 0),
        (14720, 4, 1),
        (21896, 3, 2),
        (15940, 2, 3),
        (5640, 1, 4),
        (720, 0, 5),
        (49408, 4, 0),
        (149280, 3, 1),
        (167032, 2, 2),
        (81120, 1, 3),
        (13780, 0, 4),
        (332096, 3, 0),
        (754720, 2, 1),
        (563824, 1, 2),
        (134240, 0, 3),
        (1250304, 2, 0),
        (1900224, 1, 1),
        (704640, 0, 2),
        (2499840, 1, 0),
        (1900800, 0, 1),
        (2073600, 0, 0),
    ];
    let eval = |terms: &[(i128, u32, u32)]| -> i128 {
        terms
            .iter()
            .map(|&(coef, pa, pb)| coef * a.pow(pa) * b.pow(pb))
            .sum()
    };
    let v = 4 * eval(quad) * c * c + 2 * eval(lin) * c + eval(cst);
    Ok(rat_of_bigint(BigInt::from(v)))
}

/// The fourth-order Weyl coefficient C(n,k): the prefactor
/// `(n-3)(n-5)! k! / (5760 n (n+2)(k-1)(n-2k-2))` times the l-sum of
/// `l! c(n,k,l) / ((l-k+2)!(2k-l-4)!(n+l-2k+1)!)` weighted by
/// `B(n/2-k-1, l+1)^{-1}` and a Beta (or, at n = 2k+4, the factor 2 on the
/// l = k-2 term, the log-coefficient branch).
#[allow(non_snake_case)]
pub fn big_C(n: i64, k: i64) -> Result<ExactNumber> {
    big_C_with(n, k, c_nkl)
}

/// C(n,k) assembled with the uniform definitional bracket for every k. Agrees
/// with `big_C` for k >= 3; at k = 2 it is exactly three times `big_C`, and it
/// is the value the block-by-block energy assembly reproduces.
#[allow(non_snake_case)]
pub fn big_C_from_bracket(n: i64, k: i64) -> Result<ExactNumber> {
    big_C_with(n, k, c_nkl_bracket)
}

#[allow(non_snake_case)]
fn big_C_with(
    n: i64,
    k: i64,
    bracket: fn(i64, i64, i64) -> Result<ExactNumber>,
) -> Result<ExactNumber> {
    if k < 2 {
        return Err(Error::domain(format!("big_C requires k >= 2, got k = {k}")));
    }
    if n < 2 * k + 4 {
        return Err(Error::domain(format!(
            "big_C is undefined for n < 2k+4, got n = {n}, k = {k}"
        )));
    }
    let prefactor = BigRational::new(
        BigInt::from(n - 3) * fact_checked(n - 5, "n-5")? * fact_checked(k, "k")?,
        BigInt::from(5760) * BigInt::from(n) * BigInt::from(n + 2)
            * BigInt::from(k - 1)
            * BigInt::from(n - 2 * k - 2),
    );
    let mut sum = ExactNumber::zero();
    let l_max = (2 * k - 4).max(k - 2);
    for l in (k - 2)..=l_max {
        let branch = if n == 2 * k + 4 {
            if l != k - 2 {
                continue;
            }
            int(2)
        } else {
            beta(
                HalfInt::from_twice(n + 2 * l - 4 * k),
                HalfInt::from_int(2 * k - l - 2),
            )?
        };
        let weight = BigRational::new(
            fact_checked(l, "l")?,
            fact_checked(l - k + 2, "l-k+2")?
                * fact_checked(2 * k - l - 4, "2k-l-4")?
                * fact_checked(n + l - 2 * k + 1, "n+l-2k+1")?,
        );
        let beta_inv = ExactNumber::one().div_exact(&beta(
            HalfInt::from_twice(n - 2 * k - 2),
            HalfInt::from_int(l + 1),
        )?)?;
        sum += bracket(n, k, l)?.scale(&weight) * beta_inv * branch;
    }
    Ok(sum.scale(&prefactor))
}

/// The existence-criterion constant c(n,k): zero at n = 2k+4, otherwise
/// `(n-2k)(2k-1)! / (8n(n-2)(n-4) C(n,k)) · B(n/2-k, 2k)^{-1}`.
pub fn small_c(n: i64, k: i64) -> Result<ExactNumber> {
    if k < 1 || n < 2 * k + 4 {
        return Err(Error::domain(format!(
            "small_c requires k >= 1 and n >= 2k+4, got n = {n}, k = {k}"
        )));
    }
    if n == 2 * k + 4 {
        return Ok(ExactNumber::zero());
    }
    let num = BigRational::new(
        BigInt::from(n - 2 * k) * fact_checked(2 * k - 1, "2k-1")?,
        BigInt::from(8) * BigInt::from(n) * BigInt::from(n - 2) * BigInt::from(n - 4),
    );
    let beta_inv = ExactNumber::one().div_exact(&beta(
        HalfInt::from_twice(n - 2 * k),
        HalfInt::from_int(2 * k),
    )?)?;
    beta_inv.scale(&num).div_exact(&big_C(n, k)?)
}

/// The Green's-function normalization b_{n,k}: the inverse of
/// `2^{k-1}(k-1)!(n-2)(n-4)…(n-2k) ω_{n-1}`. Carries a negative π-power.
pub fn b_nk(n: i64, k: i64) -> Result<ExactNumber> {
    if k < 1 || n <= 2 * k {
        return Err(Error::domain(format!(
            "b_nk requires k >= 1 and n > 2k, got n = {n}, k = {k}"
        )));
    }
    b_nk_inverse(n, k)?.recip()
}

/// The product `2^{k-1}(k-1)!(n-2)(n-4)…(n-2k) ω_{n-1}` (the reciprocal of
/// `b_nk`).
pub fn b_nk_inverse(n: i64, k: i64) -> Result<ExactNumber> {
    if k < 1 || n <= 2 * k {
        return Err(Error::domain(format!(
            "b_nk_inverse requires k >= 1 and n > 2k, got n = {n}, k = {k}"
        )));
    }
    let mut q = BigRational::from_integer(BigInt::from(2).pow((k - 1) as u32))
        * BigRational::from_integer(fact_checked(k - 1, "k-1")?);
    for j in 1..=k {
        q *= BigRational::from_integer(BigInt::from(n - 2 * j));
    }
    Ok(sphere_volume((n - 1) as u32)?.scale(&q))
}

/// The coefficient multiplying `m(ξ) μ^{n-2k}` in the low-dimension energy
/// expansion: `b_{n,k}^{-1} B(n/2,n/2)^{-1} B(n/2,k)`. A single monomial; the
/// π-powers cancel fully at n = 3 (giving 64/3 for k = 1) but in general the
/// value carries a positive π-power inherited from the sphere volume.
pub fn mass_coeff(n: i64, k: i64) -> Result<ExactNumber> {
    let half_n = HalfInt::from_twice(n);
    Ok(b_nk_inverse(n, k)?.div_exact(&beta(half_n, half_n)?)?
        * beta(half_n, HalfInt::from_int(k))?)
}

/// Rational multipliers of `|W(ξ)|²` for each scalar block of the normal
/// form, evaluated in conformal normal coordinates. Field names record which
/// derivative slot and Δ-power the block pairs with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurvatureCoeffTable {
    /// Laplacian of the scalar curvature at the center point.
    pub lap_scal: BigRational,
    /// The three double traces of the second covariant derivative of the
    /// Schouten tensor (all equal).
    pub schouten_double_trace: BigRational,
    /// Zeroth-order scalar paired with Δ^{k-1}.
    pub scalar_km1: BigRational,
    /// Laplacian of that scalar.
    pub lap_scalar_km1: BigRational,
    /// Zeroth-order scalar paired with Δ^{k-2}.
    pub scalar_km2: BigRational,
    /// Divergence trace of the gradient-slot tensor at Δ^{k-2}.
    pub grad_km2_trace: BigRational,
    /// Plain trace of the Hessian-slot tensor at Δ^{k-2}.
    pub hess_km2_trace: BigRational,
    /// The three double traces of that tensor's second derivative.
    pub hess_km2_double_trace: BigRational,
    /// Trace of the Hessian-slot tensor at Δ^{k-3}.
    pub hess_km3_trace: BigRational,
    /// The symmetrized divergence combination of the third-derivative-slot
    /// tensor at Δ^{k-3}.
    pub third_km3_combo: BigRational,
    /// The symmetrized double-trace combination of the fourth-derivative-slot
    /// tensor at Δ^{k-4}.
    pub fourth_km4_combo: BigRational,
}

/// The curvature-scalar coefficient table at a given (n,k).
pub fn curvature_coeffs(n: i64, k: i64) -> Result<CurvatureCoeffTable> {
    if n < 3 {
        return Err(Error::domain(format!("curvature_coeffs requires n >= 3, got n = {n}")));
    }
    let r = |num: i64, den: i64| BigRational::new(BigInt::from(num), BigInt::from(den));
    let nm1 = n - 1;
    Ok(CurvatureCoeffTable {
        lap_scal: r(1, 6),
        schouten_double_trace: r(-1, 12 * nm1),
        scalar_km1: BigRational::zero(),
        lap_scalar_km1: r(n - 2, 24 * nm1),
        scalar_km2: r(-(3 * n + 2 * k - 4), 144 * nm1),
        grad_km2_trace: r(-(3 * n + 4 * k - 2), 72 * nm1),
        hess_km2_trace: BigRational::zero(),
        hess_km2_double_trace: r(-(k + 1), 18 * nm1),
        hess_km3_trace: r(-(n + 3 * k + 1), 36 * nm1),
        third_km3_combo: r(-(k + 1), 6 * nm1),
        fourth_km4_combo: r(-(k + 1), 10 * nm1),
    })
}

/// One scanned cell of the positivity report.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub n: i64,
    pub k: i64,
    pub sign: i32,
    pub value_decimal: f64,
}

/// Result of an exhaustive exact-sign scan of C(n,k).
#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
    pub violations: Vec<ScanRow>,
}

fn exact_sign(x: &ExactNumber) -> i32 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        // mixed-sign monomials: decide by the float value
        if x.to_f64() > 0.0 {
            1
        } else {
            -1
        }
    }
}

/// Exact-sign scan of C(n,k) over `k ∈ k_range`, `n ∈ [2k+4, 2k+4+n_margin]`.
/// The sign is decided in exact arithmetic; the decimal column is display
/// only.
///
/// ```
/// use qcurv::constants::scan_positivity;
/// let report = scan_positivity(2..=3, 6).unwrap();
/// assert_eq!(report.rows.len(), 14);
/// assert!(report.violations.is_empty());
/// ```
pub fn scan_positivity(
    k_range: std::ops::RangeInclusive<i64>,
    n_margin: i64,
) -> Result<ScanReport> {
    if n_margin < 0 {
        return Err(Error::domain("n_margin must be nonnegative"));
    }
    let cells: Vec<(i64, i64)> = k_range
        .flat_map(|k| ((2 * k + 4)..=(2 * k + 4 + n_margin)).map(move |n| (n, k)))
        .collect();
    let rows: Vec<ScanRow> = cells
        .par_iter()
        .map(|&(n, k)| {
            let v = big_C(n, k)?;
            Ok(ScanRow {
                n,
                k,
                sign: exact_sign(&v),
                value_decimal: v.to_f64(),
            })
        })
        .collect::<Result<_>>()?;
    let violations = rows.iter().filter(|r| r.sign <= 0).cloned().collect();
    Ok(ScanReport { rows, violations })
}

//! Closed-form radial calculus for the bubble profile
//! `U(x) = (1+|x|²)^{-(n-2k)/2}`: radial derivatives, Laplacian powers,
//! Cartesian partial derivatives, moment integrals, sphere moments, and the
//! Kronecker-contraction catalog with its brute-force permutation oracle.
//!
//! The radial variable throughout is `r := |x|²`, so the Euclidean Laplacian
//! (with the sign convention Δ = -div grad) acts on radial profiles as
//! `Δ₀ = -4r ∂_r² - 2n ∂_r`.

use std::collections::BTreeMap;

use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::exactnum::{beta, factorial, rational_to_f64, sphere_volume, ExactNumber, HalfInt};
use crate::{Error, Result};

/// Dimension, order and scale of a bubble profile.
#[derive(Debug, Clone, Copy)]
pub struct BubbleParams {
    pub n: i64,
    pub k: i64,
    pub mu: f64,
}

impl BubbleParams {
    pub fn new(n: i64, k: i64, mu: f64) -> Result<Self> {
        if k < 1 || n <= 2 * k {
            return Err(Error::domain(format!(
                "bubble requires k >= 1 and n > 2k, got n = {n}, k = {k}"
            )));
        }
        if !(mu > 0.0) {
            return Err(Error::domain("bubble scale must be positive"));
        }
        Ok(BubbleParams { n, k, mu })
    }

    /// The unscaled profile value at `r = |x|²`.
    pub fn u(&self, r: f64) -> f64 {
        (1.0 + r).powf(-((self.n - 2 * self.k) as f64) / 2.0)
    }
}

/// Exact coefficient of `(1+r)^{-(n-2k+2j)/2}` in `∂_r^j U`, product form:
/// `(-1)^j 2^{-j} (n-2k)(n-2k+2)…(n-2k+2j-2)`.
///
/// ```
/// use qcurv::radial::d_r_u_coeff;
/// assert_eq!(d_r_u_coeff(8, 2, 1).to_string(), "-2");
/// ```
pub fn d_r_u_coeff(n: i64, k: i64, j: u32) -> BigRational {
    let mut c = BigRational::new(
        BigInt::from(if j % 2 == 0 { 1 } else { -1 }),
        BigInt::from(2).pow(j),
    );
    for i in 0..j as i64 {
        c *= BigRational::from_integer(BigInt::from(n - 2 * k + 2 * i));
    }
    c
}

/// The same coefficient via the Beta form
/// `2 (-1)^j j! B(n/2-k-1, j+1)^{-1} / (n-2k-2)`; requires n > 2k+2.
pub fn d_r_u_coeff_beta(n: i64, k: i64, j: u32) -> Result<ExactNumber> {
    if n <= 2 * k + 2 {
        return Err(Error::domain("beta coefficient form requires n > 2k+2"));
    }
    let sign = if j % 2 == 0 { 1 } else { -1 };
    let q = BigRational::new(
        BigInt::from(2 * sign) * factorial(j as u64),
        BigInt::from(n - 2 * k - 2),
    );
    Ok(ExactNumber::one()
        .div_exact(&beta(
            HalfInt::from_twice(n - 2 * k - 2),
            HalfInt::from_int(j as i64 + 1),
        )?)?
        .scale(&q))
}

/// `∂_r^j U` at `r`, from the closed form.
pub fn d_r_u(p: &BubbleParams, j: u32, r: f64) -> f64 {
    let expo = -((p.n - 2 * p.k + 2 * j as i64) as f64) / 2.0;
    rational_to_f64(&d_r_u_coeff(p.n, p.k, j)) * (1.0 + r).powf(expo)
}

/// Exact terms of `Δ₀^l U` as pairs `(l', coefficient)` meaning
/// `coefficient · (1+r)^{-(n+2l'-2k)/2}`.
///
/// For `l < k` this is the displayed l'-sum (requires n > 2k+2); for `l = k`
/// it collapses to the single term `2^{2k}(2k-1)! B(n/2-k,2k)^{-1}` at
/// `l' = k`.
pub fn laplacian_pow_u_terms(n: i64, k: i64, l: i64) -> Result<Vec<(i64, ExactNumber)>> {
    if l < 0 || l > k {
        return Err(Error::domain(format!(
            "laplacian power must satisfy 0 <= l <= k, got l = {l}, k = {k}"
        )));
    }
    if l == k {
        let c = ExactNumber::one()
            .div_exact(&beta(HalfInt::from_twice(n - 2 * k), HalfInt::from_int(2 * k))?)?
            .scale(&BigRational::from_integer(
                BigInt::from(2).pow(2 * k as u32) * factorial((2 * k - 1) as u64),
            ));
        return Ok(vec![(2 * k, c)]);
    }
    if n <= 2 * k + 2 {
        return Err(Error::domain("exact branch for l < k requires n > 2k+2"));
    }
    let front = BigRational::new(
        BigInt::from(2).pow((2 * l + 1) as u32) * factorial(l as u64),
        BigInt::from(n - 2 * k - 2) * factorial((k - l - 1) as u64),
    );
    let mut terms = Vec::new();
    for lp in l..=(2 * l) {
        let w = BigRational::new(
            factorial(lp as u64) * factorial((k + l - lp - 1) as u64),
            factorial((lp - l) as u64) * factorial((2 * l - lp) as u64),
        );
        let c = ExactNumber::one()
            .div_exact(&beta(
                HalfInt::from_twice(n - 2 * k - 2),
                HalfInt::from_int(lp + 1),
            )?)?
            .scale(&(&front * w));
        terms.push((lp, c));
    }
    Ok(terms)
}

/// `Δ₀^l U` at `r`, from the closed form.
pub fn laplacian_pow_u(p: &BubbleParams, l: i64, r: f64) -> Result<f64> {
    let terms = laplacian_pow_u_terms(p.n, p.k, l)?;
    Ok(terms
        .iter()
        .map(|(lp, c)| c.to_f64() * (1.0 + r).powf(-((p.n + 2 * lp - 2 * p.k) as f64) / 2.0))
        .sum())
}

/// Exact profiles spanned by `(1+r)^{-a/2}` with integer `a`, closed under
/// the radial Laplacian. Used as an independent recursion oracle.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RadialProfile {
    // map from a (twice the exponent) to the coefficient
    terms: BTreeMap<i64, BigRational>,
}

impl RadialProfile {
    /// The bubble profile itself: `(1+r)^{-(n-2k)/2}`.
    pub fn bubble(n: i64, k: i64) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(n - 2 * k, BigRational::one());
        RadialProfile { terms }
    }

    /// Apply `Δ₀ = -4r∂_r² - 2n∂_r` once, exactly.
    pub fn radial_laplacian(&self, n: i64) -> Self {
        let mut out = BTreeMap::new();
        let mut add = |a: i64, q: BigRational| {
            let e = out.entry(a).or_insert_with(BigRational::zero);
            *e += q;
            if e.is_zero() {
                out.remove(&a);
            }
        };
        for (&a, c) in &self.terms {
            // with α = a/2: Δ₀ (1+r)^{-α} = α(2n-4α-4)(1+r)^{-α-1}
            //                              + 4α(α+1)(1+r)^{-α-2}
            let alpha = BigRational::new(BigInt::from(a), BigInt::from(2));
            let two_n = BigRational::from_integer(BigInt::from(2 * n));
            let four = BigRational::from_integer(BigInt::from(4));
            let c1 = &alpha * (two_n - &four * (&alpha + BigRational::one()));
            let c2 = four * &alpha * (&alpha + BigRational::one());
            add(a + 2, c * c1);
            add(a + 4, c * c2);
        }
        RadialProfile { terms: out }
    }

    /// Evaluate at `r`.
    pub fn eval(&self, r: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&a, c)| rational_to_f64(c) * (1.0 + r).powf(-(a as f64) / 2.0))
            .sum()
    }

    /// Exact coefficient of `(1+r)^{-a/2}`.
    pub fn coeff(&self, a: i64) -> BigRational {
        self.terms.get(&a).cloned().unwrap_or_else(BigRational::zero)
    }
}

/// Cartesian partial derivative `∂_{i_1} … ∂_{i_j} U` at a point, via the
/// paired-index expansion over permutations: for each number m of Kronecker
/// pairs, the prefactor is `2^{j-2m}/(m!(j-2m)!)` against `∂_r^{j-m}U(r)`.
pub fn partial_u(p: &BubbleParams, idx: &[usize], x: &[f64]) -> Result<f64> {
    let j = idx.len();
    if j > 8 {
        return Err(Error::unsupported("partial derivatives supported up to order 8"));
    }
    if idx.iter().any(|&i| i >= x.len()) {
        return Err(Error::domain("derivative index out of range for the point"));
    }
    let r: f64 = x.iter().map(|v| v * v).sum();
    let mut total = 0.0;
    for m in 0..=(j / 2) {
        let pref = 2f64.powi((j - 2 * m) as i32)
            / (rational_to_f64(&BigRational::from_integer(
                factorial(m as u64) * factorial((j - 2 * m) as u64),
            )));
        let du = d_r_u(p, (j - m) as u32, r);
        let mut perm_sum = 0.0;
        for sigma in (0..j).permutations(j) {
            let mut prod = 1.0;
            for t in 0..m {
                if idx[sigma[2 * t]] != idx[sigma[2 * t + 1]] {
                    prod = 0.0;
                    break;
                }
            }
            if prod != 0.0 {
                for &s in &sigma[2 * m..] {
                    prod *= x[idx[s]];
                }
            }
            perm_sum += prod;
        }
        total += pref * du * perm_sum;
    }
    Ok(total)
}

/// Leading behavior of `∫_0^{(r0/μ)²} r^{a-1}(1+r)^{-b} dr`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MomentResult {
    /// `B(a, b-a)` plus a remainder of order `μ^{2(b-a)}`.
    ExactBeta {
        value: ExactNumber,
        remainder_mu_power: HalfInt,
    },
    /// `2 ln(1/μ) + O(1)`: the coefficient of `ln(1/μ)` is exactly 2.
    LogDivergent { log_coefficient: ExactNumber },
}

/// Classify and evaluate the truncated moment integral with exponents
/// `r^{a-1}(1+r)^{-b}`; the `b < a` case diverges and is rejected.
pub fn moment_integral(a: HalfInt, b: HalfInt) -> Result<MomentResult> {
    if !a.is_positive() {
        return Err(Error::domain("moment integral requires a > 0"));
    }
    if b.twice() < a.twice() {
        return Err(Error::domain("moment integral diverges for b < a"));
    }
    if a == b {
        return Ok(MomentResult::LogDivergent {
            log_coefficient: ExactNumber::from_integer(2),
        });
    }
    Ok(MomentResult::ExactBeta {
        value: beta(a, b - a)?,
        remainder_mu_power: HalfInt::from_twice(2 * (b.twice() - a.twice())),
    })
}

/// Exact sphere moment `∫_{S^{n-1}} y_{i_1} … y_{i_j} dv`: zero for odd
/// degree; for even degree, the permutation sum of Kronecker pairings scaled
/// by `(n-2) ω_{n-1} B((n-2)/2, (j+2)/2) / (2^{j+1} (j/2)!²)`.
pub fn sphere_moment(n: i64, idx: &[usize]) -> Result<ExactNumber> {
    let j = idx.len();
    if n < 2 {
        return Err(Error::domain("sphere moments need n >= 2"));
    }
    if j > 8 {
        return Err(Error::unsupported("sphere moments supported up to degree 8"));
    }
    if idx.iter().any(|&i| i >= n as usize) {
        return Err(Error::domain("moment index out of range for the dimension"));
    }
    if j % 2 == 1 {
        return Ok(ExactNumber::zero());
    }
    if j == 0 {
        return sphere_volume((n - 1) as u32);
    }
    let mut pairings: i64 = 0;
    for sigma in (0..j).permutations(j) {
        if (0..j / 2).all(|t| idx[sigma[2 * t]] == idx[sigma[2 * t + 1]]) {
            pairings += 1;
        }
    }
    let pref = BigRational::new(
        BigInt::from((n - 2) * pairings),
        BigInt::from(2).pow((j + 1) as u32)
            * factorial((j / 2) as u64).pow(2),
    );
    Ok(sphere_volume((n - 1) as u32)?
        * beta(
            HalfInt::from_twice(n - 2),
            HalfInt::from_twice(j as i64 + 2),
        )?
        .scale(&pref))
}

/// Which Kronecker pattern a contraction-catalog row multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairingPattern {
    /// The empty product, 1.
    Scalar,
    /// `δ_{i₁i₂}`.
    Single,
    /// `δ_{i₁i₂} δ_{i₃i₄}`.
    PairProduct,
    /// `δ_{i₁i₂}δ_{i₃i₄} + δ_{i₁i₃}δ_{i₂i₄} + δ_{i₁i₄}δ_{i₂i₃}`.
    Symmetrized,
}

impl PairingPattern {
    /// Evaluate the pattern on concrete indices.
    pub fn eval(&self, idx: &[usize]) -> i64 {
        let d = |a: usize, b: usize| i64::from(idx[a] == idx[b]);
        match self {
            PairingPattern::Scalar => 1,
            PairingPattern::Single => d(0, 1),
            PairingPattern::PairProduct => d(0, 1) * d(2, 3),
            PairingPattern::Symmetrized => {
                d(0, 1) * d(2, 3) + d(0, 2) * d(1, 3) + d(0, 3) * d(1, 2)
            }
        }
    }
}

/// The catalog of double-permutation Kronecker contraction sums, indexed by
/// `(j', j'', m)`: returns the scalar multiplier and the pairing pattern it
/// multiplies.
pub fn delta_contraction_sum(jp: usize, jpp: usize, m: usize) -> Result<(i64, PairingPattern)> {
    let fact = |x: usize| -> i64 {
        (1..=x as i64).product::<i64>().max(1)
    };
    match (jp, jpp, m) {
        (0, 0, 0) => Ok((1, PairingPattern::Scalar)),
        (1, 1, 0) => Ok((2, PairingPattern::Single)),
        (2, 0, m) if m <= 1 => Ok((2 * (2 - m as i64), PairingPattern::Single)),
        (2, 2, 0) => Ok((16, PairingPattern::Symmetrized)),
        (2, 2, 1) => Ok((4, PairingPattern::PairProduct)),
        (3, 1, m) if m <= 1 => Ok((2 * fact(4 - 2 * m), PairingPattern::Symmetrized)),
        (4, 0, m) if m <= 2 => Ok((8 * fact(4 - 2 * m), PairingPattern::Symmetrized)),
        _ => Err(Error::domain(format!(
            "uncataloged contraction triple (j', j'', m) = ({jp}, {jpp}, {m})"
        ))),
    }
}

/// Brute-force evaluation of the double permutation sum
/// `Σ_σ Σ_σ' δ…δ` on concrete indices, for cross-checking the catalog.
///
/// `σ` runs over permutations of the first `j'` positions; its first `2m`
/// slots are paired directly, and the remaining `j'-2m` slots together with
/// the `j''` trailing positions are re-paired through `σ'`.
pub fn delta_contraction_bruteforce(jp: usize, jpp: usize, m: usize, idx: &[usize]) -> Result<i64> {
    if idx.len() != jp + jpp {
        return Err(Error::domain("index tuple length must be j' + j''"));
    }
    if jp + jpp > 8 || 2 * m > jp {
        return Err(Error::domain("contraction oracle bounds exceeded"));
    }
    if (jp - 2 * m + jpp) % 2 != 0 {
        return Err(Error::domain("unpaired slots must be even in number"));
    }
    let mut total = 0i64;
    for sigma in (0..jp).permutations(jp) {
        let mut prod = 1i64;
        for t in 0..m {
            if idx[sigma[2 * t]] != idx[sigma[2 * t + 1]] {
                prod = 0;
                break;
            }
        }
        if prod == 0 {
            continue;
        }
        // the multiset S: leftover σ-slots then the trailing positions
        let s: Vec<usize> = sigma[2 * m..]
            .iter()
            .copied()
            .chain(jp..jp + jpp)
            .collect();
        for tau in s.iter().copied().permutations(s.len()) {
            // σ'(s[t]) = tau[t]; pair consecutive slots of S
            let mut ok = true;
            for t in 0..s.len() / 2 {
                if idx[tau[2 * t]] != idx[tau[2 * t + 1]] {
                    ok = false;
                    break;
                }
            }
            if ok {
                total += prod;
            }
        }
    }
    Ok(total)
}

//! Exact scalar arithmetic over the rationals extended by half-integer powers
//! of π.
//!
//! Every constant appearing in the energy expansions is a finite sum of
//! monomials `q · π^(p/2)` with `q ∈ ℚ` and `p ∈ ℤ`, so a map from the
//! (doubled) π-exponent to a rational coefficient is a normal form. Gamma and
//! Beta at half-integer arguments, sphere volumes and Faulhaber power sums are
//! provided on top of it.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

/// A half-integer, stored as twice its value so equality and ordering are
/// exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt {
    twice: i64,
}

impl HalfInt {
    /// The half-integer `t/2`.
    pub const fn from_twice(t: i64) -> Self {
        HalfInt { twice: t }
    }

    /// The integer `n` as a half-integer.
    pub const fn from_int(n: i64) -> Self {
        HalfInt { twice: 2 * n }
    }

    /// Twice the value.
    pub const fn twice(self) -> i64 {
        self.twice
    }

    /// True when the value is an integer.
    pub const fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }

    /// The value as an integer, when it is one.
    pub const fn as_integer(self) -> Option<i64> {
        if self.twice % 2 == 0 {
            Some(self.twice / 2)
        } else {
            None
        }
    }

    /// True when the value is strictly positive.
    pub const fn is_positive(self) -> bool {
        self.twice > 0
    }

    /// The value as a rational.
    pub fn to_rational(self) -> BigRational {
        BigRational::new(BigInt::from(self.twice), BigInt::from(2))
    }

    /// The value as a float.
    pub fn to_f64(self) -> f64 {
        self.twice as f64 / 2.0
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt::from_twice(self.twice + rhs.twice)
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt::from_twice(self.twice - rhs.twice)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

/// A finite sum of monomials `q · π^(p/2)`, keyed by the doubled π-exponent.
///
/// Invariants: no zero coefficient is stored and exponents are unique, so
/// structural equality is value equality.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExactNumber {
    monomials: BTreeMap<i64, BigRational>,
}

impl ExactNumber {
    /// The number zero.
    pub fn zero() -> Self {
        ExactNumber::default()
    }

    /// The number one.
    pub fn one() -> Self {
        ExactNumber::from_integer(1)
    }

    /// An integer.
    pub fn from_integer(n: i64) -> Self {
        ExactNumber::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    /// A rational with π-exponent zero.
    pub fn from_rational(q: BigRational) -> Self {
        ExactNumber::monomial(q, HalfInt::from_int(0))
    }

    /// The fraction `num/den`.
    pub fn from_ratio(num: i64, den: i64) -> Self {
        ExactNumber::from_rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// A single monomial `q · π^pi_pow`.
    pub fn monomial(q: BigRational, pi_pow: HalfInt) -> Self {
        let mut monomials = BTreeMap::new();
        if !q.is_zero() {
            monomials.insert(pi_pow.twice(), q);
        }
        ExactNumber { monomials }
    }

    /// True when the value is zero.
    pub fn is_zero(&self) -> bool {
        self.monomials.is_empty()
    }

    /// The rational coefficient of `π^0` of a π-free value, when the value is
    /// π-free.
    pub fn as_rational(&self) -> Option<BigRational> {
        if self.is_zero() {
            return Some(BigRational::zero());
        }
        if self.monomials.len() == 1 {
            if let Some(q) = self.monomials.get(&0) {
                return Some(q.clone());
            }
        }
        None
    }

    /// The single monomial `(π-power, coefficient)` when the value has exactly
    /// one.
    pub fn as_monomial(&self) -> Option<(HalfInt, BigRational)> {
        if self.monomials.len() == 1 {
            let (&t, q) = self.monomials.iter().next().unwrap();
            Some((HalfInt::from_twice(t), q.clone()))
        } else {
            None
        }
    }

    /// Multiplicative inverse of a single-monomial value. General inversion is
    /// rejected: the formulas divide only by Gamma/Beta monomials.
    pub fn recip(&self) -> Result<ExactNumber> {
        match self.as_monomial() {
            Some((p, q)) => Ok(ExactNumber::monomial(
                q.recip(),
                HalfInt::from_twice(-p.twice()),
            )),
            None => Err(Error::domain(
                "division is defined only by a single-monomial divisor",
            )),
        }
    }

    /// Exact division by a single-monomial divisor.
    pub fn div_exact(&self, divisor: &ExactNumber) -> Result<ExactNumber> {
        Ok(self.clone() * divisor.recip()?)
    }

    /// Small integer power.
    pub fn pow(&self, e: u32) -> ExactNumber {
        let mut acc = ExactNumber::one();
        for _ in 0..e {
            acc *= self.clone();
        }
        acc
    }

    /// Iterate over `(π-power, coefficient)` monomials.
    pub fn monomials(&self) -> impl Iterator<Item = (HalfInt, &BigRational)> {
        self.monomials
            .iter()
            .map(|(&t, q)| (HalfInt::from_twice(t), q))
    }

    /// Strict positivity, decidable when all monomial coefficients share a
    /// sign (π-powers are positive reals).
    pub fn is_positive(&self) -> bool {
        !self.is_zero() && self.monomials.values().all(|q| q.is_positive())
    }

    /// Strict negativity under the same sign condition as `is_positive`.
    pub fn is_negative(&self) -> bool {
        !self.is_zero() && self.monomials.values().all(|q| q.is_negative())
    }

    /// Convert to binary floating point. Used only at oracle boundaries.
    pub fn to_f64(&self) -> f64 {
        self.monomials
            .iter()
            .map(|(&t, q)| rational_to_f64(q) * std::f64::consts::PI.powf(t as f64 / 2.0))
            .sum()
    }

    /// Scale by a rational.
    pub fn scale(&self, q: &BigRational) -> ExactNumber {
        let mut out = ExactNumber::zero();
        for (&t, c) in &self.monomials {
            let v = c * q;
            if !v.is_zero() {
                out.monomials.insert(t, v);
            }
        }
        out
    }
}

/// `BigRational → f64`, robust to numerator/denominator overflowing `f64`
/// individually.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // fall back to a scaled division
        let n = q.numer().to_f64().unwrap_or(f64::MAX);
        let d = q.denom().to_f64().unwrap_or(f64::MAX);
        n / d
    })
}

impl Add for ExactNumber {
    type Output = ExactNumber;
    fn add(mut self, rhs: ExactNumber) -> ExactNumber {
        self += rhs;
        self
    }
}

impl AddAssign for ExactNumber {
    fn add_assign(&mut self, rhs: ExactNumber) {
        for (t, q) in rhs.monomials {
            let entry = self.monomials.entry(t).or_insert_with(BigRational::zero);
            *entry += q;
            if entry.is_zero() {
                self.monomials.remove(&t);
            }
        }
    }
}

impl Sub for ExactNumber {
    type Output = ExactNumber;
    fn sub(mut self, rhs: ExactNumber) -> ExactNumber {
        self -= rhs;
        self
    }
}

impl SubAssign for ExactNumber {
    fn sub_assign(&mut self, rhs: ExactNumber) {
        *self += -rhs;
    }
}

impl Neg for ExactNumber {
    type Output = ExactNumber;
    fn neg(self) -> ExactNumber {
        let monomials = self.monomials.into_iter().map(|(t, q)| (t, -q)).collect();
        ExactNumber { monomials }
    }
}

impl Mul for ExactNumber {
    type Output = ExactNumber;
    fn mul(self, rhs: ExactNumber) -> ExactNumber {
        let mut out = ExactNumber::zero();
        for (&ta, qa) in &self.monomials {
            for (&tb, qb) in &rhs.monomials {
                let t = ta + tb;
                let q = qa * qb;
                let entry = out.monomials.entry(t).or_insert_with(BigRational::zero);
                *entry += q;
                if entry.is_zero() {
                    out.monomials.remove(&t);
                }
            }
        }
        out
    }
}

impl MulAssign for ExactNumber {
    fn mul_assign(&mut self, rhs: ExactNumber) {
        *self = self.clone() * rhs;
    }
}

impl fmt::Display for ExactNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&t, q) in &self.monomials {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if t == 0 {
                write!(f, "{q}")?;
            } else if t % 2 == 0 {
                write!(f, "{q}·π^{}", t / 2)?;
            } else {
                write!(f, "{q}·π^({t}/2)")?;
            }
        }
        Ok(())
    }
}

/// `n!` as a big integer.
pub fn factorial(n: u64) -> BigInt {
    let mut acc = BigInt::one();
    for j in 2..=n {
        acc *= BigInt::from(j);
    }
    acc
}

/// Γ(a) for half-integer `a > 0`, exact.
///
/// Integer `m` gives `(m-1)!`; half-odd arguments recurse down to
/// `Γ(1/2) = √π`.
pub fn gamma_half(a: HalfInt) -> Result<ExactNumber> {
    if !a.is_positive() {
        return Err(Error::domain(format!("gamma_half requires a > 0, got {a}")));
    }
    if let Some(m) = a.as_integer() {
        return Ok(ExactNumber::from_rational(BigRational::from_integer(
            factorial((m - 1) as u64),
        )));
    }
    // a = 1/2 + j: Γ(a) = (a-1)(a-2)⋯(1/2) Γ(1/2)
    let mut coeff = BigRational::one();
    let mut t = a.twice();
    while t > 1 {
        t -= 2;
        coeff *= BigRational::new(BigInt::from(t), BigInt::from(2));
    }
    Ok(ExactNumber::monomial(coeff, HalfInt::from_twice(1)))
}

/// Β(a,b) = Γ(a)Γ(b)/Γ(a+b) for half-integer `a,b > 0`, exact.
///
/// The √π factors of two half-odd arguments cancel, so Β(1/2, 4) comes out
/// as a plain rational:
///
/// ```
/// use qcurv::exactnum::{beta, HalfInt};
/// let b = beta(HalfInt::from_twice(1), HalfInt::from_int(4)).unwrap();
/// assert_eq!(b.as_rational().unwrap().to_string(), "32/35");
/// ```
pub fn beta(a: HalfInt, b: HalfInt) -> Result<ExactNumber> {
    if !a.is_positive() || !b.is_positive() {
        return Err(Error::domain(format!(
            "beta requires positive arguments, got ({a}, {b})"
        )));
    }
    gamma_half(a)?.mul(gamma_half(b)?).div_exact(&gamma_half(a + b)?)
}

/// Volume `ω_n` of the standard n-sphere: `2π^((n+1)/2) / Γ((n+1)/2)`.
pub fn sphere_volume(n: u32) -> Result<ExactNumber> {
    if n == 0 {
        return Err(Error::domain("sphere_volume requires n ≥ 1"));
    }
    let half_np1 = HalfInt::from_twice((n as i64) + 1);
    let two_pi = ExactNumber::monomial(
        BigRational::from_integer(BigInt::from(2)),
        half_np1,
    );
    two_pi.div_exact(&gamma_half(half_np1)?)
}

/// Power sum `Σ_{j=1}^{k} j^p` for `1 ≤ p ≤ 5`, via the closed forms.
pub fn faulhaber(p: u32, k: u64) -> Result<BigRational> {
    let k = BigRational::from_integer(BigInt::from(k));
    let one = BigRational::one();
    let r = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
    let kp1 = &k + &one;
    let v = match p {
        1 => &k * &kp1 * r(1, 2),
        2 => &k * &kp1 * (BigRational::from_integer(BigInt::from(2)) * &k + &one) * r(1, 6),
        3 => &k * &k * &kp1 * &kp1 * r(1, 4),
        4 => {
            let two_k_p1 = BigRational::from_integer(BigInt::from(2)) * &k + &one;
            let inner = r(3, 1) * &k * &k + r(3, 1) * &k - &one;
            &k * &kp1 * two_k_p1 * inner * r(1, 30)
        }
        5 => {
            let inner = r(2, 1) * &k * &k + r(2, 1) * &k - &one;
            &k * &k * &kp1 * &kp1 * inner * r(1, 12)
        }
        _ => {
            return Err(Error::unsupported(format!(
                "faulhaber supports exponents 1..5, got {p}"
            )))
        }
    };
    Ok(v)
}

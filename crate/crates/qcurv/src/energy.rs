//! Energy expansions of bubble test functions, the sharp threshold, and the
//! existence certifier.
//!
//! The expansions are carried as exact series in the scale μ: every
//! coefficient is an [`ExactNumber`], with the irrational factors
//! `ω_n^{2k/n}` and `f(ξ)^{-(n-2k)/n}` kept symbolic in the prefactor and
//! only multiplied out at float boundaries.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;
use serde_json::{json, Value};

use crate::constants::{big_C, curvature_coeffs, mass_coeff, small_c};
use crate::exactnum::{beta, factorial, sphere_volume, ExactNumber, HalfInt};
use crate::{Error, Result};

/// Pointwise data of the weight f and the geometry at a candidate
/// concentration point.
#[derive(Debug, Clone, Copy)]
pub struct PointData {
    pub n: i64,
    pub k: i64,
    /// f(ξ), positive.
    pub f_val: f64,
    /// Δf(ξ).
    pub lap_f: f64,
    /// Δ²f(ξ).
    pub bilap_f: f64,
    /// |W(ξ)|², nonnegative.
    pub weyl_sq: f64,
    /// Mass of the operator at ξ; required when 2k+1 <= n <= 2k+3.
    pub mass: Option<f64>,
}

impl PointData {
    pub fn new(
        n: i64,
        k: i64,
        f_val: f64,
        lap_f: f64,
        bilap_f: f64,
        weyl_sq: f64,
        mass: Option<f64>,
    ) -> Result<Self> {
        if k < 1 || n <= 2 * k {
            return Err(Error::domain(format!(
                "point data requires k >= 1 and n > 2k, got n = {n}, k = {k}"
            )));
        }
        if !(f_val > 0.0) || !f_val.is_finite() {
            return Err(Error::precondition("f(ξ) must be positive and finite"));
        }
        if !lap_f.is_finite() || !bilap_f.is_finite() {
            return Err(Error::precondition("derivative data must be finite"));
        }
        if !(weyl_sq >= 0.0) || !weyl_sq.is_finite() {
            return Err(Error::precondition("|W(ξ)|² must be nonnegative and finite"));
        }
        if let Some(m) = mass {
            if !m.is_finite() {
                return Err(Error::precondition("mass must be finite"));
            }
        } else if n <= 2 * k + 3 {
            return Err(Error::precondition(format!(
                "mass is required when 2k+1 <= n <= 2k+3, got n = {n}, k = {k}"
            )));
        }
        Ok(PointData { n, k, f_val, lap_f, bilap_f, weyl_sq, mass })
    }
}

/// Order tag of the dropped remainder of a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RemainderTag {
    /// true for a big-O remainder, false for small-o.
    pub big_o: bool,
    pub power: i64,
    pub log: bool,
}

impl std::fmt::Display for RemainderTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sym = if self.big_o { "O" } else { "o" };
        let log = if self.log { " log(1/mu)" } else { "" };
        write!(f, "{sym}(mu^{}{log})", self.power)
    }
}

/// A single exact term `coeff · μ^power · log(1/μ)^{log}`.
#[derive(Debug, Clone)]
pub struct SeriesTerm {
    pub power: i64,
    pub log: bool,
    pub coeff: ExactNumber,
}

/// An asymptotic series in μ with an exact coefficient list and a symbolic
/// prefactor `rational · ω_n^{p/q} · f(ξ)^{p'/q'}`.
#[derive(Debug, Clone)]
pub struct ExpansionSeries {
    pub prefactor_rational: ExactNumber,
    /// Exponent of ω_n in the prefactor, as a fraction (numerator, denominator).
    pub omega_power: (i64, i64),
    /// Exponent of f(ξ) in the prefactor, as a fraction.
    pub f_power: (i64, i64),
    /// Value of f(ξ) used when the prefactor is evaluated numerically.
    pub f_val: f64,
    pub n: i64,
    /// Sorted by (power, log); at most one term per (power, log) pair.
    pub terms: Vec<SeriesTerm>,
    pub remainder: RemainderTag,
}

impl ExpansionSeries {
    fn push(&mut self, power: i64, log: bool, coeff: ExactNumber) {
        if coeff.is_zero() {
            return;
        }
        if let Some(t) = self.terms.iter_mut().find(|t| t.power == power && t.log == log) {
            t.coeff += coeff;
        } else {
            self.terms.push(SeriesTerm { power, log, coeff });
            self.terms.sort_by_key(|t| (t.power, t.log));
        }
    }

    /// The exact coefficient at a given (power, log) slot, if present.
    pub fn term_coeff(&self, power: i64, log: bool) -> Option<&ExactNumber> {
        self.terms.iter().find(|t| t.power == power && t.log == log).map(|t| &t.coeff)
    }

    /// The prefactor as a float, with the symbolic ω and f powers applied.
    pub fn prefactor_numeric(&self) -> f64 {
        let omega = sphere_volume(self.n as u32).map(|w| w.to_f64()).unwrap_or(f64::NAN);
        self.prefactor_rational.to_f64()
            * omega.powf(self.omega_power.0 as f64 / self.omega_power.1 as f64)
            * self.f_val.powf(self.f_power.0 as f64 / self.f_power.1 as f64)
    }

    /// Evaluate the truncated series at a given scale (remainder dropped).
    pub fn eval(&self, mu: f64) -> f64 {
        let pre = self.prefactor_numeric();
        self.terms
            .iter()
            .map(|t| {
                let log_factor = if t.log { (1.0 / mu).ln() } else { 1.0 };
                pre * t.coeff.to_f64() * mu.powi(t.power as i32) * log_factor
            })
            .sum()
    }

    /// JSON form: prefactor object, ordered term array, remainder tag.
    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|t| {
                let (rational, pi_halfpower) = match t.coeff.as_monomial() {
                    Some((h, q)) => {
                        let twice = h.to_rational() * BigRational::from_integer(BigInt::from(2));
                        (json!(q.to_string()), json!(twice.to_integer().to_string()))
                    }
                    None => (Value::Null, Value::Null),
                };
                json!({
                    "power": t.power,
                    "log": t.log,
                    "coeff_rational": rational,
                    "coeff_pi_halfpower": pi_halfpower,
                    "coeff_decimal": t.coeff.to_f64(),
                })
            })
            .collect();
        json!({
            "prefactor": {
                "rational": self.prefactor_rational.as_rational()
                    .map(|q| q.to_string()),
                "rational_decimal": self.prefactor_rational.to_f64(),
                "omega_power": format!("{}/{}", self.omega_power.0, self.omega_power.1),
                "f_power": format!("{}/{}", self.f_power.0, self.f_power.1),
                "decimal": self.prefactor_numeric(),
            },
            "terms": terms,
            "remainder": self.remainder.to_string(),
        })
    }
}

/// The sharp constant Λ(n,k) = ω_n^{2k/n} (2k-1)! B(n/2-k, 2k)^{-1}.
#[derive(Debug, Clone)]
pub struct Threshold {
    /// The rational part (2k-1)! B(n/2-k, 2k)^{-1}.
    pub rational: ExactNumber,
    /// Exponent of ω_n, as a fraction.
    pub omega_power: (i64, i64),
    pub numeric: f64,
}

/// The rational part of the sharp constant: (2k-1)! B(n/2-k, 2k)^{-1}.
///
/// ```
/// use qcurv::energy::threshold_rational;
/// let lam = threshold_rational(5, 2).unwrap();
/// assert_eq!(lam.as_rational().unwrap().to_string(), "105/16");
/// ```
pub fn threshold_rational(n: i64, k: i64) -> Result<ExactNumber> {
    if k < 1 || n <= 2 * k {
        return Err(Error::domain(format!(
            "threshold requires k >= 1 and n > 2k, got n = {n}, k = {k}"
        )));
    }
    Ok(ExactNumber::one()
        .div_exact(&beta(HalfInt::from_twice(n - 2 * k), HalfInt::from_int(2 * k))?)?
        .scale(&BigRational::from_integer(factorial((2 * k - 1) as u64))))
}

/// The sharp constant with its exact rational part and its numeric value.
pub fn threshold(n: i64, k: i64) -> Result<Threshold> {
    let rational = threshold_rational(n, k)?;
    let omega = sphere_volume(n as u32)?.to_f64();
    let numeric = rational.to_f64() * omega.powf(2.0 * k as f64 / n as f64);
    Ok(Threshold { rational, omega_power: (2 * k, n), numeric })
}

/// Product form of the threshold's rational part:
/// `4^{-k} ∏_{j=1}^k (n-2j)(n+2j-2)`. Equal to `threshold_rational`.
pub fn threshold_rational_product(n: i64, k: i64) -> Result<BigRational> {
    if k < 1 || n <= 2 * k {
        return Err(Error::domain("product form requires k >= 1 and n > 2k"));
    }
    let mut q = BigRational::new(BigInt::one(), BigInt::from(4).pow(k as u32));
    for j in 1..=k {
        q *= BigRational::from_integer(BigInt::from((n - 2 * j) * (n + 2 * j - 2)));
    }
    Ok(q)
}

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn rat_of(x: f64) -> BigRational {
    // finite by PointData validation; every finite f64 is an exact rational
    BigRational::from_float(x).expect("finite float")
}

/// Expansion of the weighted critical-power integral:
/// `ω_n f/2ⁿ − ω_n Δf μ²/(2^{n+1}(n-2)) + ω_n Δ²f μ⁴/(2^{n+3}(n-2)(n-4)) + o(μ⁴)`,
/// with the μ⁴ term present only for n > 4.
pub fn denominator_expansion(p: &PointData) -> Result<ExpansionSeries> {
    let (n, _k) = (p.n, p.k);
    let pre = sphere_volume(n as u32)?
        .scale(&BigRational::new(BigInt::one(), BigInt::from(2).pow(n as u32)));
    let mut s = ExpansionSeries {
        prefactor_rational: pre,
        omega_power: (0, 1),
        f_power: (0, 1),
        f_val: p.f_val,
        n,
        terms: Vec::new(),
        remainder: RemainderTag { big_o: false, power: 4, log: false },
    };
    s.push(0, false, ExactNumber::from_rational(rat_of(p.f_val)));
    s.push(
        2,
        false,
        ExactNumber::from_rational(rat_of(p.lap_f) * ratio(-1, 2 * (n - 2))),
    );
    if n > 4 {
        s.push(
            4,
            false,
            ExactNumber::from_rational(rat_of(p.bilap_f) * ratio(1, 8 * (n - 2) * (n - 4))),
        );
    }
    Ok(s)
}

/// The full quotient expansion for the bubble family in dimensions n >= 2k+4:
/// leading Λ-type term, μ² term in Δf, the μ⁴ (Δ²f, (Δf)²) bracket, and the
/// fourth-order Weyl term (with a log(1/μ) flag at n = 2k+4).
pub fn energy_expansion_u(p: &PointData, include_weyl: bool) -> Result<ExpansionSeries> {
    let (n, k) = (p.n, p.k);
    if n < 2 * k + 4 {
        return Err(Error::domain(format!(
            "bubble expansion requires n >= 2k+4, got n = {n}, k = {k}; \
             use mass_expansion in lower dimensions"
        )));
    }
    let lam = threshold_rational(n, k)?;
    let borderline = n == 2 * k + 4;
    let mut s = ExpansionSeries {
        prefactor_rational: ExactNumber::one(),
        omega_power: (2 * k, n),
        f_power: (-(n - 2 * k), n),
        f_val: p.f_val,
        n,
        terms: Vec::new(),
        remainder: RemainderTag { big_o: borderline, power: 4, log: false },
    };
    let f = rat_of(p.f_val);
    let lf = rat_of(p.lap_f);
    let blf = rat_of(p.bilap_f);
    s.push(0, false, lam.clone());
    s.push(2, false, lam.scale(&(ratio(n - 2 * k, 2 * n * (n - 2)) * &lf / &f)));
    let bracket = &blf / (&f * ratio(2 * (n - 4), 1))
        - (&lf * &lf / (&f * &f)) * ratio(n - k, n * (n - 2));
    s.push(4, false, lam.scale(&(ratio(-(n - 2 * k), 4 * n * (n - 2)) * bracket)));
    if include_weyl {
        let weyl = big_C(n, k)?.scale(&(-rat_of(p.weyl_sq)));
        s.push(4, borderline, weyl);
    }
    Ok(s)
}

/// Expansion of the global test-function family in low dimensions:
/// `Λ f(ξ)^{-(n-2k)/n} (1 − mass_coeff(n,k) m(ξ) μ^{n-2k} + o(μ^{n-2k}))`.
pub fn mass_expansion(p: &PointData) -> Result<ExpansionSeries> {
    let (n, k) = (p.n, p.k);
    let m = p.mass.ok_or_else(|| {
        Error::precondition("mass_expansion requires the mass at the candidate point")
    })?;
    let lam = threshold_rational(n, k)?;
    let mut s = ExpansionSeries {
        prefactor_rational: ExactNumber::one(),
        omega_power: (2 * k, n),
        f_power: (-(n - 2 * k), n),
        f_val: p.f_val,
        n,
        terms: Vec::new(),
        remainder: RemainderTag { big_o: false, power: n - 2 * k, log: false },
    };
    s.push(0, false, lam.clone());
    s.push(n - 2 * k, false, (lam * mass_coeff(n, k)?).scale(&(-rat_of(m))));
    Ok(s)
}

/// Which inequality of the existence criterion applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// n >= 2k+5: test |W(ξ)|² f(ξ) + c(n,k) Δ²f(ξ) > 0.
    HighDim,
    /// n = 2k+4: test |W(ξ)|² > 0.
    Borderline,
    /// 2k+1 <= n <= 2k+3: test m(ξ) > 0.
    LowDimMass,
    /// Conformally flat near ξ: test m(ξ) > 0.
    ConformallyFlatMass,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Branch::HighDim => "n>=2k+5",
            Branch::Borderline => "n=2k+4",
            Branch::LowDimMass => "2k+1<=n<=2k+3",
            Branch::ConformallyFlatMass => "conformally-flat",
        };
        f.write_str(s)
    }
}

/// Outcome of the existence criterion at a candidate point.
#[derive(Debug, Clone, Serialize)]
pub struct ExistenceVerdict {
    pub branch: Branch,
    /// The quantity whose strict positivity the branch tests.
    pub hypothesis_value: f64,
    pub certified: bool,
    /// Numeric Λ(n,k) · (max f)^{-(n-2k)/n}; the certified strict upper bound.
    pub threshold: f64,
    /// Caller-asserted vanishing of ∇^j f(ξ) for j in {1, …, n-2k}; required
    /// by the mass branches.
    pub assumed_jet_vanishing: bool,
}

/// Apply the existence criterion. `lcf` asserts that the metric is
/// conformally flat near the candidate point; `jets_vanish` asserts the
/// derivative-vanishing hypothesis of the mass branches.
///
/// At the borderline dimension n = 2k+4 the criterion needs a nonvanishing
/// Weyl tensor, so flat data is not certified:
///
/// ```
/// use qcurv::energy::{certify, Branch, PointData};
/// let p = PointData::new(10, 3, 1.0, 0.0, 0.0, 0.0, None).unwrap();
/// let verdict = certify(&p, false, false, 1.0).unwrap();
/// assert_eq!(verdict.branch, Branch::Borderline);
/// assert!(!verdict.certified);
/// ```
pub fn certify(p: &PointData, lcf: bool, jets_vanish: bool, max_f: f64) -> Result<ExistenceVerdict> {
    let (n, k) = (p.n, p.k);
    if !(max_f > 0.0) || max_f < p.f_val {
        return Err(Error::precondition("max f must be positive and at least f(ξ)"));
    }
    if n >= 2 * k + 2 && p.lap_f != 0.0 {
        return Err(Error::precondition(
            "the criterion requires Δf(ξ) = 0 at the candidate point when n >= 2k+2",
        ));
    }
    let thresh =
        threshold(n, k)?.numeric * max_f.powf(-((n - 2 * k) as f64) / n as f64);
    let (branch, hypothesis_value, certified) = if n <= 2 * k + 3 || lcf {
        let m = p.mass.ok_or_else(|| {
            Error::precondition("the mass branch requires the mass at the candidate point")
        })?;
        let branch = if n <= 2 * k + 3 { Branch::LowDimMass } else { Branch::ConformallyFlatMass };
        (branch, m, m > 0.0 && jets_vanish)
    } else if n == 2 * k + 4 {
        (Branch::Borderline, p.weyl_sq, p.weyl_sq > 0.0)
    } else {
        let h = p.weyl_sq * p.f_val + small_c(n, k)?.to_f64() * p.bilap_f;
        (Branch::HighDim, h, h > 0.0)
    };
    Ok(ExistenceVerdict {
        branch,
        hypothesis_value,
        certified,
        threshold: thresh,
        assumed_jet_vanishing: jets_vanish,
    })
}

// -------------------------------------------------------------------------
// Fourth-order tensor blocks: exact μ⁴ coefficients (μ⁴ log(1/μ) at
// n = 2k+4) of the elementary bilinear integrals, divided by ω_n. Each takes
// only the trace scalars the closed forms consume.
// -------------------------------------------------------------------------

fn fact(m: i64) -> Result<BigRational> {
    if m < 0 {
        return Err(Error::domain(format!("negative factorial argument {m}")));
    }
    Ok(BigRational::from_integer(factorial(m as u64)))
}

fn pow2_inv(e: i64) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(2).pow(e as u32))
}

fn beta_inv(a: HalfInt, b: HalfInt) -> Result<ExactNumber> {
    ExactNumber::one().div_exact(&beta(a, b)?)
}

fn block_guard(n: i64, k: i64, min_k: i64) -> Result<()> {
    if k < min_k || n < 2 * k + 4 {
        return Err(Error::domain(format!(
            "block expansion requires k >= {min_k} and n >= 2k+4, got n = {n}, k = {k}"
        )));
    }
    Ok(())
}

/// μ⁴ factor for one l-slot: at n = 2k+4 only the bottom slot carries the
/// log coefficient 2 and the rest drop into the remainder; otherwise the
/// plain Beta moment.
fn mu4_slot(
    n: i64,
    k: i64,
    l: i64,
    l_min: i64,
    beta_a_twice: i64,
    beta_b: i64,
) -> Result<Option<ExactNumber>> {
    if n == 2 * k + 4 {
        if l == l_min {
            Ok(Some(ExactNumber::from_integer(2)))
        } else {
            Ok(None)
        }
    } else {
        Ok(Some(beta(HalfInt::from_twice(beta_a_twice), HalfInt::from_int(beta_b))?))
    }
}

/// `∫ f U_μ Δ^{k-2} U_μ / ω_n` at μ⁴, for the value `scalar = f(ξ)`.
pub fn scalar_block_km2(n: i64, k: i64, scalar: &BigRational) -> Result<ExactNumber> {
    block_guard(n, k, 2)?;
    let pref = pow2_inv(n + 1 - 2 * k) * fact(n - 1)? * fact(k - 2)?
        / BigRational::from_integer(BigInt::from((n - 2) * (n - 4) * (n - 2 * k - 2)));
    let mut acc = ExactNumber::zero();
    for l in (k - 2)..=(2 * k - 4) {
        let Some(slot) = mu4_slot(n, k, l, k - 2, n + 2 * l - 4 * k, 2 * k - l - 2)? else {
            continue;
        };
        let w = fact(l)? / (fact(l - k + 2)? * fact(2 * k - l - 4)? * fact(n + l - 2 * k - 1)?);
        acc += (beta_inv(HalfInt::from_twice(n - 2 * k - 2), HalfInt::from_int(l + 1))? * slot)
            .scale(&w);
    }
    Ok(acc.scale(&(pref * scalar)))
}

/// `∫ (T, ∇U_μ) Δ^{k-2} U_μ / ω_n` at μ⁴, for `div_trace = Σ T_{a;a}(ξ)`.
pub fn gradient_block_km2(n: i64, k: i64, div_trace: &BigRational) -> Result<ExactNumber> {
    block_guard(n, k, 2)?;
    let pref = -pow2_inv(n + 2 - 2 * k)
        * BigRational::from_integer(BigInt::from(n - 2 * k))
        * fact(n - 1)?
        * fact(k - 2)?
        / BigRational::from_integer(BigInt::from((n - 2) * (n - 4) * (n - 2 * k - 2)));
    let mut acc = ExactNumber::zero();
    for l in (k - 2)..=(2 * k - 4) {
        let Some(slot) = mu4_slot(n, k, l, k - 2, n + 2 * l - 4 * k, 2 * k - l - 2)? else {
            continue;
        };
        let w = fact(l)? / (fact(l - k + 2)? * fact(2 * k - l - 4)? * fact(n + l - 2 * k)?);
        acc += (beta_inv(HalfInt::from_twice(n - 2 * k - 2), HalfInt::from_int(l + 1))? * slot)
            .scale(&w);
    }
    Ok(acc.scale(&(pref * div_trace)))
}

/// μ² coefficient of `∫ (T, ∇²U_μ) Δ^{k-2} U_μ / ω_n`, for `trace = Σ T_{aa}(ξ)`.
pub fn hessian_block_km2_mu2(n: i64, k: i64, trace: &BigRational) -> Result<ExactNumber> {
    block_guard(n, k, 2)?;
    let pref = pow2_inv(n + 4 - 2 * k)
        * BigRational::from_integer(BigInt::from(n - 2 * k))
        * fact(n - 1)?
        * fact(k - 2)?
        / BigRational::from_integer(BigInt::from((n - 2) * (n - 4) * (n - 2 * k - 2)));
    let mut acc = ExactNumber::zero();
    for l in (k - 2)..=(2 * k - 4) {
        let w = fact(l)? / (fact(l - k + 2)? * fact(2 * k - l - 4)? * fact(n + l - 2 * k + 1)?);
        let moment = beta(
            HalfInt::from_twice(n - 4 * k + 2 * l + 2),
            HalfInt::from_int(2 * k - l - 2),
        )?;
        let scale = ratio(-2 * (n - 4) * (n + 2 * l - 2 * k), 1);
        acc += (beta_inv(HalfInt::from_twice(n - 2 * k - 2), HalfInt::from_int(l + 1))? * moment)
            .scale(&(w * scale));
    }
    Ok(acc.scale(&(pref * trace)))
}

/// μ⁴ coefficient of `∫ (T, ∇²U_μ) Δ^{k-2} U_μ / ω_n`, for the double traces
/// `sym_double = Σ (T_{ab;ab} + T_{ab;ba})(ξ)` and `lap_double = Σ T_{aa;bb}(ξ)`.
pub fn hessian_block_km2_mu4(
    n: i64,
    k: i64,
    sym_double: &BigRational,
    lap_double: &BigRational,
) -> Result<ExactNumber> {
    block_guard(n, k, 2)?;
    let pref = pow2_inv(n + 4 - 2 * k)
        * BigRational::from_integer(BigInt::from(n - 2 * k))
        * fact(n - 1)?
        * fact(k - 2)?
        / BigRational::from_integer(BigInt::from((n - 2) * (n - 4) * (n - 2 * k - 2)));
    let mut acc = ExactNumber::zero();
    for l in (k - 2)..=(2 * k - 4) {
        let Some(slot) = mu4_slot(n, k, l, k - 2, n + 2 * l - 4 * k, 2 * k - l - 2)? else {
            continue;
        };
        let w = fact(l)? / (fact(l - k + 2)? * fact(2 * k - l - 4)? * fact(n + l - 2 * k + 1)?);
        let bracket = ratio(n - 2 * k + 2, 1) * sym_double
            - ratio(n + 2 * l - 2 * k, 1) * lap_double;
        acc += (beta_inv(HalfInt::from_twice(n - 2 * k - 2), HalfInt::from_int(l + 1))? * slot)
            .scale(&(w * bracket));
    }
    Ok(acc.scale(&pref))
}

/// μ⁴ coefficient of `∫ (T, ∇²U_μ) Δ^{k-3} U_μ / ω_n`, for `trace = Σ T_{aa}(ξ)`.
pub fn hessian_block_km3(n: i64, k: i64, trace: &BigRational) -> Result<ExactNumber> {
    block_guard(n, k, 3)?;
    let pref = -pow2_inv(n + 5 - 2 * k)
        * BigRational::from_integer(BigInt::from(n - 2 * k))
        * fact(n - 1)?
        * fact(k - 3)?
        / BigRational::from_integer(BigInt::from((n - 2) * (n - 4) * (n - 2 * k - 2)));
    let mut acc = ExactNumber::zero();
    for l in (k - 3)..=(2 * k - 6) {
        let Some(slot) = mu4_slot(n, k, l, k - 3, n + 2 * l - 4 * k + 2, 2 * k - l - 3)? else {
            continue;
        };
        let w = ratio(n + 2 * l - 2 * k, 1) * fact(l)?
            / (fact(l - k + 3)? * fact(2 * k - l - 6)? * fact(n + l - 2 * k + 1)?);
        acc += (beta_inv(HalfInt::from_twice(n - 2 * k - 2), HalfInt::from_int(l + 1))? * slot)
            .scale(&w);
    }
    Ok(acc.scale(&(pref * trace)))
}

/// μ⁴ coefficient of `∫ (T, ∇³U_μ) Δ^{k-3} U_μ / ω_n`, for
/// `combo = Σ (T_{aab;b} + T_{aba;b} + T_{abb;a})(ξ)`.
pub fn third_block_km3(n: i64, k: i64, combo: &BigRational) -> Result<ExactNumber> {
    block_guard(n, k, 3)?;
    let pref = pow2_inv(n + 6 - 2 * k)
        * BigRational::from_integer(BigInt::from((n - 2 * k) * (n - 2 * k + 2)))
        * fact(n - 1)?
        * fact(k - 3)?
        / BigRational::from_integer(BigInt::from((n - 2) * (n - 4) * (n - 2 * k - 2)));
    let mut acc = ExactNumber::zero();
    for l in (k - 3)..=(2 * k - 6) {
        let Some(slot) = mu4_slot(n, k, l, k - 3, n + 2 * l - 4 * k + 2, 2 * k - l - 3)? else {
            continue;
        };
        let w = ratio(n + 2 * l - 2 * k, 1) * fact(l)?
            / (fact(l - k + 3)? * fact(2 * k - l - 6)? * fact(n + l - 2 * k + 2)?);
        acc += (beta_inv(HalfInt::from_twice(n - 2 * k - 2), HalfInt::from_int(l + 1))? * slot)
            .scale(&w);
    }
    Ok(acc.scale(&(pref * combo)))
}

/// μ⁴ coefficient of `∫ (T, ∇⁴U_μ) Δ^{k-4} U_μ / ω_n`, for
/// `combo = Σ (T_{aabb} + T_{abab} + T_{abba})(ξ)`.
pub fn fourth_block_km4(n: i64, k: i64, combo: &BigRational) -> Result<ExactNumber> {
    block_guard(n, k, 4)?;
    let pref = pow2_inv(n + 8 - 2 * k)
        * BigRational::from_integer(BigInt::from((n - 2 * k) * (n - 2 * k + 2)))
        * fact(n - 1)?
        * fact(k - 4)?
        / BigRational::from_integer(BigInt::from(3 * (n - 2) * (n - 4) * (n - 2 * k - 2)));
    let mut acc = ExactNumber::zero();
    for l in (k - 4)..=(2 * k - 8) {
        let Some(slot) = mu4_slot(n, k, l, k - 4, n + 2 * l - 4 * k + 4, 2 * k - l - 4)? else {
            continue;
        };
        let w = ratio((n + 2 * l - 2 * k) * (n + 2 * l - 2 * k + 2), 1) * fact(l)?
            / (fact(l - k + 4)? * fact(2 * k - l - 8)? * fact(n + l - 2 * k + 3)?);
        acc += (beta_inv(HalfInt::from_twice(n - 2 * k - 2), HalfInt::from_int(l + 1))? * slot)
            .scale(&w);
    }
    Ok(acc.scale(&(pref * combo)))
}

/// Exact μ⁴ curvature coefficient of the quotient, assembled independently
/// block by block from the curvature trace table, normalized to |W(ξ)|² = 1
/// and f ≡ 1. At n = 2k+4 it is the μ⁴ log(1/μ) coefficient. Equals minus the
/// bracket-form fourth-order constant.
pub fn weyl_mu4_quotient_coefficient(n: i64, k: i64) -> Result<ExactNumber> {
    block_guard(n, k, 2)?;
    let cc = curvature_coeffs(n, k)?;
    let km1 = ratio(k - 1, 1);
    // zeroth-order slot paired with Δ^{k-2}
    let c0 = &km1 * &cc.scalar_km2 + &cc.lap_scalar_km1;
    // gradient slot; the trace of a gradient is minus the Laplacian
    let v = &km1 * &cc.grad_km2_trace + ratio(2, 1) * &cc.lap_scalar_km1;
    // Hessian slot (k-1)T₂ - f₁g: double traces of the metric part reduce to
    // the Laplacian of the zeroth-order scalar
    let sym_double =
        ratio(2, 1) * (&km1 * &cc.hess_km2_double_trace + &cc.lap_scalar_km1);
    let lap_double = &km1 * &cc.hess_km2_double_trace + ratio(n, 1) * &cc.lap_scalar_km1;
    let mut total = (scalar_block_km2(n, k, &c0)?
        + gradient_block_km2(n, k, &v)?
        + hessian_block_km2_mu4(n, k, &sym_double, &lap_double)?)
    .scale(&ratio(k, 1));
    if k >= 3 {
        let m3 = ratio(k * (k - 1) * (k - 2), 1);
        total += (hessian_block_km3(n, k, &cc.hess_km3_trace)?
            + third_block_km3(n, k, &cc.third_km3_combo)?)
        .scale(&m3);
    }
    if k >= 4 {
        let m4 = ratio(k * (k - 1) * (k - 2) * (k - 3), 1);
        total += fourth_block_km4(n, k, &cc.fourth_km4_combo)?.scale(&m4);
    }
    // dividing by the flat denominator (ω_n/2ⁿ)^{(n-2k)/n} and the prefactor
    // ω_n^{2k/n} cancels the ω_n carried by every block, leaving 2^{n-2k}
    Ok(total.scale(&BigRational::from_integer(BigInt::from(2).pow((n - 2 * k) as u32))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{big_C_from_bracket, mass_coeff};
    use crate::quad::integrate;
    use crate::radial::{laplacian_pow_u, BubbleParams};
    use num_traits::{ToPrimitive, Zero};

    fn point(n: i64, k: i64) -> PointData {
        PointData::new(n, k, 1.0, 0.0, 0.0, 0.0, None).unwrap()
    }

    #[test]
    fn threshold_spot_values() {
        let t = threshold(3, 1).unwrap();
        assert_eq!(t.rational.as_rational().unwrap(), ratio(3, 4));
        assert_eq!(t.omega_power, (2, 3));
        assert!((t.numeric - 5.478).abs() < 2e-3, "numeric {}", t.numeric);
        let r52 = threshold_rational(5, 2).unwrap();
        assert_eq!(r52.as_rational().unwrap(), ratio(105, 16));
    }

    #[test]
    fn threshold_rational_matches_product_form() {
        for k in 1..=6i64 {
            for n in (2 * k + 1)..=(2 * k + 20) {
                let a = threshold_rational(n, k).unwrap().as_rational().unwrap();
                let b = threshold_rational_product(n, k).unwrap();
                assert_eq!(a, b, "n = {n}, k = {k}");
            }
        }
    }

    #[test]
    fn denominator_expansion_matches_displayed_coefficients() {
        // f ≡ 1: constant term only
        let s = denominator_expansion(&point(9, 2)).unwrap();
        assert_eq!(s.terms.len(), 1);
        assert_eq!(s.term_coeff(0, false).unwrap().as_rational().unwrap(), ratio(1, 1));
        let omega9 = sphere_volume(9).unwrap();
        assert_eq!(s.prefactor_rational, omega9.scale(&ratio(1, 512)));

        // ratio of the μ² term to the constant term is -Δf/(2(n-2)f)
        let p = PointData::new(9, 2, 2.0, 3.0, 0.0, 0.0, None).unwrap();
        let s = denominator_expansion(&p).unwrap();
        let t0 = s.term_coeff(0, false).unwrap().as_rational().unwrap();
        let t2 = s.term_coeff(2, false).unwrap().as_rational().unwrap();
        assert_eq!(t2 / t0, rat_of(3.0) * ratio(-1, 2 * 7) / rat_of(2.0));

        // n = 8, Δf = 0, Δ²f = 1, f = 1: μ⁴ coefficient ω₈/(2^11 · 6 · 4)
        let p = PointData::new(8, 2, 1.0, 0.0, 1.0, 0.0, None).unwrap();
        let s = denominator_expansion(&p).unwrap();
        let abs4 = s.prefactor_rational.clone() * s.term_coeff(4, false).unwrap().clone();
        assert_eq!(abs4, sphere_volume(8).unwrap().scale(&ratio(1, 2048 * 24)));
    }

    #[test]
    fn energy_expansion_leading_term_is_threshold() {
        for k in 2..=5i64 {
            for n in (2 * k + 4)..=(2 * k + 12) {
                let s = energy_expansion_u(&point(n, k), true).unwrap();
                assert_eq!(
                    s.term_coeff(0, false).unwrap(),
                    &threshold_rational(n, k).unwrap(),
                    "n = {n}, k = {k}"
                );
                assert_eq!(s.omega_power, (2 * k, n));
                assert_eq!(s.f_power, (-(n - 2 * k), n));
            }
        }
    }

    #[test]
    fn energy_expansion_mu2_coefficient() {
        // μ² coefficient is Λ_rat (n-2k) Δf / (2n(n-2) f)
        let p = PointData::new(12, 3, 2.0, 5.0, 0.0, 0.0, None).unwrap();
        let s = energy_expansion_u(&p, false).unwrap();
        let expected = threshold_rational(12, 3)
            .unwrap()
            .scale(&(ratio(6, 2 * 12 * 10) * rat_of(5.0) / rat_of(2.0)));
        assert_eq!(s.term_coeff(2, false).unwrap(), &expected);
    }

    #[test]
    fn energy_expansion_weyl_term_placement() {
        // trivial weight, flat Weyl: constant term only
        let s = energy_expansion_u(&point(13, 3), true).unwrap();
        assert_eq!(s.terms.len(), 1);
        assert!(!s.remainder.big_o);

        // n = 2k+4 puts the curvature term on the log slot with a big-O tag
        let p = PointData::new(10, 3, 1.0, 0.0, 0.0, 2.0, None).unwrap();
        let s = energy_expansion_u(&p, true).unwrap();
        let expected = big_C(10, 3).unwrap().scale(&(-rat_of(2.0)));
        assert_eq!(s.term_coeff(4, true).unwrap(), &expected);
        assert!(s.term_coeff(4, false).is_none());
        assert!(s.remainder.big_o);

        // above the borderline the curvature term is a plain μ⁴ term
        let p = PointData::new(12, 3, 1.0, 0.0, 0.0, 2.0, None).unwrap();
        let s = energy_expansion_u(&p, true).unwrap();
        let expected = big_C(12, 3).unwrap().scale(&(-rat_of(2.0)));
        assert_eq!(s.term_coeff(4, false).unwrap(), &expected);
        assert!(s.term_coeff(4, true).is_none());

        // below the admissible range the expansion is rejected
        let low = PointData::new(9, 3, 1.0, 0.0, 0.0, 0.0, Some(1.0)).unwrap();
        assert!(energy_expansion_u(&low, true).is_err());
    }

    #[test]
    fn mass_expansion_first_order_flip() {
        // μ^{n-2k} coefficient is exactly -Λ_rat · mass_coeff · m
        for (n, k, m) in [(3i64, 1i64, 1.0f64), (5, 2, 0.5), (7, 3, 2.0), (9, 4, 1.0)] {
            let p = PointData::new(n, k, 1.0, 0.0, 0.0, 0.0, Some(m)).unwrap();
            let s = mass_expansion(&p).unwrap();
            let expected = (threshold_rational(n, k).unwrap() * mass_coeff(n, k).unwrap())
                .scale(&(-rat_of(m)));
            assert_eq!(s.term_coeff(n - 2 * k, false).unwrap(), &expected);
        }
        // zero mass: flat series
        let p = PointData::new(5, 2, 1.0, 0.0, 0.0, 0.0, Some(0.0)).unwrap();
        assert_eq!(mass_expansion(&p).unwrap().terms.len(), 1);
        // (3,1), m = 1: the coefficient is -64/3 (π-free at n = 3)
        let p = PointData::new(3, 1, 1.0, 0.0, 0.0, 0.0, Some(1.0)).unwrap();
        let s = mass_expansion(&p).unwrap();
        let lam = threshold_rational(3, 1).unwrap();
        let c = s.term_coeff(1, false).unwrap().div_exact(&lam).unwrap();
        assert_eq!(c.as_rational().unwrap(), ratio(-64, 3));
    }

    #[test]
    fn critical_exponent_cancellation() {
        // (n-2k)/n · 2n/(n-2k) = 2, the exponent algebra behind the sign flip
        for n in 3..=60i64 {
            for k in 1..n / 2 {
                let lhs = ratio(n - 2 * k, n) * ratio(2 * n, n - 2 * k);
                assert_eq!(lhs, ratio(2, 1));
            }
        }
    }

    #[test]
    fn point_data_validation() {
        assert!(PointData::new(9, 2, 0.0, 0.0, 0.0, 0.0, None).is_err());
        assert!(PointData::new(9, 2, 1.0, 0.0, 0.0, -1.0, None).is_err());
        assert!(PointData::new(4, 2, 1.0, 0.0, 0.0, 0.0, None).is_err());
        // 2k+1 <= n <= 2k+3 requires the mass
        assert!(PointData::new(5, 2, 1.0, 0.0, 0.0, 0.0, None).is_err());
        assert!(PointData::new(5, 2, 1.0, 0.0, 0.0, 0.0, Some(1.0)).is_ok());
    }

    #[test]
    fn certify_branches() {
        // n = 2k+5: Weyl + bilaplacian test
        let p = PointData::new(11, 3, 1.0, 0.0, 0.0, 1.0, None).unwrap();
        let v = certify(&p, false, false, 1.0).unwrap();
        assert_eq!(v.branch, Branch::HighDim);
        assert!(v.certified);
        assert!((v.hypothesis_value - 1.0).abs() < 1e-15);
        assert!(v.threshold > 0.0);

        // n = 2k+4 requires nonzero Weyl
        let p = PointData::new(10, 3, 1.0, 0.0, 0.0, 0.0, None).unwrap();
        let v = certify(&p, false, false, 1.0).unwrap();
        assert_eq!(v.branch, Branch::Borderline);
        assert!(!v.certified);
        let p = PointData::new(10, 3, 1.0, 0.0, 0.0, 1.0, None).unwrap();
        assert!(certify(&p, false, false, 1.0).unwrap().certified);

        // low dimension: mass branch, gated on the jet flag
        let p = PointData::new(5, 2, 1.0, 0.0, 0.0, 0.0, Some(0.5)).unwrap();
        let v = certify(&p, false, true, 1.0).unwrap();
        assert_eq!(v.branch, Branch::LowDimMass);
        assert!(v.certified);
        assert!(!certify(&p, false, false, 1.0).unwrap().certified);

        // conformally flat: mass branch in high dimension
        let p = PointData::new(12, 3, 1.0, 0.0, 0.0, 0.0, Some(1.0)).unwrap();
        let v = certify(&p, true, true, 1.0).unwrap();
        assert_eq!(v.branch, Branch::ConformallyFlatMass);
        assert!(v.certified);
        // same data without the mass: precondition failure
        let p = PointData::new(12, 3, 1.0, 0.0, 0.0, 0.0, None).unwrap();
        assert!(certify(&p, true, true, 1.0).is_err());

        // nonzero Δf rejected for n >= 2k+2
        let p = PointData::new(11, 3, 1.0, 0.5, 0.0, 1.0, None).unwrap();
        assert!(certify(&p, false, false, 1.0).is_err());
    }

    #[test]
    fn certify_monotone_in_hypothesis() {
        let mut last = false;
        for w in [0.0, 0.5, 1.0, 4.0] {
            let p = PointData::new(10, 3, 1.0, 0.0, 0.0, w, None).unwrap();
            let c = certify(&p, false, false, 1.0).unwrap().certified;
            assert!(c || !last, "certification flipped off as |W|² grew");
            last = c;
        }
        let mut last = false;
        for m in [-1.0, 0.0, 0.25, 3.0] {
            let p = PointData::new(5, 2, 1.0, 0.0, 0.0, 0.0, Some(m)).unwrap();
            let c = certify(&p, false, true, 1.0).unwrap().certified;
            assert!(c || !last, "certification flipped off as the mass grew");
            last = c;
        }
    }

    #[test]
    fn quotient_weyl_coefficient_matches_bracket_constant() {
        // Two independent paths to the fourth-order curvature coefficient:
        // the block-by-block assembly against the direct bracket sum. The
        // k = 2 closed-form table entry is one third of the bracket value, so
        // the comparison pins the bracket normalization at every k.
        for k in 2..=4i64 {
            for n in (2 * k + 4)..=(2 * k + 12) {
                let assembled = weyl_mu4_quotient_coefficient(n, k).unwrap();
                let direct = big_C_from_bracket(n, k).unwrap();
                assert!(
                    (assembled.clone() + direct.clone()).is_zero(),
                    "n = {n}, k = {k}: assembled {assembled:?} vs -{direct:?}"
                );
            }
        }
    }

    #[test]
    fn bracket_constant_vs_table_constant() {
        for k in 3..=6i64 {
            for n in (2 * k + 4)..=(2 * k + 10) {
                assert_eq!(big_C(n, k).unwrap(), big_C_from_bracket(n, k).unwrap());
            }
        }
        for n in [8i64, 9, 12, 20] {
            let three = big_C(n, 2).unwrap().scale(&ratio(3, 1));
            assert_eq!(three, big_C_from_bracket(n, 2).unwrap());
        }
    }

    #[test]
    fn hessian_mu2_block_vanishes_on_traceless_slot() {
        // the Hessian slot of the assembly is trace-free at the center, so
        // the expansion has no μ² curvature term; the block itself is nonzero
        let nonzero = hessian_block_km2_mu2(12, 3, &ratio(1, 1)).unwrap();
        assert!(!nonzero.is_zero());
        let zero = hessian_block_km2_mu2(12, 3, &BigRational::zero()).unwrap();
        assert!(zero.is_zero());
    }

    #[test]
    fn scalar_block_matches_direct_moment() {
        // k = 2: ∫ U Δ⁰U = ∫ U² = (ω_{n-1}/2) B(n/2, n/2-4) μ⁴, cross-checked
        // through the sphere-volume doubling identity
        for n in [10i64, 11, 13, 16] {
            let block = scalar_block_km2(n, 2, &ratio(1, 1)).unwrap();
            let direct = beta(HalfInt::from_twice(n), HalfInt::from_twice(n - 8))
                .unwrap()
                .scale(&ratio(1, 2));
            // block is the coefficient divided by ω_n; ω_{n-1}/ω_n = 2^{1-n}/B(n/2,n/2)
            let ratio_omega = beta(HalfInt::from_twice(n), HalfInt::from_twice(n))
                .unwrap()
                .recip()
                .unwrap()
                .scale(&pow2_inv(n - 1));
            assert_eq!(block, direct * ratio_omega, "n = {n}");
        }
    }

    #[test]
    fn series_eval_and_json() {
        let p = PointData::new(12, 3, 2.0, 1.0, 0.5, 1.5, None).unwrap();
        let s = energy_expansion_u(&p, true).unwrap();
        let j = s.to_json();
        assert_eq!(j["terms"].as_array().unwrap().len(), s.terms.len());
        assert_eq!(j["prefactor"]["omega_power"], "6/12");
        assert_eq!(
            j["terms"][0]["coeff_rational"],
            threshold_rational(12, 3).unwrap().as_rational().unwrap().to_string()
        );
        assert!(j["remainder"].as_str().unwrap().starts_with("o(mu^4"));

        // eval reproduces the prefactor times the term sum
        let mu: f64 = 1e-2;
        let pre = s.prefactor_numeric();
        let by_hand: f64 = s
            .terms
            .iter()
            .map(|t| {
                pre * t.coeff.to_f64()
                    * mu.powi(t.power as i32)
                    * if t.log { (1.0 / mu).ln() } else { 1.0 }
            })
            .sum();
        assert!((s.eval(mu) - by_hand).abs() <= 1e-12 * by_hand.abs());
        let lam = threshold(12, 3).unwrap().numeric * 2.0f64.powf(-0.5);
        assert!((s.eval(1e-6) - lam).abs() < 1e-6 * lam);
    }

    #[test]
    fn numeric_bubble_energy_matches_constant_term() {
        // (n,k) = (8,2), μ = 10⁻²: the flat integral ∫ U_μ Δ²U_μ over the unit
        // ball rescales to ∫ U Δ²U over B(0, 1/μ), integrated radially
        let (n, k, mu) = (8i64, 2i64, 1e-2f64);
        let p = BubbleParams::new(n, k, mu).unwrap();
        let integrand = |rho: f64| {
            let r = rho * rho;
            rho.powi((n - 1) as i32) * p.u(r) * laplacian_pow_u(&p, k, r).unwrap()
        };
        let radial = integrate(integrand, 0.0, 1.0 / mu, 1e-9).unwrap();
        let omega_nm1 = sphere_volume((n - 1) as u32).unwrap().to_f64();
        let value = omega_nm1 * radial;
        let expected = threshold_rational(n, k).unwrap().to_f64()
            * sphere_volume(n as u32).unwrap().to_f64()
            * 2.0f64.powi((2 * k - n) as i32);
        let rel = ((value - expected) / expected).abs();
        assert!(rel < 1e-5 + mu.powi(4), "relative error {rel:e}");
    }

    #[test]
    fn exactness_of_coefficients_for_rational_inputs() {
        // every finite float input is converted exactly, so coefficients stay
        // exact rationals end to end
        let p = PointData::new(12, 3, 0.5, 0.25, 2.0, 0.0, None).unwrap();
        let s = energy_expansion_u(&p, false).unwrap();
        for t in &s.terms {
            assert!(t.coeff.as_rational().is_some());
        }
        let t4 = s.term_coeff(4, false).unwrap().as_rational().unwrap();
        // -(n-2k)/(4n(n-2)) (Δ²f/(2(n-4)f) - (n-k)(Δf)²/(n(n-2)f²)) Λ_rat
        let lam = threshold_rational(12, 3).unwrap().as_rational().unwrap();
        let bracket = ratio(2, 1) / (ratio(16, 1) * ratio(1, 2))
            - ratio(9, 120) * ratio(1, 16) / (ratio(1, 2) * ratio(1, 2));
        let expected = lam * ratio(-6, 480) * bracket;
        assert_eq!(t4, expected);
        assert_eq!(
            rat_of(0.25) * rat_of(0.25),
            ratio(1, 16),
            "float-to-rational conversion is exact"
        );
    }

    #[test]
    fn mass_expansion_requires_mass() {
        let p = point(12, 3);
        assert!(matches!(mass_expansion(&p), Err(Error::Precondition(_))));
    }

    #[test]
    fn blocks_reject_out_of_range_orders() {
        assert!(scalar_block_km2(8, 1, &ratio(1, 1)).is_err());
        assert!(hessian_block_km3(10, 2, &ratio(1, 1)).is_err());
        assert!(fourth_block_km4(12, 3, &ratio(1, 1)).is_err());
        assert!(weyl_mu4_quotient_coefficient(9, 3).is_err());
    }

    #[test]
    fn threshold_numeric_agrees_with_explicit_float() {
        // ω₅ = π³, Λ(5,2) = (105/16) π^{6·2/5... } spot-check numerically
        let t = threshold(5, 2).unwrap();
        let omega5 = std::f64::consts::PI.powi(3);
        let expected = 105.0 / 16.0 * omega5.powf(4.0 / 5.0);
        assert!((t.numeric - expected).abs() < 1e-10 * expected);
        let q = t.rational.as_rational().unwrap();
        assert_eq!(q.to_f64().unwrap(), 105.0 / 16.0);
    }
}

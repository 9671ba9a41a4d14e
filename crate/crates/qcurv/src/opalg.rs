//! Normal-ordering engine for graded noncommutative operator words built
//! from the Laplacian and curvature symbols.
//!
//! Operator expressions are linear combinations of words over a fixed
//! generator alphabet, with coefficients that are rational functions of the
//! dimension `n`. The engine assembles the conformally covariant operator of
//! order `2k` from its product formula in terms of the building blocks
//! `M_2 = Δ + μ₂`, `M_4 = 4δP♯d + μ₄` and `M_6 = δA₆♯d + μ₆`, then rewrites
//! it into the normal form `Σ Δ^a (T, ∇^b)` by commuting Laplacians to the
//! left. Content below the truncation order `2k-4` is moved to an audited
//! `Z` bucket (tracked by order bound), never silently deleted.
//!
//! The two commutation rules for `g·Δ^j` (scalar multiplier) and `δT♯d·Δ^j`
//! are axioms of the engine, exact down to two below the top order; the
//! remaining adjacency rules (scalar past first-order parts, Leibniz
//! products of contracted-derivative generators) are exact.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::{Error, Result};

/// Polynomial in the dimension variable `n` with rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly {
    // coeffs[i] multiplies n^i; trailing zeros trimmed; empty means zero
    coeffs: Vec<BigRational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(q: BigRational) -> Self {
        Poly { coeffs: vec![q] }.trimmed()
    }

    pub fn int(v: i64) -> Self {
        Poly::constant(BigRational::from_integer(BigInt::from(v)))
    }

    /// The variable `n` itself.
    pub fn var() -> Self {
        Poly {
            coeffs: vec![BigRational::zero(), BigRational::one()],
        }
    }

    /// `a·n + b`.
    pub fn linear(a: i64, b: i64) -> Self {
        Poly {
            coeffs: vec![
                BigRational::from_integer(BigInt::from(b)),
                BigRational::from_integer(BigInt::from(a)),
            ],
        }
        .trimmed()
    }

    fn trimmed(mut self) -> Self {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    fn leading(&self) -> Option<&BigRational> {
        self.coeffs.last()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut coeffs = vec![BigRational::zero(); self.coeffs.len().max(other.coeffs.len())];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        Poly { coeffs }.trimmed()
    }

    pub fn neg(&self) -> Poly {
        Poly {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut coeffs =
            vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Poly { coeffs }.trimmed()
    }

    fn scale(&self, q: &BigRational) -> Poly {
        Poly {
            coeffs: self.coeffs.iter().map(|c| c * q).collect(),
        }
        .trimmed()
    }

    /// Euclidean division; the divisor must be nonzero.
    fn divrem(&self, d: &Poly) -> (Poly, Poly) {
        assert!(!d.is_zero(), "polynomial division by zero");
        let mut rem = self.clone();
        let mut quot = vec![
            BigRational::zero();
            self.coeffs.len().saturating_sub(d.coeffs.len()) + 1
        ];
        let dl = d.leading().unwrap().clone();
        while !rem.is_zero() && rem.coeffs.len() >= d.coeffs.len() {
            let shift = rem.coeffs.len() - d.coeffs.len();
            let factor = rem.leading().unwrap() / &dl;
            quot[shift] = factor.clone();
            let mut sub = vec![BigRational::zero(); shift];
            sub.extend(d.coeffs.iter().map(|c| c * &factor));
            rem = rem.sub(&Poly { coeffs: sub });
        }
        (Poly { coeffs: quot }.trimmed(), rem)
    }

    fn monic(&self) -> Poly {
        match self.leading() {
            Some(l) if !l.is_one() => self.scale(&l.recip()),
            _ => self.clone(),
        }
    }

    fn gcd(a: &Poly, b: &Poly) -> Poly {
        let (mut x, mut y) = (a.clone(), b.clone());
        while !y.is_zero() {
            let (_, r) = x.divrem(&y);
            x = y;
            y = r;
        }
        if x.is_zero() {
            x
        } else {
            x.monic()
        }
    }

    pub fn eval(&self, n: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * n + c;
        }
        acc
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let a = c.abs();
            match i {
                0 => write!(f, "{a}")?,
                _ => {
                    if !a.is_one() {
                        write!(f, "{a}")?;
                    }
                    if i == 1 {
                        write!(f, "n")?;
                    } else {
                        write!(f, "n^{i}")?;
                    }
                }
            }
            first = false;
        }
        Ok(())
    }
}

/// Rational function of `n`, kept reduced with a monic denominator, so that
/// structural equality is semantic equality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatFn {
    num: Poly,
    den: Poly,
}

impl RatFn {
    pub fn new(num: Poly, den: Poly) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        if num.is_zero() {
            return RatFn {
                num: Poly::zero(),
                den: Poly::int(1),
            };
        }
        let g = Poly::gcd(&num, &den);
        let (num, _) = num.divrem(&g);
        let (den, _) = den.divrem(&g);
        let lead = den.leading().unwrap().clone();
        RatFn {
            num: num.scale(&lead.recip()),
            den: den.scale(&lead.recip()),
        }
    }

    pub fn zero() -> Self {
        RatFn::new(Poly::zero(), Poly::int(1))
    }

    pub fn one() -> Self {
        RatFn::int(1)
    }

    pub fn int(v: i64) -> Self {
        RatFn::new(Poly::int(v), Poly::int(1))
    }

    pub fn ratio(a: i64, b: i64) -> Self {
        RatFn::new(Poly::int(a), Poly::int(b))
    }

    pub fn from_poly(p: Poly) -> Self {
        RatFn::new(p, Poly::int(1))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn add(&self, other: &RatFn) -> RatFn {
        RatFn::new(
            self.num
                .mul(&other.den)
                .add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub fn sub(&self, other: &RatFn) -> RatFn {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> RatFn {
        RatFn {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &RatFn) -> RatFn {
        RatFn::new(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn div(&self, other: &RatFn) -> RatFn {
        assert!(!other.is_zero(), "division by zero rational function");
        RatFn::new(self.num.mul(&other.den), self.den.mul(&other.num))
    }

    pub fn scale_int(&self, v: i64) -> RatFn {
        self.mul(&RatFn::int(v))
    }

    /// Evaluate at a concrete dimension; `None` on a denominator zero.
    pub fn eval(&self, n: i64) -> Option<BigRational> {
        let nn = BigRational::from_integer(BigInt::from(n));
        let d = self.den.eval(&nn);
        if d.is_zero() {
            None
        } else {
            Some(self.num.eval(&nn) / d)
        }
    }
}

impl fmt::Display for RatFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == Poly::int(1) {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

/// Curvature symbols: formal names for the scalar and tensor quantities that
/// populate retained terms. `Scal` is the scalar curvature, `Sch` the
/// Schouten tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Sym {
    Scal,
    LapScal,
    ScalSq,
    SchNormSq,
    SixthOrderScalar,
    GradScal,
    DivSch,
    HessScal,
    Sch,
    ScalSch,
    DivGradSch,
    GradDivSch,
    RiemSch,
    SchSharpSch,
    Bach,
    GradSch,
    HessSch,
    SchTensorSch,
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Sym::Scal => "Scal",
            Sym::LapScal => "ΔScal",
            Sym::ScalSq => "Scal²",
            Sym::SchNormSq => "|P|²",
            Sym::SixthOrderScalar => "μ₆",
            Sym::GradScal => "∇Scal",
            Sym::DivSch => "δP",
            Sym::HessScal => "∇²Scal",
            Sym::Sch => "P",
            Sym::ScalSch => "Scal·P",
            Sym::DivGradSch => "δ∇P",
            Sym::GradDivSch => "∇δP",
            Sym::RiemSch => "Rm∗P",
            Sym::SchSharpSch => "P♯P",
            Sym::Bach => "Bach",
            Sym::GradSch => "∇P",
            Sym::HessSch => "∇²P",
            Sym::SchTensorSch => "P⊗P",
        };
        write!(f, "{s}")
    }
}

// partial derivative/product maps on symbols; None means the result has no
// name in the alphabet (admissible only below the truncation order)
fn lap_of(s: Sym) -> Option<Sym> {
    matches!(s, Sym::Scal).then_some(Sym::LapScal)
}
fn grad_of(s: Sym) -> Option<Sym> {
    matches!(s, Sym::Scal).then_some(Sym::GradScal)
}
fn hess_of(s: Sym) -> Option<Sym> {
    matches!(s, Sym::Scal).then_some(Sym::HessScal)
}
fn div_of(t: Sym) -> Option<Sym> {
    matches!(t, Sym::Sch).then_some(Sym::DivSch)
}
fn divgrad_of(t: Sym) -> Option<Sym> {
    matches!(t, Sym::Sch).then_some(Sym::DivGradSch)
}
fn graddiv_of(t: Sym) -> Option<Sym> {
    matches!(t, Sym::Sch).then_some(Sym::GradDivSch)
}
fn riemstar_of(t: Sym) -> Option<Sym> {
    matches!(t, Sym::Sch).then_some(Sym::RiemSch)
}
fn gradt_of(t: Sym) -> Option<Sym> {
    matches!(t, Sym::Sch).then_some(Sym::GradSch)
}
fn hesst_of(t: Sym) -> Option<Sym> {
    matches!(t, Sym::Sch).then_some(Sym::HessSch)
}
fn smul(s: Sym, t: Sym) -> Option<Sym> {
    match (s, t) {
        (Sym::Scal, Sym::Scal) => Some(Sym::ScalSq),
        (Sym::Scal, Sym::Sch) | (Sym::Sch, Sym::Scal) => Some(Sym::ScalSch),
        _ => None,
    }
}
fn tensor2(s: Sym, t: Sym) -> Option<Sym> {
    match (s, t) {
        (Sym::Sch, Sym::Sch) => Some(Sym::SchTensorSch),
        _ => None,
    }
}

/// Generator alphabet. `DivForm(T)` is the second-order operator `δT♯d`;
/// the others act as `(T, ∇^b)` contractions or scalar multiplication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Gen {
    Lap,
    Mul(Sym),
    Grad1(Sym),
    Hess(Sym),
    Third(Sym),
    Fourth(Sym),
    DivForm(Sym),
}

impl Gen {
    pub fn order(&self) -> i64 {
        match self {
            Gen::Lap | Gen::Hess(_) | Gen::DivForm(_) => 2,
            Gen::Mul(_) => 0,
            Gen::Grad1(_) => 1,
            Gen::Third(_) => 3,
            Gen::Fourth(_) => 4,
        }
    }
}

pub type Word = Vec<Gen>;

pub fn word_order(w: &[Gen]) -> i64 {
    w.iter().map(Gen::order).sum()
}

fn word_display(w: &[Gen]) -> String {
    if w.is_empty() {
        return "1".to_string();
    }
    let mut out = String::new();
    let mut i = 0;
    while i < w.len() {
        if w[i] == Gen::Lap {
            let mut j = i;
            while j < w.len() && w[j] == Gen::Lap {
                j += 1;
            }
            if j - i == 1 {
                out.push('Δ');
            } else {
                out.push_str(&format!("Δ^{}", j - i));
            }
            i = j;
        } else {
            out.push_str(&match &w[i] {
                Gen::Mul(s) => format!("({s}·)"),
                Gen::Grad1(s) => format!("({s},∇)"),
                Gen::Hess(s) => format!("({s},∇²)"),
                Gen::Third(s) => format!("({s},∇³)"),
                Gen::Fourth(s) => format!("({s},∇⁴)"),
                Gen::DivForm(s) => format!("δ{s}♯d"),
                Gen::Lap => unreachable!(),
            });
            i += 1;
        }
    }
    out
}

/// Linear combination of operator words with a truncation order and an
/// audited bucket for discarded lower-order content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorExpr {
    terms: BTreeMap<Word, RatFn>,
    threshold: i64,
    // max operator order of any content moved to the bucket
    z_order_bound: Option<i64>,
}

impl OperatorExpr {
    pub fn new(threshold: i64) -> Self {
        OperatorExpr {
            terms: BTreeMap::new(),
            threshold,
            z_order_bound: None,
        }
    }

    pub fn threshold(&self) -> i64 {
        self.threshold
    }

    pub fn z_order_bound(&self) -> Option<i64> {
        self.z_order_bound
    }

    pub fn terms(&self) -> &BTreeMap<Word, RatFn> {
        &self.terms
    }

    pub fn coefficient(&self, word: &[Gen]) -> RatFn {
        self.terms.get(word).cloned().unwrap_or_else(RatFn::zero)
    }

    fn bump_z(&mut self, order: i64) {
        self.z_order_bound = Some(self.z_order_bound.map_or(order, |b| b.max(order)));
    }

    pub fn add_term(&mut self, word: Word, coeff: RatFn) {
        if coeff.is_zero() {
            return;
        }
        if word_order(&word) < self.threshold {
            self.bump_z(word_order(&word));
            return;
        }
        let entry = self.terms.entry(word).or_insert_with(RatFn::zero);
        *entry = entry.add(&coeff);
        if entry.is_zero() {
            // retainable words that cancel exactly are removed outright
            let key: Vec<Word> = self
                .terms
                .iter()
                .filter(|(_, c)| c.is_zero())
                .map(|(w, _)| w.clone())
                .collect();
            for k in key {
                self.terms.remove(&k);
            }
        }
    }
}

impl fmt::Display for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // descending Laplacian prefix, then the word's own ordering
        let mut items: Vec<(&Word, &RatFn)> = self.terms.iter().collect();
        items.sort_by_key(|(w, _)| {
            let laps = w.iter().take_while(|g| **g == Gen::Lap).count();
            (std::cmp::Reverse(laps), (*w).clone())
        });
        let mut first = true;
        for (w, c) in items {
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "[{c}] {}", word_display(w))?;
            first = false;
        }
        if let Some(b) = self.z_order_bound {
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "Z(order ≤ {b})")?;
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

fn laps(m: usize) -> impl Iterator<Item = Gen> {
    std::iter::repeat(Gen::Lap).take(m)
}

// a normal word is a run of Laplacians followed by at most one contraction
// generator; DivForm is never normal
fn defect_position(w: &[Gen]) -> Option<usize> {
    for i in (0..w.len()).rev() {
        match w[i] {
            Gen::Lap => {}
            Gen::DivForm(_) => return Some(i),
            _ if i + 1 < w.len() => return Some(i),
            _ => {}
        }
    }
    None
}

struct Emitter<'a> {
    work: &'a mut Vec<(Word, RatFn)>,
    out: &'a mut OperatorExpr,
    prefix: &'a [Gen],
    suffix: &'a [Gen],
    coeff: &'a RatFn,
    base_order: i64,
}

impl Emitter<'_> {
    // factor = integer multiplier from the rule; drop = order deficit of the
    // replacement relative to the replaced segment; gens = replacement, with
    // None marking a symbol outside the alphabet
    fn emit(&mut self, factor: i64, drop: i64, gens: Option<Vec<Gen>>) -> Result<()> {
        if factor == 0 {
            return Ok(());
        }
        let order = self.base_order - drop;
        if order < self.out.threshold {
            self.out.bump_z(order);
            return Ok(());
        }
        let gens = gens.ok_or_else(|| {
            Error::incomplete_rule_set(format!(
                "no symbol name for a retained term of order {order} arising from {}",
                word_display(self.prefix)
            ))
        })?;
        let word: Word = self
            .prefix
            .iter()
            .cloned()
            .chain(gens)
            .chain(self.suffix.iter().cloned())
            .collect();
        debug_assert_eq!(word_order(&word), order);
        self.work.push((word, self.coeff.scale_int(factor)));
        Ok(())
    }
}

/// Rewrite into Laplacian-leading normal form. Defects are resolved
/// rightmost-first; linearity and idempotence are exercised by tests.
pub fn rewrite_normal_form(e: &OperatorExpr) -> Result<OperatorExpr> {
    let mut out = OperatorExpr::new(e.threshold);
    out.z_order_bound = e.z_order_bound;
    let mut work: Vec<(Word, RatFn)> =
        e.terms.iter().map(|(w, c)| (w.clone(), c.clone())).collect();
    while let Some((word, coeff)) = work.pop() {
        if coeff.is_zero() {
            continue;
        }
        let order = word_order(&word);
        if order < e.threshold {
            out.bump_z(order);
            continue;
        }
        let Some(i) = defect_position(&word) else {
            out.add_term(word, coeff);
            continue;
        };
        let j = word[i + 1..]
            .iter()
            .take_while(|g| **g == Gen::Lap)
            .count();
        let jj = j as i64;
        let (prefix, rest) = word.split_at(i);
        let seg_end = 1 + j;
        match rest[0] {
            Gen::Mul(s) if j >= 1 => {
                // scalar multiplier past a Laplacian power, exact down to
                // two below top order; remainder is bucketed
                if 2 * jj - 2 > 0 {
                    if order - 2 > e.threshold {
                        return Err(Error::incomplete_rule_set(format!(
                            "commutation remainder above truncation in {}",
                            word_display(&word)
                        )));
                    }
                    out.bump_z(order - 3);
                }
                let mut em = Emitter {
                    work: &mut work,
                    out: &mut out,
                    prefix,
                    suffix: &rest[seg_end..],
                    coeff: &coeff,
                    base_order: order,
                };
                em.emit(1, 0, Some(laps(j).chain([Gen::Mul(s)]).collect()))?;
                em.emit(
                    -jj,
                    2,
                    lap_of(s).map(|ls| [Gen::Mul(ls)].into_iter().chain(laps(j.saturating_sub(1))).collect()),
                )?;
                em.emit(
                    2 * jj,
                    1,
                    grad_of(s).map(|gs| laps(j.saturating_sub(1)).chain([Gen::Grad1(gs)]).collect()),
                )?;
                em.emit(
                    2 * jj * (jj - 1),
                    2,
                    hess_of(s).map(|hs| laps(j.saturating_sub(2)).chain([Gen::Hess(hs)]).collect()),
                )?;
            }
            Gen::DivForm(t) => {
                if jj > 0 {
                    if order - 2 > e.threshold {
                        return Err(Error::incomplete_rule_set(format!(
                            "commutation remainder above truncation in {}",
                            word_display(&word)
                        )));
                    }
                    out.bump_z(order - 3);
                }
                let mut em = Emitter {
                    work: &mut work,
                    out: &mut out,
                    prefix,
                    suffix: &rest[seg_end..],
                    coeff: &coeff,
                    base_order: order,
                };
                em.emit(
                    1,
                    1,
                    div_of(t).map(|d| laps(j).chain([Gen::Grad1(d)]).collect()),
                )?;
                em.emit(-1, 0, Some(laps(j).chain([Gen::Hess(t)]).collect()))?;
                em.emit(
                    jj,
                    2,
                    divgrad_of(t).map(|x| laps(j.saturating_sub(1)).chain([Gen::Hess(x)]).collect()),
                )?;
                em.emit(
                    2 * jj,
                    2,
                    graddiv_of(t).map(|x| laps(j.saturating_sub(1)).chain([Gen::Hess(x)]).collect()),
                )?;
                em.emit(
                    2 * jj,
                    2,
                    riemstar_of(t).map(|x| laps(j.saturating_sub(1)).chain([Gen::Hess(x)]).collect()),
                )?;
                em.emit(
                    -2 * jj,
                    1,
                    gradt_of(t).map(|x| laps(j.saturating_sub(1)).chain([Gen::Third(x)]).collect()),
                )?;
                em.emit(
                    -2 * jj * (jj - 1),
                    2,
                    hesst_of(t).map(|x| laps(j.saturating_sub(2)).chain([Gen::Fourth(x)]).collect()),
                )?;
            }
            g if j == 0 && i + 1 < word.len() => {
                // adjacent pair: exact Leibniz products; lower-order pieces
                // carry unnamed symbols and must fall below truncation
                let h = rest[1];
                let mut em = Emitter {
                    work: &mut work,
                    out: &mut out,
                    prefix,
                    suffix: &rest[2..],
                    coeff: &coeff,
                    base_order: order,
                };
                let pair: &[(i64, i64, Option<Gen>)] = &match (g, h) {
                    (Gen::Mul(s), Gen::Mul(t)) => {
                        vec![(1, 0, smul(s, t).map(Gen::Mul))]
                    }
                    (Gen::Mul(s), Gen::Grad1(t)) => {
                        vec![(1, 0, smul(s, t).map(Gen::Grad1))]
                    }
                    (Gen::Mul(s), Gen::Hess(t)) => {
                        vec![(1, 0, smul(s, t).map(Gen::Hess))]
                    }
                    (Gen::Mul(s), Gen::Third(t)) => {
                        vec![(1, 0, smul(s, t).map(Gen::Third))]
                    }
                    (Gen::Mul(s), Gen::Fourth(t)) => {
                        vec![(1, 0, smul(s, t).map(Gen::Fourth))]
                    }
                    (Gen::Grad1(t), Gen::Mul(s)) => {
                        vec![(1, 0, smul(s, t).map(Gen::Grad1)), (1, 1, None)]
                    }
                    (Gen::Hess(t), Gen::Mul(s)) => vec![
                        (1, 0, smul(s, t).map(Gen::Hess)),
                        (2, 1, None),
                        (1, 2, None),
                    ],
                    (Gen::Third(t), Gen::Mul(s)) => vec![
                        (1, 0, smul(s, t).map(Gen::Third)),
                        (3, 1, None),
                        (3, 2, None),
                        (1, 3, None),
                    ],
                    (Gen::Fourth(t), Gen::Mul(s)) => vec![
                        (1, 0, smul(s, t).map(Gen::Fourth)),
                        (4, 1, None),
                        (6, 2, None),
                        (4, 3, None),
                        (1, 4, None),
                    ],
                    (Gen::Grad1(a), Gen::Grad1(b)) => {
                        vec![(1, 0, tensor2(a, b).map(Gen::Hess)), (1, 1, None)]
                    }
                    (Gen::Grad1(a), Gen::Hess(b)) => {
                        vec![(1, 0, tensor2(a, b).map(Gen::Third)), (1, 1, None)]
                    }
                    (Gen::Hess(a), Gen::Grad1(b)) => vec![
                        (1, 0, tensor2(a, b).map(Gen::Third)),
                        (2, 1, None),
                        (1, 2, None),
                    ],
                    (Gen::Hess(a), Gen::Hess(b)) => vec![
                        (1, 0, tensor2(a, b).map(Gen::Fourth)),
                        (2, 1, None),
                        (1, 2, None),
                    ],
                    _ => {
                        return Err(Error::incomplete_rule_set(format!(
                            "no adjacency rule for {}",
                            word_display(&word)
                        )))
                    }
                };
                for &(factor, drop, rep) in pair {
                    em.emit(factor, drop, rep.map(|g| vec![g]))?;
                }
            }
            _ => {
                return Err(Error::incomplete_rule_set(format!(
                    "no rule applies to {}",
                    word_display(&word)
                )))
            }
        }
    }
    Ok(out)
}

// the scalar multipliers of the building blocks, as rational functions of n

fn mu2_coeff() -> RatFn {
    // (n-2)/(4(n-1))
    RatFn::new(Poly::linear(1, -2), Poly::linear(4, -4))
}

fn m2_factor() -> Vec<(RatFn, Word)> {
    vec![
        (RatFn::one(), vec![Gen::Lap]),
        (mu2_coeff(), vec![Gen::Mul(Sym::Scal)]),
    ]
}

fn m4_factor() -> Vec<(RatFn, Word)> {
    vec![
        (RatFn::int(4), vec![Gen::DivForm(Sym::Sch)]),
        (
            RatFn::new(Poly::int(1), Poly::linear(2, -2)),
            vec![Gen::Mul(Sym::LapScal)],
        ),
        (
            RatFn::new(Poly::int(1), Poly::linear(2, -2).mul(&Poly::linear(2, -2))),
            vec![Gen::Mul(Sym::ScalSq)],
        ),
        (
            RatFn::from_poly(Poly::linear(1, -4)),
            vec![Gen::Mul(Sym::SchNormSq)],
        ),
    ]
}

fn m6_factor() -> Vec<(RatFn, Word)> {
    vec![
        (RatFn::int(48), vec![Gen::DivForm(Sym::SchSharpSch)]),
        (
            RatFn::new(Poly::int(16), Poly::linear(1, -4)),
            vec![Gen::DivForm(Sym::Bach)],
        ),
        (RatFn::one(), vec![Gen::Mul(Sym::SixthOrderScalar)]),
    ]
}

/// Expand a product of word sums, either left-to-right or right-to-left.
fn product(factors: &[&[(RatFn, Word)]], right_to_left: bool) -> Vec<(RatFn, Word)> {
    let mut acc: Vec<(RatFn, Word)> = vec![(RatFn::one(), Vec::new())];
    if right_to_left {
        for factor in factors.iter().rev() {
            let mut next = Vec::with_capacity(acc.len() * factor.len());
            for (c, w) in factor.iter() {
                for (ac, aw) in &acc {
                    let mut word = w.clone();
                    word.extend(aw.iter().cloned());
                    next.push((c.mul(ac), word));
                }
            }
            acc = next;
        }
    } else {
        for factor in factors {
            let mut next = Vec::with_capacity(acc.len() * factor.len());
            for (ac, aw) in &acc {
                for (c, w) in factor.iter() {
                    let mut word = aw.clone();
                    word.extend(w.iter().cloned());
                    next.push((ac.mul(c), word));
                }
            }
            acc = next;
        }
    }
    acc
}

fn repeat_factor<'a>(f: &'a [(RatFn, Word)], m: usize) -> Vec<&'a [(RatFn, Word)]> {
    std::iter::repeat(f).take(m).collect()
}

fn assemble_with(k: i64, right_to_left: bool) -> Result<OperatorExpr> {
    if !(2..=8).contains(&k) {
        return Err(Error::unsupported(format!(
            "product formula assembly supports 2 <= k <= 8, got k = {k}"
        )));
    }
    let threshold = 2 * k - 4;
    let mut e = OperatorExpr::new(threshold);
    let m2 = m2_factor();
    let m4 = m4_factor();
    let m6 = m6_factor();

    // leading power of the second-order block
    for (c, w) in product(&repeat_factor(&m2, k as usize), right_to_left) {
        e.add_term(w, c);
    }
    // single fourth-order insertions, weight -j(k-j)
    for j in 1..k {
        let weight = RatFn::int(-(j * (k - j)));
        let mut factors = repeat_factor(&m2, (j - 1) as usize);
        factors.push(&m4);
        factors.extend(repeat_factor(&m2, (k - j - 1) as usize));
        for (c, w) in product(&factors, right_to_left) {
            e.add_term(w, weight.mul(&c));
        }
    }
    // single sixth-order insertions, weight j(j+1)(k-j)(k-j-1)/4
    for j in 1..=(k - 2).max(0) {
        let weight = RatFn::ratio(j * (j + 1) * (k - j) * (k - j - 1), 4);
        let mut factors = repeat_factor(&m2, (j - 1) as usize);
        factors.push(&m6);
        factors.extend(repeat_factor(&m2, (k - j - 2) as usize));
        for (c, w) in product(&factors, right_to_left) {
            e.add_term(w, weight.mul(&c));
        }
    }
    // double fourth-order insertions, weight (j+1)(k-j-1)i(k-i)
    for j in 2..=(k - 2).max(0) {
        for i in 1..j {
            let weight = RatFn::int((j + 1) * (k - j - 1) * i * (k - i));
            let mut factors = repeat_factor(&m2, (i - 1) as usize);
            factors.push(&m4);
            factors.extend(repeat_factor(&m2, (j - i - 1) as usize));
            factors.push(&m4);
            factors.extend(repeat_factor(&m2, (k - j - 2) as usize));
            for (c, w) in product(&factors, right_to_left) {
                e.add_term(w, weight.mul(&c));
            }
        }
    }
    // the product formula's own remainder sits strictly below order 2k-5
    if 2 * k - 5 > 0 {
        e.bump_z(2 * k - 6);
    }
    Ok(e)
}

/// Assemble the order-2k operator from its product formula as a raw word
/// sum, truncated at order 2k-4.
pub fn juhl_assemble(k: i64) -> Result<OperatorExpr> {
    assemble_with(k, false)
}

/// The fully reduced normal form of the order-2k operator.
pub fn p2k_normal_form(k: i64) -> Result<OperatorExpr> {
    rewrite_normal_form(&juhl_assemble(k)?)
}

fn lap_word(a: usize, g: Option<Gen>) -> Word {
    laps(a).chain(g).collect()
}

/// Closed-form coefficient table of the normal form: the expected
/// coefficient of every retained word, as a rational function of n, for a
/// concrete k. Zero entries are omitted.
pub fn structure_coefficients(k: i64) -> Result<BTreeMap<Word, RatFn>> {
    if !(2..=8).contains(&k) {
        return Err(Error::unsupported(format!(
            "structure table supports 2 <= k <= 8, got k = {k}"
        )));
    }
    let ku = k as usize;
    let c = mu2_coeff();
    let kk = RatFn::int(k);
    let kk1 = RatFn::int(k * (k - 1));
    let kk12 = RatFn::int(k * (k - 1) * (k - 2));
    let kk123 = RatFn::int(k * (k - 1) * (k - 2) * (k - 3));
    let mut t: BTreeMap<Word, RatFn> = BTreeMap::new();
    let mut put = |w: Word, v: RatFn| {
        if !v.is_zero() {
            t.insert(w, v);
        }
    };

    put(lap_word(ku, None), RatFn::one());
    put(lap_word(ku - 1, Some(Gen::Mul(Sym::Scal))), kk.mul(&c));
    // second multiplier block
    put(
        lap_word(ku - 2, Some(Gen::Mul(Sym::ScalSq))),
        kk1.mul(&RatFn::new(
            Poly::linear(0, 3)
                .mul(&Poly::var())
                .mul(&Poly::var())
                .add(&Poly::linear(-12, -4 * k + 8)),
            Poly::linear(0, 96)
                .mul(&Poly::linear(1, -1))
                .mul(&Poly::linear(1, -1)),
        )),
    );
    put(
        lap_word(ku - 2, Some(Gen::Mul(Sym::SchNormSq))),
        kk1.mul(&RatFn::from_poly(Poly::linear(1, -4)))
            .mul(&RatFn::ratio(-(k + 1), 6)),
    );
    put(
        lap_word(ku - 2, Some(Gen::Mul(Sym::LapScal))),
        kk1.mul(&RatFn::new(
            Poly::linear(-3, -(2 * k - 4)),
            Poly::linear(24, -24),
        )),
    );
    put(
        lap_word(ku - 2, Some(Gen::Grad1(Sym::GradScal))),
        kk1.mul(&c),
    );
    put(
        lap_word(ku - 2, Some(Gen::Grad1(Sym::DivSch))),
        kk1.mul(&RatFn::ratio(-2 * (k + 1), 3)),
    );
    put(
        lap_word(ku - 2, Some(Gen::Hess(Sym::Sch))),
        kk1.mul(&RatFn::ratio(2 * (k + 1), 3)),
    );
    if ku >= 3 {
        put(
            lap_word(ku - 3, Some(Gen::Hess(Sym::HessScal))),
            kk12.mul(&RatFn::new(Poly::linear(1, -2), Poly::linear(6, -6))),
        );
        put(
            lap_word(ku - 3, Some(Gen::Hess(Sym::ScalSch))),
            kk12.mul(&RatFn::new(
                Poly::linear(k + 1, -2 * (k + 1)),
                Poly::linear(6, -6),
            )),
        );
        put(
            lap_word(ku - 3, Some(Gen::Hess(Sym::DivGradSch))),
            kk12.mul(&RatFn::ratio(-(k + 1), 3)),
        );
        put(
            lap_word(ku - 3, Some(Gen::Hess(Sym::GradDivSch))),
            kk12.mul(&RatFn::ratio(-2 * (k + 1), 3)),
        );
        put(
            lap_word(ku - 3, Some(Gen::Hess(Sym::RiemSch))),
            kk12.mul(&RatFn::ratio(-2 * (k + 1), 3)),
        );
        put(
            lap_word(ku - 3, Some(Gen::Hess(Sym::SchSharpSch))),
            kk12.mul(&RatFn::ratio(-2 * (k + 1) * (k + 2), 5)),
        );
        put(
            lap_word(ku - 3, Some(Gen::Hess(Sym::Bach))),
            kk12.mul(&RatFn::new(
                Poly::int(-2 * (k + 1) * (k + 2)),
                Poly::linear(15, -60),
            )),
        );
        put(
            lap_word(ku - 3, Some(Gen::Third(Sym::GradSch))),
            kk12.mul(&RatFn::ratio(2 * (k + 1), 3)),
        );
    }
    if ku >= 4 {
        put(
            lap_word(ku - 4, Some(Gen::Fourth(Sym::SchTensorSch))),
            kk123.mul(&RatFn::ratio(2 * (k + 1) * (5 * k + 7), 45)),
        );
        put(
            lap_word(ku - 4, Some(Gen::Fourth(Sym::HessSch))),
            kk123.mul(&RatFn::ratio(2 * (k + 1), 5)),
        );
    }
    Ok(t)
}

/// A mismatch between an engine coefficient and its closed form.
#[derive(Debug, Clone)]
pub struct Mismatch {
    pub word: String,
    pub engine: String,
    pub expected: String,
}

#[derive(Debug, Clone)]
pub struct BlockReport {
    pub name: &'static str,
    pub mismatches: Vec<Mismatch>,
}

#[derive(Debug, Clone)]
pub struct Step1Report {
    pub k: i64,
    pub blocks: Vec<BlockReport>,
}

impl Step1Report {
    pub fn pass(&self) -> bool {
        self.blocks.iter().all(|b| b.mismatches.is_empty())
    }
}

fn compare_tables(
    name: &'static str,
    engine: &OperatorExpr,
    expected: &BTreeMap<Word, RatFn>,
) -> BlockReport {
    let mut mismatches = Vec::new();
    let mut keys: Vec<&Word> = engine.terms.keys().collect();
    for w in expected.keys() {
        if !engine.terms.contains_key(w) {
            keys.push(w);
        }
    }
    keys.sort();
    keys.dedup();
    for w in keys {
        let got = engine.coefficient(w);
        let want = expected.get(w).cloned().unwrap_or_else(RatFn::zero);
        if got != want {
            mismatches.push(Mismatch {
                word: word_display(w),
                engine: got.to_string(),
                expected: want.to_string(),
            });
        }
    }
    BlockReport { name, mismatches }
}

/// Check the four summation blocks of the product-formula reduction against
/// their closed forms in k, coefficient by coefficient.
pub fn verify_step1_sums(k: i64) -> Result<Step1Report> {
    if !(3..=8).contains(&k) {
        return Err(Error::unsupported(format!(
            "block verification supports 3 <= k <= 8, got k = {k}"
        )));
    }
    let ku = k as usize;
    let threshold = 2 * k - 4;
    let mut blocks = Vec::new();

    // block 1: Σ_j Δ^{j-1} (Scal·) Δ^{k-j}
    let mut b1 = OperatorExpr::new(threshold);
    for j in 1..=ku {
        let w: Word = laps(j - 1)
            .chain([Gen::Mul(Sym::Scal)])
            .chain(laps(ku - j))
            .collect();
        b1.add_term(w, RatFn::one());
    }
    let b1 = rewrite_normal_form(&b1)?;
    let mut e1 = BTreeMap::new();
    e1.insert(lap_word(ku - 1, Some(Gen::Mul(Sym::Scal))), RatFn::int(k));
    e1.insert(
        lap_word(ku - 2, Some(Gen::Mul(Sym::LapScal))),
        RatFn::ratio(-k * (k - 1), 2),
    );
    e1.insert(
        lap_word(ku - 2, Some(Gen::Grad1(Sym::GradScal))),
        RatFn::int(k * (k - 1)),
    );
    if k > 2 {
        e1.insert(
            lap_word(ku - 3, Some(Gen::Hess(Sym::HessScal))),
            RatFn::ratio(2 * k * (k - 1) * (k - 2), 3),
        );
    }
    blocks.push(compare_tables("scalar-multiplier block", &b1, &e1));

    // block 2: Σ_j j(k-j) M2^{j-1} M4 M2^{k-j-1}
    let m2 = m2_factor();
    let m4 = m4_factor();
    let mut b2 = OperatorExpr::new(threshold);
    for j in 1..k {
        let weight = RatFn::int(j * (k - j));
        let mut factors = repeat_factor(&m2, (j - 1) as usize);
        factors.push(&m4);
        factors.extend(repeat_factor(&m2, (k - j - 1) as usize));
        for (c, w) in product(&factors, false) {
            b2.add_term(w, weight.mul(&c));
        }
    }
    let b2 = rewrite_normal_form(&b2)?;
    let big_k = RatFn::int(k * (k - 1) * (k + 1));
    let mut e2 = BTreeMap::new();
    let mut put2 = |w: Word, v: RatFn| {
        if !v.is_zero() {
            e2.insert(w, v);
        }
    };
    put2(
        lap_word(ku - 2, Some(Gen::Grad1(Sym::DivSch))),
        big_k.mul(&RatFn::ratio(2, 3)),
    );
    put2(
        lap_word(ku - 2, Some(Gen::Hess(Sym::Sch))),
        big_k.mul(&RatFn::ratio(-2, 3)),
    );
    put2(
        lap_word(ku - 2, Some(Gen::Mul(Sym::LapScal))),
        big_k.mul(&RatFn::new(Poly::int(1), Poly::linear(12, -12))),
    );
    put2(
        lap_word(ku - 2, Some(Gen::Mul(Sym::ScalSq))),
        big_k.mul(&RatFn::new(
            Poly::int(1),
            Poly::linear(0, 24)
                .mul(&Poly::linear(1, -1))
                .mul(&Poly::linear(1, -1)),
        )),
    );
    put2(
        lap_word(ku - 2, Some(Gen::Mul(Sym::SchNormSq))),
        big_k.mul(&RatFn::new(Poly::linear(1, -4), Poly::int(6))),
    );
    if k > 2 {
        put2(
            lap_word(ku - 3, Some(Gen::Hess(Sym::DivGradSch))),
            big_k.mul(&RatFn::ratio(k - 2, 3)),
        );
        put2(
            lap_word(ku - 3, Some(Gen::Hess(Sym::GradDivSch))),
            big_k.mul(&RatFn::ratio(2 * (k - 2), 3)),
        );
        put2(
            lap_word(ku - 3, Some(Gen::Hess(Sym::RiemSch))),
            big_k.mul(&RatFn::ratio(2 * (k - 2), 3)),
        );
        put2(
            lap_word(ku - 3, Some(Gen::Third(Sym::GradSch))),
            big_k.mul(&RatFn::ratio(-2 * (k - 2), 3)),
        );
        put2(
            lap_word(ku - 3, Some(Gen::Hess(Sym::ScalSch))),
            big_k.mul(&RatFn::new(
                Poly::linear(-(k - 2), 2 * (k - 2)),
                Poly::linear(6, -6),
            )),
        );
    }
    if k > 3 {
        put2(
            lap_word(ku - 4, Some(Gen::Fourth(Sym::HessSch))),
            big_k.mul(&RatFn::ratio(-2 * (k - 2) * (k - 3), 5)),
        );
    }
    blocks.push(compare_tables("fourth-order insertion block", &b2, &e2));

    // block 3: Σ_j j(j+1)(k-j)(k-j-1) M2^{j-1} M6 M2^{k-j-2}
    let m6 = m6_factor();
    let mut b3 = OperatorExpr::new(threshold);
    for j in 1..=(k - 2) {
        let weight = RatFn::int(j * (j + 1) * (k - j) * (k - j - 1));
        let mut factors = repeat_factor(&m2, (j - 1) as usize);
        factors.push(&m6);
        factors.extend(repeat_factor(&m2, (k - j - 2) as usize));
        for (c, w) in product(&factors, false) {
            b3.add_term(w, weight.mul(&c));
        }
    }
    let b3 = rewrite_normal_form(&b3)?;
    let big_l = RatFn::ratio(k * (k - 1) * (k - 2) * (k + 1) * (k + 2), 30);
    let mut e3 = BTreeMap::new();
    if k > 2 {
        e3.insert(
            lap_word(ku - 3, Some(Gen::Hess(Sym::SchSharpSch))),
            big_l.scale_int(-48),
        );
        e3.insert(
            lap_word(ku - 3, Some(Gen::Hess(Sym::Bach))),
            big_l
                .neg()
                .mul(&RatFn::new(Poly::int(16), Poly::linear(1, -4))),
        );
    }
    blocks.push(compare_tables("sixth-order insertion block", &b3, &e3));

    // block 4: the double fourth-order insertion sum
    let mut b4 = OperatorExpr::new(threshold);
    for j in 2..=(k - 2) {
        for i in 1..j {
            let weight = RatFn::int((j + 1) * (k - j - 1) * i * (k - i));
            let mut factors = repeat_factor(&m2, (i - 1) as usize);
            factors.push(&m4);
            factors.extend(repeat_factor(&m2, (j - i - 1) as usize));
            factors.push(&m4);
            factors.extend(repeat_factor(&m2, (k - j - 2) as usize));
            for (c, w) in product(&factors, false) {
                b4.add_term(w, weight.mul(&c));
            }
        }
    }
    let b4 = rewrite_normal_form(&b4)?;
    let mut e4 = BTreeMap::new();
    if k > 3 {
        e4.insert(
            lap_word(ku - 4, Some(Gen::Fourth(Sym::SchTensorSch))),
            RatFn::ratio(2 * k * (k - 1) * (k - 2) * (k - 3) * (k + 1) * (5 * k + 7), 45),
        );
    }
    blocks.push(compare_tables("double insertion block", &b4, &e4));

    Ok(Step1Report { k, blocks })
}

/// Full normal-form extraction checked against the closed-form table.
pub fn extract_p2k_normal_form(k: i64) -> Result<Step1Report> {
    let nf = p2k_normal_form(k)?;
    let expected = structure_coefficients(k)?;
    Ok(Step1Report {
        k,
        blocks: vec![compare_tables("full normal form", &nf, &expected)],
    })
}

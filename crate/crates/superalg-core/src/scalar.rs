//! Exact scalars: the tower ℚ ⊂ ℚ(√d) ⊂ ℚ(√d)(t).
//!
//! * [`QuadExt`] is an element `a + b·√d` of a quadratic extension of ℚ,
//!   stored canonically (`d = 0` whenever `b = 0`).
//! * [`Poly`] is a dense univariate polynomial in `t` over [`QuadExt`].
//! * [`RatFunc`] is a reduced quotient of two such polynomials with a monic
//!   denominator, so that equality of values is equality of representations.
//! * [`ScalarExpr`] is the parsed form of the registry's scalar grammar. It
//!   may mention named parameters, which are bound at evaluation time.
//!
//! All values are immutable and thread-safe. A computation lives in a single
//! [`FieldContext`]; combining elements of two different extensions is an
//! error (reported by the `checked_*` methods, a panic in the operator impls).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

/// Errors produced by scalar arithmetic, evaluation and parsing.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScalarError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("field context mismatch: sqrt({0}) combined with sqrt({1})")]
    ContextMismatch(i64, i64),
    #[error("{0} is not a valid extension discriminant (must be 0 or square-free and not 1)")]
    BadDiscriminant(i64),
    #[error("pole at t = {0}")]
    Pole(String),
    #[error("expected a constant, found {0}")]
    NotConstant(String),
    #[error("symbol `r` used outside a quadratic field context")]
    NoRadical,
    #[error("undeclared symbol `{0}`")]
    Undeclared(String),
    #[error("unbound parameter `{0}`")]
    Unbound(String),
    #[error("syntax error at column {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
}

/// Shorthand for results of scalar operations.
pub type ScalarResult<T> = Result<T, ScalarError>;

fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Builds the rational `n / d`.
///
/// # Panics
/// Panics if `d == 0`.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn is_square_free(d: i64) -> bool {
    if d == 0 || d == 1 {
        return false;
    }
    let n = d.unsigned_abs();
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p * p) {
            return false;
        }
        p += 1;
    }
    true
}

/// The quadratic extension active for one computation: `r` denotes `√d`.
///
/// `d = 0` selects plain ℚ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldContext {
    d: i64,
}

impl FieldContext {
    /// The rational context.
    pub const RATIONAL: FieldContext = FieldContext { d: 0 };

    /// Validates that `d` is 0 or a square-free integer other than 1.
    pub fn new(d: i64) -> ScalarResult<Self> {
        if d == 0 || is_square_free(d) {
            Ok(Self { d })
        } else {
            Err(ScalarError::BadDiscriminant(d))
        }
    }

    /// The discriminant `d`.
    pub fn d(&self) -> i64 {
        self.d
    }

    /// `√d` in this context.
    pub fn radical(&self) -> ScalarResult<QuadExt> {
        if self.d == 0 {
            Err(ScalarError::NoRadical)
        } else {
            Ok(QuadExt { a: Rational::zero(), b: Rational::one(), d: self.d })
        }
    }
}

impl Default for FieldContext {
    fn default() -> Self {
        Self::RATIONAL
    }
}

// ---------------------------------------------------------------------------
// Field trait
// ---------------------------------------------------------------------------

/// The operations the linear-algebra and structure-constant code needs.
///
/// Operations panic on a field-context mismatch; the registry guarantees one
/// context per computation. Division is fallible.
pub trait Field: Clone + PartialEq + fmt::Debug + fmt::Display + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn from_rational(q: Rational) -> Self;
    fn from_quad(q: QuadExt) -> Self;
    fn add_ref(&self, other: &Self) -> Self;
    fn sub_ref(&self, other: &Self) -> Self;
    fn mul_ref(&self, other: &Self) -> Self;
    fn neg_ref(&self) -> Self;
    /// Multiplicative inverse; fails on zero.
    fn inv(&self) -> ScalarResult<Self>;

    fn div_ref(&self, other: &Self) -> ScalarResult<Self> {
        Ok(self.mul_ref(&other.inv()?))
    }

    fn from_int(n: i64) -> Self {
        Self::from_rational(rat(n))
    }

    fn is_one(&self) -> bool {
        *self == Self::one()
    }
}

// ---------------------------------------------------------------------------
// QuadExt
// ---------------------------------------------------------------------------

/// An element `a + b·√d` of ℚ(√d). Pure rationals have `d = 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadExt {
    a: Rational,
    b: Rational,
    d: i64,
}

impl QuadExt {
    /// The rational `q`.
    pub fn rational(q: Rational) -> Self {
        Self { a: q, b: Rational::zero(), d: 0 }
    }

    /// The integer `n`.
    pub fn int(n: i64) -> Self {
        Self::rational(rat(n))
    }

    /// `a + b·√d`, canonicalized.
    pub fn new(a: Rational, b: Rational, d: i64) -> ScalarResult<Self> {
        if b.is_zero() {
            return Ok(Self::rational(a));
        }
        FieldContext::new(d)?;
        if d == 0 {
            return Err(ScalarError::BadDiscriminant(0));
        }
        Ok(Self { a, b, d })
    }

    /// `√d` for a square-free `d ≠ 0, 1`.
    pub fn sqrt(d: i64) -> ScalarResult<Self> {
        Self::new(Rational::zero(), Rational::one(), d)
    }

    /// Rational part `a`.
    pub fn re(&self) -> &Rational {
        &self.a
    }

    /// Coefficient `b` of `√d`.
    pub fn im(&self) -> &Rational {
        &self.b
    }

    /// The discriminant, 0 for rationals.
    pub fn d(&self) -> i64 {
        self.d
    }

    /// The value as a rational, if it is one.
    pub fn as_rational(&self) -> Option<&Rational> {
        if self.b.is_zero() {
            Some(&self.a)
        } else {
            None
        }
    }

    fn joint_d(&self, other: &Self) -> ScalarResult<i64> {
        match (self.d, other.d) {
            (0, d) | (d, 0) => Ok(d),
            (x, y) if x == y => Ok(x),
            (x, y) => Err(ScalarError::ContextMismatch(x, y)),
        }
    }

    fn build(a: Rational, b: Rational, d: i64) -> Self {
        if b.is_zero() {
            Self::rational(a)
        } else {
            Self { a, b, d }
        }
    }

    pub fn checked_add(&self, other: &Self) -> ScalarResult<Self> {
        if self.d == 0 && other.d == 0 {
            return Ok(Self::rational(&self.a + &other.a));
        }
        let d = self.joint_d(other)?;
        Ok(Self::build(&self.a + &other.a, &self.b + &other.b, d))
    }

    pub fn checked_sub(&self, other: &Self) -> ScalarResult<Self> {
        let d = self.joint_d(other)?;
        Ok(Self::build(&self.a - &other.a, &self.b - &other.b, d))
    }

    pub fn checked_mul(&self, other: &Self) -> ScalarResult<Self> {
        if self.d == 0 && other.d == 0 {
            return Ok(Self::rational(&self.a * &other.a));
        }
        let d = self.joint_d(other)?;
        let dd = rat(d);
        let a = &self.a * &other.a + &self.b * &other.b * dd;
        let b = &self.a * &other.b + &self.b * &other.a;
        Ok(Self::build(a, b, d))
    }

    pub fn checked_div(&self, other: &Self) -> ScalarResult<Self> {
        self.checked_mul(&other.checked_inv()?)
    }

    /// `1 / self`, via the conjugate: `(a − b√d) / (a² − d b²)`.
    pub fn checked_inv(&self) -> ScalarResult<Self> {
        if self.is_zero_value() {
            return Err(ScalarError::DivisionByZero);
        }
        let norm = &self.a * &self.a - &self.b * &self.b * rat(self.d);
        // norm ≠ 0 because d is not a rational square.
        Ok(Self::build(&self.a / &norm, -(&self.b / &norm), self.d))
    }

    fn is_zero_value(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }
}

fn fmt_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl fmt::Display for QuadExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", fmt_rational(&self.a));
        }
        let radical = format!("sqrt({})", self.d);
        let bpart = if self.b.is_one() {
            radical
        } else if (-&self.b).is_one() {
            format!("-{radical}")
        } else {
            format!("{}*{radical}", fmt_rational(&self.b))
        };
        if self.a.is_zero() {
            write!(f, "{bpart}")
        } else if let Some(magnitude) = bpart.strip_prefix('-') {
            write!(f, "{} - {}", fmt_rational(&self.a), magnitude)
        } else {
            write!(f, "{} + {}", fmt_rational(&self.a), bpart)
        }
    }
}

impl Field for QuadExt {
    fn zero() -> Self {
        Self::int(0)
    }
    fn one() -> Self {
        Self::int(1)
    }
    fn is_zero(&self) -> bool {
        self.is_zero_value()
    }
    fn from_rational(q: Rational) -> Self {
        Self::rational(q)
    }
    fn from_quad(q: QuadExt) -> Self {
        q
    }
    fn add_ref(&self, other: &Self) -> Self {
        self.checked_add(other).expect("field context mismatch")
    }
    fn sub_ref(&self, other: &Self) -> Self {
        self.checked_sub(other).expect("field context mismatch")
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self.checked_mul(other).expect("field context mismatch")
    }
    fn neg_ref(&self) -> Self {
        Self::build(-&self.a, -&self.b, self.d)
    }
    fn inv(&self) -> ScalarResult<Self> {
        self.checked_inv()
    }
}

// ---------------------------------------------------------------------------
// Poly
// ---------------------------------------------------------------------------

/// A polynomial in `t` with [`QuadExt`] coefficients, lowest degree first,
/// with no trailing zero coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Poly {
    coeffs: Vec<QuadExt>,
}

impl Poly {
    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: QuadExt) -> Self {
        Self::from_coeffs(vec![c])
    }

    /// The indeterminate `t`.
    pub fn t() -> Self {
        Self::from_coeffs(vec![QuadExt::int(0), QuadExt::int(1)])
    }

    /// Builds a polynomial from coefficients listed lowest degree first.
    pub fn from_coeffs(mut coeffs: Vec<QuadExt>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero_value()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[QuadExt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Leading coefficient (zero for the zero polynomial).
    pub fn leading(&self) -> QuadExt {
        self.coeffs.last().cloned().unwrap_or_else(|| QuadExt::int(0))
    }

    pub fn checked_add(&self, other: &Self) -> ScalarResult<Self> {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = QuadExt::int(0);
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let a = self.coeffs.get(i).unwrap_or(&zero);
            let b = other.coeffs.get(i).unwrap_or(&zero);
            out.push(a.checked_add(b)?);
        }
        Ok(Self::from_coeffs(out))
    }

    pub fn checked_neg(&self) -> Self {
        Self { coeffs: self.coeffs.iter().map(Field::neg_ref).collect() }
    }

    pub fn checked_sub(&self, other: &Self) -> ScalarResult<Self> {
        self.checked_add(&other.checked_neg())
    }

    pub fn checked_mul(&self, other: &Self) -> ScalarResult<Self> {
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero());
        }
        let mut out = vec![QuadExt::int(0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero_value() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].checked_add(&a.checked_mul(b)?)?;
            }
        }
        Ok(Self::from_coeffs(out))
    }

    pub fn scale(&self, c: &QuadExt) -> ScalarResult<Self> {
        let coeffs = self.coeffs.iter().map(|a| a.checked_mul(c)).collect::<ScalarResult<_>>()?;
        Ok(Self::from_coeffs(coeffs))
    }

    /// Euclidean division: `self = q·divisor + r` with `deg r < deg divisor`.
    pub fn div_rem(&self, divisor: &Self) -> ScalarResult<(Self, Self)> {
        let dd = divisor.degree().ok_or(ScalarError::DivisionByZero)?;
        let lead_inv = divisor.leading().checked_inv()?;
        let mut rem = self.coeffs.clone();
        let n = self.coeffs.len();
        if n <= dd {
            return Ok((Self::zero(), self.clone()));
        }
        let mut quot = vec![QuadExt::int(0); n - dd];
        for k in (0..n - dd).rev() {
            let c = rem[k + dd].checked_mul(&lead_inv)?;
            if c.is_zero_value() {
                continue;
            }
            for (j, b) in divisor.coeffs.iter().enumerate() {
                rem[k + j] = rem[k + j].checked_sub(&c.checked_mul(b)?)?;
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        Ok((Self::from_coeffs(quot), Self::from_coeffs(rem)))
    }

    /// Monic scalar multiple (zero stays zero).
    pub fn monic(&self) -> ScalarResult<Self> {
        if self.is_zero() {
            return Ok(Self::zero());
        }
        self.scale(&self.leading().checked_inv()?)
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &Self) -> ScalarResult<Self> {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            // Keeping remainders monic curbs coefficient growth.
            let (_, r) = a.div_rem(&b)?;
            a = b;
            b = r.monic()?;
        }
        a.monic()
    }

    /// Horner evaluation at `c`.
    pub fn eval(&self, c: &QuadExt) -> ScalarResult<QuadExt> {
        let mut acc = QuadExt::int(0);
        for a in self.coeffs.iter().rev() {
            acc = acc.checked_mul(c)?.checked_add(a)?;
        }
        Ok(acc)
    }

    /// `t − c`.
    pub fn linear_factor(c: &QuadExt) -> Self {
        Self::from_coeffs(vec![c.neg_ref(), QuadExt::int(1)])
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero_value() {
                continue;
            }
            let coef = if c.b.is_zero() { c.to_string() } else { format!("({c})") };
            let mono = match i {
                0 => coef,
                _ => {
                    let power = if i == 1 { "t".to_string() } else { format!("t^{i}") };
                    match coef.as_str() {
                        "1" => power,
                        "-1" => format!("-{power}"),
                        _ => format!("{coef}*{power}"),
                    }
                }
            };
            parts.push(mono);
        }
        let mut out = parts[0].clone();
        for p in &parts[1..] {
            if let Some(rest) = p.strip_prefix('-') {
                out.push_str(" - ");
                out.push_str(rest);
            } else {
                out.push_str(" + ");
                out.push_str(p);
            }
        }
        write!(f, "{out}")
    }
}

// ---------------------------------------------------------------------------
// RatFunc
// ---------------------------------------------------------------------------

/// A reduced rational function `num / den` in `t` with monic denominator.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RatFunc {
    num: Poly,
    den: Poly,
}

/// The entries of a rational function that blow up at the limit point.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("pole of {value} at t = {point}")]
pub struct PoleReport {
    /// The offending function, printed.
    pub value: String,
    /// The limit point, printed.
    pub point: String,
}

impl RatFunc {
    /// Reduces `num / den` to canonical form.
    pub fn new(num: Poly, den: Poly) -> ScalarResult<Self> {
        if den.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(Self::constant(QuadExt::int(0)));
        }
        let g = num.gcd(&den)?;
        let (num, _) = num.div_rem(&g)?;
        let (den, _) = den.div_rem(&g)?;
        let lead = den.leading().checked_inv()?;
        Ok(Self { num: num.scale(&lead)?, den: den.scale(&lead)? })
    }

    pub fn constant(c: QuadExt) -> Self {
        Self { num: Poly::constant(c), den: Poly::constant(QuadExt::int(1)) }
    }

    pub fn rational(q: Rational) -> Self {
        Self::constant(QuadExt::rational(q))
    }

    pub fn int(n: i64) -> Self {
        Self::constant(QuadExt::int(n))
    }

    /// The indeterminate `t`.
    pub fn t() -> Self {
        Self { num: Poly::t(), den: Poly::constant(QuadExt::int(1)) }
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn denominator(&self) -> &Poly {
        &self.den
    }

    pub fn is_constant(&self) -> bool {
        self.num.degree().unwrap_or(0) == 0 && self.den.degree() == Some(0)
    }

    /// The value if the function is constant.
    pub fn as_constant(&self) -> Option<QuadExt> {
        if self.is_constant() {
            Some(self.num.coeffs().first().cloned().unwrap_or_else(|| QuadExt::int(0)))
        } else {
            None
        }
    }

    /// The value if the function is constant, else an error.
    pub fn to_constant(&self) -> ScalarResult<QuadExt> {
        self.as_constant().ok_or_else(|| ScalarError::NotConstant(self.to_string()))
    }

    pub fn checked_add(&self, other: &Self) -> ScalarResult<Self> {
        if self.den == other.den {
            return Self::new(self.num.checked_add(&other.num)?, self.den.clone());
        }
        let n = self.num.checked_mul(&other.den)?.checked_add(&other.num.checked_mul(&self.den)?)?;
        Self::new(n, self.den.checked_mul(&other.den)?)
    }

    pub fn checked_sub(&self, other: &Self) -> ScalarResult<Self> {
        self.checked_add(&other.neg_ref())
    }

    pub fn checked_mul(&self, other: &Self) -> ScalarResult<Self> {
        if self.is_constant() && other.is_constant() {
            let v = self.to_constant()?.checked_mul(&other.to_constant()?)?;
            return Ok(Self::constant(v));
        }
        Self::new(self.num.checked_mul(&other.num)?, self.den.checked_mul(&other.den)?)
    }

    pub fn checked_inv(&self) -> ScalarResult<Self> {
        Self::new(self.den.clone(), self.num.clone())
    }

    pub fn checked_div(&self, other: &Self) -> ScalarResult<Self> {
        self.checked_mul(&other.checked_inv()?)
    }

    /// Exact value at `c`; fails if `c` is a pole.
    pub fn eval_at(&self, c: &QuadExt) -> ScalarResult<QuadExt> {
        let d = self.den.eval(c)?;
        if d.is_zero_value() {
            return Err(ScalarError::Pole(c.to_string()));
        }
        self.num.eval(c)?.checked_div(&d)
    }

    /// Limit as `t → c`: cancels common factors `(t − c)` and evaluates.
    pub fn limit_at(&self, c: &QuadExt) -> Result<QuadExt, PoleReport> {
        let pole = || PoleReport { value: self.to_string(), point: c.to_string() };
        let factor = Poly::linear_factor(c);
        let mut num = self.num.clone();
        let mut den = self.den.clone();
        loop {
            let nv = num.eval(c).map_err(|_| pole())?;
            let dv = den.eval(c).map_err(|_| pole())?;
            if !dv.is_zero_value() {
                return nv.checked_div(&dv).map_err(|_| pole());
            }
            if !nv.is_zero_value() || num.is_zero() {
                if num.is_zero() {
                    return Ok(QuadExt::int(0));
                }
                return Err(pole());
            }
            num = num.div_rem(&factor).map_err(|_| pole())?.0;
            den = den.div_rem(&factor).map_err(|_| pole())?.0;
        }
    }

    /// Composition `self ∘ r`, i.e. `t := r(s)`.
    pub fn substitute(&self, r: &RatFunc) -> ScalarResult<RatFunc> {
        let num = Self::compose_poly(&self.num, r)?;
        let den = Self::compose_poly(&self.den, r)?;
        num.checked_div(&den)
    }

    fn compose_poly(p: &Poly, r: &RatFunc) -> ScalarResult<RatFunc> {
        let mut acc = RatFunc::int(0);
        for c in p.coeffs().iter().rev() {
            acc = acc.checked_mul(r)?.checked_add(&RatFunc::constant(c.clone()))?;
        }
        Ok(acc)
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.degree() == Some(0) {
            let d = self.den.leading();
            if d == QuadExt::int(1) {
                return write!(f, "{}", self.num);
            }
        }
        let wrap = |p: &Poly| {
            let s = p.to_string();
            if p.coeffs().iter().filter(|c| !c.is_zero_value()).count() > 1 {
                format!("({s})")
            } else {
                s
            }
        };
        write!(f, "{}/{}", wrap(&self.num), wrap(&self.den))
    }
}

impl Field for RatFunc {
    fn zero() -> Self {
        Self::int(0)
    }
    fn one() -> Self {
        Self::int(1)
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
    fn from_rational(q: Rational) -> Self {
        Self::rational(q)
    }
    fn from_quad(q: QuadExt) -> Self {
        Self::constant(q)
    }
    fn add_ref(&self, other: &Self) -> Self {
        self.checked_add(other).expect("field context mismatch")
    }
    fn sub_ref(&self, other: &Self) -> Self {
        self.checked_sub(other).expect("field context mismatch")
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self.checked_mul(other).expect("field context mismatch")
    }
    fn neg_ref(&self) -> Self {
        Self { num: self.num.checked_neg(), den: self.den.clone() }
    }
    fn inv(&self) -> ScalarResult<Self> {
        self.checked_inv()
    }
}

macro_rules! forward_ops {
    ($ty:ty) => {
        impl Add for $ty {
            type Output = $ty;
            fn add(self, rhs: $ty) -> $ty {
                self.add_ref(&rhs)
            }
        }
        impl Sub for $ty {
            type Output = $ty;
            fn sub(self, rhs: $ty) -> $ty {
                self.sub_ref(&rhs)
            }
        }
        impl Mul for $ty {
            type Output = $ty;
            fn mul(self, rhs: $ty) -> $ty {
                self.mul_ref(&rhs)
            }
        }
        /// # Panics
        /// Panics on division by zero; use `checked_div` to handle it.
        impl Div for $ty {
            type Output = $ty;
            fn div(self, rhs: $ty) -> $ty {
                self.checked_div(&rhs).expect("division by zero")
            }
        }
        impl Neg for $ty {
            type Output = $ty;
            fn neg(self) -> $ty {
                self.neg_ref()
            }
        }
    };
}

forward_ops!(QuadExt);
forward_ops!(RatFunc);

// ---------------------------------------------------------------------------
// Scalar expressions
// ---------------------------------------------------------------------------

/// Parameter bindings used when evaluating a [`ScalarExpr`].
pub type Env = BTreeMap<String, RatFunc>;

/// A parsed scalar of the registry grammar.
///
/// ```text
/// expr   := term (("+"|"-") term)*
/// term   := factor (("*"|"/") factor)*
/// factor := INT | NAME | "t" | "r" | "(" expr ")" | "-" factor
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScalarExpr {
    Int(BigInt),
    Name(String),
    T,
    R,
    Neg(Box<ScalarExpr>),
    Add(Box<ScalarExpr>, Box<ScalarExpr>),
    Sub(Box<ScalarExpr>, Box<ScalarExpr>),
    Mul(Box<ScalarExpr>, Box<ScalarExpr>),
    Div(Box<ScalarExpr>, Box<ScalarExpr>),
}

impl ScalarExpr {
    pub fn int(n: i64) -> Self {
        Self::Int(BigInt::from(n))
    }

    /// Parses `text` without restricting parameter names.
    pub fn parse(text: &str) -> ScalarResult<Self> {
        let mut p = ExprParser { src: text.as_bytes(), pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    /// Parameter names mentioned by the expression.
    pub fn names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Self::Name(n) => {
                out.insert(n.clone());
            }
            Self::Neg(a) => a.collect_names(out),
            Self::Add(a, b) | Self::Sub(a, b) | Self::Mul(a, b) | Self::Div(a, b) => {
                a.collect_names(out);
                b.collect_names(out);
            }
            Self::Int(_) | Self::T | Self::R => {}
        }
    }

    /// Whether the expression involves `t`.
    pub fn mentions_t(&self) -> bool {
        match self {
            Self::T => true,
            Self::Neg(a) => a.mentions_t(),
            Self::Add(a, b) | Self::Sub(a, b) | Self::Mul(a, b) | Self::Div(a, b) => a.mentions_t() || b.mentions_t(),
            _ => false,
        }
    }

    /// Replaces named parameters by expressions (unlisted names stay).
    pub fn substitute_names(&self, map: &BTreeMap<String, ScalarExpr>) -> ScalarExpr {
        let sub = |e: &ScalarExpr| Box::new(e.substitute_names(map));
        match self {
            Self::Name(n) => map.get(n).cloned().unwrap_or_else(|| self.clone()),
            Self::Neg(a) => Self::Neg(sub(a)),
            Self::Add(a, b) => Self::Add(sub(a), sub(b)),
            Self::Sub(a, b) => Self::Sub(sub(a), sub(b)),
            Self::Mul(a, b) => Self::Mul(sub(a), sub(b)),
            Self::Div(a, b) => Self::Div(sub(a), sub(b)),
            other => other.clone(),
        }
    }

    /// Evaluates in `ctx`, with parameters taken from `env`.
    pub fn eval(&self, ctx: &FieldContext, env: &Env) -> ScalarResult<RatFunc> {
        Ok(match self {
            Self::Int(n) => RatFunc::rational(Rational::from_integer(n.clone())),
            Self::Name(n) => env.get(n).cloned().ok_or_else(|| ScalarError::Unbound(n.clone()))?,
            Self::T => RatFunc::t(),
            Self::R => RatFunc::constant(ctx.radical()?),
            Self::Neg(a) => a.eval(ctx, env)?.neg_ref(),
            Self::Add(a, b) => a.eval(ctx, env)?.checked_add(&b.eval(ctx, env)?)?,
            Self::Sub(a, b) => a.eval(ctx, env)?.checked_sub(&b.eval(ctx, env)?)?,
            Self::Mul(a, b) => a.eval(ctx, env)?.checked_mul(&b.eval(ctx, env)?)?,
            Self::Div(a, b) => a.eval(ctx, env)?.checked_div(&b.eval(ctx, env)?)?,
        })
    }

    /// Evaluates to a constant (fails if the value depends on `t`).
    pub fn eval_const(&self, ctx: &FieldContext, env: &Env) -> ScalarResult<QuadExt> {
        self.eval(ctx, env)?.to_constant()
    }

    fn precedence(&self) -> u8 {
        match self {
            Self::Add(..) | Self::Sub(..) => 1,
            Self::Mul(..) | Self::Div(..) => 2,
            Self::Neg(..) => 3,
            _ => 4,
        }
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |e: &ScalarExpr, min: u8| {
            if e.precedence() < min {
                format!("({e})")
            } else {
                e.to_string()
            }
        };
        match self {
            Self::Int(n) => write!(f, "{n}"),
            Self::Name(n) => write!(f, "{n}"),
            Self::T => write!(f, "t"),
            Self::R => write!(f, "r"),
            Self::Neg(a) => write!(f, "-{}", side(a, 3)),
            Self::Add(a, b) => write!(f, "{} + {}", side(a, 1), side(b, 2)),
            Self::Sub(a, b) => write!(f, "{} - {}", side(a, 1), side(b, 2)),
            Self::Mul(a, b) => write!(f, "{}*{}", side(a, 2), side(b, 3)),
            Self::Div(a, b) => write!(f, "{}/{}", side(a, 2), side(b, 3)),
        }
    }
}

struct ExprParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl ExprParser<'_> {
    fn error(&self, msg: &str) -> ScalarError {
        ScalarError::Syntax { pos: self.pos + 1, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> ScalarResult<ScalarExpr> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if c == b'+' {
                ScalarExpr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                ScalarExpr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> ScalarResult<ScalarExpr> {
        let mut lhs = self.factor()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = if c == b'*' {
                ScalarExpr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                ScalarExpr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> ScalarResult<ScalarExpr> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'-') => {
                self.pos += 1;
                Ok(ScalarExpr::Neg(Box::new(self.factor()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
                Ok(ScalarExpr::Int(digits.parse().expect("digit string")))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii name");
                Ok(match name {
                    "t" => ScalarExpr::T,
                    "r" => ScalarExpr::R,
                    _ => ScalarExpr::Name(name.to_string()),
                })
            }
            Some(_) => Err(self.error("unexpected character")),
        }
    }
}

/// Parses `text` and rejects parameter names not listed in `params`.
///
/// The result keeps parameters symbolic; [`ScalarExpr::eval`] binds them.
/// `ctx` is checked so that `r` only appears when `d ≠ 0`.
pub fn parse_scalar(text: &str, ctx: &FieldContext, params: &[&str]) -> ScalarResult<ScalarExpr> {
    let e = ScalarExpr::parse(text)?;
    if let Some(bad) = e.names().into_iter().find(|n| !params.contains(&n.as_str())) {
        return Err(ScalarError::Undeclared(bad));
    }
    if ctx.d() == 0 && contains_r(&e) {
        return Err(ScalarError::NoRadical);
    }
    Ok(e)
}

fn contains_r(e: &ScalarExpr) -> bool {
    match e {
        ScalarExpr::R => true,
        ScalarExpr::Neg(a) => contains_r(a),
        ScalarExpr::Add(a, b) | ScalarExpr::Sub(a, b) | ScalarExpr::Mul(a, b) | ScalarExpr::Div(a, b) => {
            contains_r(a) || contains_r(b)
        }
        _ => false,
    }
}

/// Parses a linear combination `[sign][coef] TOKEN (± [coef] TOKEN)*`.
///
/// A coefficient is any scalar expression, optionally followed by `*`, and
/// may be omitted (meaning 1). `is_token` recognizes the basis symbols (e.g.
/// `e1`, `f2`, `D23`). Returns the `(coefficient, token)` pairs in order; a
/// bare `0` denotes the empty combination.
pub fn parse_combination(text: &str, is_token: impl Fn(&str) -> bool) -> ScalarResult<Vec<(ScalarExpr, String)>> {
    let trimmed = text.trim();
    if trimmed == "0" {
        return Ok(Vec::new());
    }
    let bytes = trimmed.as_bytes();
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut coef_start = 0usize;
    let mut i = 0usize;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'(' => depth += 1,
            b')' => depth -= 1,
            _ => {}
        }
        let word_start = c.is_ascii_alphabetic() && (i == 0 || !is_word_byte(bytes[i - 1]));
        if depth == 0 && word_start {
            let mut j = i;
            while j < bytes.len() && is_word_byte(bytes[j]) {
                j += 1;
            }
            let word = &trimmed[i..j];
            if is_token(word) {
                let coef = parse_coefficient(&trimmed[coef_start..i], coef_start)?;
                out.push((coef, word.to_string()));
                // Next term must start with a sign or the input must end.
                let mut k = j;
                while k < bytes.len() && bytes[k].is_ascii_whitespace() {
                    k += 1;
                }
                if k < bytes.len() && bytes[k] != b'+' && bytes[k] != b'-' {
                    return Err(ScalarError::Syntax { pos: k + 1, msg: format!("expected `+` or `-` after `{word}`") });
                }
                coef_start = k;
                i = k;
                continue;
            }
            i = j;
            continue;
        }
        i += 1;
    }
    if coef_start < bytes.len() {
        return Err(ScalarError::Syntax { pos: coef_start + 1, msg: "coefficient without a basis symbol".to_string() });
    }
    if out.is_empty() {
        return Err(ScalarError::Syntax { pos: 1, msg: "empty combination".to_string() });
    }
    Ok(out)
}

fn is_word_byte(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_'
}

fn parse_coefficient(raw: &str, offset: usize) -> ScalarResult<ScalarExpr> {
    let mut s = raw.trim();
    let mut negate = false;
    if let Some(rest) = s.strip_prefix('+') {
        s = rest.trim_start();
    } else if let Some(rest) = s.strip_prefix('-') {
        negate = true;
        s = rest.trim_start();
    }
    let s = s.strip_suffix('*').unwrap_or(s).trim();
    let base = if s.is_empty() {
        ScalarExpr::int(1)
    } else {
        ScalarExpr::parse(s).map_err(|e| match e {
            ScalarError::Syntax { pos, msg } => ScalarError::Syntax { pos: pos + offset, msg },
            other => other,
        })?
    };
    Ok(if negate { ScalarExpr::Neg(Box::new(base)) } else { base })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(text: &str) -> RatFunc {
        ScalarExpr::parse(text).unwrap().eval(&FieldContext::RATIONAL, &Env::new()).unwrap()
    }

    #[test]
    fn halves_add_to_one() {
        let h = QuadExt::rational(ratio(1, 2));
        assert_eq!(h.clone() + h, QuadExt::int(1));
    }

    #[test]
    fn imaginary_root_three_squares_to_minus_three() {
        let r = QuadExt::sqrt(-3).unwrap();
        assert_eq!(r.clone() * r, QuadExt::int(-3));
        for d in [-3, -1, 2] {
            let r = QuadExt::sqrt(d).unwrap();
            assert_eq!(r.clone() * r, QuadExt::int(d));
        }
    }

    #[test]
    fn mixing_extensions_is_an_error() {
        let a = QuadExt::sqrt(2).unwrap();
        let b = QuadExt::sqrt(-3).unwrap();
        assert_eq!(a.checked_add(&b), Err(ScalarError::ContextMismatch(2, -3)));
    }

    #[test]
    fn bad_discriminants_rejected() {
        assert!(FieldContext::new(4).is_err());
        assert!(FieldContext::new(1).is_err());
        assert!(FieldContext::new(-3).is_ok());
    }

    #[test]
    fn inverse_pair_cancels() {
        let f = eval("t/(t+2)");
        let g = eval("(t+2)/t");
        assert_eq!(f * g, RatFunc::int(1));
    }

    #[test]
    fn eval_at_examples() {
        let zero = QuadExt::int(0);
        assert_eq!(eval("2*t/(t+2)").eval_at(&zero).unwrap(), QuadExt::int(0));
        assert_eq!(eval("-2*(t+2)").eval_at(&zero).unwrap(), QuadExt::int(-4));
        assert!(matches!(eval("1/t").eval_at(&zero), Err(ScalarError::Pole(_))));
    }

    #[test]
    fn limit_at_examples() {
        let zero = QuadExt::int(0);
        let alpha = eval("-(t+2)/t");
        let f = eval("t*t").mul_ref(&RatFunc::int(2)).mul_ref(&alpha);
        assert_eq!(f.limit_at(&zero).unwrap(), QuadExt::int(0));
        assert_eq!(eval("(t*t - t*t)/t").limit_at(&zero).unwrap(), QuadExt::int(0));
        assert!(eval("(t*t+1)/t").limit_at(&zero).is_err());
    }

    #[test]
    fn substitution_examples() {
        let r = eval("2 - 2*t*t");
        assert_eq!(eval("4 - 2*t").substitute(&r).unwrap(), eval("4*t*t"));
        assert_eq!(eval("1 - t/2").substitute(&r).unwrap(), eval("t*t"));
        assert_eq!(eval("t").substitute(&RatFunc::t()).unwrap(), RatFunc::t());
    }

    #[test]
    fn parse_scalar_examples() {
        let ctx = FieldContext::RATIONAL;
        let e = parse_scalar("(alpha+1)", &ctx, &["alpha"]).unwrap();
        let mut env = Env::new();
        env.insert("alpha".into(), RatFunc::int(2));
        assert_eq!(e.eval(&ctx, &env).unwrap(), RatFunc::int(3));
        assert_eq!(eval("-2*(t+2)"), eval("-2*t - 4"));
        assert_eq!(eval("1/2"), RatFunc::rational(ratio(1, 2)));
        assert_eq!(parse_scalar("beta", &ctx, &["alpha"]), Err(ScalarError::Undeclared("beta".into())));
        assert!(matches!(ScalarExpr::parse("1 + * 2"), Err(ScalarError::Syntax { pos: 5, .. })));
    }

    #[test]
    fn combination_parsing() {
        let is_basis = |w: &str| w.starts_with(['e', 'f']) && w[1..].parse::<usize>().is_ok();
        let c = parse_combination("2*t/(t+2) e1", is_basis).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].1, "e1");
        let c = parse_combination("-(1-t*t)*t f1 + (2-2*t*t) f2", is_basis).unwrap();
        assert_eq!(c.len(), 2);
        let c = parse_combination("- e1", is_basis).unwrap();
        assert_eq!(eval(&c[0].0.to_string()), RatFunc::int(-1));
        assert!(parse_combination("0", is_basis).unwrap().is_empty());
        assert!(parse_combination("e1 e2", is_basis).is_err());
    }

    #[test]
    fn display_round_trips() {
        for text in ["(t+6)/(2-t)", "-(1-t*t)*t", "2*(alpha-1)/(alpha+1)", "a - (b - c)"] {
            let e = ScalarExpr::parse(text).unwrap();
            assert_eq!(ScalarExpr::parse(&e.to_string()).unwrap(), e, "{text}");
        }
    }
}

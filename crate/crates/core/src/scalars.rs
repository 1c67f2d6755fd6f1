//! Exact base scalars and the valued field K = k(z).
//!
//! The engine works over a base field k which is either the rationals or a
//! prime field F_p (p >= 3), and over the rational function field K = k(z)
//! equipped with the valuation nu at z = 0.  Elements of K are kept in the
//! canonical form z^v * n(z)/d(z) with n(0) != 0, d(0) != 0, d monic and
//! gcd(n, d) = 1, so equality is literal equality and nu is read off the
//! exponent v.  The valuation ring D = { a in K : nu(a) >= 0 } plays the
//! role of the power series ring k[[z]] throughout; its maximal ideal is
//! z*D and the residue field D/zD is k again.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::DbcError;

/// The base field k: rationals or a prime field F_p with p >= 3.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, Serialize, Deserialize)]
pub enum Field {
    Q,
    Fp(u64),
}

impl Field {
    /// Validates the field choice (F_p needs p prime and p >= 3).
    pub fn validate(self) -> Result<(), DbcError> {
        match self {
            Field::Q => Ok(()),
            Field::Fp(p) => {
                if p < 3 || !is_prime(p) {
                    Err(DbcError::BadField(format!(
                        "characteristic must be a prime >= 3, got {p}"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Q => write!(f, "Q"),
            Field::Fp(p) => write!(f, "F{p}"),
        }
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// An exact element of the base field k.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum BaseScalar {
    Rat(BigRational),
    Fp { p: u64, v: u64 },
}

impl BaseScalar {
    pub fn zero(field: Field) -> Self {
        Self::from_i64(field, 0)
    }

    pub fn one(field: Field) -> Self {
        Self::from_i64(field, 1)
    }

    pub fn from_i64(field: Field, n: i64) -> Self {
        match field {
            Field::Q => BaseScalar::Rat(BigRational::from(BigInt::from(n))),
            Field::Fp(p) => {
                let v = n.rem_euclid(p as i64) as u64;
                BaseScalar::Fp { p, v }
            }
        }
    }

    pub fn from_ratio(field: Field, num: i64, den: i64) -> Result<Self, DbcError> {
        if den == 0 {
            return Err(DbcError::DivisionByZero);
        }
        let n = Self::from_i64(field, num);
        let d = Self::from_i64(field, den);
        n.div(&d)
    }

    pub fn field(&self) -> Field {
        match self {
            BaseScalar::Rat(_) => Field::Q,
            BaseScalar::Fp { p, .. } => Field::Fp(*p),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            BaseScalar::Rat(r) => r.is_zero(),
            BaseScalar::Fp { v, .. } => *v == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            BaseScalar::Rat(r) => r.is_one(),
            BaseScalar::Fp { v, .. } => *v == 1,
        }
    }

    fn check(&self, other: &Self) {
        assert_eq!(
            self.field(),
            other.field(),
            "mixed base fields in scalar arithmetic"
        );
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check(other);
        match (self, other) {
            (BaseScalar::Rat(a), BaseScalar::Rat(b)) => BaseScalar::Rat(a + b),
            (BaseScalar::Fp { p, v: a }, BaseScalar::Fp { v: b, .. }) => BaseScalar::Fp {
                p: *p,
                v: (a + b) % p,
            },
            _ => unreachable!(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        match self {
            BaseScalar::Rat(a) => BaseScalar::Rat(-a),
            BaseScalar::Fp { p, v } => BaseScalar::Fp {
                p: *p,
                v: if *v == 0 { 0 } else { p - v },
            },
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check(other);
        match (self, other) {
            (BaseScalar::Rat(a), BaseScalar::Rat(b)) => BaseScalar::Rat(a * b),
            (BaseScalar::Fp { p, v: a }, BaseScalar::Fp { v: b, .. }) => BaseScalar::Fp {
                p: *p,
                v: (((*a as u128) * (*b as u128)) % (*p as u128)) as u64,
            },
            _ => unreachable!(),
        }
    }

    pub fn inv(&self) -> Result<Self, DbcError> {
        if self.is_zero() {
            return Err(DbcError::DivisionByZero);
        }
        Ok(match self {
            BaseScalar::Rat(a) => BaseScalar::Rat(a.recip()),
            BaseScalar::Fp { p, v } => BaseScalar::Fp {
                p: *p,
                v: mod_inverse(*v, *p),
            },
        })
    }

    pub fn div(&self, other: &Self) -> Result<Self, DbcError> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.field());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }
}

fn mod_inverse(a: u64, p: u64) -> u64 {
    // extended Euclid on signed accumulators
    let (mut t, mut new_t): (i128, i128) = (0, 1);
    let (mut r, mut new_r): (i128, i128) = (p as i128, a as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    assert_eq!(r, 1, "non-invertible residue");
    t.rem_euclid(p as i128) as u64
}

impl fmt::Display for BaseScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseScalar::Rat(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            BaseScalar::Fp { v, .. } => write!(f, "{v}"),
        }
    }
}

/// A signed integer extended by +infinity; the value set of the valuation nu.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum ExtendedInt {
    Finite(i64),
    Infinity,
}

impl ExtendedInt {
    pub fn min(self, other: Self) -> Self {
        match (self, other) {
            (ExtendedInt::Infinity, o) => o,
            (s, ExtendedInt::Infinity) => s,
            (ExtendedInt::Finite(a), ExtendedInt::Finite(b)) => ExtendedInt::Finite(a.min(b)),
        }
    }

    pub fn add(self, other: Self) -> Self {
        match (self, other) {
            (ExtendedInt::Finite(a), ExtendedInt::Finite(b)) => ExtendedInt::Finite(a + b),
            _ => ExtendedInt::Infinity,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedInt::Finite(_))
    }

    pub fn finite(self) -> Option<i64> {
        match self {
            ExtendedInt::Finite(n) => Some(n),
            ExtendedInt::Infinity => None,
        }
    }
}

impl PartialOrd for ExtendedInt {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedInt {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use ExtendedInt::*;
        match (self, other) {
            (Infinity, Infinity) => std::cmp::Ordering::Equal,
            (Infinity, Finite(_)) => std::cmp::Ordering::Greater,
            (Finite(_), Infinity) => std::cmp::Ordering::Less,
            (Finite(a), Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for ExtendedInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedInt::Finite(n) => write!(f, "{n}"),
            ExtendedInt::Infinity => write!(f, "inf"),
        }
    }
}

/// Dense univariate polynomial over k.  The variable is anonymous: the same
/// type serves polynomials in z (inside `FieldElement`) and in t (inside the
/// linear algebra over k[t]).  Invariant: no trailing zero coefficient; the
/// zero polynomial has an empty coefficient vector.
#[derive(Clone, PartialEq, Debug)]
pub struct UniPoly {
    pub field: Field,
    pub coeffs: Vec<BaseScalar>,
}

impl UniPoly {
    pub fn new(field: Field, mut coeffs: Vec<BaseScalar>) -> Self {
        while coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        UniPoly { field, coeffs }
    }

    pub fn zero(field: Field) -> Self {
        UniPoly {
            field,
            coeffs: vec![],
        }
    }

    pub fn one(field: Field) -> Self {
        UniPoly {
            field,
            coeffs: vec![BaseScalar::one(field)],
        }
    }

    pub fn constant(c: BaseScalar) -> Self {
        UniPoly::new(c.field(), vec![c])
    }

    /// The monomial c * x^n.
    pub fn monomial(c: BaseScalar, n: usize) -> Self {
        let field = c.field();
        let mut coeffs = vec![BaseScalar::zero(field); n];
        coeffs.push(c);
        UniPoly::new(field, coeffs)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports None.
    pub fn degree(&self) -> Option<usize> {
        if self.is_zero() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeff(&self, i: usize) -> BaseScalar {
        self.coeffs
            .get(i)
            .cloned()
            .unwrap_or_else(|| BaseScalar::zero(self.field))
    }

    pub fn leading(&self) -> BaseScalar {
        self.coeffs
            .last()
            .cloned()
            .unwrap_or_else(|| BaseScalar::zero(self.field))
    }

    pub fn is_monic(&self) -> bool {
        self.leading().is_one()
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for i in 0..n {
            coeffs.push(self.coeff(i).add(&other.coeff(i)));
        }
        UniPoly::new(self.field, coeffs)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        UniPoly {
            field: self.field,
            coeffs: self.coeffs.iter().map(|c| c.neg()).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return UniPoly::zero(self.field);
        }
        let mut coeffs =
            vec![BaseScalar::zero(self.field); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = coeffs[i + j].add(&a.mul(b));
            }
        }
        UniPoly::new(self.field, coeffs)
    }

    pub fn scale(&self, c: &BaseScalar) -> Self {
        UniPoly::new(
            self.field,
            self.coeffs.iter().map(|a| a.mul(c)).collect(),
        )
    }

    /// Euclidean division: self = q * div + r with deg r < deg div.
    pub fn div_rem(&self, div: &Self) -> Result<(Self, Self), DbcError> {
        if div.is_zero() {
            return Err(DbcError::DivisionByZero);
        }
        let mut rem = self.clone();
        let mut quo = UniPoly::zero(self.field);
        let dlead_inv = div.leading().inv()?;
        let ddeg = div.degree().unwrap();
        while let Some(rdeg) = rem.degree() {
            if rdeg < ddeg {
                break;
            }
            let c = rem.leading().mul(&dlead_inv);
            let shift = rdeg - ddeg;
            let term = UniPoly::monomial(c, shift);
            quo = quo.add(&term);
            rem = rem.sub(&term.mul(div));
        }
        Ok((quo, rem))
    }

    pub fn gcd(&self, other: &Self) -> Self {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b).expect("gcd by nonzero");
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.monic()
        }
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(&self.leading().inv().unwrap())
    }

    /// Evaluates at a scalar point.
    pub fn eval(&self, x: &BaseScalar) -> BaseScalar {
        let mut acc = BaseScalar::zero(self.field);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(c);
        }
        acc
    }

    /// Order of vanishing at 0 (index of the first nonzero coefficient).
    pub fn order(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    /// Divides by x^n, assuming x^n divides self exactly.
    pub fn shift_down(&self, n: usize) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        assert!(self.order().unwrap() >= n, "shift_down underflow");
        UniPoly::new(self.field, self.coeffs[n..].to_vec())
    }

    pub fn shift_up(&self, n: usize) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut coeffs = vec![BaseScalar::zero(self.field); n];
        coeffs.extend(self.coeffs.iter().cloned());
        UniPoly::new(self.field, coeffs)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return UniPoly::zero(self.field);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c.mul(&BaseScalar::from_i64(self.field, i as i64)))
            .collect();
        UniPoly::new(self.field, coeffs)
    }

    /// Renders with the given variable name, lowest degree first.
    pub fn render(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = vec![];
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let cs = c.to_string();
            let part = if i == 0 {
                cs
            } else if c.is_one() {
                if i == 1 {
                    var.to_string()
                } else {
                    format!("{var}^{i}")
                }
            } else if i == 1 {
                format!("{cs}*{var}")
            } else {
                format!("{cs}*{var}^{i}")
            };
            parts.push(part);
        }
        parts.join(" + ").replace("+ -", "- ")
    }
}

impl fmt::Display for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render("z"))
    }
}

/// An exact element of K = k(z), stored canonically as z^val * num/den with
/// num(0) != 0, den(0) != 0, den monic and gcd(num, den) = 1.  The zero
/// element is flagged by an empty numerator.
#[derive(Clone, PartialEq, Debug)]
pub struct FieldElement {
    pub field: Field,
    val: i64,
    num: UniPoly,
    den: UniPoly,
}

impl FieldElement {
    pub fn zero(field: Field) -> Self {
        FieldElement {
            field,
            val: 0,
            num: UniPoly::zero(field),
            den: UniPoly::one(field),
        }
    }

    pub fn one(field: Field) -> Self {
        FieldElement::from_base(BaseScalar::one(field))
    }

    pub fn from_base(c: BaseScalar) -> Self {
        let field = c.field();
        if c.is_zero() {
            return FieldElement::zero(field);
        }
        FieldElement {
            field,
            val: 0,
            num: UniPoly::constant(c),
            den: UniPoly::one(field),
        }
    }

    pub fn from_i64(field: Field, n: i64) -> Self {
        FieldElement::from_base(BaseScalar::from_i64(field, n))
    }

    /// c * z^n for any integer n.
    pub fn monomial(c: BaseScalar, n: i64) -> Self {
        let field = c.field();
        if c.is_zero() {
            return FieldElement::zero(field);
        }
        FieldElement {
            field,
            val: n,
            num: UniPoly::constant(c),
            den: UniPoly::one(field),
        }
    }

    pub fn z(field: Field) -> Self {
        FieldElement::monomial(BaseScalar::one(field), 1)
    }

    /// Builds num/den from raw polynomials in z, normalizing to canonical form.
    pub fn from_fraction(num: UniPoly, den: UniPoly) -> Result<Self, DbcError> {
        if den.is_zero() {
            return Err(DbcError::DivisionByZero);
        }
        let field = num.field;
        if num.is_zero() {
            return Ok(FieldElement::zero(field));
        }
        let no = num.order().unwrap();
        let do_ = den.order().unwrap();
        let val = no as i64 - do_ as i64;
        let mut n = num.shift_down(no);
        let mut d = den.shift_down(do_);
        let g = n.gcd(&d);
        if g.degree() != Some(0) {
            n = n.div_rem(&g).unwrap().0;
            d = d.div_rem(&g).unwrap().0;
        }
        let lead_inv = d.leading().inv()?;
        Ok(FieldElement {
            field,
            val,
            num: n.scale(&lead_inv),
            den: d.monic(),
        })
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// The valuation nu: order of vanishing at z = 0, with nu(0) = infinity.
    pub fn valuation(&self) -> ExtendedInt {
        if self.is_zero() {
            ExtendedInt::Infinity
        } else {
            ExtendedInt::Finite(self.val)
        }
    }

    /// True iff the element lies in D = { nu >= 0 }.
    pub fn in_d(&self) -> bool {
        self.is_zero() || self.val >= 0
    }

    /// Image in the residue field k = D/zD.  Errors if nu < 0.
    pub fn residue(&self) -> Result<BaseScalar, DbcError> {
        if self.is_zero() {
            return Ok(BaseScalar::zero(self.field));
        }
        if self.val < 0 {
            return Err(DbcError::NotInValuationRing(self.to_string()));
        }
        if self.val > 0 {
            return Ok(BaseScalar::zero(self.field));
        }
        self.num.coeff(0).div(&self.den.coeff(0))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.field, other.field, "mixed fields");
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let v = self.val.min(other.val);
        let a = self.num.shift_up((self.val - v) as usize);
        let b = other.num.shift_up((other.val - v) as usize);
        let num = a.mul(&other.den).add(&b.mul(&self.den));
        let den = self.den.mul(&other.den);
        let mut r = FieldElement::from_fraction(num, den).expect("nonzero denominator");
        if !r.is_zero() {
            r.val += v;
        }
        r
    }

    pub fn neg(&self) -> Self {
        FieldElement {
            field: self.field,
            val: self.val,
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.field, other.field, "mixed fields");
        if self.is_zero() || other.is_zero() {
            return FieldElement::zero(self.field);
        }
        let num = self.num.mul(&other.num);
        let den = self.den.mul(&other.den);
        let mut r = FieldElement::from_fraction(num, den).expect("nonzero denominator");
        r.val += self.val + other.val;
        r
    }

    pub fn inv(&self) -> Result<Self, DbcError> {
        if self.is_zero() {
            return Err(DbcError::DivisionByZero);
        }
        let mut r = FieldElement::from_fraction(self.den.clone(), self.num.clone())?;
        r.val -= self.val;
        Ok(r)
    }

    pub fn div(&self, other: &Self) -> Result<Self, DbcError> {
        Ok(self.mul(&other.inv()?))
    }

    /// Multiplies by z^n.
    pub fn shift(&self, n: i64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut r = self.clone();
        r.val += n;
        r
    }

    pub fn pow(&self, e: i64) -> Result<Self, DbcError> {
        if e < 0 {
            return self.inv()?.pow(-e);
        }
        let mut acc = FieldElement::one(self.field);
        let mut base = self.clone();
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        Ok(acc)
    }

    /// Expands to a plain numerator/denominator pair in z (for display and
    /// for the independent fraction-arithmetic test oracle).
    pub fn expand(&self) -> (UniPoly, UniPoly) {
        if self.is_zero() {
            return (UniPoly::zero(self.field), UniPoly::one(self.field));
        }
        if self.val >= 0 {
            (self.num.shift_up(self.val as usize), self.den.clone())
        } else {
            (self.num.clone(), self.den.shift_up((-self.val) as usize))
        }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let (num, den) = self.expand();
        let ns = num.render("z");
        if den.degree() == Some(0) {
            // den is monic of degree 0, hence 1
            if num.coeffs.iter().filter(|c| !c.is_zero()).count() > 1 {
                write!(f, "{ns}")
            } else {
                write!(f, "{ns}")
            }
        } else {
            let needs_paren = num.coeffs.iter().filter(|c| !c.is_zero()).count() > 1;
            let nw = if needs_paren { format!("({ns})") } else { ns };
            write!(f, "{nw}/({})", den.render("z"))
        }
    }
}

/// The four arithmetic operations on K, as a single entry point.
pub fn arith(
    a: &FieldElement,
    b: &FieldElement,
    op: ArithOp,
) -> Result<FieldElement, DbcError> {
    match op {
        ArithOp::Add => Ok(a.add(b)),
        ArithOp::Sub => Ok(a.sub(b)),
        ArithOp::Mul => Ok(a.mul(b)),
        ArithOp::Div => a.div(b),
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

// ---------------------------------------------------------------------------
// Text syntax: integer and fraction literals, variable z, + - * / ^, parens.
// ---------------------------------------------------------------------------

struct Parser<'a> {
    field: Field,
    chars: std::iter::Peekable<std::str::Chars<'a>>,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.chars.peek().map_or(false, |c| c.is_whitespace()) {
            self.chars.next();
        }
    }

    fn expr(&mut self) -> Result<FieldElement, DbcError> {
        self.skip_ws();
        let mut acc = if self.chars.peek() == Some(&'-') {
            self.chars.next();
            self.term()?.neg()
        } else {
            self.term()?
        };
        loop {
            self.skip_ws();
            match self.chars.peek() {
                Some('+') => {
                    self.chars.next();
                    acc = acc.add(&self.term()?);
                }
                Some('-') => {
                    self.chars.next();
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<FieldElement, DbcError> {
        let mut acc = self.factor()?;
        loop {
            self.skip_ws();
            match self.chars.peek() {
                Some('*') => {
                    self.chars.next();
                    acc = acc.mul(&self.factor()?);
                }
                Some('/') => {
                    self.chars.next();
                    acc = acc.div(&self.factor()?)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<FieldElement, DbcError> {
        let base = self.atom()?;
        self.skip_ws();
        if self.chars.peek() == Some(&'^') {
            self.chars.next();
            self.skip_ws();
            let neg = if self.chars.peek() == Some(&'-') {
                self.chars.next();
                true
            } else {
                false
            };
            let e = self.integer()?;
            return base.pow(if neg { -e } else { e });
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<FieldElement, DbcError> {
        self.skip_ws();
        match self.chars.peek() {
            Some('(') => {
                self.chars.next();
                let e = self.expr()?;
                self.skip_ws();
                if self.chars.next() != Some(')') {
                    return Err(DbcError::Parse("expected ')'".into()));
                }
                Ok(e)
            }
            Some('z') => {
                self.chars.next();
                Ok(FieldElement::z(self.field))
            }
            Some('-') => {
                self.chars.next();
                Ok(self.atom()?.neg())
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                Ok(FieldElement::from_i64(self.field, n))
            }
            other => Err(DbcError::Parse(format!("unexpected token {other:?}"))),
        }
    }

    fn integer(&mut self) -> Result<i64, DbcError> {
        self.skip_ws();
        let mut s = String::new();
        while self.chars.peek().map_or(false, |c| c.is_ascii_digit()) {
            s.push(self.chars.next().unwrap());
        }
        s.parse()
            .map_err(|_| DbcError::Parse(format!("bad integer literal '{s}'")))
    }
}

/// Parses the element text syntax, e.g. `(1+2*z)/(z^2)`.
pub fn parse_element(field: Field, text: &str) -> Result<FieldElement, DbcError> {
    let mut p = Parser {
        field,
        chars: text.chars().peekable(),
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.chars.peek().is_some() {
        return Err(DbcError::Parse(format!(
            "trailing input in element '{text}'"
        )));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fe(text: &str) -> FieldElement {
        parse_element(Field::Q, text).unwrap()
    }

    #[test]
    fn arith_examples() {
        // z + z = 2z
        assert_eq!(fe("z + z"), fe("2*z"));
        // (1+z) - (1+z) = 0 with nu = infinity
        let d = fe("1+z").sub(&fe("1+z"));
        assert!(d.is_zero());
        assert_eq!(d.valuation(), ExtendedInt::Infinity);
        // z^2/(1+z) / z = z/(1+z), cross-checked by expanded fraction arithmetic
        let lhs = fe("z^2/(1+z)").div(&fe("z")).unwrap();
        let rhs = fe("z/(1+z)");
        assert_eq!(lhs, rhs);
        let (ln, ld) = lhs.expand();
        let (rn, rd) = rhs.expand();
        assert_eq!(ln.mul(&rd), rn.mul(&ld));
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(fe("0").valuation(), ExtendedInt::Infinity);
        assert_eq!(fe("z^2/(1+z)").valuation(), ExtendedInt::Finite(2));
        assert_eq!(fe("(z+z^3)/z^4").valuation(), ExtendedInt::Finite(-3));
    }

    #[test]
    fn residue_examples() {
        assert_eq!(
            fe("(2+z)/(1+z)").residue().unwrap(),
            BaseScalar::from_i64(Field::Q, 2)
        );
        assert!(fe("z*(3+z)/(1+5*z)").residue().unwrap().is_zero());
        assert!(matches!(
            fe("1/z").residue(),
            Err(DbcError::NotInValuationRing(_))
        ));
    }

    #[test]
    fn canonical_form_unique() {
        assert_eq!(fe("(z^2+z^3)/(z*(1+z))"), fe("z"));
        assert_eq!(fe("(2+2*z)/(2)"), fe("1+z"));
    }

    #[test]
    fn fp_arithmetic() {
        let f = Field::Fp(101);
        let a = parse_element(f, "(1+2*z)/(z^2)").unwrap();
        let b = a.inv().unwrap();
        assert_eq!(a.mul(&b), FieldElement::one(f));
        assert!(Field::Fp(4).validate().is_err());
        assert!(Field::Fp(2).validate().is_err());
        assert!(Field::Fp(101).validate().is_ok());
    }

    proptest! {
        #[test]
        fn valuation_laws(an in -3i64..4, au in 0i64..5, bn in -3i64..4, bu in 0i64..5, c1 in 1i64..6, c2 in 1i64..6) {
            let f = Field::Fp(101);
            // a = c1 * z^an * (1 + z)^au, b = c2 * z^bn * (1 + z)^bu
            let one_plus_z = parse_element(f, "1+z").unwrap();
            let a = FieldElement::from_i64(f, c1).mul(&FieldElement::z(f).pow(an).unwrap()).mul(&one_plus_z.pow(au).unwrap());
            let b = FieldElement::from_i64(f, c2).mul(&FieldElement::z(f).pow(bn).unwrap()).mul(&one_plus_z.pow(bu).unwrap());
            // nu(ab) = nu(a) + nu(b)
            prop_assert_eq!(a.mul(&b).valuation(), a.valuation().add(b.valuation()));
            // nu(a+b) >= min(nu(a), nu(b)), equality when they differ
            let s = a.add(&b);
            let m = a.valuation().min(b.valuation());
            prop_assert!(s.valuation() >= m);
            if a.valuation() != b.valuation() {
                prop_assert_eq!(s.valuation(), m);
            }
        }

        #[test]
        fn residue_is_homomorphism(c1 in -5i64..6, c2 in -5i64..6, e1 in 0i64..3, e2 in 0i64..3) {
            let f = Field::Fp(101);
            let a = FieldElement::from_i64(f, c1).mul(&FieldElement::z(f).pow(e1).unwrap()).add(&FieldElement::one(f));
            let b = FieldElement::from_i64(f, c2).mul(&FieldElement::z(f).pow(e2).unwrap()).add(&FieldElement::from_i64(f, 2));
            prop_assert_eq!(a.add(&b).residue().unwrap(), a.residue().unwrap().add(&b.residue().unwrap()));
            prop_assert_eq!(a.mul(&b).residue().unwrap(), a.residue().unwrap().mul(&b.residue().unwrap()));
        }

        #[test]
        fn exact_field_axioms(a in -20i64..20, b in -20i64..20) {
            let f = Field::Q;
            let x = FieldElement::from_i64(f, a).add(&FieldElement::z(f).mul(&FieldElement::from_i64(f, b)));
            let y = FieldElement::from_i64(f, b).sub(&FieldElement::z(f));
            // (x + y) - y = x exactly
            prop_assert_eq!(x.add(&y).sub(&y), x.clone());
            if !y.is_zero() {
                prop_assert_eq!(x.mul(&y).div(&y).unwrap(), x);
            }
        }
    }
}

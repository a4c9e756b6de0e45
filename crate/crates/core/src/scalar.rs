//! Scalar fields used by every operator in the crate.
//!
//! Two modes exist. `f64` drives the norm and inequality work. [`Exact`] is
//! exact arithmetic in the quadratic field Q(√2): normalized Haar functions on
//! a cube of volume `2^{-nk}` take the values `±2^{nk/2}`, which leave the
//! rationals whenever `nk` is odd, but every such value lives in Q(√2). All
//! identities in the crate are therefore checkable with zero residual.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Tag recording which scalar field a computation ran in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarMode {
    Float,
    Rational,
}

impl fmt::Display for ScalarMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarMode::Float => f.write_str("float"),
            ScalarMode::Rational => f.write_str("rational"),
        }
    }
}

impl FromStr for ScalarMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "float" => Ok(ScalarMode::Float),
            "rational" => Ok(ScalarMode::Rational),
            other => Err(Error::Parse(format!("unknown scalar mode `{other}`"))),
        }
    }
}

pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
    + AddAssign
    + SubAssign
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
    + MulAssign
    + Sum
{
    const MODE: ScalarMode;

    /// Exact conversion of the binary value of `x` in rational mode.
    fn from_f64(x: f64) -> Self;

    fn from_ratio(num: i64, den: i64) -> Self;

    fn to_f64(&self) -> f64;

    fn abs(&self) -> Self;

    /// `2^e`.
    fn pow2(e: i32) -> Self;

    /// `2^{e/2}`.
    fn pow2_half(e: i32) -> Self;

    fn from_usize(k: usize) -> Self {
        Self::from_ratio(k as i64, 1)
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    const MODE: ScalarMode = ScalarMode::Float;

    fn from_f64(x: f64) -> Self {
        x
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn pow2(e: i32) -> Self {
        (2.0f64).powi(e)
    }

    fn pow2_half(e: i32) -> Self {
        let base = (2.0f64).powi(e.div_euclid(2));
        if e.rem_euclid(2) == 1 {
            base * std::f64::consts::SQRT_2
        } else {
            base
        }
    }
}

/// An element `rat + surd·√2` of Q(√2), exact.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Exact {
    rat: BigRational,
    surd: BigRational,
}

impl Exact {
    pub fn new(rat: BigRational, surd: BigRational) -> Self {
        Exact { rat, surd }
    }

    pub fn rational(rat: BigRational) -> Self {
        Exact {
            rat,
            surd: BigRational::zero(),
        }
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.rat
    }

    pub fn surd_part(&self) -> &BigRational {
        &self.surd
    }

    pub fn is_rational(&self) -> bool {
        self.surd.is_zero()
    }

    fn sign(&self) -> Ordering {
        let a = sign_of(&self.rat);
        let b = sign_of(&self.surd);
        match (a, b) {
            (Ordering::Equal, s) | (s, Ordering::Equal) => s,
            (x, y) if x == y => x,
            _ => {
                // opposite signs: compare rat^2 against 2 surd^2
                let lhs = &self.rat * &self.rat;
                let rhs = &self.surd * &self.surd * BigRational::from_integer(BigInt::from(2));
                if lhs > rhs {
                    a
                } else {
                    b
                }
            }
        }
    }
}

fn sign_of(x: &BigRational) -> Ordering {
    if x.is_zero() {
        Ordering::Equal
    } else if x.is_positive() {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

fn two() -> BigRational {
    BigRational::from_integer(BigInt::from(2))
}

fn pow2_rational(e: i32) -> BigRational {
    let p = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    }
}

fn add_ref(a: &Exact, b: &Exact) -> Exact {
    Exact {
        rat: &a.rat + &b.rat,
        surd: &a.surd + &b.surd,
    }
}

fn sub_ref(a: &Exact, b: &Exact) -> Exact {
    Exact {
        rat: &a.rat - &b.rat,
        surd: &a.surd - &b.surd,
    }
}

fn mul_ref(a: &Exact, b: &Exact) -> Exact {
    if a.surd.is_zero() && b.surd.is_zero() {
        return Exact::rational(&a.rat * &b.rat);
    }
    Exact {
        rat: &a.rat * &b.rat + &a.surd * &b.surd * two(),
        surd: &a.rat * &b.surd + &a.surd * &b.rat,
    }
}

fn div_ref(a: &Exact, b: &Exact) -> Exact {
    assert!(!b.is_zero(), "division by zero in Q(sqrt 2)");
    if b.surd.is_zero() {
        return Exact {
            rat: &a.rat / &b.rat,
            surd: &a.surd / &b.rat,
        };
    }
    // multiply by the conjugate c - d√2
    let norm = &b.rat * &b.rat - &b.surd * &b.surd * two();
    let conj = Exact {
        rat: b.rat.clone(),
        surd: -b.surd.clone(),
    };
    let num = mul_ref(a, &conj);
    Exact {
        rat: num.rat / &norm,
        surd: num.surd / norm,
    }
}

macro_rules! exact_binop {
    ($Trait:ident, $method:ident, $f:ident) => {
        impl $Trait<Exact> for Exact {
            type Output = Exact;
            fn $method(self, rhs: Exact) -> Exact {
                $f(&self, &rhs)
            }
        }
        impl<'a> $Trait<&'a Exact> for Exact {
            type Output = Exact;
            fn $method(self, rhs: &'a Exact) -> Exact {
                $f(&self, rhs)
            }
        }
        impl<'a> $Trait<Exact> for &'a Exact {
            type Output = Exact;
            fn $method(self, rhs: Exact) -> Exact {
                $f(self, &rhs)
            }
        }
        impl<'a, 'b> $Trait<&'b Exact> for &'a Exact {
            type Output = Exact;
            fn $method(self, rhs: &'b Exact) -> Exact {
                $f(self, rhs)
            }
        }
    };
}

exact_binop!(Add, add, add_ref);
exact_binop!(Sub, sub, sub_ref);
exact_binop!(Mul, mul, mul_ref);
exact_binop!(Div, div, div_ref);

impl AddAssign for Exact {
    fn add_assign(&mut self, rhs: Exact) {
        self.rat += rhs.rat;
        self.surd += rhs.surd;
    }
}

impl<'a> AddAssign<&'a Exact> for Exact {
    fn add_assign(&mut self, rhs: &'a Exact) {
        self.rat += &rhs.rat;
        self.surd += &rhs.surd;
    }
}

impl SubAssign for Exact {
    fn sub_assign(&mut self, rhs: Exact) {
        self.rat -= rhs.rat;
        self.surd -= rhs.surd;
    }
}

impl<'a> SubAssign<&'a Exact> for Exact {
    fn sub_assign(&mut self, rhs: &'a Exact) {
        self.rat -= &rhs.rat;
        self.surd -= &rhs.surd;
    }
}

impl MulAssign for Exact {
    fn mul_assign(&mut self, rhs: Exact) {
        *self = mul_ref(self, &rhs);
    }
}

impl Neg for Exact {
    type Output = Exact;
    fn neg(self) -> Exact {
        Exact {
            rat: -self.rat,
            surd: -self.surd,
        }
    }
}

impl Zero for Exact {
    fn zero() -> Self {
        Exact::rational(BigRational::zero())
    }

    fn is_zero(&self) -> bool {
        self.rat.is_zero() && self.surd.is_zero()
    }
}

impl One for Exact {
    fn one() -> Self {
        Exact::rational(BigRational::one())
    }
}

impl Sum for Exact {
    fn sum<I: Iterator<Item = Exact>>(iter: I) -> Exact {
        let mut acc = Exact::zero();
        for x in iter {
            acc += x;
        }
        acc
    }
}

impl PartialOrd for Exact {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Exact {
    fn cmp(&self, other: &Self) -> Ordering {
        sub_ref(self, other).sign()
    }
}

impl Scalar for Exact {
    const MODE: ScalarMode = ScalarMode::Rational;

    fn from_f64(x: f64) -> Self {
        Exact::rational(BigRational::from_float(x).expect("finite float"))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Exact::rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    fn to_f64(&self) -> f64 {
        let r = self.rat.to_f64().unwrap_or(f64::NAN);
        if self.surd.is_zero() {
            r
        } else {
            r + self.surd.to_f64().unwrap_or(f64::NAN) * std::f64::consts::SQRT_2
        }
    }

    fn abs(&self) -> Self {
        if self.sign() == Ordering::Less {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn pow2(e: i32) -> Self {
        Exact::rational(pow2_rational(e))
    }

    fn pow2_half(e: i32) -> Self {
        let base = pow2_rational(e.div_euclid(2));
        if e.rem_euclid(2) == 1 {
            Exact {
                rat: BigRational::zero(),
                surd: base,
            }
        } else {
            Exact::rational(base)
        }
    }
}

fn write_ratio(f: &mut fmt::Formatter<'_>, r: &BigRational) -> fmt::Result {
    write!(f, "{}/{}", r.numer(), r.denom())
}

/// Formats as `p/q` or `p/q+r/s*sqrt2`.
impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_ratio(f, &self.rat)?;
        if !self.surd.is_zero() {
            f.write_str("+")?;
            write_ratio(f, &self.surd)?;
            f.write_str("*sqrt2")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn parse_ratio(s: &str) -> Result<BigRational, Error> {
    let bad = || Error::Parse(format!("malformed rational `{s}`"));
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

impl FromStr for Exact {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        match s.strip_suffix("*sqrt2") {
            None => Ok(Exact::rational(parse_ratio(s)?)),
            Some(head) => {
                // split at the `+` that separates the two parts; skip a leading sign
                let split = head
                    .char_indices()
                    .skip(1)
                    .find(|&(_, c)| c == '+')
                    .map(|(i, _)| i)
                    .ok_or_else(|| Error::Parse(format!("malformed surd `{s}`")))?;
                Ok(Exact {
                    rat: parse_ratio(&head[..split])?,
                    surd: parse_ratio(&head[split + 1..])?,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(s: &str) -> Exact {
        s.parse().unwrap()
    }

    #[test]
    fn sqrt_two_squares_to_two() {
        let r = Exact::pow2_half(1);
        assert!(!r.is_rational());
        assert_eq!(&r * &r, Exact::from_ratio(2, 1));
        assert_eq!(Exact::pow2_half(-1) * Exact::pow2_half(1), Exact::one());
        assert_eq!(Exact::pow2_half(4), Exact::from_ratio(4, 1));
        assert_eq!(Exact::pow2_half(-3).to_f64(), 2f64.powf(-1.5));
    }

    #[test]
    fn ordering_across_the_surd() {
        // 3 - 2√2 ≈ 0.17 > 0, 1 - √2 < 0
        let a = Exact::new(
            BigRational::from_integer(3.into()),
            BigRational::from_integer((-2).into()),
        );
        assert!(a > Exact::zero());
        let b = Exact::one() - Exact::pow2_half(1);
        assert!(b < Exact::zero());
        assert_eq!(b.abs(), Exact::pow2_half(1) - Exact::one());
        assert!(Exact::pow2_half(1) < Exact::from_ratio(3, 2));
        assert!(Exact::pow2_half(1) > Exact::from_ratio(7, 5));
    }

    #[test]
    fn division_by_surd() {
        let x = ex("1/3+2/5*sqrt2");
        let y = ex("-7/2+1/1*sqrt2");
        let q = &x / &y;
        assert_eq!(q * y, x);
    }

    #[test]
    fn display_round_trip() {
        for s in ["0/1", "-3/4", "5/1+-1/8*sqrt2", "-1/2+3/1*sqrt2"] {
            assert_eq!(ex(s).to_string(), s);
        }
        assert_eq!(ex("6"), Exact::from_ratio(6, 1));
        assert!("1/0".parse::<Exact>().is_err());
    }

    #[test]
    fn float_pow2_half_matches() {
        for e in -9..9 {
            let v = <f64 as Scalar>::pow2_half(e);
            assert!((v - 2f64.powf(e as f64 / 2.0)).abs() < 1e-14 * v);
            assert!((Exact::pow2_half(e).to_f64() - v).abs() < 1e-14 * v);
        }
    }
}

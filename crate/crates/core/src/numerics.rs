//! Precision contract shared by every evaluator: the [`RealContext`] precision
//! policy, the [`BigReal`] scalar, and decimal parsing/formatting.
//!
//! All values are decimal floating point numbers rounded half-to-even at the
//! working precision of the context that created them. Binary operations take
//! the larger precision of their operands, so values created through one
//! context stay at that context's working precision.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use dashu_float::round::mode::HalfEven;
use dashu_float::{Context, FBig};
use dashu_int::ops::UnsignedAbs;
use dashu_int::IBig;

use crate::error::{Error, Result};

type Decimal = FBig<HalfEven, 10>;

/// Smallest accepted `target_digits`.
pub const MIN_TARGET_DIGITS: u32 = 10;

/// Precision policy: target digits, guard digits and the derived epsilon.
#[derive(Clone, Debug, PartialEq)]
pub struct RealContext {
    target_digits: u32,
    guard_digits: u32,
    epsilon: BigReal,
}

impl RealContext {
    /// Creates a context for `target_digits` correct decimal digits.
    ///
    /// Guard digits are `max(10, ceil(0.05 * target_digits) + 10)`.
    pub fn new(target_digits: u32) -> Result<Self> {
        if target_digits < MIN_TARGET_DIGITS {
            return Err(Error::InsufficientPrecision(target_digits));
        }
        let guard_digits = (target_digits.div_ceil(20) + 10).max(10);
        let working = (target_digits + guard_digits) as usize;
        let epsilon = BigReal(
            Decimal::from_parts(IBig::ONE, -(target_digits as isize))
                .with_precision(working)
                .value(),
        );
        Ok(Self {
            target_digits,
            guard_digits,
            epsilon,
        })
    }

    pub fn target_digits(&self) -> u32 {
        self.target_digits
    }

    pub fn guard_digits(&self) -> u32 {
        self.guard_digits
    }

    pub fn working_digits(&self) -> u32 {
        self.target_digits + self.guard_digits
    }

    /// `10^-target_digits` at working precision.
    pub fn epsilon(&self) -> &BigReal {
        &self.epsilon
    }

    /// A context with `extra` more target digits.
    pub fn refined(&self, extra: u32) -> Self {
        Self::new(self.target_digits + extra).expect("refined context keeps at least 10 digits")
    }

    /// The same target with `extra` more guard digits, for sums whose
    /// partial sums dwarf the result.
    pub fn with_extra_guard(&self, extra: u32) -> Self {
        let guard_digits = self.guard_digits + extra;
        let working = (self.target_digits + guard_digits) as usize;
        Self {
            target_digits: self.target_digits,
            guard_digits,
            epsilon: BigReal(self.epsilon.0.clone().with_precision(working).value()),
        }
    }

    fn precision(&self) -> usize {
        self.working_digits() as usize
    }

    fn lift(&self, value: Decimal) -> BigReal {
        BigReal(value.with_precision(self.precision()).value())
    }

    pub fn zero(&self) -> BigReal {
        self.lift(Decimal::ZERO)
    }

    pub fn one(&self) -> BigReal {
        self.lift(Decimal::ONE)
    }

    pub fn int(&self, value: i64) -> BigReal {
        self.lift(Decimal::from(value))
    }

    pub fn from_ibig(&self, value: &IBig) -> BigReal {
        self.lift(Decimal::from(value.clone()))
    }

    /// `10^exponent` at working precision.
    pub fn pow10(&self, exponent: i64) -> BigReal {
        self.lift(Decimal::from_parts(IBig::ONE, exponent as isize))
    }

    /// Correctly rounded quotient of two integers.
    pub fn ratio(&self, numerator: &IBig, denominator: &IBig) -> Result<BigReal> {
        if *denominator == IBig::ZERO {
            return Err(Error::ZeroDenominator(format!("{numerator}/{denominator}")));
        }
        let num = Decimal::from(numerator.clone());
        let den = Decimal::from(denominator.clone());
        Ok(self.divide_exact(&num, &den))
    }

    fn divide_exact(&self, num: &Decimal, den: &Decimal) -> BigReal {
        let quotient = Context::<HalfEven>::new(self.precision())
            .div(num.repr(), den.repr())
            .expect("finite division by a nonzero value")
            .value();
        BigReal(quotient)
    }

    /// Tolerance below which `|1 - x q^n|` is treated as a pole:
    /// `10^-(working_digits / 2)`.
    pub fn pole_tolerance(&self) -> BigReal {
        self.pow10(-((self.working_digits() / 2) as i64))
    }

    /// Parses a signed decimal literal or an exact rational `p/q`.
    pub fn parse(&self, text: &str) -> Result<BigReal> {
        parse_real(text, self)
    }

    /// Formats with exactly `target_digits` significant digits.
    pub fn format(&self, value: &BigReal) -> String {
        format_real(value, self)
    }
}

/// Creates a context; see [`RealContext::new`].
pub fn make_context(target_digits: u32) -> Result<RealContext> {
    RealContext::new(target_digits)
}

/// Arbitrary precision real number carried at a context's working precision.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct BigReal(Decimal);

impl BigReal {
    pub fn is_zero(&self) -> bool {
        *self.0.repr().significand() == IBig::ZERO
    }

    pub fn is_negative(&self) -> bool {
        *self.0.repr().significand() < IBig::ZERO
    }

    pub fn abs(&self) -> BigReal {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn sqrt(&self) -> BigReal {
        BigReal(self.0.sqrt())
    }

    pub fn square(&self) -> BigReal {
        self * self
    }

    /// Integer power; the sign of a negative base is tracked from the parity
    /// of the exponent and the magnitude comes from `|self|^exp`.
    pub fn powi(&self, exponent: i64) -> BigReal {
        let negative = self.is_negative() && exponent % 2 != 0;
        let magnitude = self.abs();
        let mut result = BigReal(Decimal::ONE.with_precision(self.0.precision()).value());
        let mut base = magnitude;
        let mut e = exponent.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        if exponent < 0 {
            result = &BigReal(Decimal::ONE) / &result;
        }
        if negative {
            -result
        } else {
            result
        }
    }

    pub fn recip(&self) -> BigReal {
        &BigReal(Decimal::ONE) / self
    }

    pub fn max(self, other: BigReal) -> BigReal {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Approximate value as `f64` (saturates to 0 or infinity out of range).
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }

    /// Decimal significand and exponent: `value = significand * 10^exponent`.
    pub fn to_parts(&self) -> (IBig, isize) {
        (self.0.repr().significand().clone(), self.0.repr().exponent())
    }

    /// Rebuilds a value from decimal parts, rounded to the context.
    pub fn from_parts(significand: IBig, exponent: isize, ctx: &RealContext) -> BigReal {
        ctx.lift(Decimal::from_parts(significand, exponent))
    }

    /// Number of significant digits this value is carried at.
    pub fn precision(&self) -> usize {
        self.0.precision()
    }

    /// Re-rounds to another context.
    pub fn in_context(&self, ctx: &RealContext) -> BigReal {
        BigReal(self.0.clone().with_precision(ctx.precision()).value())
    }

    /// Scientific notation with `digits` significant digits, e.g. `1.25e-31`.
    pub fn to_scientific(&self, digits: usize) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let rounded = self.0.clone().with_precision(digits.max(1)).value();
        let sign = if rounded.repr().significand() < &IBig::ZERO { "-" } else { "" };
        let mantissa = rounded.repr().significand().unsigned_abs().to_string();
        let mantissa = mantissa.trim_end_matches('0');
        let exp10 = rounded.repr().exponent() as i64
            + rounded.repr().significand().unsigned_abs().to_string().len() as i64
            - 1;
        let (head, tail) = mantissa.split_at(1);
        if tail.is_empty() {
            format!("{sign}{head}e{exp10}")
        } else {
            format!("{sign}{head}.{tail}e{exp10}")
        }
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl fmt::Debug for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BigReal({})", self.0)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl<'a, 'b> $trait<&'b BigReal> for &'a BigReal {
            type Output = BigReal;
            fn $method(self, rhs: &'b BigReal) -> BigReal {
                BigReal(&self.0 $op &rhs.0)
            }
        }
        impl $trait<BigReal> for BigReal {
            type Output = BigReal;
            fn $method(self, rhs: BigReal) -> BigReal {
                BigReal(self.0 $op rhs.0)
            }
        }
        impl<'b> $trait<&'b BigReal> for BigReal {
            type Output = BigReal;
            fn $method(self, rhs: &'b BigReal) -> BigReal {
                BigReal(self.0 $op &rhs.0)
            }
        }
        impl<'a> $trait<BigReal> for &'a BigReal {
            type Output = BigReal;
            fn $method(self, rhs: BigReal) -> BigReal {
                BigReal(&self.0 $op rhs.0)
            }
        }
    };
}

forward_binop!(Add, add, +);
forward_binop!(Sub, sub, -);
forward_binop!(Mul, mul, *);
forward_binop!(Div, div, /);

impl Neg for BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal(-self.0)
    }
}

impl Neg for &BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal(-self.0.clone())
    }
}

/// Compares magnitudes.
pub fn cmp_abs(a: &BigReal, b: &BigReal) -> Ordering {
    a.abs().cmp(&b.abs())
}

/// Parses `[sign]digits[.digits][/digits]` at the working precision of `ctx`.
///
/// `-` and U+2212 are both accepted as the minus sign.
pub fn parse_real(text: &str, ctx: &RealContext) -> Result<BigReal> {
    let malformed = || Error::Parse(text.to_string());
    let trimmed = text.trim();
    let (negative, body) = if let Some(rest) = trimmed.strip_prefix('-') {
        (true, rest)
    } else if let Some(rest) = trimmed.strip_prefix('\u{2212}') {
        (true, rest)
    } else if let Some(rest) = trimmed.strip_prefix('+') {
        (false, rest)
    } else {
        (false, trimmed)
    };
    let (numerator, denominator) = match body.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (body, None),
    };
    let (int_part, frac_part) = match numerator.split_once('.') {
        Some((i, f)) => (i, f),
        None => (numerator, ""),
    };
    let all_digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if int_part.is_empty() || !all_digits(int_part) || !all_digits(frac_part) {
        return Err(malformed());
    }
    if numerator.ends_with('.') {
        return Err(malformed());
    }
    let mantissa: IBig = format!("{int_part}{frac_part}")
        .parse()
        .map_err(|_| malformed())?;
    let mantissa = if negative { -mantissa } else { mantissa };
    let num = Decimal::from_parts(mantissa, -(frac_part.len() as isize));
    match denominator {
        None => Ok(ctx.lift(num)),
        Some(d) => {
            if d.is_empty() || !all_digits(d) {
                return Err(malformed());
            }
            let den: IBig = d.parse().map_err(|_| malformed())?;
            if den == IBig::ZERO {
                return Err(Error::ZeroDenominator(text.to_string()));
            }
            Ok(ctx.divide_exact(&num, &Decimal::from(den)))
        }
    }
}

/// Positional decimal string with exactly `ctx.target_digits()` significant
/// digits, rounded half-to-even.
pub fn format_real(value: &BigReal, ctx: &RealContext) -> String {
    format_significant(value, ctx.target_digits() as usize)
}

/// Positional decimal string with exactly `digits` significant digits.
pub fn format_significant(value: &BigReal, digits: usize) -> String {
    let digits = digits.max(1);
    if value.is_zero() {
        return if digits == 1 {
            "0".to_string()
        } else {
            format!("0.{}", "0".repeat(digits - 1))
        };
    }
    let rounded = value.0.clone().with_precision(digits).value();
    let negative = rounded.repr().significand() < &IBig::ZERO;
    let mut body = rounded.repr().significand().unsigned_abs().to_string();
    let mut exponent = rounded.repr().exponent() as i64;
    if body.len() < digits {
        let pad = digits - body.len();
        body.push_str(&"0".repeat(pad));
        exponent -= pad as i64;
    }
    let out = if exponent >= 0 {
        format!("{body}{}", "0".repeat(exponent as usize))
    } else {
        let point = body.len() as i64 + exponent;
        if point > 0 {
            let (int_part, frac_part) = body.split_at(point as usize);
            format!("{int_part}.{frac_part}")
        } else {
            format!("0.{}{body}", "0".repeat((-point) as usize))
        }
    };
    if negative {
        format!("-{out}")
    } else {
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(d: u32) -> RealContext {
        make_context(d).unwrap()
    }

    #[test]
    fn guard_digit_formula() {
        // ceil(0.05 * 30) + 10 = 12
        let c = ctx(30);
        assert_eq!(c.guard_digits(), 12);
        assert_eq!(c.working_digits(), 42);
        let c = ctx(1000);
        assert_eq!(c.guard_digits(), 60);
        assert_eq!(c.working_digits(), 1060);
        assert_eq!(ctx(10).guard_digits(), 11);
        assert_eq!(make_context(5), Err(Error::InsufficientPrecision(5)));
    }

    #[test]
    fn epsilon_is_exact_power_of_ten() {
        let c = ctx(30);
        assert_eq!(c.epsilon().to_parts(), (IBig::ONE, -30));
    }

    #[test]
    fn parse_rationals_and_decimals() {
        let c = ctx(30);
        let third = c.parse("1/3").unwrap();
        assert_eq!(third.to_string(), format!("0.{}", "3".repeat(42)));
        assert_eq!(c.parse("-0.5").unwrap(), -(c.one() / c.int(2)));
        assert_eq!(c.parse("\u{2212}0.5").unwrap(), c.parse("-0.5").unwrap());
        assert_eq!(c.parse("+2").unwrap(), c.int(2));
        assert_eq!(c.parse("-1/4").unwrap(), c.parse("-0.25").unwrap());
        assert!(matches!(c.parse("1/0"), Err(Error::ZeroDenominator(_))));
        for bad in ["", "abc", "1.2.3", ".5", "1.", "1/", "1/2/3", "1e5", "--1", "1/-2"] {
            assert!(matches!(c.parse(bad), Err(Error::Parse(_))), "{bad}");
        }
    }

    #[test]
    fn format_examples() {
        let c7 = ctx(10);
        assert_eq!(format_significant(&c7.parse("3.35988566624").unwrap(), 7), "3.359886");
        assert_eq!(format_significant(&c7.zero(), 7), "0.000000");
        let c = ctx(30);
        let beta2 = (c.int(3) - c.int(5).sqrt()) / c.int(2);
        assert_eq!(format_significant(&-beta2, 6), "-0.381966");
        assert_eq!(format_significant(&c.parse("1234567").unwrap(), 3), "1230000");
        assert_eq!(format_significant(&c.parse("0.00012345").unwrap(), 3), "0.000123");
        // ties go to even
        assert_eq!(format_significant(&c.parse("2.5").unwrap(), 1), "2");
        assert_eq!(format_significant(&c.parse("3.5").unwrap(), 1), "4");
        assert_eq!(format_significant(&c.parse("0.125").unwrap(), 2), "0.12");
        assert_eq!(format_real(&c.one(), &c), format!("1.{}", "0".repeat(29)));
    }

    #[test]
    fn scientific_format() {
        let c = ctx(30);
        assert_eq!(c.parse("0.000125").unwrap().to_scientific(3), "1.25e-4");
        assert_eq!(c.parse("-300").unwrap().to_scientific(3), "-3e2");
        assert_eq!(c.zero().to_scientific(3), "0");
    }

    #[test]
    fn signed_powers() {
        let c = ctx(30);
        let q = c.parse("-0.5").unwrap();
        assert_eq!(q.powi(3), c.parse("-0.125").unwrap());
        assert_eq!(q.powi(2), c.parse("0.25").unwrap());
        assert_eq!(q.powi(0), c.one());
        assert_eq!(q.powi(-2), c.int(4));
        assert_eq!(q.powi(-3), c.int(-8));
        assert_eq!(c.zero().powi(0), c.one());
    }

    #[test]
    fn pole_tolerance_is_half_working_digits() {
        let c = ctx(30);
        assert_eq!(c.pole_tolerance(), c.pow10(-21));
    }
}

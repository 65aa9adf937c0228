//! Exact Gaussian-rational coefficients.
//!
//! Hamiltonians built from NLS data have real coefficients, but Lie generators
//! solving the cohomological equation are purely imaginary and Poisson brackets
//! carry a factor of `i`. All symbolic work therefore happens over `Q[i]`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Complex, One, Signed, ToPrimitive, Zero};

use crate::error::Error;

/// Shorthand for an integer-valued rational.
pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `p/q` as an exact rational.
pub fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // Very large numerators and denominators: scale both down first.
            let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
            let n = (r.numer() >> shift as usize).to_f64().unwrap_or(f64::NAN);
            let d = (r.denom() >> shift as usize).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

/// A Gaussian rational `re + i·im`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Coeff {
    pub re: BigRational,
    pub im: BigRational,
}

impl Coeff {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Coeff { re, im }
    }

    pub fn real(re: BigRational) -> Self {
        Coeff { re, im: BigRational::zero() }
    }

    pub fn imag(im: BigRational) -> Self {
        Coeff { re: BigRational::zero(), im }
    }

    pub fn from_int(n: i64) -> Self {
        Coeff::real(rat(n))
    }

    pub fn from_ratio(p: i64, q: i64) -> Self {
        Coeff::real(ratio(p, q))
    }

    pub fn i() -> Self {
        Coeff::imag(BigRational::one())
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn is_imaginary(&self) -> bool {
        self.re.is_zero()
    }

    pub fn conj(&self) -> Self {
        Coeff { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        if r.is_one() {
            return self.clone();
        }
        Coeff { re: &self.re * r, im: &self.im * r }
    }

    /// Exact division by a nonzero Gaussian rational.
    pub fn div(&self, other: &Coeff) -> Coeff {
        let norm = &other.re * &other.re + &other.im * &other.im;
        assert!(!norm.is_zero(), "division by zero coefficient");
        let num = self * &other.conj();
        Coeff { re: num.re / &norm, im: num.im / norm }
    }

    pub fn to_c64(&self) -> Complex<f64> {
        Complex::new(rational_to_f64(&self.re), rational_to_f64(&self.im))
    }

    pub fn abs_f64(&self) -> f64 {
        self.to_c64().norm()
    }

    /// Squared modulus, exact.
    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }
}

impl Zero for Coeff {
    fn zero() -> Self {
        Coeff::default()
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl One for Coeff {
    fn one() -> Self {
        Coeff::from_int(1)
    }
}

impl From<BigRational> for Coeff {
    fn from(r: BigRational) -> Self {
        Coeff::real(r)
    }
}

impl From<i64> for Coeff {
    fn from(n: i64) -> Self {
        Coeff::from_int(n)
    }
}

impl<'a> Add<&'a Coeff> for &'a Coeff {
    type Output = Coeff;
    fn add(self, rhs: &Coeff) -> Coeff {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for Coeff {
    type Output = Coeff;
    fn add(mut self, rhs: Coeff) -> Coeff {
        self += &rhs;
        self
    }
}

impl AddAssign<&Coeff> for Coeff {
    fn add_assign(&mut self, rhs: &Coeff) {
        if !rhs.re.is_zero() {
            self.re += &rhs.re;
        }
        if !rhs.im.is_zero() {
            self.im += &rhs.im;
        }
    }
}

impl SubAssign<&Coeff> for Coeff {
    fn sub_assign(&mut self, rhs: &Coeff) {
        if !rhs.re.is_zero() {
            self.re -= &rhs.re;
        }
        if !rhs.im.is_zero() {
            self.im -= &rhs.im;
        }
    }
}

impl<'a> Sub<&'a Coeff> for &'a Coeff {
    type Output = Coeff;
    fn sub(self, rhs: &Coeff) -> Coeff {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Sub for Coeff {
    type Output = Coeff;
    fn sub(mut self, rhs: Coeff) -> Coeff {
        self -= &rhs;
        self
    }
}

impl Neg for Coeff {
    type Output = Coeff;
    fn neg(self) -> Coeff {
        Coeff { re: -self.re, im: -self.im }
    }
}

impl Neg for &Coeff {
    type Output = Coeff;
    fn neg(self) -> Coeff {
        Coeff { re: -self.re.clone(), im: -self.im.clone() }
    }
}

impl<'a> Mul<&'a Coeff> for &'a Coeff {
    type Output = Coeff;
    fn mul(self, rhs: &Coeff) -> Coeff {
        // Most coefficients are purely real or purely imaginary; skip the zero products.
        let (a, b, c, d) = (&self.re, &self.im, &rhs.re, &rhs.im);
        match (b.is_zero(), d.is_zero()) {
            (true, true) => Coeff::real(a * c),
            (true, false) => Coeff::new(if c.is_zero() { BigRational::zero() } else { a * c }, a * d),
            (false, true) => Coeff::new(if a.is_zero() { BigRational::zero() } else { a * c }, b * c),
            (false, false) => {
                if a.is_zero() && c.is_zero() {
                    Coeff::real(-(b * d))
                } else {
                    Coeff::new(a * c - b * d, a * d + b * c)
                }
            }
        }
    }
}

impl Mul for Coeff {
    type Output = Coeff;
    fn mul(self, rhs: Coeff) -> Coeff {
        &self * &rhs
    }
}

impl MulAssign<&Coeff> for Coeff {
    fn mul_assign(&mut self, rhs: &Coeff) {
        *self = &*self * rhs;
    }
}

fn fmt_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// `"3/4"`, `"-1/2i"`, `"1/2+3/4i"`, `"1-2i"`.
impl fmt::Display for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", fmt_rational(&self.re)),
            (true, false) => write!(f, "{}i", fmt_rational(&self.im)),
            (false, false) => {
                let sign = if self.im.is_negative() { "-" } else { "+" };
                write!(f, "{}{}{}i", fmt_rational(&self.re), sign, fmt_rational(&self.im.abs()))
            }
        }
    }
}

fn parse_rational(s: &str) -> Result<BigRational, Error> {
    let s = s.trim();
    let bad = || Error::Parse(format!("invalid rational `{s}`"));
    if s.is_empty() {
        return Err(bad());
    }
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(p, q))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

impl FromStr for Coeff {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let Some(body) = s.strip_suffix('i') else {
            return Ok(Coeff::real(parse_rational(&s)?));
        };
        // Split at the last sign that is not the leading one.
        let split = body
            .char_indices()
            .skip(1)
            .filter(|&(_, c)| c == '+' || c == '-')
            .map(|(i, _)| i)
            .last();
        let imag_of = |t: &str| -> Result<BigRational, Error> {
            match t {
                "" | "+" => Ok(BigRational::one()),
                "-" => Ok(-BigRational::one()),
                t => parse_rational(t.strip_prefix('+').unwrap_or(t)),
            }
        };
        match split {
            Some(i) => Ok(Coeff::new(parse_rational(&body[..i])?, imag_of(&body[i..])?)),
            None => Ok(Coeff::imag(imag_of(body)?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_parse_round_trip() {
        for c in [
            Coeff::from_ratio(3, 4),
            Coeff::imag(ratio(-1, 2)),
            Coeff::new(ratio(1, 2), ratio(3, 4)),
            Coeff::new(rat(1), rat(-2)),
            Coeff::zero(),
        ] {
            let s = c.to_string();
            assert_eq!(s.parse::<Coeff>().unwrap(), c, "{s}");
        }
        assert_eq!("i".parse::<Coeff>().unwrap(), Coeff::i());
        assert_eq!("-i".parse::<Coeff>().unwrap(), -Coeff::i());
        assert!("1/0".parse::<Coeff>().is_err());
        assert!("abc".parse::<Coeff>().is_err());
    }

    #[test]
    fn gaussian_arithmetic() {
        let i = Coeff::i();
        assert_eq!(&i * &i, Coeff::from_int(-1));
        let z = Coeff::new(rat(2), rat(3));
        let w = Coeff::new(rat(-1), rat(5));
        assert_eq!(z.div(&w).mul(w.clone()), z);
        assert_eq!(&z * &z.conj(), Coeff::real(z.norm_sqr()));
    }
}

//! Exact scalars: elements of a real quadratic field ℚ(√D) and complex
//! numbers whose real and imaginary parts lie in one such field.

use crate::dd::{CDd, Dd};
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// `rat + irr·√disc` with `disc` squarefree and at least 2, or `disc = 0`
/// (then `irr = 0`) for plain rationals.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Quad {
    pub rat: BigRational,
    pub irr: BigRational,
    pub disc: u64,
}

impl fmt::Debug for Quad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Quad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.disc == 0 {
            return write!(f, "{}", self.rat);
        }
        if self.rat.is_zero() {
            write!(f, "({})*sqrt({})", self.irr, self.disc)
        } else {
            write!(f, "{}+({})*sqrt({})", self.rat, self.irr, self.disc)
        }
    }
}

fn combine_disc(a: u64, b: u64) -> std::result::Result<u64, (u64, u64)> {
    match (a, b) {
        (0, d) | (d, 0) => Ok(d),
        (x, y) if x == y => Ok(x),
        (x, y) => Err((x, y)),
    }
}

/// Common field of a set of scalars, or the first clash.
pub fn common_disc<'a>(items: impl IntoIterator<Item = &'a Quad>) -> Result<u64> {
    let mut d = 0;
    for q in items {
        d = combine_disc(d, q.disc).map_err(|(a, b)| Error::MixedDiscriminant(a, b))?;
    }
    Ok(d)
}

/// Split `n ≥ 1` as `s²·r` with `r` squarefree. Trial division; arguments are
/// desk-sized.
pub fn squarefree_split(n: u64) -> (u64, u64) {
    let mut s = 1u64;
    let mut r = 1u64;
    let mut m = n;
    let mut p = 2u64;
    while p.saturating_mul(p) <= m {
        let mut e = 0;
        while m % p == 0 {
            m /= p;
            e += 1;
        }
        s *= p.pow(e / 2);
        if e % 2 == 1 {
            r *= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    r *= m;
    (s, r)
}

fn rat_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

fn rat_to_dd(r: &BigRational) -> Dd {
    let hi = r.to_f64().unwrap_or(f64::NAN);
    if !hi.is_finite() {
        return Dd::from_f64(hi);
    }
    let rest = r - rat_from_f64(hi);
    Dd::new(hi, rest.to_f64().unwrap_or(0.0))
}

impl Quad {
    pub fn zero() -> Self {
        Quad::rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Quad::rational(BigRational::one())
    }

    pub fn rational(r: BigRational) -> Self {
        Quad {
            rat: r,
            irr: BigRational::zero(),
            disc: 0,
        }
    }

    pub fn int(n: i64) -> Self {
        Quad::rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn frac(p: i64, q: i64) -> Self {
        Quad::rational(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    /// `rat + irr·√d` for any positive `d`; square factors are pulled out.
    pub fn new(rat: BigRational, irr: BigRational, d: u64) -> Self {
        if d == 0 || irr.is_zero() {
            return Quad::rational(rat);
        }
        let (s, r) = squarefree_split(d);
        let irr = irr * BigRational::from_integer(BigInt::from(s));
        if r == 1 {
            return Quad::rational(rat + irr);
        }
        Quad { rat, irr, disc: r }
    }

    /// `√(p/q)` for a nonnegative rational.
    pub fn sqrt_rational(x: &BigRational) -> Result<Self> {
        if x.is_negative() {
            return Err(Error::Parse("square root of a negative rational".into()));
        }
        if x.is_zero() {
            return Ok(Quad::zero());
        }
        let prod = x.numer() * x.denom();
        let n = prod
            .to_u64()
            .filter(|&n| n <= 1_000_000_000_000)
            .ok_or_else(|| Error::Parse(format!("sqrt argument {x} too large for exact form")))?;
        let (s, r) = squarefree_split(n);
        let coeff = BigRational::new(BigInt::from(s), x.denom().clone());
        Ok(if r == 1 {
            Quad::rational(coeff)
        } else {
            Quad {
                rat: BigRational::zero(),
                irr: coeff,
                disc: r,
            }
        })
    }

    pub fn is_zero(&self) -> bool {
        self.rat.is_zero() && self.irr.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.irr.is_zero()
    }

    fn normalize(mut self) -> Self {
        if self.irr.is_zero() {
            self.disc = 0;
        }
        self
    }

    fn field(&self, o: &Quad) -> u64 {
        combine_disc(self.disc, o.disc)
            .unwrap_or_else(|(a, b)| panic!("arithmetic mixes ℚ(√{a}) and ℚ(√{b})"))
    }

    pub fn conj(&self) -> Self {
        Quad {
            rat: self.rat.clone(),
            irr: -self.irr.clone(),
            disc: self.disc,
        }
    }

    /// Field norm `rat² − irr²·disc`.
    pub fn norm(&self) -> BigRational {
        let d = BigRational::from_integer(BigInt::from(self.disc));
        &self.rat * &self.rat - &self.irr * &self.irr * d
    }

    pub fn signum(&self) -> i32 {
        let sa = sign(&self.rat);
        let sb = sign(&self.irr);
        if sb == 0 {
            return sa;
        }
        if sa == 0 || sa == sb {
            return sb;
        }
        // Opposite signs: compare rat² with irr²·d.
        let d = BigRational::from_integer(BigInt::from(self.disc));
        let lhs = &self.rat * &self.rat;
        let rhs = &self.irr * &self.irr * d;
        match lhs.cmp(&rhs) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => 0,
        }
    }

    pub fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = self.norm();
        Some(
            Quad {
                rat: &self.rat / &n,
                irr: -(&self.irr / &n),
                disc: self.disc,
            }
            .normalize(),
        )
    }

    pub fn to_dd(&self) -> Dd {
        let a = rat_to_dd(&self.rat);
        if self.disc == 0 {
            return a;
        }
        let s = Dd::from_f64(self.disc as f64).sqrt();
        a + rat_to_dd(&self.irr) * s
    }

    pub fn to_f64(&self) -> f64 {
        self.to_dd().to_f64()
    }

    /// Rational part and surd coefficient as a pair of rationals over the
    /// field `disc` (used to split real equations into ℚ-equations).
    pub fn parts(&self) -> (BigRational, BigRational) {
        (self.rat.clone(), self.irr.clone())
    }
}

fn sign(r: &BigRational) -> i32 {
    if r.is_positive() {
        1
    } else if r.is_negative() {
        -1
    } else {
        0
    }
}

impl Neg for Quad {
    type Output = Quad;
    fn neg(self) -> Quad {
        Quad {
            rat: -self.rat,
            irr: -self.irr,
            disc: self.disc,
        }
    }
}

impl Neg for &Quad {
    type Output = Quad;
    fn neg(self) -> Quad {
        -(self.clone())
    }
}

impl Add<&Quad> for &Quad {
    type Output = Quad;
    fn add(self, o: &Quad) -> Quad {
        let d = self.field(o);
        Quad {
            rat: &self.rat + &o.rat,
            irr: &self.irr + &o.irr,
            disc: d,
        }
        .normalize()
    }
}

impl Sub<&Quad> for &Quad {
    type Output = Quad;
    fn sub(self, o: &Quad) -> Quad {
        let d = self.field(o);
        Quad {
            rat: &self.rat - &o.rat,
            irr: &self.irr - &o.irr,
            disc: d,
        }
        .normalize()
    }
}

impl Mul<&Quad> for &Quad {
    type Output = Quad;
    fn mul(self, o: &Quad) -> Quad {
        let d = self.field(o);
        let dd = BigRational::from_integer(BigInt::from(d));
        Quad {
            rat: &self.rat * &o.rat + &self.irr * &o.irr * dd,
            irr: &self.rat * &o.irr + &self.irr * &o.rat,
            disc: d,
        }
        .normalize()
    }
}

impl Div<&Quad> for &Quad {
    type Output = Quad;
    fn div(self, o: &Quad) -> Quad {
        self * &o.recip().expect("division by exact zero")
    }
}

macro_rules! forward_binop {
    ($ty:ty, $tr:ident, $m:ident) => {
        impl $tr<$ty> for $ty {
            type Output = $ty;
            fn $m(self, o: $ty) -> $ty {
                (&self).$m(&o)
            }
        }
        impl $tr<&$ty> for $ty {
            type Output = $ty;
            fn $m(self, o: &$ty) -> $ty {
                (&self).$m(o)
            }
        }
        impl $tr<$ty> for &$ty {
            type Output = $ty;
            fn $m(self, o: $ty) -> $ty {
                self.$m(&o)
            }
        }
    };
}

forward_binop!(Quad, Add, add);
forward_binop!(Quad, Sub, sub);
forward_binop!(Quad, Mul, mul);
forward_binop!(Quad, Div, div);

/// `re + i·im` with both parts in one field ℚ(√D).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExactComplex {
    pub re: Quad,
    pub im: Quad,
}

impl fmt::Debug for ExactComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for ExactComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else {
            write!(f, "({})+({})*i", self.re, self.im)
        }
    }
}

impl ExactComplex {
    pub fn new(re: Quad, im: Quad) -> Self {
        ExactComplex { re, im }
    }

    pub fn real(re: Quad) -> Self {
        ExactComplex { re, im: Quad::zero() }
    }

    pub fn zero() -> Self {
        Self::real(Quad::zero())
    }

    pub fn one() -> Self {
        Self::real(Quad::one())
    }

    pub fn i() -> Self {
        ExactComplex::new(Quad::zero(), Quad::one())
    }

    pub fn from_f64_exact(z: Complex64) -> Self {
        ExactComplex::new(
            Quad::rational(rat_from_f64(z.re)),
            Quad::rational(rat_from_f64(z.im)),
        )
    }

    pub fn disc(&self) -> Result<u64> {
        common_disc([&self.re, &self.im])
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        ExactComplex::new(self.re.clone(), -&self.im)
    }

    pub fn norm_sqr(&self) -> Quad {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn recip(&self) -> Option<Self> {
        let n = self.norm_sqr().recip()?;
        Some(ExactComplex::new(&self.re * &n, -(&self.im * &n)))
    }

    pub fn to_cdd(&self) -> CDd {
        CDd::new(self.re.to_dd(), self.im.to_dd())
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
}

impl Neg for ExactComplex {
    type Output = ExactComplex;
    fn neg(self) -> ExactComplex {
        ExactComplex::new(-self.re, -self.im)
    }
}

impl Neg for &ExactComplex {
    type Output = ExactComplex;
    fn neg(self) -> ExactComplex {
        -(self.clone())
    }
}

impl Add<&ExactComplex> for &ExactComplex {
    type Output = ExactComplex;
    fn add(self, o: &ExactComplex) -> ExactComplex {
        ExactComplex::new(&self.re + &o.re, &self.im + &o.im)
    }
}

impl Sub<&ExactComplex> for &ExactComplex {
    type Output = ExactComplex;
    fn sub(self, o: &ExactComplex) -> ExactComplex {
        ExactComplex::new(&self.re - &o.re, &self.im - &o.im)
    }
}

impl Mul<&ExactComplex> for &ExactComplex {
    type Output = ExactComplex;
    fn mul(self, o: &ExactComplex) -> ExactComplex {
        ExactComplex::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }
}

impl Div<&ExactComplex> for &ExactComplex {
    type Output = ExactComplex;
    fn div(self, o: &ExactComplex) -> ExactComplex {
        self * &o.recip().expect("division by exact zero")
    }
}

forward_binop!(ExactComplex, Add, add);
forward_binop!(ExactComplex, Sub, sub);
forward_binop!(ExactComplex, Mul, mul);
forward_binop!(ExactComplex, Div, div);

/// Integer gcd on i64 (nonnegative result).
pub fn gcd_i64(a: i64, b: i64) -> i64 {
    a.gcd(&b)
}

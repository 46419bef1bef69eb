//! High-precision reference values for j and its derivatives, built from
//! Eisenstein series in BigInt fixed point. Nothing here calls the library's
//! evaluator, reducer or coefficient table.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Fractional bits; about 96 decimal digits before losses.
const P: u64 = 320;

#[derive(Clone, Debug, PartialEq)]
pub struct Fx(pub BigInt);

impl Fx {
    pub fn zero() -> Fx {
        Fx(BigInt::zero())
    }
    pub fn int(n: i64) -> Fx {
        Fx(BigInt::from(n) << P)
    }
    pub fn from_f64(x: f64) -> Fx {
        if x == 0.0 {
            return Fx::zero();
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1 } else { 1 };
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp - 1075)
        };
        let m = BigInt::from(mant) * sign;
        let shift = e + P as i64;
        Fx(if shift >= 0 { m << shift as u64 } else { m >> (-shift) as u64 })
    }
    pub fn to_f64(&self) -> f64 {
        // Keep 64 significant bits before the float conversion.
        let bits = self.0.bits();
        if bits <= 64 {
            return self.0.to_f64().unwrap() / 2f64.powi(P as i32);
        }
        let shift = bits - 64;
        let top: BigInt = &self.0 >> shift;
        top.to_f64().unwrap() * 2f64.powi(shift as i32 - P as i32)
    }
    pub fn add(&self, o: &Fx) -> Fx {
        Fx(&self.0 + &o.0)
    }
    pub fn sub(&self, o: &Fx) -> Fx {
        Fx(&self.0 - &o.0)
    }
    pub fn neg(&self) -> Fx {
        Fx(-&self.0)
    }
    pub fn mul(&self, o: &Fx) -> Fx {
        Fx((&self.0 * &o.0) >> P)
    }
    pub fn mul_int(&self, k: i64) -> Fx {
        Fx(&self.0 * k)
    }
    pub fn div(&self, o: &Fx) -> Fx {
        Fx((&self.0 << P) / &o.0)
    }
    pub fn div_int(&self, k: i64) -> Fx {
        Fx(&self.0 / k)
    }
    pub fn is_negligible(&self) -> bool {
        self.0.abs() < BigInt::from(16)
    }
    pub fn round_to_int(&self) -> i64 {
        let half = BigInt::one() << (P - 1);
        let v: BigInt = (&self.0 + half) >> P;
        v.to_i64().unwrap()
    }
}

/// π by Machin's formula.
pub fn pi() -> Fx {
    fn atan_inv(x: i64) -> Fx {
        let x2 = x * x;
        let mut term = Fx::int(1).div_int(x);
        let mut sum = term.clone();
        let mut k = 1i64;
        loop {
            term = term.div_int(x2);
            let t = term.div_int(2 * k + 1);
            if t.is_negligible() {
                break;
            }
            sum = if k % 2 == 1 { sum.sub(&t) } else { sum.add(&t) };
            k += 1;
        }
        sum
    }
    atan_inv(5).mul_int(16).sub(&atan_inv(239).mul_int(4))
}

/// e^x for real x by halving and squaring.
pub fn exp(x: &Fx) -> Fx {
    let mut m = 0;
    let mut r = x.clone();
    while r.0.abs() > (BigInt::one() << (P - 2)) {
        r = Fx(&r.0 >> 1u32);
        m += 1;
    }
    let mut term = Fx::int(1);
    let mut sum = Fx::int(1);
    for k in 1..200 {
        term = term.mul(&r).div_int(k);
        if term.is_negligible() {
            break;
        }
        sum = sum.add(&term);
    }
    for _ in 0..m {
        sum = sum.mul(&sum);
    }
    sum
}

/// (cos θ, sin θ) by Taylor series (|θ| ≲ 4).
pub fn cos_sin(t: &Fx) -> (Fx, Fx) {
    let t2 = t.mul(t);
    let mut c = Fx::int(1);
    let mut s = t.clone();
    let mut tc = Fx::int(1);
    let mut ts = t.clone();
    for k in 1..200i64 {
        tc = tc.mul(&t2).div_int((2 * k - 1) * (2 * k)).neg();
        ts = ts.mul(&t2).div_int((2 * k) * (2 * k + 1)).neg();
        if tc.is_negligible() && ts.is_negligible() {
            break;
        }
        c = c.add(&tc);
        s = s.add(&ts);
    }
    (c, s)
}

#[derive(Clone, Debug)]
pub struct Cx {
    pub re: Fx,
    pub im: Fx,
}

impl Cx {
    pub fn new(re: Fx, im: Fx) -> Cx {
        Cx { re, im }
    }
    pub fn real(re: Fx) -> Cx {
        Cx { re, im: Fx::zero() }
    }
    pub fn from_c64(z: Complex64) -> Cx {
        Cx::new(Fx::from_f64(z.re), Fx::from_f64(z.im))
    }
    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
    pub fn add(&self, o: &Cx) -> Cx {
        Cx::new(self.re.add(&o.re), self.im.add(&o.im))
    }
    pub fn sub(&self, o: &Cx) -> Cx {
        Cx::new(self.re.sub(&o.re), self.im.sub(&o.im))
    }
    pub fn mul(&self, o: &Cx) -> Cx {
        Cx::new(
            self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        )
    }
    pub fn scale_int(&self, k: i64) -> Cx {
        Cx::new(self.re.mul_int(k), self.im.mul_int(k))
    }
    pub fn div_int(&self, k: i64) -> Cx {
        Cx::new(self.re.div_int(k), self.im.div_int(k))
    }
    pub fn norm_sqr(&self) -> Fx {
        self.re.mul(&self.re).add(&self.im.mul(&self.im))
    }
    pub fn div(&self, o: &Cx) -> Cx {
        let n = o.norm_sqr();
        let num = Cx::new(
            self.re.mul(&o.re).add(&self.im.mul(&o.im)),
            self.im.mul(&o.re).sub(&self.re.mul(&o.im)),
        );
        Cx::new(num.re.div(&n), num.im.div(&n))
    }
    /// |self − z| for a float z, computed before rounding.
    pub fn dist(&self, z: Complex64) -> f64 {
        let d = self.sub(&Cx::from_c64(z));
        d.re.to_f64().hypot(d.im.to_f64())
    }
}

fn sigma(n: i64, k: u32) -> i64 {
    (1..=n).filter(|d| n % d == 0).map(|d| d.pow(k)).sum()
}

/// E2, E4, E6 at z (no reduction; needs Im z ≳ 0.3 for speed).
pub fn eisenstein(z: &Cx) -> (Cx, Cx, Cx) {
    let two_pi = pi().mul_int(2);
    let modulus = exp(&two_pi.mul(&z.im).neg());
    let (c, s) = cos_sin(&two_pi.mul(&z.re));
    let q = Cx::new(modulus.mul(&c), modulus.mul(&s));
    let mut e2 = Cx::real(Fx::int(1));
    let mut e4 = Cx::real(Fx::int(1));
    let mut e6 = Cx::real(Fx::int(1));
    let mut qn = q.clone();
    for n in 1..2000i64 {
        let t6 = qn.scale_int(sigma(n, 5));
        if t6.re.is_negligible() && t6.im.is_negligible() && n > 2 {
            break;
        }
        e2 = e2.sub(&qn.scale_int(24 * sigma(n, 1)));
        e4 = e4.add(&qn.scale_int(240 * sigma(n, 3)));
        e6 = e6.sub(&t6.scale_int(504));
        qn = qn.mul(&q);
    }
    (e2, e4, e6)
}

/// −1/z and z+n applied until z lies in the standard fundamental domain.
pub fn reduce(z: &Cx) -> Cx {
    let mut z = z.clone();
    let half = Fx(BigInt::one() << (P - 1));
    for _ in 0..10_000 {
        let n = z.re.round_to_int();
        if n != 0 {
            z.re = z.re.sub(&Fx::int(n));
        }
        let r2 = z.norm_sqr();
        if r2.0 < Fx::int(1).0 {
            let inv = Cx::real(Fx::int(-1)).div(&z);
            z = inv;
            continue;
        }
        if z.re.0.abs() <= half.0 {
            return z;
        }
    }
    panic!("oracle reduction did not terminate");
}

/// j at z, reducing first.
pub fn j(z: Complex64) -> Cx {
    let zr = reduce(&Cx::from_c64(z));
    let (_, e4, e6) = eisenstein(&zr);
    let e43 = e4.mul(&e4).mul(&e4);
    e43.scale_int(1728).div(&e43.sub(&e6.mul(&e6)))
}

/// (j, j′, j″) at z evaluated directly from quasimodular forms at z itself,
/// with D = q d/dq and Ramanujan's identities.
pub fn jet(z: Complex64) -> (Cx, Cx, Cx) {
    let zc = Cx::from_c64(z);
    let (e2, e4, e6) = eisenstein(&zc);
    let e42 = e4.mul(&e4);
    let e43 = e42.mul(&e4);
    let delta = e43.sub(&e6.mul(&e6)).div_int(1728);
    let jv = e43.div(&delta);
    // Dj = −E4²E6/Δ'.
    let dj = e42.mul(&e6).div(&delta);
    let dj = Cx::new(dj.re.neg(), dj.im.neg());
    // D²j = −[E2E4²E6/6 − 2E4E6²/3 − E4⁴/2]/Δ'.
    let a = e2.mul(&e42).mul(&e6).div_int(6);
    let b = e4.mul(&e6).mul(&e6).scale_int(2).div_int(3);
    let c = e42.mul(&e42).div_int(2);
    let d2 = a.sub(&b).sub(&c).div(&delta);
    let d2j = Cx::new(d2.re.neg(), d2.im.neg());
    // j′ = 2πi Dj, j″ = −4π² D²j.
    let two_pi = pi().mul_int(2);
    let i2pi = Cx::new(Fx::zero(), two_pi.clone());
    let m4pi2 = Cx::real(two_pi.mul(&two_pi).neg());
    (jv, dj.mul(&i2pi), d2j.mul(&m4pi2))
}

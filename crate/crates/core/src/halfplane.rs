//! SL2 geometry on the upper half plane: the Möbius action, automorphy
//! factors, reduction to the standard fundamental domain, the connecting
//! family g(θ) with g(θ)z1 = z2, and bounded enumeration of SL2(Z).

use crate::config::{
    FLOAT_DET_TOL, RATIONAL_AMBIGUITY_DENOMINATOR, RATIONAL_DENOMINATOR_BOUND,
    RATIONAL_RECONSTRUCTION_TOL, REDUCTION_EPS,
};
use crate::dd::{CDd, Dd};
use crate::error::{Error, Result};
use crate::expr;
use crate::scalar::{common_disc, Quad};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

/// A point of ℍ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HPoint {
    pub re: f64,
    pub im: f64,
}

impl HPoint {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        if im > 0.0 && re.is_finite() && im.is_finite() {
            Ok(HPoint { re, im })
        } else {
            Err(Error::NotInUpperHalfPlane(format!("{re}{im:+}i")))
        }
    }

    pub fn from_c64(z: Complex64) -> Result<Self> {
        Self::new(z.re, z.im)
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn i() -> Self {
        HPoint { re: 0.0, im: 1.0 }
    }

    /// e^{iπ/3}, the fundamental-domain corner where j vanishes.
    pub fn rho() -> Self {
        HPoint {
            re: 0.5,
            im: 3f64.sqrt() / 2.0,
        }
    }
}

/// An element of SL2(Z).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Sl2Z {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl fmt::Display for Sl2Z {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {}; {} {})", self.a, self.b, self.c, self.d)
    }
}

impl Sl2Z {
    pub const IDENTITY: Sl2Z = Sl2Z { a: 1, b: 0, c: 0, d: 1 };
    pub const S: Sl2Z = Sl2Z { a: 0, b: -1, c: 1, d: 0 };

    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        let det = a as i128 * d as i128 - b as i128 * c as i128;
        if det != 1 {
            return Err(Error::NotSl2(det.to_string()));
        }
        Ok(Sl2Z { a, b, c, d })
    }

    pub fn translation(n: i64) -> Self {
        Sl2Z { a: 1, b: n, c: 0, d: 1 }
    }

    pub fn checked_mul(&self, o: &Sl2Z) -> Option<Sl2Z> {
        let m = |x: i64, y: i64, z: i64, w: i64| x.checked_mul(y)?.checked_add(z.checked_mul(w)?);
        Some(Sl2Z {
            a: m(self.a, o.a, self.b, o.c)?,
            b: m(self.a, o.b, self.b, o.d)?,
            c: m(self.c, o.a, self.d, o.c)?,
            d: m(self.c, o.b, self.d, o.d)?,
        })
    }

    pub fn mul(&self, o: &Sl2Z) -> Sl2Z {
        self.checked_mul(o).expect("SL2(Z) product overflows i64")
    }

    pub fn inverse(&self) -> Sl2Z {
        Sl2Z {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn neg(&self) -> Sl2Z {
        Sl2Z {
            a: -self.a,
            b: -self.b,
            c: -self.c,
            d: -self.d,
        }
    }

    pub fn height(&self) -> i64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    pub fn to_f64(&self) -> [f64; 4] {
        [self.a as f64, self.b as f64, self.c as f64, self.d as f64]
    }

    pub fn to_matrix(&self) -> Sl2Matrix {
        Sl2Matrix {
            entries: Entries::Exact(Box::new([
                Quad::int(self.a),
                Quad::int(self.b),
                Quad::int(self.c),
                Quad::int(self.d),
            ])),
        }
    }

    pub fn apply(&self, z: HPoint) -> HPoint {
        moebius_dd(&self.to_dd(), CDd::from_c64(z.to_c64()))
            .map(|w| HPoint {
                re: w.re.to_f64(),
                im: w.im.to_f64(),
            })
            .expect("integer matrix with det 1 keeps ℍ")
    }

    pub fn to_dd(&self) -> [Dd; 4] {
        self.to_f64().map(Dd::from_f64)
    }
}

impl From<Sl2Z> for Sl2Matrix {
    fn from(g: Sl2Z) -> Self {
        g.to_matrix()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Exact,
    Float,
}

#[derive(Clone, PartialEq)]
enum Entries {
    Exact(Box<[Quad; 4]>),
    Float([f64; 4]),
}

/// A real 2×2 matrix of determinant 1, exact over one field ℚ(√D) or float.
#[derive(Clone, PartialEq)]
pub struct Sl2Matrix {
    entries: Entries,
}

impl fmt::Debug for Sl2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.entries {
            Entries::Exact(e) => write!(f, "Exact({} {}; {} {})", e[0], e[1], e[2], e[3]),
            Entries::Float(e) => write!(f, "Float({} {}; {} {})", e[0], e[1], e[2], e[3]),
        }
    }
}

fn float_det_ok(e: &[f64; 4]) -> bool {
    let det = e[0] * e[3] - e[1] * e[2];
    let scale = 1f64.max((e[0] * e[3]).abs() + (e[1] * e[2]).abs());
    (det - 1.0).abs() <= FLOAT_DET_TOL * scale
}

impl Sl2Matrix {
    pub fn identity() -> Self {
        Sl2Z::IDENTITY.to_matrix()
    }

    /// Exact matrix; the determinant must be exactly 1 and all entries
    /// must live in one field ℚ(√D).
    pub fn exact(a: Quad, b: Quad, c: Quad, d: Quad) -> Result<Self> {
        common_disc([&a, &b, &c, &d])?;
        let det = &a * &d - &b * &c;
        if det != Quad::one() {
            return Err(Error::NotSl2(det.to_string()));
        }
        Ok(Sl2Matrix {
            entries: Entries::Exact(Box::new([a, b, c, d])),
        })
    }

    /// Float matrix with |det − 1| within the float tolerance (relative to
    /// the size of the products for large entries).
    pub fn float(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let e = [a, b, c, d];
        if e.iter().any(|x| !x.is_finite()) || !float_det_ok(&e) {
            return Err(Error::NotSl2(format!("{}", a * d - b * c)));
        }
        Ok(Sl2Matrix {
            entries: Entries::Float(e),
        })
    }

    /// Parse four entry tokens; exact when every token is exact and the
    /// fields agree.
    pub fn parse(tokens: [&str; 4]) -> Result<Self> {
        let quads: Vec<Option<Quad>> = tokens
            .iter()
            .map(|t| expr::parse_real_quad(t))
            .collect::<Result<_>>()?;
        if quads.iter().all(Option::is_some) {
            let q: Vec<Quad> = quads.into_iter().map(Option::unwrap).collect();
            if common_disc(q.iter()).is_ok() {
                let [a, b, c, d]: [Quad; 4] = q.try_into().expect("four entries");
                return Self::exact(a, b, c, d);
            }
        }
        let f: Vec<f64> = tokens
            .iter()
            .map(|t| expr::parse_scalar(t).map(|s| s.to_c64().re))
            .collect::<Result<_>>()?;
        Self::float(f[0], f[1], f[2], f[3])
    }

    pub fn kind(&self) -> MatrixKind {
        match self.entries {
            Entries::Exact(_) => MatrixKind::Exact,
            Entries::Float(_) => MatrixKind::Float,
        }
    }

    /// Field discriminant of an exact matrix (0 when rational or float).
    pub fn disc(&self) -> u64 {
        match &self.entries {
            Entries::Exact(e) => common_disc(e.iter()).unwrap_or(0),
            Entries::Float(_) => 0,
        }
    }

    pub fn exact_entries(&self) -> Option<&[Quad; 4]> {
        match &self.entries {
            Entries::Exact(e) => Some(e),
            Entries::Float(_) => None,
        }
    }

    pub fn to_dd(&self) -> [Dd; 4] {
        match &self.entries {
            Entries::Exact(e) => [e[0].to_dd(), e[1].to_dd(), e[2].to_dd(), e[3].to_dd()],
            Entries::Float(e) => e.map(Dd::from_f64),
        }
    }

    pub fn to_f64(&self) -> [f64; 4] {
        self.to_dd().map(Dd::to_f64)
    }

    /// Entries as display strings (exact form for exact matrices).
    pub fn entry_strings(&self) -> [String; 4] {
        match &self.entries {
            Entries::Exact(e) => [0, 1, 2, 3].map(|k| e[k].to_string()),
            Entries::Float(e) => e.map(|x| format!("{x:?}")),
        }
    }

    pub fn mul(&self, o: &Sl2Matrix) -> Result<Sl2Matrix> {
        match (&self.entries, &o.entries) {
            (Entries::Exact(x), Entries::Exact(y)) => {
                common_disc(x.iter().chain(y.iter()))?;
                Ok(Sl2Matrix {
                    entries: Entries::Exact(Box::new([
                        &x[0] * &y[0] + &x[1] * &y[2],
                        &x[0] * &y[1] + &x[1] * &y[3],
                        &x[2] * &y[0] + &x[3] * &y[2],
                        &x[2] * &y[1] + &x[3] * &y[3],
                    ])),
                })
            }
            _ => {
                let (x, y) = (self.to_dd(), o.to_dd());
                let e = [
                    x[0] * y[0] + x[1] * y[2],
                    x[0] * y[1] + x[1] * y[3],
                    x[2] * y[0] + x[3] * y[2],
                    x[2] * y[1] + x[3] * y[3],
                ]
                .map(Dd::to_f64);
                Ok(Sl2Matrix {
                    entries: Entries::Float(e),
                })
            }
        }
    }

    pub fn inverse(&self) -> Sl2Matrix {
        let entries = match &self.entries {
            Entries::Exact(e) => {
                Entries::Exact(Box::new([e[3].clone(), -&e[1], -&e[2], e[0].clone()]))
            }
            Entries::Float(e) => Entries::Float([e[3], -e[1], -e[2], e[0]]),
        };
        Sl2Matrix { entries }
    }

    pub fn neg(&self) -> Sl2Matrix {
        let entries = match &self.entries {
            Entries::Exact(e) => Entries::Exact(Box::new([-&e[0], -&e[1], -&e[2], -&e[3]])),
            Entries::Float(e) => Entries::Float(e.map(|x| -x)),
        };
        Sl2Matrix { entries }
    }

    /// The same matrix with float entries.
    pub fn to_float(&self) -> Sl2Matrix {
        Sl2Matrix {
            entries: Entries::Float(self.to_f64()),
        }
    }

    /// Frobenius distance to `o`, minimised over the overall sign.
    pub fn sign_distance(&self, o: &Sl2Matrix) -> f64 {
        sign_distance(&self.to_f64(), &o.to_f64())
    }
}

pub fn frobenius(m: &[f64; 4]) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn sign_distance(x: &[f64; 4], y: &[f64; 4]) -> f64 {
    let plus = (0..4).map(|k| (x[k] - y[k]).powi(2)).sum::<f64>();
    let minus = (0..4).map(|k| (x[k] + y[k]).powi(2)).sum::<f64>();
    plus.min(minus).sqrt()
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    kind: MatrixKind,
    entries: [String; 4],
}

impl Serialize for Sl2Matrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr {
            kind: self.kind(),
            entries: self.entry_strings(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Sl2Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = MatrixRepr::deserialize(d)?;
        let t = [
            r.entries[0].as_str(),
            r.entries[1].as_str(),
            r.entries[2].as_str(),
            r.entries[3].as_str(),
        ];
        let m = match r.kind {
            MatrixKind::Exact => Sl2Matrix::parse(t),
            MatrixKind::Float => t
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(e.to_string())))
                .collect::<Result<Vec<f64>>>()
                .and_then(|f| Sl2Matrix::float(f[0], f[1], f[2], f[3])),
        };
        m.map_err(serde::de::Error::custom)
    }
}

/// Second-order jet (z, r, s) on ℍ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jet2Point {
    pub z: HPoint,
    pub r: Complex64,
    pub s: Complex64,
}

pub(crate) fn moebius_dd(g: &[Dd; 4], z: CDd) -> Result<CDd> {
    let num = z.scale(g[0]) + CDd::new(g[1], Dd::ZERO);
    let den = z.scale(g[2]) + CDd::new(g[3], Dd::ZERO);
    let n2 = den.norm_sqr().to_f64();
    if n2.sqrt() < 1e-300 {
        return Err(Error::DegenerateDenominator(n2.sqrt()));
    }
    Ok(num / den)
}

pub(crate) fn factor_dd(g: &[Dd; 4], z: CDd) -> CDd {
    z.scale(g[2]) + CDd::new(g[3], Dd::ZERO)
}

/// (az+b)/(cz+d), evaluated in double-double.
pub fn moebius_apply(g: &Sl2Matrix, z: HPoint) -> Result<HPoint> {
    let w = moebius_dd(&g.to_dd(), CDd::from_c64(z.to_c64()))?;
    HPoint::new(w.re.to_f64(), w.im.to_f64())
}

/// The automorphy factor cz + d.
pub fn automorphy_factor(g: &Sl2Matrix, z: HPoint) -> Complex64 {
    factor_dd(&g.to_dd(), CDd::from_c64(z.to_c64())).to_c64()
}

/// Result of reducing a point into the standard fundamental domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reduction {
    /// The reduced point z* = γz.
    pub point: HPoint,
    pub gamma: Sl2Z,
}

const MAX_REDUCTION_STEPS: usize = 1_000_000;

/// S/T reduction carried out in double-double. Boundary ties go to the
/// representative with Re z ≥ 0.
pub(crate) fn reduce_dd(w: CDd) -> Result<(CDd, Sl2Z)> {
    let eps = REDUCTION_EPS;
    let mut z = w;
    let mut g = Sl2Z::IDENTITY;
    let overflow = || Error::NonTermination(MAX_REDUCTION_STEPS);
    for _ in 0..MAX_REDUCTION_STEPS {
        let x = z.re.to_f64();
        if x.abs() > 0.5 + eps {
            let n = z.re.round();
            let k = n.to_f64();
            if k.abs() > 9.0e15 {
                return Err(overflow());
            }
            z.re = z.re - n;
            g = Sl2Z::translation(-(k as i64)).checked_mul(&g).ok_or_else(overflow)?;
            continue;
        }
        if z.norm_sqr().to_f64() < 1.0 - eps {
            z = -z.recip();
            g = Sl2Z::S.checked_mul(&g).ok_or_else(overflow)?;
            continue;
        }
        if x < -0.5 + eps {
            z.re = z.re + Dd::ONE;
            g = Sl2Z::translation(1).checked_mul(&g).ok_or_else(overflow)?;
        }
        if z.norm_sqr().to_f64() < 1.0 + eps && z.re.to_f64() < 0.0 {
            z = -z.recip();
            g = Sl2Z::S.checked_mul(&g).ok_or_else(overflow)?;
        }
        return Ok((z, g));
    }
    Err(Error::NonTermination(MAX_REDUCTION_STEPS))
}

/// Returns (z*, γ) with z* = γz in the closed fundamental domain
/// |Re z*| ≤ 1/2, |z*| ≥ 1.
pub fn reduce_to_fundamental_domain(z: HPoint) -> Result<Reduction> {
    let (w, gamma) = reduce_dd(CDd::from_c64(z.to_c64()))?;
    Ok(Reduction {
        point: HPoint::new(w.re.to_f64(), w.im.to_f64())?,
        gamma,
    })
}

/// g(θ) = M(z2)·R(θ)·M(z1)⁻¹, where M(x+iy) = (√y x/√y; 0 1/√y) sends i to
/// x+iy and R(θ) = (cos θ sin θ; −sin θ cos θ) fixes i. Then g(θ)z1 = z2 and
/// c z1 + d = √(y1/y2)·e^{−iθ}; the circle θ ∈ [0, 2π) sweeps the fibre.
pub fn connecting_matrix(z1: HPoint, z2: HPoint, theta: f64) -> Sl2Matrix {
    let m = |z: HPoint| {
        let s = Dd::from_f64(z.im).sqrt();
        [s, Dd::from_f64(z.re) / s, Dd::ZERO, s.recip()]
    };
    let mul = |x: [Dd; 4], y: [Dd; 4]| {
        [
            x[0] * y[0] + x[1] * y[2],
            x[0] * y[1] + x[1] * y[3],
            x[2] * y[0] + x[3] * y[2],
            x[2] * y[1] + x[3] * y[3],
        ]
    };
    let (sn, cs) = theta.sin_cos();
    let r = [cs, sn, -sn, cs].map(Dd::from_f64);
    let m1 = m(z1);
    let m1inv = [m1[3], -m1[1], Dd::ZERO, m1[0]];
    let e = mul(mul(m(z2), r), m1inv).map(Dd::to_f64);
    Sl2Matrix {
        entries: Entries::Float(e),
    }
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = ext_gcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

/// Integer t-range with lo ≤ base + t·step ≤ hi (step ≠ 0).
fn t_range(base: i64, step: i64, lo: i64, hi: i64) -> (i64, i64) {
    let ceil = |a: i64, b: i64| -Integer::div_floor(&-a, &b);
    let floor = |a: i64, b: i64| Integer::div_floor(&a, &b);
    if step > 0 {
        (ceil(lo - base, step), floor(hi - base, step))
    } else {
        (ceil(base - hi, -step), floor(base - lo, -step))
    }
}

/// Every γ ∈ SL2(Z) with max entry ≤ height, each once, ordered
/// lexicographically on (c, d, a, b). Built from coprime (c, d) pairs and the
/// one-parameter family of solutions of ad − bc = 1.
pub fn enumerate_sl2z(height: i64) -> impl Iterator<Item = Sl2Z> {
    assert!(height >= 1, "height must be at least 1");
    let h = height;
    (-h..=h).flat_map(move |c| {
        (-h..=h).flat_map(move |d| {
            let mut out = Vec::new();
            if c.gcd(&d) != 1 {
                return out.into_iter();
            }
            if c == 0 {
                // d = ±1 forces a = d; b is free.
                for b in -h..=h {
                    out.push(Sl2Z { a: d, b, c, d });
                }
                return out.into_iter();
            }
            // x·d + y·c = ±1, so a0 = x, b0 = −y solves a0·d − b0·c = ±1.
            let (g, x, y) = ext_gcd(d, c);
            let (a0, b0) = if g == 1 { (x, -y) } else { (-x, y) };
            let (mut lo, mut hi) = t_range(a0, c, -h, h);
            if d != 0 {
                let (l2, h2) = t_range(b0, d, -h, h);
                lo = lo.max(l2);
                hi = hi.min(h2);
            }
            for t in lo..=hi {
                let (a, b) = (a0 + t * c, b0 + t * d);
                if b.abs() <= h {
                    out.push(Sl2Z { a, b, c, d });
                }
            }
            out.sort();
            out.into_iter()
        })
    })
}

/// Outcome of the commensurability test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Rationality {
    /// g is a real multiple of a primitive integer matrix of determinant N.
    Yes { n: i64, matrix: [i64; 4] },
    No,
    /// Float input whose entries cannot be told apart from irrational ones.
    Unknown { denominator_bound: i64 },
}

fn primitive_from_rationals(r: &[BigRational; 4]) -> Option<[i64; 4]> {
    let l = r
        .iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = r.iter().map(|x| (x * &l).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return None;
    }
    let sign = ints
        .iter()
        .find(|x| !x.is_zero())
        .map(|x| if x.is_negative() { -1 } else { 1 })
        .unwrap_or(1);
    let mut out = [0i64; 4];
    for (k, x) in ints.iter().enumerate() {
        out[k] = (x / &g * BigInt::from(sign)).to_i64()?;
    }
    Some(out)
}

/// Continued-fraction reconstruction p/q of x with q ≤ bound.
pub fn rational_reconstruct(x: f64, tol: f64, bound: i64) -> Option<(i64, i64)> {
    if !x.is_finite() {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i128;
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        if q2 > bound as i128 {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        if (x - p1 as f64 / q1 as f64).abs() <= tol {
            return Some((p1 as i64, q1 as i64));
        }
        let frac = r - a as f64;
        if frac.abs() < 1e-300 {
            break;
        }
        r = 1.0 / frac;
    }
    None
}

/// Is g a real scalar multiple of a matrix in GL2(Q)+? Exact entries are
/// decided exactly; float entries by continued fractions.
pub fn is_rational_up_to_scalar(g: &Sl2Matrix) -> Rationality {
    match &g.entries {
        Entries::Exact(e) => {
            let pivot = e.iter().find(|x| !x.is_zero()).expect("det 1 matrix is nonzero");
            let ratios: Vec<Quad> = e.iter().map(|x| x / pivot).collect();
            if ratios.iter().any(|r| !r.is_rational()) {
                return Rationality::No;
            }
            let r: [BigRational; 4] = [0, 1, 2, 3].map(|k| ratios[k].rat.clone());
            match primitive_from_rationals(&r) {
                Some(m) => Rationality::Yes {
                    n: m[0] * m[3] - m[1] * m[2],
                    matrix: m,
                },
                None => Rationality::Unknown {
                    denominator_bound: RATIONAL_DENOMINATOR_BOUND,
                },
            }
        }
        Entries::Float(e) => {
            let unknown = Rationality::Unknown {
                denominator_bound: RATIONAL_DENOMINATOR_BOUND,
            };
            let k = (0..4)
                .max_by(|&i, &j| e[i].abs().total_cmp(&e[j].abs()))
                .expect("four entries");
            let mut r = Vec::with_capacity(4);
            for x in e {
                match rational_reconstruct(
                    x / e[k],
                    RATIONAL_RECONSTRUCTION_TOL,
                    RATIONAL_DENOMINATOR_BOUND,
                ) {
                    Some((p, q)) if q <= RATIONAL_AMBIGUITY_DENOMINATOR => {
                        r.push(BigRational::new(p.into(), q.into()))
                    }
                    _ => return unknown,
                }
            }
            let r: [BigRational; 4] = r.try_into().expect("four ratios");
            match primitive_from_rationals(&r) {
                Some(m) if m[0] * m[3] - m[1] * m[2] > 0 => Rationality::Yes {
                    n: m[0] * m[3] - m[1] * m[2],
                    matrix: m,
                },
                _ => unknown,
            }
        }
    }
}

//! The modular j-function: evaluation of j, j′, j″ with an explicit error
//! bound, inversion, the jet-2 action, and the modular polynomials Φ_N.

use crate::config::MAX_SERIES_ORDER;
use crate::dd::CDd;
use crate::error::{Error, Result};
use crate::halfplane::{self, HPoint, Jet2Point, Sl2Matrix};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::{LazyLock, OnceLock};

const EPS: f64 = f64::EPSILON;
const TWO_PI: f64 = 2.0 * PI;

/// A value together with a bound on its distance from the true value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub value: Complex64,
    pub error_bound: f64,
}

// ---------------------------------------------------------------------------
// q-expansion coefficients

/// Exact power series arithmetic truncated at a fixed length.
fn series_mul(a: &[BigInt], b: &[BigInt], len: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// 1/a for a series with constant term 1.
fn series_inv_unit(a: &[BigInt], len: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); len];
    out[0] = BigInt::one();
    for n in 1..len {
        let mut s = BigInt::zero();
        for k in 1..=n.min(a.len() - 1) {
            s += &a[k] * &out[n - k];
        }
        out[n] = -s;
    }
    out
}

fn sigma(n: u64, k: u32) -> BigInt {
    let mut s = BigInt::zero();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            s += BigInt::from(d).pow(k);
            if d * d != n {
                s += BigInt::from(n / d).pow(k);
            }
        }
        d += 1;
    }
    s
}

/// Coefficients c_{−1}, c_0, …, c_{len−2} of j = E4³/Δ, index n+1.
fn j_coefficients(len: usize) -> Vec<BigInt> {
    // j·q = E4³ · Π(1−q^n)^{−24}.
    let m = len;
    let mut e4 = vec![BigInt::zero(); m];
    e4[0] = BigInt::one();
    for (n, c) in e4.iter_mut().enumerate().skip(1) {
        *c = sigma(n as u64, 3) * 240;
    }
    // Euler product Π(1 − q^n) by pentagonal numbers.
    let mut eta = vec![BigInt::zero(); m];
    for k in 0i64.. {
        let mut any = false;
        for kk in [k, -k] {
            let p = (kk * (3 * kk - 1) / 2) as usize;
            if p < m {
                eta[p] = if kk % 2 == 0 { BigInt::one() } else { -BigInt::one() };
                any = true;
            }
        }
        if !any {
            break;
        }
    }
    let mut p24 = vec![BigInt::zero(); m];
    p24[0] = BigInt::one();
    let mut base = eta;
    let mut e = 24u32;
    while e > 0 {
        if e & 1 == 1 {
            p24 = series_mul(&p24, &base, m);
        }
        base = series_mul(&base, &base, m);
        e >>= 1;
    }
    let e4c = series_mul(&series_mul(&e4, &e4, m), &e4, m);
    series_mul(&e4c, &series_inv_unit(&p24, m), m)
}

/// Exact coefficients c_n for n = −1..=400 (index n+1).
pub static J_COEFFS: LazyLock<Vec<BigInt>> = LazyLock::new(|| j_coefficients(402));

static J_COEFFS_F64: LazyLock<Vec<f64>> = LazyLock::new(|| {
    J_COEFFS
        .iter()
        .take(MAX_SERIES_ORDER + 2)
        .map(|c| c.to_f64().expect("finite"))
        .collect()
});

/// c_n for n ≥ −1.
pub fn j_coefficient(n: i64) -> BigInt {
    J_COEFFS[(n + 1) as usize].clone()
}

// ---------------------------------------------------------------------------
// Evaluation in the fundamental domain

/// j and its first two z-derivatives together with error bounds.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Jet {
    pub j: Complex64,
    pub dj: Complex64,
    pub d2j: Complex64,
    pub ej: f64,
    pub edj: f64,
    pub ed2j: f64,
}

/// Bound on Σ_{n>N} n^p e^{4π√n} |q|^n by the first tail term over 1 − ratio.
fn tail_bound(absq: f64, n: usize, p: i32) -> f64 {
    let m = (n + 1) as f64;
    let t = m.powi(p) * (4.0 * PI * m.sqrt() + m * absq.ln()).exp();
    let ratio = ((m + 1.0) / m).powi(p) * (4.0 * PI * ((m + 1.0).sqrt() - m.sqrt())).exp() * absq;
    if ratio >= 1.0 {
        f64::INFINITY
    } else {
        t / (1.0 - ratio)
    }
}

/// Smallest order N (≥ 4) whose tails for j, j′, j″ fall below `tol`.
fn series_order(absq: f64, tol: f64) -> Option<usize> {
    (4..=MAX_SERIES_ORDER).find(|&n| {
        tail_bound(absq, n, 0) <= tol
            && TWO_PI * tail_bound(absq, n, 1) <= tol
            && TWO_PI * TWO_PI * tail_bound(absq, n, 2) <= tol
    })
}

/// Jet at a point of the fundamental domain, truncated at the order needed
/// for absolute tail `tol`.
fn series_jet(z: Complex64, tol: f64) -> Result<Jet> {
    if z.im > 100.0 {
        return Err(Error::PrecisionUnreachable {
            requested: tol,
            achievable: f64::INFINITY,
        });
    }
    let absq = (-TWO_PI * z.im).exp();
    let n = series_order(absq, tol).ok_or(Error::PrecisionUnreachable {
        requested: tol,
        achievable: tail_bound(absq, MAX_SERIES_ORDER, 2) * TWO_PI * TWO_PI,
    })?;
    let (s, c) = (TWO_PI * z.re).sin_cos();
    let q = Complex64::new(absq * c, absq * s);
    let qinv = Complex64::new(c, -s) / absq;
    let inv = 1.0 / absq;
    let coef = &*J_COEFFS_F64;
    // Terms n^p c_n q^n for p = 0..3 with a running bound on the rounding of
    // each (powers of q are built by repeated products, ≤ 3ε each).
    let mut terms: [Vec<(Complex64, f64)>; 4] = Default::default();
    let mut abs = [0.0f64; 5];
    let mut qn = Complex64::one();
    let mut rel = 0.0;
    for k in 0..=n {
        let t = qn * coef[k + 1];
        let kf = k as f64;
        let mut w = 1.0;
        for (p, bucket) in terms.iter_mut().enumerate() {
            let tp = t * w;
            bucket.push((tp, tp.norm() * (rel + (p as f64 + 2.0) * EPS)));
            w *= kf;
        }
        let ta = coef[k + 1] * absq.powi(k as i32);
        let mut w = 1.0;
        for a in abs.iter_mut() {
            *a += ta * w;
            w *= kf;
        }
        qn *= q;
        rel += 3.0 * EPS;
    }
    // Sum smallest terms first; each addition adds at most ε|partial sum|.
    let sum = |ts: &[(Complex64, f64)]| {
        let mut acc = Complex64::zero();
        let mut err = 0.0;
        for &(t, e) in ts.iter().rev() {
            acc += t;
            err += e + EPS * acc.norm();
        }
        (acc, err)
    };
    let (s0, r0) = sum(&terms[0]);
    let (s1, r1) = sum(&terms[1]);
    let (s2, r2) = sum(&terms[2]);
    let (s3, _) = sum(&terms[3]);
    // D = q d/dq, so j′ = 2πi Dj and j″ = (2πi)² D²j.
    let j = qinv + s0;
    let d1 = s1 - qinv;
    let d2 = s2 + qinv;
    let d3 = s3 - qinv;
    // q itself is off by a relative δ (exp, sin/cos, and the rounding of z*),
    // which moves every series by its q-derivative.
    let delta = EPS * (4.0 + 1.5 * TWO_PI * (z.re.abs() + z.im));
    let shift = |next: Complex64, abs_after: f64| {
        next.norm() * delta + 2.0 * delta * delta * (inv + abs_after)
    };
    let round_q = 3.0 * EPS * inv;
    let ej = tail_bound(absq, n, 0) + 2.0 * (r0 + round_q + EPS * j.norm() + shift(d1, abs[2]));
    let edj = TWO_PI
        * (tail_bound(absq, n, 1) + 2.0 * (r1 + round_q + EPS * d1.norm() + shift(d2, abs[3])));
    let ed2j = TWO_PI
        * TWO_PI
        * (tail_bound(absq, n, 2) + 2.0 * (r2 + round_q + EPS * d2.norm() + shift(d3, abs[4])));
    Ok(Jet {
        j,
        dj: Complex64::new(0.0, TWO_PI) * d1,
        d2j: -TWO_PI * TWO_PI * d2,
        ej,
        edj: edj + 2.0 * EPS * TWO_PI * d1.norm(),
        ed2j: ed2j + 2.0 * EPS * TWO_PI * TWO_PI * d2.norm(),
    })
}

/// Jet of j at a point given in double-double, pushed from the reduced point
/// by the transformation laws.
pub(crate) fn jet_dd(w: CDd, tol: f64) -> Result<Jet> {
    let (zs, gamma) = halfplane::reduce_dd(w)?;
    let f = halfplane::factor_dd(&gamma.to_dd(), w).to_c64();
    let c = gamma.c as f64;
    let star = series_jet(zs.to_c64(), tol)?;
    let f2 = f * f;
    let f3 = f2 * f;
    let f4 = f2 * f2;
    // j′(w) = j′(z*)/f², j″(w) = j″(z*)/f⁴ − 2c j′(z*)/f³.
    let dj = star.dj / f2;
    let d2j = star.d2j / f4 - 2.0 * c * star.dj / f3;
    let fa = f.norm();
    let round = 8.0 * EPS;
    Ok(Jet {
        j: star.j,
        dj,
        d2j,
        ej: star.ej,
        edj: star.edj / (fa * fa) + round * dj.norm(),
        ed2j: star.ed2j / fa.powi(4)
            + 2.0 * c.abs() * star.edj / fa.powi(3)
            + round * (star.d2j.norm() / fa.powi(4) + 2.0 * c.abs() * star.dj.norm() / fa.powi(3)),
    })
}

/// Internal working tolerance on series tails.
pub(crate) const WORK_TOL: f64 = 1e-17;

/// Jet at a float point, full working precision.
pub(crate) fn jet(z: Complex64) -> Result<Jet> {
    jet_dd(CDd::from_c64(z), WORK_TOL)
}

/// Jet at g·z with the image carried in double-double.
pub(crate) fn jet_image(g: &Sl2Matrix, z: Complex64) -> Result<Jet> {
    let w = halfplane::moebius_dd(&g.to_dd(), CDd::from_c64(z))?;
    jet_dd(w, WORK_TOL)
}

fn check(value: Complex64, err: f64, prec: f64) -> Result<EvalResult> {
    let scale = value.norm().max(1.0);
    if !(err <= prec * scale) {
        return Err(Error::PrecisionUnreachable {
            requested: prec,
            achievable: err / scale,
        });
    }
    Ok(EvalResult {
        value,
        error_bound: err,
    })
}

fn check_prec(prec: f64) -> Result<()> {
    if prec > 0.0 && prec <= 1e-2 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("prec {prec} outside (0, 1e-2]")))
    }
}

fn jet_for(w: CDd, prec: f64) -> Result<Jet> {
    check_prec(prec)?;
    jet_dd(w, (prec / 4.0).min(1e-3))
}

/// j(z) with |value − j(z)| ≤ error_bound ≤ prec·max(1, |j(z)|).
pub fn j_eval(z: HPoint, prec: f64) -> Result<EvalResult> {
    let t = jet_for(CDd::from_c64(z.to_c64()), prec)?;
    check(t.j, t.ej, prec)
}

/// j(g·z), with the image point carried in double-double so that points
/// deep in the cusp of another fundamental domain lose nothing to rounding.
pub fn j_eval_image(g: &Sl2Matrix, z: HPoint, prec: f64) -> Result<EvalResult> {
    let w = halfplane::moebius_dd(&g.to_dd(), CDd::from_c64(z.to_c64()))?;
    let t = jet_for(w, prec)?;
    check(t.j, t.ej, prec)
}

fn triple(t: &Jet, prec: f64) -> Result<(EvalResult, EvalResult, EvalResult)> {
    Ok((
        check(t.j, t.ej, prec)?,
        check(t.dj, t.edj, prec)?,
        check(t.d2j, t.ed2j, prec)?,
    ))
}

/// (j, j′, j″) at z. Each bound is relative to max(1, |value|).
pub fn j_derivatives(z: HPoint, prec: f64) -> Result<(EvalResult, EvalResult, EvalResult)> {
    triple(&jet_for(CDd::from_c64(z.to_c64()), prec)?, prec)
}

/// (j, j′, j″) at g·z, image carried in double-double.
pub fn j_derivatives_image(
    g: &Sl2Matrix,
    z: HPoint,
    prec: f64,
) -> Result<(EvalResult, EvalResult, EvalResult)> {
    let w = halfplane::moebius_dd(&g.to_dd(), CDd::from_c64(z.to_c64()))?;
    triple(&jet_for(w, prec)?, prec)
}

// ---------------------------------------------------------------------------
// Jets

/// g·(z, r, s) = (gz, r/(cz+d)², s/(cz+d)² − 2c r²/(cz+d)³).
pub fn jet2_action(g: &Sl2Matrix, p: &Jet2Point) -> Result<Jet2Point> {
    let e = g.to_dd();
    let z = CDd::from_c64(p.z.to_c64());
    let w = halfplane::moebius_dd(&e, z)?;
    let f = halfplane::factor_dd(&e, z).to_c64();
    let c = e[2].to_f64();
    let f2 = f * f;
    Ok(Jet2Point {
        z: HPoint::new(w.re.to_f64(), w.im.to_f64())?,
        r: p.r / f2,
        s: p.s / f2 - 2.0 * c * p.r * p.r / (f2 * f),
    })
}

/// J2j(z, r, s) = (j(z), j′(z) r, j″(z) r² + j′(z) s).
pub fn jet2_j(p: &Jet2Point, prec: f64) -> Result<(EvalResult, EvalResult, EvalResult)> {
    let (j, dj, d2j) = j_derivatives(p.z, prec)?;
    let r2 = p.r * p.r;
    let v1 = dj.value * p.r;
    let v2 = d2j.value * r2 + dj.value * p.s;
    let e1 = dj.error_bound * p.r.norm() + 2.0 * EPS * v1.norm();
    let e2 = d2j.error_bound * r2.norm()
        + dj.error_bound * p.s.norm()
        + 4.0 * EPS * (d2j.value.norm() * r2.norm() + dj.value.norm() * p.s.norm());
    Ok((
        j,
        EvalResult {
            value: v1,
            error_bound: e1,
        },
        EvalResult {
            value: v2,
            error_bound: e2,
        },
    ))
}

// ---------------------------------------------------------------------------
// Inversion

fn grid(xs: (f64, f64), ys: (f64, f64), k: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(k * k);
    for iy in 0..k {
        for ix in 0..k {
            let x = xs.0 + (xs.1 - xs.0) * (ix as f64 + 0.5) / k as f64;
            let y = ys.0 + (ys.1 - ys.0) * (iy as f64 + 0.5) / k as f64;
            out.push(Complex64::new(x, y));
        }
    }
    out
}

/// Seeds ordered by residual, ties by grid index.
fn ranked_seeds(
    mut seeds: Vec<Complex64>,
    first: Option<Complex64>,
    resid: impl Fn(Complex64) -> Option<f64>,
) -> Vec<Complex64> {
    let mut scored: Vec<(f64, usize, Complex64)> = seeds
        .drain(..)
        .enumerate()
        .filter_map(|(k, z)| resid(z).map(|r| (r, k, z)))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    first
        .into_iter()
        .chain(scored.into_iter().map(|t| t.2))
        .collect()
}

const INVERT_SEEDS: usize = 12;
const INVERT_STEPS: usize = 80;

/// Damped Newton for F(z) = f(z) − w with z kept in ℍ; `reduce` maps each
/// iterate back into the fundamental domain (valid when f is Γ-invariant).
fn newton_invert(
    seed: Complex64,
    w: Complex64,
    tol: f64,
    f: &dyn Fn(Complex64) -> Option<(Complex64, Complex64)>,
    reduce: bool,
) -> Option<Complex64> {
    let mut z = seed;
    let mut last = f64::INFINITY;
    for _ in 0..INVERT_STEPS {
        if reduce {
            z = halfplane::reduce_to_fundamental_domain(HPoint::from_c64(z).ok()?)
                .ok()?
                .point
                .to_c64();
        }
        let (v, dv) = f(z)?;
        let r = v - w;
        if r.norm() <= tol {
            return Some(z);
        }
        if dv.norm() < 1e-300 {
            return None;
        }
        let mut dz = r / dv;
        // Slow linear convergence signals a multiple root; overshoot by the
        // estimated multiplicity.
        if r.norm() > 0.3 * last && r.norm() < 0.8 * last {
            dz *= 2.0;
        }
        let cap = 0.25 * z.im;
        if dz.norm() > cap {
            dz *= cap / dz.norm();
        }
        last = r.norm();
        z -= dz;
        if z.im <= 0.0 || !z.re.is_finite() {
            return None;
        }
    }
    None
}

/// A point z of the closed fundamental domain with |j(z) − w| ≤
/// prec·max(1, |w|).
pub fn j_invert(w: Complex64, prec: f64) -> Result<HPoint> {
    check_prec(prec)?;
    let tol = prec * w.norm().max(1.0);
    if w.norm() <= tol {
        return Ok(HPoint::rho());
    }
    if (w - 1728.0).norm() <= tol {
        return Ok(HPoint::i());
    }
    let asym = (w.norm() > 1e5).then(|| {
        let z = Complex64::new(0.0, 1.0) * (w - 744.0).ln() / TWO_PI;
        halfplane::reduce_to_fundamental_domain(HPoint::from_c64(z).unwrap_or(HPoint::i()))
            .map(|r| r.point.to_c64())
            .unwrap_or(z)
    });
    let seeds = ranked_seeds(grid((-0.5, 0.5), (0.85, 3.5), 40), asym, |z| {
        jet(z).ok().map(|t| (t.j - w).norm())
    });
    let f = |z: Complex64| jet(z).ok().map(|t| (t.j, t.dj));
    for seed in seeds.into_iter().take(INVERT_SEEDS) {
        if let Some(z) = newton_invert(seed, w, tol, &f, true) {
            return Ok(halfplane::reduce_to_fundamental_domain(HPoint::from_c64(z)?)?.point);
        }
    }
    Err(Error::NoConvergence(format!("j(z) = {w} from {INVERT_SEEDS} seeds")))
}

/// A point z ∈ ℍ with |j′(z) − w| ≤ prec·max(1, |w|), searched over the
/// widened box [−1, 1] × [0.4, 3.5]. j′ is not Γ-invariant, so the result is
/// not reduced.
pub fn jprime_invert(w: Complex64, prec: f64) -> Result<HPoint> {
    check_prec(prec)?;
    let tol = prec * w.norm().max(1.0);
    if w.norm() <= tol {
        return Ok(HPoint::i());
    }
    // j′ ≈ −2πi/q near the cusp.
    let asym = (w.norm() > 1e5).then(|| {
        let q = Complex64::new(0.0, -TWO_PI) / w;
        q.ln() / Complex64::new(0.0, TWO_PI)
    });
    let seeds = ranked_seeds(grid((-1.0, 1.0), (0.4, 3.5), 40), asym, |z| {
        jet(z).ok().map(|t| (t.dj - w).norm())
    });
    let f = |z: Complex64| jet(z).ok().map(|t| (t.dj, t.d2j));
    for seed in seeds.into_iter().take(INVERT_SEEDS) {
        if let Some(z) = newton_invert(seed, w, tol, &f, false) {
            return HPoint::from_c64(z);
        }
    }
    Err(Error::NoConvergence(format!("j'(z) = {w} from {INVERT_SEEDS} seeds")))
}

// ---------------------------------------------------------------------------
// Modular polynomials

/// Laurent series Σ coeffs[k] q^{val+k}, exact for exponents below `prec`.
#[derive(Debug, Clone)]
struct Laurent {
    val: i64,
    coeffs: Vec<BigInt>,
    prec: i64,
}

impl Laurent {
    fn coeff(&self, e: i64) -> BigInt {
        debug_assert!(e < self.prec);
        if e < self.val {
            return BigInt::zero();
        }
        self.coeffs
            .get((e - self.val) as usize)
            .cloned()
            .unwrap_or_default()
    }

    fn constant(c: BigInt) -> Self {
        Laurent {
            val: 0,
            coeffs: vec![c],
            prec: i64::MAX / 4,
        }
    }

    fn mul(&self, o: &Laurent) -> Laurent {
        let val = self.val + o.val;
        let prec = (self.val + o.prec).min(o.val + self.prec);
        let len = (prec - val).max(0) as usize;
        let mut coeffs = vec![BigInt::zero(); len];
        for (i, x) in self.coeffs.iter().enumerate().take(len) {
            if x.is_zero() {
                continue;
            }
            for (j, y) in o.coeffs.iter().enumerate().take(len - i) {
                coeffs[i + j] += x * y;
            }
        }
        Laurent { val, coeffs, prec }
    }

    fn add_scaled(&self, o: &Laurent, k: &BigInt) -> Laurent {
        let val = self.val.min(o.val);
        let prec = self.prec.min(o.prec);
        let coeffs = (val..prec).map(|e| self.coeff(e) + k * o.coeff(e)).collect();
        Laurent { val, coeffs, prec }
    }

    fn div_exact(&self, k: i64) -> Laurent {
        let kb = BigInt::from(k);
        Laurent {
            val: self.val,
            coeffs: self
                .coeffs
                .iter()
                .map(|c| {
                    debug_assert!((c % &kb).is_zero(), "inexact division in Newton identity");
                    c / &kb
                })
                .collect(),
            prec: self.prec,
        }
    }

    /// First exponent with a nonzero coefficient (or `prec`).
    fn order(&self) -> i64 {
        self.coeffs
            .iter()
            .position(|c| !c.is_zero())
            .map(|k| self.val + k as i64)
            .unwrap_or(self.prec)
    }
}

/// Φ_N with exact integer coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ModularPolynomial {
    pub level: u32,
    /// ((i, j), c) for the monomial c·X^i·Y^j, sorted.
    pub coefficients: Vec<((u32, u32), BigInt)>,
    /// log|c| and sign for the log-domain evaluator.
    logs: Vec<(u32, u32, f64, bool)>,
}

fn mobius(mut n: u64) -> i64 {
    let mut r = 1;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            r = -r;
        }
        p += 1;
    }
    if n > 1 {
        r = -r;
    }
    r
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn bigint_ln(c: &BigInt) -> f64 {
    let bits = c.bits();
    if bits < 1000 {
        c.abs().to_f64().expect("finite").ln()
    } else {
        let shift = bits - 60;
        let top: BigInt = c.abs() >> shift;
        top.to_f64().expect("finite").ln() + shift as f64 * std::f64::consts::LN_2
    }
}

impl ModularPolynomial {
    fn from_coefficients(level: u32, coefficients: Vec<((u32, u32), BigInt)>) -> Self {
        let logs = coefficients
            .iter()
            .map(|((i, j), c)| (*i, *j, bigint_ln(c), c.is_negative()))
            .collect();
        ModularPolynomial {
            level,
            coefficients,
            logs,
        }
    }

    pub fn coefficient(&self, i: u32, j: u32) -> BigInt {
        self.coefficients
            .iter()
            .find(|(m, _)| *m == (i, j))
            .map(|(_, c)| c.clone())
            .unwrap_or_default()
    }

    pub fn degree(&self) -> u32 {
        self.coefficients.iter().map(|((i, _), _)| *i).max().unwrap_or(0)
    }

    /// |Φ_N(x, y)| divided by the largest monomial magnitude, computed in the
    /// log domain so that large arguments do not overflow.
    pub fn relative_residual(&self, x: Complex64, y: Complex64) -> f64 {
        let (lx, ax) = (x.norm().ln(), x.arg());
        let (ly, ay) = (y.norm().ln(), y.arg());
        let mut terms = Vec::with_capacity(self.logs.len());
        for &(i, j, lc, neg) in &self.logs {
            if (i > 0 && x.norm() == 0.0) || (j > 0 && y.norm() == 0.0) {
                continue;
            }
            let mut l = lc;
            let mut a = if neg { PI } else { 0.0 };
            if i > 0 {
                l += i as f64 * lx;
                a += i as f64 * ax;
            }
            if j > 0 {
                l += j as f64 * ly;
                a += j as f64 * ay;
            }
            terms.push((l, a));
        }
        let m = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            return 0.0;
        }
        let s: Complex64 = terms
            .iter()
            .map(|&(l, a)| Complex64::from_polar((l - m).exp(), a))
            .sum();
        s.norm()
    }
}

/// Power sums Σ_{cosets} j(γτ)^k as Laurent series in q = e^{2πiτ}.
fn power_sums(level: u64, kmax: usize, jpow: &[Laurent]) -> Vec<Laurent> {
    let divisors: Vec<u64> = (1..=level).filter(|d| level % d == 0).collect();
    let mut out = Vec::with_capacity(kmax);
    for k in 1..=kmax {
        let jk = &jpow[k];
        let mut acc: Option<Laurent> = None;
        for &d in &divisors {
            let a = level / d;
            let g = gcd(a, d);
            let e_divs: Vec<u64> = (1..=g).filter(|e| g % e == 0 && mobius(*e) != 0).collect();
            // Σ_b j^k((aτ+b)/d) = Σ_n A_n q^{an/d} Σ_{e|g} μ(e)(d/e)[(d/e) | n].
            let val = -(k as i64) * a as i64;
            let prec = (jk.prec * a as i64).div_euclid(d as i64);
            let mut coeffs = vec![BigInt::zero(); (prec - val).max(0) as usize];
            for n in jk.val..jk.prec {
                let an = jk.coeff(n);
                if an.is_zero() {
                    continue;
                }
                let mut s = 0i64;
                for &e in &e_divs {
                    let de = (d / e) as i64;
                    if n.rem_euclid(de) == 0 {
                        s += mobius(e) * de;
                    }
                }
                if s == 0 {
                    continue;
                }
                let num = a as i64 * n;
                debug_assert_eq!(num.rem_euclid(d as i64), 0);
                let ex = num.div_euclid(d as i64);
                if ex < prec {
                    coeffs[(ex - val) as usize] += an * s;
                }
            }
            let part = Laurent { val, coeffs, prec };
            acc = Some(match acc {
                None => part,
                Some(x) => x.add_scaled(&part, &BigInt::one()),
            });
        }
        out.push(acc.expect("level has divisors"));
    }
    out
}

fn psi(level: u64) -> usize {
    let mut n = level;
    let mut r = level as f64;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            r *= 1.0 + 1.0 / p as f64;
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        r *= 1.0 + 1.0 / n as f64;
    }
    r.round() as usize
}

fn compute_modular_poly(level: u32) -> ModularPolynomial {
    let n = level as u64;
    let deg = psi(n);
    let len = n as usize * (deg * n as usize + 12) + deg + 2;
    assert!(len <= J_COEFFS.len(), "coefficient table too short");
    let j = Laurent {
        val: -1,
        coeffs: J_COEFFS[..len].to_vec(),
        prec: len as i64 - 1,
    };
    let mut jpow = vec![Laurent::constant(BigInt::one())];
    for k in 1..=deg {
        jpow.push(jpow[k - 1].mul(&j));
    }
    let p = power_sums(n, deg, &jpow);
    // Newton's identities: k e_k = Σ_{i=1}^k (−1)^{i−1} e_{k−i} p_i.
    let mut e = vec![Laurent::constant(BigInt::one())];
    for k in 1..=deg {
        let mut acc = Laurent::constant(BigInt::zero());
        for i in 1..=k {
            let sign = if i % 2 == 1 { BigInt::one() } else { -BigInt::one() };
            acc = acc.add_scaled(&e[k - i].mul(&p[i - 1]), &sign);
        }
        e.push(acc.div_exact(k as i64));
    }
    // Φ_N(X, j) = Σ_k (−1)^k e_k(j) X^{deg−k}; write each e_k as a polynomial
    // in j by peeling off poles.
    let mut coeffs = Vec::new();
    for (k, ek) in e.iter().enumerate() {
        let sign = if k % 2 == 0 { BigInt::one() } else { -BigInt::one() };
        let mut rest = ek.clone();
        loop {
            let ord = rest.order();
            if ord >= 0 {
                break;
            }
            let m = (-ord) as usize;
            let c = rest.coeff(ord);
            coeffs.push((((deg - k) as u32, m as u32), &c * &sign));
            rest = rest.add_scaled(&jpow[m], &-c);
        }
        assert!(rest.prec > 4, "insufficient precision for Φ_{level}");
        let c0 = rest.coeff(0);
        if !c0.is_zero() {
            coeffs.push((((deg - k) as u32, 0), c0 * &sign));
        }
        for ex in 1..rest.prec.min(8) {
            assert!(rest.coeff(ex).is_zero(), "Φ_{level}: e_{k} is not a polynomial in j");
        }
    }
    coeffs.sort_by(|a, b| a.0.cmp(&b.0));
    ModularPolynomial::from_coefficients(level, coeffs)
}

static MODULAR_POLYS: [OnceLock<ModularPolynomial>; 5] =
    [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];

/// Startup check: Φ_N(j(z), j(Nz)) vanishes at five fixed points.
fn validate(p: &ModularPolynomial) -> Result<()> {
    let pts = [(0.11, 1.05), (-0.37, 1.2), (0.23, 0.93), (0.49, 1.31), (-0.05, 1.12)];
    for (x, y) in pts {
        let z = Complex64::new(x, y);
        let a = jet(z)?.j;
        let b = jet(z * p.level as f64)?.j;
        let r = p.relative_residual(a, b);
        if r > 1e-4 {
            return Err(Error::NoConvergence(format!(
                "Φ_{} self-check residual {r:e} at {z}",
                p.level
            )));
        }
    }
    Ok(())
}

/// Φ_N for 1 ≤ N ≤ 5, computed from q-expansions on first use and checked
/// numerically.
pub fn modular_poly(level: u32) -> Result<&'static ModularPolynomial> {
    if !(1..=5).contains(&level) {
        return Err(Error::LevelUnsupported(level));
    }
    let p = MODULAR_POLYS[(level - 1) as usize].get_or_init(|| {
        let p = compute_modular_poly(level);
        validate(&p).expect("modular polynomial self-check");
        p
    });
    Ok(p)
}

/// Least N ≤ nmax with Φ_N(w1, w2) vanishing to relative tolerance `tol`.
pub fn modular_relation_with_tol(w1: Complex64, w2: Complex64, nmax: u32, tol: f64) -> Option<u32> {
    (1..=nmax.min(5)).find(|&n| {
        modular_poly(n)
            .map(|p| p.relative_residual(w1, w2) <= tol)
            .unwrap_or(false)
    })
}

/// Least N ≤ nmax with Φ_N(w1, w2) = 0 to the ledger tolerance.
pub fn modular_relation_test(w1: Complex64, w2: Complex64, nmax: u32) -> Option<u32> {
    modular_relation_with_tol(w1, w2, nmax, crate::config::MODULAR_RELATION_POINT_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn first_coefficients() {
        let want = [1i64, 744, 196884, 21493760, 864299970, 20245856256];
        for (k, w) in want.iter().enumerate() {
            assert_eq!(J_COEFFS[k], BigInt::from(*w));
        }
        assert!(J_COEFFS.iter().all(|c| c.is_positive()));
    }

    #[test]
    fn coefficient_growth_bound_holds_on_table() {
        for n in 1..400i64 {
            let c = bigint_ln(&j_coefficient(n));
            assert!(c < 4.0 * PI * (n as f64).sqrt(), "n = {n}");
        }
    }

    #[test]
    fn special_values() {
        let v = j_eval(HPoint::i(), 1e-12).unwrap();
        assert!((v.value - 1728.0).norm() <= 1728.0 * 1e-12);
        let v = j_eval(HPoint::rho(), 1e-10).unwrap();
        assert!(v.value.norm() <= 1e-9);
        let (_, d, _) = j_derivatives(HPoint::i(), 1e-10).unwrap();
        assert!(d.value.norm() <= 1e-8);
    }

    #[test]
    fn derivative_is_imaginary_on_imaginary_axis() {
        for y in [1.0, 1.3, 2.0, 3.7] {
            let (_, d, _) = j_derivatives(HPoint::new(0.0, y).unwrap(), 1e-10).unwrap();
            assert!(d.value.re.abs() <= 1e-9 * d.value.norm().max(1.0), "{y}: {}", d.value);
        }
    }

    #[test]
    fn precision_floor_is_reported() {
        assert!(matches!(
            j_eval(HPoint::new(0.1, 1.0).unwrap(), 1e-300),
            Err(Error::PrecisionUnreachable { .. })
        ));
        assert!(j_eval(HPoint::i(), 0.5).is_err());
    }

    #[test]
    fn invert_special_and_generic() {
        assert_eq!(j_invert(c(1728.0, 0.0), 1e-12).unwrap(), HPoint::i());
        assert_eq!(j_invert(c(0.0, 0.0), 1e-12).unwrap(), HPoint::rho());
        let z = j_invert(c(287496.0, 0.0), 1e-12).unwrap();
        assert!((z.to_c64() - c(0.0, 2.0)).norm() < 1e-10, "{z:?}");
        for w in [c(1.0, 1.0), c(-3000.0, 5.0), c(1e7, -3e7), c(1729.0, 0.0), c(1e-3, 0.0)] {
            let z = j_invert(w, 1e-12).unwrap();
            let v = j_eval(z, 1e-10).unwrap().value;
            assert!((v - w).norm() <= 1e-11 * w.norm().max(1.0), "{w} -> {z:?}: {v}");
        }
    }

    #[test]
    fn jprime_invert_hits_target() {
        for w in [c(100.0, -50.0), c(-2.0, 3.0), c(5e5, 1e5)] {
            let z = jprime_invert(w, 1e-11).unwrap();
            let (_, d, _) = j_derivatives(z, 1e-10).unwrap();
            assert!((d.value - w).norm() <= 1e-10 * w.norm().max(1.0), "{w}");
        }
    }

    #[test]
    fn jet_action_examples() {
        let p = Jet2Point {
            z: HPoint::new(0.2, 1.3).unwrap(),
            r: c(0.5, -1.0),
            s: c(2.0, 0.25),
        };
        assert_eq!(jet2_action(&Sl2Matrix::identity(), &p).unwrap(), p);
        let t = crate::halfplane::Sl2Z::translation(3).to_matrix();
        let q = jet2_action(&t, &p).unwrap();
        assert_eq!((q.r, q.s), (p.r, p.s));
        assert!((q.z.re - 3.2).abs() < 1e-15);
        let (j, d, dd) = jet2_j(
            &Jet2Point {
                z: HPoint::i(),
                r: c(1.0, 0.0),
                s: c(0.0, 0.0),
            },
            1e-10,
        )
        .unwrap();
        assert!((j.value - 1728.0).norm() < 1e-8);
        assert!(d.value.norm() < 1e-8);
        assert!(dd.value.norm() > 1.0);
        let (_, d0, dd0) = jet2_j(&Jet2Point { r: c(0.0, 0.0), s: c(0.0, 0.0), ..p }, 1e-10).unwrap();
        assert_eq!((d0.value, dd0.value), (c(0.0, 0.0), c(0.0, 0.0)));
    }

    #[test]
    fn phi_one_and_two() {
        let p1 = modular_poly(1).unwrap();
        assert_eq!(
            p1.coefficients,
            vec![((0, 1), BigInt::from(-1)), ((1, 0), BigInt::from(1))]
        );
        let p2 = modular_poly(2).unwrap();
        // The classical Φ_2.
        let want: Vec<((u32, u32), i64)> = vec![
            ((0, 0), -157464000000000),
            ((0, 1), 8748000000),
            ((0, 2), -162000),
            ((0, 3), 1),
            ((1, 0), 8748000000),
            ((1, 1), 40773375),
            ((1, 2), 1488),
            ((2, 0), -162000),
            ((2, 1), 1488),
            ((2, 2), -1),
            ((3, 0), 1),
        ];
        let got: Vec<((u32, u32), BigInt)> = p2.coefficients.clone();
        let want: Vec<((u32, u32), BigInt)> =
            want.into_iter().map(|(m, c)| (m, BigInt::from(c))).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn phi_levels_are_symmetric() {
        for n in 2..=5 {
            let p = modular_poly(n).unwrap();
            assert_eq!(p.degree() as usize, psi(n as u64));
            for ((i, j), c) in &p.coefficients {
                assert_eq!(&p.coefficient(*j, *i), c, "Φ_{n} at ({i},{j})");
            }
        }
        assert_eq!(modular_poly(6), Err(Error::LevelUnsupported(6)));
    }

    #[test]
    fn relation_examples() {
        assert_eq!(modular_relation_test(c(1728.0, 0.0), c(1728.0, 0.0), 5), Some(1));
        assert_eq!(modular_relation_test(c(1728.0, 0.0), c(287496.0, 0.0), 5), Some(2));
        assert_eq!(modular_relation_test(c(1728.0, 0.0), c(1729.0, 0.0), 5), None);
    }
}

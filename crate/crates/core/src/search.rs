//! Witness searches: double-coset approximation, certified Newton, the
//! one-dimensional j witness with derivative repair, its recursion over the
//! components of L, and the blurred j′ witness.

use crate::config::{
    SearchConfig, DERIVATIVE_FLOOR, DERIVATIVE_REPAIR_FLOOR, FIBER_DROP_TOL,
    KANTOROVICH_SAFETY, KANTOROVICH_SAMPLES, THETA_SCAN,
};
use crate::dd::CDd;
use crate::error::{Error, Result};
use crate::halfplane::{
    self, connecting_matrix, enumerate_sl2z, moebius_apply, HPoint, Sl2Matrix, Sl2Z,
};
use crate::modular::{self, j_invert, jprime_invert};
use crate::poly::Poly;
use crate::varieties::{
    domain_freeness, pair_verdict, regular_point_sample, Component, MoebiusVariety, PairVerdict,
    PolySystem, Verdict,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

type C = Complex64;

const EPS: f64 = f64::EPSILON;

// ---------------------------------------------------------------------------
// Double cosets

/// Best γ1·g·γ found for a target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosetApproximation {
    pub gamma1: Sl2Z,
    pub gamma: Sl2Z,
    pub product: Sl2Matrix,
    /// Frobenius distance of the product to the target, min over ±.
    pub distance: f64,
}

/// Best tuple (γ_k·g_k·γ)_k with one right factor γ shared by every k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointCoset {
    pub gamma: Sl2Z,
    pub lefts: Vec<Sl2Z>,
    pub products: Vec<Sl2Matrix>,
    pub distances: Vec<f64>,
    /// max_k distances[k], the quantity minimized.
    pub distance: f64,
}

fn mul4(x: &[f64; 4], y: &[f64; 4]) -> [f64; 4] {
    [
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    ]
}

fn frob(x: &[f64; 4]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Largest singular value of a determinant-one matrix: σ² + σ⁻² = |m|_F².
fn sigma_max(m: &[f64; 4]) -> f64 {
    let f2: f64 = m.iter().map(|v| v * v).sum();
    ((f2 + (f2 * f2 - 4.0).max(0.0).sqrt()) / 2.0).sqrt()
}

/// Search order on SL2(Z): one of each ±γ (c > 0, or c = 0 and d > 0),
/// sorted by height, then by distance from the identity, then entries.
fn coset_gammas(height: i64) -> Vec<Sl2Z> {
    let mut v: Vec<Sl2Z> = enumerate_sl2z(height.max(1))
        .filter(|g| g.c > 0 || (g.c == 0 && g.d > 0))
        .collect();
    v.sort_by_key(|g| {
        let l1 = (g.a - 1).abs() + g.b.abs() + g.c.abs() + (g.d - 1).abs();
        (g.height(), l1, g.c, g.d, g.a, g.b)
    });
    v
}

/// Slack on the pruning bound, so rounding never drops the minimizer.
const BOUND_SLACK: f64 = 1e-12;

/// Left factors γ1 indexed by the points ±γ1⁻¹T, bucketed by σ_max(γ1) so
/// that ‖γ1 X − T‖ ≥ ‖X − γ1⁻¹T‖/σ_max(γ1) prunes candidates exactly. Each
/// bucket is sorted along its widest axis and queried by window.
struct LeftIndex {
    target: [f64; 4],
    mats: Vec<[f64; 4]>,
    buckets: Vec<Bucket>,
}

struct Bucket {
    sigma: f64,
    axis: usize,
    /// (coordinate along `axis`, γ1 index), sorted.
    keys: Vec<(f64, usize)>,
}

impl Bucket {
    fn window(&self, x: &[f64; 4], r: f64) -> &[(f64, usize)] {
        let c = x[self.axis];
        let lo = self.keys.partition_point(|k| k.0 < c - r);
        let hi = self.keys.partition_point(|k| k.0 <= c + r);
        &self.keys[lo..hi]
    }

    fn near(&self, x: &[f64; 4], count: usize) -> &[(f64, usize)] {
        let at = self.keys.partition_point(|k| k.0 < x[self.axis]);
        let lo = at.saturating_sub(count);
        let hi = (at + count).min(self.keys.len());
        &self.keys[lo..hi]
    }
}

impl LeftIndex {
    fn new(gammas: &[Sl2Z], target: [f64; 4]) -> Self {
        let mats: Vec<[f64; 4]> = gammas.iter().map(|g| g.to_f64()).collect();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (i, m) in mats.iter().enumerate() {
            let b = sigma_max(m).log2().floor().max(0.0) as usize;
            if groups.len() <= b {
                groups.resize(b + 1, Vec::new());
            }
            groups[b].push(i);
        }
        let buckets = groups
            .into_iter()
            .filter(|g| !g.is_empty())
            .map(|members| {
                let mut points = Vec::with_capacity(2 * members.len());
                let mut sigma: f64 = 1.0;
                for &i in &members {
                    let m = mats[i];
                    sigma = sigma.max(sigma_max(&m));
                    let inv = [m[3], -m[1], -m[2], m[0]];
                    let y = mul4(&inv, &target);
                    points.push((y, i));
                    points.push((y.map(|v| -v), i));
                }
                let spread = |a: usize| {
                    let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, p| {
                        (acc.0.min(p.0[a]), acc.1.max(p.0[a]))
                    });
                    hi - lo
                };
                let axis = (0..4)
                    .max_by(|&a, &b| spread(a).total_cmp(&spread(b)))
                    .expect("four axes");
                let mut keys: Vec<(f64, usize)> = points.iter().map(|p| (p.0[axis], p.1)).collect();
                keys.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                Bucket { sigma, axis, keys }
            })
            .collect();
        LeftIndex {
            target,
            mats,
            buckets,
        }
    }

    fn exact(&self, i: usize, x: &[f64; 4]) -> f64 {
        let p = mul4(&self.mats[i], x);
        let t = &self.target;
        let minus = frob(&[p[0] - t[0], p[1] - t[1], p[2] - t[2], p[3] - t[3]]);
        let plus = frob(&[p[0] + t[0], p[1] + t[1], p[2] + t[2], p[3] + t[3]]);
        minus.min(plus)
    }

    /// An upper bound on min_γ1 ‖γ1 X ∓ T‖ from a few neighbours per bucket.
    fn upper(&self, x: &[f64; 4]) -> f64 {
        self.buckets
            .iter()
            .flat_map(|b| b.near(x, 4))
            .map(|k| self.exact(k.1, x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Exact minimum over γ1 among distances ≤ bound, ties to the earliest γ1.
    fn best_within(&self, x: &[f64; 4], bound: f64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for b in &self.buckets {
            for k in b.window(x, bound * b.sigma) {
                let i = k.1;
                let d = self.exact(i, x);
                if d > bound {
                    continue;
                }
                if best.is_none_or(|(bi, bd)| d.total_cmp(&bd).then(i.cmp(&bi)).is_lt()) {
                    best = Some((i, d));
                }
            }
        }
        best
    }
}

/// Minimize max_k min_{γ_k} ‖γ_k·g_k·γ ∓ T_k‖ over γ (shared) and the γ_k,
/// all of height ≤ `height`. Exact over the enumeration, so the distance
/// never grows with the height; equal distances go to the earliest γ, then
/// the earliest γ_k, in search order.
pub fn joint_coset_approximate(gs: &[Sl2Matrix], targets: &[Sl2Matrix], height: i64) -> JointCoset {
    assert_eq!(gs.len(), targets.len(), "one target per matrix");
    let gammas = coset_gammas(height);
    if gs.is_empty() {
        return JointCoset {
            gamma: Sl2Z::IDENTITY,
            lefts: Vec::new(),
            products: Vec::new(),
            distances: Vec::new(),
            distance: 0.0,
        };
    }
    let tf: Vec<[f64; 4]> = targets.iter().map(|t| t.to_f64()).collect();
    let gf: Vec<[f64; 4]> = gs.iter().map(|g| g.to_f64()).collect();
    let scale = tf.iter().map(frob).fold(1.0, f64::max);
    let indexes: Vec<LeftIndex> = tf.iter().map(|t| LeftIndex::new(&gammas, *t)).collect();
    let right: Vec<[f64; 4]> = gammas.iter().map(|g| g.to_f64()).collect();
    // Pass 1: an upper bound from nearest neighbours.
    let bound = right
        .par_iter()
        .map(|r| {
            gf.iter()
                .zip(&indexes)
                .map(|(g, idx)| idx.upper(&mul4(g, r)))
                .fold(0.0, f64::max)
        })
        .reduce(|| f64::INFINITY, f64::min);
    let bound = bound + BOUND_SLACK * scale;
    // Pass 2: exact minimum within the bound.
    let best = right
        .par_iter()
        .enumerate()
        .filter_map(|(gi, r)| {
            let mut per = Vec::with_capacity(gf.len());
            for (g, idx) in gf.iter().zip(&indexes) {
                per.push(idx.best_within(&mul4(g, r), bound)?);
            }
            let worst = per.iter().map(|p| p.1).fold(0.0, f64::max);
            Some((worst, gi, per))
        })
        .min_by(|a, b| {
            let ka = a.2.iter().map(|p| p.0);
            let kb = b.2.iter().map(|p| p.0);
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(ka.cmp(kb))
        })
        .expect("the pass-1 bound is attained");
    let (_, gi, per) = best;
    let gamma = gammas[gi];
    let lefts: Vec<Sl2Z> = per.iter().map(|p| gammas[p.0]).collect();
    let products = lefts
        .iter()
        .zip(gs)
        .map(|(l, g)| coset_product(l, g, &gamma))
        .collect();
    let distances: Vec<f64> = per.iter().map(|p| p.1).collect();
    JointCoset {
        gamma,
        lefts,
        products,
        distance: distances.iter().cloned().fold(0.0, f64::max),
        distances,
    }
}

/// γ1·g·γ, exact whenever g is.
pub fn coset_product(gamma1: &Sl2Z, g: &Sl2Matrix, gamma: &Sl2Z) -> Sl2Matrix {
    let left = Sl2Matrix::from(*gamma1);
    let right = Sl2Matrix::from(*gamma);
    left.mul(g)
        .and_then(|m| m.mul(&right))
        .expect("integer factors share the field of g")
}

/// The element of Γ·g·Γ (heights ≤ `height`) nearest to the target.
pub fn coset_approximate(g: &Sl2Matrix, target: &Sl2Matrix, height: i64) -> CosetApproximation {
    let j = joint_coset_approximate(std::slice::from_ref(g), std::slice::from_ref(target), height);
    CosetApproximation {
        gamma1: j.lefts[0],
        gamma: j.gamma,
        product: j.products[0].clone(),
        distance: j.distance,
    }
}

// ---------------------------------------------------------------------------
// Newton–Kantorovich

/// Where the Newton iterates must stay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Plane,
    UpperHalfPlane,
}

impl Domain {
    fn contains(self, z: C) -> bool {
        match self {
            Domain::Plane => z.re.is_finite() && z.im.is_finite(),
            Domain::UpperHalfPlane => z.im > 0.0 && z.re.is_finite(),
        }
    }

    fn boundary_distance(self, z: C) -> f64 {
        match self {
            Domain::Plane => f64::INFINITY,
            Domain::UpperHalfPlane => z.im,
        }
    }
}

/// F(z), F′(z) and a bound on the rounding noise in F(z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapValue {
    pub value: C,
    pub derivative: C,
    pub noise: f64,
}

/// An analytic map together with its derivative.
pub trait AnalyticMap {
    fn eval(&self, z: C) -> Result<MapValue>;
    fn domain(&self) -> Domain {
        Domain::Plane
    }
}

/// An analytic map from a pair of closures.
pub struct FnMap<F, D> {
    pub f: F,
    pub df: D,
    pub domain: Domain,
}

impl<F, D> AnalyticMap for FnMap<F, D>
where
    F: Fn(C) -> Result<C>,
    D: Fn(C) -> Result<C>,
{
    fn eval(&self, z: C) -> Result<MapValue> {
        let value = (self.f)(z)?;
        Ok(MapValue {
            value,
            derivative: (self.df)(z)?,
            noise: 4.0 * EPS * value.norm(),
        })
    }

    fn domain(&self) -> Domain {
        self.domain
    }
}

/// The Kantorovich data checked at one iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// The iterate at which the hypotheses were checked.
    pub center: C,
    pub iteration: usize,
    /// η = |F(center)/F′(center)|.
    pub eta: f64,
    /// Sampled Lipschitz constant of F′ on the disk, times the safety factor.
    pub lipschitz: f64,
    /// |F′(center)|.
    pub derivative: f64,
    /// η·K/|F′(center)|; convergence is guaranteed for h ≤ 1/2.
    pub h: f64,
    /// Radius of the disk on which K was sampled.
    pub radius: f64,
    /// The root lies within this distance of the center.
    pub root_radius: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub z: C,
    pub residual: f64,
    pub tolerance: f64,
    pub steps: usize,
    pub certificate: Certificate,
    pub trace: Vec<f64>,
}

/// Outcome of a certified Newton run.
#[derive(Debug, Clone, PartialEq)]
pub enum Newton {
    Root(Root),
    /// The named Kantorovich quantity ("h" or "residual") failed; `z` is
    /// the last iterate and `multiplicity` the order estimated from the
    /// convergence rate when the residual reached tolerance uncertified.
    Failure {
        quantity: String,
        value: f64,
        z: C,
        multiplicity: u32,
        trace: Vec<f64>,
    },
}

fn kantorovich_check(
    map: &dyn AnalyticMap,
    z: C,
    v: &MapValue,
    room: f64,
    iteration: usize,
) -> Result<Certificate> {
    let d = v.derivative.norm();
    let eta = v.value.norm() / d;
    let room = room.min(0.9 * map.domain().boundary_distance(z));
    let r = (4.0 * eta).max(1e-9 * (1.0 + z.norm())).min(room);
    let mut k: f64 = 0.0;
    let mut prev: Option<(C, C)> = None;
    let mut first: Option<(C, C)> = None;
    for s in 0..KANTOROVICH_SAMPLES {
        let phi = 2.0 * PI * s as f64 / KANTOROVICH_SAMPLES as f64;
        let p = z + C::from_polar(r, phi);
        let dp = map.eval(p)?.derivative;
        k = k.max((dp - v.derivative).norm() / r);
        if let Some((q, dq)) = prev {
            k = k.max((dp - dq).norm() / (p - q).norm());
        }
        if first.is_none() {
            first = Some((p, dp));
        }
        prev = Some((p, dp));
    }
    if let (Some((p, dp)), Some((q, dq))) = (first, prev) {
        k = k.max((dp - dq).norm() / (p - q).norm());
    }
    let lipschitz = KANTOROVICH_SAFETY * k;
    let h = eta * lipschitz / d;
    let root_radius = if h > 0.0 && h <= 0.5 {
        (1.0 - (1.0 - 2.0 * h).sqrt()) / h * eta
    } else {
        2.0 * eta
    };
    Ok(Certificate {
        center: z,
        iteration,
        eta,
        lipschitz,
        derivative: d,
        h,
        radius: r,
        root_radius,
        holds: h <= 0.5 && root_radius <= r,
    })
}

/// Newton's method from z0 inside the disk |z − z0| ≤ radius, certified at
/// the first iterate where the Kantorovich hypotheses hold. Converges when
/// |F| ≤ max(newton_tol, rounding noise of F).
pub fn newton_kantorovich(
    map: &dyn AnalyticMap,
    z0: C,
    radius: f64,
    config: &SearchConfig,
) -> Result<Newton> {
    let domain = map.domain();
    if !domain.contains(z0) {
        return Err(Error::LeftDomain(0));
    }
    let mut z = z0;
    let mut v = map.eval(z)?;
    if v.derivative.norm() < DERIVATIVE_FLOOR {
        return Err(Error::DerivativeTooSmall(v.derivative.norm()));
    }
    let mut trace = vec![v.value.norm()];
    let mut cert: Option<Certificate> = None;
    let mut last_h = f64::INFINITY;
    let mut steps: Vec<f64> = Vec::new();
    for step in 0..=config.max_newton_steps {
        let d = v.derivative.norm();
        if d < DERIVATIVE_FLOOR {
            return Err(Error::DerivativeTooSmall(d));
        }
        if cert.is_none() {
            let room = radius - (z - z0).norm();
            let c = kantorovich_check(map, z, &v, room, step)?;
            last_h = c.h;
            if c.holds {
                cert = Some(c);
            }
        }
        let tol = config.newton_tol.max(v.noise);
        if v.value.norm() <= tol {
            if let Some(certificate) = cert {
                return Ok(Newton::Root(Root {
                    z,
                    residual: v.value.norm(),
                    tolerance: tol,
                    steps: step,
                    certificate,
                    trace,
                }));
            }
            // Linear convergence: a multiple root, where the hypotheses can
            // never hold. Polish with the multiplicity-corrected step.
            let m = multiplicity(&steps);
            let (z, _) = polish_multiple(map, z, v, m, &mut trace);
            return Ok(Newton::Failure {
                quantity: "h".into(),
                value: last_h,
                z,
                multiplicity: m,
                trace,
            });
        }
        if step == config.max_newton_steps {
            break;
        }
        let dz = v.value / v.derivative;
        steps.push(dz.norm());
        let mut t = 1.0;
        let mut best: Option<(C, MapValue)> = None;
        for _ in 0..12 {
            let zn = z - dz * t;
            if domain.contains(zn) && (zn - z0).norm() <= radius {
                if let Ok(vn) = map.eval(zn) {
                    let better = best.is_none_or(|(_, b)| vn.value.norm() < b.value.norm());
                    if better {
                        best = Some((zn, vn));
                    }
                    if vn.value.norm() < v.value.norm() {
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        let Some((zn, vn)) = best else {
            return Err(Error::LeftDomain(step + 1));
        };
        z = zn;
        v = vn;
        trace.push(v.value.norm());
    }
    Ok(Newton::Failure {
        quantity: if cert.is_some() { "residual" } else { "h" }.into(),
        value: if cert.is_some() { v.value.norm() } else { last_h },
        z,
        multiplicity: multiplicity(&steps),
        trace,
    })
}

/// Root order from the ratio r of the last Newton steps: r = (m − 1)/m.
fn multiplicity(steps: &[f64]) -> u32 {
    match steps {
        [.., a, b] if *a > 0.0 => {
            let r = (b / a).min(0.95);
            (1.0 / (1.0 - r)).round().clamp(1.0, 8.0) as u32
        }
        _ => 1,
    }
}

/// Steps z − m·F/F′ while |F| keeps decreasing.
fn polish_multiple(
    map: &dyn AnalyticMap,
    mut z: C,
    mut v: MapValue,
    m: u32,
    trace: &mut Vec<f64>,
) -> (C, MapValue) {
    for _ in 0..16 {
        if v.derivative.norm() == 0.0 {
            break;
        }
        let zn = z - v.value / v.derivative * m as f64;
        if !map.domain().contains(zn) {
            break;
        }
        match map.eval(zn) {
            Ok(vn) if vn.value.norm() < v.value.norm() => {
                z = zn;
                v = vn;
                trace.push(v.value.norm());
            }
            _ => break,
        }
    }
    (z, v)
}

// ---------------------------------------------------------------------------
// Maps z ↦ f(j(m_1 z), …, j(m_n z)) and their j′ analogues

/// Which function the coordinates carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessMode {
    /// w_k = j(m_k z).
    J,
    /// w_k = j′(m_k z)/(c_k z + d_k)², the first jet of j along m_k.
    Jprime,
}

/// Coordinates w_k(z) with their z-derivatives and error bounds.
struct Coordinates {
    w: Vec<C>,
    dw: Vec<C>,
    err: Vec<f64>,
}

fn coordinates(mode: WitnessMode, mats: &[Sl2Matrix], z: C) -> Result<Coordinates> {
    let mut out = Coordinates {
        w: Vec::with_capacity(mats.len()),
        dw: Vec::with_capacity(mats.len()),
        err: Vec::with_capacity(mats.len()),
    };
    for m in mats {
        let jet = modular::jet_image(m, z)?;
        let f = halfplane::factor_dd(&m.to_dd(), CDd::from_c64(z)).to_c64();
        let c = m.to_f64()[2];
        let f2 = f * f;
        match mode {
            WitnessMode::J => {
                out.w.push(jet.j);
                out.dw.push(jet.dj / f2);
                out.err.push(jet.ej);
            }
            WitnessMode::Jprime => {
                out.w.push(jet.dj / f2);
                out.dw.push(jet.d2j / (f2 * f2) - 2.0 * c * jet.dj / (f2 * f));
                out.err.push(jet.edj / f2.norm() + 4.0 * EPS * (jet.dj / f2).norm());
            }
        }
    }
    Ok(out)
}

/// z ↦ f(w_1(z), …, w_n(z)) on ℍ.
struct WitnessMap<'a> {
    mode: WitnessMode,
    f: &'a Poly,
    mats: &'a [Sl2Matrix],
}

impl AnalyticMap for WitnessMap<'_> {
    fn eval(&self, z: C) -> Result<MapValue> {
        if z.im <= 0.0 {
            return Err(Error::NotInUpperHalfPlane(format!("{z}")));
        }
        let co = coordinates(self.mode, self.mats, z)?;
        let grad = self.f.gradient(&co.w);
        let value = self.f.eval(&co.w);
        let derivative = grad.iter().zip(&co.dw).map(|(g, d)| g * d).sum();
        let noise = grad.iter().zip(&co.err).map(|(g, e)| g.norm() * e).sum::<f64>()
            + 16.0 * EPS * self.f.eval_abs(&co.w);
        Ok(MapValue {
            value,
            derivative,
            noise,
        })
    }

    fn domain(&self) -> Domain {
        Domain::UpperHalfPlane
    }
}

// ---------------------------------------------------------------------------
// Witnesses

/// One coordinate's coset element γ_k·g_k·γ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosetFactor {
    /// 1-based coordinate index.
    pub coordinate: usize,
    pub left: Sl2Z,
    pub link: Sl2Matrix,
    pub right: Sl2Z,
    pub product: Sl2Matrix,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightStep {
    pub height: i64,
    pub best_distance: f64,
}

/// Search statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub seed: u64,
    pub attempts: usize,
    pub newton_steps: usize,
    /// Every residual of the witness is at most this.
    pub tolerance: f64,
    pub heights: Vec<HeightStep>,
    /// |F| after each Newton step of the successful runs.
    pub residual_trace: Vec<f64>,
}

/// A point of L whose image lies on W.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub mode: WitnessMode,
    /// Base parameter of each component (its root coordinate).
    pub z: Vec<HPoint>,
    /// The full point of ℍⁿ.
    pub coordinates: Vec<HPoint>,
    /// Coset elements that seeded the search, per linked coordinate.
    pub matrices: Vec<CosetFactor>,
    /// The image point in ℂⁿ.
    pub point: Vec<C>,
    /// Bound on the evaluation error of each coordinate of `point`.
    pub error_bounds: Vec<f64>,
    /// |P(point)| per defining polynomial of W.
    pub residuals: Vec<f64>,
    pub certificates: Vec<Certificate>,
    pub verdicts: Option<PairVerdict>,
    pub budget_used: Budget,
}

impl Witness {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}

fn complex_normal(rng: &mut impl Rng) -> C {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C::new(re, im)
}

/// The system cut by `excess` random hyperplanes through p, and a random
/// combination of its equations.
fn cut_and_combine(w: &PolySystem, p: &[C], excess: usize, rng: &mut impl Rng) -> Result<Poly> {
    let n = w.n();
    let mut polys: Vec<Poly> = w.polys().to_vec();
    for _ in 0..excess {
        let a: Vec<C> = (0..n).map(|_| complex_normal(rng)).collect();
        let b = -a.iter().zip(p).map(|(x, y)| x * y).sum::<C>();
        polys.push(Poly::linear(&a, b));
    }
    if polys.is_empty() {
        return Err(Error::PreconditionFailed("no equations to solve".into()));
    }
    if polys.len() == 1 {
        return Ok(polys.pop().expect("one"));
    }
    // Normalize each equation at p so that no single one dominates.
    let mut f = Poly::zero(n);
    for q in &polys {
        let s = q.gradient(p).iter().map(|g| g.norm()).fold(0.0, f64::max).max(1e-300);
        f = f.add(&q.scale(complex_normal(rng) / s));
    }
    Ok(f)
}

fn residuals(w: &PolySystem, point: &[C]) -> Vec<f64> {
    w.polys().iter().map(|p| p.eval(point).norm()).collect()
}

/// Rounding floor of the residuals of W at a computed point.
fn residual_noise(w: &PolySystem, point: &[C], err: &[f64]) -> f64 {
    w.polys()
        .iter()
        .map(|p| {
            let g = p.gradient(point);
            g.iter().zip(err).map(|(a, e)| a.norm() * e).sum::<f64>()
                + 16.0 * EPS * p.eval_abs(point)
        })
        .fold(0.0, f64::max)
}

/// One Gauss–Newton pass on the full system along the one-parameter family,
/// used to polish a root of the random combination.
fn polish(mode: WitnessMode, w: &PolySystem, mats: &[Sl2Matrix], z: C) -> C {
    let mut z = z;
    for _ in 0..3 {
        let Ok(co) = coordinates(mode, mats, z) else { return z };
        let f: Vec<C> = w.polys().iter().map(|p| p.eval(&co.w)).collect();
        let jz: Vec<C> = w
            .polys()
            .iter()
            .map(|p| p.gradient(&co.w).iter().zip(&co.dw).map(|(g, d)| g * d).sum())
            .collect();
        let den: f64 = jz.iter().map(|v| v.norm_sqr()).sum();
        if den == 0.0 {
            return z;
        }
        let num: C = jz.iter().zip(&f).map(|(a, b)| a.conj() * b).sum();
        let zn = z - num / den;
        let before: f64 = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let after = coordinates(mode, mats, zn)
            .map(|c| w.polys().iter().map(|p| p.eval(&c.w).norm()).fold(0.0, f64::max))
            .unwrap_or(f64::INFINITY);
        if zn.im <= 0.0 || after >= before {
            return z;
        }
        z = zn;
    }
    z
}

/// A component with its coordinates renumbered 0..k in index order.
fn local_component(c: &Component) -> (Component, Vec<usize>) {
    let global: Vec<usize> = c.indices().collect();
    let pos = |k: usize| global.iter().position(|&g| g == k).expect("member");
    (
        Component {
            root: pos(c.root),
            members: c.members.iter().map(|(k, m)| (pos(*k), m.clone())).collect(),
            pin: c.pin,
        },
        global,
    )
}

/// Matrices per local coordinate: m_k with the root's identity.
fn component_matrices(c: &Component, n: usize) -> Vec<Sl2Matrix> {
    let mut mats = vec![Sl2Matrix::identity(); n];
    for (k, m) in &c.members {
        mats[*k] = m.clone();
    }
    mats
}

/// Derivative repair: θ_k on each connecting circle maximizing
/// |∂f/∂w_root·j′(z1) + Σ_k ∂f/∂w_k·j′(z_k)·(y_k/y1)·e^{2iθ_k}|, the
/// derivative at z1 of f along the family (h_k z)_k.
fn repair_thetas(grad: &[C], root: usize, jp: &[C], ys: &[f64]) -> (Vec<f64>, f64) {
    let n = grad.len();
    let thetas: Vec<f64> = (0..THETA_SCAN)
        .map(|s| PI * s as f64 / THETA_SCAN as f64 * 2.0)
        .collect();
    let term = |k: usize, th: f64| grad[k] * jp[k] * (ys[k] / ys[root]) * C::from_polar(1.0, 2.0 * th);
    let mut choice = vec![0.0; n];
    let total = |choice: &[f64]| -> C {
        (0..n)
            .map(|k| if k == root { grad[k] * jp[k] } else { term(k, choice[k]) })
            .sum()
    };
    for _ in 0..2 {
        for k in (0..n).filter(|&k| k != root) {
            let mut best = (f64::NEG_INFINITY, 0.0);
            for &th in &thetas {
                choice[k] = th;
                let v = total(&choice).norm();
                if v > best.0 {
                    best = (v, th);
                }
            }
            choice[k] = best.1;
        }
    }
    let v = total(&choice).norm();
    (choice, v)
}

struct Partial {
    z: C,
    mats: Vec<Sl2Matrix>,
    cosets: Vec<CosetFactor>,
    certificate: Option<Certificate>,
    heights: Vec<HeightStep>,
    trace: Vec<f64>,
    steps: usize,
    attempts: usize,
}

/// Build the witness record of a single component from its solution.
fn finish(
    mode: WitnessMode,
    w: &PolySystem,
    global: &[usize],
    p: Partial,
    seed: u64,
    tol: f64,
) -> Result<Witness> {
    let co = coordinates(mode, &p.mats, p.z)?;
    let res = residuals(w, &co.w);
    let noise = residual_noise(w, &co.w, &co.err);
    let tolerance = tol.max(noise);
    let worst = res.iter().cloned().fold(0.0, f64::max);
    if worst > tolerance {
        return Err(Error::SearchExhausted {
            best_residual: worst,
        });
    }
    let zh = HPoint::from_c64(p.z)?;
    let coordinates = p
        .mats
        .iter()
        .map(|m| moebius_apply(m, zh))
        .collect::<Result<Vec<_>>>()?;
    let mut cosets = p.cosets;
    for c in cosets.iter_mut() {
        c.coordinate = global[c.coordinate] + 1;
    }
    Ok(Witness {
        mode,
        z: vec![zh],
        coordinates,
        matrices: cosets,
        point: co.w,
        error_bounds: co.err,
        residuals: res,
        certificates: p.certificate.into_iter().collect(),
        verdicts: None,
        budget_used: Budget {
            seed,
            attempts: p.attempts,
            newton_steps: p.steps,
            tolerance,
            heights: p.heights,
            residual_trace: p.trace,
        },
    })
}

/// A polynomial a·X_i + b of W, as (i, −b/a).
fn constant_coordinate(w: &PolySystem) -> Option<(usize, C)> {
    w.polys().iter().find_map(|p| {
        let s = p.support();
        if s.len() != 1 || p.degree() != 1 {
            return None;
        }
        let i = s[0];
        let mut a = C::new(0.0, 0.0);
        let mut b = C::new(0.0, 0.0);
        for (e, c) in p.terms() {
            if e[i] == 1 {
                a = *c;
            } else {
                b = *c;
            }
        }
        Some((i, -b / a))
    })
}

/// The one-component search on a system whose variables are the component's
/// coordinates in index order.
fn search_component(
    comp: &Component,
    w: &PolySystem,
    config: &SearchConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Partial> {
    let n = w.n();
    let root = comp.root;
    let mats = component_matrices(comp, n);
    let mode = WitnessMode::J;
    // An equation X_i = c fixes z_i up to Γ.
    if let Some((i, c)) = constant_coordinate(w) {
        if let Ok(zi) = j_invert(c, 1e-13) {
            let gammas = coset_gammas(config.height_schedule[0]);
            let gamma = gammas[rng.random_range(0..gammas.len())];
            let zi = Sl2Z::apply(&gamma, zi);
            let z = moebius_apply(&mats[i].inverse(), zi)?;
            let co = coordinates(mode, &mats, z.to_c64())?;
            let worst = residuals(w, &co.w).into_iter().fold(0.0, f64::max);
            if worst <= config.newton_tol.max(residual_noise(w, &co.w, &co.err)) {
                return Ok(Partial {
                    z: z.to_c64(),
                    mats,
                    cosets: Vec::new(),
                    certificate: None,
                    heights: Vec::new(),
                    trace: vec![worst],
                    steps: 0,
                    attempts: 1,
                });
            }
        }
    }
    let dim_w = w.dimension(rng)?;
    if 1 + dim_w < n {
        return Err(Error::PreconditionFailed(format!(
            "dim L + dim W = {} < {n}",
            1 + dim_w
        )));
    }
    let excess = dim_w + 1 - n;
    let avoid = [C::new(0.0, 0.0), C::new(1728.0, 0.0)];
    let links: Vec<usize> = (0..n).filter(|&k| k != root).collect();
    let mut best_residual = f64::INFINITY;
    let mut heights = Vec::new();
    for attempt in 1..=config.retries {
        let Ok(p) = regular_point_sample(w, &avoid, rng) else { continue };
        let f = cut_and_combine(w, &p, excess, rng)?;
        let Ok(zs) = p
            .iter()
            .map(|&v| j_invert(v, 1e-12).map(|z| z.to_c64()))
            .collect::<Result<Vec<C>>>()
        else {
            continue;
        };
        let grad = f.gradient(&p);
        let jp: Vec<C> = zs
            .iter()
            .map(|&z| modular::jet(z).map(|t| t.dj))
            .collect::<Result<_>>()?;
        let ys: Vec<f64> = zs.iter().map(|z| z.im).collect();
        let (thetas, dmax) = repair_thetas(&grad, root, &jp, &ys);
        if dmax < DERIVATIVE_REPAIR_FLOOR {
            continue;
        }
        let z1 = HPoint::from_c64(zs[root])?;
        let targets: Vec<Sl2Matrix> = links
            .iter()
            .map(|&k| connecting_matrix(z1, HPoint::from_c64(zs[k]).expect("in H"), thetas[k]))
            .collect();
        let gs: Vec<Sl2Matrix> = links.iter().map(|&k| mats[k].clone()).collect();
        for &h in &config.height_schedule {
            let jc = joint_coset_approximate(&gs, &targets, h);
            heights.push(HeightStep {
                height: h,
                best_distance: jc.distance,
            });
            let z0 = Sl2Z::apply(&jc.gamma, z1).to_c64();
            let map = WitnessMap {
                mode,
                f: &f,
                mats: &mats,
            };
            match newton_kantorovich(&map, z0, 0.5 * z0.im, config) {
                Ok(Newton::Root(r)) => {
                    let z = polish(mode, w, &mats, r.z);
                    let co = coordinates(mode, &mats, z)?;
                    let res = residuals(w, &co.w).into_iter().fold(0.0, f64::max);
                    best_residual = best_residual.min(res);
                    if res > config.newton_tol.max(residual_noise(w, &co.w, &co.err)) {
                        continue;
                    }
                    let cosets = links
                        .iter()
                        .enumerate()
                        .map(|(t, &k)| CosetFactor {
                            coordinate: k,
                            left: jc.lefts[t],
                            link: mats[k].clone(),
                            right: jc.gamma,
                            product: jc.products[t].clone(),
                            distance: jc.distances[t],
                        })
                        .collect();
                    return Ok(Partial {
                        z,
                        mats,
                        cosets,
                        certificate: Some(r.certificate),
                        heights,
                        steps: r.steps,
                        trace: r.trace,
                        attempts: attempt,
                    });
                }
                Ok(Newton::Failure { trace, .. }) => {
                    best_residual = trace.iter().cloned().fold(best_residual, f64::min);
                }
                Err(_) => {}
            }
        }
    }
    Err(Error::SearchExhausted { best_residual })
}

/// Witness for a one-dimensional free L: a regular point of W, its
/// j-preimages, connecting matrices with derivative repair, a shared right
/// coset factor, then certified Newton along L.
pub fn j_witness_1d(l: &MoebiusVariety, w: &PolySystem, config: &SearchConfig) -> Result<Witness> {
    config.validate()?;
    if w.n() != l.n() {
        return Err(Error::InvalidInput(format!(
            "L lives in H^{} but W in C^{}",
            l.n(),
            w.n()
        )));
    }
    if l.components().len() != 1 || l.dim() != 1 {
        return Err(Error::PreconditionFailed(
            "L must be a single unpinned component".into(),
        ));
    }
    let free = domain_freeness(l);
    if !free.is_ok() {
        return Err(Error::PreconditionFailed(format!("L is not free: {free:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let comp = &l.components()[0];
    let global: Vec<usize> = comp.indices().collect();
    let p = search_component(comp, w, config, &mut rng)?;
    finish(WitnessMode::J, w, &global, p, config.seed, config.newton_tol)
}

fn describe(v: &PairVerdict) -> String {
    let mut out = Vec::new();
    for (name, verdict) in [
        ("domain freeness", &v.free_domain),
        ("codomain freeness", &v.free_codomain),
        ("broadness", &v.broad),
    ] {
        if let Verdict::Fail(e) = verdict {
            out.push(format!("{name} failed ({e:?})"));
        }
    }
    out.join("; ")
}

/// Restrict polynomials to the variables in `keep` when they only involve
/// those; others are dropped.
fn restrict(w: &PolySystem, keep: &[usize]) -> Result<PolySystem> {
    let mask: Vec<Option<C>> = (0..w.n())
        .map(|k| if keep.contains(&k) { None } else { Some(C::new(0.0, 0.0)) })
        .collect();
    let polys = w
        .polys()
        .iter()
        .filter(|p| p.support().iter().all(|v| keep.contains(v)))
        .map(|p| p.substitute(&mask))
        .collect();
    PolySystem::new(keep.len(), polys)
}

/// Recursive search over the components of L (each with its coordinate set);
/// `vars` lists the global coordinates that W's variables stand for.
fn solve(
    comps: &[Component],
    vars: &[usize],
    w: &PolySystem,
    config: &SearchConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Witness> {
    let pos = |k: usize| vars.iter().position(|&v| v == k).expect("covered");
    if comps.len() == 1 {
        let (local, global) = local_component(&comps[0]);
        // W's variables are already this component's coordinates in order.
        let p = search_component(&local, w, config, rng)?;
        let mut wit = finish(WitnessMode::J, w, &global, p, config.seed, config.newton_tol)?;
        wit.matrices.iter_mut().for_each(|c| c.coordinate = vars[c.coordinate - 1] + 1);
        return Ok(wit);
    }
    let (head, last) = comps.split_at(comps.len() - 1);
    let last = &last[0];
    let mut head_vars: Vec<usize> = head.iter().flat_map(|c| c.indices()).collect();
    head_vars.sort_unstable();
    let last_vars: Vec<usize> = last.indices().collect();
    let head_local: Vec<usize> = head_vars.iter().map(|&k| pos(k)).collect();
    let projected = restrict(w, &head_local)?;
    // The equations in the head coordinates must cut out the projection.
    let proj_dim = w.projection_dims(&[head_local.clone()], rng)?[0];
    let cut_dim = projected.dimension(rng)?;
    if proj_dim != cut_dim {
        return Err(Error::PreconditionFailed(format!(
            "the projection of W to coordinates {:?} (dimension {proj_dim}) is not cut out by \
             the equations in those coordinates (dimension {cut_dim})",
            head_vars.iter().map(|k| k + 1).collect::<Vec<_>>()
        )));
    }
    let mut best_residual = f64::INFINITY;
    let mut attempts = 0;
    for _ in 0..config.retries {
        attempts += 1;
        let partial = match solve(head, &head_vars, &projected, config, rng) {
            Ok(p) => p,
            Err(Error::SearchExhausted { best_residual: b }) => {
                best_residual = best_residual.min(b);
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut values: Vec<Option<C>> = vec![None; w.n()];
        for (t, &k) in head_vars.iter().enumerate() {
            values[pos(k)] = Some(partial.point[t]);
        }
        let fiber = w.substitute(&values, FIBER_DROP_TOL)?;
        // A nonzero constant means the fiber is empty.
        if fiber
            .polys()
            .iter()
            .any(|p| p.as_constant().is_some_and(|c| c.norm() > partial.budget_used.tolerance * 1e3))
        {
            continue;
        }
        let fiber = PolySystem::new(
            fiber.n(),
            fiber.polys().iter().filter(|p| p.as_constant().is_none()).cloned().collect(),
        )?;
        let (local, _) = local_component(last);
        let tail = match search_component(&local, &fiber, config, rng) {
            Ok(t) => t,
            Err(Error::SearchExhausted { best_residual: b }) => {
                best_residual = best_residual.min(b);
                continue;
            }
            Err(Error::PreconditionFailed(_)) | Err(Error::DimensionSamplingFailed(_)) => continue,
            Err(e) => return Err(e),
        };
        let tail = finish(WitnessMode::J, &fiber, &last_vars, tail, config.seed, config.newton_tol);
        let Ok(tail) = tail else { continue };
        // Merge in the order of `vars`.
        let mut point = vec![C::new(0.0, 0.0); vars.len()];
        let mut coords = vec![HPoint::i(); vars.len()];
        let mut error_bounds = vec![0.0; vars.len()];
        for (t, &k) in head_vars.iter().enumerate() {
            point[pos(k)] = partial.point[t];
            coords[pos(k)] = partial.coordinates[t];
            error_bounds[pos(k)] = partial.error_bounds[t];
        }
        for (t, &k) in last_vars.iter().enumerate() {
            point[pos(k)] = tail.point[t];
            coords[pos(k)] = tail.coordinates[t];
            error_bounds[pos(k)] = tail.error_bounds[t];
        }
        let res = residuals(w, &point);
        let worst = res.iter().cloned().fold(0.0, f64::max);
        let tolerance = partial.budget_used.tolerance.max(tail.budget_used.tolerance);
        best_residual = best_residual.min(worst);
        if worst > tolerance {
            continue;
        }
        let mut matrices = partial.matrices;
        matrices.extend(tail.matrices);
        let mut z = partial.z;
        z.extend(tail.z);
        let mut certificates = partial.certificates;
        certificates.extend(tail.certificates);
        let mut heights = partial.budget_used.heights;
        heights.extend(tail.budget_used.heights);
        let mut trace = partial.budget_used.residual_trace;
        trace.extend(tail.budget_used.residual_trace);
        return Ok(Witness {
            mode: WitnessMode::J,
            z,
            coordinates: coords,
            matrices,
            point,
            error_bounds,
            residuals: res,
            certificates,
            verdicts: None,
            budget_used: Budget {
                seed: config.seed,
                attempts: attempts + partial.budget_used.attempts + tail.budget_used.attempts,
                newton_steps: partial.budget_used.newton_steps + tail.budget_used.newton_steps,
                tolerance,
                heights,
                residual_trace: trace,
            },
        });
    }
    Err(Error::SearchExhausted { best_residual })
}

/// Witness for a free broad pair (L, W). Splits off the last component of
/// L, solves the projected problem, restricts W to the fiber over the
/// partial witness and solves the last component there; the base case is
/// the one-dimensional search.
pub fn j_witness(l: &MoebiusVariety, w: &PolySystem, config: &SearchConfig) -> Result<Witness> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    check_shape(l, w, config)?;
    let verdicts = pair_verdict(l, w, &mut rng)?;
    if !verdicts.all_ok() {
        return Err(Error::PredicateFailed(describe(&verdicts)));
    }
    let vars: Vec<usize> = (0..l.n()).collect();
    let mut wit = solve(l.components(), &vars, w, config, &mut rng)?;
    wit.verdicts = Some(verdicts);
    Ok(wit)
}

/// `j_witness` without the predicate checks, for exploring pairs outside
/// the theorem's hypotheses.
pub fn j_witness_unchecked(l: &MoebiusVariety, w: &PolySystem, config: &SearchConfig) -> Result<Witness> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    check_shape(l, w, config)?;
    let vars: Vec<usize> = (0..l.n()).collect();
    solve(l.components(), &vars, w, config, &mut rng)
}

fn check_shape(l: &MoebiusVariety, w: &PolySystem, config: &SearchConfig) -> Result<()> {
    config.validate()?;
    if w.n() != l.n() {
        return Err(Error::InvalidInput(format!(
            "L lives in H^{} but W in C^{}",
            l.n(),
            w.n()
        )));
    }
    if l.n() > 1 {
        if let Some(c) = l.components().iter().find(|c| c.members.len() == 1 && c.pin.is_none()) {
            return Err(Error::PredicateFailed(format!(
                "coordinate {} is neither linked nor pinned",
                c.root + 1
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// The blurred j′ witness

/// A point u with |j′(u)|·Im u = level. The left side is Γ-invariant,
/// vanishes at i and grows without bound towards the cusp, so every segment
/// from i to x + 6i (|x| ≤ 1/2, inside the fundamental domain) crosses the
/// level; the abscissa is seeded and the crossing found by bisection.
fn level_set_point(level: f64, rng: &mut impl Rng) -> Result<C> {
    if level == 0.0 {
        return Ok(C::new(0.0, 1.0));
    }
    let start = C::new(0.0, 1.0);
    let phi = |u: C| -> Result<f64> { Ok(modular::jet(u)?.dj.norm() * u.im - level) };
    for _ in 0..THETA_SCAN {
        let end = C::new(rng.random::<f64>() - 0.5, 6.0);
        let at = |s: f64| start + (end - start) * s;
        if phi(at(1.0))? <= 0.0 {
            continue;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if phi(at(mid))? <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Ok(at(0.5 * (lo + hi)));
    }
    Err(Error::LevelSetEmpty)
}

/// Witness of the jet map on the blurring of L: z2 = g·z1. Find z1 with j′(z1) = w1,
/// a point u on the level set |j′(u)|·Im u = |w2|·Im z1 and the matrix h
/// with h·z1 = u whose jet lands on w2; approximate h in Γ·g·Γ and run
/// certified Newton on z ↦ f(j′(z), j′(g*z)/(cz + d)²).
pub fn blur_t1j_witness(l: &MoebiusVariety, w: &PolySystem, config: &SearchConfig) -> Result<Witness> {
    config.validate()?;
    if l.n() != 2 || w.n() != 2 || l.components().len() != 1 || l.dim() != 1 {
        return Err(Error::PreconditionFailed(
            "the blurred search needs L of the form z2 = g z1 in H^2".into(),
        ));
    }
    let free = domain_freeness(l);
    if !free.is_ok() {
        return Err(Error::PreconditionFailed(format!("L is not free: {free:?}")));
    }
    let comp = &l.components()[0];
    let g = comp.members[1].1.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let dim_w = w.dimension(&mut rng)?;
    if dim_w == 0 {
        return Err(Error::PreconditionFailed("dim L + dim W = 1 < 2".into()));
    }
    let excess = dim_w - 1;
    let mode = WitnessMode::Jprime;
    let mut best_residual = f64::INFINITY;
    let mut heights = Vec::new();
    for attempt in 1..=config.retries {
        let Ok(p) = regular_point_sample(w, &[], &mut rng) else { continue };
        let f = cut_and_combine(w, &p, excess, &mut rng)?;
        let Ok(z1) = jprime_invert(p[0], 1e-12) else { continue };
        let y1 = z1.im;
        let u = match level_set_point(p[1].norm() * y1, &mut rng) {
            Ok(u) => u,
            Err(_) => continue,
        };
        let jet_u = modular::jet(u)?;
        let theta = if p[1].norm() == 0.0 {
            2.0 * PI * rng.random::<f64>()
        } else {
            0.5 * (p[1] * y1 / (jet_u.dj * u.im)).arg()
        };
        let h = connecting_matrix(z1, HPoint::from_c64(u)?, theta);
        // The derivative of G at z1 for the exact matrix h.
        let grad = f.gradient(&p);
        let fac = halfplane::automorphy_factor(&h, z1);
        let hc = h.to_f64()[2];
        let jet1 = modular::jet(z1.to_c64())?;
        let dg = grad[0] * jet1.d2j
            + grad[1] * (jet_u.d2j / fac.powi(4) - 2.0 * hc * jet_u.dj / fac.powi(3));
        if dg.norm() < DERIVATIVE_REPAIR_FLOOR {
            continue;
        }
        for &height in &config.height_schedule {
            let ca = coset_approximate(&g, &h, height);
            heights.push(HeightStep {
                height,
                best_distance: ca.distance,
            });
            let mats = vec![Sl2Matrix::identity(), ca.product.clone()];
            let map = WitnessMap {
                mode,
                f: &f,
                mats: &mats,
            };
            let z0 = z1.to_c64();
            match newton_kantorovich(&map, z0, 0.5 * z0.im, config) {
                Ok(Newton::Root(r)) => {
                    let z = polish(mode, w, &mats, r.z);
                    let co = coordinates(mode, &mats, z)?;
                    let res = residuals(w, &co.w).into_iter().fold(0.0, f64::max);
                    best_residual = best_residual.min(res);
                    if res > config.newton_tol.max(residual_noise(w, &co.w, &co.err)) {
                        continue;
                    }
                    let partial = Partial {
                        z,
                        mats,
                        cosets: vec![CosetFactor {
                            coordinate: 1,
                            left: ca.gamma1,
                            link: g.clone(),
                            right: ca.gamma,
                            product: ca.product.clone(),
                            distance: ca.distance,
                        }],
                        certificate: Some(r.certificate),
                        heights,
                        trace: r.trace,
                        steps: r.steps,
                        attempts: attempt,
                    };
                    return finish(mode, w, &[0, 1], partial, config.seed, config.newton_tol);
                }
                Ok(Newton::Failure { trace, .. }) => {
                    best_residual = trace.iter().cloned().fold(best_residual, f64::min);
                }
                Err(_) => {}
            }
        }
    }
    Err(Error::SearchExhausted { best_residual })
}

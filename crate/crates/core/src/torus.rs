//! Complex tori ℂ^g/Λ: lattices and their duals, density of L + Λ, the
//! Weierstrass parametrization of an elliptic curve, rotundity on E^g and the
//! exp(L) ∩ W witness search.

use crate::config::{
    SearchConfig, AVOID_DISTANCE, DENSITY_HEIGHT, DENSITY_RESIDUAL_TOL, DIMENSION_SAMPLES,
    GEOMETRIC_TOL, POLE_GUARD, RANK_TOL,
};
use crate::error::{Error, Result};
use crate::expr;
use crate::halfplane::{reduce_to_fundamental_domain, HPoint};
use crate::poly::Poly;
use crate::search::{newton_kantorovich, Certificate, Domain, FnMap, Newton};
use crate::scalar::{common_disc, ExactComplex, Quad};
use crate::varieties::PolySystem;
use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Interleaved real coordinates (x1, y1, …, xg, yg).
fn to_real(v: &[Complex64]) -> Vec<f64> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

fn from_real(r: &[f64]) -> Vec<Complex64> {
    r.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect()
}

/// ⟨a, b⟩ = Re Σ a_i conj(b_i), the real scalar product on ℝ^{2g}.
pub fn pairing(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x * y.conj()).re).sum()
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let hi = sv.iter().cloned().fold(0.0, f64::max);
    let lo = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

// ---------------------------------------------------------------------------
// Exact linear algebra over ℚ(√D)

/// Gauss–Jordan inverse of a square matrix over one field ℚ(√D).
fn quad_inverse(m: &[Vec<Quad>]) -> Option<Vec<Vec<Quad>>> {
    let n = m.len();
    let mut a: Vec<Vec<Quad>> = m
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let mut v = row.clone();
            v.extend((0..n).map(|k| if k == r { Quad::one() } else { Quad::zero() }));
            v
        })
        .collect();
    for col in 0..n {
        let p = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, p);
        let inv = a[col][col].recip()?;
        for x in a[col].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for k in 0..2 * n {
                    let t = &f * &a[col][k];
                    a[r][k] = &a[r][k] - &t;
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Basis of the rational kernel {x : Σ_k rows[r][k] x_k = 0}.
fn rational_kernel(rows: &[Vec<BigRational>], ncols: usize) -> Vec<Vec<BigRational>> {
    let mut a: Vec<Vec<BigRational>> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..ncols {
        let Some(p) = (r..a.len()).find(|&i| !a[i][col].is_zero()) else { continue };
        a.swap(r, p);
        let inv = a[r][col].recip();
        for x in a[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..a.len() {
            if i != r && !a[i][col].is_zero() {
                let f = a[i][col].clone();
                for k in 0..ncols {
                    let t = &f * &a[r][k];
                    a[i][k] = &a[i][k] - &t;
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    let free: Vec<usize> = (0..ncols).filter(|k| !pivots.contains(k)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); ncols];
            v[f] = BigRational::one();
            for (row, &p) in pivots.iter().enumerate() {
                v[p] = -a[row][f].clone();
            }
            v
        })
        .collect()
}

/// Primitive integer multiple of a rational vector.
fn primitive_integer(v: &[BigRational]) -> Option<Vec<i64>> {
    let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * &l).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return None;
    }
    let lead_neg = ints.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative());
    ints.iter()
        .map(|x| {
            let y = x / &g;
            (if lead_neg { -y } else { y }).to_i64()
        })
        .collect()
}

/// Split a real element of ℚ(√D) into its rational coordinates.
fn quad_coords(q: &Quad) -> [BigRational; 2] {
    [q.rat.clone(), q.irr.clone()]
}

// ---------------------------------------------------------------------------
// Bounded integer kernels

/// Smallest (in sup norm) nonzero integer vector n with |n|∞ ≤ height and
/// A·n ≈ 0. Enumerates the free coordinates of a row echelon form and
/// rounds the pivot coordinates. Returns the vector and the height that
/// was actually searched (capped so the enumeration stays bounded).
pub fn integer_kernel_search(a: &DMatrix<f64>, height: i64, tol: f64) -> (Option<Vec<i64>>, i64) {
    let n = a.ncols();
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    let mut m = a / scale;
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for col in 0..n {
        if r == m.nrows() {
            break;
        }
        let (p, best) = (r..m.nrows())
            .map(|i| (i, m[(i, col)].abs()))
            .fold((r, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= RANK_TOL {
            continue;
        }
        m.swap_rows(r, p);
        let piv = m[(r, col)];
        for k in 0..n {
            m[(r, k)] /= piv;
        }
        for i in 0..m.nrows() {
            if i != r {
                let f = m[(i, col)];
                if f != 0.0 {
                    for k in 0..n {
                        m[(i, k)] -= f * m[(r, k)];
                    }
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    let free: Vec<usize> = (0..n).filter(|k| !pivots.contains(k)).collect();
    if free.is_empty() {
        return (None, height);
    }
    let budget = 2.0e7f64;
    let cap = ((budget.powf(1.0 / free.len() as f64) - 1.0) / 2.0).floor() as i64;
    let h = height.min(cap.max(1));
    let check = |x: &[i64]| -> bool {
        let norm = x.iter().map(|v| (*v as f64).abs()).fold(0.0, f64::max);
        (0..a.nrows()).all(|row| {
            let s: f64 = (0..n).map(|k| a[(row, k)] * x[k] as f64).sum();
            s.abs() <= tol * scale * norm.max(1.0)
        })
    };
    let mut free_vals = vec![0i64; free.len()];
    for s in 1..=h {
        // All free vectors of sup norm exactly s, in lexicographic order.
        let side = (2 * s + 1) as usize;
        let total = side.pow(free.len() as u32);
        for idx in 0..total {
            let mut t = idx;
            let mut on_shell = false;
            for v in free_vals.iter_mut() {
                *v = (t % side) as i64 - s;
                t /= side;
                on_shell |= v.abs() == s;
            }
            if !on_shell {
                continue;
            }
            let mut x = vec![0i64; n];
            for (k, &f) in free.iter().enumerate() {
                x[f] = free_vals[k];
            }
            let mut ok = true;
            for (row, &p) in pivots.iter().enumerate() {
                let v: f64 = -free
                    .iter()
                    .enumerate()
                    .map(|(k, &f)| m[(row, f)] * free_vals[k] as f64)
                    .sum::<f64>();
                let rv = v.round();
                if (v - rv).abs() > 1e-6 || rv.abs() > h as f64 {
                    ok = false;
                    break;
                }
                x[p] = rv as i64;
            }
            if ok && check(&x) {
                return (Some(x), h);
            }
        }
    }
    (None, h)
}

// ---------------------------------------------------------------------------
// Lattices

/// A rank-2g lattice in ℂ^g given by 2g generators.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    g: usize,
    gens: Vec<Vec<Complex64>>,
    exact: Option<Vec<Vec<ExactComplex>>>,
    condition: f64,
}

impl Lattice {
    pub fn new(gens: Vec<Vec<Complex64>>) -> Result<Self> {
        let g = gens.first().map(|v| v.len()).unwrap_or(0);
        if g == 0 || gens.len() != 2 * g || gens.iter().any(|v| v.len() != g) {
            return Err(Error::InvalidInput(format!(
                "a lattice in C^g needs 2g generators of length g (got {} of length {g})",
                gens.len()
            )));
        }
        let mut lat = Lattice {
            g,
            gens,
            exact: None,
            condition: 0.0,
        };
        let cond = condition_number(&lat.real_matrix());
        if !(cond <= 1e12) {
            return Err(Error::IllConditioned(cond));
        }
        lat.condition = cond;
        Ok(lat)
    }

    pub fn from_exact(gens: Vec<Vec<ExactComplex>>) -> Result<Self> {
        common_disc(gens.iter().flatten().flat_map(|z| [&z.re, &z.im]))?;
        let float = gens
            .iter()
            .map(|v| v.iter().map(|z| z.to_c64()).collect())
            .collect();
        let mut lat = Self::new(float)?;
        lat.exact = Some(gens);
        Ok(lat)
    }

    /// Λ^g for Λ = ℤ + τℤ, generators e_1, τe_1, e_2, τe_2, ….
    pub fn elliptic_power(model: &EllipticModel, g: usize) -> Result<Self> {
        let unit = |k: usize, z: &ExactComplex| -> Vec<ExactComplex> {
            (0..g)
                .map(|i| if i == k { z.clone() } else { ExactComplex::zero() })
                .collect()
        };
        match &model.exact_tau {
            Some(t) => Self::from_exact(
                (0..g)
                    .flat_map(|k| [unit(k, &ExactComplex::one()), unit(k, t)])
                    .collect(),
            ),
            None => Self::new(
                (0..g)
                    .flat_map(|k| {
                        let e = |z: Complex64| (0..g).map(|i| if i == k { z } else { c(0.0) }).collect();
                        [e(c(1.0)), e(model.tau)]
                    })
                    .collect(),
            ),
        }
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn gens(&self) -> &[Vec<Complex64>] {
        &self.gens
    }

    pub fn exact_gens(&self) -> Option<&[Vec<ExactComplex>]> {
        self.exact.as_deref()
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// 2g×2g real matrix whose columns are the generators.
    pub fn real_matrix(&self) -> DMatrix<f64> {
        let cols: Vec<DVector<f64>> = self.gens.iter().map(|v| DVector::from_vec(to_real(v))).collect();
        DMatrix::from_columns(&cols)
    }

    /// Coordinates of v in the generator basis.
    pub fn coordinates(&self, v: &[Complex64]) -> Option<Vec<f64>> {
        let b = self.real_matrix();
        b.lu().solve(&DVector::from_vec(to_real(v))).map(|x| x.iter().copied().collect())
    }

    /// Σ n_k λ_k.
    pub fn combine(&self, n: &[i64]) -> Vec<Complex64> {
        let mut out = vec![c(0.0); self.g];
        for (k, gk) in self.gens.iter().enumerate() {
            for i in 0..self.g {
                out[i] += gk[i] * n[k] as f64;
            }
        }
        out
    }
}

/// Λ* = {θ : ⟨θ, λ⟩ ∈ ℤ ∀λ ∈ Λ}, generated by the rows of the inverse of
/// the generator matrix: ⟨θ_i, λ_j⟩ = δ_ij. Exact lattices stay exact.
pub fn dual_lattice(lat: &Lattice) -> Result<Lattice> {
    if lat.condition > 1e12 {
        return Err(Error::IllConditioned(lat.condition));
    }
    let n = 2 * lat.g;
    if let Some(ex) = &lat.exact {
        let m: Vec<Vec<Quad>> = (0..n)
            .map(|r| {
                (0..n)
                    .map(|col| {
                        let z = &ex[col][r / 2];
                        if r % 2 == 0 { z.re.clone() } else { z.im.clone() }
                    })
                    .collect()
            })
            .collect();
        let inv = quad_inverse(&m).ok_or(Error::IllConditioned(f64::INFINITY))?;
        let gens: Vec<Vec<ExactComplex>> = inv
            .into_iter()
            .map(|row| {
                row.chunks(2)
                    .map(|p| ExactComplex::new(p[0].clone(), p[1].clone()))
                    .collect()
            })
            .collect();
        return Lattice::from_exact(gens);
    }
    let inv = lat
        .real_matrix()
        .try_inverse()
        .ok_or(Error::IllConditioned(f64::INFINITY))?;
    let gens = (0..n)
        .map(|r| from_real(&inv.row(r).iter().copied().collect::<Vec<_>>()))
        .collect();
    Lattice::new(gens)
}

// ---------------------------------------------------------------------------
// Linear subspaces and density

/// A translate of a complex linear subspace of ℂ^g, by a row basis.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSubspace {
    g: usize,
    basis: Vec<Vec<Complex64>>,
    exact: Option<Vec<Vec<ExactComplex>>>,
    translate: Option<Vec<Complex64>>,
}

fn complex_rank(rows: &[Vec<Complex64>], g: usize) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), g, |r, k| rows[r][k]);
    let sv = m.svd(false, false).singular_values;
    let top = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > RANK_TOL * top.max(1e-300)).count()
}

impl LinearSubspace {
    pub fn new(g: usize, basis: Vec<Vec<Complex64>>) -> Result<Self> {
        if basis.iter().any(|v| v.len() != g) {
            return Err(Error::InvalidInput("basis vector of wrong length".into()));
        }
        if complex_rank(&basis, g) != basis.len() {
            return Err(Error::InvalidInput("basis rows are linearly dependent".into()));
        }
        Ok(LinearSubspace {
            g,
            basis,
            exact: None,
            translate: None,
        })
    }

    pub fn from_exact(g: usize, basis: Vec<Vec<ExactComplex>>) -> Result<Self> {
        common_disc(basis.iter().flatten().flat_map(|z| [&z.re, &z.im]))?;
        let float = basis.iter().map(|v| v.iter().map(|z| z.to_c64()).collect()).collect();
        let mut l = Self::new(g, float)?;
        l.exact = Some(basis);
        Ok(l)
    }

    /// The line {z_k = α z_1} in ℂ², exact.
    pub fn line(alpha: ExactComplex) -> Result<Self> {
        Self::from_exact(2, vec![vec![ExactComplex::one(), alpha]])
    }

    pub fn with_translate(mut self, t: Vec<Complex64>) -> Result<Self> {
        if t.len() != self.g {
            return Err(Error::InvalidInput("translate of wrong length".into()));
        }
        self.translate = Some(t);
        Ok(self)
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<Complex64>] {
        &self.basis
    }

    pub fn exact_basis(&self) -> Option<&[Vec<ExactComplex>]> {
        self.exact.as_deref()
    }

    pub fn translate(&self) -> Vec<Complex64> {
        self.translate.clone().unwrap_or_else(|| vec![c(0.0); self.g])
    }

    /// a + Σ t_r b_r.
    pub fn point(&self, t: &[Complex64]) -> Vec<Complex64> {
        let mut p = self.translate();
        for (r, b) in self.basis.iter().enumerate() {
            for i in 0..self.g {
                p[i] += t[r] * b[i];
            }
        }
        p
    }

    /// Complex annihilator {a : Σ a_i v_i = 0 for every basis row v}.
    pub fn annihilator(&self) -> Vec<Vec<Complex64>> {
        if self.basis.is_empty() {
            return (0..self.g)
                .map(|k| (0..self.g).map(|i| c(if i == k { 1.0 } else { 0.0 })).collect())
                .collect();
        }
        let m = DMatrix::from_fn(self.g.max(self.basis.len()), self.g, |r, k| {
            if r < self.basis.len() { self.basis[r][k] } else { c(0.0) }
        });
        let svd = m.svd(false, true);
        let vt = svd.v_t.expect("requested");
        let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        (0..svd.singular_values.len())
            .filter(|&k| svd.singular_values[k] <= RANK_TOL * top)
            .map(|k| vt.row(k).iter().map(|z| z.conj()).collect())
            .collect()
    }
}

/// Outcome of the density test for L + Λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Density {
    /// No θ ∈ Λ* annihilates L; `bound` is set when only θ of bounded
    /// height were searched.
    Dense { exact: bool, bound: Option<i64> },
    /// L lies in the hyperplane Σ conj(θ_i) z_i = 0; θ = Σ n_k θ_k.
    Contained { theta: Vec<Complex64>, coefficients: Vec<i64> },
}

impl Density {
    pub fn is_dense(&self) -> bool {
        matches!(self, Density::Dense { .. })
    }
}

fn contained(dual: &Lattice, n: Vec<i64>) -> Density {
    Density::Contained {
        theta: dual.combine(&n),
        coefficients: n,
    }
}

/// L + Λ is dense in ℂ^g iff L lies in no hyperplane Σ conj(θ_i) z_i = 0
/// with θ ∈ Λ*. Exact inputs are decided exactly; float inputs search θ up
/// to height 100. The translate of L plays no role.
pub fn hyperplane_density_test(l: &LinearSubspace, lat: &Lattice) -> Result<Density> {
    if l.g != lat.g {
        return Err(Error::InvalidInput("subspace and lattice in different dimensions".into()));
    }
    let dual = dual_lattice(lat)?;
    if l.dim() == l.g {
        return Ok(Density::Dense {
            exact: true,
            bound: None,
        });
    }
    if let (Some(lb), Some(th)) = (&l.exact, &dual.exact) {
        let all = lb.iter().flatten().chain(th.iter().flatten()).flat_map(|z| [&z.re, &z.im]);
        if common_disc(all).is_ok() {
            let mut rows: Vec<Vec<BigRational>> = Vec::new();
            for v in lb {
                let entries: Vec<ExactComplex> = th
                    .iter()
                    .map(|t| {
                        t.iter()
                            .zip(v)
                            .fold(ExactComplex::zero(), |acc, (ti, vi)| &acc + &(&ti.conj() * vi))
                    })
                    .collect();
                for part in 0..2 {
                    for coord in 0..2 {
                        rows.push(
                            entries
                                .iter()
                                .map(|e| {
                                    let q = if part == 0 { &e.re } else { &e.im };
                                    quad_coords(q)[coord].clone()
                                })
                                .collect(),
                        );
                    }
                }
            }
            let ker = rational_kernel(&rows, 2 * lat.g);
            return Ok(match ker.first().and_then(|v| primitive_integer(v)) {
                Some(n) => contained(&dual, n),
                None => Density::Dense {
                    exact: true,
                    bound: None,
                },
            });
        }
    }
    let nrows = 2 * l.dim();
    let a = DMatrix::from_fn(nrows, 2 * lat.g, |r, k| {
        let v = &l.basis[r / 2];
        let s: Complex64 = dual.gens[k].iter().zip(v).map(|(t, x)| t.conj() * x).sum();
        if r % 2 == 0 { s.re } else { s.im }
    });
    let (found, h) = integer_kernel_search(&a, DENSITY_HEIGHT, DENSITY_RESIDUAL_TOL);
    Ok(match found {
        Some(n) => contained(&dual, n),
        None => Density::Dense {
            exact: false,
            bound: Some(h),
        },
    })
}

// ---------------------------------------------------------------------------
// Elliptic curves

/// End(E) = ℤ[Aτ] when τ is a root of the primitive Aτ² + Bτ + C.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CmOrder {
    pub disc: i64,
    pub leading: i64,
}

/// E = ℂ/(ℤ + τℤ) with Weierstrass invariants g2, g3.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticModel {
    pub tau: Complex64,
    pub g2: Complex64,
    pub g3: Complex64,
    pub cm_order: Option<CmOrder>,
    exact_tau: Option<ExactComplex>,
    /// τ' = γτ reduced, with ℤ + τℤ = μ(ℤ + τ'ℤ).
    tau_red: Complex64,
    mu: Complex64,
}

/// E4, E6 by their q-expansions (|q| ≤ e^{−π√3} after reduction).
fn e4_e6(tau: Complex64) -> (Complex64, Complex64) {
    let q = (2.0 * PI * I * tau).exp();
    let (mut e4, mut e6) = (c(1.0), c(1.0));
    let mut qn = q;
    for n in 1..200u64 {
        let (mut s3, mut s5) = (0.0, 0.0);
        for d in 1..=n {
            if n % d == 0 {
                let df = d as f64;
                s3 += df.powi(3);
                s5 += df.powi(5);
            }
        }
        let t4 = qn * 240.0 * s3;
        let t6 = qn * 504.0 * s5;
        e4 += t4;
        e6 -= t6;
        if t6.norm() < 1e-18 {
            break;
        }
        qn *= q;
    }
    (e4, e6)
}

impl EllipticModel {
    pub fn new(tau: Complex64) -> Result<Self> {
        let red = reduce_to_fundamental_domain(HPoint::from_c64(tau)?)?;
        let g = red.gamma;
        let tau_red = red.point.to_c64();
        let mu = tau * g.c as f64 + g.d as f64;
        let (e4, e6) = e4_e6(tau_red);
        let g2r = e4 * (4.0 * PI.powi(4) / 3.0);
        let g3r = e6 * (8.0 * PI.powi(6) / 27.0);
        let g2 = g2r / mu.powi(4);
        let g3 = g3r / mu.powi(6);
        let disc = g2r.powi(3) - g3r * g3r * 27.0;
        if disc.norm() <= 1e-12 * (g2r.norm().powi(3) + 27.0 * g3r.norm_sqr()) {
            return Err(Error::InvalidInput("degenerate curve: g2^3 = 27 g3^2".into()));
        }
        Ok(EllipticModel {
            tau,
            g2,
            g3,
            cm_order: None,
            exact_tau: None,
            tau_red,
            mu,
        })
    }

    /// Exact τ; detects complex multiplication when τ is imaginary quadratic.
    pub fn from_exact(tau: ExactComplex) -> Result<Self> {
        let mut m = Self::new(tau.to_c64())?;
        common_disc([&tau.re, &tau.im])?;
        let y2 = &tau.im * &tau.im;
        if tau.re.is_rational() && y2.is_rational() {
            // τ² − 2xτ + (x² + y²) = 0.
            let x = tau.re.rat.clone();
            let coeffs = [BigRational::one(), -(&x + &x), &x * &x + &y2.rat];
            let n = primitive_integer(&coeffs).expect("leading coefficient 1");
            m.cm_order = Some(CmOrder {
                disc: n[1] * n[1] - 4 * n[0] * n[2],
                leading: n[0],
            });
        }
        m.exact_tau = Some(tau);
        Ok(m)
    }

    pub fn exact_tau(&self) -> Option<&ExactComplex> {
        self.exact_tau.as_ref()
    }

    /// ℤ-basis of End(E) as multipliers on ℂ.
    pub fn endomorphism_basis(&self) -> Vec<Complex64> {
        match self.cm_order {
            Some(o) => vec![c(1.0), self.tau * o.leading as f64],
            None => vec![c(1.0)],
        }
    }

    /// Nearest lattice point to u (in ℤ + τℤ).
    pub fn nearest_lattice_point(&self, u: Complex64) -> Complex64 {
        let v = u / self.mu;
        let (t, r) = (self.tau_red, v);
        let nb = (r.im / t.im).round();
        let w = r - t * nb;
        let na = w.re.round();
        let base = t * nb + na;
        let mut best = base;
        for da in -1..=1 {
            for db in -1..=1 {
                let cand = base + t * db as f64 + da as f64;
                if (v - cand).norm() < (v - best).norm() {
                    best = cand;
                }
            }
        }
        best * self.mu
    }

    /// (℘, ℘′, ℘″) in the reduced lattice coordinate v = u/μ − lattice point,
    /// before rescaling.
    fn wp_reduced(&self, u: Complex64) -> Result<(Complex64, Complex64)> {
        let near = self.nearest_lattice_point(u);
        let dist = (u - near).norm();
        if dist < POLE_GUARD {
            return Err(Error::NearPole(dist));
        }
        let t = self.tau_red;
        let v = (u - near) / self.mu;
        let two_pi_i = 2.0 * PI * I;
        let q = (two_pi_i * t).exp();
        let x = PI * I * v;
        let sh = x.sinh();
        let mut p = c(1.0 / 12.0) + 1.0 / (4.0 * sh * sh);
        let mut dp = -x.cosh() / (4.0 * sh * sh * sh);
        let mut qn = q;
        for n in 1..400 {
            let tn = (two_pi_i * (t * n as f64 + v)).exp();
            let sn = (two_pi_i * (t * n as f64 - v)).exp();
            let one = c(1.0);
            let a = tn / ((one - tn) * (one - tn));
            let b = sn / ((one - sn) * (one - sn));
            let k = qn / ((one - qn) * (one - qn));
            p += a + b - 2.0 * k;
            let da = tn * (one + tn) / (one - tn).powi(3);
            let db = sn * (one + sn) / (one - sn).powi(3);
            dp += da - db;
            if tn.norm().max(sn.norm()) < 1e-19 {
                break;
            }
            qn *= q;
        }
        let p = p * two_pi_i * two_pi_i;
        let dp = dp * two_pi_i * two_pi_i * two_pi_i;
        Ok((p / (self.mu * self.mu), dp / self.mu.powi(3)))
    }

    /// Curve residual |y² − 4x³ + g2 x + g3| relative to its terms.
    pub fn curve_residual(&self, x: Complex64, y: Complex64) -> f64 {
        let terms = [y * y, 4.0 * x * x * x, self.g2 * x, self.g3];
        let r = terms[0] - terms[1] + terms[2] + terms[3];
        let scale = terms.iter().map(|t| t.norm()).fold(0.0, f64::max).max(1e-300);
        r.norm() / scale
    }

    /// ℘″ = 6℘² − g2/2.
    pub fn wp_second(&self, x: Complex64) -> Complex64 {
        6.0 * x * x - self.g2 / 2.0
    }
}

/// (℘(u), ℘′(u)) for the lattice ℤ + τℤ, certified by the curve identity.
pub fn wp_eval(u: Complex64, model: &EllipticModel, prec: f64) -> Result<(Complex64, Complex64)> {
    if !(prec > 0.0 && prec <= 1e-2) {
        return Err(Error::InvalidInput(format!("prec {prec} outside (0, 1e-2]")));
    }
    let (p, dp) = model.wp_reduced(u)?;
    let r = model.curve_residual(p, dp);
    if !(r <= prec) {
        return Err(Error::PrecisionUnreachable {
            requested: prec,
            achievable: r,
        });
    }
    Ok((p, dp))
}

/// (℘, ℘′) by summing π² csc² over lattice rows: an evaluation path that
/// shares nothing with the q-expansion.
pub fn wp_rowsum(u: Complex64, model: &EllipticModel) -> Result<(Complex64, Complex64)> {
    let near = model.nearest_lattice_point(u);
    let dist = (u - near).norm();
    if dist < POLE_GUARD {
        return Err(Error::NearPole(dist));
    }
    let t = model.tau_red;
    let v = (u - near) / model.mu;
    let pi2 = PI * PI;
    let mut p = c(-pi2 / 3.0);
    let mut dp = c(0.0);
    let row = |z: Complex64| -> (Complex64, Complex64) {
        let s = (PI * z).sin();
        let cs = (PI * z).cos();
        (pi2 / (s * s), -2.0 * pi2 * PI * cs / (s * s * s))
    };
    let (a, b) = row(v);
    p += a;
    dp += b;
    for n in 1..2000 {
        let nf = n as f64;
        let (a1, b1) = row(v + t * nf);
        let (a2, b2) = row(v - t * nf);
        let (k, _) = row(t * nf);
        p += a1 + a2 - 2.0 * k;
        dp += b1 + b2;
        if (a1.norm() + a2.norm() + k.norm()) < 1e-18 * p.norm().max(1.0) {
            break;
        }
    }
    Ok((p / (model.mu * model.mu), dp / model.mu.powi(3)))
}

/// u with (℘(u), ℘′(u)) = (x, y), by Newton on ℘ from a grid of seeds.
pub fn elliptic_log(x: Complex64, y: Complex64, model: &EllipticModel) -> Result<Complex64> {
    let tau = model.tau;
    let mut seeds = Vec::new();
    if x.norm() > 1e3 {
        seeds.push(1.0 / x.sqrt());
    }
    for a in 1..8 {
        for b in 0..8 {
            seeds.push(c(a as f64 / 8.0) + tau * (b as f64 / 8.0));
        }
    }
    let scale = x.norm().max(1.0);
    for s in seeds {
        let mut u = s;
        for _ in 0..60 {
            let Ok((p, dp)) = model.wp_reduced(u) else { break };
            if dp.norm() < 1e-14 * scale {
                break;
            }
            let step = (p - x) / dp;
            let step = if step.norm() > 0.2 { step * (0.2 / step.norm()) } else { step };
            u -= step;
            if step.norm() < 1e-15 * u.norm().max(1.0) {
                break;
            }
        }
        let Ok((p, dp)) = model.wp_reduced(u) else { continue };
        if (p - x).norm() > 1e-9 * scale {
            continue;
        }
        let ys = y.norm().max(1.0);
        if (dp - y).norm() <= 1e-6 * ys {
            return Ok(u);
        }
        if (dp + y).norm() <= 1e-6 * ys {
            return Ok(-u);
        }
    }
    Err(Error::NoConvergence("elliptic logarithm".into()))
}

// ---------------------------------------------------------------------------
// Subvarieties of E^g

/// W ⊆ E^g given by polynomials in x_i = ℘(u_i), y_i = ℘′(u_i); variables
/// are ordered x1..xg, y1..yg.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSystem {
    g: usize,
    polys: Vec<Poly>,
}

impl CurveSystem {
    pub fn new(g: usize, polys: Vec<Poly>) -> Result<Self> {
        PolySystem::new(2 * g, polys.clone())?;
        Ok(CurveSystem { g, polys })
    }

    /// Parse equations in x1..xg, y1..yg ("lhs = rhs" allowed).
    pub fn parse(g: usize, equations: &[&str]) -> Result<Self> {
        let vars = expr::xy_vars(g);
        let polys = equations
            .iter()
            .map(|s| match s.split_once('=') {
                Some((l, r)) => Ok(expr::parse_poly(l, 2 * g, &vars)?
                    .sub(&expr::parse_poly(r, 2 * g, &vars)?)),
                None => expr::parse_poly(s, 2 * g, &vars),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(g, polys)
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn polys(&self) -> &[Poly] {
        &self.polys
    }

    /// The defining equations together with the g curve equations.
    pub fn full(&self, model: &EllipticModel) -> PolySystem {
        let n = 2 * self.g;
        let mut polys = self.polys.clone();
        for i in 0..self.g {
            let x = Poly::var(n, i);
            let y = Poly::var(n, self.g + i);
            let curve = y
                .pow(2)
                .sub(&x.pow(3).scale(c(4.0)))
                .add(&x.scale(model.g2))
                .add(&Poly::constant(n, model.g3));
            polys.push(curve);
        }
        PolySystem::new(n, polys).expect("curve equations are nonzero")
    }

    /// Coordinates (x, y) of exp(u).
    pub fn coordinates(&self, u: &[Complex64], model: &EllipticModel, prec: f64) -> Result<Vec<Complex64>> {
        let mut xs = Vec::with_capacity(2 * self.g);
        let mut ys = Vec::with_capacity(self.g);
        for &ui in u {
            let (x, y) = wp_eval(ui, model, prec)?;
            xs.push(x);
            ys.push(y);
        }
        xs.extend(ys);
        Ok(xs)
    }

    /// Jacobian in the Lie-algebra coordinates u: ∂P/∂x_i ℘′ + ∂P/∂y_i ℘″.
    pub fn jacobian_u(&self, pt: &[Complex64], model: &EllipticModel) -> DMatrix<Complex64> {
        let g = self.g;
        DMatrix::from_fn(self.polys.len(), g, |r, i| {
            let grad = self.polys[r].gradient(pt);
            grad[i] * pt[g + i] + grad[g + i] * model.wp_second(pt[i])
        })
    }

    /// Points of W with their u-space tangent kernels.
    fn tangent_samples(
        &self,
        model: &EllipticModel,
        count: usize,
        rng: &mut impl Rng,
    ) -> Result<Vec<(Vec<Complex64>, DMatrix<Complex64>)>> {
        let full = self.full(model);
        let mut out = Vec::new();
        let mut tries = 0;
        while out.len() < count && tries < 4 * count {
            tries += 1;
            if let Some(p) = full.sample_point(rng) {
                let j = self.jacobian_u(&p, model);
                out.push((p, j));
            }
        }
        if out.len() < count / 2 {
            return Err(Error::DimensionSamplingFailed(format!(
                "{} of {count} points of W found",
                out.len()
            )));
        }
        Ok(out)
    }
}

fn rank_c(m: &DMatrix<Complex64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > RANK_TOL * top.max(1e-300)).count()
}

/// Real equations Re/Im of Σ_k n_k (e_k · v) = 0 for each vector v, where
/// e_k runs over the ℤ-basis of End(E)^g.
fn end_equations(vectors: &[Vec<Complex64>], g: usize, basis: &[Complex64]) -> DMatrix<f64> {
    let nb = g * basis.len();
    DMatrix::from_fn(2 * vectors.len(), nb, |r, k| {
        let v = &vectors[r / 2];
        let (i, e) = (k / basis.len(), basis[k % basis.len()]);
        let s = e * v[i];
        if r % 2 == 0 { s.re } else { s.im }
    })
}

fn end_vector(n: &[i64], g: usize, basis: &[Complex64]) -> Vec<Complex64> {
    (0..g)
        .map(|i| (0..basis.len()).map(|b| basis[b] * n[i * basis.len() + b] as f64).sum())
        .collect()
}

/// Quotient E^g → E^k named by a rotundity violation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Quotient {
    /// B = 0, f the identity.
    Trivial,
    /// f: E^g → E given by the row m over End(E).
    Row { coefficients: Vec<i64>, row: Vec<Complex64> },
    /// B the image of E under b ∈ End(E)^g (quotient of dimension g − 1).
    Kernel { coefficients: Vec<i64>, vector: Vec<Complex64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Rotundity {
    /// No violation among quotients of height ≤ `height`; `complete` is
    /// false when g ≥ 4 and only quotients of dimension 1, g − 1, g were
    /// examined.
    Rotund { height: i64, complete: bool },
    Violation {
        quotient: Quotient,
        k: usize,
        dim_l: usize,
        dim_w: usize,
    },
}

/// Rotundity of (L, W) on E^g: dim Lf(L) + dim f(W) ≥ k for the quotients
/// f: E^g → E^k of height ≤ `height` (integer matrices, or matrices over
/// the CM order when the model has one).
pub fn rotundity_check(
    l: &LinearSubspace,
    w: &CurveSystem,
    model: &EllipticModel,
    height: i64,
    rng: &mut impl Rng,
) -> Result<Rotundity> {
    let g = l.g();
    if w.g() != g {
        return Err(Error::InvalidInput("L and W in different dimensions".into()));
    }
    let samples = w.tangent_samples(model, DIMENSION_SAMPLES, rng)?;
    let ranks: Vec<usize> = samples.iter().map(|(_, j)| rank_c(j)).collect();
    let min_rank = *ranks.iter().min().expect("nonempty");
    let dim_w = g - min_rank;
    let dim_l = l.dim();
    if dim_l + dim_w < g {
        return Ok(Rotundity::Violation {
            quotient: Quotient::Trivial,
            k: g,
            dim_l,
            dim_w,
        });
    }
    let basis = model.endomorphism_basis();
    let generic: Vec<&(Vec<Complex64>, DMatrix<Complex64>)> = samples
        .iter()
        .zip(&ranks)
        .filter(|(_, &r)| r == min_rank)
        .map(|(s, _)| s)
        .take(3)
        .collect();
    // k = 1: m kills L and the tangent space of W.
    let mut vectors: Vec<Vec<Complex64>> = l.basis().to_vec();
    for (_, j) in &generic {
        let k = kernel_c(j, g);
        for col in 0..k.ncols() {
            vectors.push(k.column(col).iter().copied().collect());
        }
    }
    let a = end_equations(&vectors, g, &basis);
    if let (Some(n), _) = integer_kernel_search(&a, height, GEOMETRIC_TOL) {
        return Ok(Rotundity::Violation {
            quotient: Quotient::Row {
                row: end_vector(&n, g, &basis),
                coefficients: n,
            },
            k: 1,
            dim_l: 0,
            dim_w: 0,
        });
    }
    // k = g − 1 ≥ 2: b lies in L and in the tangent space of W.
    if g >= 3 && dim_l + dim_w == g {
        let mut vectors = l.annihilator();
        for (_, j) in &generic {
            for r in 0..j.nrows() {
                vectors.push(j.row(r).iter().copied().collect());
            }
        }
        let a = end_equations(&vectors, g, &basis);
        if let (Some(n), _) = integer_kernel_search(&a, height, GEOMETRIC_TOL) {
            return Ok(Rotundity::Violation {
                quotient: Quotient::Kernel {
                    vector: end_vector(&n, g, &basis),
                    coefficients: n,
                },
                k: g - 1,
                dim_l: dim_l - 1,
                dim_w: dim_w - 1,
            });
        }
    }
    Ok(Rotundity::Rotund {
        height,
        complete: g <= 3,
    })
}

fn kernel_c(m: &DMatrix<Complex64>, n: usize) -> DMatrix<Complex64> {
    if m.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let mut sq = DMatrix::zeros(m.nrows().max(n), n);
    sq.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cols: Vec<_> = (0..svd.singular_values.len())
        .filter(|&k| top == 0.0 || svd.singular_values[k] <= RANK_TOL * top)
        .map(|k| vt.row(k).adjoint())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

// ---------------------------------------------------------------------------
// Witness search

/// A point l ∈ L with exp(l) ∈ W.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusWitness {
    /// The point of L.
    pub l: Vec<Complex64>,
    /// Its parameters in the basis of (the cut of) L.
    pub t: Vec<Complex64>,
    /// exp(l) as (x1..xg, y1..yg).
    pub point: Vec<Complex64>,
    /// |P(exp(l))| per defining polynomial.
    pub residuals: Vec<f64>,
    /// The same residuals through the row-sum evaluation of ℘.
    pub recheck_residuals: Vec<f64>,
    pub tolerance: f64,
    /// Lattice coefficients of the shift that moved the base point near L.
    pub lattice_shift: Vec<i64>,
    pub height: i64,
    pub attempts: usize,
    pub newton_steps: usize,
    /// Max residual after each Newton step of the successful run.
    pub trace: Vec<f64>,
    pub cut_dimensions: usize,
    /// Kantorovich data, when the cut leaves one equation in one unknown.
    pub certificate: Option<Certificate>,
}

/// Certify the root near t0 of t ↦ P(exp(a + t·b)) for a single equation.
fn certify_line(
    w: &CurveSystem,
    model: &EllipticModel,
    a: &[Complex64],
    b: &[Complex64],
    t0: Complex64,
    config: &SearchConfig,
) -> Option<Certificate> {
    let point = |t: Complex64| -> Vec<Complex64> { a.iter().zip(b).map(|(ai, bi)| ai + t * bi).collect() };
    let map = FnMap {
        f: |t: Complex64| Ok(w.polys()[0].eval(&w.coordinates(&point(t), model, 1e-12)?)),
        df: |t: Complex64| {
            let pt = w.coordinates(&point(t), model, 1e-12)?;
            let jac = w.jacobian_u(&pt, model);
            Ok(b.iter().enumerate().map(|(i, bi)| jac[(0, i)] * bi).sum())
        },
        domain: Domain::Plane,
    };
    match newton_kantorovich(&map, t0, 1e-3 * (1.0 + t0.norm()), config) {
        Ok(Newton::Root(r)) if r.certificate.holds => Some(r.certificate),
        _ => None,
    }
}

/// Lattice vector λ with coefficients ≤ h minimizing the distance from
/// u + λ to the affine space a + span_ℂ(B); returns (coefficients, t).
fn nearest_shift(
    u: &[Complex64],
    lat: &Lattice,
    a: &[Complex64],
    basis: &[Vec<Complex64>],
    h: i64,
) -> (Vec<i64>, Vec<Complex64>, f64) {
    let g = lat.g();
    let n = 2 * g;
    // Real basis of span_ℂ(B) and the projector onto its complement.
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for b in basis {
        cols.push(DVector::from_vec(to_real(b)));
        let ib: Vec<Complex64> = b.iter().map(|z| z * I).collect();
        cols.push(DVector::from_vec(to_real(&ib)));
    }
    let proj = if cols.is_empty() {
        DMatrix::identity(n, n)
    } else {
        let q = DMatrix::from_columns(&cols).qr().q();
        DMatrix::identity(n, n) - &q * q.transpose()
    };
    let bm = lat.real_matrix();
    let amat = &proj * &bm;
    let diff: Vec<Complex64> = u.iter().zip(a).map(|(x, y)| x - y).collect();
    let target = -(&proj * DVector::from_vec(to_real(&diff)));
    // Pivot columns of amat carry the constraints; the rest are enumerated.
    let rank = n - 2 * basis.len();
    let mut pivots: Vec<usize> = Vec::new();
    let mut current = DMatrix::<f64>::zeros(n, 0);
    for k in 0..n {
        if pivots.len() == rank {
            break;
        }
        let mut trial = current.clone().insert_column(current.ncols(), 0.0);
        trial.set_column(current.ncols(), &amat.column(k));
        let sv = trial.clone().svd(false, false).singular_values;
        if sv.iter().cloned().fold(f64::INFINITY, f64::min) > 1e-8 {
            pivots.push(k);
            current = trial;
        }
    }
    let free: Vec<usize> = (0..n).filter(|k| !pivots.contains(k)).collect();
    let pinv = if pivots.is_empty() {
        DMatrix::zeros(0, n)
    } else {
        current.clone().pseudo_inverse(1e-12).expect("full column rank")
    };
    let side = (2 * h + 1) as usize;
    let total = side.saturating_pow(free.len() as u32).min(4_000_000);
    let mut best = (vec![0i64; n], f64::INFINITY);
    let mut coeff = vec![0i64; n];
    for idx in 0..total {
        let mut t = idx;
        let mut rhs = target.clone();
        for &f in &free {
            let v = (t % side) as i64 - h;
            t /= side;
            coeff[f] = v;
            rhs -= amat.column(f) * v as f64;
        }
        let piv = &pinv * &rhs;
        for (r, &p) in pivots.iter().enumerate() {
            coeff[p] = piv[r].round().clamp(-(h as f64), h as f64) as i64;
        }
        let x = DVector::from_iterator(n, coeff.iter().map(|&v| v as f64));
        let d = (&amat * x - &target).norm();
        if d < best.1 {
            best = (coeff.clone(), d);
        }
    }
    let shifted: Vec<Complex64> = lat
        .combine(&best.0)
        .iter()
        .zip(u)
        .map(|(l, x)| l + x)
        .zip(a)
        .map(|(p, y)| p - y)
        .collect();
    // Least-squares parameters of the shifted point in the basis.
    let t = if basis.is_empty() {
        Vec::new()
    } else {
        let bm = DMatrix::from_fn(g, basis.len(), |i, r| basis[r][i]);
        let rhs = DVector::from_vec(shifted);
        let sol = bm.svd(true, true).solve(&rhs, 1e-14).expect("svd solve");
        sol.iter().copied().collect()
    };
    (best.0, t, best.1)
}

struct NewtonRun {
    t: Vec<Complex64>,
    steps: usize,
    trace: Vec<f64>,
    residual: f64,
}

fn torus_newton(
    w: &CurveSystem,
    model: &EllipticModel,
    a: &[Complex64],
    basis: &[Vec<Complex64>],
    t0: Vec<Complex64>,
    config: &SearchConfig,
) -> Option<NewtonRun> {
    let g = w.g();
    let point = |t: &[Complex64]| -> Vec<Complex64> {
        let mut p = a.to_vec();
        for (r, b) in basis.iter().enumerate() {
            for i in 0..g {
                p[i] += t[r] * b[i];
            }
        }
        p
    };
    let eval = |t: &[Complex64]| -> Option<(Vec<Complex64>, Vec<Complex64>)> {
        let l = point(t);
        let xy = w.coordinates(&l, model, 1e-6).ok()?;
        let f: Vec<Complex64> = w.polys().iter().map(|p| p.eval(&xy)).collect();
        Some((xy, f))
    };
    let mut t = t0;
    let (mut xy, mut f) = eval(&t)?;
    let mut res = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut trace = vec![res];
    for step in 0..config.max_newton_steps {
        if res <= config.newton_tol {
            return Some(NewtonRun {
                t,
                steps: step,
                trace,
                residual: res,
            });
        }
        let ju = w.jacobian_u(&xy, model);
        let bm = DMatrix::from_fn(g, basis.len(), |i, r| basis[r][i]);
        let jt = ju * bm;
        let rhs = DVector::from_vec(f.clone());
        let dt = jt.svd(true, true).solve(&rhs, 1e-14).ok()?;
        let mut damp = 1.0;
        loop {
            let trial: Vec<Complex64> = t.iter().enumerate().map(|(k, v)| v - dt[k] * damp).collect();
            if let Some((xy2, f2)) = eval(&trial) {
                let r2 = f2.iter().map(|v| v.norm()).fold(0.0, f64::max);
                if r2 < res || damp < 1e-3 {
                    t = trial;
                    xy = xy2;
                    f = f2;
                    res = r2;
                    break;
                }
            }
            damp *= 0.5;
            if damp < 1e-3 {
                return Some(NewtonRun {
                    t,
                    steps: step,
                    trace,
                    residual: res,
                });
            }
        }
        trace.push(res);
    }
    Some(NewtonRun {
        t,
        steps: config.max_newton_steps,
        trace,
        residual: res,
    })
}

/// Search for l ∈ L with exp(l) ∈ W: sample a regular point of W, take its
/// elliptic logarithm, shift it by a lattice vector to lie near L (density
/// of L + Λ), then run Newton along L. Heights climb the schedule before
/// the base point is resampled.
pub fn torus_witness_search(
    l: &LinearSubspace,
    w: &CurveSystem,
    model: &EllipticModel,
    config: &SearchConfig,
) -> Result<TorusWitness> {
    config.validate()?;
    let g = l.g();
    if w.g() != g {
        return Err(Error::InvalidInput("L and W in different dimensions".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let lat = Lattice::elliptic_power(model, g)?;
    if let Density::Contained { .. } = hyperplane_density_test(l, &lat)? {
        return Err(Error::ClosedSubtorus);
    }
    let full = w.full(model);
    let dim_w = full.dimension(&mut rng)?;
    let dim_l = l.dim();
    if dim_l + dim_w < g {
        return Err(Error::PreconditionFailed(format!(
            "dim L + dim W = {} < {g}",
            dim_l + dim_w
        )));
    }
    // Generic affine cut of L down to dim L + dim W = g.
    let excess = dim_l + dim_w - g;
    let keep = dim_l - excess;
    let mut a = l.translate();
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for r in 0..dim_l {
        let b = &l.basis()[r];
        if r < keep {
            // Generic combination of all basis rows keeps the cut generic.
            let mut v = b.clone();
            for (s, other) in l.basis().iter().enumerate() {
                if s >= keep {
                    let k = Complex64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
                    for i in 0..g {
                        v[i] += k * other[i];
                    }
                }
            }
            basis.push(v);
        } else {
            let k = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            for i in 0..g {
                a[i] += k * b[i];
            }
        }
    }
    let avoid_y: Vec<usize> = (g..2 * g).collect();
    let mut best_residual = f64::INFINITY;
    let mut attempts = 0;
    for _ in 0..config.retries {
        attempts += 1;
        let Some(p) = full.sample_point(&mut rng) else { continue };
        if avoid_y.iter().any(|&k| p[k].norm() < AVOID_DISTANCE) {
            continue;
        }
        let mut u = Vec::with_capacity(g);
        for i in 0..g {
            match elliptic_log(p[i], p[g + i], model) {
                Ok(ui) => u.push(ui),
                Err(_) => break,
            }
        }
        if u.len() < g {
            continue;
        }
        for &h in &config.height_schedule {
            let (shift, t0, _) = nearest_shift(&u, &lat, &a, &basis, h);
            let Some(run) = torus_newton(w, model, &a, &basis, t0, config) else {
                continue;
            };
            best_residual = best_residual.min(run.residual);
            if run.residual > config.newton_tol {
                continue;
            }
            let lpt = {
                let mut p = a.clone();
                for (r, b) in basis.iter().enumerate() {
                    for i in 0..g {
                        p[i] += run.t[r] * b[i];
                    }
                }
                p
            };
            let point = w.coordinates(&lpt, model, 1e-6)?;
            let residuals: Vec<f64> = w.polys().iter().map(|q| q.eval(&point).norm()).collect();
            let mut fresh = vec![c(0.0); 2 * g];
            for i in 0..g {
                let (x, y) = wp_rowsum(lpt[i], model)?;
                fresh[i] = x;
                fresh[g + i] = y;
            }
            let recheck: Vec<f64> = w.polys().iter().map(|q| q.eval(&fresh).norm()).collect();
            let certificate = match (basis.as_slice(), w.polys().len()) {
                ([b], 1) => certify_line(w, model, &a, b, run.t[0], config),
                _ => None,
            };
            return Ok(TorusWitness {
                l: lpt,
                t: run.t,
                point,
                residuals,
                recheck_residuals: recheck,
                tolerance: config.newton_tol,
                lattice_shift: shift,
                height: h,
                attempts,
                newton_steps: run.steps,
                trace: run.trace,
                cut_dimensions: excess,
                certificate,
            });
        }
    }
    Err(Error::SearchExhausted { best_residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Quad {
        Quad::int(n)
    }

    fn sqrt2() -> Quad {
        Quad::sqrt_rational(&BigRational::from_integer(BigInt::from(2))).unwrap()
    }

    fn gauss_i() -> EllipticModel {
        EllipticModel::from_exact(ExactComplex::i()).unwrap()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(3)
    }

    #[test]
    fn dual_of_z_plus_i_z() {
        let lat = Lattice::elliptic_power(&gauss_i(), 1).unwrap();
        let d = dual_lattice(&lat).unwrap();
        let ex = d.exact_gens().unwrap();
        // True dual generators 1 and i; their conjugates 1 and −i.
        assert_eq!(ex[0][0], ExactComplex::one());
        assert_eq!(ex[1][0], ExactComplex::i());
    }

    #[test]
    fn dual_pairs_to_identity() {
        let lat = Lattice::new(vec![
            vec![c(1.0), Complex64::new(0.3, 0.1)],
            vec![Complex64::new(0.2, 1.1), c(0.4)],
            vec![c(0.0), c(1.0)],
            vec![Complex64::new(0.5, 0.0), Complex64::new(-0.1, 1.3)],
        ])
        .unwrap();
        let d = dual_lattice(&lat).unwrap();
        for (i, t) in d.gens().iter().enumerate() {
            for (j, l) in lat.gens().iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((pairing(t, l) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_lattice_is_rejected() {
        let r = Lattice::new(vec![vec![c(1.0)], vec![c(2.0)]]);
        assert!(matches!(r, Err(Error::IllConditioned(_))));
    }

    #[test]
    fn density_examples() {
        let lat = Lattice::elliptic_power(&gauss_i(), 2).unwrap();
        let cm = LinearSubspace::line(ExactComplex::i()).unwrap();
        assert!(matches!(
            hyperplane_density_test(&cm, &lat).unwrap(),
            Density::Contained { .. }
        ));
        let irr = LinearSubspace::line(ExactComplex::real(sqrt2())).unwrap();
        assert_eq!(
            hyperplane_density_test(&irr, &lat).unwrap(),
            Density::Dense {
                exact: true,
                bound: None
            }
        );
        let lat1 = Lattice::elliptic_power(&gauss_i(), 1).unwrap();
        let whole = LinearSubspace::new(1, vec![vec![c(1.0)]]).unwrap();
        assert!(hyperplane_density_test(&whole, &lat1).unwrap().is_dense());
    }

    #[test]
    fn float_density_agrees_with_exact() {
        let model = EllipticModel::new(Complex64::new(0.0, 1.0)).unwrap();
        let lat = Lattice::elliptic_power(&model, 2).unwrap();
        let cm = LinearSubspace::new(2, vec![vec![c(1.0), Complex64::new(0.5, 1.5)]]).unwrap();
        match hyperplane_density_test(&cm, &lat).unwrap() {
            Density::Contained { theta, .. } => {
                let s = theta[0].conj() + theta[1].conj() * Complex64::new(0.5, 1.5);
                assert!(s.norm() < 1e-9);
            }
            d => panic!("{d:?}"),
        }
        let irr = LinearSubspace::new(2, vec![vec![c(1.0), c(2f64.sqrt())]]).unwrap();
        assert_eq!(
            hyperplane_density_test(&irr, &lat).unwrap(),
            Density::Dense {
                exact: false,
                bound: Some(100)
            }
        );
    }

    #[test]
    fn cm_detection() {
        assert_eq!(gauss_i().cm_order, Some(CmOrder { disc: -4, leading: 1 }));
        let rho = ExactComplex::new(
            Quad::frac(1, 2),
            Quad::sqrt_rational(&BigRational::new(BigInt::from(3), BigInt::from(4))).unwrap(),
        );
        let m = EllipticModel::from_exact(rho).unwrap();
        assert_eq!(m.cm_order, Some(CmOrder { disc: -3, leading: 1 }));
        let generic = ExactComplex::new(q(0), sqrt2() + q(1));
        assert_eq!(EllipticModel::from_exact(generic).unwrap().cm_order, None);
    }

    #[test]
    fn wp_parity_and_g3_at_i() {
        let m = gauss_i();
        assert!(m.g3.norm() < 1e-9 * m.g2.norm());
        let u = Complex64::new(0.23, 0.31);
        let (p, dp) = wp_eval(u, &m, 1e-9).unwrap();
        let (pm, dpm) = wp_eval(-u, &m, 1e-9).unwrap();
        assert!((p - pm).norm() < 1e-10 * p.norm());
        assert!((dp + dpm).norm() < 1e-10 * dp.norm());
    }

    #[test]
    fn wp_matches_rowsum_and_periods() {
        let m = EllipticModel::new(Complex64::new(0.31, 1.4)).unwrap();
        for u in [Complex64::new(0.2, 0.1), Complex64::new(-0.4, 0.9), Complex64::new(1.7, -2.3)] {
            let (p, dp) = wp_eval(u, &m, 1e-9).unwrap();
            let (p2, dp2) = wp_rowsum(u, &m).unwrap();
            assert!((p - p2).norm() < 1e-9 * p.norm().max(1.0));
            assert!((dp - dp2).norm() < 1e-9 * dp.norm().max(1.0));
            let (p3, _) = wp_eval(u + 3.0 + m.tau * -2.0, &m, 1e-9).unwrap();
            assert!((p - p3).norm() < 1e-9 * p.norm().max(1.0));
        }
    }

    #[test]
    fn wp_near_pole() {
        let m = gauss_i();
        assert!(matches!(wp_eval(Complex64::new(1.0, 1e-10), &m, 1e-6), Err(Error::NearPole(_))));
    }

    #[test]
    fn unreduced_tau_gives_homothetic_invariants() {
        // τ and τ + 1 define the same lattice.
        let a = EllipticModel::new(Complex64::new(0.1, 0.9)).unwrap();
        let b = EllipticModel::new(Complex64::new(1.1, 0.9)).unwrap();
        assert!((a.g2 - b.g2).norm() < 1e-9 * a.g2.norm());
        assert!((a.g3 - b.g3).norm() < 1e-9 * a.g3.norm());
        let u = Complex64::new(0.3, 0.2);
        assert!((wp_eval(u, &a, 1e-9).unwrap().0 - wp_eval(u, &b, 1e-9).unwrap().0).norm() < 1e-8);
    }

    #[test]
    fn elliptic_log_inverts() {
        let m = EllipticModel::new(Complex64::new(0.2, 1.1)).unwrap();
        let u = Complex64::new(0.37, 0.21);
        let (x, y) = wp_eval(u, &m, 1e-9).unwrap();
        let v = elliptic_log(x, y, &m).unwrap();
        let (x2, y2) = wp_eval(v, &m, 1e-9).unwrap();
        assert!((x - x2).norm() < 1e-8 * x.norm().max(1.0));
        assert!((y - y2).norm() < 1e-6 * y.norm().max(1.0));
    }

    #[test]
    fn rotundity_examples() {
        let m = gauss_i();
        let l = LinearSubspace::line(ExactComplex::real(sqrt2())).unwrap();
        let curve = CurveSystem::parse(2, &["x1 + x2 = 5"]).unwrap();
        assert!(matches!(
            rotundity_check(&l, &curve, &m, 50, &mut rng()).unwrap(),
            Rotundity::Rotund { height: 50, complete: true }
        ));
        // Fixing both abscissae leaves finitely many points.
        let pt = CurveSystem::parse(2, &["x1 = 3/2", "x2 = 7/3"]).unwrap();
        assert_eq!(
            rotundity_check(&l, &pt, &m, 50, &mut rng()).unwrap(),
            Rotundity::Violation {
                quotient: Quotient::Trivial,
                k: 2,
                dim_l: 1,
                dim_w: 0
            }
        );
    }

    #[test]
    fn cm_quotient_found_only_with_cm_endomorphisms() {
        // W = graph of [i]: (x2, y2) = (−x1, i·y1); L: z2 = i z1.
        let l = LinearSubspace::line(ExactComplex::i()).unwrap();
        let w = CurveSystem::parse(2, &["x2 + x1", "y2 - i*y1"]).unwrap();
        let cm = gauss_i();
        match rotundity_check(&l, &w, &cm, 5, &mut rng()).unwrap() {
            Rotundity::Violation { quotient: Quotient::Row { row, .. }, k: 1, .. } => {
                let s = row[0] + row[1] * I;
                assert!(s.norm() < 1e-9);
            }
            r => panic!("{r:?}"),
        }
        let plain = EllipticModel::new(Complex64::new(0.0, 1.0)).unwrap();
        assert!(matches!(
            rotundity_check(&l, &w, &plain, 5, &mut rng()).unwrap(),
            Rotundity::Rotund { .. }
        ));
    }

    #[test]
    fn rational_kernel_small() {
        let r = |p: i64| BigRational::from_integer(BigInt::from(p));
        let ker = rational_kernel(&[vec![r(1), r(2), r(3)], vec![r(0), r(1), r(1)]], 3);
        assert_eq!(ker.len(), 1);
        assert_eq!(primitive_integer(&ker[0]).unwrap(), vec![1, 1, -1]);
    }

    #[test]
    fn planted_torus_witness() {
        let m = gauss_i();
        let l = LinearSubspace::line(ExactComplex::real(sqrt2())).unwrap();
        let t0 = Complex64::new(0.31, 0.17);
        let p = l.point(&[t0]);
        let (x1, _) = wp_eval(p[0], &m, 1e-9).unwrap();
        let (x2, _) = wp_eval(p[1], &m, 1e-9).unwrap();
        let n = 4;
        let w = CurveSystem::new(
            2,
            vec![Poly::var(n, 0)
                .add(&Poly::var(n, 1))
                .sub(&Poly::constant(n, x1 + x2))],
        )
        .unwrap();
        let wit = torus_witness_search(&l, &w, &m, &SearchConfig::with_seed(1)).unwrap();
        assert!(wit.residuals.iter().all(|&r| r <= 1e-8), "{wit:?}");
        assert!(wit.recheck_residuals.iter().all(|&r| r <= 2e-8));
    }

    #[test]
    fn sum_of_abscissae_witness() {
        let m = gauss_i();
        let l = LinearSubspace::line(ExactComplex::real(sqrt2())).unwrap();
        let w = CurveSystem::parse(2, &["x1 + x2 = 5"]).unwrap();
        let wit = torus_witness_search(&l, &w, &m, &SearchConfig::with_seed(7)).unwrap();
        assert!(wit.residuals[0] <= 1e-7);
        assert!((wit.l[1] - wit.l[0] * 2f64.sqrt()).norm() < 1e-9);
    }

    #[test]
    fn closed_subtorus_refused() {
        let m = gauss_i();
        let l = LinearSubspace::line(ExactComplex::i()).unwrap();
        let w = CurveSystem::parse(2, &["x1 + x2 = 5"]).unwrap();
        assert_eq!(
            torus_witness_search(&l, &w, &m, &SearchConfig::default()),
            Err(Error::ClosedSubtorus)
        );
    }

    #[test]
    fn low_dimension_rejected() {
        let m = gauss_i();
        let l = LinearSubspace::line(ExactComplex::real(sqrt2())).unwrap();
        let w = CurveSystem::parse(2, &["x1 = 3", "x2 = 5"]).unwrap();
        assert!(matches!(
            torus_witness_search(&l, &w, &m, &SearchConfig::default()),
            Err(Error::PreconditionFailed(_))
        ));
    }
}

//! Möbius subvarieties of ℍⁿ, polynomial subvarieties of ℂⁿ, and the
//! freeness and broadness predicates on pairs (L, W).

use crate::config::{
    AVOID_DISTANCE, CONSTANT_COORDINATE_TOL, DIMENSION_SAMPLES, GEOMETRIC_TOL,
    MODULAR_RELATION_TOL, RANK_TOL, REGULAR_POINT_RETRIES,
};
use crate::error::{Error, Result};
use crate::expr;
use crate::halfplane::{is_rational_up_to_scalar, moebius_apply, HPoint, Rationality, Sl2Matrix};
use crate::modular;
use crate::poly::Poly;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

// ---------------------------------------------------------------------------
// Möbius varieties

/// One defining condition on ℍⁿ (0-based indices).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Constraint {
    /// z_to = matrix · z_from.
    Link {
        from: usize,
        to: usize,
        matrix: Sl2Matrix,
    },
    /// z_index = value.
    Pin { index: usize, value: HPoint },
}

/// A connected component of the constraint graph, rooted at its least
/// index. Every member satisfies z_k = m_k · z_root.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub root: usize,
    /// (k, m_k), sorted by k, starting with (root, identity).
    pub members: Vec<(usize, Sl2Matrix)>,
    /// Value forced on the root, by a pin or an elliptic cycle.
    pub pin: Option<HPoint>,
}

impl Component {
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().map(|(k, _)| *k)
    }

    pub fn matrix_for(&self, k: usize) -> Option<&Sl2Matrix> {
        self.members.iter().find(|(i, _)| *i == k).map(|(_, m)| m)
    }
}

/// A Möbius subvariety of ℍⁿ in normalized form.
#[derive(Debug, Clone, PartialEq)]
pub struct MoebiusVariety {
    n: usize,
    components: Vec<Component>,
}

fn is_plus_minus_identity(m: &Sl2Matrix) -> bool {
    if let Some(e) = m.exact_entries() {
        let (b, c) = (&e[1], &e[2]);
        b.is_zero() && c.is_zero() && e[0] == e[3]
    } else {
        m.sign_distance(&Sl2Matrix::identity()) <= GEOMETRIC_TOL
    }
}

/// Fixed point in ℍ of an elliptic element, if it has one.
fn elliptic_fixed_point(m: &Sl2Matrix) -> Option<HPoint> {
    let [a, _, c, d] = m.to_f64();
    let tr = a + d;
    if c.abs() < 1e-300 || tr.abs() >= 2.0 - GEOMETRIC_TOL {
        return None;
    }
    let disc = Complex64::new(tr * tr - 4.0, 0.0).sqrt();
    let z = (Complex64::new(a - d, 0.0) + disc) / (2.0 * c);
    let z = if z.im > 0.0 {
        z
    } else {
        (Complex64::new(a - d, 0.0) - disc) / (2.0 * c)
    };
    HPoint::from_c64(z).ok()
}

fn same_point(a: HPoint, b: HPoint) -> bool {
    let scale = a.to_c64().norm().max(b.to_c64().norm()).max(1.0);
    (a.to_c64() - b.to_c64()).norm() <= GEOMETRIC_TOL * scale
}

fn path_to_root(parent: &[Option<usize>], mut k: usize) -> Vec<usize> {
    let mut out = vec![k];
    while let Some(p) = parent[k] {
        out.push(p);
        k = p;
    }
    out
}

fn cycle_through(parent: &[Option<usize>], u: usize, v: usize) -> Vec<usize> {
    let pu = path_to_root(parent, u);
    let pv = path_to_root(parent, v);
    let lca = *pu.iter().find(|x| pv.contains(x)).unwrap_or(&u);
    let mut cycle: Vec<usize> = pu.iter().take_while(|&&x| x != lca).copied().collect();
    cycle.push(lca);
    let back: Vec<usize> = pv.iter().take_while(|&&x| x != lca).copied().collect();
    cycle.extend(back.into_iter().rev());
    cycle
}

/// Normalize a constraint list: root each component at its least index,
/// compose links from the root, and check every cycle.
pub fn build_moebius(n: usize, constraints: &[Constraint]) -> Result<MoebiusVariety> {
    let mut adj: Vec<Vec<(usize, Sl2Matrix, usize)>> = vec![Vec::new(); n];
    let mut pins: Vec<Vec<HPoint>> = vec![Vec::new(); n];
    for (id, c) in constraints.iter().enumerate() {
        match c {
            Constraint::Link { from, to, matrix } => {
                if *from >= n || *to >= n {
                    return Err(Error::InvalidInput(format!(
                        "link {}->{} outside dimension {n}",
                        from + 1,
                        to + 1
                    )));
                }
                adj[*from].push((*to, matrix.clone(), id));
                adj[*to].push((*from, matrix.inverse(), id));
            }
            Constraint::Pin { index, value } => {
                if *index >= n {
                    return Err(Error::InvalidInput(format!(
                        "pin on z{} outside dimension {n}",
                        index + 1
                    )));
                }
                pins[*index].push(*value);
            }
        }
    }
    let mut mat: Vec<Option<Sl2Matrix>> = vec![None; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut via: Vec<Option<usize>> = vec![None; n];
    let mut components = Vec::new();
    for root in 0..n {
        if mat[root].is_some() {
            continue;
        }
        mat[root] = Some(Sl2Matrix::identity());
        let mut members = vec![root];
        let mut forced: Option<(HPoint, Vec<usize>)> = None;
        let mut force = |p: HPoint, cycle: Vec<usize>| -> Result<()> {
            match &forced {
                None => {
                    forced = Some((p, cycle));
                    Ok(())
                }
                Some((q, _)) if same_point(*q, p) => Ok(()),
                Some((_, first)) => {
                    let mut c = first.clone();
                    c.extend(cycle);
                    c.sort_unstable();
                    c.dedup();
                    Err(Error::InconsistentCycle { cycle: c })
                }
            }
        };
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let mu = mat[u].clone().expect("visited");
            for &tau in &pins[u] {
                let r = moebius_apply(&mu.inverse(), tau)?;
                force(r, vec![u])?;
            }
            for (v, h, id) in &adj[u] {
                if via[u] == Some(*id) && parent[u] == Some(*v) {
                    continue;
                }
                let mv = h.mul(&mu)?;
                match &mat[*v] {
                    None => {
                        mat[*v] = Some(mv);
                        parent[*v] = Some(u);
                        via[*v] = Some(*id);
                        members.push(*v);
                        queue.push_back(*v);
                    }
                    Some(existing) => {
                        let comp = existing.inverse().mul(&mv)?;
                        if is_plus_minus_identity(&comp) {
                            continue;
                        }
                        let cycle = cycle_through(&parent, u, *v);
                        match elliptic_fixed_point(&comp) {
                            Some(p) => force(p, cycle)?,
                            None => return Err(Error::InconsistentCycle { cycle }),
                        }
                    }
                }
            }
        }
        members.sort_unstable();
        let members = members
            .into_iter()
            .map(|k| (k, mat[k].clone().expect("visited")))
            .collect();
        components.push(Component {
            root,
            members,
            pin: forced.map(|(p, _)| p),
        });
    }
    Ok(MoebiusVariety { n, components })
}

impl MoebiusVariety {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Number of unpinned components.
    pub fn dim(&self) -> usize {
        self.components.iter().filter(|c| c.pin.is_none()).count()
    }

    /// The normalized constraint list: per component, the root pin (if any)
    /// then links from the root in index order.
    pub fn constraints(&self) -> Vec<Constraint> {
        let mut out = Vec::new();
        for c in &self.components {
            if let Some(p) = c.pin {
                out.push(Constraint::Pin {
                    index: c.root,
                    value: p,
                });
            }
            for (k, m) in c.members.iter().skip(1) {
                out.push(Constraint::Link {
                    from: c.root,
                    to: *k,
                    matrix: m.clone(),
                });
            }
        }
        out
    }

    pub fn component_of(&self, k: usize) -> &Component {
        self.components
            .iter()
            .find(|c| c.indices().any(|i| i == k))
            .expect("every index lies in a component")
    }

    /// dim π_I(L): unpinned components meeting I.
    pub fn projection_dim(&self, subset: &[usize]) -> usize {
        self.components
            .iter()
            .filter(|c| c.pin.is_none() && c.indices().any(|k| subset.contains(&k)))
            .count()
    }
}

// ---------------------------------------------------------------------------
// Verdicts

/// Evidence attached to a predicate verdict (indices are 1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    None,
    ConstantCoordinate { index: usize },
    RationalLink { i: usize, k: usize, level: i64, matrix: [i64; 4] },
    ReconstructionBound { i: usize, k: usize, denominator_bound: i64 },
    ModularRelation { i: usize, j: usize, level: u32 },
    Sampled { samples: usize, nmax: u32 },
    Subset { indices: Vec<usize>, dim_l: usize, dim_w: usize },
    Message { text: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "evidence", rename_all = "lowercase")]
pub enum Verdict {
    Pass(Evidence),
    Probable(Evidence),
    Fail(Evidence),
}

impl Verdict {
    pub fn is_ok(&self) -> bool {
        !matches!(self, Verdict::Fail(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Pass(_) => "pass",
            Verdict::Probable(_) => "probable",
            Verdict::Fail(_) => "fail",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub free_domain: Verdict,
    pub free_codomain: Verdict,
    pub broad: Verdict,
}

impl PairVerdict {
    pub fn all_ok(&self) -> bool {
        self.free_domain.is_ok() && self.free_codomain.is_ok() && self.broad.is_ok()
    }
}

/// mk·mi⁻¹ in floating point.
fn float_quotient(mk: &Sl2Matrix, mi: &Sl2Matrix) -> Result<Sl2Matrix> {
    let [a, b, c, d] = mk.to_f64();
    let [p, q, r, s] = mi.to_f64();
    // mi⁻¹ = (s −q; −r p).
    Sl2Matrix::float(a * s - b * r, b * p - a * q, c * s - d * r, d * p - c * q)
}

/// L is free when no coordinate is constant and no two coordinates are
/// related by a matrix rational up to scalar.
pub fn domain_freeness(l: &MoebiusVariety) -> Verdict {
    for c in l.components() {
        if c.pin.is_some() {
            return Verdict::Fail(Evidence::ConstantCoordinate { index: c.root + 1 });
        }
    }
    let mut probable = None;
    for c in l.components() {
        for (x, (i, mi)) in c.members.iter().enumerate() {
            for (k, mk) in &c.members[x + 1..] {
                // Entries from two different quadratic fields have no exact
                // product here; the float product still gets the bounded test.
                let h = match mk.mul(&mi.inverse()) {
                    Ok(h) => h,
                    Err(_) => match float_quotient(mk, mi) {
                        Ok(h) => h,
                        Err(e) => {
                            return Verdict::Fail(Evidence::Message {
                                text: e.to_string(),
                            })
                        }
                    },
                };
                match is_rational_up_to_scalar(&h) {
                    Rationality::Yes { n, matrix } => {
                        return Verdict::Fail(Evidence::RationalLink {
                            i: i + 1,
                            k: k + 1,
                            level: n,
                            matrix,
                        })
                    }
                    Rationality::Unknown { denominator_bound } => {
                        probable.get_or_insert(Evidence::ReconstructionBound {
                            i: i + 1,
                            k: k + 1,
                            denominator_bound,
                        });
                    }
                    Rationality::No => {}
                }
            }
        }
    }
    match probable {
        Some(e) => Verdict::Probable(e),
        None => Verdict::Pass(Evidence::None),
    }
}

// ---------------------------------------------------------------------------
// Polynomial systems

/// W ⊆ ℂⁿ cut out by polynomials with complex coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySystem {
    n: usize,
    polys: Vec<Poly>,
}

/// Numeric rank by singular values, with a flag for a gap too close to the
/// threshold to call.
fn numeric_rank(m: &DMatrix<Complex64>) -> (usize, bool) {
    if m.nrows() == 0 || m.ncols() == 0 {
        return (0, true);
    }
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return (0, true);
    }
    let rank = sv.iter().filter(|&&s| s > RANK_TOL * top).count();
    let clear = sv
        .iter()
        .all(|&s| !(s > RANK_TOL * 1e-2 * top && s < RANK_TOL * 1e2 * top));
    (rank, clear)
}

/// Orthonormal basis of ker m (columns), m of size r×n.
fn kernel(m: &DMatrix<Complex64>, n: usize) -> DMatrix<Complex64> {
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

impl PolySystem {
    pub fn new(n: usize, polys: Vec<Poly>) -> Result<Self> {
        for p in &polys {
            if p.nvars() != n {
                return Err(Error::InvalidInput(format!(
                    "polynomial in {} variables, ambient dimension {n}",
                    p.nvars()
                )));
            }
            if p.is_zero() {
                return Err(Error::InvalidInput("zero polynomial in system".into()));
            }
        }
        Ok(PolySystem { n, polys })
    }

    /// Parse equations in w1..wn; "lhs = rhs" is read as lhs − rhs.
    pub fn parse(n: usize, equations: &[&str]) -> Result<Self> {
        let vars = expr::w_vars(n);
        let polys = equations
            .iter()
            .map(|s| match s.split_once('=') {
                Some((l, r)) => Ok(expr::parse_poly(l, n, &vars)?
                    .sub(&expr::parse_poly(r, n, &vars)?)),
                None => expr::parse_poly(s, n, &vars),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, polys)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn polys(&self) -> &[Poly] {
        &self.polys
    }

    pub fn eval(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.polys.iter().map(|p| p.eval(x)).collect()
    }

    /// Residuals relative to the size of the monomials involved.
    pub fn scaled_residual(&self, x: &[Complex64]) -> f64 {
        self.polys
            .iter()
            .map(|p| p.eval(x).norm() / p.eval_abs(x).max(1.0))
            .fold(0.0, f64::max)
    }

    pub fn max_residual(&self, x: &[Complex64]) -> f64 {
        self.eval(x).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn jacobian(&self, x: &[Complex64]) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.polys.len(), self.n);
        for (r, p) in self.polys.iter().enumerate() {
            for (k, g) in p.gradient(x).into_iter().enumerate() {
                m[(r, k)] = g;
            }
        }
        m
    }

    /// Largest ratio of coefficient sizes within one equation; points of W
    /// can sit this far out, so divergence is judged relative to it.
    fn coefficient_spread(&self) -> f64 {
        self.polys
            .iter()
            .map(|p| {
                let sizes = p.terms().iter().map(|(_, c)| c.norm());
                let lo = sizes.clone().fold(f64::INFINITY, f64::min);
                sizes.fold(0.0, f64::max) / lo
            })
            .fold(1.0, f64::max)
    }

    /// Size of each polynomial's gradient at x counted without
    /// cancellation.
    fn row_scales(&self, x: &[Complex64]) -> Vec<f64> {
        self.polys
            .iter()
            .map(|p| {
                let mut abs_grad = vec![0.0f64; self.n];
                for (e, c) in p.terms() {
                    for k in (0..self.n).filter(|&k| e[k] > 0) {
                        let mut t = c.norm() * e[k] as f64;
                        for (i, &ei) in e.iter().enumerate() {
                            let pw = if i == k { ei - 1 } else { ei };
                            t *= x[i].norm().powi(pw as i32);
                        }
                        abs_grad[k] += t;
                    }
                }
                let size = abs_grad.iter().map(|v| v * v).sum::<f64>().sqrt();
                if size > 0.0 {
                    size
                } else {
                    1.0
                }
            })
            .collect()
    }

    /// Jacobian with each row divided by its row scale, so rank decisions
    /// do not depend on how each equation is scaled.
    pub fn balanced_jacobian(&self, x: &[Complex64]) -> DMatrix<Complex64> {
        let mut m = self.jacobian(x);
        for (r, size) in self.row_scales(x).into_iter().enumerate() {
            m.row_mut(r).iter_mut().for_each(|v| *v /= size);
        }
        m
    }

    /// Restrict to the fiber over fixed coordinates, dropping equations
    /// that vanish identically after substitution.
    pub fn substitute(&self, values: &[Option<Complex64>], drop_below: f64) -> Result<PolySystem> {
        let kept = values.iter().filter(|v| v.is_none()).count();
        let polys = self
            .polys
            .iter()
            .map(|p| p.substitute(values))
            .filter(|p| p.max_abs_coeff() >= drop_below)
            .collect();
        PolySystem::new(kept, polys)
    }

    /// Append equations (same ambient space).
    pub fn with(&self, extra: Vec<Poly>) -> Result<PolySystem> {
        let mut polys = self.polys.clone();
        polys.extend(extra);
        PolySystem::new(self.n, polys)
    }

    /// Gauss–Newton with minimal-norm steps from a random start: lands on a
    /// nearby point of W, or None.
    pub fn sample_point(&self, rng: &mut impl Rng) -> Option<Vec<Complex64>> {
        let scale = 2.0;
        let mut x: Vec<Complex64> = (0..self.n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(re, im) * scale
            })
            .collect();
        if self.polys.is_empty() {
            return Some(x);
        }
        self.refine(&mut x, 200).then_some(x)
    }

    /// Newton–Gauss refinement in place; true if the scaled residual drops
    /// below 1e-13.
    pub fn refine(&self, x: &mut [Complex64], steps: usize) -> bool {
        let mut res = self.scaled_residual(x);
        for _ in 0..steps {
            if res <= 1e-13 {
                return true;
            }
            let scales = self.row_scales(x);
            let fx: Vec<Complex64> = self.eval(x).iter().zip(&scales).map(|(v, s)| v / s).collect();
            let f = DMatrix::from_column_slice(self.polys.len(), 1, &fx);
            let j = self.balanced_jacobian(x);
            let svd = j.svd(true, true);
            let dx = match svd.solve(&f, 1e-14 * svd.singular_values.max().max(1e-300)) {
                Ok(d) => d,
                Err(_) => return false,
            };
            let mut t = 1.0;
            loop {
                let trial: Vec<Complex64> = x.iter().enumerate().map(|(k, v)| v - dx[k] * t).collect();
                let r = self.scaled_residual(&trial);
                if r < res || t < 1e-4 {
                    x.copy_from_slice(&trial);
                    res = r;
                    break;
                }
                t *= 0.5;
            }
            if x.iter().any(|v| !v.is_finite() || v.norm() > 1e12 * self.coefficient_spread()) {
                return false;
            }
        }
        res <= 1e-13
    }

    /// Sample points, each with its Jacobian rank and a clear-gap flag.
    fn samples(&self, count: usize, rng: &mut impl Rng) -> Vec<(Vec<Complex64>, usize, bool)> {
        let mut out = Vec::new();
        let mut tries = 0;
        while out.len() < count && tries < 4 * count {
            tries += 1;
            if let Some(x) = self.sample_point(rng) {
                let (r, clear) = numeric_rank(&self.balanced_jacobian(&x));
                out.push((x, r, clear));
            }
        }
        out
    }

    /// Numeric dimension: max Jacobian corank over sampled points.
    pub fn dimension(&self, rng: &mut impl Rng) -> Result<usize> {
        Ok(self.projection_dims(&[Vec::new()], rng)?[0])
    }

    /// For each subset I, max over samples of the rank of the projection of
    /// the tangent space onto I. An empty subset stands for all coordinates.
    pub fn projection_dims(&self, subsets: &[Vec<usize>], rng: &mut impl Rng) -> Result<Vec<usize>> {
        let pts = self.samples(DIMENSION_SAMPLES, rng);
        if pts.len() < DIMENSION_SAMPLES / 2 {
            return Err(Error::DimensionSamplingFailed(format!(
                "{} of {} samples found",
                pts.len(),
                DIMENSION_SAMPLES
            )));
        }
        let clear = pts.iter().filter(|p| p.2).count();
        if 2 * clear < pts.len() {
            return Err(Error::DimensionSamplingFailed(format!(
                "rank gap ambiguous at {} of {} samples",
                pts.len() - clear,
                pts.len()
            )));
        }
        let mut best = vec![0usize; subsets.len()];
        for (x, _, ok) in &pts {
            if !ok {
                continue;
            }
            let k = kernel(&self.balanced_jacobian(x), self.n);
            for (s, subset) in subsets.iter().enumerate() {
                let d = if subset.is_empty() {
                    k.ncols()
                } else {
                    let rows: Vec<_> = subset.iter().map(|&i| k.row(i).into_owned()).collect();
                    if k.ncols() == 0 {
                        0
                    } else {
                        numeric_rank(&DMatrix::from_rows(&rows)).0
                    }
                };
                best[s] = best[s].max(d);
            }
        }
        Ok(best)
    }
}

/// W is free when no coordinate is constant and no Φ_N(w_i, w_j) vanishes
/// on all sampled points.
pub fn codomain_freeness(w: &PolySystem, nmax: u32, samples: usize, rng: &mut impl Rng) -> Result<Verdict> {
    if nmax > 5 {
        return Err(Error::LevelUnsupported(nmax));
    }
    let mut pts = Vec::new();
    let mut tries = 0;
    while pts.len() < samples && tries < 4 * samples {
        tries += 1;
        if let Some(x) = w.sample_point(rng) {
            pts.push(x);
        }
    }
    if pts.len() < samples.div_ceil(2) {
        return Err(Error::SamplingFailed {
            found: pts.len(),
            wanted: samples,
        });
    }
    for k in 0..w.n() {
        let v0 = pts[0][k];
        let tol = CONSTANT_COORDINATE_TOL * v0.norm().max(1.0);
        if pts.iter().all(|p| (p[k] - v0).norm() <= tol) {
            return Ok(Verdict::Fail(Evidence::ConstantCoordinate { index: k + 1 }));
        }
    }
    for i in 0..w.n() {
        for j in i + 1..w.n() {
            for level in 1..=nmax {
                let phi = modular::modular_poly(level)?;
                if pts
                    .iter()
                    .all(|p| phi.relative_residual(p[i], p[j]) <= MODULAR_RELATION_TOL)
                {
                    return Ok(Verdict::Fail(Evidence::ModularRelation {
                        i: i + 1,
                        j: j + 1,
                        level,
                    }));
                }
            }
        }
    }
    Ok(Verdict::Pass(Evidence::Sampled {
        samples: pts.len(),
        nmax,
    }))
}

/// All nonempty subsets of 0..n, by size then lexicographically.
pub fn subsets(n: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (1u32..(1 << n))
        .map(|mask| (0..n).filter(|k| mask & (1 << k) != 0).collect())
        .collect();
    out.sort_by(|a: &Vec<usize>, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    out
}

/// (L, W) is broad when dim π_I(L) + dim π_I(W) ≥ |I| for every I.
pub fn broadness(l: &MoebiusVariety, w: &PolySystem, rng: &mut impl Rng) -> Result<Verdict> {
    if l.n() != w.n() {
        return Err(Error::InvalidInput(format!(
            "L in dimension {}, W in dimension {}",
            l.n(),
            w.n()
        )));
    }
    let subs = subsets(w.n());
    let dims = w.projection_dims(&subs, rng)?;
    for (s, dw) in subs.iter().zip(dims) {
        let dl = l.projection_dim(s);
        if dl + dw < s.len() {
            return Ok(Verdict::Fail(Evidence::Subset {
                indices: s.iter().map(|k| k + 1).collect(),
                dim_l: dl,
                dim_w: dw,
            }));
        }
    }
    Ok(Verdict::Probable(Evidence::Sampled {
        samples: DIMENSION_SAMPLES,
        nmax: 0,
    }))
}

/// A point of W of maximal observed Jacobian rank with every coordinate at
/// least 1e-3 away from the avoided values.
pub fn regular_point_sample(w: &PolySystem, avoid: &[Complex64], rng: &mut impl Rng) -> Result<Vec<Complex64>> {
    let generic = w
        .samples(DIMENSION_SAMPLES, rng)
        .iter()
        .map(|p| p.1)
        .max()
        .ok_or(Error::NoRegularPoint(0))?;
    for _ in 0..REGULAR_POINT_RETRIES {
        let Some(x) = w.sample_point(rng) else { continue };
        if numeric_rank(&w.balanced_jacobian(&x)).0 != generic && !w.polys().is_empty() {
            continue;
        }
        if x
            .iter()
            .all(|v| avoid.iter().all(|a| (v - a).norm() >= AVOID_DISTANCE))
        {
            return Ok(x);
        }
    }
    Err(Error::NoRegularPoint(REGULAR_POINT_RETRIES))
}

/// Every predicate for a j- or j′-mode pair.
pub fn pair_verdict(l: &MoebiusVariety, w: &PolySystem, rng: &mut impl Rng) -> Result<PairVerdict> {
    Ok(PairVerdict {
        free_domain: domain_freeness(l),
        free_codomain: codomain_freeness(w, 5, DIMENSION_SAMPLES, rng)?,
        broad: broadness(l, w, rng)?,
    })
}

//! Sparse multivariate polynomials with complex float coefficients.

use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, PartialEq)]
pub struct Poly {
    nvars: usize,
    /// Sorted by exponent vector, no zero coefficients.
    terms: Vec<(Vec<u32>, Complex64)>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly[{}]({})", self.nvars, self)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (e, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({}{:+}i)", c.re, c.im)?;
            for (v, &p) in e.iter().enumerate() {
                if p == 1 {
                    write!(f, "*v{}", v + 1)?;
                } else if p > 1 {
                    write!(f, "*v{}^{}", v + 1, p)?;
                }
            }
        }
        Ok(())
    }
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: Vec::new(),
        }
    }

    pub fn constant(nvars: usize, c: Complex64) -> Self {
        Self::from_terms(nvars, vec![(vec![0; nvars], c)])
    }

    pub fn var(nvars: usize, k: usize) -> Self {
        let mut e = vec![0; nvars];
        e[k] = 1;
        Self::from_terms(nvars, vec![(e, Complex64::new(1.0, 0.0))])
    }

    pub fn from_terms(nvars: usize, terms: Vec<(Vec<u32>, Complex64)>) -> Self {
        let mut map: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent length mismatch");
            *map.entry(e).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        Poly {
            nvars,
            terms: map
                .into_iter()
                .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
                .collect(),
        }
    }

    /// Linear form `Σ a_k v_k + b`.
    pub fn linear(coeffs: &[Complex64], b: Complex64) -> Self {
        let n = coeffs.len();
        let mut terms: Vec<_> = coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let mut e = vec![0; n];
                e[k] = 1;
                (e, c)
            })
            .collect();
        terms.push((vec![0; n], b));
        Self::from_terms(n, terms)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[(Vec<u32>, Complex64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<Complex64> {
        match self.terms.as_slice() {
            [] => Some(Complex64::new(0.0, 0.0)),
            [(e, c)] if e.iter().all(|&p| p == 0) => Some(*c),
            _ => None,
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|(e, _)| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max)
    }

    /// Variables that occur with a nonzero exponent.
    pub fn support(&self) -> Vec<usize> {
        (0..self.nvars)
            .filter(|&v| self.terms.iter().any(|(e, _)| e[v] > 0))
            .collect()
    }

    pub fn add(&self, o: &Poly) -> Poly {
        assert_eq!(self.nvars, o.nvars);
        Self::from_terms(
            self.nvars,
            self.terms.iter().chain(o.terms.iter()).cloned().collect(),
        )
    }

    pub fn scale(&self, k: Complex64) -> Poly {
        Self::from_terms(
            self.nvars,
            self.terms.iter().map(|(e, c)| (e.clone(), c * k)).collect(),
        )
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        assert_eq!(self.nvars, o.nvars);
        let mut out = Vec::with_capacity(self.terms.len() * o.terms.len());
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.push((e, c1 * c2));
            }
        }
        Self::from_terms(self.nvars, out)
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut acc = Poly::constant(self.nvars, Complex64::new(1.0, 0.0));
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn eval(&self, x: &[Complex64]) -> Complex64 {
        debug_assert_eq!(x.len(), self.nvars);
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(x)
                    .fold(*c, |acc, (&p, xi)| if p == 0 { acc } else { acc * xi.powu(p) })
            })
            .sum()
    }

    /// Sum of |term| at `x`, the natural scale for a relative residual.
    pub fn eval_abs(&self, x: &[Complex64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(x)
                    .fold(c.norm(), |acc, (&p, xi)| acc * xi.norm().powi(p as i32))
            })
            .sum()
    }

    pub fn gradient(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut g = vec![Complex64::new(0.0, 0.0); self.nvars];
        for (e, c) in &self.terms {
            for v in 0..self.nvars {
                if e[v] == 0 {
                    continue;
                }
                let mut t = c * e[v] as f64;
                for (w, (&p, xi)) in e.iter().zip(x).enumerate() {
                    let p = if w == v { p - 1 } else { p };
                    if p > 0 {
                        t *= xi.powu(p);
                    }
                }
                g[v] += t;
            }
        }
        g
    }

    /// Substitute values for the variables flagged `Some`, keeping the rest
    /// (renumbered in order).
    pub fn substitute(&self, values: &[Option<Complex64>]) -> Poly {
        assert_eq!(values.len(), self.nvars);
        let keep: Vec<usize> = (0..self.nvars).filter(|&v| values[v].is_none()).collect();
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mut coeff = *c;
                for (v, &p) in e.iter().enumerate() {
                    if let Some(x) = values[v] {
                        if p > 0 {
                            coeff *= x.powu(p);
                        }
                    }
                }
                (keep.iter().map(|&v| e[v]).collect(), coeff)
            })
            .collect();
        Self::from_terms(keep.len(), terms)
    }

    /// Reinterpret in a larger ambient space: variable k goes to `map[k]`.
    pub fn embed(&self, nvars: usize, map: &[usize]) -> Poly {
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mut ne = vec![0; nvars];
                for (k, &p) in e.iter().enumerate() {
                    ne[map[k]] += p;
                }
                (ne, *c)
            })
            .collect();
        Self::from_terms(nvars, terms)
    }
}

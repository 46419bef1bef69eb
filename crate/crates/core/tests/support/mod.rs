//! Shared helpers for the integration tests.
#![allow(dead_code)]

pub mod oracle;

use jwit_core::{HPoint, Quad, Sl2Matrix, Sl2Z};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;

pub fn sqrt(n: u64) -> Quad {
    Quad::sqrt_rational(&BigRational::from_integer(BigInt::from(n))).unwrap()
}

/// Random γ ∈ SL2(Z) with entries bounded by `h`.
pub fn random_sl2z(rng: &mut impl Rng, h: i64) -> Sl2Z {
    loop {
        let c = rng.random_range(-h..=h);
        let d = rng.random_range(-h..=h);
        let sols: Vec<Sl2Z> = (-h..=h)
            .flat_map(|a| (-h..=h).map(move |b| (a, b)))
            .filter(|&(a, b)| a * d - b * c == 1)
            .map(|(a, b)| Sl2Z { a, b, c, d })
            .collect();
        if !sols.is_empty() {
            return sols[rng.random_range(0..sols.len())];
        }
    }
}

/// Random exact matrix over ℚ(√2): (1 a√2; 0 1)(1 0; b 1) with small
/// rational a, b, times a random integer matrix.
pub fn random_sqrt2_matrix(rng: &mut impl Rng) -> Sl2Matrix {
    let a = Quad::frac(rng.random_range(1..=3), rng.random_range(1..=3)) * sqrt(2);
    let b = Quad::frac(rng.random_range(-3..=3), rng.random_range(1..=4));
    let u = Sl2Matrix::exact(Quad::one(), a, Quad::zero(), Quad::one()).unwrap();
    let l = Sl2Matrix::exact(Quad::one(), Quad::zero(), b, Quad::one()).unwrap();
    u.mul(&l).unwrap()
}

pub fn random_point(rng: &mut impl Rng, ylo: f64, yhi: f64) -> HPoint {
    HPoint::new(rng.random_range(-0.5..0.5), rng.random_range(ylo..yhi)).unwrap()
}

//! The tolerance ledger. Every float threshold the predicates and searches
//! compare against lives here so tests can audit them in one place.

use serde::{Deserialize, Serialize};

/// Geometric identities (Möbius images, connecting matrices, dual pairings).
pub const GEOMETRIC_TOL: f64 = 1e-10;
/// Residual accepted by continued-fraction rational reconstruction.
pub const RATIONAL_RECONSTRUCTION_TOL: f64 = 1e-9;
/// Largest denominator tried by rational reconstruction.
pub const RATIONAL_DENOMINATOR_BOUND: i64 = 1_000_000;
/// Denominators above this make a float reconstruction ambiguous: a double
/// cannot tell p/q from a nearby irrational once q² is comparable to 1/tol.
pub const RATIONAL_AMBIGUITY_DENOMINATOR: i64 = 1_000;
/// Determinant slack for float SL2 matrices.
pub const FLOAT_DET_TOL: f64 = 1e-12;
/// Slack used by the fundamental-domain reduction loop (double-double units).
pub const REDUCTION_EPS: f64 = 1e-15;
/// Relative residual at which Φ_N vanishes on every sample of W.
pub const MODULAR_RELATION_TOL: f64 = 1e-6;
/// Relative residual at which Φ_N(w1, w2) vanishes at a single pair. Tighter
/// than the sampled test: Φ_5(1728, Y) has a double root at Y = 1728 (the two
/// endomorphisms 2 ± i of the curve with j = 1728), so Φ_5(1728, 1729) is
/// already 1e−7 relative.
pub const MODULAR_RELATION_POINT_TOL: f64 = 1e-9;
/// A coordinate is constant on W when samples agree to this relative tolerance.
pub const CONSTANT_COORDINATE_TOL: f64 = 1e-8;
/// Relative singular-value threshold for numeric Jacobian rank.
pub const RANK_TOL: f64 = 1e-8;
/// Samples used for numeric dimension estimates.
pub const DIMENSION_SAMPLES: usize = 20;
/// Minimum distance of a regular point's coordinates from avoided values.
pub const AVOID_DISTANCE: f64 = 1e-3;
/// Retries allowed when drawing a regular point.
pub const REGULAR_POINT_RETRIES: usize = 100;
/// Default height bound for the dual-lattice relation search on float input.
pub const DENSITY_HEIGHT: i64 = 100;
/// Residual of Σ conj(θ_i) z_i on a basis of L below which θ counts.
pub const DENSITY_RESIDUAL_TOL: f64 = 1e-9;
/// Coefficient bound for the quotient search of the rotundity check.
pub const ROTUNDITY_HEIGHT: i64 = 5;
/// Equations whose coefficients all fall below this are dropped after
/// substituting a partial witness.
pub const FIBER_DROP_TOL: f64 = 1e-12;
/// Smallest |dF(z0)| Newton will divide by.
pub const DERIVATIVE_FLOOR: f64 = 1e-12;
/// Required magnitude of dF/dz at the base point after derivative repair.
pub const DERIVATIVE_REPAIR_FLOOR: f64 = 1e-6;
/// θ values scanned on the connecting circle during derivative repair.
pub const THETA_SCAN: usize = 16;
/// Boundary samples for the Kantorovich Lipschitz estimate.
pub const KANTOROVICH_SAMPLES: usize = 32;
/// Safety factor applied to the sampled Lipschitz constant.
pub const KANTOROVICH_SAFETY: f64 = 2.0;
/// Largest q-series order used by j evaluation.
pub const MAX_SERIES_ORDER: usize = 64;
/// Distance from a lattice point at which ℘ refuses to evaluate.
pub const POLE_GUARD: f64 = 1e-8;

/// Budget and seed for every witness search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub height_schedule: Vec<i64>,
    pub newton_tol: f64,
    pub max_newton_steps: usize,
    pub retries: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            height_schedule: vec![5, 10, 20, 40],
            newton_tol: 1e-10,
            max_newton_steps: 50,
            retries: 25,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn with_seed(seed: u64) -> Self {
        SearchConfig {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        use crate::Error::InvalidInput;
        if self.height_schedule.is_empty() {
            return Err(InvalidInput("height_schedule is empty".into()));
        }
        if self.height_schedule[0] < 1 || self.height_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(InvalidInput(
                "height_schedule must be positive and strictly increasing".into(),
            ));
        }
        if !(self.newton_tol > 0.0 && self.newton_tol.is_finite()) {
            return Err(InvalidInput("newton_tol must be positive".into()));
        }
        if self.max_newton_steps == 0 || self.retries == 0 {
            return Err(InvalidInput("step and retry budgets must be positive".into()));
        }
        Ok(())
    }
}

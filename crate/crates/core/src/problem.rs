//! Problem files, witness reports and the check/witness drivers behind the
//! command line.

use crate::config::{SearchConfig, ROTUNDITY_HEIGHT};
use crate::error::{Error, Result};
use crate::expr::{self, Scalar};
use crate::halfplane::{HPoint, Sl2Matrix};
use crate::search::{blur_t1j_witness, j_witness, Witness};
use crate::torus::{
    hyperplane_density_test, rotundity_check, torus_witness_search, CurveSystem, Density,
    EllipticModel, Lattice, LinearSubspace, Rotundity, TorusWitness,
};
use crate::varieties::{build_moebius, pair_verdict, Constraint, MoebiusVariety, PairVerdict, PolySystem};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: &str = "1";
pub const TOOL_VERSION: &str = concat!("jwit ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    J,
    Jprime,
    Torus,
}

/// One Möbius condition, coordinates 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ConstraintSpec {
    /// z_to = matrix · z_from, with `link: [from, to]`.
    Link { link: [usize; 2], matrix: [String; 4] },
    /// z_pin = value.
    Pin { pin: usize, value: String },
}

/// A translate of a ℂ-linear subspace of ℂ^g, spanned by the rows of
/// `basis`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubspaceSpec {
    pub basis: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translate: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LSpec {
    Moebius(Vec<ConstraintSpec>),
    Subspace(SubspaceSpec),
}

/// The JSON problem file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub version: String,
    pub mode: Mode,
    /// Ambient dimension: n for ℍⁿ, g for E^g.
    pub n: usize,
    #[serde(rename = "L")]
    pub l: LSpec,
    /// Equations in w1..wn, or in x1..xg, y1..yg for the torus.
    #[serde(rename = "W")]
    pub w: Vec<String>,
    /// Period τ of E = ℂ/(ℤ + τℤ), torus mode only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<String>,
    #[serde(default)]
    pub config: SearchConfig,
}

/// A parsed, validated problem.
#[derive(Debug, Clone)]
pub enum Problem {
    Moebius {
        mode: Mode,
        l: MoebiusVariety,
        w: PolySystem,
        config: SearchConfig,
    },
    Torus {
        l: LinearSubspace,
        w: CurveSystem,
        model: EllipticModel,
        config: SearchConfig,
    },
}

fn scalar(s: &str) -> Result<Scalar> {
    expr::parse_scalar(s)
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files serialize")
    }

    pub fn parse(&self) -> Result<Problem> {
        if self.version != SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "unsupported schema version \"{}\"",
                self.version
            )));
        }
        if self.n == 0 {
            return Err(Error::Parse("n must be positive".into()));
        }
        self.config.validate().map_err(|e| Error::Parse(e.to_string()))?;
        let config = self.config.clone();
        let eqs: Vec<&str> = self.w.iter().map(String::as_str).collect();
        match (self.mode, &self.l) {
            (Mode::J | Mode::Jprime, LSpec::Moebius(cs)) => {
                if self.tau.is_some() {
                    return Err(Error::Parse("tau is only used in torus mode".into()));
                }
                let index = |k: usize| {
                    if (1..=self.n).contains(&k) {
                        Ok(k - 1)
                    } else {
                        Err(Error::Parse(format!("coordinate {k} outside 1..={}", self.n)))
                    }
                };
                let constraints = cs
                    .iter()
                    .map(|c| match c {
                        ConstraintSpec::Link { link, matrix } => Ok(Constraint::Link {
                            from: index(link[0])?,
                            to: index(link[1])?,
                            matrix: Sl2Matrix::parse([&matrix[0], &matrix[1], &matrix[2], &matrix[3]])?,
                        }),
                        ConstraintSpec::Pin { pin, value } => {
                            let z = scalar(value)?.to_c64();
                            Ok(Constraint::Pin {
                                index: index(*pin)?,
                                value: HPoint::from_c64(z)?,
                            })
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Problem::Moebius {
                    mode: self.mode,
                    l: build_moebius(self.n, &constraints)?,
                    w: PolySystem::parse(self.n, &eqs)?,
                    config,
                })
            }
            (Mode::Torus, LSpec::Subspace(sub)) => {
                let tau = self
                    .tau
                    .as_deref()
                    .ok_or_else(|| Error::Parse("torus mode needs tau".into()))?;
                let model = match scalar(tau)? {
                    Scalar::Exact(t) => EllipticModel::from_exact(t)?,
                    Scalar::Float(t) => EllipticModel::new(t)?,
                };
                let g = self.n;
                if sub.basis.iter().any(|row| row.len() != g) {
                    return Err(Error::Parse(format!("basis rows must have {g} entries")));
                }
                let parsed: Vec<Vec<Scalar>> = sub
                    .basis
                    .iter()
                    .map(|row| row.iter().map(|s| scalar(s)).collect())
                    .collect::<Result<_>>()?;
                let exact: Option<Vec<Vec<_>>> = parsed
                    .iter()
                    .map(|row| row.iter().map(|s| s.exact().cloned()).collect())
                    .collect();
                let mut l = match exact {
                    Some(rows) => LinearSubspace::from_exact(g, rows)?,
                    None => LinearSubspace::new(
                        g,
                        parsed.iter().map(|r| r.iter().map(Scalar::to_c64).collect()).collect(),
                    )?,
                };
                if let Some(t) = &sub.translate {
                    if t.len() != g {
                        return Err(Error::Parse(format!("translate must have {g} entries")));
                    }
                    let t: Vec<Complex64> =
                        t.iter().map(|s| scalar(s).map(|v| v.to_c64())).collect::<Result<_>>()?;
                    l = l.with_translate(t)?;
                }
                Ok(Problem::Torus {
                    l,
                    w: CurveSystem::parse(g, &eqs)?,
                    model,
                    config,
                })
            }
            (Mode::Torus, LSpec::Moebius(_)) => Err(Error::Parse(
                "torus mode needs L as {\"basis\": [...]}".into(),
            )),
            (_, LSpec::Subspace(_)) => Err(Error::Parse(
                "j and jprime modes need L as a list of links and pins".into(),
            )),
        }
    }
}

impl Problem {
    pub fn config(&self) -> &SearchConfig {
        match self {
            Problem::Moebius { config, .. } | Problem::Torus { config, .. } => config,
        }
    }

    pub fn config_mut(&mut self) -> &mut SearchConfig {
        match self {
            Problem::Moebius { config, .. } | Problem::Torus { config, .. } => config,
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            Problem::Moebius { mode, .. } => *mode,
            Problem::Torus { .. } => Mode::Torus,
        }
    }
}

/// Predicate verdicts for a problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<PairVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<Density>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotundity: Option<Rotundity>,
}

impl Verdicts {
    pub fn all_ok(&self) -> bool {
        self.pair.as_ref().is_none_or(PairVerdict::all_ok)
            && self.density.as_ref().is_none_or(Density::is_dense)
            && self
                .rotundity
                .as_ref()
                .is_none_or(|r| matches!(r, Rotundity::Rotund { .. }))
    }

    /// One line per predicate: `name verdict`.
    pub fn table(&self) -> Vec<(String, String)> {
        let mut rows = Vec::new();
        if let Some(p) = &self.pair {
            rows.push(("domain_freeness".into(), p.free_domain.label().into()));
            rows.push(("codomain_freeness".into(), p.free_codomain.label().into()));
            rows.push(("broadness".into(), p.broad.label().into()));
        }
        if let Some(d) = &self.density {
            let v = if d.is_dense() { "dense" } else { "contained" };
            rows.push(("density".into(), v.into()));
        }
        if let Some(r) = &self.rotundity {
            let v = match r {
                Rotundity::Rotund { .. } => "rotund",
                Rotundity::Violation { .. } => "violation",
            };
            rows.push(("rotundity".into(), v.into()));
        }
        rows
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WitnessRecord {
    Moebius(Witness),
    Torus(TorusWitness),
}

impl WitnessRecord {
    pub fn residuals(&self) -> &[f64] {
        match self {
            WitnessRecord::Moebius(w) => &w.residuals,
            WitnessRecord::Torus(w) => &w.residuals,
        }
    }

    pub fn tolerance(&self) -> f64 {
        match self {
            WitnessRecord::Moebius(w) => w.budget_used.tolerance,
            WitnessRecord::Torus(w) => w.tolerance,
        }
    }

    /// (height, best coset distance) per height tried.
    pub fn height_trace(&self) -> Vec<(i64, f64)> {
        match self {
            WitnessRecord::Moebius(w) => w
                .budget_used
                .heights
                .iter()
                .map(|h| (h.height, h.best_distance))
                .collect(),
            WitnessRecord::Torus(_) => Vec::new(),
        }
    }

    /// |F| after each Newton step.
    pub fn residual_trace(&self) -> &[f64] {
        match self {
            WitnessRecord::Moebius(w) => &w.budget_used.residual_trace,
            WitnessRecord::Torus(w) => &w.trace,
        }
    }
}

/// How a run ended; the exit code of the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Success,
    PredicateFailed,
    ParseError,
    PrecisionUnreachable,
    SearchExhausted,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::PredicateFailed => 1,
            Status::ParseError => 2,
            Status::PrecisionUnreachable => 3,
            Status::SearchExhausted => 4,
        }
    }

    pub fn of_error(e: &Error) -> Status {
        match e {
            Error::PrecisionUnreachable { .. } => Status::PrecisionUnreachable,
            Error::PredicateFailed(_) | Error::PreconditionFailed(_) | Error::ClosedSubtorus => {
                Status::PredicateFailed
            }
            Error::SearchExhausted { .. }
            | Error::NoConvergence(_)
            | Error::NoRegularPoint(_)
            | Error::LevelSetEmpty
            | Error::SamplingFailed { .. }
            | Error::DimensionSamplingFailed(_)
            | Error::DerivativeTooSmall(_)
            | Error::LeftDomain(_)
            | Error::NonTermination(_) => Status::SearchExhausted,
            _ => Status::ParseError,
        }
    }
}

/// Everything a run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub version: String,
    pub tool: String,
    pub mode: Mode,
    pub seed: u64,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdicts: Option<Verdicts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessRecord>,
    pub residuals: Vec<f64>,
    /// Evaluation error bound per coordinate of the witness point.
    pub error_bounds: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_residual: Option<f64>,
    pub config: SearchConfig,
}

impl WitnessReport {
    fn new(problem: &Problem, status: Status) -> Self {
        WitnessReport {
            version: SCHEMA_VERSION.into(),
            tool: TOOL_VERSION.into(),
            mode: problem.mode(),
            seed: problem.config().seed,
            status,
            message: None,
            verdicts: None,
            witness: None,
            residuals: Vec::new(),
            error_bounds: Vec::new(),
            best_residual: None,
            config: problem.config().clone(),
        }
    }

    fn failed(problem: &Problem, e: &Error) -> Self {
        let mut r = Self::new(problem, Status::of_error(e));
        r.message = Some(e.to_string());
        if let Error::SearchExhausted { best_residual } = e {
            r.best_residual = best_residual.is_finite().then_some(*best_residual);
        }
        r
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Run every predicate that applies to the problem's mode.
pub fn verdicts(problem: &Problem) -> Result<Verdicts> {
    let mut rng = ChaCha8Rng::seed_from_u64(problem.config().seed);
    match problem {
        Problem::Moebius { l, w, .. } => Ok(Verdicts {
            pair: Some(pair_verdict(l, w, &mut rng)?),
            density: None,
            rotundity: None,
        }),
        Problem::Torus { l, w, model, .. } => {
            let lattice = Lattice::elliptic_power(model, l.g())?;
            Ok(Verdicts {
                pair: None,
                density: Some(hyperplane_density_test(l, &lattice)?),
                rotundity: Some(rotundity_check(l, w, model, ROTUNDITY_HEIGHT, &mut rng)?),
            })
        }
    }
}

/// Predicates only.
pub fn run_check(problem: &Problem) -> WitnessReport {
    match verdicts(problem) {
        Ok(v) => {
            let status = if v.all_ok() {
                Status::Success
            } else {
                Status::PredicateFailed
            };
            let mut r = WitnessReport::new(problem, status);
            r.verdicts = Some(v);
            r
        }
        Err(e) => WitnessReport::failed(problem, &e),
    }
}

/// Predicates, then the search for the problem's mode. With `force` the
/// search runs even when a predicate fails.
pub fn run_witness(problem: &Problem, force: bool) -> WitnessReport {
    let v = match verdicts(problem) {
        Ok(v) => v,
        Err(e) => return WitnessReport::failed(problem, &e),
    };
    if !v.all_ok() && !force {
        let mut r = WitnessReport::new(problem, Status::PredicateFailed);
        r.message = Some("predicate check failed; rerun with --force to search anyway".into());
        r.verdicts = Some(v);
        return r;
    }
    let found = match problem {
        Problem::Moebius { mode, l, w, config } => {
            let run = match mode {
                Mode::Jprime => blur_t1j_witness(l, w, config),
                _ if force => crate::search::j_witness_unchecked(l, w, config),
                _ => j_witness(l, w, config),
            };
            run.map(|wit| {
                let bounds = wit.error_bounds.clone();
                (WitnessRecord::Moebius(wit), bounds)
            })
        }
        Problem::Torus { l, w, model, config } => {
            torus_witness_search(l, w, model, config).map(|wit| (WitnessRecord::Torus(wit), Vec::new()))
        }
    };
    match found {
        Ok((wit, bounds)) => {
            let mut r = WitnessReport::new(problem, Status::Success);
            r.residuals = wit.residuals().to_vec();
            r.error_bounds = bounds;
            r.verdicts = Some(v);
            r.witness = Some(wit);
            r
        }
        Err(e) => {
            let mut r = WitnessReport::failed(problem, &e);
            r.verdicts = Some(v);
            r
        }
    }
}

/// CSV of the coset distances: `height,best_distance`.
pub fn height_csv(wit: &WitnessRecord) -> String {
    let mut out = String::from("height,best_distance\n");
    for (h, d) in wit.height_trace() {
        out.push_str(&format!("{h},{d:e}\n"));
    }
    out
}

/// CSV of the Newton residuals: `step,abs_residual`.
pub fn residual_csv(wit: &WitnessRecord) -> String {
    let mut out = String::from("step,abs_residual\n");
    for (k, r) in wit.residual_trace().iter().enumerate() {
        out.push_str(&format!("{k},{r:e}\n"));
    }
    out
}

//! Verification suites producing [`VerificationReport`]s.
//!
//! Every trial draws from its own random stream (`seed`, trial index), so
//! results are independent of the worker count; trial outcomes are merged
//! in index order.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::jet::{
    base_map_unchecked, eval_jet, fd_jet, fd_jet_extended, InvariantExpr, Jet2, PointJets, FD_STEP,
};
use crate::matrix::Mat;
use crate::morphisms::{
    dual_quat_family, dual_real_morphism, entry_morphism, holomorphic_compose, quat_family,
    real_morphism, type_iv_bigcell_morphism, Invariance, Morphism, Polynomial,
};
use crate::report::{mat_to_json, ReportBuilder, VerificationReport};
use crate::sampling::{group_point, random_orthogonal, stabilizer_point, trial_rng};
use crate::scalar::{crat, rat, ComplexRational, Rational, Scalar, C64};
use crate::spaces::{
    exact_quaternionic_basis, exact_skew_basis, exact_symmetric_basis, ScaledMat, SpaceId,
    SpaceSpec,
};

/// Harmonicity tolerance on non-compact spaces.
pub const TOL_NONCOMPACT: f64 = 1e-8;
/// Harmonicity tolerance on compact duals and the type IV space.
pub const TOL_COMPACT: f64 = 1e-7;
/// Relative tolerance of the eigenvalue relations `tau(phi) = c phi`.
pub const TOL_LEMMA_CONSTANT: f64 = 1e-9;
/// Relative tolerance of the remaining derivative relations.
pub const TOL_LEMMA_RELATION: f64 = 1e-8;
pub const TOL_QUOTIENT: f64 = 1e-8;
pub const TOL_PRODUCT_RULE: f64 = 1e-9;
pub const TOL_INVARIANCE: f64 = 1e-9;
pub const TOL_SCALE: f64 = 1e-10;
pub const TOL_BASIS: f64 = 1e-9;
pub const TOL_ORTHONORMALITY: f64 = 1e-12;
pub const TOL_ORACLE: f64 = 1e-5;
/// Allowed ratio of the oracle disagreement to the estimated truncation error.
pub const ENVELOPE_MARGIN: f64 = 3.0;
pub const TOL_MINOR_IMAG: f64 = 1e-10;
pub const TOL_MINOR_ORACLE: f64 = 1e-9;
/// Accepted deviation of a measured convergence order from 2.
pub const TOL_ORDER: f64 = 0.2;
/// Smallest normalized tension residual the control must show.
pub const CONTROL_FLOOR: f64 = 0.1;
/// One trial in this many is cross-checked against finite differences.
pub const ORACLE_EVERY: usize = 10;
pub const CONVERGENCE_STEPS: [f64; 3] = [1e-3, 5e-4, 2.5e-4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub trials: usize,
    pub seed: u64,
    /// Overrides the suite's primary tolerance.
    pub tolerance: Option<f64>,
    pub jobs: usize,
}

impl SuiteConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self {
            trials,
            seed,
            tolerance: None,
            jobs: 1,
        }
    }

    pub fn with_tolerance(mut self, tol: Option<f64>) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs.max(1);
        self
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    fn tol(&self, default: f64) -> f64 {
        self.tolerance.unwrap_or(default)
    }
}

/// Default harmonicity tolerance for morphisms on `space`.
pub fn default_tolerance(space: SpaceId) -> f64 {
    if space.is_compact() || space == SpaceId::SlcSu {
        TOL_COMPACT
    } else {
        TOL_NONCOMPACT
    }
}

enum Item {
    Residual {
        key: &'static str,
        detail: String,
        value: f64,
        tol: f64,
    },
    Floor {
        key: &'static str,
        detail: String,
        value: f64,
        floor: f64,
    },
    Exact {
        detail: String,
        equal: bool,
        discrepancy: f64,
    },
    Error {
        key: &'static str,
        message: String,
        tol: f64,
    },
}

#[derive(Default)]
struct Trial {
    items: Vec<Item>,
    inputs: serde_json::Value,
    /// Rejected samples at which the two square-root conditions disagreed.
    disagreements: usize,
}

impl Trial {
    fn with_inputs(inputs: serde_json::Value) -> Self {
        Self {
            inputs,
            ..Self::default()
        }
    }

    fn residual(&mut self, key: &'static str, detail: impl Into<String>, value: f64, tol: f64) {
        self.items.push(Item::Residual {
            key,
            detail: detail.into(),
            value,
            tol,
        });
    }

    fn error(&mut self, key: &'static str, err: &Error, tol: f64) {
        self.items.push(Item::Error {
            key,
            message: err.to_string(),
            tol,
        });
    }
}

fn map_trials<T: Send>(cfg: &SuiteConfig, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    if cfg.jobs > 1 {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
        {
            return pool.install(|| (0..cfg.trials).into_par_iter().map(&f).collect());
        }
    }
    (0..cfg.trials).map(f).collect()
}

/// Merges trial outcomes in index order. Sampling failures abort the suite;
/// other evaluation errors become failures of the trial.
fn merge(b: &mut ReportBuilder, outcomes: Vec<Result<Trial>>, error_tol: f64) -> Result<usize> {
    let mut disagreements = 0;
    for (t, outcome) in outcomes.into_iter().enumerate() {
        let trial = match outcome {
            Ok(trial) => trial,
            Err(e @ Error::SamplingFailure { .. }) => return Err(e),
            Err(e) => {
                b.record_error(t, "evaluation", &e.to_string(), error_tol);
                continue;
            }
        };
        disagreements += trial.disagreements;
        let inputs = trial.inputs;
        let get = || inputs.clone();
        for item in trial.items {
            match item {
                Item::Residual {
                    key,
                    detail,
                    value,
                    tol,
                } => b.record(t, key, &detail, value, tol, &get),
                Item::Floor {
                    key,
                    detail,
                    value,
                    floor,
                } => b.record_floor(t, key, &detail, value, floor, &get),
                Item::Exact {
                    detail,
                    equal,
                    discrepancy,
                } => b.record_exact(t, &detail, equal, discrepancy, &get),
                Item::Error { key, message, tol } => b.record_error(t, key, &message, tol),
            }
        }
    }
    Ok(disagreements)
}

fn check_trials(cfg: &SuiteConfig) -> Result<()> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Exact lemma suites

fn random_rational(rng: &mut impl Rng) -> Rational {
    rat(rng.random_range(-9..=9), rng.random_range(1..=9))
}

fn random_complex_rational(rng: &mut impl Rng) -> ComplexRational {
    crat(random_rational(rng), random_rational(rng))
}

/// `u M w^t`.
fn bilinear<T: Scalar>(u: &[T], m: &Mat<T>, w: &[T]) -> T {
    let mut acc = T::zero();
    for (i, ui) in u.iter().enumerate() {
        if ui.is_zero() {
            continue;
        }
        for (j, wj) in w.iter().enumerate() {
            let mij = &m[(i, j)];
            if !mij.is_zero() {
                acc = acc + ui.clone() * mij.clone() * wj.clone();
            }
        }
    }
    acc
}

fn dot<T: Scalar>(u: &[T], w: &[T]) -> T {
    u.iter()
        .zip(w)
        .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
}

fn basis_sum<T: Scalar>(
    basis: &[ScaledMat<T>],
    lift: impl Fn(&Rational) -> T,
    term: impl Fn(&Mat<T>) -> T,
) -> T {
    basis
        .iter()
        .fold(T::zero(), |acc, z| acc + lift(&z.scale_sq) * term(&z.mat))
}

fn rational_json(v: &[Rational]) -> serde_json::Value {
    json!(v.iter().map(ToString::to_string).collect::<Vec<_>>())
}

fn complex_rational_json(v: &[ComplexRational]) -> serde_json::Value {
    json!(v
        .iter()
        .map(|z| format!("{} + {}i", z.re, z.im))
        .collect::<Vec<_>>())
}

fn approx_gap_real(a: &Rational, b: &Rational) -> f64 {
    crate::scalar::rational_to_f64(&(a - b)).abs()
}

fn approx_gap_complex(a: &ComplexRational, b: &ComplexRational) -> f64 {
    crate::scalar::complex_rational_to_c64(&(a.clone() - b.clone())).norm()
}

/// The two identities over the symmetric and skew elementary bases, in
/// exact rational arithmetic at random points of `Q^n`.
pub fn verify_lemma_formula_real(n: usize, cfg: &SuiteConfig) -> Result<VerificationReport> {
    check_trials(cfg)?;
    if n == 0 || n > 8 {
        return Err(Error::InvalidArgument(format!("need 1 <= n <= 8, got {n}")));
    }
    let start = Instant::now();
    let sym = exact_symmetric_basis(n);
    let skew = exact_skew_basis(n);
    let half = rat(1, 2);
    let outcomes = map_trials(cfg, |t| {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let mut vector = || {
            (0..n)
                .map(|_| random_rational(&mut rng))
                .collect::<Vec<_>>()
        };
        let (x, y, a, b) = (vector(), vector(), vector(), vector());
        let ax_yb = dot(&a, &x) * dot(&y, &b);
        let ya_xb = dot(&y, &a) * dot(&x, &b);
        let term = |m: &Mat<Rational>| bilinear(&x, m, &y) * bilinear(&a, m, &b);
        let lhs_x = basis_sum(&sym, Clone::clone, term);
        let rhs_x = &half * &(&ax_yb + &ya_xb);
        let lhs_y = basis_sum(&skew, Clone::clone, term);
        let rhs_y = &half * &(&ax_yb - &ya_xb);
        let mut trial = Trial::with_inputs(json!({
            "x": rational_json(&x), "y": rational_json(&y),
            "alpha": rational_json(&a), "beta": rational_json(&b),
        }));
        // One tally entry per point; the detail names the identities that broke.
        let broken: Vec<&str> = [("symmetric", &lhs_x, &rhs_x), ("skew", &lhs_y, &rhs_y)]
            .into_iter()
            .filter(|(_, l, r)| l != r)
            .map(|(name, _, _)| name)
            .collect();
        trial.items.push(Item::Exact {
            detail: if broken.is_empty() {
                "symmetric+skew".into()
            } else {
                broken.join("+")
            },
            discrepancy: approx_gap_real(&lhs_x, &rhs_x).max(approx_gap_real(&lhs_y, &rhs_y)),
            equal: broken.is_empty(),
        });
        Ok(trial)
    });
    let mut b = ReportBuilder::new("lemma-formula-real", n, cfg.trials, cfg.seed, 0.0);
    merge(&mut b, outcomes, 0.0)?;
    Ok(b.finish(start.elapsed().as_secs_f64()))
}

/// `sum_Z <alpha Z, beta><x Z, y> = (<x,beta> conj<y,alpha> + omega(x,alpha) conj omega(y,beta)) / 2`
/// over the quaternionic basis, exactly, at random points of `Q[i]^{2n}`.
pub fn verify_lemma_long(n: usize, cfg: &SuiteConfig) -> Result<VerificationReport> {
    check_trials(cfg)?;
    if n == 0 || n > 8 {
        return Err(Error::InvalidArgument(format!("need 1 <= n <= 8, got {n}")));
    }
    let start = Instant::now();
    let basis: Vec<ScaledMat<ComplexRational>> = exact_quaternionic_basis(n)
        .into_iter()
        .map(|q| q.element)
        .collect();
    let zero = Mat::<ComplexRational>::zeros(n, n);
    let id = Mat::<ComplexRational>::identity(n);
    let j = Mat::block2(&zero, &id, &(-&id), &zero)?;
    let half = crate::scalar::rational_to_complex(&rat(1, 2));
    let outcomes = map_trials(cfg, |t| {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let mut vector = || {
            (0..2 * n)
                .map(|_| random_complex_rational(&mut rng))
                .collect::<Vec<_>>()
        };
        let (x, y, a, b) = (vector(), vector(), vector(), vector());
        let conj = |v: &[ComplexRational]| v.iter().map(Scalar::conj).collect::<Vec<_>>();
        let (yc, bc, ac) = (conj(&y), conj(&b), conj(&a));
        let lhs = basis_sum(&basis, crate::scalar::rational_to_complex, |m| {
            bilinear(&a, m, &bc) * bilinear(&x, m, &yc)
        });
        let omega = |u: &[ComplexRational], w: &[ComplexRational]| bilinear(u, &j, w);
        let rhs = half.clone()
            * (dot(&x, &bc) * Scalar::conj(&dot(&y, &ac))
                + omega(&x, &a) * Scalar::conj(&omega(&y, &b)));
        let mut trial = Trial::with_inputs(json!({
            "x": complex_rational_json(&x), "y": complex_rational_json(&y),
            "alpha": complex_rational_json(&a), "beta": complex_rational_json(&b),
        }));
        trial.items.push(Item::Exact {
            detail: "long".into(),
            discrepancy: approx_gap_complex(&lhs, &rhs),
            equal: lhs == rhs,
        });
        Ok(trial)
    });
    let mut b = ReportBuilder::new("lemma-long", n, cfg.trials, cfg.seed, 0.0);
    merge(&mut b, outcomes, 0.0)?;
    Ok(b.finish(start.elapsed().as_secs_f64()))
}

// ---------------------------------------------------------------------------
// Float helpers

fn tau_of(jets: &[Jet2]) -> C64 {
    jets.iter().map(|j| j.d2).sum()
}

fn kappa_of(a: &[Jet2], b: &[Jet2]) -> C64 {
    a.iter().zip(b).map(|(p, q)| p.d1 * q.d1).sum()
}

fn grad_sq(jets: &[Jet2]) -> f64 {
    jets.iter().map(|j| j.d1.norm_sqr()).sum()
}

fn relative(lhs: C64, rhs: C64, scale: f64) -> f64 {
    (lhs - rhs).norm() / scale.max(f64::MIN_POSITIVE)
}

/// Relative gap of an identity `lhs = sum terms`, scaled by the magnitudes involved.
fn identity_gap(lhs: C64, terms: &[C64]) -> f64 {
    let rhs: C64 = terms.iter().sum();
    let scale = lhs.norm() + terms.iter().map(|t| t.norm()).sum::<f64>();
    relative(lhs, rhs, scale)
}

/// A unit vector of the complement with uniformly drawn coefficients.
pub fn random_direction(space: &SpaceSpec, rng: &mut impl Rng) -> Mat<C64> {
    let basis = &space.p_basis().elements;
    let coeffs: Vec<f64> = basis.iter().map(|_| rng.random_range(-1.0..=1.0)).collect();
    let norm = coeffs
        .iter()
        .map(|c| c * c)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let m = space.ambient_dim();
    basis
        .iter()
        .zip(&coeffs)
        .fold(Mat::zeros(m, m), |acc, (z, c)| {
            &acc + &z.scale_real(c / norm)
        })
}

/// `max(|d v1|, |d d1|, |d d2|) / max(1, |v|, |d1|, |d2|)`.
fn oracle_gap(exact: &Jet2, fd: &Jet2) -> f64 {
    let scale = 1f64
        .max(exact.v.norm())
        .max(exact.d1.norm())
        .max(exact.d2.norm());
    (fd.d1 - exact.d1).norm().max((fd.d2 - exact.d2).norm()) / scale
}

/// Ratio of the finite-difference disagreement at `FD_STEP` to its `O(h^2)`
/// envelope. The envelope is `ENVELOPE_MARGIN` times the truncation estimate
/// from steps `h` and `h/2` (computed from finite differences alone), and
/// never below [`TOL_ORACLE`]. An analytic jet that is off by more than the
/// truncation error yields a ratio above 1.
fn oracle_ratio(f: &Morphism, x: &Mat<C64>, z: &Mat<C64>) -> Result<f64> {
    let exact = eval_jet(&f.expr, &f.space, x, z)?;
    let coarse = fd_jet(&f.expr, &f.space, x, z, FD_STEP)?;
    let fine = fd_jet(&f.expr, &f.space, x, z, FD_STEP / 2.0)?;
    let truncation = oracle_gap(&fine, &coarse) * 4.0 / 3.0;
    let envelope = (ENVELOPE_MARGIN * truncation).max(TOL_ORACLE);
    Ok(oracle_gap(&exact, &coarse) / envelope)
}

fn oracle_item(trial: &mut Trial, f: &Morphism, x: &Mat<C64>, z: &Mat<C64>) {
    match oracle_ratio(f, x, z) {
        Ok(ratio) => trial.residual("oracle", format!("oracle[{}]", f.label), ratio, 1.0),
        Err(e) => trial.error("oracle", &e, 1.0),
    }
}

/// Samples a group point inside every member's domain. Also counts
/// rejected samples at which the two square-root conditions disagreed.
fn sample_common(family: &[Morphism], rng: &mut impl Rng) -> Result<(Mat<C64>, usize)> {
    let space = &family[0].space;
    let mut disagreements = 0;
    for _ in 0..crate::sampling::MAX_RESAMPLES {
        let mut x = group_point(space, rng)?;
        if space.id() == SpaceId::SlrSo {
            // Sample the full domain SL(n,R) R+ of the real morphisms.
            x = x.scale_real(rng.random_range(0.5..=2.0));
        }
        let phi = base_map_unchecked(space, &x)?;
        let statuses: Vec<_> = family.iter().map(|m| m.domain.status(&phi)).collect();
        if statuses.iter().all(|s| s.inside) {
            return Ok((x, disagreements));
        }
        if statuses.iter().any(|s| s.readings_disagree) {
            disagreements += 1;
        }
    }
    Err(Error::SamplingFailure {
        attempts: crate::sampling::MAX_RESAMPLES,
        what: format!("common domain point for {}", family[0].label),
    })
}

fn check_family(family: &[Morphism]) -> Result<&SpaceSpec> {
    let first = family
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty family".into()))?;
    if let Some(other) = family.iter().find(|m| m.space != first.space) {
        return Err(Error::MixedSpaces(first.space.label(), other.space.label()));
    }
    Ok(&first.space)
}

// ---------------------------------------------------------------------------
// Derivative lemmas and calculus identities

fn entry_jets(pj: &PointJets, space: &SpaceSpec) -> Result<Vec<Vec<Vec<Jet2>>>> {
    let m = space.ambient_dim();
    (0..m)
        .map(|k| {
            (0..m)
                .map(|l| pj.jets(&InvariantExpr::entry(space, k, l)?))
                .collect()
        })
        .collect()
}

fn psi_expr(space: &SpaceSpec, k: usize, l: usize) -> Result<InvariantExpr> {
    let mut b = crate::jet::ExprBuilder::for_space(space);
    let pkk = b.entry(k, k)?;
    let pll = b.entry(l, l)?;
    let pkl = b.entry(k, l)?;
    let prod = b.mul(pkk, pll);
    let sq = b.mul(pkl, pkl);
    let w = b.sub(prod, sq);
    let root = b.sqrt(w);
    b.finish(root)
}

#[allow(clippy::needless_range_loop)]
fn real_lemma_items(
    space: &SpaceSpec,
    x: &Mat<C64>,
    trial: &mut Trial,
    tol_c: f64,
    tol_r: f64,
) -> Result<()> {
    let n = space.n();
    let nf = n as f64;
    let pj = PointJets::new(space, x)?;
    let phi = pj.phi().clone();
    let jets = entry_jets(&pj, space)?;
    let p = |k: usize, l: usize| phi[(k, l)];
    let diag = |k: usize| phi[(k, k)].re.abs();
    let mut psi_jets = vec![vec![Vec::new(); n]; n];
    let mut psi = vec![vec![C64::new(0.0, 0.0); n]; n];
    for k in 0..n {
        for l in 0..n {
            if k != l {
                let e = psi_expr(space, k, l)?;
                psi_jets[k][l] = pj.jets(&e)?;
                psi[k][l] = pj.value(&e)?;
            }
        }
    }
    for k in 0..n {
        for l in 0..n {
            let target = p(k, l) * (2.0 * (nf + 1.0));
            let scale = 2.0 * (nf + 1.0) * (diag(k) * diag(l)).sqrt();
            trial.residual(
                "tau-phi",
                format!("tau(phi{}{})", k + 1, l + 1),
                relative(tau_of(&jets[k][l]), target, scale),
                tol_c,
            );
        }
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|k| (k..n).map(move |l| (k, l))).collect();
    for &(k, l) in &pairs {
        for &(i, j) in &pairs {
            let target = (p(k, i) * p(l, j) + p(k, j) * p(l, i)) * 2.0;
            let scale = 4.0 * (diag(k) * diag(l) * diag(i) * diag(j)).sqrt();
            trial.residual(
                "kappa-phi",
                format!("kappa(phi{}{},phi{}{})", k + 1, l + 1, i + 1, j + 1),
                relative(kappa_of(&jets[k][l], &jets[i][j]), target, scale),
                tol_r,
            );
        }
    }
    for k in 0..n {
        for j in 0..n {
            if j == k {
                continue;
            }
            for l in 0..n {
                let target = p(k, l) * psi[k][j] * 2.0;
                let scale = 2.0 * (diag(k) * diag(l)).sqrt() * (diag(k) * diag(j)).sqrt();
                trial.residual(
                    "kappa-phi-psi",
                    format!("kappa(phi{}{},psi{}{})", k + 1, l + 1, k + 1, j + 1),
                    relative(kappa_of(&jets[k][l], &psi_jets[k][j]), target, scale),
                    tol_r,
                );
            }
        }
    }
    for k in 0..n {
        for l in (k + 1)..n {
            let s = psi[k][l];
            trial.residual(
                "kappa-psi",
                format!("kappa(psi{}{},psi{}{})", k + 1, l + 1, k + 1, l + 1),
                relative(
                    kappa_of(&psi_jets[k][l], &psi_jets[k][l]),
                    s * s * 2.0,
                    2.0 * diag(k) * diag(l),
                ),
                tol_r,
            );
            trial.residual(
                "tau-psi",
                format!("tau(psi{}{})", k + 1, l + 1),
                relative(
                    tau_of(&psi_jets[k][l]),
                    s * (2.0 * (nf - 1.0)),
                    2.0 * (nf - 1.0) * (diag(k) * diag(l)).sqrt(),
                ),
                tol_r,
            );
        }
    }
    Ok(())
}

fn row_of(x: &Mat<C64>, i: usize) -> Vec<C64> {
    x.row(i).to_vec()
}

fn omega(u: &[C64], w: &[C64]) -> C64 {
    let n = u.len() / 2;
    (0..n).map(|i| u[i] * w[n + i] - u[n + i] * w[i]).sum()
}

#[allow(clippy::needless_range_loop)]
fn quat_lemma_items(
    space: &SpaceSpec,
    x: &Mat<C64>,
    trial: &mut Trial,
    tol_c: f64,
    tol_r: f64,
) -> Result<()> {
    let n = space.n();
    let m = 2 * n;
    let c = (4 * n) as f64 - 2.0;
    let pj = PointJets::new(space, x)?;
    let phi = pj.phi().clone();
    let jets = entry_jets(&pj, space)?;
    let p = |k: usize, l: usize| phi[(k, l)];
    let diag = |k: usize| phi[(k, k)].re.abs();
    let rows: Vec<Vec<C64>> = (0..m).map(|i| row_of(x, i)).collect();
    for k in 0..m {
        for l in 0..m {
            trial.residual(
                "tau-phi",
                format!("tau(phi{}{})", k + 1, l + 1),
                relative(
                    tau_of(&jets[k][l]),
                    p(k, l) * c,
                    c * (diag(k) * diag(l)).sqrt(),
                ),
                tol_c,
            );
        }
    }
    for l in 0..m {
        for k in 0..m {
            for r in 0..m {
                trial.residual(
                    "kappa-phi-column",
                    format!("kappa(phi{}{},phi{}{})", k + 1, l + 1, r + 1, l + 1),
                    relative(
                        kappa_of(&jets[k][l], &jets[r][l]),
                        p(k, l) * p(r, l) * 2.0,
                        2.0 * (diag(k) * diag(r)).sqrt() * diag(l),
                    ),
                    tol_r,
                );
            }
        }
    }
    for k in 0..m {
        for l in 0..m {
            for i in 0..m {
                for j in 0..m {
                    let target = (p(i, l) * p(k, j)
                        + omega(&rows[i], &rows[k]) * omega(&rows[j], &rows[l]).conj())
                        * 2.0;
                    let scale = 4.0 * (diag(i) * diag(k) * diag(j) * diag(l)).sqrt();
                    trial.residual(
                        "kappa-phi",
                        format!("kappa(phi{}{},phi{}{})", k + 1, l + 1, i + 1, j + 1),
                        relative(kappa_of(&jets[k][l], &jets[i][j]), target, scale),
                        tol_r,
                    );
                }
            }
        }
    }
    Ok(())
}

/// The tension and conformality relations satisfied by the entries of the
/// base map (and, on `slr-so`, by `psi_kl`) at sampled points.
pub fn verify_derivative_lemmas(
    space: &SpaceSpec,
    cfg: &SuiteConfig,
) -> Result<VerificationReport> {
    check_trials(cfg)?;
    let tol_r = cfg.tol(TOL_LEMMA_RELATION);
    let tol_c = cfg.tolerance.unwrap_or(TOL_LEMMA_CONSTANT);
    let items: fn(&SpaceSpec, &Mat<C64>, &mut Trial, f64, f64) -> Result<()> = match space.id() {
        SpaceId::SlrSo => real_lemma_items,
        SpaceId::SusSp => quat_lemma_items,
        other => {
            return Err(Error::UnsupportedSpace {
                space: other.to_string(),
                what: "derivative lemmas".into(),
            })
        }
    };
    let start = Instant::now();
    let outcomes = map_trials(cfg, |t| {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let x = group_point(space, &mut rng)?;
        let mut trial = Trial::with_inputs(json!({ "x": mat_to_json(&x) }));
        items(space, &x, &mut trial, tol_c, tol_r)?;
        if t % ORACLE_EVERY == 0 {
            let z = random_direction(space, &mut rng);
            let f = entry_morphism(space, 1, space.ambient_dim())?;
            oracle_item(&mut trial, &f, &x, &z);
        }
        Ok(trial)
    });
    let mut b = ReportBuilder::new("derivative-lemmas", space.n(), cfg.trials, cfg.seed, tol_r)
        .space(space.label());
    merge(&mut b, outcomes, tol_r)?;
    Ok(b.finish(start.elapsed().as_secs_f64()))
}

/// Outcome of testing both printed denominators of the quotient `kappa` formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenominatorFinding {
    /// Worst relative gap of `Q^4 kappa(P/Q, R/Q) = [..]`.
    pub q4_max_gap: f64,
    /// Smallest relative gap of `Q^2 kappa(P/Q, R/Q) = [..]`.
    pub q2_min_gap: f64,
    pub trials: usize,
}

impl DenominatorFinding {
    pub fn q4_confirmed(&self) -> bool {
        self.q4_max_gap <= TOL_QUOTIENT
    }

    pub fn q2_refuted(&self) -> bool {
        self.q2_min_gap > 1e-3
    }
}

struct CalculusSample {
    product: f64,
    tau_quotient: f64,
    kappa_q4: f64,
    kappa_q2: f64,
}

/// A named function triple `(P, Q, R)`.
type Triple = (String, InvariantExpr, InvariantExpr, InvariantExpr);

/// Function triples used by the calculus identities.
fn calculus_triples(space: &SpaceSpec) -> Result<Vec<Triple>> {
    let e = |k, l| InvariantExpr::entry(space, k, l);
    let mut out = vec![(
        "P=phi21,Q=phi11,R=phi12".to_string(),
        e(1, 0)?,
        e(0, 0)?,
        e(0, 1)?,
    )];
    if space.id() == SpaceId::SlrSo {
        // P = phi12 + i psi12, Q = phi22: the numerator and denominator of the real morphism.
        let mut b = crate::jet::ExprBuilder::for_space(space);
        let psi = b.import(&psi_expr(space, 0, 1)?)?;
        let ipsi = b.scale_by_i(psi);
        let p12 = b.entry(0, 1)?;
        let root = b.add(p12, ipsi);
        let p = b.finish(root)?;
        out.push((
            "P=phi12+i psi12,Q=phi22,R=P".to_string(),
            p.clone(),
            e(1, 1)?,
            p,
        ));
    }
    Ok(out)
}

fn calculus_sample(
    pj: &PointJets,
    p: &InvariantExpr,
    q: &InvariantExpr,
    r: &InvariantExpr,
) -> Result<CalculusSample> {
    let div = |a: &InvariantExpr| a.combine(q, |b, x, y| b.div(x, y));
    let pq = div(p)?;
    let rq = div(r)?;
    let pr = p.combine(r, |b, x, y| b.mul(x, y))?;
    let (pv, qv, rv) = (pj.value(p)?, pj.value(q)?, pj.value(r)?);
    let (jp, jq, jr) = (pj.jets(p)?, pj.jets(q)?, pj.jets(r)?);
    let (jpq, jrq, jpr) = (pj.jets(&pq)?, pj.jets(&rq)?, pj.jets(&pr)?);

    let product = identity_gap(
        kappa_of(&jpr, &jq),
        &[pv * kappa_of(&jr, &jq), rv * kappa_of(&jp, &jq)],
    );
    let tau_quotient = identity_gap(
        qv.powu(3) * tau_of(&jpq),
        &[
            qv * qv * tau_of(&jp),
            -pv * qv * tau_of(&jq),
            -2.0 * qv * kappa_of(&jp, &jq),
            2.0 * pv * kappa_of(&jq, &jq),
        ],
    );
    let bracket = [
        qv * qv * kappa_of(&jp, &jr),
        -rv * qv * kappa_of(&jp, &jq),
        -pv * qv * kappa_of(&jr, &jq),
        pv * rv * kappa_of(&jq, &jq),
    ];
    let k = kappa_of(&jpq, &jrq);
    Ok(CalculusSample {
        product,
        tau_quotient,
        kappa_q4: identity_gap(qv.powu(4) * k, &bracket),
        kappa_q2: identity_gap(qv.powu(2) * k, &bracket),
    })
}

/// Which denominator of the quotient `kappa` formula the jets confirm, with
/// generic `P = phi21`, `Q = phi11`, `R = phi12` (for which the bracket does
/// not vanish).
pub fn quotient_denominator_finding(
    space: &SpaceSpec,
    cfg: &SuiteConfig,
) -> Result<DenominatorFinding> {
    check_trials(cfg)?;
    let triples = calculus_triples(space)?;
    let (_, p, q, r) = &triples[0];
    let samples = map_trials(cfg, |t| -> Result<CalculusSample> {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let x = group_point(space, &mut rng)?;
        calculus_sample(&PointJets::new(space, &x)?, p, q, r)
    });
    let mut finding = DenominatorFinding {
        q4_max_gap: 0.0,
        q2_min_gap: f64::INFINITY,
        trials: cfg.trials,
    };
    for s in samples {
        let s = s?;
        finding.q4_max_gap = finding.q4_max_gap.max(s.kappa_q4);
        finding.q2_min_gap = finding.q2_min_gap.min(s.kappa_q2);
    }
    Ok(finding)
}

/// Product rule and the quotient formulas for `tau` and `kappa`, evaluated
/// through the jet engine at sampled points.
pub fn verify_calculus_identities(
    space: &SpaceSpec,
    cfg: &SuiteConfig,
) -> Result<VerificationReport> {
    check_trials(cfg)?;
    let tol = cfg.tol(TOL_QUOTIENT);
    let triples = calculus_triples(space)?;
    let start = Instant::now();
    let outcomes = map_trials(cfg, |t| {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let x = group_point(space, &mut rng)?;
        let pj = PointJets::new(space, &x)?;
        let mut trial = Trial::with_inputs(json!({ "x": mat_to_json(&x) }));
        for (name, p, q, r) in &triples {
            let s = calculus_sample(&pj, p, q, r)?;
            trial.residual(
                "product-rule",
                format!("product-rule[{name}]"),
                s.product,
                TOL_PRODUCT_RULE,
            );
            trial.residual(
                "tau-quotient",
                format!("tau-quotient[{name}]"),
                s.tau_quotient,
                tol,
            );
            trial.residual(
                "kappa-quotient",
                format!("kappa-quotient[{name}]"),
                s.kappa_q4,
                tol,
            );
        }
        Ok(trial)
    });
    let mut b = ReportBuilder::new("calculus-identities", space.n(), cfg.trials, cfg.seed, tol)
        .space(space.label());
    merge(&mut b, outcomes, tol)?;
    let finding = quotient_denominator_finding(space, cfg)?;
    b.note(format!(
        "kappa quotient denominator: Q^4 form max gap {:.2e} ({}), Q^2 form min gap {:.2e} ({})",
        finding.q4_max_gap,
        if finding.q4_confirmed() {
            "confirmed"
        } else {
            "not confirmed"
        },
        finding.q2_min_gap,
        if finding.q2_refuted() {
            "refuted"
        } else {
            "not refuted"
        },
    ));
    Ok(b.finish(start.elapsed().as_secs_f64()))
}

// ---------------------------------------------------------------------------
// Harmonicity, families, invariance

fn family_suite(name: &str, family: &[Morphism], cfg: &SuiteConfig) -> Result<VerificationReport> {
    check_trials(cfg)?;
    let space = check_family(family)?;
    let tol = cfg.tol(default_tolerance(space.id()));
    let start = Instant::now();
    let outcomes = map_trials(cfg, |t| {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let (x, disagreements) = sample_common(family, &mut rng)?;
        let mut trial = Trial::with_inputs(json!({ "x": mat_to_json(&x) }));
        trial.disagreements = disagreements;
        let pj = PointJets::new(space, &x)?;
        let jets: Vec<Vec<Jet2>> = family
            .iter()
            .map(|m| pj.jets(&m.expr))
            .collect::<Result<_>>()?;
        let sq: Vec<f64> = jets.iter().map(|j| grad_sq(j)).collect();
        for (i, f) in family.iter().enumerate() {
            trial.residual(
                "tau",
                format!("tau[{}]", f.label),
                tau_of(&jets[i]).norm() / sq[i].max(1.0),
                tol,
            );
            for (j, g) in family.iter().enumerate().skip(i) {
                let detail = if i == j {
                    format!("kappa[{}]", f.label)
                } else {
                    format!("kappa[{} | {}]", f.label, g.label)
                };
                let scale = (sq[i] * sq[j]).sqrt().max(1.0);
                trial.residual(
                    "kappa",
                    detail,
                    kappa_of(&jets[i], &jets[j]).norm() / scale,
                    tol,
                );
            }
        }
        if t % ORACLE_EVERY == 0 {
            let z = random_direction(space, &mut rng);
            for f in family {
                oracle_item(&mut trial, f, &x, &z);
            }
        }
        Ok(trial)
    });
    let mut b = ReportBuilder::new(name, space.n(), cfg.trials, cfg.seed, tol)
        .space(space.label())
        .morphisms(family.iter().map(|m| m.label.clone()).collect());
    b.declare("tau", tol);
    b.declare("kappa", tol);
    let disagreements = merge(&mut b, outcomes, tol)?;
    if disagreements > 0 {
        b.note(format!(
            "{disagreements} rejected samples where the iR condition and the branch cut disagree"
        ));
    }
    Ok(b.finish(start.elapsed().as_secs_f64()))
}

/// Normalized `tau(f)` and `kappa(f,f)` at in-domain sampled points.
pub fn verify_harmonic(morphism: &Morphism, cfg: &SuiteConfig) -> Result<VerificationReport> {
    family_suite("harmonic", std::slice::from_ref(morphism), cfg)
}

/// `tau` of every member and `kappa` of every pair (self-pairs included).
pub fn verify_family(family: &[Morphism], cfg: &SuiteConfig) -> Result<VerificationReport> {
    family_suite("family", family, cfg)
}

fn value_at(f: &Morphism, x: &Mat<C64>) -> Result<C64> {
    f.expr.eval_at_phi(&base_map_unchecked(&f.space, x)?)
}

/// Right stabilizer invariance, positive-scale invariance where declared,
/// and vanishing first derivatives along the stabilizer algebra.
pub fn verify_invariance(morphism: &Morphism, cfg: &SuiteConfig) -> Result<VerificationReport> {
    check_trials(cfg)?;
    let f = morphism;
    let space = &f.space;
    let tol = cfg.tol(TOL_INVARIANCE);
    let scale_invariant = f.has_invariance(Invariance::PositiveScale);
    let start = Instant::now();
    let outcomes = map_trials(cfg, |t| {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let x = f.sample_point(&mut rng)?;
        let k = stabilizer_point(space, &mut rng)?;
        let r: f64 = rng.random_range(0.5..=2.0);
        let mut trial = Trial::with_inputs(json!({
            "x": mat_to_json(&x), "k": mat_to_json(&k), "r": r,
        }));
        let f0 = value_at(f, &x)?;
        let norm = f0.norm().max(1.0);
        let fk = value_at(f, &(&x * &k))?;
        trial.residual("invariance", "f(xk) - f(x)", (fk - f0).norm() / norm, tol);
        if scale_invariant {
            let fr = value_at(f, &x.scale_real(r))?;
            trial.residual("scale", "f(rx) - f(x)", (fr - f0).norm() / norm, TOL_SCALE);
        }
        let pj = PointJets::new(space, &x)?;
        let grad = grad_sq(&pj.jets(&f.expr)?).sqrt().max(1.0);
        let mut worst: f64 = 0.0;
        for z in space.stabilizer_algebra() {
            worst = worst.max(eval_jet(&f.expr, space, &x, z)?.d1.norm() / grad);
        }
        trial.residual("stabilizer-algebra", "Z(f), Z in k", worst, tol);
        if t % ORACLE_EVERY == 0 {
            let z = random_direction(space, &mut rng);
            oracle_item(&mut trial, f, &x, &z);
        }
        Ok(trial)
    });
    let mut b = ReportBuilder::new("invariance", space.n(), cfg.trials, cfg.seed, tol)
        .space(space.label())
        .morphisms(vec![f.label.clone()]);
    merge(&mut b, outcomes, tol)?;
    Ok(b.finish(start.elapsed().as_secs_f64()))
}

/// Leading principal minors of `g g^*` at sampled `g` in `SL(n,C)`: real,
/// positive, and equal to the products of the Gauss pivots.
pub fn verify_bigcell(n: usize, cfg: &SuiteConfig) -> Result<VerificationReport> {
    check_trials(cfg)?;
    let space = SpaceSpec::new(SpaceId::SlcSu, n)?;
    let tol = cfg.tol(TOL_MINOR_IMAG);
    let start = Instant::now();
    let outcomes = map_trials(cfg, |t| {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let g = group_point(&space, &mut rng)?;
        let phi = base_map_unchecked(&space, &g)?;
        let mut trial = Trial::with_inputs(json!({ "g": mat_to_json(&g) }));
        let minors = phi.leading_principal_minors()?;
        let mut nonpositive = 0usize;
        let mut imag: f64 = 0.0;
        for m in &minors {
            imag = imag.max(m.im.abs() / m.norm().max(f64::MIN_POSITIVE));
            if m.re.is_nan() || m.re <= 0.0 {
                nonpositive += 1;
            }
        }
        trial.residual("minor-imag", "max |Im m_k| / |m_k|", imag, tol);
        trial.residual(
            "minor-nonpositive",
            "minors with Re <= 0",
            nonpositive as f64,
            0.0,
        );
        match phi.gauss_ldu() {
            Ok(ldu) => {
                let mut prod = C64::new(1.0, 0.0);
                let mut gap: f64 = 0.0;
                for (k, m) in minors.iter().enumerate() {
                    prod *= ldu.d[(k, k)];
                    gap = gap.max((prod - m).norm() / m.norm().max(f64::MIN_POSITIVE));
                }
                trial.residual(
                    "minor-oracle",
                    "|prod d_i - m_k| / |m_k|",
                    gap,
                    TOL_MINOR_ORACLE,
                );
            }
            Err(e) => trial.error("minor-oracle", &e, TOL_MINOR_ORACLE),
        }
        Ok(trial)
    });
    let mut b = ReportBuilder::new("bigcell", n, cfg.trials, cfg.seed, tol).space(space.label());
    merge(&mut b, outcomes, tol)?;
    Ok(b.finish(start.elapsed().as_secs_f64()))
}

/// A representative morphism of each space.
pub fn canonical_morphism(space: &SpaceSpec) -> Result<Morphism> {
    let n = space.n();
    match space.id() {
        SpaceId::SlrSo => real_morphism(n, 1, 2),
        SpaceId::SusSp => Ok(quat_family(n, 1)?.remove(0)),
        SpaceId::SuSo => dual_real_morphism(n, 1, 2),
        SpaceId::SuSp => Ok(dual_quat_family(n, 1)?.remove(0)),
        SpaceId::SlcSu => type_iv_bigcell_morphism(n, 2, 1),
    }
}

/// `tau` and `kappa` with the stock basis against a randomly rotated
/// orthonormal basis (one rotation per trial).
pub fn verify_basis_independence(
    space: &SpaceSpec,
    cfg: &SuiteConfig,
) -> Result<VerificationReport> {
    check_trials(cfg)?;
    let tol = cfg.tol(TOL_BASIS);
    let morphism = canonical_morphism(space)?;
    let functions: Vec<(String, InvariantExpr)> = vec![
        ("phi11".into(), InvariantExpr::entry(space, 0, 0)?),
        ("phi12".into(), InvariantExpr::entry(space, 0, 1)?),
        (morphism.label.clone(), morphism.expr.clone()),
    ];
    let start = Instant::now();
    let outcomes = map_trials(cfg, |t| {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let x = morphism.sample_point(&mut rng)?;
        let q = random_orthogonal(space.p_basis().len(), &mut rng)?;
        let rotated = space.p_basis().rotated(&q)?;
        let mut trial = Trial::with_inputs(json!({
            "x": mat_to_json(&x), "rotation": mat_to_json(&q.to_c64()),
        }));
        trial.residual(
            "basis-orthonormality",
            "rotated basis Gram defect",
            rotated.orthonormality_defect(),
            TOL_ORTHONORMALITY,
        );
        let stock = PointJets::new(space, &x)?;
        let turned = PointJets::with_basis(space, &x, &rotated.elements)?;
        for (name, f) in &functions {
            let a = stock.jets(f)?;
            let b = turned.jets(f)?;
            let d2_scale: f64 = a.iter().map(|j| j.d2.norm()).sum();
            let d1_scale = grad_sq(&a);
            trial.residual(
                "tau",
                format!("tau[{name}]"),
                relative(tau_of(&a), tau_of(&b), d2_scale.max(d1_scale)),
                tol,
            );
            trial.residual(
                "kappa",
                format!("kappa[{name}]"),
                relative(kappa_of(&a, &a), kappa_of(&b, &b), d1_scale),
                tol,
            );
        }
        if t % ORACLE_EVERY == 0 {
            let z = random_direction(space, &mut rng);
            oracle_item(&mut trial, &morphism, &x, &z);
        }
        Ok(trial)
    });
    let mut b = ReportBuilder::new("basis-independence", space.n(), cfg.trials, cfg.seed, tol)
        .space(space.label())
        .morphisms(functions.iter().map(|(n, _)| n.clone()).collect());
    merge(&mut b, outcomes, tol)?;
    Ok(b.finish(start.elapsed().as_secs_f64()))
}

/// Least-squares slope of `log err` against `log h`.
pub fn convergence_order(steps: &[f64], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = steps.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

/// Measured convergence order of central differences against the analytic
/// jets, plus the absolute agreement at the default step. The order is
/// measured on a double-double stencil: in plain `f64` the second difference
/// reaches its roundoff floor (about `1e-16 |f| / h^2`) inside the step range. Trial `t` uses
/// `morphisms[t % len]` at a fresh in-domain point and direction.
pub fn verify_oracle_convergence(
    morphisms: &[Morphism],
    cfg: &SuiteConfig,
) -> Result<VerificationReport> {
    check_trials(cfg)?;
    if morphisms.is_empty() {
        return Err(Error::InvalidArgument("no morphisms supplied".into()));
    }
    let tol = cfg.tol(TOL_ORACLE);
    let start = Instant::now();
    let outcomes = map_trials(cfg, |t| {
        let f = &morphisms[t % morphisms.len()];
        let mut rng = trial_rng(cfg.seed, t as u64);
        let x = f.sample_point(&mut rng)?;
        let z = random_direction(&f.space, &mut rng);
        let mut trial = Trial::with_inputs(json!({
            "morphism": f.label, "x": mat_to_json(&x), "z": mat_to_json(&z),
        }));
        let exact = eval_jet(&f.expr, &f.space, &x, &z)?;
        let mut e1 = Vec::new();
        let mut e2 = Vec::new();
        for h in CONVERGENCE_STEPS {
            let fd = fd_jet_extended(&f.expr, &f.space, &x, &z, h)?;
            e1.push((fd.d1 - exact.d1).norm());
            e2.push((fd.d2 - exact.d2).norm());
        }
        let p1 = convergence_order(&CONVERGENCE_STEPS, &e1);
        let p2 = convergence_order(&CONVERGENCE_STEPS, &e2);
        trial.residual(
            "order-d1",
            format!("|order(d1) - 2| [{}]", f.label),
            (p1 - 2.0).abs(),
            TOL_ORDER,
        );
        trial.residual(
            "order-d2",
            format!("|order(d2) - 2| [{}]", f.label),
            (p2 - 2.0).abs(),
            TOL_ORDER,
        );
        let fd = fd_jet(&f.expr, &f.space, &x, &z, FD_STEP)?;
        trial.residual(
            "agreement",
            format!("agreement[{}]", f.label),
            oracle_gap(&exact, &fd),
            tol,
        );
        Ok(trial)
    });
    let mut b = ReportBuilder::new(
        "oracle-convergence",
        morphisms[0].space.n(),
        cfg.trials,
        cfg.seed,
        tol,
    )
    .morphisms(morphisms.iter().map(|m| m.label.clone()).collect());
    merge(&mut b, outcomes, tol)?;
    Ok(b.finish(start.elapsed().as_secs_f64()))
}

/// The non-harmonic entry `phi_11` on `slr-so`. The report passes when the
/// harmonic suite rejects it and its normalized tension residual stays at or
/// above [`CONTROL_FLOOR`] at every sampled point.
pub fn verify_sensitivity_control(n: usize, cfg: &SuiteConfig) -> Result<VerificationReport> {
    check_trials(cfg)?;
    let space = SpaceSpec::new(SpaceId::SlrSo, n)?;
    let f = entry_morphism(&space, 1, 1)?;
    let floor = cfg.tol(CONTROL_FLOOR);
    let start = Instant::now();
    let harmonic = verify_harmonic(
        &f,
        &SuiteConfig {
            tolerance: None,
            ..*cfg
        },
    )?;
    let outcomes = map_trials(cfg, |t| {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let x = f.sample_point(&mut rng)?;
        let pj = PointJets::new(&space, &x)?;
        let res = pj.harmonic_residuals(&f.expr)?;
        let mut trial =
            Trial::with_inputs(json!({ "x": mat_to_json(&x), "phi11": pj.phi()[(0, 0)].re }));
        trial.items.push(Item::Floor {
            key: "tau",
            detail: format!("tau[{}] below floor", f.label),
            value: res.tau_residual(),
            floor,
        });
        Ok(trial)
    });
    let mut b = ReportBuilder::new("sensitivity-control", n, cfg.trials, cfg.seed, floor)
        .space(space.label())
        .morphisms(vec![f.label.clone()]);
    let accepted = if harmonic.passed { 1.0 } else { 0.0 };
    b.record(
        0,
        "control-accepted",
        "harmonic suite accepted the control",
        accepted,
        0.0,
        &|| json!({ "harmonic_tau_max": harmonic.residual("tau") }),
    );
    merge(&mut b, outcomes, floor)?;
    Ok(b.finish(start.elapsed().as_secs_f64()))
}

/// Members of the `sus-sp` family with column `l`, without `k = n + l`. On
/// `U*(2n)` the rows satisfy `x_{n+l} = conj(x_l) J`, so `phi_{n+l,l}` is
/// identically zero and that member is the zero function.
pub fn nonconstant_quat_members(n: usize, l: usize) -> Result<Vec<Morphism>> {
    let zero = format!(":k={}", n + l);
    Ok(quat_family(n, l)?
        .into_iter()
        .filter(|m| !m.label.ends_with(&zero))
        .collect())
}

/// `z1^2 + 3 z1 z2` applied to two nonconstant members of the `sus-sp` family.
pub fn sample_composition(n: usize) -> Result<Morphism> {
    let poly: Polynomial = "z1^2 + 3*z1*z2".parse()?;
    holomorphic_compose(&poly, &nonconstant_quat_members(n, 1)?)
}

/// Morphisms exercised by the oracle-convergence suite.
pub fn oracle_morphisms(n: usize) -> Result<Vec<Morphism>> {
    let n = n.max(2);
    let fam = nonconstant_quat_members(n, 1)?;
    Ok(vec![
        real_morphism(n, 1, 2)?,
        real_morphism(n, 2, 1)?,
        fam[0].clone(),
        fam[1].clone(),
        dual_real_morphism(n, 1, 2)?,
        dual_quat_family(n, 1)?.remove(0),
        type_iv_bigcell_morphism(n, 2, 1)?,
        sample_composition(n)?,
    ])
}

/// Every suite for every applicable `n <= n_max`.
pub fn run_all(n_max: usize, cfg: &SuiteConfig) -> Result<Vec<VerificationReport>> {
    if !(1..=8).contains(&n_max) {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= n-max <= 8, got {n_max}"
        )));
    }
    let mut out = Vec::new();
    for n in 1..=n_max {
        if n >= 2 {
            out.push(verify_lemma_formula_real(n, cfg)?);
        }
        out.push(verify_lemma_long(n, cfg)?);
    }
    for id in [SpaceId::SlrSo, SpaceId::SusSp] {
        for n in id.min_n().max(if id == SpaceId::SlrSo { 2 } else { 1 })..=n_max {
            let space = SpaceSpec::new(id, n)?;
            out.push(verify_derivative_lemmas(&space, cfg)?);
            out.push(verify_calculus_identities(&space, cfg)?);
        }
    }
    for n in 1..=n_max {
        if n >= 2 {
            for k in 1..=n {
                for l in (1..=n).filter(|&l| l != k) {
                    out.push(verify_harmonic(&real_morphism(n, k, l)?, cfg)?);
                    out.push(verify_harmonic(&dual_real_morphism(n, k, l)?, cfg)?);
                }
            }
            for i in 2..=n {
                for j in 1..i {
                    out.push(verify_harmonic(&type_iv_bigcell_morphism(n, i, j)?, cfg)?);
                }
            }
            out.push(verify_bigcell(n, cfg)?);
            out.push(verify_harmonic(&sample_composition(n)?, cfg)?);
        }
        for l in 1..=n {
            out.push(verify_family(&quat_family(n, l)?, cfg)?);
            out.push(verify_family(&dual_quat_family(n, l)?, cfg)?);
        }
    }
    for id in SpaceId::ALL {
        for n in id.min_n().max(if id == SpaceId::SlrSo { 2 } else { 1 })..=n_max {
            let space = SpaceSpec::new(id, n)?;
            out.push(verify_invariance(&canonical_morphism(&space)?, cfg)?);
            out.push(verify_basis_independence(
                &space,
                &cfg.with_trials(cfg.trials.min(10)),
            )?);
        }
    }
    out.push(verify_oracle_convergence(
        &oracle_morphisms(n_max)?,
        &cfg.with_trials(50),
    )?);
    out.push(verify_sensitivity_control(2, cfg)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(trials: usize) -> SuiteConfig {
        SuiteConfig::new(trials, 20260101)
    }

    #[test]
    fn formula_real_small_cases() {
        for n in 1..=3 {
            let r = verify_lemma_formula_real(n, &cfg(20)).unwrap();
            assert!(r.passed, "{}", r.render_text());
            assert_eq!(r.exact.unwrap().total, 20);
            assert!(r.max_residuals.is_empty());
        }
    }

    #[test]
    fn formula_real_hand_case() {
        // n = 2, x = y = alpha = beta = e1: only D1 contributes and both sides equal 1.
        let one = rat(1, 1);
        let z = rat(0, 1);
        let e1 = vec![one.clone(), z.clone()];
        let sym = exact_symmetric_basis(2);
        let lhs = basis_sum(&sym, Clone::clone, |m| {
            bilinear(&e1, m, &e1) * bilinear(&e1, m, &e1)
        });
        assert_eq!(lhs, one);
        let skew = exact_skew_basis(2);
        let lhs_y = basis_sum(&skew, Clone::clone, |m| {
            bilinear(&e1, m, &e1) * bilinear(&e1, m, &e1)
        });
        assert_eq!(lhs_y, z);
    }

    #[test]
    fn long_lemma_hand_case() {
        // n = 1, all vectors e1: LHS = RHS = 1/2.
        let basis: Vec<_> = exact_quaternionic_basis(1)
            .into_iter()
            .map(|q| q.element)
            .collect();
        assert_eq!(basis.len(), 1);
        let one = crate::scalar::rational_to_complex(&rat(1, 1));
        let zero = ComplexRational::zero();
        let e1 = vec![one.clone(), zero];
        let lhs = basis_sum(&basis, crate::scalar::rational_to_complex, |m| {
            bilinear(&e1, m, &e1) * bilinear(&e1, m, &e1)
        });
        assert_eq!(lhs, crate::scalar::rational_to_complex(&rat(1, 2)));
        let r = verify_lemma_long(2, &cfg(10)).unwrap();
        assert!(r.passed, "{}", r.render_text());
    }

    #[test]
    fn derivative_lemma_hand_value() {
        let space = SpaceSpec::new(SpaceId::SlrSo, 2).unwrap();
        let x = Mat::from_rows(vec![
            vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        ])
        .unwrap();
        let mut trial = Trial::default();
        real_lemma_items(&space, &x, &mut trial, 1e-12, 1e-12).unwrap();
        for item in &trial.items {
            if let Item::Residual { detail, value, .. } = item {
                assert!(*value < 1e-12, "{detail}: {value}");
            }
        }
    }

    #[test]
    fn derivative_lemmas_pass() {
        let r = verify_derivative_lemmas(&SpaceSpec::new(SpaceId::SlrSo, 3).unwrap(), &cfg(10))
            .unwrap();
        assert!(r.passed, "{}", r.render_text());
        let r = verify_derivative_lemmas(&SpaceSpec::new(SpaceId::SusSp, 2).unwrap(), &cfg(10))
            .unwrap();
        assert!(r.passed, "{}", r.render_text());
        let err = verify_derivative_lemmas(&SpaceSpec::new(SpaceId::SuSo, 2).unwrap(), &cfg(1));
        assert!(matches!(err, Err(Error::UnsupportedSpace { .. })));
    }

    #[test]
    fn calculus_identities_and_denominator() {
        for (id, n) in [
            (SpaceId::SlrSo, 3),
            (SpaceId::SusSp, 1),
            (SpaceId::SusSp, 2),
        ] {
            let space = SpaceSpec::new(id, n).unwrap();
            let r = verify_calculus_identities(&space, &cfg(10)).unwrap();
            assert!(r.passed, "{}", r.render_text());
            let f = quotient_denominator_finding(&space, &cfg(10)).unwrap();
            assert!(f.q4_confirmed(), "{f:?}");
            // At n = 1 the base map of sus-sp is constant and both forms vanish.
            assert_eq!(f.q2_refuted(), n > 1, "{f:?}");
        }
    }

    #[test]
    fn harmonic_and_control() {
        let r = verify_harmonic(&real_morphism(3, 1, 2).unwrap(), &cfg(20)).unwrap();
        assert!(r.passed, "{}", r.render_text());
        assert!(r.residual("oracle").unwrap() <= 1.0);

        let space = SpaceSpec::new(SpaceId::SlrSo, 2).unwrap();
        let control = entry_morphism(&space, 1, 1).unwrap();
        let r = verify_harmonic(&control, &cfg(20)).unwrap();
        assert!(!r.passed && r.is_consistent());
        assert!(r.render_text().contains("FAIL"));
    }

    #[test]
    fn family_suites_pass() {
        let r = verify_family(&quat_family(2, 1).unwrap(), &cfg(10)).unwrap();
        assert!(r.passed, "{}", r.render_text());
        assert_eq!(r.morphisms.len(), 3);
        let r = verify_family(&dual_quat_family(2, 1).unwrap(), &cfg(10)).unwrap();
        assert!(r.passed, "{}", r.render_text());
        let mixed = vec![
            real_morphism(2, 1, 2).unwrap(),
            quat_family(1, 1).unwrap().remove(0),
        ];
        assert!(matches!(
            verify_family(&mixed, &cfg(1)),
            Err(Error::MixedSpaces(..))
        ));
        assert!(verify_family(&[], &cfg(1)).is_err());
    }

    #[test]
    fn invariance_and_bigcell() {
        for m in [
            real_morphism(3, 1, 2).unwrap(),
            type_iv_bigcell_morphism(3, 3, 1).unwrap(),
        ] {
            let r = verify_invariance(&m, &cfg(10)).unwrap();
            assert!(r.passed, "{}", r.render_text());
        }
        let r = verify_bigcell(3, &cfg(50)).unwrap();
        assert!(r.passed, "{}", r.render_text());
    }

    #[test]
    fn partner_row_member_vanishes() {
        let space = SpaceSpec::new(SpaceId::SusSp, 2).unwrap();
        let zero_member = quat_family(2, 1).unwrap().remove(1);
        assert_eq!(zero_member.label, "sus-sp:n=2:l=1:k=3");
        let mut rng = trial_rng(5, 0);
        for _ in 0..5 {
            let x = group_point(&space, &mut rng).unwrap();
            assert!(zero_member.value(&x).unwrap().norm() < 1e-13);
        }
        let kept = nonconstant_quat_members(2, 1).unwrap();
        assert_eq!(kept.len(), 2);
        assert!(kept.iter().all(|m| !m.label.ends_with(":k=3")));
    }

    #[test]
    fn convergence_order_of_power_law() {
        let steps = CONVERGENCE_STEPS;
        let errs: Vec<f64> = steps.iter().map(|h| 3.0 * h * h).collect();
        assert!((convergence_order(&steps, &errs) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn jobs_do_not_change_reports() {
        let m = real_morphism(3, 2, 1).unwrap();
        let a = verify_harmonic(&m, &cfg(12)).unwrap();
        let b = verify_harmonic(&m, &cfg(12).with_jobs(4)).unwrap();
        assert_eq!(a.without_timing(), b.without_timing());
    }
}

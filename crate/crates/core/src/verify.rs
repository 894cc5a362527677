//! Seeded verification suites.
//!
//! Every trial derives its own seed from the run seed, so results do not depend
//! on scheduling; trials run in parallel and are aggregated in order.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::assembly::{
    complete_relation, det_condition_check, irregular_type_for_chain, moment_relation_residual, relation_scale, unfold_wcv,
    IrregularCurveData, LocalSlots, MarkedPoint, RepPoint,
};
use crate::blocks::{LeviChain, Subgroup};
use crate::centralizer::centralizer_contained_in_levi_layout;
use crate::error::{Result, WcvError};
use crate::json::{chain_to_json, matrix_to_json, params_to_json, point_to_json, rep_point_to_json};
use crate::linalg::Tolerance;
use crate::matrix::Matrix;
use crate::random::{self, WcvRng};
use crate::scalar::{Mode, Scalar};
use crate::spaces::{fuse, qh2_residual, Residual, SpaceModel};
use crate::triangular::{solve_conj_unip, TriangularChart};
use crate::unfolding::{
    etale_rank_check, form_intertwine_residual, moment_intertwine_residual, search_parameters, unfold_by_steps,
    unfold_full, SearchConfig, UnfoldingParams,
};

/// Result of one trial: pass flag, relative residual and the serialized input.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub ok: bool,
    pub residual: f64,
    pub message: String,
    pub input: Value,
}

impl TrialOutcome {
    fn from_checks(residual: f64, failed: Vec<String>, input: Value) -> Self {
        TrialOutcome { ok: failed.is_empty(), residual, message: failed.join("; "), input }
    }

    fn error(e: WcvError, input: Value) -> Self {
        TrialOutcome { ok: false, residual: f64::INFINITY, message: e.to_string(), input }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Qh2,
    Triangular,
    Unfold,
    Wcv,
    All,
}

impl std::str::FromStr for Suite {
    type Err = WcvError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "qh2" => Suite::Qh2,
            "triangular" => Suite::Triangular,
            "unfold" => Suite::Unfold,
            "wcv" => Suite::Wcv,
            "all" => Suite::All,
            other => return Err(WcvError::Parse(format!("unknown suite `{other}`"))),
        })
    }
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Qh2 => "qh2",
            Suite::Triangular => "triangular",
            Suite::Unfold => "unfold",
            Suite::Wcv => "wcv",
            Suite::All => "all",
        }
    }

    fn parts(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![Suite::Qh2, Suite::Triangular, Suite::Unfold, Suite::Wcv],
            s => vec![s],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub suite: &'static str,
    pub trial: usize,
    pub message: String,
    pub input: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub suite: String,
    pub trials: usize,
    pub mode: Mode,
    pub seed: u64,
    pub max_residual: f64,
    pub failures: Vec<Failure>,
    pub wall_time_ms: u128,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "suite": self.suite,
            "trials": self.trials,
            "mode": self.mode.name(),
            "seed": self.seed,
            "max_residual": self.max_residual,
            "failures": self.failures.iter().map(|f| json!({
                "suite": f.suite, "trial": f.trial, "message": f.message, "input": f.input,
            })).collect::<Vec<_>>(),
            "wall_time_ms": self.wall_time_ms as u64,
        })
    }
}

/// Models covered by the quasi-Hamiltonian suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    ConjClass,
    Double,
    Fission,
    MultiFission,
    Stokes,
    MSpace,
    Fusion3,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::ConjClass,
        ModelKind::Double,
        ModelKind::Fission,
        ModelKind::MultiFission,
        ModelKind::Stokes,
        ModelKind::MSpace,
        ModelKind::Fusion3,
    ];
}

fn simple_model<S: Scalar>(rng: &mut WcvRng, kind: ModelKind, n: usize) -> SpaceModel<S> {
    match kind {
        ModelKind::ConjClass => SpaceModel::conj_class(random::invertible(rng, n)),
        ModelKind::Double => SpaceModel::double(n),
        ModelKind::Fission => {
            let r = rng.gen_range(1..=2);
            SpaceModel::fission(random::partition(rng, n), r)
        }
        ModelKind::MultiFission => {
            let r = rng.gen_range(1..=3);
            SpaceModel::multi_fission(random::chain(rng, n, r, true))
        }
        ModelKind::Stokes => {
            let r = rng.gen_range(1..=2);
            SpaceModel::stokes(random::irregular(rng, n, r))
        }
        ModelKind::MSpace => SpaceModel::mspace(random::partition(rng, n).layout()),
        ModelKind::Fusion3 => {
            let kinds = [ModelKind::ConjClass, ModelKind::Double, ModelKind::Fission, ModelKind::MSpace, ModelKind::Stokes];
            let ms = (0..3)
                .map(|_| {
                    let kind = kinds[rng.gen_range(0..kinds.len())];
                    simple_model(rng, kind, n)
                })
                .collect();
            fuse(ms).expect("same n")
        }
    }
}

fn residual_check<S: Scalar>(r: &Residual<S>, tol: &Tolerance, what: &str, failed: &mut Vec<String>) -> f64 {
    if !r.passes(tol.residual) {
        failed.push(format!("{what} residual {:e}", r.relative()));
    }
    r.relative()
}

fn matrix_residual<S: Scalar>(m: &Matrix<S>, scale: f64, tol: &Tolerance, what: &str, failed: &mut Vec<String>) -> f64 {
    let rel = m.max_abs() / scale.max(1.0);
    let ok = match S::MODE {
        Mode::Exact => m.is_zero_within(0.0),
        Mode::Float => rel <= tol.residual,
    };
    if !ok {
        failed.push(format!("{what} residual {rel:e}"));
    }
    rel
}

/// One quasi-Hamiltonian trial: the QH2 identity at a random point, action and tangent.
pub fn qh2_trial<S: Scalar>(kind: ModelKind, n: usize, seed: u64, tol: &Tolerance) -> TrialOutcome {
    let mut rng = random::rng(seed);
    let model = simple_model::<S>(&mut rng, kind, n);
    let p = random::point(&mut rng, &model);
    let xi = random::action_algebra(&mut rng, &model);
    let y = random::tangent(&mut rng, &model);
    let input = json!({ "model": model.name(), "n": n, "point": point_to_json(&model.slot_names(), &p) });
    match qh2_residual(&model, &p, &xi, &y) {
        Ok(r) => {
            let mut failed = Vec::new();
            let res = residual_check(&r, tol, "qh2", &mut failed);
            TrialOutcome::from_checks(res, failed, input)
        }
        Err(e) => TrialOutcome::error(e, input),
    }
}

fn generic_levi_elem<S: Scalar>(rng: &mut WcvRng, layout: &crate::blocks::BlockLayout, tol: &Tolerance) -> Matrix<S> {
    loop {
        let h = random::group_elem::<S>(rng, &Subgroup::Levi(layout.clone()));
        if centralizer_contained_in_levi_layout(&h, layout, tol) {
            return h;
        }
    }
}

/// Round trip of the unipotent conjugation solver: `u' = h^{-1} u^{-1} h u` recovers `u`.
pub fn triangular_round_trip<S: Scalar>(seed: u64, tol: &Tolerance) -> TrialOutcome {
    let mut rng = random::rng(seed);
    let n = rng.gen_range(2..=4);
    let pi = random::partition(&mut rng, n);
    let layout = pi.layout();
    let h = generic_levi_elem::<S>(&mut rng, &layout, tol);
    let u = random::group_elem::<S>(&mut rng, &Subgroup::UpperUnipotent(layout));
    let input = json!({ "partition": pi.to_string(), "h": matrix_to_json(&h), "u": matrix_to_json(&u) });
    let run = || -> Result<TrialOutcome> {
        let u_prime = &(&(&h.inverse()? * &u.inverse()?) * &h) * &u;
        let got = solve_conj_unip(&h, &u_prime, &pi, tol)?;
        let mut failed = Vec::new();
        let res = matrix_residual(&(&got - &u), u.max_abs(), tol, "recovery", &mut failed);
        Ok(TrialOutcome::from_checks(res, failed, input.clone()))
    };
    run().unwrap_or_else(|e| TrialOutcome::error(e, input.clone()))
}

/// The chart identity for the triangular parametrization of a class.
pub fn triangular_form_trial<S: Scalar>(n: usize, seed: u64, tol: &Tolerance) -> TrialOutcome {
    let mut rng = random::rng(seed);
    let pi = random::partition(&mut rng, n);
    let layout = pi.layout();
    let h0 = generic_levi_elem::<S>(&mut rng, &layout, tol);
    let levi = Subgroup::Levi(layout.clone());
    let (up, lo) = (Subgroup::UpperUnipotent(layout.clone()), Subgroup::LowerUnipotent(layout.clone()));
    let k = random::group_elem::<S>(&mut rng, &levi);
    let u = random::group_elem::<S>(&mut rng, &up);
    let v = random::group_elem::<S>(&mut rng, &lo);
    let mut tangent = || [random::lie::<S>(&mut rng, &levi), random::lie(&mut rng, &up), random::lie(&mut rng, &lo)];
    let (x, y) = (tangent(), tangent());
    let input = json!({ "partition": pi.to_string(), "h0": matrix_to_json(&h0), "k": matrix_to_json(&k) });
    let run = || -> Result<TrialOutcome> {
        let chart = TriangularChart::new(layout.clone(), h0.clone(), tol)?;
        let r = chart.tau_form_residual([&k, &u, &v], [&x[0], &x[1], &x[2]], [&y[0], &y[1], &y[2]], tol)?;
        let mut failed = Vec::new();
        let res = residual_check(&r, tol, "chart form", &mut failed);
        Ok(TrialOutcome::from_checks(res, failed, input.clone()))
    };
    run().unwrap_or_else(|e| TrialOutcome::error(e, input.clone()))
}

/// Rational pool in exact mode, unit-modulus pool in float mode.
pub fn search_config<S: Scalar>() -> SearchConfig {
    match S::MODE {
        Mode::Exact => SearchConfig::default(),
        Mode::Float => SearchConfig::unit_circle(),
    }
}

/// Random chain, class representative and parameters from the search.
pub fn random_unfolding_setup<S: Scalar>(
    rng: &mut WcvRng,
    n: usize,
    r: usize,
    tol: &Tolerance,
) -> Result<(UnfoldingParams<S>, Matrix<S>)> {
    let chain = random::chain(rng, n, r, true);
    let h0 = random::group_elem::<S>(rng, &chain.levi(0));
    let params = search_parameters(&chain, &h0, rng, &search_config::<S>(), tol)?;
    Ok((params, h0))
}

/// Which identities an unfolding trial checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnfoldChecks {
    pub moment: bool,
    pub form: bool,
    pub etale: bool,
    pub steps: bool,
}

impl UnfoldChecks {
    pub const ALL: UnfoldChecks = UnfoldChecks { moment: true, form: true, etale: true, steps: true };
}

/// Unfolding identities at a random point for given parameters.
pub fn unfold_checks_at<S: Scalar>(
    params: &UnfoldingParams<S>,
    rng: &mut WcvRng,
    checks: UnfoldChecks,
    tol: &Tolerance,
) -> TrialOutcome {
    let model = params.source_model();
    let p = random::point(rng, &model);
    let x = random::tangent(rng, &model);
    let y = random::tangent(rng, &model);
    let input = json!({ "params": params_to_json(params), "point": point_to_json(&model.slot_names(), &p) });
    let run = || -> Result<TrialOutcome> {
        let mut failed = Vec::new();
        let mut worst: f64 = 0.0;
        if checks.moment {
            let (g, h) = moment_intertwine_residual(params, &p, tol)?;
            let size = |m: &Matrix<S>| m.max_abs().max(1.0);
            let scale = size(&p[0].inverse()?) * p.iter().map(size).product::<f64>();
            worst = worst.max(matrix_residual(&g, scale, tol, "moment G-part", &mut failed));
            worst = worst.max(matrix_residual(&h, 1.0, tol, "moment H-part", &mut failed));
        }
        if checks.form {
            let r = form_intertwine_residual(params, &p, &x, &y, tol)?;
            worst = worst.max(residual_check(&r, tol, "two-form", &mut failed));
        }
        if checks.etale {
            let rep = etale_rank_check(params, &p, tol)?;
            if !rep.full_rank || rep.source_dim != rep.target_dim {
                failed.push(format!("rank deficient: kernel dimension {}", rep.kernel_dim));
            }
        }
        if checks.steps {
            let (a, b) = (unfold_full(params, &p, tol)?, unfold_by_steps(params, &p, tol)?);
            let d = a.ms.iter().zip(&b.ms).map(|(x, y)| x - y).fold(&a.p - &b.p, |acc, m| if m.max_abs() > acc.max_abs() { m } else { acc });
            let scale = a.ms.iter().map(Matrix::max_abs).fold(a.p.max_abs(), f64::max);
            worst = worst.max(matrix_residual(&d, scale, tol, "induction steps", &mut failed));
        }
        Ok(TrialOutcome::from_checks(worst, failed, input.clone()))
    };
    run().unwrap_or_else(|e| TrialOutcome::error(e, input.clone()))
}

/// One unfolding trial with a random chain of size `n` and at most `max_r` levels.
pub fn unfold_trial<S: Scalar>(n: usize, max_r: usize, seed: u64, checks: UnfoldChecks, tol: &Tolerance) -> TrialOutcome {
    let mut rng = random::rng(seed);
    let r = rng.gen_range(1..=max_r);
    match random_unfolding_setup::<S>(&mut rng, n, r, tol) {
        Ok((params, _)) => unfold_checks_at(&params, &mut rng, checks, tol),
        Err(e) => TrialOutcome::error(e, json!({ "n": n, "r": r, "seed": seed })),
    }
}

/// A random curve with irregular points followed by one reserved tame point,
/// and an on-fiber point on it. Formal monodromies are `H_1`-conjugates of the class representatives.
pub fn random_curve_point<S: Scalar>(
    rng: &mut WcvRng,
    n: usize,
    genus: usize,
    irregular_points: usize,
    max_r: usize,
    tol: &Tolerance,
) -> Result<(IrregularCurveData<S>, RepPoint<S>)> {
    // Float completions can be badly conditioned; redraw those.
    for _ in 0..100 {
        let (curve, pt) = draw_curve_point(rng, n, genus, irregular_points, max_r, tol)?;
        let last = &pt.locals.last().expect("reserved point").h;
        if S::MODE == Mode::Exact || last.max_abs() * last.inverse()?.max_abs() <= 1e6 {
            return Ok((curve, pt));
        }
    }
    Err(WcvError::InvalidPoint("no well-conditioned completion found in 100 draws".into()))
}

fn draw_curve_point<S: Scalar>(
    rng: &mut WcvRng,
    n: usize,
    genus: usize,
    irregular_points: usize,
    max_r: usize,
    tol: &Tolerance,
) -> Result<(IrregularCurveData<S>, RepPoint<S>)> {
    let mut marked = Vec::new();
    let mut locals = Vec::new();
    for _ in 0..irregular_points {
        let r = rng.gen_range(1..=max_r);
        let (params, h0) = random_unfolding_setup::<S>(rng, n, r, tol)?;
        let chain: LeviChain = params.chain().clone();
        let model = params.source_model();
        let mut slots = random::point(rng, &model);
        let k = random::group_elem::<S>(rng, &chain.levi(0));
        slots[1] = &(&k * &h0) * &k.inverse()?;
        locals.push(LocalSlots::from_point(&slots));
        marked.push(MarkedPoint { q: irregular_type_for_chain(&chain), chain, params: Some(params), class_rep: h0 });
    }
    let ab = (0..genus).map(|_| (random::invertible(rng, n), random::invertible(rng, n))).collect();
    let curve = IrregularCurveData::new(n, genus, marked)?.with_reserved_tame();
    let pt = complete_relation(&RepPoint { ab, locals }, n)?;
    Ok((curve, pt))
}

/// End-to-end curve unfolding: relation, determinant condition and class bookkeeping on the output.
pub fn wcv_trial<S: Scalar>(n: usize, seed: u64, tol: &Tolerance) -> TrialOutcome {
    let mut rng = random::rng(seed);
    let genus = rng.gen_range(0..=1);
    let m = rng.gen_range(1..=2);
    let (curve, pt) = match random_curve_point::<S>(&mut rng, n, genus, m, 2, tol) {
        Ok(x) => x,
        Err(e) => return TrialOutcome::error(e, json!({ "n": n, "seed": seed })),
    };
    let input = json!({ "point": rep_point_to_json(&pt), "chains": curve.points.iter().map(|p| chain_to_json(&p.chain)).collect::<Vec<_>>() });
    let run = || -> Result<TrialOutcome> {
        let mut failed = Vec::new();
        let before = det_condition_check(&pt, &curve, tol)?;
        let (out, tame) = unfold_wcv(&pt, &curve, tol)?;
        let rel = moment_relation_residual(&out, &tame, tol)?;
        let res = matrix_residual(&(&rel - &Matrix::identity(n)), relation_scale(&out)?, tol, "relation", &mut failed);
        if det_condition_check(&out, &tame, tol)? != before {
            failed.push("determinant condition changed".into());
        }
        let announced = curve.unfolded_classes()?;
        let mons = out.monodromies()?;
        // The reserved trailing point has no announced class.
        let count = announced.len() - 1;
        for (j, (a, m)) in announced.iter().zip(&mons).take(count).enumerate() {
            let cp = m.charpoly();
            let diff = a.iter().zip(&cp).map(|(x, y)| (x.clone() - y.clone()).modulus()).fold(0.0, f64::max);
            let scale = a.iter().map(Scalar::modulus).fold(1.0, f64::max);
            let ok = match S::MODE {
                Mode::Exact => diff == 0.0,
                Mode::Float => diff <= tol.residual * scale * 1e3,
            };
            if !ok {
                failed.push(format!("output point {} has the wrong class", j + 1));
            }
        }
        Ok(TrialOutcome::from_checks(res, failed, input.clone()))
    };
    run().unwrap_or_else(|e| TrialOutcome::error(e, input.clone()))
}

fn suite_trial<S: Scalar>(suite: Suite, t: usize, seed: u64, tol: &Tolerance) -> TrialOutcome {
    let n = 2 + t % 2;
    match suite {
        Suite::Qh2 => qh2_trial::<S>(ModelKind::ALL[(t / 2) % ModelKind::ALL.len()], n, seed, tol),
        Suite::Triangular => {
            if t % 2 == 0 {
                triangular_round_trip::<S>(seed, tol)
            } else {
                triangular_form_trial::<S>(n, seed, tol)
            }
        }
        Suite::Unfold => unfold_trial::<S>(n, if n == 2 { 2 } else { 3 }, seed, UnfoldChecks::ALL, tol),
        Suite::Wcv => wcv_trial::<S>(n, seed, tol),
        Suite::All => unreachable!("expanded into parts"),
    }
}

/// Runs `trials` trials of each part of `suite`.
pub fn run_suite<S: Scalar>(suite: Suite, trials: usize, seed: u64, tol: &Tolerance) -> VerifyReport {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut max_residual: f64 = 0.0;
    for part in suite.parts() {
        let outcomes: Vec<TrialOutcome> = (0..trials)
            .into_par_iter()
            .map(|t| suite_trial::<S>(part, t, random::trial_seed(seed, t as u64), tol))
            .collect();
        for (t, o) in outcomes.into_iter().enumerate() {
            if o.residual.is_finite() {
                max_residual = max_residual.max(o.residual);
            }
            if !o.ok {
                failures.push(Failure { suite: part.name(), trial: t, message: o.message, input: o.input });
            }
        }
    }
    VerifyReport {
        suite: suite.name().into(),
        trials,
        mode: S::MODE,
        seed,
        max_residual,
        failures,
        wall_time_ms: start.elapsed().as_millis(),
    }
}

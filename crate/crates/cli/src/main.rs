//! `wcv`: JSON front end and verification runner for wcv-core.
//!
//! Exit codes: 0 success, 1 a postcondition or verification failure, 2 invalid input.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use wcv_core::assembly::{det_condition_check, moment_relation_residual, stability_check, unfold_wcv};
use wcv_core::irregular::{dimension_audit, levi_chain, singular_directions};
use wcv_core::json::{
    chain_from_json, curve_from_json, curve_to_json, irregular_from_json, matrix_from_json,
    params_from_json, params_to_json, parse_str, point_from_json, rep_point_from_json, rep_point_to_json,
    to_string_pretty, unfold_result_to_json,
};
use wcv_core::random;
use wcv_core::unfolding::{
    etale_rank_check, moment_intertwine_residual, search_parameters, unfold_by_steps, unfold_full, SearchConfig,
};
use wcv_core::verify::{random_curve_point, run_suite, Suite};
use wcv_core::{Exact, Float, Matrix, Mode, Scalar, Tolerance, WcvError};

#[derive(Parser)]
#[command(name = "wcv", version, about = "Wild character varieties for GL_n: unfolding maps and checks")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// Arithmetic mode.
    #[arg(long, global = true, value_enum, default_value = "exact")]
    mode: ModeArg,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 100)]
    trials: usize,
    /// Relative residual accepted in float mode.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tolerance: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Float,
}

#[derive(Subcommand)]
enum Command {
    /// Singular directions, Stokes supports, Levi chain and dimension audit of an irregular type.
    Stokes {
        #[arg(long)]
        input: PathBuf,
    },
    /// Searches unfolding parameters for a chain.
    Params {
        #[arg(long)]
        chain: PathBuf,
        /// Class representative in `H_1`; random when omitted.
        #[arg(long)]
        class: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        max_trials: usize,
    },
    /// Applies the unfolding map to a multi-fission point.
    Unfold {
        #[arg(long)]
        point: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        check: Check,
    },
    /// Unfolds a point of a wild character variety to tame data.
    UnfoldCurve {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        point: PathBuf,
    },
    /// Emits a random curve and an on-fiber point on it.
    RandomPoint {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        genus: usize,
        /// Number of irregular marked points.
        #[arg(long, default_value_t = 1)]
        points: usize,
        #[arg(long, default_value_t = 2)]
        max_r: usize,
    },
    /// Runs a seeded verification suite.
    Verify {
        /// One of qh2, triangular, unfold, wcv, all.
        #[arg(long)]
        suite: String,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Check {
    All,
    None,
}

enum Failure {
    Input(String),
    Postcondition(String),
}

impl From<WcvError> for Failure {
    fn from(e: WcvError) -> Self {
        match e {
            WcvError::SearchExhausted { .. } => Failure::Postcondition(e.to_string()),
            e => Failure::Input(e.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    parse_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn print_json(v: &Value) {
    println!("{}", to_string_pretty(v));
}

fn matrix_rel<S: Scalar>(m: &Matrix<S>, scale: f64) -> f64 {
    m.max_abs() / scale.max(1.0)
}

fn within<S: Scalar>(m: &Matrix<S>, scale: f64, tol: &Tolerance) -> bool {
    match S::MODE {
        Mode::Exact => m.is_zero_within(0.0),
        Mode::Float => matrix_rel(m, scale) <= tol.residual,
    }
}

fn cmd_stokes<S: Scalar>(input: &Path) -> CmdResult {
    let q = irregular_from_json::<S>(&read_json(input)?)?;
    let dirs = singular_directions(&q);
    println!("singular directions: {}", dirs.len());
    for (i, d) in dirs.iter().enumerate() {
        let roots: Vec<String> = d.roots.iter().map(|(a, b)| format!("({},{})", a + 1, b + 1)).collect();
        println!("  d_{} = {:.12}  dim = {}  roots = {}", i + 1, d.angle, d.roots.len(), roots.join(" "));
    }
    let chain = levi_chain(&q);
    let parts: Vec<String> = chain.partitions().iter().map(|p| p.to_string()).collect();
    let order: Vec<String> = chain.order().iter().map(|i| (i + 1).to_string()).collect();
    println!("levi chain: order [{}] partitions {}", order.join(","), parts.join(" < "));
    let (stokes, unip) = dimension_audit(&q);
    println!("dimension audit: stokes = {stokes}, unipotent = {unip}");
    if stokes != unip {
        return Err(Failure::Postcondition("dimension audit does not balance".into()));
    }
    Ok(())
}

fn cmd_params<S: Scalar>(g: &Global, chain: &Path, class: Option<&Path>, max_trials: usize, tol: &Tolerance) -> CmdResult {
    let chain = chain_from_json(&read_json(chain)?)?;
    let mut rng = random::rng(g.seed);
    let h0: Matrix<S> = match class {
        Some(p) => matrix_from_json(&read_json(p)?)?,
        None if chain.r() == 0 => Matrix::identity(chain.n()),
        None => random::group_elem(&mut rng, &chain.levi(0)),
    };
    let config = SearchConfig { max_trials, ..SearchConfig::default() };
    let params = search_parameters(&chain, &h0, &mut rng, &config, tol)?;
    print_json(&params_to_json(&params));
    Ok(())
}

fn cmd_unfold<S: Scalar>(point: &Path, params: &Path, check: Check, tol: &Tolerance) -> CmdResult {
    let params = params_from_json::<S>(&read_json(params)?, tol)?;
    let model = params.source_model();
    let p = point_from_json::<S>(&read_json(point)?, &model.slot_names())?;
    let res = unfold_full(&params, &p, tol)?;
    let mut out = json!({ "result": unfold_result_to_json(&res) });
    let mut ok = true;
    if check == Check::All {
        let (g, h) = moment_intertwine_residual(&params, &p, tol)?;
        let scale = model.moment(&p)?.g.max_abs();
        let steps = unfold_by_steps(&params, &p, tol)?;
        let step_diff = res.ms.iter().zip(&steps.ms).map(|(a, b)| (a - b).max_abs()).fold((&res.p - &steps.p).max_abs(), f64::max);
        let etale = etale_rank_check(&params, &p, tol)?;
        let moment_ok = within(&g, scale, tol) && within(&h, 1.0, tol);
        let steps_ok = match S::MODE {
            Mode::Exact => step_diff == 0.0,
            Mode::Float => step_diff <= tol.residual * res.p.max_abs().max(1.0),
        };
        ok = moment_ok && steps_ok && etale.full_rank;
        out["report"] = json!({
            "moment_g_residual": matrix_rel(&g, scale),
            "moment_h_residual": matrix_rel(&h, 1.0),
            "steps_residual": step_diff,
            "etale_kernel_dim": etale.kernel_dim,
            "passed": ok,
        });
    }
    print_json(&out);
    if ok {
        Ok(())
    } else {
        Err(Failure::Postcondition("unfolding postconditions failed".into()))
    }
}

fn cmd_unfold_curve<S: Scalar>(curve: &Path, point: &Path, tol: &Tolerance) -> CmdResult {
    let curve = curve_from_json::<S>(&read_json(curve)?, tol)?;
    let pt = rep_point_from_json::<S>(&read_json(point)?)?;
    let det_before = det_condition_check(&pt, &curve, tol)?;
    let stable_before = stability_check(&pt, &curve, tol)?;
    let (out, tame) = unfold_wcv(&pt, &curve, tol)?;
    let n = curve.n;
    let rel = moment_relation_residual(&out, &tame, tol)?;
    let diff = &rel - &Matrix::identity(n);
    let relation_ok = within(&diff, rel.max_abs(), tol);
    let det_after = det_condition_check(&out, &tame, tol).unwrap_or(false);
    let stable_after = stability_check(&out, &tame, tol)?;
    let ok = relation_ok && det_after == det_before;
    print_json(&json!({
        "curve": curve_to_json(&tame),
        "point": rep_point_to_json(&out),
        "report": {
            "relation_residual": matrix_rel(&diff, rel.max_abs()),
            "det_condition": det_after,
            "stable_input": stable_before,
            "stable_output": stable_after,
            "passed": ok,
        },
    }));
    if ok {
        Ok(())
    } else {
        Err(Failure::Postcondition("curve unfolding postconditions failed".into()))
    }
}

fn cmd_random_point<S: Scalar>(g: &Global, n: usize, genus: usize, points: usize, max_r: usize, tol: &Tolerance) -> CmdResult {
    if n == 0 || max_r == 0 {
        return Err(Failure::Input("n and max-r must be positive".into()));
    }
    let mut rng = random::rng(g.seed);
    let (curve, pt) = random_curve_point::<S>(&mut rng, n, genus, points, max_r, tol)?;
    print_json(&json!({ "curve": curve_to_json(&curve), "point": rep_point_to_json(&pt) }));
    Ok(())
}

fn cmd_verify<S: Scalar>(g: &Global, suite: &str, tol: &Tolerance) -> CmdResult {
    let suite: Suite = suite.parse().map_err(|e: WcvError| Failure::Input(e.to_string()))?;
    let report = run_suite::<S>(suite, g.trials, g.seed, tol);
    print_json(&report.to_json());
    if report.passed() {
        Ok(())
    } else {
        eprintln!(
            "reproduce with: wcv verify --suite {} --mode {} --seed {} --trials {} --tolerance {}",
            suite.name(),
            S::MODE,
            g.seed,
            g.trials,
            g.tolerance
        );
        Err(Failure::Postcondition(format!("{} failing trials", report.failures.len())))
    }
}

fn run<S: Scalar>(cli: &Cli) -> CmdResult {
    let g = &cli.global;
    let tol = Tolerance::with_residual(g.tolerance);
    match &cli.command {
        Command::Stokes { input } => cmd_stokes::<S>(input),
        Command::Params { chain, class, max_trials } => cmd_params::<S>(g, chain, class.as_deref(), *max_trials, &tol),
        Command::Unfold { point, params, check } => cmd_unfold::<S>(point, params, *check, &tol),
        Command::UnfoldCurve { curve, point } => cmd_unfold_curve::<S>(curve, point, &tol),
        Command::RandomPoint { n, genus, points, max_r } => cmd_random_point::<S>(g, *n, *genus, *points, *max_r, &tol),
        Command::Verify { suite } => cmd_verify::<S>(g, suite, &tol),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.global.mode {
        ModeArg::Exact => run::<Exact>(&cli),
        ModeArg::Float => run::<Float>(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Postcondition(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn search_exhaustion_is_a_postcondition_failure() {
        let e = WcvError::SearchExhausted { trials: 0, detail: String::new() };
        assert!(matches!(Failure::from(e), Failure::Postcondition(_)));
        assert!(matches!(Failure::from(WcvError::OffFiber(String::new())), Failure::Input(_)));
    }
}

//! Acceptance suite: one line per criterion.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use wcv_core::assembly::generates_full_algebra;
use wcv_core::blocks::{LeviChain, Partition, Subgroup};
use wcv_core::irregular::{levi_chain, singular_directions, IrregularType};
use wcv_core::random;
use wcv_core::triangular::solve_conj_unip_layout;
use wcv_core::unfolding::{
    etale_rank_check, moment_intertwine_residual, search_parameters, unfold_rank1, unfolded_residues, SearchConfig,
    UnfoldingParams,
};
use wcv_core::verify::{
    qh2_trial, triangular_form_trial, triangular_round_trip, unfold_checks_at, unfold_trial, wcv_trial, ModelKind,
    TrialOutcome, UnfoldChecks,
};
use wcv_core::{Exact, Float, Matrix, Scalar, Tolerance};

struct Verdict {
    ok: bool,
    detail: String,
}

fn tally(outcomes: &[TrialOutcome]) -> (usize, f64, Option<String>) {
    let fails = outcomes.iter().filter(|o| !o.ok).count();
    let worst = outcomes.iter().map(|o| o.residual).fold(0.0, f64::max);
    let first = outcomes.iter().find(|o| !o.ok).map(|o| o.message.clone());
    (fails, worst, first)
}

fn seeds(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|t| random::trial_seed(base, t)).collect()
}

fn run<F: Fn(u64) -> TrialOutcome + Sync + Send>(base: u64, count: usize, f: F) -> Vec<TrialOutcome> {
    seeds(base, count).into_par_iter().map(f).collect()
}

fn m(n: usize, v: &[i64]) -> Matrix<Exact> {
    Matrix::from_i64(n, v)
}

fn q(a: i64, b: i64) -> Exact {
    Exact::from_ratio(a, b)
}

fn criterion1(tol: &Tolerance) -> Verdict {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for kind in ModelKind::ALL {
        for n in [2, 3] {
            let ex = run(100 + n as u64, 100, |s| qh2_trial::<Exact>(kind, n, s, tol));
            let fl = run(200 + n as u64, 100, |s| qh2_trial::<Float>(kind, n, s, tol));
            let (fe, we, _) = tally(&ex);
            let (ff, wf, _) = tally(&fl);
            ok &= fe == 0 && we == 0.0 && ff == 0 && wf <= 1e-9;
            if fe + ff > 0 {
                lines.push(format!("{kind:?} n={n}: {fe} exact and {ff} float failures"));
            }
            lines.push(format!("{kind:?}/{n}: float max {wf:.1e}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs <= 60.0;
    Verdict { ok, detail: format!("2800 trials in {secs:.1}s; {}", lines.join(", ")) }
}

fn criterion2(tol: &Tolerance) -> Verdict {
    let outcomes = run(2, 100, |s| {
        unfold_trial::<Exact>(3, 3, s, UnfoldChecks { moment: true, form: false, etale: false, steps: false }, tol)
    });
    let (fails, worst, first) = tally(&outcomes);
    // Worked GL2 rank-one instance.
    let layout = Partition::discrete(2).layout();
    let (h, t) = (m(2, &[3, 0, 0, 5]), m(2, &[2, 0, 0, 1]));
    let id = Matrix::identity(2);
    let ((c, p), mm) = unfold_rank1(&t, [&id, &h, &m(2, &[1, 1, 0, 1]), &m(2, &[1, 0, 1, 1])], &layout, tol).unwrap();
    let g = &(&(&c.inverse().unwrap() * &p) * &c) * &mm;
    let hpart = layout.block_diagonal_part(&p).inverse().unwrap();
    let worked = g == m(2, &[6, 3, 5, 5]) && hpart == Matrix::diag(&[q(2, 3), q(1, 5)]) && hpart == &t * &h.inverse().unwrap();
    Verdict {
        ok: fails == 0 && worst == 0.0 && worked,
        detail: format!("100 GL3 instances, {fails} failures, max residual {worst}; worked instance {}{}", if worked { "ok" } else { "WRONG" }, first.map(|f| format!("; first failure: {f}")).unwrap_or_default()),
    }
}

fn criterion3(tol: &Tolerance) -> Verdict {
    let checks = UnfoldChecks { moment: false, form: true, etale: false, steps: false };
    let fl = run(3, 100, |s| unfold_trial::<Float>(2, 2, s, checks, tol));
    let ex = run(33, 20, |s| unfold_trial::<Exact>(2, 1, s, checks, tol));
    let (ff, wf, f1) = tally(&fl);
    let (fe, we, f2) = tally(&ex);
    Verdict {
        ok: ff == 0 && wf <= 1e-9 && fe == 0 && we == 0.0,
        detail: format!(
            "100 float GL2 r<=2: max {wf:.2e}, {ff} failures; 20 exact GL2 r=1: max {we}, {fe} failures{}",
            f1.or(f2).map(|f| format!("; first failure: {f}")).unwrap_or_default()
        ),
    }
}

fn criterion4(tol: &Tolerance) -> Verdict {
    let rt = run(4, 200, |s| triangular_round_trip::<Exact>(s, tol));
    let (fr, _, f0) = tally(&rt);
    let mut form_fail = 0;
    let mut worst_float: f64 = 0.0;
    for n in [2, 3] {
        let (fe, we, _) = tally(&run(40 + n as u64, 100, |s| triangular_form_trial::<Exact>(n, s, tol)));
        let (ff, wf, _) = tally(&run(50 + n as u64, 100, |s| triangular_form_trial::<Float>(n, s, tol)));
        form_fail += fe + ff + usize::from(we != 0.0);
        worst_float = worst_float.max(wf);
    }
    Verdict {
        ok: fr == 0 && form_fail == 0 && worst_float <= 1e-9,
        detail: format!(
            "200 exact round trips: {fr} failures; chart form identity (n=2,3; 200 exact, 200 float): {form_fail} failures, float max {worst_float:.2e}{}",
            f0.map(|f| format!("; first failure: {f}")).unwrap_or_default()
        ),
    }
}

fn criterion5(tol: &Tolerance) -> Verdict {
    let mut parts = Vec::new();
    let mut ok = true;
    for n in [2, 3] {
        for r in [1, 2] {
            let results: Vec<(bool, usize)> = seeds(500 + 10 * n as u64 + r as u64, 50)
                .into_par_iter()
                .map(|s| {
                    let mut rng = random::rng(s);
                    let chain = random::chain(&mut rng, n, r, true);
                    let h0 = random::group_elem::<Exact>(&mut rng, &chain.levi(0));
                    let params = search_parameters(&chain, &h0, &mut rng, &SearchConfig::default(), tol).unwrap();
                    let p = random::point(&mut rng, &params.source_model());
                    let rep = etale_rank_check(&params, &p, tol).unwrap();
                    (rep.full_rank && rep.source_dim == rep.target_dim, rep.kernel_dim)
                })
                .collect();
            let bad = results.iter().filter(|(f, _)| !f).count();
            let max_kernel = results.iter().map(|(_, k)| *k).max().unwrap_or(0);
            ok &= bad == 0;
            parts.push(format!("GL{n} r={r}: {bad} deficient, max kernel dim {max_kernel}"));
        }
    }
    Verdict { ok, detail: format!("50 exact points each; {}", parts.join(", ")) }
}

fn angle_eq(a: f64, b: f64) -> bool {
    let d = (a - b).rem_euclid(2.0 * PI);
    d < 1e-9 || 2.0 * PI - d < 1e-9
}

/// Roots `(a, b)` supporting angle `d`, from the maximal-decay condition directly.
fn supports(q: &IrregularType<Exact>, a: usize, b: usize, d: f64) -> bool {
    let top = (1..=q.r()).rev().find_map(|j| {
        let c = q.coeff(j)[a].clone() - q.coeff(j)[b].clone();
        (!c.is_exactly_zero()).then(|| (c.to_c64(), j))
    });
    let Some((c, k)) = top else { return false };
    let w = c * Complex64::from_polar(1.0, -(k as f64) * d);
    w.re < 0.0 && w.im.abs() <= 1e-9 * w.norm()
}

fn criterion6() -> Verdict {
    let mut rng = random::rng(6);
    let mut audit_fail = 0;
    let mut antipodal_fail = 0;
    let mut shifted_fail = 0;
    let mut example = None;
    for _ in 0..50 {
        let n = rng.gen_range(2..=4);
        let r = rng.gen_range(1..=3);
        let q = random::irregular::<Exact>(&mut rng, n, r);
        let dirs = singular_directions(&q);
        let stokes: usize = dirs.iter().map(|d| d.roots.len()).sum();
        // Independent count of sum_j (n^2 - dim H_j) from the coefficient tuples.
        let unip: usize = (1..=q.r())
            .map(|j| {
                (0..n)
                    .flat_map(|a| (0..n).map(move |b| (a, b)))
                    .filter(|&(a, b)| (j..=q.r()).any(|k| q.coeff(k)[a] != q.coeff(k)[b]))
                    .count()
            })
            .sum();
        let chain = levi_chain(&q);
        let from_chain: usize = (0..chain.r()).map(|j| 2 * chain.layout(j).unipotent_dim()).sum();
        if stokes != unip || unip != from_chain {
            audit_fail += 1;
        }
        for d in &dirs {
            for &(a, b) in &d.roots {
                let k = (1..=q.r()).rev().find(|&j| q.coeff(j)[a] != q.coeff(j)[b]).unwrap();
                if !supports(&q, b, a, d.angle + PI) {
                    antipodal_fail += 1;
                    if example.is_none() {
                        example = Some(format!(
                            "root ({},{}) of degree {k} at {:.4} but ({},{}) not at {:.4}",
                            a + 1,
                            b + 1,
                            d.angle,
                            b + 1,
                            a + 1,
                            (d.angle + PI).rem_euclid(2.0 * PI)
                        ));
                    }
                }
                let listed = |ang: f64| dirs.iter().any(|e| angle_eq(e.angle, ang) && e.roots.contains(&(b, a)));
                if !listed(d.angle + PI / k as f64) {
                    shifted_fail += 1;
                }
            }
        }
    }
    Verdict {
        ok: audit_fail == 0 && antipodal_fail == 0,
        detail: format!(
            "50 types: audit mismatches {audit_fail}; pairing `alpha at d <=> -alpha at d+pi` violated {antipodal_fail} times{}; `-alpha at d+pi/deg` violated {shifted_fail} times",
            example.map(|e| format!(" (e.g. {e})")).unwrap_or_default()
        ),
    }
}

fn criterion7() -> Verdict {
    let hats = unfolded_residues(&[Matrix::diag(&[q(1, 1), q(2, 1)]), Matrix::diag(&[q(3, 1), q(-3, 1)])], &[q(0, 1), q(1, 1)]).unwrap();
    let worked = hats[0] == Matrix::diag(&[q(-2, 1), q(5, 1)]) && hats[1] == Matrix::diag(&[q(3, 1), q(-3, 1)]);
    let mut rng = random::rng(7);
    let mut fails = 0;
    for _ in 0..100 {
        let r = rng.gen_range(1..=4);
        let n = rng.gen_range(1..=3);
        let lambdas: Vec<Matrix<Exact>> =
            (0..=r).map(|_| Matrix::diag(&(0..n).map(|_| random::scalar::<Exact>(&mut rng)).collect::<Vec<_>>())).collect();
        let mut eps: Vec<Exact> = Vec::new();
        while eps.len() <= r {
            let e = random::scalar::<Exact>(&mut rng);
            if !eps.contains(&e) {
                eps.push(e);
            }
        }
        let hats = unfolded_residues(&lambdas, &eps).unwrap();
        let sum = hats.iter().fold(Matrix::zeros(n, n), |acc, h| &acc + h);
        if sum != lambdas[0] {
            fails += 1;
        }
    }
    Verdict { ok: worked && fails == 0, detail: format!("100 instances r<=4: {fails} sum-rule failures; worked example {}", if worked { "ok" } else { "WRONG" }) }
}

/// A common proper invariant subspace exists iff the matrices, or their transposes, share an eigenvector.
fn oracle_reducible(gens: &[DMatrix<Complex64>]) -> bool {
    let n = gens[0].nrows();
    let shares_eigenvector = |ms: &[DMatrix<Complex64>]| -> bool {
        let spectra: Vec<Vec<Complex64>> = ms
            .iter()
            .map(|g| {
                // A fixed unitary similarity keeps the QR iteration away from cycling on exact shift matrices.
                let f = DMatrix::from_fn(n, n, |i, j| Complex64::new((1 + 3 * i + j * j) as f64, i as f64 - 0.5 * j as f64));
                let u = f.qr().q();
                let rotated = u.adjoint() * g * &u;
                let (_, t) = nalgebra::Schur::try_new(rotated, 1e-15, 100_000).expect("Schur iteration did not converge").unpack();
                // Multiple eigenvalues scatter by about eps^(1/k); the cluster mean is accurate.
                let mut clusters: Vec<Vec<Complex64>> = Vec::new();
                for i in 0..n {
                    let z = t[(i, i)];
                    match clusters.iter_mut().find(|c| (c[0] - z).norm() < 1e-4 * (1.0 + g.norm())) {
                        Some(c) => c.push(z),
                        None => clusters.push(vec![z]),
                    }
                }
                let ev: Vec<Complex64> =
                    clusters.iter().map(|c| c.iter().sum::<Complex64>() / c.len() as f64).collect();
                ev
            })
            .collect();
        // Enumerate one eigenvalue per generator and intersect the eigenspaces.
        let mut idx = vec![0usize; ms.len()];
        loop {
            let mut stacked = DMatrix::<Complex64>::zeros(n * ms.len(), n);
            for (k, g) in ms.iter().enumerate() {
                let shifted = g - DMatrix::<Complex64>::identity(n, n) * spectra[k][idx[k]];
                stacked.view_mut((k * n, 0), (n, n)).copy_from(&shifted);
            }
            let scale = ms.iter().map(|g| g.norm()).fold(1.0, f64::max);
            let sv: DVector<f64> = stacked.svd(false, false).singular_values;
            if sv.iter().any(|s| *s < 1e-8 * scale) || sv.len() < n {
                return true;
            }
            let mut k = 0;
            loop {
                if k == ms.len() {
                    return false;
                }
                idx[k] += 1;
                if idx[k] < spectra[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    };
    let transposed: Vec<DMatrix<Complex64>> = gens.iter().map(|g| g.transpose()).collect();
    shares_eigenvector(gens) || shares_eigenvector(&transposed)
}

fn to_nalgebra(m: &Matrix<Exact>) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)].to_c64())
}

fn random_collection(rng: &mut random::WcvRng, n: usize) -> Vec<Matrix<Exact>> {
    let count = rng.gen_range(1..=3);
    let int = |rng: &mut random::WcvRng| Exact::from_i64(rng.gen_range(-3..=3));
    match rng.gen_range(0..3) {
        // Generic integer matrices.
        0 => (0..count).map(|_| Matrix::from_fn(n, n, |_, _| int(rng))).collect(),
        // Common invariant subspace of dimension k, hidden by a change of basis.
        1 => {
            let k = rng.gen_range(1..n);
            let p = random::invertible::<Exact>(rng, n);
            let pi = p.inverse().unwrap();
            (0..count)
                .map(|_| {
                    let b = Matrix::from_fn(n, n, |i, j| if i >= k && j < k { Exact::from_i64(0) } else { int(rng) });
                    &(&p * &b) * &pi
                })
                .collect()
        }
        // Diagonal or scalar matrices and permutation-like pairs.
        _ => (0..count)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    Matrix::diag(&(0..n).map(|_| int(rng)).collect::<Vec<_>>())
                } else {
                    let shift = rng.gen_range(0..n);
                    Matrix::from_fn(n, n, |i, j| if (i + shift) % n == j { int(rng) } else { Exact::from_i64(0) })
                }
            })
            .collect(),
    }
}

fn criterion8(tol: &Tolerance) -> Verdict {
    let mut rng = random::rng(8);
    let mut disagree = 0;
    let mut irreducible = 0;
    let mut total = 0;
    for n in [2, 3] {
        for _ in 0..200 {
            let gens = random_collection(&mut rng, n);
            let burnside = generates_full_algebra(n, &gens, tol);
            let oracle = !oracle_reducible(&gens.iter().map(to_nalgebra).collect::<Vec<_>>());
            total += 1;
            irreducible += usize::from(burnside);
            if burnside != oracle {
                disagree += 1;
            }
        }
    }
    Verdict { ok: disagree == 0, detail: format!("{total} collections ({irreducible} irreducible): {disagree} disagreements") }
}

fn criterion9(tol: &Tolerance) -> Verdict {
    let outcomes: Vec<TrialOutcome> = seeds(9, 50)
        .into_par_iter()
        .enumerate()
        .map(|(i, s)| wcv_trial::<Exact>(2 + i % 2, s, tol))
        .collect();
    let (fails, worst, first) = tally(&outcomes);
    Verdict {
        ok: fails == 0 && worst == 0.0,
        detail: format!("50 exact GL2/GL3 points: {fails} failures, max relation residual {worst}{}", first.map(|f| format!("; first failure: {f}")).unwrap_or_default()),
    }
}

fn criterion10(tol: &Tolerance) -> Verdict {
    let results: Vec<Result<(), String>> = seeds(10, 50)
        .into_par_iter()
        .map(|s| {
            let mut rng = random::rng(s);
            let n = rng.gen_range(2..=4);
            let r = rng.gen_range(1..=3);
            let chain: LeviChain = random::chain(&mut rng, n, r, true);
            let h0 = random::group_elem::<Exact>(&mut rng, &chain.levi(0));
            let params: UnfoldingParams<Exact> =
                search_parameters(&chain, &h0, &mut rng, &SearchConfig::default(), tol).map_err(|e| e.to_string())?;
            let o = unfold_checks_at(&params, &mut rng, UnfoldChecks::ALL, tol);
            if !o.ok {
                return Err(o.message);
            }
            // Each t_j drives the unipotent conjugation solver on its own level.
            for (j, t) in params.ts().iter().enumerate() {
                let layout = chain.layout(j);
                let u = random::group_elem::<Exact>(&mut rng, &Subgroup::UpperUnipotent(layout.clone()));
                let u_prime = &(&(&t.inverse().unwrap() * &u.inverse().unwrap()) * t) * &u;
                let got = solve_conj_unip_layout(t, &u_prime, layout, tol).map_err(|e| e.to_string())?;
                if got != u {
                    return Err(format!("round trip failed for t_{}", j + 1));
                }
            }
            let (g, h) = moment_intertwine_residual(&params, &random::point(&mut rng, &params.source_model()), tol).map_err(|e| e.to_string())?;
            if !g.is_zero_within(0.0) || !h.is_zero_within(0.0) {
                return Err("moment residual".into());
            }
            Ok(())
        })
        .collect();
    let fails: Vec<&String> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    Verdict {
        ok: fails.is_empty(),
        detail: format!("50 chains (n<=4, r<=3): {} failures{}", fails.len(), fails.first().map(|f| format!("; first: {f}")).unwrap_or_default()),
    }
}

fn main() {
    let tol = Tolerance::default();
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict>)> = vec![
        ("QH2 axiom suite", Box::new(move || criterion1(&tol))),
        ("moment intertwining", Box::new(move || criterion2(&tol))),
        ("two-form intertwining", Box::new(move || criterion3(&tol))),
        ("triangular solver", Box::new(move || criterion4(&tol))),
        ("etale rank", Box::new(move || criterion5(&tol))),
        ("Stokes/dimension audit", Box::new(criterion6)),
        ("unfolded residues", Box::new(criterion7)),
        ("stability oracle agreement", Box::new(move || criterion8(&tol))),
        ("end-to-end curve unfolding", Box::new(move || criterion9(&tol))),
        ("parameter search", Box::new(move || criterion10(&tol))),
    ];
    let mut passed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = f();
        passed += usize::from(v.ok);
        println!(
            "criterion {:>2} {:<28} {}  [{:.1}s] {}",
            i + 1,
            name,
            if v.ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            v.detail
        );
    }
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
}

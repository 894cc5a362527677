//! Unfolding maps from multi-fission data to products of conjugacy classes.
//!
//! For a chain `H_1 ⊂ ... ⊂ H_r` and diagonal `t_i` with `Z_G(t_i) = H_i`,
//! a point `(C, h, u_1^+, u_1^-, ..., u_r^+, u_r^-)` maps to
//! `([C, h t_r^{-1} ... t_1^{-1} v_1^- ... v_r^-], M_1, ..., M_r)` where
//! `v_i^± = T_i u_i^± T_i^{-1}`, `T_i = t_{i+1} ... t_r` and
//! `M_i = C^{-1} V_i^{-1} t_i v_i^+ V_i C`, `V_i = v_i^- ... v_r^-`.

use num_complex::Complex64;
use rand::Rng;

use crate::blocks::{BlockLayout, LeviChain, Subgroup};
use crate::centralizer::{centralizer_contained_in_levi_layout, centralizer_equals_levi_layout};
use crate::error::{Result, WcvError};
use crate::irregular::{levi_chain, IrregularType};
use crate::jet::Jet;
use crate::linalg::{kernel, Tolerance};
use crate::matrix::Matrix;
use crate::random::WcvRng;
use crate::scalar::{Float, Scalar};
use crate::spaces::forms::evaluate;
use crate::spaces::{fuse, mspace_orbit_tangent, tangent_jets, Residual, SpaceModel};
use crate::triangular::solve_conj_unip_jet;

/// Parameters `t_1, ..., t_r` for a chain; `t_j` is diagonal with `Z_G(t_j) = H_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldingParams<S: Scalar> {
    chain: LeviChain,
    ts: Vec<Matrix<S>>,
}

impl<S: Scalar> UnfoldingParams<S> {
    pub fn new(chain: LeviChain, ts: Vec<Matrix<S>>, tol: &Tolerance) -> Result<Self> {
        if ts.len() != chain.r() {
            return Err(WcvError::Dimension(format!("chain has {} levels but {} parameters were given", chain.r(), ts.len())));
        }
        for (j, t) in ts.iter().enumerate() {
            if t.rows() != chain.n() || !t.is_square() || !t.is_diagonal() {
                return Err(WcvError::InvalidPoint(format!("t_{} must be an invertible diagonal {}x{} matrix", j + 1, chain.n(), chain.n())));
            }
            if !centralizer_equals_levi_layout(t, chain.layout(j), tol) {
                return Err(WcvError::Centralizer(format!("centralizer of t_{} differs from H_{}", j + 1, j + 1)));
            }
        }
        Ok(UnfoldingParams { chain, ts })
    }

    pub fn chain(&self) -> &LeviChain {
        &self.chain
    }

    pub fn ts(&self) -> &[Matrix<S>] {
        &self.ts
    }

    pub fn r(&self) -> usize {
        self.ts.len()
    }

    /// `t_1 t_2 ... t_r`.
    pub fn product(&self) -> Matrix<S> {
        self.ts.iter().fold(Matrix::identity(self.chain.n()), |acc, t| &acc * t)
    }

    pub fn source_model(&self) -> SpaceModel<S> {
        SpaceModel::multi_fission(self.chain.clone())
    }

    /// `M ⊛ C_1 ⊛ ... ⊛ C_r`.
    pub fn target_model(&self) -> SpaceModel<S> {
        let mut ms = vec![SpaceModel::mspace(self.chain.layout(0).clone())];
        ms.extend(self.ts.iter().map(|t| SpaceModel::conj_class(t.clone())));
        fuse(ms).expect("all models share n")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldResult<S: Scalar> {
    /// `M`-space representative `(C, p)`.
    pub c: Matrix<S>,
    pub p: Matrix<S>,
    pub ms: Vec<Matrix<S>>,
}

fn check_slot<S: Scalar>(g: Subgroup, m: &Matrix<S>, name: &str, tol: &Tolerance) -> Result<()> {
    g.check(m, tol.residual * m.max_abs().max(1.0)).map_err(|e| WcvError::InvalidPoint(format!("slot {name}: {e}")))
}

/// `(C, h, u, v) -> ([C, h t^{-1} v], C^{-1} v^{-1} t u v C)`.
pub fn unfold_rank1<S: Scalar>(
    t: &Matrix<S>,
    point: [&Matrix<S>; 4],
    layout: &BlockLayout,
    tol: &Tolerance,
) -> Result<((Matrix<S>, Matrix<S>), Matrix<S>)> {
    if !t.is_diagonal() || !centralizer_equals_levi_layout(t, layout, tol) {
        return Err(WcvError::Centralizer("centralizer of t differs from H".into()));
    }
    let [c, h, u, v] = point;
    check_slot(Subgroup::General(layout.n()), c, "C", tol)?;
    check_slot(Subgroup::Levi(layout.clone()), h, "h", tol)?;
    check_slot(Subgroup::UpperUnipotent(layout.clone()), u, "u", tol)?;
    check_slot(Subgroup::LowerUnipotent(layout.clone()), v, "v", tol)?;
    let p = &(h * &t.inverse()?) * v;
    let m = &(&(&(&(&c.inverse()? * &v.inverse()?) * t) * u) * v) * c;
    Ok(((c.clone(), p), m))
}

/// One induction step: removes the top level of the chain using `t` with `Z_G(t) = H_r`.
pub fn unfold_step<S: Scalar>(
    t: &Matrix<S>,
    point: &[Matrix<S>],
    chain: &LeviChain,
    tol: &Tolerance,
) -> Result<(Vec<Matrix<S>>, Matrix<S>)> {
    let r = chain.r();
    if r < 2 {
        return Err(WcvError::Dimension("an induction step needs a chain with at least two levels".into()));
    }
    if !t.is_diagonal() || !centralizer_equals_levi_layout(t, chain.layout(r - 1), tol) {
        return Err(WcvError::Centralizer(format!("centralizer of t differs from H_{r}")));
    }
    SpaceModel::multi_fission(chain.clone()).validate_point(point, tol)?;
    let (c, h) = (&point[0], &point[1]);
    let u = |i: usize| &point[1 + i];
    let t_inv = t.inverse()?;
    let conj = |x: &Matrix<S>| &(t * x) * &t_inv;
    let mut out = vec![c.clone(), h * &t_inv];
    for i in 1..=2 * r - 3 {
        out.push(conj(u(i)));
    }
    out.push(&conj(u(2 * r - 2)) * u(2 * r));
    let last = u(2 * r);
    let m = &(&(&(&(&c.inverse()? * &last.inverse()?) * t) * u(2 * r - 1)) * last) * c;
    Ok((out, m))
}

/// Jets of the unfolding: the `M`-space slots `(C, p)`, the classes `M_i`
/// and charts `C'_i` with `C'_i^{-1} t_i C'_i = M_i`.
struct UnfoldJets<S: Scalar> {
    c: Jet<S>,
    p: Jet<S>,
    ms: Vec<Jet<S>>,
    charts: Vec<Jet<S>>,
}

fn unfold_jets<S: Scalar>(params: &UnfoldingParams<S>, jets: &[Jet<S>], tol: &Tolerance, with_charts: bool) -> Result<UnfoldJets<S>> {
    let n = params.chain.n();
    let r = params.r();
    let (c, h) = (&jets[0], &jets[1]);
    let plus = |i: usize| &jets[2 * i];
    let minus = |i: usize| &jets[2 * i + 1];
    // T_i = t_{i+1} ... t_r, for i = 1..r
    let mut tail = vec![Matrix::identity(n); r + 1];
    for i in (1..r).rev() {
        tail[i] = &params.ts[i] * &tail[i + 1];
    }
    let mut vp = Vec::with_capacity(r);
    let mut vm = Vec::with_capacity(r);
    for i in 1..=r {
        let ti = Jet::constant(tail[i].clone());
        vp.push(ti.conj(plus(i))?);
        vm.push(ti.conj(minus(i))?);
    }
    // V_i = v_i^- ... v_r^-
    let mut big_v = vec![Jet::identity(n); r + 1];
    for i in (0..r).rev() {
        big_v[i] = vm[i].mul(&big_v[i + 1]);
    }
    let c_inv = c.inv()?;
    let mut ms = Vec::with_capacity(r);
    let mut charts = Vec::new();
    for i in 0..r {
        let t = Jet::constant(params.ts[i].clone());
        let vc = big_v[i].mul(c);
        ms.push(c_inv.mul(&big_v[i].inv()?).mul(&t).mul(&vp[i]).mul(&vc));
        if with_charts {
            let w = solve_conj_unip_jet(&t, &vp[i], params.chain.layout(i), tol)?;
            charts.push(w.mul(&vc));
        }
    }
    let mut p = h.clone();
    for t in params.ts.iter().rev() {
        p = p.mul(&Jet::constant(t.inverse()?));
    }
    p = p.mul(&big_v[0]);
    Ok(UnfoldJets { c: c.clone(), p, ms, charts })
}

fn constant_jets<S: Scalar>(point: &[Matrix<S>]) -> Vec<Jet<S>> {
    point.iter().cloned().map(Jet::constant).collect()
}

/// The explicit unfolding map.
pub fn unfold_full<S: Scalar>(params: &UnfoldingParams<S>, point: &[Matrix<S>], tol: &Tolerance) -> Result<UnfoldResult<S>> {
    params.source_model().validate_point(point, tol)?;
    let j = unfold_jets(params, &constant_jets(point), tol, false)?;
    Ok(UnfoldResult { c: j.c.value, p: j.p.value, ms: j.ms.into_iter().map(|m| m.value).collect() })
}

/// The same map computed as `r - 1` induction steps followed by the rank-one map.
pub fn unfold_by_steps<S: Scalar>(params: &UnfoldingParams<S>, point: &[Matrix<S>], tol: &Tolerance) -> Result<UnfoldResult<S>> {
    let r = params.r();
    let mut current = point.to_vec();
    let mut ms = vec![Matrix::zeros(0, 0); r];
    for level in (2..=r).rev() {
        let chain = params.chain.truncated(level);
        let (next, m) = unfold_step(&params.ts[level - 1], &current, &chain, tol)?;
        ms[level - 1] = m;
        current = next;
    }
    let ((c, p), m1) =
        unfold_rank1(&params.ts[0], [&current[0], &current[1], &current[2], &current[3]], params.chain.layout(0), tol)?;
    ms[0] = m1;
    Ok(UnfoldResult { c, p, ms })
}

/// Point of the fused target `[C, p, C'_1, ..., C'_r]` with class charts.
pub fn target_point<S: Scalar>(params: &UnfoldingParams<S>, point: &[Matrix<S>], tol: &Tolerance) -> Result<Vec<Matrix<S>>> {
    params.source_model().validate_point(point, tol)?;
    let j = unfold_jets(params, &constant_jets(point), tol, true)?;
    let mut out = vec![j.c.value, j.p.value];
    out.extend(j.charts.into_iter().map(|c| c.value));
    Ok(out)
}

/// Residuals of the moment identities: the `G`-part
/// `C^{-1}pC M_1 ... M_r - C^{-1} h u_1 ... u_{2r} C` and the `H`-part
/// `varpi(p)^{-1} - t_1 ... t_r h^{-1}`.
pub fn moment_intertwine_residual<S: Scalar>(
    params: &UnfoldingParams<S>,
    point: &[Matrix<S>],
    tol: &Tolerance,
) -> Result<(Matrix<S>, Matrix<S>)> {
    let res = unfold_full(params, point, tol)?;
    let src = params.source_model().moment(point)?;
    let mut g = &(&res.c.inverse()? * &res.p) * &res.c;
    for m in &res.ms {
        g = &g * m;
    }
    let layout = params.chain.layout(0);
    let h_target = layout.block_diagonal_part(&res.p).inverse()?;
    let h_expect = &params.product() * &src.h[0];
    Ok((&g - &src.g, &h_target - &h_expect))
}

/// `w_source(X, Y) - w_target(dU X, dU Y)`.
pub fn form_intertwine_residual<S: Scalar>(
    params: &UnfoldingParams<S>,
    point: &[Matrix<S>],
    x: &[Matrix<S>],
    y: &[Matrix<S>],
    tol: &Tolerance,
) -> Result<Residual<S>> {
    let src = params.source_model();
    src.validate_point(point, tol)?;
    src.validate_tangent(point, x, tol)?;
    src.validate_tangent(point, y, tol)?;
    let target = params.target_model();
    let terms = |t: &[Matrix<S>]| -> Result<_> {
        let jets = tangent_jets(point, t);
        let s = src.form_terms(&jets)?;
        let u = unfold_jets(params, &jets, tol, true)?;
        let mut tj = vec![u.c, u.p];
        tj.extend(u.charts);
        Ok((s, target.form_terms(&tj)?))
    };
    let (sx, tx) = terms(x)?;
    let (sy, ty) = terms(y)?;
    let (a, sa) = evaluate(&sx, &sy);
    let (b, sb) = evaluate(&tx, &ty);
    Ok(Residual { value: a - b, scale: sa + sb })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EtaleReport {
    pub full_rank: bool,
    pub kernel_dim: usize,
    pub source_dim: usize,
    pub target_dim: usize,
}

/// Rank of the linearization modulo the `U_1^-` orbit at the `M`-space representative.
pub fn etale_rank_check<S: Scalar>(params: &UnfoldingParams<S>, point: &[Matrix<S>], tol: &Tolerance) -> Result<EtaleReport> {
    let src = params.source_model();
    src.validate_point(point, tol)?;
    let n = params.chain.n();
    let nn = n * n;
    let r = params.r();
    let rows = nn * (2 + r);
    let mut cols: Vec<Vec<S>> = Vec::new();
    // Columns from the source tangent basis.
    let groups = src.slot_subgroups();
    let mut base_point = None;
    for (slot, g) in groups.iter().enumerate() {
        for b in g.lie_basis::<S>() {
            let mut x = vec![Matrix::zeros(n, n); groups.len()];
            x[slot] = b;
            let u = unfold_jets(params, &tangent_jets(point, &x), tol, false)?;
            let mut col = Vec::with_capacity(rows);
            col.extend(u.c.right_log()?.into_vec());
            col.extend(u.p.right_log()?.into_vec());
            for m in &u.ms {
                col.extend(m.deriv.as_slice().iter().cloned());
            }
            base_point.get_or_insert(u.p.value.clone());
            cols.push(col);
        }
    }
    let source_dim = cols.len();
    let p = match base_point {
        Some(p) => p,
        None => unfold_full(params, point, tol)?.p,
    };
    // Negated orbit directions of U_1^-.
    let lower = Subgroup::LowerUnipotent(params.chain.layout(0).clone());
    for w in lower.lie_basis::<S>() {
        let t = mspace_orbit_tangent(&p, &w)?;
        let mut col: Vec<S> = Vec::with_capacity(rows);
        for m in &t {
            col.extend(m.as_slice().iter().map(|v| -v.clone()));
        }
        col.extend(std::iter::repeat_with(S::zero).take(nn * r));
        cols.push(col);
    }
    let a = Matrix::from_fn(rows, cols.len(), |i, j| cols[j][i].clone());
    let kernel_dim = kernel(&a, tol).len();
    let target_dim = nn + params.chain.layout(0).levi_dim() + (0..r).map(|i| nn - params.chain.layout(i).levi_dim()).sum::<usize>();
    Ok(EtaleReport { full_rank: kernel_dim == 0, kernel_dim, source_dim, target_dim })
}

/// `Lambda-hat_i = sum_{j >= i} Lambda_j prod_{0 <= l <= j, l != i} (eps_i - eps_l)^{-1}`.
pub fn unfolded_residues<S: Scalar>(lambdas: &[Matrix<S>], eps: &[S]) -> Result<Vec<Matrix<S>>> {
    if lambdas.len() != eps.len() || lambdas.is_empty() {
        return Err(WcvError::Dimension(format!("{} residues but {} poles", lambdas.len(), eps.len())));
    }
    for i in 0..eps.len() {
        for j in i + 1..eps.len() {
            if (eps[i].clone() - eps[j].clone()).is_exactly_zero() {
                return Err(WcvError::CoincidentPoles(i, j));
            }
        }
    }
    let r = lambdas.len() - 1;
    let (rows, cols) = (lambdas[0].rows(), lambdas[0].cols());
    let mut out = Vec::with_capacity(r + 1);
    for i in 0..=r {
        let mut acc = Matrix::zeros(rows, cols);
        let mut coeff = S::one();
        for l in 0..i {
            coeff = coeff / (eps[i].clone() - eps[l].clone());
        }
        for j in i..=r {
            if j > i {
                coeff = coeff / (eps[i].clone() - eps[j].clone());
            }
            acc = &acc + &lambdas[j].scale(&coeff);
        }
        out.push(acc);
    }
    Ok(out)
}

/// Residues `Lambda_j = -j Q_j` of `dQ`, preceded by `Lambda_0`.
pub fn normal_form_residues<S: Scalar>(q: &IrregularType<S>, lambda0: &Matrix<S>) -> Vec<Matrix<S>> {
    let mut out = vec![lambda0.clone()];
    for j in 1..=q.r() {
        out.push(q.coeff_matrix(j).scale(&S::from_i64(-(j as i64))));
    }
    out
}

/// Exponentials `exp(2 pi i Lambda-hat_i)` and the two genericity conditions on `eps`.
#[derive(Debug, Clone)]
pub struct ResidueBridge {
    pub hats: Vec<Matrix<Float>>,
    pub ts: Vec<Matrix<Float>>,
    /// `Z(t_i) = Z(Lambda_i, ..., Lambda_r)` for `i >= 1`.
    pub condition1: bool,
    /// `Z(exp(2 pi i Lambda-hat_0)) ⊂ Z(Q)`.
    pub condition2: bool,
}

pub fn residue_bridge(q: &IrregularType<Float>, lambda0: &Matrix<Float>, eps: &[Float], tol: &Tolerance) -> Result<ResidueBridge> {
    if !lambda0.is_diagonal() {
        return Err(WcvError::InvalidPoint("Lambda_0 must be diagonal".into()));
    }
    let lambdas = normal_form_residues(q, lambda0);
    let hats = unfolded_residues(&lambdas, eps)?;
    let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
    let ts: Vec<Matrix<Float>> = hats.iter().map(|h| Matrix::diag(&h.diagonal().iter().map(|z| (two_pi_i * z).exp()).collect::<Vec<_>>())).collect();
    let chain = levi_chain(q);
    let condition1 = (1..ts.len()).all(|i| centralizer_equals_levi_layout(&ts[i], chain.layout(i - 1), tol));
    let condition2 = chain.r() == 0 || centralizer_contained_in_levi_layout(&ts[0], chain.layout(0), tol);
    Ok(ResidueBridge { hats, ts, condition1, condition2 })
}

/// Source of pool indices for the parameter search.
pub trait DrawSource {
    fn draw(&mut self, pool_len: usize) -> usize;
}

impl DrawSource for WcvRng {
    fn draw(&mut self, pool_len: usize) -> usize {
        self.gen_range(0..pool_len)
    }
}

/// Replays a fixed list of indices, cycling when exhausted.
pub struct ScriptedDraws {
    draws: Vec<usize>,
    pos: usize,
}

impl ScriptedDraws {
    pub fn new(draws: Vec<usize>) -> Self {
        ScriptedDraws { draws, pos: 0 }
    }
}

impl DrawSource for ScriptedDraws {
    fn draw(&mut self, pool_len: usize) -> usize {
        let d = self.draws[self.pos % self.draws.len()] % pool_len;
        self.pos += 1;
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Nonzero Gaussian rationals `((re_num, re_den), (im_num, im_den))` to draw block scalars from.
    pub pool: Vec<((i64, i64), (i64, i64))>,
    pub max_trials: usize,
}

impl Default for SearchConfig {
    /// `±k` and `±1/k` for `k = 1, ..., 13`.
    fn default() -> Self {
        let mut pool = Vec::new();
        for k in 1..=13 {
            pool.push(((k, 1), (0, 1)));
            pool.push(((-k, 1), (0, 1)));
        }
        for k in 2..=13 {
            pool.push(((1, k), (0, 1)));
            pool.push(((-1, k), (0, 1)));
        }
        SearchConfig { pool, max_trials: 1000 }
    }
}

impl SearchConfig {
    /// Gaussian rationals of modulus one: `±1`, `±i` and the rotations and
    /// conjugates of `(a^2 - b^2 + 2abi) / (a^2 + b^2)` for small `a > b`.
    /// Conjugation by such diagonals is an isometry, which keeps float runs well conditioned.
    pub fn unit_circle() -> Self {
        let mut pool = vec![((1, 1), (0, 1)), ((-1, 1), (0, 1)), ((0, 1), (1, 1)), ((0, 1), (-1, 1))];
        for (a, b) in [(2i64, 1i64), (3, 2), (4, 1), (4, 3), (5, 2), (5, 4)] {
            let (x, y, d) = (a * a - b * b, 2 * a * b, a * a + b * b);
            for (re, im) in [(x, y), (-y, x), (-x, -y), (y, -x), (x, -y), (y, x), (-x, y), (-y, -x)] {
                pool.push(((re, d), (im, d)));
            }
        }
        SearchConfig { pool, max_trials: 1000 }
    }
}

/// Rejection sampling of `t_j`, scalar on each block of `pi_j`, such that
/// `Z_G(t_j) = H_j` for all `j` and `Z_G(h_0 (t_1 ... t_r)^{-1}) ⊂ H_1`.
pub fn search_parameters<S: Scalar>(
    chain: &LeviChain,
    h0: &Matrix<S>,
    draws: &mut impl DrawSource,
    config: &SearchConfig,
    tol: &Tolerance,
) -> Result<UnfoldingParams<S>> {
    let n = chain.n();
    let r = chain.r();
    if r > 0 {
        check_slot(chain.levi(0), h0, "h0", tol)?;
    }
    let (mut fail1, mut fail2) = (0usize, 0usize);
    for _ in 0..config.max_trials {
        let ts: Vec<Matrix<S>> = (0..r)
            .map(|j| {
                let layout = chain.layout(j);
                let scalars: Vec<S> = (0..layout.block_count())
                    .map(|_| {
                        let (re, im) = config.pool[draws.draw(config.pool.len())];
                        S::from_gaussian(re, im)
                    })
                    .collect();
                Matrix::diag(&(0..n).map(|i| scalars[layout.rank_of(i)].clone()).collect::<Vec<_>>())
            })
            .collect();
        if !(0..r).all(|j| centralizer_equals_levi_layout(&ts[j], chain.layout(j), tol)) {
            fail1 += 1;
            continue;
        }
        let prod = ts.iter().fold(Matrix::identity(n), |acc, t| &acc * t);
        if r > 0 && !centralizer_contained_in_levi_layout(&(h0 * &prod.inverse()?), chain.layout(0), tol) {
            fail2 += 1;
            continue;
        }
        return UnfoldingParams::new(chain.clone(), ts, tol);
    }
    let worst = if fail1 >= fail2 { "Z_G(t_j) = H_j" } else { "Z_G(h0 (t_1...t_r)^{-1}) in H_1" };
    Err(WcvError::SearchExhausted {
        trials: config.max_trials,
        detail: format!("condition `{worst}` failed most often ({fail1} times for the first, {fail2} for the second)"),
    })
}

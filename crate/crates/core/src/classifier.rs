//! Regime classification of finite games: Pareto actions, neighbouring
//! cells, observability and alignment bounds.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::Game;
use crate::linalg::{self, in_column_span, least_norm_solve, rank_of_columns};
use crate::lp::{LinearProgram, Sense};

/// Residual above which an action is not a convex combination of the others.
pub const HULL_TOL: f64 = 1e-8;
/// Slack below which a cell constraint counts as tight.
pub const SLACK_TOL: f64 = 1e-9;
const DUP_TOL: f64 = 1e-12;

/// Minimax regret regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Trivial,
    SqrtN,
    NTwoThirds,
    Hopeless,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub pareto: Vec<usize>,
    pub neighbor_edges: Vec<(usize, usize)>,
    pub globally_observable: bool,
    pub locally_observable: bool,
    pub regime: Regime,
    /// Upper bound on the alignment constant of the whole action set, when
    /// finite.
    pub alignment_upper: Option<f64>,
}

fn same(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    (a - b).norm() <= DUP_TOL * a.norm().max(b.norm()).max(1.0)
}

fn is_duplicate_of_earlier(game: &Game, i: usize) -> bool {
    (0..i).any(|j| same(game.action(j), game.action(i)))
}

/// Distance from `x_i` to the convex hull of the other (non-identical)
/// actions, measured in the L1 norm.
fn hull_residual(game: &Game, i: usize) -> Result<f64> {
    let xi = game.action(i);
    let others: Vec<usize> = (0..game.num_actions())
        .filter(|&j| j != i && !same(game.action(j), xi))
        .collect();
    if others.is_empty() {
        return Ok(f64::INFINITY);
    }
    let d = game.dim();
    let mut lp = LinearProgram::minimize();
    let lambda: Vec<usize> = others
        .iter()
        .map(|_| lp.var(0.0, 0.0, f64::INFINITY))
        .collect();
    let plus: Vec<usize> = (0..d).map(|_| lp.var(1.0, 0.0, f64::INFINITY)).collect();
    let minus: Vec<usize> = (0..d).map(|_| lp.var(1.0, 0.0, f64::INFINITY)).collect();
    for k in 0..d {
        let mut row: Vec<(usize, f64)> = others
            .iter()
            .zip(&lambda)
            .map(|(&j, &v)| (v, game.action(j)[k]))
            .collect();
        row.push((plus[k], -1.0));
        row.push((minus[k], 1.0));
        lp.constraint(row, Sense::Eq, xi[k]);
    }
    lp.constraint(lambda.iter().map(|&v| (v, 1.0)).collect(), Sense::Eq, 1.0);
    Ok(lp.solve()?.objective)
}

/// Extreme points of the convex hull. Among identical vectors only the
/// lowest index is kept.
pub fn pareto_actions(game: &Game) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for i in 0..game.num_actions() {
        if is_duplicate_of_earlier(game, i) {
            continue;
        }
        if hull_residual(game, i)? > HULL_TOL {
            out.push(i);
        }
    }
    Ok(out)
}

/// Intersection of two Pareto cells.
#[derive(Debug, Clone)]
pub struct Face {
    /// Affine dimension of the intersection.
    pub dim: usize,
    /// A point in its relative interior (inside the unit box).
    pub witness: DVector<f64>,
    /// Pareto actions whose cell constraint is tight on the whole face,
    /// including the second action of the pair.
    pub tied: Vec<usize>,
}

fn unit(v: DVector<f64>) -> DVector<f64> {
    let n = v.norm();
    if n > 0.0 {
        v / n
    } else {
        v
    }
}

/// `max t` over `theta` in the unit box with `<e, theta> = 0` for `eqs` and
/// `<u, theta> >= t` for `ineqs`.
fn max_min_slack(
    d: usize,
    eqs: &[DVector<f64>],
    ineqs: &[DVector<f64>],
) -> Result<(f64, DVector<f64>)> {
    let mut lp = LinearProgram::maximize();
    let theta: Vec<usize> = (0..d).map(|_| lp.var(0.0, -1.0, 1.0)).collect();
    let t = lp.var(1.0, 0.0, 1.0);
    for e in eqs {
        lp.constraint(theta.iter().map(|&v| (v, e[v])).collect(), Sense::Eq, 0.0);
    }
    for u in ineqs {
        let mut row: Vec<(usize, f64)> = theta.iter().map(|&v| (v, u[v])).collect();
        row.push((t, -1.0));
        lp.constraint(row, Sense::Ge, 0.0);
    }
    let sol = lp.solve()?;
    Ok((
        sol.values[t],
        DVector::from_fn(d, |k, _| sol.values[theta[k]]),
    ))
}

/// `max <target, theta>` over the box, with equalities and `<u, theta> >= 0`.
fn max_direction(
    d: usize,
    target: &DVector<f64>,
    eqs: &[DVector<f64>],
    ineqs: &[DVector<f64>],
) -> Result<f64> {
    let mut lp = LinearProgram::maximize();
    let theta: Vec<usize> = (0..d).map(|k| lp.var(target[k], -1.0, 1.0)).collect();
    for e in eqs {
        lp.constraint(theta.iter().map(|&v| (v, e[v])).collect(), Sense::Eq, 0.0);
    }
    for u in ineqs {
        lp.constraint(theta.iter().map(|&v| (v, u[v])).collect(), Sense::Ge, 0.0);
    }
    Ok(lp.solve()?.objective)
}

/// Computes the face `C_i ∩ C_j` for Pareto actions `i != j`.
pub fn face(game: &Game, pareto: &[usize], i: usize, j: usize) -> Result<Face> {
    if i == j || !pareto.contains(&i) || !pareto.contains(&j) {
        return Err(Error::InvalidParameter(format!(
            "face needs two distinct Pareto actions, got ({i}, {j})"
        )));
    }
    let d = game.dim();
    let xi = game.action(i);
    let dir = |z: usize| unit(xi - game.action(z));
    let mut tied = vec![j];
    let mut free: Vec<usize> = pareto
        .iter()
        .cloned()
        .filter(|&z| z != i && z != j)
        .collect();

    let eqs_of = |tied: &[usize]| tied.iter().map(|&z| dir(z)).collect::<Vec<_>>();
    let ineqs_of = |free: &[usize]| free.iter().map(|&z| dir(z)).collect::<Vec<_>>();

    let (slack, mut witness) = max_min_slack(d, &eqs_of(&tied), &ineqs_of(&free))?;
    if slack <= SLACK_TOL && !free.is_empty() {
        let eqs = eqs_of(&tied);
        let ineqs = ineqs_of(&free);
        let mut implicit = Vec::new();
        for (k, &z) in free.iter().enumerate() {
            if max_direction(d, &ineqs[k], &eqs, &ineqs)? <= SLACK_TOL {
                implicit.push(z);
            }
        }
        free.retain(|z| !implicit.contains(z));
        tied.extend(implicit);
        witness = max_min_slack(d, &eqs_of(&tied), &ineqs_of(&free))?.1;
    }
    let dirs: Vec<DVector<f64>> = tied.iter().map(|&z| xi - game.action(z)).collect();
    let dim = d - rank_of_columns(&dirs, d).min(d);
    tied.sort_unstable();
    Ok(Face { dim, witness, tied })
}

/// Whether Pareto actions `i` and `j` have cells meeting in a facet.
pub fn are_neighbors(game: &Game, i: usize, j: usize) -> Result<bool> {
    let pareto = pareto_actions(game)?;
    neighbors_given(game, &pareto, i, j)
}

fn neighbors_given(game: &Game, pareto: &[usize], i: usize, j: usize) -> Result<bool> {
    let f = face(game, pareto, i, j)?;
    Ok(f.dim + 1 == game.dim())
}

/// Actions whose cell contains the face of the neighbouring pair `(i, j)`.
/// When the face is the origin only copies of the pair itself qualify.
pub fn neighborhood(game: &Game, i: usize, j: usize, f: &Face) -> Vec<usize> {
    let xi = game.action(i);
    if f.witness.norm() <= SLACK_TOL {
        return (0..game.num_actions())
            .filter(|&z| same(game.action(z), xi) || same(game.action(z), game.action(j)))
            .collect();
    }
    let scale = f.witness.norm().max(1.0);
    (0..game.num_actions())
        .filter(|&z| (xi - game.action(z)).dot(&f.witness) <= SLACK_TOL * scale)
        .collect()
}

fn all_operators(game: &Game, subset: &[usize]) -> DMatrix<f64> {
    let blocks: Vec<&DMatrix<f64>> = subset.iter().map(|&z| game.operator(z)).collect();
    linalg::hstack(&blocks, game.dim())
}

/// Every difference of Pareto actions lies in the span of all operators.
pub fn is_globally_observable(game: &Game) -> Result<bool> {
    let pareto = pareto_actions(game)?;
    Ok(globally_given(game, &pareto))
}

fn globally_given(game: &Game, pareto: &[usize]) -> bool {
    let all: Vec<usize> = (0..game.num_actions()).collect();
    let b = all_operators(game, &all);
    pareto.iter().enumerate().all(|(k, &x)| {
        pareto[k + 1..]
            .iter()
            .all(|&y| in_column_span(&b, &(game.action(x) - game.action(y))))
    })
}

/// Neighbour graph on the Pareto actions.
pub fn neighbor_edges(game: &Game) -> Result<Vec<(usize, usize)>> {
    let pareto = pareto_actions(game)?;
    edges_given(game, &pareto)
}

fn edges_given(game: &Game, pareto: &[usize]) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for (k, &i) in pareto.iter().enumerate() {
        for &j in &pareto[k + 1..] {
            if neighbors_given(game, pareto, i, j)? {
                out.push((i, j));
            }
        }
    }
    Ok(out)
}

/// Every neighbouring difference lies in the span of the operators of its
/// neighbourhood.
pub fn is_locally_observable(game: &Game) -> Result<bool> {
    let pareto = pareto_actions(game)?;
    locally_given(game, &pareto)
}

fn locally_given(game: &Game, pareto: &[usize]) -> Result<bool> {
    for (k, &i) in pareto.iter().enumerate() {
        for &j in &pareto[k + 1..] {
            let f = face(game, pareto, i, j)?;
            if f.dim + 1 != game.dim() {
                continue;
            }
            let nbhd = neighborhood(game, i, j, &f);
            let b = all_operators(game, &nbhd);
            if !in_column_span(&b, &(game.action(i) - game.action(j))) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn grouped_norm_sum(w: &DVector<f64>, sizes: &[usize]) -> f64 {
    let mut at = 0;
    let mut total = 0.0;
    for &m in sizes {
        total += w.rows(at, m).norm();
        at += m;
    }
    total
}

/// Smallest `sum_z |w_z|` found for `B w = v` among the least-norm
/// solution, an L1-minimal solution and a reweighted refinement.
fn grouped_decomposition(b: &DMatrix<f64>, sizes: &[usize], v: &DVector<f64>) -> Option<f64> {
    let (w0, residual) = least_norm_solve(b, v);
    if residual >= linalg::RANK_TOL * v.norm().max(f64::MIN_POSITIVE) {
        return None;
    }
    let mut best = grouped_norm_sum(&w0, sizes);

    let n = b.ncols();
    let mut lp = LinearProgram::minimize();
    let plus: Vec<usize> = (0..n).map(|_| lp.var(1.0, 0.0, f64::INFINITY)).collect();
    let minus: Vec<usize> = (0..n).map(|_| lp.var(1.0, 0.0, f64::INFINITY)).collect();
    for r in 0..b.nrows() {
        let mut row = Vec::with_capacity(2 * n);
        for c in 0..n {
            row.push((plus[c], b[(r, c)]));
            row.push((minus[c], -b[(r, c)]));
        }
        lp.constraint(row, Sense::Eq, v[r]);
    }
    if let Ok(sol) = lp.solve() {
        let w = DVector::from_fn(n, |c, _| sol.values[plus[c]] - sol.values[minus[c]]);
        if (b * &w - v).norm() < linalg::RANK_TOL * v.norm() {
            best = best.min(grouped_norm_sum(&w, sizes));
        }
    }

    // weighted least norm with weights |w_z| (group lasso by reweighting)
    let mut w = w0;
    for _ in 0..30 {
        let mut weights = DVector::zeros(n);
        let mut at = 0;
        for &m in sizes {
            let g = w.rows(at, m).norm() + 1e-12;
            weights.rows_mut(at, m).fill(g);
            at += m;
        }
        let bw = b * DMatrix::from_diagonal(&weights);
        let gram = &bw * b.transpose();
        let (y, _) = least_norm_solve(&gram, v);
        let next = weights.component_mul(&(b.transpose() * y));
        if (b * &next - v).norm() >= linalg::RANK_TOL * v.norm() {
            break;
        }
        w = next;
        best = best.min(grouped_norm_sum(&w, sizes));
    }
    Some(best)
}

/// `min_w (sum_z |w_z|)^2` over decompositions `v = sum_z A_z w_z` using the
/// operators of `subset`, or `None` when `v` is outside their span.
pub fn decomposition_bound(game: &Game, subset: &[usize], v: &DVector<f64>) -> Option<f64> {
    if v.norm() == 0.0 {
        return Some(0.0);
    }
    if subset.is_empty() {
        return None;
    }
    let b = all_operators(game, subset);
    let sizes: Vec<usize> = subset.iter().map(|&z| game.obs_dim(z)).collect();
    grouped_decomposition(&b, &sizes, v).map(|s| s * s)
}

/// Upper bound `max_{x,y} min_w (sum_z |w_z|)^2` on the alignment constant of
/// `subset`, where `w` ranges over decompositions of `x - y` by the subset's
/// operators. Returns infinity when some difference is not in their span.
pub fn alignment_upper(game: &Game, subset: &[usize]) -> f64 {
    if subset.len() < 2 {
        return 0.0;
    }
    let b = all_operators(game, subset);
    let sizes: Vec<usize> = subset.iter().map(|&z| game.obs_dim(z)).collect();
    let mut worst = 0.0_f64;
    for (k, &x) in subset.iter().enumerate() {
        for &y in &subset[k + 1..] {
            let v = game.action(x) - game.action(y);
            if v.norm() == 0.0 {
                continue;
            }
            match grouped_decomposition(&b, &sizes, &v) {
                Some(s) => worst = worst.max(s * s),
                None => return f64::INFINITY,
            }
        }
    }
    worst
}

/// Monte-Carlo lower estimate of the alignment constant of `subset`:
/// `max_v max_{x,y} <x - y, v>^2 / max_z |A_z^T v|^2` over random unit `v`.
pub fn alignment_lower_estimate<R: Rng + ?Sized>(
    game: &Game,
    subset: &[usize],
    samples: usize,
    rng: &mut R,
) -> f64 {
    let d = game.dim();
    let mut best = 0.0_f64;
    for _ in 0..samples {
        let v = unit(DVector::from_fn(d, |_, _| {
            rng.sample::<f64, _>(StandardNormal)
        }));
        let denom = subset
            .iter()
            .map(|&z| game.operator(z).tr_mul(&v).norm_squared())
            .fold(0.0_f64, f64::max);
        for (k, &x) in subset.iter().enumerate() {
            for &y in &subset[k + 1..] {
                let num = (game.action(x) - game.action(y)).dot(&v).powi(2);
                if num > 0.0 {
                    best = best.max(if denom > 0.0 {
                        num / denom
                    } else {
                        f64::INFINITY
                    });
                }
            }
        }
    }
    best
}

/// Bound from writing the average-reward difference of two dueling pairs as
/// half the observed difference of the first components plus half that of
/// the second components. `ground` is the number of ground actions of a
/// game built by the dueling preset; pair `(a, b)` has index `a * ground + b`.
pub fn dueling_pair_bound(
    game: &Game,
    ground: usize,
    first: (usize, usize),
    second: (usize, usize),
) -> Result<f64> {
    if ground * ground != game.num_actions()
        || first.0.max(first.1).max(second.0).max(second.1) >= ground
    {
        return Err(Error::InvalidParameter(
            "pair indices do not match a dueling game".into(),
        ));
    }
    let idx = |a: usize, b: usize| a * ground + b;
    let target = game.action(idx(first.0, first.1)) - game.action(idx(second.0, second.1));
    let u = idx(first.0, second.0);
    let w = idx(first.1, second.1);
    let recon = (game.operator(u).column(0) + game.operator(w).column(0)) * 0.5;
    if (recon - &target).norm() > 1e-9 {
        return Err(Error::Numerical(
            "dueling decomposition does not reproduce the difference".into(),
        ));
    }
    let total = if u == w {
        // both halves use the same operator: weight 1 on it
        1.0
    } else {
        0.5 + 0.5
    };
    Ok(total * total)
}

/// Full regime report.
pub fn classify(game: &Game) -> Result<ClassificationReport> {
    let pareto = pareto_actions(game)?;
    let neighbor_edges = edges_given(game, &pareto)?;
    let globally = globally_given(game, &pareto);
    let locally = if pareto.len() <= 1 {
        true
    } else {
        locally_given(game, &pareto)? && globally
    };
    let regime = if pareto.len() <= 1 {
        Regime::Trivial
    } else if locally {
        Regime::SqrtN
    } else if globally {
        Regime::NTwoThirds
    } else {
        Regime::Hopeless
    };
    let alignment_upper = if globally {
        let all: Vec<usize> = (0..game.num_actions()).collect();
        Some(alignment_upper(game, &all)).filter(|a| a.is_finite())
    } else {
        None
    };
    Ok(ClassificationReport {
        pareto,
        neighbor_edges,
        globally_observable: globally,
        locally_observable: locally,
        regime,
        alignment_upper,
    })
}

//! Gap estimates, information gains and the decision rules built on them.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::estimator::EstimatorState;
use crate::game::Game;
use crate::linalg::{self, TIE_TOL};

/// Decision rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    IdsFull,
    IdsDirected,
    IdsDeterministic,
    Ucb,
    Greedy,
    Uniform,
}

impl PolicyKind {
    pub fn is_ids(self) -> bool {
        matches!(
            self,
            PolicyKind::IdsFull | PolicyKind::IdsDirected | PolicyKind::IdsDeterministic
        )
    }
}

/// A policy together with its confidence parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Policy {
    pub kind: PolicyKind,
    pub delta: f64,
}

impl Policy {
    pub fn new(kind: PolicyKind, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1], got {delta}"
            )));
        }
        Ok(Self { kind, delta })
    }
}

/// Sampling distribution chosen for one round plus the quantities that
/// produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyDecision {
    pub support: Vec<usize>,
    pub probs: Vec<f64>,
    /// Gap estimate of every action.
    pub gaps: Vec<f64>,
    /// Information gain of every action as used by the rule.
    pub infos: Vec<f64>,
    /// Information ratio of the returned distribution.
    pub ratio: f64,
    /// Set when no action carried information and the minimum-gap action was
    /// played instead.
    pub fallback: bool,
}

impl PolicyDecision {
    fn point_mass(i: usize, gaps: Vec<f64>, infos: Vec<f64>, fallback: bool) -> Self {
        let ratio = info_ratio(gaps[i], infos[i]);
        Self {
            support: vec![i],
            probs: vec![1.0],
            gaps,
            infos,
            ratio,
            fallback,
        }
    }

    fn from_minimizer(m: &RatioMinimizer, gaps: Vec<f64>, infos: Vec<f64>) -> Self {
        let (support, probs) = m.distribution();
        Self {
            support,
            probs,
            gaps,
            infos,
            ratio: m.ratio,
            fallback: false,
        }
    }

    /// Expected gap under the decision.
    pub fn expected_gap(&self) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(&i, &p)| p * self.gaps[i])
            .sum()
    }

    /// Expected information gain under the decision.
    pub fn expected_info(&self) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(&i, &p)| p * self.infos[i])
            .sum()
    }

    /// Draws an action index.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.support.len() == 1 {
            return self.support[0];
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (&i, &p) in self.support.iter().zip(&self.probs) {
            acc += p;
            if u < acc {
                return i;
            }
        }
        *self.support.last().expect("non-empty support")
    }
}

/// `D^2 / I` with `D = 0 => 0` and `I = 0, D > 0 => inf`.
pub fn info_ratio(gap: f64, info: f64) -> f64 {
    if gap <= 0.0 {
        0.0
    } else if info <= 0.0 {
        f64::INFINITY
    } else {
        gap * gap / info
    }
}

/// `Delta(x) = min{1, max_y <y - x, theta_hat> + beta |x - y|_{V^{-1}}}`.
pub fn gap_upper(state: &EstimatorState, game: &Game, beta_sqrt: f64, x_index: usize) -> f64 {
    let theta = state.theta_hat();
    let x = game.action(x_index);
    let mut best = 0.0_f64;
    for y in game.actions() {
        let diff = y - x;
        let value = diff.dot(theta) + beta_sqrt * state.weighted_norm_sq(&diff).sqrt();
        best = best.max(value);
    }
    best.min(1.0)
}

/// [`gap_upper`] for every action.
pub fn gap_upper_all(state: &EstimatorState, game: &Game, beta_sqrt: f64) -> Vec<f64> {
    (0..game.num_actions())
        .map(|i| gap_upper(state, game, beta_sqrt, i))
        .collect()
}

/// Optimistic value of the best action minus the pessimistic value of `x`,
/// without truncation. A single action has gap zero.
pub fn gap_relaxed_all(state: &EstimatorState, game: &Game, beta_sqrt: f64) -> Vec<f64> {
    if game.num_actions() == 1 {
        return vec![0.0];
    }
    let theta = state.theta_hat();
    let widths: Vec<f64> = game
        .actions()
        .iter()
        .map(|x| beta_sqrt * state.weighted_norm_sq(x).sqrt())
        .collect();
    let means: Vec<f64> = game.actions().iter().map(|x| x.dot(theta)).collect();
    let top = means
        .iter()
        .zip(&widths)
        .map(|(m, w)| m + w)
        .fold(f64::NEG_INFINITY, f64::max);
    means
        .iter()
        .zip(&widths)
        .map(|(m, w)| top - (m - w))
        .collect()
}

pub fn gap_relaxed(state: &EstimatorState, game: &Game, beta_sqrt: f64, x_index: usize) -> f64 {
    gap_relaxed_all(state, game, beta_sqrt)[x_index]
}

/// Actions that pass the relaxed plausibility test
/// `max_y <y - x, theta_hat> - beta |y - x|_{V^{-1}} <= 0`.
pub fn plausible_set(state: &EstimatorState, game: &Game, beta_sqrt: f64) -> Vec<usize> {
    let theta = state.theta_hat();
    (0..game.num_actions())
        .filter(|&i| {
            let x = game.action(i);
            game.actions().iter().all(|y| {
                let diff = y - x;
                diff.dot(theta) - beta_sqrt * state.weighted_norm_sq(&diff).sqrt() <= 0.0
            })
        })
        .collect()
}

fn inner_matrix(state: &EstimatorState, a: &DMatrix<f64>) -> DMatrix<f64> {
    let m = a.ncols();
    let mut inner = a.transpose() * state.gram_inverse() * a;
    inner = (&inner + inner.transpose()) * 0.5;
    inner + DMatrix::identity(m, m)
}

/// `log det(I_m + A^T V^{-1} A)`.
pub fn info_gain_full(state: &EstimatorState, a: &DMatrix<f64>) -> Result<f64> {
    check_dim(state.dim(), a.nrows(), "operator rows")?;
    if a.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    Ok(linalg::spd_logdet(&inner_matrix(state, a))?.max(0.0))
}

/// `log |w|^2_{V^{-1}} - log |w|^2_{(V + A A^T)^{-1}}`, evaluated through the
/// Woodbury identity.
pub fn info_gain_directed(
    state: &EstimatorState,
    a: &DMatrix<f64>,
    w: &DVector<f64>,
) -> Result<f64> {
    check_dim(state.dim(), a.nrows(), "operator rows")?;
    check_dim(state.dim(), w.len(), "direction")?;
    let s = state.weighted_norm_sq(w);
    if s <= 0.0 {
        return Err(Error::InvalidParameter("direction must be non-zero".into()));
    }
    if a.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let u = a.transpose() * (state.gram_inverse() * w);
    let chol = inner_matrix(state, a)
        .cholesky()
        .ok_or_else(|| Error::Numerical("I + A^T V^-1 A is not positive definite".into()))?;
    let q = u.dot(&chol.solve(&u));
    let frac = (q / s).clamp(0.0, 1.0);
    Ok((-(1.0 - frac).ln()).max(0.0))
}

/// Minimizer of the information ratio over two-point distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioMinimizer {
    pub first: usize,
    pub second: usize,
    /// Probability on `second`.
    pub p: f64,
    pub ratio: f64,
}

impl RatioMinimizer {
    /// `(support, probs)` with point masses collapsed to a single index.
    pub fn distribution(&self) -> (Vec<usize>, Vec<f64>) {
        if self.p <= 0.0 || self.first == self.second {
            (vec![self.first], vec![1.0])
        } else if self.p >= 1.0 {
            (vec![self.second], vec![1.0])
        } else {
            (vec![self.first, self.second], vec![1.0 - self.p, self.p])
        }
    }
}

fn strictly_better(candidate: f64, best: f64) -> bool {
    if best == f64::INFINITY {
        return candidate < best;
    }
    candidate < best && best - candidate > TIE_TOL * best.abs().max(1.0)
}

/// Exact minimizer of `(sum p Delta)^2 / (sum p I)` over distributions with at
/// most two atoms. Ties resolve to the lexicographically smallest pair and
/// then to the smaller `p`.
pub fn min_ratio_pair(gaps: &[f64], infos: &[f64]) -> Result<RatioMinimizer> {
    min_ratio_pair_offset(gaps, infos, 0.0, 0.0, 1.0)
}

/// Like [`min_ratio_pair`] but minimizing
/// `(gap_rest + weight * sum p Delta)^2 / (info_rest + weight * sum p I)`,
/// which is the per-block problem of the joint contextual ratio.
pub fn min_ratio_pair_offset(
    gaps: &[f64],
    infos: &[f64],
    gap_rest: f64,
    info_rest: f64,
    weight: f64,
) -> Result<RatioMinimizer> {
    check_dim(gaps.len(), infos.len(), "gaps vs infos")?;
    if gaps.is_empty() {
        return Err(Error::InvalidParameter("empty action list".into()));
    }
    let eval = |i: usize, j: usize, p: f64| {
        let d = gap_rest + weight * ((1.0 - p) * gaps[i] + p * gaps[j]);
        let inf = info_rest + weight * ((1.0 - p) * infos[i] + p * infos[j]);
        info_ratio(d, inf)
    };
    let k = gaps.len();
    let mut best = RatioMinimizer {
        first: 0,
        second: 0,
        p: 0.0,
        ratio: if k == 1 {
            eval(0, 0, 0.0)
        } else {
            f64::INFINITY
        },
    };
    for i in 0..k {
        for j in (i + 1)..k {
            let mut candidates = vec![0.0, 1.0];
            let a = gap_rest + weight * gaps[i];
            let b = weight * (gaps[j] - gaps[i]);
            let c = info_rest + weight * infos[i];
            let e = weight * (infos[j] - infos[i]);
            if b != 0.0 && e != 0.0 {
                let p = a / b - 2.0 * c / e;
                if p > 0.0 && p < 1.0 {
                    candidates.push(p);
                }
            }
            for p in candidates {
                let r = eval(i, j, p);
                if strictly_better(r, best.ratio) {
                    best = RatioMinimizer {
                        first: i,
                        second: j,
                        p,
                        ratio: r,
                    };
                }
            }
        }
    }
    if best.ratio == f64::INFINITY {
        return Err(Error::NoInformation);
    }
    Ok(best)
}

/// Most uncertain direction among plausible maximizers, or `None` when the
/// plausible set is a single action or all its differences vanish.
pub fn uncertain_direction(
    state: &EstimatorState,
    game: &Game,
    beta_sqrt: f64,
) -> Option<DVector<f64>> {
    let plausible = plausible_set(state, game, beta_sqrt);
    let mut best: Option<(f64, DVector<f64>)> = None;
    for (k, &i) in plausible.iter().enumerate() {
        for &j in &plausible[k + 1..] {
            let diff = game.action(i) - game.action(j);
            let n = state.weighted_norm_sq(&diff);
            if n > 0.0 && best.as_ref().is_none_or(|(b, _)| strictly_better(-n, -*b)) {
                best = Some((n, diff));
            }
        }
    }
    best.map(|(_, w)| w)
}

/// Full information gain of every action.
pub fn info_gain_full_all(state: &EstimatorState, game: &Game) -> Result<Vec<f64>> {
    game.operators()
        .iter()
        .map(|a| info_gain_full(state, a))
        .collect()
}

fn ids_from(gaps: Vec<f64>, infos: Vec<f64>) -> Result<PolicyDecision> {
    match min_ratio_pair(&gaps, &infos) {
        Ok(m) => Ok(PolicyDecision::from_minimizer(&m, gaps, infos)),
        Err(Error::NoInformation) => {
            let i = linalg::argmin(&gaps);
            Ok(PolicyDecision::point_mass(i, gaps, infos, true))
        }
        Err(e) => Err(e),
    }
}

/// One round of the chosen rule.
pub fn decide(policy: &Policy, state: &EstimatorState, game: &Game) -> Result<PolicyDecision> {
    check_dim(game.dim(), state.dim(), "estimator dimension")?;
    let beta = state.beta_radius(policy.delta)?;
    let gaps = gap_upper_all(state, game, beta);
    let k = game.num_actions();
    match policy.kind {
        PolicyKind::IdsFull => ids_from(gaps, info_gain_full_all(state, game)?),
        PolicyKind::IdsDirected => {
            let infos = match uncertain_direction(state, game, beta) {
                Some(w) => game
                    .operators()
                    .iter()
                    .map(|a| info_gain_directed(state, a, &w))
                    .collect::<Result<Vec<_>>>()?,
                None => vec![0.0; k],
            };
            ids_from(gaps, infos)
        }
        PolicyKind::IdsDeterministic => {
            let infos = info_gain_full_all(state, game)?;
            let ratios: Vec<f64> = gaps
                .iter()
                .zip(&infos)
                .map(|(&g, &i)| info_ratio(g, i))
                .collect();
            if ratios.iter().all(|r| r.is_infinite()) {
                let i = linalg::argmin(&gaps);
                return Ok(PolicyDecision::point_mass(i, gaps, infos, true));
            }
            let i = linalg::argmin(&ratios);
            Ok(PolicyDecision::point_mass(i, gaps, infos, false))
        }
        PolicyKind::Ucb => {
            let infos = info_gain_full_all(state, game)?;
            let i = ucb_action(state, game, beta);
            Ok(PolicyDecision::point_mass(i, gaps, infos, false))
        }
        PolicyKind::Greedy => {
            let infos = info_gain_full_all(state, game)?;
            let i = game.best_action(state.theta_hat());
            Ok(PolicyDecision::point_mass(i, gaps, infos, false))
        }
        PolicyKind::Uniform => {
            let infos = info_gain_full_all(state, game)?;
            let p = 1.0 / k as f64;
            let mean_gap = gaps.iter().sum::<f64>() * p;
            let mean_info = infos.iter().sum::<f64>() * p;
            Ok(PolicyDecision {
                support: (0..k).collect(),
                probs: vec![p; k],
                ratio: info_ratio(mean_gap, mean_info),
                gaps,
                infos,
                fallback: false,
            })
        }
    }
}

/// `argmax_x <x, theta_hat> + beta |x|_{V^{-1}}`.
pub fn ucb_action(state: &EstimatorState, game: &Game, beta_sqrt: f64) -> usize {
    let scores: Vec<f64> = game
        .actions()
        .iter()
        .map(|x| x.dot(state.theta_hat()) + beta_sqrt * state.weighted_norm_sq(x).sqrt())
        .collect();
    linalg::argmax(&scores)
}

/// Single action minimizing `Delta_relaxed^2 / trace(A^T V^{-1} A)`; in bandit
/// games the denominator is `|x|^2_{V^{-1}}`.
pub fn relaxed_deterministic_action(state: &EstimatorState, game: &Game, beta_sqrt: f64) -> usize {
    let gaps = gap_relaxed_all(state, game, beta_sqrt);
    let ratios: Vec<f64> = gaps
        .iter()
        .zip(game.operators())
        .map(|(&g, a)| {
            let info = (a.transpose() * state.gram_inverse() * a).trace();
            info_ratio(g, info)
        })
        .collect();
    linalg::argmin(&ratios)
}

//! Games with a finite set of contexts drawn from a known distribution.

use std::sync::Arc;

use serde::Serialize;

use crate::classifier;
use crate::error::{check_dim, Error, Result};
use crate::estimator::EstimatorState;
use crate::game::Game;
use crate::linalg;
use crate::policy::{
    self, decide, gap_upper_all, info_gain_full_all, info_ratio, min_ratio_pair_offset, Policy,
    PolicyDecision, PolicyKind, RatioMinimizer,
};

/// Stop coordinate descent once a sweep improves the joint ratio by less.
pub const SWEEP_TOL: f64 = 1e-9;
pub const MAX_SWEEPS: usize = 200;

#[derive(Debug, Clone)]
pub struct ContextualGame {
    contexts: Vec<Arc<Game>>,
    nu: Vec<f64>,
}

impl ContextualGame {
    pub fn new(contexts: Vec<Arc<Game>>, nu: Vec<f64>) -> Result<Self> {
        if contexts.is_empty() {
            return Err(Error::InvalidGame("no contexts".into()));
        }
        check_dim(contexts.len(), nu.len(), "context distribution")?;
        let d = contexts[0].dim();
        for g in &contexts {
            check_dim(d, g.dim(), "context dimension")?;
        }
        if nu.iter().any(|&p| p.is_nan() || p < 0.0) {
            return Err(Error::InvalidParameter(
                "context probabilities must be >= 0".into(),
            ));
        }
        let total: f64 = nu.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "context probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { contexts, nu })
    }

    pub fn dim(&self) -> usize {
        self.contexts[0].dim()
    }

    pub fn num_contexts(&self) -> usize {
        self.contexts.len()
    }

    pub fn context(&self, z: usize) -> &Game {
        &self.contexts[z]
    }

    pub fn context_arc(&self, z: usize) -> Arc<Game> {
        self.contexts[z].clone()
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    fn support(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nu.len()).filter(|&z| self.nu[z] > 0.0)
    }
}

/// Per-context conditional distributions and the resulting joint ratio.
#[derive(Debug, Clone, Serialize)]
pub struct ContextualPlan {
    pub decisions: Vec<PolicyDecision>,
    pub joint_ratio: f64,
    /// Joint ratio after initialisation and after every sweep.
    pub sweep_ratios: Vec<f64>,
}

/// IDS on the sub-game of context `z`.
pub fn conditional_ids(
    state: &EstimatorState,
    cgame: &ContextualGame,
    z: usize,
    delta: f64,
) -> Result<PolicyDecision> {
    if z >= cgame.num_contexts() {
        return Err(Error::InvalidParameter(format!("context {z} out of range")));
    }
    decide(
        &Policy::new(PolicyKind::IdsFull, delta)?,
        state,
        cgame.context(z),
    )
}

/// `(sum_z nu_z D_z)^2 / (sum_z nu_z I_z)` for a set of conditionals.
pub fn joint_ratio(nu: &[f64], decisions: &[PolicyDecision]) -> f64 {
    let (d, i) = joint_terms(nu, decisions);
    info_ratio(d, i)
}

fn joint_terms(nu: &[f64], decisions: &[PolicyDecision]) -> (f64, f64) {
    nu.iter()
        .zip(decisions)
        .fold((0.0, 0.0), |(d, i), (&p, dec)| {
            (d + p * dec.expected_gap(), i + p * dec.expected_info())
        })
}

fn decision_from(m: &RatioMinimizer, gaps: &[f64], infos: &[f64]) -> PolicyDecision {
    let (support, probs) = m.distribution();
    let mut dec = PolicyDecision {
        support,
        probs,
        gaps: gaps.to_vec(),
        infos: infos.to_vec(),
        ratio: 0.0,
        fallback: false,
    };
    dec.ratio = info_ratio(dec.expected_gap(), dec.expected_info());
    dec
}

/// Joint ratio minimization with the context marginal fixed to `nu`, by
/// cyclic block coordinate descent started from the conditional plan.
pub fn contextual_ids(
    state: &EstimatorState,
    cgame: &ContextualGame,
    delta: f64,
) -> Result<ContextualPlan> {
    let mut decisions = (0..cgame.num_contexts())
        .map(|z| conditional_ids(state, cgame, z, delta))
        .collect::<Result<Vec<_>>>()?;
    let nu = cgame.nu();
    let mut current = joint_ratio(nu, &decisions);
    let mut sweep_ratios = vec![current];
    for _ in 0..MAX_SWEEPS {
        let start = current;
        for z in cgame.support() {
            let (d_all, i_all) = joint_terms(nu, &decisions);
            let dec = &decisions[z];
            let d_rest = d_all - nu[z] * dec.expected_gap();
            let i_rest = i_all - nu[z] * dec.expected_info();
            match min_ratio_pair_offset(
                &dec.gaps,
                &dec.infos,
                d_rest.max(0.0),
                i_rest.max(0.0),
                nu[z],
            ) {
                Ok(m) if m.ratio < current => {
                    let candidate = decision_from(&m, &dec.gaps, &dec.infos);
                    let previous = std::mem::replace(&mut decisions[z], candidate);
                    let ratio = joint_ratio(nu, &decisions);
                    if ratio < current {
                        current = ratio;
                    } else {
                        decisions[z] = previous;
                    }
                }
                Ok(_) | Err(Error::NoInformation) => {}
                Err(e) => return Err(e),
            }
        }
        sweep_ratios.push(current);
        let gain = start - current;
        if gain.is_nan() || gain < SWEEP_TOL {
            break;
        }
    }
    if current.is_infinite() {
        return Err(Error::NoInformation);
    }
    Ok(ContextualPlan {
        decisions,
        joint_ratio: current,
        sweep_ratios,
    })
}

/// Gaps and full information gains of every context's actions.
pub fn context_diagnostics(
    state: &EstimatorState,
    cgame: &ContextualGame,
    delta: f64,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let beta = state.beta_radius(delta)?;
    (0..cgame.num_contexts())
        .map(|z| {
            let g = cgame.context(z);
            Ok((gap_upper_all(state, g, beta), info_gain_full_all(state, g)?))
        })
        .collect()
}

/// Upper bound on the expected alignment constant: the worst pair over
/// contexts with positive probability of the best observer context's
/// alignment bound divided by its probability. `subsets[z]` restricts the
/// actions of context `z` (for instance to plausible maximizers).
pub fn expected_alignment_upper(cgame: &ContextualGame, subsets: &[Vec<usize>]) -> Result<f64> {
    check_dim(cgame.num_contexts(), subsets.len(), "subsets per context")?;
    let mut worst = 0.0_f64;
    for z in cgame.support() {
        let g = cgame.context(z);
        let subset = &subsets[z];
        for (k, &x) in subset.iter().enumerate() {
            for &y in &subset[k + 1..] {
                let v = g.action(x) - g.action(y);
                if v.norm() == 0.0 {
                    continue;
                }
                let best = cgame
                    .support()
                    .filter_map(|zp| {
                        classifier::decomposition_bound(cgame.context(zp), &subsets[zp], &v)
                            .map(|b| b / cgame.nu()[zp])
                    })
                    .fold(f64::INFINITY, f64::min);
                worst = worst.max(best);
            }
        }
    }
    Ok(worst)
}

/// Every action difference within a context of positive probability lies in
/// the operator span of some context of positive probability.
pub fn is_contextually_globally_observable(cgame: &ContextualGame) -> bool {
    let spans: Vec<_> = cgame
        .support()
        .map(|z| {
            let g = cgame.context(z);
            let blocks: Vec<_> = g.operators().iter().collect();
            linalg::hstack(&blocks, g.dim())
        })
        .collect();
    cgame.support().all(|z| {
        let g = cgame.context(z);
        (0..g.num_actions()).all(|x| {
            (x + 1..g.num_actions()).all(|y| {
                let v = g.action(x) - g.action(y);
                spans.iter().any(|b| linalg::in_column_span(b, &v))
            })
        })
    })
}

/// Conditional distribution for context `z` from a plan, falling back to the
/// minimum-gap action when the plan could not be formed.
pub fn plan_or_fallback(
    state: &EstimatorState,
    cgame: &ContextualGame,
    z: usize,
    delta: f64,
) -> Result<PolicyDecision> {
    match contextual_ids(state, cgame, delta) {
        Ok(plan) => Ok(plan.decisions[z].clone()),
        Err(Error::NoInformation) => {
            let beta = state.beta_radius(delta)?;
            let g = cgame.context(z);
            let gaps = gap_upper_all(state, g, beta);
            let infos = info_gain_full_all(state, g)?;
            let i = linalg::argmin(&gaps);
            Ok(PolicyDecision {
                support: vec![i],
                probs: vec![1.0],
                ratio: policy::info_ratio(gaps[i], infos[i]),
                gaps,
                infos,
                fallback: true,
            })
        }
        Err(e) => Err(e),
    }
}

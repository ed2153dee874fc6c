//! Seeded single episodes.

use std::sync::Arc;

use nalgebra::DVector;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{ExperimentConfig, GameSpec, ThetaSpec};
use crate::contextual::{plan_or_fallback, ContextualGame};
use crate::error::{Error, Result};
use crate::estimator::EstimatorState;
use crate::game::{build_game, laser_truth, sample_observation, Environment, Game, PresetSpec};
use crate::kernel::{
    kernel_decide, sample_kernel_observation, KernelData, KernelGame, KernelTruth,
};
use crate::linalg;
use crate::policy::{decide, info_gain_full, Policy, PolicyDecision, PolicyKind};

/// One round of an episode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    /// 1-based round index.
    pub t: usize,
    pub action: usize,
    pub inst_regret: f64,
    pub cum_regret: f64,
    /// Full information gain of the played action before the update.
    pub info_gain: f64,
    /// Ratio reported by the decision rule.
    pub ratio: f64,
    /// The rule found no informative action and played the minimum gap.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub rep: usize,
    pub rounds: Vec<RoundRecord>,
}

impl Trajectory {
    pub fn cum_regret(&self) -> Vec<f64> {
        self.rounds.iter().map(|r| r.cum_regret).collect()
    }

    pub fn final_regret(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.cum_regret)
    }

    pub fn fallback_count(&self) -> usize {
        self.rounds.iter().filter(|r| r.fallback).count()
    }
}

enum World {
    Linear(Environment),
    Contextual {
        cgame: ContextualGame,
        theta: DVector<f64>,
        sampler: WeightedIndex<f64>,
    },
    Kernel {
        game: KernelGame,
        truth: KernelTruth,
        values: Vec<f64>,
        best: f64,
    },
}

/// A validated configuration with its game objects built. Shared read-only
/// by all episodes.
pub struct Experiment {
    pub config: ExperimentConfig,
    policy: Policy,
    world: World,
}

fn resolve_theta(spec: &ThetaSpec) -> DVector<f64> {
    match spec {
        ThetaSpec::Vector(v) => DVector::from_column_slice(v),
        ThetaSpec::Named(_) => laser_truth(),
    }
}

fn linear_game(preset: &PresetSpec, cfg: &ExperimentConfig) -> Result<Game> {
    let game = build_game(preset)?;
    match cfg.noise {
        Some(noise) => game.with_noise(noise),
        None => Ok(game),
    }
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let policy = Policy::new(config.policy, config.effective_delta())?;
        let world = match &config.game {
            GameSpec::Linear(preset) => {
                let game = Arc::new(linear_game(preset, &config)?);
                let theta = resolve_theta(config.theta.as_ref().expect("validated"));
                World::Linear(Environment::new(game, theta, config.base_seed)?)
            }
            GameSpec::Contextual(spec) => {
                let contexts = spec
                    .contexts
                    .iter()
                    .map(|p| linear_game(p, &config).map(Arc::new))
                    .collect::<Result<Vec<_>>>()?;
                let cgame = ContextualGame::new(contexts, spec.nu.clone())?;
                let theta = resolve_theta(config.theta.as_ref().expect("validated"));
                // reuse the environment checks on theta
                Environment::new(cgame.context_arc(0), theta.clone(), config.base_seed)?;
                let sampler = WeightedIndex::new(&spec.nu)
                    .map_err(|e| Error::Config(format!("context distribution: {e}")))?;
                World::Contextual {
                    cgame,
                    theta,
                    sampler,
                }
            }
            GameSpec::Kernel(spec) => {
                let noise = config.noise.unwrap_or_default();
                let game =
                    KernelGame::from_ground(spec.kernel, &spec.ground, spec.feedback, noise)?;
                let truth = KernelTruth::new(
                    spec.kernel,
                    spec.truth.centers.clone(),
                    spec.truth.weights.clone(),
                )?;
                let values: Vec<f64> = game
                    .actions
                    .iter()
                    .map(|a| truth.apply(&a.reward))
                    .collect();
                let best = values[linalg::argmax(&values)];
                World::Kernel {
                    game,
                    truth,
                    values,
                    best,
                }
            }
        };
        Ok(Self {
            config,
            policy,
            world,
        })
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    /// Number of actions (per context for contextual games, the largest).
    pub fn num_actions(&self) -> usize {
        match &self.world {
            World::Linear(env) => env.game.num_actions(),
            World::Contextual { cgame, .. } => (0..cgame.num_contexts())
                .map(|z| cgame.context(z).num_actions())
                .max()
                .unwrap_or(0),
            World::Kernel { game, .. } => game.num_actions(),
        }
    }

    pub fn game_name(&self) -> String {
        match &self.world {
            World::Linear(env) => env.game.name().to_string(),
            World::Contextual { cgame, .. } => format!("contextual[{}]", cgame.num_contexts()),
            World::Kernel { game, .. } => game.name.clone(),
        }
    }

    /// The generator of episode `rep`: ChaCha8 keyed by `base_seed` on
    /// stream `rep`.
    pub fn rng(&self, rep: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.base_seed);
        rng.set_stream(rep as u64);
        rng
    }

    pub fn run_episode(&self, rep: usize) -> Result<Trajectory> {
        let mut rng = self.rng(rep);
        let n = self.config.horizon;
        let mut rounds = Vec::with_capacity(n);
        let mut cum = 0.0;
        let mut push = |t: usize, action: usize, regret: f64, info: f64, dec: &PolicyDecision| {
            cum += regret;
            rounds.push(RoundRecord {
                t,
                action,
                inst_regret: regret,
                cum_regret: cum,
                info_gain: info,
                ratio: dec.ratio,
                fallback: dec.fallback,
            });
        };
        match &self.world {
            World::Linear(env) => {
                let mut state = EstimatorState::new(env.game.dim())?;
                for t in 1..=n {
                    let dec = decide(&self.policy, &state, &env.game)?;
                    let i = dec.sample(&mut rng);
                    let op = env.game.operator(i);
                    let info = info_gain_full(&state, op)?;
                    let obs = sample_observation(env, i, &mut rng)?;
                    state.update(op, &obs)?;
                    push(t, i, env.regret(i), info, &dec);
                }
            }
            World::Contextual {
                cgame,
                theta,
                sampler,
            } => {
                let mut state = EstimatorState::new(cgame.dim())?;
                for t in 1..=n {
                    let z = sampler.sample(&mut rng);
                    let game = cgame.context_arc(z);
                    let dec = if self.policy.kind == PolicyKind::IdsFull {
                        plan_or_fallback(&state, cgame, z, self.policy.delta)?
                    } else {
                        decide(&self.policy, &state, &game)?
                    };
                    let i = dec.sample(&mut rng);
                    let op = game.operator(i);
                    let info = info_gain_full(&state, op)?;
                    let env = Environment::new(game.clone(), theta.clone(), self.config.base_seed)?;
                    let obs = sample_observation(&env, i, &mut rng)?;
                    state.update(op, &obs)?;
                    push(t, i, game.regret(i, theta), info, &dec);
                }
            }
            World::Kernel {
                game,
                truth,
                values,
                best,
            } => {
                let mut data = KernelData::new(game.kernel)?;
                for t in 1..=n {
                    let dec = kernel_decide(&self.policy, &data, game)?;
                    let i = dec.sample(&mut rng);
                    let action = &game.actions[i];
                    let info = data.info_gain(action)?;
                    let obs = sample_kernel_observation(truth, action, game.noise, &mut rng)?;
                    data.update(action, &obs)?;
                    push(t, i, best - values[i], info, &dec);
                }
            }
        }
        Ok(Trajectory { rep, rounds })
    }
}

/// Builds the experiment and runs episode `rep`.
pub fn run_episode(config: &ExperimentConfig, rep: usize) -> Result<Trajectory> {
    Experiment::new(config.clone())?.run_episode(rep)
}

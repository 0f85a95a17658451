//! Routing policies: LinUCB, decaying epsilon-greedy (contextual and
//! context-free), and contextual Thompson sampling.

use std::collections::HashMap;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bandit::arm::ArmState;
use crate::context::ContextVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    LinUcb,
    EpsGreedy,
    EpsGreedyContextual,
    Thompson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// LinUCB exploration bonus weight (the selection-rule alpha, distinct
    /// from the reward weight lambda).
    pub alpha_ucb: f64,
    pub lambda_reg: f64,
    pub eps0: f64,
    pub decay: f64,
    pub eps_min: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            kind: PolicyKind::LinUcb,
            alpha_ucb: 0.1,
            lambda_reg: 0.05,
            eps0: 1.0,
            decay: 0.98,
            eps_min: 0.01,
            sigma: 0.01,
            seed: 0,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha_ucb < 0.0 || self.lambda_reg <= 0.0 || self.sigma <= 0.0 {
            return Err(Error::invalid("alpha_ucb >= 0, lambda_reg > 0, sigma > 0 required"));
        }
        if !(self.eps0 > 0.0 && self.eps0 <= 1.0)
            || !(self.eps_min > 0.0 && self.eps_min <= self.eps0)
            || !(self.decay > 0.0 && self.decay <= 1.0)
        {
            return Err(Error::invalid(
                "epsilon schedule requires 0 < eps_min <= eps0 <= 1 and 0 < decay <= 1",
            ));
        }
        Ok(())
    }
}

/// Outcome of one selection call.
#[derive(Debug, Clone)]
pub struct Selection {
    pub arm_id: String,
    pub score: f64,
    pub exploration: bool,
    /// Per-feasible-arm score table in registration order.
    pub scores: Vec<(String, f64)>,
}

/// A bandit policy over a mutable set of arms. Single-writer: `select` and
/// `update` must be externally serialized per instance.
pub struct Policy {
    pub config: PolicyConfig,
    d: usize,
    arms: Vec<ArmState>,
    index: HashMap<String, usize>,
    archived: Vec<ArmState>,
    /// Number of prior select calls (drives the epsilon decay clock).
    t: u64,
    rng: ChaCha8Rng,
}

impl Policy {
    pub fn init(config: PolicyConfig, arm_ids: &[String], d: usize) -> Result<Self> {
        config.validate()?;
        if arm_ids.is_empty() {
            return Err(Error::invalid("arm list must be non-empty"));
        }
        if d == 0 {
            return Err(Error::invalid("context dimension must be >= 1"));
        }
        let mut index = HashMap::new();
        let mut arms = Vec::with_capacity(arm_ids.len());
        for id in arm_ids {
            if index.insert(id.clone(), arms.len()).is_some() {
                return Err(Error::invalid(format!("duplicate arm id {id:?}")));
            }
            arms.push(ArmState::new(id.clone(), d, config.lambda_reg));
        }
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Policy {
            config,
            d,
            arms,
            index,
            archived: Vec::new(),
            t: 0,
            rng,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn arm_ids(&self) -> Vec<String> {
        self.arms.iter().map(|a| a.id.clone()).collect()
    }

    pub fn arm(&self, id: &str) -> Option<&ArmState> {
        self.index.get(id).map(|&i| &self.arms[i])
    }

    pub fn arms(&self) -> &[ArmState] {
        &self.arms
    }

    pub fn archived(&self) -> &[ArmState] {
        &self.archived
    }

    pub fn total_pulls(&self) -> u64 {
        self.arms.iter().map(|a| a.pulls).sum()
    }

    /// Current exploration probability for the epsilon-greedy schedule.
    pub fn epsilon(&self) -> f64 {
        (self.config.eps0 * self.config.decay.powf(self.t as f64)).max(self.config.eps_min)
    }

    fn feasible_indices(&self, feasible: &[String]) -> Result<Vec<usize>> {
        if feasible.is_empty() {
            return Err(Error::NoFeasibleArm);
        }
        let mut seen = vec![false; self.arms.len()];
        for id in feasible {
            let &i = self
                .index
                .get(id.as_str())
                .ok_or_else(|| Error::invalid(format!("unknown arm id {id:?}")))?;
            seen[i] = true;
        }
        Ok((0..self.arms.len()).filter(|&i| seen[i]).collect())
    }

    fn context(&self, x: &ContextVector) -> Result<DVector<f64>> {
        if x.dim() != self.d {
            return Err(Error::invalid(format!(
                "context dimension {} does not match policy dimension {}",
                x.dim(),
                self.d
            )));
        }
        Ok(DVector::from_vec(x.values.clone()))
    }

    fn pick_best(&self, candidates: &[usize], scores: &[f64]) -> usize {
        // candidates are in registration order; strict > keeps the lowest index on ties
        let mut best = 0;
        for i in 1..candidates.len() {
            if scores[i] > scores[best] {
                best = i;
            }
        }
        candidates[best]
    }

    fn selection(&self, idx: usize, score: f64, exploration: bool, table: Vec<(String, f64)>) -> Selection {
        Selection {
            arm_id: self.arms[idx].id.clone(),
            score,
            exploration,
            scores: table,
        }
    }

    /// argmax over feasible arms of theta_hat^T x + alpha * sqrt(x^T A^-1 x).
    pub fn select_linucb(&mut self, x: &ContextVector, feasible: &[String]) -> Result<Selection> {
        let xs = self.context(x)?;
        let cand = self.feasible_indices(feasible)?;
        let scores: Vec<f64> = cand
            .iter()
            .map(|&i| {
                let arm = &self.arms[i];
                arm.mean_estimate(&xs) + self.config.alpha_ucb * arm.bonus(&xs)
            })
            .collect();
        let best = self.pick_best(&cand, &scores);
        let table = cand
            .iter()
            .zip(&scores)
            .map(|(&i, &s)| (self.arms[i].id.clone(), s))
            .collect();
        self.t += 1;
        let score = self.arms[best].mean_estimate(&xs)
            + self.config.alpha_ucb * self.arms[best].bonus(&xs);
        Ok(self.selection(best, score, false, table))
    }

    /// Decaying epsilon-greedy. With context, arms rank by theta_hat^T x;
    /// without, by running mean reward.
    pub fn select_eps_greedy(
        &mut self,
        x: Option<&ContextVector>,
        feasible: &[String],
    ) -> Result<Selection> {
        let xs = match x {
            Some(x) => Some(self.context(x)?),
            None => None,
        };
        let cand = self.feasible_indices(feasible)?;
        let scores: Vec<f64> = cand
            .iter()
            .map(|&i| match &xs {
                Some(xv) => self.arms[i].mean_estimate(xv),
                None => self.arms[i].mean_reward(),
            })
            .collect();
        let eps = self.epsilon();
        let explore = self.rng.gen::<f64>() < eps;
        let pick = if explore {
            cand[self.rng.gen_range(0..cand.len())]
        } else {
            self.pick_best(&cand, &scores)
        };
        let score = scores[cand.iter().position(|&i| i == pick).unwrap()];
        let table = cand
            .iter()
            .zip(&scores)
            .map(|(&i, &s)| (self.arms[i].id.clone(), s))
            .collect();
        self.t += 1;
        Ok(self.selection(pick, score, explore, table))
    }

    /// Thompson sampling: theta_tilde ~ Normal(theta_hat, sigma^2 A^-1) per
    /// feasible arm, argmax of theta_tilde^T x.
    pub fn select_thompson(&mut self, x: &ContextVector, feasible: &[String]) -> Result<Selection> {
        let xs = self.context(x)?;
        let cand = self.feasible_indices(feasible)?;
        let mut scores = Vec::with_capacity(cand.len());
        for &i in &cand {
            let arm = &self.arms[i];
            let chol = arm
                .a_inv()
                .clone()
                .cholesky()
                .ok_or_else(|| Error::invalid("arm covariance is not positive definite"))?;
            let z = DVector::from_iterator(
                self.d,
                (0..self.d).map(|_| StandardNormal.sample(&mut self.rng)),
            );
            let theta = arm.theta_hat() + chol.l() * z * self.config.sigma;
            scores.push(theta.dot(&xs));
        }
        let best = self.pick_best(&cand, &scores);
        let score = scores[cand.iter().position(|&i| i == best).unwrap()];
        let table = cand
            .iter()
            .zip(&scores)
            .map(|(&i, &s)| (self.arms[i].id.clone(), s))
            .collect();
        self.t += 1;
        Ok(self.selection(best, score, false, table))
    }

    /// Dispatches on the configured kind. Context-free epsilon-greedy ignores x.
    pub fn select(&mut self, x: &ContextVector, feasible: &[String]) -> Result<Selection> {
        match self.config.kind {
            PolicyKind::LinUcb => self.select_linucb(x, feasible),
            PolicyKind::EpsGreedy => self.select_eps_greedy(None, feasible),
            PolicyKind::EpsGreedyContextual => self.select_eps_greedy(Some(x), feasible),
            PolicyKind::Thompson => self.select_thompson(x, feasible),
        }
    }

    pub fn update(&mut self, arm_id: &str, x: &ContextVector, r: f64) -> Result<()> {
        let xs = self.context(x)?;
        let &i = self
            .index
            .get(arm_id)
            .ok_or_else(|| Error::invalid(format!("unknown arm id {arm_id:?}")))?;
        self.arms[i].update(&xs, r)
    }

    /// Registers a fresh arm (A = lambda_reg * I, b = 0), immediately
    /// eligible for selection.
    pub fn add_arm(&mut self, arm_id: &str) -> Result<()> {
        if self.index.contains_key(arm_id) {
            return Err(Error::invalid(format!("arm {arm_id:?} already registered")));
        }
        self.index.insert(arm_id.to_string(), self.arms.len());
        self.arms
            .push(ArmState::new(arm_id, self.d, self.config.lambda_reg));
        Ok(())
    }

    /// Deregisters an arm; its statistics move to the archive.
    pub fn remove_arm(&mut self, arm_id: &str) -> Result<()> {
        let i = self
            .index
            .remove(arm_id)
            .ok_or_else(|| Error::invalid(format!("unknown arm id {arm_id:?}")))?;
        let arm = self.arms.remove(i);
        self.archived.push(arm);
        for idx in self.index.values_mut() {
            if *idx > i {
                *idx -= 1;
            }
        }
        Ok(())
    }

    pub(crate) fn restore(
        config: PolicyConfig,
        d: usize,
        arms: Vec<ArmState>,
        t: u64,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        config.validate()?;
        let mut index = HashMap::new();
        for (i, arm) in arms.iter().enumerate() {
            if index.insert(arm.id.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate arm id {:?}", arm.id)));
            }
        }
        Ok(Policy {
            config,
            d,
            arms,
            index,
            archived: Vec::new(),
            t,
            rng,
        })
    }

    pub(crate) fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("arm{i}")).collect()
    }

    fn ctx(values: Vec<f64>) -> ContextVector {
        ContextVector { values }
    }

    #[test]
    fn init_sets_ridge_prior() {
        let cfg = PolicyConfig::default();
        let p = Policy::init(cfg, &ids(16), 12).unwrap();
        assert_eq!(p.arms().len(), 16);
        for arm in p.arms() {
            assert_eq!(arm.a[(0, 0)], 0.05);
            assert_eq!(arm.a[(0, 1)], 0.0);
            assert_eq!(arm.pulls, 0);
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut v = ids(3);
        v.push("arm1".into());
        assert!(Policy::init(PolicyConfig::default(), &v, 4).is_err());
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(Policy::init(PolicyConfig::default(), &ids(2), 0).is_err());
    }

    #[test]
    fn fresh_linucb_scores_hand_value() {
        let cfg = PolicyConfig {
            lambda_reg: 1.0,
            alpha_ucb: 0.1,
            ..PolicyConfig::default()
        };
        let mut p = Policy::init(cfg, &ids(3), 2).unwrap();
        let sel = p.select_linucb(&ctx(vec![1.0, 0.0]), &ids(3)).unwrap();
        // theta_hat = 0, bonus = sqrt(x^T I x) = 1 -> score 0.1 for all, tie to arm0
        assert_eq!(sel.arm_id, "arm0");
        for (_, s) in &sel.scores {
            assert!((s - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn linucb_after_one_update_hand_value() {
        let cfg = PolicyConfig {
            lambda_reg: 1.0,
            alpha_ucb: 0.1,
            ..PolicyConfig::default()
        };
        let mut p = Policy::init(cfg, &ids(2), 2).unwrap();
        let x = ctx(vec![1.0, 0.0]);
        p.update("arm0", &x, 1.0).unwrap();
        let sel = p.select_linucb(&x, &ids(2)).unwrap();
        let s0 = sel.scores.iter().find(|(id, _)| id == "arm0").unwrap().1;
        // A0 = [[2,0],[0,1]], theta0 = [0.5, 0], score = 0.5 + 0.1*sqrt(0.5)
        assert!((s0 - (0.5 + 0.1 * 0.5_f64.sqrt())).abs() < 1e-12);
        assert_eq!(sel.arm_id, "arm0");
    }

    #[test]
    fn singleton_feasible_set_forces_arm() {
        let mut p = Policy::init(PolicyConfig::default(), &ids(5), 3).unwrap();
        let sel = p
            .select_linucb(&ctx(vec![1.0, 0.0, 0.0]), &["arm3".to_string()])
            .unwrap();
        assert_eq!(sel.arm_id, "arm3");
    }

    #[test]
    fn empty_feasible_set_errors() {
        let mut p = Policy::init(PolicyConfig::default(), &ids(2), 2).unwrap();
        assert!(matches!(
            p.select_linucb(&ctx(vec![1.0, 0.0]), &[]),
            Err(Error::NoFeasibleArm)
        ));
    }

    #[test]
    fn epsilon_schedule() {
        let mut p = Policy::init(
            PolicyConfig {
                kind: PolicyKind::EpsGreedy,
                ..PolicyConfig::default()
            },
            &ids(4),
            1,
        )
        .unwrap();
        assert_eq!(p.epsilon(), 1.0); // t = 0
        p.select_eps_greedy(None, &ids(4)).unwrap();
        assert!((p.epsilon() - 0.98).abs() < 1e-12); // t = 1, eps0 * delta
        p.t = 10_000;
        assert_eq!(p.epsilon(), 0.01); // floor
    }

    #[test]
    fn eps_greedy_t0_is_uniform() {
        // at t=0, epsilon = 1.0, so selection is always exploratory
        let mut counts = HashMap::new();
        for seed in 0..200 {
            let mut p = Policy::init(
                PolicyConfig {
                    kind: PolicyKind::EpsGreedy,
                    seed,
                    ..PolicyConfig::default()
                },
                &ids(4),
                1,
            )
            .unwrap();
            let sel = p.select_eps_greedy(None, &ids(4)).unwrap();
            assert!(sel.exploration);
            *counts.entry(sel.arm_id).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 4);
    }

    #[test]
    fn seeded_reproducibility() {
        for kind in [PolicyKind::EpsGreedy, PolicyKind::Thompson] {
            let run = || {
                let mut p = Policy::init(
                    PolicyConfig {
                        kind,
                        seed: 42,
                        ..PolicyConfig::default()
                    },
                    &ids(6),
                    3,
                )
                .unwrap();
                let x = ctx(vec![1.0, 0.0, 1.0]);
                (0..50)
                    .map(|i| {
                        let sel = p.select(&x, &ids(6)).unwrap();
                        p.update(&sel.arm_id, &x, (i % 3) as f64 * 0.1).unwrap();
                        sel.arm_id
                    })
                    .collect::<Vec<_>>()
            };
            assert_eq!(run(), run());
        }
    }

    #[test]
    fn thompson_low_sigma_tracks_mean_argmax() {
        let mut p = Policy::init(
            PolicyConfig {
                kind: PolicyKind::Thompson,
                sigma: 1e-9,
                lambda_reg: 1.0,
                ..PolicyConfig::default()
            },
            &ids(3),
            2,
        )
        .unwrap();
        let x = ctx(vec![1.0, 0.0]);
        for _ in 0..20 {
            p.update("arm1", &x, 1.0).unwrap();
            p.update("arm0", &x, 0.1).unwrap();
            p.update("arm2", &x, 0.1).unwrap();
        }
        let sel = p.select_thompson(&x, &ids(3)).unwrap();
        assert_eq!(sel.arm_id, "arm1");
    }

    #[test]
    fn thompson_dominant_arm_rarely_loses() {
        // one arm with theta^T x ~= 1, others ~= 0, sigma = 0.01, d = 12
        let d = 12;
        let mut p = Policy::init(
            PolicyConfig {
                kind: PolicyKind::Thompson,
                sigma: 0.01,
                lambda_reg: 1.0,
                seed: 9,
                ..PolicyConfig::default()
            },
            &ids(4),
            d,
        )
        .unwrap();
        let mut xv = vec![0.0; d];
        xv[0] = 1.0;
        xv[d - 1] = 1.0;
        let x = ctx(xv);
        for _ in 0..200 {
            p.update("arm2", &x, 1.0).unwrap();
            for other in ["arm0", "arm1", "arm3"] {
                p.update(other, &x, 0.0).unwrap();
            }
        }
        let mut wins = 0;
        for _ in 0..1000 {
            if p.select_thompson(&x, &ids(4)).unwrap().arm_id == "arm2" {
                wins += 1;
            }
        }
        assert!(wins >= 999, "dominant arm won only {wins}/1000");
    }

    #[test]
    fn update_unknown_arm_rejected() {
        let mut p = Policy::init(PolicyConfig::default(), &ids(2), 2).unwrap();
        assert!(p.update("ghost", &ctx(vec![1.0, 0.0]), 0.5).is_err());
    }

    #[test]
    fn add_arm_gets_maximal_bonus() {
        let mut p = Policy::init(PolicyConfig::default(), &ids(15), 4).unwrap();
        let x = ctx(vec![1.0, 0.0, 0.0, 1.0]);
        for id in ids(15) {
            for _ in 0..5 {
                p.update(&id, &x, 0.2).unwrap();
            }
        }
        p.add_arm("fresh").unwrap();
        assert_eq!(p.arms().len(), 16);
        let xs = DVector::from_vec(x.values.clone());
        let fresh_bonus = p.arm("fresh").unwrap().bonus(&xs);
        for id in ids(15) {
            assert!(fresh_bonus > p.arm(&id).unwrap().bonus(&xs));
        }
    }

    #[test]
    fn new_arm_explored_within_pool_size_selections() {
        let mut p = Policy::init(PolicyConfig::default(), &ids(8), 3).unwrap();
        let x = ctx(vec![1.0, 0.0, 1.0]);
        for id in ids(8) {
            for _ in 0..10 {
                p.update(&id, &x, 0.3).unwrap();
            }
        }
        p.add_arm("fresh").unwrap();
        let mut all: Vec<String> = ids(8);
        all.push("fresh".into());
        let mut seen = false;
        for _ in 0..all.len() {
            let sel = p.select_linucb(&x, &all).unwrap();
            if sel.arm_id == "fresh" {
                seen = true;
                break;
            }
            p.update(&sel.arm_id, &x, 0.3).unwrap();
        }
        assert!(seen, "fresh arm not selected within |M| steps");
    }

    #[test]
    fn remove_then_readd_resets_statistics() {
        let mut p = Policy::init(PolicyConfig::default(), &ids(2), 2).unwrap();
        let x = ctx(vec![1.0, 0.0]);
        p.update("arm0", &x, 1.0).unwrap();
        p.remove_arm("arm0").unwrap();
        assert_eq!(p.archived().len(), 1);
        assert!(p.update("arm0", &x, 1.0).is_err());
        p.add_arm("arm0").unwrap();
        let arm = p.arm("arm0").unwrap();
        assert_eq!(arm.pulls, 0);
        assert_eq!(arm.a[(0, 0)], p.config.lambda_reg);
    }

    #[test]
    fn remove_sole_arm_leaves_nothing_feasible() {
        let mut p = Policy::init(PolicyConfig::default(), &ids(1), 2).unwrap();
        p.remove_arm("arm0").unwrap();
        assert!(matches!(
            p.select_linucb(&ctx(vec![1.0, 0.0]), &[]),
            Err(Error::NoFeasibleArm)
        ));
    }

    #[test]
    fn remove_unknown_arm_rejected() {
        let mut p = Policy::init(PolicyConfig::default(), &ids(2), 2).unwrap();
        assert!(p.remove_arm("ghost").is_err());
    }

    #[test]
    fn ucb_score_monotone_in_alpha() {
        let x = ctx(vec![1.0, 0.5, 0.0]);
        let mut prev: Option<Vec<f64>> = None;
        for alpha in [0.0, 0.05, 0.1, 0.5, 1.0] {
            let mut p = Policy::init(
                PolicyConfig {
                    alpha_ucb: alpha,
                    ..PolicyConfig::default()
                },
                &ids(3),
                3,
            )
            .unwrap();
            p.update("arm1", &x, 0.7).unwrap();
            let sel = p.select_linucb(&x, &ids(3)).unwrap();
            let scores: Vec<f64> = sel.scores.iter().map(|(_, s)| *s).collect();
            if let Some(prev) = &prev {
                for (a, b) in prev.iter().zip(&scores) {
                    assert!(b >= a);
                }
            }
            prev = Some(scores);
        }
    }
}

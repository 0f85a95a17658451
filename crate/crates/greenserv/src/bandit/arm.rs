//! Per-arm ridge statistics for the linear bandit policies.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// How many rank-1 updates may accumulate on the incrementally maintained
/// inverse before it is recomputed from scratch.
pub const INVERSE_REFRESH_INTERVAL: u32 = 1000;

/// One arm's LinUCB state: A = lambda_reg*I + sum x x^T, b = sum r x.
#[derive(Debug, Clone)]
pub struct ArmState {
    pub id: String,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    a_inv: DMatrix<f64>,
    pub pulls: u64,
    /// Total scalar reward, for the context-free running mean.
    pub reward_sum: f64,
    since_refresh: u32,
}

impl ArmState {
    pub fn new(id: impl Into<String>, d: usize, lambda_reg: f64) -> Self {
        let a = DMatrix::identity(d, d) * lambda_reg;
        let a_inv = DMatrix::identity(d, d) / lambda_reg;
        ArmState {
            id: id.into(),
            a,
            b: DVector::zeros(d),
            a_inv,
            pulls: 0,
            reward_sum: 0.0,
            since_refresh: 0,
        }
    }

    /// Rebuilds the cached inverse from `a` and `b` (used when loading
    /// checkpoints or replaying logs).
    pub fn from_stats(
        id: impl Into<String>,
        a: DMatrix<f64>,
        b: DVector<f64>,
        pulls: u64,
        reward_sum: f64,
    ) -> Result<Self> {
        let a_inv = a
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::invalid("arm matrix A is singular"))?;
        Ok(ArmState {
            id: id.into(),
            a,
            b,
            a_inv,
            pulls,
            reward_sum,
            since_refresh: 0,
        })
    }

    pub fn d(&self) -> usize {
        self.b.len()
    }

    pub fn a_inv(&self) -> &DMatrix<f64> {
        &self.a_inv
    }

    pub fn theta_hat(&self) -> DVector<f64> {
        &self.a_inv * &self.b
    }

    /// Predicted mean reward for context x.
    pub fn mean_estimate(&self, x: &DVector<f64>) -> f64 {
        self.theta_hat().dot(x)
    }

    /// Uncertainty bonus sqrt(x^T A^-1 x).
    pub fn bonus(&self, x: &DVector<f64>) -> f64 {
        (x.dot(&(&self.a_inv * x))).max(0.0).sqrt()
    }

    /// Running mean of observed rewards (context-free estimate).
    pub fn mean_reward(&self) -> f64 {
        if self.pulls == 0 {
            0.0
        } else {
            self.reward_sum / self.pulls as f64
        }
    }

    /// A += x x^T, b += r x. The cached inverse follows via Sherman-Morrison
    /// and is recomputed directly every `INVERSE_REFRESH_INTERVAL` updates to
    /// bound numerical drift.
    pub fn update(&mut self, x: &DVector<f64>, r: f64) -> Result<()> {
        if x.len() != self.d() {
            return Err(Error::invalid(format!(
                "context dimension {} does not match arm dimension {}",
                x.len(),
                self.d()
            )));
        }
        if !r.is_finite() {
            return Err(Error::invalid("reward must be finite"));
        }
        self.a += x * x.transpose();
        self.b += x * r;
        self.pulls += 1;
        self.reward_sum += r;
        self.since_refresh += 1;
        if self.since_refresh >= INVERSE_REFRESH_INTERVAL {
            self.refresh_inverse()?;
        } else {
            // Sherman-Morrison: (A + x x^T)^-1 = A^-1 - A^-1 x x^T A^-1 / (1 + x^T A^-1 x)
            let ax = &self.a_inv * x;
            let denom = 1.0 + x.dot(&ax);
            self.a_inv -= (&ax * ax.transpose()) / denom;
        }
        Ok(())
    }

    pub fn refresh_inverse(&mut self) -> Result<()> {
        self.a_inv = self
            .a
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::invalid("arm matrix A became singular"))?;
        self.since_refresh = 0;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_update_hand_values() {
        let mut arm = ArmState::new("m", 2, 1.0);
        let x = DVector::from_vec(vec![1.0, 0.0]);
        arm.update(&x, 1.0).unwrap();
        assert_eq!(arm.a[(0, 0)], 2.0);
        assert_eq!(arm.a[(1, 1)], 1.0);
        assert_eq!(arm.a[(0, 1)], 0.0);
        assert_eq!(arm.b[0], 1.0);
        let theta = arm.theta_hat();
        assert!((theta[0] - 0.5).abs() < 1e-12);
        assert!((theta[1]).abs() < 1e-12);
    }

    #[test]
    fn zero_context_is_a_noop_on_stats() {
        let mut arm = ArmState::new("m", 2, 1.0);
        let x = DVector::zeros(2);
        arm.update(&x, 0.0).unwrap();
        assert_eq!(arm.a, DMatrix::identity(2, 2));
        assert_eq!(arm.b, DVector::zeros(2));
        assert_eq!(arm.pulls, 1);
    }

    #[test]
    fn nan_reward_rejected() {
        let mut arm = ArmState::new("m", 2, 1.0);
        let x = DVector::from_vec(vec![1.0, 0.0]);
        assert!(arm.update(&x, f64::NAN).is_err());
    }

    #[test]
    fn normal_equations_residual_stays_small() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut arm = ArmState::new("m", 4, 0.05);
        for _ in 0..500 {
            let x = DVector::from_iterator(4, (0..4).map(|_| rng.gen_range(-1.0..1.0)));
            arm.update(&x, rng.gen_range(-1.0..1.0)).unwrap();
        }
        let theta = arm.theta_hat();
        let residual = (&arm.a * &theta - &arm.b).norm();
        assert!(residual <= 1e-8 * (1.0 + arm.b.norm()));
    }

    #[test]
    fn sherman_morrison_matches_direct_inverse() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let mut arm = ArmState::new("m", 6, 0.05);
        for _ in 0..10_000 {
            let x = DVector::from_iterator(6, (0..6).map(|_| rng.gen_range(-1.0..1.0)));
            arm.update(&x, rng.gen_range(-1.0..1.0)).unwrap();
        }
        let direct = arm.a.clone().try_inverse().unwrap();
        let diff = (arm.a_inv() - &direct).norm() / direct.norm();
        assert!(diff <= 1e-8, "relative Frobenius error {diff}");
    }

    #[test]
    fn smallest_eigenvalue_never_below_lambda_reg() {
        use rand::{Rng, SeedableRng};
        let lambda = 0.05;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut arm = ArmState::new("m", 5, lambda);
        for _ in 0..200 {
            let x = DVector::from_iterator(5, (0..5).map(|_| rng.gen_range(-1.0..1.0)));
            arm.update(&x, rng.gen_range(-1.0..1.0)).unwrap();
        }
        let eigen = arm.a.clone().symmetric_eigen();
        let min = eigen.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min >= lambda - 1e-9);
    }
}

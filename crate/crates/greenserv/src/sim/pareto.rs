//! Accuracy/energy Pareto dominance.

use serde::{Deserialize, Serialize};

/// One candidate in accuracy-energy space (higher accuracy better, lower
/// energy better).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub id: String,
    pub accuracy: f64,
    pub energy: f64,
}

/// `a` dominates `b` when it is at least as good on both axes and strictly
/// better on one.
pub fn dominates(a: &ParetoPoint, b: &ParetoPoint) -> bool {
    a.accuracy >= b.accuracy
        && a.energy <= b.energy
        && (a.accuracy > b.accuracy || a.energy < b.energy)
}

/// Non-dominated subset, sorted by ascending energy. Brute-force O(n^2),
/// which is fine for pool-sized inputs.
pub fn pareto_front(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    let mut front: Vec<ParetoPoint> = points
        .iter()
        .filter(|p| !points.iter().any(|q| dominates(q, p)))
        .cloned()
        .collect();
    front.sort_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap());
    front
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(id: &str, accuracy: f64, energy: f64) -> ParetoPoint {
        ParetoPoint {
            id: id.into(),
            accuracy,
            energy,
        }
    }

    #[test]
    fn dominated_point_excluded() {
        let pts = vec![pt("good", 0.9, 0.3), pt("bad", 0.8, 0.5), pt("cheap", 0.5, 0.1)];
        let front = pareto_front(&pts);
        let ids: Vec<&str> = front.iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, vec!["cheap", "good"]);
    }

    #[test]
    fn front_is_monotone() {
        // along ascending energy, accuracy must strictly increase
        let pts: Vec<ParetoPoint> = (0..10)
            .map(|i| pt(&format!("m{i}"), 0.3 + 0.05 * i as f64, 0.1 + 0.08 * ((i * 7) % 10) as f64))
            .collect();
        let front = pareto_front(&pts);
        for w in front.windows(2) {
            assert!(w[1].accuracy > w[0].accuracy);
            assert!(w[1].energy > w[0].energy);
        }
    }

    #[test]
    fn ties_on_both_axes_survive() {
        let pts = vec![pt("a", 0.5, 0.5), pt("b", 0.5, 0.5)];
        assert_eq!(pareto_front(&pts).len(), 2);
    }

    #[test]
    fn singleton_is_its_own_front() {
        let pts = vec![pt("solo", 0.1, 0.9)];
        assert_eq!(pareto_front(&pts), pts);
    }
}

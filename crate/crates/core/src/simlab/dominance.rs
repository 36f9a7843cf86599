//! Conditional stochastic dominance of a null p-value law over the uniform.

/// Outcome of a grid check; `violation` is the first failing (s, t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceCheck {
    pub holds: bool,
    pub violation: Option<(f64, f64)>,
}

const TOLERANCE: f64 = 1e-12;

/// Checks (1 − F₀(t))(1 − s) ≥ (1 − t)(1 − F₀(s)) for all grid pairs
/// q ≤ s ≤ t ≤ 1, scanning s then t in increasing order.
///
/// # Panics
/// If `grid_size < 2` or `q` lies outside [0, 1].
pub fn check_conditional_dominance(null_cdf: impl Fn(f64) -> f64, q: f64, grid_size: usize) -> DominanceCheck {
    assert!(grid_size >= 2, "grid needs at least two points");
    assert!((0.0..=1.0).contains(&q), "q must lie in [0, 1]");
    let grid: Vec<f64> = (0..grid_size)
        .map(|i| if i + 1 == grid_size { 1.0 } else { q + (1.0 - q) * i as f64 / (grid_size - 1) as f64 })
        .collect();
    let survival: Vec<f64> = grid.iter().map(|&x| 1.0 - null_cdf(x)).collect();
    for (i, &s) in grid.iter().enumerate() {
        for (j, &t) in grid.iter().enumerate().skip(i) {
            if survival[j] * (1.0 - s) < (1.0 - t) * survival[i] - TOLERANCE {
                return DominanceCheck { holds: false, violation: Some((s, t)) };
            }
        }
    }
    DominanceCheck { holds: true, violation: None }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_holds() {
        let c = check_conditional_dominance(|t| t, 0.2, 200);
        assert!(c.holds);
        assert_eq!(c.violation, None);
    }

    #[test]
    fn beta31_holds() {
        assert!(check_conditional_dominance(|t| t.powi(3), 0.2, 400).holds);
        assert!(check_conditional_dominance(|t| t.powi(3), 0.0, 400).holds);
    }

    #[test]
    fn beta13_violated() {
        let f = |t: f64| 1.0 - (1.0 - t).powi(3);
        // s = 0.2, t = 0.9: (0.001)(0.8) < (0.1)(0.512)
        assert!((1.0 - f(0.9)) * 0.8 < 0.1 * (1.0 - f(0.2)));
        let c = check_conditional_dominance(f, 0.2, 81);
        assert!(!c.holds);
        let (s, t) = c.violation.unwrap();
        assert!(s < t);
        assert!((1.0 - f(t)) * (1.0 - s) < (1.0 - t) * (1.0 - f(s)));
    }

    #[test]
    #[should_panic]
    fn tiny_grid() {
        check_conditional_dominance(|t| t, 0.2, 1);
    }
}

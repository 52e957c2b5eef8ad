//! Adaptive convergence threshold for the coordinate relaxer.
//!
//! After each training epoch the threshold tightens to a fraction of
//! the mean phase gap: `xi_{t+1} = min(xi_t, gamma * mu_t)`, so the
//! relaxations converge finer as the two phases draw together.

/// Floor preventing a zero threshold deadlock when the phase gap
/// degenerates to zero.
pub const XI_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdState {
    pub xi: f64,
    pub gamma: f64,
}

impl ThresholdState {
    pub fn new(xi0: f64, gamma: f64) -> Self {
        ThresholdState { xi: xi0, gamma }
    }
}

impl Default for ThresholdState {
    fn default() -> Self {
        ThresholdState::new(1e-3, 0.01)
    }
}

/// `mu` is the mean L1 gap between the two phase equilibria over the
/// epoch. The threshold never increases.
pub fn update_threshold(ts: &ThresholdState, mu: f64) -> ThresholdState {
    debug_assert!(mu >= 0.0);
    ThresholdState {
        xi: ts.xi.min(ts.gamma * mu).max(XI_FLOOR),
        gamma: ts.gamma,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn huge_gap_leaves_threshold_unchanged() {
        let ts = ThresholdState::default();
        assert_eq!(update_threshold(&ts, 1e6).xi, 1e-3);
    }

    #[test]
    fn zero_gap_clamps_to_floor() {
        let ts = ThresholdState::default();
        assert_eq!(update_threshold(&ts, 0.0).xi, XI_FLOOR);
    }

    #[test]
    fn shrinks_by_gamma_times_gap() {
        let ts = ThresholdState::new(1e-3, 0.01);
        let next = update_threshold(&ts, 0.05);
        assert!((next.xi - 5e-4).abs() < 1e-18);
    }

    #[test]
    fn never_increases() {
        let mut ts = ThresholdState::new(1e-3, 0.01);
        ts = update_threshold(&ts, 0.01); // 1e-4
        let again = update_threshold(&ts, 10.0);
        assert_eq!(again.xi, ts.xi);
    }
}

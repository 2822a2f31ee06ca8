//! First-passage detection on discretely sampled gap trajectories.
//!
//! Crossings between grid points are resolved by linear interpolation; the
//! resulting time is what the stopping-time statistics use.

/// Interpolated time at which one gap first reaches `b_break` during a
/// step, if it does. A gap already at or above the threshold at `t_prev`
/// reports `t_prev` (the caller monitors every step, so this only guards
/// the first sample).
#[inline]
pub(crate) fn crossing_time(
    gap_prev: f64,
    gap_next: f64,
    t_prev: f64,
    t_next: f64,
    b_break: f64,
) -> Option<f64> {
    if gap_prev >= b_break {
        return Some(t_prev);
    }
    if gap_next >= b_break {
        let frac = (b_break - gap_prev) / (gap_next - gap_prev);
        return Some(t_prev + frac * (t_next - t_prev));
    }
    None
}

/// Earliest interpolated crossing among all links during one step.
///
/// Returns `(tau, link)` with `link` 1-based; simultaneous interpolated
/// times resolve to the smallest link index.
pub fn first_break(
    gap_prev: &[f64],
    gap_next: &[f64],
    t_prev: f64,
    t_next: f64,
    b_break: f64,
) -> Option<(f64, usize)> {
    debug_assert_eq!(gap_prev.len(), gap_next.len());
    debug_assert!(t_prev < t_next);
    let mut best: Option<(f64, usize)> = None;
    for (idx, (&gp, &gn)) in gap_prev.iter().zip(gap_next).enumerate() {
        if let Some(tau) = crossing_time(gp, gn, t_prev, t_next, b_break) {
            match best {
                Some((t, _)) if tau >= t => {}
                _ => best = Some((tau, idx + 1)),
            }
        }
    }
    best
}

/// Tracks the first hitting time of every link separately, so the marginal
/// per-link laws can be read off the same paths as the minimum.
#[derive(Debug, Clone)]
pub struct LinkTracker {
    b_break: f64,
    hits: Vec<Option<f64>>,
    remaining: usize,
}

impl LinkTracker {
    pub fn new(d: usize, b_break: f64) -> Self {
        LinkTracker { b_break, hits: vec![None; d], remaining: d }
    }

    /// Examine one step for links that have not hit yet.
    pub fn update(&mut self, gap_prev: &[f64], gap_next: &[f64], t_prev: f64, t_next: f64) {
        for (idx, slot) in self.hits.iter_mut().enumerate() {
            if slot.is_none() {
                if let Some(tau) =
                    crossing_time(gap_prev[idx], gap_next[idx], t_prev, t_next, self.b_break)
                {
                    *slot = Some(tau);
                    self.remaining -= 1;
                }
            }
        }
    }

    /// True once every link has hit the threshold.
    pub fn all_hit(&self) -> bool {
        self.remaining == 0
    }

    /// Per-link first hitting times (`None` where censored).
    pub fn hits(&self) -> &[Option<f64>] {
        &self.hits
    }

    pub fn into_hits(self) -> Vec<Option<f64>> {
        self.hits
    }

    /// Earliest hit and its link, ties to the smallest link index.
    pub fn earliest(&self) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for (idx, hit) in self.hits.iter().enumerate() {
            if let Some(tau) = hit {
                match best {
                    Some((t, _)) if *tau >= t => {}
                    _ => best = Some((*tau, idx + 1)),
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn interpolated_crossing() {
        // (2 - 1.9) / (2.05 - 1.9) = 2/3 of the way through [10, 11].
        let hit = first_break(&[1.9], &[2.05], 10.0, 11.0, 2.0).unwrap();
        assert_abs_diff_eq!(hit.0, 10.0 + 2.0 / 3.0, epsilon = 1e-12);
        assert_eq!(hit.1, 1);
    }

    #[test]
    fn no_crossing_returns_none() {
        assert!(first_break(&[1.2, 1.4], &[1.5, 1.9], 0.0, 1.0, 2.0).is_none());
    }

    #[test]
    fn later_link_can_cross_first() {
        // Link 1 crosses at fraction 0.5, link 2 at fraction 0.25.
        let gaps_prev = [1.99, 1.9];
        let gaps_next = [2.01, 2.3];
        let hit = first_break(&gaps_prev, &gaps_next, 0.0, 1.0, 2.0).unwrap();
        assert_eq!(hit.1, 2);
        assert_abs_diff_eq!(hit.0, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn exact_tie_resolves_to_smaller_link() {
        let hit = first_break(&[1.9, 1.9], &[2.1, 2.1], 0.0, 1.0, 2.0).unwrap();
        assert_eq!(hit.1, 1);
        assert_abs_diff_eq!(hit.0, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn touching_threshold_counts() {
        let hit = first_break(&[1.5], &[2.0], 0.0, 1.0, 2.0).unwrap();
        assert_abs_diff_eq!(hit.0, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tracker_records_each_link_once() {
        let mut tr = LinkTracker::new(2, 2.0);
        tr.update(&[1.8, 1.5], &[2.2, 1.6], 0.0, 1.0);
        let first_hit = tr.hits()[0].unwrap();
        assert_abs_diff_eq!(first_hit, 0.5, epsilon = 1e-12);
        assert_eq!(tr.hits()[1], None);
        assert!(!tr.all_hit());
        // Link 1 dipping below and re-crossing later must not overwrite.
        tr.update(&[1.9, 1.9], &[2.5, 2.1], 1.0, 2.0);
        assert_eq!(tr.hits()[0], Some(first_hit));
        assert_abs_diff_eq!(tr.hits()[1].unwrap(), 1.5, epsilon = 1e-12);
        assert!(tr.all_hit());
        let (tau, link) = tr.earliest().unwrap();
        assert_eq!(link, 1);
        assert_abs_diff_eq!(tau, 0.5, epsilon = 1e-12);
    }
}

use serde::{Deserialize, Serialize};

/// Geometric schedule of index recomputations.
///
/// The first run happens as soon as every state-action pair has been
/// visited; the gap to the next run starts at `first_gap` and is multiplied
/// by `factor` (rounded up) after each run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub factor: f64,
    pub first_gap: u64,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            factor: 2.0,
            first_gap: 1,
        }
    }
}

impl Schedule {
    pub fn new(factor: f64, first_gap: u64) -> Option<Self> {
        (factor > 1.0 && factor.is_finite() && first_gap >= 1).then_some(Schedule { factor, first_gap })
    }

    pub fn start(&self) -> ScheduleState {
        ScheduleState {
            schedule: *self,
            next: None,
            gap: self.first_gap,
        }
    }

    /// Steps at which runs fire when coverage is reached at `covered_at`,
    /// up to and including `horizon`.
    pub fn run_times(&self, covered_at: u64, horizon: u64) -> Vec<u64> {
        let mut state = self.start();
        (covered_at..=horizon).filter(|&t| state.fires(t, true)).collect()
    }
}

/// Progress through a [`Schedule`].
#[derive(Debug, Clone)]
pub struct ScheduleState {
    schedule: Schedule,
    next: Option<u64>,
    gap: u64,
}

impl ScheduleState {
    /// Whether a run is due at step `t`. Must be called with increasing `t`.
    pub fn fires(&mut self, t: u64, covered: bool) -> bool {
        if !covered {
            return false;
        }
        match self.next {
            Some(n) if t < n => false,
            _ => {
                self.next = Some(t + self.gap);
                self.gap = (self.gap as f64 * self.schedule.factor).ceil() as u64;
                true
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_gaps() {
        let times = Schedule::default().run_times(10, 100);
        assert_eq!(times, vec![10, 11, 13, 17, 25, 41, 73]);
    }

    #[test]
    fn rounded_up_gaps() {
        let s = Schedule::new(1.25, 1).unwrap();
        let times = s.run_times(0, 40);
        let gaps: Vec<u64> = times.windows(2).map(|w| w[1] - w[0]).collect();
        assert_eq!(gaps, vec![1, 2, 3, 4, 5, 7, 9]);
    }

    #[test]
    fn logarithmic_count() {
        for t in [10u64, 1000, 100_000] {
            let n = Schedule::default().run_times(1, t).len() as f64;
            assert!(n <= (t as f64).log2() + 1.0);
        }
        assert!(Schedule::new(1.0, 1).is_none());
        assert!(Schedule::new(2.0, 0).is_none());
    }
}

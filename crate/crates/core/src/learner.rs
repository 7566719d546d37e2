//! Step-driven learners.
//!
//! Every algorithm in this crate is a state machine fed one arrival at a time.
//! This lets wrappers route arrivals to independent sub-learners (one per
//! context bucket) without threads or coroutines.

use crate::env::EnvHandle;
use crate::error::Result;

pub trait Learner {
    /// Chooses the arm to play on the arriving context.
    fn act(&mut self, context: usize) -> usize;

    /// Feeds back the reward of the arm returned by the preceding `act`.
    fn observe(&mut self, context: usize, arm: usize, reward: f64);

    /// `true` once the learner has nothing left to do (PAC learners).
    fn is_done(&self) -> bool {
        false
    }
}

/// Runs the interaction loop until the learner is done or `max_steps` pulls
/// have been made in this call. Returns the number of pulls.
pub fn drive<L: Learner + ?Sized>(
    env: &mut EnvHandle,
    learner: &mut L,
    max_steps: Option<u64>,
) -> Result<u64> {
    let mut taken = 0u64;
    while !learner.is_done() && max_steps.is_none_or(|cap| taken < cap) {
        let i = env.sample_context();
        let j = learner.act(i);
        let y = env.pull(i, j)?;
        learner.observe(i, j, y);
        taken += 1;
    }
    Ok(taken)
}

/// `ceil(x)` as a step count, saturating at `u64::MAX` and treating NaN as 0.
pub(crate) fn steps_from(x: f64) -> u64 {
    if x.is_nan() || x <= 0.0 {
        0
    } else if x >= u64::MAX as f64 {
        u64::MAX
    } else {
        x.ceil() as u64
    }
}

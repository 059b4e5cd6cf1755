use rand::Rng;

use super::params::CounterMode;
use crate::{Error, Result};

/// Back-off counters in `0..cws` for `n` BSs.
///
/// Unique mode draws a partial Fisher-Yates shuffle of `0..cws` truncated to
/// `n` entries: a uniformly random size-`n` subset in random order.
pub fn draw_counters<R: Rng + ?Sized>(n: usize, cws: usize, mode: CounterMode, rng: &mut R) -> Result<Vec<usize>> {
    if cws == 0 {
        return Err(Error::InputDomain("contention window must be at least 1".into()));
    }
    match mode {
        CounterMode::Unique => {
            if cws < n {
                return Err(Error::InputDomain(format!(
                    "unique counters need cws >= N ({cws} < {n})"
                )));
            }
            let mut pool: Vec<usize> = (0..cws).collect();
            for i in 0..n {
                let j = rng.random_range(i..cws);
                pool.swap(i, j);
            }
            pool.truncate(n);
            Ok(pool)
        }
        CounterMode::Iid => Ok((0..n).map(|_| rng.random_range(0..cws)).collect()),
    }
}

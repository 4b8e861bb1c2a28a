//! Ensemble dispatch over a rayon pool.
//!
//! Member `k` draws its noise from `member_seed(seed, k)`, so results depend
//! only on `(seed, k)` and never on scheduling. Results come back in member
//! order; the first failing member (lowest index) is reported.

use rayon::prelude::*;
use rayon::ThreadPool;

use fracspde_core::rng::member_seed;

use crate::error::{Result, RunError};

pub const THREADS_VAR: &str = "FRACSPDE_THREADS";

/// Pool capped by `FRACSPDE_THREADS` when set; rayon's default otherwise.
pub fn thread_pool() -> Result<ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| RunError::Config(format!("{THREADS_VAR} must be a positive integer, got `{v}`")))?;
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| RunError::Config(format!("cannot start worker pool: {e}")))
}

pub struct Ensemble {
    pool: ThreadPool,
    seed: u64,
    size: usize,
}

impl Ensemble {
    pub fn new(seed: u64, size: usize) -> Result<Self> {
        Ok(Self {
            pool: thread_pool()?,
            seed,
            size,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Runs `f(k, member_seed(seed, k))` for every member.
    pub fn map<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize, u64) -> Result<T> + Sync,
    {
        let seed = self.seed;
        let out: Vec<Result<T>> = self.pool.install(|| {
            (0..self.size)
                .into_par_iter()
                .map(|k| f(k, member_seed(seed, k as u64)).map_err(|e| e.in_member(k)))
                .collect()
        });
        out.into_iter().collect()
    }

    pub fn install<R: Send>(&self, op: impl FnOnce() -> R + Send) -> R {
        self.pool.install(op)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fracspde_core::Error;

    #[test]
    fn order_and_seeds_are_fixed() {
        let e = Ensemble::new(5, 64).unwrap();
        let a = e.map(|k, s| Ok((k, s))).unwrap();
        assert_eq!(a.len(), 64);
        for (k, &(i, s)) in a.iter().enumerate() {
            assert_eq!(i, k);
            assert_eq!(s, member_seed(5, k as u64));
        }
    }

    #[test]
    fn lowest_failing_member_wins() {
        let e = Ensemble::new(0, 32).unwrap();
        let r = e.map(|k, _| {
            if k % 10 == 7 {
                Err(RunError::from(Error::Degenerate(format!("member {k}"))))
            } else {
                Ok(k)
            }
        });
        match r {
            Err(RunError::Numerical { member, source }) => {
                assert_eq!(member, Some(7));
                assert_eq!(source, Error::Degenerate("member 7".into()));
            }
            other => panic!("{other:?}"),
        }
    }
}

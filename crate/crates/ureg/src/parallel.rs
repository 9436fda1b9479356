use rayon::prelude::*;
use ureg_core::Executor;

/// Environment variable capping the number of worker threads.
pub const THREADS_VAR: &str = "UREG_THREADS";

/// [`Executor`] backed by a dedicated Rayon pool.
pub struct Rayon {
    pool: rayon::ThreadPool,
}

impl Rayon {
    /// `threads = 0` lets Rayon pick the number of logical CPUs.
    pub fn new(threads: usize) -> Result<Rayon, rayon::ThreadPoolBuildError> {
        Ok(Rayon { pool: rayon::ThreadPoolBuilder::new().num_threads(threads).build()? })
    }

    /// Pool sized by `UREG_THREADS` when it is set to a positive integer.
    pub fn from_env() -> anyhow::Result<Rayon> {
        let threads = match std::env::var(THREADS_VAR) {
            Ok(s) => s
                .trim()
                .parse::<usize>()
                .map_err(|_| anyhow::anyhow!("{THREADS_VAR} must be a non-negative integer, got {s:?}"))?,
            Err(_) => 0,
        };
        Ok(Rayon::new(threads)?)
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Rayon {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let r = Rayon::new(3).unwrap();
        assert_eq!(r.threads(), 3);
        let v = r.map(1000, |i| i * i);
        assert!(v.iter().enumerate().all(|(i, &x)| x == i * i));
    }
}

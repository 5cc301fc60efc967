//! Data-parallel execution of elementwise kernels.
//!
//! A kernel step writes every output element from read-only inputs, so the
//! elements can be produced in any order. [`Executor`] either runs them on the
//! calling thread or on a dedicated rayon pool; both paths evaluate the same
//! closure per element and therefore produce identical bits.

use rayon::prelude::*;

/// Below this many elements a parallel fill is not worth the fork/join.
const MIN_PARALLEL_LEN: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parallelism {
    Sequential,
    /// Worker threads; `0` means one per available core.
    Threads(usize),
}

impl Default for Parallelism {
    fn default() -> Self {
        Parallelism::Sequential
    }
}

pub struct Executor {
    pool: Option<rayon::ThreadPool>,
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor")
            .field("threads", &self.threads())
            .finish()
    }
}

impl Executor {
    pub fn sequential() -> Self {
        Executor { pool: None }
    }

    pub fn new(parallelism: Parallelism) -> Self {
        match parallelism {
            Parallelism::Sequential => Self::sequential(),
            Parallelism::Threads(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .expect("failed to build worker pool");
                Executor { pool: Some(pool) }
            }
        }
    }

    pub fn threads(&self) -> usize {
        self.pool.as_ref().map_or(1, |p| p.current_num_threads())
    }

    /// `out[i] = f(i)` for every index.
    pub fn fill<F>(&self, out: &mut [f64], f: F)
    where
        F: Fn(usize) -> f64 + Send + Sync,
    {
        match &self.pool {
            Some(pool) if out.len() >= MIN_PARALLEL_LEN => pool.install(|| {
                out.par_iter_mut()
                    .with_min_len(MIN_PARALLEL_LEN / 4)
                    .enumerate()
                    .for_each(|(i, o)| *o = f(i))
            }),
            _ => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = f(i);
                }
            }
        }
    }

    /// Fallible variant of [`fill`](Self::fill); on failure the error with the
    /// lowest index is returned.
    pub fn try_fill<F, E>(&self, out: &mut [f64], f: F) -> Result<(), E>
    where
        F: Fn(usize) -> Result<f64, E> + Send + Sync,
        E: Send,
    {
        match &self.pool {
            Some(pool) if out.len() >= MIN_PARALLEL_LEN => pool.install(|| {
                let first_err = out
                    .par_iter_mut()
                    .with_min_len(MIN_PARALLEL_LEN / 4)
                    .enumerate()
                    .filter_map(|(i, o)| match f(i) {
                        Ok(v) => {
                            *o = v;
                            None
                        }
                        Err(e) => Some((i, e)),
                    })
                    .min_by_key(|(i, _)| *i);
                match first_err {
                    Some((_, e)) => Err(e),
                    None => Ok(()),
                }
            }),
            _ => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = f(i)?;
                }
                Ok(())
            }
        }
    }
}

impl Default for Executor {
    fn default() -> Self {
        Self::sequential()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_threaded_fill_agree() {
        let n = 10_000;
        let f = |i: usize| ((i as f64) * 0.37).sin() / (1.0 + i as f64);
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        Executor::sequential().fill(&mut a, f);
        Executor::new(Parallelism::Threads(3)).fill(&mut b, f);
        assert_eq!(a, b);
    }

    #[test]
    fn try_fill_reports_lowest_failing_index() {
        let mut out = vec![0.0; 5000];
        let exec = Executor::new(Parallelism::Threads(2));
        let err = exec
            .try_fill(&mut out, |i| if i % 1000 == 999 { Err(i) } else { Ok(1.0) })
            .unwrap_err();
        assert_eq!(err, 999);
    }
}

//! Data-parallel helpers. Without the `parallel` feature every entry point
//! degrades to the sequential loop, so results never depend on scheduling.

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    pub fn effective(self) -> Exec {
        if cfg!(feature = "parallel") {
            self
        } else {
            Exec::Sequential
        }
    }
}

/// Applies `f` to every item, preserving order.
pub fn map<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec.effective() {
        Exec::Sequential => items.iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        #[cfg(not(feature = "parallel"))]
        Exec::Parallel => unreachable!(),
    }
}

/// Calls `f(row_index, row)` on every `width`-sized row of `data`.
pub fn for_each_row<F>(exec: Exec, data: &mut [u64], width: usize, f: F)
where
    F: Fn(usize, &mut [u64]) + Sync + Send,
{
    if width == 0 {
        return;
    }
    match exec.effective() {
        Exec::Sequential => data.chunks_mut(width).enumerate().for_each(|(i, r)| f(i, r)),
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            // Small matrices are not worth the fork.
            if data.len() < 1 << 14 {
                data.chunks_mut(width).enumerate().for_each(|(i, r)| f(i, r));
            } else {
                data.par_chunks_mut(width).enumerate().for_each(|(i, r)| f(i, r));
            }
        }
        #[cfg(not(feature = "parallel"))]
        Exec::Parallel => unreachable!(),
    }
}

/// Caps the global pool at `PGF_THREADS` when set. Returns the cap applied.
pub fn init_threads_from_env() -> Option<usize> {
    let n = std::env::var("PGF_THREADS").ok()?.parse::<usize>().ok()?;
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    Some(n)
}

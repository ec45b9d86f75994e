//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) these dispatch to rayon; without it
//! they run the same closures sequentially. Output order always follows input
//! order, so results do not depend on scheduling.

#[cfg(feature = "parallel")]
mod imp {
    use rayon::prelude::*;

    pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        items.par_iter().map(f).collect()
    }

    pub fn map_owned<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(T) -> R + Sync + Send,
    {
        items.into_par_iter().map(f).collect()
    }

    pub fn try_map<T, R, E, F>(items: &[T], f: F) -> Result<Vec<R>, E>
    where
        T: Sync,
        R: Send,
        E: Send,
        F: Fn(&T) -> Result<R, E> + Sync + Send,
    {
        items.par_iter().map(f).collect()
    }

    pub fn fold<T, A, ID, F, M>(items: &[T], identity: ID, fold: F, merge: M) -> A
    where
        T: Sync,
        A: Send,
        ID: Fn() -> A + Sync + Send,
        F: Fn(A, &T) -> A + Sync + Send,
        M: Fn(A, A) -> A + Sync + Send,
    {
        items
            .par_iter()
            .fold(&identity, &fold)
            .reduce(&identity, &merge)
    }

    pub fn threads() -> usize {
        rayon::current_num_threads()
    }

    /// Runs `f` on a pool of `n` threads (the global pool when `n` is 0).
    pub fn with_threads<R, F>(n: usize, f: F) -> R
    where
        R: Send,
        F: FnOnce() -> R + Send,
    {
        if n == 0 {
            return f();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
}

#[cfg(not(feature = "parallel"))]
mod imp {
    pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
    where
        F: Fn(&T) -> R,
    {
        items.iter().map(f).collect()
    }

    pub fn map_owned<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
    where
        F: Fn(T) -> R,
    {
        items.into_iter().map(f).collect()
    }

    pub fn try_map<T, R, E, F>(items: &[T], f: F) -> Result<Vec<R>, E>
    where
        F: Fn(&T) -> Result<R, E>,
    {
        items.iter().map(f).collect()
    }

    pub fn fold<T, A, ID, F, M>(items: &[T], identity: ID, fold: F, _merge: M) -> A
    where
        ID: Fn() -> A,
        F: Fn(A, &T) -> A,
        M: Fn(A, A) -> A,
    {
        items.iter().fold(identity(), fold)
    }

    pub fn threads() -> usize {
        1
    }

    pub fn with_threads<R, F>(_n: usize, f: F) -> R
    where
        F: FnOnce() -> R,
    {
        f()
    }
}

pub use imp::*;

/// Whether this build dispatches to rayon.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

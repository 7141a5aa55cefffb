//! Data-parallel helpers. With the `parallel` feature the work runs on rayon's
//! pool; without it, or with `Exec::Sequential`, it runs on the calling thread.
//! Results always come back in input order.

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exec {
    #[default]
    Auto,
    Sequential,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Auto
    }
}

pub fn map<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Splits [lo, hi) into chunks of at most `chunk` and maps each (start, end).
pub fn map_chunks<R, F>(exec: Exec, lo: u64, hi: u64, chunk: u64, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(u64, u64) -> R + Sync + Send,
{
    let chunk = chunk.max(1);
    let mut bounds = Vec::new();
    let mut a = lo;
    while a < hi {
        let b = (a + chunk).min(hi);
        bounds.push((a, b));
        a = b;
    }
    map(exec, &bounds, |&(a, b)| f(a, b))
}

/// Size of the worker pool that `Exec::Auto` would use.
pub fn workers(exec: Exec) -> usize {
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return rayon::current_num_threads();
    }
    let _ = exec;
    1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_kept() {
        let v: Vec<u64> = (0..1000).collect();
        let a = map(Exec::Auto, &v, |x| x * x);
        let b = map(Exec::Sequential, &v, |x| x * x);
        assert_eq!(a, b);
        let c = map_chunks(Exec::Auto, 3, 20, 4, |a, b| (a, b));
        assert_eq!(c, vec![(3, 7), (7, 11), (11, 15), (15, 19), (19, 20)]);
    }
}

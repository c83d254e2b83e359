//! Deterministic fan-out of independent trials across threads.
//!
//! Workers receive contiguous trial-index ranges and results concatenate in
//! trial order, so the output is a pure function of the trial closure: the
//! thread count changes wall time, never results. Closures derive any
//! randomness from the trial index (see [`crate::rng::SplitRng::split`]).

/// Run `f(0), f(1), ..., f(trials - 1)` on up to `threads` workers and return
/// the results in trial order.
pub fn run_trials<T, F>(trials: u64, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    let threads = threads.max(1).min(trials.max(1) as usize);
    if threads == 1 {
        return (0..trials).map(f).collect();
    }
    let chunk = trials.div_ceil(threads as u64);
    let mut out = Vec::with_capacity(trials as usize);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads as u64)
            .map(|w| {
                let f = &f;
                let start = (w * chunk).min(trials);
                let end = ((w + 1) * chunk).min(trials);
                scope.spawn(move || (start..end).map(f).collect::<Vec<T>>())
            })
            .collect();
        for handle in handles {
            out.extend(handle.join().expect("trial worker panicked"));
        }
    });
    out
}

/// Worker count to use when the caller does not pin one.
pub fn default_threads() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

//! `φ` over many `λ` on scoped worker threads.

use std::num::NonZeroUsize;
use std::thread;

use singctl_core::{quad, Problem, QuadResult, Result};

/// Same contract as [`singctl_core::sweep`]: output order follows `lambdas`
/// and a failing `λ` does not stop the others.
pub fn par_sweep(prob: &Problem, lambdas: &[f64], tol: f64, workers: Option<NonZeroUsize>) -> Vec<(f64, Result<QuadResult>)> {
    let workers = workers
        .or_else(|| thread::available_parallelism().ok())
        .map_or(1, NonZeroUsize::get)
        .min(lambdas.len().max(1));
    if workers <= 1 {
        return singctl_core::sweep(prob, lambdas, tol);
    }
    let chunk = lambdas.len().div_ceil(workers);
    thread::scope(|s| {
        let handles: Vec<_> = lambdas
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|&l| (l, quad::phi(prob, l, tol))).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("sweep worker panicked")).collect()
    })
}

//! Deterministic parallel sampling.
//!
//! Sample `i` belongs to chunk `i / CHUNK`, and every chunk draws from its own
//! child stream. Chunks run on rayon in any order, results are reassembled by
//! index, so the output depends on the seed only and not on the worker count.

use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rotation::RngStream;

pub const CHUNK: usize = 64;

/// Evaluates `f(i, rng)` for `i in 0..n`, in index order.
pub fn sample_map<R, F>(n: usize, stream: &RngStream, workers: usize, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(usize, &mut ChaCha20Rng) -> Result<R> + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let run = || -> Result<Vec<R>> {
        let parts: Vec<Result<Vec<R>>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = stream.child(c as u64).rng();
                (c * CHUNK..((c + 1) * CHUNK).min(n)).map(|i| f(i, &mut rng)).collect()
            })
            .collect();
        let mut out = Vec::with_capacity(n);
        for part in parts {
            out.extend(part?);
        }
        Ok(out)
    };
    if workers == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?
            .install(run)
    }
}

/// Like [`sample_map`] but tolerates per-sample failures: failed samples are
/// dropped and counted, and the run aborts once more than `max_fail_fraction`
/// of the samples failed.
pub fn sample_map_lossy<R, F>(
    n: usize,
    stream: &RngStream,
    workers: usize,
    max_fail_fraction: f64,
    f: F,
) -> Result<(Vec<R>, usize)>
where
    R: Send,
    F: Fn(usize, &mut ChaCha20Rng) -> Result<R> + Sync,
{
    let raw = sample_map(n, stream, workers, |i, rng| Ok(f(i, rng)))?;
    let mut out = Vec::with_capacity(n);
    let mut failed = 0;
    let mut reason = None;
    for r in raw {
        match r {
            Ok(v) => out.push(v),
            Err(e) => {
                failed += 1;
                reason.get_or_insert(e.to_string());
            }
        }
    }
    if failed as f64 > max_fail_fraction * n as f64 {
        return Err(Error::TooManyFailures {
            failed,
            total: n,
            reason: reason.unwrap_or_default(),
        });
    }
    Ok((out, failed))
}

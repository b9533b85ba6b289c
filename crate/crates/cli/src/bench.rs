use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use spectra_core::group::GroupLevel;
use spectra_core::transform::{forward, naive_forward, GridFunction};

use crate::{CliError, CliResult};

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub level: u32,
    pub size: usize,
    pub fast_seconds: f64,
    pub naive_seconds: f64,
    pub speedup: f64,
}

const MIN_WINDOW: f64 = 0.05;
const ROUNDS: usize = 3;

/// Seconds per call: repeat until the window is filled, best of a few rounds.
fn time_per_call(mut f: impl FnMut()) -> f64 {
    let mut best = f64::INFINITY;
    for _ in 0..ROUNDS {
        let start = Instant::now();
        let mut calls = 0u32;
        loop {
            f();
            calls += 1;
            let t = start.elapsed().as_secs_f64();
            if t >= MIN_WINDOW {
                best = best.min(t / calls as f64);
                break;
            }
        }
    }
    best
}

/// Single-threaded wall time of the fast and naive forward transforms on
/// `samples` random functions per level.
pub fn transform_bench(levels: &[GroupLevel], samples: usize, seed: u64) -> CliResult<Vec<BenchRow>> {
    if levels.is_empty() {
        return Err(CliError::Config("transform-bench needs at least one level".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(levels.len());
    for level in levels {
        let fs: Vec<GridFunction> = (0..samples.max(1))
            .map(|_| {
                GridFunction::from_fn(level, |_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            })
            .collect();
        let (fast, naive) = pool.install(|| {
            let fast = time_per_call(|| {
                for f in &fs {
                    std::hint::black_box(forward(f));
                }
            });
            let naive = time_per_call(|| {
                for f in &fs {
                    std::hint::black_box(naive_forward(f));
                }
            });
            (fast, naive)
        });
        rows.push(BenchRow {
            level: level.level(),
            size: level.size(),
            fast_seconds: fast / fs.len() as f64,
            naive_seconds: naive / fs.len() as f64,
            speedup: naive / fast,
        });
    }
    Ok(rows)
}

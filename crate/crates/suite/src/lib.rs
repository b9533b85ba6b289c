//! Runner and random inputs for the acceptance criteria.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectra_core::group::{GroupDescriptor, GroupLevel};
use spectra_core::symbol::SymbolGrid;
use spectra_core::transform::GridFunction;

/// Result of one criterion: pass flag and a one-line account.
pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    pub check: fn() -> Outcome,
}

/// Runs every criterion, printing one `PASS`/`FAIL` line each, and returns
/// the number of failures. A panic counts as a failure.
pub fn run_all(criteria: &[Criterion]) -> usize {
    let mut failures = 0;
    let out = std::io::stdout();
    // failures are reported on the criterion line instead
    std::panic::set_hook(Box::new(|_| {}));
    for c in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Outcome::new(false, format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        failures += usize::from(!outcome.pass);
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        let _ = writeln!(out.lock(), "{tag} [{:>2}] {} ({secs:.2}s): {}", c.id, c.name, outcome.detail);
    }
    let _ = std::panic::take_hook();
    failures
}

pub fn padic(p: u64, d: u32, n: u32) -> GroupLevel {
    GroupLevel::new(GroupDescriptor::padic(p, d).unwrap(), n).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_function(level: &GroupLevel, rng: &mut ChaCha8Rng) -> GridFunction {
    GridFunction::from_fn(level, |_| random_complex(rng))
}

pub fn random_symbol(level: &GroupLevel, rng: &mut ChaCha8Rng) -> SymbolGrid {
    let m = level.size();
    let values = (0..m * m).map(|_| random_complex(rng)).collect();
    SymbolGrid::new(level, values, "random").unwrap()
}

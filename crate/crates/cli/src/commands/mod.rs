pub mod approx;
pub mod boost;
pub mod degree;
pub mod expand;
pub mod hardness;
pub mod verify;

use std::path::PathBuf;

use pauli_lens_core::boolfn::{named_profile, BooleanFunction, NamedFunction, TABLE_LIMIT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dto::FunctionDoc;
use crate::error::{usage, CliResult};
use crate::io::read_json;

/// Settings shared by every command.
pub struct Context {
    pub seed: u64,
    pub workers: usize,
    pub pool: rayon::ThreadPool,
}

impl Context {
    pub fn new(seed: u64, workers: Option<usize>) -> CliResult<Self> {
        let workers = match workers {
            Some(0) => return Err(usage("--workers must be at least 1")),
            Some(w) => w,
            None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| usage(format!("cannot start {workers} workers: {e}")))?;
        Ok(Context { seed, workers, pool })
    }

    /// Independent stream for sweep point `index`, so results do not depend
    /// on scheduling.
    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

pub fn uniform(rng: &mut ChaCha8Rng) -> impl FnMut() -> f64 + '_ {
    move || rng.gen::<f64>()
}

pub fn parse_named(name: &str) -> CliResult<NamedFunction> {
    let lower = name.to_ascii_lowercase();
    match lower.as_str() {
        "parity" | "xor" => Ok(NamedFunction::Parity),
        "majority" | "maj" => Ok(NamedFunction::Majority),
        _ => match lower.strip_prefix("mod") {
            Some(k) => k.parse().map(NamedFunction::Mod).map_err(|_| usage(format!("bad modulus in {name:?}"))),
            None => Err(usage(format!("unknown function {name:?}; use parity, majority or mod<k>"))),
        },
    }
}

/// `--named <name> --n <n>` or `--function <file>`.
pub fn load_function(named: Option<&str>, n: Option<usize>, file: Option<&PathBuf>) -> CliResult<BooleanFunction> {
    match (named, file) {
        (Some(name), None) => {
            let n = n.ok_or_else(|| usage("--named needs --n"))?;
            Ok(BooleanFunction::named(parse_named(name)?, n)?)
        }
        (None, Some(path)) => read_json::<FunctionDoc>(path)?.to_function(),
        (Some(_), Some(_)) => Err(usage("give either --named or --function, not both")),
        (None, None) => Err(usage("a Boolean function is required (--named or --function)")),
    }
}

/// Values by Hamming weight for a `--named` function too wide for a truth table.
pub fn wide_named(named: Option<&str>, n: Option<usize>) -> CliResult<Option<Vec<f64>>> {
    match (named, n) {
        (Some(name), Some(n)) if n > TABLE_LIMIT => Ok(Some(named_profile(parse_named(name)?, n)?)),
        _ => Ok(None),
    }
}

pub fn check_epsilon(eps: f64) -> CliResult<f64> {
    if eps.is_finite() && eps >= 0.0 {
        Ok(eps)
    } else {
        Err(usage(format!("--eps {eps} must be a nonnegative number")))
    }
}

pub fn check_r(r: f64) -> CliResult<f64> {
    if r.is_finite() && r >= 1.0 {
        Ok(r)
    } else {
        Err(usage(format!("--r {r} must be at least 1")))
    }
}

/// Refuse dense work above the configured qubit cap.
pub fn check_dense(n: usize) -> CliResult<()> {
    let limit = pauli_lens_core::dense_limit();
    if n > limit {
        Err(pauli_lens_core::Error::DenseLimit { n, limit }.into())
    } else {
        Ok(())
    }
}

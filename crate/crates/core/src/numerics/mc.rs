use crate::error::{Error, Result};
use crate::market::TerminalLaw;
use crate::numerics::normal_quantile;
use serde::{Deserialize, Serialize};

/// Monte Carlo configuration. Results are bit-reproducible for a fixed
/// (seed, n_paths, chunk_size) triple regardless of how chunks are executed:
/// every draw is keyed by its global index and partial sums are reduced in
/// ascending chunk order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: u64,
    pub seed: u64,
    pub chunk_size: u64,
}

impl McConfig {
    pub fn new(n_paths: u64, seed: u64, chunk_size: u64) -> Result<Self> {
        if n_paths < 1 {
            return Err(Error::Parameter("n_paths must be >= 1".into()));
        }
        if chunk_size < 1 {
            return Err(Error::Parameter("chunk_size must be >= 1".into()));
        }
        Ok(Self { n_paths, seed, chunk_size })
    }
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer applied to a keyed counter: a stateless,
/// counter-based generator that splits cleanly across chunks.
#[inline]
fn mix(seed: u64, counter: u64) -> u64 {
    let mut z = seed.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw on (0, 1) for global index `i` under `seed`.
#[inline]
pub(crate) fn uniform_draw(seed: u64, i: u64) -> f64 {
    // 53 mantissa bits, offset to the cell midpoint so u is never 0 or 1.
    ((mix(seed, i) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal draw for global path index `i` under `seed`.
#[inline]
pub fn normal_draw(seed: u64, i: u64) -> f64 {
    normal_quantile(uniform_draw(seed, i))
}

/// Sample mean and standard error of `f` over lognormal draws from `law`.
///
/// Deterministic for a fixed config: chunk partials are accumulated
/// independently and reduced in ascending chunk index.
pub fn mc_expect<F: Fn(f64) -> f64>(
    f: F,
    law: &TerminalLaw,
    cfg: &McConfig,
) -> Result<(f64, f64)> {
    if cfg.n_paths < 2 {
        return Err(Error::Parameter("mc_expect requires n_paths >= 2".into()));
    }
    let n_chunks = cfg.n_paths.div_ceil(cfg.chunk_size);
    let mut partials: Vec<(f64, f64)> = Vec::with_capacity(n_chunks as usize);
    for chunk in 0..n_chunks {
        let start = chunk * cfg.chunk_size;
        let end = (start + cfg.chunk_size).min(cfg.n_paths);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for i in start..end {
            let z = normal_draw(cfg.seed, i);
            let x = (law.log_mean + law.log_std * z).exp();
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::Evaluation { node: x, value: v });
            }
            sum += v;
            sum_sq += v * v;
        }
        partials.push((sum, sum_sq));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for (s, s2) in partials {
        sum += s;
        sum_sq += s2;
    }
    let n = cfg.n_paths as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok((mean, (var / n).sqrt()))
}

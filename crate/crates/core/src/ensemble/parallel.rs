//! Deterministic parallel Monte Carlo averaging.
//!
//! Samples are grouped into fixed blocks of [`BLOCK`] consecutive indices.
//! Each block is summed serially in index order, and the block sums are then
//! combined serially in block order. The floating-point reduction tree is a
//! function of the sample count only, never of the thread count.

use rayon::prelude::*;

use crate::error::Result;

pub(crate) const BLOCK: usize = 256;

pub(crate) struct Moments {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Mean and standard error of `width` per-sample values. `f(i, out)` fills
/// `out` for sample `i`.
pub(crate) fn sample_moments<F>(n: usize, width: usize, f: F) -> Result<Moments>
where
    F: Fn(usize, &mut [f64]) -> Result<()> + Sync,
{
    let blocks = n.div_ceil(BLOCK);
    let partial: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut sum = vec![0.0; width];
            let mut sq = vec![0.0; width];
            let mut buf = vec![0.0; width];
            for i in b * BLOCK..n.min((b + 1) * BLOCK) {
                buf.fill(0.0);
                f(i, &mut buf).map_err(|e| e.at_index(i))?;
                for k in 0..width {
                    sum[k] += buf[k];
                    sq[k] += buf[k] * buf[k];
                }
            }
            Ok((sum, sq))
        })
        .collect();

    let mut sum = vec![0.0; width];
    let mut sq = vec![0.0; width];
    for block in partial {
        let (s, q) = block?;
        for k in 0..width {
            sum[k] += s[k];
            sq[k] += q[k];
        }
    }
    let nf = n as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let stderr = if n < 2 {
        vec![0.0; width]
    } else {
        mean.iter()
            .zip(&sq)
            .map(|(m, q)| ((q - nf * m * m).max(0.0) / (nf - 1.0) / nf).sqrt())
            .collect()
    };
    Ok(Moments { mean, stderr })
}

/// `f(i)` for every index, in index order.
pub(crate) fn ordered_map<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| f(i).map_err(|e| e.at_index(i)))
        .collect()
}

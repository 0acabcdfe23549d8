//! Monte Carlo checks of how planted-partition quality values fluctuate
//! around their closed forms.

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::BlockSummary;
use crate::numeric::pairwise_sum;
use crate::quality::infomap_score;
use crate::rng;

/// Trials per chunk; each chunk owns one random stream.
const CHUNK: usize = 256;

/// Counts of `trials` draws over `cells` equiprobable cells, drawn as a
/// chain of binomials.
fn multinomial_equal(rng: &mut rng::Rng, trials: u64, cells: usize, out: &mut [u64]) {
    let mut left = trials;
    for (i, slot) in out.iter_mut().enumerate().take(cells) {
        let rest = cells - i;
        if rest == 1 || left == 0 {
            *slot = if rest == 1 { left } else { 0 };
            left -= *slot;
            continue;
        }
        let x = Binomial::new(left, 1.0 / rest as f64).expect("valid binomial").sample(rng);
        *slot = x;
        left -= x;
    }
}

/// Runs `trials` draws of `f` in fixed chunks and returns the values in
/// trial order.
fn run_trials<F>(trials: usize, seed: u64, f: F) -> Vec<f64>
where
    F: Fn(&mut rng::Rng) -> f64 + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(seed, c as u64);
            let count = CHUNK.min(trials - c * CHUNK);
            (0..count).map(|_| f(&mut rng)).collect()
        })
        .collect();
    parts.into_iter().flatten().collect()
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    (mean, pairwise_sum(&sq) / (n - 1.0))
}

/// Empirical moments of planted-partition modularity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QMoments {
    pub e: u64,
    pub b: usize,
    pub e_in: u64,
    pub gamma: f64,
    pub trials: usize,
    pub mean_q: f64,
    pub var_q: f64,
    /// Standard error of `mean_q`.
    pub std_err: f64,
    /// `E_in/E − (γ/B)(1 + (B−1)/2E)`.
    pub predicted_mean: f64,
}

impl QMoments {
    /// `var · E · B / γ²`.
    pub fn scaled_variance(&self) -> f64 {
        self.var_q * self.e as f64 * self.b as f64 / (self.gamma * self.gamma)
    }
}

/// Minimum number of trials accepted by [`appendix_q_moments`].
pub const MIN_Q_TRIALS: usize = 1000;

/// Draws group degree sums `e_r` as a multinomial of `2E` endpoints over
/// `B` equal groups and evaluates `Q = E_in/E − γ Σ e_r²/(2E)²`.
pub fn appendix_q_moments(e: u64, b: usize, e_in: u64, gamma: f64, trials: usize, seed: u64) -> Result<QMoments> {
    if trials < MIN_Q_TRIALS {
        return Err(Error::Domain(format!("need at least {MIN_Q_TRIALS} trials, got {trials}")));
    }
    if e < 1 || b < 1 || e_in > e || !(gamma >= 0.0) {
        return Err(Error::Domain(format!("invalid point E={e} B={b} E_in={e_in} gamma={gamma}")));
    }
    let two_e = 2.0 * e as f64;
    let frac = e_in as f64 / e as f64;
    let qs = run_trials(trials, seed, |rng| {
        let mut counts = vec![0u64; b];
        multinomial_equal(rng, 2 * e, b, &mut counts);
        let terms: Vec<f64> = counts.iter().map(|&c| (c as f64 / two_e).powi(2)).collect();
        frac - gamma * pairwise_sum(&terms)
    });
    let (mean, var) = mean_var(&qs);
    let bf = b as f64;
    Ok(QMoments {
        e,
        b,
        e_in,
        gamma,
        trials,
        mean_q: mean,
        var_q: var,
        std_err: (var / trials as f64).sqrt(),
        predicted_mean: frac - gamma / bf * (1.0 + (bf - 1.0) / two_e),
    })
}

/// One point of the Infomap variance scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LPoint {
    pub n: u64,
    pub b: usize,
    pub avg_k: f64,
    pub ein_frac: f64,
    pub e: u64,
    pub e_in: u64,
    pub mean_l: f64,
    pub var_l: f64,
}

/// Axes of the Infomap variance scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LGrid {
    pub n: Vec<u64>,
    pub b: Vec<usize>,
    pub avg_k: Vec<f64>,
    pub ein_frac: Vec<f64>,
}

impl Default for LGrid {
    fn default() -> Self {
        LGrid {
            n: vec![100, 1_000, 10_000, 100_000],
            b: vec![2, 20, 200],
            avg_k: vec![5.0, 20.0, 100.0],
            ein_frac: vec![0.05, 0.5, 0.95],
        }
    }
}

impl LGrid {
    fn check(&self) -> Result<()> {
        let ok = self.n.iter().all(|&n| (100..=100_000).contains(&n))
            && self.b.iter().all(|&b| (2..=200).contains(&b))
            && self.avg_k.iter().all(|&k| (5.0..=100.0).contains(&k))
            && self.ein_frac.iter().all(|&f| (0.05..=0.95).contains(&f));
        let nonempty = !(self.n.is_empty() || self.b.is_empty() || self.avg_k.is_empty() || self.ein_frac.is_empty());
        if ok && nonempty {
            Ok(())
        } else {
            Err(Error::Domain(
                "grid must lie within N in [1e2,1e5], B in [2,200], <k> in [5,100], E_in/E in [0.05,0.95]".into(),
            ))
        }
    }
}

/// Table of the Infomap variance scan with its fitted trend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LVariance {
    pub points: Vec<LPoint>,
    /// Slope of `ln var(L)` against `ln E` with one intercept per
    /// `(B, ⟨k⟩, E_in/E)` series.
    pub slope: f64,
    pub skipped: usize,
    pub trials: usize,
}

/// Variance of the Infomap score at one point.
///
/// The `E_in` internal edges fall multinomially on the `B` diagonal cells
/// (each contributing two endpoints to `e_rr`) and the remaining `E − E_in`
/// on the `C(B,2)` off-diagonal cells.
pub fn l_point(n: u64, b: usize, avg_k: f64, ein_frac: f64, trials: usize, seed: u64) -> Result<LPoint> {
    if trials < 2 {
        return Err(Error::Domain("need at least two trials".into()));
    }
    let e = (n as f64 * avg_k / 2.0).round() as u64;
    if b < 2 || b as u64 > n || e < 1 {
        return Err(Error::Domain(format!("invalid point N={n} B={b} <k>={avg_k}")));
    }
    let e_in = (ein_frac * e as f64).round() as u64;
    let off_cells = b * (b - 1) / 2;
    let ls = run_trials(trials, seed, |rng| {
        let mut diag = vec![0u64; b];
        let mut off = vec![0u64; off_cells];
        multinomial_equal(rng, e_in, b, &mut diag);
        multinomial_equal(rng, e - e_in, off_cells, &mut off);
        let mut e_r: Vec<u64> = diag.iter().map(|&d| 2 * d).collect();
        let mut k = 0;
        for r in 0..b {
            for s in r + 1..b {
                e_r[r] += off[k];
                e_r[s] += off[k];
                k += 1;
            }
        }
        let summary = BlockSummary {
            b,
            e,
            e_in,
            e_rr: diag.iter().map(|&d| 2 * d).collect(),
            e_r,
            n_r: vec![0; b],
        };
        infomap_score(&summary).expect("E >= 1")
    });
    let (mean, var) = mean_var(&ls);
    Ok(LPoint { n, b, avg_k, ein_frac, e, e_in, mean_l: mean, var_l: var })
}

/// Scans the grid and fits the decay of `var(L)` with `E`. Points with
/// `B > N` are skipped.
pub fn appendix_l_variance(grid: &LGrid, trials: usize, seed: u64) -> Result<LVariance> {
    grid.check()?;
    let mut specs = Vec::new();
    let mut skipped = 0;
    for &b in &grid.b {
        for &k in &grid.avg_k {
            for &f in &grid.ein_frac {
                for &n in &grid.n {
                    if b as u64 > n {
                        skipped += 1;
                    } else {
                        specs.push((n, b, k, f));
                    }
                }
            }
        }
    }
    let points = specs
        .iter()
        .enumerate()
        .map(|(i, &(n, b, k, f))| l_point(n, b, k, f, trials, rng::derive_seed(seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(LVariance { slope: within_series_slope(&points), points, skipped, trials })
}

/// Log-log slope of variance against `E` after removing each series' mean.
fn within_series_slope(points: &[LPoint]) -> f64 {
    use std::collections::BTreeMap;
    let mut series: BTreeMap<(usize, u64, u64), Vec<(f64, f64)>> = BTreeMap::new();
    for p in points.iter().filter(|p| p.var_l > 0.0) {
        let key = (p.b, p.avg_k.to_bits(), p.ein_frac.to_bits());
        series.entry(key).or_default().push(((p.e as f64).ln(), p.var_l.ln()));
    }
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for xs in series.values().filter(|v| v.len() >= 2) {
        let mx = xs.iter().map(|p| p.0).sum::<f64>() / xs.len() as f64;
        let my = xs.iter().map(|p| p.1).sum::<f64>() / xs.len() as f64;
        for &(x, y) in xs {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx) * (x - mx);
        }
    }
    if sxx > 0.0 {
        sxy / sxx
    } else {
        f64::NAN
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multinomial_conserves_total() {
        let mut rng = rng::from_seed(3);
        let mut out = vec![0u64; 7];
        for t in [0u64, 1, 10, 12345] {
            multinomial_equal(&mut rng, t, 7, &mut out);
            assert_eq!(out.iter().sum::<u64>(), t);
        }
    }

    #[test]
    fn q_moments_zero_gamma_has_zero_variance() {
        let m = appendix_q_moments(500, 5, 300, 0.0, 1000, 1).unwrap();
        assert_eq!(m.var_q, 0.0);
        assert_eq!(m.mean_q, 0.6);
    }

    #[test]
    fn q_moments_reject_few_trials() {
        assert!(appendix_q_moments(100, 2, 50, 1.0, 999, 0).is_err());
    }

    #[test]
    fn q_mean_error_decays_with_e() {
        let errs: Vec<f64> = [50u64, 500, 5000]
            .iter()
            .map(|&e| {
                let m = appendix_q_moments(e, 4, e / 2, 1.0, 4000, 7).unwrap();
                (m.mean_q - (0.5 - 0.25)).abs()
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn l_variance_shrinks_with_e() {
        let small = l_point(100, 2, 5.0, 0.5, 2000, 1).unwrap();
        let large = l_point(10_000, 2, 5.0, 0.5, 2000, 1).unwrap();
        assert!(small.var_l > large.var_l);
        let full = l_point(200, 4, 10.0, 1.0, 200, 2);
        assert!(full.is_err() || full.unwrap().var_l.is_finite());
    }

    #[test]
    fn grid_bounds_are_enforced() {
        let g = LGrid { n: vec![50], ..Default::default() };
        assert!(appendix_l_variance(&g, 10, 0).is_err());
    }
}

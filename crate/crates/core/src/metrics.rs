//! Partition comparison and Monte Carlo estimates of coding overhead.

use std::collections::HashMap;

use pathfinding::prelude::{kuhn_munkres, Matrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Partition};
use crate::numeric::{ln_fact, pairwise_sum};
use crate::optimizer::effective_b;
use crate::rng;

/// Above this many groups on either side the overlap falls back to greedy matching.
pub const EXACT_ASSIGNMENT_LIMIT: usize = 2000;

fn check_sizes(a: &Partition, b: &Partition) -> Result<()> {
    if a.n() != b.n() {
        return Err(Error::SizeMismatch(format!("partitions cover {} and {} nodes", a.n(), b.n())));
    }
    Ok(())
}

/// Nonzero cells of the contingency table, sorted by `(r, s)`.
fn contingency(a: &Partition, b: &Partition) -> Vec<((usize, usize), u64)> {
    let mut cells: HashMap<(usize, usize), u64> = HashMap::new();
    for (&x, &y) in a.labels().iter().zip(b.labels()) {
        *cells.entry((x, y)).or_insert(0) += 1;
    }
    let mut v: Vec<_> = cells.into_iter().collect();
    v.sort_unstable();
    v
}

/// Overlap value and whether the assignment was solved exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    pub value: f64,
    pub exact: bool,
}

/// `max_μ (1/N) Σ_i δ(a_i, μ(b_i))` over label bijections.
pub fn max_overlap(a: &Partition, b: &Partition) -> Result<f64> {
    Ok(max_overlap_flagged(a, b)?.value)
}

/// As [`max_overlap`], reporting when the greedy fallback was used.
pub fn max_overlap_flagged(a: &Partition, b: &Partition) -> Result<Overlap> {
    check_sizes(a, b)?;
    let n = a.n();
    if n == 0 {
        return Ok(Overlap { value: 1.0, exact: true });
    }
    let cells = contingency(a, b);
    let size = a.num_groups().max(b.num_groups());
    if size <= EXACT_ASSIGNMENT_LIMIT {
        let mut m = Matrix::new(size, size, 0i64);
        for &((r, s), c) in &cells {
            m[(r, s)] = c as i64;
        }
        let (total, _) = kuhn_munkres(&m);
        Ok(Overlap { value: total as f64 / n as f64, exact: true })
    } else {
        let mut sorted = cells;
        sorted.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
        let mut used_a = vec![false; a.num_groups()];
        let mut used_b = vec![false; b.num_groups()];
        let mut total = 0u64;
        for ((r, s), c) in sorted {
            if !used_a[r] && !used_b[s] {
                used_a[r] = true;
                used_b[s] = true;
                total += c;
            }
        }
        Ok(Overlap { value: total as f64 / n as f64, exact: false })
    }
}

fn entropy(sizes: &[usize], n: f64) -> f64 {
    let terms: Vec<f64> = sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            -p * p.ln()
        })
        .collect();
    pairwise_sum(&terms)
}

/// Mutual information in nats.
pub fn mutual_information(a: &Partition, b: &Partition) -> Result<f64> {
    check_sizes(a, b)?;
    let n = a.n() as f64;
    let (sa, sb) = (a.sizes(), b.sizes());
    let terms: Vec<f64> = contingency(a, b)
        .iter()
        .map(|&((r, s), c)| {
            let c = c as f64;
            c / n * (n * c / (sa[r] as f64 * sb[s] as f64)).ln()
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Expected mutual information of two random labellings with the given
/// group sizes (hypergeometric model).
pub fn expected_mutual_information(sa: &[usize], sb: &[usize], n: usize) -> f64 {
    let nf = n as f64;
    let lf_n = ln_fact(nf);
    let rows: Vec<f64> = sa
        .par_iter()
        .map(|&ai| {
            let mut acc = Vec::new();
            for &bj in sb {
                let lo = (ai + bj).saturating_sub(n).max(1);
                let hi = ai.min(bj);
                let fixed = ln_fact(ai as f64) + ln_fact(bj as f64) + ln_fact((n - ai) as f64) + ln_fact((n - bj) as f64) - lf_n;
                for nij in lo..=hi {
                    let x = nij as f64;
                    let log_p = fixed
                        - ln_fact(x)
                        - ln_fact((ai - nij) as f64)
                        - ln_fact((bj - nij) as f64)
                        - ln_fact((n + nij - ai - bj) as f64);
                    acc.push(x / nf * (nf * x / (ai as f64 * bj as f64)).ln() * log_p.exp());
                }
            }
            pairwise_sum(&acc)
        })
        .collect();
    pairwise_sum(&rows)
}

/// Adjusted mutual information, `(MI − E[MI]) / (max(H_a, H_b) − E[MI])`.
///
/// If exactly one partition is trivial the score is 0; if both are, it is 1.
pub fn ami(a: &Partition, b: &Partition) -> Result<f64> {
    check_sizes(a, b)?;
    let n = a.n();
    let (ta, tb) = (a.num_groups() <= 1, b.num_groups() <= 1);
    if ta && tb {
        return Ok(1.0);
    }
    if ta || tb {
        return Ok(0.0);
    }
    if a == b {
        return Ok(1.0);
    }
    let nf = n as f64;
    let mi = mutual_information(a, b)?;
    let emi = expected_mutual_information(a.sizes(), b.sizes(), n);
    let h = entropy(a.sizes(), nf).max(entropy(b.sizes(), nf));
    let denom = h - emi;
    if denom.abs() < 1e-15 {
        return Ok(0.0);
    }
    Ok((mi - emi) / denom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub overlap: f64,
    pub overlap_exact: bool,
    pub ami: f64,
    pub b_e_first: f64,
    pub b_e_second: f64,
}

pub fn compare(a: &Partition, b: &Partition) -> Result<ComparisonRecord> {
    let o = max_overlap_flagged(a, b)?;
    Ok(ComparisonRecord {
        overlap: o.value,
        overlap_exact: o.exact,
        ami: ami(a, b)?,
        b_e_first: effective_b(a),
        b_e_second: effective_b(b),
    })
}

/// One Monte Carlo draw of a coding-overhead estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlSample {
    pub index: usize,
    pub seed: u64,
    pub sigma_p: Option<f64>,
    pub sigma_q: Option<f64>,
    pub error: Option<String>,
}

impl KlSample {
    pub fn diff(&self) -> Option<f64> {
        Some(self.sigma_q? - self.sigma_p?)
    }
}

/// Mean of `Σ_Q − Σ_P` over samples from `P`, in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlEstimate {
    pub mean: f64,
    pub std_err: f64,
    /// Samples that contributed.
    pub samples: usize,
    pub failures: usize,
    pub records: Vec<KlSample>,
}

/// Estimates the overhead of encoding draws of `P` with the code of `Q`.
///
/// Sample `i` is drawn with seed `derive_seed(seed, i)`. Samples on which
/// the sampler or either evaluator fails are kept in `records` and
/// excluded from the mean.
pub fn kl_estimate<S, FP, FQ>(sampler: S, sigma_p: FP, sigma_q: FQ, s: usize, seed: u64) -> Result<KlEstimate>
where
    S: Fn(u64) -> Result<(Graph, Partition)> + Sync,
    FP: Fn(&Graph, &Partition) -> Result<f64> + Sync,
    FQ: Fn(&Graph, &Partition) -> Result<f64> + Sync,
{
    if s < 2 {
        return Err(Error::Domain("need at least two samples".into()));
    }
    let records: Vec<KlSample> = (0..s)
        .into_par_iter()
        .map(|i| {
            let sd = rng::derive_seed(seed, i as u64);
            let mut rec = KlSample { index: i, seed: sd, sigma_p: None, sigma_q: None, error: None };
            match sampler(sd) {
                Err(e) => rec.error = Some(e.to_string()),
                Ok((g, p)) => match (sigma_p(&g, &p), sigma_q(&g, &p)) {
                    (Ok(a), Ok(b)) => {
                        rec.sigma_p = Some(a);
                        rec.sigma_q = Some(b);
                    }
                    (Err(e), _) | (_, Err(e)) => rec.error = Some(e.to_string()),
                },
            }
            rec
        })
        .collect();
    let diffs: Vec<f64> = records.iter().filter_map(|r| r.diff()).collect();
    let k = diffs.len();
    if k < 2 {
        return Err(Error::Numeric(format!("only {k} of {s} samples could be evaluated")));
    }
    let mean = pairwise_sum(&diffs) / k as f64;
    let sq: Vec<f64> = diffs.iter().map(|d| (d - mean) * (d - mean)).collect();
    let var = pairwise_sum(&sq) / (k - 1) as f64;
    Ok(KlEstimate { mean, std_err: (var / k as f64).sqrt(), samples: k, failures: s - k, records })
}

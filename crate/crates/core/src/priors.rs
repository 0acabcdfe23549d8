//! Implicit priors, the location of the sharp transition in the most
//! probable state, and feasibility against the detectability threshold.

use serde::{Deserialize, Serialize};

use crate::dos::{ArgmaxState, PlantedGrid};
use crate::error::{Error, Result};
use crate::numeric::log_sum_exp_slice;

/// Marginals of the implicit model along a `β` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorCurve {
    pub betas: Vec<f64>,
    pub mean_w: Vec<f64>,
    pub mean_b: Vec<f64>,
    /// Grid `B` values; `p_b` columns follow this order.
    pub b_values: Vec<usize>,
    /// Number of integer `B` each column stands for.
    pub b_weights: Vec<f64>,
    /// `P(B column | β)`; rows sum to one.
    pub p_b: Vec<Vec<f64>>,
    /// `W` bin edges for `p_w`.
    pub w_edges: Vec<f64>,
    /// `P(W bin | β)`; rows sum to one.
    pub p_w: Vec<Vec<f64>>,
}

impl PriorCurve {
    /// `ln P(B = b | β)` per integer `b` at each column (column mass spread
    /// evenly over the integers it represents).
    pub fn log_density_b(&self, beta_index: usize) -> Vec<f64> {
        self.p_b[beta_index].iter().zip(&self.b_weights).map(|(p, w)| p.ln() - w.ln()).collect()
    }
}

/// Means and marginals of `W` and `B` for each `β`.
pub fn prior_curves(grid: &PlantedGrid, betas: &[f64], w_bins: usize) -> Result<PriorCurve> {
    if w_bins < 1 {
        return Err(Error::Domain("need at least one W bin".into()));
    }
    let (lo, hi) = grid.quality_range();
    let width = if hi > lo { (hi - lo) / w_bins as f64 } else { 1.0 };
    let w_edges: Vec<f64> = (0..=w_bins).map(|i| lo + width * i as f64).collect();
    let b_values = grid.b_grid().to_vec();
    let b_weights = grid.b_weights();
    let mut out = PriorCurve {
        betas: betas.to_vec(),
        mean_w: Vec::new(),
        mean_b: Vec::new(),
        b_values: b_values.clone(),
        b_weights,
        p_b: Vec::new(),
        w_edges,
        p_w: Vec::new(),
    };
    for &beta in betas {
        let stats = grid.stats(beta)?;
        let log_pb = grid.log_marginal_b(beta);
        let pb: Vec<f64> = log_pb.iter().map(|x| x.exp()).collect();
        let mean_b = pb.iter().zip(&b_values).map(|(p, &b)| p * b as f64).sum();
        let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); w_bins];
        grid.for_each_cell(|_, _, w, l| {
            let k = (((w - lo) / width) as usize).min(w_bins - 1);
            buckets[k].push(beta * w + l);
        });
        let log_bins: Vec<f64> = buckets.iter().map(|v| log_sum_exp_slice(v)).collect();
        let total = log_sum_exp_slice(&log_bins);
        out.p_w.push(log_bins.iter().map(|x| (x - total).exp()).collect());
        out.mean_w.push(stats.mean_w);
        out.mean_b.push(mean_b);
        out.p_b.push(pb);
    }
    Ok(out)
}

/// `⟨B⟩` within one quality bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalB {
    pub w_center: f64,
    pub mean_b: f64,
    pub log_xi: f64,
}

/// `⟨B⟩` given `W`, from `P(B|W) = Ξ(W,B)/Ξ(W)`. Empty bins are skipped.
pub fn conditional_b_given_w(grid: &PlantedGrid, bins: usize) -> Result<Vec<ConditionalB>> {
    let h = grid.dos_histogram(bins)?;
    let centers = h.centers();
    let mut out = Vec::new();
    for (k, &lx) in h.log_xi.iter().enumerate() {
        if lx == f64::NEG_INFINITY {
            continue;
        }
        let mean_b = h.log_xi_b[k]
            .iter()
            .zip(&h.b_values)
            .map(|(l, &b)| b as f64 * (l - lx).exp())
            .sum();
        out.push(ConditionalB { w_center: centers[k], mean_b, log_xi: lx });
    }
    Ok(out)
}

/// A located jump in the most probable group count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub beta_star: f64,
    pub below: ArgmaxState,
    pub above: ArgmaxState,
}

/// Minimum ratio between `B_star` on either side of a discontinuity.
pub const JUMP_RATIO: f64 = 4.0;

fn jump(a: &ArgmaxState, b: &ArgmaxState) -> f64 {
    let (x, y) = (a.b_star as f64, b.b_star as f64);
    x.max(y) / x.min(y)
}

/// Bisects a `β` bracket onto a jump of at least 4× in `B_star`.
///
/// At every step the half whose endpoints differ more in `ln B_star` is
/// kept, until the relative width falls below `1e-6`. If the endpoints then
/// differ by less than 4× the change was gradual and `NotFound` is returned.
pub fn locate_transition(grid: &PlantedGrid, bracket: (f64, f64)) -> Result<Transition> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) {
        return Err(Error::Domain(format!("invalid bracket ({lo}, {hi})")));
    }
    let mut s_lo = grid.argmax_state(lo)?;
    let mut s_hi = grid.argmax_state(hi)?;
    if jump(&s_lo, &s_hi) < JUMP_RATIO {
        return Err(Error::NotFound(format!(
            "B_star changes from {} to {} across the bracket",
            s_lo.b_star, s_hi.b_star
        )));
    }
    while (hi - lo) > 1e-6 * hi.abs().max(lo.abs()) {
        let mid = 0.5 * (lo + hi);
        let s_mid = grid.argmax_state(mid)?;
        if jump(&s_lo, &s_mid) >= jump(&s_mid, &s_hi) {
            hi = mid;
            s_hi = s_mid;
        } else {
            lo = mid;
            s_lo = s_mid;
        }
    }
    if jump(&s_lo, &s_hi) < JUMP_RATIO {
        return Err(Error::NotFound(format!(
            "B_star changes continuously ({} to {} over a 1e-6 bracket)",
            s_lo.b_star, s_hi.b_star
        )));
    }
    Ok(Transition { beta_star: 0.5 * (lo + hi), below: s_lo, above: s_hi })
}

/// `E_in/E` at the detectability threshold of the planted partition.
pub fn detectability_ein_fraction(b: usize, avg_k: f64) -> f64 {
    let b = b as f64;
    1.0 / b + (b - 1.0) / (b * avg_k.sqrt())
}

/// One point of a feasibility curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityPoint {
    pub beta: f64,
    pub b_star: usize,
    pub e_in_star: u64,
    pub w_star: f64,
    pub ein_fraction: f64,
    pub detectability: f64,
}

/// Most probable states along a `β` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityCurve {
    pub gamma: Option<f64>,
    pub points: Vec<FeasibilityPoint>,
}

/// `argmax_state` for each `β`, dropping repeats of the previous state.
pub fn feasibility_curve(grid: &PlantedGrid, betas: &[f64]) -> Result<FeasibilityCurve> {
    let avg_k = 2.0 * grid.e() as f64 / grid.n() as f64;
    let mut points: Vec<FeasibilityPoint> = Vec::new();
    for &beta in betas {
        let s = grid.argmax_state(beta)?;
        if let Some(last) = points.last() {
            if last.b_star == s.b_star && last.e_in_star == s.e_in_star {
                continue;
            }
        }
        points.push(FeasibilityPoint {
            beta,
            b_star: s.b_star,
            e_in_star: s.e_in_star,
            w_star: s.w_star,
            ein_fraction: s.e_in_star as f64 / grid.e() as f64,
            detectability: detectability_ein_fraction(s.b_star, avg_k),
        });
    }
    Ok(FeasibilityCurve { gamma: grid.method().gamma(), points })
}

//! Description lengths of (graph, partition) pairs.
//!
//! For a method with quality `W`, the implicit model assigns
//! `P(A, b | β) = e^{βW(A,b)} / Z(β)`, so the code length of a pair is
//! `Σ(β) = −βW + ln Z(β) + ln(C(N,2)+1)` once the edge count is transmitted
//! with a uniform prior. `β` is chosen to minimize `Σ`, which is where the
//! model's mean quality equals the observed one.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dos::{GridConfig, PlantedGrid, ThermoStats};
use crate::error::{Error, Result};
use crate::graph::{block_summary, degree_stats, DegreeStats, Graph, Partition};
use crate::numeric::{
    ln_binom, ln_double_fact_even, ln_fact, log_edge_count_prior, log_multiset, log_q_with_provenance, pairs,
    Provenance,
};
use crate::quality::{Method, MethodKind};

/// Prior over degree sequences for degree-corrected lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegreePrior {
    /// Histogram first (`ln q(2E, N)`), then the sequence given the histogram.
    #[default]
    Hierarchical,
    /// Uniform over all `N`-tuples summing to `2E`.
    Flat,
}

/// Options for [`description_length`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DlOptions {
    pub grid: GridConfig,
    /// Upper end of the `β` search (defaults to `10^3 · N`).
    pub beta_max: Option<f64>,
    /// Search `β ∈ [−β_max, β_max]` instead of `[0, β_max]`.
    pub allow_negative_beta: bool,
    pub degree_prior: DegreePrior,
}

impl DlOptions {
    pub fn beta_bounds(&self, n: u64) -> (f64, f64) {
        let hi = self.beta_max.unwrap_or(1.0e3 * n as f64);
        let lo = if self.allow_negative_beta { -hi } else { 0.0 };
        (lo, hi)
    }
}

/// Reference code lengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    /// `ln C(C(N,2), E)`.
    pub sigma_er: f64,
    /// `sigma_er + ln(C(N,2)+1)`.
    pub sigma_er_with_prior: f64,
    pub sigma_cm: f64,
    /// Flat planted-partition code of the same partition, when finite.
    pub sigma_pp: Option<f64>,
}

/// Whether the partition is explained worse than a structureless baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverfitFlags {
    /// `Σ > Σ_ER` (bare form).
    pub exceeds_er: bool,
    /// `Σ > Σ_CM`.
    pub exceeds_cm: bool,
}

/// Result of [`description_length`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DlReport {
    pub sigma_nats: f64,
    pub beta_star: f64,
    pub w: f64,
    pub method: Method,
    pub n: u64,
    pub e: u64,
    pub b: usize,
    pub e_in: u64,
    /// Additive terms; they sum to `sigma_nats`.
    pub components: BTreeMap<String, f64>,
    pub baselines: Baselines,
    pub overfit: OverfitFlags,
    pub flags: Vec<String>,
}

/// Outcome of the `β` search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSolution {
    pub beta: f64,
    pub stats: ThermoStats,
    pub clamped_low: bool,
    pub clamped_high: bool,
    /// The bracket collapsed without matching the mean (jump in `⟨W⟩`).
    pub mean_gap: bool,
}

/// Finds `β` with `⟨W⟩_β = w` inside `[lo, hi]` by safeguarded Newton
/// steps on the monotone mean, falling back to bisection. Clamps to an end
/// when `w` lies outside the reachable range.
pub fn solve_beta(grid: &PlantedGrid, w: f64, lo: f64, hi: f64) -> Result<BetaSolution> {
    if !(lo < hi) {
        return Err(Error::Domain(format!("empty beta interval [{lo}, {hi}]")));
    }
    let tol = 1e-10 * w.abs().max(1.0);
    let s_lo = grid.stats(lo)?;
    if s_lo.mean_w - w >= -tol {
        return Ok(BetaSolution { beta: lo, stats: s_lo, clamped_low: s_lo.mean_w - w > tol, clamped_high: false, mean_gap: false });
    }
    let s_hi = grid.stats(hi)?;
    if s_hi.mean_w - w <= tol {
        return Ok(BetaSolution { beta: hi, stats: s_hi, clamped_low: false, clamped_high: s_hi.mean_w - w < -tol, mean_gap: false });
    }
    let (mut a, mut b) = (lo, hi);
    let mut best = if (s_lo.mean_w - w).abs() < (s_hi.mean_w - w).abs() { s_lo } else { s_hi };
    let mut x = best.beta;
    let mut s = best;
    for _ in 0..400 {
        let f = s.mean_w - w;
        if f.abs() <= tol {
            return Ok(BetaSolution { beta: s.beta, stats: s, clamped_low: false, clamped_high: false, mean_gap: false });
        }
        if f < 0.0 {
            a = a.max(x);
        } else {
            b = b.min(x);
        }
        let newton = if s.var_w > 0.0 { x - f / s.var_w } else { f64::NAN };
        let width = b - a;
        let next = if newton > a && newton < b && (newton - x).abs() < 0.5 * width {
            newton
        } else {
            0.5 * (a + b)
        };
        if width <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) || next == x {
            break;
        }
        x = next;
        s = grid.stats(x)?;
        if (s.mean_w - w).abs() < (best.mean_w - w).abs() {
            best = s;
        }
    }
    let gap = (best.mean_w - w).abs() > 1e-6 * w.abs().max(1.0);
    Ok(BetaSolution { beta: best.beta, stats: best, clamped_low: false, clamped_high: false, mean_gap: gap })
}

/// `−βW + ln Z(β) + ln(C(N,2)+1)` for the grid's model at a fixed `β`.
pub fn sigma_at_beta(grid: &PlantedGrid, w: f64, beta: f64) -> Result<f64> {
    Ok(-beta * w + grid.log_partition_function(beta)? + log_edge_count_prior(grid.n()))
}

/// `ln C(C(N,2), E)`.
pub fn sigma_er(n: u64, e: u64) -> Result<f64> {
    let p = pairs(n);
    if e as f64 > p {
        return Err(Error::Domain(format!("E={e} exceeds C(N,2)={p}")));
    }
    Ok(ln_binom(p, e as f64))
}

/// Degree-prior terms `(components, provenance)` for a degree sequence.
fn degree_prior_terms(ds: &DegreeStats, prior: DegreePrior) -> (Vec<(&'static str, f64)>, Option<Provenance>) {
    let n = ds.n();
    match prior {
        DegreePrior::Hierarchical => {
            let q = log_q_with_provenance(2 * ds.e, n);
            (
                vec![
                    ("degree_histogram_prior", q.value),
                    ("degree_sequence_given_histogram", ln_fact(n as f64) - ds.sum_log_eta_factorial()),
                ],
                Some(q.provenance),
            )
        }
        DegreePrior::Flat => {
            let v = log_multiset(n.max(1), 2 * ds.e).unwrap_or(0.0);
            (vec![("degree_sequence_flat_prior", v)], None)
        }
    }
}

/// Configuration-model code: `ln[(2E)!/((2E)!! Π k_i!)] + ln(N!/Π η_k!) + ln q(2E,N) + ln(C(N,2)+1)`.
pub fn sigma_cm(g: &Graph) -> Result<f64> {
    Ok(sigma_cm_with_provenance(g)?.0)
}

pub fn sigma_cm_with_provenance(g: &Graph) -> Result<(f64, Provenance)> {
    if g.e() == 0 {
        return Err(Error::UndefinedObjective("configuration baseline needs E >= 1".into()));
    }
    let ds = degree_stats(g);
    let two_e = 2.0 * g.e() as f64;
    let graph_term = ln_fact(two_e) - ln_double_fact_even(two_e) - ds.sum_log_k_factorial();
    let q = log_q_with_provenance(2 * ds.e, ds.n());
    let total = graph_term + ln_fact(ds.n() as f64) - ds.sum_log_eta_factorial() + q.value + log_edge_count_prior(ds.n());
    Ok((total, q.provenance))
}

/// Flat planted-partition code of a partition with uniform priors on the
/// group composition, `B ∈ [1, N]` and `E_in ∈ [0, E]`.
pub fn sigma_pp(g: &Graph, p: &Partition) -> Result<f64> {
    if g.e() == 0 {
        return Err(Error::UndefinedObjective("planted-partition code needs E >= 1".into()));
    }
    let s = block_summary(g, p)?;
    let n = g.n() as u64;
    let within: f64 = s.n_r.iter().map(|&x| pairs(x)).sum();
    let between = pairs(n) - within;
    let e = s.e as f64;
    let e_in = s.e_in as f64;
    let like = ln_binom(within, e_in) + ln_binom(between, e - e_in);
    if !like.is_finite() {
        return Err(Error::Infeasible(format!(
            "E_in={} or E-E_in={} exceeds the available pairs",
            s.e_in,
            s.e - s.e_in
        )));
    }
    let nf = n as f64;
    let b = s.b as f64;
    let composition = ln_fact(nf) - s.n_r.iter().map(|&x| ln_fact(x as f64)).sum::<f64>();
    Ok(like + composition + ln_binom(nf - 1.0, b - 1.0) + nf.ln() + (e + 1.0).ln() + log_edge_count_prior(n))
}

/// Builds the grid matching a graph and method (degree-corrected when the
/// method asks for it).
pub fn grid_for(g: &Graph, method: Method, config: &GridConfig) -> Result<PlantedGrid> {
    if g.e() == 0 {
        return Err(Error::UndefinedObjective("graph has no edges".into()));
    }
    if method.degree_corrected {
        PlantedGrid::new_dc(method, &degree_stats(g), config)
    } else {
        PlantedGrid::new(g.n() as u64, g.e() as u64, method, config)
    }
}

/// Description length of `(g, p)` under the implicit model of `method`.
pub fn description_length(g: &Graph, p: &Partition, method: Method, opts: &DlOptions) -> Result<DlReport> {
    let grid = grid_for(g, method, &opts.grid)?;
    description_length_with_grid(g, p, &grid, opts)
}

/// As [`description_length`] with a prebuilt grid (its method is used).
pub fn description_length_with_grid(g: &Graph, p: &Partition, grid: &PlantedGrid, opts: &DlOptions) -> Result<DlReport> {
    let method = grid.method();
    if grid.n() != g.n() as u64 || grid.e() != g.e() as u64 {
        return Err(Error::SizeMismatch(format!(
            "grid built for N={}, E={} but graph has N={}, E={}",
            grid.n(),
            grid.e(),
            g.n(),
            g.e()
        )));
    }
    let dc_grid = matches!(grid.omega_kind(), crate::dos::OmegaKind::DegreeCorrected { .. });
    if dc_grid != method.degree_corrected {
        return Err(Error::Validation("grid counting does not match the method's degree correction".into()));
    }
    let summary = block_summary(g, p)?;
    let w = method.score(&summary)?;
    let (lo, hi) = opts.beta_bounds(grid.n());
    let sol = solve_beta(grid, w, lo, hi)?;

    let n = g.n() as u64;
    let mut components = BTreeMap::new();
    components.insert("beta_w".to_string(), -sol.beta * w);
    components.insert("log_z".to_string(), sol.stats.log_z);
    components.insert("edge_count_prior".to_string(), log_edge_count_prior(n));
    let mut flags = Vec::new();
    if method.degree_corrected {
        let (terms, prov) = degree_prior_terms(&degree_stats(g), opts.degree_prior);
        for (k, v) in terms {
            components.insert(k.to_string(), v);
        }
        if prov == Some(Provenance::Asymptotic) {
            flags.push("q-asymptotic".to_string());
        }
    }
    if sol.clamped_low {
        flags.push("beta-clamped-low".to_string());
    }
    if sol.clamped_high {
        flags.push("beta-clamped-high".to_string());
    }
    if sol.mean_gap {
        flags.push("mean-gap".to_string());
    }
    if matches!(method.kind, MethodKind::Infomap) {
        flags.push("degree-entropy-omitted".to_string());
    }
    let sigma: f64 = crate::numeric::pairwise_sum(&components.values().copied().collect::<Vec<_>>());

    let sigma_er_bare = sigma_er(n, g.e() as u64)?;
    let (cm, cm_prov) = sigma_cm_with_provenance(g)?;
    if cm_prov == Provenance::Asymptotic && !flags.iter().any(|f| f == "q-asymptotic") {
        flags.push("q-asymptotic".to_string());
    }
    let baselines = Baselines {
        sigma_er: sigma_er_bare,
        sigma_er_with_prior: sigma_er_bare + log_edge_count_prior(n),
        sigma_cm: cm,
        sigma_pp: sigma_pp(g, p).ok(),
    };
    Ok(DlReport {
        sigma_nats: sigma,
        beta_star: sol.beta,
        w,
        method,
        n,
        e: g.e() as u64,
        b: summary.b,
        e_in: summary.e_in,
        components,
        overfit: OverfitFlags { exceeds_er: sigma > baselines.sigma_er, exceeds_cm: sigma > baselines.sigma_cm },
        baselines,
        flags,
    })
}

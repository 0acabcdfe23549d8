//! The `(B, E_in)` state lattice of the planted-partition family.
//!
//! Each cell carries `ln Ω` (number of graph/partition pairs with `B` equal
//! groups and `E_in` internal edges) and a quality value `W(E_in, E, B)`.
//! Sums over cells give the partition function, mean quality and marginals;
//! cells standing in for skipped `E_in` or `B` values are weighted by the
//! number of integers they represent.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DegreeStats;
use crate::numeric::{ln_binom, ln_double_fact_even, ln_fact, log_sum_exp_slice, pairwise_sum};
use crate::quality::Method;

/// Number of integer `B` values always included at the bottom of the grid.
pub const DENSE_B: usize = 200;
/// Density of the log-spaced tail above [`DENSE_B`].
pub const TAIL_POINTS_PER_DECADE: f64 = 40.0;
/// Target number of `E_in` cells per row for the default stride.
pub const EIN_CELLS: u64 = 5000;
/// Above this many cells `ln Ω` is recomputed on every pass instead of stored.
pub const MATERIALIZE_LIMIT: usize = 4_000_000;

/// `ln Ω` for the planted-partition family with `B` equal groups.
///
/// `ln C(B·C(N/B,2), E_in) + ln C((N/B)²·C(B,2), E−E_in) + ln N! − B ln (N/B)!`,
/// extended to real `N/B` through log-gamma. Impossible counts give `-inf`.
pub fn log_omega(n: u64, e: u64, e_in: f64, b: f64) -> f64 {
    let nf = n as f64;
    let row = OmegaRow::plain(nf, b);
    row.cell(e as f64, e_in)
}

/// Degree-corrected `ln Ω` (configuration-style edge placement).
pub fn log_omega_dc(n: u64, e: u64, e_in: f64, b: f64, ds: &DegreeStats) -> f64 {
    let row = OmegaRow::degree_corrected(n as f64, e as f64, b, ds.sum_log_k_factorial());
    row.cell(e as f64, e_in)
}

/// Per-`B` constants for cell evaluation.
#[derive(Debug, Clone, Copy)]
struct OmegaRow {
    kind: RowKind,
    constant: f64,
}

#[derive(Debug, Clone, Copy)]
enum RowKind {
    Plain { within_pairs: f64, between_pairs: f64 },
    Dc { ln_b: f64, ln_cb2: Option<f64> },
}

impl OmegaRow {
    fn plain(n: f64, b: f64) -> OmegaRow {
        let size = n / b;
        let within_pairs = 0.5 * n * (size - 1.0);
        let between_pairs = 0.5 * n * n * (b - 1.0) / b;
        OmegaRow {
            kind: RowKind::Plain { within_pairs: within_pairs.max(0.0), between_pairs: between_pairs.max(0.0) },
            constant: ln_fact(n) - b * ln_fact(size),
        }
    }

    fn degree_corrected(n: f64, e: f64, b: f64, sum_ln_k_fact: f64) -> OmegaRow {
        let cb2 = 0.5 * b * (b - 1.0);
        OmegaRow {
            kind: RowKind::Dc { ln_b: b.ln(), ln_cb2: if cb2 > 0.0 { Some(cb2.ln()) } else { None } },
            constant: b * ln_fact(2.0 * e / b) + ln_fact(n) - b * ln_fact(n / b) - sum_ln_k_fact,
        }
    }

    #[inline]
    fn cell(&self, e: f64, e_in: f64) -> f64 {
        if !(e_in >= 0.0 && e_in <= e) {
            return f64::NEG_INFINITY;
        }
        let out = e - e_in;
        match self.kind {
            RowKind::Plain { within_pairs, between_pairs } => {
                let a = ln_binom(within_pairs, e_in);
                if a == f64::NEG_INFINITY {
                    return a;
                }
                let c = ln_binom(between_pairs, out);
                if c == f64::NEG_INFINITY {
                    return c;
                }
                a + c + self.constant
            }
            RowKind::Dc { ln_b, ln_cb2 } => {
                let between = match ln_cb2 {
                    Some(l) => out * l,
                    None if out > 0.0 => return f64::NEG_INFINITY,
                    None => 0.0,
                };
                e_in * ln_b + between - ln_double_fact_even(2.0 * e_in) - ln_fact(out) + self.constant
            }
        }
    }
}

/// Which counting of graph/partition pairs the grid uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum OmegaKind {
    Plain,
    DegreeCorrected { sum_log_k_factorial: f64 },
}

/// Whether `ln Ω` is kept in memory between passes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StorageMode {
    /// Materialize when the grid has at most [`MATERIALIZE_LIMIT`] cells.
    #[default]
    Auto,
    Materialized,
    Streamed,
}

/// User-facing grid options; `None` fields take the documented defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// Explicit, strictly increasing `B` values.
    pub b_grid: Option<Vec<usize>>,
    /// Largest `B` of the default grid (defaults to `N`).
    pub b_max: Option<usize>,
    /// Spacing between `E_in` cells (defaults to `max(1, E/5000)`).
    pub ein_stride: Option<u64>,
    pub storage: StorageMode,
}

/// The default `B` grid: every integer up to 200, then a log-spaced tail.
pub fn default_b_grid(b_max: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = (1..=b_max.min(DENSE_B)).collect();
    if b_max > DENSE_B {
        let lo = (DENSE_B as f64).ln();
        let hi = (b_max as f64).ln();
        let steps = ((hi - lo) / std::f64::consts::LN_10 * TAIL_POINTS_PER_DECADE).ceil() as usize;
        for s in 1..=steps {
            let b = (lo + (hi - lo) * s as f64 / steps as f64).exp().round() as usize;
            let b = b.min(b_max);
            if b > *grid.last().unwrap() {
                grid.push(b);
            }
        }
        if *grid.last().unwrap() != b_max {
            grid.push(b_max);
        }
    }
    grid
}

/// Number of integers in `[first, last]` closest to each point (ties go to
/// the lower point). The counts sum to `last − first + 1`.
fn voronoi_counts(points: &[u64]) -> Vec<u64> {
    let mut counts = Vec::with_capacity(points.len());
    for (j, &p) in points.iter().enumerate() {
        let lo = if j == 0 { p } else { (points[j - 1] + p) / 2 + 1 };
        let hi = if j + 1 == points.len() { p } else { (p + points[j + 1]) / 2 };
        counts.push(hi + 1 - lo);
    }
    counts
}

/// The most probable state at a given inverse temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArgmaxState {
    pub w_star: f64,
    pub b_star: usize,
    pub e_in_star: u64,
    /// `β W + ln Ω` at the state.
    pub log_weight: f64,
}

/// Thermodynamic summary at one `β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermoStats {
    pub beta: f64,
    pub log_z: f64,
    pub mean_w: f64,
    pub var_w: f64,
}

/// Binned density of states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DosHistogram {
    /// `bins + 1` edges.
    pub edges: Vec<f64>,
    /// `ln Ξ(W)` per bin; `-inf` for empty bins.
    pub log_xi: Vec<f64>,
    /// `ln Ξ(W, B)` indexed `[bin][row]`, rows following `b_values`.
    pub log_xi_b: Vec<Vec<f64>>,
    pub b_values: Vec<usize>,
}

impl DosHistogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

/// Lattice of planted-partition states for fixed `N` and `E`.
#[derive(Debug, Clone)]
pub struct PlantedGrid {
    n: u64,
    e: u64,
    method: Method,
    omega: OmegaKind,
    b_grid: Vec<usize>,
    ln_b_weight: Vec<f64>,
    ein: Vec<u64>,
    ln_ein_weight: Vec<f64>,
    ein_stride: u64,
    rows: Vec<OmegaRow>,
    table: Option<Arc<Vec<f64>>>,
    config: GridConfig,
}

impl PlantedGrid {
    /// Builds the grid with plain (Bernoulli pair) counting.
    pub fn new(n: u64, e: u64, method: Method, config: &GridConfig) -> Result<PlantedGrid> {
        PlantedGrid::build(n, e, method, OmegaKind::Plain, config)
    }

    /// Builds the grid with degree-corrected counting for degree sequence `ds`.
    pub fn new_dc(method: Method, ds: &DegreeStats, config: &GridConfig) -> Result<PlantedGrid> {
        let kind = OmegaKind::DegreeCorrected { sum_log_k_factorial: ds.sum_log_k_factorial() };
        PlantedGrid::build(ds.n(), ds.e, method, kind, config)
    }

    pub fn build(n: u64, e: u64, method: Method, omega: OmegaKind, config: &GridConfig) -> Result<PlantedGrid> {
        if n < 1 {
            return Err(Error::Domain("grid needs at least one node".into()));
        }
        if e < 1 {
            return Err(Error::UndefinedObjective("grid needs E >= 1".into()));
        }
        let max_e = n * (n - 1) / 2;
        if e > max_e {
            return Err(Error::Domain(format!("E={e} exceeds C(N,2)={max_e}")));
        }
        let b_grid = match &config.b_grid {
            Some(g) => {
                if g.is_empty() || g.windows(2).any(|w| w[0] >= w[1]) || g[0] < 1 || *g.last().unwrap() as u64 > n {
                    return Err(Error::Domain("B grid must be strictly increasing within [1, N]".into()));
                }
                g.clone()
            }
            None => {
                let b_max = config.b_max.unwrap_or(n as usize).clamp(1, n as usize);
                default_b_grid(b_max)
            }
        };
        let stride = config.ein_stride.unwrap_or((e / EIN_CELLS).max(1));
        if stride == 0 {
            return Err(Error::Domain("ein_stride must be positive".into()));
        }
        let mut ein: Vec<u64> = (0..=e / stride).map(|j| j * stride).collect();
        if *ein.last().unwrap() != e {
            ein.push(e);
        }
        let ln_ein_weight = voronoi_counts(&ein).into_iter().map(|c| (c as f64).ln()).collect();
        let b64: Vec<u64> = b_grid.iter().map(|&b| b as u64).collect();
        let ln_b_weight = voronoi_counts(&b64).into_iter().map(|c| (c as f64).ln()).collect();
        let rows = b_grid.iter().map(|&b| make_row(n, e, b as f64, omega)).collect();
        let mut grid = PlantedGrid {
            n,
            e,
            method,
            omega,
            b_grid,
            ln_b_weight,
            ein,
            ln_ein_weight,
            ein_stride: stride,
            rows,
            table: None,
            config: config.clone(),
        };
        let cells = grid.num_cells();
        let materialize = match config.storage {
            StorageMode::Auto => cells <= MATERIALIZE_LIMIT,
            StorageMode::Materialized => true,
            StorageMode::Streamed => false,
        };
        if materialize {
            let table: Vec<f64> = (0..grid.rows.len())
                .into_par_iter()
                .flat_map_iter(|r| grid.row_log_omega(r))
                .collect();
            grid.table = Some(Arc::new(table));
        }
        if grid.all_infeasible() {
            return Err(Error::Numeric("grid has no feasible cell".into()));
        }
        Ok(grid)
    }

    /// Same lattice and counts under another objective. `ln Ω` is shared.
    pub fn with_method(&self, method: Method) -> PlantedGrid {
        PlantedGrid { method, ..self.clone() }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn e(&self) -> u64 {
        self.e
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn omega_kind(&self) -> OmegaKind {
        self.omega
    }

    pub fn b_grid(&self) -> &[usize] {
        &self.b_grid
    }

    /// Number of integer `B` values each grid row stands for.
    pub fn b_weights(&self) -> Vec<f64> {
        self.ln_b_weight.iter().map(|l| l.exp().round()).collect()
    }

    pub fn ein_points(&self) -> &[u64] {
        &self.ein
    }

    pub fn ein_stride(&self) -> u64 {
        self.ein_stride
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }

    pub fn is_materialized(&self) -> bool {
        self.table.is_some()
    }

    pub fn num_cells(&self) -> usize {
        self.b_grid.len() * self.ein.len()
    }

    fn all_infeasible(&self) -> bool {
        !(0..self.rows.len()).any(|r| self.row_log_omega(r).iter().any(|x| x.is_finite()))
    }

    /// `ln Ω` along one `B` row, at the grid's `E_in` points.
    fn row_log_omega(&self, r: usize) -> Vec<f64> {
        if let Some(t) = &self.table {
            let m = self.ein.len();
            return t[r * m..(r + 1) * m].to_vec();
        }
        let row = self.rows[r];
        let e = self.e as f64;
        self.ein.iter().map(|&x| row.cell(e, x as f64)).collect()
    }

    fn with_row<T>(&self, r: usize, f: impl FnOnce(&[f64]) -> T) -> T {
        match &self.table {
            Some(t) => {
                let m = self.ein.len();
                f(&t[r * m..(r + 1) * m])
            }
            None => f(&self.row_log_omega(r)),
        }
    }

    /// `ln Ω` at an arbitrary integer state (not necessarily on the grid).
    pub fn log_omega_at(&self, b: usize, e_in: u64) -> f64 {
        make_row(self.n, self.e, b as f64, self.omega).cell(self.e as f64, e_in as f64)
    }

    /// Quality of the planted state `(E_in, B)`.
    #[inline]
    pub fn quality(&self, b: usize, e_in: u64) -> f64 {
        self.method.planted(e_in as f64, self.e as f64, b as f64)
    }

    /// Per-row accumulators `(max, Σ e^{x−max}, Σ W e^{x−max}, Σ W² e^{x−max})`
    /// with `x = βW + ln Ω + ln(weights)`.
    fn row_moments(&self, r: usize, beta: f64) -> [f64; 4] {
        let b = self.b_grid[r];
        let lbw = self.ln_b_weight[r];
        self.with_row(r, |lo| {
            let mut xs = Vec::with_capacity(lo.len());
            let mut ws = Vec::with_capacity(lo.len());
            for (j, &l) in lo.iter().enumerate() {
                if l == f64::NEG_INFINITY {
                    continue;
                }
                let w = self.quality(b, self.ein[j]);
                xs.push(beta * w + l + lbw + self.ln_ein_weight[j]);
                ws.push(w);
            }
            let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if max == f64::NEG_INFINITY {
                return [max, 0.0, 0.0, 0.0];
            }
            let p: Vec<f64> = xs.iter().map(|&x| (x - max).exp()).collect();
            let pw: Vec<f64> = p.iter().zip(&ws).map(|(a, w)| a * w).collect();
            let pww: Vec<f64> = pw.iter().zip(&ws).map(|(a, w)| a * w).collect();
            [max, pairwise_sum(&p), pairwise_sum(&pw), pairwise_sum(&pww)]
        })
    }

    /// `ln Z`, `⟨W⟩` and `Var W` in one pass.
    pub fn stats(&self, beta: f64) -> Result<ThermoStats> {
        if !beta.is_finite() {
            return Err(Error::Domain(format!("beta must be finite, got {beta}")));
        }
        let rows: Vec<[f64; 4]> = (0..self.rows.len()).into_par_iter().map(|r| self.row_moments(r, beta)).collect();
        let max = rows.iter().map(|r| r[0]).fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::Numeric("all grid cells infeasible".into()));
        }
        let scale: Vec<f64> = rows.iter().map(|r| if r[0] == f64::NEG_INFINITY { 0.0 } else { (r[0] - max).exp() }).collect();
        let s0 = pairwise_sum(&rows.iter().zip(&scale).map(|(r, s)| r[1] * s).collect::<Vec<_>>());
        let s1 = pairwise_sum(&rows.iter().zip(&scale).map(|(r, s)| r[2] * s).collect::<Vec<_>>());
        let s2 = pairwise_sum(&rows.iter().zip(&scale).map(|(r, s)| r[3] * s).collect::<Vec<_>>());
        let mean = s1 / s0;
        let var = (s2 / s0 - mean * mean).max(0.0);
        if !mean.is_finite() {
            return Err(Error::Numeric(format!("mean quality not finite at beta={beta}")));
        }
        Ok(ThermoStats { beta, log_z: max + s0.ln(), mean_w: mean, var_w: var })
    }

    /// `ln Z(β) = ln Σ_cells e^{βW} Ω · (cell weight)`.
    pub fn log_partition_function(&self, beta: f64) -> Result<f64> {
        Ok(self.stats(beta)?.log_z)
    }

    /// `⟨W⟩_β`.
    pub fn mean_quality(&self, beta: f64) -> Result<f64> {
        Ok(self.stats(beta)?.mean_w)
    }

    /// Smallest and largest quality over feasible cells.
    pub fn quality_range(&self) -> (f64, f64) {
        let parts: Vec<(f64, f64)> = (0..self.rows.len())
            .into_par_iter()
            .map(|r| {
                let b = self.b_grid[r];
                self.with_row(r, |lo| {
                    let mut mm = (f64::INFINITY, f64::NEG_INFINITY);
                    for (j, &l) in lo.iter().enumerate() {
                        if l > f64::NEG_INFINITY {
                            let w = self.quality(b, self.ein[j]);
                            mm = (mm.0.min(w), mm.1.max(w));
                        }
                    }
                    mm
                })
            })
            .collect();
        parts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1)))
    }

    /// `ln P(B_row | β)` for each grid row, each row counting all the
    /// integer `B` values it stands for. Normalized over rows.
    pub fn log_marginal_b(&self, beta: f64) -> Vec<f64> {
        let rows: Vec<f64> = (0..self.rows.len())
            .into_par_iter()
            .map(|r| {
                let b = self.b_grid[r];
                let lbw = self.ln_b_weight[r];
                self.with_row(r, |lo| {
                    let xs: Vec<f64> = lo
                        .iter()
                        .enumerate()
                        .filter(|(_, l)| l.is_finite())
                        .map(|(j, &l)| beta * self.quality(b, self.ein[j]) + l + lbw + self.ln_ein_weight[j])
                        .collect();
                    log_sum_exp_slice(&xs)
                })
            })
            .collect();
        let total = log_sum_exp_slice(&rows);
        rows.into_iter().map(|x| x - total).collect()
    }

    /// Grid cell maximizing `βW + ln Ω`, refined on integer `B` between the
    /// neighbouring grid rows and on every `E_in` between neighbouring cells.
    pub fn argmax_state(&self, beta: f64) -> Result<ArgmaxState> {
        if !beta.is_finite() {
            return Err(Error::Domain(format!("beta must be finite, got {beta}")));
        }
        let best_rows: Vec<(f64, usize)> = (0..self.rows.len())
            .into_par_iter()
            .map(|r| {
                let b = self.b_grid[r];
                self.with_row(r, |lo| {
                    let mut best = (f64::NEG_INFINITY, usize::MAX);
                    for (j, &l) in lo.iter().enumerate() {
                        if l == f64::NEG_INFINITY {
                            continue;
                        }
                        let v = beta * self.quality(b, self.ein[j]) + l;
                        if v > best.0 {
                            best = (v, j);
                        }
                    }
                    best
                })
            })
            .collect();
        let mut br = usize::MAX;
        let mut best = f64::NEG_INFINITY;
        for (r, &(v, _)) in best_rows.iter().enumerate() {
            if v > best {
                best = v;
                br = r;
            }
        }
        if br == usize::MAX {
            return Err(Error::Numeric("all grid cells infeasible".into()));
        }
        let bj = best_rows[br].1;
        let b_lo = if br == 0 { self.b_grid[0] } else { self.b_grid[br - 1] };
        let b_hi = *self.b_grid.get(br + 1).unwrap_or(&self.b_grid[br]);
        let e_lo = if bj == 0 { 0 } else { self.ein[bj - 1] };
        let e_hi = *self.ein.get(bj + 1).unwrap_or(&self.ein[bj]);

        let score = |b: usize, x: u64| beta * self.quality(b, x) + self.log_omega_at(b, x);
        let mut state = (self.b_grid[br], self.ein[bj]);
        let mut value = score(state.0, state.1);
        // coordinate ascent over the local window; each sweep scans one axis fully
        for _ in 0..8 {
            let prev = state;
            let (bb, vb) = (b_lo..=b_hi)
                .into_par_iter()
                .map(|b| (b, score(b, state.1)))
                .reduce(|| (usize::MAX, f64::NEG_INFINITY), |a, c| pick_better(a, c));
            if vb > value {
                state.0 = bb;
                value = vb;
            }
            let (xb, vx) = (e_lo..=e_hi)
                .into_par_iter()
                .map(|x| (x, score(state.0, x)))
                .reduce(|| (u64::MAX, f64::NEG_INFINITY), |a, c| pick_better(a, c));
            if vx > value {
                state.1 = xb;
                value = vx;
            }
            if state == prev {
                break;
            }
        }
        Ok(ArgmaxState {
            w_star: self.quality(state.0, state.1),
            b_star: state.0,
            e_in_star: state.1,
            log_weight: value,
        })
    }

    /// Bins all feasible cells by quality.
    pub fn dos_histogram(&self, bins: usize) -> Result<DosHistogram> {
        if bins < 2 {
            return Err(Error::Domain("histogram needs at least 2 bins".into()));
        }
        let (lo, hi) = self.quality_range();
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
        let per_row: Vec<Vec<f64>> = (0..self.rows.len())
            .into_par_iter()
            .map(|r| {
                let b = self.b_grid[r];
                let lbw = self.ln_b_weight[r];
                self.with_row(r, |lo_row| {
                    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); bins];
                    for (j, &l) in lo_row.iter().enumerate() {
                        if l == f64::NEG_INFINITY {
                            continue;
                        }
                        let w = self.quality(b, self.ein[j]);
                        let k = (((w - lo) / width) as usize).min(bins - 1);
                        buckets[k].push(l + lbw + self.ln_ein_weight[j]);
                    }
                    buckets.iter().map(|v| log_sum_exp_slice(v)).collect()
                })
            })
            .collect();
        let log_xi_b: Vec<Vec<f64>> = (0..bins).map(|k| per_row.iter().map(|row| row[k]).collect()).collect();
        let log_xi = log_xi_b.iter().map(|v| log_sum_exp_slice(v)).collect();
        Ok(DosHistogram { edges, log_xi, log_xi_b, b_values: self.b_grid.clone() })
    }

    /// `ln` of the total weight of all cells, `ln Z(0)`.
    pub fn log_total_mass(&self) -> f64 {
        let rows: Vec<f64> = (0..self.rows.len())
            .into_par_iter()
            .map(|r| {
                let lbw = self.ln_b_weight[r];
                self.with_row(r, |lo| {
                    let xs: Vec<f64> = lo
                        .iter()
                        .zip(&self.ln_ein_weight)
                        .filter(|(l, _)| l.is_finite())
                        .map(|(l, w)| l + w + lbw)
                        .collect();
                    log_sum_exp_slice(&xs)
                })
            })
            .collect();
        log_sum_exp_slice(&rows)
    }

    /// Calls `f(b, e_in, w, ln Ω + ln weight)` for every feasible cell in row-major order.
    pub fn for_each_cell(&self, mut f: impl FnMut(usize, u64, f64, f64)) {
        for r in 0..self.rows.len() {
            let b = self.b_grid[r];
            let lbw = self.ln_b_weight[r];
            self.with_row(r, |lo| {
                for (j, &l) in lo.iter().enumerate() {
                    if l > f64::NEG_INFINITY {
                        f(b, self.ein[j], self.quality(b, self.ein[j]), l + lbw + self.ln_ein_weight[j]);
                    }
                }
            });
        }
    }
}

fn pick_better<T: Copy + PartialOrd>(a: (T, f64), c: (T, f64)) -> (T, f64) {
    // deterministic under any reduction tree: larger value, then smaller key
    if c.1 > a.1 || (c.1 == a.1 && c.0 < a.0) {
        c
    } else {
        a
    }
}

fn make_row(n: u64, e: u64, b: f64, omega: OmegaKind) -> OmegaRow {
    match omega {
        OmegaKind::Plain => OmegaRow::plain(n as f64, b),
        OmegaKind::DegreeCorrected { sum_log_k_factorial } => {
            OmegaRow::degree_corrected(n as f64, e as f64, b, sum_log_k_factorial)
        }
    }
}

//! Sampling problem instances from the planted-partition family.

use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dos::{ArgmaxState, GridConfig, PlantedGrid};
use crate::error::{Error, Result};
use crate::graph::{Graph, Partition};
use crate::quality::Method;
use crate::rng;

/// Provenance of a sampled instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub n: u64,
    pub e: u64,
    pub b_star: usize,
    pub e_in_star: u64,
    pub seed: u64,
    /// `None` for direct planted-partition samples.
    pub beta: Option<f64>,
    pub method: Option<Method>,
    pub gamma: Option<f64>,
    pub w_star: Option<f64>,
    pub min_group_size: usize,
    pub max_group_size: usize,
    /// True when `B` does not divide `N` and sizes differ by one.
    pub unequal_sizes: bool,
}

/// A sampled graph with its planted partition.
#[derive(Debug, Clone)]
pub struct InstanceSample {
    pub graph: Graph,
    pub partition: Partition,
    pub meta: InstanceMeta,
}

impl InstanceSample {
    pub fn write_edges<W: Write>(&self, out: W) -> Result<()> {
        self.graph.write_edge_list(out)
    }

    pub fn write_partition<W: Write>(&self, out: W) -> Result<()> {
        self.partition.write(&self.graph, out)
    }

    pub fn write_meta<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, &self.meta)?;
        writeln!(out)?;
        Ok(())
    }
}

/// Decodes the `t`-th pair `(a, b)`, `a < b`, of `0..size` in row-major order.
fn triangular_pair(size: u64, t: u64) -> (u64, u64) {
    // offset(a) = a (2 size − a − 1) / 2 pairs start before row a
    let offset = |a: u64| a * (2 * size - a - 1) / 2;
    let (mut lo, mut hi) = (0u64, size - 1);
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if offset(mid) <= t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, lo + 1 + (t - offset(lo)))
}

/// Uniform planted-partition sample with exactly `E_in` internal edges.
///
/// Nodes are shuffled and dealt round-robin into `B` groups, so sizes are
/// `⌊N/B⌋` or `⌈N/B⌉`. Internal and external edges are drawn uniformly
/// without replacement from the respective sets of node pairs.
pub fn sample_pp(n: usize, b: usize, e: u64, e_in: u64, seed: u64) -> Result<InstanceSample> {
    if n < 1 || b < 1 || b > n {
        return Err(Error::Domain(format!("need 1 <= B <= N, got B={b}, N={n}")));
    }
    if e_in > e {
        return Err(Error::Domain(format!("E_in={e_in} exceeds E={e}")));
    }
    let mut rng = rng::from_seed(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut labels = vec![0usize; n];
    for (i, &v) in order.iter().enumerate() {
        labels[v] = i % b;
    }
    // members of each group, in the shuffled order
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); b];
    for &v in &order {
        members[labels[v]].push(v);
    }
    let sizes: Vec<u64> = members.iter().map(|m| m.len() as u64).collect();
    let within_total: u64 = sizes.iter().map(|&s| s * s.saturating_sub(1) / 2).sum();
    let all_pairs = n as u64 * (n as u64 - 1) / 2;
    let between_total = all_pairs - within_total;
    if e_in > within_total || e - e_in > between_total {
        return Err(Error::Infeasible(format!(
            "need {e_in} internal / {} external pairs, have {within_total} / {between_total}",
            e - e_in
        )));
    }

    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(e as usize);

    // internal pairs: groups laid end to end
    let mut group_offset = Vec::with_capacity(b + 1);
    group_offset.push(0u64);
    for &s in &sizes {
        group_offset.push(group_offset.last().unwrap() + s * s.saturating_sub(1) / 2);
    }
    for t in sample_indices(&mut rng, within_total, e_in) {
        let r = group_offset.partition_point(|&o| o <= t) - 1;
        let (x, y) = triangular_pair(sizes[r], t - group_offset[r]);
        edges.push((members[r][x as usize], members[r][y as usize]));
    }

    // external pairs: nodes sorted by group; position i pairs with every
    // position in later groups
    let sorted: Vec<usize> = members.iter().flatten().copied().collect();
    let mut group_end = Vec::with_capacity(b);
    let mut acc = 0u64;
    for &s in &sizes {
        acc += s;
        group_end.push(acc);
    }
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0u64);
    let mut pos_end = Vec::with_capacity(n);
    for (r, &s) in sizes.iter().enumerate() {
        for _ in 0..s {
            pos_end.push(group_end[r]);
            cum.push(cum.last().unwrap() + (n as u64 - group_end[r]));
        }
    }
    for t in sample_indices(&mut rng, between_total, e - e_in) {
        let i = cum.partition_point(|&c| c <= t) - 1;
        let j = pos_end[i] + (t - cum[i]);
        edges.push((sorted[i], sorted[j as usize]));
    }

    for edge in edges.iter_mut() {
        if edge.0 > edge.1 {
            *edge = (edge.1, edge.0);
        }
    }
    edges.sort_unstable();
    let graph = Graph::from_edges(n, &edges)?;
    let partition = Partition::new(&labels);
    let min_size = *sizes.iter().min().unwrap() as usize;
    let max_size = *sizes.iter().max().unwrap() as usize;
    Ok(InstanceSample {
        graph,
        partition,
        meta: InstanceMeta {
            n: n as u64,
            e,
            b_star: b,
            e_in_star: e_in,
            seed,
            beta: None,
            method: None,
            gamma: None,
            w_star: None,
            min_group_size: min_size,
            max_group_size: max_size,
            unequal_sizes: min_size != max_size,
        },
    })
}

fn sample_indices(rng: &mut rng::Rng, length: u64, amount: u64) -> Vec<u64> {
    if amount == 0 {
        return Vec::new();
    }
    rand::seq::index::sample(rng, length as usize, amount as usize)
        .into_iter()
        .map(|x| x as u64)
        .collect()
}

/// Samples the most probable planted state of `method`'s implicit model at `β`.
pub fn sample_instance(method: Method, beta: f64, n: usize, e: u64, seed: u64, grid: &GridConfig) -> Result<InstanceSample> {
    let g = PlantedGrid::new(n as u64, e, method, grid)?;
    sample_instance_on(&g, beta, seed)
}

/// As [`sample_instance`] with a prebuilt grid.
pub fn sample_instance_on(grid: &PlantedGrid, beta: f64, seed: u64) -> Result<InstanceSample> {
    let state: ArgmaxState = grid.argmax_state(beta)?;
    let mut s = sample_pp(grid.n() as usize, state.b_star, grid.e(), state.e_in_star, seed)?;
    let method = grid.method();
    s.meta.beta = Some(beta);
    s.meta.method = Some(method);
    s.meta.gamma = method.gamma();
    s.meta.w_star = Some(state.w_star);
    Ok(s)
}

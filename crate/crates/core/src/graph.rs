//! Graphs, partitions, ingestion and block-summary statistics.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected simple graph with dense node indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    node_names: Vec<String>,
}

impl Graph {
    /// Builds a graph on `n` nodes named `"0".."n-1"`.
    ///
    /// Self-loops, duplicate edges and out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        let names = (0..n).map(|i| i.to_string()).collect();
        Graph::with_names(names, edges)
    }

    pub fn with_names(node_names: Vec<String>, edges: &[(usize, usize)]) -> Result<Graph> {
        let n = node_names.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut seen = HashSet::with_capacity(edges.len());
        let mut stored = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Validation(format!("edge ({u}, {v}) outside 0..{n}")));
            }
            if u == v {
                return Err(Error::Validation(format!("self-loop on node {u}")));
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(Error::Validation(format!("duplicate edge ({u}, {v})")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
            stored.push(key);
        }
        Ok(Graph { adjacency, edges: stored, node_names })
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn e(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(min, max)` index pairs in insertion order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    /// Mean degree `2E/N`.
    pub fn avg_degree(&self) -> f64 {
        if self.n() == 0 {
            0.0
        } else {
            2.0 * self.e() as f64 / self.n() as f64
        }
    }

    /// Writes one `u v` line per edge using node names, then one line per
    /// isolated node.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        for &(u, v) in &self.edges {
            writeln!(out, "{} {}", self.node_names[u], self.node_names[v])?;
        }
        for (i, name) in self.node_names.iter().enumerate() {
            if self.adjacency[i].is_empty() {
                writeln!(out, "{name}")?;
            }
        }
        Ok(())
    }
}

/// What to do with self-loops and repeated edges while loading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgePolicy {
    /// Reject the file.
    #[default]
    Strict,
    /// Drop them and count how many were dropped.
    Permissive,
}

/// Counts of lines discarded under [`EdgePolicy::Permissive`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadStats {
    pub dropped_self_loops: usize,
    pub dropped_duplicates: usize,
}

/// Reads a whitespace-separated edge list. `#` starts a comment and a line
/// with a single token declares a (possibly isolated) node.
///
/// Nodes are indexed in order of first appearance.
pub fn load_edge_list<R: BufRead>(reader: R, policy: EdgePolicy) -> Result<(Graph, LoadStats)> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut names: Vec<String> = Vec::new();
    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    let mut stats = LoadStats::default();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let (a, b) = match (tokens.next(), tokens.next(), tokens.next()) {
            (Some(a), Some(b), None) => (a, b),
            (Some(a), None, None) => {
                if !index.contains_key(a) {
                    index.insert(a.to_string(), names.len());
                    names.push(a.to_string());
                }
                continue;
            }
            _ => {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected one or two node tokens, got {content:?}"),
                })
            }
        };
        let mut id = |tok: &str| -> usize {
            if let Some(&i) = index.get(tok) {
                return i;
            }
            let i = names.len();
            names.push(tok.to_string());
            index.insert(tok.to_string(), i);
            i
        };
        let u = id(a);
        let v = id(b);
        if u == v {
            match policy {
                EdgePolicy::Strict => {
                    return Err(Error::Validation(format!("self-loop on {a:?} at line {}", lineno + 1)))
                }
                EdgePolicy::Permissive => {
                    stats.dropped_self_loops += 1;
                    continue;
                }
            }
        }
        if !seen.insert((u.min(v), u.max(v))) {
            match policy {
                EdgePolicy::Strict => {
                    return Err(Error::Validation(format!(
                        "duplicate edge {a:?} {b:?} at line {}",
                        lineno + 1
                    )))
                }
                EdgePolicy::Permissive => {
                    stats.dropped_duplicates += 1;
                    continue;
                }
            }
        }
        edges.push((u, v));
    }
    Ok((Graph::with_names(names, &edges)?, stats))
}

/// Node labels compacted to `0..B` in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    sizes: Vec<usize>,
}

impl Partition {
    /// Compacts arbitrary labels so that the first node is in group 0, the
    /// next new label becomes group 1, and so on.
    pub fn new(raw: &[usize]) -> Partition {
        let mut map: HashMap<usize, usize> = HashMap::new();
        let mut labels = Vec::with_capacity(raw.len());
        let mut sizes = Vec::new();
        for &r in raw {
            let next = map.len();
            let l = *map.entry(r).or_insert(next);
            if l == sizes.len() {
                sizes.push(0);
            }
            sizes[l] += 1;
            labels.push(l);
        }
        Partition { labels, sizes }
    }

    /// Everyone in one group.
    pub fn trivial(n: usize) -> Partition {
        Partition::new(&vec![0; n])
    }

    /// Every node alone.
    pub fn singletons(n: usize) -> Partition {
        Partition::new(&(0..n).collect::<Vec<_>>())
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Number of nonempty groups.
    pub fn num_groups(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Writes `name<TAB>label` lines.
    pub fn write<W: Write>(&self, graph: &Graph, mut out: W) -> Result<()> {
        if graph.n() != self.n() {
            return Err(Error::SizeMismatch(format!(
                "partition covers {} nodes, graph has {}",
                self.n(),
                graph.n()
            )));
        }
        for (name, l) in graph.node_names().iter().zip(&self.labels) {
            writeln!(out, "{name}\t{l}")?;
        }
        Ok(())
    }
}

/// Reads a partition file.
///
/// Either one label per line in node order, or `node<TAB>label` pairs that
/// are matched against the graph's node names. Labels may be any tokens;
/// they are compacted on load.
pub fn load_partition<R: BufRead>(reader: R, graph: &Graph) -> Result<Partition> {
    let mut rows: Vec<(usize, Option<String>, String)> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        match tokens.as_slice() {
            [label] => rows.push((lineno + 1, None, label.to_string())),
            [node, label] => rows.push((lineno + 1, Some(node.to_string()), label.to_string())),
            _ => {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected `label` or `node label`, got {content:?}"),
                })
            }
        }
    }
    let paired = rows.iter().filter(|r| r.1.is_some()).count();
    if paired != 0 && paired != rows.len() {
        return Err(Error::Validation("partition file mixes paired and unpaired lines".into()));
    }
    let mut label_ids: HashMap<String, usize> = HashMap::new();
    let mut intern = |s: &str| {
        let next = label_ids.len();
        *label_ids.entry(s.to_string()).or_insert(next)
    };
    let raw: Vec<usize> = if paired == 0 {
        if rows.len() != graph.n() {
            return Err(Error::SizeMismatch(format!(
                "partition has {} labels, graph has {} nodes",
                rows.len(),
                graph.n()
            )));
        }
        rows.iter().map(|r| intern(&r.2)).collect()
    } else {
        let index: HashMap<&str, usize> =
            graph.node_names().iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut raw = vec![usize::MAX; graph.n()];
        for (line, node, label) in &rows {
            let node = node.as_deref().unwrap_or_default();
            let &i = index.get(node).ok_or_else(|| Error::Validation(format!(
                "unknown node {node:?} at line {line}"
            )))?;
            if raw[i] != usize::MAX {
                return Err(Error::Validation(format!("node {node:?} labelled twice (line {line})")));
            }
            raw[i] = intern(label);
        }
        if let Some(i) = raw.iter().position(|&l| l == usize::MAX) {
            return Err(Error::Validation(format!(
                "node {:?} has no label",
                graph.node_names()[i]
            )));
        }
        raw
    };
    Ok(Partition::new(&raw))
}

/// Sufficient statistics of a partitioned graph.
///
/// `e_rr[r]` counts edge endpoints inside group `r` (each internal edge
/// twice), `e_r[r]` is the degree sum of group `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSummary {
    pub b: usize,
    pub e: u64,
    pub e_in: u64,
    pub e_rr: Vec<u64>,
    pub e_r: Vec<u64>,
    pub n_r: Vec<u64>,
}

impl BlockSummary {
    /// Total node count `Σ n_r`.
    pub fn n(&self) -> u64 {
        self.n_r.iter().sum()
    }

    /// Checks the structural invariants.
    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Validation(format!("block summary: {m}")));
        if self.e_rr.len() != self.b || self.e_r.len() != self.b || self.n_r.len() != self.b {
            return bad("vector lengths differ from B");
        }
        if self.e_rr.iter().any(|x| x % 2 == 1) {
            return bad("odd e_rr");
        }
        if self.e_rr.iter().sum::<u64>() != 2 * self.e_in {
            return bad("sum of e_rr differs from 2 E_in");
        }
        if self.e_r.iter().sum::<u64>() != 2 * self.e {
            return bad("sum of e_r differs from 2E");
        }
        if self.e_in > self.e {
            return bad("E_in > E");
        }
        if self.e_rr.iter().zip(&self.e_r).any(|(a, b)| a > b) {
            return bad("e_rr > e_r");
        }
        Ok(())
    }
}

/// One pass over the edges.
pub fn block_summary(g: &Graph, p: &Partition) -> Result<BlockSummary> {
    if p.n() != g.n() {
        return Err(Error::SizeMismatch(format!(
            "partition covers {} nodes, graph has {}",
            p.n(),
            g.n()
        )));
    }
    let b = p.num_groups();
    let mut e_rr = vec![0u64; b];
    let mut e_r = vec![0u64; b];
    let mut e_in = 0u64;
    for &(u, v) in g.edges() {
        let (ru, rv) = (p.label(u), p.label(v));
        if ru >= b || rv >= b {
            return Err(Error::Validation(format!("label out of range on edge ({u}, {v})")));
        }
        e_r[ru] += 1;
        e_r[rv] += 1;
        if ru == rv {
            e_rr[ru] += 2;
            e_in += 1;
        }
    }
    let n_r = p.sizes().iter().map(|&s| s as u64).collect();
    Ok(BlockSummary { b, e: g.e() as u64, e_in, e_rr, e_r, n_r })
}

/// Degree sequence and histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeStats {
    pub k: Vec<u64>,
    /// `eta_k[k]` = number of nodes of degree `k`.
    pub eta_k: BTreeMap<u64, u64>,
    pub e: u64,
}

impl DegreeStats {
    pub fn n(&self) -> u64 {
        self.k.len() as u64
    }

    /// `Σ_i ln k_i!`.
    pub fn sum_log_k_factorial(&self) -> f64 {
        self.eta_k
            .iter()
            .map(|(&k, &c)| c as f64 * crate::numeric::ln_fact(k as f64))
            .sum()
    }

    /// `Σ_k ln η_k!`.
    pub fn sum_log_eta_factorial(&self) -> f64 {
        self.eta_k.values().map(|&c| crate::numeric::ln_fact(c as f64)).sum()
    }
}

pub fn degree_stats(g: &Graph) -> DegreeStats {
    let k: Vec<u64> = g.degrees().into_iter().map(|d| d as u64).collect();
    let mut eta_k = BTreeMap::new();
    for &d in &k {
        *eta_k.entry(d).or_insert(0) += 1;
    }
    DegreeStats { k, eta_k, e: g.e() as u64 }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_triangles() -> Graph {
        Graph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]).unwrap()
    }

    #[test]
    fn load_simple_list() {
        let (g, stats) = load_edge_list("a b\nb c".as_bytes(), EdgePolicy::Strict).unwrap();
        assert_eq!((g.n(), g.e()), (3, 2));
        assert_eq!(g.node_names(), ["a", "b", "c"]);
        assert_eq!(stats, LoadStats::default());
    }

    #[test]
    fn isolated_nodes_round_trip() {
        let g = Graph::from_edges(4, &[(0, 2)]).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "0 2\n1\n3\n");
        let (h, _) = load_edge_list(buf.as_slice(), EdgePolicy::Strict).unwrap();
        assert_eq!((h.n(), h.e()), (4, 1));
        assert_eq!(h.node_names(), ["0", "2", "1", "3"]);
        assert_eq!(h.degree(2), 0);
    }

    #[test]
    fn self_loop_policy() {
        assert!(matches!(
            load_edge_list("a a".as_bytes(), EdgePolicy::Strict),
            Err(Error::Validation(_))
        ));
        let (g, stats) = load_edge_list("a a\na b\nb a\n".as_bytes(), EdgePolicy::Permissive).unwrap();
        assert_eq!(g.e(), 1);
        assert_eq!(stats.dropped_self_loops, 1);
        assert_eq!(stats.dropped_duplicates, 1);
        assert!(load_edge_list("a b\nb a".as_bytes(), EdgePolicy::Strict).is_err());
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = load_edge_list("# header\na b\nc d e\n".as_bytes(), EdgePolicy::Strict).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(load_edge_list("a b c d".as_bytes(), EdgePolicy::Strict).is_err());
    }

    #[test]
    fn two_triangle_fixture_from_text() {
        let text = "0 1\n1 2\n0 2\n3 4\n4 5\n3 5\n2 3\n";
        let (g, _) = load_edge_list(text.as_bytes(), EdgePolicy::Strict).unwrap();
        assert_eq!((g.n(), g.e()), (6, 7));
    }

    #[test]
    fn two_triangle_summary() {
        let g = two_triangles();
        let p = Partition::new(&[0, 0, 0, 1, 1, 1]);
        let s = block_summary(&g, &p).unwrap();
        assert_eq!(s.b, 2);
        assert_eq!(s.e_in, 6);
        assert_eq!(s.e_rr, vec![6, 6]);
        assert_eq!(s.e_r, vec![7, 7]);
        assert_eq!(s.n_r, vec![3, 3]);
        s.check().unwrap();
    }

    #[test]
    fn single_group_and_edgeless() {
        let g = two_triangles();
        let s = block_summary(&g, &Partition::trivial(6)).unwrap();
        assert_eq!(s.e_in, 7);
        assert_eq!(s.e_r, vec![14]);
        let empty = Graph::from_edges(4, &[]).unwrap();
        let s = block_summary(&empty, &Partition::new(&[0, 1, 0, 2])).unwrap();
        assert_eq!(s.e_in, 0);
        assert!(s.e_r.iter().all(|&x| x == 0));
    }

    #[test]
    fn summary_rejects_wrong_size() {
        let g = two_triangles();
        assert!(matches!(
            block_summary(&g, &Partition::trivial(5)),
            Err(Error::SizeMismatch(_))
        ));
    }

    #[test]
    fn degree_histograms() {
        let ds = degree_stats(&two_triangles());
        assert_eq!(ds.eta_k.get(&2), Some(&4));
        assert_eq!(ds.eta_k.get(&3), Some(&2));
        let ring = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        assert_eq!(degree_stats(&ring).eta_k.get(&2), Some(&5));
        let star = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let ds = degree_stats(&star);
        assert_eq!(ds.eta_k.get(&1), Some(&3));
        assert_eq!(ds.eta_k.get(&3), Some(&1));
        assert_eq!(ds.eta_k.values().sum::<u64>(), 4);
        assert_eq!(ds.eta_k.iter().map(|(k, c)| k * c).sum::<u64>(), 6);
    }

    #[test]
    fn partition_compaction() {
        let p = Partition::new(&[7, 7, 3, 9, 3]);
        assert_eq!(p.labels(), &[0, 0, 1, 2, 1]);
        assert_eq!(p.sizes(), &[2, 2, 1]);
        assert_eq!(p.num_groups(), 3);
    }

    #[test]
    fn partition_file_formats() {
        let g = two_triangles();
        let p = load_partition("a\na\na\nb\nb\nb\n".as_bytes(), &g).unwrap();
        assert_eq!(p.labels(), &[0, 0, 0, 1, 1, 1]);
        let p = load_partition("5\tx\n4\tx\n3\tx\n0\ty\n1\ty\n2\ty\n".as_bytes(), &g).unwrap();
        assert_eq!(p.labels(), &[0, 0, 0, 1, 1, 1]);
        assert!(load_partition("a\nb\n".as_bytes(), &g).is_err());
        assert!(load_partition("0 a\n1\n".as_bytes(), &g).is_err());
        let mut buf = Vec::new();
        p.write(&g, &mut buf).unwrap();
        let again = load_partition(buf.as_slice(), &g).unwrap();
        assert_eq!(again, p);
    }
}

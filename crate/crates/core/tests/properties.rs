use std::collections::BTreeMap;

use proptest::prelude::*;

use blockdl::dos::{GridConfig, PlantedGrid};
use blockdl::graph::{block_summary, Graph, Partition};
use blockdl::instances::sample_pp;
use blockdl::mdl::{description_length, sigma_at_beta, DlOptions};
use blockdl::metrics::{ami, kl_estimate, max_overlap};
use blockdl::numeric::log_binomial;
use blockdl::quality::{l_pp_real, q_pp, l_pp, Method};

fn graph_and_partition() -> impl Strategy<Value = (Graph, Partition)> {
    (2usize..12).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let m = pairs.len();
        (
            proptest::collection::vec(any::<bool>(), m),
            proptest::collection::vec(0usize..n, n),
        )
            .prop_map(move |(keep, labels)| {
                let edges: Vec<_> = pairs.iter().zip(&keep).filter(|(_, k)| **k).map(|(p, _)| *p).collect();
                (Graph::from_edges(n, &edges).unwrap(), Partition::new(&labels))
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn block_summary_invariants((g, p) in graph_and_partition()) {
        let s = block_summary(&g, &p).unwrap();
        s.check().unwrap();
        prop_assert_eq!(s.n() as usize, g.n());
        prop_assert_eq!(s.b, p.num_groups());
    }
}

proptest! {
    #[test]
    fn binomial_symmetry(n in 0u64..5000, k_frac in 0.0f64..=1.0) {
        let k = (n as f64 * k_frac).floor();
        let a = log_binomial(n as f64, k).unwrap();
        let b = log_binomial(n as f64, n as f64 - k).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn modularity_is_label_invariant((g, p) in graph_and_partition(), gamma in 0.1f64..5.0, shift in 1usize..7) {
        prop_assume!(g.e() > 0);
        let relabelled: Vec<usize> = p.labels().iter().map(|&l| (l * 7 + shift) % 97 + 3).collect();
        let q = Method::modularity(gamma).unwrap();
        let a = q.score(&block_summary(&g, &p).unwrap()).unwrap();
        let b = q.score(&block_summary(&g, &Partition::new(&relabelled)).unwrap()).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        let a = Method::infomap().score(&block_summary(&g, &p).unwrap()).unwrap();
        let b = Method::infomap().score(&block_summary(&g, &Partition::new(&relabelled)).unwrap()).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn overlap_and_ami_are_symmetric(
        a in proptest::collection::vec(0usize..5, 1..40),
        seed in 0usize..1000,
    ) {
        let b: Vec<usize> = a.iter().enumerate().map(|(i, &x)| (x + (i * 31 + seed) % 3) % 6).collect();
        let (pa, pb) = (Partition::new(&a), Partition::new(&b));
        let o1 = max_overlap(&pa, &pb).unwrap();
        let o2 = max_overlap(&pb, &pa).unwrap();
        prop_assert!((o1 - o2).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&o1));
        let m1 = ami(&pa, &pb).unwrap();
        let m2 = ami(&pb, &pa).unwrap();
        prop_assert!((m1 - m2).abs() < 1e-9);
        prop_assert!(m1 <= 1.0 + 1e-12);
    }
}

#[test]
fn l_pp_monotone_on_dense_grid() {
    let e = 1.0e5;
    for &b in &[1.0, 2.0, 3.0, 10.0, 57.0, 300.0, 1000.0, 10_000.0] {
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=2000 {
            let x = i as f64 / 2000.0;
            let v = l_pp_real(x * e, e, b);
            assert!(v >= prev - 1e-12, "B={b} x={x}");
            prev = v;
        }
    }
}

#[test]
fn log_z_is_convex_with_mean_as_slope() {
    let grid = PlantedGrid::new(500, 1500, Method::modularity(1.0).unwrap(), &GridConfig::default()).unwrap();
    for &beta in &[0.0f64, 500.0, 2000.0, 5000.0, 20000.0] {
        let h = 1e-3 * beta.max(1.0);
        let (lm, l0, lp) = (
            grid.log_partition_function(beta - h).unwrap(),
            grid.log_partition_function(beta).unwrap(),
            grid.log_partition_function(beta + h).unwrap(),
        );
        let slope = (lp - lm) / (2.0 * h);
        let mean = grid.mean_quality(beta).unwrap();
        assert!((slope - mean).abs() <= 1e-4 * mean.abs().max(1e-3), "beta={beta}: {slope} vs {mean}");
        assert!(lp - 2.0 * l0 + lm >= -1e-8);
    }
}

#[test]
fn stride_halving_barely_moves_log_z() {
    let (n, e) = (10_000u64, 50_000u64);
    let m = Method::modularity(1.0).unwrap();
    let coarse = PlantedGrid::new(n, e, m, &GridConfig::default()).unwrap();
    let fine = PlantedGrid::new(n, e, m, &GridConfig { ein_stride: Some(coarse.ein_stride() / 2), ..Default::default() }).unwrap();
    for &beta in &[0.0, 1.0e4, 1.5e5, 3.0e5] {
        let a = coarse.log_partition_function(beta).unwrap();
        let b = fine.log_partition_function(beta).unwrap();
        assert!((a - b).abs() < 1e-3 * a.abs(), "beta={beta}: {a} vs {b}");
    }
}

#[test]
fn sigma_is_minimal_at_beta_star() {
    let s = sample_pp(300, 5, 900, 700, 3).unwrap();
    for m in [Method::modularity(1.0).unwrap(), Method::infomap()] {
        let report = description_length(&s.graph, &s.partition, m, &DlOptions::default()).unwrap();
        let grid = PlantedGrid::new(300, 900, m, &GridConfig::default()).unwrap();
        let b = report.beta_star;
        let at = sigma_at_beta(&grid, report.w, b).unwrap();
        for d in [0.01, 0.1] {
            for sign in [-1.0, 1.0] {
                let other = sigma_at_beta(&grid, report.w, b + sign * d * b.abs()).unwrap();
                assert!(at <= other + 1e-9, "{m}: {at} > {other}");
            }
        }
    }
}

#[test]
fn sigma_orders_partitions_by_quality_at_fixed_beta() {
    let s = sample_pp(200, 4, 600, 450, 8).unwrap();
    let worse: Vec<usize> = s.partition.labels().iter().enumerate().map(|(i, &l)| if i % 5 == 0 { (l + 1) % 4 } else { l }).collect();
    let worse = Partition::new(&worse);
    let m = Method::modularity(1.0).unwrap();
    let w1 = m.score(&block_summary(&s.graph, &s.partition).unwrap()).unwrap();
    let w2 = m.score(&block_summary(&s.graph, &worse).unwrap()).unwrap();
    assert!(w1 > w2);
    let plain = PlantedGrid::new(200, 600, m, &GridConfig::default()).unwrap();
    let dc = PlantedGrid::new_dc(m.with_dc(true), &blockdl::graph::degree_stats(&s.graph), &GridConfig::default()).unwrap();
    for grid in [&plain, &dc] {
        for beta in [10.0, 300.0, 3000.0] {
            assert!(sigma_at_beta(grid, w1, beta).unwrap() < sigma_at_beta(grid, w2, beta).unwrap());
        }
    }
}

#[test]
fn sampled_quality_matches_planted_form() {
    // the planted forms ignore O(1/E) fluctuations of the group degree sums,
    // so the comparison carries that allowance on top of 3 standard errors
    for &(n, b, e, e_in) in &[(1000usize, 10usize, 5000u64, 4000u64), (200, 4, 600, 400)] {
        for m in [Method::modularity(1.0).unwrap(), Method::infomap()] {
            let ws: Vec<f64> = (0..100)
                .map(|sd| {
                    let x = sample_pp(n, b, e, e_in, sd).unwrap();
                    m.score(&block_summary(&x.graph, &x.partition).unwrap()).unwrap()
                })
                .collect();
            let mean = ws.iter().sum::<f64>() / 100.0;
            let var = ws.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / 99.0;
            let se = (var / 100.0).sqrt();
            let target = match m.gamma() {
                Some(g) => q_pp(e_in, e, b as u64, g),
                None => l_pp(e_in, e, b as u64),
            };
            assert!((mean - target).abs() <= 3.0 * se + 1.5 / e as f64, "{m}: {mean} vs {target} (se {se})");
        }
    }
}

#[test]
fn conditional_group_count_does_not_depend_on_beta() {
    let grid = PlantedGrid::new(6, 4, Method::modularity(1.0).unwrap(), &GridConfig::default()).unwrap();
    let by_w = |beta: f64| {
        let mut cells: BTreeMap<(i64, usize), f64> = BTreeMap::new();
        grid.for_each_cell(|b, _, w, l| {
            *cells.entry(((w * 1e9).round() as i64, b)).or_insert(0.0) += (beta * w + l).exp();
        });
        let mut totals: BTreeMap<i64, f64> = BTreeMap::new();
        for (&(w, _), &x) in &cells {
            *totals.entry(w).or_insert(0.0) += x;
        }
        cells.iter().map(|(&(w, b), &x)| ((w, b), x / totals[&w])).collect::<BTreeMap<_, _>>()
    };
    let (a, c) = (by_w(0.0), by_w(7.0));
    for (k, v) in &a {
        assert!((v - c[k]).abs() < 1e-12);
    }
}

#[test]
fn kl_standard_error_shrinks_with_samples() {
    let sampler = |sd: u64| {
        let s = sample_pp(120, 3, 300, 150 + sd % 101, sd)?;
        Ok((s.graph, s.partition))
    };
    let fp = |g: &Graph, p: &Partition| blockdl::mdl::sigma_pp(g, p);
    let fq = |g: &Graph, _: &Partition| blockdl::mdl::sigma_er(g.n() as u64, g.e() as u64);
    let small = kl_estimate(sampler, fp, fq, 50, 3).unwrap();
    let large = kl_estimate(sampler, fp, fq, 200, 4).unwrap();
    let ratio = small.std_err / large.std_err;
    assert!((1.3..3.0).contains(&ratio), "ratio {ratio}");
}

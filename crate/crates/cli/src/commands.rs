use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use blockdl::dos::{GridConfig, PlantedGrid};
use blockdl::graph::{block_summary, load_edge_list, load_partition, EdgePolicy, Graph, LoadStats, Partition};
use blockdl::instances::{sample_instance, sample_pp, InstanceSample};
use blockdl::mdl::{description_length, grid_for, sigma_at_beta, sigma_cm, sigma_er, sigma_pp, solve_beta, DegreePrior, DlOptions};
use blockdl::optimizer::{default_gamma_grid, effective_b, gamma_scan, log_spaced, maximize_quality, Init, OptimizerConfig};
use blockdl::priors::{feasibility_curve, locate_transition, prior_curves, Transition, JUMP_RATIO};
use blockdl::quality::Method;
use blockdl::validation::{appendix_l_variance, appendix_q_moments, LGrid, MIN_Q_TRIALS};

use crate::args::*;
use crate::error::CliError;
use crate::output::{num, opt, Report, Table};

pub type Res<T> = Result<T, CliError>;

/// Checks flag values shared by all subcommands.
pub fn check_common(c: &Common) -> Res<()> {
    if !(c.gamma > 0.0) || !c.gamma.is_finite() {
        return Err(CliError::Usage(format!("--gamma must be positive, got {}", c.gamma)));
    }
    if let Some(b) = c.beta_max {
        if !(b > 0.0) || !b.is_finite() {
            return Err(CliError::Usage(format!("--beta-max must be positive, got {b}")));
        }
    }
    if c.bmax == Some(0) {
        return Err(CliError::Usage("--bmax must be at least 1".into()));
    }
    if c.ein_stride == Some(0) {
        return Err(CliError::Usage("--ein-stride must be at least 1".into()));
    }
    if c.restarts == 0 {
        return Err(CliError::Usage("--restarts must be at least 1".into()));
    }
    Ok(())
}

fn grid_config(c: &Common) -> GridConfig {
    GridConfig { b_max: c.bmax, ein_stride: c.ein_stride, ..Default::default() }
}

fn dl_options(c: &Common, allow_negative_beta: bool) -> DlOptions {
    DlOptions {
        grid: grid_config(c),
        beta_max: c.beta_max,
        allow_negative_beta,
        degree_prior: if c.flat_degree_prior { DegreePrior::Flat } else { DegreePrior::Hierarchical },
    }
}

fn opt_config(c: &Common) -> OptimizerConfig {
    OptimizerConfig { restarts: c.restarts, seed: c.seed, ..Default::default() }
}

/// The quality method selected by the flags; `pp` has none.
fn quality_method(c: &Common, what: &str) -> Res<Method> {
    let m = match c.method {
        MethodArg::Modularity => Method::modularity(c.gamma).map_err(|e| CliError::Usage(e.to_string()))?,
        MethodArg::Infomap => Method::infomap(),
        MethodArg::Pp => return Err(CliError::Usage(format!("{what} needs a quality function; use --method modularity or infomap"))),
    };
    Ok(m.with_dc(c.dc))
}

fn open(path: &Path) -> Res<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_graph(path: &Path, permissive: bool) -> Res<(Graph, LoadStats)> {
    let policy = if permissive { EdgePolicy::Permissive } else { EdgePolicy::Strict };
    Ok(load_edge_list(open(path)?, policy)?)
}

fn load_labels(path: &Path, g: &Graph) -> Res<Partition> {
    Ok(load_partition(open(path)?, g)?)
}

fn create(path: &Path) -> Res<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

fn write_partition(path: &Path, p: &Partition, g: &Graph) -> Res<()> {
    let mut w = create(path)?;
    p.write(g, &mut w)?;
    w.flush().map_err(|e| CliError::Output(e.to_string()))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s: OsString = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn pairs(n: u64) -> f64 {
    n as f64 * (n as f64 - 1.0) / 2.0
}

fn labels_json(g: &Graph, p: &Partition) -> Value {
    let map: Map<String, Value> = g.node_names().iter().zip(p.labels()).map(|(n, &l)| (n.clone(), json!(l))).collect();
    Value::Object(map)
}

pub fn dl(c: &Common, a: &DlArgs) -> Res<Report> {
    let (g, stats) = load_graph(&a.edges, a.permissive)?;
    let p = load_labels(&a.partition, &g)?;
    let mut t = Table::new(&[
        "method", "gamma", "dc", "n", "e", "b", "e_in", "w", "beta_star", "sigma_nats", "sigma_er", "sigma_cm", "exceeds_er", "exceeds_cm", "flags",
    ]);
    let report = if c.method == MethodArg::Pp {
        let s = block_summary(&g, &p)?;
        let sigma = sigma_pp(&g, &p)?;
        let er = sigma_er(g.n() as u64, g.e() as u64)?;
        let cm = sigma_cm(&g)?;
        t.push(vec![
            "pp".into(),
            String::new(),
            "false".into(),
            g.n().to_string(),
            g.e().to_string(),
            s.b.to_string(),
            s.e_in.to_string(),
            String::new(),
            String::new(),
            num(sigma),
            num(er),
            num(cm),
            (sigma > er).to_string(),
            (sigma > cm).to_string(),
            String::new(),
        ]);
        json!({
            "method": { "method": "pp" },
            "sigma_nats": sigma,
            "n": g.n(),
            "e": g.e(),
            "b": s.b,
            "e_in": s.e_in,
            "baselines": { "sigma_er": er, "sigma_cm": cm },
            "overfit": { "exceeds_er": sigma > er, "exceeds_cm": sigma > cm },
        })
    } else {
        let m = quality_method(c, "dl")?;
        let r = description_length(&g, &p, m, &dl_options(c, a.allow_negative_beta))?;
        t.push(vec![
            m.name().into(),
            opt(m.gamma()),
            m.degree_corrected.to_string(),
            r.n.to_string(),
            r.e.to_string(),
            r.b.to_string(),
            r.e_in.to_string(),
            num(r.w),
            num(r.beta_star),
            num(r.sigma_nats),
            num(r.baselines.sigma_er),
            num(r.baselines.sigma_cm),
            r.overfit.exceeds_er.to_string(),
            r.overfit.exceeds_cm.to_string(),
            r.flags.join(";"),
        ]);
        serde_json::to_value(&r).map_err(blockdl::Error::from)?
    };
    Report::new(json!({ "report": report, "load": stats }), t)
}

/// `(grid, N, E)` for the ensemble flags.
fn ensemble(c: &Common, a: &EnsembleArgs, m: Method) -> Res<(PlantedGrid, Map<String, Value>)> {
    let cfg = grid_config(c);
    let grid = match (&a.graph, a.n, a.avg_k) {
        (Some(path), None, None) => {
            let (g, _) = load_graph(path, false)?;
            grid_for(&g, m, &cfg)?
        }
        (None, Some(n), Some(k)) => {
            if m.degree_corrected {
                return Err(CliError::Usage("--dc needs --graph to supply a degree sequence".into()));
            }
            if n < 2 || !(k > 0.0) || !k.is_finite() {
                return Err(CliError::Usage(format!("need N >= 2 and a positive mean degree, got N={n} k={k}")));
            }
            let e = (n as f64 * k / 2.0).round() as u64;
            if e < 1 || e as f64 > pairs(n) {
                return Err(CliError::Usage(format!("E={e} is outside [1, C(N,2)] for N={n}")));
            }
            PlantedGrid::new(n, e, m, &cfg)?
        }
        _ => return Err(CliError::Usage("give either --graph or both --n and --avg-k".into())),
    };
    let mut resolved = Map::new();
    resolved.insert("n".into(), json!(grid.n()));
    resolved.insert("e".into(), json!(grid.e()));
    resolved.insert("b_max".into(), json!(grid.b_grid().last()));
    resolved.insert("ein_stride".into(), json!(grid.ein_stride()));
    Ok((grid, resolved))
}

fn beta_values(b: &BetaGrid, n: u64) -> Res<Vec<f64>> {
    let per_node = match &b.beta_over_n {
        Some(v) => {
            if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                return Err(CliError::Usage("--beta-over-n needs finite values".into()));
            }
            v.clone()
        }
        None => {
            if !(b.lo > 0.0) || !(b.hi > b.lo) || b.points < 2 {
                return Err(CliError::Usage(format!("need 0 < lo < hi and points >= 2, got {} {} {}", b.lo, b.hi, b.points)));
            }
            log_spaced(b.lo, b.hi, b.points)
        }
    };
    Ok(per_node.iter().map(|x| x * n as f64).collect())
}

#[derive(Serialize)]
struct DosRow {
    w: f64,
    log_density: f64,
    beta_star: f64,
    sigma: f64,
    clamped: bool,
}

pub fn dos(c: &Common, a: &DosArgs) -> Res<(Report, Map<String, Value>)> {
    let m = quality_method(c, "dos")?;
    if a.bins < 2 {
        return Err(CliError::Usage("--bins must be at least 2".into()));
    }
    let (grid, resolved) = ensemble(c, &a.ensemble, m)?;
    let er = sigma_er(grid.n(), grid.e())?;
    let hist = grid.dos_histogram(a.bins)?;
    let (lo, hi) = dl_options(c, false).beta_bounds(grid.n());
    let centers = hist.centers();
    let rows: Vec<DosRow> = centers
        .par_iter()
        .zip(hist.log_xi.par_iter())
        .filter(|(_, l)| l.is_finite())
        .map(|(&w, &l)| {
            let sol = solve_beta(&grid, w, lo, hi)?;
            let sigma = sigma_at_beta(&grid, w, sol.beta)?;
            Ok(DosRow {
                w,
                log_density: l,
                beta_star: sol.beta,
                sigma: if a.relative_to_er { sigma - er } else { sigma },
                clamped: sol.clamped_low || sol.clamped_high,
            })
        })
        .collect::<blockdl::Result<_>>()?;
    let sigma_col = if a.relative_to_er { "sigma_minus_er" } else { "sigma" };
    let mut t = Table::new(&["w", "log_density", "beta_star", sigma_col, "clamped"]);
    for r in &rows {
        t.push(vec![num(r.w), num(r.log_density), num(r.beta_star), num(r.sigma), r.clamped.to_string()]);
    }
    let result = json!({
        "n": grid.n(),
        "e": grid.e(),
        "method": m,
        "sigma_er": er,
        "relative_to_er": a.relative_to_er,
        "rows": rows,
    });
    Ok((Report::new(result, t)?, resolved))
}

/// First consecutive pair of `betas` across which `B_star` jumps, refined.
fn find_transition(grid: &PlantedGrid, betas: &[f64]) -> Res<Option<Transition>> {
    let mut sorted = betas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let states = sorted.iter().map(|&b| grid.argmax_state(b)).collect::<blockdl::Result<Vec<_>>>()?;
    for i in 0..sorted.len().saturating_sub(1) {
        let (a, b) = (states[i].b_star as f64, states[i + 1].b_star as f64);
        if a.max(b) / a.min(b) >= JUMP_RATIO {
            return Ok(Some(locate_transition(grid, (sorted[i], sorted[i + 1]))?));
        }
    }
    Ok(None)
}

pub fn priors(c: &Common, a: &PriorsArgs) -> Res<(Report, Map<String, Value>)> {
    let m = quality_method(c, "priors")?;
    if a.w_bins < 1 {
        return Err(CliError::Usage("--w-bins must be at least 1".into()));
    }
    let (grid, mut resolved) = ensemble(c, &a.ensemble, m)?;
    let betas = beta_values(&a.betas, grid.n())?;
    resolved.insert("betas".into(), json!(betas));
    let curve = prior_curves(&grid, &betas, a.w_bins)?;
    let transition = if a.transition { find_transition(&grid, &betas)? } else { None };
    let n = grid.n() as f64;
    let mut t = Table::new(&["beta", "beta_over_n", "mean_w", "mean_b", "b", "log_density_b"]);
    for (i, &beta) in curve.betas.iter().enumerate() {
        for (&b, ld) in curve.b_values.iter().zip(curve.log_density_b(i)) {
            t.push(vec![num(beta), num(beta / n), num(curve.mean_w[i]), num(curve.mean_b[i]), b.to_string(), num(ld)]);
        }
    }
    let result = json!({
        "n": grid.n(),
        "e": grid.e(),
        "method": m,
        "curve": curve,
        "transition": transition.map(|t| json!({
            "beta_star": t.beta_star,
            "beta_star_over_n": t.beta_star / n,
            "below": t.below,
            "above": t.above,
        })),
    });
    Ok((Report::new(result, t)?, resolved))
}

pub fn feasibility(c: &Common, a: &FeasibilityArgs) -> Res<(Report, Map<String, Value>)> {
    let methods: Vec<Method> = match c.method {
        MethodArg::Modularity => {
            if a.gammas.is_empty() {
                return Err(CliError::Usage("--gammas is empty".into()));
            }
            a.gammas
                .iter()
                .map(|&g| Method::modularity(g).map_err(|e| CliError::Usage(e.to_string())))
                .collect::<Res<_>>()?
        }
        MethodArg::Infomap => vec![Method::infomap()],
        MethodArg::Pp => return Err(CliError::Usage("feasibility needs a quality function".into())),
    };
    let (base, mut resolved) = ensemble(c, &a.ensemble, methods[0])?;
    let betas = beta_values(&a.betas, base.n())?;
    resolved.insert("betas".into(), json!(betas));
    let n = base.n();
    let avg_k = 2.0 * base.e() as f64 / n as f64;
    let curves = methods.iter().map(|&m| feasibility_curve(&base.with_method(m), &betas)).collect::<blockdl::Result<Vec<_>>>()?;
    let mut t = Table::new(&[
        "gamma", "beta", "beta_over_n", "b_star", "e_in_star", "w_star", "ein_fraction", "detectability", "finite_b", "above_detectability",
    ]);
    for curve in &curves {
        for p in &curve.points {
            t.push(vec![
                opt(curve.gamma),
                num(p.beta),
                num(p.beta / n as f64),
                p.b_star.to_string(),
                p.e_in_star.to_string(),
                num(p.w_star),
                num(p.ein_fraction),
                num(p.detectability),
                ((p.b_star as u64) < n / 2).to_string(),
                (p.ein_fraction > p.detectability).to_string(),
            ]);
        }
    }
    let result = json!({ "n": n, "e": base.e(), "avg_k": avg_k, "curves": curves });
    Ok((Report::new(result, t)?, resolved))
}

pub fn sample(c: &Common, a: &SampleArgs) -> Res<(Report, Map<String, Value>)> {
    if a.n < 2 || !(a.avg_k > 0.0) || !a.avg_k.is_finite() {
        return Err(CliError::Usage(format!("need N >= 2 and a positive mean degree, got N={} k={}", a.n, a.avg_k)));
    }
    let e = (a.n as f64 * a.avg_k / 2.0).round() as u64;
    if e < 1 || e as f64 > pairs(a.n) {
        return Err(CliError::Usage(format!("E={e} is outside [1, C(N,2)] for N={}", a.n)));
    }
    let mut resolved = Map::new();
    resolved.insert("e".into(), json!(e));
    let s: InstanceSample = if c.method == MethodArg::Pp {
        let (Some(b), Some(e_in)) = (a.b, a.e_in) else {
            return Err(CliError::Usage("--method pp needs --b and --e-in".into()));
        };
        sample_pp(a.n as usize, b, e, e_in, c.seed)?
    } else {
        if a.b.is_some() || a.e_in.is_some() {
            return Err(CliError::Usage("--b and --e-in only apply to --method pp".into()));
        }
        let m = quality_method(c, "sample")?;
        if m.degree_corrected {
            return Err(CliError::Usage("instances are sampled from the plain ensemble; drop --dc".into()));
        }
        let beta = a.beta_over_n * a.n as f64;
        resolved.insert("beta".into(), json!(beta));
        sample_instance(m, beta, a.n as usize, e, c.seed, &grid_config(c))?
    };
    let files = [
        ("edges", with_suffix(&a.prefix, ".edges")),
        ("partition", with_suffix(&a.prefix, ".partition")),
        ("meta", with_suffix(&a.prefix, ".meta.json")),
    ];
    for (kind, path) in &files {
        let mut w = create(path)?;
        match *kind {
            "edges" => s.write_edges(&mut w)?,
            "partition" => s.write_partition(&mut w)?,
            _ => s.write_meta(&mut w)?,
        }
        w.flush().map_err(|e| CliError::Output(e.to_string()))?;
    }
    let meta = &s.meta;
    let mut t = Table::new(&["n", "e", "b_star", "e_in_star", "seed", "beta", "method", "gamma", "w_star", "min_group_size", "max_group_size"]);
    t.push(vec![
        meta.n.to_string(),
        meta.e.to_string(),
        meta.b_star.to_string(),
        meta.e_in_star.to_string(),
        meta.seed.to_string(),
        meta.beta.map(num).unwrap_or_default(),
        meta.method.map(|m| m.name().to_string()).unwrap_or_else(|| "pp".into()),
        opt(meta.gamma),
        meta.w_star.map(num).unwrap_or_default(),
        meta.min_group_size.to_string(),
        meta.max_group_size.to_string(),
    ]);
    let paths: BTreeMap<&str, String> = files.iter().map(|(k, p)| (*k, p.display().to_string())).collect();
    Ok((Report::new(json!({ "meta": meta, "files": paths }), t)?, resolved))
}

pub fn optimize(c: &Common, a: &OptimizeArgs) -> Res<Report> {
    let m = quality_method(c, "optimize")?;
    if a.max_sweeps == 0 {
        return Err(CliError::Usage("--max-sweeps must be at least 1".into()));
    }
    let (g, stats) = load_graph(&a.edges, a.permissive)?;
    let cfg = OptimizerConfig {
        max_sweeps: a.max_sweeps,
        init: match a.init {
            InitArg::Singletons => Init::Singletons,
            InitArg::Agglomerative => Init::Agglomerative,
        },
        ..opt_config(c)
    };
    let r = maximize_quality(&g, m, &cfg)?;
    let report = if g.e() > 0 { Some(description_length(&g, &r.partition, m, &dl_options(c, false))?) } else { None };
    if let Some(path) = &a.partition_out {
        write_partition(path, &r.partition, &g)?;
    }
    let mut t = Table::new(&["node", "label"]);
    for (name, l) in g.node_names().iter().zip(r.partition.labels()) {
        t.push(vec![name.clone(), l.to_string()]);
    }
    let result = json!({
        "method": m,
        "w": r.w,
        "b_hat": r.partition.num_groups(),
        "b_e": effective_b(&r.partition),
        "sweeps": r.sweeps,
        "restart": r.restart,
        "description_length": report,
        "labels": labels_json(&g, &r.partition),
        "load": stats,
    });
    Report::new(result, t)
}

fn gammas_or_default(g: &Option<Vec<f64>>) -> Res<Vec<f64>> {
    let v = g.clone().unwrap_or_else(default_gamma_grid);
    if v.is_empty() || v.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(CliError::Usage("resolutions must be positive and finite".into()));
    }
    Ok(v)
}

pub fn gamma_scan_cmd(c: &Common, a: &GammaScanArgs) -> Res<(Report, Map<String, Value>)> {
    if c.method != MethodArg::Modularity {
        return Err(CliError::Usage("gamma-scan only applies to --method modularity".into()));
    }
    let gammas = gammas_or_default(&a.gammas)?;
    let (g, stats) = load_graph(&a.edges, a.permissive)?;
    let scan = gamma_scan(&g, &gammas, c.dc, &opt_config(c), &dl_options(c, false))?;
    if let Some(path) = &a.partition_out {
        write_partition(path, scan.best_partition(), &g)?;
    }
    let mut t = Table::new(&["gamma", "q", "sigma", "b_hat", "b_e", "beta_star", "selected", "flags"]);
    for (i, r) in scan.records.iter().enumerate() {
        t.push(vec![
            num(r.gamma),
            num(r.q),
            num(r.sigma),
            r.b_hat.to_string(),
            num(r.b_e),
            num(r.beta_star),
            (i == scan.selected).to_string(),
            r.flags.join(";"),
        ]);
    }
    let result = json!({
        "records": scan.records,
        "selected": scan.selected,
        "best": scan.best(),
        "sigma_er": sigma_er(g.n() as u64, g.e() as u64)?,
        "sigma_cm": sigma_cm(&g)?,
        "labels": labels_json(&g, scan.best_partition()),
        "load": stats,
    });
    let mut resolved = Map::new();
    resolved.insert("gammas".into(), json!(gammas));
    Ok((Report::new(result, t)?, resolved))
}

#[derive(Debug, Clone, Serialize)]
struct MethodOutcome {
    method: CompareMethod,
    sigma: Option<f64>,
    b_hat: Option<usize>,
    b_e: Option<f64>,
    compression_ratio: Option<f64>,
    exceeds_er: Option<bool>,
    exceeds_cm: Option<bool>,
    error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
struct NetworkOutcome {
    path: String,
    tag: Option<String>,
    n: Option<usize>,
    e: Option<usize>,
    sigma_er: Option<f64>,
    sigma_cm: Option<f64>,
    methods: Vec<MethodOutcome>,
    error: Option<String>,
}

fn read_manifest(path: &Path) -> Res<Vec<(PathBuf, Option<String>)>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.splitn(2, char::is_whitespace);
        let p = PathBuf::from(parts.next().unwrap_or_default());
        let tag = parts.next().map(|t| t.trim().to_string()).filter(|t| !t.is_empty());
        out.push((if p.is_absolute() { p } else { base.join(p) }, tag));
    }
    if out.is_empty() {
        return Err(CliError::Input(format!("{}: manifest lists no networks", path.display())));
    }
    Ok(out)
}

fn outcome(method: CompareMethod, r: blockdl::Result<(f64, &Partition)>, er: f64, cm: f64) -> MethodOutcome {
    match r {
        Ok((sigma, p)) => MethodOutcome {
            method,
            sigma: Some(sigma),
            b_hat: Some(p.num_groups()),
            b_e: Some(effective_b(p)),
            compression_ratio: Some(sigma / er),
            exceeds_er: Some(sigma > er),
            exceeds_cm: Some(sigma > cm),
            error: None,
        },
        Err(e) => MethodOutcome {
            method,
            sigma: None,
            b_hat: None,
            b_e: None,
            compression_ratio: None,
            exceeds_er: None,
            exceeds_cm: None,
            error: Some(e.to_string()),
        },
    }
}

fn compare_network(c: &Common, a: &CompareArgs, gammas: &[f64], path: &Path, tag: Option<String>) -> NetworkOutcome {
    let mut rec = NetworkOutcome {
        path: path.display().to_string(),
        tag,
        n: None,
        e: None,
        sigma_er: None,
        sigma_cm: None,
        methods: Vec::new(),
        error: None,
    };
    let baseline = (|| -> Res<(Graph, f64, f64)> {
        let (g, _) = load_graph(path, a.permissive)?;
        let er = sigma_er(g.n() as u64, g.e() as u64)?;
        let cm = sigma_cm(&g)?;
        Ok((g, er, cm))
    })();
    let (g, er, cm) = match baseline {
        Ok(x) => x,
        Err(e) => {
            rec.error = Some(e.message());
            return rec;
        }
    };
    rec.n = Some(g.n());
    rec.e = Some(g.e());
    rec.sigma_er = Some(er);
    rec.sigma_cm = Some(cm);
    let cfg = opt_config(c);
    let opts = dl_options(c, false);
    let mut methods = a.methods.clone();
    methods.sort();
    methods.dedup();
    let mut candidates: Vec<Partition> = vec![Partition::trivial(g.n())];
    let fit = |m: Method| -> blockdl::Result<(f64, Partition)> {
        let r = maximize_quality(&g, m, &cfg)?;
        let dl = description_length(&g, &r.partition, m, &opts)?;
        Ok((dl.sigma_nats, r.partition))
    };
    let needs_scan = methods.contains(&CompareMethod::ModularityScan) || methods.contains(&CompareMethod::Pp);
    let scan = if needs_scan { Some(gamma_scan(&g, gammas, c.dc, &cfg, &opts)) } else { None };
    for &method in &methods {
        let r = match method {
            CompareMethod::Modularity => Method::modularity(c.gamma).and_then(|m| fit(m.with_dc(c.dc))),
            CompareMethod::Infomap => fit(Method::infomap().with_dc(c.dc)),
            CompareMethod::ModularityScan => match scan.as_ref().expect("scan ran") {
                Ok(s) => Ok((s.best().sigma, s.best_partition().clone())),
                Err(e) => Err(blockdl::Error::Numeric(e.to_string())),
            },
            CompareMethod::Pp => {
                if let Some(Ok(s)) = &scan {
                    candidates.extend(s.partitions.iter().cloned());
                }
                candidates
                    .iter()
                    .filter_map(|p| sigma_pp(&g, p).ok().map(|s| (s, p.clone())))
                    .min_by(|x, y| x.0.total_cmp(&y.0))
                    .ok_or_else(|| blockdl::Error::UndefinedObjective("no candidate partition has a finite code".into()))
            }
        };
        if let Ok((_, p)) = &r {
            candidates.push(p.clone());
        }
        rec.methods.push(outcome(method, r.as_ref().map(|(s, p)| (*s, p)).map_err(|e| clone_err(e)), er, cm));
    }
    rec
}

fn clone_err(e: &blockdl::Error) -> blockdl::Error {
    blockdl::Error::Numeric(e.to_string())
}

pub fn compare(c: &Common, a: &CompareArgs) -> Res<(Report, Map<String, Value>)> {
    if a.methods.is_empty() {
        return Err(CliError::Usage("--methods is empty".into()));
    }
    let gammas = gammas_or_default(&a.gammas)?;
    let manifest = read_manifest(&a.manifest)?;
    let networks: Vec<NetworkOutcome> = manifest
        .par_iter()
        .map(|(p, tag)| compare_network(c, a, &gammas, p, tag.clone()))
        .collect();

    let mut methods = a.methods.clone();
    methods.sort();
    methods.dedup();
    let sigma_of = |net: &NetworkOutcome, m: CompareMethod| net.methods.iter().find(|x| x.method == m).and_then(|x| x.sigma);

    let mut wins = Vec::new();
    for &x in &methods {
        let mut row = Vec::new();
        for &y in &methods {
            let mut total = 0usize;
            let mut score = 0.0;
            for net in &networks {
                if let (Some(sx), Some(sy)) = (sigma_of(net, x), sigma_of(net, y)) {
                    total += 1;
                    score += if sx < sy {
                        1.0
                    } else if sx == sy {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
            row.push(if total > 0 { Some(score / total as f64) } else { None });
        }
        wins.push(row);
    }

    let mut ranking: Vec<Value> = Vec::new();
    let mut ranked: Vec<(CompareMethod, f64, usize, usize, usize)> = Vec::new();
    for &m in &methods {
        let outs: Vec<&MethodOutcome> = networks.iter().flat_map(|n| n.methods.iter().filter(move |x| x.method == m)).collect();
        let ratios: Vec<f64> = outs.iter().filter_map(|o| o.compression_ratio).collect();
        if ratios.is_empty() {
            continue;
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let er = outs.iter().filter(|o| o.exceeds_er == Some(true)).count();
        let cm = outs.iter().filter(|o| o.exceeds_cm == Some(true)).count();
        ranked.push((m, mean, ratios.len(), er, cm));
    }
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
    for (rank, (m, mean, count, er, cm)) in ranked.iter().enumerate() {
        ranking.push(json!({
            "rank": rank + 1,
            "method": m,
            "mean_compression_ratio": mean,
            "networks": count,
            "overfit_er": er,
            "overfit_cm": cm,
        }));
    }

    let mut group_scaling = Vec::new();
    let mut t = Table::new(&[
        "network", "tag", "n", "e", "method", "sigma", "sigma_er", "sigma_cm", "compression_ratio", "b_hat", "b_e", "exceeds_er", "exceeds_cm", "error",
    ]);
    for net in &networks {
        if net.methods.is_empty() {
            t.push(vec![
                net.path.clone(),
                net.tag.clone().unwrap_or_default(),
                opt(net.n),
                opt(net.e),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                net.error.clone().unwrap_or_default(),
            ]);
        }
        for m in &net.methods {
            if let Some(b) = m.b_hat {
                group_scaling.push(json!({ "network": net.path, "tag": net.tag, "n": net.n, "e": net.e, "method": m.method, "b_hat": b }));
            }
            t.push(vec![
                net.path.clone(),
                net.tag.clone().unwrap_or_default(),
                opt(net.n),
                opt(net.e),
                serde_json::to_value(m.method).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                m.sigma.map(num).unwrap_or_default(),
                net.sigma_er.map(num).unwrap_or_default(),
                net.sigma_cm.map(num).unwrap_or_default(),
                m.compression_ratio.map(num).unwrap_or_default(),
                opt(m.b_hat),
                m.b_e.map(num).unwrap_or_default(),
                opt(m.exceeds_er),
                opt(m.exceeds_cm),
                m.error.clone().unwrap_or_default(),
            ]);
        }
    }
    let result = json!({
        "networks": networks,
        "methods": methods,
        "win_fraction": wins,
        "ranking": ranking,
        "group_scaling": group_scaling,
    });
    let mut resolved = Map::new();
    resolved.insert("gammas".into(), json!(gammas));
    Ok((Report::new(result, t)?, resolved))
}

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    passed: bool,
    detail: String,
}

pub fn validate(c: &Common, a: &ValidateArgs) -> Res<(Report, Map<String, Value>)> {
    let (q_trials, l_trials, mean_tol) = if a.quick { (a.q_trials.min(2000), a.l_trials.min(50), 4.0) } else { (a.q_trials, a.l_trials, 3.0) };
    let run_q = matches!(a.suite, Suite::All | Suite::Q);
    let run_l = matches!(a.suite, Suite::All | Suite::L);
    if run_q && q_trials < MIN_Q_TRIALS {
        return Err(CliError::Usage(format!("--q-trials must be at least {MIN_Q_TRIALS}")));
    }
    if run_l && l_trials < 2 {
        return Err(CliError::Usage("--l-trials must be at least 2".into()));
    }
    let mut checks = Vec::new();
    let mut moments = Vec::new();
    let mut q_table = Table::new(&["E", "B", "E_in", "gamma", "trials", "mean_q", "var_q", "std_err", "predicted_mean", "scaled_variance"]);
    if run_q {
        let mut k = 0u64;
        for &e in &[1000u64, 10_000] {
            for &b in &[5usize, 20] {
                let m = appendix_q_moments(e, b, e / 2, 1.0, q_trials, c.seed.wrapping_add(k))?;
                k += 1;
                let z = (m.mean_q - m.predicted_mean) / m.std_err;
                checks.push(Check {
                    name: format!("q_mean E={e} B={b}"),
                    passed: z.abs() <= mean_tol,
                    detail: format!("mean {} vs {} ({z:.2} standard errors, tolerance {mean_tol})", m.mean_q, m.predicted_mean),
                });
                let s = m.scaled_variance();
                checks.push(Check {
                    name: format!("q_variance_band E={e} B={b}"),
                    passed: (0.5..=2.0).contains(&s),
                    detail: format!("var*E*B/gamma^2 = {s:.4e}, band [0.5, 2]"),
                });
                q_table.push(vec![
                    e.to_string(),
                    b.to_string(),
                    m.e_in.to_string(),
                    num(m.gamma),
                    m.trials.to_string(),
                    num(m.mean_q),
                    num(m.var_q),
                    num(m.std_err),
                    num(m.predicted_mean),
                    num(s),
                ]);
                moments.push(m);
            }
        }
        let zero = appendix_q_moments(1000, 5, 500, 0.0, q_trials, c.seed.wrapping_add(k))?;
        checks.push(Check {
            name: "q_gamma0_zero_variance".into(),
            passed: zero.var_q <= 1e-24,
            detail: format!("var = {:e}", zero.var_q),
        });
    }
    let mut l_table = Table::new(&["N", "B", "avg_k", "ein_frac", "var_L"]);
    let l_result = if run_l {
        let v = appendix_l_variance(&LGrid::default(), l_trials, c.seed)?;
        checks.push(Check {
            name: "l_variance_slope".into(),
            passed: v.slope <= -0.5,
            detail: format!("slope {:.4} over {} points, threshold -0.5", v.slope, v.points.len()),
        });
        for p in &v.points {
            l_table.push(vec![p.n.to_string(), p.b.to_string(), num(p.avg_k), num(p.ein_frac), num(p.var_l)]);
        }
        Some(v)
    } else {
        None
    };
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let failure = if failed.is_empty() { None } else { Some(format!("{} of {} checks failed: {}", failed.len(), checks.len(), failed.join(", "))) };
    let result = json!({
        "passed": failure.is_none(),
        "checks": checks,
        "q_moments": moments,
        "l_variance": l_result,
    });
    let table = if run_l { l_table } else { q_table };
    let mut resolved = Map::new();
    resolved.insert("q_trials".into(), json!(q_trials));
    resolved.insert("l_trials".into(), json!(l_trials));
    resolved.insert("mean_tolerance_se".into(), json!(mean_tol));
    let mut report = Report::new(result, table)?;
    report.failure = failure;
    Ok((report, resolved))
}

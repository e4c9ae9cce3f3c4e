//! Oracles and property checks shared by the property suite and the
//! acceptance harness. Each check returns `Err` with a description of the
//! first violation.

use std::collections::{BTreeSet, VecDeque};
use std::path::Path;
use std::process::Command;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use scde::coupling::{
    cluster_of, make_regular, sw_rewire, to_base_matrix, CouplingGraph, Side, TrainingAssignment,
    COLUMN_SUM_TOL,
};
use scde::de::{ber_of, de_step, DeState, SystemScenario};
use scde::threshold::scalar_fixed_points;

/// Same-side nodes within bipartite distance 2, by BFS over `g`'s edge list.
pub fn bfs_cluster(g: &CouplingGraph, center: usize, side: Side) -> BTreeSet<usize> {
    let len = g.len();
    let mut adj = vec![Vec::new(); 2 * len];
    for (l, m, _) in g.edges() {
        adj[l].push(len + m);
        adj[len + m].push(l);
    }
    let start = match side {
        Side::Factor => center,
        Side::Variable => len + center,
    };
    let mut dist = vec![usize::MAX; 2 * len];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        if dist[u] < 2 {
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    (0..2 * len)
        .filter(|&v| dist[v] <= 2 && (v < len) == (start < len))
        .map(|v| v % len)
        .collect()
}

/// `cluster_of` against BFS for every `W <= 4`, `2W + 2 <= L <= 64`, center
/// and side. Returns the number of comparisons.
pub fn check_clusters_exhaustive() -> Result<usize, String> {
    let mut checked = 0;
    for width in 1..=4 {
        for len in (2 * width + 2)..=64 {
            let g = make_regular(len, width).map_err(|e| e.to_string())?;
            for center in 0..len {
                for side in [Side::Factor, Side::Variable] {
                    let got: BTreeSet<usize> = cluster_of(center, side, width, len)
                        .map_err(|e| e.to_string())?
                        .into_iter()
                        .collect();
                    if got != bfs_cluster(&g, center, side) {
                        return Err(format!("L={len} W={width} center={center} {side:?}"));
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(checked)
}

#[derive(Debug, Clone, Copy)]
pub struct DeCase {
    pub width: usize,
    pub len: usize,
    pub p: f64,
    pub seed: u64,
    pub snr_db: f64,
    pub alpha_tr: f64,
    pub alpha: f64,
    pub tau: usize,
}

/// From zero SIR, 60 DE steps never decrease any position's SIR, never
/// exceed the single-user bound and never increase any BER.
pub fn check_monotone_de(case: DeCase) -> Result<(), String> {
    let err = |e: scde::Error| e.to_string();
    let reg = make_regular(case.len, case.width).map_err(err)?;
    let (g, _) = sw_rewire(&reg, case.p, 2, 1, case.seed).map_err(err)?;
    let b = to_base_matrix(&g).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(case.seed ^ 1);
    let set = rand::seq::index::sample(&mut rng, case.len, case.tau).into_vec();
    let training = TrainingAssignment::new(set, case.len).map_err(err)?;
    let scen = SystemScenario::from_snr_db(case.snr_db, case.alpha_tr, case.alpha, training)
        .map_err(err)?;
    let bound = 1.0 / scen.sigma2() * (1.0 + 1e-12);
    let mut state = DeState::initial(case.len, scen.sigma2());
    for it in 0..60 {
        let next = de_step(&state, &b, &scen).map_err(err)?;
        for m in 0..case.len {
            let (old, new) = (state.sir[m], next.sir[m]);
            if new < old - 1e-12 * old.max(1.0) {
                return Err(format!(
                    "{case:?} iteration {it} position {m}: sir {old} -> {new}"
                ));
            }
            if new > bound {
                return Err(format!("{case:?} position {m}: sir {new} above 1/sigma2"));
            }
            if ber_of(new).map_err(err)? > ber_of(old).map_err(err)? + 1e-15 {
                return Err(format!("{case:?} iteration {it} position {m}: ber rose"));
            }
        }
        state = next;
    }
    Ok(())
}

/// Degree, column-normalization and training invariants of one rewired
/// graph.
pub fn check_rewired(
    len: usize,
    width: usize,
    c: usize,
    p: f64,
    tau: usize,
    seed: u64,
) -> Result<(), String> {
    let err = |e: scde::Error| e.to_string();
    let reg = make_regular(len, width).map_err(err)?;
    let (g, training) = sw_rewire(&reg, p, c, tau, seed).map_err(err)?;
    let ctx = format!("L={len} W={width} c={c} p={p} tau={tau} seed={seed}");
    g.check_invariants().map_err(|e| format!("{ctx}: {e}"))?;
    let deg = 2 * width as u32 + 1;
    if let Some(m) = (0..len).find(|&m| g.variable_degree(m) != deg) {
        return Err(format!(
            "{ctx}: variable {m} has degree {}",
            g.variable_degree(m)
        ));
    }
    let degrees = g.factor_degrees();
    let total: u64 = degrees.iter().map(|&d| d as u64).sum();
    if total != len as u64 * deg as u64 || g.total_multiplicity() != total {
        return Err(format!("{ctx}: edge count {total}"));
    }
    let b = to_base_matrix(&g).map_err(err)?;
    if let Some(m) = (0..len).find(|&m| (b.column_sum(m) - 1.0).abs() > COLUMN_SUM_TOL) {
        return Err(format!("{ctx}: column {m} sums to {}", b.column_sum(m)));
    }
    if training.tau() != tau {
        return Err(format!("{ctx}: training size {}", training.tau()));
    }
    let min_in = training
        .indices()
        .iter()
        .map(|&l| degrees[l])
        .min()
        .unwrap_or(0);
    let max_out = (0..len)
        .filter(|l| !training.contains(*l))
        .map(|l| degrees[l])
        .max()
        .unwrap_or(0);
    if min_in < max_out || min_in == 0 {
        return Err(format!(
            "{ctx}: training degree {min_in}, propagation degree {max_out}"
        ));
    }
    Ok(())
}

/// `1 - E[tanh(x + √x Z)]` by composite Simpson over `z ∈ [-12, 12]`.
pub fn mmse_simpson(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    const PANELS: usize = 600;
    let (a, b) = (-12.0f64, 12.0f64);
    let h = (b - a) / PANELS as f64;
    let s = x.sqrt();
    let f = |z: f64| (-0.5 * z * z).exp() * (x + s * z).tanh();
    let mut acc = f(a) + f(b);
    for k in 1..PANELS {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    1.0 - acc * h / 3.0 / (2.0 * std::f64::consts::PI).sqrt()
}

/// `scalar_fixed_points` against sign changes of the fixed-point equation on
/// a 20000-point grid evaluated with [`mmse_simpson`]. Returns the number of
/// roots.
pub fn check_scalar_roots(alpha: f64, sigma2: f64) -> Result<usize, String> {
    let x_max = 1.0 / sigma2;
    let n = 20_000;
    let step = x_max / n as f64;
    let f = |x: f64| x * (sigma2 + alpha * mmse_simpson(x)) - 1.0;
    let mut oracle = Vec::new();
    let mut prev = f(0.0);
    for k in 1..=n {
        let x = k as f64 * step;
        let v = f(x);
        if (prev < 0.0) != (v < 0.0) || v == 0.0 {
            oracle.push(x - 0.5 * step);
        }
        prev = v;
    }
    let roots = scalar_fixed_points(alpha, sigma2, 10_000).map_err(|e| e.to_string())?;
    if roots.len() != oracle.len() {
        return Err(format!(
            "alpha={alpha} sigma2={sigma2}: {roots:?} vs {oracle:?}"
        ));
    }
    for (r, o) in roots.iter().zip(&oracle) {
        if (r - o).abs() > step {
            return Err(format!("alpha={alpha} sigma2={sigma2}: root {r} vs {o}"));
        }
    }
    Ok(roots.len())
}

/// Runs every subcommand twice with identical flags into `dir` and compares
/// stdout and every output file byte for byte.
pub fn check_cli_reruns(bin: &str, dir: &Path) -> Result<(), String> {
    let path = |name: &str| dir.join(name).to_str().unwrap().to_owned();
    let run = |args: &[String]| -> Result<Vec<u8>, String> {
        let out = Command::new(bin)
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!(
                "{args:?}: {}",
                String::from_utf8_lossy(&out.stderr)
            ));
        }
        Ok(out.stdout)
    };
    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }
    let graph = path("graph.json");
    run(&s(&[
        "generate", "--L", "64", "--W", "2", "--p", "0.1", "--c", "2", "--tau", "14", "--seed",
        "7", "--out", &graph,
    ]))?;
    type Job = (
        &'static str,
        Box<dyn Fn(&str) -> Vec<String>>,
        Vec<&'static str>,
    );
    let g = graph.clone();
    let jobs: Vec<Job> = vec![
        (
            "generate",
            Box::new(|t| {
                s(&[
                    "generate",
                    "--L",
                    "64",
                    "--W",
                    "2",
                    "--p",
                    "0.1",
                    "--c",
                    "2",
                    "--tau",
                    "14",
                    "--seed",
                    "7",
                    "--out",
                    &format!("{t}g.json"),
                ])
            }),
            vec!["g.json"],
        ),
        (
            "de",
            Box::new(move |t| {
                s(&[
                    "de",
                    "--graph",
                    &g,
                    "--snr-db",
                    "10",
                    "--alpha-tr",
                    "1.45",
                    "--alpha",
                    "1.9",
                    "--out",
                    &format!("{t}traj.csv"),
                    "--summary",
                    &format!("{t}sum.csv"),
                ])
            }),
            vec!["traj.csv", "sum.csv"],
        ),
        (
            "threshold",
            Box::new(|t| {
                s(&[
                    "threshold",
                    "--uncoupled",
                    "--snr-db",
                    "10",
                    "--out",
                    &format!("{t}thr.csv"),
                    "--log",
                    &format!("{t}log.csv"),
                ])
            }),
            vec!["thr.csv", "log.csv"],
        ),
        (
            "search",
            Box::new(|t| {
                s(&[
                    "search",
                    "--L",
                    "64",
                    "--W",
                    "2",
                    "--p",
                    "0.1",
                    "--c",
                    "2",
                    "--tau",
                    "14",
                    "--samples",
                    "16",
                    "--seed",
                    "1",
                    "--alpha-tr",
                    "1.45",
                    "--alpha",
                    "1.98",
                    "--thresholds",
                    "--finalists",
                    "2",
                    "--out",
                    &format!("{t}rep.csv"),
                    "--best-graph",
                    &format!("{t}best.json"),
                ])
            }),
            vec!["rep.csv", "best.json"],
        ),
        (
            "avgload",
            Box::new(|_| {
                s(&[
                    "avgload",
                    "--alpha-tr",
                    "1.45",
                    "--alpha",
                    "1.98958",
                    "--tau",
                    "14",
                    "--L",
                    "64",
                ])
            }),
            vec![],
        ),
    ];
    for (name, args, files) in &jobs {
        let (a, b) = (path(&format!("{name}_a_")), path(&format!("{name}_b_")));
        let (out_a, out_b) = (run(&args(&a))?, run(&args(&b))?);
        if out_a != out_b {
            return Err(format!("{name}: stdout differs"));
        }
        for f in files {
            let fa = std::fs::read(format!("{a}{f}")).map_err(|e| e.to_string())?;
            let fb = std::fs::read(format!("{b}{f}")).map_err(|e| e.to_string())?;
            if fa != fb {
                return Err(format!("{name}: {f} differs"));
            }
        }
    }
    Ok(())
}

//! Small-world rewiring between clusters and degree-driven training
//! assignment.

use rand::seq::index;
use rand::Rng;

use super::{cluster_of, CouplingGraph, Provenance, Side, TrainingAssignment};
use crate::error::{Error, Result};
use crate::rng;

/// A rewired graph together with its training set and the number of edges
/// that were moved.
#[derive(Debug, Clone)]
pub struct RewireOutcome {
    pub graph: CouplingGraph,
    pub training: TrainingAssignment,
    pub rewired_edges: usize,
}

/// Samples an instance of the `(L, W, p, c, τ)` small-world ensemble from a
/// regular graph.
///
/// Clusters are centred at `iL/c`. For cluster `i = 0, …, c−1`, each variable
/// node of the cluster (ascending) takes a snapshot of its edges (ascending
/// factor index, parallel edges expanded) and, independently with
/// probability `p`, moves each one to a factor node drawn uniformly from the
/// union of the other clusters' factor windows. The training set is then
/// drawn by [`assign_training`] from the same generator.
pub fn sw_rewire(
    g: &CouplingGraph,
    p: f64,
    c: usize,
    tau: usize,
    seed: u64,
) -> Result<(CouplingGraph, TrainingAssignment)> {
    let out = sw_rewire_with_stats(g, p, c, tau, seed)?;
    Ok((out.graph, out.training))
}

/// [`sw_rewire`], also reporting how many edges fired.
pub fn sw_rewire_with_stats(
    g: &CouplingGraph,
    p: f64,
    c: usize,
    tau: usize,
    seed: u64,
) -> Result<RewireOutcome> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Range(format!(
            "rewiring probability p={p} outside [0, 1]"
        )));
    }
    let len = g.len();
    let width = g.width();
    check_clusters(len, width, p, c)?;
    if !g.is_regular() {
        return Err(Error::Config(
            "sw_rewire expects a regular coupling graph".into(),
        ));
    }
    if tau == 0 || tau > len {
        return Err(Error::Range(format!(
            "need 1 <= tau <= L (tau={tau}, L={len})"
        )));
    }

    let centers: Vec<usize> = (0..c).map(|i| i * len / c).collect();
    let variable_clusters = centers
        .iter()
        .map(|&x| cluster_of(x, Side::Variable, width, len))
        .collect::<Result<Vec<_>>>()?;
    let factor_clusters = centers
        .iter()
        .map(|&x| cluster_of(x, Side::Factor, width, len))
        .collect::<Result<Vec<_>>>()?;

    let mut rng = rng::seeded(seed);
    let mut out = g.clone();
    let mut rewired = 0;
    for (i, vars) in variable_clusters.iter().enumerate() {
        let targets: Vec<usize> = factor_clusters
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        for &m in vars {
            let snapshot = out.variable_edges(m);
            for (l, k) in snapshot {
                for _ in 0..k {
                    if rng.random::<f64>() < p {
                        let target = targets[rng.random_range(0..targets.len())];
                        let mult = out.mult_mut();
                        mult[l * len + m] -= 1;
                        mult[target * len + m] += 1;
                        rewired += 1;
                    }
                }
            }
        }
    }

    let training = assign_training(&out, tau, &mut rng)?;
    let graph = out.with_provenance(Some(Provenance { p, c, seed }));
    debug_assert!(graph.check_invariants().is_ok());
    Ok(RewireOutcome {
        graph,
        training,
        rewired_edges: rewired,
    })
}

fn check_clusters(len: usize, width: usize, p: f64, c: usize) -> Result<()> {
    if c == 0 || !len.is_multiple_of(c) {
        return Err(Error::Config(format!(
            "cluster count c={c} must be positive and divide L={len}"
        )));
    }
    if p > 0.0 && c < 2 {
        return Err(Error::Config(format!(
            "rewiring with p={p} needs at least two clusters (c={c})"
        )));
    }
    if c > 1 && len / c <= 4 * width {
        return Err(Error::Config(format!(
            "clusters overlap: L/c = {} must exceed 4W = {}",
            len / c,
            4 * width
        )));
    }
    Ok(())
}

/// Picks `tau` factor nodes, largest degree first.
///
/// Degree levels are consumed from the maximum downwards; the level that
/// cannot be taken whole is sampled uniformly without replacement. Factor
/// nodes of degree 0 are never selected.
pub fn assign_training<R: Rng + ?Sized>(
    g: &CouplingGraph,
    tau: usize,
    rng: &mut R,
) -> Result<TrainingAssignment> {
    let len = g.len();
    if tau == 0 || tau > len {
        return Err(Error::Range(format!(
            "need 1 <= tau <= L (tau={tau}, L={len})"
        )));
    }
    let degrees = g.factor_degrees();
    let active = degrees.iter().filter(|&&d| d > 0).count();
    if tau > active {
        return Err(Error::Range(format!(
            "tau={tau} exceeds the {active} factor nodes of positive degree"
        )));
    }
    let d_max = degrees.iter().copied().max().unwrap_or(0);

    let mut chosen = Vec::with_capacity(tau);
    let mut remaining = tau;
    for d in (1..=d_max).rev() {
        if remaining == 0 {
            break;
        }
        let level: Vec<usize> = (0..len).filter(|&l| degrees[l] == d).collect();
        if level.len() > remaining {
            chosen.extend(
                index::sample(rng, level.len(), remaining)
                    .iter()
                    .map(|i| level[i]),
            );
            remaining = 0;
        } else {
            remaining -= level.len();
            chosen.extend(level);
        }
    }
    TrainingAssignment::new(chosen, len)
}

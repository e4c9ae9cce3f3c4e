//! Coupling graphs and base matrices.
//!
//! A coupling graph is the bipartite multigraph behind an `L x L` base
//! matrix: factor node `l` (row, symbol period) is joined to variable node
//! `m` (column, transmit position) by `mult[l][m]` parallel edges. Every
//! variable node has degree `2W + 1`, so the squared weights
//! `b²[l][m] = mult[l][m] / (2W + 1)` have unit column sums.

mod format;
mod rewire;

pub use format::{parse_graph, read_graph_file, serialize_graph, write_graph_file, FORMAT_VERSION};
pub use rewire::{assign_training, sw_rewire, sw_rewire_with_stats, RewireOutcome};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column-sum tolerance for [`BaseMatrix`].
pub const COLUMN_SUM_TOL: f64 = 1e-12;

/// Parameters that produced a rewired graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub p: f64,
    pub c: usize,
    pub seed: u64,
}

/// Which side of the bipartite graph a node index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Factor,
    Variable,
}

/// Bipartite multigraph of `L` factor and `L` variable nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingGraph {
    len: usize,
    width: usize,
    // row-major: mult[l * len + m]
    mult: Vec<u32>,
    provenance: Option<Provenance>,
}

impl CouplingGraph {
    /// Builds a graph from `(factor, variable, multiplicity)` triples.
    ///
    /// Repeated pairs accumulate. The result must satisfy the degree
    /// invariants (every column sums to `2W + 1`).
    pub fn from_edges<I>(
        len: usize,
        width: usize,
        edges: I,
        provenance: Option<Provenance>,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, u32)>,
    {
        if len == 0 || width == 0 {
            return Err(Error::Dimension(format!(
                "L and W must be positive (L={len}, W={width})"
            )));
        }
        let mut mult = vec![0u32; len * len];
        for (l, m, k) in edges {
            if l >= len {
                return Err(Error::Index { index: l, len });
            }
            if m >= len {
                return Err(Error::Index { index: m, len });
            }
            mult[l * len + m] += k;
        }
        let g = CouplingGraph {
            len,
            width,
            mult,
            provenance,
        };
        g.check_invariants()?;
        Ok(g)
    }

    pub(crate) fn from_parts_unchecked(
        len: usize,
        width: usize,
        mult: Vec<u32>,
        provenance: Option<Provenance>,
    ) -> Self {
        debug_assert_eq!(mult.len(), len * len);
        CouplingGraph {
            len,
            width,
            mult,
            provenance,
        }
    }

    /// Chain length `L`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Coupling width `W`.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Degree every variable node must have.
    pub fn variable_degree_target(&self) -> u32 {
        (2 * self.width + 1) as u32
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn multiplicity(&self, factor: usize, variable: usize) -> u32 {
        self.mult[factor * self.len + variable]
    }

    pub(crate) fn mult_mut(&mut self) -> &mut [u32] {
        &mut self.mult
    }

    /// Row sum for factor node `l`.
    pub fn factor_degree(&self, factor: usize) -> u32 {
        self.mult[factor * self.len..(factor + 1) * self.len]
            .iter()
            .sum()
    }

    pub fn factor_degrees(&self) -> Vec<u32> {
        (0..self.len).map(|l| self.factor_degree(l)).collect()
    }

    /// Column sum for variable node `m`.
    pub fn variable_degree(&self, variable: usize) -> u32 {
        (0..self.len).map(|l| self.multiplicity(l, variable)).sum()
    }

    pub fn total_multiplicity(&self) -> u64 {
        self.mult.iter().map(|&k| u64::from(k)).sum()
    }

    /// Nonzero entries as `(factor, variable, multiplicity)`, sorted by
    /// `(factor, variable)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        let len = self.len;
        self.mult
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > 0)
            .map(move |(i, &k)| (i / len, i % len, k))
    }

    /// Factor nodes adjacent to variable node `m`, ascending, with
    /// multiplicity.
    pub fn variable_edges(&self, variable: usize) -> Vec<(usize, u32)> {
        (0..self.len)
            .filter_map(|l| {
                let k = self.multiplicity(l, variable);
                (k > 0).then_some((l, k))
            })
            .collect()
    }

    /// True when the edge structure equals `make_regular(L, W)`.
    pub fn is_regular(&self) -> bool {
        match make_regular(self.len, self.width) {
            Ok(reg) => reg.mult == self.mult,
            Err(_) => false,
        }
    }

    pub fn with_provenance(mut self, provenance: Option<Provenance>) -> Self {
        self.provenance = provenance;
        self
    }

    /// Verifies that every column sums to `2W + 1`.
    pub fn check_invariants(&self) -> Result<()> {
        let target = self.variable_degree_target();
        for m in 0..self.len {
            let d = self.variable_degree(m);
            if d != target {
                return Err(Error::Integrity(format!(
                    "variable node {m} has degree {d}, expected 2W+1 = {target}"
                )));
            }
        }
        Ok(())
    }

    /// Applies the circular shift `i -> (i + shift) mod L` to both node sets.
    pub fn rotated(&self, shift: usize) -> Self {
        let len = self.len;
        let mut mult = vec![0u32; len * len];
        for (l, m, k) in self.edges() {
            mult[((l + shift) % len) * len + (m + shift) % len] = k;
        }
        CouplingGraph {
            len,
            width: self.width,
            mult,
            provenance: self.provenance,
        }
    }
}

/// Regular circulant coupling graph: factor `l` and variable `m` are joined
/// by a single edge iff their circular distance is at most `W`.
pub fn make_regular(len: usize, width: usize) -> Result<CouplingGraph> {
    if width == 0 || len < 2 * width + 2 {
        return Err(Error::Dimension(format!(
            "regular coupling needs W >= 1 and L >= 2W+2 (L={len}, W={width})"
        )));
    }
    let mut mult = vec![0u32; len * len];
    for l in 0..len {
        for m in 0..len {
            let d = (l + len - m) % len;
            if d <= width || d >= len - width {
                mult[l * len + m] = 1;
            }
        }
    }
    Ok(CouplingGraph::from_parts_unchecked(len, width, mult, None))
}

/// The node itself plus every same-side node at distance 2 in the regular
/// graph of width `W`, i.e. the circular window `center ± 2W`.
///
/// The result is sorted ascending and has `min(4W + 1, L)` elements. The
/// window is the same for both sides.
pub fn cluster_of(center: usize, side: Side, width: usize, len: usize) -> Result<Vec<usize>> {
    let _ = side;
    if center >= len {
        return Err(Error::Index { index: center, len });
    }
    let reach = 2 * width;
    let mut nodes: Vec<usize> = if 2 * reach + 1 >= len {
        (0..len).collect()
    } else {
        (0..=2 * reach)
            .map(|j| (center + len - reach + j) % len)
            .collect()
    };
    nodes.sort_unstable();
    Ok(nodes)
}

/// Factor nodes assigned to the training phase; the rest form the
/// propagation phase.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TrainingAssignment {
    set: Vec<usize>,
}

impl TrainingAssignment {
    /// Validates and sorts `indices`; they must be distinct and `< len`.
    pub fn new(mut indices: Vec<usize>, len: usize) -> Result<Self> {
        indices.sort_unstable();
        for w in indices.windows(2) {
            if w[0] == w[1] {
                return Err(Error::Config(format!(
                    "training index {} listed twice",
                    w[0]
                )));
            }
        }
        if let Some(&last) = indices.last() {
            if last >= len {
                return Err(Error::Index { index: last, len });
            }
        }
        Ok(TrainingAssignment { set: indices })
    }

    /// No training positions.
    pub fn empty() -> Self {
        TrainingAssignment { set: Vec::new() }
    }

    pub fn tau(&self) -> usize {
        self.set.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.set
    }

    pub fn contains(&self, factor: usize) -> bool {
        self.set.binary_search(&factor).is_ok()
    }

    /// Complement of the training set within `[0, len)`.
    pub fn propagation(&self, len: usize) -> Vec<usize> {
        (0..len).filter(|l| !self.contains(*l)).collect()
    }

    pub fn rotated(&self, shift: usize, len: usize) -> Self {
        let mut set: Vec<usize> = self.set.iter().map(|&l| (l + shift) % len).collect();
        set.sort_unstable();
        TrainingAssignment { set }
    }
}

/// `L x L` table of squared coupling weights `b²[l][m]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseMatrix {
    len: usize,
    bsq: Vec<f64>,
}

impl BaseMatrix {
    /// Wraps a row-major table of squared weights after validating the
    /// entry range and unit column sums.
    pub fn from_squared(len: usize, bsq: Vec<f64>) -> Result<Self> {
        if len == 0 || bsq.len() != len * len {
            return Err(Error::Dimension(format!(
                "base matrix of order {len} needs {} entries, got {}",
                len * len,
                bsq.len()
            )));
        }
        if let Some(v) = bsq.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Integrity(format!("entry {v} outside [0, 1]")));
        }
        let b = BaseMatrix { len, bsq };
        for m in 0..len {
            let s = b.column_sum(m);
            if (s - 1.0).abs() > COLUMN_SUM_TOL {
                return Err(Error::Integrity(format!(
                    "column {m} sums to {s}, expected 1"
                )));
            }
        }
        Ok(b)
    }

    /// The single-position matrix `[[1]]` of an uncoupled system.
    pub fn uncoupled() -> Self {
        BaseMatrix {
            len: 1,
            bsq: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, factor: usize, variable: usize) -> f64 {
        self.bsq[factor * self.len + variable]
    }

    pub fn row(&self, factor: usize) -> &[f64] {
        &self.bsq[factor * self.len..(factor + 1) * self.len]
    }

    pub fn column_sum(&self, variable: usize) -> f64 {
        (0..self.len).map(|l| self.get(l, variable)).sum()
    }

    /// Reindexes rows and columns: entry `(l, m)` moves to
    /// `(perm[l], perm[m])`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.len {
            return Err(Error::Dimension(format!(
                "permutation of length {} for order {}",
                perm.len(),
                self.len
            )));
        }
        let mut seen = vec![false; self.len];
        for &p in perm {
            if p >= self.len || std::mem::replace(&mut seen[p], true) {
                return Err(Error::Config("not a permutation".into()));
            }
        }
        let mut bsq = vec![0.0; self.len * self.len];
        for l in 0..self.len {
            for m in 0..self.len {
                bsq[perm[l] * self.len + perm[m]] = self.get(l, m);
            }
        }
        Ok(BaseMatrix { len: self.len, bsq })
    }
}

/// `b²[l][m] = mult[l][m] / (2W + 1)`.
pub fn to_base_matrix(g: &CouplingGraph) -> Result<BaseMatrix> {
    g.check_invariants()?;
    let scale = f64::from(g.variable_degree_target());
    let bsq = g.mult.iter().map(|&k| f64::from(k) / scale).collect();
    Ok(BaseMatrix { len: g.len, bsq })
}

/// Harmonic mix of the training and propagation loads:
/// `[ (τ/L)/α_tr + (1 − τ/L)/α ]⁻¹`.
pub fn average_load(alpha_tr: f64, alpha: f64, tau: usize, len: usize) -> Result<f64> {
    if !(alpha_tr > 0.0 && alpha > 0.0) || !alpha_tr.is_finite() || !alpha.is_finite() {
        return Err(Error::Range(format!(
            "loads must be positive and finite (alpha_tr={alpha_tr}, alpha={alpha})"
        )));
    }
    if len == 0 || tau > len {
        return Err(Error::Range(format!(
            "need 0 <= tau <= L (tau={tau}, L={len})"
        )));
    }
    let frac = tau as f64 / len as f64;
    Ok(1.0 / (frac / alpha_tr + (1.0 - frac) / alpha))
}

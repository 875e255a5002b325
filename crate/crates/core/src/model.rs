//! Causal-factor state layout and the time-varying observation matrix.
//!
//! Each node `k` of a `G`-node graph has `G - 1` instantaneous factors
//! (effect of `y_j[n]` on `y_k[n]`) and `G - 1` lag-1 factors (effect of
//! `y_j[n-1]` on `y_k[n]`), with self effects excluded. The flat state
//! vector stacks one block of `2(G - 1)` entries per target node. Inside a
//! block the instantaneous entries come first, then the lagged ones, with
//! sources in ascending order and the target itself skipped.
//!
//! Node indices are zero-based throughout the API.

use std::fmt;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// The set of assets (nodes) whose pairwise causal factors are estimated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSpec {
    labels: Vec<String>,
}

impl GraphSpec {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(Error::DegenerateGraph(labels.len()));
        }
        for (i, label) in labels.iter().enumerate() {
            if label.is_empty() {
                return Err(Error::InvalidGraph(format!("node {i} has an empty label")));
            }
            if labels[..i].contains(label) {
                return Err(Error::InvalidGraph(format!("duplicate node label `{label}`")));
            }
        }
        Ok(Self { labels })
    }

    /// Graph with default labels `y1 .. yG`.
    pub fn with_nodes(node_count: usize) -> Result<Self> {
        Self::new((1..=node_count).map(|i| format!("y{i}")))
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FactorKind {
    Instantaneous,
    Lagged,
}

impl FactorKind {
    pub fn suffix(self) -> &'static str {
        match self {
            FactorKind::Instantaneous => "inst",
            FactorKind::Lagged => "lag",
        }
    }
}

/// One causal factor: the effect of `source` on `target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FactorIndex {
    pub target: usize,
    pub source: usize,
    pub kind: FactorKind,
}

/// Canonical mapping between causal factors and flat state indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateLayout {
    graph: GraphSpec,
}

/// Builds the canonical layout for `graph`.
pub fn layout_for(graph: GraphSpec) -> Result<StateLayout> {
    StateLayout::new(graph)
}

impl StateLayout {
    pub fn new(graph: GraphSpec) -> Result<Self> {
        if graph.node_count() < 2 {
            return Err(Error::DegenerateGraph(graph.node_count()));
        }
        Ok(Self { graph })
    }

    pub fn graph(&self) -> &GraphSpec {
        &self.graph
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// State dimension, `2 G (G - 1)`.
    pub fn dim(&self) -> usize {
        let g = self.node_count();
        2 * g * (g - 1)
    }

    /// Length of one target block, `2 (G - 1)`.
    pub fn block_len(&self) -> usize {
        2 * (self.node_count() - 1)
    }

    /// Flat indices belonging to target `k`.
    pub fn block(&self, target: usize) -> Range<usize> {
        let len = self.block_len();
        target * len..(target + 1) * len
    }

    pub fn index_of(&self, factor: FactorIndex) -> Option<usize> {
        let g = self.node_count();
        let FactorIndex {
            target,
            source,
            kind,
        } = factor;
        if target >= g || source >= g || target == source {
            return None;
        }
        let slot = if source < target { source } else { source - 1 };
        let offset = match kind {
            FactorKind::Instantaneous => slot,
            FactorKind::Lagged => (g - 1) + slot,
        };
        Some(target * self.block_len() + offset)
    }

    pub fn factor_at(&self, index: usize) -> Option<FactorIndex> {
        if index >= self.dim() {
            return None;
        }
        let g = self.node_count();
        let target = index / self.block_len();
        let offset = index % self.block_len();
        let (kind, slot) = if offset < g - 1 {
            (FactorKind::Instantaneous, offset)
        } else {
            (FactorKind::Lagged, offset - (g - 1))
        };
        let source = if slot < target { slot } else { slot + 1 };
        Some(FactorIndex {
            target,
            source,
            kind,
        })
    }

    /// All factors in flat-index order.
    pub fn factors(&self) -> impl Iterator<Item = FactorIndex> + '_ {
        (0..self.dim()).map(move |i| self.factor_at(i).expect("index below dim"))
    }

    /// Column name `<target>_from_<source>_<inst|lag>` for flat index `index`.
    pub fn column_name(&self, index: usize) -> Option<String> {
        let f = self.factor_at(index)?;
        let labels = self.graph.labels();
        Some(format!(
            "{}_from_{}_{}",
            labels[f.target],
            labels[f.source],
            f.kind.suffix()
        ))
    }

    pub fn column_names(&self) -> Vec<String> {
        (0..self.dim())
            .map(|i| self.column_name(i).expect("index below dim"))
            .collect()
    }
}

/// Instantaneous (`a0`) and lag-1 (`a1`) coefficient matrices with zero
/// diagonals. Entry `(k, j)` is the effect of node `j` on node `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalFactors {
    a0: DMatrix<f64>,
    a1: DMatrix<f64>,
}

impl CausalFactors {
    pub fn new(a0: DMatrix<f64>, a1: DMatrix<f64>) -> Result<Self> {
        let g = a0.nrows();
        for (name, m) in [("a0", &a0), ("a1", &a1)] {
            if m.nrows() != g || m.ncols() != g {
                return Err(Error::DimensionMismatch {
                    context: "causal factor matrix shape",
                    expected: g,
                    actual: if m.nrows() != g { m.nrows() } else { m.ncols() },
                });
            }
            if let Some(k) = (0..g).find(|&k| m[(k, k)] != 0.0) {
                return Err(Error::InvariantViolation(format!(
                    "{name} has nonzero diagonal entry ({k}, {k}) = {}",
                    m[(k, k)]
                )));
            }
        }
        if g < 2 {
            return Err(Error::DegenerateGraph(g));
        }
        Ok(Self { a0, a1 })
    }

    /// Convenience constructor from row-major nested slices.
    pub fn from_rows(a0: &[Vec<f64>], a1: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(a0)?, matrix_from_rows(a1)?)
    }

    pub fn zeros(node_count: usize) -> Result<Self> {
        Self::new(
            DMatrix::zeros(node_count, node_count),
            DMatrix::zeros(node_count, node_count),
        )
    }

    pub fn node_count(&self) -> usize {
        self.a0.nrows()
    }

    pub fn a0(&self) -> &DMatrix<f64> {
        &self.a0
    }

    pub fn a1(&self) -> &DMatrix<f64> {
        &self.a1
    }

    pub fn get(&self, factor: FactorIndex) -> f64 {
        match factor.kind {
            FactorKind::Instantaneous => self.a0[(factor.target, factor.source)],
            FactorKind::Lagged => self.a1[(factor.target, factor.source)],
        }
    }

    /// Structural prediction `a0 y_now + a1 y_prev` (diagonals are zero).
    pub fn predict(&self, y_now: &[f64], y_prev: &[f64]) -> Result<DVector<f64>> {
        let g = self.node_count();
        check_len("y_now", g, y_now.len())?;
        check_len("y_prev", g, y_prev.len())?;
        let now = DVector::from_column_slice(y_now);
        let prev = DVector::from_column_slice(y_prev);
        Ok(&self.a0 * now + &self.a1 * prev)
    }
}

impl fmt::Display for CausalFactors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a0 = {}a1 = {}", self.a0, self.a1)
    }
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            context: "square matrix row",
            expected: n,
            actual: bad.len(),
        });
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        });
    }
    Ok(())
}

/// Flattens `factors` into a state vector in `layout` order.
pub fn pack(factors: &CausalFactors, layout: &StateLayout) -> Result<DVector<f64>> {
    check_len(
        "factor node count",
        layout.node_count(),
        factors.node_count(),
    )?;
    Ok(DVector::from_iterator(
        layout.dim(),
        layout.factors().map(|f| factors.get(f)),
    ))
}

/// Inverse of [`pack`].
pub fn unpack(x: &DVector<f64>, layout: &StateLayout) -> Result<CausalFactors> {
    check_len("state vector length", layout.dim(), x.len())?;
    let g = layout.node_count();
    let mut a0 = DMatrix::zeros(g, g);
    let mut a1 = DMatrix::zeros(g, g);
    for (i, f) in layout.factors().enumerate() {
        match f.kind {
            FactorKind::Instantaneous => a0[(f.target, f.source)] = x[i],
            FactorKind::Lagged => a1[(f.target, f.source)] = x[i],
        }
    }
    Ok(CausalFactors { a0, a1 })
}

/// Regressor row for node `k`: the other nodes' current values followed by
/// their previous values, sources ascending.
pub fn build_row(k: usize, y_now: &[f64], y_prev: &[f64]) -> Result<DVector<f64>> {
    let g = y_now.len();
    check_len("y_prev", g, y_prev.len())?;
    if k >= g {
        return Err(Error::IndexOutOfRange { index: k, limit: g });
    }
    let others = || (0..g).filter(move |&j| j != k);
    Ok(DVector::from_iterator(
        2 * (g - 1),
        others()
            .map(|j| y_now[j])
            .chain(others().map(|j| y_prev[j])),
    ))
}

/// Block-diagonal `G x dim` observation matrix for one measurement pair.
pub fn build_observation_matrix(
    y_now: &[f64],
    y_prev: &[f64],
    layout: &StateLayout,
) -> Result<DMatrix<f64>> {
    let g = layout.node_count();
    check_len("y_now", g, y_now.len())?;
    check_len("y_prev", g, y_prev.len())?;
    let mut h = DMatrix::zeros(g, layout.dim());
    for k in 0..g {
        let row = build_row(k, y_now, y_prev)?;
        let block = layout.block(k);
        for (c, v) in block.zip(row.iter()) {
            h[(k, c)] = *v;
        }
    }
    Ok(h)
}

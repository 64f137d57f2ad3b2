//! Undirected graphs, the random-walk transition matrix and network values.
//!
//! A customer's network value at horizon `t` is the intrinsic value mass that
//! reaches it after `t` steps of the random walk, `v = w M^t`, where `M` is the
//! row-stochastic transition matrix of the graph. Propagation is done with `t`
//! sparse vector-matrix products, never a matrix power.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// One of the two contestants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    /// The incumbent.
    Defender,
    /// The challenger.
    Attacker,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::Defender => Player::Attacker,
            Player::Attacker => Player::Defender,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Player::Defender => "D",
            Player::Attacker => "A",
        })
    }
}

impl FromStr for Player {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "d" | "defender" | "incumbent" => Ok(Player::Defender),
            "a" | "attacker" | "challenger" => Ok(Player::Attacker),
            other => Err(Error::InvalidParameter(format!("unknown player '{other}'"))),
        }
    }
}

/// Simple undirected graph with optional self-loops.
///
/// Neighbour lists are sorted and duplicate free; a self-loop appears once in
/// the list of its node and counts once towards the degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn has_self_loop(&self, node: usize) -> bool {
        self.adjacency[node].binary_search(&node).is_ok()
    }

    /// Number of undirected edges, self-loops included.
    pub fn edge_count(&self) -> usize {
        let loops = (0..self.node_count()).filter(|&j| self.has_self_loop(j)).count();
        let total: usize = self.adjacency.iter().map(Vec::len).sum();
        (total - loops) / 2 + loops
    }
}

/// Builds a graph from unordered node pairs.
///
/// `{u, v}` and `{v, u}` denote the same edge, so listing both is a duplicate.
/// With `add_self_loops`, every node that lacks a self-loop receives one.
pub fn build_graph(n: usize, edges: &[(usize, usize)], add_self_loops: bool) -> Result<Graph> {
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut adjacency = vec![Vec::new(); n];
    for &(u, v) in edges {
        for node in [u, v] {
            if node >= n {
                return Err(Error::NodeOutOfRange { node, n });
            }
        }
        adjacency[u].push(v);
        if u != v {
            adjacency[v].push(u);
        }
    }
    for (u, list) in adjacency.iter_mut().enumerate() {
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            let (a, b) = if u <= w[0] { (u, w[0]) } else { (w[0], u) };
            return Err(Error::DuplicateEdge { u: a, v: b });
        }
        if add_self_loops {
            if let Err(pos) = list.binary_search(&u) {
                list.insert(pos, u);
            }
        }
        if list.is_empty() {
            return Err(Error::IsolatedNode(u));
        }
    }
    Ok(Graph { adjacency })
}

/// Row-stochastic transition matrix in compressed sparse row form.
///
/// Row `j` holds `d_j` entries equal to `1 / d_j`, one per neighbour.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl TransitionMatrix {
    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    /// Column indices and values of row `j`.
    pub fn row(&self, j: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[j]..self.row_ptr[j + 1];
        (&self.cols[range.clone()], &self.vals[range])
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        let (cols, vals) = self.row(j);
        cols.binary_search(&k).map(|p| vals[p]).unwrap_or(0.0)
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Computes `x M` into `out`. Each row is scattered left to right, rows in
    /// increasing order, so results are bit-reproducible.
    pub fn left_multiply_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(j);
            for (&k, &m) in cols.iter().zip(vals) {
                out[k] += xj * m;
            }
        }
    }
}

pub fn transition_matrix(g: &Graph) -> TransitionMatrix {
    let mut row_ptr = Vec::with_capacity(g.node_count() + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for list in &g.adjacency {
        let p = 1.0 / list.len() as f64;
        cols.extend_from_slice(list);
        vals.extend(std::iter::repeat_n(p, list.len()));
        row_ptr.push(cols.len());
    }
    TransitionMatrix { row_ptr, cols, vals }
}

/// Per-customer values of one player: intrinsic (`horizon == None`) or
/// network values after `horizon` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ValuationVector {
    values: Vec<f64>,
    player: Player,
    horizon: Option<usize>,
}

impl ValuationVector {
    /// Intrinsic values; every entry must be finite and nonnegative.
    pub fn new(player: Player, values: Vec<f64>) -> Result<Self> {
        check_nonnegative(&values)?;
        Ok(Self {
            values,
            player,
            horizon: None,
        })
    }

    pub fn constant(player: Player, n: usize, value: f64) -> Result<Self> {
        Self::new(player, vec![value; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn player(&self) -> Player {
        self.player
    }

    pub fn horizon(&self) -> Option<usize> {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Multiplies every entry by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        Ok(Self {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        })
    }
}

pub(crate) fn check_nonnegative(values: &[f64]) -> Result<()> {
    match values
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
    {
        Some((index, &value)) => Err(Error::InvalidEntry { index, value }),
        None => Ok(()),
    }
}

/// Returns `v` with `v[k] = sum_j w[j] M^t(j, k)`.
pub fn walk_weight_propagation(
    m: &TransitionMatrix,
    w: &ValuationVector,
    t: usize,
) -> Result<ValuationVector> {
    if w.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            found: w.len(),
        });
    }
    let mut current = w.values.clone();
    let mut next = vec![0.0; current.len()];
    for _ in 0..t {
        m.left_multiply_into(&current, &mut next);
        std::mem::swap(&mut current, &mut next);
    }
    Ok(ValuationVector {
        values: current,
        player: w.player,
        horizon: Some(t),
    })
}

pub fn network_values(g: &Graph, w: &ValuationVector, t: usize) -> Result<ValuationVector> {
    walk_weight_propagation(&transition_matrix(g), w, t)
}

/// Parses an edge-list file: first line `n`, then one `u v` pair per line.
///
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_edge_list(text: &str) -> Result<(usize, Vec<(usize, usize)>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (line, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing node count".into(),
    })?;
    let n: usize = header.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("expected node count, found '{header}'"),
    })?;
    let mut edges = Vec::new();
    for (line, l) in lines {
        let mut parts = l.split_whitespace();
        let mut next = || -> Result<usize> {
            let tok = parts.next().ok_or(Error::Parse {
                line,
                msg: "expected two node indices".into(),
            })?;
            tok.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("invalid node index '{tok}'"),
            })
        };
        let u = next()?;
        let v = next()?;
        if parts.next().is_some() {
            return Err(Error::Parse {
                line,
                msg: "trailing tokens after edge".into(),
            });
        }
        for node in [u, v] {
            if node >= n {
                return Err(Error::Parse {
                    line,
                    msg: format!("node {node} out of range for n = {n}"),
                });
            }
        }
        edges.push((u, v));
    }
    Ok((n, edges))
}

/// Parses a valuation file: one decimal per nonblank line.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let l = l.trim();
            let v: f64 = l.parse().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("invalid number '{l}'"),
            })?;
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("value {v} must be finite and nonnegative"),
                });
            }
            Ok(v)
        })
        .collect()
}

//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use netcontest::{build_graph, GameSpec, Graph};

/// A random connected-enough instance: an edge list where every node has at
/// least one incident edge, optionally with self-loops added on top.
#[derive(Debug, Clone)]
pub struct RandomGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub self_loops: bool,
}

impl RandomGraph {
    pub fn sample(rng: &mut impl Rng, max_n: usize) -> Self {
        let n = rng.random_range(1..=max_n);
        let self_loops = n == 1 || rng.random_bool(0.4);
        let p = rng.random_range(0.15..0.8);
        let mut adj = vec![vec![false; n]; n];
        for u in 0..n {
            for v in u..n {
                if rng.random_bool(p) && (u != v || !self_loops) {
                    adj[u][v] = true;
                }
            }
        }
        if !self_loops {
            for u in 0..n {
                if !(0..n).any(|v| adj[u.min(v)][u.max(v)]) {
                    let v = (u + 1 + rng.random_range(0..n - 1)) % n;
                    adj[u.min(v)][u.max(v)] = true;
                }
            }
        }
        let edges = (0..n)
            .flat_map(|u| (u..n).map(move |v| (u, v)))
            .filter(|&(u, v)| adj[u][v])
            .collect();
        Self { n, edges, self_loops }
    }

    pub fn build(&self) -> Graph {
        build_graph(self.n, &self.edges, self.self_loops).unwrap()
    }

    /// Dense row-stochastic matrix built straight from the edge list.
    pub fn dense_transition(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.n]; self.n];
        for &(u, v) in &self.edges {
            a[u][v] = 1.0;
            a[v][u] = 1.0;
        }
        if self.self_loops {
            for (u, row) in a.iter_mut().enumerate() {
                row[u] = 1.0;
            }
        }
        for row in &mut a {
            let d: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= d);
        }
        a
    }
}

pub fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

pub fn mat_pow(m: &[Vec<f64>], t: usize) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut out: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..t {
        out = mat_mul(&out, m);
    }
    out
}

/// `v[k] = sum_j w[j] (M^t)[j][k]` by dense matrix power.
pub fn dense_network_values(m: &[Vec<f64>], w: &[f64], t: usize) -> Vec<f64> {
    let p = mat_pow(m, t);
    (0..w.len())
        .map(|k| (0..w.len()).map(|j| w[j] * p[j][k]).sum())
        .collect()
}

/// Expected payoff written out directly from the success function.
pub fn direct_payoff(own: &[f64], opp: &[f64], v: &[f64]) -> f64 {
    own.iter()
        .zip(opp)
        .zip(v)
        .map(|((&x, &y), &v)| if x + y > 0.0 { v * x / (x + y) } else { 0.5 * v })
        .sum()
}

/// Leader optimum of the substituted objective. In `u = sqrt(x)` it is the
/// rank-two form `(a.u)(b.u)` on the sphere `|u|^2 = B_D`, maximised along
/// `a/|a| + b/|b|` with `a = sqrt(vA)` and `b = vD / sqrt(vA)`.
pub fn rank_two_leader_optimum(game: &GameSpec) -> Vec<f64> {
    let va = game.v_attacker.values();
    let vd = game.v_defender.values();
    let a: Vec<f64> = va.iter().map(|x| x.sqrt()).collect();
    let b: Vec<f64> = vd.iter().zip(va).map(|(d, a)| d / a.sqrt()).collect();
    let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (na, nb) = (norm(&a), norm(&b));
    let u: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x / na + y / nb).collect();
    let nu2: f64 = u.iter().map(|v| v * v).sum();
    u.iter().map(|v| game.budget_defender * v * v / nu2).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_game(rng: &mut impl Rng, n: usize) -> GameSpec {
    let vd = (0..n).map(|_| rng.random_range(0.5..5.0)).collect();
    let va = (0..n).map(|_| rng.random_range(0.5..5.0)).collect();
    GameSpec::new(vd, va, rng.random_range(0.5..3.0), rng.random_range(0.5..3.0)).unwrap()
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn sup(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

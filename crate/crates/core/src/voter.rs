//! Monte Carlo simulation of the synchronous discrete-time voter model.
//!
//! Initial preferences are drawn independently per customer from the contest
//! success function of the two allocations; at every step each node copies
//! the time-`t` preference of a uniformly chosen neighbour. The resulting
//! payoff estimate is an independent check of the analytic
//! `sum_k v[k] * csf(x[k], y[k])` computed from network values.
//!
//! Run `r` of a simulation with master seed `s` draws from ChaCha8 seeded
//! with `s` on stream `r`, so estimates do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::contest::{share, Allocation};
use crate::error::{Error, Result};
use crate::graph::{Graph, Player, ValuationVector};

/// Preference of every node at a given time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceState {
    pub assignment: Vec<Player>,
    pub time: usize,
}

impl PreferenceState {
    pub fn count(&self, player: Player) -> usize {
        self.assignment.iter().filter(|&&p| p == player).count()
    }

    /// `sum_j w[j]` over the nodes preferring `player`.
    pub fn score(&self, w: &[f64], player: Player) -> f64 {
        self.assignment
            .iter()
            .zip(w)
            .filter(|(p, _)| **p == player)
            .map(|(_, &wj)| wj)
            .sum()
    }
}

/// Monte Carlo payoff estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEstimate {
    pub mean: f64,
    /// Bessel-corrected sample standard deviation over `sqrt(runs)`; zero
    /// when `runs == 1`.
    pub std_error: f64,
    pub runs: usize,
    pub seed: u64,
}

impl SimEstimate {
    /// Fewer than two runs give no variance information.
    pub fn insufficient_runs(&self) -> bool {
        self.runs < 2
    }

    /// Distance to `reference` in standard errors; 0 when both agree exactly
    /// and infinite when the estimate has no spread but differs.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = self.mean - reference;
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff.abs() <= 1e-12 * reference.abs().max(1.0) {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        }
    }
}

/// RNG for run `run` of a simulation with master seed `seed`.
pub fn run_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

/// Node `j` prefers the defender with probability `csf(x_D[j], x_A[j])`.
pub fn sample_initial<R: Rng + ?Sized>(
    x_defender: &Allocation,
    x_attacker: &Allocation,
    rng: &mut R,
) -> Result<PreferenceState> {
    if x_defender.len() != x_attacker.len() {
        return Err(Error::DimensionMismatch {
            expected: x_defender.len(),
            found: x_attacker.len(),
        });
    }
    let assignment = x_defender
        .spend
        .iter()
        .zip(&x_attacker.spend)
        .map(|(&d, &a)| {
            if rng.random::<f64>() < share(d, a) {
                Player::Defender
            } else {
                Player::Attacker
            }
        })
        .collect();
    Ok(PreferenceState { assignment, time: 0 })
}

/// One synchronous voter-model update.
pub fn step<R: Rng + ?Sized>(g: &Graph, s: &PreferenceState, rng: &mut R) -> PreferenceState {
    let assignment = (0..g.node_count())
        .map(|j| {
            let nbrs = g.neighbors(j);
            let pick = if nbrs.len() == 1 {
                nbrs[0]
            } else {
                nbrs[rng.random_range(0..nbrs.len())]
            };
            s.assignment[pick]
        })
        .collect();
    PreferenceState {
        assignment,
        time: s.time + 1,
    }
}

/// Final preference state of run `run`.
pub fn simulate_run(
    g: &Graph,
    x_defender: &Allocation,
    x_attacker: &Allocation,
    tau: usize,
    seed: u64,
    run: u64,
) -> Result<PreferenceState> {
    let n = g.node_count();
    if x_defender.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x_defender.len(),
        });
    }
    let mut rng = run_rng(seed, run);
    let mut state = sample_initial(x_defender, x_attacker, &mut rng)?;
    for _ in 0..tau {
        state = step(g, &state, &mut rng);
    }
    Ok(state)
}

/// Estimates `E[sum_j w[j] * 1{node j prefers player at time tau}]`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_payoff(
    g: &Graph,
    w: &ValuationVector,
    x_defender: &Allocation,
    x_attacker: &Allocation,
    player: Player,
    tau: usize,
    runs: usize,
    seed: u64,
) -> Result<SimEstimate> {
    if runs == 0 {
        return Err(Error::InvalidParameter("runs must be at least 1".into()));
    }
    let n = g.node_count();
    for len in [w.len(), x_defender.len(), x_attacker.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, found: len });
        }
    }
    let samples: Vec<f64> = (0..runs as u64)
        .into_par_iter()
        .map(|run| {
            simulate_run(g, x_defender, x_attacker, tau, seed, run)
                .map(|s| s.score(w.values(), player))
        })
        .collect::<Result<_>>()?;

    let mean = samples.iter().sum::<f64>() / runs as f64;
    let std_error = if runs > 1 {
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
        (var / runs as f64).sqrt()
    } else {
        0.0
    };
    Ok(SimEstimate {
        mean,
        std_error,
        runs,
        seed,
    })
}

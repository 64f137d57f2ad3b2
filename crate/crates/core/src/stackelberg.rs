//! Leader-follower equilibrium with the defender committing first.
//!
//! The attacker answers any defender allocation with its best response.
//! While that response is interior, substituting it into the defender's
//! payoff gives
//!
//! ```text
//! L(x) = (sum_l sqrt(vA[l] x[l])) * (sum_k vD[k] sqrt(x[k]) / sqrt(vA[k])) / (B_A + B_D)
//! ```
//!
//! whose stationarity conditions on the simplex drive the closed forms here.
//! Outside the interior region the follower's corner response is used
//! directly.

use rayon::prelude::*;

use crate::contest::{
    check_oracle_size, payoff_slices, simplex_grid, Allocation, EquilibriumResult, GameSpec, Method,
};
use crate::error::{Error, Result};
use crate::nash::{
    best_response_slices, nash_proportional, support_best_response_slices, TwoCommunitySpec,
};

fn check_leader_input(x_defender: &Allocation, game: &GameSpec) -> Result<()> {
    game.require_positive()?;
    if x_defender.len() != game.n() {
        return Err(Error::DimensionMismatch {
            expected: game.n(),
            found: x_defender.len(),
        });
    }
    crate::graph::check_nonnegative(&x_defender.spend)
}

/// The substituted objective `L(x)`; only meaningful for strictly positive
/// `x` with an interior follower response.
pub fn substituted_objective(x_defender: &Allocation, game: &GameSpec) -> Result<f64> {
    check_leader_input(x_defender, game)?;
    let va = game.v_attacker.values();
    let vd = game.v_defender.values();
    let (mut reach, mut weighted) = (0.0, 0.0);
    for ((&x, &a), &d) in x_defender.spend.iter().zip(va).zip(vd) {
        reach += (a * x).sqrt();
        weighted += d * x.sqrt() / a.sqrt();
    }
    Ok(reach * weighted / (game.budget_attacker + game.budget_defender))
}

/// The follower's exact best response to `x_defender`.
///
/// Contests the leader leaves empty are taken by the follower at vanishing
/// cost; they are reported with zero follower spend and count as lost for
/// the leader in [`leader_objective`].
pub fn follower_response(x_defender: &Allocation, game: &GameSpec) -> Result<Allocation> {
    check_leader_input(x_defender, game)?;
    let positive: Vec<usize> = (0..game.n()).filter(|&k| x_defender.spend[k] > 0.0).collect();
    let mut spend = vec![0.0; game.n()];
    if !positive.is_empty() {
        let va: Vec<f64> = positive.iter().map(|&k| game.v_attacker.values()[k]).collect();
        let xd: Vec<f64> = positive.iter().map(|&k| x_defender.spend[k]).collect();
        let sub = support_best_response_slices(&va, &xd, game.budget_attacker)?;
        for (&k, x) in positive.iter().zip(sub) {
            spend[k] = x;
        }
    }
    Ok(Allocation::new(game.budget_attacker, spend))
}

fn follower_is_interior(x_defender: &Allocation, game: &GameSpec) -> bool {
    x_defender.spend.iter().all(|&x| x > 0.0)
        && best_response_slices(
            game.v_attacker.values(),
            &x_defender.spend,
            game.budget_attacker,
        )
        .map(|br| br.feasible)
        .unwrap_or(false)
}

/// Defender payoff when the attacker best-responds to `x_defender`.
pub fn leader_objective(x_defender: &Allocation, game: &GameSpec) -> Result<f64> {
    if follower_is_interior(x_defender, game) {
        return substituted_objective(x_defender, game);
    }
    let reply = follower_response(x_defender, game)?;
    Ok(x_defender
        .spend
        .iter()
        .zip(&reply.spend)
        .zip(game.v_defender.values())
        .filter(|((&x, _), _)| x > 0.0)
        .map(|((&x, &y), &v)| v * x / (x + y))
        .sum())
}

/// Leader objective and its gradient for strictly positive `x`.
///
/// On the follower's support `S` the objective is
/// `sum_{k outside S} vD[k] + R * P / T` with `R = sum_S sqrt(vA x)`,
/// `P = sum_S vD sqrt(x) / sqrt(vA)` and `T = B_A + sum_S x`.
fn objective_and_gradient(x: &[f64], game: &GameSpec) -> Result<(f64, Vec<f64>)> {
    let va = game.v_attacker.values();
    let vd = game.v_defender.values();
    let reply = support_best_response_slices(va, x, game.budget_attacker)?;
    let (mut reach, mut weighted, mut total) = (0.0, 0.0, game.budget_attacker);
    let mut uncontested = 0.0;
    for k in 0..x.len() {
        if reply[k] > 0.0 {
            reach += (va[k] * x[k]).sqrt();
            weighted += vd[k] * x[k].sqrt() / va[k].sqrt();
            total += x[k];
        } else {
            uncontested += vd[k];
        }
    }
    let value = uncontested + reach * weighted / total;
    let grad = (0..x.len())
        .map(|k| {
            if reply[k] > 0.0 {
                let dr = va[k].sqrt() / (2.0 * x[k].sqrt());
                let dp = vd[k] / (2.0 * (va[k] * x[k]).sqrt());
                (dr * weighted + reach * dp) / total - reach * weighted / (total * total)
            } else {
                0.0
            }
        })
        .collect();
    Ok((value, grad))
}

/// Per-contest stationarity residuals of the substituted objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Stationarity {
    /// `2 mu (B_A + B_D) - g[k]` for every contest.
    pub residuals: Vec<f64>,
    pub mu: f64,
    /// `max |residual| / mean(g)`.
    pub relative: f64,
}

/// Residual of the first-order conditions
/// `2 mu (B_A + B_D) = sqrt(vA[k] / x[k]) * P + vD[k] / sqrt(vA[k] x[k]) * R`.
///
/// Without an explicit `mu` the least-squares multiplier is used, i.e.
/// `2 mu (B_A + B_D)` equals the mean of the right-hand sides.
pub fn stationarity_residual(
    x_defender: &Allocation,
    mu: Option<f64>,
    game: &GameSpec,
) -> Result<Stationarity> {
    check_leader_input(x_defender, game)?;
    if let Some(index) = x_defender.spend.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::FormulaDomain { index });
    }
    let va = game.v_attacker.values();
    let vd = game.v_defender.values();
    let x = &x_defender.spend;
    let reach: f64 = x.iter().zip(va).map(|(&x, &a)| (a * x).sqrt()).sum();
    let weighted: f64 = x
        .iter()
        .zip(va)
        .zip(vd)
        .map(|((&x, &a), &d)| d * x.sqrt() / a.sqrt())
        .sum();
    let rhs: Vec<f64> = (0..x.len())
        .map(|k| (va[k] / x[k]).sqrt() * weighted + vd[k] / (va[k] * x[k]).sqrt() * reach)
        .collect();
    let budget = game.budget_attacker + game.budget_defender;
    let mean = rhs.iter().sum::<f64>() / rhs.len() as f64;
    let mu = mu.unwrap_or(mean / (2.0 * budget));
    let residuals: Vec<f64> = rhs.iter().map(|g| 2.0 * mu * budget - g).collect();
    let relative = residuals.iter().map(|r| r.abs()).fold(0.0, f64::max) / mean;
    Ok(Stationarity {
        residuals,
        mu,
        relative,
    })
}

fn stackelberg_result(
    game: &GameSpec,
    x_defender: Allocation,
    method: Method,
) -> Result<EquilibriumResult> {
    let x_attacker = follower_response(&x_defender, game)?;
    let leader = leader_objective(&x_defender, game)?;
    let mut result = EquilibriumResult::from_allocations(game, x_defender, x_attacker, method)?;
    // Contests the leader leaves empty are lost in the limit, not tied.
    result.payoff_defender = leader;
    result.residual = stationarity_residual(&result.x_defender, None, game)
        .map(|s| s.relative)
        .unwrap_or(f64::NAN);
    Ok(result)
}

/// With proportional valuations the game is strategically zero-sum and the
/// leader gains nothing from commitment; the Nash allocations are returned.
pub fn stackelberg_proportional(game: &GameSpec) -> Result<EquilibriumResult> {
    let mut result = nash_proportional(game, 1e-9)?;
    result.method = Method::StackelbergClosed;
    result.residual = stationarity_residual(&result.x_defender, None, game)
        .map(|s| s.relative)
        .unwrap_or(f64::NAN);
    Ok(result)
}

/// The two per-customer defender spends `(x, y)` on the communities that
/// solve the stationarity conditions, as `[(x+, y+), (x-, y-)]`.
///
/// The larger spend of each pair is evaluated from the formula and the
/// smaller one as `B_D / m` minus it, which keeps `x + y = B_D / m` exact.
pub fn two_community_leader_candidates(spec: &TwoCommunitySpec) -> [(f64, f64); 2] {
    let c = spec.budget_defender / spec.m as f64;
    let (a, b) = (spec.alpha, spec.beta);
    let t = 2f64.sqrt() * (b - a) / (a * a + b * b).sqrt();
    let big = 0.25 * c * (2.0 + t.abs());
    let small = c - big;
    // Sign +: community 1 spends (c/4)(2 + t).
    let plus = if t >= 0.0 { (big, small) } else { (small, big) };
    [plus, (plus.1, plus.0)]
}

fn two_community_defender(spec: &TwoCommunitySpec, x: f64, y: f64) -> Allocation {
    let mut spend = vec![x; spec.m];
    spend.extend(std::iter::repeat_n(y, spec.m));
    Allocation::new(spec.budget_defender, spend)
}

/// Leader-follower equilibrium of a two-community game.
///
/// Both stationary candidates are evaluated and the one with the larger
/// leader payoff is kept; ties go to the candidate spending more on the
/// first community.
pub fn stackelberg_two_community(spec: &TwoCommunitySpec) -> Result<EquilibriumResult> {
    let game = spec.game()?;
    let mut best: Option<(f64, f64, Allocation)> = None;
    let mut diagnostics = Vec::new();
    for (x, y) in two_community_leader_candidates(spec) {
        let candidate = two_community_defender(spec, x, y);
        if !follower_is_interior(&candidate, &game) {
            diagnostics.push(format!("x = {x:.6e}, y = {y:.6e}"));
            continue;
        }
        let value = leader_objective(&candidate, &game)?;
        let better = match &best {
            None => true,
            Some((bv, bx, _)) => value > *bv || (value == *bv && x > *bx),
        };
        if better {
            best = Some((value, x, candidate));
        }
    }
    let (_, _, x_defender) = best.ok_or_else(|| {
        Error::InfeasibleFollower(format!(
            "both stationary candidates leave the follower at a corner ({})",
            diagnostics.join("; ")
        ))
    })?;
    stackelberg_result(&game, x_defender, Method::StackelbergClosed)
}

/// Refines an interior ascent result to machine precision.
///
/// In `u = sqrt(x)` the stationarity conditions read `u ~ P a + R b` with
/// `a = sqrt(vA)`, `b = vD / sqrt(vA)`, `R = a.u`, `P = b.u`, so iterating
/// that map is a power iteration converging to the interior optimum. Steps are
/// kept only while the follower stays interior and the residual shrinks.
fn polish_interior(mut x: Vec<f64>, game: &GameSpec) -> Vec<f64> {
    let budget = game.budget_defender;
    let residual = |x: &[f64]| {
        let alloc = Allocation::new(budget, x.to_vec());
        if !follower_is_interior(&alloc, game) {
            return f64::INFINITY;
        }
        stationarity_residual(&alloc, None, game)
            .map(|s| s.relative)
            .unwrap_or(f64::INFINITY)
    };
    let mut current = residual(&x);
    if !current.is_finite() {
        return x;
    }
    let a: Vec<f64> = game.v_attacker.values().iter().map(|v| v.sqrt()).collect();
    let b: Vec<f64> = game
        .v_defender
        .values()
        .iter()
        .zip(&a)
        .map(|(d, a)| d / a)
        .collect();
    for _ in 0..200 {
        let u: Vec<f64> = x.iter().map(|v| v.sqrt()).collect();
        let reach: f64 = a.iter().zip(&u).map(|(a, u)| a * u).sum();
        let weighted: f64 = b.iter().zip(&u).map(|(b, u)| b * u).sum();
        let next: Vec<f64> = a
            .iter()
            .zip(&b)
            .map(|(a, b)| (weighted * a + reach * b).powi(2))
            .collect();
        let total: f64 = next.iter().sum();
        let next: Vec<f64> = next.iter().map(|v| v * budget / total).collect();
        let r = residual(&next);
        if !(r < current) {
            break;
        }
        x = next;
        current = r;
    }
    x
}

/// Maximises [`leader_objective`] over the defender simplex by
/// exponentiated-gradient ascent with a backtracking step.
///
/// Iterates stay strictly positive (at least `1e-12 * B_D` per contest). The
/// run stops when the weighted spread of marginal values,
/// `sum_k x[k] |g[k] - gbar| / (B_D gbar)`, drops to `tol`.
pub fn stackelberg_numeric(game: &GameSpec, tol: f64, max_iter: usize) -> Result<EquilibriumResult> {
    game.require_positive()?;
    let n = game.n();
    let budget = game.budget_defender;
    if n == 1 {
        let mut r = stackelberg_result(game, Allocation::new(budget, vec![budget]), Method::StackelbergNumeric)?;
        r.iterations = 0;
        return Ok(r);
    }
    let floor = 1e-12 * budget;
    let project = |x: &mut Vec<f64>| {
        let s: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v = (*v * budget / s).max(floor));
        let s: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v *= budget / s);
    };

    let mut x = Allocation::proportional(budget, game.v_defender.values()).spend;
    project(&mut x);
    let (mut value, mut grad) = objective_and_gradient(&x, game)?;
    let mut eta = 1.0;
    let mut converged = false;
    let mut iterations = 0;
    let mut candidate = vec![0.0; n];
    while iterations < max_iter {
        let mean = x.iter().zip(&grad).map(|(x, g)| x * g).sum::<f64>() / budget;
        if !(mean > 0.0) {
            break;
        }
        let spread = x.iter().zip(&grad).map(|(x, g)| x * (g - mean).abs()).sum::<f64>() / (budget * mean);
        if spread <= tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut accepted = false;
        while eta > 1e-18 {
            for k in 0..n {
                candidate[k] = x[k] * (eta * (grad[k] / mean - 1.0)).exp();
            }
            project(&mut candidate);
            let (cv, cg) = objective_and_gradient(&candidate, game)?;
            if cv > value {
                x.copy_from_slice(&candidate);
                value = cv;
                grad = cg;
                eta = (eta * 2.0).min(1e3);
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            // No ascent step left at machine precision.
            converged = true;
            break;
        }
    }
    let x = polish_interior(x, game);
    let mut r = stackelberg_result(game, Allocation::new(budget, x), Method::StackelbergNumeric)?;
    r.iterations = iterations;
    r.converged = converged;
    Ok(r)
}

/// Brute-force leader-follower solution on the discretised simplices
/// (`n <= 3`): for every leader grid point the follower plays its grid
/// argmax, and the leader keeps the grid point with the best resulting
/// payoff. Ties on either side go to the lexicographically smallest point.
pub fn grid_stackelberg_oracle(game: &GameSpec, grid_steps: usize) -> Result<EquilibriumResult> {
    let n = game.n();
    check_oracle_size(n, grid_steps)?;
    let unit = simplex_grid(n, grid_steps);
    let scale = |b: f64| -> Vec<Vec<f64>> {
        unit.iter().map(|p| p.iter().map(|x| x * b).collect()).collect()
    };
    let gd = scale(game.budget_defender);
    let ga = scale(game.budget_attacker);
    let vd = game.v_defender.values();
    let va = game.v_attacker.values();
    let pay = |own: &[f64], opp: &[f64], v: &[f64]| payoff_slices(own, opp, v).unwrap_or(f64::NAN);

    let outcomes: Vec<(f64, usize)> = gd
        .par_iter()
        .map(|d| {
            let mut reply = 0;
            let mut reply_value = f64::NEG_INFINITY;
            for (j, a) in ga.iter().enumerate() {
                let p = pay(a, d, va);
                if p > reply_value {
                    reply_value = p;
                    reply = j;
                }
            }
            (pay(d, &ga[reply], vd), reply)
        })
        .collect();
    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.0 > outcomes[best].0 {
            best = i;
        }
    }
    let mut result = EquilibriumResult::from_allocations(
        game,
        Allocation::new(game.budget_defender, gd[best].clone()),
        Allocation::new(game.budget_attacker, ga[outcomes[best].1].clone()),
        Method::GridOracle,
    )?;
    result.residual = 1.0 / grid_steps as f64;
    result.iterations = gd.len() * ga.len();
    Ok(result)
}

//! Best responses and Nash equilibria of the budgeted proportional contest.
//!
//! Against an opponent spending `y` with `y[j] > 0`, the payoff
//! `sum_j v[j] x[j] / (x[j] + y[j])` is strictly concave on the simplex and
//! its interior maximiser is Friedman's formula
//!
//! ```text
//! x[j] = -y[j] + (B + sum(y)) * sqrt(v[j] y[j]) / sum_k sqrt(v[k] y[k])
//! ```
//!
//! When some `x[j]` comes out negative the constraint `x[j] >= 0` binds.
//! [`support_best_response`] drops those contests and re-solves on the rest
//! until every component is nonnegative, which yields the KKT point.

use rayon::prelude::*;

use crate::contest::{
    check_oracle_size, payoff_slices, simplex_grid, Allocation, EquilibriumResult, GameSpec, Method,
};
use crate::error::{Error, Result};
use crate::graph::{Player, ValuationVector};
use crate::roots::{brent, Tolerance};

/// Output of Friedman's formula; `feasible` is false when some component is
/// negative, in which case the allocation is returned unclamped.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub allocation: Allocation,
    pub feasible: bool,
}

/// Interior best response of a player with values `v` and budget `budget`
/// against `opp`.
pub fn best_response(v: &ValuationVector, opp: &Allocation, budget: f64) -> Result<BestResponse> {
    best_response_slices(v.values(), &opp.spend, budget)
}

pub(crate) fn best_response_slices(v: &[f64], opp: &[f64], budget: f64) -> Result<BestResponse> {
    if v.len() != opp.len() {
        return Err(Error::DimensionMismatch {
            expected: opp.len(),
            found: v.len(),
        });
    }
    if let Some(index) = opp.iter().position(|&y| !(y > 0.0)) {
        return Err(Error::FormulaDomain { index });
    }
    let roots: Vec<f64> = v.iter().zip(opp).map(|(&vj, &yj)| (vj * yj).sqrt()).collect();
    let denom: f64 = roots.iter().sum();
    if !(denom > 0.0) {
        return Err(Error::InvalidParameter("all valuations are zero".into()));
    }
    let total = budget + opp.iter().sum::<f64>();
    let spend: Vec<f64> = opp
        .iter()
        .zip(&roots)
        .map(|(&yj, &rj)| -yj + total * rj / denom)
        .collect();
    let feasible = spend.iter().all(|&x| x >= 0.0);
    Ok(BestResponse {
        allocation: Allocation::new(budget, spend),
        feasible,
    })
}

/// Exact best response allowing corner solutions.
///
/// Contests with zero value receive nothing. A contest with positive value
/// where the opponent spends nothing has no best response (any positive
/// spend wins it, zero spend only ties), so it is a domain error.
pub fn support_best_response(
    v: &ValuationVector,
    opp: &Allocation,
    budget: f64,
) -> Result<Allocation> {
    Ok(Allocation::new(
        budget,
        support_best_response_slices(v.values(), &opp.spend, budget)?,
    ))
}

pub(crate) fn support_best_response_slices(v: &[f64], opp: &[f64], budget: f64) -> Result<Vec<f64>> {
    if v.len() != opp.len() {
        return Err(Error::DimensionMismatch {
            expected: opp.len(),
            found: v.len(),
        });
    }
    let mut active = Vec::with_capacity(v.len());
    for (j, (&vj, &yj)) in v.iter().zip(opp).enumerate() {
        if vj > 0.0 {
            if !(yj > 0.0) {
                return Err(Error::FormulaDomain { index: j });
            }
            active.push(j);
        }
    }
    let mut out = vec![0.0; v.len()];
    if active.is_empty() {
        if budget > 0.0 {
            // Nothing is worth anything; spread the budget evenly.
            out.iter_mut().for_each(|x| *x = budget / v.len() as f64);
        }
        return Ok(out);
    }
    loop {
        let sub_v: Vec<f64> = active.iter().map(|&j| v[j]).collect();
        let sub_opp: Vec<f64> = active.iter().map(|&j| opp[j]).collect();
        let br = best_response_slices(&sub_v, &sub_opp, budget)?;
        if br.feasible {
            for (&j, &x) in active.iter().zip(&br.allocation.spend) {
                out[j] = x;
            }
            return Ok(out);
        }
        active = active
            .iter()
            .zip(&br.allocation.spend)
            .filter(|(_, &x)| x >= 0.0)
            .map(|(&j, _)| j)
            .collect();
    }
}

fn sup_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn sup_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Largest relative gap between each allocation and the exact best
/// response to the other, measured in the sup norm.
pub fn mutual_best_response_residual(
    game: &GameSpec,
    x_defender: &Allocation,
    x_attacker: &Allocation,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (player, own, opp) in [
        (Player::Defender, x_defender, x_attacker),
        (Player::Attacker, x_attacker, x_defender),
    ] {
        let br = support_best_response_slices(
            game.valuation(player).values(),
            &opp.spend,
            game.budget(player),
        )?;
        let scale = sup_norm(&own.spend).max(f64::MIN_POSITIVE);
        worst = worst.max(sup_norm_diff(&br, &own.spend) / scale);
    }
    Ok(worst)
}

/// Common factor `alpha` with `v_D = alpha * v_A`, or the worst deviation.
pub fn proportionality(game: &GameSpec, rel_tol: f64) -> std::result::Result<f64, f64> {
    let vd = game.v_defender.values();
    let va = game.v_attacker.values();
    let total_a: f64 = va.iter().sum();
    let total_d: f64 = vd.iter().sum();
    if !(total_a > 0.0 && total_d > 0.0) {
        return Err(f64::INFINITY);
    }
    let alpha = total_d / total_a;
    let deviation = vd
        .iter()
        .zip(va)
        .map(|(&d, &a)| {
            let scale = d.max(alpha * a);
            if scale > 0.0 {
                (d - alpha * a).abs() / scale
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    if deviation <= rel_tol {
        Ok(alpha)
    } else {
        Err(deviation)
    }
}

/// Closed-form equilibrium when `v_D = alpha * v_A`: every player spends in
/// proportion to its own values.
pub fn nash_proportional(game: &GameSpec, alpha_check: f64) -> Result<EquilibriumResult> {
    proportionality(game, alpha_check).map_err(|deviation| Error::NotProportional { deviation })?;
    let x_d = Allocation::proportional(game.budget_defender, game.v_defender.values());
    let x_a = Allocation::proportional(game.budget_attacker, game.v_attacker.values());
    let mut result = EquilibriumResult::from_allocations(game, x_d, x_a, Method::ClosedFormProportional)?;
    result.residual = mutual_best_response_residual(game, &result.x_defender, &result.x_attacker)
        .unwrap_or(f64::NAN);
    Ok(result)
}

/// Two equal communities of `m` customers each. The attacker values every
/// customer at `v`; the defender values the first community at `alpha * v`
/// and the second at `beta * v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoCommunitySpec {
    pub m: usize,
    pub v: f64,
    pub alpha: f64,
    pub beta: f64,
    pub budget_defender: f64,
    pub budget_attacker: f64,
}

impl TwoCommunitySpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("v", self.v),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("B_D", self.budget_defender),
            ("B_A", self.budget_attacker),
        ];
        if self.m == 0 {
            return Err(Error::InvalidParameter("community size m must be at least 1".into()));
        }
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and positive, got {value}"
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        2 * self.m
    }

    pub fn game(&self) -> Result<GameSpec> {
        self.validate()?;
        let m = self.m;
        let mut v_d = vec![self.alpha * self.v; m];
        v_d.extend(std::iter::repeat_n(self.beta * self.v, m));
        GameSpec::new(
            v_d,
            vec![self.v; 2 * m],
            self.budget_defender,
            self.budget_attacker,
        )
    }

    /// Recognises a two-community game: `n` even, constant attacker values,
    /// and defender values constant on each half, within `rel_tol`.
    pub fn detect(game: &GameSpec, rel_tol: f64) -> Option<Self> {
        let n = game.n();
        if n < 2 || n % 2 != 0 {
            return None;
        }
        let m = n / 2;
        let constant = |xs: &[f64]| -> Option<f64> {
            let first = xs[0];
            (first > 0.0 && xs.iter().all(|&x| (x - first).abs() <= rel_tol * first)).then_some(first)
        };
        let v = constant(game.v_attacker.values())?;
        let alpha = constant(&game.v_defender.values()[..m])? / v;
        let beta = constant(&game.v_defender.values()[m..])? / v;
        let spec = Self {
            m,
            v,
            alpha,
            beta,
            budget_defender: game.budget_defender,
            budget_attacker: game.budget_attacker,
        };
        spec.validate().ok().map(|_| spec)
    }
}

/// Fixed-point residual of the attacker's per-customer spend `x` on the
/// first community; zero at the equilibrium.
pub fn two_community_equation(spec: &TwoCommunitySpec, x: f64) -> f64 {
    let m = spec.m as f64;
    let (bd, ba) = (spec.budget_defender, spec.budget_attacker);
    let (a, b) = (spec.alpha, spec.beta);
    let y = ba / m - x;
    let defender_term = (bd / m) * a * x / ((a - b) * x + b * ba / m);
    let share_term = ((ba + bd) / m) * (a * x).sqrt() / ((a * x).sqrt() + (b * y).sqrt());
    -defender_term + share_term - x
}

/// Equilibrium attacker spend per customer of the first community, the unique
/// interior root of [`two_community_equation`] on `(0, B_A / m)`.
///
/// Both endpoints are roots as well, so the bracket is pulled inwards until
/// the function is positive near 0 and negative near `B_A / m`.
pub fn two_community_attacker_spend(spec: &TwoCommunitySpec) -> Result<f64> {
    spec.validate()?;
    let cap = spec.budget_attacker / spec.m as f64;
    let f = |x: f64| two_community_equation(spec, x);
    let offsets = [1e-3, 1e-6, 1e-9, 1e-12, 1e-15];
    let lo = offsets.iter().map(|e| cap * e).find(|&x| f(x) > 0.0);
    let hi = offsets.iter().map(|e| cap * (1.0 - e)).find(|&x| f(x) < 0.0);
    let (lo, hi) = match (lo, hi) {
        (Some(lo), Some(hi)) if lo < hi => (lo, hi),
        _ => {
            let (a, b) = (cap * 1e-15, cap * (1.0 - 1e-15));
            return Err(Error::NoSignChange { a, fa: f(a), b, fb: f(b) });
        }
    };
    let tol = Tolerance {
        rtol: 1e-12,
        atol: 0.0,
        max_iter: 500,
    };
    Ok(brent(f, lo, hi, tol)?.x)
}

/// Allocations of both players given the attacker's first-community spend.
pub(crate) fn two_community_allocations(spec: &TwoCommunitySpec, x: f64) -> (Allocation, Allocation) {
    let m = spec.m;
    let mf = m as f64;
    let y = spec.budget_attacker / mf - x;
    let (ax, by) = (spec.alpha * x, spec.beta * y);
    let d1 = (spec.budget_defender / mf) * ax / (ax + by);
    let d2 = (spec.budget_defender / mf) * by / (ax + by);
    let mut xd = vec![d1; m];
    xd.extend(std::iter::repeat_n(d2, m));
    let mut xa = vec![x; m];
    xa.extend(std::iter::repeat_n(y, m));
    (
        Allocation::new(spec.budget_defender, xd),
        Allocation::new(spec.budget_attacker, xa),
    )
}

/// Nash equilibrium of a two-community game.
pub fn nash_two_community(spec: &TwoCommunitySpec) -> Result<EquilibriumResult> {
    let game = spec.game()?;
    let x = two_community_attacker_spend(spec)?;
    let (xd, xa) = two_community_allocations(spec, x);
    let mut result = EquilibriumResult::from_allocations(&game, xd, xa, Method::TwoCommunity)?;
    result.residual = mutual_best_response_residual(&game, &result.x_defender, &result.x_attacker)?;
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrDynamicsOptions {
    /// Stop once the sup-norm change of both allocations in one sweep,
    /// divided by the larger budget, is at most `tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Weight of the new best response in each update, in `(0, 1]`.
    pub damping: f64,
}

impl Default for BrDynamicsOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            max_iter: 100_000,
            damping: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrDynamicsReport {
    pub converged: bool,
    pub iterations: usize,
    /// Scaled sup-norm change of the joint allocation in the last sweep.
    pub residual: f64,
}

/// Alternating damped best responses starting from value-proportional
/// allocations. The defender moves first in every sweep.
pub fn nash_br_dynamics(
    game: &GameSpec,
    opts: BrDynamicsOptions,
) -> Result<(EquilibriumResult, BrDynamicsReport)> {
    game.require_positive()?;
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "damping must lie in (0, 1], got {}",
            opts.damping
        )));
    }
    let (bd, ba) = (game.budget_defender, game.budget_attacker);
    let vd = game.v_defender.values();
    let va = game.v_attacker.values();
    let scale = bd.max(ba);
    let mut xd = Allocation::proportional(bd, vd).spend;
    let mut xa = Allocation::proportional(ba, va).spend;
    let blend = |old: &mut Vec<f64>, target: &[f64]| -> f64 {
        let mut change: f64 = 0.0;
        for (o, &t) in old.iter_mut().zip(target) {
            let next = (1.0 - opts.damping) * *o + opts.damping * t;
            change = change.max((next - *o).abs());
            *o = next;
        }
        change
    };

    let mut report = BrDynamicsReport {
        converged: false,
        iterations: 0,
        residual: f64::INFINITY,
    };
    for it in 1..=opts.max_iter {
        let br_d = support_best_response_slices(vd, &xa, bd)?;
        let change_d = blend(&mut xd, &br_d);
        let br_a = support_best_response_slices(va, &xd, ba)?;
        let change_a = blend(&mut xa, &br_a);
        report.iterations = it;
        report.residual = change_d.max(change_a) / scale;
        if report.residual <= opts.tol {
            report.converged = true;
            break;
        }
    }

    let mut result = EquilibriumResult::from_allocations(
        game,
        Allocation::new(bd, xd),
        Allocation::new(ba, xa),
        Method::BrDynamics,
    )?;
    result.residual = mutual_best_response_residual(game, &result.x_defender, &result.x_attacker)?;
    result.iterations = report.iterations;
    result.converged = report.converged;
    Ok((result, report))
}

/// Brute-force equilibrium on the discretised simplices (`n <= 3`).
///
/// Returns the grid pair with the smallest largest unilateral improvement
/// available to either player on the grid; ties go to the lexicographically
/// smallest `(x_D, x_A)`.
pub fn grid_nash_oracle(game: &GameSpec, grid_steps: usize) -> Result<EquilibriumResult> {
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

    // best_d[j]: best defender payoff against attacker grid point j.
    let best_d: Vec<f64> = ga
        .par_iter()
        .map(|a| gd.iter().map(|d| pay(d, a, vd)).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let best_a: Vec<f64> = gd
        .par_iter()
        .map(|d| ga.iter().map(|a| pay(a, d, va)).fold(f64::NEG_INFINITY, f64::max))
        .collect();

    let (gap, i, j) = (0..gd.len())
        .into_par_iter()
        .map(|i| {
            let mut best = (f64::INFINITY, i, usize::MAX);
            for j in 0..ga.len() {
                let g = (best_d[j] - pay(&gd[i], &ga[j], vd))
                    .max(best_a[i] - pay(&ga[j], &gd[i], va))
                    .max(0.0);
                if g < best.0 {
                    best = (g, i, j);
                }
            }
            best
        })
        .reduce(
            || (f64::INFINITY, usize::MAX, usize::MAX),
            |a, b| {
                if b.0 < a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) {
                    b
                } else {
                    a
                }
            },
        );
    let mut result = EquilibriumResult::from_allocations(
        game,
        Allocation::new(game.budget_defender, gd[i].clone()),
        Allocation::new(game.budget_attacker, ga[j].clone()),
        Method::GridOracle,
    )?;
    result.residual = gap;
    result.iterations = gd.len() * ga.len();
    Ok(result)
}

//! Proportional contest success function, budget-simplex allocations and the
//! aggregate payoff over all contests.

use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{check_nonnegative, Player, ValuationVector};

/// Probability that a player spending `x` beats an opponent spending `y`.
///
/// `x / (x + y)` when `x + y > 0`, and `1/2` when both spend nothing.
pub fn csf(x: f64, y: f64) -> Result<f64> {
    for (index, value) in [(0, x), (1, y)] {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::InvalidEntry { index, value });
        }
    }
    Ok(share(x, y))
}

#[inline]
pub(crate) fn share(x: f64, y: f64) -> f64 {
    let total = x + y;
    if total > 0.0 {
        x / total
    } else {
        0.5
    }
}

/// One player's spend on every contest together with its budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub budget: f64,
    pub spend: Vec<f64>,
}

/// Simplex membership report for an [`Allocation`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationCheck {
    pub feasible: bool,
    /// `budget - sum(spend)`; positive when money is left unspent.
    pub deficit: f64,
    /// Largest violation among the budget identity and the sign constraints.
    pub worst_violation: f64,
    pub tolerance: f64,
}

impl Allocation {
    /// Wraps a spend vector without checking it; see [`Allocation::checked`].
    pub fn new(budget: f64, spend: Vec<f64>) -> Self {
        Self { budget, spend }
    }

    /// Builds an allocation and rejects it unless it lies on the simplex.
    pub fn checked(budget: f64, spend: Vec<f64>) -> Result<Self> {
        let a = Self::new(budget, spend);
        let check = validate_allocation(&a);
        if check.feasible {
            Ok(a)
        } else {
            Err(Error::InvalidParameter(format!(
                "allocation off the budget simplex (deficit {:.3e}, worst violation {:.3e})",
                check.deficit, check.worst_violation
            )))
        }
    }

    /// Sets the budget to the sum of the given spends.
    pub fn from_spend(spend: Vec<f64>) -> Result<Self> {
        check_nonnegative(&spend)?;
        Ok(Self::new(spend.iter().sum(), spend))
    }

    pub fn uniform(budget: f64, n: usize) -> Self {
        Self::new(budget, vec![budget / n as f64; n])
    }

    /// Spends `budget` in proportion to `weights`; uniform when all weights are zero.
    pub fn proportional(budget: f64, weights: &[f64]) -> Self {
        let total: f64 = weights.iter().sum();
        if total > 0.0 {
            Self::new(budget, weights.iter().map(|w| budget * w / total).collect())
        } else {
            Self::uniform(budget, weights.len())
        }
    }

    pub fn len(&self) -> usize {
        self.spend.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spend.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.spend.iter().sum()
    }
}

/// Accepts iff every spend is nonnegative and the spends sum to the budget
/// within `1e-9 * max(budget, 1)`.
pub fn validate_allocation(a: &Allocation) -> AllocationCheck {
    let tolerance = 1e-9 * a.budget.abs().max(1.0);
    let deficit = a.budget - a.total();
    let negative = a
        .spend
        .iter()
        .map(|&x| if x.is_nan() { f64::INFINITY } else { (-x).max(0.0) })
        .fold(0.0, f64::max);
    let budget_violation = if a.budget < 0.0 || a.budget.is_nan() {
        f64::INFINITY
    } else {
        0.0
    };
    let worst_violation = deficit.abs().max(negative).max(budget_violation);
    AllocationCheck {
        feasible: worst_violation <= tolerance && negative == 0.0 && deficit.is_finite(),
        deficit,
        worst_violation,
        tolerance,
    }
}

/// `sum_j v[j] * csf(own[j], opp[j])`.
pub fn expected_payoff(own: &Allocation, opp: &Allocation, v: &ValuationVector) -> Result<f64> {
    payoff_slices(&own.spend, &opp.spend, v.values())
}

pub(crate) fn payoff_slices(own: &[f64], opp: &[f64], v: &[f64]) -> Result<f64> {
    for len in [opp.len(), v.len()] {
        if len != own.len() {
            return Err(Error::DimensionMismatch {
                expected: own.len(),
                found: len,
            });
        }
    }
    Ok(own
        .iter()
        .zip(opp)
        .zip(v)
        .map(|((&x, &y), &val)| val * share(x, y))
        .sum())
}

/// Largest instance the brute-force grid oracles accept.
pub const ORACLE_MAX_CONTESTS: usize = 3;
pub const ORACLE_MAX_STEPS: usize = 400;

pub(crate) fn check_oracle_size(n: usize, steps: usize) -> Result<()> {
    if n > ORACLE_MAX_CONTESTS || steps > ORACLE_MAX_STEPS || steps == 0 || n == 0 {
        return Err(Error::OracleTooLarge {
            n,
            steps,
            max_n: ORACLE_MAX_CONTESTS,
            max_steps: ORACLE_MAX_STEPS,
        });
    }
    Ok(())
}

/// All points `k / steps` of the unit simplex in `n` dimensions, with
/// integer `k` summing to `steps`, in ascending lexicographic order.
pub fn simplex_grid(n: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, left: usize, steps: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if n == 1 {
            prefix.push(left);
            out.push(prefix.iter().map(|&k| k as f64 / steps as f64).collect());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(n - 1, left - k, steps, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(n, steps, steps, &mut Vec::with_capacity(n), &mut out);
    }
    out
}

/// A two-player contest over `n` customers.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    pub v_defender: ValuationVector,
    pub v_attacker: ValuationVector,
    pub budget_defender: f64,
    pub budget_attacker: f64,
}

impl GameSpec {
    pub fn new(
        v_defender: Vec<f64>,
        v_attacker: Vec<f64>,
        budget_defender: f64,
        budget_attacker: f64,
    ) -> Result<Self> {
        if v_defender.len() != v_attacker.len() {
            return Err(Error::DimensionMismatch {
                expected: v_defender.len(),
                found: v_attacker.len(),
            });
        }
        if v_defender.is_empty() {
            return Err(Error::InvalidParameter("game needs at least one contest".into()));
        }
        for b in [budget_defender, budget_attacker] {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "budgets must be finite and nonnegative, got {b}"
                )));
            }
        }
        Ok(Self {
            v_defender: ValuationVector::new(Player::Defender, v_defender)?,
            v_attacker: ValuationVector::new(Player::Attacker, v_attacker)?,
            budget_defender,
            budget_attacker,
        })
    }

    pub fn n(&self) -> usize {
        self.v_defender.len()
    }

    pub fn valuation(&self, player: Player) -> &ValuationVector {
        match player {
            Player::Defender => &self.v_defender,
            Player::Attacker => &self.v_attacker,
        }
    }

    pub fn budget(&self, player: Player) -> f64 {
        match player {
            Player::Defender => self.budget_defender,
            Player::Attacker => self.budget_attacker,
        }
    }

    pub(crate) fn require_positive(&self) -> Result<()> {
        let positive = |v: &ValuationVector| v.values().iter().all(|&x| x > 0.0);
        if !(positive(&self.v_defender) && positive(&self.v_attacker)) {
            return Err(Error::InvalidParameter(
                "solver requires strictly positive valuations".into(),
            ));
        }
        if !(self.budget_defender > 0.0 && self.budget_attacker > 0.0) {
            return Err(Error::InvalidParameter(
                "solver requires strictly positive budgets".into(),
            ));
        }
        Ok(())
    }
}

/// Which solver produced an [`EquilibriumResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    ClosedFormProportional,
    TwoCommunity,
    BrDynamics,
    StackelbergClosed,
    StackelbergNumeric,
    GridOracle,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ClosedFormProportional => "closed-form-proportional",
            Method::TwoCommunity => "two-community",
            Method::BrDynamics => "br-dynamics",
            Method::StackelbergClosed => "stackelberg-closed",
            Method::StackelbergNumeric => "stackelberg-numeric",
            Method::GridOracle => "grid-oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Allocations of both players with their payoffs and solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub x_defender: Allocation,
    pub x_attacker: Allocation,
    pub payoff_defender: f64,
    pub payoff_attacker: f64,
    pub method: Method,
    /// Solver-specific certificate: mutual best-response gap for Nash
    /// solvers, relative stationarity gap for Stackelberg solvers, the
    /// remaining unilateral improvement for grid oracles.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl EquilibriumResult {
    /// Assembles a result, computing both payoffs from the allocations.
    pub fn from_allocations(
        game: &GameSpec,
        x_defender: Allocation,
        x_attacker: Allocation,
        method: Method,
    ) -> Result<Self> {
        let payoff_defender = expected_payoff(&x_defender, &x_attacker, &game.v_defender)?;
        let payoff_attacker = expected_payoff(&x_attacker, &x_defender, &game.v_attacker)?;
        Ok(Self {
            x_defender,
            x_attacker,
            payoff_defender,
            payoff_attacker,
            method,
            residual: 0.0,
            iterations: 0,
            converged: true,
        })
    }

    pub fn allocation(&self, player: Player) -> &Allocation {
        match player {
            Player::Defender => &self.x_defender,
            Player::Attacker => &self.x_attacker,
        }
    }

    pub fn payoff(&self, player: Player) -> f64 {
        match player {
            Player::Defender => self.payoff_defender,
            Player::Attacker => self.payoff_attacker,
        }
    }
}

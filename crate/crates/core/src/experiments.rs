//! Experiment runner: the two-community `delta` sweep comparing Nash and
//! leader-follower profits, the flat `key = value` config format, and the
//! solver dispatch used by the command line.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::contest::{expected_payoff, EquilibriumResult, GameSpec, Method};
use crate::error::{Error, Result};
use crate::graph::parse_values;
use crate::nash::{
    grid_nash_oracle, mutual_best_response_residual, nash_br_dynamics, nash_proportional,
    nash_two_community, proportionality, BrDynamicsOptions, TwoCommunitySpec,
};
use crate::stackelberg::{
    grid_stackelberg_oracle, stackelberg_numeric, stackelberg_proportional,
    stackelberg_two_community,
};

pub const CSV_HEADER: &str =
    "delta,scenario,B_D,ne_profit_D,se_profit_D,pct_increase_D,ne_profit_A,se_profit_A,ne_residual,se_residual";

/// Flat `key = value` file; `#` starts a comment, lists are comma separated.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(Error::Parse {
                line: i + 1,
                msg: format!("expected 'key = value', found '{line}'"),
            })?;
            let key = key.trim().to_string();
            if entries
                .insert(key.clone(), (i + 1, value.trim().to_string()))
                .is_some()
            {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("duplicate key '{key}'"),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map(|(l, _)| *l).unwrap_or(0)
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or(Error::Parse {
            line: 0,
            msg: format!("missing key '{key}'"),
        })
    }

    pub fn number<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.require(key)?;
        raw.parse().map_err(|_| Error::Parse {
            line: self.line(key),
            msg: format!("invalid value '{raw}' for '{key}'"),
        })
    }

    pub fn list(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.require(key)?;
        raw.split(',')
            .map(|s| {
                let s = s.trim();
                s.parse().map_err(|_| Error::Parse {
                    line: self.line(key),
                    msg: format!("invalid list entry '{s}' for '{key}'"),
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub m: usize,
    pub v: f64,
    pub budget_attacker: f64,
    pub budgets_defender: Vec<f64>,
    pub deltas: Vec<f64>,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

impl SweepConfig {
    /// The simulation setting of the two-community study: 50,000 customers
    /// per community, `v = 10`, `B_A = 200,000` and defender budgets of
    /// half, equal and twice the attacker's.
    pub fn full_scale() -> Self {
        Self {
            m: 50_000,
            v: 10.0,
            budget_attacker: 200_000.0,
            budgets_defender: vec![100_000.0, 200_000.0, 400_000.0],
            deltas: (0..10).map(|k| k as f64 / 10.0).collect(),
            out: None,
            seed: 0,
        }
    }

    /// Keys: `m`, `v`, `B_A`, `B_D` (list), `delta` (list), optional `out`
    /// and `seed`.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let cfg = Self {
            m: kv.number("m")?,
            v: kv.number("v")?,
            budget_attacker: kv.number("B_A")?,
            budgets_defender: kv.list("B_D")?,
            deltas: kv.list("delta")?,
            out: kv.get("out").map(PathBuf::from),
            seed: kv.get("seed").map(|_| kv.number("seed")).transpose()?.unwrap_or(0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || !(self.v > 0.0) || !(self.budget_attacker > 0.0) {
            return Err(Error::InvalidParameter(
                "m, v and B_A must be positive".into(),
            ));
        }
        if self.budgets_defender.is_empty() || self.deltas.is_empty() {
            return Err(Error::InvalidParameter("B_D and delta lists must be nonempty".into()));
        }
        if let Some(b) = self.budgets_defender.iter().find(|b| !(**b > 0.0)) {
            return Err(Error::InvalidParameter(format!("defender budget {b} must be positive")));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(**d >= 0.0 && **d < 1.0)) {
            return Err(Error::InvalidParameter(format!("delta {d} must lie in [0, 1)")));
        }
        Ok(())
    }

    /// Defender multipliers `(1 - delta, 1 + delta)` on communities 1 and 2.
    pub fn spec(&self, delta: f64, budget_defender: f64) -> TwoCommunitySpec {
        TwoCommunitySpec {
            m: self.m,
            v: self.v,
            alpha: 1.0 - delta,
            beta: 1.0 + delta,
            budget_defender,
            budget_attacker: self.budget_attacker,
        }
    }
}

/// One `(delta, B_D)` cell of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub delta: f64,
    pub scenario: String,
    pub budget_defender: f64,
    pub ne_profit_defender: f64,
    pub se_profit_defender: f64,
    pub pct_increase_defender: f64,
    pub ne_profit_attacker: f64,
    pub se_profit_attacker: f64,
    pub ne_residual: f64,
    pub se_residual: f64,
    pub ne: Option<EquilibriumResult>,
    pub se: Option<EquilibriumResult>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// `B_D / B_A` as a short label such as `0.5xB_A`.
pub fn scenario_label(budget_defender: f64, budget_attacker: f64) -> String {
    format!("{}xB_A", format_sig(budget_defender / budget_attacker, 6))
}

fn sweep_row(cfg: &SweepConfig, delta: f64, budget_defender: f64) -> SweepRow {
    let spec = cfg.spec(delta, budget_defender);
    let mut row = SweepRow {
        delta,
        scenario: scenario_label(budget_defender, cfg.budget_attacker),
        budget_defender,
        ne_profit_defender: f64::NAN,
        se_profit_defender: f64::NAN,
        pct_increase_defender: f64::NAN,
        ne_profit_attacker: f64::NAN,
        se_profit_attacker: f64::NAN,
        ne_residual: f64::NAN,
        se_residual: f64::NAN,
        ne: None,
        se: None,
        error: None,
    };
    let solved = (|| -> Result<(EquilibriumResult, EquilibriumResult, [f64; 4])> {
        let game = spec.game()?;
        let ne = nash_two_community(&spec)?;
        let se = stackelberg_two_community(&spec)?;
        let profits = [
            expected_payoff(&ne.x_defender, &ne.x_attacker, &game.v_defender)?,
            expected_payoff(&se.x_defender, &se.x_attacker, &game.v_defender)?,
            expected_payoff(&ne.x_attacker, &ne.x_defender, &game.v_attacker)?,
            expected_payoff(&se.x_attacker, &se.x_defender, &game.v_attacker)?,
        ];
        Ok((ne, se, profits))
    })();
    match solved {
        Ok((ne, se, [ne_d, se_d, ne_a, se_a])) => {
            row.ne_profit_defender = ne_d;
            row.se_profit_defender = se_d;
            row.ne_profit_attacker = ne_a;
            row.se_profit_attacker = se_a;
            row.pct_increase_defender = if ne_d > 0.0 {
                100.0 * (se_d - ne_d) / ne_d
            } else {
                f64::NAN
            };
            row.ne_residual = ne.residual;
            row.se_residual = se.residual;
            row.ne = Some(ne);
            row.se = Some(se);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Solves every `(delta, B_D)` pair. Rows are ordered by `B_D` (config
/// order) and then `delta`; failed rows carry their error and NaN numbers.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let cells: Vec<(f64, f64)> = cfg
        .budgets_defender
        .iter()
        .flat_map(|&b| cfg.deltas.iter().map(move |&d| (d, b)))
        .collect();
    Ok(cells
        .par_iter()
        .map(|&(d, b)| sweep_row(cfg, d, b))
        .collect())
}

/// `%.{digits}g`-style formatting: `digits` significant digits, trailing
/// zeros trimmed, exponent form outside `[1e-5, 10^digits)`.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{}{:02}", trim(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{:.*}", decimals, x))
    }
}

pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        let f = |x: f64| format_sig(x, 12);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            f(r.delta),
            r.scenario,
            f(r.budget_defender),
            f(r.ne_profit_defender),
            f(r.se_profit_defender),
            f(r.pct_increase_defender),
            f(r.ne_profit_attacker),
            f(r.se_profit_attacker),
            f(r.ne_residual),
            f(r.se_residual),
        )?;
    }
    Ok(())
}

pub fn write_csv_file(rows: &[SweepRow], path: &Path) -> std::io::Result<()> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    std::fs::write(path, buf)
}

/// Which equilibrium concept to solve for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Nash,
    Stackelberg,
}

/// How to solve: `Auto` uses a closed form when the instance has one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Auto,
    Closed,
    Numeric,
    Oracle,
}

/// Relative tolerance for recognising proportional or two-community games.
pub const STRUCTURE_TOL: f64 = 1e-9;
pub const ORACLE_STEPS: usize = 200;

/// Dispatches a game to the matching solver.
pub fn solve(game: &GameSpec, mode: Mode, method: SolveMethod) -> Result<EquilibriumResult> {
    let proportional = proportionality(game, STRUCTURE_TOL).is_ok();
    let two_community = TwoCommunitySpec::detect(game, STRUCTURE_TOL);
    let closed = || -> Result<EquilibriumResult> {
        match (mode, proportional, two_community) {
            (Mode::Nash, true, _) => nash_proportional(game, STRUCTURE_TOL),
            (Mode::Stackelberg, true, _) => stackelberg_proportional(game),
            (Mode::Nash, false, Some(spec)) => with_game_payoffs(game, nash_two_community(&spec)?),
            (Mode::Stackelberg, false, Some(spec)) => {
                with_game_payoffs(game, stackelberg_two_community(&spec)?)
            }
            _ => Err(Error::InvalidParameter(
                "no closed form: valuations are neither proportional nor two-community".into(),
            )),
        }
    };
    let numeric = || -> Result<EquilibriumResult> {
        match mode {
            Mode::Nash => Ok(nash_br_dynamics(game, BrDynamicsOptions::default())?.0),
            Mode::Stackelberg => stackelberg_numeric(game, 1e-12, 200_000),
        }
    };
    match method {
        SolveMethod::Closed => closed(),
        SolveMethod::Numeric => numeric(),
        SolveMethod::Auto => {
            if proportional || two_community.is_some() {
                closed()
            } else {
                numeric()
            }
        }
        SolveMethod::Oracle => match mode {
            Mode::Nash => grid_nash_oracle(game, ORACLE_STEPS),
            Mode::Stackelberg => grid_stackelberg_oracle(game, ORACLE_STEPS),
        },
    }
}

/// Re-evaluates a structured result against the caller's own game, whose
/// values may differ from the detected structure within the tolerance.
fn with_game_payoffs(game: &GameSpec, r: EquilibriumResult) -> Result<EquilibriumResult> {
    let mut out = EquilibriumResult::from_allocations(game, r.x_defender, r.x_attacker, r.method)?;
    out.iterations = r.iterations;
    out.converged = r.converged;
    out.residual = if r.method == Method::TwoCommunity {
        mutual_best_response_residual(game, &out.x_defender, &out.x_attacker)?
    } else {
        r.residual
    };
    if r.method == Method::StackelbergClosed {
        out.payoff_defender = r.payoff_defender;
    }
    Ok(out)
}

/// A game file: `B_D`, `B_A`, and either inline lists `v_D`, `v_A` or
/// valuation files `v_D_file`, `v_A_file` (relative to `base`).
pub fn parse_game(kv: &KeyValues, base: &Path) -> Result<GameSpec> {
    let values = |key: &str| -> Result<Vec<f64>> {
        let file_key = format!("{key}_file");
        match (kv.get(key), kv.get(&file_key)) {
            (Some(_), None) => kv.list(key),
            (None, Some(path)) => {
                let path = base.join(path);
                let text = std::fs::read_to_string(&path).map_err(|e| Error::Parse {
                    line: 0,
                    msg: format!("{}: {e}", path.display()),
                })?;
                parse_values(&text)
            }
            _ => Err(Error::Parse {
                line: 0,
                msg: format!("give exactly one of '{key}' and '{file_key}'"),
            }),
        }
    };
    GameSpec::new(values("v_D")?, values("v_A")?, kv.number("B_D")?, kv.number("B_A")?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(0.0, 12), "0");
        assert_eq!(format_sig(1.0, 12), "1");
        assert_eq!(format_sig(0.1, 12), "0.1");
        assert_eq!(format_sig(100000.0, 12), "100000");
        assert_eq!(format_sig(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_sig(2.0 / 3.0 * 1e6, 12), "666666.666667");
        assert_eq!(format_sig(1.5e-9, 12), "1.5e-09");
        assert_eq!(format_sig(-2.5e13, 12), "-2.5e+13");
        assert_eq!(format_sig(f64::NAN, 12), "NaN");
        assert_eq!(format_sig(0.5, 6), "0.5");
    }

    #[test]
    fn config_parsing() {
        let kv = KeyValues::parse(
            "# sweep\nm = 2\nv = 10\nB_A = 4\nB_D = 2, 4,8\ndelta = 0, 0.5\nseed = 7 # trailing\n",
        )
        .unwrap();
        let cfg = SweepConfig::from_key_values(&kv).unwrap();
        assert_eq!(cfg.m, 2);
        assert_eq!(cfg.budgets_defender, vec![2.0, 4.0, 8.0]);
        assert_eq!(cfg.deltas, vec![0.0, 0.5]);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.out, None);

        assert!(matches!(KeyValues::parse("m 2"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(KeyValues::parse("m=1\nm=2"), Err(Error::Parse { line: 2, .. })));
        let kv = KeyValues::parse("m = 2\nv = 10\nB_A = 4\nB_D = 2\ndelta = 1.0\n").unwrap();
        assert!(SweepConfig::from_key_values(&kv).is_err());
        let kv = KeyValues::parse("m = 2\nv = x\nB_A = 4\nB_D = 2\ndelta = 0\n").unwrap();
        assert!(matches!(SweepConfig::from_key_values(&kv), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn zero_delta_rows_have_no_gain() {
        let cfg = SweepConfig {
            m: 3,
            v: 2.0,
            budget_attacker: 5.0,
            budgets_defender: vec![2.5, 5.0, 10.0],
            deltas: vec![0.0, 0.4],
            out: None,
            seed: 0,
        };
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].budget_defender, 2.5);
        assert_eq!(rows[1].delta, 0.4);
        for r in rows.iter().filter(|r| r.delta == 0.0) {
            assert!(r.pct_increase_defender.abs() < 1e-7);
        }
        for r in &rows {
            assert!(r.is_ok());
            assert!(r.pct_increase_defender >= -1e-6);
        }
    }

    #[test]
    fn failed_rows_are_recorded() {
        let cfg = SweepConfig {
            m: 1,
            v: 1.0,
            budget_attacker: 1e-3,
            budgets_defender: vec![1000.0],
            deltas: vec![0.0, 0.95],
            out: None,
            seed: 0,
        };
        let rows = run_sweep(&cfg).unwrap();
        assert!(rows[1].error.is_some());
        assert!(rows[1].pct_increase_defender.is_nan());
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(2).unwrap().contains("NaN"));
    }

    #[test]
    fn dispatch_picks_closed_forms() {
        let prop = GameSpec::new(vec![2.0, 4.0, 6.0], vec![1.0, 2.0, 3.0], 1.0, 1.0).unwrap();
        assert_eq!(solve(&prop, Mode::Nash, SolveMethod::Auto).unwrap().method, Method::ClosedFormProportional);
        assert_eq!(
            solve(&prop, Mode::Stackelberg, SolveMethod::Auto).unwrap().method,
            Method::StackelbergClosed
        );
        let two = TwoCommunitySpec { m: 2, v: 1.0, alpha: 0.5, beta: 1.5, budget_defender: 1.0, budget_attacker: 1.0 }
            .game()
            .unwrap();
        assert_eq!(solve(&two, Mode::Nash, SolveMethod::Auto).unwrap().method, Method::TwoCommunity);
        let generic = GameSpec::new(vec![1.0, 2.0, 3.0], vec![3.0, 1.0, 1.0], 1.0, 2.0).unwrap();
        let r = solve(&generic, Mode::Nash, SolveMethod::Auto).unwrap();
        assert_eq!(r.method, Method::BrDynamics);
        assert!(r.residual <= 1e-6);
        assert!(solve(&generic, Mode::Nash, SolveMethod::Closed).is_err());
        let big = GameSpec::new(vec![1.0; 4], vec![1.0; 4], 1.0, 1.0).unwrap();
        assert!(matches!(
            solve(&big, Mode::Nash, SolveMethod::Oracle),
            Err(Error::OracleTooLarge { .. })
        ));
    }

    #[test]
    fn game_file_parsing() {
        let kv = KeyValues::parse("B_D = 2\nB_A = 1\nv_D = 1, 2\nv_A = 1,1\n").unwrap();
        let g = parse_game(&kv, Path::new(".")).unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.budget_defender, 2.0);
        let kv = KeyValues::parse("B_D = 2\nB_A = 1\nv_D = 1, 2\n").unwrap();
        assert!(parse_game(&kv, Path::new(".")).is_err());
    }
}

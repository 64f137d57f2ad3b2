use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use netcontest::contest::{expected_payoff, Allocation, EquilibriumResult};
use netcontest::experiments::{
    parse_game, run_sweep, solve, write_csv, KeyValues, Mode, SolveMethod, SweepConfig,
};
use netcontest::graph::{build_graph, network_values, parse_edge_list, parse_values, Graph};
use netcontest::voter::simulate_payoff;
use netcontest::{Player, ValuationVector};

#[derive(Parser, Debug)]
#[command(name = "netcontest", version, about = "Network values and equilibria of budgeted influence contests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Propagate intrinsic values through t steps of the voter model.
    Netvalue {
        /// Edge-list file: `n` on the first line, then `u v` pairs.
        #[arg(long)]
        graph: PathBuf,
        /// One nonnegative value per line.
        #[arg(long)]
        values: PathBuf,
        #[arg(long, default_value_t = 1)]
        t: usize,
        /// Give every node without one a self-loop.
        #[arg(long)]
        self_loops: bool,
        /// Output file (one value per line); stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a game file for a Nash or a leader-follower equilibrium.
    Solve {
        /// Game file with `B_D`, `B_A` and `v_D`/`v_A` (or `v_D_file`/`v_A_file`).
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Nash)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
    },
    /// Monte Carlo voter-model payoff against the analytic value.
    Simulate {
        #[arg(long)]
        graph: PathBuf,
        /// Intrinsic values of the scored player.
        #[arg(long)]
        values: PathBuf,
        /// Defender spends, one per line.
        #[arg(long)]
        alloc_d: PathBuf,
        /// Attacker spends, one per line.
        #[arg(long)]
        alloc_a: PathBuf,
        #[arg(long, default_value = "D")]
        player: Player,
        /// Horizon (number of voter-model steps).
        #[arg(long, default_value_t = 1)]
        t: usize,
        #[arg(long, default_value_t = 10_000)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        self_loops: bool,
    },
    /// Run the two-community delta sweep and write the CSV.
    Sweep {
        /// Flat `key = value` sweep config.
        #[arg(long)]
        config: PathBuf,
        /// Output CSV; overrides `out` in the config, stdout when neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Nash,
    Stackelberg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Auto,
    Closed,
    Numeric,
    Oracle,
}

/// Exit status for a run that finished but left something unconverged.
struct Unconverged;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_graph(path: &Path, self_loops: bool) -> Result<Graph> {
    let (n, edges) = parse_edge_list(&read(path)?).with_context(|| path.display().to_string())?;
    build_graph(n, &edges, self_loops).with_context(|| path.display().to_string())
}

fn load_values(path: &Path) -> Result<Vec<f64>> {
    parse_values(&read(path)?).with_context(|| path.display().to_string())
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.12}")).collect::<Vec<_>>().join(" ")
}

fn print_result(r: &EquilibriumResult) {
    println!("method: {}", r.method);
    println!("x_D: {}", join(&r.x_defender.spend));
    println!("x_A: {}", join(&r.x_attacker.spend));
    println!("payoff_D: {:.12}", r.payoff_defender);
    println!("payoff_A: {:.12}", r.payoff_attacker);
    println!("residual: {:.3e}", r.residual);
    println!("iterations: {}", r.iterations);
    println!("converged: {}", r.converged);
}

fn run(cli: Cli) -> Result<Option<Unconverged>> {
    match cli.command {
        Command::Netvalue {
            graph,
            values,
            t,
            self_loops,
            out,
        } => {
            let g = load_graph(&graph, self_loops)?;
            let w = ValuationVector::new(Player::Defender, load_values(&values)?)?;
            let v = network_values(&g, &w, t)?;
            let body: String = v.values().iter().map(|x| format!("{x}\n")).collect();
            match out {
                Some(path) => {
                    std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
                }
                None => print!("{body}"),
            }
            eprintln!("sum_w = {:.15e}", w.total());
            eprintln!("sum_v = {:.15e}", v.total());
            Ok(None)
        }
        Command::Solve { config, mode, method } => {
            let kv = KeyValues::parse(&read(&config)?)?;
            let base = config.parent().unwrap_or(Path::new("."));
            let game = parse_game(&kv, base)?;
            let mode = match mode {
                ModeArg::Nash => Mode::Nash,
                ModeArg::Stackelberg => Mode::Stackelberg,
            };
            let method = match method {
                MethodArg::Auto => SolveMethod::Auto,
                MethodArg::Closed => SolveMethod::Closed,
                MethodArg::Numeric => SolveMethod::Numeric,
                MethodArg::Oracle => SolveMethod::Oracle,
            };
            let r = solve(&game, mode, method)?;
            print_result(&r);
            Ok((!r.converged).then_some(Unconverged))
        }
        Command::Simulate {
            graph,
            values,
            alloc_d,
            alloc_a,
            player,
            t,
            runs,
            seed,
            self_loops,
        } => {
            let g = load_graph(&graph, self_loops)?;
            let w = ValuationVector::new(player, load_values(&values)?)?;
            let xd = Allocation::from_spend(load_values(&alloc_d)?)?;
            let xa = Allocation::from_spend(load_values(&alloc_a)?)?;
            let est = simulate_payoff(&g, &w, &xd, &xa, player, t, runs, seed)?;
            let v = network_values(&g, &w, t)?;
            let (own, opp) = match player {
                Player::Defender => (&xd, &xa),
                Player::Attacker => (&xa, &xd),
            };
            let analytic = expected_payoff(own, opp, &v)?;
            println!("player: {player}");
            println!("runs: {}", est.runs);
            println!("seed: {}", est.seed);
            println!("estimate: {:.12}", est.mean);
            if est.insufficient_runs() {
                println!("stderr: 0 (insufficient runs)");
            } else {
                println!("stderr: {:.12}", est.std_error);
            }
            println!("analytic: {:.12}", analytic);
            println!("z: {:.4}", est.z_score(analytic));
            Ok(None)
        }
        Command::Sweep { config, out } => {
            let kv = KeyValues::parse(&read(&config)?)?;
            let mut cfg = SweepConfig::from_key_values(&kv)?;
            if out.is_some() {
                cfg.out = out;
            }
            let rows = run_sweep(&cfg)?;
            let mut failed = false;
            for r in rows.iter().filter(|r| !r.is_ok()) {
                failed = true;
                eprintln!(
                    "row delta = {} B_D = {} failed: {}",
                    r.delta,
                    r.budget_defender,
                    r.error.as_deref().unwrap_or("")
                );
            }
            match &cfg.out {
                Some(path) => {
                    let file = std::fs::File::create(path)
                        .with_context(|| format!("creating {}", path.display()))?;
                    write_csv(&rows, std::io::BufWriter::new(file))?;
                }
                None => write_csv(&rows, std::io::stdout().lock())?,
            }
            if rows.is_empty() {
                bail!("sweep produced no rows");
            }
            Ok(failed.then_some(Unconverged))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(Unconverged)) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

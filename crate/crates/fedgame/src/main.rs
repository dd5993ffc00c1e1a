use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fedgame::commands::{self, SweepRange};
use fedgame::config::ExperimentConfig;
use fedgame::Result;
use fedgame_core::equilibrium::DEFAULT_GRID_POINTS;
use fedgame_core::game::GameCosts;

/// Poisoning games over federated signal classification.
#[derive(Debug, Parser)]
#[command(name = "fedgame", version)]
struct Cli {
    /// Flat TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the accuracy table U(k|i) and write table_n<N>.csv.
    Table {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Best and worst defense utility per table.
    Bounds {
        /// Table file or directory of tables.
        tables: PathBuf,
        #[arg(long)]
        defense_cost: Option<f64>,
    },
    /// Mixed equilibria of the two-client game.
    Game2 {
        table: PathBuf,
        #[arg(long)]
        attack_cost: Option<f64>,
        #[arg(long)]
        defense_cost: Option<f64>,
        /// Equal-cost sweep as min:max:points.
        #[arg(long)]
        sweep: Option<SweepRange>,
        #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
        grid: usize,
    },
    /// Pure equilibria of the n-client game.
    Gamen {
        /// Table file or directory of tables.
        tables: PathBuf,
        #[arg(long)]
        attack_cost: Option<f64>,
        #[arg(long)]
        defense_cost: Option<f64>,
    },
}

fn costs(cfg: &ExperimentConfig, attack: Option<f64>, defense: Option<f64>) -> Result<GameCosts> {
    Ok(GameCosts::new(
        attack.unwrap_or(cfg.costs.attack),
        defense.unwrap_or(cfg.costs.defense),
    )?)
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed)?;
    }
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    match cli.command {
        Command::Table { n, trials } => {
            cfg.n = n.unwrap_or(cfg.n);
            cfg.trials = trials.unwrap_or(cfg.trials);
            let cfg = cfg.finish()?;
            Ok(vec![commands::cmd_table(&cfg)?])
        }
        Command::Bounds {
            tables,
            defense_cost,
        } => {
            let costs = costs(&cfg, None, defense_cost)?;
            Ok(vec![commands::cmd_bounds(&tables, costs, &cfg.output_dir)?])
        }
        Command::Game2 {
            table,
            attack_cost,
            defense_cost,
            sweep,
            grid,
        } => {
            let costs = costs(&cfg, attack_cost, defense_cost)?;
            commands::cmd_game2(&table, costs, sweep, grid, &cfg.output_dir)
        }
        Command::Gamen {
            tables,
            attack_cost,
            defense_cost,
        } => {
            let costs = costs(&cfg, attack_cost, defense_cost)?;
            commands::cmd_gamen(&tables, costs, &cfg.output_dir)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

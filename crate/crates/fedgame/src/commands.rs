//! The four subcommands, callable without a process boundary.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fedgame_core::equilibrium::{
    find_pure_nash, pure_deviation_free, select_equilibrium, solve_two_client, MixedEquilibrium,
};
use fedgame_core::game::{defense_bound_utility, AttackerStance, DefenseCase, GameCosts};
use fedgame_core::table::AccuracyTable;

use crate::campaign;
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::report::{
    write_json, BestResponses, Game2Report, GamenRecord, GamenReport, MixedRecord, PureRecord,
    Status,
};
use crate::tables::{
    bounds_csv, fixed, fixed_or_empty, read_table, read_tables, rows_csv, write_file, write_table,
    BoundsRow,
};

pub const GAME2_SWEEP_HEADER: [&str; 5] = ["cost", "p", "q", "u_attacker", "u_defender"];
pub const GAMEN_SWEEP_HEADER: [&str; 6] =
    ["n", "count", "i_star", "m_star", "u_defender", "u_attacker"];

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn table_file(dir: &Path, n: usize) -> PathBuf {
    dir.join(format!("table_n{n}.csv"))
}

/// Runs the Monte Carlo campaign and writes `table_n<N>.csv`.
pub fn cmd_table(cfg: &ExperimentConfig) -> Result<PathBuf> {
    ensure_dir(&cfg.output_dir)?;
    let table = campaign::estimate_table(cfg.n, cfg.trials, &cfg.fl, &cfg.channel)?;
    let path = table_file(&cfg.output_dir, cfg.n);
    write_table(&path, &table)?;
    Ok(path)
}

pub fn bounds_row(table: &AccuracyTable, defense_cost: f64) -> BoundsRow {
    let best = defense_bound_utility(
        table,
        defense_cost,
        DefenseCase::Best,
        AttackerStance::for_case(DefenseCase::Best),
    );
    let worst = defense_bound_utility(
        table,
        defense_cost,
        DefenseCase::Worst,
        AttackerStance::for_case(DefenseCase::Worst),
    );
    BoundsRow {
        n: table.n(),
        best_utility: best.value,
        worst_utility: worst.value,
        best_i: best.admitted,
        worst_i: worst.admitted,
    }
}

/// Best and worst defense utility per table, written to `bounds.csv`.
pub fn cmd_bounds(tables: &Path, costs: GameCosts, out_dir: &Path) -> Result<PathBuf> {
    costs.validate()?;
    let rows: Vec<BoundsRow> = read_tables(tables)?
        .iter()
        .map(|(_, t)| bounds_row(t, costs.defense))
        .collect();
    ensure_dir(out_dir)?;
    let path = out_dir.join("bounds.csv");
    write_file(&path, &bounds_csv(&rows))?;
    Ok(path)
}

/// Equal-cost sweep `min:max:points`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl SweepRange {
    pub fn costs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(move |j| {
            if self.points == 1 {
                self.min
            } else {
                self.min + (self.max - self.min) * j as f64 / (self.points - 1) as f64
            }
        })
    }
}

impl FromStr for SweepRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, points] = parts[..] else {
            return Err(format!("expected min:max:points, got `{s}`"));
        };
        let num = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad cost `{x}`"))
        };
        let range = SweepRange {
            min: num(min)?,
            max: num(max)?,
            points: points
                .trim()
                .parse()
                .map_err(|_| format!("bad point count `{points}`"))?,
        };
        if range.points == 0 || !(0.0..=range.max).contains(&range.min) || !range.max.is_finite() {
            return Err(format!("need 0 <= min <= max and points >= 1, got `{s}`"));
        }
        Ok(range)
    }
}

fn require_two_client(table: &AccuracyTable, path: &Path) -> Result<()> {
    if table.n() == 2 {
        Ok(())
    } else {
        Err(Error::Invalid(format!(
            "two-client table required, {} has n = {}",
            path.display(),
            table.n()
        )))
    }
}

pub fn game2_report(
    table: &AccuracyTable,
    costs: GameCosts,
    grid_points: usize,
    tolerance: f64,
) -> Result<Game2Report> {
    let eqs = solve_two_client(table, costs, grid_points, tolerance)?;
    Ok(Game2Report {
        attack_cost: costs.attack,
        defense_cost: costs.defense,
        grid_points,
        tolerance,
        equilibria: eqs.iter().map(MixedRecord::from).collect(),
    })
}

/// The verified equilibrium with the highest defender utility; ties keep
/// the first in solver order.
pub fn select_mixed(eqs: &[MixedEquilibrium]) -> Option<&MixedEquilibrium> {
    eqs.iter()
        .filter(|e| e.verified)
        .fold(None, |best: Option<&MixedEquilibrium>, e| match best {
            Some(b) if b.u_defender >= e.u_defender => Some(b),
            _ => Some(e),
        })
}

pub fn game2_sweep(
    table: &AccuracyTable,
    range: SweepRange,
    grid_points: usize,
    tolerance: f64,
) -> Result<Vec<Vec<String>>> {
    range
        .costs()
        .map(|c| {
            let eqs = solve_two_client(table, GameCosts::new(c, c)?, grid_points, tolerance)?;
            let picked = select_mixed(&eqs);
            let mut row = vec![fixed(c)];
            row.extend(
                [
                    picked.map(|e| e.profile.p),
                    picked.map(|e| e.profile.q),
                    picked.map(|e| e.u_attacker),
                    picked.map(|e| e.u_defender),
                ]
                .map(fixed_or_empty),
            );
            Ok(row)
        })
        .collect()
}

/// Writes `game2.json` and, with a sweep, `game2_sweep.csv`.
pub fn cmd_game2(
    table_path: &Path,
    costs: GameCosts,
    sweep: Option<SweepRange>,
    grid_points: usize,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    costs.validate()?;
    let table = read_table(table_path)?;
    require_two_client(&table, table_path)?;
    let tolerance = fedgame_core::equilibrium::DEFAULT_TOLERANCE;
    let report = game2_report(&table, costs, grid_points, tolerance)?;
    let sweep_rows = sweep
        .map(|range| game2_sweep(&table, range, grid_points, tolerance))
        .transpose()?;
    ensure_dir(out_dir)?;
    let json = out_dir.join("game2.json");
    write_json(&json, &report)?;
    let mut written = vec![json];
    if let Some(rows) = sweep_rows {
        let csv = out_dir.join("game2_sweep.csv");
        write_file(&csv, &rows_csv(&GAME2_SWEEP_HEADER, &rows))?;
        written.push(csv);
    }
    Ok(written)
}

pub fn gamen_record(table: &AccuracyTable, costs: GameCosts) -> Result<GamenRecord> {
    let (eqs, map) = find_pure_nash(table, costs)?;
    let equilibria = eqs
        .iter()
        .map(|e| {
            Ok(PureRecord::new(
                e,
                pure_deviation_free(e.i_star, e.m_star, table, costs)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let selected = select_equilibrium(&eqs).map(|e| PureRecord::new(&e, true));
    let empty = eqs.is_empty();
    Ok(GamenRecord {
        n: table.n(),
        status: if empty {
            Status::NoPureEquilibrium
        } else {
            Status::Equilibrium
        },
        equilibria,
        selected,
        best_responses: empty.then(|| BestResponses::from(&map)),
        cycle: empty.then(|| map.cycle()),
    })
}

pub fn gamen_report(tables: &[AccuracyTable], costs: GameCosts) -> Result<GamenReport> {
    Ok(GamenReport {
        attack_cost: costs.attack,
        defense_cost: costs.defense,
        records: tables
            .iter()
            .map(|t| gamen_record(t, costs))
            .collect::<Result<_>>()?,
    })
}

pub fn gamen_sweep_rows(report: &GamenReport) -> Vec<Vec<String>> {
    report
        .records
        .iter()
        .map(|r| {
            let mut row = vec![r.n.to_string(), r.equilibria.len().to_string()];
            match &r.selected {
                Some(s) => row.extend([
                    s.i_star.to_string(),
                    s.m_star.to_string(),
                    fixed(s.u_defender),
                    fixed(s.u_attacker),
                ]),
                None => row.extend(std::iter::repeat_n(String::new(), 4)),
            }
            row
        })
        .collect()
}

/// Writes `gamen.json` and `gamen_sweep.csv` for one table or a directory.
pub fn cmd_gamen(path: &Path, costs: GameCosts, out_dir: &Path) -> Result<Vec<PathBuf>> {
    costs.validate()?;
    let tables: Vec<AccuracyTable> = read_tables(path)?.into_iter().map(|(_, t)| t).collect();
    let report = gamen_report(&tables, costs)?;
    ensure_dir(out_dir)?;
    let json = out_dir.join("gamen.json");
    write_json(&json, &report)?;
    let csv = out_dir.join("gamen_sweep.csv");
    write_file(
        &csv,
        &rows_csv(&GAMEN_SWEEP_HEADER, &gamen_sweep_rows(&report)),
    )?;
    Ok(vec![json, csv])
}

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use fedgame::campaign;
use fedgame::commands::cmd_table;
use fedgame::config::{ExperimentConfig, Profile};
use fedgame::tables::table_csv;
use fedgame_core::equilibrium::{
    equilibrium_sweep, find_pure_nash, solve_two_client, EquilibriumKind,
};
use fedgame_core::fl;
use fedgame_core::game::{bound_k, hypergeom_weight, DefenseCase, GameCosts, MixedProfile};
use fedgame_core::nn::{loss_and_grad, param_count, Architecture, Mode, ModelParams};
use fedgame_core::table::AccuracyTable;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn toy() -> AccuracyTable {
    AccuracyTable::new(2, vec![0.5, 0.8, 0.2, 0.9, 0.5, 0.1]).unwrap()
}

fn random_table(n: usize, rng: &mut ChaCha8Rng) -> AccuracyTable {
    AccuracyTable::from_fn(n, |_, _| rng.random::<f64>()).unwrap()
}

fn parameter_count() -> Outcome {
    // 32-128-64-32-2, dense layers with biases
    let widths = [32usize, 128, 64, 32, 2];
    let expected: usize = widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
    let got = param_count(&Architecture::signal_classifier());
    outcome(
        got == expected && got == 14_626,
        format!("{got} (expected {expected})"),
    )
}

fn hypergeometric_normalization() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in 0..=30 {
        for m in 0..=n {
            for i in 0..=n {
                let total: f64 = (0..=n).map(|k| hypergeom_weight(n, m, i, k)).sum();
                worst = worst.max((total - 1.0).abs());
                cases += 1;
            }
        }
    }
    outcome(
        worst < 1e-12,
        format!("{cases} (n, m, i) cases, max |sum - 1| = {worst:.2e}"),
    )
}

fn bound_bracketing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut misses = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=30);
        let m = rng.random_range(0..=n);
        let i = rng.random_range(0..=n);
        let admitted = sample(&mut rng, n, i).into_vec();
        let poisoned = sample(&mut rng, n, m).into_vec();
        let k = poisoned.iter().filter(|c| admitted.contains(c)).count();
        let lo = bound_k(n, m, i, DefenseCase::Best).unwrap();
        let hi = bound_k(n, m, i, DefenseCase::Worst).unwrap();
        if !(lo..=hi).contains(&k) {
            misses += 1;
        }
    }
    outcome(
        misses == 0,
        format!("1000 random draws, {misses} outside the bounds"),
    )
}

/// Expected accuracy for every `(i, m)` by listing every poisoned subset,
/// with the admitted set fixed to the first `i` clients.
fn subset_expectations(table: &AccuracyTable) -> Vec<Vec<f64>> {
    let n = table.n();
    let mut sums = vec![vec![0.0; n + 1]; n + 1];
    let mut counts = vec![0u32; n + 1];
    for mask in 0u32..(1 << n) {
        let m = mask.count_ones() as usize;
        counts[m] += 1;
        for (i, row) in sums.iter_mut().enumerate() {
            let k = (mask & ((1u32 << i) - 1)).count_ones() as usize;
            row[m] += table.get(i, k);
        }
    }
    sums.iter()
        .map(|row| {
            row.iter()
                .zip(&counts)
                .map(|(s, &c)| s / c as f64)
                .collect()
        })
        .collect()
}

/// Brute-force pure equilibria `(i, m, u_defender)` in `(i, m)` order.
fn brute_force_nash(table: &AccuracyTable, costs: GameCosts) -> Vec<(usize, usize, f64)> {
    let n = table.n();
    let e = subset_expectations(table);
    let ud = |i: usize, m: usize| e[i][m] - i as f64 * costs.defense;
    let ua = |i: usize, m: usize| -e[i][m] - m as f64 * costs.attack;
    let mut out = Vec::new();
    for i in 0..=n {
        for m in 0..=n {
            let defender_stays = (0..=n).all(|j| ud(j, m) <= ud(i, m));
            let attacker_stays = (0..=n).all(|j| ua(i, j) <= ua(i, m));
            if defender_stays && attacker_stays {
                out.push((i, m, ud(i, m)));
            }
        }
    }
    out
}

fn brute_force_select(eqs: &[(usize, usize, f64)]) -> Option<(usize, usize, f64)> {
    eqs.iter().copied().fold(None, |best, e| match best {
        Some(b) if b.2 >= e.2 => Some(b),
        _ => Some(e),
    })
}

fn nash_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut total = 0;
    for t in 0..100 {
        let n = rng.random_range(1..=10);
        let table = random_table(n, &mut rng);
        let costs =
            GameCosts::new(rng.random_range(0.0..=0.5), rng.random_range(0.0..=0.5)).unwrap();
        let (eqs, _) = find_pure_nash(&table, costs).unwrap();
        let mut got: Vec<(usize, usize)> = eqs.iter().map(|e| (e.i_star, e.m_star)).collect();
        got.sort_unstable();
        let want: Vec<(usize, usize)> = brute_force_nash(&table, costs)
            .iter()
            .map(|e| (e.0, e.1))
            .collect();
        if got != want {
            return outcome(
                false,
                format!("table {t} (n = {n}): solver {got:?}, enumeration {want:?}"),
            );
        }
        total += got.len();
    }
    outcome(
        true,
        format!("100 random tables, {total} equilibria, sets identical"),
    )
}

/// Two-client utilities by listing admission and attack outcomes. `q` is the
/// admission probability of each client, `p` the attack probability.
struct TwoOracle<'a> {
    table: &'a AccuracyTable,
    costs: GameCosts,
}

impl TwoOracle<'_> {
    fn u(&self, i: usize, k: usize) -> f64 {
        self.table.get(i, k)
    }

    fn bern(p: f64, on: bool) -> f64 {
        if on {
            p
        } else {
            1.0 - p
        }
    }

    /// Client 0 joins with `q_self`; client 1 joins with `q_other`.
    fn client(&self, q_self: f64, q_other: f64, p: f64) -> f64 {
        let mut total = 0.0;
        for join_self in [false, true] {
            for join_other in [false, true] {
                for hit_self in [false, true] {
                    for hit_other in [false, true] {
                        let w = Self::bern(q_self, join_self)
                            * Self::bern(q_other, join_other)
                            * Self::bern(p, hit_self)
                            * Self::bern(p, hit_other);
                        let i = join_self as usize + join_other as usize;
                        let k =
                            (join_self && hit_self) as usize + (join_other && hit_other) as usize;
                        let cost = if join_self { self.costs.defense } else { 0.0 };
                        total += w * (self.u(i, k) - cost);
                    }
                }
            }
        }
        total
    }

    fn attacker(&self, p1: f64, p2: f64, q: f64) -> f64 {
        let mut total = 0.0;
        for join1 in [false, true] {
            for join2 in [false, true] {
                for hit1 in [false, true] {
                    for hit2 in [false, true] {
                        let w = Self::bern(q, join1)
                            * Self::bern(q, join2)
                            * Self::bern(p1, hit1)
                            * Self::bern(p2, hit2);
                        let i = join1 as usize + join2 as usize;
                        let k = (join1 && hit1) as usize + (join2 && hit2) as usize;
                        let attacks = hit1 as usize + hit2 as usize;
                        total += w * (-self.u(i, k) - attacks as f64 * self.costs.attack);
                    }
                }
            }
        }
        total
    }

    /// Largest unilateral gain over a 1001-point grid, per variable.
    fn deviation(&self, p: f64, q: f64) -> f64 {
        let client_now = self.client(q, q, p);
        let attacker_now = self.attacker(p, p, q);
        (0..=1000)
            .map(|j| {
                let x = j as f64 / 1000.0;
                let c = self.client(x, q, p) - client_now;
                let a1 = self.attacker(x, p, q) - attacker_now;
                let a2 = self.attacker(p, x, q) - attacker_now;
                c.max(a1).max(a2)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn two_client_mixed() -> Outcome {
    let mut cases: Vec<(AccuracyTable, GameCosts)> = (0..100)
        .map(|j| {
            let c = 0.005 * (j + 1) as f64;
            (toy(), GameCosts::new(c, c).unwrap())
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let table = random_table(2, &mut rng);
        let costs =
            GameCosts::new(rng.random_range(0.0..=0.5), rng.random_range(0.0..=0.5)).unwrap();
        cases.push((table, costs));
    }
    let (mut interior, mut checked) = (0, 0);
    let mut worst_residual: f64 = 0.0;
    let mut worst_gain = f64::NEG_INFINITY;
    for (table, costs) in &cases {
        for e in solve_two_client(table, *costs, 2001, 1e-9).unwrap() {
            let MixedProfile { p, q } = e.profile;
            let oracle = TwoOracle {
                table,
                costs: *costs,
            };
            if e.kind == EquilibriumKind::Interior {
                interior += 1;
                worst_residual = worst_residual
                    .max(e.client_residual.abs())
                    .max(e.attacker_residual.abs());
                // the residual is the participation gain, computed here from outcomes
                let gain = oracle.client(1.0, q, p) - oracle.client(0.0, q, p);
                worst_residual = worst_residual.max(gain.abs());
            }
            if e.kind == EquilibriumKind::Interior || e.verified {
                checked += 1;
                worst_gain = worst_gain.max(oracle.deviation(p, q));
            }
        }
    }
    let fixture = |c_a, c_d| {
        let eqs = solve_two_client(&toy(), GameCosts::new(c_a, c_d).unwrap(), 2001, 1e-9).unwrap();
        eqs.iter()
            .map(|e| (e.profile.p, e.profile.q))
            .collect::<Vec<_>>()
    };
    let f1 = fixture(1.0, 0.05);
    let f2 = fixture(1.0, 0.6);
    let fixtures_ok = f1 == [(0.0, 1.0)] && f2 == [(0.0, 0.0)];
    let pass = interior > 0 && worst_residual < 1e-9 && worst_gain < 1e-6 && fixtures_ok;
    outcome(
        pass,
        format!(
            "{interior} interior, {checked} checked, max residual {worst_residual:.2e}, \
             max deviation gain {worst_gain:.2e}, fixtures {f1:?} {f2:?}"
        ),
    )
}

fn gradient_check() -> Outcome {
    let arch = Architecture::signal_classifier();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut coords = 0;
    for _ in 0..10 {
        let mut params = ModelParams::glorot(arch.clone(), &mut rng);
        let features: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..32).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let labels: Vec<usize> = (0..4).map(|_| rng.random_range(0..2)).collect();
        let batch: Vec<(&[f64], usize)> = features
            .iter()
            .map(Vec::as_slice)
            .zip(labels.iter().copied())
            .collect();
        let (_, grad) = loss_and_grad(&params, &batch, Mode::Eval, &mut rng).unwrap();
        for idx in sample(&mut rng, params.len(), 120) {
            let orig = params.values()[idx];
            params.values_mut()[idx] = orig + h;
            let (up, _) = loss_and_grad(&params, &batch, Mode::Eval, &mut rng).unwrap();
            params.values_mut()[idx] = orig - h;
            let (down, _) = loss_and_grad(&params, &batch, Mode::Eval, &mut rng).unwrap();
            params.values_mut()[idx] = orig;
            let fd = (up - down) / (2.0 * h);
            let rel = (grad[idx] - fd).abs() / grad[idx].abs().max(fd.abs()).max(1e-6);
            worst = worst.max(rel);
            coords += 1;
        }
    }
    outcome(
        worst < 1e-4,
        format!("{coords} coordinates over 10 models, max relative error {worst:.2e}"),
    )
}

fn fl_reproduction() -> Outcome {
    let cfg = ExperimentConfig::for_profile(Profile::Fast)
        .finish()
        .unwrap();
    let n = 5;
    let start = Instant::now();
    let table = campaign::estimate_table(n, 5, &cfg.fl, &cfg.channel).unwrap();
    let u = |i, k| table.get(i, k);
    let a = u(5, 0) >= 0.85;
    let b = (1..=n).all(|i| (0..i).all(|k| u(i, k + 1) <= u(i, k) + 0.02));
    let c = (0..n).all(|i| u(i + 1, 0) >= u(i, 0) - 0.02);
    let d = (1..=n).all(|i| u(i, i) < 0.5);
    let diag: Vec<String> = (1..=n).map(|i| format!("{:.3}", u(i, i))).collect();
    outcome(
        a && b && c && d,
        format!(
            "U(0|5) = {:.3} [{}], decreasing in k [{}], U(0|i) rising [{}], U(i|i) = {} [{}], {:.0} s",
            u(5, 0),
            ok(a),
            ok(b),
            ok(c),
            diag.join(" "),
            ok(d),
            start.elapsed().as_secs_f64()
        ),
    )
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "fails"
    }
}

fn analytic_sweep() -> Outcome {
    let costs = GameCosts::new(0.1, 0.1).unwrap();
    let tables: Vec<AccuracyTable> = (1..=10)
        .map(|n| {
            AccuracyTable::from_fn(n, |i, k| {
                (0.5 + 0.4 * (i as f64 - 2.0 * k as f64) / n as f64).clamp(0.0, 1.0)
            })
            .unwrap()
        })
        .collect();
    let sweep = equilibrium_sweep(&tables, costs).unwrap();
    for (point, table) in sweep.iter().zip(&tables) {
        let eqs = brute_force_nash(table, costs);
        let want = brute_force_select(&eqs);
        let got = point
            .equilibrium
            .map(|e| (e.i_star, e.m_star, e.u_defender));
        let same = point.count == eqs.len()
            && match (got, want) {
                (None, None) => true,
                (Some(g), Some(w)) => (g.0, g.1) == (w.0, w.1) && (g.2 - w.2).abs() < 1e-12,
                _ => false,
            };
        if !same {
            return outcome(
                false,
                format!("n = {}: solver {got:?}, enumeration {want:?}", point.n),
            );
        }
    }
    let available: Vec<(usize, f64)> = sweep
        .iter()
        .filter_map(|p| p.equilibrium.map(|e| (p.n, e.u_defender)))
        .collect();
    let monotone = available.windows(2).all(|w| w[1].1 <= w[0].1);
    let shown: Vec<String> = available
        .iter()
        .map(|(n, u)| format!("{n}:{u:.3}"))
        .collect();
    outcome(
        monotone && !available.is_empty(),
        format!(
            "matches enumeration for n = 1..10, U_D over n with equilibria [{}]",
            shown.join(" ")
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let mut cfg = ExperimentConfig::for_profile(Profile::Fast);
        cfg.n = 3;
        cfg.trials = 2;
        cfg.output_dir = dir.path().join(sub);
        let cfg = cfg.finish().unwrap();
        fs::read(cmd_table(&cfg).unwrap()).unwrap()
    };
    let a = run("a");
    let b = run("b");
    let cfg = ExperimentConfig::for_profile(Profile::Fast)
        .finish()
        .unwrap();
    let sequential = table_csv(&fl::estimate_table(3, 2, &cfg.fl, &cfg.channel).unwrap());
    outcome(
        a == b && a == sequential,
        format!(
            "two runs {}, sequential estimate {}",
            if a == b { "byte-identical" } else { "differ" },
            if a == sequential {
                "identical"
            } else {
                "differs"
            }
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("parameter count", parameter_count),
        ("hypergeometric normalization", hypergeometric_normalization),
        ("overlap bracketing", bound_bracketing),
        ("n-client Nash oracle", nash_oracle),
        ("two-client mixed equilibrium", two_client_mixed),
        ("gradient check", gradient_check),
        ("FL qualitative behaviour", fl_reproduction),
        ("analytic equilibrium sweep", analytic_sweep),
        ("table determinism", determinism),
    ];
    let mut failed = 0;
    for (j, (name, check)) in criteria.iter().enumerate() {
        let result = check();
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {} {name}: {}", j + 1, result.detail);
        if !result.pass {
            failed += 1;
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

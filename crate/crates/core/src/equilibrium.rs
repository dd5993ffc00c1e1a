//! Nash equilibria of the poisoning games.
//!
//! The two-client game is solved in mixed strategies: symmetric interior
//! points come from the indifference conditions of both players, boundary
//! points from the vertices and edges of `[0,1]^2`. Every candidate is
//! checked against unilateral deviations on a grid. The n-client game is
//! solved in pure strategies by intersecting exact best-response sets.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{check_probability, Error, Result};
use crate::game::{
    attack_utility_nm, attacker_avg_utility, client_avg_utility, defense_utility_nm, GameCosts,
    MixedProfile,
};
use crate::table::AccuracyTable;

pub const DEFAULT_GRID_POINTS: usize = 2001;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// A deviation must gain more than this to break an equilibrium.
pub const DEVIATION_TOLERANCE: f64 = 1e-6;
pub const DEVIATION_GRID: usize = 1001;
pub const MIN_GRID_POINTS: usize = 101;

const DEGENERATE: f64 = 1e-12;
const DUPLICATE: f64 = 1e-9;

struct Two {
    u00: f64,
    u01: f64,
    u11: f64,
    u02: f64,
    u12: f64,
    u22: f64,
}

impl Two {
    // u{k}{i} is U(k|i)
    fn of(table: &AccuracyTable) -> Result<Two> {
        table.require_n(2)?;
        Ok(Two {
            u00: table.get(0, 0),
            u01: table.get(1, 0),
            u11: table.get(1, 1),
            u02: table.get(2, 0),
            u12: table.get(2, 1),
            u22: table.get(2, 2),
        })
    }

    fn client(&self, p: f64, q: f64, c_d: f64) -> f64 {
        let Two {
            u00,
            u01,
            u11,
            u02,
            u12,
            u22,
        } = *self;
        q * (p * p * (u22 - 2.0 * u12 + u02) + p * (2.0 * u12 - 2.0 * u02 - u11 + u01) + u02
            - c_d
            - u01)
            + (1.0 - q) * (p * (u11 - u01) + u01 - c_d - u00)
    }

    /// Client residual as `q alpha(p) + (1 - q) beta(p)`.
    fn client_affine(&self, p: f64, c_d: f64) -> (f64, f64) {
        (self.client(p, 1.0, c_d), self.client(p, 0.0, c_d))
    }

    fn attacker(&self, p: f64, q: f64, c_a: f64) -> f64 {
        let Two {
            u00,
            u01,
            u11,
            u02,
            u12,
            u22,
        } = *self;
        let q2 = q * q;
        -p * q2 * u22 - q2 * u12 - q * u11 + q2 * u11 - q * u01 + q2 * u01 - c_a - q2 * u00
            + 2.0 * p * q2 * u12
            + q2 * u02
            + 2.0 * q * u01
            - 2.0 * q2 * u01
            + q2 * u00
            - p * q2 * u02
    }

    /// Admission probability that makes the client indifferent at `p`.
    fn indifferent_q(&self, p: f64, c_d: f64) -> Option<f64> {
        let (alpha, beta) = self.client_affine(p, c_d);
        let d = beta - alpha;
        if d.abs() <= DEGENERATE {
            return None;
        }
        let q = beta / d;
        (-DEGENERATE..=1.0 + DEGENERATE)
            .contains(&q)
            .then(|| q.clamp(0.0, 1.0))
    }
}

/// Client indifference condition at the symmetric profile `(p, q)`:
/// participation minus declining utility.
pub fn client_indifference_residual(
    p: f64,
    q: f64,
    table: &AccuracyTable,
    defense_cost: f64,
) -> Result<f64> {
    check_probability("p", p)?;
    check_probability("q", q)?;
    Ok(Two::of(table)?.client(p, q, defense_cost))
}

/// Attacker stationarity condition at the symmetric profile `(p, q)`.
pub fn attacker_indifference_residual(
    p: f64,
    q: f64,
    table: &AccuracyTable,
    attack_cost: f64,
) -> Result<f64> {
    check_probability("p", p)?;
    check_probability("q", q)?;
    Ok(Two::of(table)?.attacker(p, q, attack_cost))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumKind {
    Interior,
    Boundary,
}

/// Best gains available to each side by deviating alone from a symmetric profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationGains {
    /// One client changes its admission probability.
    pub client: f64,
    /// The attacker changes the attack probability of one client.
    pub attacker: f64,
    /// The attacker changes both attack probabilities at once.
    pub attacker_joint: f64,
}

impl DeviationGains {
    pub fn within(&self, tolerance: f64) -> bool {
        self.client <= tolerance && self.attacker <= tolerance
    }
}

/// Scans `grid` deviations per variable. The joint attacker gain is exact:
/// a bilinear function peaks at a vertex of the box.
pub fn deviation_gains(
    profile: MixedProfile,
    table: &AccuracyTable,
    costs: GameCosts,
    grid: usize,
) -> Result<DeviationGains> {
    if grid < 2 {
        return Err(Error::Config(
            "deviation grid needs at least 2 points".into(),
        ));
    }
    let MixedProfile { p, q } = profile;
    let (c_a, c_d) = (costs.attack, costs.defense);
    let client_now = client_avg_utility(q, q, p, p, table, c_d)?;
    let attacker_now = attacker_avg_utility(p, p, q, q, table, c_a)?;
    let mut gains = DeviationGains {
        client: f64::NEG_INFINITY,
        attacker: f64::NEG_INFINITY,
        attacker_joint: f64::NEG_INFINITY,
    };
    for j in 0..grid {
        let x = j as f64 / (grid - 1) as f64;
        let client = client_avg_utility(x, q, p, p, table, c_d)? - client_now;
        let first = attacker_avg_utility(x, p, q, q, table, c_a)? - attacker_now;
        let second = attacker_avg_utility(p, x, q, q, table, c_a)? - attacker_now;
        gains.client = gains.client.max(client);
        gains.attacker = gains.attacker.max(first).max(second);
    }
    for (p1, p2) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
        let joint = attacker_avg_utility(p1, p2, q, q, table, c_a)? - attacker_now;
        gains.attacker_joint = gains.attacker_joint.max(joint);
    }
    Ok(gains)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedEquilibrium {
    pub profile: MixedProfile,
    pub kind: EquilibriumKind,
    pub client_residual: f64,
    pub attacker_residual: f64,
    /// No single-variable deviation on the check grid gains more than
    /// [`DEVIATION_TOLERANCE`].
    pub verified: bool,
    /// Per-client defender utility.
    pub u_defender: f64,
    pub u_attacker: f64,
    /// Gain of the best joint change of both attack probabilities.
    pub attacker_joint_gain: f64,
}

fn bisect<F: Fn(f64) -> Option<f64>>(
    f: &F,
    mut a: f64,
    mut fa: f64,
    mut b: f64,
    tol: f64,
) -> Option<f64> {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm.abs() < tol {
            return Some(m);
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
        if b - a <= f64::EPSILON * b.abs().max(1.0) {
            break;
        }
    }
    None
}

/// Last point where `f` is defined, between a defined and an undefined one.
fn edge_of_domain<F: Fn(f64) -> Option<f64>>(
    f: &F,
    mut inside: f64,
    mut outside: f64,
) -> Option<(f64, f64)> {
    let mut value = f(inside)?;
    for _ in 0..80 {
        let m = 0.5 * (inside + outside);
        match f(m) {
            Some(v) => {
                inside = m;
                value = v;
            }
            None => outside = m,
        }
    }
    Some((inside, value))
}

/// Roots of `f` on `[0, 1]`: grid points where `|f| < tol` (one per run)
/// and bisected sign changes between defined neighbours. Where `f` stops
/// being defined between two grid points, the edge of its domain is added
/// as an extra sample.
fn grid_roots<F: Fn(f64) -> Option<f64>>(f: F, points: usize, tol: f64) -> Vec<f64> {
    let grid: Vec<(f64, Option<f64>)> = (0..points)
        .map(|j| {
            let x = j as f64 / (points - 1) as f64;
            (x, f(x))
        })
        .collect();
    let mut samples: Vec<Option<(f64, f64)>> = Vec::with_capacity(points);
    for (j, &(x, v)) in grid.iter().enumerate() {
        if j > 0 {
            let (xp, vp) = grid[j - 1];
            match (vp, v) {
                (Some(_), None) => samples.extend(edge_of_domain(&f, xp, x).map(Some)),
                (None, Some(_)) => {
                    samples.push(None);
                    samples.extend(edge_of_domain(&f, x, xp).map(Some));
                }
                _ => {}
            }
        }
        samples.push(v.map(|v| (x, v)));
    }

    let mut roots = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    let mut in_zero_run = false;
    for sample in samples {
        let Some((x, v)) = sample else {
            prev = None;
            in_zero_run = false;
            continue;
        };
        if prev.is_some_and(|(xp, _)| xp == x) {
            continue;
        }
        if v.abs() < tol {
            if !in_zero_run {
                roots.push(x);
            }
            in_zero_run = true;
        } else {
            if let Some((xp, vp)) = prev {
                if !in_zero_run && (vp < 0.0) != (v < 0.0) {
                    let (a, fa, b) = if xp < x { (xp, vp, x) } else { (x, v, xp) };
                    roots.extend(bisect(&f, a, fa, b, tol));
                }
            }
            in_zero_run = false;
        }
        prev = Some((x, v));
    }
    roots
}

fn in_unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

/// Symmetric mixed equilibria of the two-client game, sorted by `(p, q)`.
///
/// Interior points solve both indifference conditions to `tol`; boundary
/// points are kept only when they survive the deviation check.
pub fn solve_two_client(
    table: &AccuracyTable,
    costs: GameCosts,
    grid_points: usize,
    tol: f64,
) -> Result<Vec<MixedEquilibrium>> {
    let two = Two::of(table)?;
    costs.validate()?;
    if grid_points < MIN_GRID_POINTS {
        return Err(Error::Config(alloc::format!(
            "grid_points must be at least {MIN_GRID_POINTS}, got {grid_points}"
        )));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::OutOfRange {
            what: "tolerance",
            value: tol,
        });
    }
    let (c_a, c_d) = (costs.attack, costs.defense);
    let mut candidates: Vec<(f64, f64)> = Vec::new();

    // interior: follow the client-indifference curve q(p)
    let along_curve = |p: f64| two.indifferent_q(p, c_d).map(|q| two.attacker(p, q, c_a));
    for p in grid_roots(along_curve, grid_points, tol) {
        candidates.extend(two.indifferent_q(p, c_d).map(|q| (p, q)));
    }
    // fibers where the client residual does not depend on q
    for j in 0..grid_points {
        let p = j as f64 / (grid_points - 1) as f64;
        let (alpha, beta) = two.client_affine(p, c_d);
        if (beta - alpha).abs() <= DEGENERATE && beta.abs() < tol {
            candidates.extend([(p, 0.0), (p, 1.0)]);
            for q in grid_roots(|q| Some(two.attacker(p, q, c_a)), grid_points, tol) {
                candidates.push((p, q));
            }
        }
    }
    // vertices and edges
    for p in [0.0, 1.0] {
        for q in [0.0, 1.0] {
            candidates.push((p, q));
        }
        candidates.extend(two.indifferent_q(p, c_d).map(|q| (p, q)));
    }
    for q in [0.0, 1.0] {
        let a0 = two.attacker(0.0, q, c_a);
        let a1 = two.attacker(1.0, q, c_a) - a0;
        if a1.abs() > DEGENERATE {
            let p = -a0 / a1;
            if in_unit(p) {
                candidates.push((p, q));
            }
        }
    }

    let mut found = Vec::new();
    for (p, q) in candidates {
        let profile = MixedProfile::new(p, q)?;
        let kind = if p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0 {
            EquilibriumKind::Interior
        } else {
            EquilibriumKind::Boundary
        };
        let client_residual = two.client(p, q, c_d);
        let attacker_residual = two.attacker(p, q, c_a);
        let gains = deviation_gains(profile, table, costs, DEVIATION_GRID)?;
        let verified = gains.within(DEVIATION_TOLERANCE);
        let keep = match kind {
            EquilibriumKind::Interior => {
                client_residual.abs() < tol && attacker_residual.abs() < tol
            }
            EquilibriumKind::Boundary => verified,
        };
        if keep {
            found.push(MixedEquilibrium {
                profile,
                kind,
                client_residual,
                attacker_residual,
                verified,
                u_defender: client_avg_utility(q, q, p, p, table, c_d)?,
                u_attacker: attacker_avg_utility(p, p, q, q, table, c_a)?,
                attacker_joint_gain: gains.attacker_joint.max(0.0),
            });
        }
    }
    found.sort_by(|a, b| {
        a.profile
            .p
            .total_cmp(&b.profile.p)
            .then(a.profile.q.total_cmp(&b.profile.q))
    });
    let mut out: Vec<MixedEquilibrium> = Vec::with_capacity(found.len());
    for e in found {
        match out.last_mut() {
            Some(last)
                if (last.profile.p - e.profile.p).abs() < DUPLICATE
                    && (last.profile.q - e.profile.q).abs() < DUPLICATE =>
            {
                let score =
                    |x: &MixedEquilibrium| x.client_residual.abs() + x.attacker_residual.abs();
                if score(&e) < score(last) {
                    *last = e;
                }
            }
            _ => out.push(e),
        }
    }
    Ok(out)
}

fn argmax_set<I: IntoIterator<Item = f64>>(values: I) -> Vec<usize> {
    let mut best = f64::NEG_INFINITY;
    let mut set = Vec::new();
    for (j, v) in values.into_iter().enumerate() {
        match v.partial_cmp(&best) {
            Some(Ordering::Greater) => {
                best = v;
                set.clear();
                set.push(j);
            }
            Some(Ordering::Equal) => set.push(j),
            _ => {}
        }
    }
    set
}

/// `B_A(i)`: every poisoning count that maximizes the attacker utility.
pub fn best_response_attacker(
    i: usize,
    table: &AccuracyTable,
    attack_cost: f64,
) -> Result<Vec<usize>> {
    let values = (0..=table.n())
        .map(|m| attack_utility_nm(i, m, table, attack_cost))
        .collect::<Result<Vec<_>>>()?;
    Ok(argmax_set(values))
}

/// `B_D(m)`: every admission count that maximizes the defender utility.
pub fn best_response_defender(
    m: usize,
    table: &AccuracyTable,
    defense_cost: f64,
) -> Result<Vec<usize>> {
    let values = (0..=table.n())
        .map(|i| defense_utility_nm(i, m, table, defense_cost))
        .collect::<Result<Vec<_>>>()?;
    Ok(argmax_set(values))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BestResponseMap {
    /// `attacker[i]` is `B_A(i)`.
    pub attacker: Vec<Vec<usize>>,
    /// `defender[m]` is `B_D(m)`.
    pub defender: Vec<Vec<usize>>,
}

impl BestResponseMap {
    pub fn new(table: &AccuracyTable, costs: GameCosts) -> Result<Self> {
        costs.validate()?;
        let n = table.n();
        Ok(BestResponseMap {
            attacker: (0..=n)
                .map(|i| best_response_attacker(i, table, costs.attack))
                .collect::<Result<_>>()?,
            defender: (0..=n)
                .map(|m| best_response_defender(m, table, costs.defense))
                .collect::<Result<_>>()?,
        })
    }

    /// Cycle of alternating smallest best responses, started from `i = 0`.
    /// Each state is `(i, m)` with `m` the attacker's reply to `i`. A cycle
    /// of length one is a pure equilibrium.
    pub fn cycle(&self) -> Vec<(usize, usize)> {
        let mut path: Vec<(usize, usize)> = Vec::new();
        let mut i = 0;
        loop {
            let m = self.attacker[i][0];
            if let Some(start) = path.iter().position(|&s| s == (i, m)) {
                return path.split_off(start);
            }
            path.push((i, m));
            i = self.defender[m][0];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureEquilibrium {
    pub i_star: usize,
    pub m_star: usize,
    pub u_defender: f64,
    pub u_attacker: f64,
}

/// All pure equilibria in `(i, m)` order, with the best-response map.
pub fn find_pure_nash(
    table: &AccuracyTable,
    costs: GameCosts,
) -> Result<(Vec<PureEquilibrium>, BestResponseMap)> {
    let map = BestResponseMap::new(table, costs)?;
    let mut found = Vec::new();
    for (i, replies) in map.attacker.iter().enumerate() {
        for &m in replies {
            if map.defender[m].contains(&i) {
                found.push(PureEquilibrium {
                    i_star: i,
                    m_star: m,
                    u_defender: defense_utility_nm(i, m, table, costs.defense)?,
                    u_attacker: attack_utility_nm(i, m, table, costs.attack)?,
                });
            }
        }
    }
    Ok((found, map))
}

/// Highest defender utility; ties go to the smallest `(i, m)`.
pub fn select_equilibrium(equilibria: &[PureEquilibrium]) -> Option<PureEquilibrium> {
    let mut best: Option<PureEquilibrium> = None;
    for e in equilibria {
        let better = match best {
            None => true,
            Some(b) => {
                e.u_defender > b.u_defender
                    || (e.u_defender == b.u_defender && (e.i_star, e.m_star) < (b.i_star, b.m_star))
            }
        };
        if better {
            best = Some(*e);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub n: usize,
    /// Selected equilibrium, `None` when the game has no pure equilibrium.
    pub equilibrium: Option<PureEquilibrium>,
    pub count: usize,
}

/// One point per table, in the order given.
pub fn equilibrium_sweep(tables: &[AccuracyTable], costs: GameCosts) -> Result<Vec<SweepPoint>> {
    tables
        .iter()
        .map(|t| {
            let (found, _) = find_pure_nash(t, costs)?;
            Ok(SweepPoint {
                n: t.n(),
                equilibrium: select_equilibrium(&found),
                count: found.len(),
            })
        })
        .collect()
}

/// Deviation check of a pure profile against every alternative count.
pub fn pure_deviation_free(
    i: usize,
    m: usize,
    table: &AccuracyTable,
    costs: GameCosts,
) -> Result<bool> {
    let ua = attack_utility_nm(i, m, table, costs.attack)?;
    let ud = defense_utility_nm(i, m, table, costs.defense)?;
    for alt in 0..=table.n() {
        if attack_utility_nm(i, alt, table, costs.attack)? > ua
            || defense_utility_nm(alt, m, table, costs.defense)? > ud
        {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{client_utility_decline, client_utility_participate};
    use proptest::prelude::*;

    fn toy() -> AccuracyTable {
        AccuracyTable::new(2, vec![0.5, 0.8, 0.2, 0.9, 0.5, 0.1]).unwrap()
    }

    fn costs(a: f64, d: f64) -> GameCosts {
        GameCosts::new(a, d).unwrap()
    }

    #[test]
    fn client_residual_examples() {
        let r = client_indifference_residual(0.0, 0.0, &toy(), 0.05).unwrap();
        assert!((r - 0.25).abs() < 1e-15);
        assert!(client_indifference_residual(1.5, 0.0, &toy(), 0.05).is_err());
        let three = AccuracyTable::from_fn(3, |_, _| 0.5).unwrap();
        assert!(client_indifference_residual(0.5, 0.5, &three, 0.05).is_err());
    }

    #[test]
    fn attacker_residual_examples() {
        assert_eq!(
            attacker_indifference_residual(0.0, 0.0, &toy(), 0.2).unwrap(),
            -0.2
        );
        let t = AccuracyTable::new(2, vec![0.5, 0.7, 0.3, 0.95, 0.6, 0.05]).unwrap();
        let g = |i, k| t.get(i, k);
        for p in [0.0, 0.3, 1.0] {
            // q = 1 collapses the display to p (2U12 - U22 - U02) - U12 + U02 - c_A
            let hand = p * (2.0 * g(2, 1) - g(2, 2) - g(2, 0)) - g(2, 1) + g(2, 0) - 0.1;
            let r = attacker_indifference_residual(p, 1.0, &t, 0.1).unwrap();
            assert!((r - hand).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn client_residual_is_participation_gain(
            entries in prop::collection::vec(0.0f64..=1.0, 6),
            p in 0.0f64..=1.0, q in 0.0f64..=1.0, c in 0.0f64..=0.5,
        ) {
            let t = AccuracyTable::new(2, entries).unwrap();
            let gain = client_utility_participate(q, p, p, &t, c).unwrap()
                - client_utility_decline(q, p, &t).unwrap();
            let r = client_indifference_residual(p, q, &t, c).unwrap();
            prop_assert!((r - gain).abs() < 1e-12);
        }

        #[test]
        fn attacker_residual_is_marginal_utility(
            entries in prop::collection::vec(0.0f64..=1.0, 6),
            p in 0.0f64..=1.0, q in 0.0f64..=1.0, c in 0.0f64..=0.5,
        ) {
            let t = AccuracyTable::new(2, entries).unwrap();
            // utility is affine in p1, so the unit difference is the derivative
            let slope = attacker_avg_utility(1.0, p, q, q, &t, c).unwrap()
                - attacker_avg_utility(0.0, p, q, q, &t, c).unwrap();
            let r = attacker_indifference_residual(p, q, &t, c).unwrap();
            prop_assert!((r - slope).abs() < 1e-12);
        }
    }

    #[test]
    fn costly_attack_gives_full_admission() {
        let eqs = solve_two_client(
            &toy(),
            costs(1.0, 0.05),
            DEFAULT_GRID_POINTS,
            DEFAULT_TOLERANCE,
        )
        .unwrap();
        assert_eq!(eqs.len(), 1);
        let e = &eqs[0];
        assert_eq!((e.profile.p, e.profile.q), (0.0, 1.0));
        assert_eq!(e.kind, EquilibriumKind::Boundary);
        assert!(e.verified);
    }

    #[test]
    fn costly_defense_gives_no_admission() {
        let eqs = solve_two_client(
            &toy(),
            costs(1.0, 0.6),
            DEFAULT_GRID_POINTS,
            DEFAULT_TOLERANCE,
        )
        .unwrap();
        assert_eq!(eqs.len(), 1);
        assert_eq!((eqs[0].profile.p, eqs[0].profile.q), (0.0, 0.0));
    }

    #[test]
    fn interior_equilibria_are_tight() {
        let mut interior = 0;
        for c in [0.02, 0.05, 0.1, 0.15] {
            let eqs = solve_two_client(&toy(), costs(c, c), DEFAULT_GRID_POINTS, DEFAULT_TOLERANCE)
                .unwrap();
            for e in eqs.iter().filter(|e| e.kind == EquilibriumKind::Interior) {
                interior += 1;
                assert!(e.client_residual.abs() < 1e-9 && e.attacker_residual.abs() < 1e-9);
                assert!(e.verified);
                let gains =
                    deviation_gains(e.profile, &toy(), costs(c, c), DEVIATION_GRID).unwrap();
                assert!(gains.within(DEVIATION_TOLERANCE));
            }
        }
        assert!(interior > 0);
    }

    #[test]
    fn curve_leaving_the_square_near_a_root() {
        // q(p) hits 0 just past the root, between two grid points
        let eqs = solve_two_client(
            &toy(),
            costs(0.01, 0.01),
            DEFAULT_GRID_POINTS,
            DEFAULT_TOLERANCE,
        )
        .unwrap();
        let interior: Vec<_> = eqs
            .iter()
            .filter(|e| e.kind == EquilibriumKind::Interior)
            .collect();
        assert_eq!(interior.len(), 1);
        let e = interior[0];
        assert!((e.profile.p - 0.48314).abs() < 1e-4 && (e.profile.q - 0.01676).abs() < 1e-4);
        assert!(e.verified && e.attacker_residual.abs() < 1e-9);
    }

    #[test]
    fn solver_is_deterministic_and_checks_input() {
        let a = solve_two_client(&toy(), costs(0.05, 0.05), 501, 1e-9).unwrap();
        let b = solve_two_client(&toy(), costs(0.05, 0.05), 501, 1e-9).unwrap();
        assert_eq!(a, b);
        assert!(solve_two_client(&toy(), costs(0.05, 0.05), 100, 1e-9).is_err());
        assert!(solve_two_client(&toy(), costs(0.05, 0.05), 501, 0.0).is_err());
    }

    #[test]
    fn degenerate_tables_do_not_abort() {
        let flat = AccuracyTable::new(2, vec![0.5; 6]).unwrap();
        let eqs = solve_two_client(&flat, costs(0.0, 0.0), 201, 1e-9).unwrap();
        assert!(!eqs.is_empty());
        assert!(eqs.iter().all(|e| e.verified));
    }

    #[test]
    fn attacker_best_responses() {
        assert_eq!(best_response_attacker(2, &toy(), 0.5).unwrap(), vec![0]);
        assert_eq!(
            best_response_attacker(1, &toy(), 0.3).unwrap(),
            vec![0, 1, 2]
        );
        let decreasing =
            AccuracyTable::from_fn(4, |i, k| 0.9 - 0.1 * k as f64 + 0.0 * i as f64).unwrap();
        assert_eq!(
            best_response_attacker(4, &decreasing, 0.0).unwrap(),
            vec![4]
        );
        assert!(best_response_attacker(3, &toy(), 0.3).is_err());
    }

    #[test]
    fn defender_best_responses() {
        assert_eq!(best_response_defender(0, &toy(), 0.05).unwrap(), vec![2]);
        assert_eq!(best_response_defender(1, &toy(), 0.05).unwrap(), vec![0]);
        assert_eq!(best_response_defender(2, &toy(), 1.5).unwrap(), vec![0]);
    }

    #[test]
    fn toy_pure_equilibria() {
        let (eqs, _) = find_pure_nash(&toy(), costs(0.5, 0.05)).unwrap();
        assert_eq!(eqs.len(), 1);
        let e = eqs[0];
        assert_eq!((e.i_star, e.m_star), (2, 0));
        assert!((e.u_defender - 0.8).abs() < 1e-15 && (e.u_attacker + 0.9).abs() < 1e-15);

        let (eqs, _) = find_pure_nash(&toy(), costs(0.5, 0.6)).unwrap();
        assert_eq!(eqs.len(), 1);
        assert_eq!((eqs[0].i_star, eqs[0].m_star), (0, 0));
        assert!((eqs[0].u_defender - 0.5).abs() < 1e-15 && (eqs[0].u_attacker + 0.5).abs() < 1e-15);
    }

    #[test]
    fn toy_without_pure_equilibrium_reports_cycle() {
        let (eqs, map) = find_pure_nash(&toy(), costs(0.3, 0.05)).unwrap();
        assert!(eqs.is_empty());
        assert_eq!(map.attacker[1], vec![0, 1, 2]);
        assert_eq!(map.cycle(), vec![(0, 0), (2, 2)]);
    }

    #[test]
    fn selection_prefers_defender_then_smallest() {
        let e = |i, m, d| PureEquilibrium {
            i_star: i,
            m_star: m,
            u_defender: d,
            u_attacker: 0.0,
        };
        assert_eq!(select_equilibrium(&[]), None);
        let picked = select_equilibrium(&[e(1, 0, 0.5), e(0, 2, 0.7), e(0, 1, 0.7)]).unwrap();
        assert_eq!((picked.i_star, picked.m_star), (0, 1));
    }

    fn analytic(n: usize) -> AccuracyTable {
        AccuracyTable::from_fn(n, |i, k| {
            (0.5 + 0.4 * (i as f64 - 2.0 * k as f64) / n as f64).clamp(0.0, 1.0)
        })
        .unwrap()
    }

    #[test]
    fn sweep_single_table() {
        let pts = equilibrium_sweep(&[toy()], costs(0.5, 0.05)).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(
            pts[0].equilibrium.map(|e| (e.i_star, e.m_star)),
            Some((2, 0))
        );
        let gap = equilibrium_sweep(&[toy()], costs(0.3, 0.05)).unwrap();
        assert_eq!((gap[0].equilibrium, gap[0].count), (None, 0));
    }

    #[test]
    fn doubling_costs_never_helps_attacker() {
        let tables: Vec<_> = (1..=10).map(analytic).collect();
        let base = equilibrium_sweep(&tables, costs(0.1, 0.1)).unwrap();
        let doubled = equilibrium_sweep(&tables, costs(0.2, 0.2)).unwrap();
        for (a, b) in base.iter().zip(&doubled) {
            if let (Some(a), Some(b)) = (a.equilibrium, b.equilibrium) {
                assert!(b.u_attacker <= a.u_attacker);
            }
        }
    }

    proptest! {
        #[test]
        fn pure_nash_matches_enumeration(
            n in 1usize..=6,
            seed in any::<u64>(),
            ca in 0.0f64..=0.5,
            cd in 0.0f64..=0.5,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let t = AccuracyTable::from_fn(n, |_, _| rng.random::<f64>()).unwrap();
            let c = costs(ca, cd);
            let (eqs, map) = find_pure_nash(&t, c).unwrap();
            let mut want = Vec::new();
            for i in 0..=n {
                for m in 0..=n {
                    if pure_deviation_free(i, m, &t, c).unwrap() {
                        want.push((i, m));
                    }
                }
            }
            let got: Vec<_> = eqs.iter().map(|e| (e.i_star, e.m_star)).collect();
            prop_assert_eq!(got, want);
            prop_assert!(map.attacker.iter().chain(&map.defender).all(|s| !s.is_empty()));
        }
    }
}

//! Configuration LP for schedules with at most `k` matchings.
//!
//! For a fixed duration profile `alpha*_1 >= ... >= alpha*_k` the LP is
//!
//! ```text
//! max   sum_e z_e
//! s.t.  sum_M x_{M,i} <= 1                               for every slot i
//!       z_e <= D_e                                       for every edge e
//!       z_e <= sum_i sum_{M : e in M} c_{e,i} x_{M,i}    for every edge e
//!       x, z >= 0
//! ```
//!
//! with `c_{e,i} = min(alpha*_i, D_e)`. Capping the slot contribution at the
//! demand keeps the LP a relaxation (one slot never delivers more than `D_e`)
//! and is what makes independent rounding lose at most a `1 - 1/e` factor
//! per edge; with the uncapped `alpha*_i` a long slot on a small edge earns
//! LP credit that no rounding recovers in expectation.
//!
//! It has one variable per (slot, matching), so it is solved by column
//! generation: a restricted master over a matching pool, priced by a
//! maximum-weight matching under the edge duals `b_e` of the last family of
//! constraints. A fractional solution is turned into a schedule by picking,
//! independently per slot, matching `M` with probability `x_{M,i}`.

use std::collections::BTreeSet;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::greedy::greedy_picks;
use crate::matching::{all_matchings, max_weight_matching, maximal_matchings, WeightMatrix};
use crate::model::{throughput_of, Configuration, DemandMatrix, Instance, Matching, Schedule};
use crate::par::{self, Execution};
use crate::rational::{self, Rational};
use crate::rng::{self, Stream};
use crate::simplex::{Scalar, SimplexError, Tableau};

/// Independent roundings drawn from the best profile.
pub const ROUNDING_REPETITIONS: usize = 8;

/// Largest side for which the exhaustive-column solver is offered.
pub const EXHAUSTIVE_MAX_SIDE: usize = 5;

/// Slot durations, sorted descending, with the delay and window they were cut for.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DurationProfile {
    pub durations: Vec<Rational>,
    pub delta: Rational,
    pub window: Rational,
}

impl DurationProfile {
    pub fn new(mut durations: Vec<Rational>, delta: Rational, window: Rational) -> Result<Self> {
        durations.sort_unstable_by(|a, b| b.cmp(a));
        let p = Self { durations, delta, window };
        if p.durations.iter().any(|d| *d < Rational::zero()) {
            return Err(Error::InvalidArgument("negative slot duration".into()));
        }
        if p.time_used() > window {
            return Err(Error::Infeasible("duration profile exceeds its window".into()));
        }
        Ok(p)
    }

    pub fn slots(&self) -> usize {
        self.durations.len()
    }

    pub fn time_used(&self) -> Rational {
        self.durations.iter().map(|d| d + self.delta).sum()
    }
}

/// All k-slot profiles on the grid `g = epsilon (W - k delta) / k`.
///
/// Tuples are canonicalized descending; the list is sorted ascending
/// lexicographically. Empty when `k delta > W`.
pub fn enumerate_duration_profiles(
    window: Rational,
    delta: Rational,
    k: usize,
    epsilon: Rational,
) -> Result<Vec<DurationProfile>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if epsilon <= Rational::zero() || epsilon >= Rational::one() {
        return Err(Error::InvalidArgument("epsilon must lie in (0, 1)".into()));
    }
    let kk = rational::int(k as i128);
    let budget = window - kk * delta;
    if budget < Rational::zero() {
        return Ok(Vec::new());
    }
    let grid = epsilon * budget / kk;
    let steps = if grid.is_zero() { 0 } else { rational::floor_int(&(budget / grid)) as usize };
    let mut counts = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(k: usize, cap: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for c in 0..=cap.min(left) {
            cur.push(c);
            rec(k, c, left - c, cur, out);
            cur.pop();
        }
    }
    rec(k, steps, steps, &mut current, &mut counts);
    for c in &mut counts {
        c.sort_unstable_by(|a, b| b.cmp(a));
    }
    counts.sort();
    counts.dedup();
    Ok(counts
        .into_iter()
        .map(|c| DurationProfile {
            durations: c.iter().map(|&n| grid * rational::int(n as i128)).collect(),
            delta,
            window,
        })
        .collect())
}

/// One LP column: matching `matching` in slot `slot` with weight `weight`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub slot: usize,
    pub matching: Matching,
    pub weight: Rational,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LpDiagnostics {
    pub columns: usize,
    pub pricing_iterations: usize,
    pub pivots: usize,
    pub big_arithmetic: bool,
}

/// Optimal LP solution: positive-weight columns, edge flows `z_e`, and `Z_LP`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractionalSolution {
    pub columns: Vec<Column>,
    pub edge_flow: DemandMatrix,
    pub objective: Rational,
    pub diagnostics: LpDiagnostics,
}

impl FractionalSolution {
    /// Checks the LP constraints against `demand` and `profile`.
    pub fn check(&self, demand: &DemandMatrix, profile: &DurationProfile) -> Result<()> {
        let k = profile.slots();
        let mut per_slot = vec![Rational::zero(); k];
        let (n, m) = demand.dims();
        let mut cover = vec![Rational::zero(); n * m];
        for c in &self.columns {
            if c.slot >= k {
                return Err(Error::InvariantViolation(format!("column slot {} >= {k}", c.slot)));
            }
            if c.weight < Rational::zero() || c.weight > Rational::one() {
                return Err(Error::InvariantViolation("column weight outside [0, 1]".into()));
            }
            c.matching.check_dims(demand.dims())?;
            per_slot[c.slot] += c.weight;
            for &(s, r) in c.matching.edges() {
                cover[s * m + r] += rational::min(profile.durations[c.slot], demand.get(s, r)) * c.weight;
            }
        }
        if per_slot.iter().any(|w| *w > Rational::one()) {
            return Err(Error::InvariantViolation("slot weights sum above 1".into()));
        }
        for (i, ((d, z), c)) in demand.values().iter().zip(self.edge_flow.values()).zip(&cover).enumerate() {
            if z > d || z > c {
                return Err(Error::InvariantViolation(format!("edge flow {i} exceeds its bounds")));
            }
        }
        if self.edge_flow.total() != self.objective {
            return Err(Error::InvariantViolation("objective differs from total edge flow".into()));
        }
        Ok(())
    }
}

/// Dual prices: `y_i` per slot, `a_e` and `b_e` per edge (row-major).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualPrices {
    pub senders: usize,
    pub receivers: usize,
    pub y: Vec<Rational>,
    pub a: Vec<Rational>,
    pub b: Vec<Rational>,
}

impl DualPrices {
    /// `a_e + b_e >= 1` for every edge and all prices nonnegative.
    pub fn edge_feasible(&self) -> bool {
        let nonneg = |v: &[Rational]| v.iter().all(|x| *x >= Rational::zero());
        nonneg(&self.y)
            && nonneg(&self.a)
            && nonneg(&self.b)
            && self.a.iter().zip(&self.b).all(|(a, b)| a + b >= Rational::one())
    }

    /// Dual objective `sum_i y_i + sum_e D_e a_e`.
    pub fn objective(&self, demand: &DemandMatrix) -> Rational {
        self.y.iter().copied().sum::<Rational>()
            + demand.values().iter().zip(&self.a).map(|(d, a)| d * a).sum::<Rational>()
    }
}

/// Separation for the slot constraints `y_i >= sum_{e in M} c_{e,i} b_e`.
///
/// Returns the matching maximizing `sum c_{e,i} b_e` and its violation when
/// positive. A zero-duration slot never has a violated constraint.
pub fn price_matching(
    duals: &DualPrices,
    demand: &DemandMatrix,
    slot: usize,
    alpha: Rational,
) -> Option<(Matching, Rational)> {
    if alpha.is_zero() {
        return None;
    }
    let weights = WeightMatrix::from_fn(duals.senders, duals.receivers, |s, r| {
        duals.b[s * duals.receivers + r] * rational::min(alpha, demand.get(s, r))
    });
    let (matching, weight) = max_weight_matching(&weights);
    let violation = weight - duals.y[slot];
    (violation > Rational::zero()).then_some((matching, violation))
}

/// Row layout of the restricted master.
struct Layout {
    slots: usize,
    receivers: usize,
    /// Edge indices (row-major) with positive demand; each owns two rows.
    live_edges: Vec<usize>,
    edge_pos: Vec<Option<usize>>,
}

impl Layout {
    fn new(demand: &DemandMatrix, slots: usize) -> Self {
        let values = demand.values();
        let live_edges: Vec<usize> = (0..values.len()).filter(|&i| values[i] > Rational::zero()).collect();
        let mut edge_pos = vec![None; values.len()];
        for (pos, &e) in live_edges.iter().enumerate() {
            edge_pos[e] = Some(pos);
        }
        Self { slots, receivers: demand.receivers(), live_edges, edge_pos }
    }

    fn cap_row(&self, pos: usize) -> usize {
        self.slots + pos
    }

    fn link_row(&self, pos: usize) -> usize {
        self.slots + self.live_edges.len() + pos
    }

    fn is_live(&self, s: usize, r: usize) -> bool {
        self.edge_pos[s * self.receivers + r].is_some()
    }
}

/// How the master's columns are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColumnSource {
    /// Seeded pool plus columns priced in by the separation oracle.
    Generated,
    /// Every inclusion-maximal matching over positive-demand edges, for every
    /// slot. A submatching's column is dominated by any maximal superset (same
    /// slot row, link coefficients no smaller), so the optimum is unchanged.
    Exhaustive,
}

type SimplexResult<T> = std::result::Result<T, SimplexError>;

struct Master<T: Scalar> {
    tableau: Tableau<T>,
    /// Structural column -> (slot, matching); `None` marks a `z_e` column.
    owners: Vec<Option<(usize, Matching)>>,
    pools: Vec<BTreeSet<Matching>>,
}

impl<T: Scalar> Master<T> {
    fn new(demand: &DemandMatrix, layout: &Layout) -> SimplexResult<Self> {
        let mut rhs = vec![Rational::one(); layout.slots];
        rhs.extend(layout.live_edges.iter().map(|&e| demand.values()[e]));
        rhs.extend(std::iter::repeat_n(Rational::zero(), layout.live_edges.len()));
        let mut tableau = Tableau::<T>::new(&rhs);
        let mut owners = Vec::new();
        for pos in 0..layout.live_edges.len() {
            tableau.add_column(
                &[(layout.cap_row(pos), Rational::one()), (layout.link_row(pos), Rational::one())],
                &Rational::one(),
            )?;
            owners.push(None);
        }
        Ok(Self { tableau, owners, pools: vec![BTreeSet::new(); layout.slots] })
    }

    /// Adds column (slot, matching) unless pooled already; reports whether it was added.
    fn add(
        &mut self,
        layout: &Layout,
        demand: &DemandMatrix,
        profile: &DurationProfile,
        slot: usize,
        matching: &Matching,
    ) -> SimplexResult<bool> {
        let alpha = profile.durations[slot];
        let live: Vec<(usize, Rational)> = matching
            .edges()
            .iter()
            .filter_map(|&(s, r)| {
                layout.edge_pos[s * layout.receivers + r].map(|pos| (pos, rational::min(alpha, demand.get(s, r))))
            })
            .collect();
        if alpha.is_zero() || live.is_empty() || !self.pools[slot].insert(matching.clone()) {
            return Ok(false);
        }
        let mut col = vec![(slot, Rational::one())];
        col.extend(live.into_iter().map(|(pos, c)| (layout.link_row(pos), -c)));
        self.tableau.add_column(&col, &Rational::zero())?;
        self.owners.push(Some((slot, matching.clone())));
        Ok(true)
    }

    fn duals(&self, layout: &Layout, dims: (usize, usize)) -> Result<DualPrices> {
        let d = |row: usize| -> Result<Rational> {
            self.tableau
                .dual(row)
                .and_then(|v| v.to_rational())
                .ok_or(Error::Overflow("dual prices"))
        };
        let y = (0..layout.slots).map(d).collect::<Result<Vec<_>>>()?;
        let edges = dims.0 * dims.1;
        // Zero-demand edges carry no rows; (a, b) = (1, 0) keeps the dual feasible.
        let mut a = vec![Rational::one(); edges];
        let mut b = vec![Rational::zero(); edges];
        for (pos, &e) in layout.live_edges.iter().enumerate() {
            a[e] = d(layout.cap_row(pos))?;
            b[e] = d(layout.link_row(pos))?;
        }
        Ok(DualPrices { senders: dims.0, receivers: dims.1, y, a, b })
    }

    fn solution(&self, layout: &Layout, demand: &DemandMatrix, diagnostics: LpDiagnostics) -> Result<FractionalSolution> {
        let conv = |v: T| v.to_rational().ok_or(Error::Overflow("LP solution"));
        let mut columns = Vec::new();
        let mut flow = vec![Rational::zero(); demand.values().len()];
        for (j, owner) in self.owners.iter().enumerate() {
            let value = conv(self.tableau.value(j))?;
            match owner {
                None => flow[layout.live_edges[j]] = value,
                Some((slot, matching)) if value > Rational::zero() => {
                    columns.push(Column { slot: *slot, matching: matching.clone(), weight: value });
                }
                Some(_) => {}
            }
        }
        columns.sort_by(|x, y| (x.slot, &x.matching).cmp(&(y.slot, &y.matching)));
        let objective = conv(self.tableau.objective().clone())?;
        let edge_flow = DemandMatrix::new(demand.senders(), demand.receivers(), flow)?;
        Ok(FractionalSolution { columns, edge_flow, objective, diagnostics })
    }
}

fn run_master<T: Scalar>(
    demand: &DemandMatrix,
    profile: &DurationProfile,
    seeds: &[Matching],
    source: ColumnSource,
) -> Result<SimplexResult<FractionalSolution>> {
    let layout = Layout::new(demand, profile.slots());
    let mut master = match Master::<T>::new(demand, &layout) {
        Ok(m) => m,
        Err(e) => return Ok(Err(e)),
    };
    let dims = demand.dims();
    macro_rules! tryx {
        ($e:expr) => {
            match $e {
                Ok(v) => v,
                Err(e) => return Ok(Err(e)),
            }
        };
    }
    match source {
        ColumnSource::Exhaustive => {
            let all = maximal_matchings(dims, |s, r| layout.is_live(s, r));
            for slot in 0..layout.slots {
                for m in &all {
                    tryx!(master.add(&layout, demand, profile, slot, m));
                }
            }
        }
        ColumnSource::Generated => {
            for slot in 0..layout.slots {
                let alpha = profile.durations[slot];
                let (best, _) = max_weight_matching(&WeightMatrix::from_fn(dims.0, dims.1, |s, r| {
                    rational::min(demand.get(s, r), alpha)
                }));
                tryx!(master.add(&layout, demand, profile, slot, &best));
                for m in seeds {
                    tryx!(master.add(&layout, demand, profile, slot, m));
                }
            }
        }
    }
    let mut pricing_iterations = 0;
    loop {
        tryx!(master.tableau.optimize());
        if source == ColumnSource::Exhaustive {
            break;
        }
        pricing_iterations += 1;
        let duals = master.duals(&layout, dims)?;
        let mut added = false;
        for slot in 0..layout.slots {
            if let Some((m, _)) = price_matching(&duals, demand, slot, profile.durations[slot]) {
                if tryx!(master.add(&layout, demand, profile, slot, &m)) {
                    added = true;
                } else {
                    return Err(Error::InvariantViolation(
                        "pricing returned a pooled column with positive violation".into(),
                    ));
                }
            }
        }
        if !added {
            break;
        }
    }
    let diagnostics = LpDiagnostics {
        columns: master.pools.iter().map(BTreeSet::len).sum(),
        pricing_iterations,
        pivots: master.tableau.pivots,
        big_arithmetic: false,
    };
    Ok(Ok(master.solution(&layout, demand, diagnostics)?))
}

fn solve_exact(
    demand: &DemandMatrix,
    profile: &DurationProfile,
    seeds: &[Matching],
    source: ColumnSource,
) -> Result<FractionalSolution> {
    match run_master::<Rational>(demand, profile, seeds, source)? {
        Ok(sol) => Ok(sol),
        Err(SimplexError::Unbounded) => Err(Error::InvariantViolation("configuration LP reported unbounded".into())),
        Err(SimplexError::Overflow) => match run_master::<BigRational>(demand, profile, seeds, source)? {
            Ok(mut sol) => {
                sol.diagnostics.big_arithmetic = true;
                Ok(sol)
            }
            Err(SimplexError::Unbounded) => {
                Err(Error::InvariantViolation("configuration LP reported unbounded".into()))
            }
            Err(SimplexError::Overflow) => Err(Error::Overflow("configuration LP")),
        },
    }
}

/// Optimal LP solution by column generation.
pub fn solve_configuration_lp(demand: &DemandMatrix, profile: &DurationProfile) -> Result<FractionalSolution> {
    solve_configuration_lp_seeded(demand, profile, &[])
}

/// Column generation with extra seed matchings in every slot's initial pool.
pub fn solve_configuration_lp_seeded(
    demand: &DemandMatrix,
    profile: &DurationProfile,
    seeds: &[Matching],
) -> Result<FractionalSolution> {
    solve_exact(demand, profile, seeds, ColumnSource::Generated)
}

/// Optimal LP solution with every matching present as a column.
///
/// Only offered for sides up to [`EXHAUSTIVE_MAX_SIDE`].
pub fn solve_configuration_lp_exhaustive(demand: &DemandMatrix, profile: &DurationProfile) -> Result<FractionalSolution> {
    let (n, m) = demand.dims();
    if n > EXHAUSTIVE_MAX_SIDE || m > EXHAUSTIVE_MAX_SIDE {
        return Err(Error::BudgetExceeded(format!(
            "exhaustive columns need sides <= {EXHAUSTIVE_MAX_SIDE}, got {n}x{m}"
        )));
    }
    solve_exact(demand, profile, &[], ColumnSource::Exhaustive)
}

/// Duals of the optimal restricted master, for inspection and tests.
pub fn optimal_duals(demand: &DemandMatrix, profile: &DurationProfile) -> Result<DualPrices> {
    let layout = Layout::new(demand, profile.slots());
    let mut master = Master::<BigRational>::new(demand, &layout).map_err(|_| Error::Overflow("LP"))?;
    let all = all_matchings(demand.dims(), |s, r| layout.is_live(s, r));
    for slot in 0..layout.slots {
        for m in &all {
            master.add(&layout, demand, profile, slot, m).map_err(|_| Error::Overflow("LP"))?;
        }
    }
    master.tableau.optimize().map_err(|_| Error::Overflow("LP"))?;
    master.duals(&layout, demand.dims())
}

/// Slack allowed on a slot's weight sum before rounding refuses the input.
fn slot_sum_tolerance() -> Rational {
    Rational::one() + Rational::new(1, 1_000_000_000_000)
}

/// Picks, independently per slot, matching `M` with probability `x_{M,i}`
/// (nothing with the leftover probability). Deterministic in `seed`.
pub fn round_solution(sol: &FractionalSolution, profile: &DurationProfile, seed: u64) -> Result<Schedule> {
    let k = profile.slots();
    let mut slots: Vec<Vec<&Column>> = vec![Vec::new(); k];
    for c in &sol.columns {
        if c.slot >= k {
            return Err(Error::InvariantViolation(format!("column slot {} outside profile", c.slot)));
        }
        if c.weight < Rational::zero() {
            return Err(Error::InvariantViolation("negative column weight".into()));
        }
        slots[c.slot].push(c);
    }
    let mut rng = rng::stream(seed, Stream::Rounding, &[]);
    let mut configs = Vec::new();
    for (slot, cols) in slots.iter().enumerate() {
        let sum: Rational = cols.iter().map(|c| c.weight).sum();
        if sum > slot_sum_tolerance() {
            return Err(Error::InvariantViolation(format!(
                "slot {slot} weights sum to {} > 1",
                rational::format_rational(&sum)
            )));
        }
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for c in cols {
            acc += rational::to_f64(&c.weight);
            if u < acc {
                let alpha = profile.durations[slot];
                if !alpha.is_zero() && !c.matching.is_empty() {
                    configs.push(Configuration { matching: c.matching.clone(), duration: alpha });
                }
                break;
            }
        }
    }
    Ok(Schedule { configs, delta: profile.delta, window: profile.window })
}

/// Per-profile record of an LP sweep.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileReport {
    pub slots: usize,
    pub durations: Vec<String>,
    pub z_lp: String,
    #[serde(flatten)]
    pub diagnostics: LpDiagnostics,
}

/// Result of [`lp_schedule_detailed`].
#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub schedule: Schedule,
    pub best_profile: Option<DurationProfile>,
    pub z_lp: Rational,
    /// Throughput of each rounding of the best profile, in repetition order.
    pub realized: Vec<Rational>,
    pub profiles: Vec<ProfileReport>,
}

impl LpOutcome {
    pub fn mean_realized(&self) -> Rational {
        if self.realized.is_empty() {
            return Rational::zero();
        }
        self.realized.iter().copied().sum::<Rational>() / rational::int(self.realized.len() as i128)
    }
}

/// Profiles for every slot count `1..=k`, keeping only those that cannot be
/// extended by one grid step (the LP value is monotone in every duration).
pub fn candidate_profiles(inst: &Instance, k: usize, epsilon: Rational) -> Result<Vec<DurationProfile>> {
    let mut out = Vec::new();
    for slots in 1..=k {
        let profiles = enumerate_duration_profiles(inst.window, inst.delta, slots, epsilon)?;
        let kk = rational::int(slots as i128);
        let budget = inst.window - kk * inst.delta;
        let grid = epsilon * budget / kk;
        out.extend(profiles.into_iter().filter(|p| {
            let used: Rational = p.durations.iter().copied().sum();
            grid.is_zero() || used + grid > budget
        }));
    }
    Ok(out)
}

/// LP rounding schedule: best profile by `Z_LP`, rounded
/// [`ROUNDING_REPETITIONS`] times, best realization returned.
pub fn lp_schedule(inst: &Instance, k: usize, epsilon: Rational, seed: u64) -> Result<Schedule> {
    Ok(lp_schedule_detailed(inst, k, epsilon, seed, Execution::Sequential)?.schedule)
}

pub fn lp_schedule_detailed(
    inst: &Instance,
    k: usize,
    epsilon: Rational,
    seed: u64,
    exec: Execution,
) -> Result<LpOutcome> {
    let empty = LpOutcome {
        schedule: inst.empty_schedule(),
        best_profile: None,
        z_lp: Rational::zero(),
        realized: Vec::new(),
        profiles: Vec::new(),
    };
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if epsilon <= Rational::zero() || epsilon >= Rational::one() {
        return Err(Error::InvalidArgument("epsilon must lie in (0, 1)".into()));
    }
    if inst.delta > inst.window || inst.demand.is_zero() {
        return Ok(empty);
    }
    let profiles = candidate_profiles(inst, k, epsilon)?;
    let seeds: Vec<Matching> = {
        let mut set: BTreeSet<Matching> = BTreeSet::new();
        for p in greedy_picks(&inst.demand, inst.delta, inst.window) {
            set.insert(p.matching);
        }
        set.into_iter().collect()
    };
    let solved = par::map(exec, &profiles, |p| solve_configuration_lp_seeded(&inst.demand, p, &seeds));
    let mut reports = Vec::with_capacity(profiles.len());
    let mut best: Option<(usize, FractionalSolution)> = None;
    for (idx, (profile, sol)) in profiles.iter().zip(solved).enumerate() {
        let sol = sol?;
        reports.push(ProfileReport {
            slots: profile.slots(),
            durations: profile.durations.iter().map(rational::format_rational).collect(),
            z_lp: rational::format_rational(&sol.objective),
            diagnostics: sol.diagnostics.clone(),
        });
        if best.as_ref().is_none_or(|(_, b)| sol.objective > b.objective) {
            best = Some((idx, sol));
        }
    }
    let Some((idx, sol)) = best else {
        return Ok(LpOutcome { profiles: reports, ..empty });
    };
    let profile = &profiles[idx];
    let mut realized = Vec::with_capacity(ROUNDING_REPETITIONS);
    let mut chosen: Option<(Schedule, Rational)> = None;
    for rep in 0..ROUNDING_REPETITIONS {
        let key = rng::derive_key(seed, Stream::Rounding, &[idx as u64, rep as u64]);
        let mut schedule = round_solution(&sol, profile, key)?;
        schedule.window = inst.window;
        let value = throughput_of(&schedule.configs, &inst.demand)?;
        realized.push(value);
        if chosen.as_ref().is_none_or(|(_, v)| value > *v) {
            chosen = Some((schedule, value));
        }
    }
    let (schedule, _) = chosen.expect("at least one rounding");
    if !schedule.is_feasible() {
        return Err(Error::InvariantViolation("rounded schedule exceeds the window".into()));
    }
    Ok(LpOutcome { schedule, best_profile: Some(profile.clone()), z_lp: sol.objective, realized, profiles: reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn q(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    fn durations(ps: &[DurationProfile]) -> Vec<Vec<Rational>> {
        ps.iter().map(|p| p.durations.clone()).collect()
    }

    #[test]
    fn profile_examples() {
        let ps = enumerate_duration_profiles(int(3), int(1), 1, q(1, 2)).unwrap();
        assert_eq!(durations(&ps), vec![vec![int(0)], vec![int(1)], vec![int(2)]]);
        assert!(enumerate_duration_profiles(int(1), int(1), 2, q(1, 2)).unwrap().is_empty());
        assert!(enumerate_duration_profiles(int(4), int(1), 2, int(1)).is_err());
    }

    #[test]
    fn profile_pairs_match_integer_enumeration() {
        // epsilon just below 1 is not allowed to equal 1; use the grid directly:
        // W = 4, delta = 1, k = 2, epsilon = 1/2 gives g = 1/2.
        let ps = enumerate_duration_profiles(int(4), int(1), 2, q(1, 2)).unwrap();
        let mut oracle = Vec::new();
        for a in 0..=4i128 {
            for b in 0..=a {
                if a + b <= 4 {
                    oracle.push(vec![q(a, 2), q(b, 2)]);
                }
            }
        }
        oracle.sort();
        assert_eq!(durations(&ps), oracle);
    }

    #[test]
    fn lp_examples() {
        let d = DemandMatrix::from_int_rows(&[[2]]).unwrap();
        let p = DurationProfile::new(vec![int(2)], int(1), int(3)).unwrap();
        let sol = solve_configuration_lp(&d, &p).unwrap();
        assert_eq!(sol.objective, int(2));
        assert_eq!(sol.columns.len(), 1);
        assert_eq!(sol.columns[0].weight, int(1));
        sol.check(&d, &p).unwrap();

        let zero = DemandMatrix::zeros(2, 2);
        let p2 = DurationProfile::new(vec![int(1)], int(1), int(3)).unwrap();
        assert_eq!(solve_configuration_lp(&zero, &p2).unwrap().objective, int(0));

        let ones = DemandMatrix::from_int_rows(&[[1, 1], [1, 1]]).unwrap();
        let sol = solve_configuration_lp(&ones, &p2).unwrap();
        assert_eq!(sol.objective, int(2));
        assert_eq!(solve_configuration_lp_exhaustive(&ones, &p2).unwrap().objective, int(2));
    }

    #[test]
    fn lp_respects_sender_capacity() {
        // One slot of length 2 over a 2x2 all-twos matrix: any perfect matching
        // already sends 4, which is also the LP bound (each sender ships <= 2).
        let d = DemandMatrix::from_int_rows(&[[2, 2], [2, 2]]).unwrap();
        let p = DurationProfile::new(vec![int(2)], int(1), int(3)).unwrap();
        assert_eq!(solve_configuration_lp(&d, &p).unwrap().objective, int(4));
        // Two unit slots on a single row: the LP cannot exceed the row total.
        let d = DemandMatrix::from_int_rows(&[[1, 1, 1]]).unwrap();
        let p = DurationProfile::new(vec![int(1), int(1)], int(0), int(2)).unwrap();
        assert_eq!(solve_configuration_lp(&d, &p).unwrap().objective, int(2));
    }

    #[test]
    fn pricing_examples() {
        let duals = DualPrices {
            senders: 2,
            receivers: 2,
            y: vec![int(3)],
            a: vec![int(0); 4],
            b: vec![int(1); 4],
        };
        let twos = DemandMatrix::from_int_rows(&[[2, 2], [2, 2]]).unwrap();
        let (m, v) = price_matching(&duals, &twos, 0, int(2)).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(v, int(1));
        let duals5 = DualPrices { y: vec![int(5)], ..duals.clone() };
        assert!(price_matching(&duals5, &twos, 0, int(2)).is_none());
        let zero_b = DualPrices { b: vec![int(0); 4], y: vec![int(0)], ..duals.clone() };
        assert!(price_matching(&zero_b, &twos, 0, int(2)).is_none());
        assert!(price_matching(&duals, &twos, 0, int(0)).is_none());
        // Coefficients are capped by demand: 1 + 1 < 3.
        let ones = DemandMatrix::from_int_rows(&[[1, 1], [1, 1]]).unwrap();
        assert!(price_matching(&duals, &ones, 0, int(2)).is_none());
    }

    #[test]
    fn slot_credit_is_capped_by_demand() {
        // Uncapped, half of a length-2 slot on each edge would claim 2.
        let d = DemandMatrix::from_int_rows(&[[1, 1]]).unwrap();
        let p = DurationProfile::new(vec![int(2)], int(1), int(3)).unwrap();
        let sol = solve_configuration_lp(&d, &p).unwrap();
        assert_eq!(sol.objective, int(1));
        sol.check(&d, &p).unwrap();
        assert_eq!(solve_configuration_lp_exhaustive(&d, &p).unwrap().objective, int(1));
    }

    #[test]
    fn final_duals_are_feasible_and_tight() {
        let d = DemandMatrix::from_int_rows(&[[3, 1, 0], [2, 2, 1], [0, 1, 3]]).unwrap();
        let p = DurationProfile::new(vec![int(2), int(1)], int(1), int(5)).unwrap();
        let sol = solve_configuration_lp(&d, &p).unwrap();
        let duals = optimal_duals(&d, &p).unwrap();
        assert!(duals.edge_feasible());
        for slot in 0..p.slots() {
            assert!(price_matching(&duals, &d, slot, p.durations[slot]).is_none());
        }
        assert_eq!(duals.objective(&d), sol.objective);
    }

    fn single_slot_solution(weights: &[(Vec<(usize, usize)>, Rational)]) -> FractionalSolution {
        FractionalSolution {
            columns: weights
                .iter()
                .map(|(e, w)| Column { slot: 0, matching: Matching::new(e.clone()).unwrap(), weight: *w })
                .collect(),
            edge_flow: DemandMatrix::zeros(2, 2),
            objective: int(0),
            diagnostics: LpDiagnostics::default(),
        }
    }

    #[test]
    fn rounding_examples() {
        let p = DurationProfile::new(vec![int(1)], int(1), int(2)).unwrap();
        let sure = single_slot_solution(&[(vec![(0, 0)], int(1))]);
        for seed in 0..20 {
            let s = round_solution(&sure, &p, seed).unwrap();
            assert_eq!(s.configs.len(), 1);
            assert!(s.is_feasible());
        }
        let none = single_slot_solution(&[(vec![(0, 0)], int(0))]);
        assert!(round_solution(&none, &p, 3).unwrap().is_empty());
        let over = single_slot_solution(&[(vec![(0, 0)], q(3, 4)), (vec![(1, 1)], q(1, 2))]);
        assert!(round_solution(&over, &p, 0).is_err());
    }

    #[test]
    fn rounding_half_half_is_balanced() {
        let p = DurationProfile::new(vec![int(1)], int(1), int(2)).unwrap();
        let sol = single_slot_solution(&[(vec![(0, 0)], q(1, 2)), (vec![(0, 1)], q(1, 2))]);
        let trials = 10_000u64;
        let first = (0..trials)
            .filter(|&seed| round_solution(&sol, &p, seed).unwrap().configs[0].matching.edges() == [(0, 0)])
            .count() as f64;
        // Binomial(10000, 1/2): sigma = 50.
        assert!((first - 5000.0).abs() <= 150.0, "{first}");
    }

    #[test]
    fn lp_schedule_examples() {
        let inst = Instance::new(DemandMatrix::from_int_rows(&[[2]]).unwrap(), int(1), int(3)).unwrap();
        let s = lp_schedule(&inst, 1, q(1, 2), 7).unwrap();
        assert_eq!(s.configs.len(), 1);
        assert_eq!(s.configs[0].duration, int(2));
        assert_eq!(throughput_of(&s.configs, &inst.demand).unwrap(), int(2));

        let zero = Instance::new(DemandMatrix::zeros(2, 2), int(1), int(3)).unwrap();
        assert!(lp_schedule(&zero, 2, q(1, 2), 7).unwrap().is_empty());

        let tight = Instance::new(DemandMatrix::from_int_rows(&[[2]]).unwrap(), int(4), int(3)).unwrap();
        assert!(lp_schedule(&tight, 1, q(1, 2), 7).unwrap().is_empty());
    }

    #[test]
    fn lp_schedule_is_seed_deterministic() {
        let inst = Instance::new(DemandMatrix::from_int_rows(&[[2, 1], [1, 2]]).unwrap(), int(1), int(5)).unwrap();
        let a = lp_schedule_detailed(&inst, 2, q(1, 2), 11, Execution::Sequential).unwrap();
        let b = lp_schedule_detailed(&inst, 2, q(1, 2), 11, Execution::Parallel).unwrap();
        assert_eq!(a.schedule, b.schedule);
        assert_eq!(a.realized, b.realized);
    }
}

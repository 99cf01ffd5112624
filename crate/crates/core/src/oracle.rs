//! Exhaustive ground truth for desk-scale instances.
//!
//! [`optimal_schedule_integer`] searches every schedule with integer
//! durations. Two reductions keep it small without losing optimality: only
//! matchings maximal among the positive-residual edges are tried (extra edges
//! never reduce the objective), and a duration never exceeds the largest
//! residual on its matching. Subproblems are memoized on the residual in a
//! row/column-sorted form (a permutation of the residual, hence an equivalent
//! instance), the remaining time and the remaining configuration count.

use std::collections::HashMap;
use std::sync::Arc;

use dashmap::DashMap;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::matching::{all_matchings, maximal_matchings};
use crate::model::{Configuration, DemandMatrix, Instance, Matching, Schedule};
use crate::online::Trace;
use crate::par::{self, Execution};
use crate::rational::{self, Rational};

/// Largest `senders * receivers` the offline oracle accepts.
pub const MAX_EDGES: usize = 9;
/// Largest window the offline oracle accepts.
pub const MAX_WINDOW: i64 = 12;
/// Online no-delay oracle limits: horizon, unit edges per step, side length.
pub const ONLINE_MAX_STEPS: usize = 4;
pub const ONLINE_MAX_EDGES_PER_STEP: u64 = 3;
pub const ONLINE_MAX_SIDE: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Key {
    dims: (usize, usize),
    delta: i64,
    time: i64,
    configs: i64,
    residual: Vec<i64>,
}

/// Memo table shared by every search that uses it; safe across threads.
///
/// Values are pure functions of their key, so sharing a cache between
/// instances, or between sequential and parallel runs, never changes results.
#[derive(Debug, Default)]
pub struct OracleCache {
    values: DashMap<Key, i64>,
    supports: DashMap<((usize, usize), u64), Arc<Vec<Vec<usize>>>>,
}

impl OracleCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Maximal matchings over the edges in `mask`, as row-major edge indices.
    fn matchings(&self, dims: (usize, usize), mask: u64) -> Arc<Vec<Vec<usize>>> {
        if let Some(v) = self.supports.get(&(dims, mask)) {
            return v.clone();
        }
        let m = dims.1;
        let list: Vec<Vec<usize>> = maximal_matchings(dims, |s, r| mask >> (s * m + r) & 1 == 1)
            .into_iter()
            .filter(|mm| !mm.is_empty())
            .map(|mm| mm.edges().iter().map(|&(s, r)| s * m + r).collect())
            .collect();
        let list = Arc::new(list);
        self.supports.insert((dims, mask), list.clone());
        list
    }
}

fn integer(value: &Rational, what: &str) -> Result<i64> {
    if !rational::is_integer(value) {
        return Err(Error::BudgetExceeded(format!(
            "oracle needs integer {what}, got {}",
            rational::format_rational(value)
        )));
    }
    value.to_integer().to_i64().ok_or(Error::Overflow("oracle input"))
}

/// Sorts rows, then columns, lexicographically; the result is a permutation
/// of `values` and therefore an equivalent residual.
fn sorted_form((n, m): (usize, usize), values: &[i64]) -> Vec<i64> {
    let mut rows: Vec<&[i64]> = values.chunks(m.max(1)).take(n).collect();
    rows.sort_unstable();
    let mut cols: Vec<Vec<i64>> = (0..m).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
    cols.sort_unstable();
    let mut out = vec![0; n * m];
    for (c, col) in cols.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            out[r * m + c] = *v;
        }
    }
    out
}

struct Search<'a> {
    dims: (usize, usize),
    delta: i64,
    cache: &'a OracleCache,
}

impl Search<'_> {
    fn config_limit(&self, time: i64, configs: i64) -> i64 {
        configs.min(time / (self.delta + 1))
    }

    /// Candidate moves from `residual`: (matching edge indices, duration, gain).
    fn moves(&self, residual: &[i64], time: i64) -> Vec<(Vec<usize>, i64, i64)> {
        let max_alpha = time - self.delta;
        if max_alpha < 1 {
            return Vec::new();
        }
        let mask = residual.iter().enumerate().filter(|(_, v)| **v > 0).fold(0u64, |acc, (i, _)| acc | 1 << i);
        let mut out = Vec::new();
        for m in self.cache.matchings(self.dims, mask).iter() {
            let top = m.iter().map(|&e| residual[e]).max().unwrap_or(0).min(max_alpha);
            for alpha in 1..=top {
                let gain = m.iter().map(|&e| residual[e].min(alpha)).sum();
                out.push((m.clone(), alpha, gain));
            }
        }
        out
    }

    fn after(residual: &[i64], matching: &[usize], alpha: i64) -> Vec<i64> {
        let mut next = residual.to_vec();
        for &e in matching {
            next[e] -= next[e].min(alpha);
        }
        next
    }

    fn value(&self, residual: &[i64], time: i64, configs: i64) -> i64 {
        let configs = self.config_limit(time, configs);
        if configs == 0 || residual.iter().all(|v| *v == 0) {
            return 0;
        }
        let key = Key {
            dims: self.dims,
            delta: self.delta,
            time,
            configs,
            residual: sorted_form(self.dims, residual),
        };
        if let Some(v) = self.cache.values.get(&key) {
            return *v;
        }
        let mut best = 0;
        for (m, alpha, gain) in self.moves(residual, time) {
            let child = Self::after(residual, &m, alpha);
            best = best.max(gain + self.value(&child, time - alpha - self.delta, configs - 1));
        }
        self.cache.values.insert(key, best);
        best
    }
}

/// Optimal integer-duration schedule, with its throughput.
///
/// `max_configs` bounds the number of configurations. Inputs must be integer
/// with `senders * receivers <= 9` and `window <= 12`; larger instances are
/// refused with [`Error::BudgetExceeded`].
pub fn optimal_schedule_integer(inst: &Instance, max_configs: Option<usize>) -> Result<(Schedule, Rational)> {
    optimal_schedule_integer_with(inst, max_configs, &OracleCache::new(), Execution::Sequential)
}

pub fn optimal_schedule_integer_with(
    inst: &Instance,
    max_configs: Option<usize>,
    cache: &OracleCache,
    exec: Execution,
) -> Result<(Schedule, Rational)> {
    let dims = inst.demand.dims();
    if dims.0 * dims.1 > MAX_EDGES {
        return Err(Error::BudgetExceeded(format!(
            "oracle handles at most {MAX_EDGES} edges, got {}x{}",
            dims.0, dims.1
        )));
    }
    let window = integer(&inst.window, "window")?;
    let delta = integer(&inst.delta, "delta")?;
    if window > MAX_WINDOW {
        return Err(Error::BudgetExceeded(format!("oracle handles windows up to {MAX_WINDOW}, got {window}")));
    }
    let mut residual = inst
        .demand
        .values()
        .iter()
        .map(|v| integer(v, "demands"))
        .collect::<Result<Vec<i64>>>()?;
    let search = Search { dims, delta, cache };
    let configs = max_configs.map_or(i64::MAX, |k| k as i64);

    // Root moves are independent subtrees; evaluate them on the pool, then
    // walk down choosing the first move that attains the optimum.
    let root_moves = if search.config_limit(window, configs) > 0 { search.moves(&residual, window) } else { Vec::new() };
    let root_values = par::map(exec, &root_moves, |(m, alpha, gain)| {
        gain + search.value(&Search::after(&residual, m, *alpha), window - alpha - delta, configs - 1)
    });
    let best = root_values.iter().copied().max().unwrap_or(0).max(0);

    let mut chosen = Vec::new();
    let (mut time, mut left, mut target) = (window, configs, best);
    let mut first = Some((root_moves, root_values));
    while target > 0 {
        let (moves, values) = match first.take() {
            Some(v) => v,
            None => {
                let moves = search.moves(&residual, time);
                let values = moves
                    .iter()
                    .map(|(m, alpha, gain)| {
                        gain + search.value(&Search::after(&residual, m, *alpha), time - alpha - delta, left - 1)
                    })
                    .collect();
                (moves, values)
            }
        };
        let idx = values
            .iter()
            .position(|v| *v == target)
            .ok_or_else(|| Error::InvariantViolation("oracle reconstruction lost the optimum".into()))?;
        let (m, alpha, gain) = &moves[idx];
        residual = Search::after(&residual, m, *alpha);
        time -= alpha + delta;
        left -= 1;
        target -= gain;
        let edges = m.iter().map(|&e| (e / dims.1, e % dims.1)).collect();
        chosen.push(Configuration { matching: Matching::new(edges)?, duration: rational::int(*alpha as i128) });
    }
    let schedule = Schedule { configs: chosen, delta: inst.delta, window: inst.window };
    Ok((schedule, rational::int(best as i128)))
}

/// Best throughput when slot `i` runs one matching (or nothing) for exactly
/// `durations[i]`, by enumerating every assignment.
pub fn optimal_fixed_durations(demand: &DemandMatrix, durations: &[Rational]) -> Result<Rational> {
    let dims = demand.dims();
    let matchings = all_matchings(dims, |s, r| demand.get(s, r) > Rational::zero());
    let limit = 1_000_000usize;
    let combos = durations.iter().try_fold(1usize, |acc, _| acc.checked_mul(matchings.len()));
    if combos.is_none_or(|c| c > limit) {
        return Err(Error::BudgetExceeded(format!("more than {limit} slot assignments")));
    }
    let mut cover = vec![Rational::zero(); dims.0 * dims.1];
    fn rec(
        slot: usize,
        durations: &[Rational],
        matchings: &[Matching],
        demand: &DemandMatrix,
        cover: &mut [Rational],
        best: &mut Rational,
    ) {
        let m = demand.receivers();
        if slot == durations.len() {
            let value: Rational =
                demand.values().iter().zip(cover.iter()).map(|(d, c)| rational::min(*d, *c)).sum();
            if value > *best {
                *best = value;
            }
            return;
        }
        for mm in matchings {
            for &(s, r) in mm.edges() {
                cover[s * m + r] += durations[slot];
            }
            rec(slot + 1, durations, matchings, demand, cover, best);
            for &(s, r) in mm.edges() {
                cover[s * m + r] -= durations[slot];
            }
        }
    }
    let mut best = Rational::zero();
    rec(0, durations, &matchings, demand, &mut cover, &mut best);
    Ok(best)
}

/// Optimal no-delay online total: the best per-step matchings `O_1..O_T`
/// given full knowledge of the trace.
pub fn optimal_online_no_delay(trace: &Trace) -> Result<(Vec<Matching>, u64)> {
    let (n, m) = trace.dims();
    if trace.horizon() > ONLINE_MAX_STEPS || n > ONLINE_MAX_SIDE || m > ONLINE_MAX_SIDE {
        return Err(Error::BudgetExceeded(format!(
            "online oracle handles T <= {ONLINE_MAX_STEPS} and sides <= {ONLINE_MAX_SIDE}"
        )));
    }
    let steps = trace.edge_sets()?;
    if steps.iter().any(|s| s.total() > ONLINE_MAX_EDGES_PER_STEP) {
        return Err(Error::BudgetExceeded(format!(
            "online oracle handles at most {ONLINE_MAX_EDGES_PER_STEP} unit edges per step"
        )));
    }
    let arrivals: Vec<Vec<u32>> = steps.iter().map(|s| s.counts().to_vec()).collect();

    fn value(
        t: usize,
        pending: &[u32],
        arrivals: &[Vec<u32>],
        dims: (usize, usize),
        memo: &mut HashMap<(usize, Vec<u32>), u64>,
    ) -> u64 {
        if t == arrivals.len() {
            return 0;
        }
        if let Some(v) = memo.get(&(t, pending.to_vec())) {
            return *v;
        }
        let avail: Vec<u32> = pending.iter().zip(&arrivals[t]).map(|(a, b)| a + b).collect();
        let mut best = 0;
        for mm in all_matchings(dims, |s, r| avail[s * dims.1 + r] > 0) {
            let mut next = avail.clone();
            for &(s, r) in mm.edges() {
                next[s * dims.1 + r] -= 1;
            }
            best = best.max(mm.len() as u64 + value(t + 1, &next, arrivals, dims, memo));
        }
        memo.insert((t, pending.to_vec()), best);
        best
    }

    let mut memo = HashMap::new();
    let mut pending = vec![0u32; n * m];
    let total = value(0, &pending, &arrivals, (n, m), &mut memo);
    let mut chosen = Vec::with_capacity(arrivals.len());
    let mut target = total;
    for t in 0..arrivals.len() {
        let avail: Vec<u32> = pending.iter().zip(&arrivals[t]).map(|(a, b)| a + b).collect();
        let mut picked = None;
        for mm in all_matchings((n, m), |s, r| avail[s * m + r] > 0) {
            let mut next = avail.clone();
            for &(s, r) in mm.edges() {
                next[s * m + r] -= 1;
            }
            if mm.len() as u64 + value(t + 1, &next, &arrivals, (n, m), &mut memo) == target {
                target -= mm.len() as u64;
                picked = Some((mm, next));
                break;
            }
        }
        let (mm, next) = picked.ok_or_else(|| Error::InvariantViolation("online oracle reconstruction".into()))?;
        chosen.push(mm);
        pending = next;
    }
    Ok((chosen, total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::evaluate_throughput;
    use crate::rational::int;

    fn inst(rows: &[&[i64]], delta: i128, window: i128) -> Instance {
        Instance::new(DemandMatrix::from_int_rows(rows).unwrap(), int(delta), int(window)).unwrap()
    }

    /// Order-enumerating search over every matching and every duration, no memo.
    fn plain_dfs(demand: &[i64], dims: (usize, usize), delta: i64, time: i64, configs: i64) -> i64 {
        if configs == 0 || time - delta < 1 {
            return 0;
        }
        let mut best = 0;
        for mm in all_matchings(dims, |_, _| true) {
            if mm.is_empty() {
                continue;
            }
            for alpha in 1..=time - delta {
                let mut next = demand.to_vec();
                let mut gain = 0;
                for &(s, r) in mm.edges() {
                    let e = s * dims.1 + r;
                    let sent = next[e].min(alpha);
                    gain += sent;
                    next[e] -= sent;
                }
                best = best.max(gain + plain_dfs(&next, dims, delta, time - alpha - delta, configs - 1));
            }
        }
        best
    }

    #[test]
    fn oracle_examples() {
        let i = inst(&[&[3, 0], &[0, 2]], 1, 5);
        let (s, f) = optimal_schedule_integer(&i, None).unwrap();
        assert_eq!(f, int(5));
        assert!(s.is_feasible());
        assert_eq!(evaluate_throughput(&s, &i.demand).unwrap(), f);

        let tight = inst(&[&[3, 1], &[1, 2]], 2, 2);
        assert_eq!(optimal_schedule_integer(&tight, None).unwrap().1, int(0));

        let free = inst(&[&[2, 1], &[1, 2]], 0, 12);
        assert_eq!(optimal_schedule_integer(&free, None).unwrap().1, int(6));
    }

    #[test]
    fn guards() {
        let big = Instance::new(DemandMatrix::zeros(2, 5), int(1), int(4)).unwrap();
        assert!(matches!(optimal_schedule_integer(&big, None), Err(Error::BudgetExceeded(_))));
        let long = inst(&[&[1]], 1, 13);
        assert!(matches!(optimal_schedule_integer(&long, None), Err(Error::BudgetExceeded(_))));
        let frac = Instance::new(DemandMatrix::from_int_rows(&[[1]]).unwrap(), Rational::new(1, 2), int(4)).unwrap();
        assert!(matches!(optimal_schedule_integer(&frac, None), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn agrees_with_plain_search() {
        let cases: &[(&[&[i64]], i64, i64, Option<usize>)] = &[
            (&[&[3, 1], &[2, 2]], 1, 6, None),
            (&[&[2, 0], &[1, 3]], 1, 7, Some(2)),
            (&[&[1, 2], &[3, 1]], 2, 8, None),
            (&[&[3, 3], &[3, 3]], 0, 5, Some(3)),
            (&[&[2, 1, 0], &[0, 1, 2]], 1, 6, None),
        ];
        for (rows, delta, window, k) in cases {
            let i = inst(rows, *delta as i128, *window as i128);
            let values: Vec<i64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
            let expect = plain_dfs(&values, i.demand.dims(), *delta, *window, k.map_or(i64::MAX, |k| k as i64));
            let (s, f) = optimal_schedule_integer(&i, *k).unwrap();
            assert_eq!(f, int(expect as i128), "{rows:?} delta {delta} window {window}");
            assert_eq!(evaluate_throughput(&s, &i.demand).unwrap(), f);
            assert!(s.is_feasible());
            assert!(k.is_none_or(|k| s.len() <= k));
        }
    }

    #[test]
    fn monotone_in_window_and_configs() {
        let cache = OracleCache::new();
        let d = DemandMatrix::from_int_rows(&[[3, 1, 2], [0, 2, 1], [1, 0, 3]]).unwrap();
        let mut prev_w = int(0);
        for w in 0..=8 {
            let i = Instance::new(d.clone(), int(1), int(w)).unwrap();
            let f = optimal_schedule_integer_with(&i, None, &cache, Execution::Sequential).unwrap().1;
            assert!(f >= prev_w);
            prev_w = f;
            let mut prev_k = int(0);
            for k in 0..=4 {
                let fk = optimal_schedule_integer_with(&i, Some(k), &cache, Execution::Sequential).unwrap().1;
                assert!(fk >= prev_k && fk <= f);
                prev_k = fk;
            }
        }
    }

    #[test]
    fn shared_cache_and_parallel_agree() {
        let i = inst(&[&[3, 1, 2], &[2, 2, 1], &[1, 3, 0]], 1, 8);
        let fresh = optimal_schedule_integer(&i, None).unwrap();
        let cache = OracleCache::new();
        let par = optimal_schedule_integer_with(&i, None, &cache, Execution::Parallel).unwrap();
        let again = optimal_schedule_integer_with(&i, None, &cache, Execution::Sequential).unwrap();
        assert_eq!(fresh, par);
        assert_eq!(fresh, again);
    }

    #[test]
    fn fixed_durations_examples() {
        let d = DemandMatrix::from_int_rows(&[[2, 1], [1, 2]]).unwrap();
        assert_eq!(optimal_fixed_durations(&d, &[int(2)]).unwrap(), int(4));
        assert_eq!(optimal_fixed_durations(&d, &[int(2), int(1)]).unwrap(), int(6));
        assert_eq!(optimal_fixed_durations(&d, &[]).unwrap(), int(0));
    }

    #[test]
    fn online_oracle_examples() {
        let t = Trace::from_edges(2, 2, &[&[(0, 0), (1, 1)], &[]]).unwrap();
        assert_eq!(optimal_online_no_delay(&t).unwrap().1, 2);
        let t = Trace::from_edges(2, 2, &[&[(0, 0)], &[(1, 1)]]).unwrap();
        assert_eq!(optimal_online_no_delay(&t).unwrap().1, 2);
        let t = Trace::from_edges(2, 2, &[&[(0, 0), (0, 1), (1, 0)]]).unwrap();
        assert_eq!(optimal_online_no_delay(&t).unwrap().1, 2);
        let long = Trace::from_edges(1, 1, &[&[], &[], &[], &[], &[]]).unwrap();
        assert!(matches!(optimal_online_no_delay(&long), Err(Error::BudgetExceeded(_))));
    }
}

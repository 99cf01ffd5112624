//! Discrete-time online scheduling.
//!
//! A [`Trace`] reveals one arrival matrix per step. Without switching delay
//! [`online_no_delay`] sends a maximum-cardinality matching of everything
//! pending at every step. With delay, [`online_blocked`] groups steps into
//! blocks of `k delta`: arrivals of block `r` are handed to an offline solver
//! with window `k delta` and the result runs during block `r + 1`, so the run
//! needs one extra block beyond the horizon.

use num_traits::{ToPrimitive, Zero};
use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::greedy::greedy_schedule;
use crate::hybrid::hybrid_schedule;
use crate::matching::{max_cardinality_matching, max_weight_matching, MultiEdgeSet, WeightMatrix};
use crate::model::{evaluate_throughput, residual, DemandMatrix, Instance, Matching, Schedule};
use crate::oracle::optimal_schedule_integer;
use crate::rational::{self, Rational};
use crate::rng::{self, Stream};

/// Arrival matrices `D_1..D_T`, one per step, all of the same shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    senders: usize,
    receivers: usize,
    steps: Vec<DemandMatrix>,
}

impl Trace {
    pub fn new(senders: usize, receivers: usize, steps: Vec<DemandMatrix>) -> Result<Self> {
        for s in &steps {
            s.ensure_same_dims((senders, receivers))?;
        }
        Ok(Self { senders, receivers, steps })
    }

    /// Trace whose step `t` holds one unit on each edge of `steps[t]` (repeats add up).
    pub fn from_edges(senders: usize, receivers: usize, steps: &[&[(usize, usize)]]) -> Result<Self> {
        let mats = steps
            .iter()
            .map(|edges| {
                let mut values = vec![Rational::zero(); senders * receivers];
                for &(s, r) in edges.iter() {
                    if s >= senders || r >= receivers {
                        return Err(Error::InvalidArgument(format!("edge ({s}, {r}) outside {senders}x{receivers}")));
                    }
                    values[s * receivers + r] += Rational::from_integer(1);
                }
                DemandMatrix::new(senders, receivers, values)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(senders, receivers, mats)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.senders, self.receivers)
    }

    /// Number of steps `T`.
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn steps(&self) -> &[DemandMatrix] {
        &self.steps
    }

    pub fn is_integral(&self) -> bool {
        self.steps.iter().all(DemandMatrix::is_integral)
    }

    /// Sum of the arrivals at steps `range` (0-based, clipped to the horizon).
    pub fn aggregate(&self, range: std::ops::Range<usize>) -> DemandMatrix {
        let mut total = DemandMatrix::zeros(self.senders, self.receivers);
        for s in &self.steps[range.start.min(self.steps.len())..range.end.min(self.steps.len())] {
            total = total.add(s).expect("uniform trace dimensions");
        }
        total
    }

    pub fn total(&self) -> DemandMatrix {
        self.aggregate(0..self.steps.len())
    }

    /// Per-step unit-edge multisets; fails on fractional entries.
    pub fn edge_sets(&self) -> Result<Vec<MultiEdgeSet>> {
        self.steps
            .iter()
            .enumerate()
            .map(|(t, d)| {
                let counts = d
                    .values()
                    .iter()
                    .map(|v| {
                        if rational::is_integer(v) {
                            v.to_integer().to_u32().ok_or(Error::Overflow("edge multiplicity"))
                        } else {
                            Err(Error::InvalidArgument(format!(
                                "step {t}: edge multiplicities must be integers, got {}",
                                rational::format_rational(v)
                            )))
                        }
                    })
                    .collect::<Result<Vec<u32>>>()?;
                Ok(MultiEdgeSet::new(self.senders, self.receivers, counts))
            })
            .collect()
    }
}

/// What the switch does during a segment of time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Send(Matching),
    Switch,
    Idle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Segment {
    pub action: Action,
    #[serde(serialize_with = "crate::io::ser_rational")]
    pub length: Rational,
}

/// Timeline and accounting of one online run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OnlineRun {
    pub segments: Vec<Segment>,
    /// Block schedules `S_0..S_{l-1}` (empty for the no-delay algorithm).
    pub blocks: Vec<Schedule>,
    /// Data credited to each block schedule, or to each step without delay.
    pub sent: Vec<Rational>,
    pub total: Rational,
    pub run_length: Rational,
}

impl OnlineRun {
    fn length_of(&self, pred: impl Fn(&Action) -> bool) -> Rational {
        self.segments.iter().filter(|s| pred(&s.action)).map(|s| s.length).sum()
    }

    pub fn send_time(&self) -> Rational {
        self.length_of(|a| matches!(a, Action::Send(_)))
    }

    pub fn switch_time(&self) -> Rational {
        self.length_of(|a| matches!(a, Action::Switch))
    }

    pub fn idle_time(&self) -> Rational {
        self.length_of(|a| matches!(a, Action::Idle))
    }

    /// Sends + switches + idles fill the run, and every change of matching
    /// is preceded by exactly `delta` of switching (none when `delta = 0`).
    pub fn check_accounting(&self, delta: Rational) -> Result<()> {
        let fail = |m: String| Err(Error::InvariantViolation(m));
        if self.send_time() + self.switch_time() + self.idle_time() != self.run_length {
            return fail("segment lengths do not add up to the run length".into());
        }
        if self.segments.iter().any(|s| s.length <= Rational::zero()) {
            return fail("empty or negative segment".into());
        }
        let mut current: Option<&Matching> = None;
        let mut switched = Rational::zero();
        for s in &self.segments {
            match &s.action {
                Action::Switch => switched += s.length,
                Action::Idle => {
                    if !switched.is_zero() {
                        return fail("switching interrupted by idling".into());
                    }
                }
                Action::Send(m) => {
                    let changes = current != Some(m);
                    if !switched.is_zero() && switched != delta {
                        return fail(format!("switch of {} before a send", rational::format_rational(&switched)));
                    }
                    if changes && !delta.is_zero() && switched != delta {
                        return fail("matching changed without a full switching delay".into());
                    }
                    current = Some(m);
                    switched = Rational::zero();
                }
            }
        }
        if !switched.is_zero() {
            return fail("run ends while switching".into());
        }
        Ok(())
    }
}

/// Greedy online algorithm without switching delay: each step sends a
/// maximum-cardinality matching of the pending unit edges.
pub fn online_no_delay(trace: &Trace) -> Result<OnlineRun> {
    let steps = trace.edge_sets()?;
    let (n, m) = trace.dims();
    let mut pending = MultiEdgeSet::empty(n, m);
    let mut segments = Vec::with_capacity(steps.len());
    let mut sent = Vec::with_capacity(steps.len());
    for arrivals in &steps {
        let avail = pending.union(arrivals);
        let matching = max_cardinality_matching(&avail);
        pending = avail.remove_matching(&matching);
        sent.push(rational::int(matching.len() as i128));
        let action = if matching.is_empty() { Action::Idle } else { Action::Send(matching) };
        segments.push(Segment { action, length: rational::int(1) });
    }
    let total = sent.iter().copied().sum();
    Ok(OnlineRun {
        segments,
        blocks: Vec::new(),
        sent,
        total,
        run_length: rational::int(steps.len() as i128),
    })
}

/// Offline solver used by [`online_blocked`] for each block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OfflineSolver {
    Greedy,
    Hybrid { epsilon: Rational },
    /// Exhaustive integer optimum; subject to the oracle's size limits.
    Oracle,
}

impl OfflineSolver {
    pub fn solve(&self, inst: &Instance, seed: u64) -> Result<Schedule> {
        match self {
            OfflineSolver::Greedy => Ok(greedy_schedule(inst)),
            OfflineSolver::Hybrid { epsilon } => hybrid_schedule(inst, *epsilon, seed),
            OfflineSolver::Oracle => Ok(optimal_schedule_integer(inst, None)?.0),
        }
    }
}

/// Blocked online algorithm with switching delay `delta` and block length `k delta`.
///
/// Block `r` aggregates arrivals of steps `r L + 1 ..= (r + 1) L` onto the
/// carried residual, solves offline over window `L`, and runs the schedule
/// during block `r + 1`; arrivals during that execution wait for the next
/// block. A trailing partial block is padded with empty steps. The run lasts
/// `(l + 1) L` with `l = ceil(T / L)` blocks.
pub fn online_blocked(
    trace: &Trace,
    delta: Rational,
    k: usize,
    offline: &OfflineSolver,
    seed: u64,
) -> Result<OnlineRun> {
    if k < 3 {
        return Err(Error::InvalidArgument(format!("block factor k must be at least 3, got {k}")));
    }
    if !rational::is_integer(&delta) || delta < rational::int(1) {
        return Err(Error::InvalidArgument(format!(
            "delta must be an integer >= 1, got {}",
            rational::format_rational(&delta)
        )));
    }
    let block = delta * rational::int(k as i128);
    let len = block.to_integer() as usize;
    let blocks = trace.horizon().div_ceil(len);
    let (n, m) = trace.dims();
    let mut carried = DemandMatrix::zeros(n, m);
    let mut segments = vec![];
    let mut schedules = Vec::with_capacity(blocks);
    let mut sent = Vec::with_capacity(blocks);
    if blocks > 0 {
        segments.push(Segment { action: Action::Idle, length: block });
    }
    for r in 0..blocks {
        let demand = carried.add(&trace.aggregate(r * len..(r + 1) * len))?;
        let inst = Instance::new(demand.clone(), delta, block)?;
        let schedule = offline.solve(&inst, rng::derive_key(seed, Stream::Instance, &[r as u64]))?;
        if !schedule.is_feasible() || schedule.window != block || schedule.delta != delta {
            return Err(Error::Infeasible(format!("offline solver returned an infeasible schedule for block {r}")));
        }
        sent.push(evaluate_throughput(&schedule, &demand)?);
        carried = residual(&demand, &schedule)?;
        for c in &schedule.configs {
            if c.duration.is_zero() || c.matching.is_empty() {
                segments.push(Segment { action: Action::Idle, length: delta + c.duration });
                continue;
            }
            segments.push(Segment { action: Action::Switch, length: delta });
            segments.push(Segment { action: Action::Send(c.matching.clone()), length: c.duration });
        }
        let spare = block - schedule.time_used();
        if spare > Rational::zero() {
            segments.push(Segment { action: Action::Idle, length: spare });
        }
        schedules.push(schedule);
    }
    let total = sent.iter().copied().sum();
    let run_length = if blocks == 0 { Rational::zero() } else { block * rational::int(blocks as i128 + 1) };
    let mut merged: Vec<Segment> = Vec::with_capacity(segments.len());
    for s in segments {
        match merged.last_mut() {
            Some(last) if last.action == Action::Idle && s.action == Action::Idle => last.length += s.length,
            _ => merged.push(s),
        }
    }
    Ok(OnlineRun { segments: merged, blocks: schedules, sent, total, run_length })
}

/// Adversarial trace: `W` steps, empty except the last, which holds one unit
/// on every edge of a uniformly random perfect matching on `n` ports.
pub fn adversarial_trace(n: usize, delta: Rational, window: usize, seed: u64) -> Result<Trace> {
    if n == 0 {
        return Err(Error::InvalidArgument("adversarial trace needs n >= 1".into()));
    }
    if rational::int(window as i128) < delta + rational::int(1) {
        return Err(Error::InvalidArgument(format!(
            "adversarial trace needs W >= delta + 1, got W = {window}, delta = {}",
            rational::format_rational(&delta)
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::stream(seed, Stream::Adversary, &[n as u64, window as u64]));
    Ok(adversarial_trace_for(&perm, window))
}

/// The adversarial trace for a fixed permutation `perm` (sender `i` to `perm[i]`).
pub fn adversarial_trace_for(perm: &[usize], window: usize) -> Trace {
    let n = perm.len();
    let mut steps = vec![DemandMatrix::zeros(n, n); window];
    if let Some(last) = steps.last_mut() {
        let mut values = vec![Rational::zero(); n * n];
        for (s, &r) in perm.iter().enumerate() {
            values[s * n + r] = rational::int(1);
        }
        *last = DemandMatrix::new(n, n, values).expect("permutation matrix");
    }
    Trace { senders: n, receivers: n, steps }
}

/// A deterministic online policy in the unit-step model with integer delay.
///
/// Called once per step that is not already spent switching; returns the
/// matching to hold. A different matching than the current one costs `delta`
/// steps of switching before it sends.
pub trait StepPolicy {
    fn name(&self) -> &'static str;
    fn choose(&mut self, step: usize, pending: &DemandMatrix, current: Option<&Matching>) -> Matching;
}

/// Holds its matching while it still has pending data; otherwise moves to
/// the maximum-weight matching of the pending data. Starts on the identity.
#[derive(Debug, Default)]
pub struct GreedyHold;

impl StepPolicy for GreedyHold {
    fn name(&self) -> &'static str {
        "greedy-hold"
    }

    fn choose(&mut self, _step: usize, pending: &DemandMatrix, current: Option<&Matching>) -> Matching {
        let (n, m) = pending.dims();
        let Some(cur) = current else {
            return Matching::new((0..n.min(m)).map(|i| (i, i)).collect()).expect("identity");
        };
        if cur.edges().iter().any(|&(s, r)| pending.get(s, r) > Rational::zero()) || pending.is_zero() {
            return cur.clone();
        }
        max_weight_matching(&WeightMatrix::from_fn(n, m, |s, r| pending.get(s, r))).0
    }
}

/// Cycles through the cyclic-shift perfect matchings, switching after every
/// sending step.
#[derive(Debug, Default)]
pub struct AlwaysSwitch {
    next: usize,
}

impl StepPolicy for AlwaysSwitch {
    fn name(&self) -> &'static str {
        "always-switch"
    }

    fn choose(&mut self, _step: usize, pending: &DemandMatrix, _current: Option<&Matching>) -> Matching {
        let (n, m) = pending.dims();
        let shift = self.next % m.max(1);
        self.next += 1;
        Matching::new((0..n.min(m)).map(|i| (i, (i + shift) % m)).collect()).expect("cyclic shift")
    }
}

/// Runs `policy` on `trace` for exactly `T` steps with integer delay `delta`
/// (no extension) and returns the data sent.
pub fn run_policy(trace: &Trace, delta: usize, policy: &mut dyn StepPolicy) -> Rational {
    let (n, m) = trace.dims();
    let mut pending = DemandMatrix::zeros(n, m);
    let mut current: Option<Matching> = None;
    let mut switching = 0usize;
    let mut target: Option<Matching> = None;
    let mut sent = Rational::zero();
    for (t, arrivals) in trace.steps().iter().enumerate() {
        pending = pending.add(arrivals).expect("uniform trace dimensions");
        if switching > 0 {
            switching -= 1;
            if switching == 0 {
                current = target.take();
            }
            continue;
        }
        let want = policy.choose(t, &pending, current.as_ref());
        if current.as_ref() != Some(&want) && delta > 0 {
            target = Some(want);
            switching = delta - 1;
            if switching == 0 {
                current = target.take();
            }
            continue;
        }
        current = Some(want);
        let mut values = pending.values().to_vec();
        for &(s, r) in current.as_ref().expect("set above").edges() {
            let v = &mut values[s * m + r];
            let unit = rational::min(*v, rational::int(1));
            *v -= unit;
            sent += unit;
        }
        pending = DemandMatrix::new(n, m, values).expect("nonnegative");
    }
    sent
}

/// Exact expected data sent by a fresh policy from `make` against the
/// adversarial trace, averaging over all `n!` perfect matchings.
pub fn expected_against_adversary(
    n: usize,
    delta: usize,
    window: usize,
    make: impl Fn() -> Box<dyn StepPolicy>,
) -> Rational {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = Rational::zero();
    let mut count = 0i128;
    loop {
        let trace = adversarial_trace_for(&perm, window);
        total += run_policy(&trace, delta, make().as_mut());
        count += 1;
        if !next_permutation(&mut perm) {
            break;
        }
    }
    total / rational::int(count)
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else { return false };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("pivot successor");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn no_delay_examples() {
        let t = Trace::from_edges(2, 2, &[&[(0, 0), (1, 1)], &[]]).unwrap();
        let run = online_no_delay(&t).unwrap();
        assert_eq!(run.sent, vec![int(2), int(0)]);
        assert_eq!(run.total, int(2));
        run.check_accounting(int(0)).unwrap();

        let t = Trace::from_edges(2, 2, &[&[(0, 0)], &[(1, 1)]]).unwrap();
        assert_eq!(online_no_delay(&t).unwrap().total, int(2));

        let frac = Trace::new(1, 1, vec![DemandMatrix::new(1, 1, vec![Rational::new(1, 2)]).unwrap()]).unwrap();
        assert!(online_no_delay(&frac).is_err());
    }

    #[test]
    fn pending_edges_carry_over() {
        let t = Trace::from_edges(1, 2, &[&[(0, 0), (0, 1)], &[], &[]]).unwrap();
        assert_eq!(online_no_delay(&t).unwrap().sent, vec![int(1), int(1), int(0)]);
    }

    #[test]
    fn blocked_examples() {
        let zero = Trace::new(2, 2, vec![DemandMatrix::zeros(2, 2); 6]).unwrap();
        let run = online_blocked(&zero, int(1), 3, &OfflineSolver::Greedy, 0).unwrap();
        assert_eq!(run.total, int(0));
        assert_eq!(run.blocks.len(), 2);
        assert_eq!(run.run_length, int(9));
        run.check_accounting(int(1)).unwrap();

        // A single block hands the whole aggregate to one offline call.
        let d = DemandMatrix::from_int_rows(&[[1, 0], [0, 2]]).unwrap();
        let one = Trace::new(2, 2, vec![d.clone(), DemandMatrix::zeros(2, 2), d.clone()]).unwrap();
        let run = online_blocked(&one, int(1), 3, &OfflineSolver::Oracle, 0).unwrap();
        let agg = Instance::new(one.total(), int(1), int(3)).unwrap();
        assert_eq!(run.total, optimal_schedule_integer(&agg, None).unwrap().1);
        run.check_accounting(int(1)).unwrap();

        assert!(online_blocked(&one, int(1), 2, &OfflineSolver::Greedy, 0).is_err());
        assert!(online_blocked(&one, Rational::new(1, 2), 3, &OfflineSolver::Greedy, 0).is_err());
    }

    #[test]
    fn blocked_pads_the_last_block() {
        let d = DemandMatrix::from_int_rows(&[[1]]).unwrap();
        let t = Trace::new(1, 1, vec![d; 7]).unwrap();
        let run = online_blocked(&t, int(1), 3, &OfflineSolver::Greedy, 0).unwrap();
        assert_eq!(run.blocks.len(), 3);
        assert_eq!(run.run_length, int(12));
        assert_eq!(run.total, int(6));
        run.check_accounting(int(1)).unwrap();
    }

    #[test]
    fn adversarial_trace_shape() {
        let t = adversarial_trace(2, int(1), 2, 5).unwrap();
        assert_eq!(t.horizon(), 2);
        assert!(t.steps()[0].is_zero());
        assert_eq!(t.steps()[1].total(), int(2));
        for s in 0..2 {
            assert_eq!((0..2).map(|r| t.steps()[1].get(s, r)).sum::<Rational>(), int(1));
        }
        assert!(adversarial_trace(2, int(1), 1, 5).is_err());
    }

    #[test]
    fn policies_on_the_adversary() {
        for n in 2..=3 {
            let hold = expected_against_adversary(n, 1, 3, || Box::new(GreedyHold));
            let cycle = expected_against_adversary(n, 1, 3, || Box::<AlwaysSwitch>::default());
            assert!(hold <= int(1) && cycle <= int(1), "n {n}: {hold} {cycle}");
        }
    }

    #[test]
    fn accounting_rejects_missing_switch() {
        let run = OnlineRun {
            segments: vec![Segment { action: Action::Send(Matching::new(vec![(0, 0)]).unwrap()), length: int(2) }],
            blocks: Vec::new(),
            sent: Vec::new(),
            total: int(0),
            run_length: int(2),
        };
        assert!(run.check_accounting(int(1)).is_err());
        assert!(run.check_accounting(int(0)).is_ok());
    }
}

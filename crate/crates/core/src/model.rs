//! Problem model: demand matrices, matchings, configurations and schedules.
//!
//! A schedule is a list of configurations `(M, alpha)`. Its throughput is
//! `sum_e min(D_e, sum_{(M, alpha) : e in M} alpha)`, which depends only on the
//! multiset of configurations. Order matters only where a schedule is truncated.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Nonnegative sender x receiver matrix of data units, stored row-major.
///
/// Also used for residual demand and per-edge capacities.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DemandMatrix {
    senders: usize,
    receivers: usize,
    values: Vec<Rational>,
}

impl DemandMatrix {
    pub fn new(senders: usize, receivers: usize, values: Vec<Rational>) -> Result<Self> {
        if values.len() != senders * receivers {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries for a {senders}x{receivers} matrix, got {}",
                senders * receivers,
                values.len()
            )));
        }
        if let Some((idx, v)) = values.iter().enumerate().find(|(_, v)| !rational::is_nonnegative(v)) {
            return Err(Error::Negative {
                what: format!("demand[{}][{}]", idx / receivers.max(1), idx % receivers.max(1)),
                value: *v,
            });
        }
        Ok(Self { senders, receivers, values })
    }

    pub fn zeros(senders: usize, receivers: usize) -> Self {
        Self { senders, receivers, values: vec![Rational::zero(); senders * receivers] }
    }

    pub fn from_rows(rows: &[Vec<Rational>]) -> Result<Self> {
        let senders = rows.len();
        let receivers = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != receivers) {
            return Err(Error::InvalidArgument(format!(
                "row {bad} has {} entries, expected {receivers}",
                rows[bad].len()
            )));
        }
        Self::new(senders, receivers, rows.concat())
    }

    /// Convenience constructor from integer rows.
    pub fn from_int_rows<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        let rows: Vec<Vec<Rational>> = rows
            .iter()
            .map(|r| r.as_ref().iter().map(|&v| rational::int(v as i128)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn senders(&self) -> usize {
        self.senders
    }

    pub fn receivers(&self) -> usize {
        self.receivers
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.senders, self.receivers)
    }

    pub fn get(&self, sender: usize, receiver: usize) -> Rational {
        self.values[sender * self.receivers + receiver]
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn rows(&self) -> Vec<Vec<Rational>> {
        if self.receivers == 0 {
            return vec![Vec::new(); self.senders];
        }
        self.values.chunks(self.receivers).map(<[Rational]>::to_vec).collect()
    }

    /// Entries with their `(sender, receiver)` coordinates.
    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize), Rational)> + '_ {
        let m = self.receivers;
        self.values.iter().enumerate().map(move |(i, v)| ((i / m, i % m), *v))
    }

    /// `||D||_1`.
    pub fn total(&self) -> Rational {
        self.values.iter().copied().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(Zero::is_zero)
    }

    pub fn is_integral(&self) -> bool {
        self.values.iter().all(rational::is_integer)
    }

    pub fn ensure_same_dims(&self, other: (usize, usize)) -> Result<()> {
        if self.dims() != other {
            return Err(Error::DimensionMismatch { expected: self.dims(), found: other });
        }
        Ok(())
    }

    /// Entrywise sum.
    pub fn add(&self, other: &DemandMatrix) -> Result<DemandMatrix> {
        self.ensure_same_dims(other.dims())?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Self { values, ..*self })
    }

    pub(crate) fn from_values_unchecked(senders: usize, receivers: usize, values: Vec<Rational>) -> Self {
        debug_assert_eq!(values.len(), senders * receivers);
        Self { senders, receivers, values }
    }
}

/// A set of sender-receiver pairs sharing no endpoint, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<(usize, usize)>", into = "Vec<(usize, usize)>")]
pub struct Matching {
    edges: Vec<(usize, usize)>,
}

impl Matching {
    pub fn new(mut edges: Vec<(usize, usize)>) -> Result<Self> {
        edges.sort_unstable();
        for (i, a) in edges.iter().enumerate() {
            for b in &edges[i + 1..] {
                if a.0 == b.0 || a.1 == b.1 {
                    return Err(Error::InvalidMatching(format!("edges {a:?} and {b:?} share an endpoint")));
                }
            }
        }
        Ok(Self { edges })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, sender: usize, receiver: usize) -> bool {
        self.edges.binary_search(&(sender, receiver)).is_ok()
    }

    pub fn check_dims(&self, (senders, receivers): (usize, usize)) -> Result<()> {
        match self.edges.iter().find(|&&(s, r)| s >= senders || r >= receivers) {
            Some(e) => Err(Error::InvalidMatching(format!(
                "edge {e:?} outside a {senders}x{receivers} instance"
            ))),
            None => Ok(()),
        }
    }

    pub(crate) fn from_sorted_unchecked(edges: Vec<(usize, usize)>) -> Self {
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        Self { edges }
    }
}

impl TryFrom<Vec<(usize, usize)>> for Matching {
    type Error = Error;

    fn try_from(edges: Vec<(usize, usize)>) -> Result<Self> {
        Matching::new(edges)
    }
}

impl From<Matching> for Vec<(usize, usize)> {
    fn from(m: Matching) -> Self {
        m.edges
    }
}

/// A matching held for `duration` time units.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub matching: Matching,
    pub duration: Rational,
}

impl Configuration {
    pub fn new(matching: Matching, duration: Rational) -> Result<Self> {
        if !rational::is_nonnegative(&duration) {
            return Err(Error::Negative { what: "duration".into(), value: duration });
        }
        Ok(Self { matching, duration })
    }
}

/// Ordered configurations plus the delay and window they are accounted against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub configs: Vec<Configuration>,
    pub delta: Rational,
    pub window: Rational,
}

impl Schedule {
    pub fn new(configs: Vec<Configuration>, delta: Rational, window: Rational) -> Result<Self> {
        check_time_params(&delta, &window)?;
        Ok(Self { configs, delta, window })
    }

    pub fn empty(delta: Rational, window: Rational) -> Self {
        Self { configs: Vec::new(), delta, window }
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    /// Time spent sending data.
    pub fn data_time(&self) -> Rational {
        self.configs.iter().map(|c| c.duration).sum()
    }

    /// Time spent switching: one delay per configuration.
    pub fn switch_time(&self) -> Rational {
        self.delta * rational::int(self.configs.len() as i128)
    }

    /// `sum (alpha + delta)`.
    pub fn time_used(&self) -> Rational {
        self.data_time() + self.switch_time()
    }

    pub fn is_feasible(&self) -> bool {
        self.time_used() <= self.window
    }
}

/// Demand matrix together with the switching delay and time window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub demand: DemandMatrix,
    pub delta: Rational,
    pub window: Rational,
}

impl Instance {
    pub fn new(demand: DemandMatrix, delta: Rational, window: Rational) -> Result<Self> {
        check_time_params(&delta, &window)?;
        Ok(Self { demand, delta, window })
    }

    pub fn empty_schedule(&self) -> Schedule {
        Schedule::empty(self.delta, self.window)
    }
}

fn check_time_params(delta: &Rational, window: &Rational) -> Result<()> {
    if !rational::is_nonnegative(delta) {
        return Err(Error::Negative { what: "delta".into(), value: *delta });
    }
    if !rational::is_nonnegative(window) {
        return Err(Error::Negative { what: "window".into(), value: *window });
    }
    Ok(())
}

/// Total time each edge is scheduled, row-major.
pub(crate) fn coverage(configs: &[Configuration], dims: (usize, usize)) -> Result<Vec<Rational>> {
    let mut cover = vec![Rational::zero(); dims.0 * dims.1];
    for c in configs {
        c.matching.check_dims(dims)?;
        for &(s, r) in c.matching.edges() {
            cover[s * dims.1 + r] += c.duration;
        }
    }
    Ok(cover)
}

pub(crate) fn throughput_of(configs: &[Configuration], demand: &DemandMatrix) -> Result<Rational> {
    let cover = coverage(configs, demand.dims())?;
    Ok(demand.values().iter().zip(cover).map(|(d, c)| rational::min(*d, c)).sum())
}

/// `f(S) = ||min(D, sum alpha M)||_1`.
pub fn evaluate_throughput(schedule: &Schedule, demand: &DemandMatrix) -> Result<Rational> {
    throughput_of(&schedule.configs, demand)
}

/// `D - min(D, sum alpha M)`, entrywise.
pub fn residual(demand: &DemandMatrix, schedule: &Schedule) -> Result<DemandMatrix> {
    residual_after(demand, &schedule.configs)
}

pub(crate) fn residual_after(demand: &DemandMatrix, configs: &[Configuration]) -> Result<DemandMatrix> {
    let cover = coverage(configs, demand.dims())?;
    let values = demand
        .values()
        .iter()
        .zip(cover)
        .map(|(d, c)| d - rational::min(*d, c))
        .collect();
    Ok(DemandMatrix::from_values_unchecked(demand.senders(), demand.receivers(), values))
}

/// `R - min(R, alpha M)` for a single configuration.
pub(crate) fn subtract_config(residual: &DemandMatrix, config: &Configuration) -> DemandMatrix {
    let m = residual.receivers();
    let mut values = residual.values().to_vec();
    for &(s, r) in config.matching.edges() {
        let v = &mut values[s * m + r];
        *v -= rational::min(*v, config.duration);
    }
    DemandMatrix::from_values_unchecked(residual.senders(), m, values)
}

pub fn is_feasible(schedule: &Schedule) -> bool {
    schedule.is_feasible()
}

/// Shortens a schedule feasible for window `W` so that it fits in `W - delta`
/// while keeping at least `(1 - 2 delta / W)` of its throughput.
///
/// Candidate moves are: cut `delta` from one configuration (dropping it when
/// its duration is at most `delta`) or drop one configuration. The move with
/// the smallest exact loss wins, lowest index first. When the schedule does not
/// fill its window the delta-sized cut can overshoot the ratio; in that case
/// only the time in excess of `W - delta` is cut instead.
pub fn shrink_schedule(schedule: &Schedule, demand: &DemandMatrix) -> Result<Schedule> {
    let delta = schedule.delta;
    let window = schedule.window;
    if delta.is_zero() {
        return Ok(schedule.clone());
    }
    if window <= delta * rational::int(2) {
        return Err(Error::GuaranteeNotApplicable { window, delta });
    }
    if !schedule.is_feasible() {
        return Err(Error::Infeasible(format!(
            "schedule uses {} > window {}",
            rational::format_rational(&schedule.time_used()),
            rational::format_rational(&window)
        )));
    }
    let full = evaluate_throughput(schedule, demand)?;
    if schedule.is_empty() {
        return Ok(schedule.clone());
    }
    let bound = (rational::one() - delta * rational::int(2) / window) * full;

    let by_delta = cheapest_cut(schedule, demand, delta)?;
    if by_delta.1 >= bound {
        return Ok(by_delta.0);
    }
    let excess = schedule.time_used() - (window - delta);
    if excess <= Rational::zero() {
        return Ok(schedule.clone());
    }
    let (shrunk, value) = cheapest_cut(schedule, demand, excess)?;
    if value < bound {
        return Err(Error::InvariantViolation("shrink fell below the (1 - 2 delta / W) bound".into()));
    }
    Ok(shrunk)
}

/// Best schedule obtained by cutting `amount` from one configuration or
/// dropping one configuration, with its throughput.
fn cheapest_cut(schedule: &Schedule, demand: &DemandMatrix, amount: Rational) -> Result<(Schedule, Rational)> {
    let n = schedule.configs.len();
    let mut best: Option<(Vec<Configuration>, Rational)> = None;
    let mut consider = |configs: Vec<Configuration>| -> Result<()> {
        let value = throughput_of(&configs, demand)?;
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((configs, value));
        }
        Ok(())
    };
    for i in 0..n {
        let mut configs = schedule.configs.clone();
        if configs[i].duration > amount {
            configs[i].duration -= amount;
        } else {
            configs.remove(i);
        }
        consider(configs)?;
    }
    for i in 0..n {
        let mut configs = schedule.configs.clone();
        configs.remove(i);
        consider(configs)?;
    }
    let (configs, value) = best.expect("nonempty schedule has candidates");
    Ok((Schedule { configs, ..schedule.clone() }, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn m(edges: &[(usize, usize)]) -> Matching {
        Matching::new(edges.to_vec()).unwrap()
    }

    fn cfg(edges: &[(usize, usize)], alpha: i128) -> Configuration {
        Configuration::new(m(edges), int(alpha)).unwrap()
    }

    fn sched(configs: Vec<Configuration>, delta: i128, window: i128) -> Schedule {
        Schedule::new(configs, int(delta), int(window)).unwrap()
    }

    #[test]
    fn throughput_examples() {
        let d = DemandMatrix::from_int_rows(&[[3, 0], [0, 2]]).unwrap();
        assert_eq!(evaluate_throughput(&sched(vec![], 0, 0), &d).unwrap(), int(0));
        let s = sched(vec![cfg(&[(0, 0), (1, 1)], 2)], 0, 10);
        assert_eq!(evaluate_throughput(&s, &d).unwrap(), int(4));

        let single = DemandMatrix::from_int_rows(&[[5]]).unwrap();
        let s = sched(vec![cfg(&[(0, 0)], 3), cfg(&[(0, 0)], 4)], 0, 10);
        assert_eq!(evaluate_throughput(&s, &single).unwrap(), int(5));
    }

    #[test]
    fn throughput_rejects_out_of_range_matching() {
        let d = DemandMatrix::from_int_rows(&[[1]]).unwrap();
        let s = sched(vec![cfg(&[(0, 1)], 1)], 0, 10);
        assert!(evaluate_throughput(&s, &d).is_err());
    }

    #[test]
    fn residual_examples() {
        let d = DemandMatrix::from_int_rows(&[[3, 0], [0, 2]]).unwrap();
        let s = sched(vec![cfg(&[(0, 0), (1, 1)], 2)], 0, 10);
        assert_eq!(residual(&d, &s).unwrap(), DemandMatrix::from_int_rows(&[[1, 0], [0, 0]]).unwrap());
        assert_eq!(residual(&d, &sched(vec![], 0, 0)).unwrap(), d);
        let s = sched(vec![cfg(&[(0, 0), (1, 1)], 3)], 0, 10);
        assert!(residual(&d, &s).unwrap().is_zero());
    }

    #[test]
    fn feasibility_examples() {
        assert!(sched(vec![], 0, 0).is_feasible());
        assert!(sched(vec![cfg(&[(0, 0)], 2)], 1, 3).is_feasible());
        assert!(!sched(vec![cfg(&[(0, 0)], 2), cfg(&[(0, 0)], 2)], 1, 5).is_feasible());
    }

    #[test]
    fn matching_rejects_shared_endpoints() {
        assert!(Matching::new(vec![(0, 0), (0, 1)]).is_err());
        assert!(Matching::new(vec![(0, 1), (1, 1)]).is_err());
        assert_eq!(m(&[(1, 1), (0, 0)]).edges(), &[(0, 0), (1, 1)]);
    }

    #[test]
    fn negative_values_rejected() {
        assert!(DemandMatrix::from_int_rows(&[[-1]]).is_err());
        assert!(Configuration::new(Matching::empty(), int(-1)).is_err());
        assert!(Schedule::new(vec![], int(-1), int(1)).is_err());
    }

    #[test]
    fn shrink_single_config_cuts_delta() {
        let d = DemandMatrix::from_int_rows(&[[8]]).unwrap();
        let s = sched(vec![cfg(&[(0, 0)], 8)], 1, 10);
        let out = shrink_schedule(&s, &d).unwrap();
        assert_eq!(out.configs, vec![cfg(&[(0, 0)], 7)]);
        assert_eq!(evaluate_throughput(&out, &d).unwrap(), int(7));
        assert!(out.time_used() <= int(9));
    }

    #[test]
    fn shrink_equal_unit_configs_drops_one() {
        // W / (2 delta) = 4 unit configurations, each carrying one unit.
        let d = DemandMatrix::from_int_rows(&[[1, 1], [1, 1]]).unwrap();
        let configs = vec![cfg(&[(0, 0)], 1), cfg(&[(0, 1)], 1), cfg(&[(1, 0)], 1), cfg(&[(1, 1)], 1)];
        let s = sched(configs.clone(), 1, 8);
        let out = shrink_schedule(&s, &d).unwrap();
        assert_eq!(out.configs, configs[1..].to_vec());
        let f = evaluate_throughput(&s, &d).unwrap();
        let loss = f - evaluate_throughput(&out, &d).unwrap();
        assert_eq!(loss, Rational::new(2, 8) * f);
    }

    #[test]
    fn shrink_zero_delta_is_identity() {
        let d = DemandMatrix::from_int_rows(&[[8]]).unwrap();
        let s = sched(vec![cfg(&[(0, 0)], 8)], 0, 8);
        assert_eq!(shrink_schedule(&s, &d).unwrap(), s);
    }

    #[test]
    fn shrink_guard_on_small_window() {
        let d = DemandMatrix::from_int_rows(&[[8]]).unwrap();
        let s = sched(vec![cfg(&[(0, 0)], 1)], 1, 2);
        assert!(matches!(shrink_schedule(&s, &d), Err(Error::GuaranteeNotApplicable { .. })));
    }

    #[test]
    fn shrink_partial_window_uses_excess_cut() {
        // Two disjoint configs of 6/5 fill 22/5 of a window of 5; cutting a
        // full delta would lose too much, cutting the 2/5 excess does not.
        let d = DemandMatrix::new(1, 2, vec![Rational::new(6, 5), Rational::new(6, 5)]).unwrap();
        let configs = vec![
            Configuration::new(m(&[(0, 0)]), Rational::new(6, 5)).unwrap(),
            Configuration::new(m(&[(0, 1)]), Rational::new(6, 5)).unwrap(),
        ];
        let s = sched(configs, 1, 5);
        let out = shrink_schedule(&s, &d).unwrap();
        assert!(out.time_used() <= int(4));
        let f = evaluate_throughput(&s, &d).unwrap();
        assert!(evaluate_throughput(&out, &d).unwrap() >= (rational::one() - Rational::new(2, 5)) * f);
    }
}

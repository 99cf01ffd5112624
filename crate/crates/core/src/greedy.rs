//! Greedy scheduling by data-per-unit-time.
//!
//! Each step picks the configuration maximizing `||min(R, alpha M)||_1 / (alpha + delta)`.
//! For a fixed `alpha` the best matching is a maximum-weight matching under
//! weights `min(R_e, alpha)`. Over `alpha`, every matching's sent data is
//! piecewise linear with breakpoints at entries of `R`, and a linear-over-affine
//! ratio is monotone between breakpoints, so only the distinct positive
//! entries of `R` need to be tried.

use num_traits::Zero;

use crate::matching::{max_weight_matching, WeightMatrix};
use crate::model::{subtract_config, Configuration, DemandMatrix, Instance, Matching, Schedule};
use crate::par::{self, Execution};
use crate::rational::{self, Rational};

/// A greedy pick: matching, duration and the data-per-time ratio it achieves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pick {
    pub matching: Matching,
    pub alpha: Rational,
    pub ratio: Rational,
    /// `||min(R, alpha M)||_1` against the residual it was picked from.
    pub gain: Rational,
}

/// Distinct positive entries of `residual`, ascending.
pub fn breakpoints(residual: &DemandMatrix) -> Vec<Rational> {
    let mut values: Vec<Rational> = residual.values().iter().copied().filter(|v| *v > Rational::zero()).collect();
    values.sort_unstable();
    values.dedup();
    values
}

fn evaluate_candidate(residual: &DemandMatrix, delta: Rational, alpha: Rational) -> Pick {
    let (n, m) = residual.dims();
    let weights = WeightMatrix::from_fn(n, m, |s, r| rational::min(residual.get(s, r), alpha));
    let (matching, gain) = max_weight_matching(&weights);
    Pick { matching, alpha, ratio: gain / (alpha + delta), gain }
}

/// The configuration maximizing data sent per unit of time (including `delta`).
///
/// Returns `None` when the residual is all zero. Equal ratios resolve to the
/// smallest `alpha`.
pub fn best_configuration(residual: &DemandMatrix, delta: Rational) -> Option<Pick> {
    best_configuration_with(residual, delta, Execution::Sequential)
}

pub fn best_configuration_with(residual: &DemandMatrix, delta: Rational, exec: Execution) -> Option<Pick> {
    let candidates = breakpoints(residual);
    let picks = par::map(exec, &candidates, |alpha| evaluate_candidate(residual, delta, *alpha));
    let mut best: Option<Pick> = None;
    for pick in picks {
        if best.as_ref().is_none_or(|b| pick.ratio > b.ratio) {
            best = Some(pick);
        }
    }
    best
}

/// Greedy picks in order until `budget` time is met or exceeded, the residual
/// empties, or no positive gain remains. The last pick may overshoot `budget`.
pub fn greedy_picks(demand: &DemandMatrix, delta: Rational, budget: Rational) -> Vec<Pick> {
    let mut residual = demand.clone();
    let mut picks = Vec::new();
    let mut used = Rational::zero();
    while used <= budget && !residual.is_zero() {
        let Some(pick) = best_configuration(&residual, delta) else { break };
        if pick.gain.is_zero() {
            break;
        }
        used += pick.alpha + delta;
        residual = subtract_config(
            &residual,
            &Configuration { matching: pick.matching.clone(), duration: pick.alpha },
        );
        picks.push(pick);
    }
    picks
}

/// Cuts a pick sequence to window `window`: configurations are kept while
/// they fit, the first one overshooting is shortened to the remaining time
/// minus `delta`, or dropped when nothing positive is left.
pub fn truncate_picks(picks: &[Pick], delta: Rational, window: Rational) -> Schedule {
    let mut configs = Vec::new();
    let mut used = Rational::zero();
    for pick in picks {
        if used + pick.alpha + delta <= window {
            used += pick.alpha + delta;
            configs.push(Configuration { matching: pick.matching.clone(), duration: pick.alpha });
            continue;
        }
        let beta = window - delta - used;
        if beta > Rational::zero() {
            configs.push(Configuration { matching: pick.matching.clone(), duration: beta });
        }
        break;
    }
    Schedule { configs, delta, window }
}

/// Greedy schedule with final truncation; always feasible.
pub fn greedy_schedule(inst: &Instance) -> Schedule {
    let picks = greedy_picks(&inst.demand, inst.delta, inst.window);
    truncate_picks(&picks, inst.delta, inst.window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::evaluate_throughput;
    use crate::rational::int;

    fn inst(rows: &[&[i64]], delta: i128, window: i128) -> Instance {
        Instance::new(DemandMatrix::from_int_rows(rows).unwrap(), int(delta), int(window)).unwrap()
    }

    #[test]
    fn best_configuration_examples() {
        let r = DemandMatrix::from_int_rows(&[[3, 0], [0, 2]]).unwrap();
        let p = best_configuration(&r, int(1)).unwrap();
        assert_eq!(p.matching.edges(), &[(0, 0), (1, 1)]);
        assert_eq!(p.alpha, int(2));
        assert_eq!(p.ratio, Rational::new(4, 3));

        assert!(best_configuration(&DemandMatrix::zeros(2, 2), int(1)).is_none());

        let r = DemandMatrix::from_int_rows(&[[4]]).unwrap();
        let p = best_configuration(&r, int(1)).unwrap();
        assert_eq!((p.alpha, p.ratio), (int(4), Rational::new(4, 5)));
    }

    #[test]
    fn zero_delay_prefers_smallest_alpha_on_ties() {
        let r = DemandMatrix::from_int_rows(&[[3, 0], [0, 2]]).unwrap();
        let p = best_configuration(&r, int(0)).unwrap();
        assert_eq!(p.alpha, int(2));
        assert_eq!(p.ratio, int(2));
    }

    #[test]
    fn greedy_examples() {
        let i = inst(&[&[3, 0], &[0, 2]], 1, 5);
        let s = greedy_schedule(&i);
        assert_eq!(s.configs.len(), 2);
        assert_eq!(s.configs[0].matching.edges(), &[(0, 0), (1, 1)]);
        assert_eq!(s.configs[0].duration, int(2));
        assert_eq!(s.configs[1].matching.edges(), &[(0, 0)]);
        assert_eq!(s.configs[1].duration, int(1));
        assert_eq!(evaluate_throughput(&s, &i.demand).unwrap(), int(5));
        assert_eq!(s.time_used(), int(5));

        assert!(greedy_schedule(&inst(&[&[0, 0], &[0, 0]], 1, 5)).is_empty());

        let i = inst(&[&[10]], 1, 3);
        let s = greedy_schedule(&i);
        assert_eq!(s.configs.len(), 1);
        assert_eq!(s.configs[0].duration, int(2));
        assert_eq!(evaluate_throughput(&s, &i.demand).unwrap(), int(2));
    }

    #[test]
    fn drops_last_pick_when_nothing_fits() {
        let i = inst(&[&[10]], 3, 3);
        assert!(greedy_schedule(&i).is_empty());
    }

    #[test]
    fn parallel_candidates_agree() {
        let r = DemandMatrix::from_int_rows(&[[3, 1, 2], [2, 5, 1], [4, 1, 1]]).unwrap();
        assert_eq!(
            best_configuration_with(&r, int(1), Execution::Sequential),
            best_configuration_with(&r, int(1), Execution::Parallel)
        );
    }
}

//! Dispatch between greedy and LP rounding by the delay/window ratio.
//!
//! Greedy loses a `2 delta / W` fraction to its final truncation, so it is
//! used when `delta <= c eps W` with `c = e / (2(e-1))`. Otherwise fewer than
//! `1 / (c eps)` configurations fit in the window and the LP over duration
//! profiles with that many slots is tractable.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::greedy::greedy_schedule;
use crate::lp::{lp_schedule_detailed, LpOutcome};
use crate::model::{Instance, Schedule};
use crate::par::Execution;
use crate::rational::{self, Rational};

/// Which algorithm [`hybrid_schedule`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Greedy,
    /// LP rounding with at most `k` configurations.
    Lp { k: usize },
}

/// `eps` must lie strictly between 0 and `1 - 1/e`.
pub fn check_epsilon(epsilon: Rational) -> Result<()> {
    if epsilon <= Rational::zero() || epsilon >= rational::one_minus_inv_e_lower() {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, 1 - 1/e), got {}",
            rational::format_rational(&epsilon)
        )));
    }
    Ok(())
}

/// Branch taken for `inst` at accuracy `epsilon`.
pub fn branch(inst: &Instance, epsilon: Rational) -> Result<Branch> {
    check_epsilon(epsilon)?;
    let c = rational::hybrid_threshold_constant();
    if inst.delta <= c * epsilon * inst.window {
        return Ok(Branch::Greedy);
    }
    let fit = rational::floor_int(&(inst.window / inst.delta)) as usize;
    let cap = rational::floor_int(&(Rational::from_integer(1) / (c * epsilon))) as usize + 1;
    Ok(Branch::Lp { k: fit.min(cap) })
}

/// Feasible schedule aiming at `(1 - 1/e - eps)` of the optimum.
pub fn hybrid_schedule(inst: &Instance, epsilon: Rational, seed: u64) -> Result<Schedule> {
    Ok(hybrid_schedule_detailed(inst, epsilon, seed, Execution::Sequential)?.0)
}

/// Like [`hybrid_schedule`], also returning the branch and the LP report when used.
pub fn hybrid_schedule_detailed(
    inst: &Instance,
    epsilon: Rational,
    seed: u64,
    exec: Execution,
) -> Result<(Schedule, Branch, Option<LpOutcome>)> {
    let b = branch(inst, epsilon)?;
    if inst.window.is_zero() {
        return Ok((inst.empty_schedule(), b, None));
    }
    match b {
        Branch::Greedy => Ok((greedy_schedule(inst), b, None)),
        Branch::Lp { k: 0 } => Ok((inst.empty_schedule(), b, None)),
        Branch::Lp { k } => {
            let out = lp_schedule_detailed(inst, k, epsilon, seed, exec)?;
            Ok((out.schedule.clone(), b, Some(out)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{evaluate_throughput, DemandMatrix};
    use crate::rational::int;

    fn inst(delta: Rational, window: Rational) -> Instance {
        Instance::new(DemandMatrix::from_int_rows(&[[3, 1], [1, 2]]).unwrap(), delta, window).unwrap()
    }

    #[test]
    fn branch_examples() {
        let tenth = Rational::new(1, 10);
        assert_eq!(branch(&inst(int(0), int(4)), tenth).unwrap(), Branch::Greedy);
        assert_eq!(branch(&inst(int(2), int(4)), tenth).unwrap(), Branch::Lp { k: 2 });
        let c = rational::hybrid_threshold_constant();
        let w = int(10);
        let at = inst(c * tenth * w, w);
        assert_eq!(branch(&at, tenth).unwrap(), Branch::Greedy);
        let above = inst(c * tenth * w + Rational::new(1, 1_000_000), w);
        assert!(matches!(branch(&above, tenth).unwrap(), Branch::Lp { .. }));
    }

    #[test]
    fn lp_branch_never_exceeds_the_slot_cap() {
        let c = rational::hybrid_threshold_constant();
        for eps in [Rational::new(1, 10), Rational::new(1, 5), Rational::new(1, 2)] {
            let cap = rational::floor_int(&(int(1) / (c * eps))) as usize + 1;
            for d in 1..=6 {
                for w in 0..=60 {
                    if let Branch::Lp { k } = branch(&inst(int(d), int(w)), eps).unwrap() {
                        assert!(k <= cap && k as i128 * d <= w, "eps {eps} delta {d} window {w}");
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_epsilon_outside_range() {
        assert!(branch(&inst(int(1), int(4)), int(0)).is_err());
        assert!(branch(&inst(int(1), int(4)), Rational::new(2, 3)).is_err());
    }

    #[test]
    fn outputs_are_feasible() {
        let eps = Rational::new(1, 5);
        for (d, w) in [(0, 0), (0, 3), (1, 3), (2, 5), (1, 20), (5, 3)] {
            let i = inst(int(d), int(w));
            let s = hybrid_schedule(&i, eps, 3).unwrap();
            assert!(s.is_feasible(), "delta {d} window {w}");
            assert!(evaluate_throughput(&s, &i.demand).unwrap() <= i.demand.total());
        }
    }
}

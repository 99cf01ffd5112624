//! Deterministic instance and trace generators.
//!
//! Random draws come from [`rng::stream`] keyed by the user seed and the item
//! index, so item `i` is the same no matter how many items are drawn or in
//! which order.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Configuration, DemandMatrix, Instance, Matching, Schedule};
use crate::online::Trace;
use crate::rational::{self, Rational};
use crate::rng::{self, Stream};

/// Shape of random integer demand matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixShape {
    pub senders: usize,
    pub receivers: usize,
    /// Entries are drawn uniformly from `1..=max_demand` when present.
    pub max_demand: u32,
    /// Probability (as `num / den`) that an entry is present.
    pub density: (u32, u32),
}

impl MatrixShape {
    pub fn dense(senders: usize, receivers: usize, max_demand: u32) -> Self {
        Self { senders, receivers, max_demand, density: (1, 1) }
    }

    fn draw(&self, rng: &mut impl Rng) -> DemandMatrix {
        let values = (0..self.senders * self.receivers)
            .map(|_| {
                let present = self.density.1 > 0 && rng.gen_range(0..self.density.1) < self.density.0;
                if present && self.max_demand > 0 {
                    rational::int(rng.gen_range(1..=self.max_demand) as i128)
                } else {
                    Rational::from_integer(0)
                }
            })
            .collect();
        DemandMatrix::new(self.senders, self.receivers, values).expect("nonnegative entries")
    }
}

/// Item `index` of a random matrix stream.
pub fn random_matrix(shape: &MatrixShape, seed: u64, index: u64) -> DemandMatrix {
    shape.draw(&mut rng::stream(seed, Stream::Generator, &[index]))
}

pub fn random_instance(shape: &MatrixShape, delta: Rational, window: Rational, seed: u64, index: u64) -> Result<Instance> {
    Instance::new(random_matrix(shape, seed, index), delta, window)
}

/// Random trace of `horizon` steps; each step is empty with probability
/// `1 - busy.0 / busy.1`, otherwise drawn from `shape`.
pub fn random_trace(shape: &MatrixShape, horizon: usize, busy: (u32, u32), seed: u64, index: u64) -> Trace {
    let mut rng = rng::stream(seed, Stream::Generator, &[index, horizon as u64]);
    let steps = (0..horizon)
        .map(|_| {
            if rng.gen_range(0..busy.1.max(1)) < busy.0 {
                shape.draw(&mut rng)
            } else {
                DemandMatrix::zeros(shape.senders, shape.receivers)
            }
        })
        .collect();
    Trace::new(shape.senders, shape.receivers, steps).expect("uniform shape")
}

/// Random schedule of up to `max_configs` configurations with durations in
/// `1/den` steps up to `max_duration`; feasibility is not enforced.
pub fn random_schedule(
    dims: (usize, usize),
    max_configs: usize,
    max_duration: u32,
    den: u32,
    delta: Rational,
    window: Rational,
    seed: u64,
    index: u64,
) -> Schedule {
    let mut rng = rng::stream(seed, Stream::Generator, &[index, 0x5c4e]);
    let count = rng.gen_range(0..=max_configs);
    let configs = (0..count)
        .map(|_| {
            let matching = random_matching(dims, &mut rng);
            let duration = Rational::new(rng.gen_range(1..=max_duration * den) as i128, den as i128);
            Configuration { matching, duration }
        })
        .collect();
    Schedule { configs, delta, window }
}

/// Random matching: a uniform permutation, thinned by keeping each edge
/// with a per-call probability of 1/2, 3/4 or 1.
pub fn random_matching(dims: (usize, usize), rng: &mut impl Rng) -> Matching {
    use rand::seq::SliceRandom;
    let (n, m) = dims;
    let mut receivers: Vec<usize> = (0..m).collect();
    receivers.shuffle(rng);
    let keep = rng.gen_range(2..=4u32);
    let edges = (0..n.min(m)).filter(|_| rng.gen_range(0..4) < keep).map(|s| (s, receivers[s])).collect();
    Matching::new(edges).expect("distinct endpoints")
}

/// Every `n x m` integer matrix with entries in `0..=max`, in lexicographic
/// order of the row-major entries.
pub fn exhaustive_matrices(n: usize, m: usize, max: u32) -> Result<impl Iterator<Item = DemandMatrix>> {
    let cells = n * m;
    let base = max as u64 + 1;
    let total = base.checked_pow(cells as u32).filter(|t| *t <= 50_000_000).ok_or_else(|| {
        Error::BudgetExceeded(format!("{n}x{m} matrices with entries <= {max} exceed the enumeration limit"))
    })?;
    Ok((0..total).map(move |mut code| {
        let mut values = vec![Rational::from_integer(0); cells];
        for v in values.iter_mut().rev() {
            *v = rational::int((code % base) as i128);
            code /= base;
        }
        DemandMatrix::new(n, m, values).expect("nonnegative entries")
    }))
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(k: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in 0..k {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(k, cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(k, &mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

/// Lexicographically smallest row-major form over all row and column permutations.
pub fn canonical_form(d: &DemandMatrix) -> DemandMatrix {
    let (n, m) = d.dims();
    let rows = permutations(n);
    let cols = permutations(m);
    let mut best: Option<Vec<Rational>> = None;
    for rp in &rows {
        for cp in &cols {
            let v: Vec<Rational> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| d.get(rp[i], cp[j])).collect();
            if best.as_ref().is_none_or(|b| v < *b) {
                best = Some(v);
            }
        }
    }
    DemandMatrix::new(n, m, best.unwrap_or_default()).expect("permuted entries")
}

/// One representative per row/column-permutation class of
/// [`exhaustive_matrices`], with the size of its class.
pub fn canonical_matrices(n: usize, m: usize, max: u32) -> Result<Vec<(DemandMatrix, usize)>> {
    let mut classes: std::collections::BTreeMap<Vec<Rational>, (DemandMatrix, usize)> = Default::default();
    for d in exhaustive_matrices(n, m, max)? {
        let c = canonical_form(&d);
        classes.entry(c.values().to_vec()).or_insert_with(|| (c, 0)).1 += 1;
    }
    Ok(classes.into_values().collect())
}

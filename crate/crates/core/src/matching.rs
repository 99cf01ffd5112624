//! Exact bipartite matching kernels.
//!
//! Maximum-weight matching runs the Hungarian method on a padded square
//! matrix. Ties between optimal matchings are broken towards the
//! lexicographically smallest sorted edge list, which is encoded as a
//! secondary weight component `2^(E - 1 - rank(e))` so that one Hungarian run
//! returns the canonical optimum. Zero-weight edges never appear in the output.

use std::ops::{Add, Neg, Sub};

use num_integer::Integer;
use num_traits::Zero;

use crate::model::Matching;
use crate::rational::Rational;

/// Nonnegative edge weights, row-major over `senders x receivers`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightMatrix {
    senders: usize,
    receivers: usize,
    weights: Vec<Rational>,
}

impl WeightMatrix {
    /// Negative entries are clamped to zero; they can never improve a matching.
    pub fn new(senders: usize, receivers: usize, weights: Vec<Rational>) -> Self {
        assert_eq!(weights.len(), senders * receivers, "weight matrix size");
        let weights = weights.into_iter().map(|w| if w < Rational::zero() { Rational::zero() } else { w }).collect();
        Self { senders, receivers, weights }
    }

    pub fn from_fn(senders: usize, receivers: usize, mut f: impl FnMut(usize, usize) -> Rational) -> Self {
        let mut weights = Vec::with_capacity(senders * receivers);
        for s in 0..senders {
            for r in 0..receivers {
                weights.push(f(s, r));
            }
        }
        Self::new(senders, receivers, weights)
    }

    pub fn get(&self, sender: usize, receiver: usize) -> Rational {
        self.weights[sender * self.receivers + receiver]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.senders, self.receivers)
    }
}

/// Multiplicities of parallel unit edges, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiEdgeSet {
    senders: usize,
    receivers: usize,
    counts: Vec<u32>,
}

impl MultiEdgeSet {
    pub fn new(senders: usize, receivers: usize, counts: Vec<u32>) -> Self {
        assert_eq!(counts.len(), senders * receivers, "multiplicity matrix size");
        Self { senders, receivers, counts }
    }

    pub fn empty(senders: usize, receivers: usize) -> Self {
        Self::new(senders, receivers, vec![0; senders * receivers])
    }

    pub fn from_edges(senders: usize, receivers: usize, edges: &[(usize, usize)]) -> Self {
        let mut set = Self::empty(senders, receivers);
        for &(s, r) in edges {
            set.counts[s * receivers + r] += 1;
        }
        set
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.senders, self.receivers)
    }

    pub fn count(&self, sender: usize, receiver: usize) -> u32 {
        self.counts[sender * self.receivers + receiver]
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// Multiset union (multiplicities add).
    pub fn union(&self, other: &MultiEdgeSet) -> MultiEdgeSet {
        assert_eq!(self.dims(), other.dims());
        let counts = self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect();
        Self { counts, ..*self }
    }

    /// Removes one copy of every edge of `m`; edges must be present.
    pub fn remove_matching(&self, m: &Matching) -> MultiEdgeSet {
        let mut out = self.clone();
        for &(s, r) in m.edges() {
            let c = &mut out.counts[s * self.receivers + r];
            assert!(*c > 0, "edge ({s}, {r}) not present");
            *c -= 1;
        }
        out
    }
}

/// Additive ordered group the Hungarian kernel works over.
trait Weight: Copy + Ord + Add<Output = Self> + Sub<Output = Self> + Neg<Output = Self> {
    fn zero() -> Self;
}

/// Primary weight with a lexicographic tie-break component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Keyed<T> {
    primary: T,
    tie: i128,
}

impl<T: Add<Output = T>> Add for Keyed<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Keyed { primary: self.primary + o.primary, tie: self.tie + o.tie }
    }
}

impl<T: Sub<Output = T>> Sub for Keyed<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Keyed { primary: self.primary - o.primary, tie: self.tie - o.tie }
    }
}

impl<T: Neg<Output = T>> Neg for Keyed<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Keyed { primary: -self.primary, tie: -self.tie }
    }
}

impl Weight for Keyed<i128> {
    fn zero() -> Self {
        Keyed { primary: 0, tie: 0 }
    }
}

impl Weight for Keyed<Rational> {
    fn zero() -> Self {
        Keyed { primary: Rational::zero(), tie: 0 }
    }
}

/// Maximum-weight assignment on a square matrix; returns `row -> column`.
fn hungarian_max<W: Weight>(n: usize, weight: impl Fn(usize, usize) -> W) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    // Minimize the negated weights; potentials are 1-indexed with a dummy 0.
    let cost = |i: usize, j: usize| -weight(i, j);
    let mut u = vec![W::zero(); n + 1];
    let mut v = vec![W::zero(); n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv: Vec<Option<W>> = vec![None; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta: Option<W> = None;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if minv[j].is_none_or(|m| cur < m) {
                    minv[j] = Some(cur);
                    way[j] = j0;
                }
                let mj = minv[j].expect("set above");
                if delta.is_none_or(|d| mj < d) {
                    delta = Some(mj);
                    j1 = j;
                }
            }
            let delta = delta.expect("an unused column remains");
            for j in 0..=n {
                if used[j] {
                    u[p[j]] = u[p[j]] + delta;
                    v[j] = v[j] - delta;
                } else if let Some(m) = minv[j] {
                    minv[j] = Some(m - delta);
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Largest edge count for which the tie-break bonus fits in an `i128`.
const MAX_TIE_EDGES: usize = 120;

fn tie_bonus(rank: usize, edges: usize) -> i128 {
    1i128 << (edges - 1 - rank)
}

/// Common denominator of all weights, if it fits comfortably.
fn integer_scale(w: &WeightMatrix) -> Option<i128> {
    let mut lcm: i128 = 1;
    for x in &w.weights {
        lcm = lcm.lcm(x.denom());
        if lcm > (1i128 << 60) {
            return None;
        }
    }
    let bound = (i128::MAX >> 8) / (w.weights.len().max(1) as i128 + 1);
    for x in &w.weights {
        let scaled = x.numer().checked_mul(lcm / x.denom())?;
        if scaled > bound {
            return None;
        }
    }
    Some(lcm)
}

fn solve_keyed(w: &WeightMatrix, with_ties: bool, allowed: &dyn Fn(usize, usize) -> bool) -> Vec<(usize, usize)> {
    let (n, m) = w.dims();
    let size = n.max(m);
    let edges = n * m;
    let tie = |s: usize, r: usize| {
        if with_ties {
            tie_bonus(s * m + r, edges)
        } else {
            0
        }
    };
    let live = |s: usize, r: usize| s < n && r < m && allowed(s, r) && w.get(s, r) > Rational::zero();
    let assignment = match integer_scale(w) {
        Some(scale) => hungarian_max(size, |s, r| {
            if live(s, r) {
                let x = w.get(s, r);
                Keyed { primary: x.numer() * (scale / x.denom()), tie: tie(s, r) }
            } else {
                Keyed::<i128>::zero()
            }
        }),
        None => hungarian_max(size, |s, r| {
            if live(s, r) {
                Keyed { primary: w.get(s, r), tie: tie(s, r) }
            } else {
                Keyed::<Rational>::zero()
            }
        }),
    };
    assignment
        .iter()
        .enumerate()
        .filter(|&(s, &r)| live(s, r))
        .map(|(s, &r)| (s, r))
        .collect()
}

fn weight_of(w: &WeightMatrix, edges: &[(usize, usize)]) -> Rational {
    edges.iter().map(|&(s, r)| w.get(s, r)).sum()
}

/// Lexicographically smallest optimum by fixing edges one at a time.
fn lex_fixing(w: &WeightMatrix) -> Vec<(usize, usize)> {
    let (n, m) = w.dims();
    let target = weight_of(w, &solve_keyed(w, false, &|_, _| true));
    let mut chosen: Vec<(usize, usize)> = Vec::new();
    let mut acc = Rational::zero();
    let mut used_r = vec![false; m];
    let mut next_sender = 0;
    while acc < target {
        let mut fixed = false;
        'outer: for s in next_sender..n {
            for r in 0..m {
                if used_r[r] || w.get(s, r) <= Rational::zero() {
                    continue;
                }
                let rest = solve_keyed(w, false, &|s2, r2| s2 > s && r2 != r && !used_r[r2]);
                if acc + w.get(s, r) + weight_of(w, &rest) == target {
                    chosen.push((s, r));
                    acc += w.get(s, r);
                    used_r[r] = true;
                    next_sender = s + 1;
                    fixed = true;
                    break 'outer;
                }
            }
        }
        assert!(fixed, "optimum must be reachable");
    }
    chosen
}

/// Maximum-weight matching and its exact weight.
///
/// Among optimal matchings the lexicographically smallest sorted edge list is
/// returned. Edges of weight zero are excluded.
pub fn max_weight_matching(w: &WeightMatrix) -> (Matching, Rational) {
    let (n, m) = w.dims();
    let edges = if n * m <= MAX_TIE_EDGES {
        solve_keyed(w, true, &|_, _| true)
    } else {
        lex_fixing(w)
    };
    let mut edges = edges;
    edges.sort_unstable();
    let total = weight_of(w, &edges);
    (Matching::from_sorted_unchecked(edges), total)
}

/// Size of a maximum matching by augmenting paths, restricted to senders
/// `>= from_sender` and receivers not in `blocked`.
fn augmenting_size(edges: &MultiEdgeSet, from_sender: usize, blocked: &[bool]) -> usize {
    let (n, m) = edges.dims();
    let mut owner: Vec<Option<usize>> = vec![None; m];
    fn augment(
        s: usize,
        edges: &MultiEdgeSet,
        blocked: &[bool],
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for r in 0..edges.receivers {
            if blocked[r] || seen[r] || edges.count(s, r) == 0 {
                continue;
            }
            seen[r] = true;
            if owner[r].is_none_or(|o| augment(o, edges, blocked, seen, owner)) {
                owner[r] = Some(s);
                return true;
            }
        }
        false
    }
    let mut size = 0;
    for s in from_sender..n {
        let mut seen = vec![false; m];
        if augment(s, edges, blocked, &mut seen, &mut owner) {
            size += 1;
        }
    }
    size
}

/// Maximum-cardinality matching over edges with multiplicity at least one.
///
/// Returns the lexicographically smallest maximum matching.
pub fn max_cardinality_matching(edges: &MultiEdgeSet) -> Matching {
    let (n, m) = edges.dims();
    let mut blocked = vec![false; m];
    let target = augmenting_size(edges, 0, &blocked);
    let mut chosen = Vec::with_capacity(target);
    for s in 0..n {
        if chosen.len() == target {
            break;
        }
        for r in 0..m {
            if blocked[r] || edges.count(s, r) == 0 {
                continue;
            }
            blocked[r] = true;
            if chosen.len() + 1 + augmenting_size(edges, s + 1, &blocked) == target {
                chosen.push((s, r));
                break;
            }
            blocked[r] = false;
        }
    }
    Matching::from_sorted_unchecked(chosen)
}

/// Every matching (including the empty one) using only edges where `allowed` holds.
pub fn all_matchings(dims: (usize, usize), allowed: impl Fn(usize, usize) -> bool) -> Vec<Matching> {
    let (n, m) = dims;
    let mut out = Vec::new();
    let mut current = Vec::new();
    let mut used = vec![false; m];
    fn rec(
        s: usize,
        n: usize,
        m: usize,
        allowed: &dyn Fn(usize, usize) -> bool,
        used: &mut [bool],
        current: &mut Vec<(usize, usize)>,
        out: &mut Vec<Matching>,
    ) {
        if s == n {
            out.push(Matching::from_sorted_unchecked(current.clone()));
            return;
        }
        rec(s + 1, n, m, allowed, used, current, out);
        for r in 0..m {
            if !used[r] && allowed(s, r) {
                used[r] = true;
                current.push((s, r));
                rec(s + 1, n, m, allowed, used, current, out);
                current.pop();
                used[r] = false;
            }
        }
    }
    rec(0, n, m, &allowed, &mut used, &mut current, &mut out);
    out.sort();
    out
}

/// Matchings that are maximal under inclusion among the allowed edges.
pub fn maximal_matchings(dims: (usize, usize), allowed: impl Fn(usize, usize) -> bool) -> Vec<Matching> {
    let (n, m) = dims;
    all_matchings(dims, &allowed)
        .into_iter()
        .filter(|mm| {
            let mut s_used = vec![false; n];
            let mut r_used = vec![false; m];
            for &(s, r) in mm.edges() {
                s_used[s] = true;
                r_used[r] = true;
            }
            !(0..n).any(|s| !s_used[s] && (0..m).any(|r| !r_used[r] && allowed(s, r)))
        })
        .collect()
}

/// Number of edges the lexicographic tie-break can encode in one pass.
pub fn tie_break_capacity() -> usize {
    MAX_TIE_EDGES
}

//! Pairwise interactions: enumeration, achievability under constraints,
//! weights and coverage bookkeeping.

use std::cmp::Ordering;
use std::fmt;

use crate::domain::{subsumes, ConstraintSet, FactorSystem, PartialAssignment, Pick, TestCase, TestSuite};

/// A cross-factor level pair `((i, a), (j, b))` with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interaction {
    first: Pick,
    second: Pick,
}

impl Interaction {
    /// Canonicalizes the two picks; `None` when both are on the same factor.
    pub fn new(x: Pick, y: Pick) -> Option<Self> {
        match x.factor.cmp(&y.factor) {
            Ordering::Less => Some(Interaction { first: x, second: y }),
            Ordering::Greater => Some(Interaction { first: y, second: x }),
            Ordering::Equal => None,
        }
    }

    pub fn first(&self) -> Pick {
        self.first
    }

    pub fn second(&self) -> Pick {
        self.second
    }

    /// Sort key `(i, j, a, b)`; the public enumeration order.
    pub fn key(&self) -> (usize, usize, usize, usize) {
        (self.first.factor, self.second.factor, self.first.level, self.second.level)
    }

    pub fn as_partial(&self) -> PartialAssignment {
        PartialAssignment::new([self.first, self.second]).expect("canonical pair never conflicts")
    }

    pub fn is_in(&self, tc: &TestCase) -> bool {
        tc.contains(self.first) && tc.contains(self.second)
    }

    pub fn describe(&self, sys: &FactorSystem) -> String {
        format!("({}, {})", sys.describe(self.first), sys.describe(self.second))
    }
}

impl Ord for Interaction {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for Interaction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.first, self.second)
    }
}

/// All `Σ_{i<j} l_i·l_j` canonical pairs, ordered by `(i, j, a, b)`.
pub fn enumerate_all(sys: &FactorSystem) -> Vec<Interaction> {
    let n = sys.factor_count();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for a in 0..sys.levels(i) {
                for b in 0..sys.levels(j) {
                    out.push(Interaction {
                        first: Pick::new(i, a),
                        second: Pick::new(j, b),
                    });
                }
            }
        }
    }
    out
}

/// Backtracking search that completes a partial assignment into a test case
/// violating no avoid tuple.
///
/// Unfixed factors are visited in ascending domain size; a branch dies as
/// soon as some avoid tuple has all of its picks assigned and matching.
#[derive(Debug, Clone)]
pub struct Extender<'a> {
    sys: &'a FactorSystem,
    avoid: &'a [PartialAssignment],
    // avoid indices touching each (factor, level)
    touching: Vec<Vec<Vec<usize>>>,
}

impl<'a> Extender<'a> {
    pub fn new(sys: &'a FactorSystem, cs: &'a ConstraintSet) -> Self {
        Extender::over(sys, cs.avoid())
    }

    pub fn over(sys: &'a FactorSystem, avoid: &'a [PartialAssignment]) -> Self {
        let mut touching: Vec<Vec<Vec<usize>>> = (0..sys.factor_count()).map(|i| vec![Vec::new(); sys.levels(i)]).collect();
        for (k, a) in avoid.iter().enumerate() {
            for p in a.picks() {
                touching[p.factor][p.level].push(k);
            }
        }
        Extender { sys, avoid, touching }
    }

    pub fn has_constraints(&self) -> bool {
        !self.avoid.is_empty()
    }

    /// A valid completion of `partial`, if one exists.
    pub fn extend(&self, partial: &PartialAssignment) -> Option<TestCase> {
        let mut slots: Vec<Option<usize>> = vec![None; self.sys.factor_count()];
        for p in partial.picks() {
            slots[p.factor] = Some(p.level);
        }
        self.extend_slots(&mut slots)
    }

    /// Completes `slots` in place; `slots` is restored to its input on failure.
    pub fn extend_slots(&self, slots: &mut [Option<usize>]) -> Option<TestCase> {
        for (f, s) in slots.iter().enumerate() {
            if let Some(l) = *s {
                if self.violates_at(slots, Pick::new(f, l)) {
                    return None;
                }
            }
        }
        let mut order: Vec<usize> = (0..slots.len()).filter(|&f| slots[f].is_none()).collect();
        order.sort_by_key(|&f| (self.sys.levels(f), f));
        if self.search(slots, &order) {
            let levels = slots.iter().map(|s| s.expect("search fills every slot")).collect();
            for &f in &order {
                slots[f] = None;
            }
            Some(TestCase::from_levels_unchecked(levels))
        } else {
            None
        }
    }

    pub fn is_extendable(&self, partial: &PartialAssignment) -> bool {
        self.extend(partial).is_some()
    }

    fn search(&self, slots: &mut [Option<usize>], order: &[usize]) -> bool {
        let Some((&f, rest)) = order.split_first() else {
            return true;
        };
        for l in 0..self.sys.levels(f) {
            slots[f] = Some(l);
            if !self.violates_at(slots, Pick::new(f, l)) && self.search(slots, rest) {
                return true;
            }
        }
        slots[f] = None;
        false
    }

    /// Whether some avoid tuple containing `pick` is fully matched by `slots`.
    pub(crate) fn violates_at(&self, slots: &[Option<usize>], pick: Pick) -> bool {
        self.touching[pick.factor][pick.level]
            .iter()
            .any(|&k| self.avoid[k].picks().iter().all(|q| slots[q.factor] == Some(q.level)))
    }
}

/// Whether `u` appears in at least one constraint-valid test case.
pub fn is_achievable(sys: &FactorSystem, u: &Interaction, cs: &ConstraintSet) -> bool {
    achievability_witness(sys, u, cs).is_some()
}

/// A valid test case containing `u`, if any.
pub fn achievability_witness(sys: &FactorSystem, u: &Interaction, cs: &ConstraintSet) -> Option<TestCase> {
    let pair = u.as_partial();
    if cs.avoid().iter().any(|a| a.is_subset_of(&pair)) {
        return None;
    }
    Extender::new(sys, cs).extend(&pair)
}

/// Dense addressing of every (achievable or not) pair of a system.
#[derive(Debug, Clone)]
struct PairIndexer {
    levels: Vec<usize>,
    base: Vec<Vec<usize>>,
    total: usize,
}

impl PairIndexer {
    fn new(sys: &FactorSystem) -> Self {
        let levels = sys.level_counts();
        let n = levels.len();
        let mut base = vec![vec![0; n]; n];
        let mut total = 0;
        for i in 0..n {
            for j in i + 1..n {
                base[i][j] = total;
                total += levels[i] * levels[j];
            }
        }
        PairIndexer { levels, base, total }
    }

    fn dense(&self, i: usize, a: usize, j: usize, b: usize) -> usize {
        self.base[i][j] + a * self.levels[j] + b
    }
}

/// The achievable pairs of a constrained system together with their weights.
#[derive(Debug, Clone)]
pub struct InteractionUniverse {
    all: Vec<Interaction>,
    weights: Vec<u64>,
    slot: Vec<u32>,
    indexer: PairIndexer,
    weighted: bool,
    dead_values: Vec<Pick>,
}

const NO_SLOT: u32 = u32::MAX;

/// Filters all pairs down to the achievable ones and attaches weights
/// (`l_i·l_j` when `weighted`, otherwise 1).
pub fn build_universe(sys: &FactorSystem, cs: &ConstraintSet, weighted: bool) -> InteractionUniverse {
    let indexer = PairIndexer::new(sys);
    let candidates = enumerate_all(sys);
    let mut achievable = vec![false; indexer.total];
    if cs.avoid().is_empty() {
        achievable.iter_mut().for_each(|a| *a = true);
    } else {
        let ext = Extender::new(sys, cs);
        let n = sys.factor_count();
        for u in &candidates {
            let d = indexer.dense(u.first.factor, u.first.level, u.second.factor, u.second.level);
            if achievable[d] {
                continue;
            }
            let pair = u.as_partial();
            if cs.avoid().iter().any(|a| a.is_subset_of(&pair)) {
                continue;
            }
            if let Some(w) = ext.extend(&pair) {
                // every pair inside the witness is achievable too
                for i in 0..n {
                    for j in i + 1..n {
                        achievable[indexer.dense(i, w.level(i), j, w.level(j))] = true;
                    }
                }
            }
        }
    }

    let mut all = Vec::new();
    let mut weights = Vec::new();
    let mut slot = vec![NO_SLOT; indexer.total];
    for u in candidates {
        let d = indexer.dense(u.first.factor, u.first.level, u.second.factor, u.second.level);
        if achievable[d] {
            slot[d] = all.len() as u32;
            weights.push(if weighted {
                (sys.levels(u.first.factor) * sys.levels(u.second.factor)) as u64
            } else {
                1
            });
            all.push(u);
        }
    }

    let mut dead_values = Vec::new();
    if sys.factor_count() >= 2 {
        let mut seen: Vec<Vec<bool>> = (0..sys.factor_count()).map(|i| vec![false; sys.levels(i)]).collect();
        for u in &all {
            seen[u.first.factor][u.first.level] = true;
            seen[u.second.factor][u.second.level] = true;
        }
        for (f, row) in seen.iter().enumerate() {
            for (l, &s) in row.iter().enumerate() {
                if !s {
                    let p = Pick::new(f, l);
                    log::warn!("value {} appears in no achievable interaction", sys.describe(p));
                    dead_values.push(p);
                }
            }
        }
    }

    InteractionUniverse {
        all,
        weights,
        slot,
        indexer,
        weighted,
        dead_values,
    }
}

impl InteractionUniverse {
    pub fn all(&self) -> &[Interaction] {
        &self.all
    }

    pub fn len(&self) -> usize {
        self.all.len()
    }

    pub fn is_empty(&self) -> bool {
        self.all.is_empty()
    }

    pub fn is_weighted(&self) -> bool {
        self.weighted
    }

    pub fn weight(&self, idx: usize) -> u64 {
        self.weights[idx]
    }

    pub fn weight_of(&self, u: &Interaction) -> Option<u64> {
        self.index_of(u).map(|i| self.weights[i])
    }

    pub fn interaction(&self, idx: usize) -> Interaction {
        self.all[idx]
    }

    pub fn index_of(&self, u: &Interaction) -> Option<usize> {
        let (i, j, a, b) = u.key();
        if j >= self.indexer.levels.len() || a >= self.indexer.levels[i] || b >= self.indexer.levels[j] {
            return None;
        }
        self.index_of_parts(i, a, j, b)
    }

    pub(crate) fn index_of_parts(&self, i: usize, a: usize, j: usize, b: usize) -> Option<usize> {
        match self.slot[self.indexer.dense(i, a, j, b)] {
            NO_SLOT => None,
            s => Some(s as usize),
        }
    }

    /// Values that occur in no achievable pair (possibly dead under the constraints).
    pub fn dead_values(&self) -> &[Pick] {
        &self.dead_values
    }

    /// Universe indices of the pairs a test case covers.
    pub fn covered_indices(&self, tc: &TestCase) -> Vec<usize> {
        let n = tc.len();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                if let Some(s) = self.index_of_parts(i, tc.level(i), j, tc.level(j)) {
                    out.push(s);
                }
            }
        }
        out
    }

    /// Number of factor pairs (i, j) and, per pair, how many achievable
    /// interactions span it.
    pub fn per_factor_pair_counts(&self) -> Vec<((usize, usize), usize)> {
        let mut out: Vec<((usize, usize), usize)> = Vec::new();
        for u in &self.all {
            let key = (u.first.factor, u.second.factor);
            match out.last_mut() {
                Some((k, c)) if *k == key => *c += 1,
                _ => out.push((key, 1)),
            }
        }
        out
    }
}

/// The universe interactions whose two picks both appear in `tc`.
pub fn covered_by(tc: &TestCase, universe: &InteractionUniverse) -> Vec<Interaction> {
    universe.covered_indices(tc).into_iter().map(|i| universe.all[i]).collect()
}

/// Which universe interactions are covered so far.
#[derive(Debug, Clone)]
pub struct CoverageState<'u> {
    universe: &'u InteractionUniverse,
    covered: Vec<bool>,
    count: usize,
}

impl<'u> CoverageState<'u> {
    pub fn new(universe: &'u InteractionUniverse) -> Self {
        CoverageState {
            universe,
            covered: vec![false; universe.len()],
            count: 0,
        }
    }

    pub fn universe(&self) -> &'u InteractionUniverse {
        self.universe
    }

    /// Marks the pairs of `tc`; returns how many were new.
    pub fn add_case(&mut self, tc: &TestCase) -> usize {
        let mut fresh = 0;
        for s in self.universe.covered_indices(tc) {
            if !self.covered[s] {
                self.covered[s] = true;
                fresh += 1;
            }
        }
        self.count += fresh;
        fresh
    }

    /// Weighted and plain count of pairs `tc` would newly cover.
    pub fn gain(&self, tc: &TestCase) -> (usize, u64) {
        let mut n = 0;
        let mut w = 0;
        for s in self.universe.covered_indices(tc) {
            if !self.covered[s] {
                n += 1;
                w += self.universe.weight(s);
            }
        }
        (n, w)
    }

    pub fn is_covered(&self, idx: usize) -> bool {
        self.covered[idx]
    }

    pub fn covered_count(&self) -> usize {
        self.count
    }

    pub fn is_complete(&self) -> bool {
        self.count == self.universe.len()
    }

    /// `|covered| / |universe|`, 1.0 for an empty universe.
    pub fn ratio(&self) -> f64 {
        if self.universe.is_empty() {
            1.0
        } else {
            self.count as f64 / self.universe.len() as f64
        }
    }

    pub fn uncovered_indices(&self) -> Vec<usize> {
        (0..self.covered.len()).filter(|&i| !self.covered[i]).collect()
    }

    pub fn covered_interactions(&self) -> Vec<Interaction> {
        (0..self.covered.len())
            .filter(|&i| self.covered[i])
            .map(|i| self.universe.all[i])
            .collect()
    }
}

/// Union of [`covered_by`] over every case of the suite.
pub fn suite_coverage<'u>(ts: &TestSuite, universe: &'u InteractionUniverse) -> CoverageState<'u> {
    let mut st = CoverageState::new(universe);
    for tc in ts.cases() {
        st.add_case(tc);
    }
    st
}

/// Indices of must constraints that no case of `ts` subsumes.
pub fn unsatisfied_must(ts: &TestSuite, cs: &ConstraintSet) -> Vec<usize> {
    cs.must()
        .iter()
        .enumerate()
        .filter(|(_, m)| !ts.cases().iter().any(|tc| subsumes(tc, m)))
        .map(|(i, _)| i)
        .collect()
}

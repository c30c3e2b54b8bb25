//! AETG-style greedy construction, used for warm starts, as a fallback when
//! a step solver gives up, and as the benchmark baseline.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domain::{ConstraintSet, FactorSystem, PartialAssignment, Pick, TestCase, TestSuite};
use crate::interactions::{CoverageState, Extender, InteractionUniverse};

/// Candidates tried per case; the one covering the most fresh pairs wins.
const CANDIDATES: usize = 8;

struct Greedy<'a> {
    sys: &'a FactorSystem,
    universe: &'a InteractionUniverse,
    ext: Extender<'a>,
}

impl Greedy<'_> {
    fn fresh_weight(&self, state: &CoverageState<'_>, f: usize, l: usize, g: usize, m: usize) -> u64 {
        let (a, b) = if f < g { ((f, l), (g, m)) } else { ((g, m), (f, l)) };
        match self.universe.index_of_parts(a.0, a.1, b.0, b.1) {
            Some(s) if !state.is_covered(s) => 1,
            _ => 0,
        }
    }

    fn set_if_extendable(&self, slots: &mut [Option<usize>], f: usize, l: usize) -> bool {
        slots[f] = Some(l);
        if self.ext.violates_at(slots, Pick::new(f, l)) || (self.ext.has_constraints() && self.ext.extend_slots(slots).is_none()) {
            slots[f] = None;
            return false;
        }
        true
    }

    fn candidate(
        &self,
        state: &CoverageState<'_>,
        base: &[Option<usize>],
        seed_pair: Option<usize>,
        participation: &[usize],
        rng: &mut ChaCha8Rng,
    ) -> Option<TestCase> {
        let n = self.sys.factor_count();
        let mut slots = base.to_vec();
        if let Some(s) = seed_pair {
            let u = self.universe.interaction(s);
            slots[u.first().factor] = Some(u.first().level);
            slots[u.second().factor] = Some(u.second().level);
        }
        let mut order: Vec<usize> = (0..n).filter(|&f| slots[f].is_none()).collect();
        order.shuffle(rng);
        order.sort_by_key(|&f| std::cmp::Reverse(participation[f]));

        for f in order {
            let mut scored: Vec<(u64, usize)> = (0..self.sys.levels(f))
                .map(|l| {
                    let gain = (0..n).filter_map(|g| slots[g].map(|m| self.fresh_weight(state, f, l, g, m))).sum();
                    (gain, l)
                })
                .collect();
            scored.shuffle(rng);
            scored.sort_by_key(|&(gain, _)| std::cmp::Reverse(gain));
            if !scored.iter().any(|&(_, l)| self.set_if_extendable(&mut slots, f, l)) {
                return None;
            }
        }
        let levels = slots.into_iter().map(|s| s.expect("every factor assigned")).collect();
        Some(TestCase::from_levels_unchecked(levels))
    }

    fn next_case(&self, state: &CoverageState<'_>, fixings: &PartialAssignment, rng: &mut ChaCha8Rng) -> Option<TestCase> {
        let n = self.sys.factor_count();
        let mut base = vec![None; n];
        for p in fixings.picks() {
            base[p.factor] = Some(p.level);
        }
        self.ext.extend_slots(&mut base.clone())?;

        let uncovered = state.uncovered_indices();
        let seed_pair = uncovered.iter().copied().find(|&s| {
            let u = self.universe.interaction(s);
            let mut slots = base.clone();
            for q in [u.first(), u.second()] {
                match slots[q.factor] {
                    Some(l) if l != q.level => return false,
                    _ => slots[q.factor] = Some(q.level),
                }
            }
            self.ext.extend_slots(&mut slots).is_some()
        });
        let mut participation = vec![0usize; n];
        for &s in &uncovered {
            let u = self.universe.interaction(s);
            participation[u.first().factor] += 1;
            participation[u.second().factor] += 1;
        }

        let mut best: Option<(usize, TestCase)> = None;
        for _ in 0..CANDIDATES {
            let Some(tc) = self.candidate(state, &base, seed_pair, &participation, rng) else {
                continue;
            };
            let fresh = state.gain(&tc).0;
            if best.as_ref().is_none_or(|(b, _)| fresh > *b) {
                best = Some((fresh, tc));
            }
        }
        best.map(|(_, tc)| tc)
    }
}

/// One greedy case containing `fixings` that covers at least one uncovered
/// pair whenever some uncovered pair is compatible with the fixings. `None`
/// when the fixings have no valid completion.
pub fn greedy_case(
    sys: &FactorSystem,
    universe: &InteractionUniverse,
    cs: &ConstraintSet,
    state: &CoverageState<'_>,
    fixings: &PartialAssignment,
    seed: u64,
) -> Option<TestCase> {
    let g = Greedy {
        sys,
        universe,
        ext: Extender::new(sys, cs),
    };
    g.next_case(state, fixings, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Builds a suite covering every pair of `universe`. Must-include
/// constraints are ignored; only avoid tuples are honoured.
pub fn greedy_generate(sys: &Arc<FactorSystem>, universe: &InteractionUniverse, cs: &ConstraintSet, seed: u64) -> TestSuite {
    let g = Greedy {
        sys,
        universe,
        ext: Extender::new(sys, cs),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = CoverageState::new(universe);
    let mut cases = Vec::new();
    let empty = PartialAssignment::empty();
    while !state.is_complete() {
        let tc = g.next_case(&state, &empty, &mut rng).expect("achievable pairs always extend");
        let fresh = state.add_case(&tc);
        assert!(fresh > 0, "greedy step made no progress");
        cases.push(tc);
    }
    TestSuite::new(Arc::clone(sys), cases).expect("cases built over the system")
}

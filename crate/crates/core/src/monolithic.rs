//! The whole-suite coverage model for a fixed suite size `m`, and the
//! smallest-`m` search built on it.
//!
//! Only tiny instances solve in reasonable time; the model is the exact
//! baseline the sequential pipeline is measured against.

use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::domain::{ConstraintSet, FactorSystem, TestCase, TestSuite};
use crate::interactions::InteractionUniverse;
use crate::milp::{self, MilpError, MilpModel, Relation, Sense, SolveStatus, VarId};

pub const DEFAULT_TIME_LIMIT: Duration = Duration::from_secs(3600);
pub const DEFAULT_MAX_VARS: usize = 200_000;

#[derive(Debug, Clone)]
pub struct MonolithicConfig {
    pub m: usize,
    pub time_limit: Duration,
    pub max_vars: usize,
    pub backend: String,
}

impl MonolithicConfig {
    pub fn new(m: usize) -> Self {
        MonolithicConfig {
            m,
            time_limit: DEFAULT_TIME_LIMIT,
            max_vars: DEFAULT_MAX_VARS,
            backend: milp::REFERENCE_BACKEND.to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum MonolithicError {
    #[error("suite size must be at least 1")]
    ZeroSize,
    #[error("model needs {needed} variables, cap is {cap} (m={m})")]
    TooLarge { needed: usize, cap: usize, m: usize },
    #[error("nothing to cover and nothing required")]
    NothingToSolve,
    #[error("time limit hit while deciding m={m}; every smaller size is infeasible")]
    TimedOut { m: usize },
    #[error("no suite up to size {0} satisfies the constraints")]
    Unsatisfiable(usize),
    #[error(transparent)]
    Milp(#[from] MilpError),
}

/// The built program plus the variable maps needed to decode it.
#[derive(Debug, Clone)]
pub struct MonolithicModel {
    pub model: MilpModel,
    /// `x[c][i][j]`
    pub x: Vec<Vec<Vec<VarId>>>,
    /// `q[c][u]` over universe indices
    pub q: Vec<Vec<VarId>>,
    /// `p[u]`
    pub p: Vec<VarId>,
    /// `inc[k][c]`: case `c` satisfies must constraint `k`
    pub inc: Vec<Vec<VarId>>,
}

pub fn variable_count(sys: &FactorSystem, universe: &InteractionUniverse, cs: &ConstraintSet, m: usize) -> usize {
    m * sys.total_levels() + m * universe.len() + universe.len() + m * cs.must().len()
}

/// Builds the fixed-`m` coverage-maximization program.
///
/// Variables are laid out pair-major (`q` for every pair and case first),
/// then `x`, `p` and the must indicators; the reference backend branches in
/// this order, which amounts to deciding which case covers each pair.
pub fn build_monolithic(
    sys: &FactorSystem,
    universe: &InteractionUniverse,
    cs: &ConstraintSet,
    cfg: &MonolithicConfig,
) -> Result<MonolithicModel, MonolithicError> {
    let m = cfg.m;
    if m == 0 {
        return Err(MonolithicError::ZeroSize);
    }
    if universe.is_empty() && cs.must().is_empty() {
        return Err(MonolithicError::NothingToSolve);
    }
    let needed = variable_count(sys, universe, cs, m);
    if needed > cfg.max_vars {
        return Err(MonolithicError::TooLarge {
            needed,
            cap: cfg.max_vars,
            m,
        });
    }

    let mut model = MilpModel::new(Sense::Maximize);
    let mut q_by_pair: Vec<Vec<VarId>> = Vec::with_capacity(universe.len());
    for (k, u) in universe.all().iter().enumerate() {
        let (i, j, a, b) = u.key();
        q_by_pair.push((0..m).map(|c| model.add_var(format!("q_{c}_{k}_{i}_{a}_{j}_{b}"))).collect());
    }
    let q: Vec<Vec<VarId>> = (0..m).map(|c| q_by_pair.iter().map(|row| row[c]).collect()).collect();
    let x: Vec<Vec<Vec<VarId>>> = (0..m)
        .map(|c| {
            (0..sys.factor_count())
                .map(|i| (0..sys.levels(i)).map(|j| model.add_var(format!("x_{c}_{i}_{j}"))).collect())
                .collect()
        })
        .collect();
    let p: Vec<VarId> = (0..universe.len()).map(|k| model.add_var(format!("p_{k}"))).collect();
    let inc: Vec<Vec<VarId>> = (0..cs.must().len())
        .map(|k| (0..m).map(|c| model.add_var(format!("u_{k}_{c}"))).collect())
        .collect();

    for xc in &x {
        for xi in xc {
            model.add_constraint(xi.iter().map(|&v| (v, 1)).collect(), Relation::Eq, 1);
        }
    }
    for c in 0..m {
        for (k, u) in universe.all().iter().enumerate() {
            let xa = x[c][u.first().factor][u.first().level];
            let xb = x[c][u.second().factor][u.second().level];
            let qv = q[c][k];
            // q >= xa + xb - 1, plus the matching upper links so that q
            // really means "case c covers u"
            model.add_constraint(vec![(qv, 1), (xa, -1), (xb, -1)], Relation::Ge, -1);
            model.add_constraint(vec![(qv, 1), (xa, -1)], Relation::Le, 0);
            model.add_constraint(vec![(qv, 1), (xb, -1)], Relation::Le, 0);
        }
    }
    for (k, &pv) in p.iter().enumerate() {
        let mut terms = vec![(pv, 1)];
        terms.extend((0..m).map(|c| (q[c][k], -1)));
        model.add_constraint(terms, Relation::Le, 0);
    }
    for a in cs.avoid() {
        for xc in &x {
            let terms = a.picks().iter().map(|pk| (xc[pk.factor][pk.level], 1)).collect();
            model.add_constraint(terms, Relation::Le, a.len() as i64 - 1);
        }
    }
    for (k, must) in cs.must().iter().enumerate() {
        for (c, xc) in x.iter().enumerate() {
            let uv = inc[k][c];
            for pk in must.picks() {
                model.add_constraint(vec![(uv, 1), (xc[pk.factor][pk.level], -1)], Relation::Le, 0);
            }
            let mut terms = vec![(uv, 1)];
            terms.extend(must.picks().iter().map(|pk| (xc[pk.factor][pk.level], -1)));
            model.add_constraint(terms, Relation::Ge, -(must.len() as i64 - 1));
        }
        model.add_constraint(inc[k].iter().map(|&v| (v, 1)).collect(), Relation::Ge, 1);
    }
    model.set_objective_terms(p.iter().map(|&v| (v, 1)).collect());

    Ok(MonolithicModel { model, x, q, p, inc })
}

/// Reads the chosen levels of every case out of an assignment.
pub fn decode_cases(mm: &MonolithicModel, assignment: &[bool]) -> Vec<TestCase> {
    mm.x.iter()
        .map(|xc| {
            let levels = xc
                .iter()
                .map(|xi| xi.iter().position(|v| assignment[v.0]).expect("one level per factor"))
                .collect();
            TestCase::from_levels_unchecked(levels)
        })
        .collect()
}

/// `max_{i<j}` of achievable pairs spanning factors `i, j`; a case covers at
/// most one of them.
pub fn size_lower_bound(universe: &InteractionUniverse, cs: &ConstraintSet) -> usize {
    let lb = universe.per_factor_pair_counts().into_iter().map(|(_, c)| c).max().unwrap_or(0);
    if cs.must().is_empty() {
        lb
    } else {
        lb.max(1)
    }
}

#[derive(Debug, Clone)]
pub struct MinimalSuite {
    pub suite: TestSuite,
    /// Sizes below `suite.len()` were proven infeasible.
    pub proven_minimal: bool,
    pub sizes_tried: Vec<usize>,
}

/// Smallest `m` whose model reaches full coverage with every must row
/// satisfied, searched upward from [`size_lower_bound`].
pub fn minimal_suite(
    sys: &Arc<FactorSystem>,
    universe: &InteractionUniverse,
    cs: &ConstraintSet,
    time_limit: Duration,
) -> Result<MinimalSuite, MonolithicError> {
    minimal_suite_with(sys, universe, cs, time_limit, milp::REFERENCE_BACKEND, DEFAULT_MAX_VARS)
}

pub fn minimal_suite_with(
    sys: &Arc<FactorSystem>,
    universe: &InteractionUniverse,
    cs: &ConstraintSet,
    time_limit: Duration,
    backend: &str,
    max_vars: usize,
) -> Result<MinimalSuite, MonolithicError> {
    let started = Instant::now();
    let lb = size_lower_bound(universe, cs);
    if lb == 0 {
        return Ok(MinimalSuite {
            suite: TestSuite::empty(Arc::clone(sys)),
            proven_minimal: true,
            sizes_tried: Vec::new(),
        });
    }
    // the set of all valid cases is always a solution, so this bounds the search
    let ceiling: usize = sys.level_counts().iter().product();
    let mut tried = Vec::new();
    for m in lb..=ceiling {
        let remaining = time_limit.saturating_sub(started.elapsed());
        let cfg = MonolithicConfig {
            m,
            time_limit: remaining,
            max_vars,
            backend: backend.to_string(),
        };
        let mut mm = build_monolithic(sys, universe, cs, &cfg)?;
        // full coverage as a hard row turns the model into a feasibility question
        let all: Vec<(VarId, i64)> = mm.p.iter().map(|&v| (v, 1)).collect();
        if !all.is_empty() {
            mm.model.add_constraint(all, Relation::Ge, universe.len() as i64);
        }
        tried.push(m);
        let sol = milp::solve(&mm.model, remaining, backend)?;
        match sol.status {
            SolveStatus::Optimal | SolveStatus::Feasible => {
                let a = sol.assignment.as_ref().expect("assignment present");
                let suite = TestSuite::new(Arc::clone(sys), decode_cases(&mm, a)).expect("decoded cases are in range");
                return Ok(MinimalSuite {
                    suite,
                    proven_minimal: true,
                    sizes_tried: tried,
                });
            }
            SolveStatus::Infeasible => continue,
            SolveStatus::TimedOut => return Err(MonolithicError::TimedOut { m }),
        }
    }
    Err(MonolithicError::Unsatisfiable(ceiling))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::fixtures::five_g;
    use crate::domain::{subsumes, validate_case, PartialAssignment, Pick};
    use crate::interactions::{build_universe, suite_coverage};

    fn solve_fixed(sys: &FactorSystem, cs: &ConstraintSet, m: usize) -> (MonolithicModel, milp::MilpSolution) {
        let uni = build_universe(sys, cs, false);
        let mm = build_monolithic(sys, &uni, cs, &MonolithicConfig::new(m)).unwrap();
        let sol = milp::solve(&mm.model, Duration::from_secs(60), milp::REFERENCE_BACKEND).unwrap();
        (mm, sol)
    }

    #[test]
    fn variable_counts_2x2() {
        let sys = FactorSystem::from_level_counts(&[2, 2]).unwrap();
        let cs = ConstraintSet::empty();
        let uni = build_universe(&sys, &cs, false);
        let mm = build_monolithic(&sys, &uni, &cs, &MonolithicConfig::new(4)).unwrap();
        // one x per case, factor and level: 4 cases * (2 + 2)
        assert_eq!(mm.x.iter().flatten().flatten().count(), 16);
        assert_eq!(mm.p.len(), 4);
        assert_eq!(mm.q.iter().flatten().count(), 16);
        assert_eq!(mm.model.var_count(), 36);
    }

    #[test]
    fn three_cases_cover_three_pairs() {
        let sys = FactorSystem::from_level_counts(&[2, 2]).unwrap();
        let (_, sol) = solve_fixed(&sys, &ConstraintSet::empty(), 3);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.objective_value, 3);
    }

    #[test]
    fn five_g_single_case_holds_must_tuple() {
        let (sys, cs) = five_g();
        let (mm, sol) = solve_fixed(&sys, &cs, 1);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.objective_value, 6);
        assert_eq!(sol.value(mm.inc[0][0]), Some(true));
        let tc = &decode_cases(&mm, sol.assignment.as_ref().unwrap())[0];
        assert!(subsumes(tc, &cs.must()[0]));
        assert!(validate_case(&sys, tc, &cs).unwrap());
    }

    #[test]
    fn size_guard() {
        let sys = FactorSystem::from_level_counts(&[10; 10]).unwrap();
        let cs = ConstraintSet::empty();
        let uni = build_universe(&sys, &cs, false);
        let mut cfg = MonolithicConfig::new(100);
        cfg.max_vars = 10_000;
        assert!(matches!(
            build_monolithic(&sys, &uni, &cs, &cfg),
            Err(MonolithicError::TooLarge { .. })
        ));
        assert!(matches!(
            build_monolithic(&sys, &uni, &cs, &MonolithicConfig::new(0)),
            Err(MonolithicError::ZeroSize)
        ));
    }

    fn check_minimal(levels: &[usize], cs: ConstraintSet, expect: usize) {
        let sys = Arc::new(FactorSystem::from_level_counts(levels).unwrap());
        let uni = build_universe(&sys, &cs, false);
        let res = minimal_suite(&sys, &uni, &cs, Duration::from_secs(120)).unwrap();
        assert_eq!(res.suite.len(), expect, "levels {levels:?}");
        assert_eq!(suite_coverage(&res.suite, &uni).ratio(), 1.0);
        for tc in res.suite.cases() {
            assert!(validate_case(&sys, tc, &cs).unwrap());
        }
    }

    /// Smallest number of the given cases that covers every pair, by
    /// trying all subsets in increasing size.
    fn brute_min_cover(sys: &FactorSystem, cases: &[Vec<usize>]) -> usize {
        let uni = build_universe(sys, &ConstraintSet::empty(), false);
        let cover: Vec<u64> = cases
            .iter()
            .map(|c| {
                let tc = TestCase::new(sys, c.clone()).unwrap();
                uni.covered_indices(&tc).iter().fold(0u64, |m, &i| m | 1 << i)
            })
            .collect();
        let full = (1u64 << uni.len()) - 1;
        (0..=cases.len())
            .find(|&k| {
                (0u32..1 << cases.len())
                    .filter(|s| s.count_ones() as usize == k)
                    .any(|s| (0..cases.len()).filter(|i| s >> i & 1 == 1).fold(0, |m, i| m | cover[i]) == full)
            })
            .unwrap()
    }

    #[test]
    fn minimal_sizes_small() {
        check_minimal(&[2, 2], ConstraintSet::empty(), 4);
        let sys = FactorSystem::from_level_counts(&[2, 2, 2]).unwrap();
        let all: Vec<Vec<usize>> = (0..8).map(|m| vec![m & 1, m >> 1 & 1, m >> 2 & 1]).collect();
        let oracle = brute_min_cover(&sys, &all);
        assert_eq!(oracle, 4);
        check_minimal(&[2, 2, 2], ConstraintSet::empty(), oracle);
    }

    #[test]
    fn must_only_degenerate_system() {
        let sys = Arc::new(FactorSystem::from_level_counts(&[3]).unwrap());
        let must = PartialAssignment::new([Pick::new(0, 2)]).unwrap();
        let cs = ConstraintSet::new(&sys, vec![must.clone()], vec![]).unwrap();
        let uni = build_universe(&sys, &cs, false);
        let res = minimal_suite(&sys, &uni, &cs, Duration::from_secs(10)).unwrap();
        assert_eq!(res.suite.len(), 1);
        assert!(subsumes(&res.suite.cases()[0], &must));
    }

    #[test]
    fn minimal_3_pow_4_is_9() {
        check_minimal(&[3, 3, 3, 3], ConstraintSet::empty(), 9);
    }
}

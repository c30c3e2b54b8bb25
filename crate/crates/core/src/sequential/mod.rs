//! One-test-case-at-a-time generation: the per-step binary program and the
//! greedy baseline.

mod greedy;

use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::domain::{ConstraintSet, FactorSystem, PartialAssignment, TestCase};
use crate::gcp::Partition;
use crate::interactions::{CoverageState, InteractionUniverse};
use crate::milp::{self, MilpError, MilpModel, Relation, Sense, SolveStatus, VarId};

pub use greedy::{greedy_case, greedy_generate};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SequentialError {
    #[error("fixings contain forbidden tuple {0}")]
    FixingsViolateAvoid(usize),
    #[error("step solver timed out without a feasible case")]
    Timeout,
    #[error("must group {0} admits no valid test case")]
    GroupInfeasible(usize),
    #[error(transparent)]
    Milp(#[from] MilpError),
}

/// Solver settings for one step.
#[derive(Debug, Clone)]
pub struct StepOptions {
    pub time_limit: Duration,
    pub backend: String,
    /// Permutes the level order of the x-vars, which picks among optimal cases.
    pub seed: Option<u64>,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions {
            time_limit: Duration::from_secs(60),
            backend: milp::REFERENCE_BACKEND.to_string(),
            seed: None,
        }
    }
}

/// The per-step program and its variable maps.
#[derive(Debug, Clone)]
pub struct StepModel {
    pub model: MilpModel,
    /// `x[i][a]` selects level `a` of factor `i`.
    pub x: Vec<Vec<VarId>>,
    /// `(universe index, var)` for every uncovered pair.
    pub p: Vec<(usize, VarId)>,
    pub fixings: PartialAssignment,
}

impl StepModel {
    pub fn decode(&self, assignment: &[bool]) -> TestCase {
        let levels = self
            .x
            .iter()
            .map(|row| row.iter().position(|v| assignment[v.0]).expect("each factor has one level"))
            .collect();
        TestCase::from_levels_unchecked(levels)
    }
}

/// Builds the weighted single-case program over the `uncovered` universe
/// indices. Products `x·x` are linearized with the two upper links only.
pub fn build_step(
    sys: &FactorSystem,
    uncovered: &[usize],
    universe: &InteractionUniverse,
    cs: &ConstraintSet,
    fixings: &PartialAssignment,
    seed: Option<u64>,
) -> Result<StepModel, SequentialError> {
    if let Some(k) = cs.avoid().iter().position(|a| a.is_subset_of(fixings)) {
        return Err(SequentialError::FixingsViolateAvoid(k));
    }
    let n = sys.factor_count();
    let mut model = MilpModel::new(Sense::Maximize);

    // larger domains first: those are the decisions the bound cares about most
    let mut factor_order: Vec<usize> = (0..n).collect();
    factor_order.sort_by_key(|&i| (std::cmp::Reverse(sys.levels(i)), i));
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    let mut x: Vec<Vec<VarId>> = vec![Vec::new(); n];
    for &i in &factor_order {
        let mut order: Vec<usize> = (0..sys.levels(i)).collect();
        if let Some(r) = rng.as_mut() {
            order.shuffle(r);
        }
        let mut row = vec![VarId(usize::MAX); sys.levels(i)];
        for a in order {
            row[a] = model.add_var(format!("x[{i},{a}]"));
        }
        x[i] = row;
    }

    let mut p = Vec::with_capacity(uncovered.len());
    let mut objective = Vec::with_capacity(uncovered.len());
    for &s in uncovered {
        let u = universe.interaction(s);
        let (i, j, a, b) = u.key();
        let v = model.add_var(format!("p[{i},{a},{j},{b}]"));
        p.push((s, v));
        objective.push((v, universe.weight(s) as i64));
    }

    for row in &x {
        model.add_constraint(row.iter().map(|&v| (v, 1)).collect(), Relation::Eq, 1);
    }
    for &(s, v) in &p {
        let (i, j, a, b) = universe.interaction(s).key();
        model.add_constraint(vec![(v, 1), (x[i][a], -1)], Relation::Le, 0);
        model.add_constraint(vec![(v, 1), (x[j][b], -1)], Relation::Le, 0);
    }
    for tuple in cs.avoid() {
        let terms = tuple.picks().iter().map(|q| (x[q.factor][q.level], 1)).collect();
        model.add_constraint(terms, Relation::Le, tuple.len() as i64 - 1);
    }
    for q in fixings.picks() {
        model.add_constraint(vec![(x[q.factor][q.level], 1)], Relation::Eq, 1);
    }
    model.set_objective_terms(objective);

    Ok(StepModel {
        model,
        x,
        p,
        fixings: fixings.clone(),
    })
}

/// A solved step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    pub case: TestCase,
    /// Weighted fresh coverage of `case`.
    pub objective: i64,
    /// False when the solver stopped on its time limit with an incumbent.
    pub proven_optimal: bool,
}

/// Solves one step. `Ok(None)` means the fixings admit no valid case.
pub fn generate_single_case(
    sys: &FactorSystem,
    uncovered: &[usize],
    universe: &InteractionUniverse,
    cs: &ConstraintSet,
    fixings: &PartialAssignment,
    opts: &StepOptions,
) -> Result<Option<StepOutcome>, SequentialError> {
    let step = build_step(sys, uncovered, universe, cs, fixings, opts.seed)?;
    let sol = milp::solve(&step.model, opts.time_limit, &opts.backend)?;
    match (sol.status, sol.assignment.as_deref()) {
        (SolveStatus::Infeasible, _) => Ok(None),
        (SolveStatus::Optimal | SolveStatus::Feasible, Some(a)) => Ok(Some(StepOutcome {
            case: step.decode(a),
            objective: sol.objective_value,
            proven_optimal: sol.status == SolveStatus::Optimal,
        })),
        _ => Err(SequentialError::Timeout),
    }
}

/// One case per group of `partition`, fixing the union of the group's
/// picks; coverage is updated after each case.
pub fn handle_must_include(
    sys: &FactorSystem,
    partition: &Partition,
    must: &[PartialAssignment],
    universe: &InteractionUniverse,
    cs: &ConstraintSet,
    state: &mut CoverageState<'_>,
    opts: &StepOptions,
) -> Result<Vec<StepOutcome>, SequentialError> {
    let mut out = Vec::with_capacity(partition.len());
    for k in 0..partition.len() {
        let fixings = partition.fixings(k, must);
        let uncovered = state.uncovered_indices();
        let outcome = match generate_single_case(sys, &uncovered, universe, cs, &fixings, opts) {
            Ok(Some(o)) => o,
            Ok(None) | Err(SequentialError::FixingsViolateAvoid(_)) => return Err(SequentialError::GroupInfeasible(k)),
            Err(SequentialError::Timeout) => {
                let case =
                    greedy_case(sys, universe, cs, state, &fixings, opts.seed.unwrap_or(0)).ok_or(SequentialError::GroupInfeasible(k))?;
                let objective = state.gain(&case).1 as i64;
                StepOutcome {
                    case,
                    objective,
                    proven_optimal: false,
                }
            }
            Err(e) => return Err(e),
        };
        state.add_case(&outcome.case);
        out.push(outcome);
    }
    Ok(out)
}

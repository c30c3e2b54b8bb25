//! The end-to-end generator: warm start, must-include groups, sequential
//! fill, and set-cover minimization.

use std::sync::Arc;
use std::time::{Duration, Instant};

use log::{debug, info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::domain::{subsumes, validate_case, ConstraintSet, DomainError, FactorSystem, PartialAssignment, TestCase, TestSuite};
use crate::gcp::{self, GcpError};
use crate::interactions::{build_universe, suite_coverage, unsatisfied_must, CoverageState, InteractionUniverse};
use crate::milp::{self, MilpError, MilpModel, Relation, Sense, SolveStatus};
use crate::sequential::{self, greedy_case, SequentialError, StepOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// `l_i·l_j` pair weights when true, unit weights otherwise.
    pub weighted: bool,
    /// Fraction of the valid warm-start rows to keep, in `[0, 1]`.
    pub alpha: f64,
    pub step_time_limit: Duration,
    pub minimize_time_limit: Duration,
    pub seed: u64,
    pub backend: String,
    /// Interaction strength; only 2 is supported.
    pub strength: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            weighted: true,
            alpha: 0.0,
            step_time_limit: Duration::from_secs(60),
            minimize_time_limit: Duration::from_secs(300),
            seed: 0,
            backend: milp::REFERENCE_BACKEND.to_string(),
            strength: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    WarmStart,
    MustInclude,
    Generate,
    Minimize,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::WarmStart => "warm start",
            Phase::MustInclude => "must-include",
            Phase::Generate => "generation",
            Phase::Minimize => "minimization",
        })
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("only pairwise strength is supported, got {0}")]
    UnsupportedStrength(usize),
    #[error("{phase}: {source}")]
    Domain { phase: Phase, source: DomainError },
    #[error("{phase}: {source}")]
    Partition { phase: Phase, source: GcpError },
    #[error("{phase}: {source}")]
    Step { phase: Phase, source: SequentialError },
    #[error("{phase}: {source}")]
    Milp { phase: Phase, source: MilpError },
    #[error("generation made no progress after {0} steps")]
    NoProgress(usize),
    #[error("candidate suite does not cover interaction {0}")]
    Uncoverable(String),
    #[error("final suite is unsound: {0}")]
    Unsound(String),
}

/// Rows kept from a warm start and what they already achieve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WarmStart {
    pub retained: Vec<TestCase>,
    /// Rows dropped for containing a forbidden tuple.
    pub invalid: usize,
    /// Indices into `cs.must()` not subsumed by any retained row.
    pub remaining_must: Vec<usize>,
}

/// Drops rows that break an avoid tuple, keeps the first `⌈alpha·R⌉` of the
/// `R` survivors in order, and records their coverage in `state`.
pub fn apply_warm_start(
    sys: &FactorSystem,
    ts_init: &TestSuite,
    cs: &ConstraintSet,
    alpha: f64,
    state: &mut CoverageState<'_>,
) -> Result<WarmStart, DomainError> {
    if !ts_init.is_over(sys) {
        return Err(DomainError::SystemMismatch);
    }
    let mut valid = Vec::with_capacity(ts_init.len());
    for tc in ts_init.cases() {
        if validate_case(sys, tc, cs)? {
            valid.push(tc.clone());
        }
    }
    let invalid = ts_init.len() - valid.len();
    let keep = retained_count(alpha, valid.len());
    valid.truncate(keep);
    for tc in &valid {
        state.add_case(tc);
    }
    let remaining_must = (0..cs.must().len())
        .filter(|&k| !valid.iter().any(|tc| subsumes(tc, &cs.must()[k])))
        .collect();
    Ok(WarmStart {
        retained: valid,
        invalid,
        remaining_must,
    })
}

fn retained_count(alpha: f64, rows: usize) -> usize {
    // the epsilon keeps 0.9 * 100 at 90 instead of 91
    ((alpha * rows as f64 - 1e-9).ceil().max(0.0) as usize).min(rows)
}

/// Outcome of the set-cover phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Minimized {
    pub suite: TestSuite,
    /// False when the solver stopped early; the suite is then the incumbent
    /// selection or the untouched candidate.
    pub proven_minimal: bool,
}

/// Selects the fewest rows of `candidate` that still cover every universe
/// pair and subsume every must tuple. Rows keep their original order.
pub fn minimize_suite(
    candidate: &TestSuite,
    universe: &InteractionUniverse,
    must: &[PartialAssignment],
    time_limit: Duration,
    backend: &str,
) -> Result<Minimized, PipelineError> {
    let cases = candidate.cases();
    if cases.is_empty() {
        return Ok(Minimized {
            suite: candidate.clone(),
            proven_minimal: true,
        });
    }
    let mut cover_rows: Vec<Vec<usize>> = vec![Vec::new(); universe.len()];
    for (c, tc) in cases.iter().enumerate() {
        for s in universe.covered_indices(tc) {
            cover_rows[s].push(c);
        }
    }
    if let Some(s) = cover_rows.iter().position(Vec::is_empty) {
        let sys = candidate.system();
        return Err(PipelineError::Uncoverable(universe.interaction(s).describe(sys)));
    }
    for m in must {
        let rows: Vec<usize> = (0..cases.len()).filter(|&c| subsumes(&cases[c], m)).collect();
        if rows.is_empty() {
            return Err(PipelineError::Uncoverable(m.describe(candidate.system())));
        }
        cover_rows.push(rows);
    }
    cover_rows.sort();
    cover_rows.dedup();

    let mut model = MilpModel::new(Sense::Minimize);
    let z: Vec<_> = (0..cases.len()).map(|c| model.add_var(format!("z[{c}]"))).collect();
    for rows in &cover_rows {
        model.add_constraint(rows.iter().map(|&c| (z[c], 1)).collect(), Relation::Ge, 1);
    }
    model.set_objective_terms(z.iter().map(|&v| (v, 1)).collect());

    let sol = milp::solve(&model, time_limit, backend).map_err(|source| PipelineError::Milp {
        phase: Phase::Minimize,
        source,
    })?;
    let (selected, proven) = match (sol.status, sol.assignment) {
        (SolveStatus::Optimal, Some(a)) => (a, true),
        (SolveStatus::Feasible, Some(a)) => (a, false),
        _ => (vec![true; cases.len()], false),
    };
    let kept = cases
        .iter()
        .zip(&selected)
        .filter(|(_, &on)| on)
        .map(|(tc, _)| tc.clone())
        .collect();
    Ok(Minimized {
        suite: TestSuite::new(Arc::clone(candidate.system()), kept).expect("subset of a valid suite"),
        proven_minimal: proven,
    })
}

/// Violations of the coverage and constraint contract.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Soundness {
    /// Universe indices no row covers.
    pub uncovered: Vec<usize>,
    /// Indices into `cs.must()` no row subsumes.
    pub unsatisfied_must: Vec<usize>,
    /// Row indices that contain a forbidden tuple.
    pub forbidden_rows: Vec<usize>,
}

impl Soundness {
    pub fn is_sound(&self) -> bool {
        self.uncovered.is_empty() && self.unsatisfied_must.is_empty() && self.forbidden_rows.is_empty()
    }
}

pub fn check_soundness(ts: &TestSuite, universe: &InteractionUniverse, cs: &ConstraintSet) -> Soundness {
    let sys = ts.system();
    Soundness {
        uncovered: suite_coverage(ts, universe).uncovered_indices(),
        unsatisfied_must: unsatisfied_must(ts, cs),
        forbidden_rows: (0..ts.len())
            .filter(|&r| !validate_case(sys, &ts.cases()[r], cs).unwrap_or(false))
            .collect(),
    }
}

/// Ways a run fell short of proven-optimal solver behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Degradation {
    /// Steps that used a time-limited incumbent.
    pub step_incumbents: usize,
    /// Steps that fell back to a greedy case.
    pub greedy_fallbacks: usize,
    /// Minimization stopped before proving its selection minimal.
    pub minimize_non_minimal: bool,
}

impl Degradation {
    pub fn is_degraded(&self) -> bool {
        self.step_incumbents > 0 || self.greedy_fallbacks > 0 || self.minimize_non_minimal
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub final_suite: TestSuite,
    pub universe_size: usize,
    /// Cases contributed by the warm start, the must-include groups, and
    /// the sequential fill.
    pub phase_sizes: [usize; 3],
    pub removed_by_minimize: usize,
    /// `(case index, cumulative coverage ratio)` over the final suite.
    pub coverage_curve: Vec<(usize, f64)>,
    /// Wall time of phases 0 through 3.
    pub wall_times: [Duration; 4],
    /// Solver calls made while filling the remaining pairs.
    pub phase2_steps: usize,
    pub degradation: Degradation,
}

/// Cumulative coverage after each case.
pub fn coverage_curve(ts: &TestSuite, universe: &InteractionUniverse) -> Vec<(usize, f64)> {
    let mut st = CoverageState::new(universe);
    ts.cases()
        .iter()
        .enumerate()
        .map(|(k, tc)| {
            st.add_case(tc);
            (k, st.ratio())
        })
        .collect()
}

struct Stepper<'a> {
    sys: &'a FactorSystem,
    universe: &'a InteractionUniverse,
    cs: &'a ConstraintSet,
    cfg: &'a PipelineConfig,
    rng: ChaCha8Rng,
    degradation: Degradation,
}

impl Stepper<'_> {
    fn options(&mut self) -> StepOptions {
        StepOptions {
            time_limit: self.cfg.step_time_limit,
            backend: self.cfg.backend.clone(),
            seed: Some(self.rng.gen()),
        }
    }

    /// One case with `fixings`; `Ok(None)` when no valid case contains them.
    fn step(&mut self, state: &CoverageState<'_>, fixings: &PartialAssignment, phase: Phase) -> Result<Option<TestCase>, PipelineError> {
        let opts = self.options();
        let uncovered = state.uncovered_indices();
        let solved = sequential::generate_single_case(self.sys, &uncovered, self.universe, self.cs, fixings, &opts);
        match solved {
            Ok(None) => return Ok(None),
            Ok(Some(o)) if o.proven_optimal => return Ok(Some(o.case)),
            // an incumbent is only worth keeping if it makes progress
            Ok(Some(o)) if uncovered.is_empty() || state.gain(&o.case).0 > 0 => {
                self.degradation.step_incumbents += 1;
                return Ok(Some(o.case));
            }
            Ok(Some(_)) | Err(SequentialError::Timeout) => {}
            Err(source) => return Err(PipelineError::Step { phase, source }),
        }
        warn!("{phase}: step solver gave up, using a greedy case");
        self.degradation.greedy_fallbacks += 1;
        Ok(greedy_case(
            self.sys,
            self.universe,
            self.cs,
            state,
            fixings,
            opts.seed.unwrap_or(0),
        ))
    }
}

/// Runs every phase and checks the result before returning it.
pub fn run(
    sys: &Arc<FactorSystem>,
    cs: &ConstraintSet,
    cfg: &PipelineConfig,
    ts_init: Option<&TestSuite>,
) -> Result<RunReport, PipelineError> {
    if !(0.0..=1.0).contains(&cfg.alpha) {
        return Err(PipelineError::InvalidAlpha(cfg.alpha));
    }
    if cfg.strength != 2 {
        return Err(PipelineError::UnsupportedStrength(cfg.strength));
    }
    let universe = build_universe(sys, cs, cfg.weighted);
    let mut state = CoverageState::new(&universe);
    let mut times = [Duration::ZERO; 4];
    info!("{} achievable pairs over {} factors", universe.len(), sys.factor_count());

    // Phase 0
    let t = Instant::now();
    let warm = match ts_init {
        Some(ts) => apply_warm_start(sys, ts, cs, cfg.alpha, &mut state).map_err(|source| PipelineError::Domain {
            phase: Phase::WarmStart,
            source,
        })?,
        None => WarmStart {
            retained: Vec::new(),
            invalid: 0,
            remaining_must: (0..cs.must().len()).collect(),
        },
    };
    times[0] = t.elapsed();
    debug!("warm start kept {} rows, dropped {} invalid", warm.retained.len(), warm.invalid);

    let mut stepper = Stepper {
        sys,
        universe: &universe,
        cs,
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        degradation: Degradation::default(),
    };

    // Phase 1
    let t = Instant::now();
    let must: Vec<PartialAssignment> = warm.remaining_must.iter().map(|&k| cs.must()[k].clone()).collect();
    let graph = gcp::build_graph(sys, &must, cs);
    let partition = gcp::partition(&graph, sys, &must, cs).map_err(|source| PipelineError::Partition {
        phase: Phase::MustInclude,
        source,
    })?;
    let mut phase1 = Vec::with_capacity(partition.len());
    for k in 0..partition.len() {
        let fixings = partition.fixings(k, &must);
        let tc = stepper.step(&state, &fixings, Phase::MustInclude)?.ok_or(PipelineError::Step {
            phase: Phase::MustInclude,
            source: SequentialError::GroupInfeasible(k),
        })?;
        state.add_case(&tc);
        phase1.push(tc);
    }
    times[1] = t.elapsed();

    // Phase 2
    let t = Instant::now();
    let mut phase2 = Vec::new();
    let mut steps = 0;
    let empty = PartialAssignment::empty();
    while !state.is_complete() {
        if steps >= universe.len() {
            return Err(PipelineError::NoProgress(steps));
        }
        steps += 1;
        let Some(tc) = stepper.step(&state, &empty, Phase::Generate)? else {
            break;
        };
        if state.add_case(&tc) == 0 {
            return Err(PipelineError::NoProgress(steps));
        }
        phase2.push(tc);
    }
    times[2] = t.elapsed();
    debug!("phase 2 added {} cases in {steps} steps", phase2.len());

    // Phase 3
    let t = Instant::now();
    let phase_sizes = [warm.retained.len(), phase1.len(), phase2.len()];
    let candidate_cases: Vec<TestCase> = warm.retained.into_iter().chain(phase1).chain(phase2).collect();
    let candidate = TestSuite::new(Arc::clone(sys), candidate_cases).expect("generated cases are in range");
    let minimized = minimize_suite(&candidate, &universe, cs.must(), cfg.minimize_time_limit, &cfg.backend)?;
    times[3] = t.elapsed();
    let mut degradation = stepper.degradation;
    degradation.minimize_non_minimal = !minimized.proven_minimal;

    let final_suite = minimized.suite;
    let sound = check_soundness(&final_suite, &universe, cs);
    if !sound.is_sound() || final_suite.len() > candidate.len() {
        return Err(PipelineError::Unsound(format!("{sound:?}")));
    }
    info!(
        "final suite: {} cases ({} removed)",
        final_suite.len(),
        candidate.len() - final_suite.len()
    );
    Ok(RunReport {
        coverage_curve: coverage_curve(&final_suite, &universe),
        removed_by_minimize: candidate.len() - final_suite.len(),
        universe_size: universe.len(),
        final_suite,
        phase_sizes,
        wall_times: times,
        phase2_steps: steps,
        degradation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::fixtures::{five_g, table2};
    use crate::domain::Pick;
    use crate::sequential::greedy_generate;
    use proptest::prelude::*;

    fn pa(picks: &[(usize, usize)]) -> PartialAssignment {
        PartialAssignment::new(picks.iter().map(|&(f, l)| Pick::new(f, l))).unwrap()
    }

    fn minimize(ts: &TestSuite, u: &InteractionUniverse, must: &[PartialAssignment]) -> Minimized {
        minimize_suite(ts, u, must, Duration::from_secs(60), milp::REFERENCE_BACKEND).unwrap()
    }

    #[test]
    fn retention_counts() {
        assert_eq!(retained_count(0.9, 100), 90);
        assert_eq!(retained_count(0.9, 11), 10);
        assert_eq!(retained_count(0.0, 7), 0);
        assert_eq!(retained_count(1.0, 7), 7);
        assert_eq!(retained_count(0.5, 0), 0);
    }

    #[test]
    fn warm_start_drops_forbidden_rows_first() {
        let (sys, cs) = five_g();
        let u = build_universe(&sys, &cs, true);
        let mut cases = table2(&sys).into_cases();
        let forbidden = TestCase::new(&sys, vec![0, 3, 0, 0]).unwrap();
        cases.insert(0, forbidden);
        let ts = TestSuite::new(Arc::clone(&sys), cases).unwrap();
        let mut st = CoverageState::new(&u);
        let w = apply_warm_start(&sys, &ts, &cs, 1.0, &mut st).unwrap();
        assert_eq!((w.invalid, w.retained.len()), (1, 21));
        assert!(w.remaining_must.is_empty());
        assert!(st.is_complete());

        let mut st = CoverageState::new(&u);
        let w = apply_warm_start(&sys, &TestSuite::empty(Arc::clone(&sys)), &cs, 0.9, &mut st).unwrap();
        assert!(w.retained.is_empty());
        assert_eq!(w.remaining_must, vec![0]);
        assert_eq!(st.covered_count(), 0);
    }

    #[test]
    fn warm_start_rejects_other_system() {
        let (sys, cs) = five_g();
        let u = build_universe(&sys, &cs, true);
        let other = Arc::new(FactorSystem::from_level_counts(&[2, 2]).unwrap());
        let mut st = CoverageState::new(&u);
        assert!(apply_warm_start(&sys, &TestSuite::empty(other), &cs, 1.0, &mut st).is_err());
    }

    #[test]
    fn minimize_table2() {
        let (sys, cs) = five_g();
        let u = build_universe(&sys, &cs, true);
        let ts = table2(&sys);
        let m = minimize(&ts, &u, cs.must());
        assert!(m.suite.len() <= 21);
        assert!(check_soundness(&m.suite, &u, &cs).is_sound());
    }

    #[test]
    fn minimize_drops_duplicates_and_keeps_forced_rows() {
        let sys = Arc::new(FactorSystem::from_level_counts(&[2, 2]).unwrap());
        let cs = ConstraintSet::empty();
        let u = build_universe(&sys, &cs, true);
        let rows = [[0, 0], [0, 1], [0, 1], [1, 0], [1, 1]];
        let ts = TestSuite::new(
            Arc::clone(&sys),
            rows.iter().map(|r| TestCase::new(&sys, r.to_vec()).unwrap()).collect(),
        )
        .unwrap();
        let m = minimize(&ts, &u, &[]);
        assert_eq!(m.suite.len(), 4);
        assert!(m.proven_minimal);
        let again = minimize(&m.suite, &u, &[]);
        assert_eq!(again.suite, m.suite);
    }

    #[test]
    fn minimize_keeps_must_rows() {
        let sys = Arc::new(FactorSystem::from_level_counts(&[2, 2]).unwrap());
        let cs = ConstraintSet::empty();
        let u = build_universe(&sys, &cs, true);
        let rows = [[0, 0], [0, 1], [1, 0], [1, 1], [0, 0]];
        let ts = TestSuite::new(
            Arc::clone(&sys),
            rows.iter().map(|r| TestCase::new(&sys, r.to_vec()).unwrap()).collect(),
        )
        .unwrap();
        let m = minimize(&ts, &u, &[pa(&[(0, 0), (1, 0)])]);
        assert_eq!(m.suite.len(), 4);
    }

    #[test]
    fn minimize_requires_coverage() {
        let sys = Arc::new(FactorSystem::from_level_counts(&[2, 2]).unwrap());
        let u = build_universe(&sys, &ConstraintSet::empty(), true);
        let ts = TestSuite::new(Arc::clone(&sys), vec![TestCase::new(&sys, vec![0, 0]).unwrap()]).unwrap();
        assert!(matches!(
            minimize_suite(&ts, &u, &[], Duration::from_secs(1), milp::REFERENCE_BACKEND),
            Err(PipelineError::Uncoverable(_))
        ));
    }

    #[test]
    fn run_five_g() {
        let (sys, cs) = five_g();
        let r = run(&sys, &cs, &PipelineConfig::default(), None).unwrap();
        assert!(r.final_suite.len() <= 21, "{}", r.final_suite.len());
        assert_eq!(r.universe_size, 95);
        assert_eq!(r.phase_sizes[1], 1);
        assert!(!r.degradation.is_degraded());
    }

    #[test]
    fn run_3_pow_4_reaches_nine() {
        let sys = Arc::new(FactorSystem::from_level_counts(&[3, 3, 3, 3]).unwrap());
        let r = run(&sys, &ConstraintSet::empty(), &PipelineConfig::default(), None).unwrap();
        assert_eq!(r.final_suite.len(), 9);
    }

    #[test]
    fn degenerate_systems() {
        let one = Arc::new(FactorSystem::from_level_counts(&[3]).unwrap());
        let r = run(&one, &ConstraintSet::empty(), &PipelineConfig::default(), None).unwrap();
        assert!(r.final_suite.is_empty());
        assert_eq!(r.universe_size, 0);

        let cs = ConstraintSet::new(&one, vec![pa(&[(0, 1)]), pa(&[(0, 2)])], vec![]).unwrap();
        let r = run(&one, &cs, &PipelineConfig::default(), None).unwrap();
        assert_eq!(r.final_suite.len(), 2);

        let flat = Arc::new(FactorSystem::from_level_counts(&[1, 1, 1]).unwrap());
        let r = run(&flat, &ConstraintSet::empty(), &PipelineConfig::default(), None).unwrap();
        assert_eq!(r.universe_size, 3);
        assert_eq!(r.final_suite.len(), 1);
    }

    #[test]
    fn complete_warm_start_with_full_retention_needs_no_steps() {
        let (sys, cs) = five_g();
        let cfg = PipelineConfig {
            alpha: 1.0,
            ..PipelineConfig::default()
        };
        let r = run(&sys, &cs, &cfg, Some(&table2(&sys))).unwrap();
        assert_eq!(r.phase2_steps, 0);
        assert_eq!(r.phase_sizes, [21, 0, 0]);
        assert!(r.final_suite.len() <= 21);
    }

    #[test]
    fn bad_config() {
        let (sys, cs) = five_g();
        let cfg = PipelineConfig {
            alpha: 1.5,
            ..PipelineConfig::default()
        };
        assert!(matches!(run(&sys, &cs, &cfg, None), Err(PipelineError::InvalidAlpha(_))));
        let cfg = PipelineConfig {
            strength: 3,
            ..PipelineConfig::default()
        };
        assert!(matches!(run(&sys, &cs, &cfg, None), Err(PipelineError::UnsupportedStrength(3))));
    }

    #[test]
    fn deterministic_per_seed() {
        let (sys, cs) = five_g();
        let cfg = PipelineConfig {
            seed: 9,
            ..PipelineConfig::default()
        };
        let a = run(&sys, &cs, &cfg, None).unwrap();
        let b = run(&sys, &cs, &cfg, None).unwrap();
        assert_eq!(a.final_suite, b.final_suite);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn runs_are_sound(
            levels in prop::collection::vec(1usize..=3, 1..=4),
            raw_avoid in prop::collection::vec(prop::collection::vec((0usize..4, 0usize..3), 1..=2), 0..=3),
            raw_must in prop::collection::vec(prop::collection::vec((0usize..4, 0usize..3), 1..=2), 0..=2),
            seed in any::<u64>(),
            weighted in any::<bool>(),
            alpha in 0.0f64..=1.0,
            warm in any::<bool>(),
        ) {
            let sys = Arc::new(FactorSystem::from_level_counts(&levels).unwrap());
            let to_pa = |raw: &Vec<Vec<(usize, usize)>>| -> Vec<PartialAssignment> {
                raw.iter()
                    .filter_map(|t| PartialAssignment::checked(&sys, t.iter().map(|&(f, l)| Pick::new(f, l))).ok())
                    .filter(|t| !t.is_empty())
                    .collect()
            };
            let avoid_cs = ConstraintSet::new(&sys, vec![], to_pa(&raw_avoid)).unwrap();
            let ext = crate::interactions::Extender::new(&sys, &avoid_cs);
            let must: Vec<PartialAssignment> = to_pa(&raw_must).into_iter().filter(|m| ext.is_extendable(m)).collect();
            let cs = avoid_cs.with_must(must);
            let cfg = PipelineConfig { seed, weighted, alpha, ..PipelineConfig::default() };
            let u = build_universe(&sys, &cs, weighted);
            let init = greedy_generate(&sys, &u, &cs, seed);
            let r = run(&sys, &cs, &cfg, warm.then_some(&init)).unwrap();
            prop_assert!(check_soundness(&r.final_suite, &u, &cs).is_sound());
            prop_assert!(r.final_suite.len() <= r.phase_sizes.iter().sum::<usize>());
            prop_assert!(r.coverage_curve.windows(2).all(|w| w[0].1 <= w[1].1));
            if let Some(last) = r.coverage_curve.last() {
                prop_assert_eq!(last.1, 1.0);
            }
        }
    }
}

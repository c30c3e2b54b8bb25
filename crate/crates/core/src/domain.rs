//! Shared value types: the system under test, partial and total level
//! assignments, constraint sets and test suites.
//!
//! Levels and factors are addressed by index everywhere inside the crate;
//! names only matter at the I/O boundary.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Structural errors: things that are wrong with the *shape* of an input,
/// as opposed to a test case merely violating a constraint.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("system has no factors")]
    NoFactors,
    #[error("factor `{0}` has no levels")]
    EmptyFactor(String),
    #[error("duplicate factor name `{0}`")]
    DuplicateFactor(String),
    #[error("factor `{factor}` declares level `{level}` twice")]
    DuplicateLevel { factor: String, level: String },
    #[error("factor index {0} out of range")]
    FactorOutOfRange(usize),
    #[error("level index {level} out of range for factor {factor}")]
    LevelOutOfRange { factor: usize, level: usize },
    #[error("factor {0} is assigned twice with different levels")]
    ConflictingPicks(usize),
    #[error("test case has {got} levels, system has {expected} factors")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("avoid constraint must contain at least one pick")]
    EmptyAvoid,
    #[error("suite belongs to a different factor system")]
    SystemMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factor {
    pub name: String,
    pub levels: Vec<String>,
}

impl Factor {
    pub fn new<S: Into<String>, L: Into<String>>(name: S, levels: impl IntoIterator<Item = L>) -> Self {
        Factor {
            name: name.into(),
            levels: levels.into_iter().map(Into::into).collect(),
        }
    }
}

/// The system under test: an ordered list of factors, each with an ordered
/// list of level names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorSystem {
    factors: Vec<Factor>,
}

impl FactorSystem {
    pub fn new(factors: Vec<Factor>) -> Result<Self, DomainError> {
        if factors.is_empty() {
            return Err(DomainError::NoFactors);
        }
        let mut seen = HashMap::new();
        for f in &factors {
            if f.levels.is_empty() {
                return Err(DomainError::EmptyFactor(f.name.clone()));
            }
            if seen.insert(f.name.as_str(), ()).is_some() {
                return Err(DomainError::DuplicateFactor(f.name.clone()));
            }
            let mut lv = HashMap::new();
            for l in &f.levels {
                if lv.insert(l.as_str(), ()).is_some() {
                    return Err(DomainError::DuplicateLevel {
                        factor: f.name.clone(),
                        level: l.clone(),
                    });
                }
            }
        }
        Ok(FactorSystem { factors })
    }

    /// Anonymous system with factors `F0, F1, ...` and levels `0, 1, ...`.
    pub fn from_level_counts(counts: &[usize]) -> Result<Self, DomainError> {
        let factors = counts
            .iter()
            .enumerate()
            .map(|(i, &l)| Factor::new(format!("F{i}"), (0..l).map(|j| j.to_string())))
            .collect();
        FactorSystem::new(factors)
    }

    pub fn factor_count(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn factor(&self, i: usize) -> &Factor {
        &self.factors[i]
    }

    /// Number of levels of factor `i` (l_i).
    pub fn levels(&self, i: usize) -> usize {
        self.factors[i].levels.len()
    }

    pub fn level_counts(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.levels.len()).collect()
    }

    pub fn total_levels(&self) -> usize {
        self.factors.iter().map(|f| f.levels.len()).sum()
    }

    pub fn factor_index(&self, name: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.name == name)
    }

    pub fn level_index(&self, factor: usize, name: &str) -> Option<usize> {
        self.factors.get(factor)?.levels.iter().position(|l| l == name)
    }

    pub fn check_pick(&self, pick: Pick) -> Result<(), DomainError> {
        if pick.factor >= self.factors.len() {
            return Err(DomainError::FactorOutOfRange(pick.factor));
        }
        if pick.level >= self.levels(pick.factor) {
            return Err(DomainError::LevelOutOfRange {
                factor: pick.factor,
                level: pick.level,
            });
        }
        Ok(())
    }

    /// `Factor=Level` rendering of a pick.
    pub fn describe(&self, pick: Pick) -> String {
        let f = &self.factors[pick.factor];
        format!("{}={}", f.name, f.levels[pick.level])
    }
}

/// A single (factor, level) selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pick {
    pub factor: usize,
    pub level: usize,
}

impl Pick {
    pub const fn new(factor: usize, level: usize) -> Self {
        Pick { factor, level }
    }
}

impl fmt::Display for Pick {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.factor, self.level)
    }
}

/// A conflict-free set of picks, sorted by factor index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PartialAssignment {
    picks: Vec<Pick>,
}

impl PartialAssignment {
    pub fn empty() -> Self {
        PartialAssignment::default()
    }

    /// Builds an assignment; repeating an identical pick is harmless, two
    /// different levels for one factor are not.
    pub fn new(picks: impl IntoIterator<Item = Pick>) -> Result<Self, DomainError> {
        let mut picks: Vec<Pick> = picks.into_iter().collect();
        picks.sort();
        picks.dedup();
        for w in picks.windows(2) {
            if w[0].factor == w[1].factor {
                return Err(DomainError::ConflictingPicks(w[0].factor));
            }
        }
        Ok(PartialAssignment { picks })
    }

    /// Like [`PartialAssignment::new`] but also range-checks against `sys`.
    pub fn checked(sys: &FactorSystem, picks: impl IntoIterator<Item = Pick>) -> Result<Self, DomainError> {
        let pa = PartialAssignment::new(picks)?;
        for &p in &pa.picks {
            sys.check_pick(p)?;
        }
        Ok(pa)
    }

    pub fn picks(&self) -> &[Pick] {
        &self.picks
    }

    pub fn len(&self) -> usize {
        self.picks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.picks.is_empty()
    }

    pub fn level_of(&self, factor: usize) -> Option<usize> {
        self.picks
            .binary_search_by_key(&factor, |p| p.factor)
            .ok()
            .map(|i| self.picks[i].level)
    }

    /// Union of two assignments, `None` if they disagree on some factor.
    pub fn union(&self, other: &PartialAssignment) -> Option<PartialAssignment> {
        PartialAssignment::new(self.picks.iter().chain(other.picks.iter()).copied()).ok()
    }

    /// True when every pick of `self` is also in `other`.
    pub fn is_subset_of(&self, other: &PartialAssignment) -> bool {
        self.picks.iter().all(|p| other.level_of(p.factor) == Some(p.level))
    }

    pub fn describe(&self, sys: &FactorSystem) -> String {
        let parts: Vec<String> = self.picks.iter().map(|&p| sys.describe(p)).collect();
        format!("{{{}}}", parts.join(", "))
    }
}

/// A total assignment: one level per factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TestCase {
    levels: Vec<usize>,
}

impl TestCase {
    pub fn new(sys: &FactorSystem, levels: Vec<usize>) -> Result<Self, DomainError> {
        let tc = TestCase { levels };
        tc.check(sys)?;
        Ok(tc)
    }

    pub(crate) fn from_levels_unchecked(levels: Vec<usize>) -> Self {
        TestCase { levels }
    }

    pub fn check(&self, sys: &FactorSystem) -> Result<(), DomainError> {
        if self.levels.len() != sys.factor_count() {
            return Err(DomainError::DimensionMismatch {
                expected: sys.factor_count(),
                got: self.levels.len(),
            });
        }
        for (factor, &level) in self.levels.iter().enumerate() {
            sys.check_pick(Pick { factor, level })?;
        }
        Ok(())
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn level(&self, factor: usize) -> usize {
        self.levels[factor]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn contains(&self, pick: Pick) -> bool {
        self.levels.get(pick.factor) == Some(&pick.level)
    }

    /// The partial assignment that picks every level of this case.
    pub fn as_partial(&self) -> PartialAssignment {
        PartialAssignment {
            picks: self
                .levels
                .iter()
                .enumerate()
                .map(|(factor, &level)| Pick { factor, level })
                .collect(),
        }
    }

    pub fn describe(&self, sys: &FactorSystem) -> String {
        let parts: Vec<&str> = self
            .levels
            .iter()
            .enumerate()
            .map(|(i, &l)| sys.factor(i).levels[l].as_str())
            .collect();
        parts.join(", ")
    }
}

/// Required (`must`) and forbidden (`avoid`) partial assignments.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConstraintSet {
    must: Vec<PartialAssignment>,
    avoid: Vec<PartialAssignment>,
}

impl ConstraintSet {
    pub fn empty() -> Self {
        ConstraintSet::default()
    }

    /// Validates indices against `sys` and removes duplicate entries while
    /// keeping first-occurrence order.
    pub fn new(sys: &FactorSystem, must: Vec<PartialAssignment>, avoid: Vec<PartialAssignment>) -> Result<Self, DomainError> {
        for pa in must.iter().chain(avoid.iter()) {
            for &p in pa.picks() {
                sys.check_pick(p)?;
            }
        }
        if avoid.iter().any(PartialAssignment::is_empty) {
            return Err(DomainError::EmptyAvoid);
        }
        Ok(ConstraintSet {
            must: dedup_keep_order(must),
            avoid: dedup_keep_order(avoid),
        })
    }

    pub fn must(&self) -> &[PartialAssignment] {
        &self.must
    }

    pub fn avoid(&self) -> &[PartialAssignment] {
        &self.avoid
    }

    /// Same avoid set, no must constraints.
    pub fn avoid_only(&self) -> ConstraintSet {
        ConstraintSet {
            must: Vec::new(),
            avoid: self.avoid.clone(),
        }
    }

    pub fn with_must(&self, must: Vec<PartialAssignment>) -> ConstraintSet {
        ConstraintSet {
            must: dedup_keep_order(must),
            avoid: self.avoid.clone(),
        }
    }
}

fn dedup_keep_order(v: Vec<PartialAssignment>) -> Vec<PartialAssignment> {
    let mut seen = std::collections::HashSet::new();
    v.into_iter().filter(|pa| seen.insert(pa.clone())).collect()
}

/// True iff every pick in `pa` is present in `tc`.
pub fn subsumes(tc: &TestCase, pa: &PartialAssignment) -> bool {
    pa.picks().iter().all(|&p| tc.contains(p))
}

/// True iff no avoid constraint is fully contained in `tc`.
///
/// Must constraints are a suite-level property and are not checked here.
pub fn validate_case(sys: &FactorSystem, tc: &TestCase, cs: &ConstraintSet) -> Result<bool, DomainError> {
    tc.check(sys)?;
    Ok(!cs.avoid().iter().any(|a| subsumes(tc, a)))
}

/// Ordered rows over one shared factor system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestSuite {
    system: Arc<FactorSystem>,
    cases: Vec<TestCase>,
}

impl TestSuite {
    pub fn new(system: Arc<FactorSystem>, cases: Vec<TestCase>) -> Result<Self, DomainError> {
        for c in &cases {
            c.check(&system)?;
        }
        Ok(TestSuite { system, cases })
    }

    pub fn empty(system: Arc<FactorSystem>) -> Self {
        TestSuite { system, cases: Vec::new() }
    }

    pub fn system(&self) -> &Arc<FactorSystem> {
        &self.system
    }

    pub fn cases(&self) -> &[TestCase] {
        &self.cases
    }

    pub fn into_cases(self) -> Vec<TestCase> {
        self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn push(&mut self, tc: TestCase) -> Result<(), DomainError> {
        tc.check(&self.system)?;
        self.cases.push(tc);
        Ok(())
    }

    /// Whether this suite was built over `sys` (same instance or equal value).
    pub fn is_over(&self, sys: &FactorSystem) -> bool {
        std::ptr::eq(Arc::as_ptr(&self.system), sys) || *self.system == *sys
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn forbidden_row_is_invalid() {
        let (sys, cs) = five_g();
        let tc = case_by_names(&sys, ["QPSK", "200 MHz", "SU-MIMO", "1/2"]);
        assert!(!validate_case(&sys, &tc, &cs).unwrap());
        let tc9 = case_by_names(&sys, TABLE2[8]);
        assert!(validate_case(&sys, &tc9, &cs).unwrap());
    }

    #[test]
    fn empty_avoid_set_accepts_everything() {
        let (sys, _) = five_g();
        let tc = case_by_names(&sys, ["QPSK", "200 MHz", "SU-MIMO", "1/2"]);
        assert!(validate_case(&sys, &tc, &ConstraintSet::empty()).unwrap());
    }

    #[test]
    fn structural_error_is_not_invalidity() {
        let (sys, cs) = five_g();
        let bad = TestCase::from_levels_unchecked(vec![0, 9, 0, 0]);
        assert_eq!(
            validate_case(&sys, &bad, &cs),
            Err(DomainError::LevelOutOfRange { factor: 1, level: 9 })
        );
        let short = TestCase::from_levels_unchecked(vec![0, 0]);
        assert!(matches!(
            validate_case(&sys, &short, &cs),
            Err(DomainError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn subsumption_examples() {
        let (sys, cs) = five_g();
        let tc1 = case_by_names(&sys, TABLE2[0]);
        assert!(subsumes(&tc1, &cs.must()[0]));
        assert!(subsumes(&tc1, &PartialAssignment::empty()));
        let tc2 = case_by_names(&sys, TABLE2[1]);
        let qam256 = PartialAssignment::new([Pick::new(0, 3)]).unwrap();
        assert!(!subsumes(&tc2, &qam256));
        assert!(subsumes(&tc2, &tc2.as_partial()));
    }

    #[test]
    fn system_validation() {
        assert_eq!(FactorSystem::new(vec![]), Err(DomainError::NoFactors));
        assert!(matches!(
            FactorSystem::new(vec![Factor::new("A", Vec::<String>::new())]),
            Err(DomainError::EmptyFactor(_))
        ));
        assert!(matches!(
            FactorSystem::new(vec![Factor::new("A", ["x"]), Factor::new("A", ["y"])]),
            Err(DomainError::DuplicateFactor(_))
        ));
        assert!(matches!(
            FactorSystem::new(vec![Factor::new("A", ["x", "x"])]),
            Err(DomainError::DuplicateLevel { .. })
        ));
    }

    #[test]
    fn partial_assignment_conflicts_and_union() {
        assert_eq!(
            PartialAssignment::new([Pick::new(0, 0), Pick::new(0, 1)]),
            Err(DomainError::ConflictingPicks(0))
        );
        let a = PartialAssignment::new([Pick::new(0, 1)]).unwrap();
        let b = PartialAssignment::new([Pick::new(1, 2)]).unwrap();
        let c = PartialAssignment::new([Pick::new(0, 0)]).unwrap();
        assert_eq!(a.union(&b).unwrap().len(), 2);
        assert!(a.union(&c).is_none());
        assert!(a.is_subset_of(&a.union(&b).unwrap()));
    }

    #[test]
    fn constraint_set_dedups_and_rejects_empty_avoid() {
        let (sys, _) = five_g();
        let a = PartialAssignment::new([Pick::new(0, 0), Pick::new(1, 3)]).unwrap();
        let cs = ConstraintSet::new(&sys, vec![], vec![a.clone(), a.clone()]).unwrap();
        assert_eq!(cs.avoid().len(), 1);
        assert_eq!(
            ConstraintSet::new(&sys, vec![], vec![PartialAssignment::empty()]),
            Err(DomainError::EmptyAvoid)
        );
    }

    #[test]
    fn removing_avoid_never_invalidates() {
        let (sys, cs) = five_g();
        let relaxed = ConstraintSet::empty();
        for row in TABLE2 {
            let tc = case_by_names(&sys, row);
            if validate_case(&sys, &tc, &cs).unwrap() {
                assert!(validate_case(&sys, &tc, &relaxed).unwrap());
            }
        }
    }
}

//! Pure 0/1 integer programs: model construction, an exact reference
//! solver, an independent solution checker and LP-format export.
//!
//! Every formulation in this crate is binary with integer coefficients, so
//! nothing here supports continuous or general-integer variables.

mod lp;
mod reference;

use std::collections::HashMap;
use std::fmt;
use std::time::Duration;

use thiserror::Error;

pub use lp::write_lp;
pub use reference::ReferenceSolver;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    pub fn holds(self, lhs: i64, rhs: i64) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Eq => lhs == rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearConstraint {
    pub terms: Vec<(VarId, i64)>,
    pub relation: Relation,
    pub rhs: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Objective {
    pub sense: Sense,
    pub terms: Vec<(VarId, i64)>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MilpError {
    #[error("unknown solver backend `{0}`")]
    UnknownBackend(String),
    #[error("constraint {constraint} references undefined variable {var}")]
    UndefinedVar { constraint: usize, var: VarId },
    #[error("backend `{backend}` failed: {message}")]
    Backend { backend: String, message: String },
}

/// A binary program. Variables are added in order and keep their ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MilpModel {
    names: Vec<String>,
    constraints: Vec<LinearConstraint>,
    objective: Objective,
}

impl Default for MilpModel {
    fn default() -> Self {
        MilpModel::new(Sense::Maximize)
    }
}

impl MilpModel {
    pub fn new(sense: Sense) -> Self {
        MilpModel {
            names: Vec::new(),
            constraints: Vec::new(),
            objective: Objective { sense, terms: Vec::new() },
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> VarId {
        self.names.push(name.into());
        VarId(self.names.len() - 1)
    }

    pub fn add_constraint(&mut self, terms: Vec<(VarId, i64)>, relation: Relation, rhs: i64) -> usize {
        self.constraints.push(LinearConstraint { terms, relation, rhs });
        self.constraints.len() - 1
    }

    pub fn set_objective_terms(&mut self, terms: Vec<(VarId, i64)>) {
        self.objective.terms = terms;
    }

    pub fn add_objective_term(&mut self, var: VarId, coef: i64) {
        self.objective.terms.push((var, coef));
    }

    pub fn var_count(&self) -> usize {
        self.names.len()
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.names[v.0]
    }

    pub fn var_names(&self) -> &[String] {
        &self.names
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    /// Every referenced var exists.
    pub fn check(&self) -> Result<(), MilpError> {
        let n = self.names.len();
        for (ci, c) in self.constraints.iter().enumerate() {
            if let Some(&(var, _)) = c.terms.iter().find(|(v, _)| v.0 >= n) {
                return Err(MilpError::UndefinedVar { constraint: ci, var });
            }
        }
        if let Some(&(var, _)) = self.objective.terms.iter().find(|(v, _)| v.0 >= n) {
            return Err(MilpError::UndefinedVar {
                constraint: usize::MAX,
                var,
            });
        }
        Ok(())
    }

    pub fn evaluate_objective(&self, assignment: &[bool]) -> i64 {
        self.objective.terms.iter().map(|&(v, c)| if assignment[v.0] { c } else { 0 }).sum()
    }

    pub fn constraint_holds(&self, c: &LinearConstraint, assignment: &[bool]) -> bool {
        let lhs: i64 = c.terms.iter().map(|&(v, a)| if assignment[v.0] { a } else { 0 }).sum();
        c.relation.holds(lhs, c.rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    TimedOut,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MilpSolution {
    pub status: SolveStatus,
    /// Present for `Optimal` and `Feasible`.
    pub assignment: Option<Vec<bool>>,
    pub objective_value: i64,
}

impl MilpSolution {
    pub fn value(&self, v: VarId) -> Option<bool> {
        self.assignment.as_ref().map(|a| a[v.0])
    }

    pub fn has_assignment(&self) -> bool {
        self.assignment.is_some()
    }
}

/// Recomputes every constraint and the objective from scratch.
pub fn verify_solution(model: &MilpModel, sol: &MilpSolution) -> bool {
    let Some(a) = sol.assignment.as_ref() else {
        return false;
    };
    a.len() == model.var_count()
        && model.constraints().iter().all(|c| model.constraint_holds(c, a))
        && model.evaluate_objective(a) == sol.objective_value
}

/// The seam every solver sits behind: one model in, one solution out.
pub trait MilpBackend: Send + Sync {
    fn id(&self) -> &str;
    fn solve(&self, model: &MilpModel, time_limit: Duration) -> Result<MilpSolution, MilpError>;
}

/// Backends selectable by id.
pub struct BackendRegistry {
    backends: HashMap<String, Box<dyn MilpBackend>>,
}

impl Default for BackendRegistry {
    fn default() -> Self {
        let mut r = BackendRegistry { backends: HashMap::new() };
        r.register(Box::new(ReferenceSolver));
        r
    }
}

impl BackendRegistry {
    pub fn register(&mut self, backend: Box<dyn MilpBackend>) {
        self.backends.insert(backend.id().to_string(), backend);
    }

    pub fn get(&self, id: &str) -> Result<&dyn MilpBackend, MilpError> {
        self.backends
            .get(id)
            .map(|b| b.as_ref())
            .ok_or_else(|| MilpError::UnknownBackend(id.to_string()))
    }

    pub fn ids(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.backends.keys().map(String::as_str).collect();
        v.sort();
        v
    }
}

pub const REFERENCE_BACKEND: &str = "reference";

/// Solves with a backend from the default registry.
pub fn solve(model: &MilpModel, time_limit: Duration, backend: &str) -> Result<MilpSolution, MilpError> {
    let registry = BackendRegistry::default();
    registry.get(backend)?.solve(model, time_limit)
}

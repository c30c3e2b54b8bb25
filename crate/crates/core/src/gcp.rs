//! Grouping must-include constraints so each group fits in one test case.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::domain::{ConstraintSet, FactorSystem, PartialAssignment};
use crate::interactions::Extender;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GcpError {
    #[error("must constraint {0} has no valid completion")]
    Unsatisfiable(usize),
}

/// Vertices are must-constraint indices; edges join incompatible pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncompatibilityGraph {
    pub vertices: Vec<usize>,
    pub edges: BTreeSet<(usize, usize)>,
}

impl IncompatibilityGraph {
    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }
}

/// Ordered groups of must-constraint indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Partition {
    pub groups: Vec<Vec<usize>>,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Union of the picks of one group.
    pub fn fixings(&self, group: usize, must: &[PartialAssignment]) -> PartialAssignment {
        union_of(self.groups[group].iter().map(|&k| &must[k])).expect("groups are conflict-free")
    }
}

fn union_of<'a>(parts: impl IntoIterator<Item = &'a PartialAssignment>) -> Option<PartialAssignment> {
    let mut acc = PartialAssignment::empty();
    for p in parts {
        acc = acc.union(p)?;
    }
    Some(acc)
}

/// True when `a` and `b` pick different levels of one factor, or when their
/// union has no constraint-valid completion.
pub fn incompatible(sys: &FactorSystem, a: &PartialAssignment, b: &PartialAssignment, cs: &ConstraintSet) -> bool {
    match a.union(b) {
        None => true,
        Some(u) => !Extender::new(sys, cs).is_extendable(&u),
    }
}

pub fn build_graph(sys: &FactorSystem, must: &[PartialAssignment], cs: &ConstraintSet) -> IncompatibilityGraph {
    let ext = Extender::new(sys, cs);
    let mut edges = BTreeSet::new();
    for i in 0..must.len() {
        for j in i + 1..must.len() {
            let bad = match must[i].union(&must[j]) {
                None => true,
                Some(u) => !ext.is_extendable(&u),
            };
            if bad {
                edges.insert((i, j));
            }
        }
    }
    IncompatibilityGraph {
        vertices: (0..must.len()).collect(),
        edges,
    }
}

/// Degree-descending greedy sweep. A vertex joins the open group when it is
/// adjacent to no member *and* the union of the whole group stays
/// extendable. Degree ties go to the lower index.
pub fn partition(
    graph: &IncompatibilityGraph,
    sys: &FactorSystem,
    must: &[PartialAssignment],
    cs: &ConstraintSet,
) -> Result<Partition, GcpError> {
    let ext = Extender::new(sys, cs);
    let mut order = graph.vertices.clone();
    order.sort_by_key(|&v| (std::cmp::Reverse(graph.degree(v)), v));

    let mut groups = Vec::new();
    let mut remaining = order;
    while !remaining.is_empty() {
        let opener = remaining.remove(0);
        if !ext.is_extendable(&must[opener]) {
            return Err(GcpError::Unsatisfiable(opener));
        }
        let mut group = vec![opener];
        let mut picks = must[opener].clone();
        remaining.retain(|&c| {
            if group.iter().any(|&g| graph.adjacent(g, c)) {
                return true;
            }
            match picks.union(&must[c]) {
                Some(u) if ext.is_extendable(&u) => {
                    picks = u;
                    group.push(c);
                    false
                }
                _ => true,
            }
        });
        groups.push(group);
    }
    Ok(Partition { groups })
}

//! Exhaustive oracles that share no code with the library's algorithms.
//! Systems are plain level-count vectors; tuples are `(factor, level)` lists.

#![allow(dead_code)]

use std::collections::BTreeSet;

use pairgen::milp::{MilpModel, Relation, Sense};
use pairgen::{ConstraintSet, FactorSystem, PartialAssignment, Pick, TestSuite};

pub type Tuple = Vec<(usize, usize)>;

/// Every total assignment, in lexicographic order.
pub fn all_rows(levels: &[usize]) -> Vec<Vec<usize>> {
    let mut rows = vec![Vec::new()];
    for &l in levels {
        let mut next = Vec::with_capacity(rows.len() * l);
        for r in &rows {
            for a in 0..l {
                let mut q = r.clone();
                q.push(a);
                next.push(q);
            }
        }
        rows = next;
    }
    rows
}

pub fn contains(row: &[usize], t: &[(usize, usize)]) -> bool {
    t.iter().all(|&(f, l)| row[f] == l)
}

pub fn valid_rows(levels: &[usize], avoid: &[Tuple]) -> Vec<Vec<usize>> {
    all_rows(levels)
        .into_iter()
        .filter(|r| !avoid.iter().any(|a| contains(r, a)))
        .collect()
}

/// The pairs `(i, a, j, b)` with `i < j` found in at least one valid row.
pub fn achievable_pairs(levels: &[usize], avoid: &[Tuple]) -> BTreeSet<(usize, usize, usize, usize)> {
    let mut out = BTreeSet::new();
    for r in valid_rows(levels, avoid) {
        out.extend(row_pairs(&r));
    }
    out
}

pub fn row_pairs(r: &[usize]) -> Vec<(usize, usize, usize, usize)> {
    let mut out = Vec::new();
    for i in 0..r.len() {
        for j in i + 1..r.len() {
            out.push((i, r[i], j, r[j]));
        }
    }
    out
}

/// Checks coverage, must inclusion and avoid cleanliness of `rows`.
pub fn verify_rows(levels: &[usize], avoid: &[Tuple], must: &[Tuple], rows: &[Vec<usize>]) -> Result<(), String> {
    for (k, r) in rows.iter().enumerate() {
        if r.len() != levels.len() || r.iter().zip(levels).any(|(&a, &l)| a >= l) {
            return Err(format!("row {k} is malformed"));
        }
        if let Some(a) = avoid.iter().find(|a| contains(r, a)) {
            return Err(format!("row {k} contains forbidden {a:?}"));
        }
    }
    for m in must {
        if !rows.iter().any(|r| contains(r, m)) {
            return Err(format!("must {m:?} not included"));
        }
    }
    let mut need = achievable_pairs(levels, avoid);
    for r in rows {
        for p in row_pairs(r) {
            need.remove(&p);
        }
    }
    match need.iter().next() {
        None => Ok(()),
        Some(p) => Err(format!("{} pairs uncovered, e.g. {p:?}", need.len())),
    }
}

/// Size of the smallest set of valid rows that covers every achievable pair
/// and includes every must tuple, by depth-first branching on the first
/// unmet requirement.
pub fn brute_min_suite(levels: &[usize], avoid: &[Tuple], must: &[Tuple]) -> usize {
    let rows = valid_rows(levels, avoid);
    let pairs: Vec<_> = achievable_pairs(levels, avoid).into_iter().collect();
    // requirement -> rows meeting it
    let mut reqs: Vec<Vec<usize>> = pairs
        .iter()
        .map(|&(i, a, j, b)| (0..rows.len()).filter(|&r| rows[r][i] == a && rows[r][j] == b).collect())
        .collect();
    for m in must {
        reqs.push((0..rows.len()).filter(|&r| contains(&rows[r], m)).collect());
    }
    if reqs.is_empty() {
        return 0;
    }
    let meets: Vec<Vec<bool>> = (0..rows.len()).map(|r| reqs.iter().map(|q| q.contains(&r)).collect()).collect();

    fn search(reqs: &[Vec<usize>], meets: &[Vec<bool>], met: &mut Vec<u32>, depth: usize, best: &mut usize) {
        if depth >= *best {
            return;
        }
        let Some(q) = (0..reqs.len()).find(|&q| met[q] == 0) else {
            *best = depth;
            return;
        };
        if depth + 1 >= *best {
            return;
        }
        for &r in &reqs[q] {
            for (k, m) in meets[r].iter().enumerate() {
                if *m {
                    met[k] += 1;
                }
            }
            search(reqs, meets, met, depth + 1, best);
            for (k, m) in meets[r].iter().enumerate() {
                if *m {
                    met[k] -= 1;
                }
            }
        }
    }

    let mut best = rows.len() + 1;
    let mut met = vec![0u32; reqs.len()];
    search(&reqs, &meets, &mut met, 0, &mut best);
    best
}

/// Exhaustive optimum of a binary program: `None` when infeasible.
pub fn enumerate_milp(model: &MilpModel) -> Option<i64> {
    let n = model.var_count();
    assert!(n <= 24, "too many variables to enumerate");
    let obj = &model.objective().terms;
    let mut best: Option<i64> = None;
    let mut x = vec![false; n];
    for mask in 0u64..(1u64 << n) {
        for (v, slot) in x.iter_mut().enumerate() {
            *slot = mask >> v & 1 == 1;
        }
        let feasible = model.constraints().iter().all(|c| {
            let lhs: i64 = c.terms.iter().filter(|t| x[t.0 .0]).map(|t| t.1).sum();
            match c.relation {
                Relation::Le => lhs <= c.rhs,
                Relation::Ge => lhs >= c.rhs,
                Relation::Eq => lhs == c.rhs,
            }
        });
        if !feasible {
            continue;
        }
        let val: i64 = obj.iter().filter(|t| x[t.0 .0]).map(|t| t.1).sum();
        best = Some(match (best, model.objective().sense) {
            (None, _) => val,
            (Some(b), Sense::Maximize) => b.max(val),
            (Some(b), Sense::Minimize) => b.min(val),
        });
    }
    best
}

pub fn to_pa(t: &[(usize, usize)]) -> PartialAssignment {
    PartialAssignment::new(t.iter().map(|&(f, l)| Pick::new(f, l))).expect("conflict-free tuple")
}

pub fn constraint_set(sys: &FactorSystem, avoid: &[Tuple], must: &[Tuple]) -> ConstraintSet {
    ConstraintSet::new(
        sys,
        must.iter().map(|t| to_pa(t)).collect(),
        avoid.iter().map(|t| to_pa(t)).collect(),
    )
    .expect("valid tuples")
}

pub fn rows_of(ts: &TestSuite) -> Vec<Vec<usize>> {
    ts.cases().iter().map(|c| c.levels().to_vec()).collect()
}

pub fn tuples_of(list: &[PartialAssignment]) -> Vec<Tuple> {
    list.iter()
        .map(|pa| pa.picks().iter().map(|p| (p.factor, p.level)).collect())
        .collect()
}

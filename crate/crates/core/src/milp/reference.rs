//! Exact depth-first branch-and-bound for binary programs.
//!
//! Branching follows model variable order. The value tried first is the one
//! that improves the objective; ties go to 0. Each node runs activity-based
//! propagation to a fixpoint. The optimistic bound is the fixed objective
//! plus the improving coefficients of free variables, tightened in two
//! ways:
//!
//! * improving variables that pairwise exclude each other (via two-variable
//!   implications into set-packing rows) are grouped into cliques, and each
//!   clique contributes only its best free member;
//! * unsatisfied set-covering rows made only of worsening variables must
//!   pay for at least one member, summed over a disjoint selection of rows.

use std::time::{Duration, Instant};

use super::{MilpBackend, MilpError, MilpModel, MilpSolution, Relation, Sense, SolveStatus};

#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceSolver;

impl MilpBackend for ReferenceSolver {
    fn id(&self) -> &str {
        super::REFERENCE_BACKEND
    }

    fn solve(&self, model: &MilpModel, time_limit: Duration) -> Result<MilpSolution, MilpError> {
        model.check()?;
        let mut search = Search::new(model, time_limit);
        let status = search.run();
        let (status, assignment) = match (status, search.incumbent.take()) {
            (Outcome::Complete, Some((_, a))) => (SolveStatus::Optimal, Some(a)),
            (Outcome::Complete, None) => (SolveStatus::Infeasible, None),
            (Outcome::OutOfTime, Some((_, a))) => (SolveStatus::Feasible, Some(a)),
            (Outcome::OutOfTime, None) => (SolveStatus::TimedOut, None),
        };
        let objective_value = assignment.as_ref().map_or(0, |a| model.evaluate_objective(a));
        Ok(MilpSolution {
            status,
            assignment,
            objective_value,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Complete,
    OutOfTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Flow {
    Continue,
    Stop,
}

const FREE: i8 = -1;

struct Row {
    terms: Vec<(usize, i64)>,
    upper: Option<i64>,
    lower: Option<i64>,
    max_abs: i64,
}

struct Search {
    n: usize,
    // objective in maximization form
    obj: Vec<i64>,
    rows: Vec<Row>,
    occurs: Vec<Vec<(usize, i64)>>,
    min_act: Vec<i64>,
    max_act: Vec<i64>,
    val: Vec<i8>,
    trail: Vec<usize>,
    fixed_obj: i64,
    queue: Vec<usize>,
    queued: Vec<bool>,
    cliques: Vec<Vec<usize>>,
    covers: Vec<Vec<usize>>,
    mark: Vec<u32>,
    epoch: u32,
    incumbent: Option<(i64, Vec<bool>)>,
    root_bound: i64,
    started: Instant,
    limit: Duration,
    nodes: u64,
    timed_out: bool,
}

impl Search {
    fn new(model: &MilpModel, limit: Duration) -> Self {
        let n = model.var_count();
        let sign = match model.objective().sense {
            Sense::Maximize => 1,
            Sense::Minimize => -1,
        };
        let mut obj = vec![0i64; n];
        for &(v, c) in &model.objective().terms {
            obj[v.0] += sign * c;
        }

        let mut rows = Vec::with_capacity(model.constraints().len());
        for c in model.constraints() {
            let mut merged: Vec<(usize, i64)> = Vec::with_capacity(c.terms.len());
            let mut sorted: Vec<(usize, i64)> = c.terms.iter().map(|&(v, a)| (v.0, a)).collect();
            sorted.sort_by_key(|t| t.0);
            for (v, a) in sorted {
                match merged.last_mut() {
                    Some(last) if last.0 == v => last.1 += a,
                    _ => merged.push((v, a)),
                }
            }
            merged.retain(|t| t.1 != 0);
            let (upper, lower) = match c.relation {
                Relation::Le => (Some(c.rhs), None),
                Relation::Ge => (None, Some(c.rhs)),
                Relation::Eq => (Some(c.rhs), Some(c.rhs)),
            };
            let max_abs = merged.iter().map(|t| t.1.abs()).max().unwrap_or(0);
            rows.push(Row {
                terms: merged,
                upper,
                lower,
                max_abs,
            });
        }

        let mut occurs = vec![Vec::new(); n];
        let mut min_act = vec![0; rows.len()];
        let mut max_act = vec![0; rows.len()];
        for (r, row) in rows.iter().enumerate() {
            for &(v, a) in &row.terms {
                occurs[v].push((r, a));
                min_act[r] += a.min(0);
                max_act[r] += a.max(0);
            }
        }

        let cliques = build_cliques(n, &obj, &rows);
        let covers = build_covers(&obj, &rows);

        Search {
            n,
            obj,
            queued: vec![false; rows.len()],
            rows,
            occurs,
            min_act,
            max_act,
            val: vec![FREE; n],
            trail: Vec::with_capacity(n),
            fixed_obj: 0,
            queue: Vec::new(),
            cliques,
            covers,
            mark: vec![0; n],
            epoch: 0,
            incumbent: None,
            root_bound: i64::MAX,
            started: Instant::now(),
            limit,
            nodes: 0,
            timed_out: false,
        }
    }

    fn run(&mut self) -> Outcome {
        for r in 0..self.rows.len() {
            self.enqueue(r);
        }
        if self.propagate() {
            self.root_bound = self.bound();
            self.dfs(0);
        }
        if self.timed_out {
            Outcome::OutOfTime
        } else {
            Outcome::Complete
        }
    }

    fn enqueue(&mut self, r: usize) {
        if !self.queued[r] {
            self.queued[r] = true;
            self.queue.push(r);
        }
    }

    fn fix(&mut self, v: usize, x: bool) {
        debug_assert_eq!(self.val[v], FREE);
        self.val[v] = x as i8;
        self.trail.push(v);
        if x {
            self.fixed_obj += self.obj[v];
        }
        for k in 0..self.occurs[v].len() {
            let (r, a) = self.occurs[v][k];
            let ax = if x { a } else { 0 };
            self.min_act[r] += ax - a.min(0);
            self.max_act[r] += ax - a.max(0);
            self.enqueue(r);
        }
    }

    fn undo_to(&mut self, len: usize) {
        while self.trail.len() > len {
            let v = self.trail.pop().expect("trail non-empty");
            let x = self.val[v] == 1;
            self.val[v] = FREE;
            if x {
                self.fixed_obj -= self.obj[v];
            }
            for &(r, a) in &self.occurs[v] {
                let ax = if x { a } else { 0 };
                self.min_act[r] -= ax - a.min(0);
                self.max_act[r] -= ax - a.max(0);
            }
        }
    }

    fn clear_queue(&mut self) {
        for r in self.queue.drain(..) {
            self.queued[r] = false;
        }
    }

    /// Runs to fixpoint; false on conflict.
    fn propagate(&mut self) -> bool {
        while let Some(r) = self.queue.pop() {
            self.queued[r] = false;
            let row = &self.rows[r];
            let up_slack = row.upper.map(|u| u - self.min_act[r]);
            let lo_slack = row.lower.map(|l| self.max_act[r] - l);
            if up_slack.is_some_and(|s| s < 0) || lo_slack.is_some_and(|s| s < 0) {
                self.clear_queue();
                return false;
            }
            let tight_up = up_slack.is_some_and(|s| s < row.max_abs);
            let tight_lo = lo_slack.is_some_and(|s| s < row.max_abs);
            if !tight_up && !tight_lo {
                continue;
            }
            let mut forced: Vec<(usize, bool)> = Vec::new();
            for &(v, a) in &row.terms {
                if self.val[v] != FREE {
                    continue;
                }
                if let Some(s) = up_slack {
                    if a > s {
                        forced.push((v, false));
                        continue;
                    }
                    if -a > s {
                        forced.push((v, true));
                        continue;
                    }
                }
                if let Some(s) = lo_slack {
                    if a > s {
                        forced.push((v, true));
                    } else if -a > s {
                        forced.push((v, false));
                    }
                }
            }
            for (v, x) in forced {
                if self.val[v] == FREE {
                    self.fix(v, x);
                } else if (self.val[v] == 1) != x {
                    self.clear_queue();
                    return false;
                }
            }
        }
        true
    }

    fn bound(&mut self) -> i64 {
        let mut b = self.fixed_obj;
        for clique in &self.cliques {
            let mut best = 0;
            for &v in clique {
                match self.val[v] {
                    1 => {
                        best = 0;
                        break;
                    }
                    FREE => {
                        best = self.obj[v];
                        break;
                    }
                    _ => {}
                }
            }
            b += best;
        }
        if !self.covers.is_empty() {
            self.epoch = self.epoch.wrapping_add(1);
            if self.epoch == 0 {
                self.mark.iter_mut().for_each(|m| *m = 0);
                self.epoch = 1;
            }
            'rows: for row in &self.covers {
                let mut cheapest = i64::MAX;
                for &v in row {
                    match self.val[v] {
                        1 => continue 'rows,
                        FREE => {
                            if self.mark[v] == self.epoch {
                                continue 'rows;
                            }
                            cheapest = cheapest.min(-self.obj[v]);
                        }
                        _ => {}
                    }
                }
                if cheapest == i64::MAX || cheapest <= 0 {
                    continue;
                }
                for &v in row {
                    if self.val[v] == FREE {
                        self.mark[v] = self.epoch;
                    }
                }
                b -= cheapest;
            }
        }
        b
    }

    fn dfs(&mut self, cursor: usize) -> Flow {
        self.nodes += 1;
        if self.nodes.is_multiple_of(256) && self.started.elapsed() >= self.limit {
            self.timed_out = true;
            return Flow::Stop;
        }
        let bound = self.bound();
        if let Some((inc, _)) = &self.incumbent {
            if bound <= *inc {
                return Flow::Continue;
            }
        }
        let Some(v) = (cursor..self.n).find(|&v| self.val[v] == FREE) else {
            let a: Vec<bool> = self.val.iter().map(|&x| x == 1).collect();
            self.incumbent = Some((self.fixed_obj, a));
            return if self.fixed_obj >= self.root_bound {
                Flow::Stop
            } else {
                Flow::Continue
            };
        };
        let first = self.obj[v] > 0;
        for x in [first, !first] {
            let mark = self.trail.len();
            self.fix(v, x);
            if self.propagate() && self.dfs(v + 1) == Flow::Stop {
                self.undo_to(mark);
                return Flow::Stop;
            }
            self.undo_to(mark);
        }
        Flow::Continue
    }
}

/// Greedy clique partition of the improving variables.
fn build_cliques(n: usize, obj: &[i64], rows: &[Row]) -> Vec<Vec<usize>> {
    let positive: Vec<usize> = (0..n).filter(|&v| obj[v] > 0).collect();
    if positive.is_empty() {
        return Vec::new();
    }

    // Packing groups: sets of vars of which at most one can be 1.
    let mut groups: Vec<Vec<usize>> = Vec::new();
    // implied[v]: vars forced to 1 when v is 1
    let mut implied: Vec<Vec<usize>> = vec![Vec::new(); n];
    for row in rows {
        let unit = row.terms.iter().all(|t| t.1 == 1);
        if unit && row.upper == Some(1) && row.terms.len() >= 2 {
            groups.push(row.terms.iter().map(|t| t.0).collect());
        }
        if row.terms.len() == 2 {
            let (v, a) = row.terms[0];
            let (w, b) = row.terms[1];
            let ok = |x: i64, y: i64| {
                let act = a * x + b * y;
                row.upper.is_none_or(|u| act <= u) && row.lower.is_none_or(|l| act >= l)
            };
            if !ok(1, 0) {
                implied[v].push(w);
            }
            if !ok(0, 1) {
                implied[w].push(v);
            }
            if !ok(1, 1) && !(unit && row.upper == Some(1)) {
                groups.push(vec![v, w]);
            }
        }
    }
    if groups.is_empty() {
        return positive.into_iter().map(|v| vec![v]).collect();
    }
    let mut member_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (g, vars) in groups.iter().enumerate() {
        for &v in vars {
            member_of[v].push(g);
        }
    }
    // literals[v]: (group, member) pairs reachable from v = 1, sorted
    let literals: Vec<Vec<(usize, usize)>> = (0..n)
        .map(|v| {
            if obj[v] <= 0 {
                return Vec::new();
            }
            let mut lits = Vec::new();
            for &w in std::iter::once(&v).chain(implied[v].iter()) {
                for &g in &member_of[w] {
                    lits.push((g, w));
                }
            }
            lits.sort_unstable();
            lits.dedup();
            lits
        })
        .collect();
    let conflict = |x: usize, y: usize| {
        let (lx, ly) = (&literals[x], &literals[y]);
        let (mut i, mut j) = (0, 0);
        while i < lx.len() && j < ly.len() {
            match lx[i].0.cmp(&ly[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    let g = lx[i].0;
                    let xs: Vec<usize> = lx[i..].iter().take_while(|l| l.0 == g).map(|l| l.1).collect();
                    let ys: Vec<usize> = ly[j..].iter().take_while(|l| l.0 == g).map(|l| l.1).collect();
                    if xs.iter().any(|a| ys.iter().any(|b| a != b)) {
                        return true;
                    }
                    i += xs.len();
                    j += ys.len();
                }
            }
        }
        false
    };

    let mut order = positive;
    order.sort_by_key(|&v| (std::cmp::Reverse(obj[v]), v));
    let mut cliques: Vec<Vec<usize>> = Vec::new();
    for v in order {
        let slot = cliques.iter().position(|c| c.iter().all(|&u| conflict(u, v)));
        match slot {
            Some(k) => cliques[k].push(v),
            None => cliques.push(vec![v]),
        }
    }
    // members already sorted by coefficient descending
    cliques
}

/// Unit set-covering rows over worsening variables, shortest first.
fn build_covers(obj: &[i64], rows: &[Row]) -> Vec<Vec<usize>> {
    let mut covers: Vec<Vec<usize>> = rows
        .iter()
        .filter(|r| r.lower == Some(1) && r.terms.iter().all(|t| t.1 == 1))
        .filter(|r| r.terms.iter().all(|t| obj[t.0] < 0))
        .map(|r| r.terms.iter().map(|t| t.0).collect())
        .collect();
    covers.sort_by_key(Vec::len);
    covers.dedup();
    covers
}

//! LP-format export (the CPLEX/Gurobi/HiGHS-readable subset).
//!
//! ```text
//! \ <comment>
//! Maximize | Minimize
//!  obj: <term>*
//! Subject To
//!  c<k>: <term>+ (<= | >= | =) <integer>
//! Binary
//!  <name>
//! End
//! ```
//!
//! A term is ` + <coef> <name>` or ` - <coef> <name>`. Variable names are
//! the model names with every character outside `[A-Za-z0-9_.]` replaced by
//! `_`; a name starting with a digit or `.` gets an `_` prefix. One
//! constraint per line, in model order.

use std::fmt::Write;

use super::{MilpModel, Relation, Sense, VarId};

fn lp_name(raw: &str) -> String {
    let mut s: String = raw
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        s.insert(0, '_');
    }
    s
}

fn write_terms(out: &mut String, names: &[String], terms: &[(VarId, i64)]) {
    if terms.is_empty() {
        if let Some(first) = names.first() {
            let _ = write!(out, " 0 {first}");
        }
        return;
    }
    for &(v, c) in terms {
        let sign = if c < 0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", c.unsigned_abs(), names[v.0]);
    }
}

/// Renders `model` in LP format.
pub fn write_lp(model: &MilpModel) -> String {
    let names: Vec<String> = model.var_names().iter().map(|n| lp_name(n)).collect();
    let mut out = String::new();
    out.push_str("\\ binary program exported by pairgen\n");
    out.push_str(match model.objective().sense {
        Sense::Maximize => "Maximize\n",
        Sense::Minimize => "Minimize\n",
    });
    out.push_str(" obj:");
    write_terms(&mut out, &names, &model.objective().terms);
    out.push('\n');
    out.push_str("Subject To\n");
    for (k, c) in model.constraints().iter().enumerate() {
        let _ = write!(out, " c{k}:");
        write_terms(&mut out, &names, &c.terms);
        let rel = match c.relation {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        };
        let _ = writeln!(out, " {rel} {}", c.rhs);
    }
    out.push_str("Binary\n");
    for n in &names {
        let _ = writeln!(out, " {n}");
    }
    out.push_str("End\n");
    out
}

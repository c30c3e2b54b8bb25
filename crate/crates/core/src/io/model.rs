//! The model-file grammar.
//!
//! ```text
//! # comment
//! Modulation: QPSK, 16-QAM, 64-QAM, 256-QAM
//! Bandwidth: 20 MHz, 200 MHz
//! AVOID: Modulation=QPSK, Bandwidth=200 MHz
//! MUST: Modulation=256-QAM
//! ```
//!
//! One directive per line. Blank lines and lines whose first non-blank
//! character is `#` are skipped. Tokens are trimmed. A factor line splits at
//! its first `:`; level names may not contain `,` or `=`. Constraint lines
//! may refer to factors declared anywhere in the file.

use std::collections::HashMap;

use super::IoError;
use crate::domain::{ConstraintSet, Factor, FactorSystem, PartialAssignment, Pick};

const AVOID: &str = "AVOID";
const MUST: &str = "MUST";

/// A parsed model with the source line of every declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelFile {
    pub system: FactorSystem,
    pub constraints: ConstraintSet,
    pub factor_lines: Vec<usize>,
    pub avoid_lines: Vec<usize>,
    pub must_lines: Vec<usize>,
}

fn err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_model(text: &str) -> Result<(FactorSystem, ConstraintSet), IoError> {
    parse_model_file(text).map(|m| (m.system, m.constraints))
}

pub fn parse_model_file(text: &str) -> Result<ModelFile, IoError> {
    let mut factors: Vec<Factor> = Vec::new();
    let mut factor_lines = Vec::new();
    let mut raw_avoid: Vec<(usize, &str)> = Vec::new();
    let mut raw_must: Vec<(usize, &str)> = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let Some((head, body)) = t.split_once(':') else {
            return Err(err(line, "expected `Name: levels`, `AVOID: ...` or `MUST: ...`"));
        };
        let head = head.trim();
        match head {
            AVOID => raw_avoid.push((line, body)),
            MUST => raw_must.push((line, body)),
            "" => return Err(err(line, "missing factor name")),
            name => {
                if name.contains('=') || name.contains(',') {
                    return Err(err(line, format!("factor name `{name}` contains `=` or `,`")));
                }
                if factors.iter().any(|f| f.name == name) {
                    return Err(err(line, format!("duplicate factor `{name}`")));
                }
                let levels: Vec<&str> = body.split(',').map(str::trim).collect();
                if levels.iter().all(|l| l.is_empty()) {
                    return Err(err(line, format!("factor `{name}` has no levels")));
                }
                if levels.iter().any(|l| l.is_empty()) {
                    return Err(err(line, format!("factor `{name}` has an empty level name")));
                }
                if let Some(bad) = levels.iter().find(|l| l.contains('=')) {
                    return Err(err(line, format!("level `{bad}` contains `=`")));
                }
                for (a, l) in levels.iter().enumerate() {
                    if levels[..a].contains(l) {
                        return Err(err(line, format!("factor `{name}` declares level `{l}` twice")));
                    }
                }
                factors.push(Factor::new(name, levels));
                factor_lines.push(line);
            }
        }
    }
    if factors.is_empty() {
        return Err(err(text.lines().count().max(1), "model declares no factors"));
    }
    let system = FactorSystem::new(factors).map_err(|e| err(factor_lines[0], e.to_string()))?;

    let index: HashMap<&str, usize> = system.factors().iter().enumerate().map(|(i, f)| (f.name.as_str(), i)).collect();
    let tuple = |line: usize, body: &str| -> Result<PartialAssignment, IoError> {
        let mut picks = Vec::new();
        for item in body.split(',') {
            let item = item.trim();
            let Some((f, l)) = item.split_once('=') else {
                return Err(err(line, format!("expected `Factor=Level`, got `{item}`")));
            };
            let (f, l) = (f.trim(), l.trim());
            let &fi = index.get(f).ok_or_else(|| err(line, format!("unknown factor `{f}`")))?;
            let li = system
                .level_index(fi, l)
                .ok_or_else(|| err(line, format!("factor `{f}` has no level `{l}`")))?;
            picks.push(Pick::new(fi, li));
        }
        PartialAssignment::new(picks).map_err(|_| err(line, "tuple assigns one factor two different levels"))
    };

    let mut avoid = Vec::with_capacity(raw_avoid.len());
    for &(line, body) in &raw_avoid {
        avoid.push(tuple(line, body)?);
    }
    let mut must = Vec::with_capacity(raw_must.len());
    for &(line, body) in &raw_must {
        let m = tuple(line, body)?;
        if let Some(a) = avoid.iter().position(|a| a.is_subset_of(&m)) {
            return Err(err(
                line,
                format!("must tuple contains the forbidden tuple on line {}", raw_avoid[a].0),
            ));
        }
        must.push(m);
    }
    let constraints = ConstraintSet::new(&system, must, avoid).map_err(|e| err(0, e.to_string()))?;
    Ok(ModelFile {
        system,
        constraints,
        factor_lines,
        avoid_lines: raw_avoid.iter().map(|r| r.0).collect(),
        must_lines: raw_must.iter().map(|r| r.0).collect(),
    })
}

fn check_token(tok: &str, what: &str, extra: &[char]) -> Result<(), IoError> {
    let bad = tok.is_empty() || tok.trim() != tok || tok.contains([',', '=', '\n', '\r']) || tok.contains(extra) || tok.starts_with('#');
    if bad {
        Err(IoError::Unrepresentable(format!("{what} `{tok}`")))
    } else {
        Ok(())
    }
}

/// Writes `sys` and `cs` in the model grammar; `parse_model` reads it back
/// to equal values.
pub fn emit_model(sys: &FactorSystem, cs: &ConstraintSet) -> Result<String, IoError> {
    let mut out = String::new();
    for f in sys.factors() {
        check_token(&f.name, "factor name", &[':'])?;
        if f.name == AVOID || f.name == MUST {
            return Err(IoError::Unrepresentable(format!("factor name `{}` is a keyword", f.name)));
        }
        for l in &f.levels {
            check_token(l, "level name", &[])?;
        }
        out.push_str(&format!("{}: {}\n", f.name, f.levels.join(", ")));
    }
    let render = |pa: &PartialAssignment| {
        pa.picks()
            .iter()
            .map(|p| format!("{}={}", sys.factor(p.factor).name, sys.factor(p.factor).levels[p.level]))
            .collect::<Vec<_>>()
            .join(", ")
    };
    for a in cs.avoid() {
        out.push_str(&format!("{AVOID}: {}\n", render(a)));
    }
    for m in cs.must() {
        if m.is_empty() {
            return Err(IoError::Unrepresentable("empty must tuple".into()));
        }
        out.push_str(&format!("{MUST}: {}\n", render(m)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::fixtures::five_g;

    const FIVE_G: &str = "\
# 5G configuration
Modulation: QPSK, 16-QAM, 64-QAM, 256-QAM
Bandwidth: 20 MHz, 50 MHz, 100 MHz, 200 MHz
MIMO Mode: SU-MIMO, MU-MIMO, Massive MIMO, No MIMO
Coding Rate: 1/3, 1/2, 3/4, 5/6

AVOID: Modulation=QPSK, Bandwidth=200 MHz
MUST: Modulation=256-QAM, Bandwidth=200 MHz, MIMO Mode=MU-MIMO
";

    fn line_of(e: IoError) -> usize {
        match e {
            IoError::Parse { line, .. } => line,
            other => panic!("not a parse error: {other}"),
        }
    }

    #[test]
    fn five_g_model() {
        let m = parse_model_file(FIVE_G).unwrap();
        assert_eq!(m.system.factor_count(), 4);
        assert!((0..4).all(|i| m.system.levels(i) == 4));
        assert_eq!((m.constraints.avoid().len(), m.constraints.must().len()), (1, 1));
        assert_eq!(m.factor_lines, vec![2, 3, 4, 5]);
        assert_eq!((m.avoid_lines.clone(), m.must_lines.clone()), (vec![7], vec![8]));
        let (sys, cs) = five_g();
        assert_eq!(m.constraints, cs);
        assert_eq!(m.system, *sys);
    }

    #[test]
    fn single_factor() {
        let (sys, cs) = parse_model("A: x, y").unwrap();
        assert_eq!((sys.factor_count(), sys.levels(0)), (1, 2));
        assert_eq!(cs, ConstraintSet::empty());
    }

    #[test]
    fn errors_carry_lines() {
        assert_eq!(line_of(parse_model("A: x, y\nAVOID: A=z").unwrap_err()), 2);
        assert_eq!(line_of(parse_model("A: x\n\nA: y").unwrap_err()), 3);
        assert_eq!(line_of(parse_model("A: x\nB:").unwrap_err()), 2);
        assert_eq!(line_of(parse_model("A: x, y\nB: u\nMUST: A=x, A=y").unwrap_err()), 3);
        assert_eq!(line_of(parse_model("A: x, y\nB: u\nAVOID: A=x\nMUST: A=x, B=u").unwrap_err()), 4);
        assert_eq!(line_of(parse_model("A: x\nMUST: C=x").unwrap_err()), 2);
        assert_eq!(line_of(parse_model("A: x\njunk").unwrap_err()), 2);
        assert_eq!(line_of(parse_model("A: x, , y").unwrap_err()), 1);
        assert!(parse_model("# nothing\n").is_err());
    }

    #[test]
    fn constraints_may_precede_factors() {
        let (sys, cs) = parse_model("AVOID: B=v, A=x\nA: x, y\nB: u, v").unwrap();
        assert_eq!(sys.factor_count(), 2);
        assert_eq!(cs.avoid()[0].picks(), &[Pick::new(0, 0), Pick::new(1, 1)]);
    }

    #[test]
    fn emit_round_trips() {
        let (sys, cs) = parse_model(FIVE_G).unwrap();
        let text = emit_model(&sys, &cs).unwrap();
        assert_eq!(parse_model(&text).unwrap(), (sys, cs));
    }

    #[test]
    fn emit_refuses_unrepresentable_names() {
        let sys = FactorSystem::new(vec![Factor::new("A", ["x=1"])]).unwrap();
        assert!(matches!(
            emit_model(&sys, &ConstraintSet::empty()),
            Err(IoError::Unrepresentable(_))
        ));
        let sys = FactorSystem::new(vec![Factor::new("MUST", ["x"])]).unwrap();
        assert!(emit_model(&sys, &ConstraintSet::empty()).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn name() -> impl Strategy<Value = String> {
            "[A-Za-z][A-Za-z0-9 /._-]{0,6}[A-Za-z0-9]".prop_map(|s| s)
        }

        proptest! {
            #[test]
            fn parse_emit_identity(
                names in prop::collection::btree_set(name(), 1..=4),
                levels in prop::collection::vec(prop::collection::btree_set(name(), 1..=3), 4),
                raw in prop::collection::vec(prop::collection::vec((0usize..4, 0usize..3), 1..=2), 0..=3),
            ) {
                let factors: Vec<Factor> = names
                    .iter()
                    .filter(|n| n.as_str() != AVOID && n.as_str() != MUST)
                    .zip(&levels)
                    .map(|(n, ls)| Factor::new(n.clone(), ls.iter().cloned()))
                    .collect();
                prop_assume!(!factors.is_empty());
                let sys = FactorSystem::new(factors).unwrap();
                let avoid: Vec<PartialAssignment> = raw
                    .iter()
                    .filter_map(|t| PartialAssignment::checked(&sys, t.iter().map(|&(f, l)| Pick::new(f, l))).ok())
                    .collect();
                let cs = ConstraintSet::new(&sys, vec![], avoid).unwrap();
                let text = emit_model(&sys, &cs).unwrap();
                prop_assert_eq!(parse_model(&text).unwrap(), (sys, cs));
            }
        }
    }
}

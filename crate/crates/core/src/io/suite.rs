//! Suite tables: comma-separated with a header row of factor names in
//! system order, and tab-separated PICT output with columns in any order.

use std::sync::Arc;

use super::IoError;
use crate::domain::{FactorSystem, TestCase, TestSuite};

pub fn write_suite_csv(ts: &TestSuite) -> Result<String, IoError> {
    let sys = ts.system();
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(sys.factors().iter().map(|f| f.name.as_str()))?;
    for tc in ts.cases() {
        w.write_record(tc.levels().iter().enumerate().map(|(i, &l)| sys.factor(i).levels[l].as_str()))?;
    }
    let bytes = w.into_inner().map_err(|e| IoError::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("names are UTF-8"))
}

pub fn read_suite_csv(text: &str, sys: &Arc<FactorSystem>) -> Result<TestSuite, IoError> {
    let rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    read_table(rdr, sys, false)
}

/// Reads PICT's tab-separated output and reorders its columns to the
/// system's factor order. Rows are not checked against constraints.
pub fn import_pict_output(text: &str, sys: &Arc<FactorSystem>) -> Result<TestSuite, IoError> {
    let rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(b'\t')
        .quoting(false)
        .from_reader(text.as_bytes());
    read_table(rdr, sys, true)
}

fn read_table(mut rdr: csv::Reader<&[u8]>, sys: &Arc<FactorSystem>, any_order: bool) -> Result<TestSuite, IoError> {
    let n = sys.factor_count();
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(IoError::Header("missing header row".into())),
    };
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    // column k of the file holds factor column_factor[k]
    let column_factor: Vec<usize> = if any_order {
        let mut seen = vec![false; n];
        let mut map = Vec::with_capacity(names.len());
        for name in &names {
            let f = sys
                .factor_index(name)
                .ok_or_else(|| IoError::Header(format!("unknown factor `{name}`")))?;
            if std::mem::replace(&mut seen[f], true) {
                return Err(IoError::Header(format!("factor `{name}` appears twice")));
            }
            map.push(f);
        }
        if let Some(f) = seen.iter().position(|s| !s) {
            return Err(IoError::Header(format!("missing factor `{}`", sys.factor(f).name)));
        }
        map
    } else {
        let expected: Vec<&str> = sys.factors().iter().map(|f| f.name.as_str()).collect();
        if names != expected {
            return Err(IoError::Header(format!("expected columns {expected:?}, got {names:?}")));
        }
        (0..n).collect()
    };

    let mut cases = Vec::new();
    for rec in records {
        let rec = rec?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        if rec.len() != n {
            return Err(IoError::Ragged {
                row,
                got: rec.len(),
                expected: n,
            });
        }
        let mut levels = vec![0; n];
        for (k, cell) in rec.iter().enumerate() {
            let f = column_factor[k];
            let cell = cell.trim();
            levels[f] = sys.level_index(f, cell).ok_or_else(|| IoError::Cell {
                row,
                column: k + 1,
                message: format!("factor `{}` has no level `{cell}`", sys.factor(f).name),
            })?;
        }
        cases.push(TestCase::new(sys, levels).expect("indices checked"));
    }
    Ok(TestSuite::new(Arc::clone(sys), cases).expect("cases built over the system"))
}

//! Verdict tables: proposition-by-proposition rows assembled from the
//! individual Monte-Carlo reports.

use std::collections::BTreeMap;

use horizon_core::report::{McReport, Verdict};
use horizon_core::Result;
use serde::Serialize;

use crate::experiments::row_order;

#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub row: String,
    pub kind: String,
    pub model: String,
    pub checks: usize,
    pub n_paths: usize,
    pub n_excluded: usize,
    pub verdict: Verdict,
    /// Name of the first failing check, if any.
    pub first_failure: Option<String>,
    /// Headline estimate (of the row's first report).
    pub estimate: f64,
    pub std_error: f64,
}

/// Group reports into rows (the `row::check` prefix of each report name),
/// sorted by the suite ordering, then kind.
pub fn tabulate(reports: &[McReport]) -> Vec<TableRow> {
    let mut groups: BTreeMap<(usize, String), Vec<&McReport>> = BTreeMap::new();
    for r in reports {
        let row = r.name.split("::").next().unwrap_or("unknown").to_string();
        groups.entry((row_order(&row), row)).or_default().push(r);
    }
    let mut rows = Vec::new();
    for ((_, row), members) in groups {
        let mut verdict = Verdict::Informational;
        let mut first_failure = None;
        let mut any_pass = false;
        for m in &members {
            match m.verdict {
                Verdict::Fail => {
                    if first_failure.is_none() {
                        first_failure = Some(m.name.clone());
                    }
                    verdict = Verdict::Fail;
                }
                Verdict::Pass => any_pass = true,
                Verdict::Informational => {}
            }
        }
        if verdict != Verdict::Fail && any_pass {
            verdict = Verdict::Pass;
        }
        let head = members[0];
        rows.push(TableRow {
            row,
            kind: head.spec.clone(),
            model: head.model.clone(),
            checks: members.len(),
            n_paths: members.iter().map(|m| m.n_paths).max().unwrap_or(0),
            n_excluded: members.iter().map(|m| m.n_excluded).max().unwrap_or(0),
            verdict,
            first_failure,
            estimate: head.estimate,
            std_error: head.std_error,
        });
    }
    rows
}

pub fn to_csv(rows: &[TableRow]) -> String {
    let mut out = String::from(
        "row,kind,model,checks,n_paths,n_excluded,verdict,first_failure,estimate,std_error\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.row,
            r.kind,
            r.model.replace(',', ";"),
            r.checks,
            r.n_paths,
            r.n_excluded,
            match r.verdict {
                Verdict::Pass => "pass",
                Verdict::Fail => "fail",
                Verdict::Informational => "informational",
            },
            r.first_failure.clone().unwrap_or_default(),
            r.estimate,
            r.std_error
        ));
    }
    out
}

pub fn to_json(rows: &[TableRow]) -> Result<String> {
    Ok(serde_json::to_string_pretty(rows)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_reports_give_empty_table_with_header() {
        let rows = tabulate(&[]);
        assert!(rows.is_empty());
        let csv = to_csv(&rows);
        assert!(csv.starts_with("row,kind,model"));
        assert_eq!(csv.lines().count(), 1);
    }

    #[test]
    fn rows_sorted_and_verdicts_aggregate() {
        let mk = |name: &str, v: Verdict| {
            let mut r = McReport::new(name, "k", "m", "c");
            r.verdict = v;
            r
        };
        let reports = vec![
            mk("min_scaled.non_honest::a", Verdict::Pass),
            mk("brownian_level.before::x", Verdict::Pass),
            mk("min_scaled.non_honest::b", Verdict::Fail),
            mk("deflators.nupbr::y", Verdict::Informational),
        ];
        let rows = tabulate(&reports);
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].row, "brownian_level.before");
        assert_eq!(rows[1].row, "min_scaled.non_honest");
        assert_eq!(rows[1].verdict, Verdict::Fail);
        assert_eq!(rows[1].first_failure.as_deref(), Some("min_scaled.non_honest::b"));
        assert_eq!(rows[2].row, "deflators.nupbr");
        assert_eq!(rows[2].verdict, Verdict::Informational);
    }
}

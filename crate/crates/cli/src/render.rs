//! Certificate table of a report.

use std::fmt::Write;

use serde::Deserialize;

use crate::report::CertificateRow;
use crate::CliError;

#[derive(Deserialize)]
struct View {
    certificates: Vec<CertificateRow>,
}

const HEADER: [&str; 5] = ["scope", "certificate", "status", "measured", "tolerance"];

/// Render the certificates of a report as a fixed-width table, six
/// significant digits per number. Returns the table and whether every row
/// passed.
pub fn render(report_json: &str) -> Result<(String, bool), CliError> {
    let view: View = serde_json::from_str(report_json).map_err(|e| CliError::Report(e.to_string()))?;
    let rows = &view.certificates;
    let scope_w = rows.iter().map(|r| r.scope.len()).chain([HEADER[0].len()]).max().unwrap_or(0);
    let name_w = rows.iter().map(|r| r.name.len()).chain([HEADER[1].len()]).max().unwrap_or(0);
    let mut out = String::new();
    let line = |out: &mut String, cells: [&str; 5]| {
        writeln!(
            out,
            "{:<scope_w$}  {:<name_w$}  {:<6}  {:>13}  {:>13}",
            cells[0], cells[1], cells[2], cells[3], cells[4]
        )
        .expect("writing to a String");
    };
    line(&mut out, HEADER);
    for r in rows {
        let (m, t) = (format!("{:.5e}", r.measured), format!("{:.5e}", r.tolerance));
        line(&mut out, [&r.scope, &r.name, if r.passed { "PASS" } else { "FAIL" }, &m, &t]);
    }
    Ok((out, rows.iter().all(|r| r.passed)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_list_gives_header_only() {
        let (table, ok) = render(r#"{"certificates": []}"#).unwrap();
        assert!(ok);
        assert_eq!(table.lines().count(), 1);
        assert!(table.starts_with("scope"));
    }

    #[test]
    fn failing_rows_are_flagged() {
        let json = r#"{"mode": "verify", "certificates": [
            {"scope": "run", "name": "a", "passed": true, "measured": 1.0, "tolerance": 0.0},
            {"scope": "solution 1", "name": "b", "passed": false, "measured": -0.25, "tolerance": 1e-8}
        ]}"#;
        let (table, ok) = render(json).unwrap();
        assert!(!ok);
        let lines: Vec<&str> = table.lines().collect();
        assert!(lines[1].contains("PASS") && lines[1].contains("1.00000e0"));
        assert!(lines[2].contains("FAIL") && lines[2].contains("-2.50000e-1"));
        // identical input, identical output
        assert_eq!(render(json).unwrap().0, table);
    }

    #[test]
    fn malformed_reports_are_rejected() {
        assert!(matches!(render("{"), Err(CliError::Report(_))));
        assert!(matches!(render(r#"{"certificates": 3}"#), Err(CliError::Report(_))));
    }
}

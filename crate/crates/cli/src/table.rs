//! Plain-text rendering of constant tables, one column per certificate.

use nirenberg::fixedpoint::{Certificate, TableRow};

/// Rewrites a decimal value with `digits` digits after the point, keeping
/// fixed or scientific form; integers and placeholders pass through.
fn reformat(value: &str, digits: usize) -> String {
    if !value.contains('.') {
        return value.to_string();
    }
    match value.parse::<f64>() {
        Ok(x) if value.contains('e') => format!("{x:.digits$e}"),
        Ok(x) => format!("{x:.digits$}"),
        Err(_) => value.to_string(),
    }
}

/// Renders `columns` (header, rows) side by side; rows are matched by name
/// in order of first appearance.
pub fn render(columns: &[(String, Vec<TableRow>)], digits: usize) -> String {
    let mut names: Vec<&str> = Vec::new();
    for (_, rows) in columns {
        for r in rows {
            if !names.contains(&r.name.as_str()) {
                names.push(&r.name);
            }
        }
    }
    let cells: Vec<Vec<String>> = names
        .iter()
        .map(|n| {
            columns
                .iter()
                .map(|(_, rows)| {
                    rows.iter()
                        .find(|r| r.name == *n)
                        .map_or("-".to_string(), |r| reformat(&r.value, digits))
                })
                .collect()
        })
        .collect();
    let w0 = names.iter().map(|n| n.len()).max().unwrap_or(0);
    let widths: Vec<usize> = (0..columns.len())
        .map(|j| cells.iter().map(|c| c[j].len()).chain([columns[j].0.len()]).max().unwrap_or(0))
        .collect();
    let mut out = format!("{:w0$}", "");
    for (j, (head, _)) in columns.iter().enumerate() {
        out += &format!("  {head:>w$}", w = widths[j]);
    }
    out = out.trim_end().to_string() + "\n";
    for (n, row) in names.iter().zip(&cells) {
        let mut line = format!("{n:w0$}");
        for (j, c) in row.iter().enumerate() {
            line += &format!("  {c:>w$}", w = widths[j]);
        }
        out += line.trim_end();
        out.push('\n');
    }
    out
}

/// Verdict line plus table for one certificate.
pub fn render_certificate(cert: &Certificate, digits: usize) -> String {
    let mut out = render(&[(cert.problem.group.to_string(), cert.table.clone())], digits);
    match (&cert.failed_stage, &cert.failure) {
        (None, _) => out += "verdict: TRUE\n",
        (Some(stage), why) => {
            out += &format!("verdict: FALSE at stage {stage}");
            if let Some(w) = why {
                out += &format!(" ({w})");
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: &str, v: &str) -> TableRow {
        TableRow { name: n.into(), value: v.into() }
    }

    #[test]
    fn aligns_and_fills_missing() {
        let a = ("Td".to_string(), vec![row("C_emb", "1.1890517449"), row("N", "44")]);
        let b = ("S3".to_string(), vec![row("C_emb", "1.1890517449"), row("xi", "1.1518742800e-4")]);
        let t = render(&[a, b], 4);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("C_emb") && lines[1].contains("1.1891"));
        assert!(lines[2].ends_with("-"));
        assert!(lines[3].contains("1.1519e-4"));
    }
}

//! Text output for query answers.

use serde_json::json;
use uadb_core::io::{annotated_to_csv, annotated_to_json, ua_relation_to_json};
use uadb_core::uaa::AnnotatedRelation;
use uadb_core::uadb::render_pair;
use uadb_core::{Element, KRelation, Result};

use crate::args::Format;

/// Left-aligned columns separated by two spaces.
pub fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_string()
    };
    let mut out = line(header);
    out.push('\n');
    out.push_str(&line(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>()));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}

fn csv_line(cells: &[String]) -> String {
    let quoted: Vec<String> = cells
        .iter()
        .map(|c| {
            if c.contains([',', '"', '\n']) {
                format!("\"{}\"", c.replace('"', "\"\""))
            } else {
                c.clone()
            }
        })
        .collect();
    quoted.join(",")
}

/// Set-valued pairs print a certainty flag; bag pairs print `(u,c)`, or
/// `_u` and `_c` columns in CSV.
fn annotation_cells(k: &Element, format: Format) -> (Vec<String>, Vec<String>) {
    match k.as_pair() {
        Some((Element::Nat(d), Element::Nat(c))) => {
            let u = d.saturating_sub(*c);
            if format == Format::Csv {
                (vec!["_u".into(), "_c".into()], vec![u.to_string(), c.to_string()])
            } else {
                (vec!["(u,c)".into()], vec![format!("({u},{c})")])
            }
        }
        Some((_, Element::Bool(c))) => (vec!["certain".into()], vec![c.to_string()]),
        _ => (vec!["annotation".into()], vec![render_pair(k)]),
    }
}

/// A pair-annotated answer relation.
pub fn ua_relation(r: &KRelation, format: Format) -> Result<String> {
    let names = r.schema.names();
    match format {
        Format::Json => Ok(format!("{:#}\n", ua_relation_to_json(r))),
        Format::Table | Format::Csv => {
            let mut header = names.clone();
            let mut rows = Vec::new();
            for (t, k) in r.iter() {
                let (h, cells) = annotation_cells(k, format);
                if rows.is_empty() {
                    header.extend(h);
                }
                let mut row: Vec<String> = t.values().iter().map(|v| v.to_string()).collect();
                row.extend(cells);
                rows.push(row);
            }
            if rows.is_empty() {
                header.extend(annotation_cells(&Element::pair(Element::Nat(0), Element::Nat(0)), format).0);
            }
            Ok(if format == Format::Table {
                table(&header, &rows)
            } else {
                let mut out = csv_line(&header);
                out.push('\n');
                for r in &rows {
                    out.push_str(&csv_line(r));
                    out.push('\n');
                }
                out
            })
        }
    }
}

/// An attribute-annotated answer relation; uncertain cells carry `^F`.
pub fn annotated_relation(r: &AnnotatedRelation, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(format!("{:#}\n", json!({ "rows": annotated_to_json(r) }))),
        Format::Csv => annotated_to_csv(r),
        Format::Table => {
            let mut header = r.schema.names();
            header.push("(u,c)".into());
            let rows: Vec<Vec<String>> = r
                .iter()
                .map(|(t, k)| {
                    let mut row: Vec<String> = t.iter().map(|v| v.to_string()).collect();
                    row.push(k.to_string());
                    row
                })
                .collect();
            Ok(table(&header, &rows))
        }
    }
}

//! Plain-text table rendering and JSON emission.

use serde::Serialize;

use crate::CliError;

/// Print a column-aligned table: a header row plus data rows.
pub fn print_table(headers: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            if i < widths.len() {
                widths[i] = widths[i].max(cell.len());
            }
        }
    }
    let fmt_row = |cells: &[String]| {
        let mut line = String::new();
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            if i == 0 {
                line.push_str(&format!("{:<width$}", cell, width = widths[i]));
            } else {
                line.push_str(&format!("{:>width$}", cell, width = widths[i]));
            }
        }
        line
    };
    let header_cells: Vec<String> = headers.iter().map(|h| h.to_string()).collect();
    println!("{}", fmt_row(&header_cells));
    println!(
        "{}",
        "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1))
    );
    for row in rows {
        println!("{}", fmt_row(row));
    }
}

/// Serialize a report as pretty JSON on stdout.
pub fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

/// One decimal of a percentage, the table convention.
pub fn pct1(x: f64) -> String {
    format!("{x:.1}")
}

/// One decimal, for perplexities and minutes.
pub fn num1(x: f64) -> String {
    format!("{x:.1}")
}

/// A rate cell: percentage plus the counts behind it.
pub fn rate_cell(num: u64, den: u64) -> String {
    format!("{} ({num}/{den})", pct1(100.0 * num as f64 / den as f64))
}

//! Plain-text output helpers shared by the CSV writers.

use std::io::Write;

/// Locale-independent decimal rendering with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Writes a header line and rows of numbers as CSV.
pub fn write_rows<W: Write>(mut w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> std::io::Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt17).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

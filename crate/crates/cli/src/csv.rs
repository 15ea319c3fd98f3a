//! Plain CSV with a fixed 17-significant-digit number format.

use std::fmt::Write;

/// Shortest text that round-trips a double, in a layout that does not depend
/// on the value: `d.dddddddddddddddde±x`.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{:.16e}", v)
    }
}

pub struct Table {
    text: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Table {
        Table { text: header.join(",") + "\n" }
    }

    pub fn row(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|v| num(*v)).collect();
        writeln!(self.text, "{}", cells.join(",")).expect("writing to a string");
    }

    /// A row whose last cell is an integer label.
    pub fn row_labelled(&mut self, values: &[f64], label: usize) {
        let mut cells: Vec<String> = values.iter().map(|v| num(*v)).collect();
        cells.push(label.to_string());
        writeln!(self.text, "{}", cells.join(",")).expect("writing to a string");
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

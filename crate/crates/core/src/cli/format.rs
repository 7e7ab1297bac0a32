//! CSV number formatting.
//!
//! Values are printed with 6 significant digits, rounded to nearest with
//! ties to even on the exact binary value (Rust's `{:e}` and `{:.N}`
//! formatting), then trailing zeros are trimmed. The output depends only on
//! the bits of the value, never on the platform.

/// `0.0361395166 -> "0.0361395"`, `1.0 -> "1"`, `-0.0 -> "0"`.
pub fn sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.5e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    let decimals = (5 - exp).max(0) as usize;
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

pub fn csv_line<I, S>(fields: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut line = fields
        .into_iter()
        .map(|f| f.as_ref().to_string())
        .collect::<Vec<_>>()
        .join(",");
    line.push('\n');
    line
}

/// Entries joined by `;`, so a whole row fits in one CSV field.
pub fn row_field(row: &[f64]) -> String {
    row.iter().map(|&v| sig6(v)).collect::<Vec<_>>().join(";")
}

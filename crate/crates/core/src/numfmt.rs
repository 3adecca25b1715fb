//! Number formatting for reports.

/// Shortest decimal that reads back to the same `f64`; exponent form for very
/// large or small magnitudes.
pub(crate) fn num(v: f64) -> String {
    if v.is_finite() {
        ryu::Buffer::new().format_finite(v).to_string()
    } else {
        v.to_string()
    }
}

//! Small text-output helpers shared by the CSV writers.

/// Shortest decimal representation that round-trips to the same `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:?}")
}

//! Plain-text output helpers shared by the analysis modules and the CLI.

/// Shortest decimal string that parses back to exactly `v`. Plain notation
/// for moderate magnitudes, scientific otherwise.
pub fn fmt_real(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || ((1e-5..1e16).contains(&a)) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// A header plus rows, rendered as comma-separated lines ending in `\n`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for v in [0.0, -0.0, 1.0, 0.1, 1e-300, 5e-324, 1.7976931348623157e308, -2.5e-7, 8.027, 1e16] {
            let s = fmt_real(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(fmt_real(0.25), "0.25");
        assert_eq!(fmt_real(1e-300), "1e-300");
        assert_eq!(fmt_real(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "2".into()]);
        assert_eq!(t.to_csv(), "a,b\n1,2\n");
    }
}

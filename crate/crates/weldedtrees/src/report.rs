//! CSV emission with reproducible configuration echoes.
//!
//! Every experiment output starts with `#`-prefixed `key=value` lines echoing
//! the effective configuration (defaults included), one header row, then data
//! rows. Rendering is purely deterministic, so identical configurations
//! produce byte-identical files.

use std::fmt::Display;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

/// An experiment output document.
#[derive(Clone, Debug)]
pub struct CsvDocument {
    echo: Vec<(String, String)>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    footer: Vec<String>,
}

impl CsvDocument {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        CsvDocument {
            echo: Vec::new(),
            header: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            rows: Vec::new(),
            footer: Vec::new(),
        }
    }

    /// Record one configuration key for the echo block.
    pub fn echo(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.echo.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push_row(&mut self, fields: Vec<String>) {
        debug_assert_eq!(fields.len(), self.header.len());
        self.rows.push(fields);
    }

    /// Append a trailing comment line (summaries, markers).
    pub fn push_footer(&mut self, line: impl Display) {
        self.footer.push(line.to_string());
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.echo {
            writeln!(out, "# {key}={value}").unwrap();
        }
        writeln!(out, "{}", self.header.join(",")).unwrap();
        for row in &self.rows {
            writeln!(out, "{}", row.join(",")).unwrap();
        }
        for line in &self.footer {
            writeln!(out, "# {line}").unwrap();
        }
        out
    }

    pub fn write_to(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.render())
    }
}

/// Shortest representation that round-trips the value (stable across runs).
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_echo_header_and_rows() {
        let mut doc = CsvDocument::new(&["n", "p"]);
        doc.echo("seed", 1).echo("backend", "fast");
        doc.push_row(vec!["4".into(), fmt_f64(0.5)]);
        assert_eq!(doc.render(), "# seed=1\n# backend=fast\nn,p\n4,0.5\n");
    }

    #[test]
    fn empty_document_is_header_only() {
        let doc = CsvDocument::new(&["a", "b", "c"]);
        assert_eq!(doc.render(), "a,b,c\n");
        assert_eq!(doc.rows(), 0);
    }

    #[test]
    fn float_formatting_round_trips() {
        for &x in &[0.1, 1.0 / 3.0, 1e-12, 123456.789] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}

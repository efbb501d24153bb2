//! CSV helpers shared by the exporters.

use std::fmt::Write as _;
use std::io::Write;

use crate::Result;

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(value: f64) -> String {
    format!("{value:?}")
}

/// Accumulates CSV text; every exporter builds its rows through this.
#[derive(Clone, Debug, Default)]
pub struct CsvTable {
    text: String,
}

impl CsvTable {
    pub fn with_header(columns: &[&str]) -> Self {
        let mut table = Self::default();
        table.text.push_str(&columns.join(","));
        table.text.push('\n');
        table
    }

    /// A `# ...` line ahead of the header, naming the parameters a dump was
    /// taken at.
    pub fn with_comment_and_header(comment: &str, columns: &[&str]) -> Self {
        let mut table = Self::default();
        let _ = writeln!(table.text, "# {comment}");
        table.text.push_str(&columns.join(","));
        table.text.push('\n');
        table
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut first = true;
        for f in fields {
            if !first {
                self.text.push(',');
            }
            self.text.push_str(f.as_ref());
            first = false;
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn into_string(self) -> String {
        self.text
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.text.as_bytes())?;
        Ok(())
    }
}

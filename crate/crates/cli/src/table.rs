use std::path::{Path, PathBuf};

use wmfie::error::{Error, Result};
use wmfie::postproc::{fmt_db, fmt_sci, write_atomic};

/// Bumped whenever a column is added, removed or renamed.
pub const SCHEMA_VERSION: u32 = 1;

/// In-memory CSV table written in one atomic step.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn to_csv(&self) -> Result<String> {
        let err = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(err)?;
        for r in &self.rows {
            w.write_record(r).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        write_atomic(path, self.to_csv()?.as_bytes())?;
        Ok(path.to_path_buf())
    }
}

pub fn db(x: f64) -> String {
    fmt_db(x)
}

pub fn sci(x: f64) -> String {
    fmt_sci(x)
}

pub fn opt_db(x: Option<f64>) -> String {
    x.map(db).unwrap_or_default()
}

pub fn opt_sci(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_default()
}

/// Lists every file of a command with its schema and row count.
pub fn manifest(out_dir: &Path, name: &str, command: &str, files: &[(PathBuf, &str, usize)]) -> Result<PathBuf> {
    let mut t = Table::new(&["command", "file", "schema", "schema_version", "rows"]);
    for (path, schema, rows) in files {
        let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        t.push(vec![
            command.to_string(),
            file,
            schema.to_string(),
            SCHEMA_VERSION.to_string(),
            rows.to_string(),
        ]);
    }
    t.write(&out_dir.join(format!("{name}_{command}_manifest.csv")))
}

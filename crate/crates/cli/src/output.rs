//! Atomic artifact writes: everything goes to a temp file in the target
//! directory and is renamed into place once complete.

use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(&path).map_err(|e| e.error)?;
    Ok(path)
}

/// In-memory CSV table with a header row and LF line endings.
pub struct Csv {
    w: csv::Writer<Vec<u8>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        Self { w }
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) {
        let rec: Vec<String> = fields.into_iter().collect();
        self.w.write_record(&rec).expect("in-memory write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.w.into_inner().expect("in-memory flush")
    }
}

/// File-name tag for an order, e.g. `a0.25`.
pub fn alpha_tag(alpha: f64) -> String {
    format!("a{alpha:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quoting() {
        let mut c = Csv::new(&["a", "b"]);
        c.row(["file:x,y".to_string(), "q\"".to_string()]);
        assert_eq!(
            String::from_utf8(c.into_bytes()).unwrap(),
            "a,b\n\"file:x,y\",\"q\"\"\"\n"
        );
    }

    #[test]
    fn atomic_write_replaces() {
        let d = tempfile::tempdir().unwrap();
        write_atomic(d.path(), "f.csv", b"one").unwrap();
        let p = write_atomic(d.path(), "f.csv", b"two").unwrap();
        assert_eq!(std::fs::read(p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(d.path()).unwrap().count(), 1);
    }
}

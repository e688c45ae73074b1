//! Number formatting and file helpers shared by the exporters.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

/// Round-trippable scientific notation used in every CSV.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON-safe value: non-finite numbers become `null`.
pub fn json_f64(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(x)
        .map(serde_json::Value::Number)
        .unwrap_or(serde_json::Value::Null)
}

/// Writes to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let tmp = path.with_extension("tmp~");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let s = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    write_atomic(path, s.as_bytes())
}

/// CSV body from a header and rows of numbers.
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_f64).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting_round_trips() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02e23] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn atomic_write_creates_parents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b/c.csv");
        write_atomic(&p, b"x\n").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "x\n");
    }

    #[test]
    fn csv_table_layout() {
        let t = csv_table(&["a", "b"], vec![vec![1.0, 2.0]]);
        assert_eq!(t.lines().count(), 2);
        assert!(t.starts_with("a,b\n"));
    }

    #[test]
    fn non_finite_becomes_null() {
        assert!(json_f64(f64::NAN).is_null());
    }
}

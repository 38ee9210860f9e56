use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::collections::HashSet;

use super::{ClipMeta, PhonationMode};
use crate::{Error, Result};

const HEADER: [&str; 5] = ["id", "path", "label", "vowel", "pitch"];

/// Loads a manifest file. Relative WAV paths are resolved against the
/// manifest's directory and must exist.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<ClipMeta>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let metas = parse(file, base, path)?;
    for (row, m) in metas.iter().enumerate() {
        if !m.path.exists() {
            return Err(Error::Manifest {
                path: path.to_path_buf(),
                row: row + 1,
                message: format!("audio file {} does not exist", m.path.display()),
            });
        }
    }
    Ok(metas)
}

/// Parses manifest CSV from any reader without touching the file system.
pub fn read_manifest<R: Read>(reader: R, base: &Path) -> Result<Vec<ClipMeta>> {
    parse(reader, base, Path::new("<reader>"))
}

fn parse<R: Read>(reader: R, base: &Path, source: &Path) -> Result<Vec<ClipMeta>> {
    let err = |row: usize, message: String| Error::Manifest {
        path: source.to_path_buf(),
        row,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| err(0, e.to_string()))?.clone();
    let mut cols = [0usize; 5];
    for (slot, name) in cols.iter_mut().zip(HEADER) {
        *slot = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| err(0, format!("missing column `{name}`")))?;
    }

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| err(row, e.to_string()))?;
        let field = |c: usize| -> Result<&str> {
            match rec.get(cols[c]) {
                Some(v) if !v.is_empty() => Ok(v),
                _ => Err(err(row, format!("missing value for column `{}`", HEADER[c]))),
            }
        };
        let id = field(0)?.to_string();
        let label: PhonationMode = field(2)?
            .parse()
            .map_err(|e: Error| err(row, e.to_string()))?;
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        let rel = PathBuf::from(field(1)?);
        out.push(ClipMeta {
            path: if rel.is_absolute() { rel } else { base.join(rel) },
            id,
            label,
            vowel: field(3)?.to_string(),
            pitch: field(4)?.to_string(),
        });
    }
    Ok(out)
}

/// Writes a manifest with the canonical header.
pub fn write_manifest<W: Write>(writer: W, metas: &[ClipMeta]) -> Result<()> {
    let io = |e: std::io::Error| Error::io("<manifest writer>", e);
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    let to_io = |e: csv::Error| io(std::io::Error::other(e.to_string()));
    w.write_record(HEADER).map_err(to_io)?;
    for m in metas {
        let path = m.path.to_string_lossy();
        w.write_record([m.id.as_str(), &path, m.label.as_str(), &m.vowel, &m.pitch])
            .map_err(to_io)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

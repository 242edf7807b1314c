//! Line-delimited JSON helpers shared by every stage.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Opens `path` for buffered reading; `-` means stdin.
pub fn open_reader(path: &Path) -> Result<Box<dyn BufRead>> {
    if path == Path::new("-") {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let file = File::open(path).map_err(|e| Error::io_path("cannot open", path, e))?;
    Ok(Box::new(BufReader::new(file)))
}

/// Creates (truncating) `path` for buffered writing; `-` means stdout.
pub fn create_writer(path: &Path) -> Result<Box<dyn Write>> {
    if path == Path::new("-") {
        return Ok(Box::new(BufWriter::new(io::stdout())));
    }
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io_path("cannot create", parent, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io_path("cannot create", path, e))?;
    Ok(Box::new(BufWriter::new(file)))
}

/// Reads every non-blank line of `path` as a `T`, failing on the first bad line.
pub fn read_all<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let reader = open_reader(path)?;
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io_path("cannot read", path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|source| Error::Json {
            line: idx + 1,
            source,
        })?;
        out.push(value);
    }
    Ok(out)
}

/// Reads `path` leniently: lines that fail to parse are counted, not fatal.
pub fn read_lenient<T: DeserializeOwned>(path: &Path) -> Result<(Vec<T>, u64)> {
    let reader = open_reader(path)?;
    let mut out = Vec::new();
    let mut bad = 0;
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io_path("cannot read", path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(v) => out.push(v),
            Err(_) => bad += 1,
        }
    }
    Ok((out, bad))
}

pub fn write_line<W: Write + ?Sized, T: Serialize>(writer: &mut W, value: &T) -> Result<usize> {
    let mut buf = serde_json::to_vec(value).expect("record types always serialize");
    buf.push(b'\n');
    writer
        .write_all(&buf)
        .map_err(|e| Error::io("cannot write record", e))?;
    Ok(buf.len())
}

pub fn write_all<T: Serialize>(path: &Path, values: &[T]) -> Result<()> {
    let mut writer = create_writer(path)?;
    for value in values {
        write_line(&mut writer, value)?;
    }
    writer
        .flush()
        .map_err(|e| Error::io_path("cannot flush", path, e))
}

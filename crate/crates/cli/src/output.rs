use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::Failure;

/// Writes `body` to `out`, or to stdout without one, then prints `summary`:
/// to stdout when the body went to a file, to stderr otherwise.
pub fn emit(out: Option<&Path>, body: &[u8], summary: &str) -> Result<(), Failure> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            w.write_all(body)?;
            w.flush()?;
            println!("{summary}");
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(body)?;
            lock.flush()?;
            eprintln!("{summary}");
        }
    }
    Ok(())
}

pub fn json<T: Serialize>(value: &T) -> Result<Vec<u8>, Failure> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    std::fs::write(path, json(value)?)?;
    Ok(())
}

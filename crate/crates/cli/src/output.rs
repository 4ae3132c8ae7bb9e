use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::{CliError, VERSION};

fn out_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output(format!("{}: {e}", path.display()))
}

/// Writes a CSV whose first line is `# hybem <version> config_sha256=<hash>`.
pub fn write_csv(
    dir: &Path,
    name: &str,
    hash: &str,
    header: &[String],
    rows: &[Vec<String>],
) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| out_err(dir, e))?;
    let path = dir.join(name);
    let mut buf = format!("# hybem {VERSION} config_sha256={hash}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header).map_err(|e| out_err(&path, e))?;
        for r in rows {
            w.write_record(r).map_err(|e| out_err(&path, e))?;
        }
        w.flush().map_err(|e| out_err(&path, e))?;
    }
    fs::File::create(&path)
        .and_then(|mut f| f.write_all(&buf))
        .map_err(|e| out_err(&path, e))?;
    Ok(path)
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| out_err(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| out_err(&path, e))?;
    Ok(path)
}

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::commands::CliError;

/// Writes through a sibling temporary file and a rename, so readers never
/// see a half-written artifact.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, contents).map_err(|e| CliError::io(Path::new(&tmp), e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output serializes");
    s.push('\n');
    s
}

/// Makes a string safe to use as one path component.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect()
}

use std::io::Write;
use std::path::Path;

use crate::error::{KmsError, Result};

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(d) = dir {
        std::fs::create_dir_all(d).map_err(|e| KmsError::io(d, e))?;
    }
    let file_name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = path.with_file_name(format!(".{file_name}.tmp{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp).map_err(|e| KmsError::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| KmsError::io(&tmp, e))?;
        f.sync_all().map_err(|e| KmsError::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| KmsError::io(path, e))
}

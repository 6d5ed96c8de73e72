//! Run manifests: the resolved config, tool version, and SHA-256 digests of
//! every input, written beside a command's outputs. No timestamps, so two
//! identical runs produce identical manifests.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::Result;

fn digest_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex(&Sha256::digest(&bytes)))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Files digest directly; directories digest the sorted list of
/// (relative path, file digest) pairs.
pub fn digest_path(path: &Path) -> Result<String> {
    if path.is_dir() {
        let mut entries: Vec<std::path::PathBuf> = Vec::new();
        collect_files(path, &mut entries)?;
        entries.sort();
        let mut hasher = Sha256::new();
        for entry in entries {
            let rel = entry.strip_prefix(path).unwrap_or(&entry);
            hasher.update(rel.to_string_lossy().as_bytes());
            hasher.update(b"\0");
            hasher.update(digest_file(&entry)?.as_bytes());
            hasher.update(b"\n");
        }
        Ok(hex(&hasher.finalize()))
    } else {
        digest_file(path)
    }
}

fn collect_files(dir: &Path, out: &mut Vec<std::path::PathBuf>) -> Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

/// Writes `<output_dir>/<command>.manifest.txt`.
pub fn write_manifest(
    output_dir: &Path,
    command: &str,
    config_echo: &str,
    inputs: &[(&str, &Path)],
) -> Result<()> {
    let mut text = String::new();
    let _ = writeln!(text, "command = {command}");
    let _ = writeln!(text, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(text, "[config]");
    text.push_str(config_echo);
    let _ = writeln!(text, "[inputs]");
    for (label, path) in inputs {
        let _ = writeln!(text, "{label} = {} sha256={}", path.display(), digest_path(path)?);
    }
    std::fs::create_dir_all(output_dir)?;
    std::fs::write(output_dir.join(format!("{command}.manifest.txt")), text)?;
    Ok(())
}

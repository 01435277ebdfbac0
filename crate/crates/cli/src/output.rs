//! Error mapping and all-or-nothing output writing.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use matkit_core::imaging::{save_image, save_mask, Image, Mask};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<matkit_core::Error> for CliError {
    fn from(e: matkit_core::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn io_err(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Tracks written files and directories; removes them on drop unless
/// [`Outputs::commit`] was called.
#[derive(Default)]
pub struct Outputs {
    files: Vec<PathBuf>,
    dirs: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    pub fn new() -> Self {
        Self::default()
    }

    /// Creates `dir` and its missing ancestors, remembering the ones created here.
    pub fn dir(&mut self, dir: &Path) -> CliResult<()> {
        let mut missing = Vec::new();
        let mut cur = Some(dir);
        while let Some(d) = cur {
            if d.as_os_str().is_empty() || d.exists() {
                break;
            }
            missing.push(d.to_path_buf());
            cur = d.parent();
        }
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        missing.reverse();
        self.dirs.extend(missing);
        Ok(())
    }

    fn parent(&mut self, path: &Path) -> CliResult<()> {
        match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => self.dir(p),
            _ => Ok(()),
        }
    }

    pub fn bytes(&mut self, path: &Path, bytes: &[u8]) -> CliResult<()> {
        self.parent(path)?;
        self.files.push(path.to_path_buf());
        fs::write(path, bytes).map_err(|e| io_err(path, e))
    }

    pub fn text(&mut self, path: &Path, text: &str) -> CliResult<()> {
        self.bytes(path, text.as_bytes())
    }

    pub fn json<T: serde::Serialize>(&mut self, path: &Path, value: &T) -> CliResult<()> {
        let mut s = serde_json::to_string_pretty(value).expect("serializable record");
        s.push('\n');
        self.text(path, &s)
    }

    pub fn image(&mut self, path: &Path, image: &Image, bit_depth: u8) -> CliResult<()> {
        self.parent(path)?;
        self.files.push(path.to_path_buf());
        Ok(save_image(image, path, bit_depth)?)
    }

    pub fn mask(&mut self, path: &Path, mask: &Mask) -> CliResult<()> {
        self.parent(path)?;
        self.files.push(path.to_path_buf());
        Ok(save_mask(mask, path)?)
    }

    /// Registers a directory populated by library code.
    pub fn external_dir(&mut self, dir: &Path) -> CliResult<()> {
        self.dir(dir)
    }

    pub fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.files)
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        for d in self.dirs.iter().rev() {
            let _ = fs::remove_dir_all(d);
        }
    }
}

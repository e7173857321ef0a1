//! Scenario files, the command implementations behind the `dephaser`
//! binary, and atomic output helpers.

mod commands;
mod scenario;

use std::fs;
use std::io::Write;
use std::path::Path;

pub use commands::*;
pub use scenario::*;

use crate::error::Result;

/// Writes `contents` to `dir/name` through a temporary file and a rename,
/// so readers never observe a partial file.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &target)?;
    Ok(())
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    Scenario::from_json(&fs::read_to_string(path)?)
}

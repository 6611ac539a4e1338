//! Helpers for the acceptance run, which lives in its own package so that it
//! runs after every other test target of the workspace.

use std::path::PathBuf;
use std::process::Command;

/// Path of the `htbif` executable next to the running test binary. Cargo is
/// asked to build it first, which is a no-op when it is up to date.
pub fn htbif_binary() -> std::io::Result<PathBuf> {
    let exe = std::env::current_exe()?;
    // target/<profile>/deps/<test> -> target/<profile>/htbif
    let dir = exe
        .parent()
        .and_then(|d| d.parent())
        .ok_or_else(|| std::io::Error::other("test binary has no profile directory"))?;
    let bin = dir.join(format!("htbif{}", std::env::consts::EXE_SUFFIX));
    if std::env::var_os("CARGO").is_some() || !bin.exists() {
        let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
        let mut cmd = Command::new(cargo);
        cmd.args(["build", "--quiet", "-p", "htbif"]);
        if dir.file_name().is_some_and(|n| n == "release") {
            cmd.arg("--release");
        }
        let status = cmd.status()?;
        if !status.success() {
            return Err(std::io::Error::other("cargo build -p htbif failed"));
        }
    }
    Ok(bin)
}

//! Embed a `git describe`-style version string.

use std::process::Command;

fn main() {
    println!("cargo:rerun-if-changed=build.rs");
    let pkg = std::env::var("CARGO_PKG_VERSION").unwrap_or_default();
    let git = |args: &[&str]| -> Option<String> {
        let out = Command::new("git").args(args).output().ok()?;
        out.status.success().then(|| String::from_utf8_lossy(&out.stdout).trim().to_string())
    };
    if let Some(dir) = git(&["rev-parse", "--git-dir"]) {
        println!("cargo:rerun-if-changed={dir}/HEAD");
    }
    let version = match git(&["describe", "--always", "--dirty", "--abbrev=7"]) {
        Some(d) if !d.is_empty() => format!("v{pkg}-g{d}"),
        _ => format!("v{pkg}"),
    };
    println!("cargo:rustc-env=LATTICE_WAVES_VERSION={version}");
}

//! Command-line front ends: one tuner binary per kernel family
//! (`tune_xaxpy`, `tune_xgemm`, ...) and the `client` benchmark binary.

pub mod client;
pub mod tune;

use std::path::Path;

use anyhow::Context as _;
use tuneblas::DeviceSpec;

/// The device profile at `path`, or the host default.
pub fn load_device(path: Option<&Path>) -> anyhow::Result<DeviceSpec> {
    match path {
        Some(p) => {
            DeviceSpec::load(p).with_context(|| format!("loading device profile {}", p.display()))
        }
        None => Ok(DeviceSpec::host_default()),
    }
}

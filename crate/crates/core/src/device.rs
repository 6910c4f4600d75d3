//! Virtual device profiles.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviceType {
    Gpu,
    Cpu,
    Accelerator,
}

impl fmt::Display for DeviceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeviceType::Gpu => "GPU",
            DeviceType::Cpu => "CPU",
            DeviceType::Accelerator => "accelerator",
        })
    }
}

/// How the engine schedules the work-groups of one launch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParallelBackend {
    /// One work-group at a time, in group order.
    Sequential,
    /// Work-groups spread over the host thread pool.
    #[default]
    Parallel,
}

/// Resource limits and identity of a virtual device.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub name: String,
    pub vendor: String,
    pub device_type: DeviceType,
    pub architecture: String,
    pub max_work_group_size: usize,
    pub local_mem_bytes: usize,
    pub compute_units: usize,
    #[serde(default)]
    pub parallel_backend: ParallelBackend,
}

impl DeviceSpec {
    pub fn new(
        name: impl Into<String>,
        vendor: impl Into<String>,
        device_type: DeviceType,
        architecture: impl Into<String>,
    ) -> Self {
        DeviceSpec {
            name: name.into(),
            vendor: vendor.into(),
            device_type,
            architecture: architecture.into(),
            max_work_group_size: 1024,
            local_mem_bytes: 48 * 1024,
            compute_units: 1,
            parallel_backend: ParallelBackend::Parallel,
        }
    }

    /// The profile used when no device file is given: limits typical of a
    /// discrete GPU, executed on the host.
    pub fn host_default() -> Self {
        let mut d = DeviceSpec::new("virtual-host", "tuneblas", DeviceType::Gpu, "virtual");
        d.compute_units = std::thread::available_parallelism().map_or(1, |n| n.get());
        d
    }

    pub fn with_limits(mut self, max_work_group_size: usize, local_mem_bytes: usize) -> Self {
        self.max_work_group_size = max_work_group_size;
        self.local_mem_bytes = local_mem_bytes;
        self
    }

    pub fn with_compute_units(mut self, compute_units: usize) -> Self {
        self.compute_units = compute_units;
        self
    }

    pub fn with_backend(mut self, backend: ParallelBackend) -> Self {
        self.parallel_backend = backend;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_work_group_size == 0 {
            return Err(Error::InvalidDevice(
                "max_work_group_size must be at least 1".into(),
            ));
        }
        if self.compute_units == 0 {
            return Err(Error::InvalidDevice(
                "compute_units must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: DeviceSpec = serde_json::from_str(text)?;
        d.validate()?;
        Ok(d)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

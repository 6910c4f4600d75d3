//! Work-group execution engine.
//!
//! A launch is a grid of work-groups. Every kernel is written as a function
//! of its group id that returns the group's output; the engine runs groups
//! sequentially or on the host thread pool and returns the outputs in group
//! order, so results never depend on scheduling. Work-items inside a group
//! are simulated by the kernel as phase loops (load phase, then compute
//! phase), which is what a barrier between the phases would guarantee.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context::Context;
use crate::device::ParallelBackend;
use crate::error::{Error, Result};

use super::params::{Configuration, KernelFamily};

/// Work-groups per dimension and threads per work-group. The third
/// dimension is used for the batch index of batched launches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WorkGrid {
    pub groups: [usize; 3],
    pub group_size: usize,
}

impl WorkGrid {
    pub fn linear(groups: usize, group_size: usize) -> Self {
        WorkGrid {
            groups: [groups, 1, 1],
            group_size,
        }
    }

    pub fn planar(groups_m: usize, groups_n: usize, group_size: usize) -> Self {
        WorkGrid {
            groups: [groups_m, groups_n, 1],
            group_size,
        }
    }

    pub fn batched(mut self, batch: usize) -> Self {
        self.groups[2] = batch;
        self
    }

    pub fn total_groups(&self) -> usize {
        self.groups.iter().product()
    }

    pub fn total_threads(&self) -> usize {
        self.total_groups() * self.group_size
    }

    fn id(&self, linear: usize) -> GroupId {
        let [gx, gy, _] = self.groups;
        GroupId {
            x: linear % gx,
            y: (linear / gx) % gy,
            z: linear / (gx * gy),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroupId {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

/// One recorded kernel launch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaunchRecord {
    pub family: KernelFamily,
    pub config: Configuration,
    pub grid: WorkGrid,
    pub local_mem_bytes: usize,
}

pub(crate) struct LaunchDesc<'a> {
    pub family: KernelFamily,
    pub config: &'a Configuration,
    pub grid: WorkGrid,
    /// Local memory each group allocates, as sized by the kernel itself.
    pub local_mem_bytes: usize,
}

/// Checks a launch against the device's modeled resources.
pub(crate) fn assert_resources(
    ctx: &Context,
    grid: &WorkGrid,
    local_mem_bytes: usize,
) -> Result<()> {
    let dev = ctx.device();
    if grid.group_size == 0 || grid.groups.contains(&0) {
        return Err(Error::usage(format!("empty launch grid {:?}", grid)));
    }
    if grid.group_size > dev.max_work_group_size {
        return Err(Error::Resource(format!(
            "{} threads per work-group exceeds the device limit of {}",
            grid.group_size, dev.max_work_group_size
        )));
    }
    if local_mem_bytes > dev.local_mem_bytes {
        return Err(Error::Resource(format!(
            "{} bytes of local memory exceeds the device limit of {}",
            local_mem_bytes, dev.local_mem_bytes
        )));
    }
    Ok(())
}

/// Runs `body` once per work-group. `init` builds per-worker scratch (the
/// group's local memory) that is reused across the groups a worker runs.
pub(crate) fn launch<S, R, I, F>(
    ctx: &Context,
    desc: LaunchDesc<'_>,
    init: I,
    body: F,
) -> Result<Vec<R>>
where
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, GroupId) -> R + Sync + Send,
    R: Send,
{
    assert_resources(ctx, &desc.grid, desc.local_mem_bytes)?;
    ctx.log_launch(|| LaunchRecord {
        family: desc.family,
        config: desc.config.clone(),
        grid: desc.grid,
        local_mem_bytes: desc.local_mem_bytes,
    });
    let grid = desc.grid;
    let total = grid.total_groups();
    let out = match ctx.device().parallel_backend {
        ParallelBackend::Parallel if total > 1 && rayon::current_num_threads() > 1 => (0..total)
            .into_par_iter()
            .map_init(&init, |scratch, i| body(scratch, grid.id(i)))
            .collect(),
        _ => {
            let mut scratch = init();
            (0..total).map(|i| body(&mut scratch, grid.id(i))).collect()
        }
    };
    Ok(out)
}

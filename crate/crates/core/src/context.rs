//! Contexts and device buffers.
//!
//! A [`Context`] binds a [`DeviceSpec`] to the buffers allocated on it, the
//! parameter store routines consult for kernel configurations, and an
//! optional launch log. Buffers are reference-counted handles; cloning a
//! [`Buffer`] yields another handle to the same device memory.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Weak};

use parking_lot::{Mutex, RwLock, RwLockReadGuard, RwLockWriteGuard};

use crate::device::DeviceSpec;
use crate::error::{Error, Result};
use crate::kernels::engine::LaunchRecord;
use crate::kernels::params::{ArgsSig, Configuration, KernelFamily};
use crate::precision::{Element, Precision, Scalar};
use crate::tuningdb::{Database, ParameterStore};

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

fn next_id() -> u64 {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

#[derive(Default)]
struct Registry {
    live: BTreeMap<u64, usize>,
}

struct ContextInner {
    id: u64,
    device: DeviceSpec,
    registry: Arc<Mutex<Registry>>,
    params: RwLock<ParameterStore>,
    launches: Mutex<Option<Vec<LaunchRecord>>>,
}

#[derive(Clone)]
pub struct Context {
    inner: Arc<ContextInner>,
}

impl std::fmt::Debug for Context {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Context")
            .field("id", &self.inner.id)
            .field("device", &self.inner.device.name)
            .finish()
    }
}

impl Context {
    pub fn new(device: DeviceSpec) -> Result<Context> {
        device.validate()?;
        Ok(Context {
            inner: Arc::new(ContextInner {
                id: next_id(),
                device,
                registry: Arc::default(),
                params: RwLock::new(ParameterStore::default()),
                launches: Mutex::new(None),
            }),
        })
    }

    pub fn device(&self) -> &DeviceSpec {
        &self.inner.device
    }

    pub fn id(&self) -> u64 {
        self.inner.id
    }

    /// Allocates a zero-initialized buffer of `len` elements.
    pub fn alloc<T: Element>(&self, len: usize) -> Buffer<T> {
        let id = next_id();
        let bytes = len * std::mem::size_of::<T>();
        self.inner.registry.lock().live.insert(id, bytes);
        Buffer {
            inner: Arc::new(BufferInner {
                id,
                ctx_id: self.inner.id,
                registry: Arc::downgrade(&self.inner.registry),
                data: RwLock::new(vec![T::default(); len]),
            }),
        }
    }

    /// Allocates a buffer and uploads `host` into it.
    pub fn upload<T: Element>(&self, host: &[T]) -> Buffer<T> {
        let buf = self.alloc::<T>(host.len());
        buf.inner.data.write().copy_from_slice(host);
        buf
    }

    pub fn live_buffers(&self) -> usize {
        self.inner.registry.lock().live.len()
    }

    pub fn allocated_bytes(&self) -> usize {
        self.inner.registry.lock().live.values().sum()
    }

    pub(crate) fn check<T: Element>(&self, buf: &Buffer<T>) -> Result<()> {
        if buf.inner.ctx_id == self.inner.id {
            Ok(())
        } else {
            Err(Error::ContextMismatch)
        }
    }

    /// Starts recording every kernel launch (family, configuration, grid).
    pub fn record_launches(&self, enabled: bool) {
        *self.inner.launches.lock() = enabled.then(Vec::new);
    }

    /// Returns and clears the launches recorded so far.
    pub fn take_launches(&self) -> Vec<LaunchRecord> {
        self.inner
            .launches
            .lock()
            .as_mut()
            .map(std::mem::take)
            .unwrap_or_default()
    }

    pub(crate) fn log_launch(&self, record: impl FnOnce() -> LaunchRecord) {
        if let Some(log) = self.inner.launches.lock().as_mut() {
            log.push(record());
        }
    }

    pub fn set_database(&self, db: Database) {
        self.inner.params.write().set_database(db);
    }

    pub fn database(&self) -> Database {
        self.inner.params.read().database().clone()
    }

    /// Installs `config` for calls matching (family, precision, args). The
    /// configuration is validated against this context's device first.
    pub fn override_parameters(
        &self,
        family: KernelFamily,
        precision: Precision,
        args: ArgsSig,
        config: Configuration,
    ) -> Result<()> {
        self.inner.params.write().override_parameters(
            family,
            precision,
            &self.inner.device,
            args,
            config,
        )
    }

    pub fn clear_overrides(&self) {
        self.inner.params.write().clear_overrides();
    }

    pub fn set_direct_threshold(&self, threshold: usize) {
        self.inner.params.write().direct_threshold = threshold;
    }

    pub fn direct_threshold(&self) -> usize {
        self.inner.params.read().direct_threshold
    }

    /// The configuration a routine call with these arguments will use.
    pub fn resolve(
        &self,
        family: KernelFamily,
        precision: Precision,
        args: ArgsSig,
    ) -> Result<Configuration> {
        self.inner
            .params
            .read()
            .resolve(family, precision, &self.inner.device, args)
    }
}

struct BufferInner<T: Element> {
    id: u64,
    ctx_id: u64,
    registry: Weak<Mutex<Registry>>,
    data: RwLock<Vec<T>>,
}

impl<T: Element> Drop for BufferInner<T> {
    fn drop(&mut self) {
        if let Some(reg) = self.registry.upgrade() {
            reg.lock().live.remove(&self.id);
        }
    }
}

/// A handle to device memory holding `len` elements of `T`.
pub struct Buffer<T: Element> {
    inner: Arc<BufferInner<T>>,
}

impl<T: Element> Clone for Buffer<T> {
    fn clone(&self) -> Self {
        Buffer {
            inner: Arc::clone(&self.inner),
        }
    }
}

impl<T: Element> std::fmt::Debug for Buffer<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Buffer")
            .field("id", &self.inner.id)
            .field("len", &self.len())
            .finish()
    }
}

impl<T: Element> Buffer<T> {
    pub fn len(&self) -> usize {
        self.inner.data.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn byte_size(&self) -> usize {
        self.len() * std::mem::size_of::<T>()
    }

    pub fn same_as(&self, other: &Buffer<T>) -> bool {
        self.inner.id == other.inner.id
    }

    /// Host-to-device transfer of `host` starting at element `offset`.
    pub fn write(&self, offset: usize, host: &[T]) -> Result<()> {
        let mut data = self.inner.data.write();
        let end = checked_end(offset, host.len(), data.len())?;
        data[offset..end].copy_from_slice(host);
        Ok(())
    }

    /// Device-to-host transfer of `len` elements starting at `offset`.
    pub fn read(&self, offset: usize, len: usize) -> Result<Vec<T>> {
        let data = self.inner.data.read_recursive();
        let end = checked_end(offset, len, data.len())?;
        Ok(data[offset..end].to_vec())
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.inner.data.read_recursive().clone()
    }

    pub(crate) fn data(&self) -> RwLockReadGuard<'_, Vec<T>> {
        self.inner.data.read_recursive()
    }

    pub(crate) fn data_mut(&self) -> RwLockWriteGuard<'_, Vec<T>> {
        self.inner.data.write()
    }
}

impl<T: Scalar> Buffer<T> {
    pub fn precision(&self) -> Precision {
        T::PRECISION
    }
}

fn checked_end(offset: usize, len: usize, buffer_len: usize) -> Result<usize> {
    match offset.checked_add(len) {
        Some(end) if end <= buffer_len => Ok(end),
        _ => Err(Error::OutOfRange {
            offset,
            len,
            buffer_len,
        }),
    }
}

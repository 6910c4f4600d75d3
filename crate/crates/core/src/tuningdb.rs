//! Tuning database: stored runs, defaults per device group, lookup with
//! fallback, and run-time parameter overrides.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::device::{DeviceSpec, DeviceType};
use crate::error::{Error, Result};
use crate::kernels::params::{validate, ArgsSig, Configuration, KernelFamily};
use crate::kernels::space::{enumerate_search_space, SearchMode};
use crate::precision::Precision;
use crate::tuner::{MeasureStatus, TuningRun};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DbKey {
    pub family: KernelFamily,
    pub precision: Precision,
    pub device: String,
    pub architecture: String,
    pub vendor: String,
    pub device_type: DeviceType,
    pub args: ArgsSig,
}

impl DbKey {
    pub fn new(
        family: KernelFamily,
        precision: Precision,
        device: &DeviceSpec,
        args: ArgsSig,
    ) -> DbKey {
        DbKey {
            family,
            precision,
            device: device.name.clone(),
            architecture: device.architecture.clone(),
            vendor: device.vendor.clone(),
            device_type: device.device_type,
            args,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StoredStatus {
    Ok,
    Invalid,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoredMeasurement {
    pub params: BTreeMap<String, usize>,
    #[serde(default)]
    pub per_run_times_s: Vec<f64>,
    #[serde(default)]
    pub mean_time_s: Option<f64>,
    pub status: StoredStatus,
}

/// One tuning run as stored: every measurement plus the chosen best.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DbEntry {
    pub key: DbKey,
    pub measurements: Vec<StoredMeasurement>,
    pub best: BTreeMap<String, usize>,
}

impl DbEntry {
    pub fn from_run(run: &TuningRun) -> Result<DbEntry> {
        let best = run
            .best
            .as_ref()
            .ok_or_else(|| Error::Tuning("run has no best configuration".into()))?;
        let t = &run.task;
        Ok(DbEntry {
            key: DbKey::new(t.family, t.precision, &t.device, t.args),
            measurements: run
                .measurements
                .iter()
                .map(|m| StoredMeasurement {
                    params: m.configuration.params.clone(),
                    per_run_times_s: m.per_run_times.clone(),
                    mean_time_s: (m.status == MeasureStatus::Ok).then_some(m.mean_time),
                    status: match m.status {
                        MeasureStatus::Ok => StoredStatus::Ok,
                        MeasureStatus::Invalid(_) => StoredStatus::Invalid,
                        MeasureStatus::Failed(_) => StoredStatus::Failed,
                    },
                })
                .collect(),
            best: best.params.clone(),
        })
    }

    pub fn best_config(&self) -> Configuration {
        Configuration {
            family: self.key.family,
            params: self.best.clone(),
        }
    }

    /// Fastest mean time per configuration among ok measurements.
    fn times(&self) -> BTreeMap<Vec<usize>, (f64, Configuration)> {
        let mut out: BTreeMap<Vec<usize>, (f64, Configuration)> = BTreeMap::new();
        for m in &self.measurements {
            let (StoredStatus::Ok, Some(t)) = (m.status, m.mean_time_s) else {
                continue;
            };
            let c = Configuration {
                family: self.key.family,
                params: m.params.clone(),
            };
            let e = out.entry(c.values()).or_insert((t, c));
            if t < e.0 {
                e.0 = t;
            }
        }
        out
    }

    /// Mean time of the best configuration (infinite if it has no ok timing).
    pub fn best_time(&self) -> f64 {
        let key = self.best_config().values();
        self.times().get(&key).map(|e| e.0).unwrap_or(f64::INFINITY)
    }
}

/// Specificity level a lookup was answered at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackLevel {
    Device,
    DeviceAnyArgs,
    Architecture,
    Vendor,
    DeviceType,
    Global,
}

impl fmt::Display for FallbackLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FallbackLevel::Device => "device",
            FallbackLevel::DeviceAnyArgs => "device_any_args",
            FallbackLevel::Architecture => "architecture",
            FallbackLevel::Vendor => "vendor",
            FallbackLevel::DeviceType => "device_type",
            FallbackLevel::Global => "global",
        })
    }
}

/// A group of devices that shares a default.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Group {
    Device(String),
    Architecture(String),
    Vendor(String),
    DeviceType(DeviceType),
    Global,
}

impl Group {
    fn of(key: &DbKey) -> [Group; 5] {
        [
            Group::Device(key.device.clone()),
            Group::Architecture(key.architecture.clone()),
            Group::Vendor(key.vendor.clone()),
            Group::DeviceType(key.device_type),
            Group::Global,
        ]
    }
}

pub type Defaults = BTreeMap<(Group, KernelFamily, Precision), Configuration>;

/// Stored runs. Entries are never modified or removed; for a key with
/// several entries the one with the fastest best time is active.
#[derive(Clone, Debug, Default)]
pub struct Database {
    entries: Vec<DbEntry>,
    active: BTreeMap<DbKey, usize>,
    defaults: Defaults,
}

#[derive(Serialize, Deserialize)]
struct DatabaseFile {
    schema_version: u32,
    #[serde(default)]
    entries: Vec<DbEntry>,
}

impl Serialize for Database {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DatabaseFile {
            schema_version: SCHEMA_VERSION,
            entries: self.entries.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Database {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = DatabaseFile::deserialize(d)?;
        let mut db = Database::default();
        for e in file.entries {
            db.push(e);
        }
        db.defaults = compute_defaults(&db);
        Ok(db)
    }
}

impl PartialEq for Database {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl Database {
    pub fn new() -> Database {
        Database::default()
    }

    pub fn entries(&self) -> &[DbEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The active entry of every key.
    pub fn active_entries(&self) -> impl Iterator<Item = &DbEntry> {
        self.active.values().map(|&i| &self.entries[i])
    }

    pub fn active(&self, key: &DbKey) -> Option<&DbEntry> {
        self.active.get(key).map(|&i| &self.entries[i])
    }

    pub fn defaults(&self) -> &Defaults {
        &self.defaults
    }

    fn push(&mut self, entry: DbEntry) {
        let idx = self.entries.len();
        let better = match self.active.get(&entry.key) {
            Some(&cur) => entry.best_time() < self.entries[cur].best_time(),
            None => true,
        };
        if better {
            self.active.insert(entry.key.clone(), idx);
        }
        self.entries.push(entry);
    }

    /// Appends an entry and refreshes the defaults.
    pub fn insert_entry(&mut self, entry: DbEntry) {
        self.push(entry);
        self.defaults = compute_defaults(self);
    }

    pub fn from_json(text: &str) -> Result<Database> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Database> {
        Database::from_json(&std::fs::read_to_string(path)?)
    }

    /// Loads `path`, or returns an empty database if it does not exist.
    pub fn load_or_default(path: impl AsRef<Path>) -> Result<Database> {
        match std::fs::read_to_string(path) {
            Ok(text) => Database::from_json(&text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Database::new()),
            Err(e) => Err(e.into()),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Adds `run` under its key. The key's active entry changes only if the new
/// run's best is faster.
pub fn db_insert(mut db: Database, run: &TuningRun) -> Result<Database> {
    db.insert_entry(DbEntry::from_run(run)?);
    Ok(db)
}

/// The most specific configuration available for a call.
pub fn db_lookup(
    db: &Database,
    device: &DeviceSpec,
    family: KernelFamily,
    precision: Precision,
    args: ArgsSig,
) -> Result<(Configuration, FallbackLevel)> {
    if let Some(e) = db.active(&DbKey::new(family, precision, device, args)) {
        return Ok((e.best_config(), FallbackLevel::Device));
    }
    let chain = [
        (
            Group::Device(device.name.clone()),
            FallbackLevel::DeviceAnyArgs,
        ),
        (
            Group::Architecture(device.architecture.clone()),
            FallbackLevel::Architecture,
        ),
        (Group::Vendor(device.vendor.clone()), FallbackLevel::Vendor),
        (
            Group::DeviceType(device.device_type),
            FallbackLevel::DeviceType,
        ),
        (Group::Global, FallbackLevel::Global),
    ];
    for (group, level) in chain {
        if let Some(c) = db.defaults.get(&(group, family, precision)) {
            return Ok((c.clone(), level));
        }
    }
    Err(Error::Lookup(format!(
        "no defaults available for {family} in precision {precision}"
    )))
}

fn geo_mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for x in xs {
        sum += x.ln();
        n += 1;
    }
    if n == 0 {
        f64::INFINITY
    } else {
        (sum / n as f64).exp()
    }
}

/// Per group and (family, precision): the configuration with the lowest
/// geometric mean of relative time (time / member's best time) among the
/// configurations measured on every member. Members are the active entries
/// in the group. Without a common configuration, the configuration that is
/// best on the most members wins, ties by the geometric mean over the members
/// that measured it. Remaining ties go to the lexicographically smaller
/// parameter values.
pub fn compute_defaults(db: &Database) -> Defaults {
    let mut groups: BTreeMap<(Group, KernelFamily, Precision), Vec<&DbEntry>> = BTreeMap::new();
    for e in db.active_entries() {
        for g in Group::of(&e.key) {
            groups
                .entry((g, e.key.family, e.key.precision))
                .or_default()
                .push(e);
        }
    }
    let mut out = Defaults::new();
    for (gk, members) in groups {
        if let Some(c) = group_default(&members) {
            out.insert(gk, c);
        }
    }
    out
}

fn group_default(members: &[&DbEntry]) -> Option<Configuration> {
    struct Member {
        times: BTreeMap<Vec<usize>, (f64, Configuration)>,
        best: f64,
        best_key: Vec<usize>,
    }
    let members: Vec<Member> = members
        .iter()
        .filter_map(|e| {
            let times = e.times();
            let best = e.best_time();
            if !best.is_finite() || best <= 0.0 {
                return None;
            }
            Some(Member {
                best_key: e.best_config().values(),
                times,
                best,
            })
        })
        .collect();
    if members.is_empty() {
        return None;
    }
    let rel = |m: &Member, key: &Vec<usize>| m.times.get(key).map(|t| t.0 / m.best);
    let all: BTreeMap<&Vec<usize>, &Configuration> = members
        .iter()
        .flat_map(|m| m.times.iter().map(|(k, v)| (k, &v.1)))
        .collect();

    let common: Vec<&Vec<usize>> = all
        .keys()
        .copied()
        .filter(|k| members.iter().all(|m| m.times.contains_key(*k)))
        .collect();
    let pick = if !common.is_empty() {
        let mut best: Option<(f64, &Vec<usize>)> = None;
        for k in common {
            let g = geo_mean(members.iter().map(|m| rel(m, k).unwrap()));
            if best.is_none_or(|(bg, _)| g < bg) {
                best = Some((g, k));
            }
        }
        best.map(|b| b.1)
    } else {
        let mut wins: BTreeMap<&Vec<usize>, usize> = BTreeMap::new();
        for m in &members {
            *wins.entry(&m.best_key).or_default() += 1;
        }
        let mut best: Option<(usize, f64, &Vec<usize>)> = None;
        for (k, w) in wins {
            let g = geo_mean(members.iter().filter_map(|m| rel(m, k)));
            let better = match best {
                None => true,
                Some((bw, bg, _)) => w > bw || (w == bw && g < bg),
            };
            if better {
                best = Some((w, g, k));
            }
        }
        best.map(|b| b.2)
    };
    pick.and_then(|k| all.get(k).map(|c| (*c).clone()))
}

/// Parameters built into the library, used when neither an override nor the
/// database has an answer.
pub fn builtin_default(family: KernelFamily) -> Configuration {
    let c = match family.base() {
        KernelFamily::Axpy => Configuration::from_values(KernelFamily::Axpy, &[64, 4, 4]),
        KernelFamily::Dot => Configuration::from_values(KernelFamily::Dot, &[128, 32]),
        KernelFamily::Gemv => Configuration::from_values(KernelFamily::Gemv, &[64, 1, 4]),
        KernelFamily::Ger => Configuration::from_values(KernelFamily::Ger, &[16, 4, 2]),
        KernelFamily::Gemm => Configuration::from_values(
            KernelFamily::Gemm,
            &[64, 64, 16, 8, 8, 8, 8, 8, 4, 4, 0, 0, 0, 0],
        ),
        KernelFamily::Transform => {
            Configuration::from_values(KernelFamily::Transform, &[16, 16, 2])
        }
        _ => unreachable!(),
    };
    c.with_family(family)
}

type OverrideKey = (KernelFamily, Precision, ArgsSig);

/// Per-context parameter state: the database, overrides and the gemm
/// routing threshold.
#[derive(Debug)]
pub struct ParameterStore {
    db: Database,
    overrides: HashMap<OverrideKey, Configuration>,
    /// Gemm calls with `max(m, n, k)` below this use the direct kernel.
    pub direct_threshold: usize,
    cache: parking_lot::Mutex<HashMap<OverrideKey, Configuration>>,
}

impl Default for ParameterStore {
    fn default() -> Self {
        ParameterStore {
            db: Database::new(),
            overrides: HashMap::new(),
            direct_threshold: 128,
            cache: parking_lot::Mutex::new(HashMap::new()),
        }
    }
}

impl ParameterStore {
    pub fn set_database(&mut self, db: Database) {
        self.db = db;
        self.cache.get_mut().clear();
    }

    pub fn database(&self) -> &Database {
        &self.db
    }

    pub fn override_parameters(
        &mut self,
        family: KernelFamily,
        precision: Precision,
        device: &DeviceSpec,
        args: ArgsSig,
        config: Configuration,
    ) -> Result<()> {
        if config.family.base() != family.base() {
            return Err(Error::usage(format!(
                "{} configuration given for {family}",
                config.family
            )));
        }
        let config = config.with_family(family);
        validate(&config, device, precision).into_result()?;
        self.overrides.insert((family, precision, args), config);
        self.cache.get_mut().clear();
        Ok(())
    }

    pub fn clear_overrides(&mut self) {
        self.overrides.clear();
        self.cache.get_mut().clear();
    }

    /// Override, then database, then built-in default, then the first
    /// valid curated configuration. Database and built-in answers are used
    /// only if they are valid on `device`.
    pub fn resolve(
        &self,
        family: KernelFamily,
        precision: Precision,
        device: &DeviceSpec,
        args: ArgsSig,
    ) -> Result<Configuration> {
        let key = (family, precision, args);
        if let Some(c) = self.overrides.get(&key) {
            return Ok(c.clone());
        }
        if let Some(c) = self.cache.lock().get(&key) {
            return Ok(c.clone());
        }
        let c = self.resolve_uncached(family, precision, device, args)?;
        let mut cache = self.cache.lock();
        if cache.len() > 4096 {
            cache.clear();
        }
        cache.insert(key, c.clone());
        Ok(c)
    }

    fn resolve_uncached(
        &self,
        family: KernelFamily,
        precision: Precision,
        device: &DeviceSpec,
        args: ArgsSig,
    ) -> Result<Configuration> {
        let valid = |c: &Configuration| validate(c, device, precision).is_valid();
        let mut tried: BTreeSet<KernelFamily> = BTreeSet::new();
        // Batched families are keyed separately and fall back to the plain family.
        for f in [family, family.base()] {
            if !tried.insert(f) {
                continue;
            }
            if let Ok((c, _)) = db_lookup(&self.db, device, f, precision, args) {
                let c = c.with_family(family);
                if valid(&c) {
                    return Ok(c);
                }
            }
        }
        let c = builtin_default(family);
        if valid(&c) {
            return Ok(c);
        }
        enumerate_search_space(family, SearchMode::Curated)
            .find(|c| valid(c))
            .ok_or_else(|| {
                Error::Lookup(format!(
                    "no valid {family} configuration for device {}",
                    device.name
                ))
            })
    }
}

//! Tuning parameters of the kernel families and the validity filter.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::device::DeviceSpec;
use crate::error::{Error, Result};
use crate::precision::Precision;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Axpy,
    Dot,
    Gemv,
    Ger,
    Gemm,
    Transform,
    AxpyBatched,
    GemmBatched,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 8] = [
        KernelFamily::Axpy,
        KernelFamily::Dot,
        KernelFamily::Gemv,
        KernelFamily::Ger,
        KernelFamily::Gemm,
        KernelFamily::Transform,
        KernelFamily::AxpyBatched,
        KernelFamily::GemmBatched,
    ];

    /// Parameter names in canonical order.
    pub fn param_names(self) -> &'static [&'static str] {
        match self.base() {
            KernelFamily::Axpy => &["WGS", "WPT", "VW"],
            KernelFamily::Dot => &["WGS1", "WGS2"],
            KernelFamily::Gemv => &["WGS", "WPT", "VW"],
            KernelFamily::Ger => &["WGS1", "WGS2", "WPT"],
            KernelFamily::Gemm => &[
                "MWG", "NWG", "KWG", "MDIMC", "NDIMC", "MDIMA", "NDIMB", "KWI", "VWM", "VWN",
                "STRM", "STRN", "SA", "SB",
            ],
            KernelFamily::Transform => &["DIMX", "DIMY", "WPT"],
            _ => unreachable!(),
        }
    }

    /// Batched families share the parameters of their plain counterpart.
    pub fn base(self) -> KernelFamily {
        match self {
            KernelFamily::AxpyBatched => KernelFamily::Axpy,
            KernelFamily::GemmBatched => KernelFamily::Gemm,
            f => f,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Axpy => "axpy",
            KernelFamily::Dot => "dot",
            KernelFamily::Gemv => "gemv",
            KernelFamily::Ger => "ger",
            KernelFamily::Gemm => "gemm",
            KernelFamily::Transform => "transform",
            KernelFamily::AxpyBatched => "axpybatched",
            KernelFamily::GemmBatched => "gemmbatched",
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        let name = lower.strip_prefix('x').unwrap_or(&lower);
        KernelFamily::ALL
            .into_iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| Error::usage(format!("unknown kernel family '{s}'")))
    }
}

/// Size tuple a configuration was tuned for. Vector routines use `n` only.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct ArgsSig {
    #[serde(default)]
    pub m: usize,
    #[serde(default)]
    pub n: usize,
    #[serde(default)]
    pub k: usize,
}

impl ArgsSig {
    pub const fn mnk(m: usize, n: usize, k: usize) -> Self {
        ArgsSig { m, n, k }
    }

    pub const fn vector(n: usize) -> Self {
        ArgsSig { m: 0, n, k: 0 }
    }

    pub const fn matrix(m: usize, n: usize) -> Self {
        ArgsSig { m, n, k: 0 }
    }
}

impl fmt::Display for ArgsSig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m={} n={} k={}", self.m, self.n, self.k)
    }
}

/// A full assignment of values to a family's parameters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub family: KernelFamily,
    pub params: BTreeMap<String, usize>,
}

impl Configuration {
    /// Builds a configuration from values given in canonical parameter order.
    pub fn from_values(family: KernelFamily, values: &[usize]) -> Configuration {
        let names = family.param_names();
        assert_eq!(
            names.len(),
            values.len(),
            "wrong number of values for {family}"
        );
        Configuration {
            family,
            params: names
                .iter()
                .map(|n| n.to_string())
                .zip(values.iter().copied())
                .collect(),
        }
    }

    pub fn from_map(
        family: KernelFamily,
        params: BTreeMap<String, usize>,
    ) -> Result<Configuration> {
        let c = Configuration { family, params };
        c.check_names()?;
        Ok(c)
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.params.get(name).copied()
    }

    fn need(&self, name: &'static str) -> Result<usize> {
        self.get(name)
            .ok_or_else(|| Error::InvalidConfiguration(vec![Violation::MissingParameter(name)]))
    }

    /// Values in canonical order; used for deterministic tie-breaking.
    pub fn values(&self) -> Vec<usize> {
        self.family
            .param_names()
            .iter()
            .map(|n| self.get(n).unwrap_or(0))
            .collect()
    }

    /// Same parameters, relabelled as another family with an identical parameter set.
    pub fn with_family(&self, family: KernelFamily) -> Configuration {
        debug_assert_eq!(family.base(), self.family.base());
        Configuration {
            family,
            params: self.params.clone(),
        }
    }

    fn check_names(&self) -> Result<()> {
        let names = self.family.param_names();
        let mut v = Vec::new();
        for n in names {
            if !self.params.contains_key(*n) {
                v.push(Violation::MissingParameter(n));
            }
        }
        for k in self.params.keys() {
            if !names.contains(&k.as_str()) {
                v.push(Violation::UnknownParameter(k.clone()));
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfiguration(v))
        }
    }

    /// Threads per work-group this configuration launches.
    pub fn threads(&self) -> usize {
        let g = |n| self.get(n).unwrap_or(1);
        match self.family.base() {
            KernelFamily::Axpy | KernelFamily::Gemv => g("WGS"),
            KernelFamily::Dot => g("WGS1").max(g("WGS2")),
            KernelFamily::Ger => g("WGS1") * g("WGS2"),
            KernelFamily::Gemm => g("MDIMC") * g("NDIMC"),
            KernelFamily::Transform => g("DIMX") * g("DIMY"),
            _ => unreachable!(),
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .family
            .param_names()
            .iter()
            .map(|n| format!("{n}={}", self.get(n).unwrap_or(0)))
            .collect();
        write!(f, "{} [{}]", self.family, parts.join(" "))
    }
}

/// One reason a configuration cannot run on a device.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    WorkGroupTooLarge {
        threads: usize,
        max: usize,
    },
    LocalMemoryExceeded {
        bytes: usize,
        max: usize,
    },
    /// `lhs mod rhs != 0` for the named constraint.
    NotDivisible {
        constraint: String,
        lhs: usize,
        rhs: usize,
    },
    ZeroValue(String),
    MissingParameter(&'static str),
    UnknownParameter(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::WorkGroupTooLarge { threads, max } => {
                write!(f, "work-group too large ({threads} threads > {max})")
            }
            Violation::LocalMemoryExceeded { bytes, max } => {
                write!(f, "local memory exceeded ({bytes} B > {max} B)")
            }
            Violation::NotDivisible {
                constraint,
                lhs,
                rhs,
            } => {
                write!(f, "{constraint} ({lhs} mod {rhs} != 0)")
            }
            Violation::ZeroValue(n) => write!(f, "{n} must be positive"),
            Violation::MissingParameter(n) => write!(f, "missing parameter {n}"),
            Violation::UnknownParameter(n) => write!(f, "unknown parameter {n}"),
        }
    }
}

/// Outcome of the validity filter.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Verdict {
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidConfiguration(self.violations))
        }
    }

    fn divisible(&mut self, constraint: &str, lhs: usize, rhs: usize) {
        if rhs == 0 || !lhs.is_multiple_of(rhs) {
            self.violations.push(Violation::NotDivisible {
                constraint: constraint.to_string(),
                lhs,
                rhs,
            });
        }
    }

    fn threads(&mut self, threads: usize, device: &DeviceSpec) {
        if threads > device.max_work_group_size {
            self.violations.push(Violation::WorkGroupTooLarge {
                threads,
                max: device.max_work_group_size,
            });
        }
    }

    fn local(&mut self, bytes: usize, device: &DeviceSpec) {
        if bytes > device.local_mem_bytes {
            self.violations.push(Violation::LocalMemoryExceeded {
                bytes,
                max: device.local_mem_bytes,
            });
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AxpyParams {
    pub wgs: usize,
    pub wpt: usize,
    pub vw: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DotParams {
    /// Threads per group in the first (grid-wide) reduction stage.
    pub wgs1: usize,
    /// Threads of the single group in the second stage; the first stage
    /// launches `2 * wgs2` groups.
    pub wgs2: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GemvParams {
    pub wgs: usize,
    pub wpt: usize,
    pub vw: usize,
}

impl GemvParams {
    pub fn rows_per_group(&self) -> usize {
        self.wgs * self.wpt
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GerParams {
    pub wgs1: usize,
    pub wgs2: usize,
    pub wpt: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TransformParams {
    pub dimx: usize,
    pub dimy: usize,
    pub wpt: usize,
}

impl TransformParams {
    /// Rows and columns of the tile one work-group moves.
    pub fn tile(&self) -> (usize, usize) {
        (self.dimx * self.wpt, self.dimy * self.wpt)
    }
}

/// The 14 parameters of the tiled matrix-multiplication kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GemmParams {
    /// Tile of C computed by one work-group (rows, columns) and the k-slice
    /// staged per iteration.
    pub mwg: usize,
    pub nwg: usize,
    pub kwg: usize,
    /// Thread grid of a work-group.
    pub mdimc: usize,
    pub ndimc: usize,
    /// Thread grid reshaping used to cooperatively load A and B tiles.
    pub mdima: usize,
    pub ndimb: usize,
    /// Unroll factor of the inner k loop.
    pub kwi: usize,
    /// Vector widths for A/C and B.
    pub vwm: usize,
    pub vwn: usize,
    /// Strided (round-robin) rather than contiguous per-thread element sets.
    pub strm: bool,
    pub strn: bool,
    /// Stage A / B tiles in local memory.
    pub sa: bool,
    pub sb: bool,
}

impl GemmParams {
    /// Rows of C per thread.
    pub fn mwi(&self) -> usize {
        self.mwg / self.mdimc
    }

    /// Columns of C per thread.
    pub fn nwi(&self) -> usize {
        self.nwg / self.ndimc
    }

    pub fn threads(&self) -> usize {
        self.mdimc * self.ndimc
    }
}

macro_rules! typed_params {
    ($ty:ident, $fam:expr, { $($field:ident : $name:literal),* $(,)? }) => {
        impl $ty {
            pub fn from_config(c: &Configuration) -> Result<Self> {
                if c.family.base() != $fam {
                    return Err(Error::usage(format!(
                        "configuration for {} used with a {} kernel", c.family, $fam
                    )));
                }
                c.check_names()?;
                Ok($ty { $($field: c.need($name)?),* })
            }

            pub fn to_config(&self) -> Configuration {
                Configuration::from_values($fam, &[$(self.$field),*])
            }
        }
    };
}

typed_params!(AxpyParams, KernelFamily::Axpy, { wgs: "WGS", wpt: "WPT", vw: "VW" });
typed_params!(DotParams, KernelFamily::Dot, { wgs1: "WGS1", wgs2: "WGS2" });
typed_params!(GemvParams, KernelFamily::Gemv, { wgs: "WGS", wpt: "WPT", vw: "VW" });
typed_params!(GerParams, KernelFamily::Ger, { wgs1: "WGS1", wgs2: "WGS2", wpt: "WPT" });
typed_params!(TransformParams, KernelFamily::Transform, { dimx: "DIMX", dimy: "DIMY", wpt: "WPT" });

impl GemmParams {
    pub fn from_config(c: &Configuration) -> Result<Self> {
        if c.family.base() != KernelFamily::Gemm {
            return Err(Error::usage(format!(
                "configuration for {} used with a gemm kernel",
                c.family
            )));
        }
        c.check_names()?;
        let flag = |n: &'static str| -> Result<bool> {
            match c.need(n)? {
                0 => Ok(false),
                1 => Ok(true),
                v => Err(Error::InvalidConfiguration(vec![Violation::NotDivisible {
                    constraint: format!("{n} must be 0 or 1"),
                    lhs: v,
                    rhs: 2,
                }])),
            }
        };
        Ok(GemmParams {
            mwg: c.need("MWG")?,
            nwg: c.need("NWG")?,
            kwg: c.need("KWG")?,
            mdimc: c.need("MDIMC")?,
            ndimc: c.need("NDIMC")?,
            mdima: c.need("MDIMA")?,
            ndimb: c.need("NDIMB")?,
            kwi: c.need("KWI")?,
            vwm: c.need("VWM")?,
            vwn: c.need("VWN")?,
            strm: flag("STRM")?,
            strn: flag("STRN")?,
            sa: flag("SA")?,
            sb: flag("SB")?,
        })
    }

    pub fn to_config(&self) -> Configuration {
        Configuration::from_values(
            KernelFamily::Gemm,
            &[
                self.mwg,
                self.nwg,
                self.kwg,
                self.mdimc,
                self.ndimc,
                self.mdima,
                self.ndimb,
                self.kwi,
                self.vwm,
                self.vwn,
                self.strm as usize,
                self.strn as usize,
                self.sa as usize,
                self.sb as usize,
            ],
        )
    }
}

/// Bytes of local memory the gemm kernel stages per work-group.
pub fn local_mem_usage(p: &GemmParams, precision: Precision) -> usize {
    (p.sa as usize * p.kwg * p.mwg + p.sb as usize * p.kwg * p.nwg) * precision.elem_size()
}

pub fn validate_gemm_params(p: &GemmParams, device: &DeviceSpec, precision: Precision) -> Verdict {
    let mut v = Verdict::default();
    for (name, val) in [
        ("MWG", p.mwg),
        ("NWG", p.nwg),
        ("KWG", p.kwg),
        ("MDIMC", p.mdimc),
        ("NDIMC", p.ndimc),
        ("MDIMA", p.mdima),
        ("NDIMB", p.ndimb),
        ("KWI", p.kwi),
        ("VWM", p.vwm),
        ("VWN", p.vwn),
    ] {
        if val == 0 {
            v.violations.push(Violation::ZeroValue(name.to_string()));
        }
    }
    if !v.is_valid() {
        return v;
    }
    let threads = p.mdimc * p.ndimc;
    v.threads(threads, device);
    v.local(local_mem_usage(p, precision), device);
    // The k loop is unrolled KWI times inside each KWG slice.
    v.divisible("KWG mod KWI", p.kwg, p.kwi);
    // Each thread owns MWI = MWG/MDIMC rows, loaded as MWI/VWM vectors.
    v.divisible("MWG mod (MDIMC*VWM)", p.mwg, p.mdimc * p.vwm);
    v.divisible("NWG mod (NDIMC*VWN)", p.nwg, p.ndimc * p.vwn);
    if p.sa {
        // Cooperative A-tile load: threads reshaped as MDIMA x (threads/MDIMA).
        v.divisible("MWG mod (MDIMA*VWM)", p.mwg, p.mdima * p.vwm);
        v.divisible("(MDIMC*NDIMC) mod MDIMA", threads, p.mdima);
        if threads.is_multiple_of(p.mdima) {
            v.divisible("KWG mod ((MDIMC*NDIMC)/MDIMA)", p.kwg, threads / p.mdima);
        }
    }
    if p.sb {
        v.divisible("NWG mod (NDIMB*VWN)", p.nwg, p.ndimb * p.vwn);
        v.divisible("(MDIMC*NDIMC) mod NDIMB", threads, p.ndimb);
        if threads.is_multiple_of(p.ndimb) {
            v.divisible("KWG mod ((MDIMC*NDIMC)/NDIMB)", p.kwg, threads / p.ndimb);
        }
    }
    v
}

/// Largest per-thread partial a reduction keeps in local memory: two values
/// of the real accumulation type (a key and an index, or a scale and a sum).
pub fn reduction_partial_bytes(precision: Precision) -> usize {
    match precision {
        Precision::Half | Precision::Single | Precision::ComplexSingle => 8,
        Precision::Double | Precision::ComplexDouble => 16,
    }
}

/// Validity filter for any family.
pub fn validate(config: &Configuration, device: &DeviceSpec, precision: Precision) -> Verdict {
    if let Err(Error::InvalidConfiguration(violations)) = config.check_names() {
        return Verdict { violations };
    }
    let es = precision.elem_size();
    let mut v = Verdict::default();
    let zero_check = |v: &mut Verdict| {
        for (k, val) in &config.params {
            if *val == 0 {
                v.violations.push(Violation::ZeroValue(k.clone()));
            }
        }
    };
    match config.family.base() {
        KernelFamily::Gemm => {
            // check_names passed and flags are checked in from_config
            return match GemmParams::from_config(config) {
                Ok(p) => validate_gemm_params(&p, device, precision),
                Err(Error::InvalidConfiguration(violations)) => Verdict { violations },
                Err(_) => unreachable!(),
            };
        }
        KernelFamily::Axpy => {
            zero_check(&mut v);
            if v.is_valid() {
                v.threads(config.threads(), device);
            }
        }
        KernelFamily::Dot => {
            zero_check(&mut v);
            if v.is_valid() {
                let p = DotParams::from_config(config).expect("names checked");
                v.threads(p.wgs1.max(p.wgs2), device);
                v.local(
                    p.wgs1.max(p.wgs2) * reduction_partial_bytes(precision),
                    device,
                );
            }
        }
        KernelFamily::Gemv => {
            zero_check(&mut v);
            if v.is_valid() {
                let p = GemvParams::from_config(config).expect("names checked");
                v.threads(p.wgs, device);
                // x is staged WGS elements at a time and consumed VW at a time.
                v.divisible("WGS mod VW", p.wgs, p.vw);
                v.local(p.wgs * es, device);
            }
        }
        KernelFamily::Ger => {
            zero_check(&mut v);
            if v.is_valid() {
                v.threads(config.threads(), device);
            }
        }
        KernelFamily::Transform => {
            zero_check(&mut v);
            if v.is_valid() {
                let p = TransformParams::from_config(config).expect("names checked");
                v.threads(p.dimx * p.dimy, device);
                let (r, c) = p.tile();
                v.local(r * c * es, device);
            }
        }
        _ => unreachable!(),
    }
    v
}

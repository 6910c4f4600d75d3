//! Search spaces: per-family value grids, curated sets and random sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::params::{Configuration, KernelFamily};

const GEMM_GRID: [(&str, &[usize]); 14] = [
    ("MWG", &[16, 32, 64, 128]),
    ("NWG", &[16, 32, 64, 128]),
    ("KWG", &[16, 32]),
    ("MDIMC", &[8, 16, 32]),
    ("NDIMC", &[8, 16, 32]),
    ("MDIMA", &[8, 16, 32]),
    ("NDIMB", &[8, 16, 32]),
    ("KWI", &[2, 8]),
    ("VWM", &[1, 2, 4, 8]),
    ("VWN", &[1, 2, 4, 8]),
    ("STRM", &[0, 1]),
    ("STRN", &[0, 1]),
    ("SA", &[0, 1]),
    ("SB", &[0, 1]),
];

const WGS: &[usize] = &[32, 64, 128, 256, 512, 1024];

/// How configurations are drawn from a family's space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchMode {
    /// The fixed list of likely-good combinations, in deterministic order.
    Curated,
    /// `n` draws, uniform over the full grid, reproducible from `seed`.
    Random { n: usize, seed: u64 },
}

/// The value grid of every parameter of one family.
#[derive(Clone, Debug)]
pub struct SearchSpace {
    pub family: KernelFamily,
    grids: Vec<(&'static str, &'static [usize])>,
}

impl SearchSpace {
    pub fn for_family(family: KernelFamily) -> SearchSpace {
        let grids: Vec<(&'static str, &'static [usize])> = match family.base() {
            KernelFamily::Gemm => GEMM_GRID.to_vec(),
            KernelFamily::Axpy => vec![
                ("WGS", WGS),
                ("WPT", &[1, 2, 4, 8]),
                ("VW", &[1, 2, 4, 8, 16]),
            ],
            KernelFamily::Dot => vec![("WGS1", WGS), ("WGS2", WGS)],
            KernelFamily::Gemv => {
                vec![
                    ("WGS", &[32, 64, 128, 256]),
                    ("WPT", &[1, 2, 4]),
                    ("VW", &[1, 2, 4]),
                ]
            }
            KernelFamily::Ger => vec![
                ("WGS1", &[4, 8, 16, 32, 64]),
                ("WGS2", &[1, 2, 4, 8, 16, 32]),
                ("WPT", &[1, 2, 4]),
            ],
            KernelFamily::Transform => {
                vec![
                    ("DIMX", &[8, 16, 32]),
                    ("DIMY", &[8, 16, 32]),
                    ("WPT", &[1, 2, 4]),
                ]
            }
            _ => unreachable!(),
        };
        debug_assert!(grids
            .iter()
            .map(|g| g.0)
            .eq(family.param_names().iter().copied()));
        SearchSpace { family, grids }
    }

    pub fn grid(&self, name: &str) -> Option<&'static [usize]> {
        self.grids.iter().find(|g| g.0 == name).map(|g| g.1)
    }

    /// Number of combinations in the full grid, before any filtering.
    pub fn cardinality(&self) -> u64 {
        self.grids.iter().map(|g| g.1.len() as u64).product()
    }

    /// Decodes a mixed-radix index into a configuration (last parameter varies fastest).
    pub fn config_at(&self, mut index: u64) -> Configuration {
        let mut values = vec![0; self.grids.len()];
        for (slot, (_, grid)) in values.iter_mut().zip(&self.grids).rev() {
            let len = grid.len() as u64;
            *slot = grid[(index % len) as usize];
            index /= len;
        }
        Configuration::from_values(self.family, &values)
    }

    pub fn iter_full(&self) -> impl Iterator<Item = Configuration> + '_ {
        (0..self.cardinality()).map(move |i| self.config_at(i))
    }

    /// One uniform draw from the full grid.
    pub fn sample(&self, rng: &mut impl Rng) -> Configuration {
        let values: Vec<usize> = self
            .grids
            .iter()
            .map(|(_, g)| g[rng.gen_range(0..g.len())])
            .collect();
        Configuration::from_values(self.family, &values)
    }

    /// The curated set. For gemm this couples parameters (MWG=NWG,
    /// MDIMC=NDIMC=MDIMA=NDIMB, VWM=VWN, SA=SB, no strided loads); the small
    /// families use their full grid.
    pub fn curated(&self) -> Vec<Configuration> {
        if self.family.base() != KernelFamily::Gemm {
            return self.iter_full().collect();
        }
        let mut out = Vec::new();
        for wg in [32, 64, 128] {
            for kwg in [16, 32] {
                for dim in [8, 16] {
                    for kwi in [2, 8] {
                        for vw in [1, 2, 4, 8] {
                            for s in [0, 1] {
                                out.push(Configuration::from_values(
                                    self.family,
                                    &[wg, wg, kwg, dim, dim, dim, dim, kwi, vw, vw, 0, 0, s, s],
                                ));
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Configurations of `family` in the requested mode. Neither stream is
/// filtered for a device; callers apply the validity filter.
pub fn enumerate_search_space(
    family: KernelFamily,
    mode: SearchMode,
) -> Box<dyn Iterator<Item = Configuration>> {
    let space = SearchSpace::for_family(family);
    match mode {
        SearchMode::Curated => Box::new(space.curated().into_iter()),
        SearchMode::Random { n, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Box::new((0..n).map(move |_| space.sample(&mut rng)))
        }
    }
}

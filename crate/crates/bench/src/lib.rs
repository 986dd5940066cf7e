//! Shared fixtures for the benchmarks under `benches/`.

use dantzig_density::{DensityId, DictionaryKind, EmpiricalStats, GramCache, Setup};

/// A prepared problem: dictionary, Gram matrix, true coefficients and the
/// statistics of one seeded sample.
pub fn fixture(density: DensityId, kind: DictionaryKind, n: usize, seed: u64) -> (Setup, EmpiricalStats) {
    let setup = Setup::new(density, kind, n, &GramCache::in_memory()).expect("fixture setup");
    let sample = setup.density.sample(n, seed).expect("fixture sample");
    let stats = EmpiricalStats::compute(&sample, &setup.dict, 1.01).expect("fixture statistics");
    (setup, stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_is_consistent() {
        let (setup, stats) = fixture(DensityId::F1, DictionaryKind::Haar, 64, 1);
        assert_eq!(setup.gram.dim(), stats.beta_hat.len());
        assert_eq!(setup.beta0.len(), setup.dict.len());
    }
}

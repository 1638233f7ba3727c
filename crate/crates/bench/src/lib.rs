//! Shared fixtures for the benchmarks.

use hms_core::procgen::{generate_dataset, sample_target, TargetMode};
use hms_core::{GenConfig, SceneGraph, TargetSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `n` test-config graphs with one held-out target each.
pub fn test_episodes(n: usize, seed: u64) -> (GenConfig, Vec<(SceneGraph, TargetSpec)>) {
    let cfg = GenConfig::default_test();
    let ds = generate_dataset(&cfg, n, seed).expect("default tables generate");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let episodes = ds
        .graphs
        .into_iter()
        .map(|g| {
            let t = sample_target(&g, &cfg, TargetMode::Test, &mut rng).expect("usable graph");
            (g, t)
        })
        .collect();
    (cfg, episodes)
}

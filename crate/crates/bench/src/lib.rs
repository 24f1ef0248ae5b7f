//! Shared fixtures for the criterion benchmarks.

use tinyclf_core::synth;
use tinyclf_core::ModelIR;

/// Toy models with a batch of inputs each, drawn from a fixed seed.
pub fn fixtures(n_inputs: usize) -> Vec<(&'static str, ModelIR, Vec<Vec<f64>>)> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    synth::toy_models()
        .into_iter()
        .map(|(name, m)| {
            let inputs = (0..n_inputs)
                .map(|_| synth::random_input(&mut rng, m.n_features, 2.0))
                .collect();
            (name, m, inputs)
        })
        .collect()
}

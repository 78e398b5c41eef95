//! The coherent-evolution reference distribution, cached on disk by content.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use trotter_bias::observables::DistributionSource;
use trotter_bias::schrodinger::{evolve, ground_state_probabilities};
use trotter_bias::{GroundStateDistribution64, GroundStates64, Problem64};

use crate::error::Result;

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    key: String,
    tau_sd: f64,
    dt_sd: f64,
    /// Exact bit patterns, so a cache hit reproduces a fresh run bit for bit.
    probs_bits: Vec<u64>,
}

/// SHA-256 over the canonical problem JSON and the integration parameters.
pub fn reference_key(problem: &Problem64, tau_sd: f64, dt_sd: f64) -> String {
    let mut hasher = Sha256::new();
    hasher.update(problem.to_json_string().as_bytes());
    hasher.update(tau_sd.to_bits().to_le_bytes());
    hasher.update(dt_sd.to_bits().to_le_bytes());
    format!("{:x}", hasher.finalize())
}

fn cache_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("sd-reference-{}.json", &key[..16]))
}

fn load(path: &Path, key: &str, n: usize) -> Option<Vec<f64>> {
    let entry: CacheEntry = serde_json::from_str(&fs::read_to_string(path).ok()?).ok()?;
    (entry.key == key && entry.probs_bits.len() == n)
        .then(|| entry.probs_bits.into_iter().map(f64::from_bits).collect())
}

/// Ground-state probabilities of `Ψ(τ_sd)`. With a `cache_dir`, a stored
/// result for the same key is reused and a fresh one is written back.
pub fn schrodinger_reference(
    problem: &Problem64,
    ground_states: &GroundStates64,
    tau_sd: f64,
    dt_sd: f64,
    cache_dir: Option<&Path>,
) -> Result<GroundStateDistribution64> {
    let key = reference_key(problem, tau_sd, dt_sd);
    let cached = cache_dir.and_then(|dir| load(&cache_path(dir, &key), &key, ground_states.count()));
    let probs = match cached {
        Some(p) => p,
        None => {
            let probs = ground_state_probabilities(&evolve(problem, tau_sd, dt_sd)?, ground_states)?;
            if let Some(dir) = cache_dir {
                fs::create_dir_all(dir)?;
                let entry = CacheEntry {
                    key: key.clone(),
                    tau_sd,
                    dt_sd,
                    probs_bits: probs.iter().map(|p| p.to_bits()).collect(),
                };
                fs::write(cache_path(dir, &key), serde_json::to_string_pretty(&entry)?)?;
            }
            probs
        }
    };
    Ok(GroundStateDistribution64::new(ground_states, probs, DistributionSource::Schrodinger)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_depends_on_every_input() {
        let p2 = Problem64::toy_model(2).unwrap();
        let p3 = Problem64::toy_model(3).unwrap();
        let base = reference_key(&p2, 100.0, 1e-3);
        assert_eq!(base.len(), 64);
        assert_eq!(base, reference_key(&p2, 100.0, 1e-3));
        assert_ne!(base, reference_key(&p3, 100.0, 1e-3));
        assert_ne!(base, reference_key(&p2, 50.0, 1e-3));
        assert_ne!(base, reference_key(&p2, 100.0, 5e-4));
    }

    #[test]
    fn cache_hit_is_bit_identical() {
        let dir = std::env::temp_dir().join(format!("sd-cache-test-{}", std::process::id()));
        let p = Problem64::toy_model(2).unwrap();
        let gs = p.ground_states().unwrap();
        let fresh = schrodinger_reference(&p, &gs, 2.0, 1e-3, Some(&dir)).unwrap();
        let key = reference_key(&p, 2.0, 1e-3);
        assert!(cache_path(&dir, &key).exists());
        let hit = schrodinger_reference(&p, &gs, 2.0, 1e-3, Some(&dir)).unwrap();
        assert_eq!(fresh, hit);
        fs::remove_dir_all(&dir).ok();
    }
}

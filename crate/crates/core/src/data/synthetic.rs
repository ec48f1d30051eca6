//! Seeded stand-in for the replicated-features file.
//!
//! Same header, 80 subjects (40 PD) × 3 replications. Each feature is a
//! subject-level Gaussian shifted by a per-feature class effect plus
//! replication noise, so correlation screening, the learners and the
//! CLI can be exercised without the real recordings. Values are synthetic
//! and carry no clinical meaning.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, FeatureGroup, FeatureSpec, Sample, Schema, ACOUSTIC_FEATURES};

/// Class-mean shift (in subject-level standard deviations) per feature.
fn class_effect(name: &str) -> f64 {
    match name {
        "MFCC10" | "Delta11" | "HNR35" | "HNR38" => 1.9,
        "GNE" => 1.6,
        "DFA" | "RPDE" | "Jitter_abs" => 0.1,
        _ => match FeatureGroup::from_name(name) {
            Some(FeatureGroup::Mfcc) | Some(FeatureGroup::DeltaMfcc) => 1.3,
            Some(FeatureGroup::HarmonicToNoise) => 1.4,
            Some(FeatureGroup::AmplitudePerturbation) => 1.1,
            Some(FeatureGroup::PitchPerturbation) => 1.0,
            _ => 0.8,
        },
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn replicated_voice_like(seed: u64) -> Dataset {
    replicated_voice_like_sized(seed, 40, 40)
}

pub fn replicated_voice_like_sized(seed: u64, n_healthy: usize, n_pd: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schema = Schema::default();
    let mut specs = vec![FeatureSpec {
        name: "Gender".into(),
        group: Some(FeatureGroup::Demographic),
        column_index: 3,
    }];
    specs.extend(ACOUSTIC_FEATURES.iter().enumerate().map(|(i, name)| FeatureSpec {
        name: name.to_string(),
        group: FeatureGroup::from_name(name),
        column_index: 4 + i,
    }));
    let effects: Vec<f64> = ACOUSTIC_FEATURES.iter().map(|n| class_effect(n)).collect();

    let mut samples = Vec::with_capacity(3 * (n_healthy + n_pd));
    for subject in 0..(n_healthy + n_pd) {
        let label = u8::from(subject >= n_healthy);
        let id = if label == 1 {
            format!("PD-{:02}", subject - n_healthy + 1)
        } else {
            format!("CONT-{:02}", subject + 1)
        };
        let gender = u8::from(rng.gen_bool(0.5));
        let level: Vec<f64> = effects
            .iter()
            .map(|e| {
                let signed = if label == 1 { 0.5 * e } else { -0.5 * e };
                signed + gaussian(&mut rng)
            })
            .collect();
        for replication in 1..=3u8 {
            let mut features = Vec::with_capacity(45);
            features.push(f64::from(gender));
            for (j, l) in level.iter().enumerate() {
                let v = l + 0.35 * gaussian(&mut rng);
                // loose affine placement per group; not meant to match real units
                let (center, scale) = match specs[j + 1].group {
                    Some(FeatureGroup::HarmonicToNoise) => (70.0, 15.0),
                    Some(FeatureGroup::Mfcc) | Some(FeatureGroup::DeltaMfcc) => (1.3, 0.2),
                    Some(FeatureGroup::PitchPerturbation) => (0.5, 0.1),
                    Some(FeatureGroup::AmplitudePerturbation) => (0.3, 0.05),
                    _ => (0.6, 0.08),
                };
                features.push(center + scale * v);
            }
            samples.push(Sample {
                subject_id: id.clone(),
                replication,
                label,
                gender: Some(gender),
                features,
            });
        }
    }
    Dataset::new(samples, specs, schema).expect("synthetic dataset is valid by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_shape() {
        let ds = replicated_voice_like(0);
        assert_eq!(ds.len(), 240);
        assert_eq!(ds.subjects().len(), 80);
        assert_eq!(ds.labels().iter().filter(|&&l| l == 1).count(), 120);
        assert_eq!(ds.n_acoustic(), 44);
    }
}

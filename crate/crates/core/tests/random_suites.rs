//! Seeded randomized suites for the stage-local weak-value identities:
//! additivity of weak values over disjoint sets, and the certainty theorem
//! (an outcome that is certain under the ABL rule has that eigenvalue as its
//! weak value).

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use weaktrace::tsvf::{abl_from_states, weak_value_from_states, PathState};
use weaktrace::C64;

fn labels(dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("q{i}")).collect()
}

fn random_state(rng: &mut ChaCha8Rng, labels: &[String]) -> PathState<f64> {
    loop {
        let amps: Vec<C64> = labels
            .iter()
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return PathState::from_pairs(
                labels.iter().cloned().zip(amps.into_iter().map(|z| z / norm)),
            );
        }
    }
}

/// Pre/post pairs too close to orthogonal are resampled: the identities are
/// exact, but dividing by a vanishing overlap amplifies rounding beyond any
/// fixed tolerance.
const MIN_OVERLAP: f64 = 1e-2;

#[test]
fn weak_value_additivity_1000_seeded_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_add1);
    for trial in 0..1000 {
        let dim = 3 + (trial % 6);
        let labels = labels(dim);
        let psi = random_state(&mut rng, &labels);
        let phi = loop {
            let phi = random_state(&mut rng, &labels);
            if phi.inner(&psi).norm() >= MIN_OVERLAP {
                break phi;
            }
        };
        // Disjoint nonempty sets S and T.
        let (s, t) = loop {
            let mut s = BTreeSet::new();
            let mut t = BTreeSet::new();
            for l in &labels {
                match rng.random_range(0..3) {
                    0 => {
                        s.insert(l.clone());
                    }
                    1 => {
                        t.insert(l.clone());
                    }
                    _ => {}
                }
            }
            if !s.is_empty() && !t.is_empty() {
                break (s, t);
            }
        };
        let union: BTreeSet<String> = s.union(&t).cloned().collect();
        let w_s = weak_value_from_states(&phi, &psi, &s).unwrap();
        let w_t = weak_value_from_states(&phi, &psi, &t).unwrap();
        let w_union = weak_value_from_states(&phi, &psi, &union).unwrap();
        assert!(
            (w_union - (w_s + w_t)).norm() <= 1e-12,
            "trial {trial}: {w_union} vs {w_s} + {w_t}"
        );
        // Completeness: the full set always has weak value 1.
        let all: BTreeSet<String> = labels.iter().cloned().collect();
        let w_all = weak_value_from_states(&phi, &psi, &all).unwrap();
        assert!((w_all - C64::new(1.0, 0.0)).norm() <= 1e-12);
    }
}

#[test]
fn certain_outcomes_have_unit_weak_value_1000_seeded_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1991_0a91);
    for trial in 0..1000 {
        let dim = 3 + (trial % 6);
        let labels = labels(dim);
        let psi = random_state(&mut rng, &labels);
        // Random projector P (nonempty, proper subset).
        let p: BTreeSet<String> = loop {
            let p: BTreeSet<String> =
                labels.iter().filter(|_| rng.random_bool(0.5)).cloned().collect();
            if !p.is_empty() && p.len() < labels.len() {
                break p;
            }
        };
        // Post state inside the range of P: phi = P psi' / |P psi'|. This
        // forces <phi|(1-P)|psi> = 0 and makes outcome P certain.
        let phi = loop {
            let draft = random_state(&mut rng, &labels);
            let projected: Vec<(String, C64)> = draft
                .amplitudes
                .iter()
                .filter(|(l, _)| p.contains(*l))
                .map(|(l, z)| (l.clone(), *z))
                .collect();
            let norm: f64 = projected.iter().map(|(_, z)| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-3 {
                continue;
            }
            let phi = PathState::from_pairs(
                projected.into_iter().map(|(l, z)| (l, z / norm)),
            );
            if phi.inner(&psi).norm() >= MIN_OVERLAP {
                break phi;
            }
        };
        let complement: BTreeSet<String> =
            labels.iter().filter(|l| !p.contains(*l)).cloned().collect();
        let live: BTreeSet<String> = labels.iter().cloned().collect();
        let partition = vec![p.clone(), complement];
        let prob = abl_from_states(&phi, &psi, &partition, &live, 0).unwrap();
        assert!((prob - 1.0).abs() <= 1e-10, "trial {trial}: ABL probability {prob}");
        let w = weak_value_from_states(&phi, &psi, &p).unwrap();
        assert!((w - C64::new(1.0, 0.0)).norm() <= 1e-10, "trial {trial}: weak value {w}");
    }
}

//! Fixtures shared by the criterion benches.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use starrep_core::linalg::c;
use starrep_core::{AlgebraElement, Group, MetricStructure, UnitaryRep};

/// A positive density normalized to total mass one.
pub fn probability(g: &Arc<Group>, seed: u64) -> AlgebraElement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = AlgebraElement::from_density_fn(g, |_| c(rng.random_range(0.05..1.0), 0.0));
    raw.scale(c(1.0 / raw.total_mass().re, 0.0))
}

/// A complex density with entries in the unit square.
pub fn complex_density(g: &Arc<Group>, seed: u64) -> AlgebraElement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AlgebraElement::from_density_fn(g, |_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Regular representation of `S3` with a transposition, a probability and a
/// complex density as generators.
pub fn s3_structure() -> MetricStructure {
    let g = Group::symmetric3();
    let rep = UnitaryRep::regular(&g).expect("regular rep of S3");
    let gens = vec![
        ("t".to_string(), AlgebraElement::dirac(&g, g.generators()[0])),
        ("phi".to_string(), probability(&g, 1)),
        ("psi".to_string(), complex_density(&g, 2)),
    ];
    MetricStructure::build(&rep, &gens).expect("structure builds")
}

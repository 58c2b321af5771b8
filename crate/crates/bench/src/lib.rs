//! Fixed inputs shared by the benchmarks.

use betacorona::generate::{cantor4, lipschitz_graph, segment};
use betacorona::WeightedPointMeasure;

/// Named measures of a few hundred to a few thousand points.
pub fn fixtures() -> Vec<(&'static str, WeightedPointMeasure)> {
    vec![
        ("segment_1000", segment(1000).expect("valid size")),
        ("graph_1000", lipschitz_graph(1000, 0.5, 7).expect("valid size")),
        ("cantor_g5", cantor4(5).expect("valid generation")),
    ]
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixtures_are_nonempty() {
        assert!(super::fixtures().iter().all(|(_, m)| m.len() >= 1000));
    }
}

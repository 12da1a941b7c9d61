//! Canonical vorticity profiles used across tests, benches and examples.

use crate::vorticity::{SegmentKind, VorticitySegment, VorticitySpec};

/// γ ≡ 0 (irrotational).
pub fn v0() -> VorticitySpec {
    VorticitySpec::new(
        vec![VorticitySegment {
            s_lo: 0.0,
            s_hi: f64::INFINITY,
            kind: SegmentKind::PolyExp { coefficients: vec![0.0], decay_rate: 0.0 },
        }],
        1.0,
    )
    .unwrap()
}

/// γ = 1 on [0,1), 0 on [1,∞): a single jump at p = -1.
pub fn v1() -> VorticitySpec {
    VorticitySpec::new(
        vec![
            VorticitySegment {
                s_lo: 0.0,
                s_hi: 1.0,
                kind: SegmentKind::PolyExp { coefficients: vec![1.0], decay_rate: 0.0 },
            },
            VorticitySegment {
                s_lo: 1.0,
                s_hi: f64::INFINITY,
                kind: SegmentKind::PolyExp { coefficients: vec![0.0], decay_rate: 0.0 },
            },
        ],
        1.0,
    )
    .unwrap()
}

/// γ(s) = e^{-s}, smooth with Γ(p) = e^p - 1.
pub fn v2() -> VorticitySpec {
    VorticitySpec::new(
        vec![VorticitySegment {
            s_lo: 0.0,
            s_hi: f64::INFINITY,
            kind: SegmentKind::PolyExp { coefficients: vec![1.0], decay_rate: 1.0 },
        }],
        1.0,
    )
    .unwrap()
}

//! Piecewise smooth vorticity functions and their antiderivative Γ.
//!
//! The vorticity γ is given in the stream coordinate s = -p ≥ 0 as a list of
//! segments, each either polynomial-times-exponential or rational-decay. The
//! antiderivative Γ(p) = ∫₀ᵖ γ(-s) ds, its infimum over (-∞, 0] and its limit
//! as p → -∞ drive every coefficient in the wave problem.

use crate::error::{Error, Result};
use crate::quadrature;
use serde::{Deserialize, Serialize};

/// Absolute tolerance for Γ evaluation. Γ feeds square roots in the
/// coefficient a(p;λ), so its error budget sits far below solver tolerances.
pub const GAMMA_QUAD_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SegmentKind {
    /// γ(s) = (c₀ + c₁ s + … + cₘ sᵐ) e^{-κ s} with κ ≥ 0.
    PolyExp { coefficients: Vec<f64>, decay_rate: f64 },
    /// γ(s) = A (1 + s)^{-β}.
    RationalDecay { amplitude: f64, exponent: f64 },
}

impl SegmentKind {
    fn eval(&self, s: f64) -> f64 {
        match self {
            SegmentKind::PolyExp { coefficients, decay_rate } => {
                let mut poly = 0.0;
                for &c in coefficients.iter().rev() {
                    poly = poly * s + c;
                }
                poly * (-decay_rate * s).exp()
            }
            SegmentKind::RationalDecay { amplitude, exponent } => {
                amplitude * (1.0 + s).powf(-exponent)
            }
        }
    }

    /// Closed-form tail ∫ₐ^∞ γ(s) ds where the basis allows it.
    fn tail_integral(&self, a: f64) -> Result<f64> {
        match self {
            SegmentKind::PolyExp { coefficients, decay_rate } => {
                let kappa = *decay_rate;
                if kappa <= 0.0 {
                    if coefficients.iter().all(|&c| c == 0.0) {
                        return Ok(0.0);
                    }
                    return Err(Error::Admissibility(
                        "unbounded segment with zero decay rate has non-integrable tail".into(),
                    ));
                }
                // ∫ₐ^∞ sⁱ e^{-κs} ds = e^{-κa} Σ_{j=0..i} i!/(j!) a^j / κ^{i-j+1}
                let mut total = 0.0;
                for (i, &c) in coefficients.iter().enumerate() {
                    if c == 0.0 {
                        continue;
                    }
                    let mut term = 0.0;
                    let mut falling = 1.0; // i!/j! accumulated downward
                    for j in (0..=i).rev() {
                        term += falling * a.powi(j as i32) / kappa.powi((i - j + 1) as i32);
                        falling *= j as f64;
                    }
                    total += c * term;
                }
                Ok(total * (-kappa * a).exp())
            }
            SegmentKind::RationalDecay { amplitude, exponent } => {
                if *exponent <= 1.0 && *amplitude != 0.0 {
                    return Err(Error::Admissibility(format!(
                        "rational-decay tail with exponent {exponent} <= 1 is not integrable"
                    )));
                }
                if *amplitude == 0.0 {
                    return Ok(0.0);
                }
                Ok(amplitude * (1.0 + a).powf(1.0 - exponent) / (exponent - 1.0))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VorticitySegment {
    pub s_lo: f64,
    /// Upper end in stream coordinate; `f64::INFINITY` for the final segment.
    pub s_hi: f64,
    #[serde(flatten)]
    pub kind: SegmentKind,
}

/// Report produced by [`VorticitySpec::check_admissible`].
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    pub decay_ok: bool,
    pub gamma_inf_ok: bool,
    /// g^{2/3}/4 - (-Γ_inf); positive when the smallness hypothesis holds.
    pub margin: f64,
    pub gamma_inf: f64,
    pub gamma_limit: f64,
}

impl AdmissibilityReport {
    pub fn pass(&self) -> bool {
        self.decay_ok && self.gamma_inf_ok
    }
}

/// A validated piecewise vorticity function with cached Γ structure.
#[derive(Debug, Clone)]
pub struct VorticitySpec {
    segments: Vec<VorticitySegment>,
    decay_r: f64,
    /// Cumulative ∫₀^{s_hi} γ at the end of each bounded segment.
    cum_integral: Vec<f64>,
    gamma_inf: f64,
    gamma_limit: f64,
    sup_gamma: f64,
}

impl VorticitySpec {
    /// Validates the partition and precomputes the Γ cache, Γ_inf and Γ_∞.
    pub fn new(segments: Vec<VorticitySegment>, decay_r: f64) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Config("vorticity needs at least one segment".into()));
        }
        if decay_r <= 0.0 {
            return Err(Error::Config("decay exponent r must be positive".into()));
        }
        if segments[0].s_lo != 0.0 {
            return Err(Error::Config("first segment must start at s = 0".into()));
        }
        for win in segments.windows(2) {
            if win[0].s_hi != win[1].s_lo {
                return Err(Error::Config("segments must partition [0, inf) contiguously".into()));
            }
        }
        for seg in &segments {
            if !(seg.s_hi > seg.s_lo) {
                return Err(Error::Config("segment breakpoints must be strictly increasing".into()));
            }
            if let SegmentKind::PolyExp { decay_rate, .. } = &seg.kind {
                if *decay_rate < 0.0 {
                    return Err(Error::Config("decay rate must be nonnegative".into()));
                }
            }
        }
        let last = segments.last().unwrap();
        if last.s_hi.is_finite() {
            return Err(Error::Config("final segment must extend to s = inf".into()));
        }

        // Cumulative integrals up to each bounded segment end.
        let mut cum_integral = Vec::with_capacity(segments.len());
        let mut cum = 0.0;
        for seg in &segments[..segments.len() - 1] {
            cum += quadrature::adaptive(|s| seg.kind.eval(s), seg.s_lo, seg.s_hi, GAMMA_QUAD_TOL);
            cum_integral.push(cum);
        }
        let tail = last.kind.tail_integral(last.s_lo)?;
        let gamma_limit = -(cum + tail);

        let mut spec = VorticitySpec {
            segments,
            decay_r,
            cum_integral,
            gamma_inf: 0.0,
            gamma_limit,
            sup_gamma: 0.0,
        };
        spec.gamma_inf = spec.locate_gamma_inf();
        spec.sup_gamma = spec.locate_sup_gamma();
        Ok(spec)
    }

    /// Jump positions p_j = -s_j, ordered decreasing (p_n < … < p_0 < 0).
    pub fn breakpoints_p(&self) -> Vec<f64> {
        self.segments[..self.segments.len() - 1]
            .iter()
            .map(|seg| -seg.s_hi)
            .collect()
    }

    pub fn decay_r(&self) -> f64 {
        self.decay_r
    }

    pub fn gamma_inf(&self) -> f64 {
        self.gamma_inf
    }

    /// Γ_∞ = lim_{p → -∞} Γ(p).
    pub fn gamma_limit(&self) -> f64 {
        self.gamma_limit
    }

    /// max(0, sup_{s ≥ 0} γ(s)), used by the Bernoulli inequality check.
    pub fn sup_gamma_nonneg(&self) -> f64 {
        self.sup_gamma.max(0.0)
    }

    /// γ(s); at a breakpoint the right-limit (segment whose s_lo equals s).
    pub fn gamma_eval(&self, s: f64) -> Result<f64> {
        if s < 0.0 {
            return Err(Error::Domain(format!("gamma_eval: s = {s} < 0")));
        }
        Ok(self.segment_at(s).kind.eval(s))
    }

    fn segment_at(&self, s: f64) -> &VorticitySegment {
        // Right-limit convention: segment with s_lo <= s < s_hi.
        for seg in &self.segments {
            if s >= seg.s_lo && s < seg.s_hi {
                return seg;
            }
        }
        self.segments.last().unwrap()
    }

    /// Γ(p) = ∫₀ᵖ γ(-s) ds = -∫₀^{|p|} γ(t) dt for p ≤ 0.
    pub fn big_gamma(&self, p: f64) -> Result<f64> {
        if p > 0.0 {
            return Err(Error::Domain(format!("big_gamma: p = {p} > 0")));
        }
        if p == f64::NEG_INFINITY {
            return Ok(self.gamma_limit);
        }
        let t = -p;
        let mut acc = 0.0;
        for (idx, seg) in self.segments.iter().enumerate() {
            if t <= seg.s_hi || idx == self.segments.len() - 1 {
                acc += quadrature::adaptive(|s| seg.kind.eval(s), seg.s_lo, t, GAMMA_QUAD_TOL);
                return Ok(-acc);
            }
            acc = self.cum_integral[idx];
        }
        unreachable!()
    }

    /// (Γ_inf, Γ_∞).
    pub fn gamma_extremes(&self) -> (f64, f64) {
        (self.gamma_inf, self.gamma_limit)
    }

    /// a(p;λ) = √(λ + 2Γ(p)).
    pub fn coefficient_a(&self, lambda: f64, p: f64) -> Result<f64> {
        let value = lambda + 2.0 * self.big_gamma(p)?;
        if value <= 0.0 {
            return Err(Error::SingularCoefficient { p, value });
        }
        Ok(value.sqrt())
    }

    /// Checks the two admissibility hypotheses: integrable decay of the
    /// vorticity tail and -Γ_inf < g^{2/3}/4.
    pub fn check_admissible(&self, g: f64) -> Result<AdmissibilityReport> {
        if g <= 0.0 {
            return Err(Error::Domain(format!("gravity g = {g} must be positive")));
        }
        let decay_ok = self.check_tail_decay();
        let margin = g.powf(2.0 / 3.0) / 4.0 - (-self.gamma_inf);
        Ok(AdmissibilityReport {
            decay_ok,
            gamma_inf_ok: margin > 0.0,
            margin,
            gamma_inf: self.gamma_inf,
            gamma_limit: self.gamma_limit,
        })
    }

    /// Structural tail check backed by a sampled envelope: |γ(s)| ≤ C s^{-2-r}
    /// with the constant C estimated on a geometric sample grid.
    fn check_tail_decay(&self) -> bool {
        let last = self.segments.last().unwrap();
        let structurally_ok = match &last.kind {
            SegmentKind::PolyExp { coefficients, decay_rate } => {
                *decay_rate > 0.0 || coefficients.iter().all(|&c| c == 0.0)
            }
            SegmentKind::RationalDecay { amplitude, exponent } => {
                *amplitude == 0.0 || *exponent >= 2.0 + self.decay_r
            }
        };
        if !structurally_ok {
            return false;
        }
        // Sampled envelope: the weighted tail |γ(s)| s^{2+r} must not grow.
        let s0 = last.s_lo.max(1.0);
        let weight = |s: f64| last.kind.eval(s).abs() * s.powf(2.0 + self.decay_r);
        let reference: f64 = (0..32)
            .map(|i| weight(s0 * 1.5f64.powi(i)))
            .fold(0.0, f64::max);
        let far: f64 = (32..64)
            .map(|i| weight(s0 * 1.5f64.powi(i)))
            .fold(0.0, f64::max);
        far <= reference.max(1e-300) * (1.0 + 1e-9) || far <= 1e-300
    }

    /// Γ_inf by monotonicity analysis: Γ'(p) = γ(-p), so candidate minima sit
    /// at p = 0, at breakpoints, at sign changes of γ and in the p → -∞ limit.
    fn locate_gamma_inf(&self) -> f64 {
        let mut inf = 0.0f64.min(self.gamma_limit);
        for seg in &self.segments {
            for s in self.gamma_zeros_in(seg) {
                if let Ok(v) = self.big_gamma(-s) {
                    inf = inf.min(v);
                }
            }
            if seg.s_hi.is_finite() {
                if let Ok(v) = self.big_gamma(-seg.s_hi) {
                    inf = inf.min(v);
                }
            }
        }
        inf
    }

    fn locate_sup_gamma(&self) -> f64 {
        let mut sup = f64::NEG_INFINITY;
        for seg in &self.segments {
            let hi = self.scan_limit(seg);
            let n = 512;
            for i in 0..=n {
                let s = seg.s_lo + (hi - seg.s_lo) * i as f64 / n as f64;
                sup = sup.max(seg.kind.eval(s));
            }
        }
        sup
    }

    /// Effective scan window for an unbounded segment: past the polynomial
    /// root bound (PolyExp) or immediately (monotone rational decay) the sign
    /// of γ is fixed, so extrema live in a bounded window.
    fn scan_limit(&self, seg: &VorticitySegment) -> f64 {
        if seg.s_hi.is_finite() {
            return seg.s_hi;
        }
        match &seg.kind {
            SegmentKind::PolyExp { coefficients, decay_rate } => {
                let lead = coefficients.iter().rposition(|&c| c != 0.0);
                let bound = match lead {
                    Some(m) if m > 0 => {
                        let cm = coefficients[m].abs();
                        let maxc = coefficients[..m].iter().fold(0.0f64, |a, &c| a.max(c.abs()));
                        1.0 + maxc / cm
                    }
                    _ => 1.0,
                };
                let exp_scale = if *decay_rate > 0.0 { 10.0 / decay_rate } else { 0.0 };
                seg.s_lo + bound + exp_scale + 1.0
            }
            SegmentKind::RationalDecay { .. } => seg.s_lo + 1.0,
        }
    }

    fn gamma_zeros_in(&self, seg: &VorticitySegment) -> Vec<f64> {
        let lo = seg.s_lo;
        let hi = self.scan_limit(seg);
        let n = 1024;
        let f = |s: f64| seg.kind.eval(s);
        let mut zeros = Vec::new();
        let mut prev_s = lo;
        let mut prev_v = f(lo);
        for i in 1..=n {
            let s = lo + (hi - lo) * i as f64 / n as f64;
            let v = f(s);
            if prev_v == 0.0 {
                zeros.push(prev_s);
            } else if prev_v * v < 0.0 {
                // bisection refine
                let (mut a, mut b, mut fa) = (prev_s, s, prev_v);
                for _ in 0..80 {
                    let mid = 0.5 * (a + b);
                    let fm = f(mid);
                    if fa * fm <= 0.0 {
                        b = mid;
                    } else {
                        a = mid;
                        fa = fm;
                    }
                }
                zeros.push(0.5 * (a + b));
            }
            prev_s = s;
            prev_v = v;
        }
        zeros
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{v0, v1, v2};
    use approx::assert_abs_diff_eq;

    #[test]
    fn gamma_eval_piecewise() {
        assert_eq!(v0().gamma_eval(0.7).unwrap(), 0.0);
        assert_eq!(v1().gamma_eval(0.5).unwrap(), 1.0);
        assert_eq!(v1().gamma_eval(2.0).unwrap(), 0.0);
        // breakpoint takes the right-limit
        assert_eq!(v1().gamma_eval(1.0).unwrap(), 0.0);
    }

    #[test]
    fn gamma_eval_rejects_negative_s() {
        assert!(v0().gamma_eval(-0.1).is_err());
    }

    #[test]
    fn big_gamma_hand_integrated() {
        assert_abs_diff_eq!(v1().big_gamma(-0.5).unwrap(), -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(v1().big_gamma(-3.0).unwrap(), -1.0, epsilon = 1e-12);
        assert_eq!(v0().big_gamma(-7.0).unwrap(), 0.0);
        assert!(v0().big_gamma(0.5).is_err());
    }

    #[test]
    fn big_gamma_matches_piecewise_linear_formula_at_random_points() {
        let spec = v1();
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..100 {
            // xorshift, deterministic
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let p = -((state >> 11) as f64 / (1u64 << 53) as f64) * 5.0;
            let expected = if p >= -1.0 { p } else { -1.0 };
            assert_abs_diff_eq!(spec.big_gamma(p).unwrap(), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn gamma_continuous_across_breakpoint() {
        let spec = v1();
        let left = spec.big_gamma(-1.0 - 1e-13).unwrap();
        let right = spec.big_gamma(-1.0 + 1e-13).unwrap();
        assert_abs_diff_eq!(left, right, epsilon = 1e-12);
        assert_eq!(spec.big_gamma(0.0).unwrap(), 0.0);
    }

    #[test]
    fn gamma_extremes_closed_forms() {
        assert_eq!(v0().gamma_extremes(), (0.0, 0.0));
        let (inf, lim) = v1().gamma_extremes();
        assert_abs_diff_eq!(inf, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lim, -1.0, epsilon = 1e-12);
        // γ = e^{-s}: Γ(p) = e^p - 1
        let (inf2, lim2) = v2().gamma_extremes();
        assert_abs_diff_eq!(inf2, -1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(lim2, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v2().big_gamma(-2.0).unwrap(), (-2.0f64).exp() - 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gamma_inf_is_lower_bound_for_big_gamma() {
        for spec in [v0(), v1(), v2()] {
            let (inf, _) = spec.gamma_extremes();
            for i in 0..50 {
                let p = -(i as f64) * 0.3;
                assert!(spec.big_gamma(p).unwrap() >= inf - 1e-12);
            }
        }
    }

    #[test]
    fn admissibility_margins() {
        let g = 9.81f64;
        let rep = v1().check_admissible(g).unwrap();
        assert!(rep.pass());
        assert_abs_diff_eq!(rep.margin, g.powf(2.0 / 3.0) / 4.0 - 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(rep.margin, 0.1457, epsilon = 5e-4);

        let rep0 = v0().check_admissible(g).unwrap();
        assert!(rep0.pass());
        assert_abs_diff_eq!(rep0.margin, 1.1457, epsilon = 5e-4);

        // γ = 5 on [0,1): Γ_inf = -5 > g^{2/3}/4
        let strong = VorticitySpec::new(
            vec![
                VorticitySegment {
                    s_lo: 0.0,
                    s_hi: 1.0,
                    kind: SegmentKind::PolyExp { coefficients: vec![5.0], decay_rate: 0.0 },
                },
                VorticitySegment {
                    s_lo: 1.0,
                    s_hi: f64::INFINITY,
                    kind: SegmentKind::PolyExp { coefficients: vec![0.0], decay_rate: 0.0 },
                },
            ],
            1.0,
        )
        .unwrap();
        let rep5 = strong.check_admissible(g).unwrap();
        assert!(!rep5.gamma_inf_ok);
        assert!(!rep5.pass());
    }

    #[test]
    fn coefficient_a_values_and_monotonicity() {
        let g = 9.81f64;
        assert_abs_diff_eq!(v0().coefficient_a(g, -2.0).unwrap(), g.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(v1().coefficient_a(4.0, -1.0).unwrap(), 2.0f64.sqrt(), epsilon = 1e-12);
        assert!(matches!(
            v1().coefficient_a(1.5, -1.0),
            Err(Error::SingularCoefficient { .. })
        ));
        // monotone increasing in lambda at fixed p
        let spec = v1();
        let mut prev = 0.0;
        for i in 0..20 {
            let lam = 2.1 + i as f64 * 0.5;
            let a = spec.coefficient_a(lam, -0.7).unwrap();
            assert!(a > prev);
            prev = a;
        }
    }

    #[test]
    fn non_integrable_tail_rejected() {
        let res = VorticitySpec::new(
            vec![VorticitySegment {
                s_lo: 0.0,
                s_hi: f64::INFINITY,
                kind: SegmentKind::PolyExp { coefficients: vec![1.0], decay_rate: 0.0 },
            }],
            1.0,
        );
        assert!(res.is_err());
    }

    #[test]
    fn rational_tail_decay_flag() {
        let slow = VorticitySpec::new(
            vec![VorticitySegment {
                s_lo: 0.0,
                s_hi: f64::INFINITY,
                kind: SegmentKind::RationalDecay { amplitude: 0.1, exponent: 1.5 },
            }],
            0.5,
        )
        .unwrap();
        assert!(!slow.check_admissible(9.81).unwrap().decay_ok);

        let fast = VorticitySpec::new(
            vec![VorticitySegment {
                s_lo: 0.0,
                s_hi: f64::INFINITY,
                kind: SegmentKind::RationalDecay { amplitude: 0.1, exponent: 3.0 },
            }],
            0.5,
        )
        .unwrap();
        assert!(fast.check_admissible(9.81).unwrap().decay_ok);
    }
}

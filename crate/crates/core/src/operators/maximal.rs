//! Radial maximal functions of discrete measures, evaluated exactly over the
//! radii where the ball contents change.

use serde::{Deserialize, Serialize};

use crate::measure::WeightedPointMeasure;

/// `M^r_Φ(fμ)(x) = sup_{r >= max(Φ(x), r_min)} |fμ|(B(x,r)) / r^n`.
pub fn m_r_phi(mu: &WeightedPointMeasure, f: Option<&[f64]>, phi_x: f64, x: &[f64]) -> f64 {
    if mu.is_empty() {
        return 0.0;
    }
    let r0 = phi_x.max(mu.r_min());
    let profile = mu.distance_profile(x);
    match f {
        Some(f) => profile.sup_ratio_above(r0, mu.n(), |i| f[i].abs() * mu.weight(i)),
        None => profile.sup_ratio_above(r0, mu.n(), |i| mu.weight(i)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MTildeVariant {
    /// `sup_r σ(B(x,3r))^{-1} ∫_{B(x,r)} |f| dσ`.
    Plain,
    /// `sup_r (σ(B(x,3r))^{-1} ∫_{B(x,r)} |f|^{3/2} dσ)^{2/3}`.
    ThreeHalves,
}

/// `M̃_σ f(x)` or its 3/2-power variant. The ratio is constant between jumps,
/// increases only where the inner ball gains points and decreases where the
/// outer ball does, so the sup is taken at the distances to the support.
pub fn m_tilde(sigma: &WeightedPointMeasure, f: Option<&[f64]>, x: &[f64], variant: MTildeVariant) -> f64 {
    if sigma.is_empty() {
        return 0.0;
    }
    let profile = sigma.distance_profile(x);
    let e = &profile.entries;
    let power = match variant {
        MTildeVariant::Plain => 1.0,
        MTildeVariant::ThreeHalves => 1.5,
    };
    let val = |i: usize| -> f64 {
        let v = f.map_or(1.0, |f| f[i].abs());
        let v = if power == 1.0 { v } else { v.powf(power) };
        v * sigma.weight(i)
    };
    let mut num = 0.0;
    let mut den = 0.0;
    let mut outer = 0;
    let mut best: f64 = 0.0;
    let mut j = 0;
    while j < e.len() {
        let r = e[j].0;
        while j < e.len() && e[j].0 == r {
            num += val(e[j].1);
            j += 1;
        }
        while outer < e.len() && e[outer].0 <= 3.0 * r {
            den += sigma.weight(e[outer].1);
            outer += 1;
        }
        if den > 0.0 {
            best = best.max(num / den);
        }
    }
    if power == 1.0 {
        best
    } else {
        best.powf(1.0 / power)
    }
}

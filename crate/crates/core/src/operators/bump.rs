//! Radial cutoffs `ψ_k` and the scale pieces `φ_k = ψ_k − ψ_{k+1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `ψ = 1` on `|z| <= INNER`.
pub const INNER: f64 = 0.001;
/// `ψ = 0` on `|z| >= OUTER`.
pub const OUTER: f64 = 0.01;

/// Radial profile of `ψ`: quintic smoothstep from 1 at [`INNER`] down to 0 at [`OUTER`].
pub fn psi(t: f64) -> f64 {
    if t <= INNER {
        1.0
    } else if t >= OUTER {
        0.0
    } else {
        let s = (t - INNER) / (OUTER - INNER);
        1.0 - s * s * s * (s * (6.0 * s - 15.0) + 10.0)
    }
}

/// `ψ_k(z) = ψ(|z|/s_k)` with `s_k = base·A₀^{-k}`, matching the lattice
/// scales so that `φ_k` lives at the size of generation-`k` cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpFamily {
    pub a0: f64,
    pub base: f64,
}

impl BumpFamily {
    pub fn new(a0: f64, base: f64) -> Result<Self> {
        if !(a0 > 1.0 && a0.is_finite()) || !(base > 0.0 && base.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bump family needs A0 > 1 and base > 0, got {a0}, {base}"
            )));
        }
        Ok(BumpFamily { a0, base })
    }

    /// Unit-base family `ψ_k(z) = ψ(A₀^k z)`.
    pub fn unit(a0: f64) -> Result<Self> {
        Self::new(a0, 1.0)
    }

    pub fn scale(&self, k: i64) -> f64 {
        self.base * self.a0.powi(-(k as i32))
    }

    /// `ψ_k` at distance `t = |z|`.
    pub fn psi_k(&self, k: i64, t: f64) -> f64 {
        psi(t / self.scale(k))
    }

    /// `φ_k` at distance `t = |z|`.
    pub fn phi_k(&self, k: i64, t: f64) -> f64 {
        self.psi_k(k, t) - self.psi_k(k + 1, t)
    }

    /// Outer radius of the support of `φ_k`.
    pub fn outer_radius(&self, k: i64) -> f64 {
        OUTER * self.scale(k)
    }

    /// Inner radius of the support of `φ_k`.
    pub fn inner_radius(&self, k: i64) -> f64 {
        INNER * self.scale(k + 1)
    }
}

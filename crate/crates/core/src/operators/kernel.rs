//! Odd Calderón–Zygmund kernels `K: R^d ∖ {0} → R^m` with declared size and
//! smoothness constants.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// User-supplied kernel evaluation: writes `K(z)` into the output slice.
pub type KernelFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelKind {
    /// `K(z) = z/|z|^{n+1}`.
    Riesz,
    /// `1/(ζ - z)` written as a plane vector: `K(w) = (-w_1, w_2)/|w|²`.
    Cauchy,
    Custom,
}

#[derive(Clone)]
pub struct CZKernel {
    kind: KernelKind,
    n: usize,
    d: usize,
    m: usize,
    /// Declared `C(j)` with `|∇^j K(z)| <= C(j)/|z|^{n+j}`, Frobenius norms.
    constants: [f64; 3],
    custom: Option<KernelFn>,
}

impl fmt::Debug for CZKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CZKernel")
            .field("kind", &self.kind)
            .field("n", &self.n)
            .field("d", &self.d)
            .field("m", &self.m)
            .field("constants", &self.constants)
            .finish()
    }
}

/// Number of random samples used by [`validate`].
pub const VALIDATION_SAMPLES: usize = 1000;
/// Slack allowed on the declared constants during validation.
pub const VALIDATION_FACTOR: f64 = 1.1;

impl CZKernel {
    pub fn riesz(n: usize, d: usize) -> Result<Self> {
        if n == 0 || n >= d {
            return Err(Error::InvalidParameter(format!(
                "Riesz kernel needs 1 <= n < d, got n={n}, d={d}"
            )));
        }
        let p = (n + 1) as f64;
        let dm1 = (d - 1) as f64;
        Ok(CZKernel {
            kind: KernelKind::Riesz,
            n,
            d,
            m: d,
            constants: [
                1.0,
                (dm1 + (n * n) as f64).sqrt(),
                p * ((p - 1.0) * (p - 1.0) + 3.0 * dm1).sqrt(),
            ],
            custom: None,
        })
    }

    pub fn cauchy() -> Self {
        CZKernel {
            kind: KernelKind::Cauchy,
            n: 1,
            d: 2,
            m: 2,
            constants: [1.0, 2f64.sqrt(), 4.0],
            custom: None,
        }
    }

    /// Registers a user kernel after checking oddness and the declared
    /// constants on random samples.
    pub fn custom(n: usize, d: usize, m: usize, constants: [f64; 3], eval: KernelFn, seed: u64) -> Result<Self> {
        if n == 0 || n >= d || m == 0 {
            return Err(Error::InvalidParameter(format!(
                "custom kernel needs 1 <= n < d and m >= 1, got n={n}, d={d}, m={m}"
            )));
        }
        let kernel = CZKernel {
            kind: KernelKind::Custom,
            n,
            d,
            m,
            constants,
            custom: Some(eval),
        };
        validate(&kernel, seed)?;
        Ok(kernel)
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Output dimension `m`.
    pub fn out_dim(&self) -> usize {
        self.m
    }

    pub fn constants(&self) -> [f64; 3] {
        self.constants
    }

    /// Constant in `|k(x,y) - k(x',y)| + |k(y,x) - k(y,x')| <= C |x-x'|/|x-y|^{n+1}`
    /// for `|x - x'| <= |x - y|/2`, from the gradient bound.
    pub fn smoothness_constant(&self) -> f64 {
        2.0 * 2f64.powi(self.n as i32 + 1) * self.constants[1]
    }

    /// `K(z)` into `out`; `z` must be nonzero.
    #[inline]
    pub fn eval(&self, z: &[f64], out: &mut [f64]) {
        match self.kind {
            KernelKind::Riesz => {
                let mut s = 0.0;
                for v in z {
                    s += v * v;
                }
                let norm = s.sqrt();
                let scale = 1.0 / norm.powi(self.n as i32 + 1);
                for (o, v) in out.iter_mut().zip(z) {
                    *o = v * scale;
                }
            }
            KernelKind::Cauchy => {
                let s = z[0] * z[0] + z[1] * z[1];
                out[0] = -z[0] / s;
                out[1] = z[1] / s;
            }
            KernelKind::Custom => (self.custom.as_ref().expect("custom kernel"))(z, out),
        }
    }

    pub fn eval_vec(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        self.eval(z, &mut out);
        out
    }

    /// `k(x, y) = K(x - y)`.
    pub fn k(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.eval(&z, out);
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Measured over declared size ratios `(j = 0, 1, 2)` at one sample point.
pub fn bound_ratios(kernel: &CZKernel, z: &[f64]) -> [f64; 3] {
    let d = kernel.d;
    let m = kernel.m;
    let r = norm(z);
    let h = 1e-5 * r;
    let n = kernel.n as i32;
    let k0 = kernel.eval_vec(z);
    let mut ratios = [0.0; 3];
    ratios[0] = norm(&k0) * r.powi(n) / kernel.constants[0];

    let shifted = |offsets: &[(usize, f64)]| -> Vec<f64> {
        let mut p = z.to_vec();
        for &(axis, delta) in offsets {
            p[axis] += delta;
        }
        kernel.eval_vec(&p)
    };
    let mut grad_sq = 0.0;
    for j in 0..d {
        let plus = shifted(&[(j, h)]);
        let minus = shifted(&[(j, -h)]);
        for c in 0..m {
            let g = (plus[c] - minus[c]) / (2.0 * h);
            grad_sq += g * g;
        }
    }
    ratios[1] = grad_sq.sqrt() * r.powi(n + 1) / kernel.constants[1];

    let mut hess_sq = 0.0;
    for j in 0..d {
        for l in 0..d {
            let pp = shifted(&[(j, h), (l, h)]);
            let pm = shifted(&[(j, h), (l, -h)]);
            let mp = shifted(&[(j, -h), (l, h)]);
            let mm = shifted(&[(j, -h), (l, -h)]);
            for c in 0..m {
                let v = (pp[c] - pm[c] - mp[c] + mm[c]) / (4.0 * h * h);
                hess_sq += v * v;
            }
        }
    }
    ratios[2] = hess_sq.sqrt() * r.powi(n + 2) / kernel.constants[2];
    ratios
}

/// Checks exact oddness and the declared bounds (with slack
/// [`VALIDATION_FACTOR`]) at [`VALIDATION_SAMPLES`] random points. The error
/// names the worst sample.
pub fn validate(kernel: &CZKernel, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = kernel.d;
    let mut worst: Option<(f64, usize, Vec<f64>)> = None;
    for _ in 0..VALIDATION_SAMPLES {
        let dir: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let len = norm(&dir);
        if len < 1e-3 {
            continue;
        }
        let radius = 10f64.powf(rng.random::<f64>() * 4.0 - 2.0);
        let z: Vec<f64> = dir.iter().map(|v| v / len * radius).collect();
        let neg: Vec<f64> = z.iter().map(|v| -v).collect();
        let a = kernel.eval_vec(&z);
        let b = kernel.eval_vec(&neg);
        if a.iter().zip(&b).any(|(p, q)| *p != -*q) || a.iter().any(|v| !v.is_finite()) {
            return Err(Error::KernelValidation(format!("kernel is not odd at z = {z:?}")));
        }
        let ratios = bound_ratios(kernel, &z);
        for (j, &ratio) in ratios.iter().enumerate() {
            let bad = !ratio.is_finite() || ratio > VALIDATION_FACTOR;
            if bad && worst.as_ref().is_none_or(|w| ratio > w.0 || !ratio.is_finite()) {
                worst = Some((ratio, j, z.clone()));
            }
        }
    }
    match worst {
        None => Ok(()),
        Some((ratio, j, z)) => Err(Error::KernelValidation(format!(
            "derivative order {j} exceeds its declared constant by a factor {ratio:.4} at z = {z:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn riesz_and_cauchy_values() {
        let r = CZKernel::riesz(1, 2).unwrap();
        assert_eq!(r.eval_vec(&[1.0, 0.0]), vec![1.0, 0.0]);
        let c = CZKernel::cauchy();
        assert_eq!(c.eval_vec(&[0.0, 1.0]), vec![0.0, 1.0]);
        // 1/(ζ - z) with z - ζ = 2 + i  →  -1/(2+i) = (-2 + i)/5
        let v = c.eval_vec(&[2.0, 1.0]);
        assert!((v[0] + 0.4).abs() < 1e-15 && (v[1] - 0.2).abs() < 1e-15);
        assert!(CZKernel::riesz(2, 2).is_err());
    }

    #[test]
    fn builtin_kernels_pass_validation() {
        for (n, d) in [(1, 2), (1, 3), (2, 3)] {
            validate(&CZKernel::riesz(n, d).unwrap(), 1).unwrap();
        }
        validate(&CZKernel::cauchy(), 2).unwrap();
    }

    #[test]
    fn declared_constants_are_nearly_sharp() {
        let k = CZKernel::riesz(2, 3).unwrap();
        let r = bound_ratios(&k, &[0.3, -0.2, 0.5]);
        assert!((r[0] - 1.0).abs() < 1e-12);
        assert!((r[1] - 1.0).abs() < 1e-6, "{r:?}");
        assert!(r[2] <= 1.0 + 1e-4, "{r:?}");
    }

    #[test]
    fn custom_validation_reports_failures() {
        let even: KernelFn = Arc::new(|z: &[f64], out: &mut [f64]| {
            out[0] = 1.0 / (z[0] * z[0] + z[1] * z[1]).sqrt();
        });
        let err = CZKernel::custom(1, 2, 1, [1.0, 1.0, 2.0], even, 0).unwrap_err();
        assert!(err.to_string().contains("not odd"), "{err}");

        let riesz: KernelFn = Arc::new(|z: &[f64], out: &mut [f64]| {
            let s = z[0] * z[0] + z[1] * z[1];
            out[0] = z[0] / s;
            out[1] = z[1] / s;
        });
        let err = CZKernel::custom(1, 2, 2, [0.5, 1.5, 4.0], riesz.clone(), 0).unwrap_err();
        assert!(err.to_string().contains("order 0"), "{err}");
        assert!(CZKernel::custom(1, 2, 2, [1.0, 2f64.sqrt(), 4.0], riesz, 0).is_ok());
    }

    #[test]
    fn zero_kernel_is_admissible() {
        let zero: KernelFn = Arc::new(|_: &[f64], out: &mut [f64]| out.fill(0.0));
        let k = CZKernel::custom(1, 2, 1, [1.0, 1.0, 1.0], zero, 3).unwrap();
        assert_eq!(k.eval_vec(&[1.0, 2.0]), vec![0.0]);
    }
}

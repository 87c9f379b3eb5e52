//! Built-in level-set functions.

use crate::{Mat3, Vec3};

/// Level-set function `φ` with its first and second derivatives.
///
/// The surface is `{φ = 0}` with `φ < 0` on the interior, so `∇φ/|∇φ|` is the outward normal.
pub trait ImplicitFunction: Send + Sync {
    fn value(&self, x: &Vec3) -> f64;
    fn gradient(&self, x: &Vec3) -> Vec3;
    fn hessian(&self, x: &Vec3) -> Mat3;
}

/// Unit sphere, `φ = (|x|² - 1) / 2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitSphere;

impl ImplicitFunction for UnitSphere {
    fn value(&self, x: &Vec3) -> f64 {
        0.5 * (x.norm_squared() - 1.0)
    }

    fn gradient(&self, x: &Vec3) -> Vec3 {
        *x
    }

    fn hessian(&self, _x: &Vec3) -> Mat3 {
        Mat3::identity()
    }
}

/// `(x₁ - x₃²)² + x₂² + x₃² - 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Dziuk;

impl ImplicitFunction for Dziuk {
    fn value(&self, x: &Vec3) -> f64 {
        let s = x[0] - x[2] * x[2];
        s * s + x[1] * x[1] + x[2] * x[2] - 1.0
    }

    fn gradient(&self, x: &Vec3) -> Vec3 {
        let s = x[0] - x[2] * x[2];
        Vec3::new(2.0 * s, 2.0 * x[1], -4.0 * s * x[2] + 2.0 * x[2])
    }

    fn hessian(&self, x: &Vec3) -> Mat3 {
        let s = x[0] - x[2] * x[2];
        let xz = -4.0 * x[2];
        let zz = 8.0 * x[2] * x[2] - 4.0 * s + 2.0;
        Mat3::new(2.0, 0.0, xz, 0.0, 2.0, 0.0, xz, 0.0, zz)
    }
}

/// `400(x²y² + y²z² + x²z²) - (1 - x² - y² - z²)³ - c`, with `c = 40` for the benchmark.
#[derive(Debug, Clone, Copy)]
pub struct EnzensbergerStern {
    pub c: f64,
}

impl Default for EnzensbergerStern {
    fn default() -> Self {
        Self { c: 40.0 }
    }
}

impl ImplicitFunction for EnzensbergerStern {
    fn value(&self, p: &Vec3) -> f64 {
        let (x2, y2, z2) = (p[0] * p[0], p[1] * p[1], p[2] * p[2]);
        let t = 1.0 - x2 - y2 - z2;
        400.0 * (x2 * y2 + y2 * z2 + x2 * z2) - t * t * t - self.c
    }

    fn gradient(&self, p: &Vec3) -> Vec3 {
        let (x2, y2, z2) = (p[0] * p[0], p[1] * p[1], p[2] * p[2]);
        let t = 1.0 - x2 - y2 - z2;
        let radial = 6.0 * t * t;
        Vec3::new(
            p[0] * (800.0 * (y2 + z2) + radial),
            p[1] * (800.0 * (x2 + z2) + radial),
            p[2] * (800.0 * (x2 + y2) + radial),
        )
    }

    fn hessian(&self, p: &Vec3) -> Mat3 {
        let (x2, y2, z2) = (p[0] * p[0], p[1] * p[1], p[2] * p[2]);
        let t = 1.0 - x2 - y2 - z2;
        let radial = 6.0 * t * t;
        // d(6t²)/dx_j = -24 t x_j
        let mut h = Mat3::zeros();
        let sq = [x2, y2, z2];
        for i in 0..3 {
            let others: f64 = (0..3).filter(|&k| k != i).map(|k| sq[k]).sum();
            h[(i, i)] = 800.0 * others + radial - 24.0 * t * sq[i];
            for j in 0..3 {
                if j != i {
                    h[(i, j)] = 1600.0 * p[i] * p[j] - 24.0 * t * p[i] * p[j];
                }
            }
        }
        h
    }
}

type ScalarFn = dyn Fn(&Vec3) -> f64 + Send + Sync;
type VectorFn = dyn Fn(&Vec3) -> Vec3 + Send + Sync;
type MatrixFn = dyn Fn(&Vec3) -> Mat3 + Send + Sync;

/// User-supplied level set given as three callbacks.
pub struct ClosureLevelSet {
    pub phi: Box<ScalarFn>,
    pub gradient: Box<VectorFn>,
    pub hessian: Box<MatrixFn>,
}

impl ImplicitFunction for ClosureLevelSet {
    fn value(&self, x: &Vec3) -> f64 {
        (self.phi)(x)
    }

    fn gradient(&self, x: &Vec3) -> Vec3 {
        (self.gradient)(x)
    }

    fn hessian(&self, x: &Vec3) -> Mat3 {
        (self.hessian)(x)
    }
}

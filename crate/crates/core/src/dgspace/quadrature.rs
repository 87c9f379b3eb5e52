//! Symmetric triangle rules and Gauss-Legendre edge rules.
//!
//! Points are barycentric coordinates; weights sum to the reference measure
//! (1/2 for the reference triangle, 1 for the unit edge).

#![allow(clippy::excessive_precision)]

use crate::{Error, Result};

pub const MAX_TRIANGLE_DEGREE: usize = 8;
pub const MAX_EDGE_DEGREE: usize = 11;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<const N: usize> {
    pub degree: usize,
    pub points: Vec<[f64; N]>,
    pub weights: Vec<f64>,
}

pub type TriangleRule = QuadratureRule<3>;
pub type EdgeRule = QuadratureRule<2>;

impl<const N: usize> QuadratureRule<N> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; N], f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

#[derive(Default)]
struct Builder {
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl Builder {
    fn centroid(mut self, w: f64) -> Self {
        self.points.push([1.0 / 3.0; 3]);
        self.weights.push(0.5 * w);
        self
    }

    fn s21(mut self, a: f64, w: f64) -> Self {
        let b = 1.0 - 2.0 * a;
        for p in [[a, a, b], [a, b, a], [b, a, a]] {
            self.points.push(p);
            self.weights.push(0.5 * w);
        }
        self
    }

    fn s111(mut self, a: f64, b: f64, w: f64) -> Self {
        let c = 1.0 - a - b;
        for p in [[a, b, c], [b, a, c], [a, c, b], [c, a, b], [b, c, a], [c, b, a]] {
            self.points.push(p);
            self.weights.push(0.5 * w);
        }
        self
    }

    fn build(self, degree: usize) -> TriangleRule {
        QuadratureRule { degree, points: self.points, weights: self.weights }
    }
}

/// Fully symmetric rule with positive weights, exact for polynomials of total degree
/// `exact_degree`.
pub fn triangle_rule(exact_degree: usize) -> Result<TriangleRule> {
    let rule = match exact_degree {
        0 | 1 => Builder::default().centroid(1.0).build(1),
        2 => Builder::default().s21(1.0 / 6.0, 1.0 / 3.0).build(2),
        3 | 4 => Builder::default()
            .s21(0.445_948_490_915_964_886_32, 0.223_381_589_678_011_465_7)
            .s21(0.091_576_213_509_770_743_46, 0.109_951_743_655_321_867_64)
            .build(4),
        5 => {
            let r15 = 15f64.sqrt();
            Builder::default()
                .centroid(9.0 / 40.0)
                .s21((6.0 - r15) / 21.0, (155.0 - r15) / 1200.0)
                .s21((6.0 + r15) / 21.0, (155.0 + r15) / 1200.0)
                .build(5)
        }
        6 => Builder::default()
            .s21(0.063_089_014_491_502_228_34, 0.050_844_906_370_206_816_921)
            .s21(0.249_286_745_170_910_421_29, 0.116_786_275_726_379_366_03)
            .s111(0.053_145_049_844_816_947_353, 0.310_352_451_033_784_405_42, 0.082_851_075_618_373_575_194)
            .build(6),
        7 | 8 => Builder::default()
            .centroid(0.144_315_607_677_787_168_25)
            .s21(0.459_292_588_292_723_156_03, 0.095_091_634_267_284_624_794)
            .s21(0.170_569_307_751_760_206_62, 0.103_217_370_534_718_250_28)
            .s21(0.050_547_228_317_030_975_458, 0.032_458_497_623_198_080_311)
            .s111(0.008_394_777_409_957_605_337_2, 0.263_112_829_634_638_113_42, 0.027_230_314_174_434_994_265)
            .build(8),
        d => return Err(Error::UnsupportedDegree { degree: d, max: MAX_TRIANGLE_DEGREE }),
    };
    Ok(rule)
}

/// Gauss-Legendre rule on the unit edge exact to `exact_degree`.
pub fn edge_rule(exact_degree: usize) -> Result<EdgeRule> {
    if exact_degree > MAX_EDGE_DEGREE {
        return Err(Error::UnsupportedDegree { degree: exact_degree, max: MAX_EDGE_DEGREE });
    }
    Ok(gauss_legendre_rule(exact_degree / 2 + 1))
}

/// `n`-point Gauss-Legendre rule on the unit edge, without the degree cap of [`edge_rule`].
pub fn gauss_legendre_rule(n: usize) -> EdgeRule {
    let (nodes, weights) = gauss_legendre(n.max(1));
    QuadratureRule {
        degree: 2 * n.max(1) - 1,
        points: nodes.iter().map(|&t| [1.0 - t, t]).collect(),
        weights,
    }
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule mapped to `[0, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

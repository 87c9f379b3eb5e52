use nalgebra::DMatrix;

/// `L²(K̂)`-orthonormal modal basis of `P^k` on the reference triangle `{x̂, ŷ ≥ 0, x̂ + ŷ ≤ 1}`,
/// obtained by Cholesky-orthonormalising the monomials `x̂^i ŷ^j` (ordered by total degree).
#[derive(Debug, Clone)]
pub struct ModalBasis {
    degree: usize,
    exponents: Vec<(i32, i32)>,
    /// Row `a` holds the monomial coefficients of basis function `a`.
    coefficients: DMatrix<f64>,
}

/// Basis values and reference derivatives at one point.
#[derive(Debug, Clone)]
pub struct BasisPoint {
    pub values: Vec<f64>,
    pub gradients: Vec<[f64; 2]>,
    pub hessians: Vec<[[f64; 2]; 2]>,
}

fn factorial(n: i32) -> f64 {
    (1..=n).map(f64::from).product()
}

impl ModalBasis {
    pub fn new(degree: usize) -> Self {
        let exponents: Vec<(i32, i32)> = (0..=degree as i32)
            .flat_map(|total| (0..=total).map(move |j| (total - j, j)))
            .collect();
        let n = exponents.len();
        let gram = DMatrix::from_fn(n, n, |a, b| {
            let (i, j) = (exponents[a].0 + exponents[b].0, exponents[a].1 + exponents[b].1);
            factorial(i) * factorial(j) / factorial(i + j + 2)
        });
        let l = gram.cholesky().expect("monomial Gram matrix is SPD").l();
        let coefficients = l.try_inverse().expect("Cholesky factor is invertible");
        Self { degree, exponents, coefficients }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    /// Evaluates at barycentric coordinates `(λ₀, λ₁, λ₂)`, i.e. at `(x̂, ŷ) = (λ₁, λ₂)`.
    pub fn evaluate(&self, bary: &[f64; 3]) -> BasisPoint {
        let (x, y) = (bary[1], bary[2]);
        let pow = |b: f64, e: i32| if e < 0 { 0.0 } else { b.powi(e) };
        let n = self.len();
        let mut mono = vec![0.0; n];
        let mut dmono = vec![[0.0; 2]; n];
        let mut hmono = vec![[[0.0; 2]; 2]; n];
        for (b, &(i, j)) in self.exponents.iter().enumerate() {
            let (fi, fj) = (f64::from(i), f64::from(j));
            mono[b] = pow(x, i) * pow(y, j);
            dmono[b] = [fi * pow(x, i - 1) * pow(y, j), fj * pow(x, i) * pow(y, j - 1)];
            let xy = fi * fj * pow(x, i - 1) * pow(y, j - 1);
            hmono[b] = [
                [fi * (fi - 1.0) * pow(x, i - 2) * pow(y, j), xy],
                [xy, fj * (fj - 1.0) * pow(x, i) * pow(y, j - 2)],
            ];
        }
        let mut out = BasisPoint {
            values: vec![0.0; n],
            gradients: vec![[0.0; 2]; n],
            hessians: vec![[[0.0; 2]; 2]; n],
        };
        for a in 0..n {
            for b in 0..=a {
                let c = self.coefficients[(a, b)];
                if c == 0.0 {
                    continue;
                }
                out.values[a] += c * mono[b];
                for r in 0..2 {
                    out.gradients[a][r] += c * dmono[b][r];
                    for s in 0..2 {
                        out.hessians[a][r][s] += c * hmono[b][r][s];
                    }
                }
            }
        }
        out
    }

    pub fn tabulate(&self, points: &[[f64; 3]]) -> Vec<BasisPoint> {
        points.iter().map(|p| self.evaluate(p)).collect()
    }
}

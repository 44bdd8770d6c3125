use crate::linalg::{c, identity, CMat, I, ONE};

/// Orthonormal Hermitian operator basis: normalized identity followed by the
/// generalized Gell-Mann matrices.
///
/// Ordering is the identity, then for each pair `j < k` the symmetric and
/// antisymmetric off-diagonal elements, then the diagonal ones. For a qubit
/// this gives `(𝟙, X, Y, Z)/√2`.
#[derive(Debug, Clone)]
pub struct HermitianBasis {
    dim: usize,
    elements: Vec<CMat>,
}

impl HermitianBasis {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "basis dimension must be positive");
        let mut elements = Vec::with_capacity(dim * dim);
        elements.push(identity(dim) / c((dim as f64).sqrt(), 0.0));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for j in 0..dim {
            for k in (j + 1)..dim {
                let mut sym = CMat::zeros(dim, dim);
                sym[(j, k)] = c(s, 0.0);
                sym[(k, j)] = c(s, 0.0);
                elements.push(sym);
                let mut anti = CMat::zeros(dim, dim);
                anti[(j, k)] = -I * s;
                anti[(k, j)] = I * s;
                elements.push(anti);
            }
        }
        for l in 1..dim {
            let norm = ((l * (l + 1)) as f64).sqrt();
            let mut diag = CMat::zeros(dim, dim);
            for j in 0..l {
                diag[(j, j)] = ONE / norm;
            }
            diag[(l, l)] = c(-(l as f64) / norm, 0.0);
            elements.push(diag);
        }
        Self { dim, elements }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[CMat] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Real coordinates `tr[G_a X]` of a Hermitian operator.
    pub fn coordinates(&self, x: &CMat) -> Vec<f64> {
        self.elements.iter().map(|g| (g * x).trace().re).collect()
    }

    pub fn operator(&self, coords: &[f64]) -> CMat {
        assert_eq!(coords.len(), self.elements.len());
        self.elements.iter().zip(coords).fold(CMat::zeros(self.dim, self.dim), |acc, (g, &x)| acc + g * c(x, 0.0))
    }
}

use crate::error::{Error, Result};
use crate::linalg::{ensure_square, hermitian_eigs, CMatrix, CVector};
use crate::scalar::{c, cr, Real};

/// Largest Gram-matrix condition number accepted for a basis.
pub const GRAM_CONDITION_LIMIT: f64 = 1e8;

/// Linearly independent set of d×d system operators `{V_α}`.
#[derive(Clone, Debug)]
pub struct OperatorBasis<T: Real> {
    dim: usize,
    ops: Vec<CMatrix<T>>,
    gram_inv: CMatrix<T>,
}

impl<T: Real> OperatorBasis<T> {
    pub fn new(ops: Vec<CMatrix<T>>) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::Dimension("operator basis is empty".into()))?;
        let dim = ensure_square(first)?;
        if ops.len() > dim * dim {
            return Err(Error::Dimension(format!(
                "{} operators cannot be independent in dimension {dim}",
                ops.len()
            )));
        }
        for op in &ops {
            if ensure_square(op)? != dim {
                return Err(Error::Dimension(
                    "basis operators have different dimensions".into(),
                ));
            }
        }
        let m = ops.len();
        // Hilbert–Schmidt Gram matrix G_{αβ} = Tr(V_α† V_β).
        let gram = CMatrix::from_fn(m, m, |a, b| (ops[a].adjoint() * &ops[b]).trace());
        let eig = hermitian_eigs(&gram)?;
        let lo = eig.values[0];
        let hi = eig.values[m - 1];
        if lo <= T::zero() || hi / lo > T::lit(GRAM_CONDITION_LIMIT) {
            let condition = if lo <= T::zero() {
                f64::INFINITY
            } else {
                (hi / lo).to_f64_lossy()
            };
            return Err(Error::IllConditionedBasis { condition });
        }
        let gram_inv = gram.try_inverse().ok_or(Error::IllConditionedBasis {
            condition: f64::INFINITY,
        })?;
        Ok(Self { dim, ops, gram_inv })
    }

    /// `{I, σx, σy, σz}`.
    pub fn pauli() -> Self {
        let ops = vec![identity(), sigma_x(), sigma_y(), sigma_z()];
        Self::new(ops).expect("Pauli basis is orthogonal")
    }

    /// Matrix units `|i⟩⟨j|`, ordered by column-stacking index.
    pub fn matrix_units(dim: usize) -> Self {
        let mut ops = Vec::with_capacity(dim * dim);
        for j in 0..dim {
            for i in 0..dim {
                let mut e = CMatrix::zeros(dim, dim);
                e[(i, j)] = cr(T::one());
                ops.push(e);
            }
        }
        Self::new(ops).expect("matrix units are orthonormal")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn ops(&self) -> &[CMatrix<T>] {
        &self.ops
    }

    pub fn op(&self, alpha: usize) -> &CMatrix<T> {
        &self.ops[alpha]
    }

    /// Hilbert–Schmidt projection of `x` onto the span of the basis.
    ///
    /// Returns the expansion coefficients and the Frobenius norm of the part
    /// of `x` outside the span.
    pub fn project(&self, x: &CMatrix<T>) -> Result<(CVector<T>, T)> {
        if x.nrows() != self.dim || x.ncols() != self.dim {
            return Err(Error::Dimension(format!(
                "cannot project {}x{} operator on a dimension-{} basis",
                x.nrows(),
                x.ncols(),
                self.dim
            )));
        }
        let overlaps = CVector::from_fn(self.len(), |a, _| (self.ops[a].adjoint() * x).trace());
        let coeffs = &self.gram_inv * overlaps;
        let residual = (x - self.combine(&coeffs)).norm();
        Ok((coeffs, residual))
    }

    /// Projection that fails when the residual exceeds `rel_tol · max(1, ‖x‖)`.
    pub fn expand(&self, x: &CMatrix<T>, rel_tol: T) -> Result<CVector<T>> {
        let (coeffs, residual) = self.project(x)?;
        if residual > rel_tol * x.norm().max(T::one()) {
            return Err(Error::ProjectionResidual {
                residual: residual.to_f64_lossy(),
            });
        }
        Ok(coeffs)
    }

    pub fn combine(&self, coeffs: &CVector<T>) -> CMatrix<T> {
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for (op, &k) in self.ops.iter().zip(coeffs.iter()) {
            acc += op * k;
        }
        acc
    }

    /// Rate block `Σ_k c_k c_k†` of the map `X ↦ Σ_k scale·L_k X L_k†`,
    /// with `c_k` the expansion of `L_k`.
    pub fn rate_block(&self, ops: &[CMatrix<T>], scale: T, rel_tol: T) -> Result<CMatrix<T>> {
        let m = self.len();
        let mut a = CMatrix::zeros(m, m);
        for op in ops {
            let coeffs = self.expand(op, rel_tol)?;
            a += &coeffs * coeffs.adjoint();
        }
        Ok(a * cr(scale))
    }
}

pub fn identity<T: Real>() -> CMatrix<T> {
    CMatrix::identity(2, 2)
}

pub fn sigma_x<T: Real>() -> CMatrix<T> {
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn sigma_y<T: Real>() -> CMatrix<T> {
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn sigma_z<T: Real>() -> CMatrix<T> {
    CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

/// `σ₋ = |1⟩⟨0|` with `σz = diag(1, −1)`.
pub fn sigma_minus<T: Real>() -> CMatrix<T> {
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., 0.), c(1., 0.), c(0., 0.)])
}

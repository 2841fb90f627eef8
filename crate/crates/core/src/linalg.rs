//! Dense complex matrices and superoperators.
//!
//! Vectorization is column-stacking throughout the crate:
//! `vec(X)[i + d*j] = X[i, j]`, so that `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.
//! nalgebra stores matrices column-major, which makes `vectorize` a copy of
//! the backing slice.

use nalgebra::{ComplexField, DMatrix, DVector, Schur, SymmetricEigen, SVD};

use crate::error::{Error, Result};
use crate::scalar::{cr, Real, C};

pub type CMatrix<T> = DMatrix<C<T>>;
pub type CVector<T> = DVector<C<T>>;

/// Length-d² column-stacked image of a d×d matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorizedState<T: Real> {
    pub data: CVector<T>,
}

impl<T: Real> VectorizedState<T> {
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Linear map on vectorized matrices (d²×d², or K·d² square when stacked).
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator<T: Real> {
    pub matrix: CMatrix<T>,
}

impl<T: Real> Superoperator<T> {
    pub fn from_matrix(matrix: CMatrix<T>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        Ok(Self { matrix })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: CMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, v: &VectorizedState<T>) -> VectorizedState<T> {
        VectorizedState {
            data: &self.matrix * &v.data,
        }
    }

    /// Applies the map to a d×d matrix (only for unstacked superoperators).
    pub fn apply_matrix(&self, x: &CMatrix<T>) -> Result<CMatrix<T>> {
        let v = vectorize(x)?;
        if v.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "superoperator of size {} applied to {}x{} matrix",
                self.dim(),
                x.nrows(),
                x.ncols()
            )));
        }
        devectorize(&self.apply(&v))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            matrix: &self.matrix * &other.matrix,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            matrix: &self.matrix + &other.matrix,
        }
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self {
            matrix: &self.matrix * s,
        }
    }

    pub fn norm(&self) -> T {
        self.matrix.norm()
    }
}

pub fn dagger<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    m.adjoint()
}

pub fn trace<T: Real>(m: &CMatrix<T>) -> C<T> {
    m.trace()
}

pub fn is_finite<T: Real>(m: &CMatrix<T>) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn ensure_square<T: Real>(m: &CMatrix<T>) -> Result<usize> {
    if m.is_square() {
        Ok(m.nrows())
    } else {
        Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        })
    }
}

pub fn vectorize<T: Real>(m: &CMatrix<T>) -> Result<VectorizedState<T>> {
    ensure_square(m)?;
    Ok(VectorizedState {
        data: CVector::from_column_slice(m.as_slice()),
    })
}

pub fn devectorize<T: Real>(v: &VectorizedState<T>) -> Result<CMatrix<T>> {
    let n = v.len();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n {
        return Err(Error::Dimension(format!(
            "vector of length {n} is not a vectorized square matrix"
        )));
    }
    Ok(CMatrix::from_column_slice(d, d, v.data.as_slice()))
}

/// Superoperator of `X ↦ A X B`.
pub fn sandwich_superop<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> Result<Superoperator<T>> {
    let da = ensure_square(a)?;
    let db = ensure_square(b)?;
    if da != db {
        return Err(Error::Dimension(format!(
            "sandwich of {da}x{da} and {db}x{db} operators"
        )));
    }
    Ok(Superoperator {
        matrix: b.transpose().kronecker(a),
    })
}

/// Superoperator of `X ↦ -i [H, X]`.
pub fn commutator_superop<T: Real>(h: &CMatrix<T>) -> Result<Superoperator<T>> {
    let d = ensure_square(h)?;
    let id = CMatrix::<T>::identity(d, d);
    let left = sandwich_superop(h, &id)?;
    let right = sandwich_superop(&id, h)?;
    let minus_i = C::new(T::zero(), -T::one());
    Ok(Superoperator {
        matrix: (left.matrix - right.matrix) * minus_i,
    })
}

/// Superoperator of `X ↦ {A, X}₊`.
pub fn anticommutator_superop<T: Real>(a: &CMatrix<T>) -> Result<Superoperator<T>> {
    let d = ensure_square(a)?;
    let id = CMatrix::<T>::identity(d, d);
    Ok(sandwich_superop(a, &id)?.add(&sandwich_superop(&id, a)?))
}

/// Superoperator of the Kraus map `X ↦ Σ_k K_k X K_k†`.
pub fn kraus_superop<T: Real>(kraus: &[CMatrix<T>]) -> Result<Superoperator<T>> {
    let d = kraus
        .first()
        .map(|k| k.nrows())
        .ok_or_else(|| Error::Dimension("empty Kraus set".into()))?;
    let mut acc = Superoperator::zeros(d * d);
    for k in kraus {
        acc = acc.add(&sandwich_superop(k, &k.adjoint())?);
    }
    Ok(acc)
}

/// Frobenius norm of `M - M†`.
pub fn hermiticity_residual<T: Real>(m: &CMatrix<T>) -> T {
    (m - m.adjoint()).norm()
}

fn check_hermitian<T: Real>(m: &CMatrix<T>) -> Result<()> {
    ensure_square(m)?;
    if !is_finite(m) {
        return Err(Error::NonFinite("matrix"));
    }
    let residual = hermiticity_residual(m);
    let allowed = T::tol(1e-10) * m.norm().max(T::one());
    if residual > allowed {
        return Err(Error::NotHermitian {
            residual: residual.to_f64_lossy(),
            allowed: allowed.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T: Real> {
    pub values: Vec<T>,
    /// Columns are the eigenvectors, in the order of `values`.
    pub vectors: CMatrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn reconstruct(&self) -> CMatrix<T> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let lam = cr(self.values[j]);
            for i in 0..n {
                scaled[(i, j)] *= lam;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

pub fn hermitian_eigs<T: Real>(m: &CMatrix<T>) -> Result<HermitianEigen<T>> {
    check_hermitian(m)?;
    Ok(hermitian_eigs_unchecked(m.clone()))
}

// SymmetricEigen reads the lower triangle only.
fn hermitian_eigs_unchecked<T: Real>(m: CMatrix<T>) -> HermitianEigen<T> {
    let n = m.nrows();
    if n == 0 {
        return HermitianEigen {
            values: Vec::new(),
            vectors: CMatrix::zeros(0, 0),
        };
    }
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    HermitianEigen { values, vectors }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsdReport<T> {
    pub is_psd: bool,
    pub min_eig: T,
}

/// Positive-semidefiniteness test: `min_eig >= -tol * max(1, ‖M‖)`.
///
/// The input is symmetrized before diagonalization; Hermiticity is still
/// enforced at the usual tolerance.
pub fn psd_check<T: Real>(m: &CMatrix<T>, tol: T) -> Result<PsdReport<T>> {
    check_hermitian(m)?;
    let eig = hermitian_eigs_unchecked((m + m.adjoint()) * cr(T::lit(0.5)));
    let min_eig = eig.values.first().copied().unwrap_or_else(T::zero);
    let threshold = -tol * m.norm().max(T::one());
    Ok(PsdReport {
        is_psd: min_eig >= threshold,
        min_eig,
    })
}

/// `‖G G† − G† G‖ ≤ tol · ‖G‖²`.
pub fn is_normal<T: Real>(g: &CMatrix<T>, tol: T) -> bool {
    let n = g.norm();
    if n == T::zero() {
        return true;
    }
    let gd = g.adjoint();
    (g * &gd - &gd * g).norm() <= tol * n * n
}

/// Reusable evaluator of `exp(t G)` for many `t`.
///
/// Normal generators are diagonalized once through a complex Schur form;
/// everything else goes through scaling-and-squaring Padé on every call.
#[derive(Clone, Debug)]
pub struct ExpGenerator<T: Real> {
    dim: usize,
    kind: ExpKind<T>,
}

#[derive(Clone, Debug)]
enum ExpKind<T: Real> {
    Zero,
    Normal { q: CMatrix<T>, eigs: Vec<C<T>> },
    General(CMatrix<T>),
}

impl<T: Real> ExpGenerator<T> {
    pub fn new(g: &Superoperator<T>) -> Result<Self> {
        let m = &g.matrix;
        if !is_finite(m) {
            return Err(Error::NonFinite("generator"));
        }
        let dim = m.nrows();
        if m.iter().all(|z| z.re == T::zero() && z.im == T::zero()) {
            return Ok(Self {
                dim,
                kind: ExpKind::Zero,
            });
        }
        if is_normal(m, T::tol(1e-12)) {
            if let Some(schur) = Schur::try_new(m.clone(), T::default_epsilon(), 0) {
                let (q, t) = schur.unpack();
                let off: T = (0..dim)
                    .flat_map(|j| (0..j).map(move |i| (i, j)))
                    .map(|(i, j)| t[(i, j)].norm_sqr())
                    .fold(T::zero(), |a, b| a + b)
                    .sqrt();
                if off <= T::tol(1e-10) * m.norm() {
                    let eigs = (0..dim).map(|i| t[(i, i)]).collect();
                    return Ok(Self {
                        dim,
                        kind: ExpKind::Normal { q, eigs },
                    });
                }
            }
        }
        Ok(Self {
            dim,
            kind: ExpKind::General(m.clone()),
        })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, ExpKind::Zero)
    }

    pub fn is_normal_path(&self) -> bool {
        matches!(self.kind, ExpKind::Normal { .. })
    }

    pub fn at(&self, t: T) -> Result<Superoperator<T>> {
        let matrix = match &self.kind {
            ExpKind::Zero => CMatrix::identity(self.dim, self.dim),
            ExpKind::Normal { q, eigs } => {
                let mut scaled = q.clone();
                for (j, lam) in eigs.iter().enumerate() {
                    let e = ComplexField::exp(*lam * cr(t));
                    for i in 0..self.dim {
                        scaled[(i, j)] *= e;
                    }
                }
                scaled * q.adjoint()
            }
            ExpKind::General(g) => (g * cr(t)).exp(),
        };
        if !is_finite(&matrix) {
            return Err(Error::NonFinite("matrix exponential (overflow)"));
        }
        Ok(Superoperator { matrix })
    }
}

/// `exp(t G)`.
pub fn matrix_exp<T: Real>(g: &Superoperator<T>, t: T) -> Result<Superoperator<T>> {
    if t < T::zero() {
        return Err(Error::InvalidParams("matrix_exp requires t >= 0".into()));
    }
    ExpGenerator::new(g)?.at(t)
}

/// Eigenvalues of a general complex matrix (complex Schur form).
pub fn eigenvalues<T: Real>(m: &CMatrix<T>) -> Result<Vec<C<T>>> {
    ensure_square(m)?;
    let schur = Schur::try_new(m.clone(), T::default_epsilon(), 0).ok_or(Error::NoConvergence)?;
    let (_, t) = schur.unpack();
    Ok((0..m.nrows()).map(|i| t[(i, i)]).collect())
}

/// Orthonormal basis (as columns) of the null space of `m`, taking the
/// `count` smallest singular directions.  Also returns the largest singular
/// value among the ones taken.
pub(crate) fn null_space<T: Real>(m: &CMatrix<T>, count: usize) -> (CMatrix<T>, T) {
    let n = m.ncols();
    // V† rows from the SVD of m; smallest singular values sit at the end
    // once sorted.
    let svd = SVD::new(m.clone(), false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[a]
            .partial_cmp(&svd.singular_values[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut basis = CMatrix::zeros(n, count);
    let mut worst = T::zero();
    for (col, &k) in order.iter().take(count).enumerate() {
        worst = worst.max(svd.singular_values[k]);
        let row = v_t.row(k).adjoint();
        basis.set_column(col, &row);
    }
    (basis, worst)
}

/// Solution of `a X = b` through the SVD of `a`.
///
/// Singular directions of `a` (below `rel_tol · σ_max`) are dropped, which
/// yields the minimum-norm solution; if `b` has a component along those
/// directions the system is inconsistent and `None` is returned.  The second
/// value is the effective rank, the third the condition number of the kept
/// part.
pub(crate) fn solve_consistent<T: Real>(
    a: &CMatrix<T>,
    b: &CMatrix<T>,
    rel_tol: T,
) -> Option<(CMatrix<T>, usize, T)> {
    let svd = SVD::new(a.clone(), true, true);
    let u = svd.u.as_ref()?;
    let v_t = svd.v_t.as_ref()?;
    let s = &svd.singular_values;
    let smax = s.iter().copied().fold(T::zero(), |x, y| x.max(y));
    if smax == T::zero() {
        return None;
    }
    let cut = rel_tol * smax;
    let ub = u.adjoint() * b;
    let mut y = CMatrix::zeros(v_t.nrows(), b.ncols());
    let mut rank = 0;
    let mut smin = smax;
    let bnorm = b.norm().max(T::one());
    for k in 0..s.len() {
        if s[k] > cut {
            rank += 1;
            smin = smin.min(s[k]);
            for j in 0..b.ncols() {
                y[(k, j)] = ub[(k, j)] / cr(s[k]);
            }
        } else {
            for j in 0..b.ncols() {
                if ub[(k, j)].modulus() > T::tol(1e-8) * bnorm {
                    return None;
                }
            }
        }
    }
    Some((v_t.adjoint() * y, rank, smax / smin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    fn m2(a: [[(f64, f64); 2]; 2]) -> CMatrix<f64> {
        CMatrix::from_fn(2, 2, |i, j| c(a[i][j].0, a[i][j].1))
    }

    fn sz() -> CMatrix<f64> {
        m2([[(1., 0.), (0., 0.)], [(0., 0.), (-1., 0.)]])
    }

    #[test]
    fn vectorize_identity_and_unit() {
        let v = vectorize(&CMatrix::<f64>::identity(2, 2)).unwrap();
        assert_eq!(
            v.data.as_slice(),
            &[c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]
        );
        let x = m2([[(0., 0.), (1., 0.)], [(0., 0.), (0., 0.)]]);
        let v = vectorize(&x).unwrap();
        assert_eq!(
            v.data.as_slice(),
            &[c(0., 0.), c(0., 0.), c(1., 0.), c(0., 0.)]
        );
    }

    #[test]
    fn vectorize_rejects_non_square() {
        let m = CMatrix::<f64>::zeros(2, 3);
        assert_eq!(
            vectorize(&m).unwrap_err(),
            Error::NotSquare { rows: 2, cols: 3 }
        );
    }

    #[test]
    fn sandwich_identity_and_sign_flip() {
        let id = CMatrix::<f64>::identity(2, 2);
        let s = sandwich_superop(&id, &id).unwrap();
        assert_eq!(s.matrix, CMatrix::identity(4, 4));

        let x = m2([[(1., 0.), (2., 1.)], [(3., -1.), (4., 0.)]]);
        let y = sandwich_superop(&sz(), &sz())
            .unwrap()
            .apply_matrix(&x)
            .unwrap();
        let expected = m2([[(1., 0.), (-2., -1.)], [(-3., 1.), (4., 0.)]]);
        assert_eq!(y, expected);
    }

    #[test]
    fn sandwich_dimension_mismatch() {
        let a = CMatrix::<f64>::identity(2, 2);
        let b = CMatrix::<f64>::identity(3, 3);
        assert!(matches!(sandwich_superop(&a, &b), Err(Error::Dimension(_))));
    }

    #[test]
    fn hermitian_eigs_small_cases() {
        let e = hermitian_eigs(&sz()).unwrap();
        assert_eq!(e.values, vec![-1.0, 1.0]);
        let d = CMatrix::<f64>::from_diagonal(&CVector::from_vec(vec![
            c(3., 0.),
            c(1., 0.),
            c(2., 0.),
        ]));
        let e = hermitian_eigs(&d).unwrap();
        for (got, want) in e.values.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn hermitian_eigs_rejects_non_hermitian() {
        let m = m2([[(0., 0.), (1., 0.)], [(0., 0.), (0., 0.)]]);
        assert!(matches!(
            hermitian_eigs(&m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn exp_zero_time_and_diagonal() {
        let g =
            Superoperator::from_matrix(CMatrix::<f64>::from_diagonal(&CVector::from_vec(vec![
                c(-1., 0.),
                c(-2., 0.),
            ])))
            .unwrap();
        let e0 = matrix_exp(&g, 0.0).unwrap();
        assert!((e0.matrix - CMatrix::identity(2, 2)).norm() < 1e-15);
        let e1 = matrix_exp(&g, 1.0).unwrap();
        assert!((e1.matrix[(0, 0)].re - (-1f64).exp()).abs() < 1e-15);
        assert!((e1.matrix[(1, 1)].re - (-2f64).exp()).abs() < 1e-15);
        assert!(e1.matrix[(0, 1)].modulus() < 1e-15);
    }

    #[test]
    fn exp_rejects_negative_time() {
        let g = Superoperator::<f64>::zeros(2);
        assert!(matrix_exp(&g, -1.0).is_err());
    }

    #[test]
    fn exp_general_path_is_used_for_jordan_block() {
        let g =
            Superoperator::from_matrix(m2([[(-1., 0.), (1., 0.)], [(0., 0.), (-1., 0.)]])).unwrap();
        let gen = ExpGenerator::new(&g).unwrap();
        assert!(!gen.is_normal_path());
        let e = gen.at(2.0).unwrap();
        // exp(t(−I + N)) = e^{−t}(I + tN)
        let em2 = (-2f64).exp();
        assert!((e.matrix[(0, 0)].re - em2).abs() < 1e-14);
        assert!((e.matrix[(0, 1)].re - 2.0 * em2).abs() < 1e-14);
    }

    #[test]
    fn psd_small_cases() {
        let m = m2([[(1., 0.), (0., 0.)], [(0., 0.), (-1., 0.)]]);
        let r = psd_check(&m, 1e-10).unwrap();
        assert!(!r.is_psd);
        assert!((r.min_eig + 1.0).abs() < 1e-15);
        let r = psd_check(&CMatrix::<f64>::zeros(3, 3), 1e-10).unwrap();
        assert!(r.is_psd);
    }

    #[test]
    fn solve_consistent_detects_inconsistency() {
        let a = m2([[(1., 0.), (0., 0.)], [(0., 0.), (0., 0.)]]);
        let b_ok = m2([[(2., 0.), (0., 0.)], [(0., 0.), (0., 0.)]]);
        let (x, rank, _) = solve_consistent(&a, &b_ok, 1e-12).unwrap();
        assert_eq!(rank, 1);
        assert!((x[(0, 0)].re - 2.0).abs() < 1e-14);
        let b_bad = m2([[(0., 0.), (0., 0.)], [(1., 0.), (0., 0.)]]);
        assert!(solve_consistent(&a, &b_bad, 1e-12).is_none());
    }

    #[test]
    fn f32_exp_matches_closed_form() {
        let g =
            Superoperator::from_matrix(CMatrix::<f32>::from_diagonal(&CVector::from_vec(vec![
                c(-0.5, 0.),
                c(0., 1.),
            ])))
            .unwrap();
        let e = matrix_exp(&g, 2.0f32).unwrap();
        assert!((e.matrix[(0, 0)].re - (-1f32).exp()).abs() < 1e-6);
        assert!((e.matrix[(1, 1)].re - 2f32.cos()).abs() < 1e-6);
        assert!((e.matrix[(1, 1)].im - 2f32.sin()).abs() < 1e-6);
    }
}

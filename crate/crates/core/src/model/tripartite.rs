//! Reduction of a composite system–ancilla Lindblad dissipator to rate form.
//!
//! The ancilla operators are the transitions `L_u = |to⟩⟨from|`; the pair
//! label `u = (to, from)` is therefore the channel pair of the rate block the
//! coefficients end up in.  Coefficients are stored as one joint Hermitian
//! matrix over the index `(u, α)`, laid out as `u·m + α` with
//! `u = to·K + from`.

use crate::error::{Error, Result};
use crate::linalg::{hermiticity_residual, CMatrix};
use crate::scalar::Real;

use super::{LindbladRateModel, OperatorBasis};

#[derive(Clone, Debug)]
pub struct TripartiteCoefficients<T: Real> {
    channels: usize,
    ops: usize,
    joint: CMatrix<T>,
}

impl<T: Real> TripartiteCoefficients<T> {
    pub fn from_joint(channels: usize, ops: usize, joint: CMatrix<T>) -> Result<Self> {
        let n = channels * channels * ops;
        if joint.nrows() != n || joint.ncols() != n {
            return Err(Error::Dimension(format!(
                "joint coefficient matrix must be {n}x{n} for {channels} channels and {ops} operators"
            )));
        }
        Ok(Self {
            channels,
            ops,
            joint,
        })
    }

    /// Zero coefficients, to be filled with [`Self::set_block`].
    pub fn zeros(channels: usize, ops: usize) -> Self {
        let n = channels * channels * ops;
        Self {
            channels,
            ops,
            joint: CMatrix::zeros(n, n),
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn ops(&self) -> usize {
        self.ops
    }

    pub fn joint(&self) -> &CMatrix<T> {
        &self.joint
    }

    fn pair_index(&self, (to, from): (usize, usize)) -> usize {
        to * self.channels + from
    }

    pub fn block(&self, u: (usize, usize), v: (usize, usize)) -> CMatrix<T> {
        let m = self.ops;
        self.joint
            .view((self.pair_index(u) * m, self.pair_index(v) * m), (m, m))
            .into_owned()
    }

    /// Sets block `(u, v)` and its Hermitian partner `(v, u)`.
    pub fn set_block(&mut self, u: (usize, usize), v: (usize, usize), b: &CMatrix<T>) {
        let m = self.ops;
        let (iu, iv) = (self.pair_index(u), self.pair_index(v));
        self.joint.view_mut((iu * m, iv * m), (m, m)).copy_from(b);
        if iu != iv {
            self.joint
                .view_mut((iv * m, iu * m), (m, m))
                .copy_from(&b.adjoint());
        }
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let k = self.channels;
        (0..k).flat_map(move |to| (0..k).map(move |from| (to, from)))
    }
}

/// Builds the rate model `a_{RR'} = b_{(R,R')(R,R')}`, `a_R = b_{(R,R)(R,R)}`.
///
/// Fails when `b` is not Hermitian or when any block `b_{uv}` with `u ≠ v`
/// exceeds `1e−10 · max(1, ‖b‖)`: such couplings mix ancilla populations
/// and coherences and the reduced dynamics is not of rate form.
pub fn reduce_from_tripartite<T: Real>(
    b: &TripartiteCoefficients<T>,
    basis: OperatorBasis<T>,
    hamiltonians: Vec<CMatrix<T>>,
    weights: Vec<T>,
) -> Result<LindbladRateModel<T>> {
    if basis.len() != b.ops() {
        return Err(Error::Dimension(format!(
            "coefficients use {} operators, basis has {}",
            b.ops(),
            basis.len()
        )));
    }
    if hamiltonians.len() != b.channels() {
        return Err(Error::Dimension(format!(
            "{} Hamiltonians for {} channels",
            hamiltonians.len(),
            b.channels()
        )));
    }
    let scale = b.joint().norm().max(T::one());
    let residual = hermiticity_residual(b.joint());
    let allowed = T::tol(1e-10) * scale;
    if residual > allowed {
        return Err(Error::NotHermitian {
            residual: residual.to_f64_lossy(),
            allowed: allowed.to_f64_lossy(),
        });
    }
    for u in b.pairs() {
        for v in b.pairs().filter(|&v| v != u) {
            let norm = b.block(u, v).norm();
            if norm > T::tol(1e-10) * scale {
                return Err(Error::NotRateForm {
                    u,
                    v,
                    norm: norm.to_f64_lossy(),
                });
            }
        }
    }
    let mut builder = LindbladRateModel::builder(basis, b.channels()).weights(weights);
    for (r, h) in hamiltonians.into_iter().enumerate() {
        builder = builder.hamiltonian(r, h);
    }
    for (to, from) in b.pairs() {
        builder = builder.coupling(to, from, b.block((to, from), (to, from)));
    }
    builder.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    #[test]
    fn diagonal_blocks_copied_verbatim() {
        let basis = OperatorBasis::<f64>::pauli();
        let mut b = TripartiteCoefficients::zeros(2, 4);
        let mut blk = CMatrix::zeros(4, 4);
        blk[(3, 3)] = c(0.4, 0.);
        blk[(1, 2)] = c(0.1, 0.05);
        blk[(2, 1)] = c(0.1, -0.05);
        blk[(1, 1)] = c(0.3, 0.);
        blk[(2, 2)] = c(0.3, 0.);
        b.set_block((1, 0), (1, 0), &blk);
        let model =
            reduce_from_tripartite(&b, basis, vec![CMatrix::zeros(2, 2); 2], vec![0.5, 0.5])
                .unwrap();
        assert_eq!(model.rate(1, 0), &blk);
        assert_eq!(model.rate(0, 1).norm(), 0.0);
    }

    #[test]
    fn off_diagonal_pair_rejected() {
        let basis = OperatorBasis::<f64>::pauli();
        let mut b = TripartiteCoefficients::zeros(2, 4);
        let mut blk = CMatrix::zeros(4, 4);
        blk[(0, 0)] = c(0.1, 0.);
        b.set_block((0, 1), (1, 1), &blk);
        let err = reduce_from_tripartite(&b, basis, vec![CMatrix::zeros(2, 2); 2], vec![0.5, 0.5])
            .unwrap_err();
        match err {
            Error::NotRateForm { u, v, .. } => {
                assert!((u, v) == ((0, 1), (1, 1)) || (u, v) == ((1, 1), (0, 1)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}

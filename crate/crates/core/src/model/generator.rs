use crate::error::{Error, Result};
use crate::linalg::{
    anticommutator_superop, commutator_superop, sandwich_superop, CMatrix, CVector, Superoperator,
};
use crate::scalar::{cr, Real};

use super::{LindbladRateModel, OperatorBasis, StackedState};

/// Full generator on the stacked space, channel-major blocks of size d².
#[derive(Clone, Debug)]
pub struct StackedGenerator<T: Real> {
    pub superop: Superoperator<T>,
    pub channels: usize,
    pub dim: usize,
}

impl<T: Real> StackedGenerator<T> {
    pub fn block(&self, to: usize, from: usize) -> Superoperator<T> {
        let d2 = self.dim * self.dim;
        Superoperator {
            matrix: self
                .superop
                .matrix
                .view((to * d2, from * d2), (d2, d2))
                .into_owned(),
        }
    }

    pub fn apply(&self, state: &StackedState<T>) -> StackedState<T> {
        let v: CVector<T> = &self.superop.matrix * state.to_vector();
        StackedState::from_vector(&v, self.dim).expect("generator preserves layout")
    }

    /// Linear functional `X ↦ Σ_R Tr X_R` on stacked vectors, as a row.
    pub fn total_trace_row(&self) -> CVector<T> {
        let d = self.dim;
        let mut row = CVector::zeros(self.channels * d * d);
        for r in 0..self.channels {
            for i in 0..d {
                row[r * d * d + i + d * i] = cr(T::one());
            }
        }
        row
    }
}

/// `D = ½ Σ_{αγ} a^{αγ} V_γ† V_α`.
pub(crate) fn d_operator<T: Real>(a: &CMatrix<T>, basis: &OperatorBasis<T>) -> CMatrix<T> {
    let d = basis.dim();
    let mut acc = CMatrix::zeros(d, d);
    for alpha in 0..basis.len() {
        for gamma in 0..basis.len() {
            let k = a[(alpha, gamma)];
            if k.re != T::zero() || k.im != T::zero() {
                acc += basis.op(gamma).adjoint() * basis.op(alpha) * k;
            }
        }
    }
    acc * cr(T::lit(0.5))
}

/// `F[X] = Σ_{αγ} a^{αγ} V_α X V_γ†`.
pub(crate) fn f_superop<T: Real>(a: &CMatrix<T>, basis: &OperatorBasis<T>) -> Superoperator<T> {
    let d2 = basis.dim() * basis.dim();
    let mut acc = CMatrix::zeros(d2, d2);
    for alpha in 0..basis.len() {
        for gamma in 0..basis.len() {
            let k = a[(alpha, gamma)];
            if k.re != T::zero() || k.im != T::zero() {
                let s = sandwich_superop(basis.op(alpha), &basis.op(gamma).adjoint())
                    .expect("basis operators share a dimension");
                acc += s.matrix * k;
            }
        }
    }
    Superoperator { matrix: acc }
}

/// Standard Lindblad generator `−i[H,·] − {D,·}₊ + F[·]` for one rate block.
pub fn lindblad_superop<T: Real>(
    h: &CMatrix<T>,
    a: &CMatrix<T>,
    basis: &OperatorBasis<T>,
) -> Result<Superoperator<T>> {
    if a.nrows() != basis.len() || a.ncols() != basis.len() {
        return Err(Error::Dimension("rate block does not match basis".into()));
    }
    let unitary = commutator_superop(h)?;
    let anti = anticommutator_superop(&d_operator(a, basis))?;
    let f = f_superop(a, basis);
    Ok(Superoperator {
        matrix: unitary.matrix - anti.matrix + f.matrix,
    })
}

pub fn assemble_generator<T: Real>(model: &LindbladRateModel<T>) -> Result<StackedGenerator<T>> {
    let k = model.channels();
    let d = model.dim();
    let d2 = d * d;
    let basis = model.basis();
    let mut g = CMatrix::zeros(k * d2, k * d2);
    for r in 0..k {
        let mut diag = lindblad_superop(model.hamiltonian(r), model.rate(r, r), basis)?.matrix;
        for other in (0..k).filter(|&o| o != r) {
            let escape = model.rate(other, r);
            if escape.norm() > T::zero() {
                diag -= anticommutator_superop(&d_operator(escape, basis))?.matrix;
                let feed = f_superop(escape, basis);
                g.view_mut((other * d2, r * d2), (d2, d2))
                    .copy_from(&feed.matrix);
            }
        }
        g.view_mut((r * d2, r * d2), (d2, d2)).copy_from(&diag);
    }
    Ok(StackedGenerator {
        superop: Superoperator { matrix: g },
        channels: k,
        dim: d,
    })
}

/// Per-channel generators `L̄_R` and weights of a model without couplings.
#[derive(Clone, Debug)]
pub struct RandomLindblad<T: Real> {
    pub generators: Vec<Superoperator<T>>,
    pub weights: Vec<T>,
}

/// Splits a model whose coupling blocks all vanish into independent Lindblad
/// generators, so that `ρ_S(t) = Σ_R P_R exp(t L̄_R)[ρ₀]`.  Returns `None`
/// when any coupling block is nonzero.
pub fn decompose_random_lindblad<T: Real>(
    model: &LindbladRateModel<T>,
) -> Option<RandomLindblad<T>> {
    if model.has_couplings() {
        return None;
    }
    let generators = (0..model.channels())
        .map(|r| lindblad_superop(model.hamiltonian(r), model.rate(r, r), model.basis()))
        .collect::<Result<Vec<_>>>()
        .ok()?;
    Some(RandomLindblad {
        generators,
        weights: model.weights().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sigma_minus, sigma_z};
    use crate::scalar::c;

    #[test]
    fn single_channel_matches_jump_operator_form() {
        let basis = OperatorBasis::<f64>::pauli();
        let h = sigma_z::<f64>() * c(0.3, 0.);
        let l = sigma_minus::<f64>();
        let gamma = 0.7;
        let a = basis
            .rate_block(std::slice::from_ref(&l), gamma, 1e-12)
            .unwrap();
        let model = LindbladRateModel::builder(basis, 1)
            .hamiltonian(0, h.clone())
            .diagonal(0, a)
            .weights(vec![1.0])
            .build()
            .unwrap();
        let g = assemble_generator(&model).unwrap();

        let d = 2;
        let id = CMatrix::<f64>::identity(d, d);
        let ldl = l.adjoint() * &l;
        let direct = commutator_superop(&h).unwrap().matrix
            + (sandwich_superop(&l, &l.adjoint()).unwrap().matrix
                - (sandwich_superop(&ldl, &id).unwrap().matrix
                    + sandwich_superop(&id, &ldl).unwrap().matrix)
                    * c(0.5, 0.))
                * c(gamma, 0.);
        assert!((g.superop.matrix - direct).norm() < 1e-12);
    }

    #[test]
    fn zero_couplings_give_block_diagonal_generator() {
        let basis = OperatorBasis::<f64>::pauli();
        let mut a = CMatrix::zeros(4, 4);
        a[(3, 3)] = c(0.5, 0.);
        let model = LindbladRateModel::builder(basis, 2)
            .diagonal(0, a.clone())
            .diagonal(1, a * c(2., 0.))
            .build()
            .unwrap();
        let g = assemble_generator(&model).unwrap();
        assert_eq!(g.block(0, 1).norm(), 0.0);
        assert_eq!(g.block(1, 0).norm(), 0.0);
        assert!(decompose_random_lindblad(&model).is_some());
    }

    #[test]
    fn coupling_refuses_random_lindblad_decomposition() {
        let basis = OperatorBasis::<f64>::pauli();
        let mut a = CMatrix::zeros(4, 4);
        a[(3, 3)] = c(0.5, 0.);
        let model = LindbladRateModel::builder(basis, 2)
            .coupling(0, 1, a)
            .build()
            .unwrap();
        assert!(decompose_random_lindblad(&model).is_none());
    }
}

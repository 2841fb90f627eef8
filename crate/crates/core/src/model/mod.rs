//! Lindblad rate models: channels `R` with effective Hamiltonians, diagonal
//! rate blocks `a_R`, coupling blocks `a_{RR'}` and statistical weights `P_R`.
//!
//! Index convention for coupling blocks: `rate(to, from)` is the block that
//! feeds channel `to` from channel `from` through `F_{to,from}` and drains
//! `from` through the anticommutator with `D_{to,from}`.  `rate(R, R)` is the
//! diagonal block `a_R`.

mod basis;
mod correlations;
mod generator;
mod tripartite;
mod validate;

pub use basis::{
    identity, sigma_minus, sigma_x, sigma_y, sigma_z, OperatorBasis, GRAM_CONDITION_LIMIT,
};
pub use correlations::{build_from_correlations, ProjectedCorrelations, Quadrature};
pub use generator::{
    assemble_generator, decompose_random_lindblad, lindblad_superop, RandomLindblad,
    StackedGenerator,
};
pub use tripartite::{reduce_from_tripartite, TripartiteCoefficients};
pub use validate::{
    validate_model, validate_model_with_tol, BlockReport, BlockTag, ValidationReport,
};

use crate::error::{Error, Result};
use crate::linalg::{
    ensure_square, hermiticity_residual, is_finite, psd_check, vectorize, CMatrix, CVector,
};
use crate::scalar::{cr, Real};

#[derive(Clone, Debug)]
pub struct LindbladRateModel<T: Real> {
    basis: OperatorBasis<T>,
    hamiltonians: Vec<CMatrix<T>>,
    system_hamiltonian: CMatrix<T>,
    rates: Vec<CMatrix<T>>,
    weights: Vec<T>,
}

impl<T: Real> LindbladRateModel<T> {
    /// Starts a model with `channels` channels, zero Hamiltonians, zero rate
    /// blocks and uniform weights.
    pub fn builder(basis: OperatorBasis<T>, channels: usize) -> ModelBuilder<T> {
        let d = basis.dim();
        let m = basis.len();
        let w = if channels == 0 {
            T::zero()
        } else {
            T::one() / T::from_usize(channels).unwrap()
        };
        ModelBuilder {
            model: LindbladRateModel {
                hamiltonians: vec![CMatrix::zeros(d, d); channels],
                system_hamiltonian: CMatrix::zeros(d, d),
                rates: vec![CMatrix::zeros(m, m); channels * channels],
                weights: vec![w; channels],
                basis,
            },
            error: None,
        }
    }

    pub fn channels(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> &OperatorBasis<T> {
        &self.basis
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Effective Hamiltonian `H_R^eff` of channel `r`.
    pub fn hamiltonian(&self, r: usize) -> &CMatrix<T> {
        &self.hamiltonians[r]
    }

    /// System Hamiltonian `H_S` separating the unitary part from the memory
    /// part in kernel extraction.  Defaults to zero.
    pub fn system_hamiltonian(&self) -> &CMatrix<T> {
        &self.system_hamiltonian
    }

    pub fn rate(&self, to: usize, from: usize) -> &CMatrix<T> {
        &self.rates[to * self.channels() + from]
    }

    pub fn has_couplings(&self) -> bool {
        let k = self.channels();
        (0..k).any(|to| (0..k).any(|from| to != from && self.rate(to, from).norm() > T::zero()))
    }

    /// `ρ̃_R(0) = P_R ρ₀`.
    pub fn initial_stacked_state(&self, rho0: &CMatrix<T>) -> Result<StackedState<T>> {
        validate_density_matrix(rho0, self.dim())?;
        Ok(StackedState {
            blocks: self.weights.iter().map(|&p| rho0 * cr(p)).collect(),
        })
    }
}

pub struct ModelBuilder<T: Real> {
    model: LindbladRateModel<T>,
    error: Option<Error>,
}

impl<T: Real> ModelBuilder<T> {
    fn check_channel(&mut self, r: usize) -> bool {
        if r >= self.model.channels() {
            self.error.get_or_insert(Error::Dimension(format!(
                "channel {r} out of range for {} channels",
                self.model.channels()
            )));
            return false;
        }
        true
    }

    pub fn hamiltonian(mut self, r: usize, h: CMatrix<T>) -> Self {
        if self.check_channel(r) {
            self.model.hamiltonians[r] = h;
        }
        self
    }

    /// Sets the same effective Hamiltonian on every channel and uses it as
    /// the system Hamiltonian.
    pub fn common_hamiltonian(mut self, h: CMatrix<T>) -> Self {
        for slot in &mut self.model.hamiltonians {
            *slot = h.clone();
        }
        self.model.system_hamiltonian = h;
        self
    }

    pub fn system_hamiltonian(mut self, h: CMatrix<T>) -> Self {
        self.model.system_hamiltonian = h;
        self
    }

    pub fn diagonal(self, r: usize, a: CMatrix<T>) -> Self {
        self.rate(r, r, a)
    }

    /// Coupling block feeding channel `to` from channel `from`.
    pub fn coupling(self, to: usize, from: usize, a: CMatrix<T>) -> Self {
        self.rate(to, from, a)
    }

    fn rate(mut self, to: usize, from: usize, a: CMatrix<T>) -> Self {
        if self.check_channel(to) && self.check_channel(from) {
            let k = self.model.channels();
            self.model.rates[to * k + from] = a;
        }
        self
    }

    pub fn weights(mut self, w: Vec<T>) -> Self {
        if w.len() != self.model.channels() {
            self.error.get_or_insert(Error::Dimension(format!(
                "{} weights for {} channels",
                w.len(),
                self.model.channels()
            )));
        } else {
            self.model.weights = w;
        }
        self
    }

    /// Checks structure only: dimensions, finiteness, Hermitian Hamiltonians.
    /// Complete positivity and weight normalization are reported by
    /// [`validate_model`].
    pub fn build(self) -> Result<LindbladRateModel<T>> {
        if let Some(e) = self.error {
            return Err(e);
        }
        let model = self.model;
        if model.channels() == 0 {
            return Err(Error::InvalidModel(
                "model needs at least one channel".into(),
            ));
        }
        let d = model.dim();
        let m = model.basis.len();
        for (r, h) in model
            .hamiltonians
            .iter()
            .chain(std::iter::once(&model.system_hamiltonian))
            .enumerate()
        {
            if ensure_square(h)? != d {
                return Err(Error::Dimension(format!(
                    "Hamiltonian {r} is {}x{}, expected {d}x{d}",
                    h.nrows(),
                    h.ncols()
                )));
            }
            if !is_finite(h) {
                return Err(Error::NonFinite("Hamiltonian"));
            }
            let res = hermiticity_residual(h);
            let allowed = T::tol(1e-10) * h.norm().max(T::one());
            if res > allowed {
                return Err(Error::NotHermitian {
                    residual: res.to_f64_lossy(),
                    allowed: allowed.to_f64_lossy(),
                });
            }
        }
        for a in &model.rates {
            if a.nrows() != m || a.ncols() != m {
                return Err(Error::Dimension(format!(
                    "rate block is {}x{}, basis has {m} operators",
                    a.nrows(),
                    a.ncols()
                )));
            }
            if !is_finite(a) {
                return Err(Error::NonFinite("rate block"));
            }
        }
        if model.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("weights"));
        }
        Ok(model)
    }
}

/// Auxiliary matrices `ρ̃_R`, one per channel.
#[derive(Clone, Debug, PartialEq)]
pub struct StackedState<T: Real> {
    pub blocks: Vec<CMatrix<T>>,
}

impl<T: Real> StackedState<T> {
    pub fn channels(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.nrows())
    }

    /// `ρ_S = Σ_R ρ̃_R`.
    pub fn system_state(&self) -> CMatrix<T> {
        let d = self.dim();
        self.blocks
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, b| acc + b)
    }

    pub fn channel_traces(&self) -> Vec<T> {
        self.blocks.iter().map(|b| b.trace().re).collect()
    }

    /// Channel-major stacking: index `R·d² + vec-index`.
    pub fn to_vector(&self) -> CVector<T> {
        let d2 = self.dim() * self.dim();
        let mut v = CVector::zeros(d2 * self.channels());
        for (r, b) in self.blocks.iter().enumerate() {
            v.rows_mut(r * d2, d2)
                .copy_from(&vectorize(b).expect("square block").data);
        }
        v
    }

    pub fn from_vector(v: &CVector<T>, dim: usize) -> Result<Self> {
        let d2 = dim * dim;
        if d2 == 0 || !v.len().is_multiple_of(d2) {
            return Err(Error::Dimension(format!(
                "stacked vector of length {} does not split into {dim}x{dim} blocks",
                v.len()
            )));
        }
        let blocks = (0..v.len() / d2)
            .map(|r| CMatrix::from_column_slice(dim, dim, v.rows(r * d2, d2).as_slice()))
            .collect();
        Ok(Self { blocks })
    }
}

/// Checks that `rho` is a d×d density matrix: Hermitian, unit trace within
/// 1e−10, no eigenvalue below −1e−10.
pub fn validate_density_matrix<T: Real>(rho: &CMatrix<T>, dim: usize) -> Result<()> {
    if ensure_square(rho)? != dim {
        return Err(Error::InvalidState(format!(
            "expected {dim}x{dim}, got {}x{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let tr = rho.trace();
    if (tr.re - T::one()).abs() > T::tol(1e-10) || tr.im.abs() > T::tol(1e-10) {
        return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
    }
    let report = psd_check(rho, T::tol(1e-10)).map_err(|e| match e {
        Error::NotHermitian { .. } => Error::InvalidState("not Hermitian".into()),
        other => other,
    })?;
    if !report.is_psd {
        return Err(Error::InvalidState(format!(
            "negative eigenvalue {}",
            report.min_eig
        )));
    }
    Ok(())
}

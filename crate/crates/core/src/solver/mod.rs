//! Deterministic evolution of the stacked state and its spectral analysis.

mod rk;
mod spectral;

pub use spectral::{
    homogeneity_check, memory_kernel_at, reduced_resolvent, stationary_projector, stationary_state,
    HomogeneityReport, KernelSample, Sector, SectorReport, StationaryProjector, StationaryState,
};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigs, hermiticity_residual, CMatrix, ExpGenerator};
use crate::model::{assemble_generator, LindbladRateModel, StackedState};
use crate::scalar::{cr, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Method {
    /// `exp(t G)` applied to the initial stacked state at each grid point.
    #[default]
    Exact,
    /// Dormand–Prince 5(4) with adaptive steps between grid points.
    Adaptive,
}

#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions<T> {
    pub method: Method,
    pub rtol: T,
    pub atol: T,
    pub max_steps: usize,
}

impl<T: Real> Default for EvolveOptions<T> {
    fn default() -> Self {
        Self {
            method: Method::Exact,
            rtol: T::tol(1e-9),
            atol: T::tol(1e-12),
            max_steps: 1_000_000,
        }
    }
}

impl<T: Real> EvolveOptions<T> {
    pub fn adaptive() -> Self {
        Self {
            method: Method::Adaptive,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics<T> {
    /// `|Σ_R Tr ρ̃_R − 1|`.
    pub trace_residual: T,
    /// Largest `‖ρ̃_R − ρ̃_R†‖` over channels.
    pub hermiticity_residual: T,
    /// Smallest eigenvalue of the Hermitian part of `ρ_S`.
    pub min_eig: T,
}

#[derive(Clone, Debug)]
pub struct EvolutionResult<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<StackedState<T>>,
    pub system: Vec<CMatrix<T>>,
    pub diagnostics: Vec<Diagnostics<T>>,
}

impl<T: Real> EvolutionResult<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_trace_residual(&self) -> T {
        self.diagnostics
            .iter()
            .map(|d| d.trace_residual)
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn max_hermiticity_residual(&self) -> T {
        self.diagnostics
            .iter()
            .map(|d| d.hermiticity_residual)
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn min_eigenvalue(&self) -> T {
        self.diagnostics
            .iter()
            .map(|d| d.min_eig)
            .fold(T::max_value().unwrap(), |a, b| a.min(b))
    }
}

/// Rejects grids that do not start at 0 or are not strictly increasing.
pub fn check_grid<T: Real>(grid: &[T]) -> Result<()> {
    match grid.first() {
        None => return Ok(()),
        Some(&t0) if t0 != T::zero() => {
            return Err(Error::InvalidGrid(format!(
                "grid starts at {t0}, expected 0"
            )))
        }
        _ => {}
    }
    if let Some(w) = grid
        .windows(2)
        .find(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
    {
        return Err(Error::InvalidGrid(format!(
            "grid not strictly increasing at {} -> {}",
            w[0], w[1]
        )));
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidGrid("non-finite time".into()));
    }
    Ok(())
}

pub fn evolve<T: Real>(
    model: &LindbladRateModel<T>,
    rho0: &CMatrix<T>,
    grid: &[T],
    opts: &EvolveOptions<T>,
) -> Result<EvolutionResult<T>> {
    check_grid(grid)?;
    let initial = model.initial_stacked_state(rho0)?;
    let generator = assemble_generator(model)?;
    let d = model.dim();
    let x0 = initial.to_vector();

    let vectors = match opts.method {
        Method::Exact => {
            let exp = ExpGenerator::new(&generator.superop)?;
            grid.iter()
                .map(|&t| Ok(&exp.at(t)?.matrix * &x0))
                .collect::<Result<Vec<_>>>()?
        }
        Method::Adaptive => rk::integrate(&generator.superop.matrix, &x0, grid, opts)?,
    };

    let mut result = EvolutionResult {
        times: grid.to_vec(),
        states: Vec::with_capacity(grid.len()),
        system: Vec::with_capacity(grid.len()),
        diagnostics: Vec::with_capacity(grid.len()),
    };
    for v in vectors {
        let state = StackedState::from_vector(&v, d)?;
        let rho = state.system_state();
        result.diagnostics.push(diagnose(&state, &rho));
        result.system.push(rho);
        result.states.push(state);
    }
    Ok(result)
}

fn diagnose<T: Real>(state: &StackedState<T>, rho: &CMatrix<T>) -> Diagnostics<T> {
    let trace_residual = (rho.trace() - cr(T::one())).norm_sqr().sqrt();
    let hermiticity_residual = state
        .blocks
        .iter()
        .map(hermiticity_residual)
        .fold(T::zero(), |a, b| a.max(b));
    let sym = (rho + rho.adjoint()) * cr(T::lit(0.5));
    let min_eig = hermitian_eigs(&sym)
        .map(|e| e.values[0])
        .unwrap_or_else(|_| T::lit(f64::NAN));
    Diagnostics {
        trace_residual,
        hermiticity_residual,
        min_eig,
    }
}

/// `ρ_S(t)` for a grid time `t` (matched within 1e−12 relative).
pub fn system_state<T: Real>(result: &EvolutionResult<T>, t: T) -> Result<CMatrix<T>> {
    let slack = T::tol(1e-12) * t.abs().max(T::one());
    result
        .times
        .iter()
        .position(|&s| (s - t).abs() <= slack)
        .map(|k| result.system[k].clone())
        .ok_or_else(|| Error::OffGrid(t.to_f64_lossy()))
}

/// `n` points from 0 to `stop`, evenly spaced.
pub fn linear_grid<T: Real>(stop: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![T::zero()],
        _ => (0..n)
            .map(|k| stop * T::from_usize(k).unwrap() / T::from_usize(n - 1).unwrap())
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{identity, sigma_x, sigma_z, OperatorBasis};
    use crate::scalar::c;

    fn plus_x() -> CMatrix<f64> {
        (identity::<f64>() + sigma_x::<f64>()) * c(0.5, 0.)
    }

    #[test]
    fn zero_model_is_constant() {
        let model = LindbladRateModel::<f64>::builder(OperatorBasis::pauli(), 2)
            .build()
            .unwrap();
        let grid = linear_grid(5.0, 11);
        for opts in [EvolveOptions::default(), EvolveOptions::adaptive()] {
            let r = evolve(&model, &plus_x(), &grid, &opts).unwrap();
            for rho in &r.system {
                assert!((rho - plus_x()).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn single_channel_dephasing_decays_at_twice_the_rate() {
        let gamma = 0.3;
        let mut a = CMatrix::zeros(4, 4);
        a[(3, 3)] = c(gamma, 0.);
        let model = LindbladRateModel::builder(OperatorBasis::pauli(), 1)
            .diagonal(0, a)
            .weights(vec![1.0])
            .build()
            .unwrap();
        let grid = linear_grid(4.0, 9);
        let r = evolve(&model, &plus_x(), &grid, &EvolveOptions::default()).unwrap();
        for (t, rho) in grid.iter().zip(&r.system) {
            let expected = 0.5 * (-2.0 * gamma * t).exp();
            assert!((rho[(0, 1)].re - expected).abs() < 1e-14);
            assert!((rho[(0, 0)].re - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn grid_validation() {
        assert!(check_grid(&[0.0, 1.0, 2.0]).is_ok());
        assert!(matches!(
            check_grid(&[0.5, 1.0]),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            check_grid(&[0.0, 1.0, 1.0]),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn system_state_lookup() {
        let model = LindbladRateModel::<f64>::builder(OperatorBasis::pauli(), 1)
            .hamiltonian(0, sigma_z())
            .weights(vec![1.0])
            .build()
            .unwrap();
        let grid = linear_grid(1.0, 5);
        let r = evolve(&model, &plus_x(), &grid, &EvolveOptions::default()).unwrap();
        assert_eq!(system_state(&r, 0.0).unwrap(), plus_x());
        assert!(system_state(&r, 0.25).is_ok());
        assert!(matches!(system_state(&r, 0.3), Err(Error::OffGrid(_))));
    }
}

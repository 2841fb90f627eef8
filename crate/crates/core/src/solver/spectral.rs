//! Stationary projector, Laplace-domain reduced resolvent and memory kernel.
//!
//! Notation: `G` is the stacked generator, `E` the weighted embedding
//! `ρ ↦ (P_1 ρ, …, P_K ρ)` and `S` the channel sum `(X_R) ↦ Σ_R X_R`; the
//! reduced resolvent is `S (u − G)⁻¹ E`.

use nalgebra::{ComplexField, SVD};

use crate::error::{Error, Result};
use crate::linalg::{
    commutator_superop, devectorize, eigenvalues, null_space, solve_consistent, vectorize, CMatrix,
    Superoperator,
};
use crate::model::{assemble_generator, LindbladRateModel, StackedState};
use crate::scalar::{cr, Real, C};

use super::{evolve, EvolveOptions};

#[derive(Clone, Debug)]
pub struct StationaryProjector<T: Real> {
    /// Spectral projector onto the kernel of `G`.
    pub projector: Superoperator<T>,
    /// `S P∞ E`, the map `ρ₀ ↦ lim_{u→0} u S Ĝ(u) E ρ₀`.
    pub reduced: Superoperator<T>,
    pub zero_modes: usize,
    pub eigenvalues: Vec<C<T>>,
    /// Smallest nonzero `|Re λ|`, if any eigenvalue has a decaying part.
    pub slowest_rate: Option<T>,
    pub dim: usize,
    pub channels: usize,
}

fn embedding<T: Real>(model: &LindbladRateModel<T>) -> CMatrix<T> {
    let d2 = model.dim() * model.dim();
    let k = model.channels();
    let mut e = CMatrix::zeros(k * d2, d2);
    for (r, &p) in model.weights().iter().enumerate() {
        e.view_mut((r * d2, 0), (d2, d2)).fill_diagonal(cr(p));
    }
    e
}

fn channel_sum<T: Real>(k: usize, d2: usize) -> CMatrix<T> {
    let mut s = CMatrix::zeros(d2, k * d2);
    for r in 0..k {
        s.view_mut((0, r * d2), (d2, d2))
            .fill_diagonal(cr(T::one()));
    }
    s
}

struct Spectral<T: Real> {
    projector: CMatrix<T>,
    eigenvalues: Vec<C<T>>,
    zero_modes: usize,
    slowest_rate: Option<T>,
}

fn spectral_projector<T: Real>(g: &CMatrix<T>) -> Result<Spectral<T>> {
    let n = g.nrows();
    let scale = g.norm();
    let eigenvalues = eigenvalues(g)?;
    if scale == T::zero() {
        return Ok(Spectral {
            projector: CMatrix::identity(n, n),
            eigenvalues,
            zero_modes: n,
            slowest_rate: None,
        });
    }
    let cut = T::tol(1e-9) * scale;
    let zero_modes = eigenvalues.iter().filter(|z| z.modulus() < cut).count();
    let projector = if zero_modes == 0 {
        CMatrix::zeros(n, n)
    } else {
        let (right, r_worst) = null_space(g, zero_modes);
        let (left, l_worst) = null_space(&g.adjoint(), zero_modes);
        let allowed = T::tol(1e-8) * scale;
        if r_worst > allowed || l_worst > allowed {
            return Err(Error::DefectiveZeroSector);
        }
        let overlap = left.adjoint() * &right;
        let inv = overlap.try_inverse().ok_or(Error::DefectiveZeroSector)?;
        right * inv * left.adjoint()
    };

    let p2 = (&projector * &projector - &projector).norm();
    let gp = (g * &projector).norm();
    let pscale = projector.norm().max(T::one());
    if p2 > T::tol(1e-8) * pscale || gp > T::tol(1e-8) * pscale * scale.max(T::one()) {
        return Err(Error::DefectiveZeroSector);
    }
    let slowest_rate = eigenvalues
        .iter()
        .filter(|z| z.modulus() >= cut && z.re.abs() >= cut)
        .map(|z| z.re.abs())
        .reduce(|a, b| a.min(b));
    Ok(Spectral {
        projector,
        eigenvalues,
        zero_modes,
        slowest_rate,
    })
}

/// Refuses defective zero sectors (non-diagonalizable eigenvalue 0).
pub fn stationary_projector<T: Real>(
    model: &LindbladRateModel<T>,
) -> Result<StationaryProjector<T>> {
    let gen = assemble_generator(model)?;
    let spec = spectral_projector(&gen.superop.matrix)?;
    let d2 = model.dim() * model.dim();
    let reduced = channel_sum::<T>(model.channels(), d2) * &spec.projector * embedding(model);
    Ok(StationaryProjector {
        projector: Superoperator {
            matrix: spec.projector,
        },
        reduced: Superoperator { matrix: reduced },
        zero_modes: spec.zero_modes,
        eigenvalues: spec.eigenvalues,
        slowest_rate: spec.slowest_rate,
        dim: model.dim(),
        channels: model.channels(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sector {
    PopulationToPopulation,
    CoherenceToPopulation,
    PopulationToCoherence,
    CoherenceToCoherence,
}

impl Sector {
    pub const ALL: [Sector; 4] = [
        Sector::PopulationToPopulation,
        Sector::CoherenceToPopulation,
        Sector::PopulationToCoherence,
        Sector::CoherenceToCoherence,
    ];

    fn of(out_pop: bool, in_pop: bool) -> Self {
        match (out_pop, in_pop) {
            (true, true) => Sector::PopulationToPopulation,
            (true, false) => Sector::CoherenceToPopulation,
            (false, true) => Sector::PopulationToCoherence,
            (false, false) => Sector::CoherenceToCoherence,
        }
    }
}

impl std::fmt::Display for Sector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sector::PopulationToPopulation => "population->population",
            Sector::CoherenceToPopulation => "coherence->population",
            Sector::PopulationToCoherence => "population->coherence",
            Sector::CoherenceToCoherence => "coherence->coherence",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SectorReport<T: Real> {
    pub sector: Sector,
    pub norm: T,
    /// Largest entry `(row, col, value)` in vectorized indices.
    pub largest: Option<(usize, usize, C<T>)>,
    pub vanishes: bool,
}

#[derive(Clone, Debug)]
pub struct HomogeneityReport<T: Real> {
    pub holds: bool,
    pub residual_norm: T,
    pub coherent_residual_norm: T,
    pub sectors: Vec<SectorReport<T>>,
}

impl<T: Real> std::fmt::Display for HomogeneityReport<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "homogeneity condition: {} (limit map norm {:.6e})",
            if self.holds { "holds" } else { "fails" },
            self.residual_norm.to_f64_lossy()
        )?;
        for s in &self.sectors {
            write!(f, "  {}: norm {:.6e}", s.sector, s.norm.to_f64_lossy())?;
            if let Some((i, j, v)) = s.largest {
                write!(
                    f,
                    ", largest [{i},{j}] = {:.6e}{:+.6e}i",
                    v.re.to_f64_lossy(),
                    v.im.to_f64_lossy()
                )?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn is_population(k: usize, d: usize) -> bool {
    k % d == k / d
}

/// Whether `lim_{u→0} u S Ĝ(u) E` vanishes within `tol`, split by
/// population/coherence sector of input and output.
pub fn homogeneity_check<T: Real>(
    model: &LindbladRateModel<T>,
    tol: T,
) -> Result<HomogeneityReport<T>> {
    let proj = stationary_projector(model)?;
    Ok(sector_report(&proj.reduced.matrix, model.dim(), tol))
}

fn sector_report<T: Real>(map: &CMatrix<T>, d: usize, tol: T) -> HomogeneityReport<T> {
    let mut sectors: Vec<SectorReport<T>> = Sector::ALL
        .iter()
        .map(|&sector| SectorReport {
            sector,
            norm: T::zero(),
            largest: None,
            vanishes: true,
        })
        .collect();
    for j in 0..map.ncols() {
        for i in 0..map.nrows() {
            let v = map[(i, j)];
            let sector = Sector::of(is_population(i, d), is_population(j, d));
            let s = sectors.iter_mut().find(|s| s.sector == sector).unwrap();
            s.norm += v.norm_sqr();
            if s.largest.is_none_or(|(_, _, w)| v.modulus() > w.modulus()) {
                s.largest = Some((i, j, v));
            }
        }
    }
    for s in &mut sectors {
        s.norm = s.norm.sqrt();
        s.vanishes = s.norm <= tol;
    }
    let residual_norm = map.norm();
    let coherent_residual_norm = sectors
        .iter()
        .find(|s| s.sector == Sector::CoherenceToCoherence)
        .map(|s| s.norm)
        .unwrap();
    HomogeneityReport {
        holds: residual_norm <= tol,
        residual_norm,
        coherent_residual_norm,
        sectors,
    }
}

/// `(u − G)⁻¹` with a singular-value test in place of a bare LU.
fn shifted_inverse<T: Real>(g: &CMatrix<T>, u: C<T>) -> Result<CMatrix<T>> {
    let n = g.nrows();
    let a = CMatrix::<T>::identity(n, n) * u - g;
    let singular = Error::Singular {
        re: u.re.to_f64_lossy(),
        im: u.im.to_f64_lossy(),
    };
    let svd = SVD::new(a.clone(), false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smax == T::zero() || smin <= T::tol(1e-12) * smax {
        return Err(singular);
    }
    a.try_inverse().ok_or(singular)
}

/// `S (u − G)⁻¹ E` as a d²×d² superoperator.
pub fn reduced_resolvent<T: Real>(
    model: &LindbladRateModel<T>,
    u: C<T>,
) -> Result<Superoperator<T>> {
    let gen = assemble_generator(model)?;
    let inv = shifted_inverse(&gen.superop.matrix, u)?;
    let d2 = model.dim() * model.dim();
    Ok(Superoperator {
        matrix: channel_sum::<T>(model.channels(), d2) * inv * embedding(model),
    })
}

#[derive(Clone, Debug)]
pub struct KernelSample<T: Real> {
    pub u: C<T>,
    pub kernel: Superoperator<T>,
    /// The stationary part `P∞/u` was subtracted from the propagator.
    pub shifted: bool,
    /// Numerical rank of the reduced propagator used in the solve.
    pub rank: usize,
    pub condition: T,
}

/// Memory kernel `𝕃(u)` solving `S Ĝ(u) E · 𝕃(u) = S Ĝ(u) M̂ E`, with `M̂`
/// the stacked generator minus `−i[H_S,·]` on every channel.
///
/// The propagator is replaced by `Ĝ(u) − P∞/u` whenever the stationary
/// limit map does not vanish on traceless inputs.  Directions the reduced
/// propagator annihilates are resolved by the minimum-norm solution; an
/// inconsistent system is reported as singular.
pub fn memory_kernel_at<T: Real>(model: &LindbladRateModel<T>, u: C<T>) -> Result<KernelSample<T>> {
    let gen = assemble_generator(model)?;
    let g = &gen.superop.matrix;
    let d = model.dim();
    let d2 = d * d;
    let k = model.channels();
    let singular = Error::Singular {
        re: u.re.to_f64_lossy(),
        im: u.im.to_f64_lossy(),
    };

    let mut resolvent = shifted_inverse(g, u)?;
    let proj = stationary_projector(model)?;
    let shifted = acts_on_traceless(&proj.reduced.matrix, d);
    if shifted {
        if u.modulus() == T::zero() {
            return Err(singular);
        }
        resolvent -= &proj.projector.matrix / u;
    }

    let lh = commutator_superop(model.system_hamiltonian())?.matrix;
    let mut m_hat = g.clone();
    for r in 0..k {
        let mut blk = m_hat.view_mut((r * d2, r * d2), (d2, d2));
        blk -= &lh;
    }

    let s = channel_sum::<T>(k, d2);
    let e = embedding(model);
    let left = &s * &resolvent;
    let reduced = &left * &e;
    let rhs = left * m_hat * e;
    let (kernel, rank, condition) =
        solve_consistent(&reduced, &rhs, T::tol(1e-10)).ok_or(singular)?;
    Ok(KernelSample {
        u,
        kernel: Superoperator { matrix: kernel },
        shifted,
        rank,
        condition,
    })
}

fn acts_on_traceless<T: Real>(map: &CMatrix<T>, d: usize) -> bool {
    // Basis of traceless operators: off-diagonal units and |0⟩⟨0| − |i⟩⟨i|.
    let scale = map.norm().max(T::one());
    let tol = T::tol(1e-9) * scale;
    let d2 = d * d;
    for col in 0..d2 {
        if !is_population(col, d) && map.column(col).norm() > tol {
            return true;
        }
    }
    for i in 1..d {
        let diff = map.column(0) - map.column(i + d * i);
        if diff.norm() > tol {
            return true;
        }
    }
    false
}

#[derive(Clone, Debug)]
pub struct StationaryState<T: Real> {
    pub rho: CMatrix<T>,
    /// `P∞` applied to the initial stacked state.
    pub channels: StackedState<T>,
    /// Time used for the long-time cross-check, when the spectrum has a
    /// decaying part.
    pub check_time: Option<T>,
    /// `‖ρ(check_time) − ρ∞‖` from direct evolution.
    pub check_residual: Option<T>,
}

pub fn stationary_state<T: Real>(
    model: &LindbladRateModel<T>,
    rho0: &CMatrix<T>,
) -> Result<StationaryState<T>> {
    let proj = stationary_projector(model)?;
    let x0 = model.initial_stacked_state(rho0)?.to_vector();
    let xs = &proj.projector.matrix * x0;
    let channels = StackedState::from_vector(&xs, model.dim())?;
    let rho = devectorize(&crate::linalg::VectorizedState {
        data: &proj.reduced.matrix * vectorize(rho0)?.data,
    })?;

    let (check_time, check_residual) = match proj.slowest_rate {
        Some(rate) => {
            let t = T::lit(20.0) / rate;
            let run = evolve(model, rho0, &[T::zero(), t], &EvolveOptions::default())?;
            (Some(t), Some((&run.system[1] - &rho).norm()))
        }
        None => (None, None),
    };
    Ok(StationaryState {
        rho,
        channels,
        check_time,
        check_residual,
    })
}

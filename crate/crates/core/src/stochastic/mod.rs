//! Monte Carlo unraveling of random-walk (Walk-class) rate models.
//!
//! A trajectory sits in one channel `R`, evolves its normalized conditional
//! state with `exp(t L̄_R)`, leaves after an exponential sojourn with rate
//! `Γ_R = Σ_{R'≠R} γ_{R'R}`, picks the next channel with probability
//! `γ_{R'R}/Γ_R` and applies the jump map `E_R` of the channel it leaves.

mod ensemble;

pub use ensemble::{channel_occupation, run_ensemble, EnsembleAccumulator, CHUNK};

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    anticommutator_superop, commutator_superop, ensure_square, is_finite, kraus_superop,
    sandwich_superop, vectorize, CMatrix, CVector, ExpGenerator, Superoperator,
};
use crate::model::{
    assemble_generator, validate_density_matrix, LindbladRateModel, OperatorBasis, StackedGenerator,
};
use crate::scalar::{cr, Real};

/// Classical hop rates `γ_{to,from}` between channels.
#[derive(Clone, Debug, PartialEq)]
pub struct HopRates<T: Real> {
    rates: DMatrix<T>,
}

impl<T: Real> HopRates<T> {
    pub fn zeros(channels: usize) -> Self {
        Self {
            rates: DMatrix::zeros(channels, channels),
        }
    }

    /// `rows[to][from]`; the diagonal must be zero.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::Dimension("hop rate matrix must be square".into()));
        }
        let mut out = Self::zeros(k);
        for (to, row) in rows.iter().enumerate() {
            for (from, &g) in row.iter().enumerate() {
                out = out.with(to, from, g)?;
            }
        }
        Ok(out)
    }

    pub fn with(mut self, to: usize, from: usize, rate: T) -> Result<Self> {
        let k = self.channels();
        if to >= k || from >= k {
            return Err(Error::Dimension(format!("hop {from}->{to} out of range")));
        }
        if !rate.is_finite() || rate < T::zero() {
            return Err(Error::InvalidParams(format!(
                "hop rate {from}->{to} must be finite and nonnegative, got {rate}"
            )));
        }
        if to == from && rate != T::zero() {
            return Err(Error::InvalidParams(format!(
                "self-hop rate on channel {to}"
            )));
        }
        self.rates[(to, from)] = rate;
        Ok(self)
    }

    pub fn channels(&self) -> usize {
        self.rates.nrows()
    }

    pub fn rate(&self, to: usize, from: usize) -> T {
        self.rates[(to, from)]
    }

    /// `Γ_R = Σ_{R'≠R} γ_{R'R}`.
    pub fn total_escape(&self, from: usize) -> T {
        self.rates
            .column(from)
            .iter()
            .fold(T::zero(), |a, &b| a + b)
    }
}

/// Lindblad dissipator `Σ_k γ_k (L_k ρ L_k† − ½{L_k†L_k, ρ})`.
#[derive(Clone, Debug, Default)]
pub struct Dissipator<T: Real> {
    pub terms: Vec<(T, CMatrix<T>)>,
}

impl<T: Real> Dissipator<T> {
    pub fn none() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn term(mut self, rate: T, op: CMatrix<T>) -> Self {
        self.terms.push((rate, op));
        self
    }
}

/// Walk-class model: common Hamiltonian, per-channel dissipators, hop
/// rates and per-channel jump maps given by Kraus operators.
#[derive(Clone, Debug)]
pub struct StochasticModel<T: Real> {
    dim: usize,
    hamiltonian: CMatrix<T>,
    dissipators: Vec<Dissipator<T>>,
    rates: HopRates<T>,
    jumps: Vec<Vec<CMatrix<T>>>,
    weights: Vec<T>,
}

impl<T: Real> StochasticModel<T> {
    /// Checks rates, trace preservation of every jump map and of every
    /// self-generator (1e−10) and weight normalization.
    pub fn new(
        hamiltonian: CMatrix<T>,
        dissipators: Vec<Dissipator<T>>,
        rates: HopRates<T>,
        jumps: Vec<Vec<CMatrix<T>>>,
        weights: Vec<T>,
    ) -> Result<Self> {
        let dim = ensure_square(&hamiltonian)?;
        let k = weights.len();
        if k == 0 {
            return Err(Error::InvalidModel(
                "model needs at least one channel".into(),
            ));
        }
        if dissipators.len() != k || jumps.len() != k || rates.channels() != k {
            return Err(Error::Dimension(format!(
                "{k} weights, {} dissipators, {} jump maps, {} rate channels",
                dissipators.len(),
                jumps.len(),
                rates.channels()
            )));
        }
        let s = Self {
            dim,
            hamiltonian,
            dissipators,
            rates,
            jumps,
            weights,
        };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<()> {
        let d = self.dim;
        let tol = T::tol(1e-10);
        let id = CMatrix::<T>::identity(d, d);
        for (r, kraus) in self.jumps.iter().enumerate() {
            if kraus.is_empty() {
                return Err(Error::InvalidModel(format!(
                    "channel {r} has an empty jump map"
                )));
            }
            let mut acc = CMatrix::zeros(d, d);
            for k in kraus {
                if ensure_square(k)? != d || !is_finite(k) {
                    return Err(Error::Dimension(format!(
                        "bad Kraus operator on channel {r}"
                    )));
                }
                acc += k.adjoint() * k;
            }
            if (acc - &id).norm() > tol {
                return Err(Error::InvalidModel(format!(
                    "jump map of channel {r} is not trace preserving"
                )));
            }
        }
        for (r, diss) in self.dissipators.iter().enumerate() {
            for (g, op) in &diss.terms {
                if *g < T::zero() || !g.is_finite() {
                    return Err(Error::InvalidParams(format!(
                        "dissipator rate {g} on channel {r} must be nonnegative"
                    )));
                }
                if ensure_square(op)? != d {
                    return Err(Error::Dimension(format!(
                        "bad jump operator on channel {r}"
                    )));
                }
            }
            let l = self.self_generator(r)?;
            let trace_row = vectorize(&id)?.data.adjoint();
            if (trace_row * &l.matrix).norm() > tol * l.norm().max(T::one()) {
                return Err(Error::InvalidModel(format!(
                    "self-generator of channel {r} is not trace preserving"
                )));
            }
        }
        if self
            .weights
            .iter()
            .any(|&w| w < T::zero() || !w.is_finite())
        {
            return Err(Error::InvalidParams("weights must be nonnegative".into()));
        }
        let sum = self.weights.iter().fold(T::zero(), |a, &b| a + b);
        if (sum - T::one()).abs() > T::tol(1e-10) {
            return Err(Error::InvalidParams(format!("weights sum to {sum}, not 1")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn channels(&self) -> usize {
        self.weights.len()
    }

    pub fn hamiltonian(&self) -> &CMatrix<T> {
        &self.hamiltonian
    }

    pub fn rates(&self) -> &HopRates<T> {
        &self.rates
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn jump_map(&self, r: usize) -> &[CMatrix<T>] {
        &self.jumps[r]
    }

    pub fn dissipator(&self, r: usize) -> &Dissipator<T> {
        &self.dissipators[r]
    }

    /// `L̄_R = −i[H,·] + L_R`.
    pub fn self_generator(&self, r: usize) -> Result<Superoperator<T>> {
        let mut acc = commutator_superop(&self.hamiltonian)?.matrix;
        for (g, op) in &self.dissipators[r].terms {
            let sandwich = sandwich_superop(op, &op.adjoint())?.matrix;
            let anti = anticommutator_superop(&(op.adjoint() * op))?.matrix;
            acc += (sandwich - anti * cr(T::lit(0.5))) * cr(*g);
        }
        Ok(Superoperator { matrix: acc })
    }

    pub fn jump_superop(&self, r: usize) -> Result<Superoperator<T>> {
        kraus_superop(&self.jumps[r])
    }
}

/// Generator of the random-walk equation assembled directly:
/// block `(R, R) = L̄_R − Γ_R`, block `(R', R) = γ_{R'R} E_R`.
pub fn walk_generator<T: Real>(s: &StochasticModel<T>) -> Result<StackedGenerator<T>> {
    let k = s.channels();
    let d2 = s.dim * s.dim;
    let mut g = CMatrix::zeros(k * d2, k * d2);
    for r in 0..k {
        let mut diag = s.self_generator(r)?.matrix;
        diag -= CMatrix::identity(d2, d2) * cr(s.rates.total_escape(r));
        g.view_mut((r * d2, r * d2), (d2, d2)).copy_from(&diag);
        let e = s.jump_superop(r)?.matrix;
        for to in (0..k).filter(|&to| to != r) {
            let rate = s.rates.rate(to, r);
            if rate != T::zero() {
                g.view_mut((to * d2, r * d2), (d2, d2))
                    .copy_from(&(&e * cr(rate)));
            }
        }
    }
    Ok(StackedGenerator {
        superop: Superoperator { matrix: g },
        channels: k,
        dim: s.dim,
    })
}

/// Rate-form model with the same generator as the walk.
///
/// Diagonal blocks carry the dissipator terms, coupling block `(R', R)` is
/// `γ_{R'R} Σ_k c_k c_k†` with `c_k` the basis expansion of the Kraus
/// operators of `E_R`; since `E_R` is trace preserving the induced escape
/// operator is `D = ½γ_{R'R}·I`.
pub fn convert_walk_to_rate_model<T: Real>(
    s: &StochasticModel<T>,
    basis: OperatorBasis<T>,
) -> Result<LindbladRateModel<T>> {
    if basis.dim() != s.dim {
        return Err(Error::Dimension(format!(
            "basis dimension {} differs from model dimension {}",
            basis.dim(),
            s.dim
        )));
    }
    let k = s.channels();
    let tol = T::tol(1e-10);
    let m = basis.len();
    let mut diagonals = Vec::with_capacity(k);
    for r in 0..k {
        let mut a = CMatrix::zeros(m, m);
        for (g, op) in &s.dissipators[r].terms {
            a += basis.rate_block(std::slice::from_ref(op), *g, tol)?;
        }
        diagonals.push(a);
    }
    let mut couplings = Vec::new();
    for from in 0..k {
        let unit = basis.rate_block(&s.jumps[from], T::one(), tol)?;
        for to in (0..k).filter(|&to| to != from) {
            let rate = s.rates.rate(to, from);
            if rate != T::zero() {
                couplings.push((to, from, &unit * cr(rate)));
            }
        }
    }
    let mut builder = LindbladRateModel::builder(basis, k)
        .common_hamiltonian(s.hamiltonian.clone())
        .weights(s.weights.clone());
    for (r, a) in diagonals.into_iter().enumerate() {
        builder = builder.diagonal(r, a);
    }
    for (to, from, a) in couplings {
        builder = builder.coupling(to, from, a);
    }
    builder.build()
}

/// Generator of the rate-form model obtained by conversion; convenience for
/// comparisons against [`walk_generator`].
pub fn converted_generator<T: Real>(
    s: &StochasticModel<T>,
    basis: OperatorBasis<T>,
) -> Result<StackedGenerator<T>> {
    assemble_generator(&convert_walk_to_rate_model(s, basis)?)
}

/// Channel drawn by cumulative inversion of the weights.
pub fn init_channel<T: Real, G: Rng + ?Sized>(weights: &[T], rng: &mut G) -> usize {
    let r: f64 = rng.random();
    pick(weights.iter().map(|w| w.to_f64_lossy()), r)
}

fn pick(weights: impl Iterator<Item = f64> + Clone, r: f64) -> usize {
    let total: f64 = weights.clone().sum();
    let target = r * total;
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last_positive = i;
            cum += w;
            if target < cum {
                return i;
            }
        }
    }
    last_positive
}

/// Exponential sojourn in channel `from`; `None` when `Γ_R = 0` (the
/// trajectory never leaves).
pub fn sample_sojourn<T: Real, G: Rng + ?Sized>(
    from: usize,
    rates: &HopRates<T>,
    rng: &mut G,
) -> Option<T> {
    let gamma = rates.total_escape(from).to_f64_lossy();
    if gamma <= 0.0 {
        return None;
    }
    // 1 − U lies in (0, 1], so the logarithm is finite.
    let u: f64 = rng.random();
    Some(T::lit(-(1.0 - u).ln() / gamma))
}

/// Next channel with probability `γ_{R'R}/Γ_R`; never `from` itself.
pub fn select_next_channel<T: Real, G: Rng + ?Sized>(
    from: usize,
    rates: &HopRates<T>,
    rng: &mut G,
) -> usize {
    let k = rates.channels();
    let r: f64 = rng.random();
    pick(
        (0..k).map(move |to| {
            if to == from {
                0.0
            } else {
                rates.rate(to, from).to_f64_lossy()
            }
        }),
        r,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryState<T: Real> {
    pub channel: usize,
    /// Normalized conditional state.
    pub rho: CMatrix<T>,
    pub time: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpEvent<T> {
    pub time: T,
    pub from: usize,
    pub to: usize,
}

/// Per-channel propagators shared by all trajectories of a model.
pub(crate) struct Prepared<T: Real> {
    pub dim: usize,
    pub flows: Vec<ExpGenerator<T>>,
    pub jumps: Vec<CMatrix<T>>,
}

impl<T: Real> Prepared<T> {
    pub fn new(s: &StochasticModel<T>) -> Result<Self> {
        let k = s.channels();
        let flows = (0..k)
            .map(|r| ExpGenerator::new(&s.self_generator(r)?))
            .collect::<Result<Vec<_>>>()?;
        let jumps = (0..k)
            .map(|r| Ok(s.jump_superop(r)?.matrix))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim: s.dim,
            flows,
            jumps,
        })
    }

    pub fn flow(&self, r: usize, dt: T, x: &CVector<T>) -> Result<CVector<T>> {
        if dt == T::zero() {
            return Ok(x.clone());
        }
        Ok(&self.flows[r].at(dt)?.matrix * x)
    }

    /// Applies `E_R` and renormalizes the trace.
    pub fn jump(&self, r: usize, x: &CVector<T>) -> Result<CVector<T>> {
        let y = &self.jumps[r] * x;
        normalize(y, self.dim)
    }
}

pub(crate) fn normalize<T: Real>(x: CVector<T>, d: usize) -> Result<CVector<T>> {
    let tr = (0..d).fold(cr(T::zero()), |acc, i| acc + x[i + d * i]);
    if !tr.re.is_finite()
        || tr.re <= T::zero()
        || x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::NonFinite("conditional state"));
    }
    Ok(x / cr(tr.re))
}

/// Advances a trajectory to its next jump or to `horizon`, whichever comes
/// first.  At a jump the source channel's map is applied and the channel
/// switches.
pub fn step_trajectory<T: Real, G: Rng + ?Sized>(
    state: &TrajectoryState<T>,
    s: &StochasticModel<T>,
    rng: &mut G,
    horizon: T,
) -> Result<(TrajectoryState<T>, Option<JumpEvent<T>>)> {
    validate_density_matrix(&state.rho, s.dim)?;
    let prepared = Prepared::new(s)?;
    let x = vectorize(&state.rho)?.data;
    let r = state.channel;
    let remaining = (horizon - state.time).max(T::zero());
    let sojourn = sample_sojourn(r, &s.rates, rng);
    match sojourn {
        Some(dt) if dt < remaining => {
            let moved = normalize(prepared.flow(r, dt, &x)?, s.dim)?;
            let jumped = prepared.jump(r, &moved)?;
            let to = select_next_channel(r, &s.rates, rng);
            let time = state.time + dt;
            Ok((
                TrajectoryState {
                    channel: to,
                    rho: CMatrix::from_column_slice(s.dim, s.dim, jumped.as_slice()),
                    time,
                },
                Some(JumpEvent { time, from: r, to }),
            ))
        }
        _ => {
            let moved = normalize(prepared.flow(r, remaining, &x)?, s.dim)?;
            Ok((
                TrajectoryState {
                    channel: r,
                    rho: CMatrix::from_column_slice(s.dim, s.dim, moved.as_slice()),
                    time: state.time + remaining,
                },
                None,
            ))
        }
    }
}

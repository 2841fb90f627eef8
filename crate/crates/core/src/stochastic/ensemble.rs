use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{vectorize, CMatrix, CVector};
use crate::model::validate_density_matrix;
use crate::scalar::{Real, C};
use crate::solver::check_grid;

use super::{
    init_channel, normalize, sample_sojourn, select_next_channel, Prepared, StochasticModel,
};

/// Trajectories per work unit.  Partial sums are formed per chunk and merged
/// in chunk order, which fixes the floating-point summation order
/// independently of the number of worker threads.
pub const CHUNK: usize = 256;

/// Sums and sums of squares of the sampled conditional states.
///
/// Squares are kept per component: the real part of a `sq` entry holds
/// `Σ (Re x)²`, the imaginary part `Σ (Im x)²`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleAccumulator<T: Real> {
    times: Vec<T>,
    channels: usize,
    dim: usize,
    count: usize,
    channel_sum: Vec<CVector<T>>,
    channel_sq: Vec<CVector<T>>,
    system_sum: Vec<CVector<T>>,
    system_sq: Vec<CVector<T>>,
    occupancy: Vec<u64>,
}

fn squares<T: Real>(x: &CVector<T>) -> CVector<T> {
    x.map(|z| C::new(z.re * z.re, z.im * z.im))
}

impl<T: Real> EnsembleAccumulator<T> {
    fn empty(times: &[T], channels: usize, dim: usize) -> Self {
        let d2 = dim * dim;
        let n = times.len();
        Self {
            times: times.to_vec(),
            channels,
            dim,
            count: 0,
            channel_sum: vec![CVector::zeros(d2); n * channels],
            channel_sq: vec![CVector::zeros(d2); n * channels],
            system_sum: vec![CVector::zeros(d2); n],
            system_sq: vec![CVector::zeros(d2); n],
            occupancy: vec![0; n * channels],
        }
    }

    fn record(&mut self, k: usize, channel: usize, x: &CVector<T>) {
        let slot = k * self.channels + channel;
        let sq = squares(x);
        self.channel_sum[slot] += x;
        self.channel_sq[slot] += &sq;
        self.system_sum[k] += x;
        self.system_sq[k] += sq;
        self.occupancy[slot] += 1;
    }

    fn merge(&mut self, other: &Self) {
        self.count += other.count;
        for (a, b) in self.channel_sum.iter_mut().zip(&other.channel_sum) {
            *a += b;
        }
        for (a, b) in self.channel_sq.iter_mut().zip(&other.channel_sq) {
            *a += b;
        }
        for (a, b) in self.system_sum.iter_mut().zip(&other.system_sum) {
            *a += b;
        }
        for (a, b) in self.system_sq.iter_mut().zip(&other.system_sq) {
            *a += b;
        }
        for (a, b) in self.occupancy.iter_mut().zip(&other.occupancy) {
            *a += b;
        }
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn n(&self) -> T {
        T::from_usize(self.count).unwrap()
    }

    fn to_matrix(&self, v: CVector<T>) -> CMatrix<T> {
        CMatrix::from_column_slice(self.dim, self.dim, v.as_slice())
    }

    fn mean(&self, sum: &CVector<T>) -> CVector<T> {
        sum.map(|z| z.unscale(self.n()))
    }

    fn se(&self, sum: &CVector<T>, sq: &CVector<T>) -> CVector<T> {
        if self.count < 2 {
            return sum.map(|_| C::new(T::lit(f64::INFINITY), T::lit(f64::INFINITY)));
        }
        let n = self.n();
        let part = |s: T, q: T| {
            let mean = s / n;
            let var = ((q - n * mean * mean) / (n - T::one())).max(T::zero());
            (var / n).sqrt()
        };
        sum.zip_map(sq, |s, q| C::new(part(s.re, q.re), part(s.im, q.im)))
    }

    /// Estimate of `ρ_S(t_k)`.
    pub fn mean_system(&self, k: usize) -> CMatrix<T> {
        self.to_matrix(self.mean(&self.system_sum[k]))
    }

    /// Standard errors of `ρ_S(t_k)`: real part for `Re`, imaginary part for
    /// `Im` of every entry.
    pub fn se_system(&self, k: usize) -> CMatrix<T> {
        self.to_matrix(self.se(&self.system_sum[k], &self.system_sq[k]))
    }

    /// Estimate of `ρ̃_R(t_k) = E[ρ(t_k) 1{channel = R}]`.
    pub fn mean_channel(&self, k: usize, channel: usize) -> CMatrix<T> {
        let slot = k * self.channels + channel;
        self.to_matrix(self.mean(&self.channel_sum[slot]))
    }

    pub fn se_channel(&self, k: usize, channel: usize) -> CMatrix<T> {
        let slot = k * self.channels + channel;
        self.to_matrix(self.se(&self.channel_sum[slot], &self.channel_sq[slot]))
    }

    /// Fraction of trajectories in `channel` at `t_k`.
    pub fn occupancy(&self, k: usize, channel: usize) -> T {
        T::from_u64(self.occupancy[k * self.channels + channel]).unwrap() / self.n()
    }

    /// Binomial standard error of [`Self::occupancy`].
    pub fn occupancy_se(&self, k: usize, channel: usize) -> T {
        let p = self.occupancy(k, channel);
        (p * (T::one() - p) / self.n()).sqrt()
    }
}

/// Per-time channel occupation probabilities `Tr ρ̃_R(t_k)`, indexed
/// `[k][R]`.
pub fn channel_occupation<T: Real>(acc: &EnsembleAccumulator<T>) -> Vec<Vec<T>> {
    (0..acc.times.len())
        .map(|k| {
            (0..acc.channels)
                .map(|r| acc.mean_channel(k, r).trace().re)
                .collect()
        })
        .collect()
}

struct Sampler<'a, T: Real> {
    model: &'a StochasticModel<T>,
    prepared: Prepared<T>,
    grid: &'a [T],
    /// `exp((t_k − t_{k−1}) L̄_R)`, indexed `[R][k]`; entry 0 unused.
    steps: Vec<Vec<CMatrix<T>>>,
    x0: CVector<T>,
    seed: u64,
}

impl<T: Real> Sampler<'_, T> {
    fn advance(
        &self,
        r: usize,
        k: usize,
        from_grid: bool,
        t_last: T,
        x: &CVector<T>,
    ) -> Result<CVector<T>> {
        if self.prepared.flows[r].is_zero() {
            return Ok(x.clone());
        }
        let y = if from_grid {
            &self.steps[r][k] * x
        } else {
            self.prepared.flow(r, self.grid[k] - t_last, x)?
        };
        normalize(y, self.prepared.dim)
    }

    fn trajectory(&self, index: usize, acc: &mut EnsembleAccumulator<T>) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        let rates = self.model.rates();
        let n = self.grid.len();

        let mut channel = init_channel(self.model.weights(), &mut rng);
        let mut x = self.x0.clone();
        let mut t = T::zero();
        // Whether `x`/`t` sit on grid point `k − 1` rather than an event.
        let mut on_grid = false;
        let mut k = 0;
        loop {
            let jump_at = sample_sojourn(channel, rates, &mut rng).map(|dt| t + dt);
            while k < n && jump_at.is_none_or(|tj| self.grid[k] < tj) {
                x = self.advance(channel, k, on_grid && k > 0, t, &x)?;
                t = self.grid[k];
                on_grid = true;
                acc.record(k, channel, &x);
                k += 1;
            }
            let Some(tj) = jump_at.filter(|_| k < n) else {
                break;
            };
            let moved = if self.prepared.flows[channel].is_zero() {
                x
            } else {
                normalize(self.prepared.flow(channel, tj - t, &x)?, self.prepared.dim)?
            };
            x = self.prepared.jump(channel, &moved)?;
            t = tj;
            on_grid = false;
            channel = select_next_channel(channel, rates, &mut rng);
        }
        acc.count += 1;
        Ok(())
    }
}

/// Runs `n` trajectories from `ρ₀` and accumulates them on `grid`.
///
/// Trajectory `i` draws from the ChaCha8 stream `i` of `master_seed`, so the
/// result depends only on `(master_seed, n)` and not on scheduling.
pub fn run_ensemble<T: Real>(
    s: &StochasticModel<T>,
    rho0: &CMatrix<T>,
    grid: &[T],
    n: usize,
    master_seed: u64,
) -> Result<EnsembleAccumulator<T>> {
    if n == 0 {
        return Err(Error::InvalidParams(
            "ensemble needs at least one trajectory".into(),
        ));
    }
    check_grid(grid)?;
    validate_density_matrix(rho0, s.dim())?;
    let prepared = Prepared::new(s)?;
    let steps = prepared
        .flows
        .iter()
        .map(|flow| {
            let mut out = Vec::with_capacity(grid.len());
            for k in 0..grid.len() {
                let dt = if k == 0 {
                    T::zero()
                } else {
                    grid[k] - grid[k - 1]
                };
                out.push(flow.at(dt)?.matrix);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let sampler = Sampler {
        model: s,
        prepared,
        grid,
        steps,
        x0: vectorize(rho0)?.data,
        seed: master_seed,
    };

    let chunks = n.div_ceil(CHUNK);
    let partial = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = EnsembleAccumulator::empty(grid, s.channels(), s.dim());
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                sampler.trajectory(i, &mut acc)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut total = EnsembleAccumulator::empty(grid, s.channels(), s.dim());
    for acc in &partial {
        total.merge(acc);
    }
    Ok(total)
}

#![allow(dead_code)]

use lindblad_rate::linalg::CMatrix;
use lindblad_rate::model::{LindbladRateModel, OperatorBasis};
use lindblad_rate::scalar::{c, C};
use lindblad_rate::stochastic::{Dissipator, HopRates, StochasticModel};
use nalgebra::{DVector, SymmetricEigen};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type M = CMatrix<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box–Muller; plenty for test fixtures.
    let u: f64 = rng.random::<f64>().max(1e-300);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> M {
    M::from_fn(rows, cols, |_, _| c(gaussian(rng), gaussian(rng)))
}

pub fn random_hermitian(d: usize, rng: &mut impl Rng) -> M {
    let a = random_matrix(d, d, rng);
    (&a + a.adjoint()) * c(0.5, 0.)
}

/// `A A† / n`, full rank with probability one.
pub fn random_psd(n: usize, scale: f64, rng: &mut impl Rng) -> M {
    let a = random_matrix(n, n, rng);
    &a * a.adjoint() * c(scale / n as f64, 0.)
}

pub fn random_density(d: usize, rng: &mut impl Rng) -> M {
    let p = random_psd(d, 1.0, rng);
    let tr = p.trace();
    p / tr
}

pub fn random_weights(k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.05).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Rate model in the matrix-unit basis with random PSD blocks.
pub fn random_model(
    d: usize,
    k: usize,
    couplings: bool,
    rng: &mut impl Rng,
) -> LindbladRateModel<f64> {
    let basis = OperatorBasis::matrix_units(d);
    let n = basis.len();
    let mut b = LindbladRateModel::builder(basis, k).weights(random_weights(k, rng));
    for r in 0..k {
        b = b
            .hamiltonian(r, random_hermitian(d, rng))
            .diagonal(r, random_psd(n, 0.5, rng));
        if couplings {
            for from in (0..k).filter(|&f| f != r) {
                b = b.coupling(r, from, random_psd(n, 0.3, rng));
            }
        }
    }
    b.build().unwrap()
}

/// Jump operators `L_k = √λ_k Σ_α u_kα V_α` from the eigen-decomposition of
/// a PSD rate block.
pub fn jump_operators(a: &M, basis: &OperatorBasis<f64>) -> Vec<M> {
    let eig = SymmetricEigen::new(a.clone());
    let d = basis.dim();
    (0..a.nrows())
        .filter(|&k| eig.eigenvalues[k] > 0.0)
        .map(|k| {
            let v = eig.eigenvectors.column(k);
            let mut l = M::zeros(d, d);
            for alpha in 0..basis.len() {
                l += basis.op(alpha) * v[alpha];
            }
            l * c(eig.eigenvalues[k].sqrt(), 0.)
        })
        .collect()
}

/// Column-stacking Lindbladian built from Kronecker products.
pub fn lindbladian(h: &M, jumps: &[M]) -> M {
    let d = h.nrows();
    let id = M::identity(d, d);
    let i = c(0., 1.);
    let mut g = (id.kronecker(h) - h.transpose().kronecker(&id)) * -i;
    for l in jumps {
        let ldl = l.adjoint() * l;
        g += l.conjugate().kronecker(l);
        g -= (id.kronecker(&ldl) + ldl.transpose().kronecker(&id)) * c(0.5, 0.);
    }
    g
}

/// Taylor series with scaling and squaring.
pub fn expm(a: &M) -> M {
    let n = a.nrows();
    let norm = a.norm();
    let s = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as i32
    } else {
        0
    };
    let b = a / c(2f64.powi(s), 0.);
    let mut term = M::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &b / c(k as f64, 0.);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

pub fn vec_of(m: &M) -> DVector<C<f64>> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &DVector<C<f64>>, d: usize) -> M {
    M::from_column_slice(d, d, v.as_slice())
}

/// Kraus set `{K_j}` with `Σ K_j† K_j = I` from a random isometry.
pub fn random_kraus(d: usize, count: usize, rng: &mut impl Rng) -> Vec<M> {
    let stacked = random_matrix(d * count, d, rng);
    let q = stacked.qr().q();
    (0..count)
        .map(|j| q.view((j * d, 0), (d, d)).into_owned())
        .collect()
}

/// Random walk-class model with `k` channels.
pub fn random_walk(d: usize, k: usize, rng: &mut impl Rng) -> StochasticModel<f64> {
    let mut rates = HopRates::zeros(k);
    for to in 0..k {
        for from in (0..k).filter(|&f| f != to) {
            rates = rates.with(to, from, rng.random::<f64>() + 0.1).unwrap();
        }
    }
    let dissipators = (0..k)
        .map(|_| {
            Dissipator::none()
                .term(rng.random::<f64>(), random_matrix(d, d, rng))
                .term(rng.random::<f64>(), random_matrix(d, d, rng))
        })
        .collect();
    let jumps = (0..k).map(|_| random_kraus(d, 2, rng)).collect();
    StochasticModel::new(
        random_hermitian(d, rng),
        dissipators,
        rates,
        jumps,
        random_weights(k, rng),
    )
    .unwrap()
}

pub fn pure(psi: &[C<f64>]) -> M {
    let v = DVector::from_column_slice(psi);
    &v * v.adjoint()
}

pub fn plus_x() -> M {
    M::from_element(2, 2, c(0.5, 0.))
}

pub fn up() -> M {
    pure(&[c(1., 0.), c(0., 0.)])
}

//! Rate blocks from sampled projected bath correlations.
//!
//! With `V_β(−τ) = e^{−iτH_S} V_β e^{iτH_S} = Σ_γ C_{βγ}(−τ) V_γ`, every
//! block is
//!
//! ```text
//! a_{RR'}^{αγ} = T^{αγ} + (T^{γα})*,   T^{αγ} = Σ_β ∫_0^∞ χ_{RR'}^{γβ}(−τ) C_{βα}(−τ) dτ
//! ```
//!
//! so Hermiticity holds by construction.

use nalgebra::ComplexField;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigs, CMatrix};
use crate::scalar::{cr, Real, C};

use super::OperatorBasis;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Quadrature {
    /// Composite Simpson; a trailing odd interval count is closed with the
    /// 3/8 rule.
    #[default]
    Simpson,
    Trapezoid,
}

/// Samples `χ_{to,from}^{αβ}(−τ_k)` on the uniform grid `τ_k = k·step`.
#[derive(Clone, Debug)]
pub struct ProjectedCorrelations<T: Real> {
    channels: usize,
    ops: usize,
    step: T,
    len: usize,
    data: Vec<Vec<C<T>>>,
}

impl<T: Real> ProjectedCorrelations<T> {
    pub fn zeros(channels: usize, ops: usize, step: T, len: usize) -> Self {
        Self {
            channels,
            ops,
            step,
            len,
            data: vec![vec![cr(T::zero()); len]; channels * channels * ops * ops],
        }
    }

    fn slot(&self, to: usize, from: usize, alpha: usize, beta: usize) -> usize {
        ((to * self.channels + from) * self.ops + alpha) * self.ops + beta
    }

    pub fn set(
        &mut self,
        to: usize,
        from: usize,
        alpha: usize,
        beta: usize,
        values: Vec<C<T>>,
    ) -> Result<()> {
        if values.len() != self.len {
            return Err(Error::Dimension(format!(
                "expected {} samples, got {}",
                self.len,
                values.len()
            )));
        }
        if to >= self.channels || from >= self.channels || alpha >= self.ops || beta >= self.ops {
            return Err(Error::Dimension("correlation index out of range".into()));
        }
        let s = self.slot(to, from, alpha, beta);
        self.data[s] = values;
        Ok(())
    }

    pub fn get(&self, to: usize, from: usize, alpha: usize, beta: usize) -> &[C<T>] {
        &self.data[self.slot(to, from, alpha, beta)]
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn step(&self) -> T {
        self.step
    }
}

fn integrate<T: Real>(f: &[C<T>], h: T, rule: Quadrature) -> C<T> {
    let n = f.len();
    if n < 2 {
        return cr(T::zero());
    }
    let half = T::lit(0.5);
    let trap = |s: &[C<T>]| -> C<T> {
        let mut acc = (s[0] + s[s.len() - 1]) * cr(half);
        for v in &s[1..s.len() - 1] {
            acc += *v;
        }
        acc * cr(h)
    };
    match rule {
        Quadrature::Trapezoid => trap(f),
        Quadrature::Simpson => {
            if n == 2 {
                return trap(f);
            }
            let intervals = n - 1;
            let simpson = |s: &[C<T>]| -> C<T> {
                let last = s.len() - 1;
                let mut acc = s[0] + s[last];
                for (i, v) in s.iter().enumerate().take(last).skip(1) {
                    let w = if i % 2 == 1 { T::lit(4.0) } else { T::lit(2.0) };
                    acc += *v * cr(w);
                }
                acc * cr(h / T::lit(3.0))
            };
            if intervals.is_multiple_of(2) {
                simpson(f)
            } else {
                // Simpson on the leading even part, 3/8 on the last three intervals.
                let split = n - 4;
                let head = if split > 0 {
                    simpson(&f[..=split])
                } else {
                    cr(T::zero())
                };
                let t = &f[split..];
                let tail = (t[0] + t[1] * cr(T::lit(3.0)) + t[2] * cr(T::lit(3.0)) + t[3])
                    * cr(T::lit(3.0) * h / T::lit(8.0));
                head + tail
            }
        }
    }
}

/// Returns the rate blocks as a flat channel-major list, `blocks[to·K + from]`.
pub fn build_from_correlations<T: Real>(
    chi: &ProjectedCorrelations<T>,
    system_hamiltonian: &CMatrix<T>,
    basis: &OperatorBasis<T>,
    rule: Quadrature,
) -> Result<Vec<CMatrix<T>>> {
    let k = chi.channels();
    let m = basis.len();
    if chi.ops != m {
        return Err(Error::Dimension(format!(
            "correlations over {} operators, basis has {m}",
            chi.ops
        )));
    }
    if system_hamiltonian.nrows() != basis.dim() || system_hamiltonian.ncols() != basis.dim() {
        return Err(Error::Dimension(
            "system Hamiltonian does not match basis".into(),
        ));
    }
    let n = chi.len();
    if n < 2 {
        return Err(Error::InvalidParams(
            "need at least two correlation samples".into(),
        ));
    }

    let peak = chi
        .data
        .iter()
        .flat_map(|s| s.iter())
        .map(|z| z.modulus())
        .fold(T::zero(), |a, b| a.max(b));
    if peak == T::zero() {
        return Ok(vec![CMatrix::zeros(m, m); k * k]);
    }
    let tail = chi
        .data
        .iter()
        .map(|s| s[n - 1].modulus())
        .fold(T::zero(), |a, b| a.max(b));
    if tail > T::lit(1e-8) * peak {
        return Err(Error::MarkovViolation {
            ratio: (tail / peak).to_f64_lossy(),
        });
    }

    // coeff[k][(β, γ)] = C_{βγ}(−τ_k)
    let eig = hermitian_eigs(system_hamiltonian)?;
    let w = &eig.vectors;
    let mut coeff = Vec::with_capacity(n);
    for step in 0..n {
        let tau = chi.step() * T::from_usize(step).unwrap();
        let phases = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            eig.values.len(),
            eig.values
                .iter()
                .map(|&lam| ComplexField::exp(C::new(T::zero(), -tau * lam))),
        ));
        let u = w * phases * w.adjoint();
        let mut c = CMatrix::zeros(m, m);
        for beta in 0..m {
            let moved = &u * basis.op(beta) * u.adjoint();
            let expansion = basis.expand(&moved, T::tol(1e-8))?;
            c.set_row(beta, &expansion.transpose());
        }
        coeff.push(c);
    }

    let mut blocks = Vec::with_capacity(k * k);
    let mut integrand = vec![cr(T::zero()); n];
    for to in 0..k {
        for from in 0..k {
            let mut t = CMatrix::zeros(m, m);
            for alpha in 0..m {
                for gamma in 0..m {
                    for (step, slot) in integrand.iter_mut().enumerate() {
                        let mut acc = cr(T::zero());
                        for beta in 0..m {
                            acc +=
                                chi.get(to, from, gamma, beta)[step] * coeff[step][(beta, alpha)];
                        }
                        *slot = acc;
                    }
                    t[(alpha, gamma)] = integrate(&integrand, chi.step(), rule);
                }
            }
            blocks.push(&t + t.adjoint());
        }
    }
    Ok(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sigma_z;

    #[test]
    fn simpson_exact_on_cubic() {
        // ∫_0^1 x^3 dx = 1/4 for both the even and the odd interval branch.
        for n in [5usize, 6, 7, 8] {
            let h = 1.0 / (n - 1) as f64;
            let f: Vec<C<f64>> = (0..n).map(|i| cr((i as f64 * h).powi(3))).collect();
            let v = integrate(&f, h, Quadrature::Simpson);
            assert!((v.re - 0.25).abs() < 1e-14, "n = {n}: {}", v.re);
        }
    }

    #[test]
    fn zero_correlations_give_zero_blocks() {
        let basis = OperatorBasis::<f64>::new(vec![sigma_z()]).unwrap();
        let chi = ProjectedCorrelations::zeros(2, 1, 0.1, 11);
        let blocks =
            build_from_correlations(&chi, &CMatrix::zeros(2, 2), &basis, Quadrature::Simpson)
                .unwrap();
        assert_eq!(blocks.len(), 4);
        assert!(blocks.iter().all(|b| b.norm() == 0.0));
    }

    #[test]
    fn undecayed_correlations_flagged() {
        let basis = OperatorBasis::<f64>::new(vec![sigma_z()]).unwrap();
        let mut chi = ProjectedCorrelations::zeros(1, 1, 0.1, 11);
        chi.set(0, 0, 0, 0, vec![cr(1.0); 11]).unwrap();
        let r = build_from_correlations(&chi, &CMatrix::zeros(2, 2), &basis, Quadrature::Simpson);
        assert!(matches!(r, Err(Error::MarkovViolation { .. })));
    }
}

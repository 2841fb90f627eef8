//! Closed forms for the two-channel qubit dephasing and depolarizing
//! reservoirs, with the matching rate and random-walk models.
//!
//! Rate convention: `γ_a`, `γ_b` are the coherence decay rates of the
//! isolated channels.  The self-dissipator is therefore `(γ_R/2)(σz·σz − ·)`,
//! which makes the decoupled coherence exactly `P_a e^{−γ_a t} + P_b e^{−γ_b t}`.
//!
//! For the coupled dephasing problem the coherences obey
//!
//! ```text
//! Φ_a' = −(γ_a + γ_ba) Φ_a − γ_ab Φ_b
//! Φ_b' = −(γ_b + γ_ab) Φ_b − γ_ba Φ_a
//! ```
//!
//! whose Laplace solution has the denominator
//! `(u+γ_a)(u+γ_b) + γ_ab (u+γ_a) + γ_ba (u+γ_b)`.

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::model::{sigma_x, sigma_y, sigma_z, LindbladRateModel, OperatorBasis};
use crate::scalar::{cr, Real, C};
use crate::stochastic::{convert_walk_to_rate_model, Dissipator, HopRates, StochasticModel};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DephasingParams<T> {
    pub gamma_a: T,
    pub gamma_b: T,
    /// Hop rate `b → a`.
    pub gamma_ab: T,
    /// Hop rate `a → b`.
    pub gamma_ba: T,
    pub p_a: T,
    pub p_b: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DepolarizingParams<T> {
    pub gamma_ab: T,
    pub gamma_ba: T,
    pub p_a: T,
    pub p_b: T,
}

fn check_weights<T: Real>(p_a: T, p_b: T) -> Result<()> {
    if p_a < T::zero() || p_b < T::zero() || (p_a + p_b - T::one()).abs() > T::tol(1e-10) {
        return Err(Error::InvalidParams(format!(
            "weights ({p_a}, {p_b}) must be nonnegative and sum to 1"
        )));
    }
    Ok(())
}

fn check_rates<T: Real>(rates: &[(&str, T)]) -> Result<()> {
    for (name, g) in rates {
        if !g.is_finite() || *g < T::zero() {
            return Err(Error::InvalidParams(format!(
                "rate {name} = {g} must be >= 0"
            )));
        }
    }
    Ok(())
}

impl<T: Real> DephasingParams<T> {
    pub fn new(gamma_a: T, gamma_b: T, gamma_ab: T, gamma_ba: T, p_a: T, p_b: T) -> Result<Self> {
        let p = Self {
            gamma_a,
            gamma_b,
            gamma_ab,
            gamma_ba,
            p_a,
            p_b,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_rates(&[
            ("gamma_a", self.gamma_a),
            ("gamma_b", self.gamma_b),
            ("gamma_ab", self.gamma_ab),
            ("gamma_ba", self.gamma_ba),
        ])?;
        check_weights(self.p_a, self.p_b)
    }

    /// Figure 1, upper curve: no hopping.
    pub fn fig1_upper() -> Self {
        Self::lit(0.1, 1.0, 0.0, 0.0)
    }

    /// Figure 1, lower curve.
    pub fn fig1_lower() -> Self {
        Self::lit(0.1, 1.0, 1.0, 0.1)
    }

    /// Figure 2: channels without self-dephasing.
    pub fn fig2() -> Self {
        Self::lit(0.0, 0.0, 1.0, 0.1)
    }

    fn lit(ga: f64, gb: f64, gab: f64, gba: f64) -> Self {
        Self {
            gamma_a: T::lit(ga),
            gamma_b: T::lit(gb),
            gamma_ab: T::lit(gab),
            gamma_ba: T::lit(gba),
            p_a: T::lit(0.1),
            p_b: T::lit(0.9),
        }
    }

    /// `u² + b u + c` and the numerator offset `n0` of `h(u) = (u + n0)/(u² + b u + c)`.
    fn rational(&self) -> (T, T, T) {
        let (ga, gb, gab, gba) = (self.gamma_a, self.gamma_b, self.gamma_ab, self.gamma_ba);
        let b = ga + gb + gab + gba;
        let c = ga * gb + gab * ga + gba * gb;
        let n0 = (self.p_a - self.p_b) * gab
            + self.p_a * gb
            + (self.p_b - self.p_a) * gba
            + self.p_b * ga;
        (b, c, n0)
    }
}

impl<T: Real> DepolarizingParams<T> {
    pub fn new(gamma_ab: T, gamma_ba: T, p_a: T, p_b: T) -> Result<Self> {
        let p = Self {
            gamma_ab,
            gamma_ba,
            p_a,
            p_b,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_rates(&[("gamma_ab", self.gamma_ab), ("gamma_ba", self.gamma_ba)])?;
        check_weights(self.p_a, self.p_b)
    }

    /// Asymmetric rates with the figure weights.
    pub fn asymmetric() -> Self {
        Self {
            gamma_ab: T::one(),
            gamma_ba: T::lit(0.1),
            p_a: T::lit(0.1),
            p_b: T::lit(0.9),
        }
    }
}

/// Qubit matrix elements `[[Π⁺, Φ⁺], [Φ⁻, Π⁻]]` with `Φ⁻ = (Φ⁺)*`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitElements<T: Real> {
    pub pi_plus: T,
    pub pi_minus: T,
    pub phi_plus: C<T>,
}

impl<T: Real> QubitElements<T> {
    pub fn phi_minus(&self) -> C<T> {
        self.phi_plus.conj()
    }

    pub fn trace(&self) -> T {
        self.pi_plus + self.pi_minus
    }

    pub fn from_matrix(m: &CMatrix<T>) -> Result<Self> {
        if m.nrows() != 2 || m.ncols() != 2 {
            return Err(Error::Dimension("qubit elements need a 2x2 matrix".into()));
        }
        Ok(Self {
            pi_plus: m[(0, 0)].re,
            pi_minus: m[(1, 1)].re,
            phi_plus: m[(0, 1)],
        })
    }

    pub fn to_matrix(&self) -> CMatrix<T> {
        CMatrix::from_row_slice(
            2,
            2,
            &[
                cr(self.pi_plus),
                self.phi_plus,
                self.phi_minus(),
                cr(self.pi_minus),
            ],
        )
    }

    fn scaled(&self, pops: T, coh: C<T>) -> Self {
        Self {
            pi_plus: self.pi_plus * pops,
            pi_minus: self.pi_minus * pops,
            phi_plus: self.phi_plus * coh,
        }
    }
}

/// Rate model (Pauli basis) and random-walk model of the dephasing reservoir.
pub fn dephasing_model<T: Real>(
    p: &DephasingParams<T>,
) -> Result<(LindbladRateModel<T>, StochasticModel<T>)> {
    p.validate()?;
    let half = T::lit(0.5);
    let walk = StochasticModel::new(
        CMatrix::zeros(2, 2),
        vec![
            Dissipator::none().term(p.gamma_a * half, sigma_z()),
            Dissipator::none().term(p.gamma_b * half, sigma_z()),
        ],
        HopRates::zeros(2)
            .with(0, 1, p.gamma_ab)?
            .with(1, 0, p.gamma_ba)?,
        vec![vec![sigma_z()], vec![sigma_z()]],
        vec![p.p_a, p.p_b],
    )?;
    let model = convert_walk_to_rate_model(&walk, OperatorBasis::pauli())?;
    Ok((model, walk))
}

/// Laplace transform of the normalized system coherence.
pub fn h_of_u<T: Real>(p: &DephasingParams<T>, u: C<T>) -> Result<C<T>> {
    let (b, c, n0) = p.rational();
    let den = u * u + u * cr(b) + cr(c);
    let scale = (u.norm_sqr() + b * b + c.abs()).max(T::one());
    if den.norm_sqr().sqrt() <= T::tol(1e-14) * scale {
        return Err(Error::Singular {
            re: u.re.to_f64_lossy(),
            im: u.im.to_f64_lossy(),
        });
    }
    Ok((u + cr(n0)) / den)
}

/// Normalized system coherence `h(t)`, the inverse Laplace transform of
/// [`h_of_u`].
///
/// With roots `m ± s` of the (always real-rooted) denominator,
/// `h(t) = e^{mt} [cosh(st) + (m + n0) sinh(st)/s]`; the repeated-root case
/// takes the limit `sinh(st)/s → t`.
pub fn h_of_t<T: Real>(p: &DephasingParams<T>, t: T) -> T {
    let (b, c, n0) = p.rational();
    let m = -b / T::lit(2.0);
    let disc = (b * b - T::lit(4.0) * c).max(T::zero());
    let scale = (b * b).max(c.abs()).max(T::default_epsilon());
    let k = m + n0;
    if disc <= T::tol(1e-12) * scale {
        return (m * t).exp() * (T::one() + k * t);
    }
    let s = disc.sqrt() / T::lit(2.0);
    if s * t < T::one() {
        (m * t).exp() * ((s * t).cosh() + k * (s * t).sinh() / s)
    } else {
        let half = T::lit(0.5);
        half * (((m + s) * t).exp() * (T::one() + k / s) + ((m - s) * t).exp() * (T::one() - k / s))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CpBound<T> {
    pub ok: bool,
    pub max_abs_h: T,
    /// Smallest of `g_±(t) = (1 ± h(t))/2` on the grid.
    pub min_g: T,
}

/// `|h(t)| ≤ 1 + 1e−10` and `g_±(t) ≥ −1e−10` on every grid point.
pub fn cp_bound_check<T: Real>(p: &DephasingParams<T>, grid: &[T]) -> CpBound<T> {
    let mut max_abs_h = T::zero();
    let mut min_g = T::lit(f64::INFINITY);
    let half = T::lit(0.5);
    for &t in grid {
        let h = h_of_t(p, t);
        max_abs_h = max_abs_h.max(h.abs());
        min_g = min_g.min(half * (T::one() + h)).min(half * (T::one() - h));
    }
    CpBound {
        ok: max_abs_h <= T::one() + T::tol(1e-10) && min_g >= -T::tol(1e-10),
        max_abs_h,
        min_g,
    }
}

/// `K(u) = [1 − u h(u)]/h(u)`.
pub fn dephasing_kernel<T: Real>(p: &DephasingParams<T>, u: C<T>) -> Result<C<T>> {
    let h = h_of_u(p, u)?;
    if h.norm_sqr() == T::zero() {
        return Err(Error::Singular {
            re: u.re.to_f64_lossy(),
            im: u.im.to_f64_lossy(),
        });
    }
    Ok((cr(T::one()) - u * h) / h)
}

/// Stationary values of the system and of both auxiliary matrices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitStationary<T: Real> {
    pub system: QubitElements<T>,
    pub channel_a: QubitElements<T>,
    pub channel_b: QubitElements<T>,
}

impl<T: Real> QubitStationary<T> {
    pub fn traces(&self) -> (T, T) {
        (self.channel_a.trace(), self.channel_b.trace())
    }
}

fn total_rate<T: Real>(gab: T, gba: T) -> Result<T> {
    let sum = gab + gba;
    if sum <= T::zero() {
        return Err(Error::InvalidParams(
            "stationary values need gamma_ab + gamma_ba > 0".into(),
        ));
    }
    Ok(sum)
}

pub fn dephasing_stationary<T: Real>(
    p: &DephasingParams<T>,
    rho0: &CMatrix<T>,
) -> Result<QubitStationary<T>> {
    p.validate()?;
    let sum = total_rate(p.gamma_ab, p.gamma_ba)?;
    let init = QubitElements::from_matrix(rho0)?;
    let tr_a = p.gamma_ab / sum;
    let tr_b = p.gamma_ba / sum;
    let frozen = p.gamma_a == T::zero() && p.gamma_b == T::zero();
    let (coh_a, coh_b) = if frozen {
        ((p.p_a - p.p_b) * tr_a, (p.p_b - p.p_a) * tr_b)
    } else {
        (T::zero(), T::zero())
    };
    let channel_a = init.scaled(tr_a, cr(coh_a));
    let channel_b = init.scaled(tr_b, cr(coh_b));
    Ok(QubitStationary {
        system: QubitElements {
            pi_plus: init.pi_plus,
            pi_minus: init.pi_minus,
            phi_plus: channel_a.phi_plus + channel_b.phi_plus,
        },
        channel_a,
        channel_b,
    })
}

/// Rate model (Pauli basis) and random-walk model of the depolarizing
/// reservoir: no self-dynamics, jump map `(σx·σx + σy·σy)/2`.
pub fn depolarizing_model<T: Real>(
    p: &DepolarizingParams<T>,
) -> Result<(LindbladRateModel<T>, StochasticModel<T>)> {
    p.validate()?;
    let k = cr(T::lit(0.5).sqrt());
    let kraus = vec![sigma_x::<T>() * k, sigma_y::<T>() * k];
    let walk = StochasticModel::new(
        CMatrix::zeros(2, 2),
        vec![Dissipator::none(), Dissipator::none()],
        HopRates::zeros(2)
            .with(0, 1, p.gamma_ab)?
            .with(1, 0, p.gamma_ba)?,
        vec![kraus.clone(), kraus],
        vec![p.p_a, p.p_b],
    )?;
    let model = convert_walk_to_rate_model(&walk, OperatorBasis::pauli())?;
    Ok((model, walk))
}

/// Channel and system elements at time `t`.
///
/// `Π_a⁺` and `Π_b⁻` exchange population at rates `γ_ba`, `γ_ab` and
/// conserve `Π_a⁺ + Π_b⁻`; likewise `Π_b⁺`, `Π_a⁻`.  Coherences decay as
/// `Φ_a = P_a e^{−γ_ba t} Φ(0)`, `Φ_b = P_b e^{−γ_ab t} Φ(0)`.
pub fn depolarizing_at<T: Real>(
    p: &DepolarizingParams<T>,
    rho0: &CMatrix<T>,
    t: T,
) -> Result<QubitStationary<T>> {
    p.validate()?;
    let init = QubitElements::from_matrix(rho0)?;
    let sum = p.gamma_ab + p.gamma_ba;
    let decay = (-sum * t).exp();
    let relax = |start: T, total: T, rate: T| {
        if sum == T::zero() {
            start
        } else {
            let fin = total * rate / sum;
            fin + (start - fin) * decay
        }
    };
    let s1 = p.p_a * init.pi_plus + p.p_b * init.pi_minus;
    let s2 = p.p_b * init.pi_plus + p.p_a * init.pi_minus;
    let a_plus = relax(p.p_a * init.pi_plus, s1, p.gamma_ab);
    let b_plus = relax(p.p_b * init.pi_plus, s2, p.gamma_ba);
    let channel_a = QubitElements {
        pi_plus: a_plus,
        pi_minus: s2 - b_plus,
        phi_plus: init.phi_plus * cr(p.p_a * (-p.gamma_ba * t).exp()),
    };
    let channel_b = QubitElements {
        pi_plus: b_plus,
        pi_minus: s1 - a_plus,
        phi_plus: init.phi_plus * cr(p.p_b * (-p.gamma_ab * t).exp()),
    };
    Ok(QubitStationary {
        system: QubitElements {
            pi_plus: channel_a.pi_plus + channel_b.pi_plus,
            pi_minus: channel_a.pi_minus + channel_b.pi_minus,
            phi_plus: channel_a.phi_plus + channel_b.phi_plus,
        },
        channel_a,
        channel_b,
    })
}

/// `Π_S^±(∞) = Π_S^±(0)(P_aγ_ab + P_bγ_ba)/Σ + Π_S^∓(0)(P_aγ_ba + P_bγ_ab)/Σ`,
/// coherences zero.
pub fn depolarizing_stationary<T: Real>(
    p: &DepolarizingParams<T>,
    rho0: &CMatrix<T>,
) -> Result<QubitStationary<T>> {
    p.validate()?;
    let sum = total_rate(p.gamma_ab, p.gamma_ba)?;
    let init = QubitElements::from_matrix(rho0)?;
    let s1 = p.p_a * init.pi_plus + p.p_b * init.pi_minus;
    let s2 = p.p_b * init.pi_plus + p.p_a * init.pi_minus;
    let zero = cr(T::zero());
    let channel_a = QubitElements {
        pi_plus: s1 * p.gamma_ab / sum,
        pi_minus: s2 * p.gamma_ab / sum,
        phi_plus: zero,
    };
    let channel_b = QubitElements {
        pi_plus: s2 * p.gamma_ba / sum,
        pi_minus: s1 * p.gamma_ba / sum,
        phi_plus: zero,
    };
    let same = (p.p_a * p.gamma_ab + p.p_b * p.gamma_ba) / sum;
    let swap = (p.p_a * p.gamma_ba + p.p_b * p.gamma_ab) / sum;
    Ok(QubitStationary {
        system: QubitElements {
            pi_plus: init.pi_plus * same + init.pi_minus * swap,
            pi_minus: init.pi_minus * same + init.pi_plus * swap,
            phi_plus: zero,
        },
        channel_a,
        channel_b,
    })
}

/// Named parameter sets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Preset<T> {
    Dephasing(DephasingParams<T>),
    Depolarizing(DepolarizingParams<T>),
}

pub const PRESET_NAMES: [&str; 4] = ["fig1-upper", "fig1-lower", "fig2", "depolarizing"];

pub fn preset<T: Real>(name: &str) -> Option<Preset<T>> {
    match name {
        "fig1-upper" => Some(Preset::Dephasing(DephasingParams::fig1_upper())),
        "fig1-lower" => Some(Preset::Dephasing(DephasingParams::fig1_lower())),
        "fig2" => Some(Preset::Dephasing(DephasingParams::fig2())),
        "depolarizing" => Some(Preset::Depolarizing(DepolarizingParams::asymmetric())),
        _ => None,
    }
}

impl<T: Real> Preset<T> {
    pub fn models(&self) -> Result<(LindbladRateModel<T>, StochasticModel<T>)> {
        match self {
            Preset::Dephasing(p) => dephasing_model(p),
            Preset::Depolarizing(p) => depolarizing_model(p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    #[test]
    fn h_starts_at_one() {
        for p in [
            DephasingParams::<f64>::fig1_upper(),
            DephasingParams::fig1_lower(),
            DephasingParams::fig2(),
        ] {
            assert!((h_of_t(&p, 0.0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn decoupled_h_is_a_mixture_of_exponentials() {
        let p = DephasingParams::<f64>::fig1_upper();
        for t in [0.0f64, 0.5, 3.0, 20.0] {
            let expected = 0.1 * (-0.1 * t).exp() + 0.9 * (-t).exp();
            assert!((h_of_t(&p, t) - expected).abs() < 1e-14);
        }
        let u = c::<f64>(0.7, 0.2);
        let expected = c::<f64>(0.1, 0.) / (u + c(0.1, 0.)) + c::<f64>(0.9, 0.) / (u + c(1.0, 0.));
        assert!((h_of_u(&p, u).unwrap() - expected).norm() < 1e-14);
    }

    #[test]
    fn fig2_limit() {
        let p = DephasingParams::<f64>::fig2();
        let expected = (0.1 - 0.9) * (1.0 - 0.1) / 1.1;
        assert!((h_of_t(&p, 200.0) - expected).abs() < 1e-12);
        let u = 1e-9;
        let uh = h_of_u(&p, c(u, 0.)).unwrap() * c(u, 0.);
        assert!((uh.re - expected).abs() < 1e-8);
    }

    #[test]
    fn repeated_root_branch() {
        // γa = γb, γab = γba = 0 gives a double root at −γ.
        let p = DephasingParams::new(0.5, 0.5, 0.0, 0.0, 0.3, 0.7).unwrap();
        for t in [0.0f64, 1.0, 4.0] {
            assert!((h_of_t(&p, t) - (-0.5 * t).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn h_matches_ode_laplace_transform() {
        // Direct 2x2 solve of (u − A)Φ = P against the closed form.
        let p = DephasingParams::<f64>::fig1_lower();
        let u = 1.3;
        let a11 = u + p.gamma_a + p.gamma_ba;
        let a22 = u + p.gamma_b + p.gamma_ab;
        let det = a11 * a22 - p.gamma_ab * p.gamma_ba;
        let phi_a = (p.p_a * a22 - p.gamma_ab * p.p_b) / det;
        let phi_b = (p.p_b * a11 - p.gamma_ba * p.p_a) / det;
        let h = h_of_u(&p, c(u, 0.)).unwrap();
        assert!((h.re - (phi_a + phi_b)).abs() < 1e-14);
    }

    #[test]
    fn markov_kernel_constant() {
        let p = DephasingParams::new(0.4, 2.0, 0.0, 0.0, 1.0, 0.0).unwrap();
        for u in [0.1, 1.0, 10.0] {
            let k = dephasing_kernel(&p, c(u, 0.)).unwrap();
            assert!((k - c(0.4, 0.)).norm() < 1e-12);
        }
    }

    #[test]
    fn negative_rates_rejected() {
        assert!(DephasingParams::new(-0.1, 0.0, 0.0, 0.0, 0.5, 0.5).is_err());
        assert!(DepolarizingParams::new(1.0, 1.0, 0.5, 0.6).is_err());
    }

    #[test]
    fn depolarizing_asymmetric_population() {
        let p = DepolarizingParams::<f64>::asymmetric();
        let up = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)]);
        let st = depolarizing_stationary(&p, &up).unwrap();
        assert!((st.system.pi_plus - 0.19 / 1.1).abs() < 1e-15);
        let late = depolarizing_at(&p, &up, 100.0).unwrap();
        assert!((late.system.pi_plus - st.system.pi_plus).abs() < 1e-14);
        assert!((late.channel_a.pi_minus - st.channel_a.pi_minus).abs() < 1e-14);
    }

    #[test]
    fn stationary_coherence_vanishes_for_symmetric_cases() {
        let plus = CMatrix::from_element(2, 2, c(0.5, 0.));
        let p = DephasingParams::new(0.0, 0.0, 1.0, 0.1, 0.5, 0.5).unwrap();
        assert_eq!(
            dephasing_stationary(&p, &plus).unwrap().system.phi_plus,
            c(0., 0.)
        );
        let p = DephasingParams::new(0.0, 0.0, 0.3, 0.3, 0.1, 0.9).unwrap();
        assert!(
            dephasing_stationary(&p, &plus)
                .unwrap()
                .system
                .phi_plus
                .norm()
                < 1e-15
        );
    }
}

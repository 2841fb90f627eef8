//! Dormand–Prince 5(4) for the linear system `x' = G x`.

use nalgebra::ComplexField;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::scalar::{cr, Real};

use super::EvolveOptions;

// The system is autonomous, so the stage nodes never enter.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// Fifth-order minus fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<T: Real>(x: &CVector<T>, terms: &[(f64, &CVector<T>)], h: T) -> CVector<T> {
    let mut y = x.clone();
    for &(w, k) in terms {
        y.axpy(cr(h * T::lit(w)), k, cr(T::one()));
    }
    y
}

/// State at every grid time; `grid` is already validated.
pub(super) fn integrate<T: Real>(
    g: &CMatrix<T>,
    x0: &CVector<T>,
    grid: &[T],
    opts: &EvolveOptions<T>,
) -> Result<Vec<CVector<T>>> {
    let mut out = Vec::with_capacity(grid.len());
    let Some((&t0, rest)) = grid.split_first() else {
        return Ok(out);
    };
    out.push(x0.clone());
    let mut t = t0;
    let mut x = x0.clone();
    let scale_g = g.norm();
    if scale_g == T::zero() {
        out.extend(rest.iter().map(|_| x0.clone()));
        return Ok(out);
    }
    let mut h = T::lit(0.01) / scale_g;
    let mut k1 = g * &x;
    let mut steps = 0usize;

    for &target in rest {
        while t < target {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::TooManySteps(opts.max_steps));
            }
            let last = target - t <= h;
            let step = if last { target - t } else { h };
            if step <= T::default_epsilon() * T::lit(16.0) * t.abs().max(T::one()) {
                return Err(Error::StepUnderflow(t.to_f64_lossy()));
            }

            let k2 = g * axpy(&x, &[(A21, &k1)], step);
            let k3 = g * axpy(&x, &[(A31, &k1), (A32, &k2)], step);
            let k4 = g * axpy(&x, &[(A41, &k1), (A42, &k2), (A43, &k3)], step);
            let k5 = g * axpy(&x, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], step);
            let k6 = g * axpy(
                &x,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                step,
            );
            let x_new = axpy(
                &x,
                &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
                step,
            );
            let k7 = g * &x_new;
            let err = axpy(
                &CVector::zeros(x.len()),
                &[
                    (E1, &k1),
                    (E3, &k3),
                    (E4, &k4),
                    (E5, &k5),
                    (E6, &k6),
                    (E7, &k7),
                ],
                step,
            );

            let mut ratio = T::zero();
            for i in 0..x.len() {
                let sc = opts.atol + opts.rtol * x[i].modulus().max(x_new[i].modulus());
                ratio = ratio.max(err[i].modulus() / sc);
            }
            if !ratio.is_finite() {
                return Err(Error::NonFinite("adaptive step"));
            }

            let factor = if ratio == T::zero() {
                T::lit(5.0)
            } else {
                (T::lit(0.9) * ratio.powf(T::lit(-0.2))).clamp(T::lit(0.2), T::lit(5.0))
            };
            if ratio <= T::one() {
                t = if last { target } else { t + step };
                x = x_new;
                k1 = k7;
                // A truncated final step says nothing about the natural size.
                if !last {
                    h = step * factor;
                } else {
                    h = h.max(step * factor);
                }
            } else {
                h = step * factor.min(T::one());
            }
        }
        out.push(x.clone());
    }
    Ok(out)
}

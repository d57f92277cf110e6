//! Dormand-Prince 5(4) integrator for the two-component Bloch system.
//!
//! Error control is per unit step: a step of size `h` is accepted when the
//! embedded error estimate stays below `tol * h * scale`, so the accumulated
//! error over a horizon `T` is of order `tol * T * scale` rather than
//! `tol * (T / h)`. The scale follows the trajectory norm, which keeps the
//! integrator accurate in the deep exponential tail of decaying solutions.

use crate::error::{Error, Result};

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
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b_hat, the embedded 4th-order error coefficients.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;
const MAX_STEPS: usize = 50_000_000;
/// Floor added to the norm-based error scale so exactly-zero states do not
/// divide by zero.
const SCALE_FLOOR: f64 = 1e-290;

pub(crate) type State = [f64; 2];

#[inline]
fn axpyn(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for &(c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Integrate `dy/dt = f(t, y)` from `t0` through every time in `outputs`
/// (sorted, within `[t0, t_end]`), returning the state at each output.
///
/// `observe` runs after every accepted step with `(t, y, f(t, y))`; it gives
/// steady-state detection a view of the true step sequence at no extra cost
/// (the final stage of an accepted step is the next first stage).
pub(crate) fn dopri5<F, O>(
    f: F,
    t0: f64,
    y0: State,
    outputs: &[f64],
    tol: f64,
    mut observe: O,
) -> Result<Vec<State>>
where
    F: Fn(f64, &State) -> State,
    O: FnMut(f64, &State, &State),
{
    if !(tol > 0.0) {
        return Err(Error::domain(format!("ODE tolerance must be positive, got {tol}")));
    }
    let t_end = outputs.last().copied().unwrap_or(t0);
    let span = t_end - t0;
    let mut results = Vec::with_capacity(outputs.len());
    let mut out_iter = outputs.iter().copied().peekable();
    while let Some(&t_next) = out_iter.peek() {
        if t_next <= t0 {
            results.push(y0);
            out_iter.next();
        } else {
            break;
        }
    }
    if out_iter.peek().is_none() {
        return Ok(results);
    }

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    observe(t, &y, &k1);

    let h_min = 1e-14 * span.max(1.0);
    let mut h = (1e-3 * span).min(0.1).max(h_min * 16.0);
    let mut steps = 0usize;

    while let Some(&t_next) = out_iter.peek() {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::contract(format!(
                "ODE integration exceeded {MAX_STEPS} steps before t = {t_next}"
            )));
        }
        let mut hitting_output = false;
        if t + h >= t_next {
            h = t_next - t;
            hitting_output = true;
        }
        if h < h_min {
            // Only a hard failure if the controller (not output spacing)
            // drove the step down.
            if !hitting_output {
                return Err(Error::StepSize { t, h, h_min });
            }
            // Snap to the output point: the remaining gap is below the
            // resolvable spacing.
            results.push(y);
            out_iter.next();
            t = t_next;
            h = h_min * 16.0;
            continue;
        }

        let k2 = f(t + C2 * h, &axpyn(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpyn(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &axpyn(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * h,
            &axpyn(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpyn(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = axpyn(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(t + h, &y_new);

        let err = [
            h * (E1 * k1[0] + E3 * k3[0] + E4 * k4[0] + E5 * k5[0] + E6 * k6[0] + E7 * k7[0]),
            h * (E1 * k1[1] + E3 * k3[1] + E4 * k4[1] + E5 * k5[1] + E6 * k6[1] + E7 * k7[1]),
        ];
        let norm = y[0].abs().max(y[1].abs()).max(y_new[0].abs().max(y_new[1].abs()));
        let scale = SCALE_FLOOR + tol * norm;
        // Error per unit step: compare against tol * h * norm.
        let en = err[0].abs().max(err[1].abs()) / (scale * h);

        if en <= 1.0 {
            t += h;
            y = y_new;
            k1 = k7;
            observe(t, &y, &k1);
            if hitting_output {
                results.push(y);
                out_iter.next();
            }
            let factor = if en == 0.0 { FAC_MAX } else { (SAFETY * en.powf(-0.25)).min(FAC_MAX) };
            h *= factor.max(FAC_MIN);
        } else {
            h *= (SAFETY * en.powf(-0.25)).clamp(FAC_MIN, 1.0);
            if h < h_min {
                return Err(Error::StepSize { t, h, h_min });
            }
        }
    }

    Ok(results)
}

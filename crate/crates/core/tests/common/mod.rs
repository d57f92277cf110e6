//! Shared oracle machinery for the integration tests. Everything here is
//! deliberately independent of the library's own numerics: plain composite
//! rules and a fixed-step integrator, nothing adaptive.

#![allow(dead_code)]

use cohtrap_core::{BathSpec, ModelConfig, QuadratureConfig, SpectrumKind};

pub fn fig1_bath() -> BathSpec {
    BathSpec::new(5.0, 10.0, 100.0, SpectrumKind::ExactCoth).unwrap()
}

pub fn fig1_model() -> ModelConfig {
    ModelConfig::new(0.09).unwrap()
}

pub fn default_q() -> QuadratureConfig {
    QuadratureConfig::default()
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 0 { n } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        acc += f(a + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Classic fixed-step fourth-order Runge-Kutta from `t0` to `t_end`.
pub fn rk4_fixed<F: Fn(f64, &[f64; 2]) -> [f64; 2]>(
    f: &F,
    t0: f64,
    y0: [f64; 2],
    t_end: f64,
    h: f64,
) -> [f64; 2] {
    let n = ((t_end - t0) / h).round().max(1.0) as usize;
    let h = (t_end - t0) / n as f64;
    let mut t = t0;
    let mut y = y0;
    for _ in 0..n {
        let k1 = f(t, &y);
        let y2 = [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]];
        let k2 = f(t + 0.5 * h, &y2);
        let y3 = [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]];
        let k3 = f(t + 0.5 * h, &y3);
        let y4 = [y[0] + h * k3[0], y[1] + h * k3[1]];
        let k4 = f(t + h, &y4);
        y = [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        t += h;
    }
    y
}

/// Least-squares slope of `ln(c)` against `t`.
pub fn fit_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |a, &(t, c)| (a.0 + t, a.1 + c.ln()));
    let (sxx, sxy) = points
        .iter()
        .fold((0.0, 0.0), |a, &(t, c)| (a.0 + t * t, a.1 + t * c.ln()));
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Symmetric-excision evaluation of the principal-value integral
/// `P Int_0^inf J_eff / (w^2 - W^2) dw`, with the pole bracketed at
/// distance `eps` and the near-pole wings integrated on a log grid.
pub fn pv_excision(bath: &BathSpec, omega: f64, eps: f64, w_max: f64) -> f64 {
    let j = |w: f64| cohtrap_core::spectral::effective_spectrum(bath, w).unwrap();
    let f = |w: f64| j(w) / (w * w - omega * omega);
    let mut total = simpson(&f, 0.0, omega - 0.5, 40_000);
    let left = |u: f64| {
        let e = u.exp();
        f(omega - e) * e
    };
    total += simpson(&left, eps.ln(), 0.5f64.ln(), 20_000);
    let right = |u: f64| {
        let e = u.exp();
        f(omega + e) * e
    };
    total += simpson(&right, eps.ln(), 0.5f64.ln(), 20_000);
    total += simpson(&f, omega + 0.5, w_max, 400_000);
    // Far tail folded to s = w_max / w, covering up to 100 w_max.
    let tail = |s: f64| {
        let w = w_max / s;
        w_max * j(w) / (w_max * w_max - omega * omega * s * s)
    };
    total += simpson(&tail, 0.01, 1.0, 50_000);
    total
}

/// Richardson extrapolation of the excision values at eps, eps/10, eps/100,
/// assuming the odd expansion `E(eps) = I + a eps + b eps^3`.
pub fn pv_excision_extrapolated(bath: &BathSpec, omega: f64, w_max: f64) -> f64 {
    let e: Vec<(f64, f64)> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&eps| (eps, pv_excision(bath, omega, eps, w_max)))
        .collect();
    let det3 = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let m = |col0: [f64; 3]| {
        [
            [col0[0], e[0].0, e[0].0.powi(3)],
            [col0[1], e[1].0, e[1].0.powi(3)],
            [col0[2], e[2].0, e[2].0.powi(3)],
        ]
    };
    let base = det3(m([1.0, 1.0, 1.0]));
    det3(m([e[0].1, e[1].1, e[2].1])) / base
}

/// Brute-force 2-D composite quadrature of the coefficient double integrals:
/// inner frequency integral by uniform 5-point Gauss-Legendre panels (kept
/// cheap by per-node rotation recurrences), outer time integral by Simpson
/// prefix sums. Returns `(Delta, Gamma)` at the requested times, which must
/// land on even outer nodes.
pub struct Oracle2d {
    pub times: Vec<f64>,
    pub delta: Vec<f64>,
    pub gamma: Vec<f64>,
}

pub fn oracle_2d(
    bath: &BathSpec,
    omega_sys: f64,
    lambda: f64,
    t_values: &[f64],
    w_max: f64,
    n_t: usize,
    panels: usize,
) -> Oracle2d {
    // GL5 nodes/weights on [0, 1].
    #[allow(clippy::excessive_precision)]
    const GL_X: [f64; 5] = [
        0.046_910_077_030_668_05,
        0.230_765_344_947_158_45,
        0.5,
        0.769_234_655_052_841_5,
        0.953_089_922_969_331_9,
    ];
    #[allow(clippy::excessive_precision)]
    const GL_W: [f64; 5] = [
        0.118_463_442_528_094_54,
        0.239_314_335_249_683_24,
        0.284_444_444_444_444_44,
        0.239_314_335_249_683_24,
        0.118_463_442_528_094_54,
    ];

    let t_last = *t_values.last().unwrap();
    let h_t = t_last / n_t as f64;
    let h_w = w_max / panels as f64;

    // nu[j] = Int_0^{w_max} J_eff(w) cos(w t_j) dw on the outer grid, with
    // cos(w t_j) advanced over j by a rotation recurrence per node.
    let mut nu = vec![0.0f64; n_t + 1];
    for (&xk, &wk) in GL_X.iter().zip(GL_W.iter()) {
        let mut node = xk * h_w;
        for _ in 0..panels {
            let jw = bath_j_eff(bath, node) * wk * h_w;
            let (dc, ds) = ((node * h_t).cos(), (node * h_t).sin());
            let mut c = 1.0f64;
            let mut s = 0.0f64;
            for dst in nu.iter_mut() {
                *dst += jw * c;
                let c_next = c * dc - s * ds;
                s = s * dc + c * ds;
                c = c_next;
            }
            node += h_w;
        }
    }

    // Outer Simpson prefix integrals of sin(W t) nu and cos(W t) nu.
    let pre = 4.0 * lambda * lambda;
    let f_sin: Vec<f64> = (0..=n_t)
        .map(|j| (omega_sys * h_t * j as f64).sin() * nu[j])
        .collect();
    let f_cos: Vec<f64> = (0..=n_t)
        .map(|j| (omega_sys * h_t * j as f64).cos() * nu[j])
        .collect();
    let prefix = |f: &[f64], upto: usize| -> f64 {
        let mut acc = f[0] + f[upto];
        let mut i = 1;
        while i < upto {
            acc += f[i] * if i % 2 == 1 { 4.0 } else { 2.0 };
            i += 1;
        }
        acc * h_t / 3.0
    };

    let mut delta = Vec::new();
    let mut gamma = Vec::new();
    for &t in t_values {
        let j = (t / h_t).round() as usize;
        assert!(j % 2 == 0, "oracle times must land on even Simpson nodes");
        assert!((j as f64 * h_t - t).abs() < 1e-12);
        delta.push(pre * prefix(&f_sin, j));
        gamma.push(pre * prefix(&f_cos, j));
    }
    Oracle2d { times: t_values.to_vec(), delta, gamma }
}

fn bath_j_eff(bath: &BathSpec, w: f64) -> f64 {
    cohtrap_core::spectral::effective_spectrum(bath, w).unwrap()
}

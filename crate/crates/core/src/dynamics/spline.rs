//! Not-a-knot cubic spline on a strictly increasing grid.
//!
//! The not-a-knot end conditions keep full fourth-order accuracy up to the
//! boundaries, which the coefficient tables rely on (a natural spline would
//! lose two orders in the first and last subintervals, exactly where the
//! transient lives).

/// Interpolating cubic spline through `(x_i, y_i)`.
#[derive(Clone, Debug)]
pub(crate) struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    /// Requires at least 4 strictly increasing knots.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 4, "cubic spline needs at least 4 knots, got {n}");
        assert_eq!(n, y.len());
        for w in x.windows(2) {
            assert!(w[1] > w[0], "spline knots must be strictly increasing");
        }

        let nseg = n - 1;
        let h: Vec<f64> = (0..nseg).map(|i| x[i + 1] - x[i]).collect();
        let d: Vec<f64> = (1..nseg)
            .map(|i| (y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1])
            .collect();

        // Interior moment equations with the not-a-knot rows folded into the
        // first and last of them; unknowns are m[1..n-1].
        let k = n - 2;
        let mut sub = vec![0.0; k];
        let mut diag = vec![0.0; k];
        let mut sup = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        for i in 1..=k {
            sub[i - 1] = h[i - 1] / 6.0;
            diag[i - 1] = (h[i - 1] + h[i]) / 3.0;
            sup[i - 1] = h[i] / 6.0;
            rhs[i - 1] = d[i - 1];
        }
        // Left not-a-knot: m0 = ((h0 + h1) m1 - h0 m2) / h1.
        diag[0] = (h[0] + h[1]) * (h[0] + 2.0 * h[1]) / (6.0 * h[1]);
        sup[0] = (h[1] * h[1] - h[0] * h[0]) / (6.0 * h[1]);
        // Right not-a-knot: mn = ((h_last + h_prev) m_{n-2} - h_last m_{n-3}) / h_prev.
        let hl = h[nseg - 1];
        let hp = h[nseg - 2];
        diag[k - 1] = (hl + hp) * (hl + 2.0 * hp) / (6.0 * hp);
        sub[k - 1] = (hp * hp - hl * hl) / (6.0 * hp);

        let inner = solve_tridiagonal(&sub, &mut diag, &sup, &mut rhs);

        let mut m = vec![0.0; n];
        m[1..(k + 1)].copy_from_slice(&inner);
        m[0] = ((h[0] + h[1]) * m[1] - h[0] * m[2]) / h[1];
        m[n - 1] = ((hl + hp) * m[n - 2] - hl * m[n - 3]) / hp;

        CubicSpline { x, y, m }
    }

    #[inline]
    fn segment(&self, t: f64) -> usize {
        let n = self.x.len();
        // partition_point returns the first knot > t; clamp to a valid segment.
        self.x.partition_point(|&xi| xi <= t).clamp(1, n - 1) - 1
    }

    /// Spline value; arguments outside the grid evaluate the boundary cubic.
    pub fn eval(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let h = x1 - x0;
        let a = x1 - t;
        let b = t - x0;
        self.m[i] * a * a * a / (6.0 * h)
            + self.m[i + 1] * b * b * b / (6.0 * h)
            + (self.y[i] / h - self.m[i] * h / 6.0) * a
            + (self.y[i + 1] / h - self.m[i + 1] * h / 6.0) * b
    }
}

/// Thomas algorithm; `diag` and `rhs` are consumed as scratch space.
fn solve_tridiagonal(sub: &[f64], diag: &mut [f64], sup: &[f64], rhs: &mut [f64]) -> Vec<f64> {
    let n = diag.len();
    for i in 1..n {
        let w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    let mut out = vec![0.0; n];
    out[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        out[i] = (rhs[i] - sup[i] * out[i + 1]) / diag[i];
    }
    out
}

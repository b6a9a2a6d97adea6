//! Natural cubic spline (zero second derivative at both end knots).

/// Interpolating natural cubic spline through strictly increasing knots.
#[derive(Debug, Clone)]
pub struct NaturalSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl NaturalSpline {
    /// Returns `None` when there are no knots, lengths differ, or knots do not strictly increase.
    pub fn new(xs: &[f64], ys: &[f64]) -> Option<Self> {
        let n = xs.len();
        if n == 0 || n != ys.len() || xs.windows(2).any(|w| !(w[1] > w[0])) {
            return None;
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior equations
            // h[i-1] m[i-1] + 2 (h[i-1] + h[i]) m[i] + h[i] m[i+1] = 6 (d[i] - d[i-1])
            let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
            let d: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for r in 0..k {
                let i = r + 1;
                diag[r] = 2.0 * (h[i - 1] + h[i]);
                rhs[r] = 6.0 * (d[i] - d[i - 1]);
            }
            for r in 1..k {
                let w = h[r] / diag[r - 1];
                diag[r] -= w * h[r];
                rhs[r] -= w * rhs[r - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for r in (0..k - 1).rev() {
                m[r + 1] = (rhs[r] - h[r + 1] * m[r + 2]) / diag[r];
            }
        }
        Some(Self { xs: xs.to_vec(), ys: ys.to_vec(), m })
    }

    fn eval_segment(&self, i: usize, x: f64) -> f64 {
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    /// Value at `x`; outside the knot range the end cubic segments are extended.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if n == 1 {
            return self.ys[0];
        }
        let i = match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            p => (p - 1).min(n - 2),
        };
        self.eval_segment(i, x)
    }

    /// Values at the integer sample positions `0..len`.
    pub fn eval_grid(&self, len: usize) -> Vec<f64> {
        let n = self.xs.len();
        if n == 1 {
            return vec![self.ys[0]; len];
        }
        let mut seg = 0;
        (0..len)
            .map(|t| {
                let x = t as f64;
                while seg < n - 2 && self.xs[seg + 1] <= x {
                    seg += 1;
                }
                self.eval_segment(seg, x)
            })
            .collect()
    }
}

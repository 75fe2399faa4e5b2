//! Slowly varying parameters `s ↦ value` on `[0, 1]`.

use std::sync::Arc;

use crate::error::{Error, Result};

pub type Sampler<T> = Arc<dyn Fn(f64) -> T + Send + Sync>;

pub fn constant<T: Clone + Send + Sync + 'static>(value: T) -> Sampler<T> {
    Arc::new(move |_| value.clone())
}

/// `s ↦ a + b s`.
pub fn affine(a: f64, b: f64) -> Sampler<f64> {
    Arc::new(move |s| a + b * s)
}

/// Natural cubic spline through tabulated knots. It is `C²`, and linear data
/// is reproduced exactly.
#[derive(Clone, Debug)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    second: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(Error::InvalidSchedule(format!(
                "tabulated schedule needs matching knots and values (got {} and {})",
                x.len(),
                y.len()
            )));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) || x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSchedule("knots must be finite and strictly increasing".into()));
        }
        let n = x.len();
        let mut second = vec![0.0; n];
        if n > 2 {
            // Tridiagonal solve for the interior second derivatives.
            let mut diag = vec![0.0; n];
            let mut rhs = vec![0.0; n];
            let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
            for i in 1..n - 1 {
                diag[i] = 2.0 * (h[i - 1] + h[i]);
                rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
            }
            for i in 2..n - 1 {
                let w = h[i - 1] / diag[i - 1];
                diag[i] -= w * h[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            for i in (1..n - 1).rev() {
                let upper = if i + 1 < n - 1 { h[i] * second[i + 1] } else { 0.0 };
                second[i] = (rhs[i] - upper) / diag[i];
            }
        }
        Ok(Self { x, y, second })
    }

    /// Evaluate, clamping `s` to the tabulated range.
    pub fn eval(&self, s: f64) -> f64 {
        let n = self.x.len();
        let s = s.clamp(self.x[0], self.x[n - 1]);
        let i = match self.x.partition_point(|&k| k <= s) {
            0 => 0,
            p => (p - 1).min(n - 2),
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - s) / h;
        let b = (s - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h / 6.0
    }
}

pub fn tabulated(s: Vec<f64>, values: Vec<f64>) -> Result<Sampler<f64>> {
    let spline = CubicSpline::new(s, values)?;
    Ok(Arc::new(move |t| spline.eval(t)))
}

//! Monotone piecewise-cubic Hermite interpolation (Fritsch–Carlson slopes).

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::MalformedTable("x and y have different lengths".into()));
        }
        if x.len() < 2 {
            return Err(Error::MalformedTable("need at least two samples".into()));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::MalformedTable("non-finite sample".into()));
        }
        if let Some(w) = x.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::MalformedTable(format!(
                "x must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        let d = slopes(&x, &y);
        Ok(Self { x, y, d })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn lo(&self) -> f64 {
        self.x[0]
    }

    pub fn hi(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.partition_point(|&xk| xk <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    /// Value and first two derivatives at `t`. Outside the knots the end cubic is extended.
    pub fn eval3(&self, t: f64) -> (f64, f64, f64) {
        let k = self.segment(t);
        let h = self.x[k + 1] - self.x[k];
        let delta = (self.y[k + 1] - self.y[k]) / h;
        let (d0, d1) = (self.d[k], self.d[k + 1]);
        let c2 = (3.0 * delta - 2.0 * d0 - d1) / h;
        let c3 = (d0 + d1 - 2.0 * delta) / (h * h);
        let s = t - self.x[k];
        let v = self.y[k] + s * (d0 + s * (c2 + s * c3));
        let dv = d0 + s * (2.0 * c2 + 3.0 * s * c3);
        let d2v = 2.0 * c2 + 6.0 * s * c3;
        (v, dv, d2v)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval3(t).0
    }
}

fn slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0], delta[0]];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (dl, dr) = (delta[k - 1], delta[k]);
        if dl * dr > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / dl + w2 / dr);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

// One-sided three-point slope, clipped to keep the end segment monotone.
fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

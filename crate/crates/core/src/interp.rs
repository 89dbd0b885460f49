//! Monotone cubic Hermite interpolation (Fritsch–Carlson slope limiting).

use crate::error::{Error, Result};

/// Piecewise cubic Hermite interpolant on strictly increasing knots.
///
/// When the data are monotone the slopes are limited so that every cubic piece is
/// monotone as well, which makes [`MonotoneCubic::invert`] well defined.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// Interpolant with slopes estimated from the data (three-point averages).
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        check_knots(&xs, &ys)?;
        let n = xs.len();
        let secants: Vec<f64> = (0..n - 1)
            .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
            .collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            slopes[i] = if secants[i - 1] * secants[i] <= 0.0 {
                0.0
            } else {
                // weighted harmonic mean (Fritsch–Butland)
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let w0 = 2.0 * h1 + h0;
                let w1 = h1 + 2.0 * h0;
                (w0 + w1) / (w0 / secants[i - 1] + w1 / secants[i])
            };
        }
        Ok(Self::limited(xs, ys, slopes, &secants))
    }

    /// Interpolant using caller-supplied slopes (typically exact derivatives),
    /// limited only where they would break monotonicity of a piece.
    pub fn with_slopes(xs: Vec<f64>, ys: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        check_knots(&xs, &ys)?;
        if slopes.len() != xs.len() || slopes.iter().any(|s| !s.is_finite()) {
            return Err(Error::Parameter(
                "slopes must be finite and match the knots".into(),
            ));
        }
        let secants: Vec<f64> = (0..xs.len() - 1)
            .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
            .collect();
        Ok(Self::limited(xs, ys, slopes, &secants))
    }

    fn limited(xs: Vec<f64>, ys: Vec<f64>, mut slopes: Vec<f64>, secants: &[f64]) -> Self {
        for (i, &delta) in secants.iter().enumerate() {
            if delta == 0.0 {
                slopes[i] = 0.0;
                slopes[i + 1] = 0.0;
                continue;
            }
            if slopes[i] * delta < 0.0 {
                slopes[i] = 0.0;
            }
            if slopes[i + 1] * delta < 0.0 {
                slopes[i + 1] = 0.0;
            }
            let a = slopes[i] / delta;
            let b = slopes[i + 1] / delta;
            let r2 = a * a + b * b;
            if r2 > 9.0 {
                let t = 3.0 / r2.sqrt();
                slopes[i] = t * a * delta;
                slopes[i + 1] = t * b * delta;
            }
        }
        Self { xs, ys, slopes }
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    fn interval(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        }
    }

    fn piece(&self, i: usize, x: f64) -> (f64, f64) {
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let value = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let deriv = ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1)
            / h;
        (value, deriv)
    }

    /// Value at `x`; extrapolation is an error.
    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.eval_with_deriv(x)?.0)
    }

    pub fn eval_with_deriv(&self, x: f64) -> Result<(f64, f64)> {
        if !(x >= self.x_min() && x <= self.x_max()) {
            return Err(Error::Domain {
                what: "interpolation abscissa",
                value: x,
                lo: self.x_min(),
                hi: self.x_max(),
            });
        }
        Ok(self.piece(self.interval(x), x))
    }

    /// Solves `eval(x) = y` for increasing data.
    pub fn invert(&self, y: f64) -> Result<f64> {
        let n = self.ys.len();
        let (lo, hi) = (self.ys[0], self.ys[n - 1]);
        if !(y >= lo && y <= hi) {
            return Err(Error::Domain {
                what: "interpolated value",
                value: y,
                lo,
                hi,
            });
        }
        if y == lo {
            return Ok(self.xs[0]);
        }
        if y == hi {
            return Ok(self.xs[n - 1]);
        }
        let i = match self.ys.partition_point(|&v| v <= y) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        // safeguarded Newton on the monotone piece
        let (mut a, mut b) = (self.xs[i], self.xs[i + 1]);
        let mut x = a + (b - a) * (y - self.ys[i]) / (self.ys[i + 1] - self.ys[i]);
        for _ in 0..100 {
            let (v, d) = self.piece(i, x);
            let r = v - y;
            if r == 0.0 {
                return Ok(x);
            }
            if r < 0.0 {
                a = x;
            } else {
                b = x;
            }
            let newton = x - r / d;
            let next = if d > 0.0 && newton > a && newton < b {
                newton
            } else {
                0.5 * (a + b)
            };
            if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }
}

fn check_knots(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return Err(Error::Parameter(
            "interpolation needs at least two knots and matching values".into(),
        ));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Parameter("knots must be strictly increasing".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Parameter("knots and values must be finite".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_cubics_with_exact_slopes() {
        let xs: Vec<f64> = (0..9).map(|i| i as f64 * 0.25).collect();
        let f = |x: f64| x * x * x + x;
        let df = |x: f64| 3.0 * x * x + 1.0;
        let ys = xs.iter().map(|&x| f(x)).collect();
        let ss = xs.iter().map(|&x| df(x)).collect();
        let p = MonotoneCubic::with_slopes(xs, ys, ss).unwrap();
        for k in 0..40 {
            let x = k as f64 * 0.05;
            assert!((p.eval(x).unwrap() - f(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn no_extrapolation() {
        let p = MonotoneCubic::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 4.0]).unwrap();
        assert!(p.eval(2.0 + 1e-9).is_err());
        assert!(p.eval(-1e-9).is_err());
        assert!(p.invert(5.0).is_err());
    }

    #[test]
    fn rejects_unsorted_knots() {
        assert!(MonotoneCubic::new(vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn monotone_data_gives_monotone_invertible_interpolant(
            steps in prop::collection::vec((0.01f64..1.0, 0.0f64..2.0), 2..20),
            probe in 0.0f64..1.0,
        ) {
            let mut xs = vec![0.0];
            let mut ys = vec![0.0];
            for (dx, dy) in &steps {
                xs.push(xs.last().unwrap() + dx);
                ys.push(ys.last().unwrap() + dy + 1e-3);
            }
            let p = MonotoneCubic::new(xs.clone(), ys.clone()).unwrap();
            let x_end = *xs.last().unwrap();
            let mut prev = f64::NEG_INFINITY;
            for k in 0..=200 {
                let x = (x_end * k as f64 / 200.0).min(x_end);
                let v = p.eval(x).unwrap();
                prop_assert!(v >= prev - 1e-12);
                prev = v;
            }
            let y = ys[0] + probe * (ys[ys.len() - 1] - ys[0]);
            let x = p.invert(y).unwrap();
            prop_assert!((p.eval(x).unwrap() - y).abs() <= 1e-10 * (1.0 + y.abs()));
        }
    }
}

//! Quadrature and scalar root-finding kernels.
//!
//! Integration uses the tanh-sinh (double exponential) rule with level halving of the
//! step size. Integrands may ask for the exact offset `x - lo` of every abscissa, which
//! lets callers evaluate differences such as `g(x) - g(lo)` without cancellation near
//! an endpoint singularity.
//!
//! Root-finding is Brent's method (inverse quadratic interpolation, secant, and a
//! bisection fallback), so the iterate never leaves the initial bracket.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use std::f64::consts::FRAC_PI_2;

/// Largest `t` used by the tanh-sinh transform; beyond this the endpoint offsets
/// underflow relative to the interval length.
const T_MAX: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_levels: u32,
    /// The integrand may blow up like `(x - lo)^(-1/2)` at the lower endpoint.
    pub singular_lo: bool,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_levels: 12,
            singular_lo: false,
        }
    }
}

impl QuadratureConfig {
    pub fn singular(self) -> Self {
        Self {
            singular_lo: true,
            ..self
        }
    }

    pub fn regular(self) -> Self {
        Self {
            singular_lo: false,
            ..self
        }
    }

    pub fn with_tolerances(self, rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Config(format!(
                "quadrature tolerances must be positive (rel {}, abs {})",
                self.rel_tol, self.abs_tol
            )));
        }
        if self.max_levels < 4 {
            return Err(Error::Config(format!(
                "max_levels must be at least 4, got {}",
                self.max_levels
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootConfig {
    pub x_tol: f64,
    pub f_tol: f64,
    pub max_iter: u32,
}

impl Default for RootConfig {
    fn default() -> Self {
        Self {
            x_tol: 1e-12,
            f_tol: 1e-12,
            max_iter: 200,
        }
    }
}

/// `∫_lo^hi f(x) dx`, returning `(value, error estimate)`.
pub fn integrate<F>(mut f: F, lo: f64, hi: f64, cfg: &QuadratureConfig) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    integrate_with_offset(|x, _| f(x), lo, hi, cfg)
}

/// Like [`integrate`], but the integrand receives `(x, x - lo)` with the offset
/// computed directly from the node construction rather than by subtraction.
///
/// With `singular_lo` the substitution `x = lo + (hi - lo) v²` is applied first, which
/// turns an inverse square-root singularity at `lo` into a bounded integrand; the
/// double exponential clustering then takes care of whatever endpoint behaviour is
/// left.
pub fn integrate_with_offset<F>(
    mut f: F,
    lo: f64,
    hi: f64,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64)>
where
    F: FnMut(f64, f64) -> f64,
{
    cfg.validate()?;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Parameter(format!(
            "integration limits must satisfy lo < hi and be finite, got [{lo}, {hi}]"
        )));
    }
    if cfg.singular_lo {
        let len = hi - lo;
        tanh_sinh(
            |v, dv| {
                let d = len * dv * dv;
                if d == 0.0 {
                    // underflow: the transformed integrand is bounded and its weight negligible
                    return 0.0;
                }
                let x = if v < 1.0 { lo + d } else { hi };
                2.0 * len * dv * f(x, d)
            },
            0.0,
            1.0,
            cfg,
        )
    } else {
        tanh_sinh(f, lo, hi, cfg)
    }
}

fn tanh_sinh<F>(mut f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<(f64, f64)>
where
    F: FnMut(f64, f64) -> f64,
{
    let half = 0.5 * (b - a);
    let mid = a + half;

    let mut eval = |x: f64, offset: f64| -> Result<f64> {
        let y = f(x, offset);
        if y.is_finite() {
            Ok(y)
        } else if x <= a || x >= b {
            // abscissa rounded onto an endpoint; its weight is below machine precision
            Ok(0.0)
        } else {
            Err(Error::Evaluation { x })
        }
    };

    let centre = eval(mid, half)?;
    // contribution of the symmetric pair of nodes at ±t
    let mut pair = |t: f64| -> Result<f64> {
        let u = FRAC_PI_2 * t.sinh();
        let e = (-2.0 * u).exp();
        // 1 - tanh(u) and the weight, both written to avoid overflow
        let comp = 2.0 * e / (1.0 + e);
        let w = FRAC_PI_2 * t.cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e));
        if w == 0.0 || comp == 0.0 {
            return Ok(0.0);
        }
        let d = half * comp;
        let left = eval(a + d, d)?;
        let right = eval(b - d, (b - a) - d)?;
        Ok(w * (left + right))
    };

    let mut sum = FRAC_PI_2 * centre;
    let mut k = 1.0;
    while k <= T_MAX {
        sum += pair(k)?;
        k += 1.0;
    }
    let mut h = 1.0;
    let mut prev = h * half * sum;
    let mut err = f64::INFINITY;

    for level in 1..=cfg.max_levels {
        h *= 0.5;
        let mut t = h;
        while t <= T_MAX {
            sum += pair(t)?;
            t += 2.0 * h;
        }
        let current = h * half * sum;
        err = (current - prev).abs();
        if level >= 3 && err <= (cfg.rel_tol * current.abs()).max(cfg.abs_tol) {
            return Ok((current, err));
        }
        prev = current;
    }
    Err(Error::Accuracy {
        what: "tanh-sinh quadrature",
        estimate: prev,
        err,
    })
}

/// Brent's method on a sign-changing bracket.
pub fn find_root<F>(mut f: F, bracket: (f64, f64), cfg: &RootConfig) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = bracket;
    let mut fa = f(a);
    let mut fb = f(b);
    if !fa.is_finite() {
        return Err(Error::Evaluation { x: a });
    }
    if !fb.is_finite() {
        return Err(Error::Evaluation { x: b });
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket {
            lo: a,
            hi: b,
            f_lo: fa,
            f_hi: fb,
            hint: "",
        });
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..cfg.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * cfg.x_tol;
        let m = 0.5 * (c - b);
        if fb.abs() <= cfg.f_tol || m.abs() <= tol {
            return Ok(b);
        }

        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }

        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(Error::Evaluation { x: b });
        }
    }
    Err(Error::Accuracy {
        what: "Brent root search",
        estimate: b,
        err: (c - b).abs(),
    })
}

/// Walks upward from `lo` with a doubling offset until `f` changes sign, returning a
/// bracket `(last point with the sign of f(lo), first point with the opposite sign)`.
pub fn expand_bracket_up<F>(mut f: F, lo: f64, initial_step: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let f_lo = f(lo);
    if !f_lo.is_finite() {
        return Err(Error::Evaluation { x: lo });
    }
    if f_lo == 0.0 {
        return Ok((lo, lo));
    }
    let step0 = if initial_step > 0.0 { initial_step } else { 1.0 };
    let cap = step0 * 2f64.powi(60);
    let mut last = lo;
    let mut offset = step0;
    while offset <= cap {
        let x = lo + offset;
        let fx = f(x);
        if !fx.is_finite() {
            return Err(Error::Evaluation { x });
        }
        if fx == 0.0 || fx.signum() != f_lo.signum() {
            return Ok((last, x));
        }
        last = x;
        offset *= 2.0;
    }
    Err(Error::UnboundedRoot { start: lo })
}

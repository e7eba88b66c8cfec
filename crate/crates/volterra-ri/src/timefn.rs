use std::fmt;
use std::sync::Arc;

/// Bounded deterministic coefficient function of time (interest rate, drift,
/// volatility, baseline mortality shift).
///
/// Constant coefficients integrate exactly; custom callbacks integrate by
/// adaptive Simpson quadrature to ~1e-12 relative accuracy.
#[derive(Clone)]
pub enum TimeFn {
    Constant(f64),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl TimeFn {
    pub fn constant(v: f64) -> Self {
        TimeFn::Constant(v)
    }

    pub fn custom<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        TimeFn::Custom(Arc::new(f))
    }

    pub fn zero() -> Self {
        TimeFn::Constant(0.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeFn::Constant(v) => *v,
            TimeFn::Custom(f) => f(t),
        }
    }

    /// ∫_a^b f(u) du (signed; b < a flips the sign).
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            TimeFn::Constant(v) => v * (b - a),
            TimeFn::Custom(f) => {
                if a == b {
                    return 0.0;
                }
                let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
                sign * adaptive_simpson(f.as_ref(), lo, hi)
            }
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            TimeFn::Constant(v) => Some(*v),
            TimeFn::Custom(_) => None,
        }
    }
}

impl From<f64> for TimeFn {
    fn from(v: f64) -> Self {
        TimeFn::Constant(v)
    }
}

impl fmt::Debug for TimeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeFn::Constant(v) => write!(f, "TimeFn::Constant({v})"),
            TimeFn::Custom(_) => write!(f, "TimeFn::Custom(..)"),
        }
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        eps: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * eps, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * eps, depth - 1)
    }

    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    let eps = 1e-12 * (1.0 + whole.abs());
    recurse(f, a, fa, b, fb, whole, m, fm, eps, 40)
}

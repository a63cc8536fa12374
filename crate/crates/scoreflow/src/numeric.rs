//! Small numerical building blocks: finite differences, a safeguarded root
//! finder, and Gauss-Legendre nodes.

/// Central finite difference with an explicit step.
pub fn central_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Central difference with the standard cbrt(eps)-scaled step.
pub fn central_diff_auto<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    let h = f64::EPSILON.cbrt() * (1.0 + x.abs());
    central_diff(f, x, h)
}

/// Fallible variant used where the function itself can error (pushforward
/// densities near the image boundary).
pub fn try_central_diff<F: Fn(f64) -> crate::Result<f64>>(
    f: F,
    x: f64,
    h: f64,
) -> crate::Result<f64> {
    Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
}

/// Newton iteration safeguarded by bisection on a bracketing interval.
///
/// `f` must be continuous with f(lo) and f(hi) of opposite sign (or zero);
/// `df` is its derivative. Converges to |f| <= f_tol or an x-step below
/// x_tol * (1 + |x|).
pub fn newton_bisect<F, D>(f: F, df: D, mut lo: f64, mut hi: f64, f_tol: f64, x_tol: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let flo = f(lo);
    let fhi = f(hi);
    debug_assert!(
        flo <= 0.0 && fhi >= 0.0 || flo >= 0.0 && fhi <= 0.0,
        "root not bracketed: f({lo})={flo}, f({hi})={fhi}"
    );
    if flo > 0.0 {
        std::mem::swap(&mut lo, &mut hi);
    }
    // invariant: f(lo) <= 0 <= f(hi)
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx.abs() <= f_tol {
            return x;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = df(x);
        let newton = x - fx / d;
        // keep Newton only while it stays inside the bracket
        let inside = if lo < hi {
            newton > lo.min(hi) && newton < lo.max(hi)
        } else {
            newton > hi.min(lo) && newton < hi.max(lo)
        };
        let next = if d != 0.0 && newton.is_finite() && inside {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= x_tol * (1.0 + x.abs()) {
            return next;
        }
        x = next;
    }
    x
    // falls through only for pathological inputs; callers validate after
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
///
/// Roots of P_n by Newton iteration on the three-term recurrence; accuracy is
/// at working precision for the orders used here (n <= 64 per panel).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_n(x) and P_n'(x)
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

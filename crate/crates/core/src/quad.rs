//! Adaptive Simpson quadrature.
//!
//! Used for the few quantities that have no closed form: the variational
//! diagnostics on disclosure intervals and the complete-disclosure profit
//! benchmark. Everything on the quantile side of the library integrates in
//! closed form instead.

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Standard recursive adaptive Simpson with the 1/15 Richardson correction.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    adapt(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Integrate `f` over `[a, b]`, forcing subdivision at the interior points
/// in `breaks` (kinks, density jumps, exclusion roots).
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> f64 {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let mut lo = a;
    let mut total = 0.0;
    for c in cuts {
        total += integrate(f, lo, c, tol);
        lo = c;
    }
    total + integrate(f, lo, b, tol)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let err = left + right - whole;
    if depth == 0 || err.abs() <= 15.0 * tol {
        return left + right + err / 15.0;
    }
    adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let val = integrate(&|x: f64| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12);
        assert!((val - (4.0 - 4.0 + 2.0)).abs() < 1e-12);
    }

    #[test]
    fn sqrt_integral() {
        let val = integrate(&|x: f64| x.sqrt(), 0.0, 1.0, 1e-12);
        assert!((val - 2.0 / 3.0).abs() < 1e-10, "got {val}");
    }

    #[test]
    fn kink_with_breakpoint() {
        // int_0^1 |x - 0.3| dx = 0.3^2/2 + 0.7^2/2
        let val = integrate_with_breaks(&|x: f64| (x - 0.3).abs(), 0.0, 1.0, &[0.3], 1e-12);
        assert!((val - (0.045 + 0.245)).abs() < 1e-12);
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(integrate(&|x: f64| x.exp(), 0.7, 0.7, 1e-12), 0.0);
    }
}

//! Univariate minimisation by golden section search with successive
//! parabolic interpolation (Brent's `fmin`).

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub fx: f64,
    pub evaluations: usize,
}

const GOLDEN: f64 = 0.381_966_011_250_105_1; // (3 - sqrt 5) / 2
const MAX_ITER: usize = 500;

/// Minimises `f` on `[a, b]` to absolute tolerance `tol` in `x`.
///
/// Converges to a local minimum; for a unimodal `f` it is the global one.
pub fn brent_minimize<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Minimum {
    let (mut a, mut b) = if a <= b { (a, b) } else { (b, a) };
    let eps = f64::EPSILON.sqrt();
    let mut x = a + GOLDEN * (b - a);
    let mut w = x;
    let mut v = x;
    let mut fx = f(x);
    let mut fw = fx;
    let mut fv = fx;
    let mut evaluations = 1;
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    for _ in 0..MAX_ITER {
        let m = 0.5 * (a + b);
        let tol1 = eps * x.abs() + tol / 3.0;
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            // trial parabola through x, w, v
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            } else {
                q = -q;
            }
            let e_prev = e;
            e = d;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = f(u);
        evaluations += 1;
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Minimum { x, fx, evaluations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let m = brent_minimize(|x| (x - 1.3).powi(2) + 2.0, -10.0, 10.0, 1e-10);
        assert!((m.x - 1.3).abs() < 1e-8);
        assert!((m.fx - 2.0).abs() < 1e-15);
    }

    #[test]
    fn non_smooth_and_boundary() {
        let m = brent_minimize(|x: f64| (x - 0.25).abs(), 0.0, 1.0, 1e-10);
        assert!((m.x - 0.25).abs() < 1e-8);
        // monotone: converges to the right end
        let m = brent_minimize(|x| -x, 0.0, 2.0, 1e-10);
        assert!((m.x - 2.0).abs() < 1e-7, "{m:?}");
    }

    #[test]
    fn log_cosh_like() {
        let m = brent_minimize(|x: f64| x.exp() - 3.0 * x, -5.0, 5.0, 1e-12);
        // accuracy is sqrt(eps) * abs(x) + tol / 3
        assert!((m.x - 3f64.ln()).abs() < 5e-8, "{m:?}");
    }
}

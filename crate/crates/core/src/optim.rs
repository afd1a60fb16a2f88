//! One-dimensional minimization helpers.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a minimum of `f` on `[a, b]`, assuming the
/// function is unimodal there. Stops when the bracket is narrower than `tol`.
pub fn golden_section_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        c
    } else {
        d
    }
}

/// Evaluates `f` on `samples + 1` evenly spaced points of `[a, b]`, then
/// polishes the best one by golden-section search within its neighbours.
/// The first of equal minima wins.
pub fn scan_then_refine<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, samples: usize, tol: f64) -> f64 {
    let step = (b - a) / samples as f64;
    let mut best = (a, f(a));
    for i in 1..=samples {
        let x = a + i as f64 * step;
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    let lo = (best.0 - step).max(a);
    let hi = (best.0 + step).min(b);
    let x = golden_section_min(&mut f, lo, hi, tol);
    if f(x) <= best.1 {
        x
    } else {
        best.0
    }
}

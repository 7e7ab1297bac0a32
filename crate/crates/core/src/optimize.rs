//! Bounded maximization of concave scalar functions.

/// Interval width at which [`golden_section_max`] stops by default.
pub const INTERVAL_TOLERANCE: f64 = 1e-9;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMax {
    pub arg: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Golden-section search for the maximum of `f` on `[lo, hi]`.
///
/// `f` must be unimodal on the interval. After the bracket shrinks below
/// `tol` the interior estimate is compared against both endpoints and the
/// best of the three wins, so maximizers that sit on the boundary come back
/// exactly on the boundary.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> ScalarMax
where
    F: FnMut(f64) -> f64,
{
    assert!(lo <= hi, "empty interval [{lo}, {hi}]");
    assert!(tol > 0.0);
    let f_lo = f(lo);
    if hi - lo <= tol {
        return ScalarMax {
            arg: lo,
            value: f_lo,
            evaluations: 1,
        };
    }
    let f_hi = f(hi);
    let mut evaluations = 2;

    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    evaluations += 2;
    while b - a > tol {
        if fc >= fd {
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
        evaluations += 1;
    }
    let (mut arg, mut value) = if fc >= fd { (c, fc) } else { (d, fd) };
    if f_lo >= value {
        arg = lo;
        value = f_lo;
    }
    if f_hi > value {
        arg = hi;
        value = f_hi;
    }
    ScalarMax {
        arg,
        value,
        evaluations,
    }
}

//! Small shared numeric helpers.

/// Golden-section minimization of a unimodal function on `[a, b]`.
/// Returns `(argmin, min)` once the bracket is below `tol`.
pub fn golden_min(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        if fc < fd {
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
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_minimum() {
        let (x, v) = golden_min(|x| (x - 1.25) * (x - 1.25) + 3.0, -4.0, 4.0, 1e-12);
        assert!((x - 1.25).abs() < 1e-10);
        assert!((v - 3.0).abs() < 1e-15);
    }

    #[test]
    fn respects_bracket_ends() {
        let (x, _) = golden_min(|x| x, 2.0, 5.0, 1e-12);
        assert!((x - 2.0).abs() < 1e-9);
    }
}

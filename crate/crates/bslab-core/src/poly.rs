//! Polynomial roots and scalar root bracketing.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::Error;

/// Evaluates `sum c[i] z^i` (coefficients in ascending order).
pub fn eval(c: &[f64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

fn eval_deriv(c: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, &a) in c.iter().enumerate().skip(1).rev() {
        acc = acc * z + a * i as f64;
    }
    acc
}

/// Roots of the polynomial with ascending coefficients `c` via the eigenvalues
/// of its companion matrix, each followed by one Newton step. Leading zero
/// coefficients are dropped.
pub fn roots(c: &[f64]) -> Vec<Complex64> {
    let mut deg = c.len().saturating_sub(1);
    while deg > 0 && c[deg] == 0.0 {
        deg -= 1;
    }
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let mut m = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        m[(i, deg - 1)] = -c[i] / lead;
    }
    let ev = m.complex_eigenvalues();
    let cc = &c[..=deg];
    ev.iter()
        .map(|&z| {
            let d = eval_deriv(cc, z);
            if d.norm() > 1e-300 {
                let step = eval(cc, z) / d;
                let polished = z - step;
                if eval(cc, polished).norm() <= eval(cc, z).norm() {
                    return polished;
                }
            }
            z
        })
        .collect()
}

/// Roots of the monic cubic `x^3 + a1 x^2 + a2 x + a3`.
pub fn cubic_roots(a1: f64, a2: f64, a3: f64) -> [Complex64; 3] {
    let r = roots(&[a3, a2, a1, 1.0]);
    [r[0], r[1], r[2]]
}

/// Bracketed root of `f` on `[a, b]` by bisection to machine precision.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> Result<f64, Error> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::NoRoot(format!("no sign change on [{a}, {b}]")));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_with_known_roots() {
        // (x - 1)(x + 2)(x - 3) = x^3 - 2x^2 - 5x + 6
        let mut r: Vec<f64> = cubic_roots(-2.0, -5.0, 6.0).iter().map(|z| z.re).collect();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in r.iter().zip([-2.0, 1.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn triple_root_is_found() {
        // (x + 1)^3
        for z in cubic_roots(3.0, 3.0, 1.0) {
            assert!((z + 1.0).norm() < 1e-4);
        }
    }

    #[test]
    fn bisection_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
        assert!(bisect(|x| x * x + 1.0, 0.0, 1.0).is_err());
    }
}

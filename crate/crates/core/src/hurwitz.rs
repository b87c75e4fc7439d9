//! Hurwitz zeta by Euler-Maclaurin summation. Substrate for every L-value
//! in the crate: L(s, chi) = q^{-s} sum_a chi(a) zeta(s, a/q).

use num_complex::Complex64;

use crate::error::{Error, Result};

/// B_{2k} / (2k)! for k = 1..=12.
const EM_COEFF: [f64; 12] = [
    8.3333333333333333e-2,
    -1.3888888888888889e-3,
    3.3068783068783069e-5,
    -8.2671957671957672e-7,
    2.0876756987868099e-8,
    -5.2841901386874932e-10,
    1.3382536530684679e-11,
    -3.3896802963225829e-13,
    8.5860620562778446e-15,
    -2.1748686985580619e-16,
    5.5090028283602295e-18,
    -1.3954464685812522e-19,
];

/// zeta(s, x) = sum_{n >= 0} (x + n)^{-s} for x > 0, s != 1, continued in s.
pub fn hurwitz_zeta(s: Complex64, x: f64) -> Result<Complex64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("hurwitz_zeta: x = {x} must be > 0")));
    }
    if (s - Complex64::new(1.0, 0.0)).norm() < 1e-14 {
        return Err(Error::pole("hurwitz_zeta pole at s = 1"));
    }
    // Push the tail start far enough out that the asymptotic terms decay.
    let reach = 16.0_f64.max(0.9 * s.im.abs() + 8.0).max(0.6 * s.norm() + 8.0);
    let n_terms = if x >= reach {
        0
    } else {
        (reach - x).ceil() as usize
    };
    let mut head = Complex64::new(0.0, 0.0);
    for n in 0..n_terms {
        head += cpow_real(x + n as f64, -s);
    }
    let a = x + n_terms as f64;
    let mut tail = cpow_real(a, Complex64::new(1.0, 0.0) - s) / (s - 1.0)
        + 0.5 * cpow_real(a, -s);
    // Euler-Maclaurin correction: sum_k C_{2k} (s)_{2k-1} a^{-s-2k+1}.
    let mut poch = s; // rising factorial, one factor so far
    let mut apow = cpow_real(a, -s - 1.0);
    let mut j = 1.0;
    for c in EM_COEFF {
        tail += c * poch * apow;
        poch *= (s + j) * (s + j + 1.0);
        j += 2.0;
        apow /= a * a;
    }
    Ok(head + tail)
}

/// zeta(s) as the x = 1 case.
pub fn riemann_zeta(s: Complex64) -> Result<Complex64> {
    hurwitz_zeta(s, 1.0)
}

/// x^w for real x > 0.
pub fn cpow_real(x: f64, w: Complex64) -> Complex64 {
    (w * x.ln()).exp()
}

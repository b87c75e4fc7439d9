//! Predicted main terms and the empirical moments they predict: zeta_q, the
//! Y and Z factors, the six-term combination M_{h,k}, the mollified main
//! term, direct character-sum moments, and a circle-mean extractor for the
//! shift -> 0 limit.

use num_complex::Complex64;

use crate::arith::{divisors, factorize, gcd, int_pow_complex, mobius, phi_star};
use crate::characters::{build_group, CharacterGroup, DirichletCharacter};
use crate::error::{Error, Result};
use crate::hurwitz::riemann_zeta;
use crate::lcentral::{
    hurwitz_vector, l_from_vector, x_factor_all, x_factor_pair, ShiftTuple, ETA_CAP_DEFAULT,
};

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// zeta(s) with the Euler factors at primes dividing q removed.
pub fn zeta_q(s: Complex64, q: u64) -> Result<Complex64> {
    let mut acc = riemann_zeta(s)?;
    for p in factorize(q)?.primes() {
        acc *= ONE - int_pow_complex(p, -s);
    }
    Ok(acc)
}

/// Y_a(alpha,beta,gamma,delta) = a^{-gamma} sum_{d|a} d^{gamma-delta}
/// prod_{p|d} (1 - p^{-1-alpha-gamma})(1 - p^{-1-beta-gamma})
///            (1 - p^{-2-alpha-beta-gamma-delta})^{-1}.
pub fn y_factor(
    a: u64,
    alpha: Complex64,
    beta: Complex64,
    gamma: Complex64,
    delta: Complex64,
) -> Result<Complex64> {
    let gd = gamma - delta;
    let mut acc = c64(0.0, 0.0);
    for d in divisors(a) {
        let mut local = int_pow_complex(d, gd);
        for p in factorize(d)?.primes() {
            let e1 = ONE - int_pow_complex(p, -(ONE + alpha + gamma));
            let e2 = ONE - int_pow_complex(p, -(ONE + beta + gamma));
            let e3 = ONE - int_pow_complex(p, -(c64(2.0, 0.0) + alpha + beta + gamma + delta));
            if e3.norm() < 1e-12 {
                return Err(Error::pole(format!(
                    "y_factor: local factor pole at p = {p} (2+sum of shifts = 0)"
                )));
            }
            local *= e1 * e2 / e3;
        }
        acc += local;
    }
    Ok(int_pow_complex(a, -gamma) * acc)
}

/// Z_q(alpha,beta,gamma,delta): the five-zeta quotient.
pub fn z_q_factor(shifts: &ShiftTuple, q: u64) -> Result<Complex64> {
    let ShiftTuple {
        alpha,
        beta,
        gamma,
        delta,
    } = *shifts;
    let num = zeta_q(ONE + alpha + gamma, q)?
        * zeta_q(ONE + alpha + delta, q)?
        * zeta_q(ONE + beta + gamma, q)?
        * zeta_q(ONE + beta + delta, q)?;
    let den = zeta_q(c64(2.0, 0.0) + alpha + beta + gamma + delta, q)?;
    Ok(num / den)
}

/// Z_{h,k,q} = Y_h(a,b,g,d) Y_k(g,d,a,b) Z_q(a,b,g,d).
pub fn z_hkq(h: u64, k: u64, q: u64, shifts: &ShiftTuple) -> Result<Complex64> {
    let ShiftTuple {
        alpha,
        beta,
        gamma,
        delta,
    } = *shifts;
    if shifts.pole_distance() < 1e-9 {
        return Err(Error::pole("z_hkq: a zeta-pole combination vanishes"));
    }
    let yh = y_factor(h, alpha, beta, gamma, delta)?;
    let yk = y_factor(k, gamma, delta, alpha, beta)?;
    Ok(yh * yk * z_q_factor(shifts, q)?)
}

/// The six-term main term M_{h,k}(alpha,beta,gamma,delta):
///   Z_{h,k,q}(a,b,g,d) + X_{a,b,g,d} Z_{h,k,q}(-g,-d,-a,-b)
///   + X_{a,g} Z(b,-g,d,-a) + X_{b,g} Z(a,-g,d,-b)
///   + X_{a,d} Z(b,-d,g,-a) + X_{b,d} Z(a,-d,g,-b).
pub fn main_term_m(h: u64, k: u64, q: u64, shifts: &ShiftTuple) -> Result<Complex64> {
    let ShiftTuple {
        alpha,
        beta,
        gamma,
        delta,
    } = *shifts;
    let t1 = z_hkq(h, k, q, shifts)?;
    let t2 = x_factor_all(shifts, q)?
        * z_hkq(h, k, q, &ShiftTuple::new(-gamma, -delta, -alpha, -beta))?;
    let t3 = x_factor_pair(alpha, gamma, q)?
        * z_hkq(h, k, q, &ShiftTuple::new(beta, -gamma, delta, -alpha))?;
    let t4 = x_factor_pair(beta, gamma, q)?
        * z_hkq(h, k, q, &ShiftTuple::new(alpha, -gamma, delta, -beta))?;
    let t5 = x_factor_pair(alpha, delta, q)?
        * z_hkq(h, k, q, &ShiftTuple::new(beta, -delta, gamma, -alpha))?;
    let t6 = x_factor_pair(beta, delta, q)?
        * z_hkq(h, k, q, &ShiftTuple::new(alpha, -delta, gamma, -beta))?;
    Ok(t1 + t2 + t3 + t4 + t5 + t6)
}

/// Predicted twisted moment (hk)^{-1/2} M_{h,k}.
pub fn predicted_twisted(h: u64, k: u64, q: u64, shifts: &ShiftTuple) -> Result<Complex64> {
    Ok(main_term_m(h, k, q, shifts)? / ((h * k) as f64).sqrt())
}

// ---------------------------------------------------------------------------
// Shift -> 0 limit
// ---------------------------------------------------------------------------

/// Circle-mean extraction of f(0) for f analytic on |t| <= rho:
/// (1/M) sum_j f(rho e^{2 pi i j / M}), error O((rho Omega)^M / M!) for
/// entire-type f with frequency Omega. Errors when doubling M moves the
/// answer by more than tol.
pub fn shift_zero_limit(
    f: impl Fn(Complex64) -> Result<Complex64>,
    rho: f64,
    nodes: usize,
    tol: f64,
) -> Result<Complex64> {
    let coarse = circle_mean(&f, rho, nodes)?;
    let fine = circle_mean(&f, rho, 2 * nodes)?;
    let err = (coarse - fine).norm();
    if err > tol * fine.norm().max(1.0) {
        return Err(Error::Convergence {
            what: "shift_zero_limit".into(),
            achieved: err,
            wanted: tol,
        });
    }
    Ok(fine)
}

/// The circle mean alone, plus its stability estimate against doubling.
pub fn shift_zero_limit_with_err(
    f: impl Fn(Complex64) -> Result<Complex64>,
    rho: f64,
    nodes: usize,
) -> Result<(Complex64, f64)> {
    let coarse = circle_mean(&f, rho, nodes)?;
    let fine = circle_mean(&f, rho, 2 * nodes)?;
    Ok((fine, (coarse - fine).norm()))
}

fn circle_mean(
    f: &impl Fn(Complex64) -> Result<Complex64>,
    rho: f64,
    nodes: usize,
) -> Result<Complex64> {
    let mut acc = c64(0.0, 0.0);
    for j in 0..nodes {
        let ang = 2.0 * std::f64::consts::PI * j as f64 / nodes as f64;
        let t = rho * c64(ang.cos(), ang.sin());
        acc += f(t)?;
    }
    Ok(acc / nodes as f64)
}

/// Default circle radius and node count for the zero-shift limit. The
/// dominant frequency of M_{h,k} along the generic direction is about
/// 10 ln(q/pi) from the X factor, so the node count grows slowly with q.
pub fn zero_limit_defaults(q: u64) -> (f64, usize) {
    let omega = 10.0 * ((q as f64).max(3.0) / std::f64::consts::PI).ln();
    let rho = 0.02f64.min(0.5 * ETA_CAP_DEFAULT / (q as f64).ln().max(1.0));
    // (rho omega)^M / M! <= 1e-9
    let x = rho * omega;
    let mut m = 8usize;
    let mut term = x.powi(8) / 40320.0;
    while term > 1e-9 && m < 64 {
        m += 1;
        term *= x / m as f64;
    }
    (rho, m.max(8))
}

// ---------------------------------------------------------------------------
// Empirical moments
// ---------------------------------------------------------------------------

/// A twisted-moment query; coprimality (h,k) = (hk,q) = 1 is enforced.
#[derive(Debug, Clone)]
pub struct MomentQuery {
    pub q: u64,
    pub h: u64,
    pub k: u64,
    pub shifts: ShiftTuple,
}

impl MomentQuery {
    pub fn new(q: u64, h: u64, k: u64, shifts: ShiftTuple) -> Result<Self> {
        if gcd(h, k) != 1 {
            return Err(Error::domain("moment query: (h,k) must be 1"));
        }
        if gcd(h * k, q) != 1 {
            return Err(Error::domain("moment query: (hk,q) must be 1"));
        }
        Ok(MomentQuery { q, h, k, shifts })
    }
}

/// Mollifier coefficient rules.
#[derive(Debug, Clone)]
pub enum MollifierRule {
    /// alpha_h = mu(h) (1 - log h / log y) on squarefree h.
    MobiusLog,
    /// Explicit coefficients for h = 1, 2, ..., truncated at y.
    Custom(Vec<Complex64>),
}

/// A realized mollifier: coefficients on h <= y with (h, q) = 1.
#[derive(Debug, Clone)]
pub struct MollifierSpec {
    pub y: f64,
    pub rule_name: String,
    pub coefficients: Vec<(u64, Complex64)>,
}

impl MollifierSpec {
    pub fn realize(y: f64, rule: &MollifierRule, q: u64) -> Result<Self> {
        if y < 1.0 {
            return Err(Error::domain("mollifier: y must be >= 1"));
        }
        let mut coefficients = Vec::new();
        let logy = y.ln();
        for h in 1..=(y.floor() as u64) {
            if gcd(h, q) != 1 {
                continue;
            }
            let coeff = match rule {
                MollifierRule::MobiusLog => {
                    let mu = mobius(h);
                    if mu == 0 {
                        continue;
                    }
                    let damp = if h == 1 {
                        1.0
                    } else {
                        1.0 - (h as f64).ln() / logy
                    };
                    c64(mu as f64 * damp, 0.0)
                }
                MollifierRule::Custom(v) => match v.get((h - 1) as usize) {
                    Some(&c) => c,
                    None => continue,
                },
            };
            if coeff != c64(0.0, 0.0) {
                coefficients.push((h, coeff));
            }
        }
        let rule_name = match rule {
            MollifierRule::MobiusLog => "mobius-log".to_string(),
            MollifierRule::Custom(_) => "custom".to_string(),
        };
        Ok(MollifierSpec {
            y,
            rule_name,
            coefficients,
        })
    }

    pub fn coefficient(&self, h: u64) -> Complex64 {
        self.coefficients
            .iter()
            .find(|&&(hh, _)| hh == h)
            .map(|&(_, c)| c)
            .unwrap_or(c64(0.0, 0.0))
    }
}

/// Precomputed character data for one modulus: the primitive even family
/// and their value vectors, shared across all moment evaluations.
pub struct MomentEngine {
    pub group: CharacterGroup,
    pub chars: Vec<DirichletCharacter>,
    vectors: Vec<Vec<Complex64>>,
}

impl MomentEngine {
    pub fn new(q: u64) -> Result<Self> {
        let group = build_group(q)?;
        let chars = group.enumerate_primitive_even();
        if chars.is_empty() {
            return Err(Error::domain(format!(
                "no primitive even characters mod {q}"
            )));
        }
        let vectors = crate::par::map_slice(&chars, |chi| group.value_vector(chi));
        Ok(MomentEngine {
            group,
            chars,
            vectors,
        })
    }

    pub fn q(&self) -> u64 {
        self.group.q
    }

    /// (2/phi*(q)) sum over primitive even chi of
    /// L(1/2+a,chi) L(1/2+b,chi) L(1/2+g,conj chi) L(1/2+d,conj chi) chi(h conj-k).
    pub fn empirical_twisted(&self, query: &MomentQuery) -> Result<Complex64> {
        let weights = vec![ONE; self.chars.len()];
        self.weighted_moment(&query.shifts, query.h, query.k, &weights)
    }

    /// Same with the |A(1/2,chi)|^2 mollifier weight instead of the twist.
    pub fn empirical_mollified(
        &self,
        mollifier: &MollifierSpec,
        shifts: &ShiftTuple,
    ) -> Result<Complex64> {
        let weights: Vec<Complex64> = self
            .vectors
            .iter()
            .map(|values| {
                let mut a = c64(0.0, 0.0);
                for &(h, coeff) in &mollifier.coefficients {
                    a += coeff * values[(h % self.q()) as usize] / (h as f64).sqrt();
                }
                c64(a.norm_sqr(), 0.0)
            })
            .collect();
        self.weighted_moment(shifts, 1, 1, &weights)
    }

    fn weighted_moment(
        &self,
        shifts: &ShiftTuple,
        h: u64,
        k: u64,
        weights: &[Complex64],
    ) -> Result<Complex64> {
        let q = self.q();
        let half = c64(0.5, 0.0);
        let zv_a = hurwitz_vector(half + shifts.alpha, q, 12)?;
        let zv_b = hurwitz_vector(half + shifts.beta, q, 12)?;
        let zv_g = hurwitz_vector(half + shifts.gamma, q, 12)?;
        let zv_d = hurwitz_vector(half + shifts.delta, q, 12)?;
        let terms = crate::par::map_indexed(self.chars.len(), |i| {
            let values = &self.vectors[i];
            let conj_values: Vec<Complex64> = values.iter().map(|v| v.conj()).collect();
            let l1 = l_from_vector(half + shifts.alpha, q, values, &zv_a);
            let l2 = l_from_vector(half + shifts.beta, q, values, &zv_b);
            let l3 = l_from_vector(half + shifts.gamma, q, &conj_values, &zv_g);
            let l4 = l_from_vector(half + shifts.delta, q, &conj_values, &zv_d);
            let twist = values[(h % q) as usize] * values[(k % q) as usize].conj();
            l1 * l2 * l3 * l4 * twist * weights[i]
        });
        let total = crate::par::sum_ordered(&terms);
        Ok(total * 2.0 / phi_star(q) as f64)
    }
}

/// Theorem-level mollified main term:
/// sum over a, h, k with ah <= y, ak <= y, (h,k) = 1, (ahk, q) = 1 of
/// alpha_{ah} conj(alpha_{ak}) / (a h k) * M_{h,k}(shifts).
pub fn mollified_main_term(
    q: u64,
    mollifier: &MollifierSpec,
    shifts: &ShiftTuple,
) -> Result<Complex64> {
    let y = mollifier.y.floor() as u64;
    let mut acc = c64(0.0, 0.0);
    for a in 1..=y {
        for h in 1..=y / a {
            for k in 1..=y / a {
                if gcd(h, k) != 1 || gcd(a * h * k, q) != 1 {
                    continue;
                }
                let ca = mollifier.coefficient(a * h);
                let cb = mollifier.coefficient(a * k);
                if ca == c64(0.0, 0.0) || cb == c64(0.0, 0.0) {
                    continue;
                }
                let m = main_term_m(h, k, q, shifts)?;
                acc += ca * cb.conj() / ((a * h * k) as f64) * m;
            }
        }
    }
    Ok(acc)
}

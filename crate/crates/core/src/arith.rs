//! Exact multiplicative arithmetic over machine integers: factorization,
//! Euler phi, Moebius, divisor-power sums with complex exponents, Ramanujan
//! sums, primitive-character counts and coprime parts.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest `n` accepted by [`factorize`]; trial division stays fast below this.
pub const FACTOR_LIMIT: u64 = 1 << 50;

/// Canonical prime factorization, primes strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub pairs: Vec<(u64, u32)>,
}

impl Factorization {
    /// Multiplies the factorization back together.
    pub fn reconstruct(&self) -> u64 {
        self.pairs
            .iter()
            .map(|&(p, e)| p.pow(e))
            .product::<u64>()
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.pairs.iter().map(|&(p, _)| p)
    }
}

/// Trial division with a 2-3-5 wheel. `n = 1` yields the empty factorization.
pub fn factorize(n: u64) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::domain("factorize: n must be >= 1"));
    }
    if n > FACTOR_LIMIT {
        return Err(Error::domain(format!(
            "factorize: n = {n} exceeds the 2^50 range cap"
        )));
    }
    let mut pairs = Vec::new();
    let mut m = n;
    for p in [2u64, 3, 5] {
        if m % p == 0 {
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            pairs.push((p, e));
        }
    }
    // 2-3-5 wheel increments starting at 7.
    const WHEEL: [u64; 8] = [4, 2, 4, 2, 4, 6, 2, 6];
    let mut p = 7u64;
    let mut w = 0usize;
    while p * p <= m {
        if m % p == 0 {
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            pairs.push((p, e));
        }
        p += WHEEL[w];
        w = (w + 1) % WHEEL.len();
    }
    if m > 1 {
        pairs.push((m, 1));
    }
    Ok(Factorization { pairs })
}

/// Divisors of `n` in increasing order.
pub fn divisors(n: u64) -> Vec<u64> {
    let f = factorize(n).expect("divisors: n in range");
    let mut out = vec![1u64];
    for &(p, e) in &f.pairs {
        let len = out.len();
        let mut pe = 1u64;
        for _ in 0..e {
            pe *= p;
            for i in 0..len {
                out.push(out[i] * pe);
            }
        }
    }
    out.sort_unstable();
    out
}

pub fn euler_phi(n: u64) -> u64 {
    let f = factorize(n).expect("euler_phi: n in range");
    let mut phi = 1u64;
    for &(p, e) in &f.pairs {
        phi *= p.pow(e - 1) * (p - 1);
    }
    phi
}

pub fn mobius(n: u64) -> i64 {
    let f = factorize(n).expect("mobius: n in range");
    for &(_, e) in &f.pairs {
        if e > 1 {
            return 0;
        }
    }
    if f.pairs.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Number of divisors.
pub fn tau(n: u64) -> u64 {
    let f = factorize(n).expect("tau: n in range");
    f.pairs.iter().map(|&(_, e)| (e + 1) as u64).product()
}

pub fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Inverse of `a` modulo `m` when `gcd(a, m) = 1`.
pub fn mod_inverse(a: u64, m: u64) -> Result<u64> {
    if m == 1 {
        return Ok(0);
    }
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return Err(Error::domain(format!(
            "mod_inverse: gcd({a}, {m}) = {old_r} != 1"
        )));
    }
    Ok(old_s.rem_euclid(m as i128) as u64)
}

/// `p^z` for a positive integer `p` and complex `z`, via the real logarithm.
pub fn int_pow_complex(p: u64, z: Complex64) -> Complex64 {
    (z * (p as f64).ln()).exp()
}

/// sigma_lambda(n) = sum over d | n of d^lambda.
pub fn sigma_lambda(n: u64, lambda: Complex64) -> Complex64 {
    let f = factorize(n).expect("sigma_lambda: n in range");
    let mut acc = Complex64::new(1.0, 0.0);
    for &(p, e) in &f.pairs {
        let plam = int_pow_complex(p, lambda);
        let mut local = Complex64::new(1.0, 0.0);
        let mut pw = Complex64::new(1.0, 0.0);
        for _ in 0..e {
            pw *= plam;
            local += pw;
        }
        acc *= local;
    }
    acc
}

/// sigma_{alpha,beta}(n) = sum over a*d = n of a^(-alpha) d^(-beta),
/// evaluated directly over the divisor list.
pub fn sigma_shift(n: u64, alpha: Complex64, beta: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for a in divisors(n) {
        let d = n / a;
        acc += int_pow_complex(a, -alpha) * int_pow_complex(d, -beta);
    }
    acc
}

/// Ramanujan sum c_q(n) as an exact integer via c_q(n) = sum_{d | (q,n)} d mu(q/d).
pub fn ramanujan_sum(q: u64, n: i64) -> i64 {
    if q == 1 {
        return 1;
    }
    let r = n.rem_euclid(q as i64) as u64;
    let g = if r == 0 { q } else { gcd(q, r) };
    divisors(g)
        .into_iter()
        .map(|d| d as i64 * mobius(q / d))
        .sum()
}

/// Count of primitive characters mod q: sum_{d|q} phi(d) mu(q/d).
pub fn phi_star(q: u64) -> u64 {
    let mut acc = 0i64;
    for d in divisors(q) {
        acc += euler_phi(d) as i64 * mobius(q / d);
    }
    debug_assert!(acc >= 0);
    acc as u64
}

/// Largest divisor of q coprime to d.
pub fn coprime_part(q: u64, d: u64) -> u64 {
    let mut out = q;
    let mut g = gcd(out, d);
    while g > 1 {
        while out % g == 0 {
            out /= g;
        }
        g = gcd(out, d);
    }
    out
}

/// Deterministic Miller-Rabin for u64.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d % 2 == 0 {
        d /= 2;
        r += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..r - 1 {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, a, m);
        }
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn factorize_basics() {
        assert_eq!(factorize(1).unwrap().pairs, vec![]);
        assert_eq!(factorize(12).unwrap().pairs, vec![(2, 2), (3, 1)]);
        // 9991 via an independent check: both factors prime, product restores n.
        let f = factorize(9991).unwrap();
        assert_eq!(f.pairs, vec![(97, 1), (103, 1)]);
        assert!(f.primes().all(is_prime));
        assert_eq!(f.reconstruct(), 9991);
        assert!(factorize(0).is_err());
        assert!(factorize(FACTOR_LIMIT + 1).is_err());
    }

    #[test]
    fn factorize_reconstruct_roundtrip() {
        for n in 1..=20_000u64 {
            assert_eq!(factorize(n).unwrap().reconstruct(), n);
        }
    }

    #[test]
    fn phi_and_mobius() {
        assert_eq!(euler_phi(1), 1);
        assert_eq!(euler_phi(13), 12);
        // phi(12) against a gcd-count oracle.
        let direct = (1..12).filter(|&k| gcd(k, 12) == 1).count() as u64;
        assert_eq!(euler_phi(12), direct);
        assert_eq!(direct, 4);
        assert_eq!(mobius(1), 1);
        assert_eq!(mobius(4), 0);
        assert_eq!(mobius(6), 1);
        assert_eq!(mobius(30), -1);
    }

    #[test]
    fn sigma_lambda_values() {
        assert_eq!(sigma_lambda(1, c(0.7, -0.3)), c(1.0, 0.0));
        assert!((sigma_lambda(6, c(0.0, 0.0)) - c(4.0, 0.0)).norm() < 1e-14);
        assert!((sigma_lambda(4, c(1.0, 0.0)) - c(7.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn sigma_shift_identity() {
        // sigma_{a,b}(n) = n^(-a) sigma_{a-b}(n), both sides independent paths.
        let alpha = c(0.3, 0.1);
        let beta = c(0.0, -0.2);
        let lhs = sigma_shift(12, alpha, beta);
        let rhs = int_pow_complex(12, -alpha) * sigma_lambda(12, alpha - beta);
        assert!((lhs - rhs).norm() < 1e-13);
        assert_eq!(sigma_shift(1, alpha, beta), c(1.0, 0.0));
        let z = c(0.0, 0.0);
        assert!((sigma_shift(36, z, z) - c(tau(36) as f64, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn sigma_shift_identity_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let n = rng.gen_range(1..=10_000u64);
            let alpha = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let beta = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let lhs = sigma_shift(n, alpha, beta);
            let rhs = int_pow_complex(n, -alpha) * sigma_lambda(n, alpha - beta);
            assert!(
                (lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()),
                "n={n} lhs={lhs} rhs={rhs}"
            );
        }
    }

    /// Exponential-sum oracle: c_q(n) = sum over units x of e(nx/q).
    fn ramanujan_oracle(q: u64, n: i64) -> i64 {
        let mut acc = 0.0f64;
        for x in 1..=q {
            if gcd(x, q) == 1 {
                let ang = 2.0 * std::f64::consts::PI * (n as f64) * (x as f64) / (q as f64);
                acc += ang.cos();
            }
        }
        if q == 1 {
            acc = 1.0;
        }
        let r = acc.round();
        assert!((acc - r).abs() < 1e-9 * (q as f64).sqrt().max(1.0));
        r as i64
    }

    #[test]
    fn ramanujan_values() {
        assert_eq!(ramanujan_sum(1, 5), 1);
        for p in [2u64, 3, 5, 7, 11] {
            assert_eq!(ramanujan_sum(p, p as i64), p as i64 - 1);
        }
        assert_eq!(ramanujan_sum(4, 2), -2);
        assert_eq!(ramanujan_oracle(4, 2), -2);
        for q in 1..=30u64 {
            for n in -5..=30i64 {
                assert_eq!(ramanujan_sum(q, n), ramanujan_oracle(q, n), "q={q} n={n}");
            }
        }
    }

    #[test]
    fn ramanujan_multiplicative() {
        for q1 in 1..=50u64 {
            for q2 in 1..=50u64 {
                if gcd(q1, q2) != 1 {
                    continue;
                }
                for n in [1i64, 7, 30, 100] {
                    assert_eq!(
                        ramanujan_sum(q1 * q2, n),
                        ramanujan_sum(q1, n) * ramanujan_sum(q2, n)
                    );
                }
            }
        }
    }

    #[test]
    fn ramanujan_divisor_sum() {
        // sum_{d|q} c_d(n) = q when q | n, else 0.
        for q in 1..=200u64 {
            for n in 1..=400i64 {
                let s: i64 = divisors(q).iter().map(|&d| ramanujan_sum(d, n)).sum();
                if n % q as i64 == 0 {
                    assert_eq!(s, q as i64);
                } else {
                    assert_eq!(s, 0);
                }
            }
        }
    }

    #[test]
    fn phi_star_values() {
        assert_eq!(phi_star(1), 1);
        for p in [3u64, 5, 7, 11, 101] {
            assert_eq!(phi_star(p), p - 2);
        }
        assert_eq!(phi_star(8), 2);
        // q = 2 mod 4 has no primitive characters.
        assert_eq!(phi_star(6), 0);
    }

    #[test]
    fn coprime_part_values() {
        assert_eq!(coprime_part(7, 1), 7);
        assert_eq!(coprime_part(12, 2), 3);
        assert_eq!(coprime_part(45, 3), 5);
        assert_eq!(coprime_part(1, 10), 1);
        // Oracle: largest divisor coprime to d.
        for q in 1..=200u64 {
            for d in 1..=20u64 {
                let best = divisors(q)
                    .into_iter()
                    .filter(|&e| gcd(e, d) == 1)
                    .max()
                    .unwrap();
                assert_eq!(coprime_part(q, d), best, "q={q} d={d}");
            }
        }
    }

    #[test]
    fn mod_inverse_works() {
        for m in 2..=100u64 {
            for a in 1..m {
                if gcd(a, m) == 1 {
                    let inv = mod_inverse(a, m).unwrap();
                    assert_eq!(a * inv % m, 1 % m);
                } else {
                    assert!(mod_inverse(a, m).is_err());
                }
            }
        }
    }
}

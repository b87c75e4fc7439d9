//! Dirichlet characters mod q built from CRT-local generators, with
//! primitivity and parity predicates, Gauss sums, and the orthogonality
//! identity over primitive even characters.

use num_complex::Complex64;

use crate::arith::{divisors, euler_phi, gcd, mobius, pow_mod};
use crate::error::{Error, Result};

/// One prime-power factor p^k of q together with generator data for its unit
/// group: a primitive root for odd p, the (-1, 5) pair for 2^k with k >= 3.
#[derive(Debug, Clone)]
struct LocalFactor {
    prime: u64,
    modulus: u64,
    /// Cyclic orders, one per generator (empty for 2^1).
    orders: Vec<u64>,
    generators: Vec<u64>,
    /// Discrete logs: dlog[g * modulus + x] for generator slot g and residue x.
    dlog: Vec<u32>,
}

impl LocalFactor {
    fn build(p: u64, k: u32) -> Self {
        let pp = p.pow(k);
        if p == 2 {
            return match k {
                1 => LocalFactor {
                    prime: 2,
                    modulus: 2,
                    orders: vec![],
                    generators: vec![],
                    dlog: vec![],
                },
                2 => {
                    let mut dlog = vec![u32::MAX; 4];
                    dlog[1] = 0;
                    dlog[3] = 1;
                    LocalFactor {
                        prime: 2,
                        modulus: 4,
                        orders: vec![2],
                        generators: vec![3],
                        dlog,
                    }
                }
                _ => {
                    let half = pp / 4; // order of 5 mod 2^k
                    let mut dlog = vec![u32::MAX; 2 * pp as usize];
                    let mut x = 1u64;
                    for b in 0..half {
                        let y = pp - x; // (-1) * 5^b
                        dlog[x as usize] = 0;
                        dlog[pp as usize + x as usize] = b as u32;
                        dlog[y as usize] = 1;
                        dlog[pp as usize + y as usize] = b as u32;
                        x = x * 5 % pp;
                    }
                    LocalFactor {
                        prime: 2,
                        modulus: pp,
                        orders: vec![2, half],
                        generators: vec![pp - 1, 5],
                        dlog,
                    }
                }
            };
        }
        let g = primitive_root(p, k);
        let m = pp / p * (p - 1);
        let mut dlog = vec![u32::MAX; pp as usize];
        let mut x = 1u64;
        for j in 0..m {
            dlog[x as usize] = j as u32;
            x = x % pp * (g % pp) % pp;
        }
        LocalFactor {
            prime: p,
            modulus: pp,
            orders: vec![m],
            generators: vec![g],
            dlog,
        }
    }

    fn dlog_of(&self, slot: usize, x: u64) -> u64 {
        self.dlog[slot * self.modulus as usize + (x % self.modulus) as usize] as u64
    }
}

/// Primitive root mod p^k for odd p (valid for every k >= 1).
fn primitive_root(p: u64, _k: u32) -> u64 {
    let phi = p - 1;
    let fac = crate::arith::factorize(phi).expect("phi in range");
    let mut g = 2u64;
    loop {
        let ok = fac.primes().all(|r| pow_mod(g, phi / r, p) != 1);
        if ok {
            break;
        }
        g += 1;
    }
    // Lift so the same g generates mod p^k for all k.
    if pow_mod(g, p - 1, p * p) == 1 {
        g += p;
    }
    g
}

/// The character group mod q, with discrete-log tables for O(1) evaluation.
#[derive(Debug, Clone)]
pub struct CharacterGroup {
    pub q: u64,
    locals: Vec<LocalFactor>,
    /// Flattened cyclic orders across all local generator slots.
    pub orders: Vec<u64>,
    /// lcm of all orders; character values are e(j / order_lcm).
    pub order_lcm: u64,
    /// Set when q = 2 mod 4: the group is fine but no primitive character exists.
    pub empty_primitive_warning: bool,
    /// e(j / order_lcm) for j in 0..order_lcm.
    roots: Vec<Complex64>,
    /// (local index, slot within local) per flattened slot.
    slot_map: Vec<(usize, usize)>,
}

/// A character given by its exponent vector against the group's generators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirichletCharacter {
    pub q: u64,
    pub exponents: Vec<u64>,
}

pub fn build_group(q: u64) -> Result<CharacterGroup> {
    if q == 0 {
        return Err(Error::domain("build_group: q must be >= 1"));
    }
    let fac = crate::arith::factorize(q)?;
    let locals: Vec<LocalFactor> = fac
        .pairs
        .iter()
        .map(|&(p, k)| LocalFactor::build(p, k))
        .collect();
    let mut orders = Vec::new();
    let mut slot_map = Vec::new();
    for (li, l) in locals.iter().enumerate() {
        for (si, &m) in l.orders.iter().enumerate() {
            orders.push(m);
            slot_map.push((li, si));
        }
    }
    let order_lcm = orders.iter().fold(1u64, |acc, &m| lcm(acc, m));
    let product: u64 = orders.iter().product();
    debug_assert_eq!(product, euler_phi(q));
    if q <= 10_000 {
        verify_generators(&locals, q)?;
    }
    let roots = (0..order_lcm)
        .map(|j| crate::e_of(j as f64 / order_lcm as f64))
        .collect();
    Ok(CharacterGroup {
        q,
        locals,
        orders,
        order_lcm,
        empty_primitive_warning: q % 4 == 2,
        roots,
        slot_map,
    })
}

fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        1
    } else {
        a / gcd(a, b) * b
    }
}

/// Checks that generator powers enumerate every unit exactly once.
fn verify_generators(locals: &[LocalFactor], q: u64) -> Result<()> {
    for l in locals {
        let mut seen = vec![false; l.modulus as usize];
        let units = (1..=l.modulus)
            .filter(|&x| gcd(x, l.modulus) == 1)
            .count();
        let mut count = 0usize;
        enumerate_products(l, 0, 1, &mut |x| {
            if !seen[x as usize] {
                seen[x as usize] = true;
                count += 1;
            }
        });
        if count != units {
            return Err(Error::domain(format!(
                "generator data for {} (mod {q}) covers {count} of {units} units",
                l.modulus
            )));
        }
    }
    Ok(())
}

fn enumerate_products(l: &LocalFactor, slot: usize, acc: u64, f: &mut impl FnMut(u64)) {
    if slot == l.generators.len() {
        f(acc);
        return;
    }
    let g = l.generators[slot] % l.modulus;
    let mut x = acc;
    for _ in 0..l.orders[slot] {
        enumerate_products(l, slot + 1, x, f);
        x = x * g % l.modulus;
    }
}

impl CharacterGroup {
    pub fn principal(&self) -> DirichletCharacter {
        DirichletCharacter {
            q: self.q,
            exponents: vec![0; self.orders.len()],
        }
    }

    /// Phase numerator of chi(n) over denominator order_lcm, or None off units.
    fn phase_num(&self, chi: &DirichletCharacter, n: u64) -> Option<u64> {
        let mut num = 0u64;
        for (flat, &(li, si)) in self.slot_map.iter().enumerate() {
            let l = &self.locals[li];
            let x = n % l.modulus;
            if gcd(x, l.prime) != 1 {
                return None;
            }
            let d = l.dlog_of(si, x);
            let m = self.orders[flat];
            let contrib = chi.exponents[flat] % m * d % m;
            num = (num + contrib * (self.order_lcm / m)) % self.order_lcm;
        }
        // Locals with no generator slot (the 2^1 factor) still impose gcd = 1.
        for l in &self.locals {
            if l.orders.is_empty() && n % l.modulus % l.prime == 0 {
                return None;
            }
        }
        Some(num)
    }

    /// chi(n): 0 off units, an exact root of unity on units.
    pub fn eval(&self, chi: &DirichletCharacter, n: i64) -> Complex64 {
        if self.q == 1 {
            return Complex64::new(1.0, 0.0);
        }
        let r = n.rem_euclid(self.q as i64) as u64;
        match self.phase_num(chi, r) {
            Some(num) => self.roots[num as usize],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Value vector chi(0), ..., chi(q-1); the workhorse for moment loops.
    pub fn value_vector(&self, chi: &DirichletCharacter) -> Vec<Complex64> {
        (0..self.q as i64).map(|n| self.eval(chi, n)).collect()
    }

    /// chi(-1) = 1?
    pub fn is_even(&self, chi: &DirichletCharacter) -> bool {
        if self.q <= 2 {
            return true;
        }
        match self.phase_num(chi, self.q - 1) {
            Some(num) => num == 0,
            None => unreachable!("-1 is a unit"),
        }
    }

    /// Primitivity from local exponent conditions.
    pub fn is_primitive(&self, chi: &DirichletCharacter) -> bool {
        let mut flat = 0usize;
        for l in &self.locals {
            if l.prime == 2 {
                match l.orders.len() {
                    0 => return false, // 2 || q: conductor of the 2-part is 1 < 2
                    1 => {
                        // mod 4: primitive iff the character is the nontrivial one
                        if chi.exponents[flat] % 2 == 0 {
                            return false;
                        }
                        flat += 1;
                    }
                    _ => {
                        // mod 2^k, k >= 3: primitive iff the exponent on 5 is odd
                        if chi.exponents[flat + 1] % 2 == 0 {
                            return false;
                        }
                        flat += 2;
                    }
                }
            } else {
                let m = l.orders[0];
                let e = chi.exponents[flat] % m;
                if l.modulus == l.prime {
                    if e == 0 {
                        return false;
                    }
                } else if e % l.prime == 0 {
                    return false;
                }
                flat += 1;
            }
        }
        true
    }

    /// Conductor from local character orders.
    pub fn conductor(&self, chi: &DirichletCharacter) -> u64 {
        let mut cond = 1u64;
        let mut flat = 0usize;
        for l in &self.locals {
            if l.prime == 2 {
                match l.orders.len() {
                    0 => {}
                    1 => {
                        if chi.exponents[flat] % 2 == 1 {
                            cond *= 4;
                        }
                        flat += 1;
                    }
                    _ => {
                        let e1 = chi.exponents[flat] % 2;
                        let half = l.orders[1];
                        let e2 = chi.exponents[flat + 1] % half;
                        if e2 == 0 {
                            if e1 == 1 {
                                cond *= 4;
                            }
                        } else {
                            let ord = half / gcd(e2, half); // a power of two >= 2
                            cond *= 4 * ord;
                        }
                        flat += 2;
                    }
                }
            } else {
                let m = l.orders[0];
                let e = chi.exponents[flat] % m;
                if e != 0 {
                    let ord = m / gcd(e, m);
                    let j = p_adic_valuation(ord, l.prime);
                    cond *= l.prime.pow(j + 1);
                }
                flat += 1;
            }
        }
        cond
    }

    /// All exponent vectors, mixed-radix order.
    pub fn all_characters(&self) -> Vec<DirichletCharacter> {
        let mut out = Vec::new();
        let total: u64 = self.orders.iter().product();
        for mut idx in 0..total {
            let mut exps = Vec::with_capacity(self.orders.len());
            for &m in &self.orders {
                exps.push(idx % m);
                idx /= m;
            }
            out.push(DirichletCharacter {
                q: self.q,
                exponents: exps,
            });
        }
        out
    }

    /// Exactly the primitive even characters, each once.
    pub fn enumerate_primitive_even(&self) -> Vec<DirichletCharacter> {
        if self.q == 1 {
            return vec![self.principal()];
        }
        self.all_characters()
            .into_iter()
            .filter(|chi| self.is_primitive(chi) && self.is_even(chi))
            .collect()
    }

    /// tau(chi) = sum over a mod q of chi(a) e(a/q).
    pub fn gauss_sum(&self, chi: &DirichletCharacter) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..self.q {
            let v = self.eval(chi, a as i64);
            if v != Complex64::new(0.0, 0.0) {
                acc += v * crate::e_of(a as f64 / self.q as f64);
            }
        }
        acc
    }
}

fn p_adic_valuation(n: u64, p: u64) -> u32 {
    let mut j = 0u32;
    let mut o = n;
    while o % p == 0 {
        o /= p;
        j += 1;
    }
    j
}

/// Both sides of the primitive-even orthogonality identity:
/// lhs = sum over primitive even chi of chi(m) conj(chi(n)) by enumeration,
/// rhs = 1/2 * [sum_{d | (q, m-n)} + sum_{d | (q, m+n)}] phi(d) mu(q/d).
pub fn orthogonality_pair_sum(
    group: &CharacterGroup,
    m: u64,
    n: u64,
) -> Result<(Complex64, f64)> {
    let q = group.q;
    if gcd(m % q.max(1), q) != 1 || gcd(n % q.max(1), q) != 1 {
        return Err(Error::domain("orthogonality: (mn, q) must be 1"));
    }
    let mut lhs = Complex64::new(0.0, 0.0);
    for chi in group.enumerate_primitive_even() {
        lhs += group.eval(&chi, m as i64) * group.eval(&chi, n as i64).conj();
    }
    Ok((lhs, orthogonality_rhs(q, m, n)))
}

/// The divisor-sum side alone (exact half-integer).
pub fn orthogonality_rhs(q: u64, m: u64, n: u64) -> f64 {
    let mut rhs = 0i64;
    for diff in [m as i64 - n as i64, m as i64 + n as i64] {
        let g = if diff == 0 {
            q
        } else {
            gcd(q, diff.unsigned_abs())
        };
        for d in divisors(g) {
            rhs += euler_phi(d) as i64 * mobius(q / d);
        }
    }
    rhs as f64 / 2.0
}

/// Exhaustively checks the orthogonality identity for all coprime m, n < q.
/// Returns the max |lhs - rhs| over the grid.
pub fn orthogonality_exhaustive(q: u64) -> Result<f64> {
    let group = build_group(q)?;
    let chars = group.enumerate_primitive_even();
    let vectors: Vec<Vec<Complex64>> = chars.iter().map(|c| group.value_vector(c)).collect();
    let coprime: Vec<u64> = (1..q.max(2)).filter(|&m| gcd(m, q) == 1).collect();
    let rows = crate::par::map_slice(&coprime, |&m| {
        let mut worst = 0.0f64;
        for &n in &coprime {
            let mut lhs = Complex64::new(0.0, 0.0);
            for v in &vectors {
                lhs += v[m as usize] * v[n as usize].conj();
            }
            let rhs = orthogonality_rhs(q, m, n);
            let err = (lhs - Complex64::new(rhs, 0.0)).norm();
            if err > worst {
                worst = err;
            }
        }
        worst
    });
    Ok(rows.into_iter().fold(0.0, f64::max))
}

/// Brute-force conductor: the least divisor f of q with chi trivial on all
/// units congruent to 1 mod f. Reference oracle for `conductor`.
pub fn conductor_by_search(group: &CharacterGroup, chi: &DirichletCharacter) -> u64 {
    let q = group.q;
    if q == 1 {
        return 1;
    }
    'outer: for f in divisors(q) {
        for n in 1..q {
            if gcd(n, q) == 1 && n % f == 1 % f {
                let v = group.eval(chi, n as i64);
                if (v - Complex64::new(1.0, 0.0)).norm() > 1e-9 {
                    continue 'outer;
                }
            }
        }
        return f;
    }
    q
}

//! Exact representation of the exceptional ρ² values.
//!
//! Each candidate triad with all zonal numbers nonzero turns the frequency
//! condition into an integer quadratic a₂x² + a₁x + a₀ = 0 in x = ρ². Roots
//! are kept exactly: as rationals when the discriminant is a perfect square,
//! otherwise as a branch of the primitive quadratic, with an optional
//! (p + q√r)/s canonical surd once the discriminant is factored.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// Primitive integer quadratic Ax² + Bx + C (A > 0, gcd(A,B,C) = 1) with a
/// positive non-square discriminant; `plus` selects the root (−B + √Δ)/(2A).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QuadraticSurd {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
    pub plus: bool,
}

impl QuadraticSurd {
    pub fn discriminant(&self) -> BigInt {
        &self.b * &self.b - BigInt::from(4) * &self.a * &self.c
    }

    pub fn to_f64(&self) -> f64 {
        let a = self.a.to_f64().unwrap();
        let b = self.b.to_f64().unwrap();
        let d = self.discriminant().to_f64().unwrap().sqrt();
        if self.plus {
            (-b + d) / (2.0 * a)
        } else {
            (-b - d) / (2.0 * a)
        }
    }

    /// Canonical form (p + q√r)/s with r > 1 squarefree, s > 0, q ≠ 0.
    /// Requires the discriminant to fit in u64 for factorization.
    pub fn canonical_surd(&self) -> Option<(BigInt, BigInt, BigInt, BigInt)> {
        let disc = self.discriminant();
        let d64 = disc.to_u64()?;
        let (square, free) = squarefree_split(d64);
        // root = (−b ± sq·√free) / (2a)
        let p = -self.b.clone();
        let q = if self.plus {
            BigInt::from(square)
        } else {
            -BigInt::from(square)
        };
        let s = BigInt::from(2) * &self.a;
        let g = p.gcd(&q).gcd(&s);
        Some((&p / &g, &q / &g, BigInt::from(free), &s / &g))
    }
}

/// A positive ρ² value, exact.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RhoSquared {
    Rational(BigRational),
    Surd(QuadraticSurd),
}

impl RhoSquared {
    pub fn to_f64(&self) -> f64 {
        match self {
            RhoSquared::Rational(r) => {
                r.numer().to_f64().unwrap() / r.denom().to_f64().unwrap()
            }
            RhoSquared::Surd(s) => s.to_f64(),
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            RhoSquared::Rational(r) => r.is_positive(),
            RhoSquared::Surd(_) => self.to_f64() > 0.0,
        }
    }
}

/// Integer quadratic a₂x² + a₁x + a₀ attached to a triad.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriadPoly {
    pub a2: BigInt,
    pub a1: BigInt,
    pub a0: BigInt,
}

impl TriadPoly {
    /// Reduce to primitive form with nonnegative leading coefficient
    /// (leading = a₂ if nonzero, else a₁).
    pub fn reduced(&self) -> TriadPoly {
        let mut g = self.a2.gcd(&self.a1).gcd(&self.a0);
        if g.is_zero() {
            g = BigInt::from(1);
        }
        let mut out = TriadPoly {
            a2: &self.a2 / &g,
            a1: &self.a1 / &g,
            a0: &self.a0 / &g,
        };
        let lead_negative = if !out.a2.is_zero() {
            out.a2.is_negative()
        } else {
            out.a1.is_negative()
        };
        if lead_negative {
            out.a2 = -out.a2;
            out.a1 = -out.a1;
            out.a0 = -out.a0;
        }
        out
    }

    /// Evaluate at a rational x, exactly.
    pub fn eval(&self, x: &BigRational) -> BigRational {
        let a2 = BigRational::from_integer(self.a2.clone());
        let a1 = BigRational::from_integer(self.a1.clone());
        let a0 = BigRational::from_integer(self.a0.clone());
        (a2 * x + a1) * x + a0
    }

    pub fn is_root(&self, x: &BigRational) -> bool {
        self.eval(x).is_zero()
    }

    /// All positive real roots, exact. At most two.
    pub fn positive_roots(&self) -> Vec<RhoSquared> {
        let p = self.reduced();
        let mut roots = Vec::new();
        if p.a2.is_zero() {
            if p.a1.is_zero() {
                // Constant polynomial: a₀ ≠ 0 for admissible triads, no roots.
                return roots;
            }
            let x = BigRational::new(-p.a0.clone(), p.a1.clone());
            if x.is_positive() {
                roots.push(RhoSquared::Rational(x));
            }
            return roots;
        }
        let disc = p.discriminant_of();
        if disc.is_negative() {
            return roots;
        }
        let sq = disc.sqrt();
        if &sq * &sq == disc {
            for sign in [1i32, -1] {
                let num = -&p.a1 + BigInt::from(sign) * &sq;
                let x = BigRational::new(num, BigInt::from(2) * &p.a2);
                if x.is_positive() && !roots.contains(&RhoSquared::Rational(x.clone())) {
                    roots.push(RhoSquared::Rational(x));
                }
            }
        } else {
            for plus in [true, false] {
                let surd = QuadraticSurd {
                    a: p.a2.clone(),
                    b: p.a1.clone(),
                    c: p.a0.clone(),
                    plus,
                };
                if surd.to_f64() > 0.0 {
                    roots.push(RhoSquared::Surd(surd));
                }
            }
        }
        roots
    }

    fn discriminant_of(&self) -> BigInt {
        &self.a1 * &self.a1 - BigInt::from(4) * &self.a2 * &self.a0
    }
}

/// Split n = square · free with free squarefree (complete factorization).
pub fn squarefree_split(n: u64) -> (u64, u64) {
    assert!(n > 0);
    let mut factors = Vec::new();
    factor_u64(n, &mut factors);
    factors.sort_unstable();
    let mut square = 1u64;
    let mut free = 1u64;
    let mut i = 0;
    while i < factors.len() {
        let p = factors[i];
        let mut count = 0;
        while i < factors.len() && factors[i] == p {
            count += 1;
            i += 1;
        }
        square *= p.pow((count / 2) as u32);
        if count % 2 == 1 {
            free *= p;
        }
    }
    (square, free)
}

fn factor_u64(mut n: u64, out: &mut Vec<u64>) {
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        while n % p == 0 {
            out.push(p);
            n /= p;
        }
    }
    if n == 1 {
        return;
    }
    let mut stack = vec![n];
    while let Some(m) = stack.pop() {
        if m == 1 {
            continue;
        }
        if is_prime_u64(m) {
            out.push(m);
            continue;
        }
        let d = pollard_rho(m);
        stack.push(d);
        stack.push(m / d);
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for u64.
fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let d = n - 1;
    let s = d.trailing_zeros();
    let d = d >> s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pollard_rho(n: u64) -> u64 {
    if n % 2 == 0 {
        return 2;
    }
    let mut c = 1u64;
    loop {
        let mut x = 2u64;
        let mut y = 2u64;
        let mut d = 1u64;
        let f = |v: u64| (mul_mod(v, v, n) + c) % n;
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd_u64(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(n: i64) -> BigInt {
        BigInt::from(n)
    }

    #[test]
    fn rational_roots_of_factorable_quadratic() {
        // (x − 2)(3x − 1) = 3x² − 7x + 2
        let p = TriadPoly {
            a2: big(3),
            a1: big(-7),
            a0: big(2),
        };
        let roots = p.positive_roots();
        assert_eq!(roots.len(), 2);
        for r in &roots {
            match r {
                RhoSquared::Rational(x) => assert!(p.is_root(x)),
                _ => panic!("expected rational"),
            }
        }
    }

    #[test]
    fn surd_roots_and_canonical_form() {
        // x² − 2x − 1: roots 1 ± √2, only 1 + √2 positive
        let p = TriadPoly {
            a2: big(1),
            a1: big(-2),
            a0: big(-1),
        };
        let roots = p.positive_roots();
        assert_eq!(roots.len(), 1);
        let RhoSquared::Surd(s) = &roots[0] else {
            panic!("expected surd");
        };
        assert!((s.to_f64() - (1.0 + 2.0f64.sqrt())).abs() < 1e-12);
        let (pp, qq, rr, ss) = s.canonical_surd().unwrap();
        assert_eq!((pp, qq, rr, ss), (big(1), big(1), big(2), big(1)));
    }

    #[test]
    fn no_positive_roots_when_constant_only() {
        let p = TriadPoly {
            a2: big(0),
            a1: big(0),
            a0: big(6),
        };
        assert!(p.positive_roots().is_empty());
    }

    #[test]
    fn squarefree_split_examples() {
        assert_eq!(squarefree_split(1), (1, 1));
        assert_eq!(squarefree_split(8), (2, 2));
        assert_eq!(squarefree_split(180), (6, 5));
        let large = 999_999_999_989u64; // prime
        assert_eq!(squarefree_split(large), (1, large));
    }

    #[test]
    fn reduced_normalizes_sign_and_content() {
        let p = TriadPoly {
            a2: big(-6),
            a1: big(9),
            a0: big(-3),
        };
        let r = p.reduced();
        assert_eq!((r.a2, r.a1, r.a0), (big(2), big(-3), big(1)));
    }
}

//! Finite-field arithmetic over `F_q` for `q` prime (≤ 251) or `q = 2^m`
//! with `1 ≤ m ≤ 8`, backed by full operation tables.

use crate::error::{Error, Result};

/// Reduction polynomials for `GF(2^m)`, bit `m` included.
///
/// | m | polynomial            |
/// |---|-----------------------|
/// | 1 | x + 1                 |
/// | 2 | x^2 + x + 1           |
/// | 3 | x^3 + x + 1           |
/// | 4 | x^4 + x + 1           |
/// | 5 | x^5 + x^2 + 1         |
/// | 6 | x^6 + x + 1           |
/// | 7 | x^7 + x + 1           |
/// | 8 | x^8 + x^4 + x^3 + x^2 + 1 |
pub const BINARY_POLYNOMIALS: [u16; 9] = [0, 0b11, 0b111, 0b1011, 0x13, 0x25, 0x43, 0x83, 0x11d];

/// Field element, `0..q`.
pub type Elem = u8;

#[derive(Clone)]
pub struct Field {
    q: usize,
    add: Vec<Elem>,
    mul: Vec<Elem>,
    neg: Vec<Elem>,
    inv: Vec<Elem>,
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Field").field("q", &self.q).finish()
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.q == other.q
    }
}

type BinOp = Box<dyn Fn(usize, usize) -> usize>;

fn is_prime(n: usize) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

fn gf2_mul(mut a: u16, mut b: u16, poly: u16, m: u32) -> u16 {
    let mut acc = 0;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a >> m & 1 == 1 {
            a ^= poly;
        }
    }
    acc
}

impl Field {
    pub fn new(q: usize) -> Result<Self> {
        let (add_fn, mul_fn): (BinOp, BinOp) = if q.is_power_of_two() && (2..=256).contains(&q) {
            let m = q.trailing_zeros();
            let poly = BINARY_POLYNOMIALS[m as usize];
            (
                Box::new(|a, b| a ^ b),
                Box::new(move |a, b| gf2_mul(a as u16, b as u16, poly, m) as usize),
            )
        } else if q <= 256 && is_prime(q) {
            (Box::new(move |a, b| (a + b) % q), Box::new(move |a, b| a * b % q))
        } else {
            return Err(Error::InvalidParams(format!(
                "field order {q} is neither a prime ≤ 251 nor 2^m with m ≤ 8"
            )));
        };

        let mut add = vec![0; q * q];
        let mut mul = vec![0; q * q];
        for a in 0..q {
            for b in 0..q {
                add[a * q + b] = add_fn(a, b) as Elem;
                mul[a * q + b] = mul_fn(a, b) as Elem;
            }
        }
        let neg = (0..q)
            .map(|a| (0..q).find(|&b| add[a * q + b] == 0).expect("additive inverse") as Elem)
            .collect();
        let mut inv = vec![0; q];
        for a in 1..q {
            inv[a] = (1..q)
                .find(|&b| mul[a * q + b] == 1)
                .ok_or_else(|| Error::InvalidParams(format!("{a} has no inverse mod {q}")))?
                as Elem;
        }
        Ok(Self { q, add, mul, neg, inv })
    }

    pub fn order(&self) -> usize {
        self.q
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        self.add[a as usize * self.q + b as usize]
    }

    #[inline]
    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        self.mul[a as usize * self.q + b as usize]
    }

    #[inline]
    pub fn neg(&self, a: Elem) -> Elem {
        self.neg[a as usize]
    }

    pub fn inv(&self, a: Elem) -> Result<Elem> {
        if a == 0 {
            return Err(Error::Domain("inverse of zero".into()));
        }
        Ok(self.inv[a as usize])
    }

    /// Exhaustively checks the field axioms on the tables.
    pub fn check_axioms(&self) -> Result<()> {
        let q = self.q;
        let els = || (0..self.q).map(|a| a as Elem);
        let fail = |what: &str| Err(Error::Domain(format!("F_{q}: {what} fails")));
        for a in els() {
            if self.add(a, 0) != a || self.mul(a, 1) != a {
                return fail("identity");
            }
            if self.add(a, self.neg(a)) != 0 {
                return fail("additive inverse");
            }
            if a != 0 && self.mul(a, self.inv[a as usize]) != 1 {
                return fail("multiplicative inverse");
            }
            for b in els() {
                if self.add(a, b) != self.add(b, a) || self.mul(a, b) != self.mul(b, a) {
                    return fail("commutativity");
                }
                if a != 0 && b != 0 && self.mul(a, b) == 0 {
                    return fail("no zero divisors");
                }
                for c in els() {
                    if self.add(self.add(a, b), c) != self.add(a, self.add(b, c))
                        || self.mul(self.mul(a, b), c) != self.mul(a, self.mul(b, c))
                    {
                        return fail("associativity");
                    }
                    if self.mul(a, self.add(b, c)) != self.add(self.mul(a, b), self.mul(a, c)) {
                        return fail("distributivity");
                    }
                }
            }
        }
        Ok(())
    }
}

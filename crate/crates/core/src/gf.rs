//! Exact arithmetic for prime fields `F_p` and extension fields `F_{p^e}`.
//!
//! Elements are integer indices in `[0, q)`. The base-p digits of an index
//! are the polynomial coefficients, constant term in the least-significant
//! digit. Index 0 is the additive identity, index 1 the multiplicative one,
//! and the prime subfield is exactly the indices `0..p`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Desk-scale cardinality cap; constructions beyond this fail fast.
pub const MAX_Q: u64 = 1 << 20;

/// Full q x q multiplication tables are built below this cardinality.
const MUL_TABLE_LIMIT: u64 = 256;

/// Per-element inverse tables are built below this cardinality.
const INV_TABLE_LIMIT: u64 = 1 << 16;

/// A field element, encoded as its index in `[0, q)`.
pub type Elem = u64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("extension degree must be at least 1")]
    BadDegree,
    #[error("cardinality {0} exceeds the desk-scale cap {MAX_Q}")]
    CardinalityCap(u64),
    #[error("division or inversion by zero")]
    DivisionByZero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Inv,
}

/// `F_{p^e}` with a fixed, canonical modulus.
///
/// The modulus is the lexicographically smallest monic irreducible of
/// degree `e` over `F_p`, coefficients compared low-degree-first, so two
/// calls to [`FieldSpec::new`] with the same `(p, e)` give identical
/// encodings. Immutable after construction; all operations are pure.
#[derive(Clone)]
pub struct FieldSpec {
    p: u64,
    e: u32,
    q: u64,
    /// Monic, length `e + 1`, coefficient of `x^i` at position `i`.
    /// For `e = 1` this is the polynomial `x` and plays no role.
    modulus: Vec<u64>,
    mul_table: Option<Vec<u32>>,
    inv_table: Option<Vec<u32>>,
}

impl std::fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldSpec")
            .field("p", &self.p)
            .field("e", &self.e)
            .field("q", &self.q)
            .field("modulus", &self.modulus)
            .finish()
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.e == other.e && self.modulus == other.modulus
    }
}
impl Eq for FieldSpec {}

/// Serialized form used in JSON reports: `"p^e"` plus the modulus coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDescriptor {
    pub field: String,
    pub modulus: Vec<u64>,
}

impl FieldSpec {
    pub fn new(p: u64, e: u32) -> Result<Self, FieldError> {
        if e < 1 {
            return Err(FieldError::BadDegree);
        }
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        let mut q: u64 = 1;
        for _ in 0..e {
            q = q.checked_mul(p).ok_or(FieldError::CardinalityCap(u64::MAX))?;
            if q > MAX_Q {
                return Err(FieldError::CardinalityCap(q));
            }
        }
        let modulus = smallest_irreducible(p, e);
        let mut spec = FieldSpec {
            p,
            e,
            q,
            modulus,
            mul_table: None,
            inv_table: None,
        };
        if q <= MUL_TABLE_LIMIT {
            let mut table = vec![0u32; (q * q) as usize];
            for a in 0..q {
                for b in a..q {
                    let v = spec.mul_slow(a, b) as u32;
                    table[(a * q + b) as usize] = v;
                    table[(b * q + a) as usize] = v;
                }
            }
            spec.mul_table = Some(table);
        }
        if q <= INV_TABLE_LIMIT {
            let mut table = vec![0u32; q as usize];
            for a in 1..q {
                table[a as usize] = spec.pow(a, q - 2) as u32;
            }
            spec.inv_table = Some(table);
        }
        Ok(spec)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn e(&self) -> u32 {
        self.e
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    pub fn descriptor(&self) -> FieldDescriptor {
        FieldDescriptor {
            field: format!("{}^{}", self.p, self.e),
            modulus: self.modulus.clone(),
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        0..self.q
    }

    /// The `p` elements of the prime subfield; under the digit encoding
    /// these are the constant polynomials, i.e. indices `0..p`.
    pub fn subfield_elements(&self) -> Vec<Elem> {
        (0..self.p).collect()
    }

    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        debug_assert!(a < self.q && b < self.q);
        if self.e == 1 {
            let s = a + b;
            if s >= self.p {
                s - self.p
            } else {
                s
            }
        } else {
            self.digitwise(a, b, |da, db, p| (da + db) % p)
        }
    }

    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        debug_assert!(a < self.q && b < self.q);
        if self.e == 1 {
            (a + self.p - b) % self.p
        } else {
            self.digitwise(a, b, |da, db, p| (da + p - db) % p)
        }
    }

    pub fn neg(&self, a: Elem) -> Elem {
        self.sub(0, a)
    }

    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        debug_assert!(a < self.q && b < self.q);
        if let Some(table) = &self.mul_table {
            return table[(a * self.q + b) as usize] as Elem;
        }
        self.mul_slow(a, b)
    }

    pub fn inv(&self, a: Elem) -> Result<Elem, FieldError> {
        if a == 0 {
            return Err(FieldError::DivisionByZero);
        }
        if let Some(table) = &self.inv_table {
            return Ok(table[a as usize] as Elem);
        }
        Ok(self.pow(a, self.q - 2))
    }

    pub fn div(&self, a: Elem, b: Elem) -> Result<Elem, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: Elem, mut n: u64) -> Elem {
        let mut base = a;
        let mut acc: Elem = 1;
        while n > 0 {
            if n & 1 == 1 {
                acc = self.mul_slow_or_table(acc, base);
            }
            base = self.mul_slow_or_table(base, base);
            n >>= 1;
        }
        acc
    }

    /// Dispatch form of the binary/unary arithmetic surface.
    pub fn arith(&self, op: ArithOp, a: Elem, b: Option<Elem>) -> Result<Elem, FieldError> {
        match op {
            ArithOp::Add => Ok(self.add(a, b.expect("add needs two operands"))),
            ArithOp::Sub => Ok(self.sub(a, b.expect("sub needs two operands"))),
            ArithOp::Mul => Ok(self.mul(a, b.expect("mul needs two operands"))),
            ArithOp::Div => self.div(a, b.expect("div needs two operands")),
            ArithOp::Neg => Ok(self.neg(a)),
            ArithOp::Inv => self.inv(a),
        }
    }

    fn mul_slow_or_table(&self, a: Elem, b: Elem) -> Elem {
        if let Some(table) = &self.mul_table {
            table[(a * self.q + b) as usize] as Elem
        } else {
            self.mul_slow(a, b)
        }
    }

    fn digitwise(&self, mut a: Elem, mut b: Elem, f: impl Fn(u64, u64, u64) -> u64) -> Elem {
        let p = self.p;
        let mut out = 0;
        let mut stride = 1;
        for _ in 0..self.e {
            out += f(a % p, b % p, p) * stride;
            a /= p;
            b /= p;
            stride *= p;
        }
        out
    }

    fn mul_slow(&self, a: Elem, b: Elem) -> Elem {
        let p = self.p;
        if self.e == 1 {
            return (a * b) % p;
        }
        let e = self.e as usize;
        let da = index_digits(a, p, e);
        let db = index_digits(b, p, e);
        // Schoolbook product, then reduction by the monic modulus.
        let mut prod = vec![0u64; 2 * e - 1];
        for (i, &ca) in da.iter().enumerate() {
            if ca == 0 {
                continue;
            }
            for (j, &cb) in db.iter().enumerate() {
                prod[i + j] = (prod[i + j] + ca * cb) % p;
            }
        }
        for i in (e..2 * e - 1).rev() {
            let lead = prod[i];
            if lead == 0 {
                continue;
            }
            prod[i] = 0;
            for j in 0..e {
                let m = self.modulus[j];
                if m != 0 {
                    let idx = i - e + j;
                    prod[idx] = (prod[idx] + p * p - lead * m % p) % p;
                }
            }
        }
        digits_index(&prod[..e], p)
    }
}

fn index_digits(mut x: u64, p: u64, e: usize) -> Vec<u64> {
    let mut out = vec![0u64; e];
    for d in out.iter_mut() {
        *d = x % p;
        x /= p;
    }
    out
}

fn digits_index(digits: &[u64], p: u64) -> u64 {
    let mut out = 0;
    for &d in digits.iter().rev() {
        out = out * p + d;
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut f = 3;
    while f * f <= n {
        if n.is_multiple_of(f) {
            return false;
        }
        f += 2;
    }
    true
}

/// Lexicographically smallest monic irreducible of degree `e` over `F_p`,
/// coefficients compared low-degree-first.
fn smallest_irreducible(p: u64, e: u32) -> Vec<u64> {
    let e = e as usize;
    let total = p.pow(e as u32);
    for m in 0..total {
        let mut f = vec![0u64; e + 1];
        f[e] = 1;
        // Decode so that the low-degree coefficient is the most significant
        // digit of m; ascending m then walks candidates in lex order.
        let mut rest = m;
        for i in (0..e).rev() {
            f[e - 1 - i] = rest / p.pow(i as u32);
            rest %= p.pow(i as u32);
        }
        if is_irreducible(&f, p) {
            return f;
        }
    }
    unreachable!("an irreducible polynomial of every degree exists over F_p")
}

/// Trial division against every monic polynomial of degree `1..=e/2`.
fn is_irreducible(f: &[u64], p: u64) -> bool {
    let e = f.len() - 1;
    if e == 1 {
        return true;
    }
    for g_deg in 1..=e / 2 {
        let count = p.pow(g_deg as u32);
        for m in 0..count {
            let mut g = index_digits(m, p, g_deg);
            g.push(1);
            if poly_rem_is_zero(f, &g, p) {
                return false;
            }
        }
    }
    true
}

fn poly_rem_is_zero(f: &[u64], g: &[u64], p: u64) -> bool {
    let g_deg = g.len() - 1;
    let mut r = f.to_vec();
    for i in (g_deg..r.len()).rev() {
        let lead = r[i];
        if lead == 0 {
            continue;
        }
        r[i] = 0;
        for (j, &gj) in g.iter().enumerate().take(g_deg) {
            if gj != 0 {
                let idx = i - g_deg + j;
                r[idx] = (r[idx] + p * p - lead * gj % p) % p;
            }
        }
    }
    r.iter().all(|&c| c == 0)
}

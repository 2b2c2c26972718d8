//! Exact scalar fields: prime fields F_p, extensions F_{p^e} and the rationals.
//!
//! A [`Field`] is a cheap, shareable handle on a [`FieldCtx`]. Elements
//! ([`Scalar`]) are plain values without a back pointer; containers that
//! hold scalars (matrices, polynomials) carry the field handle and refuse to
//! mix values from different contexts.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::unipoly::UniPoly;

/// Largest admissible prime (exclusive). Products of two residues fit in a u64.
pub const PRIME_BOUND: u64 = 1 << 31;

/// Number of random monic candidates tried when searching for an irreducible modulus.
pub const IRREDUCIBLE_TRIALS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NonPrimeModulus(u64),
    #[error("prime {0} is too large (must be below 2^31)")]
    ModulusTooLarge(u64),
    #[error("extension degree must be at least 1")]
    InvalidDegree,
    #[error("no irreducible polynomial of degree {e} over F_{p} found in {trials} trials")]
    IrreducibleSearchExhausted { p: u64, e: usize, trials: usize },
    #[error("modulus is not a monic irreducible polynomial of the stated degree")]
    ReducibleModulus,
    #[error("division by zero")]
    DivisionByZero,
    #[error("operation requires a finite field")]
    WrongFieldKind,
    #[error("operands belong to different fields")]
    FieldMismatch,
    #[error("zero polynomial")]
    ZeroPolynomial,
    #[error("cannot parse scalar: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Prime,
    Extension,
    Rational,
}

/// Description of a field. `modulus` holds the monic defining polynomial of
/// an extension, lowest coefficient first (length `e + 1`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldCtx {
    pub kind: FieldKind,
    pub p: u64,
    pub e: usize,
    pub modulus: Vec<u64>,
}

/// Field element in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scalar {
    /// Residue in `[0, p)`.
    Fp(u64),
    /// Coefficients in `[0, p)` of a polynomial of degree `< e`, lowest first.
    Fq(Vec<u64>),
    /// Reduced fraction with positive denominator.
    Q(BigRational),
}

#[derive(Clone)]
pub struct Field(Arc<FieldCtx>);

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl Eq for Field {}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(q) {
            return n == q;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    // These bases are a deterministic witness set for all n < 2^64.
    'outer: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = 1u64;
        let mut base = a % n;
        let mut e = d;
        while e > 0 {
            if e & 1 == 1 {
                x = mulmod(x, base);
            }
            base = mulmod(base, base);
            e >>= 1;
        }
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

fn check_prime(p: u64) -> Result<(), FieldError> {
    if !is_prime(p) {
        return Err(FieldError::NonPrimeModulus(p));
    }
    if p >= PRIME_BOUND {
        return Err(FieldError::ModulusTooLarge(p));
    }
    Ok(())
}

fn divisors(e: usize) -> Vec<usize> {
    (1..e).filter(|d| e.is_multiple_of(*d)).collect()
}

impl Field {
    pub fn prime(p: u64) -> Result<Field, FieldError> {
        check_prime(p)?;
        Ok(Field(Arc::new(FieldCtx { kind: FieldKind::Prime, p, e: 1, modulus: Vec::new() })))
    }

    pub fn rational() -> Field {
        Field(Arc::new(FieldCtx { kind: FieldKind::Rational, p: 0, e: 1, modulus: Vec::new() }))
    }

    /// F_{p^e} with a modulus found by seeded random search. For `e = 1` this
    /// is the prime field.
    pub fn extension(p: u64, e: usize, seed: u64) -> Result<Field, FieldError> {
        if e == 0 {
            return Err(FieldError::InvalidDegree);
        }
        let base = Field::prime(p)?;
        if e == 1 {
            return Ok(base);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..IRREDUCIBLE_TRIALS {
            let mut coeffs: Vec<u64> = (0..e).map(|_| rng.random_range(0..p)).collect();
            if coeffs[0] == 0 {
                continue;
            }
            coeffs.push(1);
            if is_irreducible(&base, &coeffs) {
                return Ok(Field(Arc::new(FieldCtx { kind: FieldKind::Extension, p, e, modulus: coeffs })));
            }
        }
        Err(FieldError::IrreducibleSearchExhausted { p, e, trials: IRREDUCIBLE_TRIALS })
    }

    /// Extension with an explicitly given monic modulus (lowest coefficient first).
    pub fn with_modulus(p: u64, modulus: Vec<u64>) -> Result<Field, FieldError> {
        let base = Field::prime(p)?;
        if modulus.len() < 2 || *modulus.last().unwrap() != 1 || modulus.iter().any(|&c| c >= p) {
            return Err(FieldError::ReducibleModulus);
        }
        if modulus.len() == 2 {
            return Ok(base);
        }
        if !is_irreducible(&base, &modulus) {
            return Err(FieldError::ReducibleModulus);
        }
        let e = modulus.len() - 1;
        Ok(Field(Arc::new(FieldCtx { kind: FieldKind::Extension, p, e, modulus })))
    }

    /// Generic constructor mirroring the three field kinds.
    pub fn create(kind: FieldKind, p: u64, e: usize, seed: u64) -> Result<Field, FieldError> {
        match kind {
            FieldKind::Rational => Ok(Field::rational()),
            FieldKind::Prime => {
                if e != 1 {
                    return Err(FieldError::InvalidDegree);
                }
                Field::prime(p)
            }
            FieldKind::Extension => Field::extension(p, e, seed),
        }
    }

    pub fn ctx(&self) -> &FieldCtx {
        &self.0
    }

    pub fn kind(&self) -> FieldKind {
        self.0.kind
    }

    pub fn characteristic(&self) -> u64 {
        self.0.p
    }

    pub fn degree(&self) -> usize {
        self.0.e
    }

    pub fn is_finite(&self) -> bool {
        self.0.kind != FieldKind::Rational
    }

    /// Number of elements, `None` for the rationals.
    pub fn order(&self) -> Option<BigUint> {
        if self.is_finite() {
            Some(BigUint::from(self.0.p).pow(self.0.e as u32))
        } else {
            None
        }
    }

    /// Number of elements if finite and below 2^64.
    pub fn order_u64(&self) -> Option<u64> {
        self.order().and_then(|q| q.to_u64())
    }

    pub fn name(&self) -> String {
        match self.0.kind {
            FieldKind::Prime => format!("F_{}", self.0.p),
            FieldKind::Extension => format!("F_{}^{}", self.0.p, self.0.e),
            FieldKind::Rational => "Q".to_string(),
        }
    }

    /// The prime subfield (the field itself when prime; `None` for ℚ).
    pub fn prime_subfield(&self) -> Option<Field> {
        match self.0.kind {
            FieldKind::Prime => Some(self.clone()),
            FieldKind::Extension => Field::prime(self.0.p).ok(),
            FieldKind::Rational => None,
        }
    }

    pub fn zero(&self) -> Scalar {
        match self.0.kind {
            FieldKind::Prime => Scalar::Fp(0),
            FieldKind::Extension => Scalar::Fq(vec![0; self.0.e]),
            FieldKind::Rational => Scalar::Q(BigRational::zero()),
        }
    }

    pub fn one(&self) -> Scalar {
        self.from_i64(1)
    }

    pub fn from_i64(&self, a: i64) -> Scalar {
        match self.0.kind {
            FieldKind::Rational => Scalar::Q(BigRational::from_integer(BigInt::from(a))),
            _ => {
                let p = self.0.p as i64;
                self.from_residue(a.rem_euclid(p) as u64)
            }
        }
    }

    /// Embeds a residue of the prime subfield. Panics for ℚ.
    pub fn from_residue(&self, a: u64) -> Scalar {
        match self.0.kind {
            FieldKind::Prime => Scalar::Fp(a % self.0.p),
            FieldKind::Extension => {
                let mut v = vec![0; self.0.e];
                v[0] = a % self.0.p;
                Scalar::Fq(v)
            }
            FieldKind::Rational => panic!("residues are not defined over Q"),
        }
    }

    pub fn from_rational(&self, r: BigRational) -> Result<Scalar, FieldError> {
        match self.0.kind {
            FieldKind::Rational => Ok(Scalar::Q(r)),
            _ => {
                let p = BigInt::from(self.0.p);
                let num = (r.numer() % &p + &p) % &p;
                let den = (r.denom() % &p + &p) % &p;
                let num = self.from_residue(num.to_u64().unwrap());
                let den = self.from_residue(den.to_u64().unwrap());
                self.div(&num, &den)
            }
        }
    }

    /// Element with the given index in `[0, q)`: base-p digits are the coefficients.
    pub fn element(&self, index: u128) -> Scalar {
        match self.0.kind {
            FieldKind::Prime => Scalar::Fp((index % self.0.p as u128) as u64),
            FieldKind::Extension => {
                let p = self.0.p as u128;
                let mut idx = index;
                let v = (0..self.0.e)
                    .map(|_| {
                        let d = (idx % p) as u64;
                        idx /= p;
                        d
                    })
                    .collect();
                Scalar::Fq(v)
            }
            FieldKind::Rational => Scalar::Q(BigRational::from_integer(BigInt::from(index))),
        }
    }

    /// Inverse of [`Field::element`] for finite fields.
    pub fn index_of(&self, a: &Scalar) -> u128 {
        match a {
            Scalar::Fp(x) => *x as u128,
            Scalar::Fq(v) => v.iter().rev().fold(0u128, |acc, &c| acc * self.0.p as u128 + c as u128),
            Scalar::Q(_) => panic!("index_of on a rational scalar"),
        }
    }

    pub fn is_zero(&self, a: &Scalar) -> bool {
        match a {
            Scalar::Fp(x) => *x == 0,
            Scalar::Fq(v) => v.iter().all(|&c| c == 0),
            Scalar::Q(r) => r.is_zero(),
        }
    }

    pub fn is_one(&self, a: &Scalar) -> bool {
        *a == self.one()
    }

    /// Checks that `a` is a canonical element of this field.
    pub fn contains(&self, a: &Scalar) -> bool {
        match (self.0.kind, a) {
            (FieldKind::Prime, Scalar::Fp(x)) => *x < self.0.p,
            (FieldKind::Extension, Scalar::Fq(v)) => v.len() == self.0.e && v.iter().all(|&c| c < self.0.p),
            (FieldKind::Rational, Scalar::Q(_)) => true,
            _ => false,
        }
    }

    pub fn add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        let p = self.0.p;
        match (a, b) {
            (Scalar::Fp(x), Scalar::Fp(y)) => Scalar::Fp((x + y) % p),
            (Scalar::Fq(x), Scalar::Fq(y)) => Scalar::Fq(x.iter().zip(y).map(|(s, t)| (s + t) % p).collect()),
            (Scalar::Q(x), Scalar::Q(y)) => Scalar::Q(x + y),
            _ => panic!("mixed scalar representations"),
        }
    }

    pub fn neg(&self, a: &Scalar) -> Scalar {
        let p = self.0.p;
        match a {
            Scalar::Fp(x) => Scalar::Fp((p - x) % p),
            Scalar::Fq(v) => Scalar::Fq(v.iter().map(|x| (p - x) % p).collect()),
            Scalar::Q(x) => Scalar::Q(-x),
        }
    }

    pub fn sub(&self, a: &Scalar, b: &Scalar) -> Scalar {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        let p = self.0.p;
        match (a, b) {
            (Scalar::Fp(x), Scalar::Fp(y)) => Scalar::Fp(x * y % p),
            (Scalar::Fq(x), Scalar::Fq(y)) => Scalar::Fq(self.ext_mul(x, y)),
            (Scalar::Q(x), Scalar::Q(y)) => Scalar::Q(x * y),
            _ => panic!("mixed scalar representations"),
        }
    }

    fn ext_mul(&self, x: &[u64], y: &[u64]) -> Vec<u64> {
        let p = self.0.p;
        let e = self.0.e;
        let mut prod = vec![0u64; 2 * e - 1];
        for (i, &a) in x.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in y.iter().enumerate() {
                prod[i + j] = (prod[i + j] + a * b) % p;
            }
        }
        let md = &self.0.modulus;
        for top in (e..prod.len()).rev() {
            let c = prod[top];
            if c == 0 {
                continue;
            }
            // x^top = -sum_{i<e} md[i] x^{top-e+i}
            for (i, &mi) in md.iter().enumerate().take(e) {
                let t = top - e + i;
                prod[t] = (prod[t] + (p - c) * mi) % p;
            }
            prod[top] = 0;
        }
        prod.truncate(e);
        prod
    }

    pub fn inv(&self, a: &Scalar) -> Result<Scalar, FieldError> {
        if self.is_zero(a) {
            return Err(FieldError::DivisionByZero);
        }
        let p = self.0.p;
        Ok(match a {
            Scalar::Fp(x) => Scalar::Fp(inv_mod(*x, p)),
            Scalar::Fq(v) => Scalar::Fq(self.ext_inv(v)),
            Scalar::Q(r) => Scalar::Q(r.recip()),
        })
    }

    fn ext_inv(&self, v: &[u64]) -> Vec<u64> {
        // extended Euclid on (modulus, v) over F_p
        let p = self.0.p;
        let trim = |mut a: Vec<u64>| {
            while a.len() > 1 && *a.last().unwrap() == 0 {
                a.pop();
            }
            a
        };
        let mut r0 = self.0.modulus.clone();
        let mut r1 = trim(v.to_vec());
        let mut s0 = vec![0u64];
        let mut s1 = vec![1u64];
        while !(r1.len() == 1 && r1[0] == 0) {
            let (q, r) = fp_divrem(&r0, &r1, p);
            let qs = fp_mul(&q, &s1, p);
            let s2 = trim(fp_sub(&s0, &qs, p));
            r0 = std::mem::replace(&mut r1, trim(r));
            s0 = std::mem::replace(&mut s1, s2);
        }
        // r0 is a nonzero constant
        let c = inv_mod(r0[0], p);
        let mut out: Vec<u64> = s0.iter().map(|&x| x * c % p).collect();
        out.resize(self.0.e, 0);
        out
    }

    pub fn div(&self, a: &Scalar, b: &Scalar) -> Result<Scalar, FieldError> {
        Ok(self.mul(a, &self.inv(b)?))
    }

    pub fn pow(&self, a: &Scalar, mut e: u64) -> Scalar {
        let mut base = a.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    pub fn pow_big(&self, a: &Scalar, e: &BigUint) -> Scalar {
        let mut acc = self.one();
        for i in (0..e.bits()).rev() {
            acc = self.mul(&acc, &acc);
            if e.bit(i) {
                acc = self.mul(&acc, a);
            }
        }
        acc
    }

    /// Uniform random element (rationals: small integers in [-10, 10]).
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Scalar {
        match self.0.kind {
            FieldKind::Prime => Scalar::Fp(rng.random_range(0..self.0.p)),
            FieldKind::Extension => Scalar::Fq((0..self.0.e).map(|_| rng.random_range(0..self.0.p)).collect()),
            FieldKind::Rational => self.from_i64(rng.random_range(-10..=10)),
        }
    }

    pub fn random_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> Scalar {
        loop {
            let a = self.random(rng);
            if !self.is_zero(&a) {
                return a;
            }
        }
    }

    /// Decimal string form: residue, bracketed coefficient list, or `num/den`.
    pub fn format(&self, a: &Scalar) -> String {
        a.to_string()
    }

    pub fn parse(&self, s: &str) -> Result<Scalar, FieldError> {
        let bad = || FieldError::Parse(s.to_string());
        let s = s.trim();
        match self.0.kind {
            FieldKind::Prime => {
                let v: u64 = s.parse().map_err(|_| bad())?;
                if v >= self.0.p {
                    return Err(bad());
                }
                Ok(Scalar::Fp(v))
            }
            FieldKind::Extension => {
                let inner = s.strip_prefix('[').and_then(|t| t.strip_suffix(']')).ok_or_else(bad)?;
                let v: Vec<u64> =
                    inner.split(',').map(|t| t.trim().parse::<u64>().map_err(|_| bad())).collect::<Result<_, _>>()?;
                let a = Scalar::Fq(v);
                if self.contains(&a) {
                    Ok(a)
                } else {
                    Err(bad())
                }
            }
            FieldKind::Rational => {
                let r = match s.split_once('/') {
                    Some((n, d)) => {
                        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
                        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
                        if d.is_zero() {
                            return Err(bad());
                        }
                        BigRational::new(n, d)
                    }
                    None => BigRational::from_integer(BigInt::from_str(s).map_err(|_| bad())?),
                };
                Ok(Scalar::Q(r))
            }
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Fp(x) => write!(f, "{x}"),
            Scalar::Fq(v) => {
                write!(f, "[")?;
                for (i, c) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, "]")
            }
            Scalar::Q(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
        }
    }
}

pub fn inv_mod(a: u64, p: u64) -> u64 {
    let (mut t, mut newt) = (0i64, 1i64);
    let (mut r, mut newr) = (p as i64, (a % p) as i64);
    while newr != 0 {
        let q = r / newr;
        (t, newt) = (newt, t - q * newt);
        (r, newr) = (newr, r - q * newr);
    }
    debug_assert_eq!(r, 1);
    t.rem_euclid(p as i64) as u64
}

pub fn pow_mod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * a % p;
        }
        a = a * a % p;
        e >>= 1;
    }
    acc
}

// Raw F_p polynomial helpers on coefficient vectors (lowest first).

fn fp_mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    out
}

fn fp_sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| {
            let x = a.get(i).copied().unwrap_or(0);
            let y = b.get(i).copied().unwrap_or(0);
            (x + p - y) % p
        })
        .collect()
}

fn fp_divrem(a: &[u64], b: &[u64], p: u64) -> (Vec<u64>, Vec<u64>) {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead_inv = inv_mod(b[db], p);
    if r.len() < b.len() {
        return (vec![0], r);
    }
    let mut q = vec![0u64; r.len() - db];
    for i in (0..q.len()).rev() {
        let c = r[i + db] * lead_inv % p;
        q[i] = c;
        if c != 0 {
            for j in 0..=db {
                r[i + j] = (r[i + j] + (p - c) * b[j]) % p;
            }
        }
    }
    r.truncate(db.max(1));
    (q, r)
}

/// Rabin-style irreducibility test for a monic polynomial over the prime field `base`.
fn is_irreducible(base: &Field, monic: &[u64]) -> bool {
    let e = monic.len() - 1;
    let f = UniPoly::new(base, monic.iter().map(|&c| Scalar::Fp(c)).collect());
    let x = UniPoly::x(base);
    let p = base.characteristic();
    // frob[d] = x^{p^d} mod f
    let mut frob = Vec::with_capacity(e + 1);
    frob.push(x.rem(&f).expect("nonzero modulus"));
    for d in 1..=e {
        let prev: &UniPoly = &frob[d - 1];
        frob.push(prev.pow_mod(p, &f).expect("nonzero modulus"));
    }
    if frob[e] != x.rem(&f).unwrap() {
        return false;
    }
    for d in divisors(e) {
        let g = frob[d].sub(&x).expect("same field").gcd(&f).expect("same field");
        if g.degree() != Some(0) {
            return false;
        }
    }
    true
}

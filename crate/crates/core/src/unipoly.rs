//! Dense univariate polynomials over a [`Field`] and root finding over finite fields.

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::field::{Field, FieldError, Scalar};

/// Coefficients lowest degree first, trailing zeros stripped. The zero
/// polynomial has an empty coefficient list and degree `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniPoly {
    field: Field,
    coeffs: Vec<Scalar>,
}

impl UniPoly {
    pub fn new(field: &Field, mut coeffs: Vec<Scalar>) -> UniPoly {
        while coeffs.last().is_some_and(|c| field.is_zero(c)) {
            coeffs.pop();
        }
        UniPoly { field: field.clone(), coeffs }
    }

    pub fn zero(field: &Field) -> UniPoly {
        UniPoly { field: field.clone(), coeffs: Vec::new() }
    }

    pub fn constant(field: &Field, c: Scalar) -> UniPoly {
        UniPoly::new(field, vec![c])
    }

    pub fn x(field: &Field) -> UniPoly {
        UniPoly::new(field, vec![field.zero(), field.one()])
    }

    /// Product of `(x - r)` over the given roots.
    pub fn from_roots(field: &Field, roots: &[Scalar]) -> UniPoly {
        let mut acc = UniPoly::constant(field, field.one());
        for r in roots {
            let lin = UniPoly::new(field, vec![field.neg(r), field.one()]);
            acc = acc.mul(&lin).expect("same field");
        }
        acc
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Scalar {
        self.coeffs.get(i).cloned().unwrap_or_else(|| self.field.zero())
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> Option<&Scalar> {
        self.coeffs.last()
    }

    fn check(&self, other: &UniPoly) -> Result<(), FieldError> {
        if self.field == other.field {
            Ok(())
        } else {
            Err(FieldError::FieldMismatch)
        }
    }

    pub fn eval(&self, t: &Scalar) -> Scalar {
        let f = &self.field;
        self.coeffs.iter().rev().fold(f.zero(), |acc, c| f.add(&f.mul(&acc, t), c))
    }

    pub fn add(&self, other: &UniPoly) -> Result<UniPoly, FieldError> {
        self.check(other)?;
        let f = &self.field;
        let n = self.coeffs.len().max(other.coeffs.len());
        let c = (0..n).map(|i| f.add(&self.coeff(i), &other.coeff(i))).collect();
        Ok(UniPoly::new(f, c))
    }

    pub fn neg(&self) -> UniPoly {
        let f = &self.field;
        UniPoly::new(f, self.coeffs.iter().map(|c| f.neg(c)).collect())
    }

    pub fn sub(&self, other: &UniPoly) -> Result<UniPoly, FieldError> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Scalar) -> UniPoly {
        let f = &self.field;
        UniPoly::new(f, self.coeffs.iter().map(|a| f.mul(a, c)).collect())
    }

    pub fn mul(&self, other: &UniPoly) -> Result<UniPoly, FieldError> {
        self.check(other)?;
        let f = &self.field;
        if self.is_zero() || other.is_zero() {
            return Ok(UniPoly::zero(f));
        }
        let mut out = vec![f.zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if f.is_zero(a) {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = f.add(&out[i + j], &f.mul(a, b));
            }
        }
        Ok(UniPoly::new(f, out))
    }

    pub fn monic(&self) -> UniPoly {
        match self.leading() {
            None => self.clone(),
            Some(lc) => self.scale(&self.field.inv(lc).expect("nonzero leading coefficient")),
        }
    }

    pub fn divrem(&self, d: &UniPoly) -> Result<(UniPoly, UniPoly), FieldError> {
        self.check(d)?;
        let f = &self.field;
        let dd = d.degree().ok_or(FieldError::ZeroPolynomial)?;
        let lead_inv = f.inv(d.leading().unwrap())?;
        let mut r = self.coeffs.clone();
        if r.len() <= dd {
            return Ok((UniPoly::zero(f), self.clone()));
        }
        let mut q = vec![f.zero(); r.len() - dd];
        for i in (0..q.len()).rev() {
            let c = f.mul(&r[i + dd], &lead_inv);
            if f.is_zero(&c) {
                continue;
            }
            for (j, dc) in d.coeffs.iter().enumerate() {
                r[i + j] = f.sub(&r[i + j], &f.mul(&c, dc));
            }
            q[i] = c;
        }
        r.truncate(dd);
        Ok((UniPoly::new(f, q), UniPoly::new(f, r)))
    }

    pub fn rem(&self, d: &UniPoly) -> Result<UniPoly, FieldError> {
        Ok(self.divrem(d)?.1)
    }

    /// Monic greatest common divisor (zero if both inputs are zero).
    pub fn gcd(&self, other: &UniPoly) -> Result<UniPoly, FieldError> {
        self.check(other)?;
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b)?;
            a = b;
            b = r;
        }
        Ok(a.monic())
    }

    pub fn derivative(&self) -> UniPoly {
        let f = &self.field;
        let c = self.coeffs.iter().enumerate().skip(1).map(|(i, a)| f.mul(a, &f.from_i64(i as i64))).collect();
        UniPoly::new(f, c)
    }

    fn mul_mod(&self, other: &UniPoly, m: &UniPoly) -> UniPoly {
        self.mul(other).expect("same field").rem(m).expect("nonzero modulus")
    }

    /// `self^e mod m`.
    pub fn pow_mod(&self, mut e: u64, m: &UniPoly) -> Result<UniPoly, FieldError> {
        self.check(m)?;
        let mut base = self.rem(m)?;
        let mut acc = UniPoly::constant(&self.field, self.field.one()).rem(m)?;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_mod(&base, m);
            }
            base = base.mul_mod(&base, m);
            e >>= 1;
        }
        Ok(acc)
    }

    pub fn pow_mod_big(&self, e: &BigUint, m: &UniPoly) -> Result<UniPoly, FieldError> {
        self.check(m)?;
        let base = self.rem(m)?;
        let mut acc = UniPoly::constant(&self.field, self.field.one()).rem(m)?;
        for i in (0..e.bits()).rev() {
            acc = acc.mul_mod(&acc, m);
            if e.bit(i) {
                acc = acc.mul_mod(&base, m);
            }
        }
        Ok(acc)
    }

    /// `x^q mod m` where q is the field order, by repeated p-th powers.
    fn frobenius_x(&self, m: &UniPoly) -> UniPoly {
        let p = self.field.characteristic();
        let mut h = UniPoly::x(&self.field).rem(m).expect("nonzero modulus");
        for _ in 0..self.field.degree() {
            h = h.pow_mod(p, m).expect("same field");
        }
        h
    }

    /// Distinct roots in the coefficient field, sorted. Uses seed 0 for splitting.
    pub fn roots(&self) -> Result<Vec<Scalar>, FieldError> {
        self.roots_seeded(0)
    }

    /// Distinct roots via gcd(f, x^q - x) followed by seeded equal-degree splitting.
    pub fn roots_seeded(&self, seed: u64) -> Result<Vec<Scalar>, FieldError> {
        if !self.field.is_finite() {
            return Err(FieldError::WrongFieldKind);
        }
        if self.is_zero() {
            return Err(FieldError::ZeroPolynomial);
        }
        if self.degree() == Some(0) {
            return Ok(Vec::new());
        }
        let f = self.monic();
        let xq = f.frobenius_x(&f);
        let g = xq.sub(&UniPoly::x(&self.field))?.gcd(&f)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut roots = Vec::new();
        split_linear(&g, &mut rng, &mut roots);
        roots.sort();
        Ok(roots)
    }
}

/// Splits a monic squarefree product of distinct linear factors.
fn split_linear(g: &UniPoly, rng: &mut ChaCha8Rng, out: &mut Vec<Scalar>) {
    let field = g.field().clone();
    match g.degree() {
        None | Some(0) => return,
        Some(1) => {
            out.push(field.neg(&g.coeffs()[0]));
            return;
        }
        _ => {}
    }
    let p = field.characteristic();
    let q = field.order().expect("finite field");
    let n = g.degree().unwrap();
    loop {
        let a = field.random(rng);
        let h = if p == 2 {
            // absolute trace of a*x
            let mut t = UniPoly::new(&field, vec![field.zero(), a]).rem(g).unwrap();
            let mut acc = t.clone();
            for _ in 1..field.degree() {
                t = t.mul_mod(&t, g);
                acc = acc.add(&t).unwrap();
            }
            acc.gcd(g).unwrap()
        } else {
            let lin = UniPoly::new(&field, vec![a, field.one()]);
            let e = (&q - 1u32) / 2u32;
            let w = lin.pow_mod_big(&e, g).unwrap();
            w.sub(&UniPoly::constant(&field, field.one())).unwrap().gcd(g).unwrap()
        };
        let d = h.degree().unwrap_or(0);
        if d > 0 && d < n {
            let (rest, _) = g.divrem(&h).unwrap();
            split_linear(&h, rng, out);
            split_linear(&rest.monic(), rng, out);
            return;
        }
    }
}

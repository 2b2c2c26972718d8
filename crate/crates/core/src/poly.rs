//! Sparse multivariate polynomials, matrices of linear forms, symbolic
//! pfaffians and maximal minors.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{Field, FieldError, FieldKind, Scalar};
use crate::linalg::{LinalgError, Matrix};
use crate::unipoly::UniPoly;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("point has {got} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("base points of the line are linearly dependent")]
    DependentBasePoints,
    #[error("polynomial is not homogeneous")]
    NotHomogeneous,
    #[error("matrix of linear forms is not skew-symmetric")]
    NotSkewSymmetric,
    #[error("field has at most {needed} elements; interpolation needs more")]
    FieldTooSmall { needed: usize },
    #[error("shape error: {0}")]
    ShapeError(String),
    #[error("operands belong to different fields or rings")]
    FieldMismatch,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Exponent vector ordered graded-lexicographically (total degree first,
/// then the first differing exponent, with x₀ > x₁ > …).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All exponent vectors of total degree `d` in `n` variables, in decreasing
/// graded-lex order.
pub fn monomials_of_degree(n: usize, d: u32) -> Vec<Monomial> {
    fn rec(n: usize, d: u32, prefix: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if prefix.len() == n - 1 {
            prefix.push(d);
            out.push(Monomial(prefix.clone()));
            prefix.pop();
            return;
        }
        for e in (0..=d).rev() {
            prefix.push(e);
            rec(n, d - e, prefix, out);
            prefix.pop();
        }
    }
    if n == 0 {
        return if d == 0 { vec![Monomial(Vec::new())] } else { Vec::new() };
    }
    let mut out = Vec::new();
    rec(n, d, &mut Vec::with_capacity(n), &mut out);
    out
}

/// JSON form of one term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub exponents: Vec<u32>,
    pub coeff: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiPoly {
    field: Field,
    nvars: usize,
    terms: BTreeMap<Monomial, Scalar>,
}

impl MultiPoly {
    pub fn zero(field: &Field, nvars: usize) -> MultiPoly {
        MultiPoly { field: field.clone(), nvars, terms: BTreeMap::new() }
    }

    pub fn constant(field: &Field, nvars: usize, c: Scalar) -> MultiPoly {
        let mut p = MultiPoly::zero(field, nvars);
        p.add_term(Monomial(vec![0; nvars]), c);
        p
    }

    pub fn var(field: &Field, nvars: usize, i: usize) -> MultiPoly {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = MultiPoly::zero(field, nvars);
        p.add_term(Monomial(e), field.one());
        p
    }

    /// The linear form Σ cᵢxᵢ.
    pub fn linear(field: &Field, coeffs: &[Scalar]) -> MultiPoly {
        let n = coeffs.len();
        let mut p = MultiPoly::zero(field, n);
        for (i, c) in coeffs.iter().enumerate() {
            let mut e = vec![0; n];
            e[i] = 1;
            p.add_term(Monomial(e), c.clone());
        }
        p
    }

    pub fn from_terms(field: &Field, nvars: usize, terms: Vec<(Vec<u32>, Scalar)>) -> Result<MultiPoly, PolyError> {
        let mut p = MultiPoly::zero(field, nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(PolyError::DimensionMismatch { expected: nvars, got: e.len() });
            }
            if !field.contains(&c) {
                return Err(PolyError::FieldMismatch);
            }
            p.add_term(Monomial(e), c);
        }
        Ok(p)
    }

    /// Adds c·x^e in place.
    pub fn add_term(&mut self, e: Monomial, c: Scalar) {
        let f = &self.field;
        if f.is_zero(&c) {
            return;
        }
        match self.terms.get_mut(&e) {
            Some(old) => {
                let s = f.add(old, &c);
                if f.is_zero(&s) {
                    self.terms.remove(&e);
                } else {
                    *old = s;
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Terms in increasing graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, e: &[u32]) -> Scalar {
        self.terms.get(&Monomial(e.to_vec())).cloned().unwrap_or_else(|| self.field.zero())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `None` stands for −∞ (zero polynomial).
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    /// All terms of equal total degree (vacuously true for zero).
    pub fn is_homogeneous(&self) -> bool {
        let mut it = self.terms.keys().map(Monomial::degree);
        match it.next() {
            None => true,
            Some(d) => it.all(|x| x == d),
        }
    }

    fn check(&self, other: &MultiPoly) -> Result<(), PolyError> {
        if self.field != other.field || self.nvars != other.nvars {
            Err(PolyError::FieldMismatch)
        } else {
            Ok(())
        }
    }

    pub fn add(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.check(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> MultiPoly {
        let f = &self.field;
        MultiPoly {
            field: f.clone(),
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), f.neg(c))).collect(),
        }
    }

    pub fn sub(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Scalar) -> MultiPoly {
        let f = &self.field;
        let mut out = MultiPoly::zero(f, self.nvars);
        for (e, a) in &self.terms {
            out.add_term(e.clone(), f.mul(a, c));
        }
        out
    }

    pub fn mul(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.check(other)?;
        let f = &self.field;
        let mut acc: HashMap<Vec<u32>, Scalar> = HashMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.0.iter().zip(&eb.0).map(|(x, y)| x + y).collect();
                let prod = f.mul(ca, cb);
                match acc.get_mut(&e) {
                    Some(v) => *v = f.add(v, &prod),
                    None => {
                        acc.insert(e, prod);
                    }
                }
            }
        }
        let mut out = MultiPoly::zero(f, self.nvars);
        for (e, c) in acc {
            out.add_term(Monomial(e), c);
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> MultiPoly {
        let mut acc = MultiPoly::constant(&self.field, self.nvars, self.field.one());
        for _ in 0..k {
            acc = acc.mul(self).expect("same ring");
        }
        acc
    }

    pub fn eval(&self, point: &[Scalar]) -> Result<Scalar, PolyError> {
        if point.len() != self.nvars {
            return Err(PolyError::DimensionMismatch { expected: self.nvars, got: point.len() });
        }
        let f = &self.field;
        let maxe = self.terms.keys().flat_map(|m| m.0.iter().copied()).max().unwrap_or(0) as usize;
        // powers[i][j] = point[i]^j
        let powers: Vec<Vec<Scalar>> = point
            .iter()
            .map(|x| {
                let mut v = Vec::with_capacity(maxe + 1);
                v.push(f.one());
                for j in 1..=maxe {
                    v.push(f.mul(&v[j - 1], x));
                }
                v
            })
            .collect();
        let mut acc = f.zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (i, &k) in e.0.iter().enumerate() {
                if k > 0 {
                    t = f.mul(&t, &powers[i][k as usize]);
                }
            }
            acc = f.add(&acc, &t);
        }
        Ok(acc)
    }

    /// ∂f/∂x_i.
    pub fn derivative(&self, i: usize) -> MultiPoly {
        let f = &self.field;
        let mut out = MultiPoly::zero(f, self.nvars);
        for (e, c) in &self.terms {
            let k = e.0[i];
            if k == 0 {
                continue;
            }
            let mut d = e.0.clone();
            d[i] -= 1;
            out.add_term(Monomial(d), f.mul(c, &f.from_i64(k as i64)));
        }
        out
    }

    pub fn gradient_at(&self, point: &[Scalar]) -> Result<Vec<Scalar>, PolyError> {
        (0..self.nvars).map(|i| self.derivative(i).eval(point)).collect()
    }

    /// g(t) = f(p0 + t·p1) for homogeneous f and independent p0, p1.
    pub fn restrict_to_line(&self, p0: &[Scalar], p1: &[Scalar]) -> Result<UniPoly, PolyError> {
        let n = self.nvars;
        for p in [p0, p1] {
            if p.len() != n {
                return Err(PolyError::DimensionMismatch { expected: n, got: p.len() });
            }
        }
        if !self.is_homogeneous() {
            return Err(PolyError::NotHomogeneous);
        }
        let f = &self.field;
        let pair = Matrix::from_rows(f, vec![p0.to_vec(), p1.to_vec()])?;
        if pair.rank() < 2 {
            return Err(PolyError::DependentBasePoints);
        }
        let maxe = self.terms.keys().flat_map(|m| m.0.iter().copied()).max().unwrap_or(0) as usize;
        let powers: Vec<Vec<UniPoly>> = (0..n)
            .map(|i| {
                let lin = UniPoly::new(f, vec![p0[i].clone(), p1[i].clone()]);
                let mut v = vec![UniPoly::constant(f, f.one())];
                for j in 1..=maxe {
                    let next = v[j - 1].mul(&lin).expect("same field");
                    v.push(next);
                }
                v
            })
            .collect();
        let mut acc = UniPoly::zero(f);
        for (e, c) in &self.terms {
            let mut t = UniPoly::constant(f, c.clone());
            for (i, &k) in e.0.iter().enumerate() {
                if k > 0 {
                    t = t.mul(&powers[i][k as usize]).expect("same field");
                }
            }
            acc = acc.add(&t).expect("same field");
        }
        Ok(acc)
    }

    /// Rewrites the coefficients into another field through `map`.
    pub fn map_coeffs(&self, field: &Field, map: impl Fn(&Scalar) -> Scalar) -> MultiPoly {
        let mut out = MultiPoly::zero(field, self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), map(c));
        }
        out
    }

    /// Terms in decreasing graded-lex order with decimal coefficients.
    pub fn to_json_terms(&self) -> Vec<TermJson> {
        self.terms.iter().rev().map(|(e, c)| TermJson { exponents: e.0.clone(), coeff: c.to_string() }).collect()
    }

    pub fn from_json_terms(field: &Field, nvars: usize, terms: &[TermJson]) -> Result<MultiPoly, PolyError> {
        let parsed = terms
            .iter()
            .map(|t| Ok((t.exponents.clone(), field.parse(&t.coeff)?)))
            .collect::<Result<Vec<_>, FieldError>>()?;
        MultiPoly::from_terms(field, nvars, parsed)
    }
}

/// Matrix whose entries are linear forms Σ c_v x_v in `nvars` variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinFormMatrix {
    field: Field,
    rows: usize,
    cols: usize,
    nvars: usize,
    entries: Vec<Vec<Scalar>>,
}

impl LinFormMatrix {
    pub fn zeros(field: &Field, rows: usize, cols: usize, nvars: usize) -> LinFormMatrix {
        LinFormMatrix { field: field.clone(), rows, cols, nvars, entries: vec![vec![field.zero(); nvars]; rows * cols] }
    }

    pub fn from_fn(
        field: &Field,
        rows: usize,
        cols: usize,
        nvars: usize,
        mut f: impl FnMut(usize, usize) -> Vec<Scalar>,
    ) -> LinFormMatrix {
        let mut entries = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let e = f(r, c);
                assert_eq!(e.len(), nvars);
                entries.push(e);
            }
        }
        LinFormMatrix { field: field.clone(), rows, cols, nvars, entries }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Coefficient vector of entry (r, c).
    pub fn entry(&self, r: usize, c: usize) -> &[Scalar] {
        &self.entries[r * self.cols + c]
    }

    pub fn set_entry(&mut self, r: usize, c: usize, coeffs: Vec<Scalar>) {
        assert_eq!(coeffs.len(), self.nvars);
        self.entries[r * self.cols + c] = coeffs;
    }

    pub fn entry_poly(&self, r: usize, c: usize) -> MultiPoly {
        MultiPoly::linear(&self.field, self.entry(r, c))
    }

    pub fn eval(&self, point: &[Scalar]) -> Result<Matrix, PolyError> {
        if point.len() != self.nvars {
            return Err(PolyError::DimensionMismatch { expected: self.nvars, got: point.len() });
        }
        let f = &self.field;
        Ok(Matrix::from_fn(f, self.rows, self.cols, |r, c| crate::linalg::dot(f, self.entry(r, c), point)))
    }

    pub fn is_skew(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let f = &self.field;
        for r in 0..self.rows {
            if self.entry(r, r).iter().any(|a| !f.is_zero(a)) {
                return false;
            }
            for c in 0..r {
                let ok = self.entry(r, c).iter().zip(self.entry(c, r)).all(|(a, b)| f.is_zero(&f.add(a, b)));
                if !ok {
                    return false;
                }
            }
        }
        true
    }

    /// Maximal minors indexed by column subsets, computed by Laplace
    /// expansion along the rows with memoization over column subsets.
    fn minor_table(&self) -> HashMap<u64, MultiPoly> {
        let f = &self.field;
        let mut level: HashMap<u64, MultiPoly> = HashMap::new();
        level.insert(0, MultiPoly::constant(f, self.nvars, f.one()));
        for r in 0..self.rows {
            let entries: Vec<MultiPoly> = (0..self.cols).map(|c| self.entry_poly(r, c)).collect();
            let mut next: HashMap<u64, MultiPoly> = HashMap::new();
            for mask in subsets_of_size(self.cols, r + 1) {
                let cols: Vec<usize> = (0..self.cols).filter(|c| mask >> c & 1 == 1).collect();
                let mut acc = MultiPoly::zero(f, self.nvars);
                for (j, &c) in cols.iter().enumerate() {
                    if entries[c].is_zero() {
                        continue;
                    }
                    let sub = &level[&(mask & !(1u64 << c))];
                    if sub.is_zero() {
                        continue;
                    }
                    let term = entries[c].mul(sub).expect("same ring");
                    acc = if (r + j) % 2 == 0 { acc.add(&term) } else { acc.sub(&term) }.expect("same ring");
                }
                next.insert(mask, acc);
            }
            level = next;
        }
        level
    }

    /// All maximal minors of an r×c matrix (r ≤ c), as degree-r forms, in
    /// lexicographic order of the column subsets.
    pub fn minors_max(&self) -> Result<Vec<MultiPoly>, PolyError> {
        if self.rows > self.cols || self.cols > 63 {
            return Err(PolyError::ShapeError(format!(
                "{}x{} matrix has no maximal minors of full row size",
                self.rows, self.cols
            )));
        }
        let table = self.minor_table();
        Ok(combinations(self.cols, self.rows)
            .into_iter()
            .map(|cols| table[&cols.iter().fold(0u64, |m, &c| m | 1 << c)].clone())
            .collect())
    }

    /// Determinant as a polynomial, by Laplace expansion.
    pub fn det_symbolic(&self) -> Result<MultiPoly, PolyError> {
        if self.rows != self.cols {
            return Err(PolyError::ShapeError("determinant of a non-square matrix".into()));
        }
        Ok(self.minors_max()?.pop().unwrap_or_else(|| MultiPoly::constant(&self.field, self.nvars, self.field.one())))
    }

    /// Embeds the coefficients into a larger field.
    pub fn map_coeffs(&self, field: &Field, map: impl Fn(&Scalar) -> Scalar) -> LinFormMatrix {
        LinFormMatrix {
            field: field.clone(),
            rows: self.rows,
            cols: self.cols,
            nvars: self.nvars,
            entries: self.entries.iter().map(|e| e.iter().map(&map).collect()).collect(),
        }
    }

    /// Pfaffian as a form of degree size/2, by evaluation at a unisolvent
    /// grid and interpolation. Small prime fields are handled by working in
    /// an extension and descending.
    pub fn symbolic_pfaffian(&self) -> Result<MultiPoly, PolyError> {
        self.symbolic_pfaffian_opts(true)
    }

    pub fn symbolic_pfaffian_opts(&self, allow_lift: bool) -> Result<MultiPoly, PolyError> {
        if !self.is_skew() {
            return Err(PolyError::NotSkewSymmetric);
        }
        let f = &self.field;
        let k = self.rows / 2;
        if self.rows % 2 == 1 {
            return Ok(MultiPoly::zero(f, self.nvars));
        }
        let too_small = f.order_u64().is_some_and(|q| q <= k as u64);
        if !too_small {
            return self.interpolate_pfaffian();
        }
        if !allow_lift || f.kind() != FieldKind::Prime {
            return Err(PolyError::FieldTooSmall { needed: k + 1 });
        }
        let p = f.characteristic();
        let mut e = 1;
        while (p as u128).pow(e as u32) <= k as u128 {
            e += 1;
        }
        let big = Field::extension(p, e, 0)?;
        let lifted = self.map_coeffs(&big, |a| big.from_residue(f.index_of(a) as u64));
        let pf = lifted.interpolate_pfaffian()?;
        let mut out = MultiPoly::zero(f, self.nvars);
        for (mono, c) in pf.terms() {
            let Scalar::Fq(v) = c else { unreachable!("extension scalars") };
            if v[1..].iter().any(|&x| x != 0) {
                return Err(PolyError::FieldMismatch);
            }
            out.add_term(mono.clone(), f.from_residue(v[0]));
        }
        Ok(out)
    }

    fn interpolate_pfaffian(&self) -> Result<MultiPoly, PolyError> {
        let f = &self.field;
        let n = self.nvars;
        let k = (self.rows / 2) as u32;
        if n == 0 {
            return Ok(MultiPoly::zero(f, 0));
        }
        let basis = monomials_of_degree(n, k);
        // points (ν_{a_1}, …, ν_{a_{n-1}}, 1) with Σ a_i ≤ k
        let nodes: Vec<Scalar> = (0..=k as u128).map(|i| f.element(i)).collect();
        let lattice: Vec<Vec<usize>> =
            basis.iter().map(|m| m.0[..n - 1].iter().map(|&x| x as usize).collect()).collect();
        let points: Vec<Vec<Scalar>> = lattice
            .iter()
            .map(|a| {
                let mut pt: Vec<Scalar> = a.iter().map(|&i| nodes[i].clone()).collect();
                pt.push(f.one());
                pt
            })
            .collect();
        let values: Vec<Scalar> = points
            .par_iter()
            .map(|pt| self.eval(pt).and_then(|m| Ok(m.pfaffian()?)))
            .collect::<Result<_, PolyError>>()?;
        let monos: Vec<MultiPoly> =
            basis.iter().map(|m| MultiPoly::from_terms(f, n, vec![(m.0.clone(), f.one())]).unwrap()).collect();
        let rows: Vec<Vec<Scalar>> = points
            .iter()
            .zip(&values)
            .map(|(pt, v)| {
                let mut row: Vec<Scalar> = monos.iter().map(|m| m.eval(pt).unwrap()).collect();
                row.push(v.clone());
                row
            })
            .collect();
        let aug = Matrix::from_rows(f, rows)?;
        let ech = aug.echelon();
        let nb = basis.len();
        if ech.pivots.len() != nb || ech.pivots.iter().enumerate().any(|(i, &c)| i != c) {
            return Err(PolyError::Linalg(LinalgError::ShapeMismatch("interpolation grid is not unisolvent".into())));
        }
        let mut out = MultiPoly::zero(f, n);
        for (i, m) in basis.iter().enumerate() {
            out.add_term(m.clone(), ech.rref.get(i, nb).clone());
        }
        Ok(out)
    }
}

/// k-subsets of {0..n} in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

fn subsets_of_size(n: usize, k: usize) -> Vec<u64> {
    combinations(n, k).into_iter().map(|c| c.iter().fold(0u64, |m, &i| m | 1 << i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grlex_order() {
        let ms = monomials_of_degree(3, 2);
        assert_eq!(ms.len(), 6);
        assert_eq!(ms[0].0, vec![2, 0, 0]);
        assert_eq!(ms[1].0, vec![1, 1, 0]);
        assert_eq!(ms[5].0, vec![0, 0, 2]);
        assert!(ms.windows(2).all(|w| w[0] > w[1]));
        assert!(Monomial(vec![0, 0, 3]) > Monomial(vec![2, 0, 0]));
    }

    #[test]
    fn restrict_simple() {
        let f = Field::rational();
        let p = MultiPoly::var(&f, 2, 0).mul(&MultiPoly::var(&f, 2, 1)).unwrap();
        let g = p.restrict_to_line(&[f.one(), f.zero()], &[f.zero(), f.one()]).unwrap();
        assert_eq!(g, UniPoly::x(&f));
        assert_eq!(
            p.restrict_to_line(&[f.one(), f.one()], &[f.from_i64(2), f.from_i64(2)]),
            Err(PolyError::DependentBasePoints)
        );
    }
}

//! Dense exact matrices over a [`Field`]: echelon forms, rank, kernels,
//! determinants and pfaffians.

use thiserror::Error;

use crate::field::{Field, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not skew-symmetric with zero diagonal")]
    NotSkewSymmetric,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("operands belong to different fields")]
    FieldMismatch,
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

/// Result of Gauss-Jordan elimination: the reduced row echelon form (zero
/// rows removed) and its pivot columns.
#[derive(Debug, Clone)]
pub struct Echelon {
    pub rref: Matrix,
    pub pivots: Vec<usize>,
}

impl Matrix {
    pub fn zeros(field: &Field, rows: usize, cols: usize) -> Matrix {
        Matrix { field: field.clone(), rows, cols, data: vec![field.zero(); rows * cols] }
    }

    pub fn identity(field: &Field, n: usize) -> Matrix {
        let mut m = Matrix::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, field.one());
        }
        m
    }

    pub fn from_fn(field: &Field, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Scalar) -> Matrix {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { field: field.clone(), rows, cols, data }
    }

    pub fn from_rows(field: &Field, rows: Vec<Vec<Scalar>>) -> Result<Matrix, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(LinalgError::ShapeMismatch("ragged rows".into()));
        }
        if rows.iter().flatten().any(|a| !field.contains(a)) {
            return Err(LinalgError::FieldMismatch);
        }
        Ok(Matrix { field: field.clone(), rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    /// Convenience constructor from small integers, row-major.
    pub fn from_i64(field: &Field, rows: usize, cols: usize, entries: &[i64]) -> Matrix {
        assert_eq!(entries.len(), rows * cols);
        Matrix::from_fn(field, rows, cols, |i, j| field.from_i64(entries[i * cols + j]))
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(field: &Field, len: usize, columns: &[Vec<Scalar>]) -> Matrix {
        Matrix::from_fn(field, len, columns.len(), |i, j| columns[j][i].clone())
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

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Scalar> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn entries(&self) -> &[Scalar] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|a| self.field.is_zero(a))
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(&self.field, self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.field != other.field {
            return Err(LinalgError::FieldMismatch);
        }
        if self.cols != other.rows {
            return Err(LinalgError::ShapeMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = &self.field;
        let mut out = Matrix::zeros(f, self.rows, other.cols);
        for i in 0..self.rows {
            for t in 0..self.cols {
                let a = self.get(i, t);
                if f.is_zero(a) {
                    continue;
                }
                for j in 0..other.cols {
                    let v = f.add(out.get(i, j), &f.mul(a, other.get(t, j)));
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Scalar]) -> Result<Vec<Scalar>, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::ShapeMismatch(format!("vector of length {} for {} columns", v.len(), self.cols)));
        }
        let f = &self.field;
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).fold(f.zero(), |acc, (a, b)| f.add(&acc, &f.mul(a, b))))
            .collect())
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.field != other.field {
            return Err(LinalgError::FieldMismatch);
        }
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(LinalgError::ShapeMismatch("addition of different shapes".into()));
        }
        let f = &self.field;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f.add(a, b)).collect();
        Ok(Matrix { field: f.clone(), rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, c: &Scalar) -> Matrix {
        let f = &self.field;
        let data = self.data.iter().map(|a| f.mul(a, c)).collect();
        Matrix { field: f.clone(), rows: self.rows, cols: self.cols, data }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        Matrix::from_fn(&self.field, self.rows, cols.len(), |i, j| self.get(i, cols[j]).clone())
    }

    pub fn hstack(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.rows != other.rows {
            return Err(LinalgError::ShapeMismatch("hstack with different row counts".into()));
        }
        if self.field != other.field {
            return Err(LinalgError::FieldMismatch);
        }
        Ok(Matrix::from_fn(&self.field, self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self.get(i, j).clone()
            } else {
                other.get(i, j - self.cols).clone()
            }
        }))
    }

    pub fn vstack(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != other.cols {
            return Err(LinalgError::ShapeMismatch("vstack with different column counts".into()));
        }
        if self.field != other.field {
            return Err(LinalgError::FieldMismatch);
        }
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        Ok(Matrix { field: self.field.clone(), rows: self.rows + other.rows, cols: self.cols, data })
    }

    /// Skew-symmetric with zero diagonal (the alternating condition, which
    /// is the meaningful one in characteristic 2).
    pub fn is_skew(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let f = &self.field;
        for i in 0..self.rows {
            if !f.is_zero(self.get(i, i)) {
                return false;
            }
            for j in 0..i {
                if !f.is_zero(&f.add(self.get(i, j), self.get(j, i))) {
                    return false;
                }
            }
        }
        true
    }

    /// Gauss-Jordan elimination; the pivot in each column is the first
    /// nonzero entry at or below the current row.
    pub fn echelon(&self) -> Echelon {
        let f = &self.field;
        let mut a = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..a.cols {
            if r == a.rows {
                break;
            }
            let Some(pr) = (r..a.rows).find(|&i| !f.is_zero(a.get(i, c))) else {
                continue;
            };
            a.swap_rows(r, pr);
            let inv = f.inv(a.get(r, c)).expect("pivot is nonzero");
            for j in c..a.cols {
                let v = f.mul(a.get(r, j), &inv);
                a.set(r, j, v);
            }
            for i in 0..a.rows {
                if i == r || f.is_zero(a.get(i, c)) {
                    continue;
                }
                let factor = a.get(i, c).clone();
                for j in c..a.cols {
                    let v = f.sub(a.get(i, j), &f.mul(&factor, a.get(r, j)));
                    a.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        a.data.truncate(r * a.cols);
        a.rows = r;
        Echelon { rref: a, pivots }
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + i, r * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.echelon().pivots.len()
    }

    /// Basis of the right kernel as the columns of a `cols × nullity` matrix,
    /// in reduced echelon normal form: one column per free variable (in
    /// increasing order) with a 1 in that position and zeros in the other
    /// free positions.
    pub fn kernel_basis(&self) -> Matrix {
        let f = &self.field;
        let Echelon { rref, pivots } = self.echelon();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut k = Matrix::zeros(f, self.cols, free.len());
        for (t, &fc) in free.iter().enumerate() {
            k.set(fc, t, f.one());
            for (i, &pc) in pivots.iter().enumerate() {
                k.set(pc, t, f.neg(rref.get(i, fc)));
            }
        }
        k
    }

    pub fn det(&self) -> Result<Scalar, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare { rows: self.rows, cols: self.cols });
        }
        let f = &self.field;
        let n = self.rows;
        let mut a = self.clone();
        let mut det = f.one();
        for c in 0..n {
            let Some(pr) = (c..n).find(|&i| !f.is_zero(a.get(i, c))) else {
                return Ok(f.zero());
            };
            if pr != c {
                a.swap_rows(c, pr);
                det = f.neg(&det);
            }
            let piv = a.get(c, c).clone();
            det = f.mul(&det, &piv);
            let inv = f.inv(&piv).expect("pivot is nonzero");
            for i in c + 1..n {
                if f.is_zero(a.get(i, c)) {
                    continue;
                }
                let factor = f.mul(a.get(i, c), &inv);
                for j in c..n {
                    let v = f.sub(a.get(i, j), &f.mul(&factor, a.get(c, j)));
                    a.set(i, j, v);
                }
            }
        }
        Ok(det)
    }

    /// Pfaffian by skew elimination: a symmetric row/column swap brings a
    /// nonzero entry to position (i, i+1), congruence operations clear the
    /// rest of rows i and i+1, and the pfaffian is the signed product of the
    /// 2×2 pivots. Odd sizes give 0.
    pub fn pfaffian(&self) -> Result<Scalar, LinalgError> {
        if !self.is_skew() {
            return Err(LinalgError::NotSkewSymmetric);
        }
        let f = &self.field;
        let n = self.rows;
        if n % 2 == 1 {
            return Ok(f.zero());
        }
        let mut a = self.clone();
        let mut pf = f.one();
        for i in (0..n).step_by(2) {
            let Some(j) = (i + 1..n).find(|&j| !f.is_zero(a.get(i, j))) else {
                return Ok(f.zero());
            };
            if j != i + 1 {
                a.swap_rows(i + 1, j);
                a.swap_cols(i + 1, j);
                pf = f.neg(&pf);
            }
            let piv = a.get(i, i + 1).clone();
            pf = f.mul(&pf, &piv);
            let inv = f.inv(&piv).expect("pivot is nonzero");
            for r in i + 2..n {
                // clear a[i][r] using column i+1, then a[i+1][r] using column i
                let c1 = f.mul(a.get(i, r), &inv);
                if !f.is_zero(&c1) {
                    a.congruence_update(r, i + 1, &c1);
                }
                let c2 = f.neg(&f.mul(a.get(i + 1, r), &inv));
                if !f.is_zero(&c2) {
                    a.congruence_update(r, i, &c2);
                }
            }
        }
        Ok(pf)
    }

    /// col_r -= c·col_s and row_r -= c·row_s.
    fn congruence_update(&mut self, r: usize, s: usize, c: &Scalar) {
        let f = self.field.clone();
        for t in 0..self.rows {
            let v = f.sub(self.get(t, r), &f.mul(c, self.get(t, s)));
            self.set(t, r, v);
        }
        for t in 0..self.cols {
            let v = f.sub(self.get(r, t), &f.mul(c, self.get(s, t)));
            self.set(r, t, v);
        }
    }
}

/// Scales a vector so that its first nonzero coordinate is 1.
pub fn normalize_projective(field: &Field, v: &[Scalar]) -> Option<Vec<Scalar>> {
    let lead = v.iter().find(|a| !field.is_zero(a))?;
    let inv = field.inv(lead).expect("nonzero");
    Some(v.iter().map(|a| field.mul(a, &inv)).collect())
}

pub fn dot(field: &Field, a: &[Scalar], b: &[Scalar]) -> Scalar {
    a.iter().zip(b).fold(field.zero(), |acc, (x, y)| field.add(&acc, &field.mul(x, y)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_pfaffians() {
        let f = Field::prime(1009).unwrap();
        let a = Matrix::from_i64(&f, 2, 2, &[0, 5, -5, 0]);
        assert_eq!(a.pfaffian().unwrap(), f.from_i64(5));
        let b = Matrix::from_i64(&f, 3, 3, &[0, 1, 2, -1, 0, 3, -2, -3, 0]);
        assert_eq!(b.pfaffian().unwrap(), f.zero());
        let c = Matrix::from_i64(&f, 2, 2, &[0, 1, 1, 0]);
        assert_eq!(c.pfaffian(), Err(LinalgError::NotSkewSymmetric));
    }

    #[test]
    fn kernel_of_all_ones_row() {
        let f = Field::prime(5).unwrap();
        let a = Matrix::from_i64(&f, 1, 3, &[1, 1, 1]);
        let k = a.kernel_basis();
        assert_eq!(k, Matrix::from_i64(&f, 3, 2, &[4, 4, 1, 0, 0, 1]));
        assert!(a.mul(&k).unwrap().is_zero());
    }
}

//! Degree of the scroll by two routes: the alternating binomial sum and the
//! top Chern class computation in the Chow ring of P^{2k-1}.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChowError {
    #[error("(m, k) = ({m}, {k}) outside 1 <= m <= 2k")]
    RangeError { m: usize, k: usize },
    #[error("classes live in different ambient spaces")]
    AmbientMismatch,
}

/// Σ cᵢ hⁱ in Z[h]/(h^{n+1}), the Chow ring of Pⁿ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChowClass {
    n: usize,
    coeffs: Vec<BigInt>,
}

impl ChowClass {
    pub fn new(n: usize, coeffs: &[BigInt]) -> ChowClass {
        let mut c: Vec<BigInt> = coeffs.iter().take(n + 1).cloned().collect();
        c.resize(n + 1, BigInt::zero());
        ChowClass { n, coeffs: c }
    }

    pub fn from_i64(n: usize, coeffs: &[i64]) -> ChowClass {
        ChowClass::new(n, &coeffs.iter().map(|&c| BigInt::from(c)).collect::<Vec<_>>())
    }

    pub fn one(n: usize) -> ChowClass {
        ChowClass::from_i64(n, &[1])
    }

    /// The hyperplane class h.
    pub fn h(n: usize) -> ChowClass {
        ChowClass::from_i64(n, &[0, 1])
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn coeff(&self, i: usize) -> &BigInt {
        &self.coeffs[i]
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn add(&self, other: &ChowClass) -> Result<ChowClass, ChowError> {
        if self.n != other.n {
            return Err(ChowError::AmbientMismatch);
        }
        let c: Vec<BigInt> = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(ChowClass { n: self.n, coeffs: c })
    }

    pub fn mul(&self, other: &ChowClass) -> Result<ChowClass, ChowError> {
        if self.n != other.n {
            return Err(ChowError::AmbientMismatch);
        }
        let mut c = vec![BigInt::zero(); self.n + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(self.n + 1 - i) {
                c[i + j] += a * b;
            }
        }
        Ok(ChowClass { n: self.n, coeffs: c })
    }

    pub fn pow(&self, e: usize) -> ChowClass {
        let mut acc = ChowClass::one(self.n);
        for _ in 0..e {
            acc = acc.mul(self).expect("same ambient");
        }
        acc
    }
}

fn binomial(n: i64, r: i64) -> BigInt {
    if r < 0 || n < 0 || r > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..r {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn check_range(m: usize, k: usize) -> Result<(), ChowError> {
    if m < 1 || m > 2 * k {
        return Err(ChowError::RangeError { m, k });
    }
    Ok(())
}

/// Σ_{i=0}^{2k-m} (−1)^i C(2k−1−i, m−1).
pub fn palatini_degree(m: usize, k: usize) -> Result<BigInt, ChowError> {
    check_range(m, k)?;
    let (m, k) = (m as i64, k as i64);
    let mut acc = BigInt::zero();
    for i in 0..=(2 * k - m) {
        let b = binomial(2 * k - 1 - i, m - 1);
        if i % 2 == 0 {
            acc += b;
        } else {
            acc -= b;
        }
    }
    Ok(acc)
}

/// Coefficient of h^{2k−m} in (1+h)^{2k}·Σ(−2h)^i in the Chow ring of P^{2k−1}.
pub fn chern_degree(m: usize, k: usize) -> Result<BigInt, ChowError> {
    check_range(m, k)?;
    let n = 2 * k - 1;
    let one_plus_h = ChowClass::from_i64(n, &[1, 1]);
    let mut geom = ChowClass::one(n);
    let minus_2h = ChowClass::from_i64(n, &[0, -2]);
    let mut power = ChowClass::one(n);
    for _ in 1..=n {
        power = power.mul(&minus_2h)?;
        geom = geom.add(&power)?;
    }
    let total = one_plus_h.pow(2 * k).mul(&geom)?;
    Ok(total.coeff(2 * k - m).clone())
}

#[derive(Debug, Clone, Serialize)]
pub struct DegreeRow {
    pub m: usize,
    pub k: usize,
    pub formula: String,
    pub chern: String,
    pub agree: bool,
}

pub fn degree_row(m: usize, k: usize) -> Result<DegreeRow, ChowError> {
    let a = palatini_degree(m, k)?;
    let b = chern_degree(m, k)?;
    Ok(DegreeRow { m, k, agree: a == b, formula: a.to_string(), chern: b.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_degrees() {
        let d = |m, k| palatini_degree(m, k).unwrap();
        assert_eq!(d(3, 3), BigInt::from(6));
        assert_eq!(d(4, 3), BigInt::from(7));
        assert_eq!(d(3, 4), BigInt::from(12));
        for k in 2..=8 {
            assert_eq!(d(1, k), BigInt::zero());
        }
        assert_eq!(palatini_degree(0, 3), Err(ChowError::RangeError { m: 0, k: 3 }));
        assert_eq!(chern_degree(7, 3), Err(ChowError::RangeError { m: 7, k: 3 }));
    }

    #[test]
    fn first_chern_coefficient() {
        for k in 2..=8 {
            assert_eq!(chern_degree(2 * k - 1, k).unwrap(), BigInt::from(2 * k as i64 - 2));
        }
    }
}

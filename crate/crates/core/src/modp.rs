//! Dense linear algebra over F_p for large systems.
//!
//! Entries are stored as `f64` holding integers in `[0, p)`. For p < 2^26 the
//! products of two residues are exact in a double, so matrix products are
//! delegated to `matrixmultiply::dgemm` over chunks of the inner dimension
//! short enough that the accumulated sums stay below 2^53, followed by a
//! reduction. Larger primes fall back to integer loops.
//!
//! Echelon forms come from a row-pivoted, rank-revealing LU: column panels of
//! width [`PANEL`] are factored recursively and the trailing matrix is updated
//! with one product per panel. The pivot in each column is the first nonzero
//! entry at or below the current row, so results are deterministic.

use rand::Rng;

/// Column panel width of the blocked elimination.
pub const PANEL: usize = 1024;
const BASE: usize = 8;

#[derive(Debug, Clone, Copy)]
pub struct Modulus {
    p: u64,
    pf: f64,
    pinv: f64,
    kmax: usize,
}

impl Modulus {
    pub fn new(p: u64) -> Modulus {
        assert!((2..(1 << 31)).contains(&p), "modulus out of range");
        let pf = p as f64;
        let sq = ((p - 1) as f64) * ((p - 1) as f64);
        let kmax = if p < (1 << 26) { (((1u64 << 53) as f64 - pf) / sq.max(1.0)).floor() as usize } else { 0 };
        Modulus { p, pf, pinv: 1.0 / pf, kmax }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    fn fast(&self) -> bool {
        self.kmax >= 1
    }

    /// Reduces an integer-valued double with |x| < 2^53 into `[0, p)`.
    #[inline(always)]
    pub fn reduce(&self, x: f64) -> f64 {
        let q = (x * self.pinv).floor();
        let mut r = x - q * self.pf;
        if r < 0.0 {
            r += self.pf;
        }
        if r >= self.pf {
            r -= self.pf;
        }
        r
    }

    #[inline(always)]
    pub fn mul(&self, a: f64, b: f64) -> f64 {
        if self.fast() {
            self.reduce(a * b)
        } else {
            ((a as u64 * b as u64) % self.p) as f64
        }
    }

    #[inline(always)]
    pub fn add(&self, a: f64, b: f64) -> f64 {
        let s = a + b;
        if s >= self.pf {
            s - self.pf
        } else {
            s
        }
    }

    #[inline(always)]
    pub fn sub(&self, a: f64, b: f64) -> f64 {
        let s = a - b;
        if s < 0.0 {
            s + self.pf
        } else {
            s
        }
    }

    pub fn neg(&self, a: f64) -> f64 {
        if a == 0.0 {
            0.0
        } else {
            self.pf - a
        }
    }

    pub fn inv(&self, a: f64) -> f64 {
        crate::field::inv_mod(a as u64, self.p) as f64
    }

    pub fn from_i64(&self, a: i64) -> f64 {
        a.rem_euclid(self.p as i64) as f64
    }

    /// dst = dst + c·src (mod p).
    pub fn axpy(&self, dst: &mut [f64], c: f64, src: &[f64]) {
        if c == 0.0 {
            return;
        }
        if self.fast() {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = self.reduce(*d + c * *s);
            }
        } else {
            let c = c as u64;
            for (d, s) in dst.iter_mut().zip(src) {
                *d = ((*d as u64 + c * *s as u64) % self.p) as f64;
            }
        }
    }

    /// C = C − A·B (mod p). A is m×k, B is k×n, C is m×n, row-major with the
    /// given leading dimensions. All entries must lie in `[0, p)`.
    ///
    /// # Safety
    /// The pointers must be valid for the given shapes and C must not overlap A or B.
    #[allow(clippy::too_many_arguments)]
    pub unsafe fn gemm_sub(
        &self,
        m: usize,
        n: usize,
        k: usize,
        a: *const f64,
        lda: usize,
        b: *const f64,
        ldb: usize,
        c: *mut f64,
        ldc: usize,
    ) {
        if m == 0 || n == 0 || k == 0 {
            return;
        }
        if self.fast() {
            let mut k0 = 0;
            while k0 < k {
                let kc = self.kmax.min(k - k0);
                matrixmultiply::dgemm(
                    m,
                    kc,
                    n,
                    -1.0,
                    a.add(k0),
                    lda as isize,
                    1,
                    b.add(k0 * ldb),
                    ldb as isize,
                    1,
                    1.0,
                    c,
                    ldc as isize,
                    1,
                );
                for i in 0..m {
                    let row = std::slice::from_raw_parts_mut(c.add(i * ldc), n);
                    for x in row.iter_mut() {
                        *x = self.reduce(*x);
                    }
                }
                k0 += kc;
            }
        } else {
            let p = self.p as u128;
            for i in 0..m {
                for j in 0..n {
                    let mut acc: u128 = 0;
                    for t in 0..k {
                        acc += (*a.add(i * lda + t) as u128) * (*b.add(t * ldb + j) as u128);
                    }
                    let cur = *c.add(i * ldc + j) as u128;
                    let v = (cur + p - acc % p) % p;
                    *c.add(i * ldc + j) = v as f64;
                }
            }
        }
    }
}

impl Modulus {
    /// C = C − A·B without reducing C. Valid only on the fast path with
    /// k ≤ kmax; the caller tracks how much unreduced mass C carries.
    ///
    /// # Safety
    /// As for [`Modulus::gemm_sub`].
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_sub_lazy(
        &self,
        m: usize,
        n: usize,
        k: usize,
        a: *const f64,
        lda: usize,
        b: *const f64,
        ldb: usize,
        c: *mut f64,
        ldc: usize,
    ) {
        if m == 0 || n == 0 || k == 0 {
            return;
        }
        debug_assert!(k <= self.kmax);
        matrixmultiply::dgemm(m, k, n, -1.0, a, lda as isize, 1, b, ldb as isize, 1, 1.0, c, ldc as isize, 1);
    }

    fn reduce_block(&self, a: &mut DenseMat, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) {
        let w = a.cols;
        for i in rows {
            for x in &mut a.data[i * w + cols.start..i * w + cols.end] {
                *x = self.reduce(*x);
            }
        }
    }
}

/// Row-major dense matrix with entries in `[0, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMat {
    pub fn zeros(rows: usize, cols: usize) -> DenseMat {
        DenseMat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(cols: usize, rows: &[Vec<f64>]) -> DenseMat {
        let mut m = DenseMat::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            m.row_mut(i).copy_from_slice(r);
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i != j {
            let (lo, hi) = (i.min(j), i.max(j));
            let (a, b) = self.data.split_at_mut(hi * self.cols);
            a[lo * self.cols..(lo + 1) * self.cols].swap_with_slice(&mut b[..self.cols]);
        }
    }

    /// self · other (mod p).
    pub fn mul(&self, other: &DenseMat, md: &Modulus) -> DenseMat {
        assert_eq!(self.cols, other.rows);
        let mut out = DenseMat::zeros(self.rows, other.cols);
        // C = 0 - A·B, then negate
        unsafe {
            md.gemm_sub(
                self.rows,
                other.cols,
                self.cols,
                self.data.as_ptr(),
                self.cols,
                other.data.as_ptr(),
                other.cols,
                out.data.as_mut_ptr(),
                other.cols,
            );
        }
        for x in out.data.iter_mut() {
            *x = md.neg(*x);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }
}

/// Echelon data of a matrix A (r = rank): pivot columns, free columns, and
/// the free-column block `z` (r × #free) of the reduced row echelon form, so
/// that row i of rref(A) is `e_{pivots[i]} + Σ_f z[i][f] e_{free[f]}`.
#[derive(Debug, Clone)]
pub struct Echelon {
    pub cols: usize,
    pub pivots: Vec<usize>,
    pub free: Vec<usize>,
    pub z: DenseMat,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn nullity(&self) -> usize {
        self.free.len()
    }

    /// Kernel basis, one vector per free column (1 there, 0 at the other free columns).
    pub fn kernel(&self, md: &Modulus) -> DenseMat {
        let nf = self.free.len();
        let mut k = DenseMat::zeros(nf, self.cols);
        for (t, &f) in self.free.iter().enumerate() {
            let row = k.row_mut(t);
            row[f] = 1.0;
            for (i, &pc) in self.pivots.iter().enumerate() {
                row[pc] = md.neg(self.z.get(i, t));
            }
        }
        k
    }

    /// Full reduced row echelon form as a dense r × cols matrix.
    pub fn rref(&self) -> DenseMat {
        let mut out = DenseMat::zeros(self.pivots.len(), self.cols);
        for (i, &pc) in self.pivots.iter().enumerate() {
            out.set(i, pc, 1.0);
            for (t, &f) in self.free.iter().enumerate() {
                out.set(i, f, self.z.get(i, t));
            }
        }
        out
    }
}

/// Rank-revealing elimination; consumes the matrix. With `reduce = false`
/// the free block `z` is left empty (rank and pivots only).
pub fn echelon(mut a: DenseMat, md: &Modulus, reduce: bool) -> Echelon {
    let pivots = lu_in_place(&mut a, md);
    let free: Vec<usize> = {
        let mut is_piv = vec![false; a.cols];
        for &c in &pivots {
            is_piv[c] = true;
        }
        (0..a.cols).filter(|&c| !is_piv[c]).collect()
    };
    let z = if reduce { back_substitute(&a, &pivots, &free, md) } else { DenseMat::zeros(0, free.len()) };
    Echelon { cols: a.cols, pivots, free, z }
}

pub fn rank(a: DenseMat, md: &Modulus) -> usize {
    let mut a = a;
    lu_in_place(&mut a, md).len()
}

/// In-place LU with row pivoting. On return rows `0..r` hold an echelon
/// form U (entries left of each pivot are to be read as zero) and the
/// pivot columns are returned.
pub fn lu_in_place(a: &mut DenseMat, md: &Modulus) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    let mut c0 = 0;
    // The trailing update is left unreduced while the accumulated depth
    // stays within kmax; panels and pivot rows are reduced before use.
    let mut dirty = 0;
    while c0 < a.cols && r < a.rows {
        let c1 = (c0 + PANEL).min(a.cols);
        if dirty > 0 {
            md.reduce_block(a, r..a.rows, c0..c1);
        }
        let piv = lu_rec(a, md, r, c0, c1);
        let t = piv.len();
        if t > 0 && c1 < a.cols {
            let lazy = md.fast() && dirty + t <= md.kmax;
            if dirty > 0 && !lazy {
                md.reduce_block(a, r..a.rows, c1..a.cols);
                dirty = 0;
            }
            update_right(a, md, r, &piv, c1, a.cols, lazy);
            if lazy {
                dirty += t;
            }
        }
        r += t;
        pivots.extend(piv);
        c0 = c1;
    }
    pivots
}

/// Factors columns [c0, c1) of rows r0.. and returns the pivot columns found.
fn lu_rec(a: &mut DenseMat, md: &Modulus, r0: usize, c0: usize, c1: usize) -> Vec<usize> {
    if r0 >= a.rows {
        return Vec::new();
    }
    if c1 - c0 <= BASE {
        return lu_base(a, md, r0, c0, c1);
    }
    let cm = c0 + (c1 - c0) / 2;
    let mut piv = lu_rec(a, md, r0, c0, cm);
    let t1 = piv.len();
    if t1 > 0 {
        update_right(a, md, r0, &piv, cm, c1, false);
    }
    piv.extend(lu_rec(a, md, r0 + t1, cm, c1));
    piv
}

fn lu_base(a: &mut DenseMat, md: &Modulus, r0: usize, c0: usize, c1: usize) -> Vec<usize> {
    let mut piv = Vec::new();
    let mut r = r0;
    let cols = a.cols;
    for c in c0..c1 {
        if r >= a.rows {
            break;
        }
        let Some(pr) = (r..a.rows).find(|&i| a.data[i * cols + c] != 0.0) else {
            continue;
        };
        a.swap_rows(r, pr);
        let inv = md.inv(a.data[r * cols + c]);
        let (top, bottom) = a.data.split_at_mut((r + 1) * cols);
        let prow = &top[r * cols..(r + 1) * cols];
        for row in bottom.chunks_exact_mut(cols) {
            let x = row[c];
            if x == 0.0 {
                continue;
            }
            let l = md.mul(x, inv);
            row[c] = l;
            let nl = md.neg(l);
            md.axpy(&mut row[c + 1..c1], nl, &prow[c + 1..c1]);
        }
        piv.push(c);
        r += 1;
    }
    piv
}

/// Applies the eliminations recorded for the pivots `piv` (rows r0..r0+t)
/// to columns [c1, c2): forward substitution on the pivot rows followed by
/// a rank-t update of the rows below.
fn update_right(a: &mut DenseMat, md: &Modulus, r0: usize, piv: &[usize], c1: usize, c2: usize, lazy: bool) {
    let t = piv.len();
    let cols = a.cols;
    let width = c2 - c1;
    if lazy {
        md.reduce_block(a, r0..r0 + t, c1..c2);
    }
    // unit lower triangular L11 gathered from the pivot columns
    let mut l11 = vec![0.0; t * t];
    for i in 0..t {
        for j in 0..i {
            l11[i * t + j] = a.data[(r0 + i) * cols + piv[j]];
        }
    }
    unsafe {
        trsm_lower(md, t, width, l11.as_ptr(), t, a.data.as_mut_ptr().add(r0 * cols + c1), cols);
    }
    let below = a.rows - (r0 + t);
    if below == 0 {
        return;
    }
    let mut l21 = vec![0.0; below * t];
    for i in 0..below {
        let row = &a.data[(r0 + t + i) * cols..];
        for j in 0..t {
            l21[i * t + j] = row[piv[j]];
        }
    }
    let base = a.data.as_mut_ptr();
    let gemm = if lazy { Modulus::gemm_sub_lazy } else { Modulus::gemm_sub };
    unsafe {
        gemm(
            md,
            below,
            width,
            t,
            l21.as_ptr(),
            t,
            base.add(r0 * cols + c1),
            cols,
            base.add((r0 + t) * cols + c1),
            cols,
        );
    }
}

/// B ← L⁻¹B for unit lower triangular L (t×t), B t×n, recursively.
unsafe fn trsm_lower(md: &Modulus, t: usize, n: usize, l: *const f64, ldl: usize, b: *mut f64, ldb: usize) {
    if t <= BASE {
        for i in 1..t {
            for j in 0..i {
                let lij = *l.add(i * ldl + j);
                if lij == 0.0 {
                    continue;
                }
                let src = std::slice::from_raw_parts(b.add(j * ldb), n).to_vec();
                let dst = std::slice::from_raw_parts_mut(b.add(i * ldb), n);
                md.axpy(dst, md.neg(lij), &src);
            }
        }
        return;
    }
    let h = t / 2;
    trsm_lower(md, h, n, l, ldl, b, ldb);
    md.gemm_sub(t - h, n, h, l.add(h * ldl), ldl, b, ldb, b.add(h * ldb), ldb);
    trsm_lower(md, t - h, n, l.add(h * ldl + h), ldl, b.add(h * ldb), ldb);
}

/// Solves for the free block of the reduced echelon form from the U factor.
fn back_substitute(u: &DenseMat, pivots: &[usize], free: &[usize], md: &Modulus) -> DenseMat {
    const BS: usize = 128;
    let r = pivots.len();
    let nf = free.len();
    let mut z = DenseMat::zeros(r, nf);
    if nf == 0 {
        return z;
    }
    let mut i1 = r;
    while i1 > 0 {
        let i0 = i1.saturating_sub(BS);
        let h = i1 - i0;
        let mut y = DenseMat::zeros(h, nf);
        for i in 0..h {
            let urow = u.row(i0 + i);
            let pc = pivots[i0 + i];
            for (t, &f) in free.iter().enumerate() {
                // entries left of the pivot are read as zero
                if f > pc {
                    y.set(i, t, urow[f]);
                }
            }
        }
        let rest = r - i1;
        if rest > 0 {
            let mut g = vec![0.0; h * rest];
            for i in 0..h {
                let urow = u.row(i0 + i);
                for j in 0..rest {
                    g[i * rest + j] = urow[pivots[i1 + j]];
                }
            }
            unsafe {
                md.gemm_sub(h, nf, rest, g.as_ptr(), rest, z.data.as_ptr().add(i1 * nf), nf, y.data.as_mut_ptr(), nf);
            }
        }
        for i in (0..h).rev() {
            let urow = u.row(i0 + i);
            for j in i + 1..h {
                let c = urow[pivots[i0 + j]];
                if c != 0.0 {
                    let (top, bot) = y.data.split_at_mut((i + 1) * nf);
                    md.axpy(&mut top[i * nf..], md.neg(c), &bot[(j - i - 1) * nf..(j - i) * nf]);
                }
            }
            let inv = md.inv(urow[pivots[i0 + i]]);
            for x in y.row_mut(i) {
                *x = md.mul(*x, inv);
            }
        }
        z.data[i0 * nf..i1 * nf].copy_from_slice(&y.data);
        i1 = i0;
    }
    z
}

/// Accumulates a random sparse combination G·C of a stream of rows: each
/// incoming row is added, with random nonzero coefficients, to `spread`
/// randomly chosen accumulator rows. rank(G·C) ≤ rank(C) always, and
/// ker(G·C) = ker(C) with high probability.
pub struct Sketch {
    md: Modulus,
    spread: usize,
    pub acc: DenseMat,
    rows_seen: usize,
}

impl Sketch {
    pub fn new(md: Modulus, rows: usize, cols: usize, spread: usize) -> Sketch {
        Sketch { md, spread, acc: DenseMat::zeros(rows, cols), rows_seen: 0 }
    }

    pub fn rows_seen(&self) -> usize {
        self.rows_seen
    }

    pub fn add_row<R: Rng>(&mut self, row: &[f64], rng: &mut R) {
        let n = self.acc.rows;
        let p = self.md.p();
        for _ in 0..self.spread {
            let t = rng.random_range(0..n);
            let c = rng.random_range(1..p) as f64;
            let cols = self.acc.cols;
            let dst = &mut self.acc.data[t * cols..(t + 1) * cols];
            self.md.axpy(dst, c, row);
        }
        self.rows_seen += 1;
    }

    /// Same as [`Sketch::add_row`] for a row that is zero outside the bands
    /// starting at `bands`, each `width` wide; `row` holds the bands back to back.
    pub fn add_banded_row<R: Rng>(&mut self, row: &[f64], bands: &[usize], width: usize, rng: &mut R) {
        let n = self.acc.rows;
        let p = self.md.p();
        let cols = self.acc.cols;
        for _ in 0..self.spread {
            let t = rng.random_range(0..n);
            let c = rng.random_range(1..p) as f64;
            let dst = &mut self.acc.data[t * cols..(t + 1) * cols];
            for (b, &off) in bands.iter().enumerate() {
                self.md.axpy(&mut dst[off..off + width], c, &row[b * width..(b + 1) * width]);
            }
        }
        self.rows_seen += 1;
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn naive_rref(a: &DenseMat, p: u64) -> (Vec<usize>, DenseMat) {
        let mut m: Vec<Vec<u64>> = (0..a.rows).map(|i| a.row(i).iter().map(|&x| x as u64).collect()).collect();
        let mut piv = Vec::new();
        let mut r = 0;
        for c in 0..a.cols {
            let Some(pr) = (r..a.rows).find(|&i| m[i][c] != 0) else { continue };
            m.swap(r, pr);
            let inv = crate::field::inv_mod(m[r][c], p);
            for x in m[r].iter_mut() {
                *x = *x * inv % p;
            }
            for i in 0..a.rows {
                if i != r && m[i][c] != 0 {
                    let f = m[i][c];
                    let pivot = m[r].clone();
                    for (x, y) in m[i].iter_mut().zip(&pivot) {
                        *x = (*x + (p - f) * y) % p;
                    }
                }
            }
            piv.push(c);
            r += 1;
            if r == a.rows {
                break;
            }
        }
        let rows: Vec<Vec<f64>> = m[..r].iter().map(|row| row.iter().map(|&x| x as f64).collect()).collect();
        (piv, DenseMat::from_rows(a.cols, &rows))
    }

    pub(crate) fn random_low_rank(rows: usize, cols: usize, rank: usize, p: u64, seed: u64) -> DenseMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let md = Modulus::new(p);
        let mut l = DenseMat::zeros(rows, rank);
        let mut r = DenseMat::zeros(rank, cols);
        for x in l.data.iter_mut() {
            *x = rng.random_range(0..p) as f64;
        }
        for x in r.data.iter_mut() {
            // sparse-ish factor to create free columns in the middle
            *x = if rng.random_range(0..4) == 0 { 0.0 } else { rng.random_range(0..p) as f64 };
        }
        for j in (0..cols).step_by(7) {
            for i in 0..rank {
                r.set(i, j, 0.0);
            }
        }
        l.mul(&r, &md)
    }

    #[test]
    fn blocked_elimination_matches_naive_rref() {
        for (rows, cols, rank, p, seed) in
            [(40, 30, 12, 1009, 1), (300, 280, 190, 2003, 2), (600, 700, 520, 1009, 3), (50, 50, 50, 7, 4)]
        {
            let a = random_low_rank(rows, cols, rank, p, seed);
            let md = Modulus::new(p);
            let (piv, rref) = naive_rref(&a, p);
            let e = echelon(a.clone(), &md, true);
            assert_eq!(e.pivots, piv);
            assert_eq!(e.rref(), rref);
            let k = e.kernel(&md);
            assert_eq!(k.rows + e.rank(), cols);
            let mut kt = DenseMat::zeros(cols, k.rows);
            for i in 0..k.rows {
                for j in 0..cols {
                    kt.set(j, i, k.get(i, j));
                }
            }
            assert!(a.mul(&kt, &md).is_zero());
        }
    }

    #[test]
    fn large_prime_fallback() {
        let p = 2147483647;
        let a = random_low_rank(30, 25, 10, p, 9);
        let md = Modulus::new(p);
        let (piv, rref) = naive_rref(&a, p);
        let e = echelon(a, &md, true);
        assert_eq!(e.pivots, piv);
        assert_eq!(e.rref(), rref);
    }
}

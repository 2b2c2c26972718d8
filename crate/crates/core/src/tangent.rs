//! Tangent space to the Hilbert scheme at X, as the space of degree-0
//! homomorphisms I → S/I from the maximal-minor ideal of F to the
//! coordinate ring. A homomorphism is a tuple (h_J) in (S/I)_m, one entry per
//! generator, that kills every syzygy. All computations run over F_p.
//!
//! Two equivalent linear systems are available. The direct one uses an
//! independent subset B of the minors as generators and imposes every
//! syzygy of B. The localized one keeps only the minors avoiding the last
//! column of F; the others are recovered by dividing by x_{2k} through the
//! identity Σ_c x_c·col_c(F) = 0, and the constraints are the row-expansion
//! syzygies of the kept minors plus divisibility by x_{2k}. The hypotheses
//! that make the two agree are checked and reported, and a lower bound
//! comes from first-order deformations of φ.
//!
//! Large systems are not materialized: constraint rows are folded into a
//! random sparse sketch with as many rows as unknowns, the sketch is
//! eliminated, and its kernel is certified against the regenerated rows.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::field::{FieldKind, Scalar};
use crate::modp::{self, DenseMat, Modulus, Sketch};
use crate::poly::{combinations, monomials_of_degree, LinFormMatrix, Monomial, MultiPoly, PolyError};
use crate::scroll::PalatiniInstance;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TangentError {
    #[error("tangent computations need a prime field, got {0}")]
    UnsupportedField(String),
    #[error("syzygy degree cap {cap} is below m + 1 = {min}")]
    CapTooLow { cap: usize, min: usize },
    #[error("{unknowns} unknowns exceed the budget of {budget}")]
    ResourceBudgetExceeded { unknowns: usize, budget: usize },
    #[error("dimension still dropping at cap {cap}")]
    NoStabilization { cap: usize },
    #[error("sketch kernel failed certification {attempts} times")]
    CertificationFailed { attempts: usize },
    #[error("(m, k) = ({m}, {k}) outside the closed-form range")]
    RangeError { m: usize, k: usize },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Unknown count up to which the direct route is used by default.
pub const DIRECT_LIMIT: usize = 6_000;

/// Default bound on the number of unknowns.
pub const DEFAULT_MAX_UNKNOWNS: usize = 20_000;

const CERTIFY_ATTEMPTS: u64 = 3;

/// Graded pieces S_0..S_top of F[x_0..x_{n-1}] with monomials in
/// decreasing graded-lex order and multiplication-by-variable tables.
struct Graded {
    monos: Vec<Vec<Monomial>>,
    index: Vec<HashMap<Monomial, u32>>,
    // mulvar[d][i][a]: index of x_i · monos[d][a] in degree d + 1
    mulvar: Vec<Vec<Vec<u32>>>,
}

impl Graded {
    fn new(n: usize, top: usize) -> Graded {
        let monos: Vec<Vec<Monomial>> = (0..=top).map(|d| monomials_of_degree(n, d as u32)).collect();
        let index: Vec<HashMap<Monomial, u32>> =
            monos.iter().map(|ms| ms.iter().enumerate().map(|(i, m)| (m.clone(), i as u32)).collect()).collect();
        let mulvar = (0..top)
            .map(|d| {
                (0..n)
                    .map(|i| {
                        monos[d]
                            .iter()
                            .map(|mo| {
                                let mut e = mo.0.clone();
                                e[i] += 1;
                                index[d + 1][&Monomial(e)]
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Graded { monos, index, mulvar }
    }

    fn dim(&self, d: usize) -> usize {
        self.monos[d].len()
    }

    /// Index map S_from → S_{from+|α|} of multiplication by x^α.
    fn shift(&self, alpha: &Monomial, from: usize) -> Vec<u32> {
        let mut map: Vec<u32> = (0..self.dim(from) as u32).collect();
        let mut deg = from;
        for (i, &e) in alpha.0.iter().enumerate() {
            for _ in 0..e {
                map = map.iter().map(|&a| self.mulvar[deg][i][a as usize]).collect();
                deg += 1;
            }
        }
        map
    }

    fn dense(&self, p: &MultiPoly, d: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.dim(d)];
        for (mo, c) in p.terms() {
            v[self.index[d][mo] as usize] = residue(c);
        }
        v
    }

    /// Rows x^α·g for each generator g (outer) and α of degree d − m (inner).
    fn generator_rows(&self, gens: &[&[f64]], m: usize, d: usize) -> DenseMat {
        let shifts: Vec<Vec<u32>> = self.monos[d - m].iter().map(|a| self.shift(a, m)).collect();
        let mut out = DenseMat::zeros(gens.len() * shifts.len(), self.dim(d));
        for (g, gen) in gens.iter().enumerate() {
            for (a, map) in shifts.iter().enumerate() {
                let row = out.row_mut(g * shifts.len() + a);
                for (i, &c) in gen.iter().enumerate() {
                    if c != 0.0 {
                        row[map[i] as usize] = c;
                    }
                }
            }
        }
        out
    }
}

fn residue(c: &Scalar) -> f64 {
    match c {
        Scalar::Fp(x) => *x as f64,
        _ => unreachable!("prime field checked on entry"),
    }
}

fn transpose(a: &DenseMat) -> DenseMat {
    let mut t = DenseMat::zeros(a.cols, a.rows);
    for i in 0..a.rows {
        for (j, &x) in a.row(i).iter().enumerate() {
            t.set(j, i, x);
        }
    }
    t
}

fn prime_modulus(inst: &PalatiniInstance) -> Result<Modulus, TangentError> {
    let f = inst.field();
    if f.kind() != FieldKind::Prime {
        return Err(TangentError::UnsupportedField(f.name()));
    }
    Ok(Modulus::new(f.characteristic()))
}

/// (S/I)_d with standard monomials chosen by greedy pivoting: the pivots of
/// the reduced echelon form of I_d (columns in decreasing graded-lex order)
/// are the leading monomials and the rest form the quotient basis.
struct Quotient {
    free: Vec<usize>,
    z: DenseMat,
    // position of each monomial: Ok(free index) or Err(pivot row)
    pos: Vec<Result<usize, usize>>,
    ideal_rank: usize,
}

impl Quotient {
    fn new(rows: DenseMat, md: &Modulus) -> Quotient {
        let ech = modp::echelon(rows, md, true);
        let mut pos = vec![Ok(0); ech.cols];
        for (t, &f) in ech.free.iter().enumerate() {
            pos[f] = Ok(t);
        }
        for (i, &pc) in ech.pivots.iter().enumerate() {
            pos[pc] = Err(i);
        }
        Quotient { ideal_rank: ech.rank(), free: ech.free, z: ech.z, pos }
    }

    fn trivial(dim: usize) -> Quotient {
        Quotient {
            free: (0..dim).collect(),
            z: DenseMat::zeros(0, dim),
            pos: (0..dim).map(Ok).collect(),
            ideal_rank: 0,
        }
    }

    fn dim(&self) -> usize {
        self.free.len()
    }

    /// out += c · NF(x^mono).
    fn add_nf(&self, mono: usize, c: f64, out: &mut [f64], md: &Modulus) {
        if c == 0.0 {
            return;
        }
        match self.pos[mono] {
            Ok(t) => out[t] = md.add(out[t], c),
            Err(i) => md.axpy(out, md.neg(c), self.z.row(i)),
        }
    }

    fn nf(&self, v: &[f64], md: &Modulus) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (mono, &c) in v.iter().enumerate() {
            self.add_nf(mono, c, &mut out, md);
        }
        out
    }
}

/// Shared data: the polynomial ring, the minors as dense vectors and the
/// quotient pieces computed so far.
struct Setup<'a> {
    inst: &'a PalatiniInstance,
    md: Modulus,
    m: usize,
    n: usize,
    ring: Graded,
    subsets: Vec<Vec<usize>>,
    minors: Vec<Vec<f64>>,
}

/// Position of each (m−1)-subset of columns in a minor list.
type SubsetIndex = HashMap<Vec<usize>, usize>;

impl<'a> Setup<'a> {
    fn new(inst: &'a PalatiniInstance, top: usize) -> Result<Setup<'a>, TangentError> {
        let md = prime_modulus(inst)?;
        let (m, n) = (inst.m(), inst.system().n());
        let ring = Graded::new(n, top.max(m));
        let minors = inst.f_matrix().minors_max()?.iter().map(|g| ring.dense(g, m)).collect();
        Ok(Setup { inst, md, m, n, ring, subsets: combinations(n, m), minors })
    }

    fn gens(&self, which: &[usize]) -> Vec<&[f64]> {
        which.iter().map(|&j| self.minors[j].as_slice()).collect()
    }

    fn quotient(&self, basis: &[usize], d: usize) -> Quotient {
        if d < self.m {
            return Quotient::trivial(self.ring.dim(d));
        }
        Quotient::new(self.ring.generator_rows(&self.gens(basis), self.m, d), &self.md)
    }

    /// Greedy independent subset of the minors, in lexicographic order.
    fn independent(&self, among: &[usize]) -> Vec<usize> {
        let cols: Vec<Vec<f64>> = among.iter().map(|&j| self.minors[j].clone()).collect();
        let t = transpose(&DenseMat::from_rows(self.ring.dim(self.m), &cols));
        modp::echelon(t, &self.md, false).pivots.iter().map(|&c| among[c]).collect()
    }

    /// Left kernel of the generator rows in degree d: syzygies (f_g) with
    /// coordinates indexed by (generator, monomial of degree d − m).
    fn syzygies(&self, basis: &[usize], d: usize) -> DenseMat {
        let rows = self.ring.generator_rows(&self.gens(basis), self.m, d);
        modp::echelon(transpose(&rows), &self.md, true).kernel(&self.md)
    }

    /// dim Syz_d − rank(S_1·Syz_{d−1}): syzygy generators first needed in degree d.
    /// A syzygy is determined by its entries on the free columns of the
    /// echelon form of G_dᵀ, so the lifted syzygies are compared there. A
    /// sketch of full rank settles the count; otherwise the exact rank is taken.
    fn new_syzygy_generators(&self, basis: &[usize], d: usize) -> usize {
        let md = &self.md;
        let rows = self.ring.generator_rows(&self.gens(basis), self.m, d);
        let ech = modp::echelon(transpose(&rows), md, false);
        drop(rows);
        let syz_d = ech.nullity();
        if d == self.m + 1 || syz_d == 0 {
            return syz_d;
        }
        let mut proj = vec![usize::MAX; ech.cols];
        for (t, &f) in ech.free.iter().enumerate() {
            proj[f] = t;
        }
        let prev = self.syzygies(basis, d - 1);
        let (lo, hi) = (self.ring.dim(d - 1 - self.m), self.ring.dim(d - self.m));
        let lift = |s: usize, i: usize, out: &mut [f64]| {
            out.iter_mut().for_each(|x| *x = 0.0);
            for (c, &x) in prev.row(s).iter().enumerate() {
                if x != 0.0 {
                    let t = proj[(c / lo) * hi + self.ring.mulvar[d - 1 - self.m][i][c % lo] as usize];
                    if t != usize::MAX {
                        out[t] = x;
                    }
                }
            }
        };
        let mut rng = ChaCha8Rng::seed_from_u64(d as u64);
        let mut sk = Sketch::new(*md, syz_d + syz_d / 16 + 16, syz_d, 4);
        let mut buf = vec![0.0; syz_d];
        for s in 0..prev.rows {
            for i in 0..self.n {
                lift(s, i, &mut buf);
                sk.add_row(&buf, &mut rng);
            }
        }
        if modp::rank(sk.acc, md) == syz_d {
            return 0;
        }
        let mut full = DenseMat::zeros(prev.rows * self.n, syz_d);
        for s in 0..prev.rows {
            for i in 0..self.n {
                lift(s, i, full.row_mut(s * self.n + i));
            }
        }
        syz_d - modp::rank(full, md)
    }

    /// Multiplication by x_j as a q_{d+1} × q_d matrix between quotient pieces.
    fn mult(&self, j: usize, d: usize, src: &Quotient, dst: &Quotient) -> DenseMat {
        let mut out = DenseMat::zeros(dst.dim(), src.dim());
        for (s, &mono) in src.free.iter().enumerate() {
            let mut col = vec![0.0; dst.dim()];
            dst.add_nf(self.ring.mulvar[d][j][mono] as usize, 1.0, &mut col, &self.md);
            for (t, &x) in col.iter().enumerate() {
                out.set(t, s, x);
            }
        }
        out
    }

    /// First-order changes of the minors `cols` along φ + ε·ψ for the basis
    /// directions ψ = e_i∧e_j placed in slot ℓ, reduced into (S/I)_m.
    fn deformation_vectors(&self, cols: &[usize], qm: &Quotient) -> Result<DenseMat, TangentError> {
        let (m, n) = (self.m, self.n);
        let f = self.inst.field();
        let fm = self.inst.f_matrix();
        let lower: Vec<(SubsetIndex, Vec<Vec<f64>>)> = (0..m)
            .map(|l| {
                let keep: Vec<usize> = (0..m).filter(|&r| r != l).collect();
                let sub = LinFormMatrix::from_fn(f, m - 1, n, n, |r, c| fm.entry(keep[r], c).to_vec());
                let polys = sub.minors_max()?;
                let idx = combinations(n, m - 1).into_iter().enumerate().map(|(i, s)| (s, i)).collect();
                Ok((idx, polys.iter().map(|g| self.ring.dense(g, m - 1)).collect()))
            })
            .collect::<Result<_, PolyError>>()?;
        let qd = qm.dim();
        let dirs: Vec<(usize, usize, usize)> =
            (0..m).flat_map(|l| (0..n).flat_map(move |j| (0..j).map(move |i| (l, i, j)))).collect();
        let mut out = DenseMat::zeros(dirs.len(), cols.len() * qd);
        for (r, &(l, i, j)) in dirs.iter().enumerate() {
            for (b, &col) in cols.iter().enumerate() {
                let jset = &self.subsets[col];
                let mut poly = vec![0.0; self.ring.dim(m)];
                // row ℓ of F_ψ has x_j in column i and −x_i in column j
                for (t, &c) in jset.iter().enumerate() {
                    let (var, sign) = if c == i {
                        (j, 1i64)
                    } else if c == j {
                        (i, -1)
                    } else {
                        continue;
                    };
                    let sign = if (l + t) % 2 == 0 { sign } else { -sign };
                    let rest: Vec<usize> = jset.iter().copied().filter(|&x| x != c).collect();
                    let (idx, polys) = &lower[l];
                    let minor = &polys[idx[&rest]];
                    let coef = self.md.from_i64(sign);
                    for (a, &x) in minor.iter().enumerate() {
                        if x != 0.0 {
                            let tgt = self.ring.mulvar[m - 1][var][a] as usize;
                            poly[tgt] = self.md.add(poly[tgt], self.md.mul(coef, x));
                        }
                    }
                }
                let red = qm.nf(&poly, &self.md);
                out.row_mut(r)[b * qd..(b + 1) * qd].copy_from_slice(&red);
            }
        }
        Ok(out)
    }
}

/// Constraint rows that vanish outside a few column bands of equal width.
struct Block {
    data: DenseMat,
    bands: Vec<usize>,
    width: usize,
}

impl Block {
    fn new(rows: usize, bands: Vec<usize>, width: usize) -> Block {
        Block { data: DenseMat::zeros(rows, bands.len() * width), bands, width }
    }

    fn rows(&self) -> usize {
        self.data.rows
    }

    fn band_mut(&mut self, row: usize, band: usize) -> &mut [f64] {
        let w = self.width;
        &mut self.data.row_mut(row)[band * w..(band + 1) * w]
    }

    /// self · test, with `test` indexed by the full column range.
    fn mul(&self, test: &DenseMat, md: &Modulus) -> DenseMat {
        let mut out = DenseMat::zeros(self.rows(), test.cols);
        for (b, &off) in self.bands.iter().enumerate() {
            // out − A·B accumulates the negated product; only zeros are inspected
            unsafe {
                md.gemm_sub(
                    self.rows(),
                    test.cols,
                    self.width,
                    self.data.data.as_ptr().add(b * self.width),
                    self.data.cols,
                    test.data.as_ptr().add(off * test.cols),
                    test.cols,
                    out.data.as_mut_ptr(),
                    test.cols,
                );
            }
        }
        out
    }
}

/// Kernel of a row-generated system, certified against the rows.
struct Solution {
    nullity: usize,
    rows: usize,
    witness_in_kernel: Option<bool>,
}

/// Calls its argument once per constraint block.
type BlockSource<'a> = dyn Fn(&mut dyn FnMut(&Block)) + 'a;

/// Folds the rows produced by `gen` into a sketch, eliminates it, and
/// checks C·Zᵀ = 0 for its kernel Z (and C·Wᵀ = 0 for the witness W).
/// Since rank(sketch) ≤ rank(C) always, a passing check proves the nullity.
fn solve(
    gen: &BlockSource,
    unknowns: usize,
    md: Modulus,
    seed: u64,
    witness: Option<&DenseMat>,
) -> Result<Solution, TangentError> {
    for attempt in 0..CERTIFY_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        let mut sk = Sketch::new(md, unknowns, unknowns, 3 << attempt);
        let mut rows = 0;
        gen(&mut |blk: &Block| {
            for i in 0..blk.rows() {
                let r = blk.data.row(i);
                if r.iter().any(|&x| x != 0.0) {
                    sk.add_banded_row(r, &blk.bands, blk.width, &mut rng);
                }
            }
            rows += blk.rows();
        });
        let ech = modp::echelon(sk.acc, &md, true);
        let kernel = ech.kernel(&md);
        let nullity = kernel.rows;
        let wrows = witness.map_or(0, |w| w.rows);
        let mut test = DenseMat::zeros(unknowns, nullity + wrows);
        for c in 0..unknowns {
            for t in 0..nullity {
                test.set(c, t, kernel.get(t, c));
            }
            if let Some(w) = witness {
                for t in 0..w.rows {
                    test.set(c, nullity + t, w.get(t, c));
                }
            }
        }
        let (mut kernel_ok, mut witness_ok) = (true, true);
        gen(&mut |blk: &Block| {
            if blk.rows() == 0 || (!kernel_ok && !witness_ok) {
                return;
            }
            let prod = blk.mul(&test, &md);
            for i in 0..prod.rows {
                let r = prod.row(i);
                kernel_ok &= r[..nullity].iter().all(|&x| x == 0.0);
                witness_ok &= r[nullity..].iter().all(|&x| x == 0.0);
            }
        });
        if kernel_ok {
            return Ok(Solution { nullity, rows, witness_in_kernel: witness.map(|_| witness_ok) });
        }
    }
    Err(TangentError::CertificationFailed { attempts: CERTIFY_ATTEMPTS as usize })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Auto,
    Direct,
    Localized,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TangentOptions {
    pub cap: usize,
    pub route: Route,
    pub max_unknowns: usize,
    pub witness: bool,
    pub seed: u64,
}

impl TangentOptions {
    pub fn new(cap: usize) -> TangentOptions {
        TangentOptions { cap, route: Route::Auto, max_unknowns: DEFAULT_MAX_UNKNOWNS, witness: true, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CapDim {
    pub cap: usize,
    pub dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DegreeCount {
    pub degree: usize,
    pub count: usize,
}

/// Conditions under which the localized system equals the direct one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LocalizedChecks {
    /// multiplication by x_{2k} is injective (S/I)_m → (S/I)_{m+1}
    pub injective_m: bool,
    /// and (S/I)_{m+1} → (S/I)_{m+2}
    pub injective_m1: bool,
    pub kept_independent: bool,
    /// the row-expansion syzygies span the syzygies of the kept minors in degrees m+1 and m+2
    pub expansion_syzygies_span: bool,
}

impl LocalizedChecks {
    pub fn all(&self) -> bool {
        self.injective_m && self.injective_m1 && self.kept_independent && self.expansion_syzygies_span
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TangentReport {
    pub m: usize,
    pub k: usize,
    pub field: String,
    pub route: Route,
    pub generator_count: usize,
    pub independent_generators: usize,
    pub unknowns: usize,
    pub constraint_rows: usize,
    pub syzygy_degrees: Vec<usize>,
    /// Minimal syzygy generators first appearing in each degree.
    pub new_syzygy_generators: Vec<DegreeCount>,
    pub computed_dim: usize,
    pub expected_dim: Option<u64>,
    pub agree: Option<bool>,
    pub stabilization: Vec<CapDim>,
    pub stabilized: bool,
    /// Rank of the first-order deformations of φ, a lower bound for computed_dim.
    pub witness_rank: Option<usize>,
    pub witness_in_kernel: Option<bool>,
    pub localized_checks: Option<LocalizedChecks>,
    pub certified: bool,
}

impl TangentReport {
    /// NoStabilization when the last two caps disagree.
    pub fn check_stabilized(&self) -> Result<(), TangentError> {
        if self.stabilized {
            Ok(())
        } else {
            Err(TangentError::NoStabilization { cap: self.stabilization.last().map_or(0, |c| c.cap) })
        }
    }
}

/// Closed-form h⁰(X, N): m(k(2k−1)−m) for m ≥ 4, k ≥ m−1, and 3k(5k−7)/2 for
/// m = 3, k ≥ 4.
pub fn expected_dim(m: usize, k: usize) -> Option<u64> {
    let (mm, kk) = (m as u64, k as u64);
    if m >= 4 && k + 1 >= m {
        Some(mm * (kk * (2 * kk - 1) - mm))
    } else if m == 3 && k >= 4 {
        Some(3 * kk * (5 * kk - 7) / 2)
    } else {
        None
    }
}

/// Closed-form h¹(X, N) in the same range; no cohomology is computed.
pub fn reference_h1(m: usize, k: usize) -> Result<u64, TangentError> {
    if expected_dim(m, k).is_none() {
        return Err(TangentError::RangeError { m, k });
    }
    let kk = k as u64;
    Ok(if m == 4 && k >= 5 { 2 * (kk - 2) * (kk - 3) * (kk - 4) / 3 } else { 0 })
}

/// A graded piece of S/I for the ideal of all maximal minors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GradedPiece {
    pub degree: usize,
    pub monomial_count: usize,
    pub generator_rows: usize,
    pub ideal_rank: usize,
    pub quotient_dim: usize,
    /// Exponent vectors of the quotient basis.
    pub standard_monomials: Vec<Vec<u32>>,
}

pub fn ideal_piece(inst: &PalatiniInstance, d: usize) -> Result<GradedPiece, TangentError> {
    let s = Setup::new(inst, d)?;
    let all: Vec<usize> = (0..s.minors.len()).collect();
    let q = s.quotient(&all, d);
    Ok(GradedPiece {
        degree: d,
        monomial_count: s.ring.dim(d),
        generator_rows: if d < s.m { 0 } else { all.len() * s.ring.dim(d - s.m) },
        ideal_rank: q.ideal_rank,
        quotient_dim: q.dim(),
        standard_monomials: q.free.iter().map(|&i| s.ring.monos[d][i].0.clone()).collect(),
    })
}

/// Syzygies of degree d among all maximal minors g_J (in lexicographic order
/// of J): tuples (f_J), deg f_J = d − m, with Σ f_J g_J = 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyzygyBasis {
    pub degree: usize,
    pub generators: Vec<MultiPoly>,
    pub relations: Vec<Vec<MultiPoly>>,
}

impl SyzygyBasis {
    /// Expands Σ f_J g_J for every relation.
    pub fn verify(&self) -> bool {
        self.relations.iter().all(|rel| {
            let f = self.generators[0].field();
            let mut acc = MultiPoly::zero(f, self.generators[0].nvars());
            for (fj, gj) in rel.iter().zip(&self.generators) {
                acc = acc.add(&fj.mul(gj).expect("same ring")).expect("same ring");
            }
            acc.is_zero()
        })
    }
}

pub fn syzygies_in_degree(inst: &PalatiniInstance, d: usize) -> Result<SyzygyBasis, TangentError> {
    let m = inst.m();
    if d < m + 1 {
        return Err(TangentError::CapTooLow { cap: d, min: m + 1 });
    }
    let s = Setup::new(inst, d)?;
    let f = inst.field();
    let all: Vec<usize> = (0..s.minors.len()).collect();
    let ker = s.syzygies(&all, d);
    let low = &s.ring.monos[d - m];
    let relations = (0..ker.rows)
        .map(|r| {
            all.iter()
                .map(|&g| {
                    let terms = low
                        .iter()
                        .enumerate()
                        .filter(|(a, _)| ker.get(r, g * low.len() + a) != 0.0)
                        .map(|(a, mo)| (mo.0.clone(), f.from_residue(ker.get(r, g * low.len() + a) as u64)))
                        .collect();
                    MultiPoly::from_terms(f, s.n, terms).expect("valid exponents")
                })
                .collect()
        })
        .collect();
    let out = SyzygyBasis { degree: d, generators: inst.f_matrix().minors_max()?, relations };
    debug_assert!(out.verify());
    Ok(out)
}

pub fn tangent_dimension(inst: &PalatiniInstance, cap: usize) -> Result<TangentReport, TangentError> {
    tangent_dimension_with(inst, &TangentOptions::new(cap))
}

pub fn tangent_dimension_with(inst: &PalatiniInstance, opts: &TangentOptions) -> Result<TangentReport, TangentError> {
    let (m, k) = (inst.m(), inst.k());
    if opts.cap < m + 1 {
        return Err(TangentError::CapTooLow { cap: opts.cap, min: m + 1 });
    }
    let s = Setup::new(inst, opts.cap.max(m + 2))?;
    let all: Vec<usize> = (0..s.minors.len()).collect();
    let basis = s.independent(&all);
    let qm = s.quotient(&basis, m);
    let direct_unknowns = basis.len() * qm.dim();
    let route = match opts.route {
        Route::Auto if direct_unknowns <= DIRECT_LIMIT => Route::Direct,
        Route::Auto => Route::Localized,
        r => r,
    };
    let new_gens: Vec<DegreeCount> =
        (m + 2..=opts.cap).map(|d| DegreeCount { degree: d, count: s.new_syzygy_generators(&basis, d) }).collect();
    let mut report = match route {
        Route::Localized if new_gens.iter().all(|g| g.count == 0) => localized(&s, &basis, &qm, opts)?,
        _ => direct(&s, &basis, &qm, &new_gens, opts)?,
    };
    report.new_syzygy_generators = new_gens;
    report.expected_dim = expected_dim(m, k);
    report.agree = report.expected_dim.map(|e| e == report.computed_dim as u64);
    Ok(report)
}

fn base_report(s: &Setup, route: Route, basis: &[usize], cap: usize) -> TangentReport {
    TangentReport {
        m: s.m,
        k: s.n / 2,
        field: s.inst.field().name(),
        route,
        generator_count: s.minors.len(),
        independent_generators: basis.len(),
        unknowns: 0,
        constraint_rows: 0,
        syzygy_degrees: (s.m + 1..=cap).collect(),
        new_syzygy_generators: Vec::new(),
        computed_dim: 0,
        expected_dim: None,
        agree: None,
        stabilization: Vec::new(),
        stabilized: false,
        witness_rank: None,
        witness_in_kernel: None,
        localized_checks: None,
        certified: false,
    }
}

/// Constraint blocks Σ_g f_g·h_g ∈ (S/I)_d for each syzygy of the given degrees.
fn direct_blocks(
    s: &Setup,
    basis: &[usize],
    qm: &Quotient,
    degrees: &[(usize, DenseMat, Quotient)],
    emit: &mut dyn FnMut(&Block),
) {
    let md = &s.md;
    let qmd = qm.dim();
    let unknowns = basis.len() * qmd;
    for (d, syz, qd) in degrees {
        let low = s.ring.dim(d - s.m);
        let shifts: Vec<Vec<u32>> = s.ring.monos[d - s.m].iter().map(|a| s.ring.shift(a, s.m)).collect();
        for r in 0..syz.rows {
            let mut blk = Block::new(qd.dim(), vec![0], unknowns);
            let mut col = vec![0.0; qd.dim()];
            for g in 0..basis.len() {
                let coeffs = &syz.row(r)[g * low..(g + 1) * low];
                if coeffs.iter().all(|&x| x == 0.0) {
                    continue;
                }
                for (si, &mono) in qm.free.iter().enumerate() {
                    col.iter_mut().for_each(|x| *x = 0.0);
                    for (a, &c) in coeffs.iter().enumerate() {
                        qd.add_nf(shifts[a][mono] as usize, c, &mut col, md);
                    }
                    for (t, &x) in col.iter().enumerate() {
                        blk.data.set(t, g * qmd + si, x);
                    }
                }
            }
            emit(&blk);
        }
    }
}

fn direct(
    s: &Setup,
    basis: &[usize],
    qm: &Quotient,
    new_gens: &[DegreeCount],
    opts: &TangentOptions,
) -> Result<TangentReport, TangentError> {
    let unknowns = basis.len() * qm.dim();
    if unknowns > opts.max_unknowns {
        return Err(TangentError::ResourceBudgetExceeded { unknowns, budget: opts.max_unknowns });
    }
    let mut report = base_report(s, Route::Direct, basis, opts.cap);
    report.unknowns = unknowns;
    let witness = if opts.witness { Some(s.deformation_vectors(basis, qm)?) } else { None };
    if let Some(w) = &witness {
        report.witness_rank = Some(modp::rank(w.clone(), &s.md));
    }
    let mut degrees: Vec<(usize, DenseMat, Quotient)> = Vec::new();
    let mut last = None;
    for d in s.m + 1..=opts.cap {
        let fresh = d == s.m + 1 || new_gens.iter().any(|g| g.degree == d && g.count > 0);
        if fresh {
            degrees.push((d, s.syzygies(basis, d), s.quotient(basis, d)));
            let gen = |emit: &mut dyn FnMut(&Block)| direct_blocks(s, basis, qm, &degrees, emit);
            let sol = solve(&gen, unknowns, s.md, opts.seed, witness.as_ref())?;
            report.constraint_rows = sol.rows;
            report.witness_in_kernel = sol.witness_in_kernel;
            last = Some(sol.nullity);
        }
        report.stabilization.push(CapDim { cap: d, dim: last.expect("first degree is always solved") });
    }
    finish(&mut report);
    Ok(report)
}

fn finish(report: &mut TangentReport) {
    let st = &report.stabilization;
    report.computed_dim = st.last().map_or(0, |c| c.dim);
    report.stabilized = st.len() < 2 || st[st.len() - 2].dim == st[st.len() - 1].dim;
    report.certified = true;
}

fn localized(s: &Setup, basis: &[usize], qm: &Quotient, opts: &TangentOptions) -> Result<TangentReport, TangentError> {
    let (m, n, md) = (s.m, s.n, s.md);
    let last = n - 1;
    let kept: Vec<usize> = (0..s.subsets.len()).filter(|&j| !s.subsets[j].contains(&last)).collect();
    let kidx: HashMap<&[usize], usize> = kept.iter().enumerate().map(|(i, &j)| (s.subsets[j].as_slice(), i)).collect();
    let qmd = qm.dim();
    let unknowns = kept.len() * qmd;
    if unknowns > opts.max_unknowns {
        return Err(TangentError::ResourceBudgetExceeded { unknowns, budget: opts.max_unknowns });
    }
    let mut report = base_report(s, Route::Localized, basis, opts.cap);
    report.unknowns = unknowns;

    let q1 = s.quotient(basis, m + 1);
    let q2 = s.quotient(basis, m + 2);
    let mults: Vec<DenseMat> = (0..n).map(|j| s.mult(j, m, qm, &q1)).collect();
    let checks = LocalizedChecks {
        injective_m: modp::rank(mults[last].clone(), &md) == qmd,
        injective_m1: modp::rank(s.mult(last, m + 1, &q1, &q2), &md) == q1.dim(),
        kept_independent: s.independent(&kept).len() == kept.len(),
        expansion_syzygies_span: expansion_syzygies_span(s, &kept),
    };
    report.localized_checks = Some(checks);

    // cokernel coordinates of x_last·(S/I)_m inside (S/I)_{m+1}
    let img = modp::echelon(transpose(&mults[last]), &md, true);
    let cok = |a: &DenseMat| -> DenseMat {
        let mut out = DenseMat::zeros(img.free.len(), a.cols);
        for (t, &f) in img.free.iter().enumerate() {
            out.row_mut(t).copy_from_slice(a.row(f));
            for (i, &pc) in img.pivots.iter().enumerate() {
                let z = img.z.get(i, t);
                if z != 0.0 {
                    md.axpy(out.row_mut(t), md.neg(z), a.row(pc));
                }
            }
        }
        out
    };
    let div_mults: Vec<DenseMat> = mults[..last].iter().map(&cok).collect();
    let sys = s.inst.system();
    let gen = |emit: &mut dyn FnMut(&Block)| {
        // row expansions: Σ_t (−1)^t F_{ℓ,K_t} g_{K∖K_t} = 0
        for kset in combinations(last, m + 1) {
            let bands: Vec<usize> = kset
                .iter()
                .map(|&c| {
                    let rest: Vec<usize> = kset.iter().copied().filter(|&x| x != c).collect();
                    kidx[rest.as_slice()] * qmd
                })
                .collect();
            for l in 0..m {
                let mut blk = Block::new(q1.dim(), bands.clone(), qmd);
                for (t, &c) in kset.iter().enumerate() {
                    for (j, mj) in mults.iter().enumerate() {
                        let a = md.from_i64(residue(sys.coeff(l, c, j)) as i64);
                        let a = if t % 2 == 0 { a } else { md.neg(a) };
                        if a == 0.0 {
                            continue;
                        }
                        for r in 0..q1.dim() {
                            md.axpy(blk.band_mut(r, t), a, mj.row(r));
                        }
                    }
                }
                emit(&blk);
            }
        }
        // divisibility: Σ_{c∉T, c<last} sgn(c,T) x_c h_{T∪c} ∈ x_last·(S/I)_m
        for tset in combinations(last, m - 1) {
            let cs: Vec<usize> = (0..last).filter(|c| !tset.contains(c)).collect();
            let bands = cs
                .iter()
                .map(|&c| {
                    let mut jset = tset.clone();
                    jset.push(c);
                    jset.sort();
                    kidx[jset.as_slice()] * qmd
                })
                .collect();
            let mut blk = Block::new(img.free.len(), bands, qmd);
            for (b, &c) in cs.iter().enumerate() {
                let above = tset.iter().filter(|&&t| t > c).count();
                let a = if above % 2 == 0 { 1.0 } else { md.neg(1.0) };
                for r in 0..blk.rows() {
                    md.axpy(blk.band_mut(r, b), a, div_mults[c].row(r));
                }
            }
            emit(&blk);
        }
    };
    let witness = if opts.witness { Some(s.deformation_vectors(&kept, qm)?) } else { None };
    if let Some(w) = &witness {
        report.witness_rank = Some(modp::rank(w.clone(), &md));
    }
    let sol = solve(&gen, unknowns, md, opts.seed, witness.as_ref())?;
    report.constraint_rows = sol.rows;
    report.witness_in_kernel = sol.witness_in_kernel;
    // higher caps add no constraints when no new syzygy generators appear
    report.stabilization = (m + 1..=opts.cap).map(|cap| CapDim { cap, dim: sol.nullity }).collect();
    finish(&mut report);
    Ok(report)
}

/// Whether the row-expansion syzygies of the kept minors (and their
/// multiples by variables) span all their syzygies in degrees m+1 and m+2.
fn expansion_syzygies_span(s: &Setup, kept: &[usize]) -> bool {
    let (m, n, md) = (s.m, s.n, &s.md);
    let last = n - 1;
    let pos: HashMap<&[usize], usize> = kept.iter().enumerate().map(|(i, &j)| (s.subsets[j].as_slice(), i)).collect();
    let sys = s.inst.system();
    let d1 = s.ring.dim(1);
    let mut exp_rows: Vec<Vec<f64>> = Vec::new();
    for kset in combinations(last, m + 1) {
        for l in 0..m {
            let mut v = vec![0.0; kept.len() * d1];
            for (t, &c) in kset.iter().enumerate() {
                let rest: Vec<usize> = kset.iter().copied().filter(|&x| x != c).collect();
                let g = pos[rest.as_slice()];
                for j in 0..n {
                    let a = md.from_i64(residue(sys.coeff(l, c, j)) as i64);
                    let a = if t % 2 == 0 { a } else { md.neg(a) };
                    let mono = s.ring.mulvar[0][j][0] as usize;
                    v[g * d1 + mono] = md.add(v[g * d1 + mono], a);
                }
            }
            exp_rows.push(v);
        }
    }
    let gens = s.gens(kept);
    let syz_dim = |d: usize| kept.len() * s.ring.dim(d - m) - modp::rank(s.ring.generator_rows(&gens, m, d), md);
    let e1 = DenseMat::from_rows(kept.len() * d1, &exp_rows);
    if modp::rank(e1.clone(), md) != syz_dim(m + 1) {
        return false;
    }
    let d2 = s.ring.dim(2);
    let mut e2 = DenseMat::zeros(exp_rows.len() * n, kept.len() * d2);
    for (r, v) in exp_rows.iter().enumerate() {
        for i in 0..n {
            let row = e2.row_mut(r * n + i);
            for (c, &x) in v.iter().enumerate() {
                if x != 0.0 {
                    row[(c / d1) * d2 + s.ring.mulvar[1][i][c % d1] as usize] = x;
                }
            }
        }
    }
    modp::rank(e2, md) == syz_dim(m + 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(expected_dim(4, 3), Some(44));
        assert_eq!(expected_dim(4, 4), Some(96));
        assert_eq!(expected_dim(3, 4), Some(78));
        assert_eq!(expected_dim(5, 4), Some(115));
        assert_eq!(expected_dim(3, 3), None);
        assert_eq!(reference_h1(4, 5), Ok(4));
        assert_eq!(reference_h1(5, 5), Ok(0));
        assert_eq!(reference_h1(4, 4), Ok(0));
        assert_eq!(reference_h1(5, 3), Err(TangentError::RangeError { m: 5, k: 3 }));
    }

    #[test]
    fn shift_composes_variables() {
        let g = Graded::new(3, 3);
        let alpha = Monomial(vec![1, 0, 1]);
        let map = g.shift(&alpha, 1);
        for (a, &b) in map.iter().enumerate() {
            let mut e = g.monos[1][a].0.clone();
            e[0] += 1;
            e[2] += 1;
            assert_eq!(g.monos[3][b as usize].0, e);
        }
    }
}

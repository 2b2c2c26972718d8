//! The correspondence Y ← P(E_φ) → X, realized pointwise: Y points by
//! root finding on lines, fibers as kernels of M(u), fiber lines pushed into
//! X, and the inverse map v ↦ u through the kernel of N(v).

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::field::{Field, FieldError, FieldKind, Scalar};
use crate::linalg::{normalize_projective, Matrix};
use crate::poly::{combinations, PolyError};
use crate::scroll::{membership_x, random_point, PalatiniInstance, ScrollError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IncidenceError {
    #[error("the pfaffian vanishes identically")]
    DegeneratePfaffian,
    #[error("the skew matrices are linearly dependent")]
    NonInjectiveSystem,
    #[error("no point of Y found on {lines} lines")]
    SamplingExhausted { lines: usize },
    #[error("point is not on Y")]
    NotOnY,
    #[error("fiber has corank {corank}, expected 2")]
    CorankNotTwo { corank: usize },
    #[error("point is not on X")]
    NotOnX,
    #[error("kernel of N(v) has dimension {nullity}")]
    FiberNotUnique { nullity: usize },
    #[error("enumeration needs {lines} lines, budget is {budget}")]
    EnumerationTooLarge { lines: u128, budget: u64 },
    #[error("recovered fiber fails M(u)v = 0")]
    Postcondition,
    #[error("operation needs a finite field, got {0}")]
    UnsupportedField(String),
    #[error(transparent)]
    Scroll(#[from] ScrollError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Lines tried per requested point before giving up.
const LINES_PER_POINT: usize = 50;

/// Pencil lines allowed when enumerating Y(F_q) for slice counts.
pub const SLICE_LINE_BUDGET: u64 = 20_000;

/// Points of Y over the sampling field, together with the instance
/// rewritten over that field.
#[derive(Debug, Clone)]
pub struct YSample {
    pub instance: PalatiniInstance,
    pub points: Vec<Vec<Scalar>>,
    pub lines: usize,
}

/// The instance over F_{p^ext}; extensions are only taken of prime fields.
pub fn sampling_instance(inst: &PalatiniInstance, ext: usize) -> Result<PalatiniInstance, IncidenceError> {
    let f = inst.field();
    if !f.is_finite() {
        return Err(IncidenceError::UnsupportedField(f.name()));
    }
    match ext {
        0 => Err(FieldError::InvalidDegree.into()),
        1 => Ok(inst.clone()),
        _ if f.kind() == FieldKind::Prime => Ok(inst.base_change(&Field::extension(f.characteristic(), ext, 0)?)?),
        _ => Err(IncidenceError::UnsupportedField(f.name())),
    }
}

/// Up to `count` distinct normalized points of Y over F_{p^ext}, found by
/// restricting pf to seeded random lines. Fails only if no point turns up
/// within the line budget.
pub fn sample_y(inst: &PalatiniInstance, ext: usize, count: usize, seed: u64) -> Result<YSample, IncidenceError> {
    if inst.pf_is_zero() {
        return Err(IncidenceError::DegeneratePfaffian);
    }
    if !inst.system().phi_injective() {
        return Err(IncidenceError::NonInjectiveSystem);
    }
    let instance = sampling_instance(inst, ext)?;
    let f = instance.field().clone();
    let pf = instance.pf();
    let m = instance.m();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut points = Vec::new();
    let budget = LINES_PER_POINT * count.max(1);
    let mut lines = 0;
    let mut push = |u: Vec<Scalar>, points: &mut Vec<Vec<Scalar>>| {
        if let Some(u) = normalize_projective(&f, &u) {
            if seen.insert(u.clone()) {
                points.push(u);
            }
        }
    };
    while points.len() < count && lines < budget {
        lines += 1;
        let p0 = random_point(&f, m, &mut rng);
        let p1 = random_point(&f, m, &mut rng);
        let g = match pf.restrict_to_line(&p0, &p1) {
            Ok(g) => g,
            Err(PolyError::DependentBasePoints) => continue,
            Err(e) => return Err(e.into()),
        };
        if g.is_zero() {
            push(p0, &mut points);
            push(p1, &mut points);
            continue;
        }
        if g.degree() < Some(instance.k()) {
            push(p1.clone(), &mut points);
        }
        for t in g.roots_seeded(rng.random())? {
            let u: Vec<Scalar> = p0.iter().zip(&p1).map(|(a, b)| f.add(a, &f.mul(&t, b))).collect();
            push(u, &mut points);
        }
    }
    points.truncate(count);
    if points.is_empty() {
        return Err(IncidenceError::SamplingExhausted { lines });
    }
    Ok(YSample { instance, points, lines })
}

/// A point u of Y with a basis of ker M(u) as columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidencePoint {
    pub u: Vec<Scalar>,
    pub kernel: Matrix,
}

impl IncidencePoint {
    pub fn corank(&self) -> usize {
        self.kernel.cols()
    }

    pub fn field(&self) -> &Field {
        self.kernel.field()
    }
}

pub fn fiber(inst: &PalatiniInstance, u: &[Scalar]) -> Result<IncidencePoint, IncidenceError> {
    let f = inst.field();
    let u = normalize_projective(f, u).ok_or(ScrollError::ZeroVector)?;
    if !f.is_zero(&inst.pf().eval(&u)?) {
        return Err(IncidenceError::NotOnY);
    }
    let kernel = inst.m_at(&u)?.kernel_basis();
    Ok(IncidencePoint { u, kernel })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LinePoint {
    pub v: Vec<String>,
    pub member: bool,
    pub corank: usize,
    pub minors_vanish: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineRecord {
    pub points: Vec<LinePoint>,
    /// More than m points passed, so the degree-m minors vanish on the whole line.
    pub full_line: bool,
}

impl LineRecord {
    pub fn all_pass(&self) -> bool {
        self.points.iter().all(|p| p.member && p.minors_vanish)
    }
}

/// Whether every maximal minor of the constant matrix `a` (rows ≤ cols) is zero.
pub fn maximal_minors_vanish(a: &Matrix) -> bool {
    let f = a.field();
    combinations(a.cols(), a.rows()).iter().all(|cols| f.is_zero(&a.select_columns(cols).det().expect("square")))
}

/// Checks max(k+1, m+1) distinct points of the fiber line: (1:0), (0:1) and
/// (1:t) for the first nonzero elements t.
pub fn scroll_line(inst: &PalatiniInstance, ipt: &IncidencePoint) -> Result<LineRecord, IncidenceError> {
    if ipt.corank() != 2 {
        return Err(IncidenceError::CorankNotTwo { corank: ipt.corank() });
    }
    let f = inst.field();
    let (a, b) = (ipt.kernel.column(0), ipt.kernel.column(1));
    let want = (inst.k() + 1).max(inst.m() + 1);
    let avail = f.order_u64().map_or(u64::MAX, |q| q.saturating_add(1));
    let npts = (want as u64).min(avail) as usize;
    let mut coeffs = vec![(f.one(), f.zero()), (f.zero(), f.one())];
    coeffs.extend((1..npts.saturating_sub(1) as u128).map(|i| (f.one(), f.element(i))));
    coeffs.truncate(npts);
    let rows = inst.f_matrix();
    let mut points = Vec::with_capacity(npts);
    for (s, t) in coeffs {
        let v: Vec<Scalar> = a.iter().zip(&b).map(|(x, y)| f.add(&f.mul(&s, x), &f.mul(&t, y))).collect();
        let mem = membership_x(inst, &v)?;
        let minors_vanish = maximal_minors_vanish(&rows.eval(&v)?);
        points.push(LinePoint {
            v: v.iter().map(|x| x.to_string()).collect(),
            member: mem.member,
            corank: mem.corank,
            minors_vanish,
        });
    }
    let full_line = points.len() > inst.m() && points.iter().all(|p| p.member && p.minors_vanish);
    Ok(LineRecord { points, full_line })
}

/// The unique u with M(u)v = 0, normalized.
pub fn fiber_of_x(inst: &PalatiniInstance, v: &[Scalar]) -> Result<Vec<Scalar>, IncidenceError> {
    let f = inst.field();
    if !membership_x(inst, v)?.member {
        return Err(IncidenceError::NotOnX);
    }
    let ker = inst.system().n_matrix(v)?.kernel_basis();
    if ker.cols() != 1 {
        return Err(IncidenceError::FiberNotUnique { nullity: ker.cols() });
    }
    let u = normalize_projective(f, &ker.column(0)).expect("kernel vector is nonzero");
    if !inst.m_at(&u)?.mul_vec(v).expect("shape").iter().all(|x| f.is_zero(x)) {
        return Err(IncidenceError::Postcondition);
    }
    Ok(u)
}

/// Σ_{j,ℓ} a_{i,j}^ℓ v_j u_ℓ = 0 for every i, straight from the coefficients.
pub fn coordinate_identity(inst: &PalatiniInstance, v: &[Scalar], u: &[Scalar]) -> bool {
    let sys = inst.system();
    let f = sys.field();
    (0..sys.n()).all(|i| {
        let mut acc = f.zero();
        for (l, ul) in u.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                acc = f.add(&acc, &f.mul(sys.coeff(l, i, j), &f.mul(vj, ul)));
            }
        }
        f.is_zero(&acc)
    })
}

/// Calls `visit` on the normalized representative of every point of
/// P^{n-1}(F_q), leading coordinate first.
pub fn for_each_projective_point(field: &Field, n: usize, mut visit: impl FnMut(&[Scalar])) {
    let q = field.order_u64().expect("finite field") as u128;
    let elems: Vec<Scalar> = (0..q).map(|i| field.element(i)).collect();
    for lead in 0..n {
        let tail = n - lead - 1;
        let mut v = vec![field.zero(); n];
        v[lead] = field.one();
        let mut digits = vec![0usize; tail];
        loop {
            for (d, x) in digits.iter().zip(v[lead + 1..].iter_mut()) {
                *x = elems[*d].clone();
            }
            visit(&v);
            let mut i = 0;
            while i < tail {
                digits[i] += 1;
                if digits[i] < elems.len() {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
            if i == tail {
                break;
            }
        }
    }
}

/// Random (m−1)×2k matrix of full rank: the equations of a linear space of
/// dimension 2k − m, complementary to X. Rank-deficient draws are redrawn.
pub fn random_slice(inst: &PalatiniInstance, seed: u64) -> Matrix {
    let f = inst.field();
    let (n, m) = (inst.system().n(), inst.m());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let h = Matrix::from_fn(f, m - 1, n, |_, _| f.random(&mut rng));
        if h.rank() == m - 1 {
            return h;
        }
    }
}

fn pencil_line_count(q: u64, m: usize) -> u128 {
    (q as u128).saturating_pow(m.saturating_sub(2) as u32)
}

/// #(X ∩ L)(F_q) for L = {Hv = 0}, by enumerating Y(F_q) along the lines
/// through e₀ and intersecting each fiber with L.
pub fn slice_count(inst: &PalatiniInstance, h: &Matrix, line_budget: u64) -> Result<u64, IncidenceError> {
    Ok(slice_points(inst, h, line_budget)?.len() as u64)
}

/// The points of (X ∩ L)(F_q), normalized.
pub fn slice_points(inst: &PalatiniInstance, h: &Matrix, line_budget: u64) -> Result<Vec<Vec<Scalar>>, IncidenceError> {
    let f = inst.field().clone();
    let Some(q) = f.order_u64() else {
        return Err(IncidenceError::UnsupportedField(f.name()));
    };
    if inst.pf_is_zero() {
        return Err(IncidenceError::DegeneratePfaffian);
    }
    let m = inst.m();
    let lines = pencil_line_count(q, m);
    if lines > line_budget as u128 {
        return Err(IncidenceError::EnumerationTooLarge { lines, budget: line_budget });
    }
    let pf = inst.pf();
    let mut ys: Vec<Vec<Scalar>> = Vec::new();
    let mut e0 = vec![f.zero(); m];
    e0[0] = f.one();
    if f.is_zero(&pf.eval(&e0)?) {
        ys.push(e0.clone());
    }
    let mut err = None;
    // w runs over the hyperplane u₀ = 0; each u ≠ e₀ lies on exactly one line (e₀, w)
    for_each_projective_point(&f, m - 1, |w0| {
        if err.is_some() {
            return;
        }
        let mut w = vec![f.zero()];
        w.extend_from_slice(w0);
        let g = match pf.restrict_to_line(&e0, &w) {
            Ok(g) => g,
            Err(e) => {
                err = Some(e);
                return;
            }
        };
        let at = |t: &Scalar| -> Vec<Scalar> { e0.iter().zip(&w).map(|(a, b)| f.add(a, &f.mul(t, b))).collect() };
        if g.is_zero() {
            ys.extend((0..q as u128).map(|i| at(&f.element(i))));
            ys.push(w.clone());
            return;
        }
        if g.degree() < Some(inst.k()) {
            ys.push(w.clone());
        }
        ys.extend(g.roots().expect("finite field").iter().map(at));
    });
    if let Some(e) = err {
        return Err(e.into());
    }
    let mut found: HashSet<Vec<Scalar>> = HashSet::new();
    for u in &ys {
        let stacked = inst.m_at(u)?.vstack(h).map_err(ScrollError::from)?;
        let basis = stacked.kernel_basis();
        if basis.cols() == 0 {
            continue;
        }
        for_each_projective_point(&f, basis.cols(), |c| {
            let v = basis.mul_vec(c).expect("shape");
            found.insert(normalize_projective(&f, &v).expect("nonzero"));
        });
    }
    let mut found: Vec<_> = found.into_iter().collect();
    found.sort_by_key(|v| v.iter().map(|x| f.index_of(x)).collect::<Vec<_>>());
    Ok(found)
}

/// #(X ∩ L)(F_q) by testing every point of L.
pub fn slice_count_brute(inst: &PalatiniInstance, h: &Matrix) -> Result<u64, IncidenceError> {
    let f = inst.field().clone();
    if !f.is_finite() {
        return Err(IncidenceError::UnsupportedField(f.name()));
    }
    let basis = h.kernel_basis();
    let mut count = 0;
    let mut err = None;
    for_each_projective_point(&f, basis.cols(), |c| {
        let v = basis.mul_vec(c).expect("shape");
        match membership_x(inst, &v) {
            Ok(mem) if mem.member => count += 1,
            Ok(_) => {}
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e.into()),
        None => Ok(count),
    }
}

/// Slice count for a seeded random slice over the instance's own field.
pub fn random_slice_count(inst: &PalatiniInstance, seed: u64) -> Result<u64, IncidenceError> {
    slice_count(inst, &random_slice(inst, seed), SLICE_LINE_BUDGET)
}

/// L = {Hv = 0} meets X transversally at v ∈ X: the tangent space of the
/// cone over X at v and the cone over L intersect only in the line through v.
/// Needs dim L = dim X, i.e. H with m − 1 rows.
pub fn slice_transverse_at(inst: &PalatiniInstance, h: &Matrix, v: &[Scalar]) -> Result<bool, IncidenceError> {
    let f = inst.field();
    let mut rows = inst.f_matrix().minors_max()?.iter().map(|g| g.gradient_at(v)).collect::<Result<Vec<_>, _>>()?;
    rows.extend((0..h.rows()).map(|i| (0..h.cols()).map(|j| h.get(i, j).clone()).collect()));
    let n = inst.system().n();
    Ok(Matrix::from_rows(f, rows).map_err(ScrollError::from)?.rank() == n - 1)
}

/// Point counts of X ∩ L over F_{p^e}, e = 1..=max_e, and whether L was
/// seen to be transverse to X at every point found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SliceCensus {
    pub counts: Vec<u64>,
    pub transverse: bool,
}

/// #(X ∩ L)(F_{p^e}) for e = 1..=max_e, where the instance and the slice
/// equations H are defined over the prime field F_p. Transversality is
/// checked at each point until the first failure.
pub fn slice_census_over_extensions(
    inst: &PalatiniInstance,
    h: &Matrix,
    max_e: usize,
    line_budget: u64,
) -> Result<SliceCensus, IncidenceError> {
    let f = inst.field();
    if f.kind() != FieldKind::Prime {
        return Err(IncidenceError::UnsupportedField(f.name()));
    }
    let mut census = SliceCensus { counts: Vec::with_capacity(max_e), transverse: true };
    for e in 1..=max_e {
        let big = sampling_instance(inst, e)?;
        let bf = big.field();
        let hb = Matrix::from_fn(bf, h.rows(), h.cols(), |i, j| bf.from_residue(f.index_of(h.get(i, j)) as u64));
        let points = slice_points(&big, &hb, line_budget)?;
        for v in &points {
            if !census.transverse {
                break;
            }
            census.transverse = slice_transverse_at(&big, &hb, v)?;
        }
        census.counts.push(points.len() as u64);
    }
    Ok(census)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scroll::{instance_random, planted};

    #[test]
    fn projective_enumeration_size() {
        let f = Field::prime(5).unwrap();
        let mut seen = HashSet::new();
        for_each_projective_point(&f, 3, |v| {
            assert_eq!(normalize_projective(&f, v).unwrap(), v);
            seen.insert(v.to_vec());
        });
        assert_eq!(seen.len(), 31);
    }

    #[test]
    fn block_planted_fiber() {
        let f = Field::prime(101).unwrap();
        let inst = planted::block_diagonal(3, &f).unwrap();
        let u = vec![f.zero(), f.one(), f.one()];
        let ipt = fiber(&inst, &u).unwrap();
        assert_eq!(ipt.corank(), 2);
        let span = Matrix::from_i64(&f, 6, 2, &[1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(ipt.kernel, span);
    }

    #[test]
    fn slice_count_matches_brute_force() {
        let f = Field::prime(7).unwrap();
        let inst = instance_random(3, 3, &f, 4).unwrap();
        for seed in 0..3 {
            let h = random_slice(&inst, seed);
            assert_eq!(slice_count(&inst, &h, 100).unwrap(), slice_count_brute(&inst, &h).unwrap());
        }
    }
}

//! Skew systems φ: U → ∧²V* and the Palatini instance they define: the
//! m×2k matrix F of linear forms on P(V), the 2k×2k skew matrix M of linear
//! forms on P(U), and its pfaffian.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::chow::palatini_degree;
use crate::field::{Field, FieldError, FieldKind, Scalar};
use crate::incidence;
use crate::linalg::{LinalgError, Matrix};
use crate::poly::{LinFormMatrix, MultiPoly, PolyError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScrollError {
    #[error("(m, k) = ({m}, {k}) outside 1 <= m <= 2k - 1")]
    RangeError { m: usize, k: usize },
    #[error("matrix {index} is not skew-symmetric")]
    NotSkewSymmetric { index: usize },
    #[error("matrix {index} has shape {rows}x{cols}, expected {expected}x{expected}")]
    ShapeError { index: usize, rows: usize, cols: usize, expected: usize },
    #[error("field {0} has fewer than 5 elements")]
    FieldTooSmall(String),
    #[error("the zero vector is not a projective point")]
    ZeroVector,
    #[error("point has {got} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operation needs a prime field, got {0}")]
    UnsupportedField(String),
    #[error("invalid instance file: {0}")]
    Format(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// m skew 2k×2k matrices A¹..A^m over a common field.
///
/// Skewness and 2k ≥ m+1 are enforced. Linear independence of the A^ℓ is
/// not: dependent systems are representable so that they can be flagged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkewSystem {
    field: Field,
    k: usize,
    mats: Vec<Matrix>,
}

impl SkewSystem {
    pub fn new(field: &Field, k: usize, mats: Vec<Matrix>) -> Result<SkewSystem, ScrollError> {
        let m = mats.len();
        if m == 0 || 2 * k < m + 1 {
            return Err(ScrollError::RangeError { m, k });
        }
        for (index, a) in mats.iter().enumerate() {
            if a.rows() != 2 * k || a.cols() != 2 * k {
                return Err(ScrollError::ShapeError { index, rows: a.rows(), cols: a.cols(), expected: 2 * k });
            }
            if a.field() != field {
                return Err(FieldError::FieldMismatch.into());
            }
            if !a.is_skew() {
                return Err(ScrollError::NotSkewSymmetric { index });
            }
        }
        Ok(SkewSystem { field: field.clone(), k, mats })
    }

    /// Builds a system from strict lower triangles listed row by row:
    /// a_{1,0}, a_{2,0}, a_{2,1}, a_{3,0}, …
    pub fn from_lower_triangles(field: &Field, k: usize, tri: &[Vec<Scalar>]) -> Result<SkewSystem, ScrollError> {
        let n = 2 * k;
        let mut mats = Vec::with_capacity(tri.len());
        for (index, t) in tri.iter().enumerate() {
            if t.len() != n * (n - 1) / 2 {
                return Err(ScrollError::Format(format!(
                    "matrix {index} has {} entries, expected {}",
                    t.len(),
                    n * (n - 1) / 2
                )));
            }
            let mut a = Matrix::zeros(field, n, n);
            let mut it = t.iter();
            for i in 1..n {
                for j in 0..i {
                    let x = it.next().unwrap();
                    a.set(i, j, x.clone());
                    a.set(j, i, field.neg(x));
                }
            }
            mats.push(a);
        }
        SkewSystem::new(field, k, mats)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn m(&self) -> usize {
        self.mats.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// dim V = 2k.
    pub fn n(&self) -> usize {
        2 * self.k
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.mats
    }

    /// a_{i,j}^ℓ (0-indexed).
    pub fn coeff(&self, l: usize, i: usize, j: usize) -> &Scalar {
        self.mats[l].get(i, j)
    }

    pub fn lower_triangle(&self, l: usize) -> Vec<Scalar> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 1..n {
            for j in 0..i {
                out.push(self.mats[l].get(i, j).clone());
            }
        }
        out
    }

    /// Whether φ is injective, i.e. the A^ℓ are linearly independent.
    pub fn phi_injective(&self) -> bool {
        let rows: Vec<Vec<Scalar>> = (0..self.m()).map(|l| self.lower_triangle(l)).collect();
        Matrix::from_rows(&self.field, rows).expect("equal lengths").rank() == self.m()
    }

    /// The 2km×2k matrix stacking all A^ℓ. f_φ is injective iff it has rank 2k.
    pub fn stacked(&self) -> Matrix {
        let n = self.n();
        Matrix::from_fn(&self.field, n * self.m(), n, |r, c| self.mats[r / n].get(r % n, c).clone())
    }

    pub fn f_phi_injective(&self) -> bool {
        self.stacked().rank() == self.n()
    }

    /// Vectors killed by every A^ℓ, as columns.
    pub fn common_kernel(&self) -> Matrix {
        self.stacked().kernel_basis()
    }

    /// M(u) = Σ u_ℓ A^ℓ as a matrix of linear forms in u₁..u_m.
    pub fn pencil_matrix(&self) -> LinFormMatrix {
        let n = self.n();
        LinFormMatrix::from_fn(&self.field, n, n, self.m(), |i, j| {
            (0..self.m()).map(|l| self.coeff(l, i, j).clone()).collect()
        })
    }

    /// F with entry (ℓ, c) = Σ_j a_{c,j}^ℓ x_j, a matrix of linear forms in x₁..x_{2k}.
    pub fn row_matrix(&self) -> LinFormMatrix {
        let n = self.n();
        LinFormMatrix::from_fn(&self.field, self.m(), n, n, |l, c| self.mats[l].row(c).to_vec())
    }

    /// N(v), the 2k×m matrix with entry (i, ℓ) = Σ_j a_{i,j}^ℓ v_j.
    pub fn n_matrix(&self, v: &[Scalar]) -> Result<Matrix, ScrollError> {
        let n = self.n();
        if v.len() != n {
            return Err(ScrollError::DimensionMismatch { expected: n, got: v.len() });
        }
        let cols: Vec<Vec<Scalar>> = self.mats.iter().map(|a| a.mul_vec(v)).collect::<Result<_, _>>()?;
        Ok(Matrix::from_columns(&self.field, n, &cols))
    }

    /// Rewrites a prime-field system over a finite field of the same characteristic.
    pub fn base_change(&self, target: &Field) -> Result<SkewSystem, ScrollError> {
        if self.field.kind() != FieldKind::Prime {
            return Err(ScrollError::UnsupportedField(self.field.name()));
        }
        if !target.is_finite() || target.characteristic() != self.field.characteristic() {
            return Err(FieldError::FieldMismatch.into());
        }
        let mats = self
            .mats
            .iter()
            .map(|a| {
                Matrix::from_fn(target, a.rows(), a.cols(), |i, j| {
                    target.from_residue(self.field.index_of(a.get(i, j)) as u64)
                })
            })
            .collect();
        SkewSystem::new(target, self.k, mats)
    }
}

/// Where an instance came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub construction: String,
}

/// A skew system together with its derived matrices and pfaffian.
#[derive(Debug, Clone)]
pub struct PalatiniInstance {
    system: SkewSystem,
    pencil: LinFormMatrix,
    rows: LinFormMatrix,
    pf: MultiPoly,
    provenance: Provenance,
}

impl PalatiniInstance {
    pub fn new(system: SkewSystem, provenance: Provenance) -> Result<PalatiniInstance, ScrollError> {
        let pencil = system.pencil_matrix();
        let rows = system.row_matrix();
        let pf = pencil.symbolic_pfaffian()?;
        Ok(PalatiniInstance { system, pencil, rows, pf, provenance })
    }

    pub fn system(&self) -> &SkewSystem {
        &self.system
    }

    pub fn field(&self) -> &Field {
        &self.system.field
    }

    pub fn m(&self) -> usize {
        self.system.m()
    }

    pub fn k(&self) -> usize {
        self.system.k
    }

    /// M_φ, in the variables u₁..u_m.
    pub fn m_matrix(&self) -> &LinFormMatrix {
        &self.pencil
    }

    /// F_φ, in the variables x₁..x_{2k}.
    pub fn f_matrix(&self) -> &LinFormMatrix {
        &self.rows
    }

    pub fn pf(&self) -> &MultiPoly {
        &self.pf
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn pf_is_zero(&self) -> bool {
        self.pf.is_zero()
    }

    /// The same system over a finite field of the same characteristic. The
    /// pfaffian is carried over coefficientwise.
    pub fn base_change(&self, target: &Field) -> Result<PalatiniInstance, ScrollError> {
        let system = self.system.base_change(target)?;
        let src = self.field().clone();
        let pf = self.pf.map_coeffs(target, |a| target.from_residue(src.index_of(a) as u64));
        Ok(PalatiniInstance {
            pencil: system.pencil_matrix(),
            rows: system.row_matrix(),
            system,
            pf,
            provenance: self.provenance.clone(),
        })
    }

    /// M(u) as a constant matrix.
    pub fn m_at(&self, u: &[Scalar]) -> Result<Matrix, ScrollError> {
        Ok(self.pencil.eval(u)?)
    }

    pub fn to_json(&self) -> Result<InstanceJson, ScrollError> {
        let f = self.field();
        if !f.is_finite() {
            return Err(ScrollError::UnsupportedField(f.name()));
        }
        let ctx = f.ctx();
        let modulus = (ctx.kind == FieldKind::Extension).then(|| ctx.modulus.clone());
        let matrices = (0..self.m())
            .map(|l| self.system.lower_triangle(l).iter().map(|a| f.index_of(a) as u64).collect())
            .collect();
        Ok(InstanceJson {
            m: self.m(),
            k: self.k(),
            field: FieldJson { p: ctx.p, e: ctx.e, modulus },
            matrices,
            seed: self.provenance.seed,
        })
    }

    /// Canonical serialized form: compact JSON followed by a newline.
    pub fn to_json_string(&self) -> Result<String, ScrollError> {
        let mut s = serde_json::to_string(&self.to_json()?).map_err(|e| ScrollError::Format(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json_str(s: &str) -> Result<PalatiniInstance, ScrollError> {
        let j: InstanceJson = serde_json::from_str(s).map_err(|e| ScrollError::Format(e.to_string()))?;
        PalatiniInstance::from_json(&j)
    }

    pub fn from_json(j: &InstanceJson) -> Result<PalatiniInstance, ScrollError> {
        if j.m == 0 || 2 * j.k < j.m + 1 {
            return Err(ScrollError::RangeError { m: j.m, k: j.k });
        }
        let field = match (j.field.e, &j.field.modulus) {
            (0, _) => return Err(FieldError::InvalidDegree.into()),
            (1, None) => Field::prime(j.field.p)?,
            (e, Some(md)) if md.len() == e + 1 => Field::with_modulus(j.field.p, md.clone())?,
            _ => return Err(ScrollError::Format("extension fields need a modulus of length e + 1".into())),
        };
        if j.matrices.len() != j.m {
            return Err(ScrollError::Format(format!("m = {} but {} matrices given", j.m, j.matrices.len())));
        }
        let q = field.order_u64().expect("finite field") as u128;
        let n = 2 * j.k;
        let to_scalar = |x: u64| -> Result<Scalar, ScrollError> {
            if x as u128 >= q {
                return Err(ScrollError::Format(format!("entry {x} is not below the field order {q}")));
            }
            Ok(field.element(x as u128))
        };
        let mut mats = Vec::with_capacity(j.m);
        for (index, raw) in j.matrices.iter().enumerate() {
            let vals: Vec<Scalar> = raw.iter().map(|&x| to_scalar(x)).collect::<Result<_, _>>()?;
            if vals.len() == n * n {
                // full row-major matrix: skewness is checked by SkewSystem::new
                mats.push(Matrix::from_fn(&field, n, n, |r, c| vals[r * n + c].clone()));
            } else if vals.len() == n * (n - 1) / 2 {
                let sys = SkewSystem::from_lower_triangles(&field, j.k, &[vals])?;
                mats.push(sys.mats.into_iter().next().unwrap());
            } else {
                return Err(ScrollError::Format(format!("matrix {index} has {} entries", vals.len())));
            }
        }
        let system = SkewSystem::new(&field, j.k, mats)?;
        PalatiniInstance::new(system, Provenance { seed: j.seed, construction: "file".into() })
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn hash(&self) -> Result<String, ScrollError> {
        Ok(format!("{:x}", Sha256::digest(self.to_json_string()?.as_bytes())))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldJson {
    pub p: u64,
    pub e: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<Vec<u64>>,
}

/// On-disk instance. Each matrix is its strict lower triangle, row by row;
/// extension elements are encoded as Σ cᵢ pⁱ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceJson {
    pub m: usize,
    pub k: usize,
    pub field: FieldJson,
    pub matrices: Vec<Vec<u64>>,
    pub seed: Option<u64>,
}

fn check_field_size(field: &Field) -> Result<(), ScrollError> {
    if field.order_u64().is_some_and(|q| q < 5) {
        return Err(ScrollError::FieldTooSmall(field.name()));
    }
    Ok(())
}

fn random_system(m: usize, k: usize, field: &Field, rng: &mut ChaCha8Rng) -> Result<SkewSystem, ScrollError> {
    let n = 2 * k;
    let tri: Vec<Vec<Scalar>> = (0..m).map(|_| (0..n * (n - 1) / 2).map(|_| field.random(rng)).collect()).collect();
    SkewSystem::from_lower_triangles(field, k, &tri)
}

/// Instance with independent uniform coefficients a_{i,j}^ℓ (i > j), drawn in
/// the serialization order.
pub fn instance_random(m: usize, k: usize, field: &Field, seed: u64) -> Result<PalatiniInstance, ScrollError> {
    if m == 0 || 2 * k < m + 1 {
        return Err(ScrollError::RangeError { m, k });
    }
    check_field_size(field)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let system = random_system(m, k, field, &mut rng)?;
    PalatiniInstance::new(system, Provenance { seed: Some(seed), construction: "random".into() })
}

/// Deliberately degenerate systems used as negative controls.
pub mod planted {
    use super::*;

    fn finish(system: SkewSystem, seed: Option<u64>, what: &str) -> Result<PalatiniInstance, ScrollError> {
        PalatiniInstance::new(system, Provenance { seed, construction: what.into() })
    }

    /// All A^ℓ supported on the first 2k−1 coordinates, so e_{2k} is a common
    /// kernel vector: f_φ is not injective and pf ≡ 0.
    pub fn common_kernel(m: usize, k: usize, field: &Field, seed: u64) -> Result<PalatiniInstance, ScrollError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = random_system(m, k, field, &mut rng)?;
        let n = 2 * k;
        let mats = base
            .mats
            .iter()
            .map(|a| {
                Matrix::from_fn(
                    field,
                    n,
                    n,
                    |i, j| if i == n - 1 || j == n - 1 { field.zero() } else { a.get(i, j).clone() },
                )
            })
            .collect();
        finish(SkewSystem::new(field, k, mats)?, Some(seed), "planted-common-kernel")
    }

    /// A² = 2·A¹, so φ is not injective.
    pub fn proportional(m: usize, k: usize, field: &Field, seed: u64) -> Result<PalatiniInstance, ScrollError> {
        if m < 2 {
            return Err(ScrollError::RangeError { m, k });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mats = random_system(m, k, field, &mut rng)?.mats;
        mats[1] = mats[0].scale(&field.from_i64(2));
        finish(SkewSystem::new(field, k, mats)?, Some(seed), "planted-proportional")
    }

    /// Every A^ℓ vanishes on the span of the first k+1 basis vectors. That
    /// span is isotropic for every M(u), so pf ≡ 0 while f_φ stays injective.
    pub fn isotropic(m: usize, k: usize, field: &Field, seed: u64) -> Result<PalatiniInstance, ScrollError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = random_system(m, k, field, &mut rng)?;
        let n = 2 * k;
        let mats = base
            .mats
            .iter()
            .map(|a| {
                Matrix::from_fn(field, n, n, |i, j| if i <= k && j <= k { field.zero() } else { a.get(i, j).clone() })
            })
            .collect();
        finish(SkewSystem::new(field, k, mats)?, Some(seed), "planted-isotropic")
    }

    /// m = k, A^ℓ = e_{2ℓ}∧e_{2ℓ+1}, so M(u) is block diagonal with blocks
    /// [[0, u_ℓ], [−u_ℓ, 0]] and pf = u₁⋯u_k.
    pub fn block_diagonal(k: usize, field: &Field) -> Result<PalatiniInstance, ScrollError> {
        let n = 2 * k;
        let mats = (0..k)
            .map(|l| {
                let mut a = Matrix::zeros(field, n, n);
                a.set(2 * l, 2 * l + 1, field.one());
                a.set(2 * l + 1, 2 * l, field.from_i64(-1));
                a
            })
            .collect();
        finish(SkewSystem::new(field, k, mats)?, None, "planted-block-diagonal")
    }
}

/// Result of a rank test on a point of P(V).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Membership {
    pub member: bool,
    pub rank: usize,
    pub corank: usize,
}

/// v lies on X iff N(v) has rank below m.
pub fn membership_x(inst: &PalatiniInstance, v: &[Scalar]) -> Result<Membership, ScrollError> {
    let f = inst.field();
    if v.len() != inst.system.n() {
        return Err(ScrollError::DimensionMismatch { expected: inst.system.n(), got: v.len() });
    }
    if v.iter().all(|a| f.is_zero(a)) {
        return Err(ScrollError::ZeroVector);
    }
    let rank = inst.system.n_matrix(v)?.rank();
    let m = inst.m();
    Ok(Membership { member: rank < m, rank, corank: m - rank })
}

/// Uniform nonzero vector of length `n`.
pub(crate) fn random_point<R: Rng + ?Sized>(field: &Field, n: usize, rng: &mut R) -> Vec<Scalar> {
    loop {
        let v: Vec<Scalar> = (0..n).map(|_| field.random(rng)).collect();
        if v.iter().any(|a| !field.is_zero(a)) {
            return v;
        }
    }
}

/// Uniform nonzero combination of the columns of `basis`.
pub(crate) fn random_combination<R: Rng + ?Sized>(field: &Field, basis: &Matrix, rng: &mut R) -> Option<Vec<Scalar>> {
    if basis.cols() == 0 {
        return None;
    }
    let c = random_point(field, basis.cols(), rng);
    Some(basis.mul_vec(&c).expect("shape"))
}

/// Which determinantal stratum to probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stratum {
    /// corank of N(v) at points v of P(V) (strata D_{m−r}(φ))
    Phi,
    /// corank of M(u) at points u of P(U) (strata D_{2k−r}(M_φ))
    Pencil,
}

/// How probe points are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleSource {
    /// Uniform points of the ambient space. For φ the common-kernel basis
    /// vectors are added as extra samples.
    Ambient,
    /// Points of X (for φ) or of Y (for M_φ), drawn through the incidence.
    OnVariety,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StratumProbe {
    pub trials: usize,
    pub hits: usize,
}

/// Distinct Y points requested when a probe draws from the variety.
const Y_POOL: usize = 200;

/// Points u of P(U) with M(u) singular: sampled Y points when pf ≠ 0 (cycled
/// if there are fewer than `count`), otherwise arbitrary points.
fn singular_pencil_points(inst: &PalatiniInstance, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<Scalar>> {
    let f = inst.field();
    let pool = if inst.pf_is_zero() {
        Vec::new()
    } else {
        incidence::sample_y(inst, 1, count.min(Y_POOL), rng.random()).map(|s| s.points).unwrap_or_default()
    };
    (0..count)
        .map(|i| if pool.is_empty() { random_point(f, inst.m(), rng) } else { pool[i % pool.len()].clone() })
        .collect()
}

/// Counts sampled points whose corank is at least `min_corank`.
pub fn rank_stratum_probe(
    inst: &PalatiniInstance,
    stratum: Stratum,
    min_corank: usize,
    source: SampleSource,
    trials: usize,
    seed: u64,
) -> StratumProbe {
    let f = inst.field();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, m) = (inst.system.n(), inst.m());
    let phi_corank = |v: &[Scalar]| m - inst.system.n_matrix(v).expect("length").rank();
    let pencil_corank = |u: &[Scalar]| n - inst.m_at(u).expect("length").rank();
    let coranks: Vec<usize> = match (stratum, source) {
        (Stratum::Phi, SampleSource::Ambient) => {
            let ck = inst.system.common_kernel();
            let mut pts: Vec<Vec<Scalar>> = (0..ck.cols()).map(|c| ck.column(c)).collect();
            pts.extend((0..trials).map(|_| random_point(f, n, &mut rng)));
            pts.iter().map(|v| phi_corank(v)).collect()
        }
        (Stratum::Phi, SampleSource::OnVariety) => singular_pencil_points(inst, trials, &mut rng)
            .iter()
            .filter_map(|u| {
                let ker = inst.m_at(u).expect("length").kernel_basis();
                random_combination(f, &ker, &mut rng).map(|v| phi_corank(&v))
            })
            .collect(),
        (Stratum::Pencil, SampleSource::Ambient) => {
            (0..trials).map(|_| pencil_corank(&random_point(f, m, &mut rng))).collect()
        }
        (Stratum::Pencil, SampleSource::OnVariety) => {
            singular_pencil_points(inst, trials, &mut rng).iter().map(|u| pencil_corank(u)).collect()
        }
    };
    StratumProbe { trials: coranks.len(), hits: coranks.iter().filter(|&&c| c >= min_corank).count() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SmoothProbe {
    pub sampled: usize,
    pub singular_hits: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CodimProbe {
    /// Dimension of the linear slice L, complementary to X.
    pub slice_dim: usize,
    /// #(X ∩ L)(F_q), when the enumeration fits the line budget.
    pub point_count: Option<u64>,
    pub expected_degree: String,
}

/// Jacobian rank of the maximal minors at sampled points of X; a point is
/// deficient when the rank is below the codimension 2k − m.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct JacobianProbe {
    pub sampled: usize,
    pub deficient: usize,
}

/// Genericity evidence. The first four fields are exact; the probes are
/// sampling evidence only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GenericityReport {
    pub pf_nonzero: bool,
    pub f_phi_injective: bool,
    pub phi_injective: bool,
    /// m ≤ k+1
    pub range_ok: bool,
    /// corank ≥ 2 of φ, ambient and on X
    pub d_m2_probe: StratumProbe,
    /// pf and its gradient vanishing together at sampled Y points
    pub y_smooth_probe: SmoothProbe,
    /// corank ≥ 4 of M_φ at sampled Y points
    pub corank4_probe: StratumProbe,
    pub jacobian_probe: JacobianProbe,
    pub codim_probe: CodimProbe,
}

impl GenericityReport {
    pub fn verified(&self) -> bool {
        self.pf_nonzero && self.f_phi_injective && self.phi_injective && self.range_ok
    }

    pub fn probes_clean(&self) -> bool {
        let count_ok = match self.codim_probe.point_count {
            Some(c) => self.codim_probe.expected_degree.parse::<u64>().is_ok_and(|d| c <= d),
            None => true,
        };
        self.d_m2_probe.hits == 0
            && self.y_smooth_probe.singular_hits == 0
            && self.corank4_probe.hits == 0
            && self.jacobian_probe.deficient == 0
            && count_ok
    }

    pub fn passed(&self) -> bool {
        self.verified() && self.probes_clean()
    }
}

/// Outcome of evaluating Pf(M(u))² = det M(u) at seeded random points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IdentityCheck {
    pub checked: usize,
    pub failures: usize,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

pub fn pf_det_check(inst: &PalatiniInstance, points: usize, seed: u64) -> IdentityCheck {
    let f = inst.field();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let failures = (0..points)
        .filter(|_| {
            let u: Vec<Scalar> = (0..inst.m()).map(|_| f.random(&mut rng)).collect();
            let pf = inst.pf.eval(&u).expect("length");
            let det = inst.m_at(&u).expect("length").det().expect("square");
            f.mul(&pf, &pf) != det
        })
        .count();
    IdentityCheck { checked: points, failures }
}

/// Sampled X points used for the Jacobian probe.
const JACOBIAN_SAMPLES: usize = 10;

pub fn genericity_check(inst: &PalatiniInstance, trials: usize, seed: u64) -> GenericityReport {
    let (m, k) = (inst.m(), inst.k());
    let sys = &inst.system;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pf_nonzero = !inst.pf_is_zero();
    let amb = rank_stratum_probe(inst, Stratum::Phi, 2, SampleSource::Ambient, trials, rng.random());
    let on_x = rank_stratum_probe(inst, Stratum::Phi, 2, SampleSource::OnVariety, trials, rng.random());
    let d_m2_probe = StratumProbe { trials: amb.trials + on_x.trials, hits: amb.hits + on_x.hits };

    let mut y_smooth_probe = SmoothProbe { sampled: 0, singular_hits: 0 };
    let mut corank4_probe = StratumProbe { trials: 0, hits: 0 };
    let mut jacobian_probe = JacobianProbe { sampled: 0, deficient: 0 };
    let mut point_count = None;
    let ys = if pf_nonzero { incidence::sample_y(inst, 1, trials.clamp(1, Y_POOL), rng.random()).ok() } else { None };
    if let Some(ys) = ys {
        let grads: Vec<MultiPoly> = (0..m).map(|i| inst.pf.derivative(i)).collect();
        let f = inst.field();
        for u in &ys.points {
            y_smooth_probe.sampled += 1;
            if grads.iter().all(|g| f.is_zero(&g.eval(u).expect("length"))) {
                y_smooth_probe.singular_hits += 1;
            }
            corank4_probe.trials += 1;
            if sys.n() - inst.m_at(u).expect("length").rank() >= 4 {
                corank4_probe.hits += 1;
            }
        }
        if let Ok(minors) = inst.rows.minors_max() {
            let jac: Vec<Vec<MultiPoly>> =
                minors.iter().map(|g| (0..sys.n()).map(|c| g.derivative(c)).collect()).collect();
            for u in ys.points.iter().take(JACOBIAN_SAMPLES) {
                let ker = inst.m_at(u).expect("length").kernel_basis();
                let Some(v) = random_combination(f, &ker, &mut rng) else { continue };
                let rows: Vec<Vec<Scalar>> =
                    jac.iter().map(|row| row.iter().map(|d| d.eval(&v).expect("length")).collect()).collect();
                jacobian_probe.sampled += 1;
                if Matrix::from_rows(f, rows).expect("shape").rank() < sys.n() - m {
                    jacobian_probe.deficient += 1;
                }
            }
        }
        point_count = incidence::random_slice_count(inst, rng.random()).ok();
    }
    let codim_probe = CodimProbe {
        slice_dim: 2 * k - m,
        point_count,
        expected_degree: palatini_degree(m, k).map(|d| d.to_string()).unwrap_or_default(),
    };
    GenericityReport {
        pf_nonzero,
        f_phi_injective: sys.f_phi_injective(),
        phi_injective: sys.phi_injective(),
        range_ok: m <= k + 1,
        d_m2_probe,
        y_smooth_probe,
        corank4_probe,
        jacobian_probe,
        codim_probe,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_triangle_roundtrip() {
        let f = Field::prime(1009).unwrap();
        let inst = instance_random(3, 3, &f, 1).unwrap();
        for l in 0..3 {
            let tri = inst.system().lower_triangle(l);
            let again = SkewSystem::from_lower_triangles(&f, 3, &[tri]).unwrap();
            assert_eq!(&again.matrices()[0], &inst.system().matrices()[l]);
        }
        assert_eq!(inst.pf().degree(), Some(3));
        assert_eq!(inst.pf().nvars(), 3);
    }

    #[test]
    fn skewness_enforced() {
        let f = Field::prime(7).unwrap();
        let a = Matrix::from_i64(&f, 2, 2, &[0, 1, 1, 0]);
        assert_eq!(SkewSystem::new(&f, 1, vec![a]), Err(ScrollError::NotSkewSymmetric { index: 0 }));
        assert_eq!(instance_random(4, 2, &f, 0).unwrap_err(), ScrollError::RangeError { m: 4, k: 2 });
        let tiny = Field::prime(3).unwrap();
        assert!(matches!(instance_random(2, 2, &tiny, 0), Err(ScrollError::FieldTooSmall(_))));
    }
}

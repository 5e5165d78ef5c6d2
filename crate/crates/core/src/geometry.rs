//! Points and subspaces of PG(K, q).
//!
//! A point is stored by its canonical representative (first nonzero
//! coordinate equal to 1) and identified by its rank in lexicographic order
//! of those representatives. Subspaces are keyed by their RREF basis.
//! Incidence for a fixed subspace dimension is built once per space and
//! cached in a [`SubspaceFamily`].

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::field::{for_each_rref_basis, Matrix, PrimeField};

/// Default cap on the number of subspaces a family may hold.
pub const DEFAULT_SUBSPACE_CAP: u128 = 10_000_000;

const NO_POINT: u32 = u32::MAX;
const MAX_VECTOR_CODES: u64 = 1 << 26;

/// v_r = (q^r - 1)/(q - 1), the number of points of PG(r-1, q).
pub fn gaussian_v(r: u32, q: u64) -> u64 {
    let mut acc = 0u64;
    for _ in 0..r {
        acc = acc.checked_mul(q).and_then(|a| a.checked_add(1)).expect("gaussian_v overflow");
    }
    acc
}

/// Gaussian binomial [n choose k]_q: the number of k-dimensional subspaces
/// of F_q^n.
pub fn gaussian_binomial(n: u32, k: u32, q: u64) -> u128 {
    if k > n {
        return 0;
    }
    let q = q as u128;
    let mut num = 1u128;
    let mut den = 1u128;
    for i in 0..k {
        num *= q.pow(n - i) - 1;
        den *= q.pow(i + 1) - 1;
    }
    num / den
}

/// The projective space PG(K, q) with its points enumerated.
pub struct ProjectiveSpace {
    field: PrimeField,
    dim: usize,
    points: Vec<u8>,
    index_of: Vec<u32>,
    subspace_cap: u128,
    families: Mutex<Vec<Option<Arc<SubspaceFamily>>>>,
}

impl std::fmt::Debug for ProjectiveSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PG({},{})", self.dim, self.field.order())
    }
}

impl PartialEq for ProjectiveSpace {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field && self.dim == other.dim
    }
}
impl Eq for ProjectiveSpace {}

impl ProjectiveSpace {
    pub fn new(q: u32, dim: usize) -> Result<Self> {
        Self::with_cap(q, dim, DEFAULT_SUBSPACE_CAP)
    }

    pub fn with_cap(q: u32, dim: usize, subspace_cap: u128) -> Result<Self> {
        let field = PrimeField::new(q)?;
        if dim == 0 {
            return Err(Error::InvalidDimension("projective dimension must be at least 1".into()));
        }
        let k = dim + 1;
        let codes = (q as u64).checked_pow(k as u32).filter(|&c| c <= MAX_VECTOR_CODES).ok_or_else(
            || Error::InvalidDimension(format!("PG({dim},{q}) is too large to index")),
        )?;
        let mut index_of = vec![NO_POINT; codes as usize];
        let mut points = Vec::new();
        let mut count = 0u32;
        // Lexicographic order of canonical vectors is numeric order of their
        // base-q codes, so a single ascending scan enumerates them in order.
        let mut v = vec![0u8; k];
        for code in 1..codes {
            decode(code, q, &mut v);
            let lead = v.iter().position(|&x| x != 0).unwrap();
            if v[lead] == 1 {
                points.extend_from_slice(&v);
                index_of[code as usize] = count;
                count += 1;
            }
        }
        // Every nonzero vector maps to the index of the point it spans.
        for code in 1..codes {
            if index_of[code as usize] == NO_POINT {
                decode(code, q, &mut v);
                let canon = field.normalize_projective(&v)?;
                index_of[code as usize] = index_of[encode(&canon, q) as usize];
            }
        }
        let families = Mutex::new(vec![None; k]);
        Ok(Self { field, dim, points, index_of, subspace_cap, families })
    }

    /// A process-wide shared instance with the default cap.
    pub fn shared(q: u32, dim: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<(u32, usize), Arc<ProjectiveSpace>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap();
        if let Some(s) = guard.get(&(q, dim)) {
            return Ok(Arc::clone(s));
        }
        let s = Arc::new(Self::new(q, dim)?);
        guard.insert((q, dim), Arc::clone(&s));
        Ok(s)
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
    }
    #[inline]
    pub fn q(&self) -> u32 {
        self.field.order()
    }
    /// Projective dimension K.
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }
    /// Vector dimension K + 1.
    #[inline]
    pub fn vector_dim(&self) -> usize {
        self.dim + 1
    }
    #[inline]
    pub fn num_points(&self) -> usize {
        self.points.len() / self.vector_dim()
    }
    pub fn subspace_cap(&self) -> u128 {
        self.subspace_cap
    }

    /// Canonical coordinates of point `p`.
    #[inline]
    pub fn coords(&self, p: usize) -> &[u8] {
        let k = self.vector_dim();
        &self.points[p * k..(p + 1) * k]
    }

    /// Index of the point spanned by a nonzero vector.
    pub fn point_index(&self, v: &[u8]) -> Result<usize> {
        if v.len() != self.vector_dim() {
            return Err(Error::DimensionMismatch { expected: self.vector_dim(), got: v.len() });
        }
        if v.iter().any(|&x| x as u32 >= self.q()) {
            return Err(Error::InvalidDimension("coordinate not reduced".into()));
        }
        match self.index_of[encode(v, self.q()) as usize] {
            NO_POINT => Err(Error::ZeroVector),
            i => Ok(i as usize),
        }
    }

    #[inline]
    pub(crate) fn point_index_unchecked(&self, v: &[u8]) -> usize {
        self.index_of[encode(v, self.q()) as usize] as usize
    }

    /// Index of the `i`-th unit vector e_i.
    pub fn unit_point(&self, i: usize) -> usize {
        let mut v = vec![0u8; self.vector_dim()];
        v[i] = 1;
        self.point_index_unchecked(&v)
    }

    /// The K+1 unit points followed by the all-ones point: a projective frame.
    pub fn frame(&self) -> Vec<usize> {
        let mut f: Vec<usize> = (0..self.vector_dim()).map(|i| self.unit_point(i)).collect();
        f.push(self.point_index_unchecked(&vec![1u8; self.vector_dim()]));
        f
    }

    /// Number of projective r-subspaces.
    pub fn subspace_count(&self, r: usize) -> u128 {
        gaussian_binomial(self.vector_dim() as u32, r as u32 + 1, self.q() as u64)
    }

    /// The cached family of all r-dimensional subspaces, built on first use.
    pub fn family(&self, r: usize) -> Result<Arc<SubspaceFamily>> {
        if r > self.dim {
            return Err(Error::InvalidDimension(format!("subspace dimension {r} exceeds {}", self.dim)));
        }
        let count = self.subspace_count(r);
        if count > self.subspace_cap {
            return Err(Error::TooManySubspaces { dim: r, count, cap: self.subspace_cap });
        }
        if let Some(f) = &self.families.lock().unwrap()[r] {
            return Ok(Arc::clone(f));
        }
        let fam = Arc::new(SubspaceFamily::build(self, r));
        let mut guard = self.families.lock().unwrap();
        let slot = &mut guard[r];
        if slot.is_none() {
            *slot = Some(Arc::clone(&fam));
        }
        Ok(Arc::clone(slot.as_ref().unwrap()))
    }

    /// All r-subspaces, in canonical enumeration order.
    pub fn enumerate_subspaces(&self, r: usize) -> Result<Vec<Subspace>> {
        let fam = self.family(r)?;
        Ok((0..fam.len()).map(|i| fam.subspace(i)).collect())
    }

    /// Subspace spanned by the given vectors (need not be independent).
    pub fn span(&self, vectors: &[&[u8]]) -> Result<Subspace> {
        let k = self.vector_dim();
        let mut m = Matrix::zeros(self.field, 0, k);
        for v in vectors {
            m.push_row(v)?;
        }
        let basis = m.row_basis();
        if basis.rows() == 0 {
            return Err(Error::ZeroVector);
        }
        let dim = basis.rows() - 1;
        Ok(Subspace { dim, basis, index: None })
    }

    /// Subspace spanned by a set of points.
    pub fn span_points(&self, pts: &[usize]) -> Result<Subspace> {
        let vs: Vec<&[u8]> = pts.iter().map(|&p| self.coords(p)).collect();
        self.span(&vs)
    }

    /// Point indices lying in `s`, computed directly from its basis.
    pub fn points_of(&self, s: &Subspace) -> Vec<usize> {
        let mut out = Vec::with_capacity(gaussian_v(s.dim as u32 + 1, self.q() as u64) as usize);
        combine_rows(self, &s.basis, |v| out.push(self.point_index_unchecked(v)));
        out.sort_unstable();
        out
    }

    /// Whether point `p` lies in `s` (span test on coordinates).
    pub fn incident(&self, p: usize, s: &Subspace) -> bool {
        s.basis.in_span(self.coords(p)).unwrap_or(false)
    }

    /// Points of the hyperplane with normal vector `normal`: {x : normal·x = 0}.
    pub fn hyperplane_points(&self, normal: &[u8]) -> Vec<usize> {
        (0..self.num_points()).filter(|&p| self.field.dot(normal, self.coords(p)) == 0).collect()
    }

    /// Normal vector (canonical) of a hyperplane given by its basis.
    pub fn hyperplane_normal(&self, h: &Subspace) -> Result<Vec<u8>> {
        if h.dim + 1 != self.dim {
            return Err(Error::InvalidDimension(format!("subspace of dimension {} is not a hyperplane", h.dim)));
        }
        // The normal spans the kernel of the basis matrix.
        let f = self.field;
        let b = &h.basis;
        let piv = b.pivots();
        let free = (0..self.vector_dim()).find(|c| !piv.contains(c)).unwrap();
        let mut n = vec![0u8; self.vector_dim()];
        n[free] = 1;
        for (r, &pc) in piv.iter().enumerate() {
            n[pc] = f.neg(b.get(r, free));
        }
        f.normalize_projective(&n)
    }
}

fn encode(v: &[u8], q: u32) -> u64 {
    v.iter().fold(0u64, |acc, &x| acc * q as u64 + x as u64)
}

fn decode(mut code: u64, q: u32, out: &mut [u8]) {
    for slot in out.iter_mut().rev() {
        *slot = (code % q as u64) as u8;
        code /= q as u64;
    }
}

/// Call `visit` with every vector sum_i c_i * row_i whose first nonzero
/// coefficient is 1: one representative per point of the row space.
fn combine_rows<F: FnMut(&[u8])>(space: &ProjectiveSpace, basis: &Matrix, mut visit: F) {
    let f = space.field();
    let q = f.order() as u8;
    let m = basis.rows();
    let k = basis.cols();
    let mut coef = vec![0u8; m];
    let mut v = vec![0u8; k];
    for lead in 0..m {
        coef.iter_mut().for_each(|c| *c = 0);
        coef[lead] = 1;
        loop {
            v.iter_mut().for_each(|x| *x = 0);
            for (i, &c) in coef.iter().enumerate().skip(lead) {
                f.axpy(&mut v, c, basis.row(i));
            }
            visit(&v);
            let mut advanced = false;
            for i in (lead + 1..m).rev() {
                if coef[i] + 1 < q {
                    coef[i] += 1;
                    advanced = true;
                    break;
                }
                coef[i] = 0;
            }
            if !advanced {
                break;
            }
        }
    }
}

/// A projective subspace given by its canonical (RREF) basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Subspace {
    dim: usize,
    basis: Matrix,
    index: Option<usize>,
}

impl Subspace {
    /// Projective dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }
    /// Position in the family enumeration, when known.
    pub fn index(&self) -> Option<usize> {
        self.index
    }
}

/// All r-subspaces of a space with precomputed incidence.
pub struct SubspaceFamily {
    dim: usize,
    vector_dim: usize,
    field: PrimeField,
    bases: Vec<u8>,
    members: Vec<u32>,
    block: usize,
    through: Vec<u32>,
    per_point: usize,
    words: usize,
    bits: Vec<u64>,
    keys: HashMap<Vec<u8>, u32>,
}

impl SubspaceFamily {
    fn build(space: &ProjectiveSpace, r: usize) -> Self {
        let k = space.vector_dim();
        let m = r + 1;
        let q = space.q();
        let block = gaussian_v(m as u32, q as u64) as usize;
        let count = space.subspace_count(r) as usize;
        let npts = space.num_points();
        let words = npts.div_ceil(64);
        let mut bases = Vec::with_capacity(count * m * k);
        let mut members = Vec::with_capacity(count * block);
        let mut bits = vec![0u64; count * words];
        let mut keys = HashMap::with_capacity(count);
        let mut idx = 0usize;
        for_each_rref_basis(q, m, k, |data| {
            bases.extend_from_slice(data);
            let basis = Matrix::from_data(space.field(), m, k, data.to_vec()).unwrap();
            let start = members.len();
            combine_rows(space, &basis, |v| members.push(space.point_index_unchecked(v) as u32));
            members[start..].sort_unstable();
            for &p in &members[start..] {
                bits[idx * words + p as usize / 64] |= 1u64 << (p % 64);
            }
            keys.insert(data.to_vec(), idx as u32);
            idx += 1;
        });
        debug_assert_eq!(idx, count);
        let per_point = if npts == 0 { 0 } else { count * block / npts };
        let mut fill = vec![0usize; npts];
        let mut through = vec![0u32; npts * per_point];
        for s in 0..count {
            for &p in &members[s * block..(s + 1) * block] {
                let p = p as usize;
                through[p * per_point + fill[p]] = s as u32;
                fill[p] += 1;
            }
        }
        Self {
            dim: r,
            vector_dim: k,
            field: space.field(),
            bases,
            members,
            block,
            through,
            per_point,
            words,
            bits,
            keys,
        }
    }

    /// Projective dimension of the members.
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn len(&self) -> usize {
        self.keys.len()
    }
    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
    /// Number of points on each member.
    pub fn points_per_subspace(&self) -> usize {
        self.block
    }
    /// Number of members through each point.
    pub fn subspaces_per_point(&self) -> usize {
        self.per_point
    }

    #[inline]
    pub fn points(&self, s: usize) -> &[u32] {
        &self.members[s * self.block..(s + 1) * self.block]
    }

    #[inline]
    pub fn through(&self, p: usize) -> &[u32] {
        &self.through[p * self.per_point..(p + 1) * self.per_point]
    }

    #[inline]
    pub fn contains(&self, s: usize, p: usize) -> bool {
        self.bits[s * self.words + p / 64] >> (p % 64) & 1 == 1
    }

    pub fn subspace(&self, s: usize) -> Subspace {
        let m = self.dim + 1;
        let k = self.vector_dim;
        let data = self.bases[s * m * k..(s + 1) * m * k].to_vec();
        Subspace {
            dim: self.dim,
            basis: Matrix::from_data(self.field, m, k, data).unwrap(),
            index: Some(s),
        }
    }

    /// Index of the member with the given basis (any basis of it).
    pub fn index_of(&self, s: &Subspace) -> Option<usize> {
        let b = s.basis.row_basis();
        self.keys.get(b.data()).map(|&i| i as usize)
    }
}

/// The projection from a center `delta` onto a complementary subspace `pi`.
///
/// Every point P outside `delta` maps to the single point of `pi` on the
/// span of `delta` and P.
pub struct Projection {
    delta: Subspace,
    pi: Subspace,
    inverse: Matrix,
}

impl Projection {
    pub fn new(space: &ProjectiveSpace, delta: &Subspace, pi: &Subspace) -> Result<Self> {
        if delta.dim + pi.dim + 1 != space.dim {
            return Err(Error::InvalidProjection(format!(
                "dimensions {} and {} are not complementary in PG({},{})",
                delta.dim,
                pi.dim,
                space.dim,
                space.q()
            )));
        }
        let mut joint = delta.basis.clone();
        for r in 0..pi.basis.rows() {
            joint.push_row(pi.basis.row(r))?;
        }
        let inverse = joint
            .inverse()
            .ok_or_else(|| Error::InvalidProjection("center and screen intersect".into()))?;
        Ok(Self { delta: delta.clone(), pi: pi.clone(), inverse })
    }

    pub fn center(&self) -> &Subspace {
        &self.delta
    }
    pub fn screen(&self) -> &Subspace {
        &self.pi
    }

    /// Coordinates of the image of `v` with respect to the screen basis.
    pub fn screen_coords(&self, v: &[u8]) -> Result<Vec<u8>> {
        let c = self.inverse.left_mul(v);
        let tail = c[self.delta.basis.rows()..].to_vec();
        if tail.iter().all(|&x| x == 0) {
            return Err(Error::ProjectionOnCenter);
        }
        Ok(tail)
    }

    /// Image of point `p` as a point of the ambient space.
    pub fn project_point(&self, space: &ProjectiveSpace, p: usize) -> Result<usize> {
        let b = self.screen_coords(space.coords(p))?;
        let v = self.pi.basis.left_mul(&b);
        Ok(space.point_index_unchecked(&v))
    }

    /// Image of point `p` as a point of the screen viewed as PG(dim pi, q).
    pub fn project_to_screen(&self, space: &ProjectiveSpace, screen: &ProjectiveSpace, p: usize) -> Result<usize> {
        let b = self.screen_coords(space.coords(p))?;
        Ok(screen.point_index_unchecked(&b))
    }
}

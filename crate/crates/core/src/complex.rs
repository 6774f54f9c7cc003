//! Simplices, faces and complexes over the implicit full (d-1)-skeleton.
//!
//! A [`Complex`] stores only its top-dimensional simplices. Every
//! (d-1)-face of the vertex set is implicitly present; faces that lie in no
//! stored simplex simply have degree zero.

use std::fmt;

use smallvec::SmallVec;
use thiserror::Error;

pub type Vertex = u32;

pub(crate) type VertexBuf = SmallVec<[Vertex; 4]>;

/// A top-dimensional simplex: `d + 1` vertices, strictly increasing once validated.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Simplex(VertexBuf);

/// A (d-1)-face: `d` vertices, strictly increasing.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Face(VertexBuf);

fn fmt_vertices(vs: &[Vertex], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "[")?;
    for (i, v) in vs.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{v}")?;
    }
    write!(f, "]")
}

fn is_strictly_increasing(vs: &[Vertex]) -> bool {
    vs.windows(2).all(|w| w[0] < w[1])
}

impl Simplex {
    /// Wraps the given vertices as-is. Use [`Simplex::sorted`] to canonicalize.
    pub fn new(vertices: impl IntoIterator<Item = Vertex>) -> Self {
        Simplex(vertices.into_iter().collect())
    }

    pub fn sorted(vertices: impl IntoIterator<Item = Vertex>) -> Self {
        let mut buf: VertexBuf = vertices.into_iter().collect();
        buf.sort_unstable();
        Simplex(buf)
    }

    pub(crate) fn from_buf(buf: VertexBuf) -> Self {
        Simplex(buf)
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_sorted(&self) -> bool {
        is_strictly_increasing(&self.0)
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    /// The face obtained by dropping the `i`-th vertex.
    pub fn face(&self, i: usize) -> Face {
        let mut buf = self.0.clone();
        buf.remove(i);
        Face(buf)
    }

    pub fn faces(&self) -> impl Iterator<Item = Face> + '_ {
        (0..self.0.len()).map(move |i| self.face(i))
    }

    pub fn is_subset_of(&self, other: &[Vertex]) -> bool {
        self.0.iter().all(|v| other.binary_search(v).is_ok())
    }
}

impl Face {
    pub fn new(vertices: impl IntoIterator<Item = Vertex>) -> Self {
        Face(vertices.into_iter().collect())
    }

    pub fn sorted(vertices: impl IntoIterator<Item = Vertex>) -> Self {
        let mut buf: VertexBuf = vertices.into_iter().collect();
        buf.sort_unstable();
        Face(buf)
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    /// Cone over `apex`: the simplex `self ∪ {apex}`. `apex` must not be in the face.
    pub fn cone(&self, apex: Vertex) -> Simplex {
        let pos = self.0.partition_point(|&v| v < apex);
        debug_assert!(self.0.get(pos) != Some(&apex));
        let mut buf = self.0.clone();
        buf.insert(pos, apex);
        Simplex(buf)
    }

    /// Replace vertex `out` with `inp`, keeping the tuple sorted.
    pub fn swap_vertex(&self, out: Vertex, inp: Vertex) -> Face {
        let mut buf: VertexBuf = self.0.iter().copied().filter(|&v| v != out).collect();
        let pos = buf.partition_point(|&v| v < inp);
        buf.insert(pos, inp);
        Face(buf)
    }
}

impl fmt::Display for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_vertices(&self.0, f)
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_vertices(&self.0, f)
    }
}

/// The `d + 1` faces of `sigma`; the `i`-th drops the `i`-th vertex.
pub fn faces_of(sigma: &Simplex) -> Vec<Face> {
    sigma.faces().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("simplex #{index} {simplex} has {found} vertices, expected {expected}")]
    WrongArity {
        index: usize,
        simplex: Simplex,
        found: usize,
        expected: usize,
    },
    #[error("simplex #{index} {simplex} is unsorted")]
    Unsorted { index: usize, simplex: Simplex },
    #[error("simplex #{index} {simplex}: vertex {vertex} out of range (n = {n})")]
    VertexOutOfRange {
        index: usize,
        simplex: Simplex,
        vertex: Vertex,
        n: u32,
    },
    #[error("duplicate simplex {simplex}")]
    Duplicate { simplex: Simplex },
}

impl Violation {
    /// Short machine-friendly tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::ZeroDimension => "zero dimension",
            Violation::WrongArity { .. } => "wrong arity",
            Violation::Unsorted { .. } => "unsorted",
            Violation::VertexOutOfRange { .. } => "vertex out of range",
            Violation::Duplicate { .. } => "duplicate",
        }
    }

    /// Position of the offending simplex in the input, when there is one.
    pub fn index(&self) -> Option<usize> {
        match self {
            Violation::WrongArity { index, .. }
            | Violation::Unsorted { index, .. }
            | Violation::VertexOutOfRange { index, .. } => Some(*index),
            Violation::ZeroDimension | Violation::Duplicate { .. } => None,
        }
    }
}

/// `Δ_{n-1}^{(d-1)} ⊂ Y ⊂ Δ_{n-1}^{(d)}`, represented by its d-simplices.
///
/// Complexes built through [`Complex::new`] keep their simplices sorted
/// lexicographically and deduplicated; that order is used for every
/// deterministic iteration in the crate.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Complex {
    n: u32,
    d: usize,
    simplices: Vec<Simplex>,
}

impl Complex {
    pub fn new(n: u32, d: usize, mut simplices: Vec<Simplex>) -> Result<Self, Violation> {
        let raw = Complex {
            n,
            d,
            simplices: Vec::new(),
        };
        for (index, s) in simplices.iter().enumerate() {
            raw.check_simplex(index, s)?;
        }
        simplices.sort_unstable();
        if let Some(w) = simplices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Violation::Duplicate {
                simplex: w[0].clone(),
            });
        }
        if d == 0 {
            return Err(Violation::ZeroDimension);
        }
        Ok(Complex { n, d, simplices })
    }

    /// Keeps `simplices` in the given order without any checks; see [`Complex::validate`].
    pub fn from_parts_unchecked(n: u32, d: usize, simplices: Vec<Simplex>) -> Self {
        Complex { n, d, simplices }
    }

    pub fn empty(n: u32, d: usize) -> Self {
        Complex {
            n,
            d,
            simplices: Vec::new(),
        }
    }

    /// All `C(n, d+1)` simplices.
    pub fn full(n: u32, d: usize) -> Self {
        let mut simplices = Vec::new();
        for_each_combination(n, d + 1, |c| simplices.push(Simplex::new(c.iter().copied())));
        Complex { n, d, simplices }
    }

    /// `∂Δ_{d+1}` on the given `d + 2` vertices, inside the vertex set `[n]`.
    pub fn sphere_boundary(n: u32, vertices: &[Vertex]) -> Result<Self, Violation> {
        let d = vertices.len().saturating_sub(2);
        let s = Simplex::sorted(vertices.iter().copied());
        let simplices = (0..s.len())
            .map(|i| Simplex(s.face(i).0))
            .collect();
        Complex::new(n, d, simplices)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Simplex> {
        self.simplices.iter()
    }

    pub fn f_d(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    /// Binary search; requires the canonical sorted order.
    pub fn contains(&self, s: &Simplex) -> bool {
        self.simplices.binary_search(s).is_ok()
    }

    pub fn contains_vertices(&self, vs: &[Vertex]) -> bool {
        self.simplices
            .binary_search_by(|s| s.vertices().cmp(vs))
            .is_ok()
    }

    pub fn is_subcomplex_of(&self, other: &Complex) -> bool {
        self.simplices.iter().all(|s| other.contains(s))
    }

    /// Returns a new complex with the simplices for which `keep` is true.
    pub(crate) fn filtered(&self, mut keep: impl FnMut(usize) -> bool) -> Complex {
        let simplices = self
            .simplices
            .iter()
            .enumerate()
            .filter(|(i, _)| keep(*i))
            .map(|(_, s)| s.clone())
            .collect();
        Complex {
            n: self.n,
            d: self.d,
            simplices,
        }
    }

    pub fn with_simplex(&self, s: Simplex) -> Result<Complex, Violation> {
        let mut simplices = self.simplices.clone();
        simplices.push(s);
        Complex::new(self.n, self.d, simplices)
    }

    fn check_simplex(&self, index: usize, s: &Simplex) -> Result<(), Violation> {
        if s.len() != self.d + 1 {
            return Err(Violation::WrongArity {
                index,
                simplex: s.clone(),
                found: s.len(),
                expected: self.d + 1,
            });
        }
        if !s.is_sorted() {
            return Err(Violation::Unsorted {
                index,
                simplex: s.clone(),
            });
        }
        if let Some(&vertex) = s.vertices().iter().find(|&&v| v >= self.n) {
            return Err(Violation::VertexOutOfRange {
                index,
                simplex: s.clone(),
                vertex,
                n: self.n,
            });
        }
        Ok(())
    }

    /// Checks every invariant and reports the first violation in storage order.
    pub fn validate(&self) -> Result<(), Violation> {
        if self.d == 0 {
            return Err(Violation::ZeroDimension);
        }
        for (index, s) in self.simplices.iter().enumerate() {
            self.check_simplex(index, s)?;
        }
        let mut seen: Vec<&Simplex> = self.simplices.iter().collect();
        seen.sort_unstable();
        if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
            return Err(Violation::Duplicate {
                simplex: w[0].clone(),
            });
        }
        Ok(())
    }
}

/// `deg_Y(τ)` for every face of positive degree, sorted by face.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DegreeIndex {
    entries: Vec<(Face, u32)>,
}

impl DegreeIndex {
    /// Degree of `face`; zero when absent.
    pub fn get(&self, face: &Face) -> u32 {
        self.entries
            .binary_search_by(|(f, _)| f.cmp(face))
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Face, u32)> {
        self.entries.iter().map(|(f, c)| (f, *c))
    }

    /// Number of faces with positive degree.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|(_, c)| *c as u64).sum()
    }
}

pub fn build_degree_index(y: &Complex) -> DegreeIndex {
    let inc = Incidence::build(y);
    let entries = inc
        .faces
        .into_iter()
        .zip(inc.degree)
        .collect();
    DegreeIndex { entries }
}

/// Face/simplex incidence of a complex with compact face ids.
///
/// Face ids follow the lexicographic order of the faces. Only faces of
/// positive degree get an id.
#[derive(Clone, Debug)]
pub(crate) struct Incidence {
    pub d: usize,
    pub faces: Vec<Face>,
    /// `simplex_faces[s * (d+1) + i]` is the id of the face dropping vertex `i` of simplex `s`.
    pub simplex_faces: Vec<u32>,
    pub degree: Vec<u32>,
    coface_offsets: Vec<u32>,
    cofaces: Vec<u32>,
}

impl Incidence {
    pub fn build(y: &Complex) -> Self {
        let d = y.d();
        let arity = d + 1;
        let m = y.f_d();
        let bits = 32 - y.n().max(1).leading_zeros() as usize;

        // (face, simplex, position) triples sorted by face
        let mut order: Vec<(u32, u8)> = Vec::with_capacity(m * arity);
        let mut face_ids = vec![0u32; m * arity];
        let mut faces: Vec<Face> = Vec::new();

        let face_at = |s: usize, i: usize| y.simplices[s].face(i);
        if bits * d <= 128 {
            let mut keyed: Vec<(u128, u32, u8)> = Vec::with_capacity(m * arity);
            for (s, simplex) in y.simplices.iter().enumerate() {
                let vs = simplex.vertices();
                for i in 0..arity {
                    let mut key = 0u128;
                    for (j, &v) in vs.iter().enumerate() {
                        if j != i {
                            key = (key << bits) | v as u128;
                        }
                    }
                    keyed.push((key, s as u32, i as u8));
                }
            }
            keyed.sort_unstable();
            let mut last: Option<u128> = None;
            for (key, s, i) in keyed {
                if last != Some(key) {
                    faces.push(face_at(s as usize, i as usize));
                    last = Some(key);
                }
                face_ids[s as usize * arity + i as usize] = (faces.len() - 1) as u32;
                order.push((s, i));
            }
        } else {
            let mut keyed: Vec<(Face, u32, u8)> = Vec::with_capacity(m * arity);
            for s in 0..m {
                for i in 0..arity {
                    keyed.push((face_at(s, i), s as u32, i as u8));
                }
            }
            keyed.sort_unstable();
            for (face, s, i) in keyed {
                if faces.last() != Some(&face) {
                    faces.push(face);
                }
                face_ids[s as usize * arity + i as usize] = (faces.len() - 1) as u32;
                order.push((s, i));
            }
        }

        let nf = faces.len();
        let mut degree = vec![0u32; nf];
        for &f in &face_ids {
            degree[f as usize] += 1;
        }
        let mut coface_offsets = vec![0u32; nf + 1];
        for f in 0..nf {
            coface_offsets[f + 1] = coface_offsets[f] + degree[f];
        }
        // `order` is grouped by face, so cofaces come out contiguous.
        let cofaces = order.iter().map(|&(s, _)| s).collect();

        Incidence {
            d,
            faces,
            simplex_faces: face_ids,
            degree,
            coface_offsets,
            cofaces,
        }
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn faces_of_simplex(&self, s: usize) -> &[u32] {
        let a = self.d + 1;
        &self.simplex_faces[s * a..(s + 1) * a]
    }

    pub fn cofaces(&self, f: usize) -> &[u32] {
        &self.cofaces[self.coface_offsets[f] as usize..self.coface_offsets[f + 1] as usize]
    }

    pub fn face_id(&self, face: &Face) -> Option<usize> {
        self.faces.binary_search(face).ok()
    }
}

/// `C(n, k)`; panics if the result does not fit in a `u64`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    u64::try_from(acc).expect("binomial coefficient overflows u64")
}

/// Calls `f` on every `k`-subset of `[n]` in lexicographic order.
pub fn for_each_combination(n: u32, k: usize, mut f: impl FnMut(&[Vertex])) {
    if k as u64 > n as u64 {
        return;
    }
    let mut c: Vec<Vertex> = (0..k as u32).collect();
    loop {
        f(&c);
        // advance the odometer
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if c[i] < n - (k - i) as u32 {
                c[i] += 1;
                for j in i + 1..k {
                    c[j] = c[j - 1] + 1;
                }
                break;
            }
        }
        if k == 0 {
            return;
        }
    }
}

/// Position of the sorted `k`-subset `vs` of `[n]` in lexicographic order.
pub fn lex_rank(n: u32, vs: &[Vertex]) -> u64 {
    let k = vs.len() as u64;
    let n = n as u64;
    let mut rank = 0;
    let mut lo = 0u64;
    for (i, &v) in vs.iter().enumerate() {
        let rem = k - i as u64;
        // subsets with the same prefix and a smaller element here
        rank += binomial(n - lo, rem) - binomial(n - v as u64, rem);
        lo = v as u64 + 1;
    }
    rank
}

/// Inverse of [`lex_rank`].
pub fn lex_unrank(n: u32, k: usize, mut rank: u64) -> VertexBuf {
    let n = n as u64;
    let mut out = VertexBuf::new();
    let mut lo = 0u64;
    for i in 0..k {
        let rem = (k - i) as u64;
        let total = binomial(n - lo, rem);
        // largest a in [lo, n-rem] with total - C(n-a, rem) <= rank
        let (mut a, mut b) = (lo, n - rem);
        while a < b {
            let mid = a + (b - a).div_ceil(2);
            if total - binomial(n - mid, rem) <= rank {
                a = mid;
            } else {
                b = mid - 1;
            }
        }
        rank -= total - binomial(n - a, rem);
        out.push(a as Vertex);
        lo = a + 1;
    }
    out
}

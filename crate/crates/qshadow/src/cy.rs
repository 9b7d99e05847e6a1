//! The Crane–Yetter state sum of a triangulated closed oriented 4-manifold.
//!
//! Each 4-simplex is evaluated as a closed diagram on three strands: starting
//! from the three faces (012),(023),(034) fused through channel e and total
//! label w, the five tetrahedra are applied as 2→2 channel insertions, with one
//! crossing, and the diagram is closed by a trace. 6j moves between the two
//! fusion bases of three strands are F and F⁻¹ below.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::time::Instant;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use rayon::prelude::*;

use crate::category::{CategoryError, CoordinatedCategory, Label};
use crate::scalar::{Backend, Cyclo, CycloField, Scalar, ScalarError};
use crate::simplicial::{subsets, Complex4, ComplexError, Vertex};
use crate::zlinalg::{nullspace_mod, IntMatrix};

#[derive(Debug, thiserror::Error)]
pub enum CyError {
    #[error("triangulation is not a closed manifold: {0}")]
    NotManifold(String),
    #[error("category failed validation: {0}")]
    InvalidCategory(String),
    #[error("refusing to enumerate about 2^{log2:.1} colorings (limit 2^{limit_log2}); pass --force to override")]
    ResourceLimit { log2: f64, limit_log2: u32 },
    #[error("cocycle strategy needs a pointed category with Z/N labels")]
    NotPointed,
    #[error("categories with more than 15 labels are not supported by the evaluator")]
    TooManyLabels,
    #[error(transparent)]
    Category(#[from] CategoryError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

// ---------------------------------------------------------------- arithmetic

/// The ring a state sum is accumulated in.
pub trait Arith: Sync {
    type V: Clone + Send + Sync;
    fn zero(&self) -> Self::V;
    fn one(&self) -> Self::V;
    fn add(&self, a: &Self::V, b: &Self::V) -> Self::V;
    fn mul(&self, a: &Self::V, b: &Self::V) -> Self::V;
    fn is_zero(&self, a: &Self::V) -> bool;
    fn lift(&self, s: &Scalar) -> Self::V;
}

pub struct FloatArith;

impl Arith for FloatArith {
    type V = Complex64;
    fn zero(&self) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
    fn one(&self) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }
    fn add(&self, a: &Complex64, b: &Complex64) -> Complex64 {
        a + b
    }
    fn mul(&self, a: &Complex64, b: &Complex64) -> Complex64 {
        a * b
    }
    fn is_zero(&self, a: &Complex64) -> bool {
        *a == Complex64::new(0.0, 0.0)
    }
    fn lift(&self, s: &Scalar) -> Complex64 {
        s.to_c64()
    }
}

pub struct CycloArith(pub Arc<CycloField>);

impl Arith for CycloArith {
    type V = Cyclo;
    fn zero(&self) -> Cyclo {
        Cyclo::zero(&self.0)
    }
    fn one(&self) -> Cyclo {
        Cyclo::from_int(&self.0, 1)
    }
    fn add(&self, a: &Cyclo, b: &Cyclo) -> Cyclo {
        a.add(b)
    }
    fn mul(&self, a: &Cyclo, b: &Cyclo) -> Cyclo {
        a.mul(b)
    }
    fn is_zero(&self, a: &Cyclo) -> bool {
        a.is_zero()
    }
    fn lift(&self, s: &Scalar) -> Cyclo {
        match s {
            Scalar::Exact(c) => c.clone(),
            Scalar::Float(_) => panic!("float value on the exact backend"),
        }
    }
}

/// Zero, a root of unity ζ^k, or `Other` (a sum that left the unit group).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mono {
    Zero,
    Unit(u32),
    Other,
}

pub struct MonoArith {
    pub order: u32,
}

impl Arith for MonoArith {
    type V = Mono;
    fn zero(&self) -> Mono {
        Mono::Zero
    }
    fn one(&self) -> Mono {
        Mono::Unit(0)
    }
    fn add(&self, a: &Mono, b: &Mono) -> Mono {
        match (a, b) {
            (Mono::Zero, x) | (x, Mono::Zero) => *x,
            _ => Mono::Other,
        }
    }
    fn mul(&self, a: &Mono, b: &Mono) -> Mono {
        match (a, b) {
            (Mono::Zero, _) | (_, Mono::Zero) => Mono::Zero,
            (Mono::Unit(x), Mono::Unit(y)) => Mono::Unit((x + y) % self.order),
            _ => Mono::Other,
        }
    }
    fn is_zero(&self, a: &Mono) -> bool {
        *a == Mono::Zero
    }
    fn lift(&self, s: &Scalar) -> Mono {
        match s {
            Scalar::Exact(c) if c.is_zero() => Mono::Zero,
            Scalar::Exact(c) => match c.as_root_of_unity() {
                Some(k) => Mono::Unit(k as u32),
                None => Mono::Other,
            },
            Scalar::Float(_) => Mono::Other,
        }
    }
}

/// Category data lifted into an arithmetic.
pub struct Tables<A: Arith> {
    pub ar: A,
    pub n: usize,
    star: Vec<Label>,
    adm: Vec<bool>,
    d: Vec<A::V>,
    d_inv: Vec<A::V>,
    nup: Vec<A::V>,
    nup_inv: Vec<A::V>,
    sixj: Vec<A::V>,
}

impl<A: Arith> Tables<A> {
    pub fn new(ar: A, cat: &CoordinatedCategory) -> Tables<A> {
        let n = cat.rank();
        let inv = |s: &Scalar| s.inv().expect("nonzero category scalar");
        let mut sixj = Vec::with_capacity(n.pow(6));
        for x in 0..n.pow(6) {
            let mut t = [0; 6];
            let mut y = x;
            for s in (0..6).rev() {
                t[s] = y % n;
                y /= n;
            }
            sixj.push(cat.sixj(t).map(|v| ar.lift(v)).unwrap_or_else(|_| ar.zero()));
        }
        let mut adm = vec![false; n * n * n];
        for t in cat.fusion.triples() {
            adm[(t[0] * n + t[1]) * n + t[2]] = true;
        }
        Tables {
            n,
            star: cat.labels().map(|i| cat.star(i)).collect(),
            adm,
            d: cat.dim.iter().map(|x| ar.lift(x)).collect(),
            d_inv: cat.dim.iter().map(|x| ar.lift(&inv(x))).collect(),
            nup: cat.twistp.iter().map(|x| ar.lift(x)).collect(),
            nup_inv: cat.twistp.iter().map(|x| ar.lift(&inv(x))).collect(),
            sixj,
            ar,
        }
    }

    fn adm(&self, a: Label, b: Label, c: Label) -> bool {
        self.adm[(a * self.n + b) * self.n + c]
    }

    fn sj(&self, t: [Label; 6]) -> &A::V {
        &self.sixj[t.iter().fold(0, |acc, &x| acc * self.n + x)]
    }

    /// Tetrahedral channels m of Hom(x_abc ⊗ x_acd → x_bcd ⊗ x_abd).
    pub fn channels(&self, abc: Label, acd: Label, bcd: Label, abd: Label) -> impl Iterator<Item = Label> + '_ {
        let s = &self.star;
        (0..self.n).filter(move |&m| self.adm(abc, acd, s[m]) && self.adm(m, s[bcd], s[abd]))
    }

    /// F: basis (x1 x2)_e x3 → x1 (x2 x3)_f, total w.
    fn fmat(&self, x: [Label; 3], w: Label) -> Vec<A::V> {
        let (n, s) = (self.n, &self.star);
        let mut out = vec![self.ar.zero(); n * n];
        for e in 0..n {
            if !(self.adm(x[0], x[1], s[e]) && self.adm(e, x[2], s[w])) {
                continue;
            }
            for f in 0..n {
                if !(self.adm(x[1], x[2], s[f]) && self.adm(x[0], f, s[w])) {
                    continue;
                }
                let t = self.sj([s[x[0]], e, x[1], x[2], f, w]);
                out[e * n + f] = self.ar.mul(&self.d[f], t);
            }
        }
        out
    }

    /// F⁻¹: x1 (x2 x3)_f → (x1 x2)_e x3, indexed [f][e].
    fn finv(&self, x: [Label; 3], w: Label) -> Vec<A::V> {
        let (n, s) = (self.n, &self.star);
        let mut out = vec![self.ar.zero(); n * n];
        for e in 0..n {
            if !(self.adm(x[0], x[1], s[e]) && self.adm(e, x[2], s[w])) {
                continue;
            }
            for f in 0..n {
                if !(self.adm(x[1], x[2], s[f]) && self.adm(x[0], f, s[w])) {
                    continue;
                }
                let t = self.sj([x[0], s[e], s[x[1]], s[x[2]], s[f], s[w]]);
                out[f * n + e] = self.ar.mul(&self.d[e], t);
            }
        }
        out
    }
}

// ---------------------------------------------------------------- one 4-simplex

#[derive(Clone, Copy, PartialEq)]
enum Basis {
    Left,
    Right,
}

/// A vector in the fusion space of three strands with fixed total label.
struct Strands<'a, A: Arith> {
    t: &'a Tables<A>,
    lab: [Label; 3],
    w: Label,
    basis: Basis,
    v: Vec<A::V>,
}

impl<'a, A: Arith> Strands<'a, A> {
    fn to_right(&mut self) {
        if self.basis == Basis::Right {
            return;
        }
        let n = self.t.n;
        let f = self.t.fmat(self.lab, self.w);
        let mut nv = vec![self.t.ar.zero(); n];
        for e in 0..n {
            if self.t.ar.is_zero(&self.v[e]) {
                continue;
            }
            for (k, out) in nv.iter_mut().enumerate() {
                let x = &f[e * n + k];
                if !self.t.ar.is_zero(x) {
                    *out = self.t.ar.add(out, &self.t.ar.mul(&self.v[e], x));
                }
            }
        }
        self.v = nv;
        self.basis = Basis::Right;
    }

    fn to_left(&mut self) {
        if self.basis == Basis::Left {
            return;
        }
        let n = self.t.n;
        let g = self.t.finv(self.lab, self.w);
        let mut nv = vec![self.t.ar.zero(); n];
        for f in 0..n {
            if self.t.ar.is_zero(&self.v[f]) {
                continue;
            }
            for (k, out) in nv.iter_mut().enumerate() {
                let x = &g[f * n + k];
                if !self.t.ar.is_zero(x) {
                    *out = self.t.ar.add(out, &self.t.ar.mul(&self.v[f], x));
                }
            }
        }
        self.v = nv;
        self.basis = Basis::Left;
    }

    fn clear(&mut self) {
        for x in self.v.iter_mut() {
            *x = self.t.ar.zero();
        }
    }

    /// Replaces strands (pos, pos+1) by `new` through channel m.
    fn insert(&mut self, pos: usize, new: [Label; 2], m: Label) {
        let t = self.t;
        if pos == 0 {
            self.to_left();
        } else {
            self.to_right();
        }
        let val = if t.adm(new[0], new[1], t.star[m]) { t.ar.mul(&self.v[m], &t.d_inv[m]) } else { t.ar.zero() };
        self.clear();
        self.v[m] = val;
        self.lab[pos] = new[0];
        self.lab[pos + 1] = new[1];
        let outer = if pos == 0 { t.adm(m, self.lab[2], t.star[self.w]) } else { t.adm(self.lab[0], m, t.star[self.w]) };
        if !outer {
            self.clear();
        }
    }

    /// Crossing of the first two strands, positive or negative.
    fn braid(&mut self, positive: bool) {
        self.to_left();
        let t = self.t;
        let (a, b) = (self.lab[0], self.lab[1]);
        for e in 0..t.n {
            if t.ar.is_zero(&self.v[e]) {
                continue;
            }
            let ph = if positive {
                t.ar.mul(&t.nup[e], &t.ar.mul(&t.nup_inv[a], &t.nup_inv[b]))
            } else {
                t.ar.mul(&t.nup_inv[e], &t.ar.mul(&t.nup[a], &t.nup[b]))
            };
            self.v[e] = t.ar.mul(&self.v[e], &ph);
        }
        self.lab.swap(0, 1);
    }
}

/// Local triangle index of (i,j,k) ⊂ {0..4}, lexicographic.
const fn tri_index(i: usize, j: usize, k: usize) -> usize {
    let all = [(0, 1, 2), (0, 1, 3), (0, 1, 4), (0, 2, 3), (0, 2, 4), (0, 3, 4), (1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4)];
    let mut s = 0;
    while s < 10 {
        if all[s].0 == i && all[s].1 == j && all[s].2 == k {
            return s;
        }
        s += 1;
    }
    panic!("not a triangle")
}

// tetrahedra (0123),(0124),(0134),(0234),(1234)
const T0123: usize = 0;
const T0124: usize = 1;
const T0134: usize = 2;
const T0234: usize = 3;
const T1234: usize = 4;

/// Positive crossings in the positively oriented simplex.
pub const CHI: bool = true;

/// Amplitude of one colored 4-simplex. `x`: local triangle labels, `m`: local
/// tetrahedron channels, `sign`: orientation relative to the vertex order.
pub fn simplex_amplitude<A: Arith>(t: &Tables<A>, x: &[Label; 10], m: &[Label; 5], sign: i8) -> A::V {
    let ar = &t.ar;
    let xi = |i, j, k| x[tri_index(i, j, k)];
    let x0 = [xi(0, 1, 2), xi(0, 2, 3), xi(0, 3, 4)];
    let mut tot = ar.zero();
    for w in 0..t.n {
        for e in 0..t.n {
            if !(t.adm(x0[0], x0[1], t.star[e]) && t.adm(e, x0[2], t.star[w])) {
                continue;
            }
            let mut v = vec![ar.zero(); t.n];
            v[e] = ar.one();
            let mut s = Strands { t, lab: x0, w, basis: Basis::Left, v };
            if sign > 0 {
                s.insert(0, [xi(1, 2, 3), xi(0, 1, 3)], m[T0123]);
                s.insert(1, [xi(1, 3, 4), xi(0, 1, 4)], m[T0134]);
                s.insert(0, [xi(2, 3, 4), xi(1, 2, 4)], m[T1234]);
                s.insert(1, [xi(0, 1, 2), xi(0, 2, 4)], m[T0124]);
                s.braid(CHI);
                s.insert(1, [xi(0, 2, 3), xi(0, 3, 4)], m[T0234]);
            } else {
                s.insert(1, [xi(2, 3, 4), xi(0, 2, 4)], m[T0234]);
                s.braid(!CHI);
                s.insert(1, [xi(1, 2, 4), xi(0, 1, 4)], m[T0124]);
                s.insert(0, [xi(1, 2, 3), xi(1, 3, 4)], m[T1234]);
                s.insert(1, [xi(0, 1, 3), xi(0, 3, 4)], m[T0134]);
                s.insert(0, [xi(0, 1, 2), xi(0, 2, 3)], m[T0123]);
            }
            s.to_left();
            if !ar.is_zero(&s.v[e]) {
                tot = ar.add(&tot, &ar.mul(&t.d[w], &s.v[e]));
            }
        }
    }
    tot
}

// ---------------------------------------------------------------- layout

/// Cells of a complex, indexed for the state sum.
pub struct Layout {
    pub n_vertices: usize,
    pub tris: Vec<[Vertex; 3]>,
    pub tets: Vec<[Vertex; 4]>,
    /// per tet: triangle ids of abc, acd, bcd, abd
    pub tet_tris: Vec<[usize; 4]>,
    pub facet_tris: Vec<[usize; 10]>,
    pub facet_tets: Vec<[usize; 5]>,
    pub signs: Vec<i8>,
}

impl Layout {
    pub fn new(c: &Complex4) -> Layout {
        let tris: Vec<[Vertex; 3]> = c.faces(2).into_iter().map(|v| [v[0], v[1], v[2]]).collect();
        let tets: Vec<[Vertex; 4]> = c.faces(3).into_iter().map(|v| [v[0], v[1], v[2], v[3]]).collect();
        let tri_id: HashMap<[Vertex; 3], usize> = tris.iter().enumerate().map(|(i, t)| (*t, i)).collect();
        let tet_id: HashMap<[Vertex; 4], usize> = tets.iter().enumerate().map(|(i, t)| (*t, i)).collect();
        let tet_tris = tets
            .iter()
            .map(|&[a, b, cc, d]| [tri_id[&[a, b, cc]], tri_id[&[a, cc, d]], tri_id[&[b, cc, d]], tri_id[&[a, b, d]]])
            .collect();
        let mut facet_tris = Vec::new();
        let mut facet_tets = Vec::new();
        for f in c.facets() {
            let mut ft = [0; 10];
            for (s, loc) in subsets(&[0, 1, 2, 3, 4], 3).into_iter().enumerate() {
                ft[s] = tri_id[&[f[loc[0]], f[loc[1]], f[loc[2]]]];
            }
            let mut fq = [0; 5];
            for (s, loc) in subsets(&[0, 1, 2, 3, 4], 4).into_iter().enumerate() {
                fq[s] = tet_id[&[f[loc[0]], f[loc[1]], f[loc[2]], f[loc[3]]]];
            }
            facet_tris.push(ft);
            facet_tets.push(fq);
        }
        Layout { n_vertices: c.n_vertices(), tris, tets, tet_tris, facet_tris, facet_tets, signs: c.signs().to_vec() }
    }

    /// n0 - n1 + n2 - n3 + n4.
    pub fn euler(&self) -> i64 {
        let n1 = {
            let mut e = std::collections::BTreeSet::new();
            for t in &self.tris {
                e.insert((t[0], t[1]));
                e.insert((t[0], t[2]));
                e.insert((t[1], t[2]));
            }
            e.len() as i64
        };
        self.n_vertices as i64 - n1 + self.tris.len() as i64 - self.tets.len() as i64 + self.facet_tris.len() as i64
    }

    pub fn n_edges(&self) -> usize {
        let mut e = std::collections::BTreeSet::new();
        for t in &self.tris {
            e.insert((t[0], t[1]));
            e.insert((t[0], t[2]));
            e.insert((t[1], t[2]));
        }
        e.len()
    }

    /// Triangle order in which tetrahedra complete early.
    fn triangle_order(&self) -> Vec<usize> {
        let mut seen = vec![false; self.tris.len()];
        let mut order = Vec::new();
        let mut done_tet = vec![false; self.tets.len()];
        // greedily take the tet needing the fewest new triangles
        for _ in 0..self.tets.len() {
            let best = (0..self.tets.len())
                .filter(|&q| !done_tet[q])
                .min_by_key(|&q| (self.tet_tris[q].iter().filter(|&&t| !seen[t]).count(), q))
                .unwrap();
            done_tet[best] = true;
            let mut ts = self.tet_tris[best].to_vec();
            ts.sort();
            for t in ts {
                if !seen[t] {
                    seen[t] = true;
                    order.push(t);
                }
            }
        }
        order
    }

    /// Facet order keeping the set of live triangles small: greedy from every
    /// start facet, keeping the order with the smallest peak.
    fn facet_order(&self) -> Vec<usize> {
        let nf = self.facet_tris.len();
        let mut uses = vec![0usize; self.tris.len()];
        for ft in &self.facet_tris {
            for &t in ft {
                uses[t] += 1;
            }
        }
        let mut best: Option<(usize, usize, Vec<usize>)> = None;
        for start in 0..nf {
            let mut left = uses.clone();
            let mut live = vec![false; self.tris.len()];
            let mut n_live = 0usize;
            let mut used = vec![false; nf];
            let mut order = Vec::with_capacity(nf);
            let (mut peak, mut area) = (0, 0);
            for step in 0..nf {
                let f = if step == 0 {
                    start
                } else {
                    (0..nf)
                        .filter(|&f| !used[f])
                        .min_by_key(|&f| {
                            let ft = &self.facet_tris[f];
                            let added = ft.iter().filter(|&&t| !live[t]).count();
                            let retired = ft.iter().filter(|&&t| left[t] == 1).count();
                            (n_live + added - retired, added, f)
                        })
                        .unwrap()
                };
                used[f] = true;
                order.push(f);
                for &t in &self.facet_tris[f] {
                    if !live[t] {
                        live[t] = true;
                        n_live += 1;
                    }
                }
                peak = peak.max(n_live);
                for &t in &self.facet_tris[f] {
                    left[t] -= 1;
                    if left[t] == 0 {
                        live[t] = false;
                        n_live -= 1;
                    }
                }
                area += n_live;
            }
            if best.as_ref().map_or(true, |b| (peak, area) < (b.0, b.1)) {
                best = Some((peak, area, order));
            }
        }
        best.map(|b| b.2).unwrap_or_default()
    }
}

// ---------------------------------------------------------------- colorings

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Auto,
    Backtracking,
    Cocycle,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Strategy::Auto => "auto",
            Strategy::Backtracking => "backtracking",
            Strategy::Cocycle => "cocycle",
        };
        write!(f, "{}", s)
    }
}

/// Whether `cat` is Z/N with labels in additive order (the cocycle path's model).
fn cyclic_order(cat: &CoordinatedCategory) -> Option<usize> {
    let n = cat.rank();
    let ok = cat.labels().all(|a| cat.star(a) == (n - a) % n)
        && cat.labels().all(|a| cat.labels().all(|b| cat.labels().all(|c| cat.admissible(a, b, c) == ((a + b + c) % n == 0))));
    ok.then_some(n)
}

/// Coboundary matrix δ: C²(K; Z) → C³(K; Z) in the ordered-simplex convention.
fn coboundary(l: &Layout) -> IntMatrix {
    let mut m = IntMatrix::zeros(l.tets.len(), l.tris.len());
    for (q, tt) in l.tet_tris.iter().enumerate() {
        // x_bcd - x_acd + x_abd - x_abc
        let [abc, acd, bcd, abd] = *tt;
        m.set(q, bcd, 1.into());
        m.set(q, acd, (-1).into());
        m.set(q, abd, 1.into());
        m.set(q, abc, (-1).into());
    }
    m
}

/// Lazily enumerates admissible colorings (triangle id → label).
pub struct ColoringIterator {
    inner: ColoringInner,
}

enum ColoringInner {
    Backtrack {
        n: usize,
        order: Vec<usize>,
        done_at: Vec<Vec<usize>>,
        tet_tris: Vec<[usize; 4]>,
        tabs: Tables<FloatArith>,
        labels: Vec<Label>,
        next: Vec<usize>,
        depth: usize,
        finished: bool,
    },
    Cocycle {
        n: u64,
        gens: Vec<crate::zlinalg::ModGenerator>,
        coeff: Vec<u64>,
        len: usize,
        finished: bool,
    },
}

/// Admissible colorings of `c` by `cat`.
pub fn colorings(c: &Complex4, cat: &CoordinatedCategory, strategy: Strategy) -> Result<ColoringIterator, CyError> {
    let l = Layout::new(c);
    let pointed = cyclic_order(cat);
    let use_cocycle = match strategy {
        Strategy::Cocycle => {
            if pointed.is_none() {
                return Err(CyError::NotPointed);
            }
            true
        }
        Strategy::Auto => pointed.is_some(),
        Strategy::Backtracking => false,
    };
    if use_cocycle {
        let n = pointed.unwrap() as u64;
        if n == 1 {
            return Ok(ColoringIterator {
                inner: ColoringInner::Cocycle { n: 1, gens: vec![], coeff: vec![], len: l.tris.len(), finished: false },
            });
        }
        let gens = nullspace_mod(&coboundary(&l), n);
        let k = gens.len();
        return Ok(ColoringIterator {
            inner: ColoringInner::Cocycle { n, gens, coeff: vec![0; k], len: l.tris.len(), finished: false },
        });
    }
    let order = l.triangle_order();
    let pos: HashMap<usize, usize> = order.iter().enumerate().map(|(i, &t)| (t, i)).collect();
    let mut done_at = vec![Vec::new(); order.len()];
    for (q, tt) in l.tet_tris.iter().enumerate() {
        let last = tt.iter().map(|t| pos[t]).max().unwrap();
        done_at[last].push(q);
    }
    let len = order.len();
    Ok(ColoringIterator {
        inner: ColoringInner::Backtrack {
            n: cat.rank(),
            order,
            done_at,
            tet_tris: l.tet_tris.clone(),
            tabs: Tables::new(FloatArith, cat),
            labels: vec![0; len],
            next: vec![0; len + 1],
            depth: 0,
            finished: false,
        },
    })
}

impl Iterator for ColoringIterator {
    type Item = Vec<Label>;

    fn next(&mut self) -> Option<Vec<Label>> {
        match &mut self.inner {
            ColoringInner::Cocycle { n, gens, coeff, len, finished } => {
                if *finished {
                    return None;
                }
                let mut x = vec![0u64; *len];
                for (g, &c) in gens.iter().zip(coeff.iter()) {
                    for (xi, &vi) in x.iter_mut().zip(&g.vector) {
                        *xi = (*xi + c * vi) % *n;
                    }
                }
                // advance the mixed-radix counter
                let mut i = 0;
                loop {
                    if i == coeff.len() {
                        *finished = true;
                        break;
                    }
                    coeff[i] += 1;
                    if coeff[i] < gens[i].order {
                        break;
                    }
                    coeff[i] = 0;
                    i += 1;
                }
                Some(x.into_iter().map(|v| v as Label).collect())
            }
            ColoringInner::Backtrack { n, order, done_at, tet_tris, tabs, labels, next, depth, finished } => {
                if *finished {
                    return None;
                }
                let len = order.len();
                loop {
                    if *depth == len {
                        let mut out = vec![0; len];
                        for (i, &t) in order.iter().enumerate() {
                            out[t] = labels[i];
                        }
                        *depth -= 1;
                        return Some(out);
                    }
                    let d = *depth;
                    if next[d] >= *n {
                        next[d] = 0;
                        if d == 0 {
                            *finished = true;
                            return None;
                        }
                        *depth -= 1;
                        continue;
                    }
                    labels[d] = next[d];
                    next[d] += 1;
                    let pos_label = |t: usize| labels[order.iter().position(|&o| o == t).unwrap()];
                    let ok = done_at[d].iter().all(|&q| {
                        let [a, b, c, e] = tet_tris[q];
                        tabs.channels(pos_label(a), pos_label(b), pos_label(c), pos_label(e)).next().is_some()
                    });
                    if ok {
                        *depth += 1;
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------- state sum

#[derive(Clone, Debug)]
pub struct CyOptions {
    pub strategy: Strategy,
    /// worker threads; None uses the rayon default
    pub threads: Option<usize>,
    pub force: bool,
    pub flip_orientation: bool,
    /// refuse above 2^limit_log2 colorings
    pub limit_log2: u32,
    /// validate the category before summing
    pub validate: bool,
    pub tol: f64,
}

impl Default for CyOptions {
    fn default() -> Self {
        CyOptions {
            strategy: Strategy::Auto,
            threads: None,
            force: false,
            flip_orientation: false,
            limit_log2: 34,
            validate: true,
            tol: crate::scalar::DEFAULT_TOL,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CyResult {
    pub value: Scalar,
    pub colorings: u64,
    pub strategy: Strategy,
    pub seconds: f64,
}

/// log2 of the number of colorings the chosen strategy will visit (an upper
/// bound for backtracking).
pub fn coloring_estimate_log2(c: &Complex4, cat: &CoordinatedCategory, strategy: Strategy) -> f64 {
    let l = Layout::new(c);
    let n = cat.rank() as f64;
    let cyc = cyclic_order(cat);
    let use_cocycle = match strategy {
        Strategy::Cocycle => true,
        Strategy::Auto => cyc.is_some(),
        Strategy::Backtracking => false,
    };
    match cyc {
        Some(nn) if nn > 1 => {
            let gens = nullspace_mod(&coboundary(&l), nn as u64);
            let exact: f64 = gens.iter().map(|g| (g.order as f64).log2()).sum();
            if use_cocycle {
                exact
            } else {
                exact.max(0.0)
            }
        }
        Some(_) => 0.0,
        None => l.tris.len() as f64 * n.log2(),
    }
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(k) => rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build().expect("thread pool").install(f),
        None => f(),
    }
}

/// The Crane–Yetter invariant D^{2(n0−n1)} Σ_β Π_f dim β(f) ⟨contraction⟩,
/// with the per-simplex normalization D^{-χ} folded in.
pub fn cy_state_sum(c: &Complex4, cat: &CoordinatedCategory, opts: &CyOptions) -> Result<CyResult, CyError> {
    let start = Instant::now();
    let report = c.check_manifold();
    if !report.passed() {
        return Err(CyError::NotManifold(report.problems.join("; ")));
    }
    if cat.rank() > 15 {
        return Err(CyError::TooManyLabels);
    }
    if opts.validate {
        let r = cat.validate(opts.tol);
        if !r.passed() {
            return Err(CyError::InvalidCategory(format!("failing checks: {}", r.failing().join(", "))));
        }
    }
    let cx = if opts.flip_orientation { c.flipped() } else { c.clone() };
    let cyc = cyclic_order(cat);
    let strategy = match opts.strategy {
        Strategy::Auto if cyc.is_some() && cat.backend.is_exact() => Strategy::Cocycle,
        Strategy::Auto => Strategy::Backtracking,
        Strategy::Cocycle if cyc.is_none() => return Err(CyError::NotPointed),
        s => s,
    };
    let est = coloring_estimate_log2(&cx, cat, strategy);
    if est > opts.limit_log2 as f64 && !opts.force {
        return Err(CyError::ResourceLimit { log2: est, limit_log2: opts.limit_log2 });
    }
    let l = Layout::new(&cx);
    let (raw, count) = with_threads(opts.threads, || -> Result<(Scalar, u64), CyError> {
        match (&cat.backend, strategy) {
            (Backend::Exact(f), Strategy::Cocycle) => cocycle_sum(&l, cat, f),
            (Backend::Exact(f), _) => {
                let mono = MonoArith { order: f.order() };
                let t = Tables::new(mono, cat);
                if t.sixj.iter().chain(&t.d).chain(&t.nup).all(|v| *v != Mono::Other) {
                    let (h, count) = backtrack_mono(&l, &t)?;
                    Ok((hist_value(f, &h), count))
                } else {
                    let t = Tables::new(CycloArith(f.clone()), cat);
                    let (v, count) = backtrack_sum(&l, &t);
                    Ok((Scalar::Exact(v), count))
                }
            }
            (Backend::Float, _) => {
                let t = Tables::new(FloatArith, cat);
                let (v, count) = backtrack_sum(&l, &t);
                Ok((Scalar::Float(v), count))
            }
        }
    })?;
    let value = &raw * &normalization(&l, cat)?;
    Ok(CyResult { value, colorings: count, strategy, seconds: start.elapsed().as_secs_f64() })
}

/// D^{2(n0 - n1)} · D^{-χ}.
fn normalization(l: &Layout, cat: &CoordinatedCategory) -> Result<Scalar, CyError> {
    let n0 = l.n_vertices as i64;
    let n1 = l.n_edges() as i64;
    let k = 2 * (n0 - n1) - l.euler();
    Ok(cat.global_dim.pow(k)?)
}

fn hist_value(f: &Arc<CycloField>, h: &[u64]) -> Scalar {
    let mut acc = Cyclo::zero(f);
    for (k, &c) in h.iter().enumerate() {
        if c != 0 {
            acc = acc.add(&Cyclo::zeta_pow(f, k as i64).scale(&BigRational::from_integer(BigInt::from(c))));
        }
    }
    Scalar::Exact(acc)
}

/// Number of leading triangles fixed per parallel work item.
fn split_depth(n: usize, len: usize) -> usize {
    let mut d = 0;
    let mut parts = 1usize;
    while parts < 256 && d < len {
        parts = parts.saturating_mul(n);
        d += 1;
    }
    d
}

/// One facet contraction: open tetrahedra before and after, as positions.
struct Step {
    facet: usize,
    /// facet slot of each old open position that closes here
    close_slot: Vec<Option<usize>>,
    /// facet slots of the tetrahedra opened here, in new-open order
    opening: Vec<usize>,
    old_open: Vec<usize>,
}

/// Triangle order and facet schedule for the depth-first contraction.
struct Plan {
    order: Vec<usize>,
    /// tetrahedra completed by the triangle at each depth
    done_at: Vec<Vec<usize>>,
    steps: Vec<Step>,
    /// steps[step_at[i]..step_at[i+1]] are applied after assigning depth i
    step_at: Vec<usize>,
}

impl Plan {
    fn new(l: &Layout) -> Plan {
        let forder = l.facet_order();
        let mut seen = vec![false; l.tris.len()];
        let mut order = Vec::new();
        let mut depth_of_facet = Vec::new();
        for &f in &forder {
            for &tr in &l.facet_tris[f] {
                if !seen[tr] {
                    seen[tr] = true;
                    order.push(tr);
                }
            }
            depth_of_facet.push(order.len() - 1);
        }
        for d in 1..depth_of_facet.len() {
            depth_of_facet[d] = depth_of_facet[d].max(depth_of_facet[d - 1]);
        }
        let pos: HashMap<usize, usize> = order.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        let mut done_at = vec![Vec::new(); order.len()];
        for (q, tt) in l.tet_tris.iter().enumerate() {
            let last = tt.iter().map(|t| pos[t]).max().unwrap();
            done_at[last].push(q);
        }
        let mut steps = Vec::new();
        let mut open: Vec<usize> = Vec::new();
        for &f in &forder {
            let tets = l.facet_tets[f];
            let slot = |q: usize| tets.iter().position(|&p| p == q);
            let kept: Vec<usize> = open.iter().copied().filter(|q| slot(*q).is_none()).collect();
            let opening: Vec<usize> = (0..5).filter(|&s| !open.contains(&tets[s])).collect();
            let new_open: Vec<usize> = kept.iter().copied().chain(opening.iter().map(|&s| tets[s])).collect();
            steps.push(Step {
                facet: f,
                close_slot: open.iter().map(|&q| slot(q)).collect(),
                opening,
                old_open: open.clone(),
            });
            open = new_open;
        }
        let mut step_at = vec![0; order.len() + 1];
        for i in 0..order.len() {
            step_at[i + 1] = step_at[i] + depth_of_facet.iter().filter(|&&d| d == i).count();
        }
        Plan { order, done_at, steps, step_at }
    }
}

enum AmpCache<V> {
    Dense(Vec<Option<V>>),
    Sparse(HashMap<u64, V>),
}

struct Worker<V> {
    x: Vec<Label>,
    states: Vec<Vec<V>>,
    weights: Vec<V>,
    cache: AmpCache<V>,
}

struct Engine<'a, A: Arith> {
    l: &'a Layout,
    t: &'a Tables<A>,
    plan: Plan,
}

impl<'a, A: Arith> Engine<'a, A> {
    fn new(l: &'a Layout, t: &'a Tables<A>) -> Self {
        Engine { l, t, plan: Plan::new(l) }
    }

    fn cache(&self) -> AmpCache<A::V> {
        match self.t.n.checked_pow(15).filter(|&s| s <= 1 << 18) {
            Some(s) => AmpCache::Dense(vec![None; 2 * s]),
            None => AmpCache::Sparse(HashMap::new()),
        }
    }

    fn worker(&self) -> Worker<A::V> {
        Worker {
            x: vec![usize::MAX; self.l.tris.len()],
            states: (0..=self.plan.steps.len()).map(|_| Vec::new()).collect(),
            weights: vec![self.t.ar.one(); self.plan.order.len() + 1],
            cache: self.cache(),
        }
    }

    fn amp(&self, w: &mut AmpCache<A::V>, sign: i8, xs: &[Label; 10], ms: &[Label; 5]) -> A::V {
        let n = self.t.n as u64;
        let mut key = u64::from(sign > 0);
        for &v in xs.iter().chain(ms.iter()) {
            key = key * n + v as u64;
        }
        match w {
            AmpCache::Dense(v) => v[key as usize].get_or_insert_with(|| simplex_amplitude(self.t, xs, ms, sign)).clone(),
            AmpCache::Sparse(h) => h.entry(key).or_insert_with(|| simplex_amplitude(self.t, xs, ms, sign)).clone(),
        }
    }

    /// Applies step k to `old` given labels `x`, writing into `next`; false if it vanishes.
    fn apply(&self, x: &[Label], k: usize, old: &[A::V], cache: &mut AmpCache<A::V>, next: &mut Vec<A::V>) -> bool {
        let (l, t, ar) = (self.l, self.t, &self.t.ar);
        let st = &self.plan.steps[k];
        let tets = l.facet_tets[st.facet];
        let chans_of = |q: usize| -> Vec<Label> {
            let [a, b, c, e] = l.tet_tris[q];
            t.channels(x[a], x[b], x[c], x[e]).collect()
        };
        let old_ch: Vec<Vec<Label>> = st.old_open.iter().map(|&q| chans_of(q)).collect();
        let open_ch: Vec<Vec<Label>> = st.opening.iter().map(|&s| chans_of(tets[s])).collect();
        let mut xs = [0; 10];
        for (s, &tr) in l.facet_tris[st.facet].iter().enumerate() {
            xs[s] = x[tr];
        }
        let sign = l.signs[st.facet];
        let mut kept_mul = vec![0; st.old_open.len()];
        let mut kept_size = 1;
        for (p, ch) in old_ch.iter().enumerate() {
            if st.close_slot[p].is_none() {
                kept_mul[p] = kept_size;
                kept_size *= ch.len();
            }
        }
        let open_size: usize = open_ch.iter().map(|c| c.len()).product();
        next.clear();
        next.resize(kept_size * open_size, ar.zero());
        if next.is_empty() {
            return false;
        }
        let mut digit = vec![0; st.old_open.len()];
        let mut ms = [0; 5];
        let mut nonzero = false;
        for (i, sv) in old.iter().enumerate() {
            if i > 0 {
                for p in 0..digit.len() {
                    digit[p] += 1;
                    if digit[p] < old_ch[p].len() {
                        break;
                    }
                    digit[p] = 0;
                }
            }
            if ar.is_zero(sv) {
                continue;
            }
            let mut base = 0;
            for p in 0..digit.len() {
                match st.close_slot[p] {
                    Some(s) => ms[s] = old_ch[p][digit[p]],
                    None => base += digit[p] * kept_mul[p],
                }
            }
            for j in 0..open_size {
                let mut r = j;
                let mut wt = sv.clone();
                for (o, &s) in st.opening.iter().enumerate() {
                    let ch = &open_ch[o];
                    let c = ch[r % ch.len()];
                    r /= ch.len();
                    ms[s] = c;
                    wt = ar.mul(&wt, &t.d[c]);
                }
                let a = self.amp(cache, sign, &xs, &ms);
                if ar.is_zero(&a) {
                    continue;
                }
                let idx = base + j * kept_size;
                next[idx] = ar.add(&next[idx], &ar.mul(&wt, &a));
                nonzero = true;
            }
        }
        nonzero
    }

    fn tet_ok(&self, x: &[Label], q: usize) -> bool {
        let [a, b, c, e] = self.l.tet_tris[q];
        self.t.channels(x[a], x[b], x[c], x[e]).next().is_some()
    }

    fn dfs(&self, w: &mut Worker<A::V>, i: usize, fixed: &[Label], leaf: &mut dyn FnMut(A::V)) {
        let plan = &self.plan;
        if i == plan.order.len() {
            let v = self.t.ar.mul(&w.weights[i], &w.states[plan.steps.len()][0]);
            leaf(v);
            return;
        }
        let tr = plan.order[i];
        let labels = if i < fixed.len() { fixed[i]..fixed[i] + 1 } else { 0..self.t.n };
        'label: for a in labels {
            w.x[tr] = a;
            if !plan.done_at[i].iter().all(|&q| self.tet_ok(&w.x, q)) {
                continue;
            }
            w.weights[i + 1] = self.t.ar.mul(&w.weights[i], &self.t.d[a]);
            for k in plan.step_at[i]..plan.step_at[i + 1] {
                let (before, after) = w.states.split_at_mut(k + 1);
                if !self.apply(&w.x, k, &before[k], &mut w.cache, &mut after[0]) {
                    continue 'label;
                }
            }
            self.dfs(w, i + 1, fixed, leaf);
        }
        w.x[tr] = usize::MAX;
    }

    /// Runs `leaf` over every coloring, split into prefix-ordered parallel parts.
    fn run<R: Send>(&self, init: impl Fn() -> R + Sync, fold: impl Fn(&mut R, A::V) + Sync) -> Vec<(R, u64)> {
        let n = self.t.n;
        let depth = split_depth(n, self.plan.order.len());
        let prefixes: Vec<Vec<Label>> = (0..n.pow(depth as u32))
            .map(|mut p| {
                (0..depth)
                    .map(|_| {
                        let a = p % n;
                        p /= n;
                        a
                    })
                    .collect()
            })
            .collect();
        prefixes
            .par_iter()
            .map_init(
                || self.worker(),
                |w, pre| {
                    w.states[0] = vec![self.t.ar.one()];
                    let mut acc = init();
                    let mut count = 0u64;
                    self.dfs(w, 0, pre, &mut |v| {
                        count += 1;
                        fold(&mut acc, v);
                    });
                    (acc, count)
                },
            )
            .collect()
    }
}

/// Sum over admissible colorings, sweeping triangles in plan order and summing
/// out each triangle once every facet containing it has been contracted.
pub fn backtrack_sum<A: Arith>(l: &Layout, t: &Tables<A>) -> (A::V, u64) {
    let e = Engine::new(l, t);
    let plan = &e.plan;
    let ar = &t.ar;
    let mut last_step = vec![0; l.tris.len()];
    for (k, st) in plan.steps.iter().enumerate() {
        for &tr in &l.facet_tris[st.facet] {
            last_step[tr] = last_step[tr].max(k);
        }
    }
    // frontier labels -> (state over open tetrahedra, admissible partial colorings)
    let mut frontier: Vec<usize> = Vec::new();
    let mut map: BTreeMap<Vec<u8>, (Vec<A::V>, u64)> = BTreeMap::new();
    map.insert(Vec::new(), (vec![ar.one()], 1));
    for i in 0..plan.order.len() {
        let tr = plan.order[i];
        frontier.push(tr);
        let (k0, k1) = (plan.step_at[i], plan.step_at[i + 1]);
        let entries: Vec<(Vec<u8>, (Vec<A::V>, u64))> = std::mem::take(&mut map).into_iter().collect();
        let expanded: Vec<Vec<(Vec<u8>, Vec<A::V>, u64)>> = entries
            .par_iter()
            .map_init(
                || (e.cache(), vec![usize::MAX; l.tris.len()]),
                |(cache, x), (key, (vec, cnt))| {
                    for (&f, &a) in frontier.iter().zip(key.iter()) {
                        x[f] = a as usize;
                    }
                    let mut out = Vec::new();
                    for a in 0..t.n {
                        x[tr] = a;
                        if !plan.done_at[i].iter().all(|&q| e.tet_ok(x, q)) {
                            continue;
                        }
                        let mut cur: Vec<A::V> = vec.iter().map(|v| ar.mul(v, &t.d[a])).collect();
                        let mut next = Vec::new();
                        for k in k0..k1 {
                            e.apply(x, k, &cur, cache, &mut next);
                            std::mem::swap(&mut cur, &mut next);
                        }
                        let mut nk = key.clone();
                        nk.push(a as u8);
                        out.push((nk, cur, *cnt));
                    }
                    out
                },
            )
            .collect();
        // drop triangles no longer referenced and merge
        let keep: Vec<usize> = (0..frontier.len()).filter(|&p| k1 == 0 || last_step[frontier[p]] >= k1).collect();
        for (key, vec, cnt) in expanded.into_iter().flatten() {
            let nk: Vec<u8> = keep.iter().map(|&p| key[p]).collect();
            match map.entry(nk) {
                std::collections::btree_map::Entry::Vacant(v) => {
                    v.insert((vec, cnt));
                }
                std::collections::btree_map::Entry::Occupied(mut o) => {
                    let (acc, c) = o.get_mut();
                    for (a, b) in acc.iter_mut().zip(vec.iter()) {
                        *a = ar.add(a, b);
                    }
                    *c += cnt;
                }
            }
        }
        frontier = keep.iter().map(|&p| frontier[p]).collect();
    }
    match map.into_iter().next() {
        Some((_, (v, c))) => (v.into_iter().next().unwrap_or_else(|| ar.zero()), c),
        None => (ar.zero(), 0),
    }
}

/// Backtracking for categories whose data are roots of unity: histogram of phases.
fn backtrack_mono(l: &Layout, t: &Tables<MonoArith>) -> Result<(Vec<u64>, u64), CyError> {
    let order = t.ar.order as usize;
    let e = Engine::new(l, t);
    let parts = e.run(
        || (vec![0u64; order], false),
        |acc, v| match v {
            Mono::Unit(k) => acc.0[k as usize] += 1,
            Mono::Zero => {}
            Mono::Other => acc.1 = true,
        },
    );
    let mut h = vec![0u64; order];
    let mut count = 0;
    for ((p, bad), c) in parts {
        if bad {
            return Err(CyError::NotPointed);
        }
        for (a, b) in h.iter_mut().zip(p) {
            *a += b;
        }
        count += c;
    }
    Ok((h, count))
}

// ---------------------------------------------------------------- cocycle path

/// Σ over Z/N 2-cocycles with a Gray-code walk over the generator span.
// greedy support reduction among full-order generators, densest first
fn sparsify(gens: &mut [crate::zlinalg::ModGenerator], n: u64) {
    let support = |v: &[u64]| v.iter().filter(|&&x| x != 0).count();
    loop {
        let mut improved = false;
        for i in 0..gens.len() {
            for j in 0..gens.len() {
                if i == j || gens[i].order != n || gens[j].order != n {
                    continue;
                }
                for c in 1..n {
                    let cand: Vec<u64> = gens[i].vector.iter().zip(&gens[j].vector).map(|(&a, &b)| (a + c * b) % n).collect();
                    if support(&cand) < support(&gens[i].vector) {
                        gens[i].vector = cand;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
    gens.sort_by_key(|g| std::cmp::Reverse(support(&g.vector)));
}

fn cocycle_sum(l: &Layout, cat: &CoordinatedCategory, field: &Arc<CycloField>) -> Result<(Scalar, u64), CyError> {
    let n = cyclic_order(cat).ok_or(CyError::NotPointed)?;
    let order = field.order();
    let t = Tables::new(MonoArith { order }, cat);
    if n == 1 {
        let (h, count) = backtrack_mono(l, &t)?;
        return Ok((hist_value(field, &h), count));
    }
    let mut gens = nullspace_mod(&coboundary(l), n as u64);
    sparsify(&mut gens, n as u64);
    let exps = |v: &Mono| -> Result<i64, CyError> {
        match v {
            Mono::Unit(k) => Ok(*k as i64),
            Mono::Zero => Ok(-1),
            Mono::Other => Err(CyError::NotPointed),
        }
    };
    // amplitude tables indexed by the ten labels in base n, per sign
    let size = n.pow(10);
    let mut amp: [Vec<i64>; 2] = [vec![-1; size], vec![-1; size]];
    for (si, sign) in [(0usize, -1i8), (1, 1)] {
        for idx in 0..size {
            let mut xs = [0; 10];
            let mut r = idx;
            for s in 0..10 {
                xs[s] = r % n;
                r /= n;
            }
            // channels follow from the two faces abc, acd of each tetrahedron
            let tet_faces = [[0, 3, 6, 1], [0, 4, 7, 2], [1, 5, 8, 2], [3, 5, 9, 4], [6, 8, 9, 7]];
            let mut ms = [0; 5];
            let mut ok = true;
            for (q, f) in tet_faces.iter().enumerate() {
                let m = (xs[f[0]] + xs[f[1]]) % n;
                if (xs[f[2]] + xs[f[3]]) % n != m {
                    ok = false;
                }
                ms[q] = m;
            }
            if ok {
                amp[si][idx] = exps(&simplex_amplitude(&t, &xs, &ms, sign))?;
            }
        }
    }
    let d_exp: Vec<i64> = t.d.iter().map(&exps).collect::<Result<_, _>>()?;
    let ord = order as i64;
    let k = gens.len();
    // facets touched by each generator, with per-slot digit weights
    let pow_n: Vec<usize> = (0..10).map(|s| n.pow(s as u32)).collect();
    let total: u64 = gens.iter().map(|g| g.order).product();
    // split on the leading generators
    let mut lead = 0;
    let mut parts = 1u64;
    while lead < k && parts < 256 {
        parts *= gens[lead].order;
        lead += 1;
    }
    gens[lead..].reverse();
    let chunks: Vec<Vec<u64>> = {
        let mut out = vec![vec![]];
        for g in &gens[..lead] {
            out = out.into_iter().flat_map(|p| (0..g.order).map(move |c| [p.clone(), vec![c]].concat())).collect();
        }
        out
    };
    let sign_slot: Vec<usize> = l.signs.iter().map(|&s| usize::from(s > 0)).collect();
    // per generator: its nonzero triangles and the facets and tetrahedra they touch
    let touched = |g: &crate::zlinalg::ModGenerator| {
        let tris: Vec<(usize, i64)> = g.vector.iter().enumerate().filter(|(_, &v)| v != 0).map(|(t, &v)| (t, v as i64)).collect();
        let hit = |t: &usize| tris.iter().any(|(u, _)| u == t);
        let facets: Vec<usize> = (0..l.facet_tris.len()).filter(|&f| l.facet_tris[f].iter().any(hit)).collect();
        let tets: Vec<usize> = (0..l.tet_tris.len()).filter(|&q| l.tet_tris[q][..2].iter().any(hit)).collect();
        (tris, facets, tets)
    };
    let rest_touched: Vec<(Vec<(usize, i64)>, Vec<usize>, Vec<usize>)> = gens[lead..].iter().map(touched).collect();
    let hists: Vec<Vec<u64>> = chunks
        .par_iter()
        .map(|pre| {
            let mut x = vec![0usize; l.tris.len()];
            for (g, &c) in gens.iter().zip(pre) {
                for (xi, &vi) in x.iter_mut().zip(&g.vector) {
                    *xi = (*xi + (c * vi) as usize) % n;
                }
            }
            let mut fidx: Vec<usize> = l.facet_tris.iter().map(|ft| ft.iter().enumerate().map(|(s, &tr)| x[tr] * pow_n[s]).sum()).collect();
            let mut chan: Vec<usize> = l.tet_tris.iter().map(|tt| (x[tt[0]] + x[tt[1]]) % n).collect();
            let mut zeros = 0i64;
            let mut e = 0i64;
            for (f, &ix) in fidx.iter().enumerate() {
                let a = amp[sign_slot[f]][ix];
                if a < 0 {
                    zeros += 1;
                } else {
                    e += a;
                }
            }
            for &a in &x {
                e += d_exp[a];
            }
            for &m in &chan {
                e += d_exp[m];
            }
            let mut h = vec![0u64; order as usize];
            let rest = &gens[lead..];
            let mut digit = vec![0u64; rest.len()];
            let mut dir = vec![true; rest.len()];
            loop {
                if zeros == 0 {
                    h[e.rem_euclid(ord) as usize] += 1;
                }
                // reflected mixed-radix Gray code step
                let mut j = 0;
                while j < rest.len() {
                    let up = dir[j];
                    if (up && digit[j] + 1 < rest[j].order) || (!up && digit[j] > 0) {
                        break;
                    }
                    dir[j] = !dir[j];
                    j += 1;
                }
                if j == rest.len() {
                    break;
                }
                let step: i64 = if dir[j] { 1 } else { -1 };
                digit[j] = (digit[j] as i64 + step) as u64;
                let (tris, facets, tets) = &rest_touched[j];
                for &(tr, vi) in tris {
                    let old = x[tr];
                    let new = (old as i64 + step * vi).rem_euclid(n as i64) as usize;
                    x[tr] = new;
                    e += d_exp[new] - d_exp[old];
                }
                for &f in facets {
                    let a = amp[sign_slot[f]][fidx[f]];
                    if a < 0 {
                        zeros -= 1;
                    } else {
                        e -= a;
                    }
                    fidx[f] = l.facet_tris[f].iter().zip(&pow_n).map(|(&tr, &p)| x[tr] * p).sum();
                    let b = amp[sign_slot[f]][fidx[f]];
                    if b < 0 {
                        zeros += 1;
                    } else {
                        e += b;
                    }
                }
                for &q in tets {
                    let tt = l.tet_tris[q];
                    let m = (x[tt[0]] + x[tt[1]]) % n;
                    e += d_exp[m] - d_exp[chan[q]];
                    chan[q] = m;
                }
                e = e.rem_euclid(ord);
            }
            h
        })
        .collect();
    let mut h = vec![0u64; order as usize];
    for p in hists {
        for (a, b) in h.iter_mut().zip(p) {
            *a += b;
        }
    }
    Ok((hist_value(field, &h), total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::category::builtin;
    use crate::simplicial::{boundary_simplex, cp2_9, Move};

    fn exact_one(v: &Scalar) -> bool {
        matches!(v, Scalar::Exact(c) if c.is_one())
    }

    fn run(c: &Complex4, cat: &str, strategy: Strategy) -> CyResult {
        let opts = CyOptions { strategy, ..CyOptions::default() };
        cy_state_sum(c, &builtin(cat).unwrap(), &opts).unwrap()
    }

    #[test]
    fn s4_counts() {
        let c = boundary_simplex();
        let t = builtin("trivial").unwrap();
        assert_eq!(colorings(&c, &t, Strategy::Backtracking).unwrap().count(), 1);
        let s = builtin("semion").unwrap();
        assert_eq!(colorings(&c, &s, Strategy::Backtracking).unwrap().count(), 1024);
        assert_eq!(colorings(&c, &s, Strategy::Cocycle).unwrap().count(), 1024);
    }

    #[test]
    fn colorings_are_admissible_and_distinct() {
        let c = boundary_simplex();
        let l = Layout::new(&c);
        let f = builtin("fibonacci").unwrap();
        let all: Vec<Vec<Label>> = colorings(&c, &f, Strategy::Backtracking).unwrap().collect();
        let t = Tables::new(FloatArith, &f);
        for x in &all {
            for &[a, b, cc, e] in &l.tet_tris {
                assert!(t.channels(x[a], x[b], x[cc], x[e]).next().is_some());
            }
        }
        let set: std::collections::HashSet<_> = all.iter().collect();
        assert_eq!(set.len(), all.len());
        assert_eq!(all.len() as u64, run(&c, "fibonacci", Strategy::Backtracking).colorings);
    }

    #[test]
    fn s4_is_one() {
        let c = boundary_simplex();
        for cat in ["trivial", "semion", "pointed(3,1)", "pointed(2,0)", "pointed(3,0)"] {
            for st in [Strategy::Backtracking, Strategy::Cocycle] {
                let r = run(&c, cat, st);
                assert!(exact_one(&r.value), "{} {}: {:?}", cat, st, r.value);
            }
        }
        let r = run(&c, "fibonacci", Strategy::Auto);
        assert!((r.value.to_c64() - Complex64::new(1.0, 0.0)).norm() < 1e-7);
        assert_eq!(r.strategy, Strategy::Backtracking);
    }

    #[test]
    fn strategies_agree() {
        let c = boundary_simplex().pachner(Move::M15, &[0, 1, 2, 3, 4]).unwrap();
        for cat in ["semion", "pointed(3,1)"] {
            let a = run(&c, cat, Strategy::Backtracking);
            let b = run(&c, cat, Strategy::Cocycle);
            assert_eq!(a.colorings, b.colorings);
            assert_eq!(a.value, b.value);
        }
    }

    #[test]
    fn float_backend_matches_exact() {
        let c = boundary_simplex().pachner(Move::M15, &[0, 1, 2, 3, 4]).unwrap();
        let cat = builtin("semion").unwrap();
        let f = cat.with_backend(&Backend::Float).unwrap();
        assert!(!f.backend.is_exact());
        let r = cy_state_sum(&c, &f, &CyOptions::default()).unwrap();
        assert!((r.value.to_c64() - Complex64::new(1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn trivial_amplitude() {
        let t = Tables::new(FloatArith, &builtin("trivial").unwrap());
        for sign in [1, -1] {
            assert_eq!(simplex_amplitude(&t, &[0; 10], &[0; 5], sign), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn guard_refuses_cp2_fibonacci() {
        let c = cp2_9().unwrap();
        let f = builtin("fibonacci").unwrap();
        assert_eq!(coloring_estimate_log2(&c, &f, Strategy::Auto), 84.0);
        match cy_state_sum(&c, &f, &CyOptions::default()) {
            Err(CyError::ResourceLimit { log2, .. }) => assert_eq!(log2, 84.0),
            other => panic!("{:?}", other.map(|r| r.value)),
        }
        let s = builtin("semion").unwrap();
        assert_eq!(coloring_estimate_log2(&c, &s, Strategy::Auto), 29.0);
    }

    #[test]
    fn rejects_non_manifold() {
        let c = boundary_simplex();
        let mut facets = c.facets().to_vec();
        facets.pop();
        let bad = Complex4::new(6, facets, &[]).unwrap();
        assert!(matches!(cy_state_sum(&bad, &builtin("trivial").unwrap(), &CyOptions::default()), Err(CyError::NotManifold(_))));
    }

    #[test]
    fn thread_count_does_not_change_result() {
        let c = boundary_simplex();
        let f = builtin("fibonacci").unwrap();
        let a = cy_state_sum(&c, &f, &CyOptions { threads: Some(1), ..CyOptions::default() }).unwrap();
        let b = cy_state_sum(&c, &f, &CyOptions { threads: Some(3), ..CyOptions::default() }).unwrap();
        assert_eq!(a.value.to_c64(), b.value.to_c64());
    }
}

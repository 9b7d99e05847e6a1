//! Oriented combinatorial closed 4-manifolds and Pachner moves.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};

use crate::zlinalg::{invariant_factors, IntMatrix};

pub type Vertex = usize;
pub type Facet = [Vertex; 5];

#[derive(Debug, thiserror::Error)]
pub enum ComplexError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("bad facet {0:?}")]
    BadFacet(Vec<Vertex>),
    #[error("not orientable or orientation overrides are incoherent (at facet {0:?})")]
    Orientation(Vec<Vertex>),
    #[error("unknown simplex {0:?}")]
    UnknownSimplex(Vec<Vertex>),
    #[error("move not applicable: {0}")]
    Inapplicable(String),
    #[error("shipped triangulation failed verification: {0}")]
    Shipped(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// k-subsets of a sorted vertex list, in lexicographic order.
pub fn subsets(v: &[Vertex], k: usize) -> Vec<Vec<Vertex>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > v.len() {
        return out;
    }
    loop {
        out.push(idx.iter().map(|&i| v[i]).collect());
        let mut i = k;
        while i > 0 && idx[i - 1] == v.len() - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// A closed oriented combinatorial 4-manifold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Complex4 {
    n_vertices: usize,
    facets: Vec<Facet>,
    signs: Vec<i8>,
}

fn facet_of(v: &[Vertex]) -> Facet {
    [v[0], v[1], v[2], v[3], v[4]]
}

/// Position of the vertex of `f` missing from the 3-cell `t`.
fn opposite(f: &Facet, t: &[Vertex]) -> usize {
    f.iter().position(|v| !t.contains(v)).unwrap()
}

impl Complex4 {
    /// Builds a complex, orienting coherently from facet 0 (sign +1).
    /// `overrides` may fix signs of individual facets; the orientation class is
    /// taken from the first override and all others must agree with it.
    pub fn new(n_vertices: usize, facets: Vec<Facet>, overrides: &[Option<i8>]) -> Result<Complex4, ComplexError> {
        let mut seen = HashSet::new();
        for f in &facets {
            let ok = f.windows(2).all(|w| w[0] < w[1]) && f[4] < n_vertices;
            if !ok || !seen.insert(*f) {
                return Err(ComplexError::BadFacet(f.to_vec()));
            }
        }
        let signs = propagate(&facets, 0, 1)?;
        let mut c = Complex4 { n_vertices, facets, signs };
        let mut first = true;
        for (i, o) in overrides.iter().enumerate() {
            if let Some(s) = *o {
                if first && s != c.signs[i] {
                    c.signs.iter_mut().for_each(|x| *x = -*x);
                }
                first = false;
                if s != c.signs[i] {
                    return Err(ComplexError::Orientation(c.facets[i].to_vec()));
                }
            }
        }
        Ok(c)
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// The same complex with the other orientation class.
    pub fn flipped(&self) -> Complex4 {
        let mut c = self.clone();
        c.signs.iter_mut().for_each(|s| *s = -*s);
        c
    }

    /// All k-cells (sorted (k+1)-subsets), in lexicographic order.
    pub fn faces(&self, k: usize) -> Vec<Vec<Vertex>> {
        let set: BTreeSet<Vec<Vertex>> = self.facets.iter().flat_map(|f| subsets(f, k + 1)).collect();
        set.into_iter().collect()
    }

    pub fn f_vector(&self) -> [usize; 5] {
        let mut out = [0; 5];
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.faces(k).len();
        }
        out
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.f_vector().iter().enumerate().map(|(k, &n)| if k % 2 == 0 { n as i64 } else { -(n as i64) }).sum()
    }

    fn containing(&self, s: &[Vertex]) -> Vec<usize> {
        (0..self.facets.len()).filter(|&i| s.iter().all(|v| self.facets[i].contains(v))).collect()
    }

    /// Maximal simplices of the closed star of σ.
    pub fn star(&self, s: &[Vertex]) -> Result<Vec<Vec<Vertex>>, ComplexError> {
        let s = sorted(s);
        let ids = self.containing(&s);
        if ids.is_empty() {
            return Err(ComplexError::UnknownSimplex(s));
        }
        Ok(ids.into_iter().map(|i| self.facets[i].to_vec()).collect())
    }

    /// Maximal simplices of the link of σ.
    pub fn link(&self, s: &[Vertex]) -> Result<Vec<Vec<Vertex>>, ComplexError> {
        let s = sorted(s);
        Ok(self.star(&s)?.into_iter().map(|f| f.into_iter().filter(|v| !s.contains(v)).collect()).collect())
    }

    /// Closed pseudomanifold, connectivity, orientability and vertex links.
    pub fn check_manifold(&self) -> ManifoldReport {
        let mut problems = Vec::new();
        let mut tets: HashMap<Vec<Vertex>, Vec<usize>> = HashMap::new();
        for (i, f) in self.facets.iter().enumerate() {
            for t in subsets(f, 4) {
                tets.entry(t).or_default().push(i);
            }
        }
        let mut bad: Vec<_> = tets.iter().filter(|(_, v)| v.len() != 2).collect();
        bad.sort();
        for (t, v) in bad {
            problems.push(format!("3-cell {:?} lies in {} facets", t, v.len()));
        }
        if self.facets.is_empty() {
            problems.push("no facets".into());
        }
        if problems.is_empty() {
            let mut reach = vec![false; self.facets.len()];
            let mut todo = vec![0];
            reach[0] = true;
            while let Some(i) = todo.pop() {
                for t in subsets(&self.facets[i], 4) {
                    for &j in &tets[&t] {
                        if !reach[j] {
                            reach[j] = true;
                            todo.push(j);
                        }
                    }
                }
            }
            if let Some(i) = reach.iter().position(|r| !r) {
                problems.push(format!("facet {:?} not connected to facet {:?}", self.facets[i], self.facets[0]));
            }
            if let Err(e) = propagate(&self.facets, 0, 1) {
                problems.push(e.to_string());
            } else if !coherent(&self.facets, &self.signs) {
                problems.push("stored orientation signs are not coherent".into());
            }
        }
        let used: BTreeSet<Vertex> = self.facets.iter().flatten().copied().collect();
        for v in 0..self.n_vertices {
            if !used.contains(&v) {
                problems.push(format!("vertex {} is not in any facet", v));
            }
        }
        if problems.is_empty() {
            for v in used {
                let link = self.link(&[v]).unwrap();
                if let Some(p) = sphere3_problem(&link) {
                    problems.push(format!("link of vertex {}: {}", v, p));
                }
            }
        }
        ManifoldReport { problems, f_vector: self.f_vector(), euler: self.euler_characteristic() }
    }
}

fn sorted(s: &[Vertex]) -> Vec<Vertex> {
    let mut v = s.to_vec();
    v.sort();
    v.dedup();
    v
}

fn coherent(facets: &[Facet], signs: &[i8]) -> bool {
    let mut seen: HashMap<Vec<Vertex>, i8> = HashMap::new();
    for (i, f) in facets.iter().enumerate() {
        for t in subsets(f, 4) {
            let k = opposite(f, &t);
            let induced = signs[i] * if k % 2 == 0 { 1 } else { -1 };
            if let Some(prev) = seen.insert(t, induced) {
                if prev != -induced {
                    return false;
                }
            }
        }
    }
    true
}

/// Coherent signs by propagation across shared 3-cells, seeded at `seed`.
fn propagate(facets: &[Facet], seed: usize, seed_sign: i8) -> Result<Vec<i8>, ComplexError> {
    let mut tets: HashMap<Vec<Vertex>, Vec<usize>> = HashMap::new();
    for (i, f) in facets.iter().enumerate() {
        for t in subsets(f, 4) {
            tets.entry(t).or_default().push(i);
        }
    }
    let mut sign = vec![0i8; facets.len()];
    if facets.is_empty() {
        return Ok(sign);
    }
    let mut order = vec![seed];
    order.extend((0..facets.len()).filter(|&i| i != seed));
    for start in order {
        if sign[start] != 0 {
            continue;
        }
        sign[start] = if start == seed { seed_sign } else { 1 };
        let mut todo = vec![start];
        while let Some(i) = todo.pop() {
            let f = &facets[i];
            for t in subsets(f, 4) {
                let ki = opposite(f, &t);
                for &j in &tets[&t] {
                    if j == i {
                        continue;
                    }
                    let kj = opposite(&facets[j], &t);
                    let want = -sign[i] * if (ki + kj) % 2 == 0 { 1 } else { -1 };
                    if sign[j] == 0 {
                        sign[j] = want;
                        todo.push(j);
                    } else if sign[j] != want {
                        return Err(ComplexError::Orientation(facets[j].to_vec()));
                    }
                }
            }
        }
    }
    Ok(sign)
}

/// Reasons a 3-dimensional complex fails to look like S³ (None if it passes).
fn sphere3_problem(max: &[Vec<Vertex>]) -> Option<String> {
    let mut tri: HashMap<Vec<Vertex>, usize> = HashMap::new();
    for f in max {
        if f.len() != 4 {
            return Some(format!("cell {:?} is not a tetrahedron", f));
        }
        for t in subsets(f, 3) {
            *tri.entry(t).or_default() += 1;
        }
    }
    if let Some((t, n)) = tri.iter().find(|(_, &n)| n != 2) {
        return Some(format!("triangle {:?} lies in {} tetrahedra", t, n));
    }
    let h = homology(max, 3);
    let chi: i64 = h.iter().enumerate().map(|(k, g)| if k % 2 == 0 { g.betti as i64 } else { -(g.betti as i64) }).sum();
    if chi != 0 {
        return Some(format!("Euler characteristic {}", chi));
    }
    let want = [1, 0, 0, 1];
    for (k, g) in h.iter().enumerate() {
        if g.betti != want[k] || !g.torsion.is_empty() {
            return Some(format!("H_{} = {} is not that of S^3", k, g));
        }
    }
    None
}

/// One integral homology group: Z^betti ⊕ torsion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomologyGroup {
    pub betti: usize,
    pub torsion: Vec<u64>,
}

impl std::fmt::Display for HomologyGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut parts = Vec::new();
        if self.betti > 0 {
            parts.push(if self.betti == 1 { "Z".to_string() } else { format!("Z^{}", self.betti) });
        }
        parts.extend(self.torsion.iter().map(|t| format!("Z/{}", t)));
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join("+"))
        }
    }
}

/// Integral simplicial homology H_0..H_dim of the complex generated by `max`.
pub fn homology(max: &[Vec<Vertex>], dim: usize) -> Vec<HomologyGroup> {
    let cells: Vec<Vec<Vec<Vertex>>> = (0..=dim + 1)
        .map(|k| {
            let s: BTreeSet<Vec<Vertex>> = max.iter().flat_map(|f| subsets(&sorted(f), k + 1)).collect();
            s.into_iter().collect()
        })
        .collect();
    // factors[k]: invariant factors of the boundary C_k → C_{k-1}
    let mut rank = vec![0usize; dim + 2];
    let mut torsion = vec![Vec::new(); dim + 2];
    for k in 1..=dim + 1 {
        if cells[k].is_empty() {
            continue;
        }
        let idx: HashMap<&Vec<Vertex>, usize> = cells[k - 1].iter().enumerate().map(|(i, c)| (c, i)).collect();
        let mut m = IntMatrix::zeros(cells[k - 1].len(), cells[k].len());
        for (j, c) in cells[k].iter().enumerate() {
            for s in 0..c.len() {
                let mut face = c.clone();
                face.remove(s);
                let v = if s % 2 == 0 { 1 } else { -1 };
                m.set(idx[&face], j, v.into());
            }
        }
        let d = invariant_factors(&m);
        rank[k] = d.iter().filter(|x| !x.is_zero()).count();
        torsion[k] = d
            .iter()
            .filter(|x| !x.is_zero() && !x.abs().is_one())
            .map(|x| x.abs().to_string().parse().unwrap_or(u64::MAX))
            .collect();
    }
    (0..=dim)
        .map(|k| HomologyGroup {
            betti: cells[k].len() - rank[k] - rank[k + 1],
            torsion: torsion[k + 1].clone(),
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct ManifoldReport {
    pub problems: Vec<String>,
    pub f_vector: [usize; 5],
    pub euler: i64,
}

impl ManifoldReport {
    pub fn passed(&self) -> bool {
        self.problems.is_empty()
    }
}

impl std::fmt::Display for ManifoldReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "f-vector {:?}, euler characteristic {}", self.f_vector, self.euler)?;
        if self.problems.is_empty() {
            writeln!(f, "manifold checks pass")
        } else {
            for p in &self.problems {
                writeln!(f, "FAIL: {}", p)?;
            }
            Ok(())
        }
    }
}

// ---------------------------------------------------------------- Pachner moves

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Move {
    M15,
    M24,
    M33,
    M42,
    M51,
}

impl Move {
    /// Number of vertices of the simplex σ being removed.
    pub fn sigma_size(self) -> usize {
        match self {
            Move::M15 => 5,
            Move::M24 => 4,
            Move::M33 => 3,
            Move::M42 => 2,
            Move::M51 => 1,
        }
    }

    pub fn parse(s: &str) -> Option<Move> {
        match s.replace(['(', ')', ' '], "").replace(',', "-").as_str() {
            "1-5" => Some(Move::M15),
            "2-4" => Some(Move::M24),
            "3-3" => Some(Move::M33),
            "4-2" => Some(Move::M42),
            "5-1" => Some(Move::M51),
            _ => None,
        }
    }

    pub fn all() -> [Move; 5] {
        [Move::M15, Move::M24, Move::M33, Move::M42, Move::M51]
    }
}

impl std::fmt::Display for Move {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let k = 6 - self.sigma_size();
        write!(f, "{}-{}", k, 6 - k)
    }
}

impl Complex4 {
    /// Replaces star(σ) = σ * ∂τ by ∂σ * τ. For (1,5), τ is a fresh vertex
    /// appended to the order; for (5,1), the removed vertex is deleted and
    /// later vertices shift down by one.
    pub fn pachner(&self, mv: Move, sigma: &[Vertex]) -> Result<Complex4, ComplexError> {
        let sigma = sorted(sigma);
        if sigma.len() != mv.sigma_size() {
            return Err(ComplexError::Inapplicable(format!(
                "{} move needs a simplex with {} vertices, got {:?}",
                mv,
                mv.sigma_size(),
                sigma
            )));
        }
        let ids = self.containing(&sigma);
        if ids.is_empty() {
            return Err(ComplexError::UnknownSimplex(sigma));
        }
        let tau: Vec<Vertex> = if mv == Move::M15 {
            vec![self.n_vertices]
        } else {
            let s: BTreeSet<Vertex> =
                ids.iter().flat_map(|&i| self.facets[i].iter().copied()).filter(|v| !sigma.contains(v)).collect();
            s.into_iter().collect()
        };
        let want = 6 - sigma.len();
        if tau.len() != want || ids.len() != want {
            return Err(ComplexError::Inapplicable(format!(
                "star of {:?} is not the join of it with the boundary of a {}-simplex",
                sigma,
                want - 1
            )));
        }
        if mv != Move::M15 {
            if tau.len() < 5 && !self.containing(&tau).is_empty() {
                return Err(ComplexError::Inapplicable(format!("{:?} is already a simplex", tau)));
            }
            let expect: BTreeSet<Vec<Vertex>> = tau
                .iter()
                .map(|t| sorted(&sigma.iter().chain(tau.iter().filter(|x| *x != t)).copied().collect::<Vec<_>>()))
                .collect();
            let have: BTreeSet<Vec<Vertex>> = ids.iter().map(|&i| self.facets[i].to_vec()).collect();
            if expect != have {
                return Err(ComplexError::Inapplicable(format!("star of {:?} has the wrong shape", sigma)));
            }
            if mv == Move::M51 && self.facets.iter().any(|f| f.to_vec() == tau) {
                return Err(ComplexError::Inapplicable(format!("{:?} is already a facet", tau)));
            }
        }
        let removed: HashSet<usize> = ids.iter().copied().collect();
        let keep: Vec<usize> = (0..self.facets.len()).filter(|i| !removed.contains(i)).collect();
        let mut facets: Vec<Facet> = keep.iter().map(|&i| self.facets[i]).collect();
        for s in &sigma {
            let f = sorted(&tau.iter().chain(sigma.iter().filter(|x| *x != s)).copied().collect::<Vec<_>>());
            facets.push(facet_of(&f));
        }
        let mut n = self.n_vertices + usize::from(mv == Move::M15);
        if mv == Move::M51 {
            let gone = sigma[0];
            for f in facets.iter_mut() {
                for v in f.iter_mut() {
                    if *v > gone {
                        *v -= 1;
                    }
                }
            }
            n -= 1;
        }
        let signs = match keep.first() {
            Some(&k) => propagate(&facets, 0, self.signs[k])?,
            None => {
                // every facet was replaced: keep the class of the first removed facet
                let mut c = Complex4 { n_vertices: n, facets: facets.clone(), signs: propagate(&facets, 0, 1)? };
                if !same_class(self, &c) {
                    c.signs.iter_mut().for_each(|s| *s = -*s);
                }
                return Ok(c);
            }
        };
        Ok(Complex4 { n_vertices: n, facets, signs })
    }

    /// Sites where `mv` applies, as σ vertex lists.
    pub fn pachner_sites(&self, mv: Move) -> Vec<Vec<Vertex>> {
        let k = mv.sigma_size() - 1;
        self.faces(k).into_iter().filter(|s| self.pachner(mv, s).is_ok()).collect()
    }
}

/// Whether two complexes sharing no facet layout still agree on orientation:
/// compares the sign induced on a common 3-cell if there is one.
fn same_class(a: &Complex4, b: &Complex4) -> bool {
    for (i, f) in a.facets.iter().enumerate() {
        for t in subsets(f, 4) {
            for (j, g) in b.facets.iter().enumerate() {
                if t.iter().all(|v| g.contains(v)) {
                    let ka = opposite(f, &t);
                    let kb = opposite(g, &t);
                    let sa = a.signs[i] * if ka % 2 == 0 { 1 } else { -1 };
                    let sb = b.signs[j] * if kb % 2 == 0 { 1 } else { -1 };
                    // the outer facet across t is unchanged, so induced signs agree
                    return sa == sb;
                }
            }
        }
    }
    true
}

// ---------------------------------------------------------------- files

impl Complex4 {
    pub fn from_text(text: &str) -> Result<Complex4, ComplexError> {
        let mut n = None;
        let mut facets = Vec::new();
        let mut overrides = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| ComplexError::Parse { line: ln + 1, msg };
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks[0] {
                "dim" => {
                    if toks.get(1) != Some(&"4") {
                        return Err(perr("only dim 4 is supported".into()));
                    }
                }
                "vertices" => n = Some(toks.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| perr("bad vertex count".into()))?),
                _ => {
                    let (vs, sign) = match toks.last() {
                        Some(&"+") => (&toks[..toks.len() - 1], Some(1)),
                        Some(&"-") => (&toks[..toks.len() - 1], Some(-1)),
                        _ => (&toks[..], None),
                    };
                    if vs.len() != 5 {
                        return Err(perr(format!("facet needs 5 vertices, got {}", vs.len())));
                    }
                    let mut f = [0; 5];
                    for (i, t) in vs.iter().enumerate() {
                        f[i] = t.parse().map_err(|_| perr(format!("bad vertex `{}`", t)))?;
                    }
                    facets.push(f);
                    overrides.push(sign);
                }
            }
        }
        let n = n.ok_or_else(|| ComplexError::Parse { line: 0, msg: "missing `vertices` line".into() })?;
        Complex4::new(n, facets, &overrides)
    }

    pub fn load(path: &std::path::Path) -> Result<Complex4, ComplexError> {
        Complex4::from_text(&std::fs::read_to_string(path)?)
    }

    /// Text form with explicit orientation signs.
    pub fn to_text(&self) -> String {
        let mut o = String::from("dim 4\n");
        writeln!(o, "vertices {}", self.n_vertices).unwrap();
        for (f, s) in self.facets.iter().zip(&self.signs) {
            writeln!(o, "{} {} {} {} {} {}", f[0], f[1], f[2], f[3], f[4], if *s > 0 { "+" } else { "-" }).unwrap();
        }
        o
    }
}

const S4_TRI: &str = include_str!("../data/s4.tri");
const CP2_TRI: &str = include_str!("../data/cp2_9.tri");

/// ∂Δ⁵, generated.
pub fn boundary_simplex() -> Complex4 {
    let facets = (0..6).map(|v| facet_of(&(0..6).filter(|&x| x != v).collect::<Vec<_>>())).collect();
    Complex4::new(6, facets, &[]).expect("boundary of the 5-simplex")
}

fn verified(text: &str, f_vector: [usize; 5]) -> Result<Complex4, ComplexError> {
    let c = Complex4::from_text(text)?;
    let r = c.check_manifold();
    if !r.passed() {
        return Err(ComplexError::Shipped(r.problems.join("; ")));
    }
    if r.f_vector != f_vector {
        return Err(ComplexError::Shipped(format!("f-vector {:?}, expected {:?}", r.f_vector, f_vector)));
    }
    Ok(c)
}

/// The minimal 9-vertex CP², re-verified on load.
pub fn cp2_9() -> Result<Complex4, ComplexError> {
    verified(CP2_TRI, [9, 36, 84, 90, 36])
}

/// A shipped triangulation by name (`s4`, `cp2_9`).
pub fn shipped(name: &str) -> Result<Complex4, ComplexError> {
    match name {
        "s4" => verified(S4_TRI, [6, 15, 20, 15, 6]),
        "cp2_9" | "cp2" => cp2_9(),
        _ => Err(ComplexError::Parse { line: 0, msg: format!("no shipped triangulation `{}`", name) }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_simplex_faces() {
        let c = boundary_simplex();
        assert_eq!(c.faces(2).len(), 20);
        assert_eq!(c.f_vector(), [6, 15, 20, 15, 6]);
        assert_eq!(c.euler_characteristic(), 2);
        assert!(c.check_manifold().passed());
        let link = c.link(&[0]).unwrap();
        assert_eq!(link.len(), 5);
        assert!(sphere3_problem(&link).is_none());
        assert_eq!(c.star(&[0, 1, 2, 3, 4]).unwrap(), vec![vec![0, 1, 2, 3, 4]]);
        assert_eq!(shipped("s4").unwrap().facets().len(), 6);
    }

    #[test]
    fn cp2_checks() {
        let c = cp2_9().unwrap();
        let r = c.check_manifold();
        assert!(r.passed(), "{}", r);
        assert_eq!(r.f_vector, [9, 36, 84, 90, 36]);
        assert_eq!(r.euler, 3);
        let h = homology(&c.facets().iter().map(|f| f.to_vec()).collect::<Vec<_>>(), 4);
        let b: Vec<usize> = h.iter().map(|g| g.betti).collect();
        assert_eq!(b, vec![1, 0, 1, 0, 1]);
        assert!(h.iter().all(|g| g.torsion.is_empty()));
    }

    #[test]
    fn broken_complex_fails() {
        let c = boundary_simplex();
        let mut f = c.facets().to_vec();
        f.pop();
        let d = Complex4::new(6, f, &[]).unwrap();
        let r = d.check_manifold();
        assert!(!r.passed());
        assert!(r.problems[0].contains("lies in 1 facets"));
    }

    #[test]
    fn orientation_is_coherent_and_flips() {
        let c = boundary_simplex();
        assert!(coherent(c.facets(), c.signs()));
        let d = c.flipped();
        assert!(coherent(d.facets(), d.signs()));
        assert_eq!(d.signs()[0], -1);
        let t = c.flipped().to_text();
        assert_eq!(Complex4::from_text(&t).unwrap(), d);
    }

    #[test]
    fn incoherent_override_rejected() {
        let txt = "dim 4\nvertices 6\n1 2 3 4 5 +\n0 2 3 4 5 +\n0 1 3 4 5\n0 1 2 4 5\n0 1 2 3 5\n0 1 2 3 4\n";
        assert!(matches!(Complex4::from_text(txt), Err(ComplexError::Orientation(_))));
    }

    #[test]
    fn pachner_roundtrips() {
        let c = boundary_simplex();
        let c1 = c.pachner(Move::M15, &[0, 1, 2, 3, 4]).unwrap();
        assert_eq!(c1.n_vertices(), 7);
        assert_eq!(c1.facets().len(), 10);
        assert!(c1.check_manifold().passed());
        assert_eq!(c1.euler_characteristic(), 2);
        let back = c1.pachner(Move::M51, &[6]).unwrap();
        assert_eq!(back.facets().len(), 6);
        let fs: BTreeSet<Facet> = back.facets().iter().copied().collect();
        assert_eq!(fs, c.facets().iter().copied().collect());
        // (2,4) needs two facets whose opposite vertices are not adjacent
        let sites = c1.pachner_sites(Move::M24);
        assert!(!sites.is_empty());
        let c2 = c1.pachner(Move::M24, &sites[0]).unwrap();
        assert_eq!(c2.facets().len(), 12);
        assert!(c2.check_manifold().passed());
        let new_edge: Vec<Vertex> =
            c1.link(&sites[0]).unwrap().into_iter().flatten().collect::<BTreeSet<_>>().into_iter().collect();
        let c3 = c2.pachner(Move::M42, &new_edge).unwrap();
        let fs: BTreeSet<Facet> = c3.facets().iter().copied().collect();
        assert_eq!(fs, c1.facets().iter().copied().collect());
        for (f, s) in c3.facets().iter().zip(c3.signs()) {
            let i = c1.facets().iter().position(|g| g == f).unwrap();
            assert_eq!(*s, c1.signs()[i]);
        }
    }

    #[test]
    fn pachner_33() {
        let c = boundary_simplex();
        let sites = c.pachner_sites(Move::M33);
        // every triangle of ∂Δ⁵ lies in 3 facets, but its opposite triangle already exists
        assert!(sites.is_empty());
        let c1 = c.pachner(Move::M15, &[0, 1, 2, 3, 4]).unwrap();
        assert!(c1.pachner_sites(Move::M33).is_empty());
        let c1 = c1.pachner(Move::M24, &[0, 1, 2, 3]).unwrap();
        let sites = c1.pachner_sites(Move::M33);
        assert_eq!(sites.len(), 4);
        let c2 = c1.pachner(Move::M33, &sites[0]).unwrap();
        assert_eq!(c2.facets().len(), c1.facets().len());
        assert!(c2.check_manifold().passed());
        assert_eq!(c2.euler_characteristic(), 2);
        let back = c2.pachner(Move::M33, &c1.link(&sites[0]).unwrap().concat().into_iter().collect::<BTreeSet<_>>().into_iter().collect::<Vec<_>>()).unwrap();
        let fs: BTreeSet<Facet> = back.facets().iter().copied().collect();
        assert_eq!(fs, c1.facets().iter().copied().collect());
    }

    #[test]
    fn invalid_site() {
        let c = boundary_simplex();
        assert!(c.pachner(Move::M24, &[0, 1, 2, 3]).is_err());
        assert!(c.pachner(Move::M15, &[0, 1, 2]).is_err());
        assert!(c.pachner(Move::M51, &[0]).is_err());
    }
}

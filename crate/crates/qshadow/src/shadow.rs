//! Closed shadowed simple 2-polyhedra and the shadow state sum.
//!
//! A polyhedron is stored combinatorially: tetrahedral points, 1-strata (arcs
//! between points, or circles) each with three numbered sheets, and regions
//! given by their boundary walks through those sheets. A region is an
//! orientable surface of genus `genus` whose boundary cycles are the walks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;

use crate::category::{CoordinatedCategory, Label};
use crate::scalar::{Scalar, ScalarError};
use crate::zlinalg::{integer_kernel, rank, IntMatrix};

#[derive(Debug, thiserror::Error)]
pub enum ShadowError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid polyhedron: {0}")]
    Invalid(String),
    #[error("shadow addition needs connected summands")]
    NotConnected,
    #[error("unknown shipped shadow `{0}`")]
    Shipped(String),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stratum {
    /// from point p to point q
    Arc(usize, usize),
    Circle,
}

/// One passage of a boundary walk along a sheet of a 1-stratum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Side {
    pub stratum: usize,
    pub sheet: u8,
    /// traversed against the stratum's direction
    pub reversed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    pub gleam_halves: i64,
    /// +1 if the orientation induces the walk direction on the boundary
    pub orient: i8,
    pub genus: u32,
    pub walk: Vec<Vec<Side>>,
}

impl Region {
    pub fn euler_characteristic(&self) -> i64 {
        2 - 2 * self.genus as i64 - self.walk.len() as i64
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShadowPolyhedron {
    pub name: String,
    pub n_points: usize,
    pub strata: Vec<Stratum>,
    pub regions: Vec<Region>,
}

#[derive(Clone, Debug, Default)]
pub struct PolyReport {
    pub problems: Vec<String>,
}

impl PolyReport {
    pub fn passed(&self) -> bool {
        self.problems.is_empty()
    }
}

impl fmt::Display for PolyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return write!(f, "polyhedron ok");
        }
        for p in &self.problems {
            writeln!(f, "{}", p)?;
        }
        Ok(())
    }
}

/// End of an arc at one of its points: (arc, 0 for the start, 1 for the end).
type Germ = (usize, u8);

/// A region passing through a tetrahedral point between two germs.
#[derive(Clone, Copy, Debug)]
struct Corner {
    region: usize,
    point: usize,
    germ_in: Germ,
    germ_out: Germ,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GleamForm {
    /// Z-basis of H₂ as region coefficient vectors
    pub basis: Vec<Vec<BigInt>>,
    pub q: Vec<Vec<BigRational>>,
    pub b2: usize,
    pub nullity: usize,
}

impl ShadowPolyhedron {
    /// Σ_a: a 2-sphere with gleam `halves`/2.
    pub fn sphere(halves: i64) -> ShadowPolyhedron {
        ShadowPolyhedron::surface(0, halves)
    }

    /// A closed orientable surface of the given genus as a single region.
    pub fn surface(genus: u32, halves: i64) -> ShadowPolyhedron {
        let name = match (genus, halves) {
            (0, 0) => "s2_0".to_string(),
            (0, h) if h > 0 => format!("s2_p{}", fmt_halves(h)),
            (0, h) => format!("s2_m{}", fmt_halves(-h)),
            (1, 0) => "torus_0".to_string(),
            (g, h) => format!("genus{}_{}", g, h),
        };
        ShadowPolyhedron {
            name,
            n_points: 0,
            strata: vec![],
            regions: vec![Region { gleam_halves: halves, orient: 1, genus, walk: vec![] }],
        }
    }

    /// Same polyhedron with every gleam negated.
    pub fn negated(&self) -> ShadowPolyhedron {
        let mut p = self.clone();
        p.name = format!("neg_{}", self.name);
        for r in &mut p.regions {
            r.gleam_halves = -r.gleam_halves;
        }
        p
    }

    fn sides(&self) -> impl Iterator<Item = (usize, &Side)> + '_ {
        self.regions.iter().enumerate().flat_map(|(y, r)| r.walk.iter().flatten().map(move |s| (y, s)))
    }

    /// Point reached at the head (`head`) or tail of a traversed side.
    fn endpoint(&self, s: &Side, head: bool) -> Option<Germ> {
        match self.strata.get(s.stratum)? {
            Stratum::Arc(..) => Some((s.stratum, u8::from(head != s.reversed))),
            Stratum::Circle => None,
        }
    }

    fn germ_point(&self, g: Germ) -> usize {
        match self.strata[g.0] {
            Stratum::Arc(p, q) => {
                if g.1 == 0 {
                    p
                } else {
                    q
                }
            }
            Stratum::Circle => unreachable!(),
        }
    }

    fn corners(&self) -> Vec<Corner> {
        let mut out = Vec::new();
        for (y, r) in self.regions.iter().enumerate() {
            for cyc in &r.walk {
                for (i, a) in cyc.iter().enumerate() {
                    let b = &cyc[(i + 1) % cyc.len()];
                    if let (Some(gi), Some(go)) = (self.endpoint(a, true), self.endpoint(b, false)) {
                        out.push(Corner { region: y, point: self.germ_point(gi), germ_in: gi, germ_out: go });
                    }
                }
            }
        }
        out
    }

    /// Structural checks of the simple-polyhedron local models.
    pub fn validate(&self) -> PolyReport {
        let mut problems = Vec::new();
        for (i, s) in self.strata.iter().enumerate() {
            if let Stratum::Arc(p, q) = s {
                if *p >= self.n_points || *q >= self.n_points {
                    problems.push(format!("arc {}: endpoint outside 0..{}", i, self.n_points));
                }
            }
        }
        if !problems.is_empty() {
            return PolyReport { problems };
        }
        let mut uses: BTreeMap<(usize, u8), usize> = BTreeMap::new();
        for (y, s) in self.sides() {
            if s.stratum >= self.strata.len() {
                problems.push(format!("region {}: unknown stratum {}", y, s.stratum));
                continue;
            }
            if s.sheet > 2 {
                problems.push(format!("region {}: sheet {}.{} out of range", y, s.stratum, s.sheet));
                continue;
            }
            *uses.entry((s.stratum, s.sheet)).or_default() += 1;
        }
        if !problems.is_empty() {
            return PolyReport { problems };
        }
        for i in 0..self.strata.len() {
            let n: usize = (0..3).map(|k| uses.get(&(i, k)).copied().unwrap_or(0)).sum();
            let all_once = (0..3).all(|k| uses.get(&(i, k)) == Some(&1));
            if !all_once {
                problems.push(format!("stratum {}: {} adjacent region-sides, expected each of 3 sheets once", i, n));
            }
        }
        for (y, r) in self.regions.iter().enumerate() {
            if r.orient != 1 && r.orient != -1 {
                problems.push(format!("region {}: orientation must be + or -", y));
            }
            for cyc in &r.walk {
                if cyc.is_empty() {
                    problems.push(format!("region {}: empty boundary cycle", y));
                    continue;
                }
                let circles = cyc.iter().filter(|s| self.strata[s.stratum] == Stratum::Circle).count();
                if circles > 0 && cyc.len() > 1 {
                    problems.push(format!("region {}: a circle stratum must form a boundary cycle by itself", y));
                    continue;
                }
                if circles == 0 {
                    for (i, a) in cyc.iter().enumerate() {
                        let b = &cyc[(i + 1) % cyc.len()];
                        let (pa, pb) = (self.germ_point(self.endpoint(a, true).unwrap()), self.germ_point(self.endpoint(b, false).unwrap()));
                        if pa != pb {
                            problems.push(format!("region {}: walk breaks between arcs {} and {} (points {} and {})", y, a.stratum, b.stratum, pa, pb));
                        }
                    }
                }
            }
        }
        if !problems.is_empty() {
            return PolyReport { problems };
        }
        // tetrahedral points: four germs, six corners realizing K4
        let mut germs: Vec<Vec<Germ>> = vec![Vec::new(); self.n_points];
        for (i, s) in self.strata.iter().enumerate() {
            if let Stratum::Arc(p, q) = s {
                germs[*p].push((i, 0));
                germs[*q].push((i, 1));
            }
        }
        let corners = self.corners();
        for (x, gs) in germs.iter().enumerate() {
            if gs.len() != 4 {
                problems.push(format!("point {}: {} arc-germs, expected 4", x, gs.len()));
                continue;
            }
            let pairs: Vec<BTreeSet<Germ>> = corners
                .iter()
                .filter(|c| c.point == x)
                .map(|c| [c.germ_in, c.germ_out].into_iter().collect())
                .collect();
            let distinct: BTreeSet<&BTreeSet<Germ>> = pairs.iter().filter(|p| p.len() == 2).collect();
            if pairs.len() != 6 || distinct.len() != 6 {
                problems.push(format!("point {}: region corners do not match the K4 local model", x));
            }
        }
        PolyReport { problems }
    }

    pub fn is_connected(&self) -> bool {
        // union regions through shared strata
        let n = self.regions.len();
        if n == 0 {
            return false;
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut Vec<usize>, x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        let mut first: BTreeMap<usize, usize> = BTreeMap::new();
        for (y, s) in self.sides() {
            if let Some(&z) = first.get(&s.stratum) {
                let (a, b) = (find(&mut parent, y), find(&mut parent, z));
                parent[a] = b;
            } else {
                first.insert(s.stratum, y);
            }
        }
        let r0 = find(&mut parent, 0);
        (0..n).all(|y| find(&mut parent, y) == r0)
    }

    /// Boundary map from regions to 1-strata (rows strata, columns regions).
    fn boundary_matrix(&self) -> IntMatrix {
        let mut m = vec![vec![0i64; self.regions.len()]; self.strata.len()];
        for (y, s) in self.sides() {
            let sign = self.regions[y].orient as i64 * if s.reversed { -1 } else { 1 };
            m[s.stratum][y] += sign;
        }
        let mut out = IntMatrix::zeros(self.strata.len(), self.regions.len());
        for (i, row) in m.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                out.set(i, j, v.into());
            }
        }
        out
    }

    /// H₂, the gleam form Q_P and its nullity.
    pub fn gleam_form(&self) -> GleamForm {
        let nr = self.regions.len();
        let basis: Vec<Vec<BigInt>> = if self.strata.is_empty() {
            (0..nr).map(|i| (0..nr).map(|j| BigInt::from(i32::from(i == j))).collect()).collect()
        } else {
            integer_kernel(&self.boundary_matrix())
        };
        let b2 = basis.len();
        let mut halves = IntMatrix::zeros(b2, b2);
        let mut q = vec![vec![BigRational::zero(); b2]; b2];
        for a in 0..b2 {
            for b in 0..b2 {
                let s: BigInt = (0..nr).map(|y| &basis[a][y] * &basis[b][y] * BigInt::from(self.regions[y].gleam_halves)).sum();
                q[a][b] = BigRational::new(s.clone(), BigInt::from(2));
                halves.set(a, b, s);
            }
        }
        let r = if b2 == 0 { 0 } else { rank(&halves) };
        GleamForm { basis, q, b2, nullity: b2 - r }
    }

    /// P₁ + P₂: a disk of gleam 0 glued into the first region of each summand.
    pub fn add(&self, other: &ShadowPolyhedron) -> Result<ShadowPolyhedron, ShadowError> {
        if !self.is_connected() || !other.is_connected() {
            return Err(ShadowError::NotConnected);
        }
        let off_s = self.strata.len();
        let off_p = self.n_points;
        let mut strata = self.strata.clone();
        strata.extend(other.strata.iter().map(|s| match s {
            Stratum::Arc(p, q) => Stratum::Arc(p + off_p, q + off_p),
            Stratum::Circle => Stratum::Circle,
        }));
        let c = strata.len();
        strata.push(Stratum::Circle);
        let mut regions = self.regions.clone();
        regions.extend(other.regions.iter().map(|r| Region {
            walk: r
                .walk
                .iter()
                .map(|cyc| cyc.iter().map(|s| Side { stratum: s.stratum + off_s, ..*s }).collect())
                .collect(),
            ..r.clone()
        }));
        let side = |sheet: u8, orient: i8| Side { stratum: c, sheet, reversed: orient < 0 };
        let first_other = self.regions.len();
        let o0 = regions[0].orient;
        regions[0].walk.push(vec![side(0, o0)]);
        let o1 = regions[first_other].orient;
        regions[first_other].walk.push(vec![side(1, o1)]);
        regions.push(Region { gleam_halves: 0, orient: 1, genus: 0, walk: vec![vec![side(2, 1)]] });
        Ok(ShadowPolyhedron {
            name: format!("{}_plus_{}", self.name, other.name),
            n_points: self.n_points + other.n_points,
            strata,
            regions,
        })
    }

    pub fn from_text(text: &str) -> Result<ShadowPolyhedron, ShadowError> {
        let err = |line: usize, msg: &str| ShadowError::Parse { line, msg: msg.to_string() };
        let mut name = None;
        let mut n_points = None;
        let mut strata: BTreeMap<usize, Stratum> = BTreeMap::new();
        let mut regions: BTreeMap<usize, Region> = BTreeMap::new();
        let mut pending: Vec<(usize, usize, Vec<Vec<(usize, u8, bool)>>)> = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let ln = ln + 1;
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<usize>().map_err(|_| err(ln, &format!("expected a number, got `{}`", s)));
            match toks[0] {
                "shadow" => name = Some(toks.get(1).ok_or_else(|| err(ln, "missing name"))?.to_string()),
                "points" => n_points = Some(num(toks.get(1).ok_or_else(|| err(ln, "missing count"))?)?),
                "arc" => {
                    if toks.len() != 4 {
                        return Err(err(ln, "expected `arc <id> <p> <q>`"));
                    }
                    if strata.insert(num(toks[1])?, Stratum::Arc(num(toks[2])?, num(toks[3])?)).is_some() {
                        return Err(err(ln, "duplicate stratum id"));
                    }
                }
                "circle" => {
                    if toks.len() != 2 {
                        return Err(err(ln, "expected `circle <id>`"));
                    }
                    if strata.insert(num(toks[1])?, Stratum::Circle).is_some() {
                        return Err(err(ln, "duplicate stratum id"));
                    }
                }
                "region" => {
                    let id = num(toks.get(1).ok_or_else(|| err(ln, "missing region id"))?)?;
                    let mut i = 2;
                    let mut gleam = None;
                    let mut orient = None;
                    let mut genus = 0;
                    let mut walk = None;
                    while i < toks.len() {
                        match toks[i] {
                            "gleam" => {
                                gleam = Some(toks.get(i + 1).and_then(|s| s.parse::<i64>().ok()).ok_or_else(|| err(ln, "bad gleam"))?);
                                i += 2;
                            }
                            "orient" => {
                                orient = Some(match toks.get(i + 1) {
                                    Some(&"+") => 1,
                                    Some(&"-") => -1,
                                    _ => return Err(err(ln, "orient must be + or -")),
                                });
                                i += 2;
                            }
                            "genus" => {
                                genus = toks.get(i + 1).and_then(|s| s.parse::<u32>().ok()).ok_or_else(|| err(ln, "bad genus"))?;
                                i += 2;
                            }
                            "walk" => {
                                let mut cycles = vec![Vec::new()];
                                for t in &toks[i + 1..] {
                                    if *t == "|" {
                                        cycles.push(Vec::new());
                                        continue;
                                    }
                                    let (rev, body) = match t.strip_prefix('-') {
                                        Some(b) => (true, b),
                                        None => (false, *t),
                                    };
                                    let (s, k) = body.split_once('.').ok_or_else(|| err(ln, &format!("bad side `{}`", t)))?;
                                    let k: u8 = k.parse().ok().filter(|&k| k <= 2).ok_or_else(|| err(ln, &format!("bad sheet in `{}`", t)))?;
                                    cycles.last_mut().unwrap().push((num(s)?, k, rev));
                                }
                                if cycles.len() == 1 && cycles[0].is_empty() {
                                    cycles.clear();
                                }
                                walk = Some(cycles);
                                i = toks.len();
                            }
                            t => return Err(err(ln, &format!("unexpected `{}`", t))),
                        }
                    }
                    let walk = walk.ok_or_else(|| err(ln, "missing walk"))?;
                    let r = Region {
                        gleam_halves: gleam.ok_or_else(|| err(ln, "missing gleam"))?,
                        orient: orient.ok_or_else(|| err(ln, "missing orient"))?,
                        genus,
                        walk: vec![],
                    };
                    if regions.insert(id, r).is_some() {
                        return Err(err(ln, "duplicate region id"));
                    }
                    pending.push((ln, id, walk));
                }
                t => return Err(err(ln, &format!("unknown keyword `{}`", t))),
            }
        }
        let index: BTreeMap<usize, usize> = strata.keys().enumerate().map(|(i, &k)| (k, i)).collect();
        for (ln, id, walk) in pending {
            let mut cycles = Vec::new();
            for cyc in walk {
                let mut out = Vec::new();
                for (s, sheet, reversed) in cyc {
                    let stratum = *index.get(&s).ok_or_else(|| err(ln, &format!("unknown stratum {}", s)))?;
                    out.push(Side { stratum, sheet, reversed });
                }
                cycles.push(out);
            }
            regions.get_mut(&id).unwrap().walk = cycles;
        }
        Ok(ShadowPolyhedron {
            name: name.ok_or_else(|| err(1, "missing `shadow <name>` header"))?,
            n_points: n_points.unwrap_or(0),
            strata: strata.into_values().collect(),
            regions: regions.into_values().collect(),
        })
    }

    pub fn load(path: &std::path::Path) -> Result<ShadowPolyhedron, ShadowError> {
        ShadowPolyhedron::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut o = format!("shadow {}\npoints {}\n", self.name, self.n_points);
        for (i, s) in self.strata.iter().enumerate() {
            match s {
                Stratum::Arc(p, q) => o += &format!("arc {} {} {}\n", i, p, q),
                Stratum::Circle => o += &format!("circle {}\n", i),
            }
        }
        for (i, r) in self.regions.iter().enumerate() {
            o += &format!("region {} gleam {} orient {}", i, r.gleam_halves, if r.orient > 0 { "+" } else { "-" });
            if r.genus > 0 {
                o += &format!(" genus {}", r.genus);
            }
            o += " walk";
            for (c, cyc) in r.walk.iter().enumerate() {
                if c > 0 {
                    o += " |";
                }
                for s in cyc {
                    o += &format!(" {}{}.{}", if s.reversed { "-" } else { "" }, s.stratum, s.sheet);
                }
            }
            o += "\n";
        }
        o
    }
}

fn fmt_halves(h: i64) -> String {
    if h % 2 == 0 {
        format!("{}", h / 2)
    } else {
        format!("{}h", h)
    }
}

const S2_0: &str = include_str!("../data/s2_0.shadow");
const S2_P1: &str = include_str!("../data/s2_p1.shadow");
const S2_M1: &str = include_str!("../data/s2_m1.shadow");
const S2P1_PLUS_S2M1: &str = include_str!("../data/s2p1_plus_s2m1.shadow");
const TORUS_0: &str = include_str!("../data/torus_0.shadow");

pub const SHIPPED_SHADOWS: [&str; 5] = ["s2_0", "s2_p1", "s2_m1", "s2p1_plus_s2m1", "torus_0"];

/// A shipped shadow by name (with or without the `.shadow` suffix).
pub fn shipped_shadow(name: &str) -> Result<ShadowPolyhedron, ShadowError> {
    let text = match name.trim_end_matches(".shadow") {
        "s2_0" => S2_0,
        "s2_p1" => S2_P1,
        "s2_m1" => S2_M1,
        "s2p1_plus_s2m1" => S2P1_PLUS_S2M1,
        "torus_0" => TORUS_0,
        _ => return Err(ShadowError::Shipped(name.to_string())),
    };
    ShadowPolyhedron::from_text(text)
}

/// dim Hom(V₀, Vi ⊗ Vj ⊗ Vk) in a multiplicity-free category.
pub fn circle_stratum_hom_dim(cat: &CoordinatedCategory, i: Label, j: Label, k: Label) -> u32 {
    u32::from(cat.admissible(i, j, k))
}

/// The label a side sees on its stratum, oriented along the stratum.
fn side_label(cat: &CoordinatedCategory, p: &ShadowPolyhedron, y: usize, s: &Side, phi: &[Label]) -> Label {
    if (p.regions[y].orient > 0) != s.reversed {
        phi[y]
    } else {
        cat.star(phi[y])
    }
}

/// Per-coloring weight Π_Y dim^χ ν'^{2gl} Π_strata N Π_x |x|.
fn coloring_weight(cat: &CoordinatedCategory, p: &ShadowPolyhedron, phi: &[Label], corners: &[Vec<Corner>], germs: &[Vec<Germ>]) -> Result<Scalar, ShadowError> {
    let b = &cat.backend;
    let mut w = b.one();
    for (y, r) in p.regions.iter().enumerate() {
        let c = phi[y];
        w = &w * &cat.dim[c].pow(r.euler_characteristic())?;
        w = &w * &cat.twistp[c].pow(r.gleam_halves)?;
    }
    for (x, cs) in corners.iter().enumerate() {
        // φ_ab: color of the region x x_a x_b
        let mut f = [[0usize; 4]; 4];
        let gi = |g: Germ| germs[x].iter().position(|&h| h == g).unwrap();
        for c in cs {
            let (a, bb) = (gi(c.germ_in), gi(c.germ_out));
            let col = if p.regions[c.region].orient > 0 { phi[c.region] } else { cat.star(phi[c.region]) };
            f[bb][a] = col;
            f[a][bb] = cat.star(col);
        }
        let t = [f[0][1], f[0][2], f[3][0], f[3][2], f[1][3], f[2][1]];
        w = &w * &cat.sixj_or_zero(t);
    }
    Ok(w)
}

/// The shadow state sum D^{−b₂−null} Σ_φ σ_φ |φ| of a closed polyhedron.
pub fn shadow_state_sum(p: &ShadowPolyhedron, cat: &CoordinatedCategory) -> Result<Scalar, ShadowError> {
    let rep = p.validate();
    if !rep.passed() {
        return Err(ShadowError::Invalid(rep.problems.join("; ")));
    }
    let n = cat.rank();
    let nr = p.regions.len();
    // strata constraints as lists of (region, side)
    let mut around: Vec<Vec<(usize, Side)>> = vec![Vec::new(); p.strata.len()];
    for (y, s) in p.sides() {
        around[s.stratum].push((y, *s));
    }
    // a stratum can be checked once its largest region index is colored
    let mut check_at: Vec<Vec<usize>> = vec![Vec::new(); nr];
    for (i, a) in around.iter().enumerate() {
        let last = a.iter().map(|(y, _)| *y).max().unwrap();
        check_at[last].push(i);
    }
    let mut germs: Vec<Vec<Germ>> = vec![Vec::new(); p.n_points];
    for (i, s) in p.strata.iter().enumerate() {
        if let Stratum::Arc(a, b) = s {
            germs[*a].push((i, 0));
            germs[*b].push((i, 1));
        }
    }
    let mut corners: Vec<Vec<Corner>> = vec![Vec::new(); p.n_points];
    for c in p.corners() {
        corners[c.point].push(c);
    }
    let ok = |phi: &[Label], y: usize| {
        check_at[y].iter().all(|&i| {
            let l: Vec<Label> = around[i].iter().map(|(z, s)| side_label(cat, p, *z, s, phi)).collect();
            circle_stratum_hom_dim(cat, l[0], l[1], l[2]) == 1
        })
    };
    fn walk(
        y: usize,
        nr: usize,
        n: usize,
        phi: &mut Vec<Label>,
        ok: &dyn Fn(&[Label], usize) -> bool,
        leaf: &mut dyn FnMut(&[Label]) -> Result<(), ShadowError>,
    ) -> Result<(), ShadowError> {
        if y == nr {
            return leaf(phi);
        }
        for a in 0..n {
            phi[y] = a;
            if ok(phi, y) {
                walk(y + 1, nr, n, phi, ok, leaf)?;
            }
        }
        Ok(())
    }
    let b = &cat.backend;
    let parts: Vec<Result<Scalar, ShadowError>> = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut acc = b.zero();
            let mut phi = vec![0; nr];
            phi[0] = first;
            if nr == 0 || !ok(&phi, 0) {
                return Ok(acc);
            }
            walk(1, nr, n, &mut phi, &ok, &mut |phi| {
                acc = &acc + &coloring_weight(cat, p, phi, &corners, &germs)?;
                Ok(())
            })?;
            Ok(acc)
        })
        .collect();
    let mut total = b.zero();
    for part in parts {
        total = &total + &part?;
    }
    let g = p.gleam_form();
    let pre = cat.global_dim.pow(-((g.b2 + g.nullity) as i64))?;
    Ok(&total * &pre)
}

impl fmt::Display for GleamForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "b2 = {}, nullity = {}", self.b2, self.nullity)?;
        for row in &self.q {
            let r: Vec<String> = row
                .iter()
                .map(|x| if x.is_integer() { x.to_integer().to_string() } else { x.to_string() })
                .collect();
            writeln!(f, "[{}]", r.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::category::{builtin, BUILTIN_NAMES};
    use crate::simplicial::subsets;
    use num_complex::Complex64;

    fn close(a: &Scalar, b: Complex64, tol: f64) -> bool {
        (a.to_c64() - b).norm() < tol
    }

    fn zeta8(k: i64) -> Complex64 {
        Complex64::from_polar(1.0, std::f64::consts::PI * k as f64 / 4.0)
    }

    /// Dual 2-skeleton of ∂Δ⁴: points = tetrahedra, arcs = triangles, regions = edges.
    fn dual_spine() -> ShadowPolyhedron {
        let v = [0, 1, 2, 3, 4];
        let tets = subsets(&v, 4);
        let tris = subsets(&v, 3);
        let tet_id = |t: &[usize]| {
            let mut t = t.to_vec();
            t.sort();
            tets.iter().position(|x| *x == t).unwrap()
        };
        let tri_id = |t: &[usize]| {
            let mut t = t.to_vec();
            t.sort();
            tris.iter().position(|x| *x == t).unwrap()
        };
        let strata = tris
            .iter()
            .map(|t| {
                let rest: Vec<usize> = v.iter().copied().filter(|x| !t.contains(x)).collect();
                Stratum::Arc(tet_id(&[t.clone(), vec![rest[0]]].concat()), tet_id(&[t.clone(), vec![rest[1]]].concat()))
            })
            .collect();
        let regions = subsets(&v, 2)
            .iter()
            .map(|e| {
                let (i, j) = (e[0], e[1]);
                let k: Vec<usize> = v.iter().copied().filter(|x| !e.contains(x)).collect();
                let side = |kk: usize, reversed: bool| {
                    let t = tri_id(&[i, j, kk]);
                    let edges = subsets(&tris[t], 2);
                    let sheet = edges.iter().position(|x| *x == vec![i, j]).unwrap() as u8;
                    Side { stratum: t, sheet, reversed }
                };
                Region { gleam_halves: 0, orient: 1, genus: 0, walk: vec![vec![side(k[0], true), side(k[1], false), side(k[2], true)]] }
            })
            .collect();
        ShadowPolyhedron { name: "dual_spine".into(), n_points: 5, strata, regions }
    }

    #[test]
    fn shipped_files_match_builders() {
        assert_eq!(shipped_shadow("s2_0").unwrap().regions, ShadowPolyhedron::sphere(0).regions);
        assert_eq!(shipped_shadow("s2_p1").unwrap().regions, ShadowPolyhedron::sphere(2).regions);
        assert_eq!(shipped_shadow("s2_m1.shadow").unwrap().regions, ShadowPolyhedron::sphere(-2).regions);
        assert_eq!(shipped_shadow("torus_0").unwrap().regions, ShadowPolyhedron::surface(1, 0).regions);
        let sum = ShadowPolyhedron::sphere(2).add(&ShadowPolyhedron::sphere(-2)).unwrap();
        let shipped = shipped_shadow("s2p1_plus_s2m1").unwrap();
        assert_eq!((shipped.strata, shipped.regions), (sum.strata, sum.regions));
        for name in SHIPPED_SHADOWS {
            let p = shipped_shadow(name).unwrap();
            assert!(p.validate().passed(), "{}", name);
            assert_eq!(ShadowPolyhedron::from_text(&p.to_text()).unwrap(), p);
        }
    }

    #[test]
    fn validation() {
        assert!(ShadowPolyhedron::sphere(0).validate().passed());
        let dangling = ShadowPolyhedron::from_text("shadow bad\npoints 0\ncircle 0\nregion 0 gleam 0 orient + walk 0.0\nregion 1 gleam 0 orient + walk 0.1\n").unwrap();
        assert!(!dangling.validate().passed());
        let sum = ShadowPolyhedron::sphere(2).add(&ShadowPolyhedron::sphere(-2)).unwrap();
        assert!(sum.validate().passed());
        assert!(dual_spine().validate().passed());
        let mut broken = dual_spine();
        broken.regions[0].walk[0].swap(0, 1);
        assert!(!broken.validate().passed());
        assert!(ShadowPolyhedron::from_text("shadow x\nregion 0 gleam 0 orient ? walk\n").is_err());
    }

    #[test]
    fn gleam_forms() {
        let g = ShadowPolyhedron::sphere(0).gleam_form();
        assert_eq!((g.b2, g.nullity), (1, 1));
        assert!(g.q[0][0].is_zero());
        let g = ShadowPolyhedron::sphere(2).gleam_form();
        assert_eq!((g.b2, g.nullity), (1, 0));
        assert_eq!(g.q[0][0], BigRational::from_integer(1.into()));
        let g = ShadowPolyhedron::sphere(2).add(&ShadowPolyhedron::sphere(-2)).unwrap().gleam_form();
        assert_eq!((g.b2, g.nullity), (2, 0));
        let det = &g.q[0][0] * &g.q[1][1] - &g.q[0][1] * &g.q[1][0];
        assert_eq!(det, BigRational::from_integer((-1).into()));
        // integral, odd, unimodular and indefinite of rank 2: isometric to diag(1, -1)
        assert!(g.q.iter().flatten().all(|x| x.is_integer()));
        assert!(g.q.iter().enumerate().any(|(i, r)| r[i].to_integer() % 2 != BigInt::zero()));
        let g = dual_spine().gleam_form();
        assert_eq!((g.b2, g.nullity), (4, 4));
        let g = ShadowPolyhedron::surface(1, 0).gleam_form();
        assert_eq!((g.b2, g.nullity), (1, 1));
    }

    #[test]
    fn addition_construction() {
        let p = ShadowPolyhedron::sphere(0).add(&ShadowPolyhedron::sphere(0)).unwrap();
        assert_eq!(p.regions.len(), 3);
        assert_eq!(p.strata, vec![Stratum::Circle]);
        assert!(p.regions.iter().all(|r| r.gleam_halves == 0));
        let two = ShadowPolyhedron { regions: vec![], ..ShadowPolyhedron::sphere(0) };
        assert!(matches!(two.add(&ShadowPolyhedron::sphere(0)), Err(ShadowError::NotConnected)));
    }

    #[test]
    fn hom_dims() {
        let s = builtin("semion").unwrap();
        assert_eq!(circle_stratum_hom_dim(&s, 1, 1, 0), 1);
        assert_eq!(circle_stratum_hom_dim(&s, 1, 0, 0), 0);
        let f = builtin("fibonacci").unwrap();
        assert_eq!(circle_stratum_hom_dim(&f, 1, 1, 1), 1);
    }

    #[test]
    fn sphere_values() {
        for name in BUILTIN_NAMES {
            let c = builtin(name).unwrap();
            let v = shadow_state_sum(&ShadowPolyhedron::sphere(0), &c).unwrap();
            assert!(close(&v, Complex64::new(1.0, 0.0), 1e-9), "{}", name);
        }
        let s = builtin("semion").unwrap();
        let p1 = shadow_state_sum(&ShadowPolyhedron::sphere(2), &s).unwrap();
        assert_eq!(p1, s.backend.zeta(8, 1));
        let m1 = shadow_state_sum(&ShadowPolyhedron::sphere(-2), &s).unwrap();
        assert_eq!(m1, s.backend.zeta(8, 7));
        let sum = shadow_state_sum(&shipped_shadow("s2p1_plus_s2m1").unwrap(), &s).unwrap();
        assert_eq!(sum, s.backend.one());
        assert!(close(&p1, zeta8(1), 1e-12));
    }

    #[test]
    fn addition_and_stability() {
        let base = [ShadowPolyhedron::sphere(0), ShadowPolyhedron::sphere(2), ShadowPolyhedron::sphere(-2), ShadowPolyhedron::surface(1, 0)];
        for name in BUILTIN_NAMES {
            let c = builtin(name).unwrap();
            let vals: Vec<Scalar> = base.iter().map(|p| shadow_state_sum(p, &c).unwrap()).collect();
            for (i, p) in base.iter().enumerate() {
                for (j, q) in base.iter().enumerate() {
                    let v = shadow_state_sum(&p.add(q).unwrap(), &c).unwrap();
                    let w = &vals[i] * &vals[j];
                    assert!(v.approx_eq(&w, 1e-9), "{} {} {}", name, p.name, q.name);
                }
            }
        }
    }

    #[test]
    fn negation_conjugates() {
        for name in ["semion", "fibonacci", "ising"] {
            let c = builtin(name).unwrap();
            for h in [1, 2, 3] {
                let p = ShadowPolyhedron::sphere(h);
                let a = shadow_state_sum(&p, &c).unwrap();
                let b = shadow_state_sum(&p.negated(), &c).unwrap();
                assert!(b.approx_eq(&a.conj(), 1e-9), "{} {}", name, h);
            }
        }
    }

    #[test]
    fn torus_closed_form() {
        for name in BUILTIN_NAMES {
            let c = builtin(name).unwrap();
            let v = shadow_state_sum(&ShadowPolyhedron::surface(1, 0), &c).unwrap();
            let d2 = c.global_dim.to_c64().norm_sqr();
            assert!(close(&v, Complex64::new(c.rank() as f64 / d2, 0.0), 1e-9), "{}", name);
        }
    }

    #[test]
    fn dual_spine_of_s3() {
        let p = dual_spine();
        for name in BUILTIN_NAMES {
            let c = builtin(name).unwrap();
            let v = shadow_state_sum(&p, &c).unwrap();
            assert!(close(&v, Complex64::new(1.0, 0.0), 1e-9), "{}: {:?}", name, v.to_c64());
        }
    }
}

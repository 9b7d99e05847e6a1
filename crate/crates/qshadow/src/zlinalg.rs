//! Integer and modular linear algebra: Smith normal form, kernels.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<BigInt>,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self.get(r, c).to_string()).collect();
            write!(f, "[{}]", row.join(","))?;
        }
        write!(f, "]")
    }
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> IntMatrix {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> IntMatrix {
        let mut m = IntMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> IntMatrix {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = IntMatrix::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged matrix");
            for (j, v) in row.iter().enumerate() {
                m.set(i, j, BigInt::from(*v));
            }
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> &BigInt {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: BigInt) {
        self.data[r * self.cols + c] = v;
    }

    pub fn mul(&self, o: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, o.rows);
        let mut out = IntMatrix::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.get(k, j);
                    if !b.is_zero() {
                        out.data[i * o.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut t = IntMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for r in 0..self.rows {
                self.data.swap(r * self.cols + a, r * self.cols + b);
            }
        }
    }

    /// row[a] += k * row[b]
    fn add_row(&mut self, a: usize, b: usize, k: &BigInt) {
        for c in 0..self.cols {
            let v = self.get(b, c) * k;
            if !v.is_zero() {
                self.data[a * self.cols + c] += v;
            }
        }
    }

    /// col[a] += k * col[b]
    fn add_col(&mut self, a: usize, b: usize, k: &BigInt) {
        for r in 0..self.rows {
            let v = self.get(r, b) * k;
            if !v.is_zero() {
                self.data[r * self.cols + a] += v;
            }
        }
    }

    fn neg_row(&mut self, a: usize) {
        for c in 0..self.cols {
            let v = -self.get(a, c);
            self.set(a, c, v);
        }
    }

    /// Determinant by fraction-free elimination (square matrices).
    pub fn det(&self) -> BigInt {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            let Some(p) = (k..n).find(|&r| !a.get(r, k).is_zero()) else {
                return BigInt::zero();
            };
            if p != k {
                a.swap_rows(p, k);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (a.get(i, j) * a.get(k, k) - a.get(i, k) * a.get(k, j)) / &prev;
                    a.set(i, j, v);
                }
            }
            prev = a.get(k, k).clone();
        }
        if n == 0 {
            BigInt::one()
        } else {
            sign * a.get(n - 1, n - 1)
        }
    }
}

/// Smith normal form: returns (U, S, V) with U·M·V = S, U and V unimodular,
/// S diagonal with non-negative entries d₁ | d₂ | ….
pub fn smith_normal_form(m: &IntMatrix) -> (IntMatrix, IntMatrix, IntMatrix) {
    let (r, c) = (m.rows, m.cols);
    let mut s = m.clone();
    let mut u = IntMatrix::identity(r);
    let mut v = IntMatrix::identity(c);
    let mut t = 0;
    while t < r.min(c) {
        // pivot: smallest nonzero absolute value in the remaining block
        let mut best: Option<(usize, usize)> = None;
        for i in t..r {
            for j in t..c {
                let x = s.get(i, j);
                if !x.is_zero() && best.map_or(true, |(bi, bj)| x.abs() < s.get(bi, bj).abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        s.swap_rows(t, pi);
        u.swap_rows(t, pi);
        s.swap_cols(t, pj);
        v.swap_cols(t, pj);
        loop {
            for i in t + 1..r {
                while !s.get(i, t).is_zero() {
                    let nq = -nearest_quot(s.get(i, t), s.get(t, t));
                    s.add_row(i, t, &nq);
                    u.add_row(i, t, &nq);
                    if !s.get(i, t).is_zero() {
                        s.swap_rows(t, i);
                        u.swap_rows(t, i);
                    }
                }
            }
            let mut col_clear = true;
            for j in t + 1..c {
                while !s.get(t, j).is_zero() {
                    let nq = -nearest_quot(s.get(t, j), s.get(t, t));
                    s.add_col(j, t, &nq);
                    v.add_col(j, t, &nq);
                    if !s.get(t, j).is_zero() {
                        s.swap_cols(t, j);
                        v.swap_cols(t, j);
                        col_clear = false;
                    }
                }
            }
            if !col_clear {
                continue;
            }
            // pivot must divide the rest of the block
            let piv = s.get(t, t).clone();
            let fix = (t + 1..r).find(|&i| (t + 1..c).any(|j| !(s.get(i, j) % &piv).is_zero()));
            match fix {
                Some(i) => {
                    let one = BigInt::one();
                    s.add_row(t, i, &one);
                    u.add_row(t, i, &one);
                }
                None => break,
            }
        }
        if s.get(t, t).is_negative() {
            s.neg_row(t);
            u.neg_row(t);
        }
        t += 1;
    }
    (u, s, v)
}

fn nearest_quot(a: &BigInt, b: &BigInt) -> BigInt {
    // round(a / b)
    let two = BigInt::from(2);
    let (q, r) = a.div_mod_floor(b);
    if (&r * &two).abs() > b.abs() {
        q + 1
    } else {
        q
    }
}

/// Diagonal of a Smith form.
pub fn invariant_factors(m: &IntMatrix) -> Vec<BigInt> {
    let (_, s, _) = smith_normal_form(m);
    (0..m.rows.min(m.cols)).map(|i| s.get(i, i).clone()).collect()
}

pub fn rank(m: &IntMatrix) -> usize {
    rref(m).1.len()
}

fn rref(m: &IntMatrix) -> (Vec<Vec<BigRational>>, Vec<usize>) {
    let mut a: Vec<Vec<BigRational>> = (0..m.rows)
        .map(|i| (0..m.cols).map(|j| BigRational::from_integer(m.get(i, j).clone())).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..m.cols {
        let Some(p) = (row..m.rows).find(|&r| !a[r][col].is_zero()) else { continue };
        a.swap(row, p);
        let piv = a[row][col].clone();
        for x in a[row].iter_mut() {
            *x = &*x / &piv;
        }
        for r in 0..m.rows {
            if r != row && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for k in col..m.cols {
                    let d = &a[row][k] * &f;
                    a[r][k] -= d;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == m.rows {
            break;
        }
    }
    (a, pivots)
}

/// Basis of the rational kernel.
pub fn rational_kernel(m: &IntMatrix) -> Vec<Vec<BigRational>> {
    let (a, pivots) = rref(m);
    let free: Vec<usize> = (0..m.cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = vec![BigRational::zero(); m.cols];
            x[f] = BigRational::one();
            for (r, &p) in pivots.iter().enumerate() {
                x[p] = -a[r][f].clone();
            }
            x
        })
        .collect()
}

/// A Z-basis of the integer kernel {x : M·x = 0}.
pub fn integer_kernel(m: &IntMatrix) -> Vec<Vec<BigInt>> {
    let (_, s, v) = smith_normal_form(m);
    let r = (0..m.rows.min(m.cols)).filter(|&i| !s.get(i, i).is_zero()).count();
    (r..m.cols).map(|j| (0..m.cols).map(|i| v.get(i, j).clone()).collect()).collect()
}

/// A generator of a solution module mod N, with its additive order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModGenerator {
    pub vector: Vec<u64>,
    pub order: u64,
}

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

fn modinv(a: u64, p: u64) -> u64 {
    let (g, x, _) = egcd(a as i128, p as i128);
    debug_assert_eq!(g, 1);
    x.rem_euclid(p as i128) as u64
}

fn egcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = egcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

/// Generators of {x : M x ≡ 0 mod N}. The module is the direct sum of the
/// cyclic subgroups spanned by the generators; for prime N they form a basis.
pub fn nullspace_mod(m: &IntMatrix, n: u64) -> Vec<ModGenerator> {
    assert!(n >= 2, "modulus must be at least 2");
    if is_prime(n) {
        return nullspace_prime(m, n);
    }
    let (_, s, v) = smith_normal_form(m);
    let nb = BigInt::from(n);
    let mut gens = Vec::new();
    for i in 0..m.cols {
        let d = if i < m.rows { s.get(i, i).clone() } else { BigInt::zero() };
        let g = d.gcd(&nb); // gcd(0, N) = N
        if g.is_one() {
            continue;
        }
        let step = (&nb / &g).to_u64().unwrap();
        let vector = (0..m.cols)
            .map(|r| (v.get(r, i) * BigInt::from(step)).mod_floor(&nb).to_u64().unwrap())
            .collect();
        gens.push(ModGenerator { vector, order: g.to_u64().unwrap() });
    }
    gens
}

fn nullspace_prime(m: &IntMatrix, p: u64) -> Vec<ModGenerator> {
    let pb = BigInt::from(p);
    let mut a: Vec<Vec<u64>> = (0..m.rows)
        .map(|i| (0..m.cols).map(|j| m.get(i, j).mod_floor(&pb).to_u64().unwrap()).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..m.cols {
        if row == m.rows {
            break;
        }
        let Some(pr) = (row..m.rows).find(|&r| a[r][col] != 0) else { continue };
        a.swap(row, pr);
        let inv = modinv(a[row][col], p);
        for x in a[row].iter_mut() {
            *x = *x * inv % p;
        }
        for r in 0..m.rows {
            if r != row && a[r][col] != 0 {
                let f = a[r][col];
                for k in col..m.cols {
                    a[r][k] = (a[r][k] + p * p - f * a[row][k] % p) % p;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    let free: Vec<usize> = (0..m.cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = vec![0u64; m.cols];
            x[f] = 1;
            for (r, &pc) in pivots.iter().enumerate() {
                x[pc] = (p - a[r][f]) % p;
            }
            ModGenerator { vector: x, order: p }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn diag(m: &IntMatrix) -> Vec<i64> {
        invariant_factors(m).iter().map(|x| x.to_i64().unwrap()).collect()
    }

    fn check_snf(m: &IntMatrix) {
        let (u, s, v) = smith_normal_form(m);
        assert_eq!(u.mul(m).mul(&v), s);
        assert!(u.det().abs().is_one() && v.det().abs().is_one());
        for i in 0..s.rows {
            for j in 0..s.cols {
                if i != j {
                    assert!(s.get(i, j).is_zero());
                }
            }
        }
        let d: Vec<BigInt> = (0..s.rows.min(s.cols)).map(|i| s.get(i, i).clone()).collect();
        for w in d.windows(2) {
            assert!(!w[0].is_negative());
            if w[0].is_zero() {
                assert!(w[1].is_zero());
            } else {
                assert!((&w[1] % &w[0]).is_zero());
            }
        }
    }

    #[test]
    fn snf_examples() {
        assert_eq!(diag(&IntMatrix::from_rows(&[vec![2, 0], vec![0, 3]])), vec![1, 6]);
        assert_eq!(diag(&IntMatrix::from_rows(&[vec![0]])), vec![0]);
        assert_eq!(diag(&IntMatrix::from_rows(&[vec![1, 2], vec![3, 4]])), vec![1, 2]);
        check_snf(&IntMatrix::from_rows(&[vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]]));
    }

    #[test]
    fn integer_kernel_is_saturated() {
        let m = IntMatrix::from_rows(&[vec![2, 4, 6], vec![1, 2, 3]]);
        let k = integer_kernel(&m);
        assert_eq!(k.len(), 2);
        for x in &k {
            for r in 0..2 {
                let dot: BigInt = (0..3).map(|c| m.get(r, c) * &x[c]).sum();
                assert!(dot.is_zero());
            }
        }
        // the basis spans (2,-1,0): solve in the 2x2 minor with unit determinant
        let basis = IntMatrix::from_rows(&k.iter().map(|x| x.iter().map(|v| v.try_into().unwrap()).collect()).collect::<Vec<Vec<i64>>>());
        let f = invariant_factors(&basis);
        assert!(f.iter().all(|d| d.is_one()));
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(rational_kernel(&IntMatrix::from_rows(&[vec![0]])).len(), 1);
        assert!(rational_kernel(&IntMatrix::identity(2)).is_empty());
        let k = rational_kernel(&IntMatrix::from_rows(&[vec![1, -1]]));
        assert_eq!(k.len(), 1);
        assert_eq!(k[0][0], k[0][1]);
    }

    #[test]
    fn nullspace_examples() {
        let g = nullspace_mod(&IntMatrix::from_rows(&[vec![2]]), 4);
        assert_eq!(g, vec![ModGenerator { vector: vec![2], order: 2 }]);
        assert!(nullspace_mod(&IntMatrix::identity(3), 6).is_empty());
        let g = nullspace_mod(&IntMatrix::from_rows(&[vec![1, 1]]), 2);
        assert_eq!(g, vec![ModGenerator { vector: vec![1, 1], order: 2 }]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn rank_nullity(entries in proptest::collection::vec(-9i64..=9, 48)) {
            let rows: Vec<Vec<i64>> = entries.chunks(8).map(|c| c.to_vec()).collect();
            let m = IntMatrix::from_rows(&rows);
            let k = rational_kernel(&m);
            prop_assert_eq!(rank(&m) + k.len(), 8);
            check_snf(&m);
            let nonzero = invariant_factors(&m).iter().filter(|d| !d.is_zero()).count();
            prop_assert_eq!(nonzero, rank(&m));
        }

        #[test]
        fn nullspace_mod_solves(entries in proptest::collection::vec(-5i64..=5, 12), n in 2u64..9) {
            let rows: Vec<Vec<i64>> = entries.chunks(4).map(|c| c.to_vec()).collect();
            let m = IntMatrix::from_rows(&rows);
            let gens = nullspace_mod(&m, n);
            // every generator solves the system, and the module size matches brute force
            for g in &gens {
                for r in 0..3 {
                    let s: i64 = (0..4).map(|c| rows[r][c] * g.vector[c] as i64).sum();
                    prop_assert_eq!(s.rem_euclid(n as i64), 0);
                }
            }
            let size: u64 = gens.iter().map(|g| g.order).product();
            let mut brute = 0;
            for x in 0..n.pow(4) {
                let v: Vec<i64> = (0..4).map(|i| ((x / n.pow(i)) % n) as i64).collect();
                if (0..3).all(|r| (0..4).map(|c| rows[r][c] * v[c]).sum::<i64>().rem_euclid(n as i64) == 0) {
                    brute += 1;
                }
            }
            prop_assert_eq!(size, brute);
        }
    }
}

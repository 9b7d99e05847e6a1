//! Exact arithmetic in cyclotomic fields, with a complex-double fallback.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Default tolerance for float comparisons.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum ScalarError {
    #[error("cyclotomic order must be positive")]
    ZeroOrder,
    #[error("division by zero")]
    DivisionByZero,
    #[error("field mismatch: Q(z_{0}) vs Q(z_{1})")]
    FieldMismatch(u32, u32),
    #[error("backend mismatch: exact vs float operand")]
    BackendMismatch,
    #[error("bad scalar literal `{0}`")]
    Parse(String),
}

/// Reduction data for Q(ζ_n).
#[derive(Debug)]
pub struct CycloField {
    order: u32,
    /// Monic Φ_n, low degree first.
    phi: Vec<BigInt>,
    /// x^k reduced modulo Φ_n for k < max(2·deg, n).
    xpow: Vec<Vec<BigInt>>,
}

fn poly_divexact(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    // den is monic
    let mut r = num.to_vec();
    let dl = den.len();
    let mut q = vec![BigInt::zero(); num.len() + 1 - dl];
    for i in (0..q.len()).rev() {
        let c = r[i + dl - 1].clone();
        if c.is_zero() {
            continue;
        }
        for j in 0..dl {
            r[i + j] -= &c * &den[j];
        }
        q[i] = c;
    }
    debug_assert!(r.iter().all(|c| c.is_zero()));
    q
}

/// Coefficients of the n-th cyclotomic polynomial, low degree first.
pub fn cyclotomic_poly(n: u32) -> Vec<BigInt> {
    let mut num = vec![BigInt::zero(); n as usize + 1];
    num[0] = BigInt::from(-1);
    num[n as usize] = BigInt::one();
    let mut p = num;
    for d in 1..n {
        if n % d == 0 {
            p = poly_divexact(&p, &cyclotomic_poly(d));
        }
    }
    p
}

pub fn euler_phi(n: u32) -> u32 {
    (1..=n).filter(|k| num_integer::gcd(*k, n) == 1).count() as u32
}

impl CycloField {
    pub fn new(n: u32) -> Result<Arc<CycloField>, ScalarError> {
        if n == 0 {
            return Err(ScalarError::ZeroOrder);
        }
        let phi = cyclotomic_poly(n);
        let deg = phi.len() - 1;
        let len = (2 * deg).max(n as usize);
        let mut xpow: Vec<Vec<BigInt>> = Vec::with_capacity(len);
        for k in 0..len {
            let mut v = vec![BigInt::zero(); deg];
            if k < deg {
                v[k] = BigInt::one();
            } else {
                // x * x^{k-1}
                let prev = &xpow[k - 1];
                let top = prev[deg - 1].clone();
                for i in (1..deg).rev() {
                    v[i] = prev[i - 1].clone();
                }
                for i in 0..deg {
                    v[i] -= &top * &phi[i];
                }
            }
            xpow.push(v);
        }
        Ok(Arc::new(CycloField { order: n, phi, xpow }))
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn degree(&self) -> usize {
        self.phi.len() - 1
    }

    pub fn reduction_poly(&self) -> &[BigInt] {
        &self.phi
    }
}

/// Element of Q(ζ_n) in the power basis 1, ζ, …, ζ^{φ(n)-1}.
#[derive(Clone)]
pub struct Cyclo {
    field: Arc<CycloField>,
    coeffs: Vec<BigRational>,
}

impl PartialEq for Cyclo {
    fn eq(&self, other: &Self) -> bool {
        self.field.order == other.field.order && self.coeffs == other.coeffs
    }
}

impl fmt::Debug for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl Cyclo {
    pub fn zero(field: &Arc<CycloField>) -> Cyclo {
        Cyclo { field: field.clone(), coeffs: vec![BigRational::zero(); field.degree()] }
    }

    pub fn from_rational(field: &Arc<CycloField>, q: BigRational) -> Cyclo {
        let mut z = Cyclo::zero(field);
        z.coeffs[0] = q;
        z
    }

    pub fn from_int(field: &Arc<CycloField>, k: i64) -> Cyclo {
        Cyclo::from_rational(field, rat(k))
    }

    pub fn zeta_pow(field: &Arc<CycloField>, k: i64) -> Cyclo {
        let n = field.order as i64;
        let k = k.rem_euclid(n) as usize;
        let coeffs = field.xpow[k].iter().map(|c| BigRational::from_integer(c.clone())).collect();
        Cyclo { field: field.clone(), coeffs }
    }

    pub fn field(&self) -> &Arc<CycloField> {
        &self.field
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.coeffs[0].is_one() && self.coeffs[1..].iter().all(|c| c.is_zero())
    }

    pub fn add(&self, o: &Cyclo) -> Cyclo {
        let coeffs = self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect();
        Cyclo { field: self.field.clone(), coeffs }
    }

    pub fn sub(&self, o: &Cyclo) -> Cyclo {
        let coeffs = self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a - b).collect();
        Cyclo { field: self.field.clone(), coeffs }
    }

    pub fn neg(&self) -> Cyclo {
        Cyclo { field: self.field.clone(), coeffs: self.coeffs.iter().map(|a| -a).collect() }
    }

    pub fn scale(&self, q: &BigRational) -> Cyclo {
        Cyclo { field: self.field.clone(), coeffs: self.coeffs.iter().map(|a| a * q).collect() }
    }

    pub fn mul(&self, o: &Cyclo) -> Cyclo {
        let deg = self.field.degree();
        let mut prod = vec![BigRational::zero(); 2 * deg - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    prod[i + j] += a * b;
                }
            }
        }
        let mut out = prod[..deg].to_vec();
        for k in deg..prod.len() {
            if prod[k].is_zero() {
                continue;
            }
            for i in 0..deg {
                let x = &self.field.xpow[k][i];
                if !x.is_zero() {
                    out[i] += &prod[k] * BigRational::from_integer(x.clone());
                }
            }
        }
        Cyclo { field: self.field.clone(), coeffs: out }
    }

    /// Galois action ζ ↦ ζ^k (k coprime to n).
    pub fn galois(&self, k: i64) -> Cyclo {
        let mut out = Cyclo::zero(&self.field);
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            out = out.add(&Cyclo::zeta_pow(&self.field, k * i as i64).scale(c));
        }
        out
    }

    pub fn conj(&self) -> Cyclo {
        self.galois(-1)
    }

    pub fn inv(&self) -> Result<Cyclo, ScalarError> {
        if self.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        // Solve (mult-by-self) x = 1 by Gaussian elimination.
        let deg = self.field.degree();
        let mut cols: Vec<Cyclo> = Vec::with_capacity(deg);
        for j in 0..deg {
            cols.push(self.mul(&Cyclo::zeta_pow(&self.field, j as i64)));
        }
        let mut a: Vec<Vec<BigRational>> = (0..deg)
            .map(|i| {
                let mut row: Vec<BigRational> = cols.iter().map(|c| c.coeffs[i].clone()).collect();
                row.push(if i == 0 { BigRational::one() } else { BigRational::zero() });
                row
            })
            .collect();
        for c in 0..deg {
            let p = (c..deg).find(|&r| !a[r][c].is_zero()).ok_or(ScalarError::DivisionByZero)?;
            a.swap(c, p);
            let piv = a[c][c].clone();
            for x in a[c].iter_mut() {
                *x = &*x / &piv;
            }
            for r in 0..deg {
                if r != c && !a[r][c].is_zero() {
                    let f = a[r][c].clone();
                    for k in c..=deg {
                        let v = &a[c][k] * &f;
                        a[r][k] -= v;
                    }
                }
            }
        }
        Ok(Cyclo { field: self.field.clone(), coeffs: a.into_iter().map(|r| r[deg].clone()).collect() })
    }

    pub fn to_c64(&self) -> Complex64 {
        let n = self.field.order as f64;
        let mut s = Complex64::new(0.0, 0.0);
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let v = c.to_f64().unwrap_or(f64::NAN);
            s += Complex64::from_polar(v, 2.0 * std::f64::consts::PI * k as f64 / n);
        }
        s
    }

    /// Returns (sign, k) when self = ±ζ^k.
    pub fn as_root_of_unity(&self) -> Option<i64> {
        let n = self.field.order as i64;
        let f = self.to_c64();
        if (f.norm() - 1.0).abs() > 1e-6 {
            return None;
        }
        let k = (f.arg() / (2.0 * std::f64::consts::PI) * n as f64).round() as i64;
        let k = k.rem_euclid(n);
        if Cyclo::zeta_pow(&self.field, k) == *self {
            Some(k)
        } else {
            None
        }
    }
}

fn fmt_rat(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl fmt::Display for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        if let Some(k) = self.as_root_of_unity() {
            if k == 0 {
                return write!(f, "1");
            }
            return write!(f, "z^{}", k);
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            if k == 0 {
                write!(f, "{}", fmt_rat(&a))?;
            } else if a.is_one() {
                write!(f, "z^{}", k)?;
            } else {
                write!(f, "{}*z^{}", fmt_rat(&a), k)?;
            }
        }
        Ok(())
    }
}

/// A state-sum value: exact cyclotomic or complex double.
#[derive(Clone, PartialEq)]
pub enum Scalar {
    Exact(Cyclo),
    Float(Complex64),
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(c) => write!(f, "{}", c),
            Scalar::Float(z) => write!(f, "({:.12},{:.12})", z.re, z.im),
        }
    }
}

/// Which arithmetic a computation runs on.
#[derive(Clone, Debug)]
pub enum Backend {
    Exact(Arc<CycloField>),
    Float,
}

impl Backend {
    pub fn exact(n: u32) -> Result<Backend, ScalarError> {
        Ok(Backend::Exact(CycloField::new(n)?))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Backend::Exact(_))
    }

    pub fn zero(&self) -> Scalar {
        self.int(0)
    }

    pub fn one(&self) -> Scalar {
        self.int(1)
    }

    pub fn int(&self, k: i64) -> Scalar {
        match self {
            Backend::Exact(f) => Scalar::Exact(Cyclo::from_int(f, k)),
            Backend::Float => Scalar::Float(Complex64::new(k as f64, 0.0)),
        }
    }

    pub fn zeta(&self, n: u32, k: i64) -> Scalar {
        match self {
            Backend::Exact(f) => {
                assert!(f.order % n == 0, "ζ_{} not in Q(ζ_{})", n, f.order);
                Scalar::Exact(Cyclo::zeta_pow(f, k * (f.order / n) as i64))
            }
            Backend::Float => {
                Scalar::Float(Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64))
            }
        }
    }

    pub fn float(&self, re: f64, im: f64) -> Scalar {
        Scalar::Float(Complex64::new(re, im))
    }

    /// Brings a value onto this backend (exact values are rounded when the backend is float).
    pub fn convert(&self, s: &Scalar) -> Result<Scalar, ScalarError> {
        match (self, s) {
            (Backend::Float, s) => Ok(Scalar::Float(s.to_c64())),
            (Backend::Exact(f), Scalar::Exact(c)) => {
                if f.order == c.field.order {
                    Ok(s.clone())
                } else if f.order % c.field.order == 0 {
                    let m = (f.order / c.field.order) as i64;
                    let mut out = Cyclo::zero(f);
                    for (k, q) in c.coeffs.iter().enumerate() {
                        if !q.is_zero() {
                            out = out.add(&Cyclo::zeta_pow(f, m * k as i64).scale(q));
                        }
                    }
                    Ok(Scalar::Exact(out))
                } else {
                    Err(ScalarError::FieldMismatch(f.order, c.field.order))
                }
            }
            (Backend::Exact(_), Scalar::Float(_)) => Err(ScalarError::BackendMismatch),
        }
    }

    pub fn parse(&self, s: &str) -> Result<Scalar, ScalarError> {
        match self {
            Backend::Float => parse_float(s).map(Scalar::Float),
            Backend::Exact(f) => parse_exact(f, s).map(Scalar::Exact),
        }
    }
}

fn parse_rat(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().ok()?;
        let b: BigInt = b.trim().parse().ok()?;
        if b.is_zero() {
            return None;
        }
        Some(BigRational::new(a, b))
    } else {
        Some(BigRational::from_integer(s.parse().ok()?))
    }
}

fn parse_exact(f: &Arc<CycloField>, s: &str) -> Result<Cyclo, ScalarError> {
    let err = || ScalarError::Parse(s.to_string());
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(err());
    }
    // split into signed terms
    let mut terms = Vec::new();
    let mut cur = String::new();
    for (i, ch) in t.chars().enumerate() {
        if (ch == '+' || ch == '-') && i > 0 && !cur.ends_with('^') {
            terms.push(std::mem::take(&mut cur));
        }
        cur.push(ch);
    }
    terms.push(cur);
    let mut acc = Cyclo::zero(f);
    for term in terms {
        let (neg, body) = match term.strip_prefix('-') {
            Some(b) => (true, b),
            None => (false, term.strip_prefix('+').unwrap_or(&term)),
        };
        if body.is_empty() {
            return Err(err());
        }
        let (coef, pow) = if let Some(idx) = body.find('z') {
            let c = body[..idx].trim_end_matches('*');
            let c = if c.is_empty() { BigRational::one() } else { parse_rat(c).ok_or_else(err)? };
            let rest = &body[idx + 1..];
            let k: i64 = if rest.is_empty() {
                1
            } else {
                rest.strip_prefix('^').ok_or_else(err)?.parse().map_err(|_| err())?
            };
            (c, k)
        } else {
            (parse_rat(body).ok_or_else(err)?, 0)
        };
        let coef = if neg { -coef } else { coef };
        acc = acc.add(&Cyclo::zeta_pow(f, pow).scale(&coef));
    }
    Ok(acc)
}

fn parse_float(s: &str) -> Result<Complex64, ScalarError> {
    let err = || ScalarError::Parse(s.to_string());
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if let Some(inner) = t.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
        let (a, b) = inner.split_once(',').ok_or_else(err)?;
        Ok(Complex64::new(a.parse().map_err(|_| err())?, b.parse().map_err(|_| err())?))
    } else {
        let q = parse_rat(&t).and_then(|q| q.to_f64()).or_else(|| t.parse::<f64>().ok()).ok_or_else(err)?;
        Ok(Complex64::new(q, 0.0))
    }
}

impl Scalar {
    pub fn try_add(&self, o: &Scalar) -> Result<Scalar, ScalarError> {
        match (self, o) {
            (Scalar::Exact(a), Scalar::Exact(b)) => {
                check_field(a, b)?;
                Ok(Scalar::Exact(a.add(b)))
            }
            (Scalar::Float(a), Scalar::Float(b)) => Ok(Scalar::Float(a + b)),
            _ => Err(ScalarError::BackendMismatch),
        }
    }

    pub fn try_sub(&self, o: &Scalar) -> Result<Scalar, ScalarError> {
        self.try_add(&o.neg_s())
    }

    pub fn try_mul(&self, o: &Scalar) -> Result<Scalar, ScalarError> {
        match (self, o) {
            (Scalar::Exact(a), Scalar::Exact(b)) => {
                check_field(a, b)?;
                Ok(Scalar::Exact(a.mul(b)))
            }
            (Scalar::Float(a), Scalar::Float(b)) => Ok(Scalar::Float(a * b)),
            _ => Err(ScalarError::BackendMismatch),
        }
    }

    fn neg_s(&self) -> Scalar {
        match self {
            Scalar::Exact(a) => Scalar::Exact(a.neg()),
            Scalar::Float(a) => Scalar::Float(-a),
        }
    }

    pub fn inv(&self) -> Result<Scalar, ScalarError> {
        match self {
            Scalar::Exact(a) => Ok(Scalar::Exact(a.inv()?)),
            Scalar::Float(a) => {
                if a.norm() == 0.0 {
                    Err(ScalarError::DivisionByZero)
                } else {
                    Ok(Scalar::Float(a.inv()))
                }
            }
        }
    }

    pub fn conj(&self) -> Scalar {
        match self {
            Scalar::Exact(a) => Scalar::Exact(a.conj()),
            Scalar::Float(a) => Scalar::Float(a.conj()),
        }
    }

    pub fn pow(&self, k: i64) -> Result<Scalar, ScalarError> {
        let base = if k < 0 { self.inv()? } else { self.clone() };
        let mut acc = match self {
            Scalar::Exact(a) => Scalar::Exact(Cyclo::from_int(&a.field, 1)),
            Scalar::Float(_) => Scalar::Float(Complex64::new(1.0, 0.0)),
        };
        for _ in 0..k.unsigned_abs() {
            acc = &acc * &base;
        }
        Ok(acc)
    }

    pub fn to_c64(&self) -> Complex64 {
        match self {
            Scalar::Exact(a) => a.to_c64(),
            Scalar::Float(z) => *z,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn is_zero_tol(&self, tol: f64) -> bool {
        match self {
            Scalar::Exact(a) => a.is_zero(),
            Scalar::Float(z) => z.norm() <= tol,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.is_zero_tol(DEFAULT_TOL)
    }

    /// Exact equality on the exact backend, tolerance otherwise.
    pub fn approx_eq(&self, o: &Scalar, tol: f64) -> bool {
        match (self, o) {
            (Scalar::Exact(a), Scalar::Exact(b)) if a.field.order == b.field.order => a == b,
            _ => (self.to_c64() - o.to_c64()).norm() <= tol,
        }
    }

    pub fn backend(&self) -> Backend {
        match self {
            Scalar::Exact(a) => Backend::Exact(a.field.clone()),
            Scalar::Float(_) => Backend::Float,
        }
    }
}

fn check_field(a: &Cyclo, b: &Cyclo) -> Result<(), ScalarError> {
    if a.field.order != b.field.order {
        Err(ScalarError::FieldMismatch(a.field.order, b.field.order))
    } else {
        Ok(())
    }
}

// Operator forms panic on mismatched operands; library code only combines values
// produced on a single backend.
impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, o: &Scalar) -> Scalar {
        self.try_add(o).expect("scalar add")
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, o: &Scalar) -> Scalar {
        self.try_sub(o).expect("scalar sub")
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, o: &Scalar) -> Scalar {
        self.try_mul(o).expect("scalar mul")
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        self.neg_s()
    }
}

/// Exact square root of a nonzero integer inside Q(ζ_n), when it lies there.
pub fn sqrt_int(f: &Arc<CycloField>, m: i64) -> Option<Cyclo> {
    if m == 0 {
        return Some(Cyclo::zero(f));
    }
    let n = f.order as i64;
    let mut acc = Cyclo::from_int(f, 1);
    let mut rest = m.abs();
    if m < 0 {
        if n % 4 != 0 {
            return None;
        }
        acc = Cyclo::zeta_pow(f, n / 4);
    }
    let mut p = 2;
    while rest > 1 {
        let mut e = 0;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        if e > 0 {
            acc = acc.mul(&Cyclo::from_int(f, p.pow(e / 2)));
            if e % 2 == 1 {
                acc = acc.mul(&sqrt_prime(f, p)?);
            }
        }
        p += 1;
    }
    // principal root: positive real part, or positive imaginary part when purely imaginary
    let z = acc.to_c64();
    if z.re < -1e-12 || (z.re.abs() <= 1e-12 && z.im < 0.0) {
        acc = acc.neg();
    }
    Some(acc)
}

fn sqrt_prime(f: &Arc<CycloField>, p: i64) -> Option<Cyclo> {
    let n = f.order as i64;
    if p == 2 {
        if n % 8 != 0 {
            return None;
        }
        return Some(Cyclo::zeta_pow(f, n / 8).add(&Cyclo::zeta_pow(f, -n / 8)));
    }
    if n % p != 0 {
        return None;
    }
    // Gauss sum g with g² = (-1)^{(p-1)/2} p
    let mut g = Cyclo::zero(f);
    for a in 0..p {
        g = g.add(&Cyclo::zeta_pow(f, (a * a % p) * (n / p)));
    }
    if p % 4 == 1 {
        Some(g)
    } else {
        if n % 4 != 0 {
            return None;
        }
        // g = i√p
        Some(g.mul(&Cyclo::zeta_pow(f, -n / 4)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(n: u32) -> Arc<CycloField> {
        CycloField::new(n).unwrap()
    }

    #[test]
    fn degrees() {
        assert_eq!(f(1).degree(), 1);
        assert_eq!(f(4).degree(), 2);
        assert_eq!(f(20).degree(), 8);
        assert_eq!(euler_phi(20), 8);
        assert!(CycloField::new(0).is_err());
    }

    #[test]
    fn zeta_examples() {
        let f4 = f(4);
        assert_eq!(Cyclo::zeta_pow(&f4, 2), Cyclo::from_int(&f4, -1));
        let f8 = f(8);
        let s = Cyclo::zeta_pow(&f8, 1).add(&Cyclo::zeta_pow(&f8, -1));
        assert_eq!(s.mul(&s), Cyclo::from_int(&f8, 2));
        let f5 = f(5);
        assert!(Cyclo::zeta_pow(&f5, 5).is_one());
        assert_eq!(Cyclo::zeta_pow(&f4, 1).inv().unwrap(), Cyclo::zeta_pow(&f4, 3));
        assert_eq!(Cyclo::zeta_pow(&f5, 1).conj(), Cyclo::zeta_pow(&f5, 4));
        let one = Cyclo::from_int(&f4, 1);
        let i = Cyclo::zeta_pow(&f4, 1);
        assert_eq!(one.add(&i).mul(&one.sub(&i)), Cyclo::from_int(&f4, 2));
    }

    #[test]
    fn float_values() {
        let f4 = f(4);
        let z = Cyclo::zeta_pow(&f4, 1).to_c64();
        assert!((z - Complex64::new(0.0, 1.0)).norm() < 1e-12);
        let f8 = f(8);
        let s = Cyclo::zeta_pow(&f8, 1).add(&Cyclo::zeta_pow(&f8, -1)).to_c64();
        assert!((s.re - 2f64.sqrt()).abs() < 1e-12 && s.im.abs() < 1e-12);
    }

    #[test]
    fn roots_sum_to_zero() {
        for n in 2..=24 {
            let fl = f(n);
            let mut s = Cyclo::zero(&fl);
            for k in 0..n as i64 {
                s = s.add(&Cyclo::zeta_pow(&fl, k));
            }
            assert!(s.is_zero(), "n={}", n);
            assert!(Cyclo::zeta_pow(&fl, n as i64).is_one());
        }
    }

    #[test]
    fn parse_roundtrip() {
        let b = Backend::exact(8).unwrap();
        let x = b.parse("1/2*z^3 - z^5 + 2").unwrap();
        let y = b.parse(&x.to_string()).unwrap();
        assert_eq!(x, y);
        assert_eq!(b.parse("z^9").unwrap(), b.zeta(8, 1));
        assert!(b.parse("1/0").is_err());
        let fl = Backend::Float;
        assert_eq!(fl.parse("( 1.5 , -2 )").unwrap().to_c64(), Complex64::new(1.5, -2.0));
    }

    #[test]
    fn square_roots() {
        for (n, m) in [(8, 2), (12, 3), (24, 6), (20, 5), (4, -1), (72, 18), (72, 3)] {
            let fl = f(n);
            let r = sqrt_int(&fl, m).unwrap();
            assert_eq!(r.mul(&r), Cyclo::from_int(&fl, m), "sqrt {} in Q(z_{})", m, n);
        }
        assert!(sqrt_int(&f(5), 2).is_none());
    }

    #[test]
    fn mismatch_errors() {
        let a = Backend::exact(4).unwrap().one();
        let b = Backend::exact(8).unwrap().one();
        assert_eq!(a.try_add(&b), Err(ScalarError::FieldMismatch(4, 8)));
        assert_eq!(a.try_mul(&Backend::Float.one()), Err(ScalarError::BackendMismatch));
        assert_eq!(Backend::Float.zero().inv(), Err(ScalarError::DivisionByZero));
    }
}

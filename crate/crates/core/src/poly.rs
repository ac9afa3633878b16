//! Sparse multivariate polynomials with `f64` coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

/// Numbers a polynomial can be evaluated over.
pub trait Scalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
}

fn powi<T: Scalar>(x: T, e: u32) -> T {
    let mut acc = T::one();
    for _ in 0..e {
        acc = acc * x;
    }
    acc
}

/// `(variable, exponent)` pairs sorted by variable, exponents ≥ 1.
pub type Monomial = Vec<(u32, u32)>;

#[derive(Clone, PartialEq, Default)]
pub struct Poly {
    terms: Vec<(Monomial, f64)>,
}

fn mono_mul(a: &Monomial, b: &Monomial) -> Monomial {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push((a[i].0, a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn constant(c: f64) -> Poly {
        Poly::from_map(BTreeMap::from([(Vec::new(), c)]))
    }

    pub fn var(v: usize) -> Poly {
        Poly { terms: vec![(vec![(v as u32, 1)], 1.0)] }
    }

    /// Product of distinct variables times `coef`.
    pub fn monomial(vars: &[usize], coef: f64) -> Poly {
        let mut m: Monomial = Vec::with_capacity(vars.len());
        for &v in vars {
            m = mono_mul(&m, &vec![(v as u32, 1)]);
        }
        Poly::from_map(BTreeMap::from([(m, coef)]))
    }

    /// Sum of `(monomial, coefficient)` pairs; monomials must be canonical.
    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, f64)>) -> Poly {
        let mut map = BTreeMap::new();
        for (m, c) in terms {
            *map.entry(m).or_insert(0.0) += c;
        }
        Poly::from_map(map)
    }

    fn from_map(map: BTreeMap<Monomial, f64>) -> Poly {
        Poly { terms: map.into_iter().filter(|(_, c)| *c != 0.0).collect() }
    }

    pub fn terms(&self) -> &[(Monomial, f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(m, _)| m.iter().map(|&(_, e)| e).sum()).max().unwrap_or(0)
    }

    pub fn max_abs_coef(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.abs()).fold(0.0, f64::max)
    }

    /// Drop terms whose coefficient is below `rel` times the largest one.
    pub fn prune(&mut self, rel: f64) {
        let cut = rel * self.max_abs_coef();
        self.terms.retain(|(_, c)| c.abs() > cut);
    }

    pub fn scale(&self, k: f64) -> Poly {
        Poly::from_map(self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect())
    }

    /// Divide out one power of `v` from every term; `None` if some term lacks it.
    pub fn divide_by_var(&self, v: usize) -> Option<Poly> {
        let v = v as u32;
        let mut map = BTreeMap::new();
        for (m, c) in &self.terms {
            let pos = m.iter().position(|&(w, _)| w == v)?;
            let mut m = m.clone();
            if m[pos].1 == 1 {
                m.remove(pos);
            } else {
                m[pos].1 -= 1;
            }
            *map.entry(m).or_insert(0.0) += c;
        }
        Some(Poly::from_map(map))
    }

    pub fn derivative(&self, v: usize) -> Poly {
        let v = v as u32;
        let mut map = BTreeMap::new();
        for (m, c) in &self.terms {
            if let Some(pos) = m.iter().position(|&(w, _)| w == v) {
                let e = m[pos].1;
                let mut m = m.clone();
                if e == 1 {
                    m.remove(pos);
                } else {
                    m[pos].1 -= 1;
                }
                *map.entry(m).or_insert(0.0) += c * e as f64;
            }
        }
        Poly::from_map(map)
    }

    pub fn eval<T: Scalar>(&self, x: &[T]) -> T {
        let mut acc = T::zero();
        for (m, c) in &self.terms {
            let mut t = T::from_f64(*c);
            for &(v, e) in m {
                t = t * powi(x[v as usize], e);
            }
            acc = acc + t;
        }
        acc
    }

    /// Value and gradient (dense, length `x.len()`) in one pass.
    pub fn eval_grad<T: Scalar>(&self, x: &[T], grad: &mut [T]) -> T {
        grad.iter_mut().for_each(|g| *g = T::zero());
        let mut acc = T::zero();
        let mut factors: Vec<T> = Vec::new();
        let mut suffix: Vec<T> = Vec::new();
        for (m, c) in &self.terms {
            let c = T::from_f64(*c);
            factors.clear();
            factors.extend(m.iter().map(|&(v, e)| powi(x[v as usize], e)));
            suffix.clear();
            suffix.resize(factors.len() + 1, T::one());
            for i in (0..factors.len()).rev() {
                suffix[i] = suffix[i + 1] * factors[i];
            }
            acc = acc + c * suffix[0];
            let mut prefix = T::one();
            for (i, &(v, e)) in m.iter().enumerate() {
                let d = T::from_f64(e as f64) * powi(x[v as usize], e - 1);
                grad[v as usize] = grad[v as usize] + c * prefix * d * suffix[i + 1];
                prefix = prefix * factors[i];
            }
        }
        acc
    }

    /// Replace every variable `v` by `subs[v]`.
    pub fn substitute(&self, subs: &[Poly]) -> Poly {
        let mut out: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut term: BTreeMap<Monomial, f64> = BTreeMap::from([(Vec::new(), *c)]);
            for &(v, e) in m {
                for _ in 0..e {
                    term = mul_maps(&term, &subs[v as usize].terms);
                }
            }
            for (mono, k) in term {
                *out.entry(mono).or_insert(0.0) += k;
            }
        }
        Poly::from_map(out)
    }
}

fn mul_maps(a: &BTreeMap<Monomial, f64>, b: &[(Monomial, f64)]) -> BTreeMap<Monomial, f64> {
    let mut out = BTreeMap::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            *out.entry(mono_mul(ma, mb)).or_insert(0.0) += ca * cb;
        }
    }
    out
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut map: BTreeMap<Monomial, f64> = self.terms.iter().cloned().collect();
        for (m, c) in &rhs.terms {
            *map.entry(m.clone()).or_insert(0.0) += c;
        }
        Poly::from_map(map)
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &rhs.scale(-1.0)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let a: BTreeMap<Monomial, f64> = self.terms.iter().cloned().collect();
        Poly::from_map(mul_maps(&a, &rhs.terms))
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{c}")?;
            for (v, e) in m {
                if *e == 1 {
                    write!(f, "*x{v}")?;
                } else {
                    write!(f, "*x{v}^{e}")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> Poly {
        // 2 x0^2 x1 - 3 x1 + 0.5
        let a = &(&Poly::var(0) * &Poly::var(0)) * &Poly::var(1);
        let a = a.scale(2.0);
        let b = Poly::var(1).scale(-3.0);
        &(&a + &b) + &Poly::constant(0.5)
    }

    #[test]
    fn degree_and_eval() {
        let p = sample();
        assert_eq!(p.degree(), 3);
        assert_eq!(p.eval(&[2.0, 1.0]), 8.0 - 3.0 + 0.5);
    }

    #[test]
    fn cancellation_removes_terms() {
        let p = &sample() - &sample();
        assert!(p.is_zero());
        assert_eq!(p.degree(), 0);
    }

    #[test]
    fn substitution_matches_composition() {
        let p = sample();
        // x0 -> 1 - x1, x1 -> x1
        let one_minus = &Poly::constant(1.0) - &Poly::var(1);
        let q = p.substitute(&[one_minus, Poly::var(1)]);
        for y in [0.0, 0.3, 1.7] {
            assert!((q.eval(&[0.0, y]) - p.eval(&[1.0 - y, y])).abs() < 1e-12);
        }
    }

    #[test]
    fn divide_by_var_requires_factor() {
        let p = Poly::monomial(&[0, 2], 4.0);
        assert_eq!(p.divide_by_var(2).unwrap(), Poly::monomial(&[0], 4.0));
        assert!(sample().divide_by_var(0).is_none());
    }

    proptest! {
        #[test]
        fn gradient_matches_symbolic_derivative(x0 in -2.0..2.0f64, x1 in -2.0..2.0f64) {
            let p = sample();
            let x = [x0, x1];
            let mut g = [0.0; 2];
            let v = p.eval_grad(&x, &mut g);
            prop_assert!((v - p.eval(&x)).abs() < 1e-12);
            for (i, gi) in g.iter().enumerate() {
                prop_assert!((gi - p.derivative(i).eval(&x)).abs() < 1e-9);
            }
        }
    }
}

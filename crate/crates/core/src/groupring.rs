//! Group rings over free-group words, multivariable Laurent polynomials,
//! matrices over either, ℓ¹ norms and the t-twist.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Neg;

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{Num, ToPrimitive};

use crate::error::{Error, Result};
use crate::fpgroup::{pair, AbelianizationData, CohomClass, Word};

/// Coefficient ring: exact integers or complex doubles.
pub trait Coeff: Num + Clone + Neg<Output = Self> + Send + Sync + fmt::Debug {
    fn magnitude(&self) -> f64;
    fn to_complex(&self) -> Complex64;
}

impl Coeff for i64 {
    fn magnitude(&self) -> f64 {
        self.unsigned_abs() as f64
    }
    fn to_complex(&self) -> Complex64 {
        Complex64::new(*self as f64, 0.0)
    }
}

impl Coeff for Complex64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn to_complex(&self) -> Complex64 {
        *self
    }
}

/// Ring operations shared by matrix entries.
pub trait RingElt: Clone + Send + Sync {
    fn zero_like(&self) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn is_zero(&self) -> bool;
    /// ℓ¹ norm of the coefficient vector.
    fn l1(&self) -> f64;
}

/// Σ λ_g·g with finitely many nonzero λ_g.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupRingElt<C: Coeff> {
    terms: BTreeMap<Word, C>,
}

pub type IntGroupRingElt = GroupRingElt<i64>;

impl<C: Coeff> GroupRingElt<C> {
    pub fn zero() -> Self {
        GroupRingElt { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::monomial(Word::identity(), C::one())
    }

    pub fn monomial(w: Word, c: C) -> Self {
        let mut e = Self::zero();
        e.add_term(w, c);
        e
    }

    pub fn from_word(w: Word) -> Self {
        Self::monomial(w, C::one())
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Word, C)>) -> Self {
        let mut e = Self::zero();
        for (w, c) in terms {
            e.add_term(w, c);
        }
        e
    }

    pub fn add_term(&mut self, w: Word, c: C) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(w.clone()).or_insert_with(C::zero);
        *slot = slot.clone() + c;
        if slot.is_zero() {
            self.terms.remove(&w);
        }
    }

    pub fn terms(&self) -> &BTreeMap<Word, C> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        GroupRingElt { terms: self.terms.iter().map(|(w, c)| (w.clone(), -c.clone())).collect() }
    }

    pub fn scale(&self, c: &C) -> Self {
        Self::from_terms(self.terms.iter().map(|(w, x)| (w.clone(), x.clone() * c.clone())))
    }

    pub fn left_mul_word(&self, g: &Word) -> Self {
        Self::from_terms(self.terms.iter().map(|(w, c)| (g.mul(w), c.clone())))
    }

    pub fn right_mul_word(&self, g: &Word) -> Self {
        Self::from_terms(self.terms.iter().map(|(w, c)| (w.mul(g), c.clone())))
    }

    pub fn to_complex(&self) -> GroupRingElt<Complex64> {
        GroupRingElt { terms: self.terms.iter().map(|(w, c)| (w.clone(), c.to_complex())).collect() }
    }

    /// Image in ℂ[ℤ^d] under a word → exponent-vector map.
    pub fn push(&self, weight: impl Fn(&Word) -> Vec<i64>, nvars: usize) -> MultiLaurent {
        let mut out = MultiLaurent::zero(nvars);
        for (w, c) in &self.terms {
            out.add_term(weight(w), c.to_complex());
        }
        out
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> GroupRingDisplay<'a, C> {
        GroupRingDisplay { elt: self, names }
    }
}

impl<C: Coeff> RingElt for GroupRingElt<C> {
    fn zero_like(&self) -> Self {
        Self::zero()
    }
    fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone());
        }
        out
    }
    fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                out.add_term(u.mul(v), a.clone() * b.clone());
            }
        }
        out
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn l1(&self) -> f64 {
        self.terms.values().map(Coeff::magnitude).sum()
    }
}

pub struct GroupRingDisplay<'a, C: Coeff> {
    elt: &'a GroupRingElt<C>,
    names: &'a [String],
}

impl<C: Coeff> fmt::Display for GroupRingDisplay<'_, C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.elt.is_empty() {
            return write!(f, "0");
        }
        for (i, (w, c)) in self.elt.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c:?})*[{}]", w.display(self.names))?;
        }
        Ok(())
    }
}

/// Element of ℂ[ℤ^d], keyed by exponent vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiLaurent {
    nvars: usize,
    terms: BTreeMap<Vec<i64>, Complex64>,
}

impl MultiLaurent {
    pub fn zero(nvars: usize) -> Self {
        MultiLaurent { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Complex64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Complex64::new(1.0, 0.0))
    }

    pub fn monomial(exps: Vec<i64>, c: Complex64) -> Self {
        let mut p = Self::zero(exps.len());
        p.add_term(exps, c);
        p
    }

    pub fn variable(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(e, Complex64::new(1.0, 0.0))
    }

    /// Univariate polynomial from integer coefficients c_0 + c_1 z + ….
    pub fn from_coeffs_1var(coeffs: &[i64], shift: i64) -> Self {
        let mut p = Self::zero(1);
        for (k, &c) in coeffs.iter().enumerate() {
            p.add_term(vec![k as i64 + shift], Complex64::new(c as f64, 0.0));
        }
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Vec<i64>, Complex64)>) -> Self {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    pub fn add_term(&mut self, exps: Vec<i64>, c: Complex64) {
        assert_eq!(exps.len(), self.nvars, "exponent vector length");
        if c == Complex64::new(0.0, 0.0) {
            return;
        }
        let slot = self.terms.entry(exps.clone()).or_insert(Complex64::new(0.0, 0.0));
        *slot += c;
        if *slot == Complex64::new(0.0, 0.0) {
            self.terms.remove(&exps);
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &BTreeMap<Vec<i64>, Complex64> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), -c);
        }
        out
    }

    pub fn neg(&self) -> Self {
        MultiLaurent { nvars: self.nvars, terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect() }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_terms(self.nvars, self.terms.iter().map(|(e, c)| (e.clone(), c * s)))
    }

    pub fn eval(&self, point: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter().zip(point).fold(*c, |acc, (&k, z)| acc * z.powi(k as i32))
            })
            .sum()
    }

    /// Per-variable (min, max) exponents; `None` for the zero polynomial.
    pub fn degree_bounds(&self) -> Option<Vec<(i64, i64)>> {
        let mut it = self.terms.keys();
        let first = it.next()?;
        let mut b: Vec<(i64, i64)> = first.iter().map(|&x| (x, x)).collect();
        for e in it {
            for (bi, &x) in b.iter_mut().zip(e) {
                bi.0 = bi.0.min(x);
                bi.1 = bi.1.max(x);
            }
        }
        Some(b)
    }

    /// Variables that actually occur with nonzero exponent.
    pub fn active_variables(&self) -> Vec<usize> {
        (0..self.nvars).filter(|&i| self.terms.keys().any(|e| e[i] != 0)).collect()
    }

    /// Coefficients as integers if all are within `tol` of one.
    pub fn integer_coeffs(&self, tol: f64) -> Option<BTreeMap<Vec<i64>, i64>> {
        self.terms
            .iter()
            .map(|(e, c)| {
                let r = c.re.round();
                ((c.re - r).abs() <= tol && c.im.abs() <= tol).then(|| (e.clone(), r as i64))
            })
            .collect()
    }

    /// Drop terms with |c| ≤ tol and snap near-integers when every coefficient is near one.
    pub fn cleaned(&self, tol: f64) -> Self {
        if let Some(ints) = self.integer_coeffs(tol) {
            return Self::from_terms(
                self.nvars,
                ints.into_iter().map(|(e, c)| (e, Complex64::new(c as f64, 0.0))),
            );
        }
        Self::from_terms(self.nvars, self.terms.iter().filter(|(_, c)| c.norm() > tol).map(|(e, c)| (e.clone(), *c)))
    }

    /// Drop terms below `rel` times the largest coefficient magnitude.
    pub fn pruned(&self, rel: f64) -> Self {
        let max = self.terms.values().map(|c| c.norm()).fold(0.0, f64::max);
        Self::from_terms(self.nvars, self.terms.iter().filter(|(_, c)| c.norm() > rel * max).map(|(e, c)| (e.clone(), *c)))
    }

    /// Substitute z ↦ z^M: exponent vector e becomes M·e (M is nvars_out × nvars).
    pub fn change_variables(&self, m: &[Vec<i64>]) -> Self {
        let nout = m.len();
        Self::from_terms(
            nout,
            self.terms.iter().map(|(e, c)| {
                let ne: Vec<i64> = m.iter().map(|row| row.iter().zip(e).map(|(a, b)| a * b).sum()).collect();
                (ne, *c)
            }),
        )
    }

    /// Each monomial z^v gains the factor t^{w·v}.
    pub fn twisted(&self, w: &[f64], t: f64) -> Self {
        let lt = t.ln();
        MultiLaurent {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    let x: f64 = e.iter().zip(w).map(|(&k, wi)| k as f64 * wi).sum();
                    (e.clone(), c * (x * lt).exp())
                })
                .collect(),
        }
    }
}

impl RingElt for MultiLaurent {
    fn zero_like(&self) -> Self {
        Self::zero(self.nvars)
    }
    fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }
    fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.nvars);
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                out.add_term(u.iter().zip(v).map(|(x, y)| x + y).collect(), a * b);
            }
        }
        out
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn l1(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }
}

fn fmt_coeff(c: &Complex64) -> String {
    if c.im == 0.0 {
        let r = c.re;
        if r == r.trunc() && r.abs() < 1e15 {
            format!("{}", r as i64)
        } else {
            format!("{r}")
        }
    } else {
        format!("({}{:+}i)", c.re, c.im)
    }
}

impl fmt::Display for MultiLaurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let name = |i: usize| if self.nvars == 1 { "z".to_string() } else { format!("z{}", i + 1) };
        for (k, (e, c)) in self.terms.iter().rev().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", fmt_coeff(c))?;
            for (i, &x) in e.iter().enumerate() {
                match x {
                    0 => {}
                    1 => write!(f, "*{}", name(i))?,
                    _ => write!(f, "*{}^{}", name(i), x)?,
                }
            }
        }
        Ok(())
    }
}

/// Rectangular matrix over a ring, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GRMatrix<T> {
    rows: usize,
    cols: usize,
    entries: Vec<T>,
}

impl<T: Clone> GRMatrix<T> {
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(Vec::len).unwrap_or(0);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::Dimension { expected: c, got: bad.len() });
        }
        Ok(GRMatrix { rows: r, cols: c, entries: rows.into_iter().flatten().collect() })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut((usize, usize)) -> T) -> Self {
        let mut f = f;
        let entries = (0..rows * cols).map(|k| f((k / cols.max(1), k % cols.max(1)))).collect();
        GRMatrix { rows, cols, entries }
    }

    pub fn empty() -> Self {
        GRMatrix { rows: 0, cols: 0, entries: Vec::new() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> impl Iterator<Item = &T> {
        self.entries.iter()
    }

    pub fn row_vec(&self, i: usize) -> Vec<T> {
        self.entries[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> GRMatrix<U> {
        GRMatrix { rows: self.rows, cols: self.cols, entries: self.entries.iter().map(f).collect() }
    }

    pub fn try_map<U>(&self, f: impl Fn(&T) -> Result<U>) -> Result<GRMatrix<U>> {
        Ok(GRMatrix { rows: self.rows, cols: self.cols, entries: self.entries.iter().map(f).collect::<Result<_>>()? })
    }

    /// Remove row `i` and column `j` (either may be `None`).
    pub fn minor(&self, row: Option<usize>, col: Option<usize>) -> Self {
        let rows: Vec<usize> = (0..self.rows).filter(|&i| Some(i) != row).collect();
        let cols: Vec<usize> = (0..self.cols).filter(|&j| Some(j) != col).collect();
        GRMatrix {
            rows: rows.len(),
            cols: cols.len(),
            entries: rows.iter().flat_map(|&i| cols.iter().map(move |&j| (i, j))).map(|(i, j)| self.get(i, j).clone()).collect(),
        }
    }
}

impl<T: RingElt> GRMatrix<T> {
    pub fn mul(&self, other: &Self, zero: &T) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension { expected: self.cols, got: other.rows });
        }
        Ok(GRMatrix::from_fn(self.rows, other.cols, |(i, j)| {
            (0..self.cols).fold(zero.zero_like(), |acc, k| acc.add(&self.get(i, k).mul(other.get(k, j))))
        }))
    }

    /// r·s·max over entries of the ℓ¹ coefficient sum.
    pub fn norm1(&self) -> f64 {
        norm1(self)
    }
}

pub fn norm1<T: RingElt>(a: &GRMatrix<T>) -> f64 {
    let m = a.entries.iter().map(RingElt::l1).fold(0.0, f64::max);
    (a.rows * a.cols) as f64 * m
}

/// λ·g ↦ λ·t^{φ(g)}·g on every term.
pub fn twist<C: Coeff>(
    a: &GRMatrix<GroupRingElt<C>>,
    phi: &CohomClass,
    t: f64,
    abel: &AbelianizationData,
) -> Result<GRMatrix<GroupRingElt<Complex64>>> {
    if !(t > 0.0) {
        return Err(Error::NonPositive(t));
    }
    let lt = t.ln();
    a.try_map(|e| {
        let mut out = GroupRingElt::zero();
        for (w, c) in e.terms() {
            let p = pair(phi, w, abel)?;
            out.add_term(w.clone(), c.to_complex() * (ratio_to_f64(p) * lt).exp());
        }
        Ok(out)
    })
}

pub fn ratio_to_f64(r: Rational64) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// The family t ↦ (z^v ↦ t^{w·v} z^v) applied to a Laurent matrix.
#[derive(Clone, Debug)]
pub struct TwistFamily {
    matrix: GRMatrix<MultiLaurent>,
    weights: Vec<f64>,
}

impl TwistFamily {
    pub fn at(&self, t: f64) -> GRMatrix<MultiLaurent> {
        self.matrix.map(|p| p.twisted(&self.weights, t))
    }
}

pub fn symbolic_twist_weights(m: &GRMatrix<MultiLaurent>, w: &[Rational64]) -> Result<TwistFamily> {
    if let Some(p) = m.entries().find(|p| p.nvars() != w.len()) {
        return Err(Error::Dimension { expected: p.nvars(), got: w.len() });
    }
    Ok(TwistFamily { matrix: m.clone(), weights: w.iter().map(|&r| ratio_to_f64(r)).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpgroup::{abelianize, Presentation};
    use proptest::prelude::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn norm1_examples() {
        let g = Word::generator(0);
        let h = Word::generator(1);
        let a = GRMatrix::from_rows(vec![vec![GroupRingElt::from_terms([(g.clone(), 2i64), (h, -3)])]]).unwrap();
        assert_eq!(norm1(&a), 5.0);
        let e = GroupRingElt::<i64>::from_word(g);
        let b = GRMatrix::from_rows(vec![vec![e.clone(), e.clone()], vec![e.clone(), e]]).unwrap();
        assert_eq!(norm1(&b), 4.0);
    }

    #[test]
    fn twist_examples() {
        let p = Presentation::parse(&["g"], &[]).unwrap();
        let ab = abelianize(&p);
        let g = p.word("g").unwrap();
        let a = GRMatrix::from_rows(vec![vec![GroupRingElt::from_terms([(g.clone(), 1i64), (Word::identity(), -1)])]]).unwrap();
        let phi = CohomClass::integral(&[1]);
        let tw = twist(&a, &phi, 2.0, &ab).unwrap();
        let e = tw.get(0, 0);
        assert!((e.terms()[&g] - c(2.0)).norm() < 1e-15);
        assert!((e.terms()[&Word::identity()] - c(-1.0)).norm() < 1e-15);
        assert_eq!(twist(&a, &phi, 1.0, &ab).unwrap(), a.map(|x| x.to_complex()));

        let m = GRMatrix::from_rows(vec![vec![GroupRingElt::<i64>::from_word(g.clone())]]).unwrap();
        let twice = twist(&twist(&m, &phi, 3.0, &ab).unwrap(), &phi, 5.0, &ab).unwrap();
        assert!((twice.get(0, 0).terms()[&g] - c(15.0)).norm() < 1e-12);
        assert!(twist(&m, &phi, 0.0, &ab).is_err());
    }

    #[test]
    fn symbolic_twist_examples() {
        let p = MultiLaurent::from_coeffs_1var(&[1, -1, 1], 0);
        let fam = symbolic_twist_weights(&GRMatrix::from_rows(vec![vec![p]]).unwrap(), &[Rational64::from_integer(1)]).unwrap();
        let q = fam.at(3.0);
        let e = q.get(0, 0);
        assert!((e.terms()[&vec![2]] - c(9.0)).norm() < 1e-12);
        assert!((e.terms()[&vec![1]] - c(-3.0)).norm() < 1e-12);
        assert!((e.terms()[&vec![0]] - c(1.0)).norm() < 1e-12);

        let p2 = MultiLaurent::from_terms(2, [(vec![0, 0], c(1.0)), (vec![1, 0], c(1.0)), (vec![0, 1], c(1.0))]);
        let w = [Rational64::from_integer(1), Rational64::from_integer(0)];
        let fam = symbolic_twist_weights(&GRMatrix::from_rows(vec![vec![p2]]).unwrap(), &w).unwrap();
        let e = fam.at(2.0);
        assert!((e.get(0, 0).terms()[&vec![1, 0]] - c(2.0)).norm() < 1e-12);
        assert!((e.get(0, 0).terms()[&vec![0, 1]] - c(1.0)).norm() < 1e-12);
        assert!(symbolic_twist_weights(&fam.at(1.0), &[Rational64::from_integer(1)]).is_err());
    }

    #[test]
    fn twist_agrees_with_symbolic_after_push() {
        let p = Presentation::parse(&["a", "b"], &["a b a B A B"]).unwrap();
        let ab = abelianize(&p);
        let elt = GroupRingElt::from_terms([(p.word("abA").unwrap(), 3i64), (p.word("bb").unwrap(), -2)]);
        let phi = CohomClass::integral(&[1]);
        let t = 1.7;
        let tw = twist(&GRMatrix::from_rows(vec![vec![elt.clone()]]).unwrap(), &phi, t, &ab).unwrap();
        let pushed_tw = tw.get(0, 0).push(|w| ab.weight(w), 1);
        let sym = elt.push(|w| ab.weight(w), 1).twisted(&[1.0], t);
        assert!(pushed_tw.sub(&sym).l1() < 1e-12);
    }

    #[test]
    fn display_is_readable() {
        let p = MultiLaurent::from_coeffs_1var(&[1, -1, 1], 0);
        assert_eq!(p.to_string(), "1*z^2 + -1*z + 1");
    }

    fn elt_strategy() -> impl Strategy<Value = GroupRingElt<i64>> {
        prop::collection::vec((prop::collection::vec((0usize..2, -2i64..=2), 0..4), -3i64..=3), 0..4).prop_map(|terms| {
            GroupRingElt::from_terms(terms.into_iter().map(|(w, c)| (Word::reduce(&w, 2).unwrap(), c)))
        })
    }

    fn mat_strategy() -> impl Strategy<Value = GRMatrix<GroupRingElt<i64>>> {
        prop::collection::vec(elt_strategy(), 4).prop_map(|v| GRMatrix::from_fn(2, 2, |(i, j)| v[2 * i + j].clone()))
    }

    proptest! {
        #[test]
        fn ring_axioms(a in elt_strategy(), b in elt_strategy(), c in elt_strategy()) {
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
            prop_assert_eq!(a.add(&b).mul(&c), a.mul(&c).add(&b.mul(&c)));
            prop_assert_eq!(a.add(&b), b.add(&a));
            prop_assert!(a.sub(&a).is_zero());
            prop_assert!(a.terms().values().all(|&x| x != 0));
        }

        #[test]
        fn norm1_submultiplicative(a in mat_strategy(), b in mat_strategy()) {
            let ab = a.mul(&b, &GroupRingElt::zero()).unwrap();
            prop_assert!(norm1(&ab) <= norm1(&a) * norm1(&b) + 1e-9);
        }

        #[test]
        fn twist_inverse_round_trip(a in mat_strategy(), t in 0.05f64..20.0) {
            let p = Presentation::parse(&["a", "b"], &[]).unwrap();
            let ab = abelianize(&p);
            let phi = CohomClass::new(vec![Rational64::new(1, 2), Rational64::from_integer(-1)]);
            let back = twist(&twist(&a, &phi, t, &ab).unwrap(), &phi, 1.0 / t, &ab).unwrap();
            for (x, y) in back.entries().zip(a.entries()) {
                let y = y.to_complex();
                for (w, c) in y.terms() {
                    prop_assert!((x.terms().get(w).copied().unwrap_or_default() - c).norm() < 1e-12 * c.norm().max(1.0));
                }
                prop_assert_eq!(x.len(), y.len());
            }
        }

        #[test]
        fn twist_is_multiplicative(a in mat_strategy(), b in mat_strategy(), t in 0.2f64..5.0) {
            let p = Presentation::parse(&["a", "b"], &[]).unwrap();
            let ab = abelianize(&p);
            let phi = CohomClass::integral(&[1, 2]);
            let lhs = twist(&a.mul(&b, &GroupRingElt::zero()).unwrap(), &phi, t, &ab).unwrap();
            let rhs = twist(&a, &phi, t, &ab).unwrap().mul(&twist(&b, &phi, t, &ab).unwrap(), &GroupRingElt::zero()).unwrap();
            for (x, y) in lhs.entries().zip(rhs.entries()) {
                prop_assert!(x.sub(y).l1() < 1e-9 * (1.0 + x.l1()));
            }
        }
    }
}

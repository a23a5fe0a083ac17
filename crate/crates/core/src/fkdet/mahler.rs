//! Twisted Mahler measures: exact univariate formula from roots, and tensor
//! trapezoid integration over the scaled torus for several variables.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::groupring::{ratio_to_f64, MultiLaurent};

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// p(z) = c·z^r·Π(z − aᵢ) with every aᵢ ≠ 0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OneVarDetData {
    pub leading_coeff_abs: f64,
    pub order_at_zero: i64,
    pub roots: Vec<Complex64>,
}

impl OneVarDetData {
    pub fn from_poly(p: &MultiLaurent) -> Result<Self> {
        if p.nvars() != 1 {
            return Err(Error::NotUnivariate(p.nvars()));
        }
        let (lo, hi) = p.degree_bounds().ok_or(Error::ZeroPolynomial)?[0];
        let coeffs: Vec<Complex64> = (lo..=hi).map(|e| p.terms().get(&vec![e]).copied().unwrap_or_default()).collect();
        let lead = coeffs[coeffs.len() - 1];
        // Repeated roots lose most of their digits in floating point; for
        // integer polynomials split off the multiplicities exactly first.
        let roots = match p.integer_coeffs(1e-9) {
            Some(ints) if hi > lo => {
                let dense: Vec<BigRational> = (lo..=hi)
                    .map(|e| BigRational::from_integer(BigInt::from(ints.get(&vec![e]).copied().unwrap_or(0))))
                    .collect();
                squarefree_parts(&dense)
                    .into_iter()
                    .flat_map(|(factor, mult)| {
                        let c: Vec<Complex64> = factor.iter().map(|x| Complex64::new(x.to_f64().unwrap_or(f64::NAN), 0.0)).collect();
                        let r = polynomial_roots(&c);
                        std::iter::repeat_n(r, mult).flatten()
                    })
                    .collect()
            }
            _ => polynomial_roots(&coeffs),
        };
        Ok(OneVarDetData { leading_coeff_abs: lead.norm(), order_at_zero: lo, roots })
    }

    pub fn root_count(&self) -> usize {
        self.roots.len()
    }

    /// ln of the Fuglede–Kadison determinant of multiplication by p(T·z),
    /// where ln T = `log_scale`.
    pub fn log_det_at_scale(&self, log_scale: f64) -> f64 {
        let outside: f64 = self.roots.iter().map(|a| (a.norm().ln() - log_scale).max(0.0)).sum();
        (self.order_at_zero + self.roots.len() as i64) as f64 * log_scale + self.leading_coeff_abs.ln() + outside
    }

    /// Weight `w` twist at parameter t: T = t^w.
    pub fn log_det(&self, w: f64, t: f64) -> f64 {
        self.log_det_at_scale(w * t.ln())
    }

    pub fn mahler(&self) -> f64 {
        self.log_det_at_scale(0.0)
    }

    pub fn reconstruct(&self) -> Vec<Complex64> {
        let mut c = vec![Complex64::new(1.0, 0.0)];
        for a in &self.roots {
            let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
            for (k, x) in c.iter().enumerate() {
                next[k + 1] += x;
                next[k] -= x * a;
            }
            c = next;
        }
        c
    }

    /// Smallest and largest root magnitudes, mapped to t-space for weight `w`.
    pub fn thresholds(&self, w: f64) -> Option<(f64, f64)> {
        if self.roots.is_empty() || w == 0.0 {
            return None;
        }
        let mags = self.roots.iter().map(|a| a.norm());
        let lo = mags.clone().fold(f64::INFINITY, f64::min);
        let hi = mags.fold(0.0, f64::max);
        let (a, b) = (lo.powf(1.0 / w), hi.powf(1.0 / w));
        Some((a.min(b), a.max(b)))
    }
}

type RatPoly = Vec<BigRational>;

fn trim(mut p: RatPoly) -> RatPoly {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

fn derivative(p: &[BigRational]) -> RatPoly {
    p.iter().enumerate().skip(1).map(|(k, c)| c * BigRational::from_integer(BigInt::from(k))).collect()
}

fn sub(a: &[BigRational], b: &[BigRational]) -> RatPoly {
    let n = a.len().max(b.len());
    let zero = BigRational::zero();
    trim((0..n).map(|k| a.get(k).unwrap_or(&zero) - b.get(k).unwrap_or(&zero)).collect())
}

/// Quotient and remainder; b must be nonzero.
fn div_rem(a: &[BigRational], b: &[BigRational]) -> (RatPoly, RatPoly) {
    let mut r = trim(a.to_vec());
    let db = b.len() - 1;
    if r.len() < b.len() {
        return (Vec::new(), r);
    }
    let mut q = vec![BigRational::zero(); r.len() - db];
    while r.len() >= b.len() {
        let shift = r.len() - b.len();
        let c = r.last().unwrap() / b.last().unwrap();
        for (k, x) in b.iter().enumerate() {
            r[shift + k] -= &c * x;
        }
        q[shift] = c;
        r.pop();
        r = trim(r);
    }
    (q, r)
}

fn monic(p: RatPoly) -> RatPoly {
    let lead = p.last().unwrap().clone();
    p.into_iter().map(|c| c / &lead).collect()
}

fn gcd(a: &[BigRational], b: &[BigRational]) -> RatPoly {
    let (mut a, mut b) = (trim(a.to_vec()), trim(b.to_vec()));
    while !b.is_empty() {
        let r = div_rem(&a, &b).1;
        a = b;
        b = r;
    }
    monic(a)
}

/// Yun's square-free decomposition: pairs (factor, multiplicity) whose
/// product is p up to a constant. Constant factors are dropped.
fn squarefree_parts(p: &[BigRational]) -> Vec<(RatPoly, usize)> {
    let f = trim(p.to_vec());
    let a0 = gcd(&f, &derivative(&f));
    let mut b = div_rem(&f, &a0).0;
    let mut d = sub(&div_rem(&derivative(&f), &a0).0, &derivative(&b));
    let mut out = Vec::new();
    let mut mult = 1;
    while b.len() > 1 {
        let a = if d.is_empty() { monic(b.clone()) } else { gcd(&b, &d) };
        b = div_rem(&b, &a).0;
        let c = div_rem(&d, &a).0;
        d = sub(&c, &derivative(&b));
        if a.len() > 1 {
            out.push((a, mult));
        }
        mult += 1;
    }
    out
}

/// Roots of c_0 + c_1 z + … + c_n z^n (c_n ≠ 0, c_0 ≠ 0) via the companion
/// matrix, polished by Newton steps.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = coeffs[n];
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    if n == 1 {
        return vec![-monic[0]];
    }
    let companion = DMatrix::from_fn(n, n, |i, j| {
        if j == n - 1 {
            -monic[i]
        } else if i == j + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let mut roots: Vec<Complex64> = match nalgebra::linalg::Schur::try_new(companion, 1e-15, 60 * n) {
        Some(s) => s.unpack().1.diagonal().iter().copied().collect(),
        None => aberth(&monic),
    };
    for r in roots.iter_mut() {
        *r = polish(&monic, *r);
    }
    roots
}

fn eval_with_derivative(c: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

fn polish(c: &[Complex64], mut z: Complex64) -> Complex64 {
    for _ in 0..8 {
        let (p, dp) = eval_with_derivative(c, z);
        if dp.norm() == 0.0 || p.norm() == 0.0 {
            break;
        }
        let next = z - p / dp;
        if eval_with_derivative(c, next).0.norm() < p.norm() {
            z = next;
        } else {
            break;
        }
    }
    z
}

fn aberth(monic: &[Complex64]) -> Vec<Complex64> {
    let n = monic.len() - 1;
    let radius = 1.0 + monic[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..n).map(|k| Complex64::from_polar(radius * 0.5, 2.0 * PI * (k as f64 + 0.25) / n as f64)).collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let (p, dp) = eval_with_derivative(monic, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..n).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let step = ratio / (1.0 - ratio * repulsion);
            z[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// Exact univariate twisted Mahler measure: returns the root data and
/// ln det at parameter t for weight w.
pub fn mahler_exact_1var(p: &MultiLaurent, w: Rational64, t: f64) -> Result<(OneVarDetData, f64)> {
    if !(t > 0.0) {
        return Err(Error::NonPositive(t));
    }
    let data = OneVarDetData::from_poly(p)?;
    let v = data.log_det(ratio_to_f64(w), t);
    Ok((data, v))
}

#[derive(Clone, Copy, Debug)]
pub struct NumericOptions {
    pub tol: f64,
    pub base_points: usize,
    pub max_doublings: usize,
    /// Upper bound on grid size (total points).
    pub max_points: usize,
}

impl Default for NumericOptions {
    fn default() -> Self {
        NumericOptions { tol: 1e-4, base_points: 64, max_doublings: 4, max_points: 1 << 24 }
    }
}

/// (2π)^{-d} ∫ log|p(t^{w₁}e^{iθ₁}, …)| dθ by tensor trapezoid rules with
/// doubling; returns (estimate, last difference).
pub fn mahler_numeric(p: &MultiLaurent, w: &[f64], t: f64, opts: NumericOptions) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return Err(Error::NonPositive(t));
    }
    if p.is_empty() {
        return Err(Error::ZeroPolynomial);
    }
    let d = p.nvars();
    if w.len() != d {
        return Err(Error::Dimension { expected: d, got: w.len() });
    }
    let twisted = p.twisted(w, t);
    if d == 0 {
        let c = twisted.terms().values().next().copied().unwrap_or_default();
        return Ok((c.norm().ln(), 0.0));
    }
    let mut n = opts.base_points;
    let mut prev = trapezoid(&twisted, n);
    let mut last_diff = f64::INFINITY;
    for _ in 0..opts.max_doublings {
        if n.pow(d as u32) * 2usize.pow(d as u32) > opts.max_points {
            break;
        }
        n *= 2;
        let next = trapezoid(&twisted, n);
        last_diff = (next - prev).abs();
        prev = next;
        if last_diff < opts.tol {
            return Ok((prev, last_diff));
        }
    }
    Err(Error::NoConvergence { last_diff, tol: opts.tol })
}

/// Mean of log|p| over the n^d grid with golden-ratio offsets.
pub fn trapezoid(p: &MultiLaurent, n: usize) -> f64 {
    let d = p.nvars();
    let bounds = p.degree_bounds().expect("nonzero polynomial");
    // tables[v][k][e - lo_v] = z_v(k)^e
    let tables: Vec<Vec<Vec<Complex64>>> = (0..d)
        .map(|v| {
            let offset = ((v + 1) as f64 * GOLDEN).fract();
            let (lo, hi) = bounds[v];
            (0..n)
                .map(|k| {
                    let theta = 2.0 * PI * (k as f64 + offset) / n as f64;
                    (lo..=hi).map(|e| Complex64::from_polar(1.0, theta * e as f64)).collect()
                })
                .collect()
        })
        .collect();
    let terms: Vec<(Vec<usize>, Complex64)> = p
        .terms()
        .iter()
        .map(|(e, c)| (e.iter().zip(&bounds).map(|(&x, b)| (x - b.0) as usize).collect(), *c))
        .collect();
    let total = n.pow(d as u32);
    let sum: f64 = (0..total)
        .into_par_iter()
        .with_min_len(256)
        .map(|mut k| {
            let mut idx = [0usize; 8];
            let mut big = Vec::new();
            let slots: &mut [usize] = if d <= 8 {
                &mut idx[..d]
            } else {
                big.resize(d, 0);
                &mut big
            };
            for v in (0..d).rev() {
                slots[v] = k % n;
                k /= n;
            }
            let val: Complex64 = terms
                .iter()
                .map(|(e, c)| e.iter().enumerate().fold(*c, |acc, (v, &x)| acc * tables[v][slots[v]][x]))
                .sum();
            val.norm().ln()
        })
        .sum();
    sum / total as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn exact_examples() {
        let p = MultiLaurent::from_coeffs_1var(&[-2, 1], 0);
        let (data, v) = mahler_exact_1var(&p, Rational64::from_integer(1), 1.0).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-14);
        assert_eq!(data.root_count(), 1);
        // Jensen cross-check
        let (num, _) = mahler_numeric(&p, &[1.0], 1.0, NumericOptions { tol: 1e-10, ..Default::default() }).unwrap();
        assert!((num - 2f64.ln()).abs() < 1e-9);

        let z = MultiLaurent::from_coeffs_1var(&[1], 1);
        for t in [0.1, 1.0, 7.0] {
            let (_, v) = mahler_exact_1var(&z, Rational64::from_integer(1), t).unwrap();
            assert!((v - t.ln()).abs() < 1e-14);
        }

        let alex = MultiLaurent::from_coeffs_1var(&[1, -1, 1], 0);
        for t in [0.01, 0.5, 1.0, 2.0, 1e3] {
            let (_, v) = mahler_exact_1var(&alex, Rational64::from_integer(1), t).unwrap();
            assert!((v - 2.0 * t.ln().max(0.0)).abs() < 1e-10, "t={t}: {v}");
        }
        assert!(matches!(mahler_exact_1var(&MultiLaurent::zero(1), Rational64::from_integer(1), 1.0), Err(Error::ZeroPolynomial)));
    }

    #[test]
    fn numeric_examples() {
        let two = MultiLaurent::constant(2, c(2.0));
        let (v, _) = mahler_numeric(&two, &[1.0, 0.0], 1.0, NumericOptions::default()).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-12);

        let p = MultiLaurent::from_terms(2, [(vec![0, 0], c(1.0)), (vec![1, 0], c(1.0)), (vec![0, 1], c(1.0))]);
        let (v, _) = mahler_numeric(&p, &[1.0, 0.0], 1.0, NumericOptions { tol: 1e-3, ..Default::default() }).unwrap();
        assert!((v - 0.323_065_947_2).abs() < 1e-3);

        let q = MultiLaurent::from_terms(2, [(vec![1, 1], c(1.0)), (vec![0, 0], c(-1.0))]);
        let (v, _) = mahler_numeric(&q, &[1.0, 1.0], 1.0, NumericOptions { tol: 1e-3, ..Default::default() }).unwrap();
        assert!(v.abs() < 1e-3);
    }

    #[test]
    fn nonconvergence_is_reported() {
        let p = MultiLaurent::from_terms(2, [(vec![0, 0], c(1.0)), (vec![1, 0], c(1.0)), (vec![0, 1], c(1.0))]);
        let r = mahler_numeric(&p, &[1.0, 0.0], 1.0, NumericOptions { tol: 1e-12, max_doublings: 1, ..Default::default() });
        assert!(matches!(r, Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn golden_ratio_roots() {
        let p = MultiLaurent::from_coeffs_1var(&[1, -3, 1], 0);
        let data = OneVarDetData::from_poly(&p).unwrap();
        let phi2 = (3.0 + 5f64.sqrt()) / 2.0;
        let (lo, hi) = data.thresholds(1.0).unwrap();
        assert!((hi - phi2).abs() < 1e-12);
        assert!((lo * hi - 1.0).abs() < 1e-12);
        assert!((data.mahler() - phi2.ln()).abs() < 1e-13);
    }

    proptest! {
        #[test]
        fn reconstruction_matches(coeffs in prop::collection::vec(-9i64..=9, 2..12), shift in -3i64..3) {
            let mut coeffs = coeffs;
            if coeffs[0] == 0 { coeffs[0] = 1; }
            let last = coeffs.len() - 1;
            if coeffs[last] == 0 { coeffs[last] = -2; }
            let p = MultiLaurent::from_coeffs_1var(&coeffs, shift);
            let data = OneVarDetData::from_poly(&p).unwrap();
            prop_assert_eq!(data.order_at_zero, shift);
            prop_assert_eq!(data.root_count(), last);
            let lead = coeffs[last] as f64;
            let rec = data.reconstruct();
            let scale = coeffs.iter().map(|&x| (x as f64).abs()).fold(1.0, f64::max);
            for (k, &x) in coeffs.iter().enumerate() {
                prop_assert!((rec[k] * lead - c(x as f64)).norm() <= 1e-9 * scale * 10f64.powi(coeffs.len() as i32 / 4));
            }
        }

        #[test]
        fn numeric_agrees_with_exact_on_cubics(a in -5i64..=5, b in -5i64..=5, lead in 1i64..=4, c0 in 1i64..=5, t in 0.3f64..3.0) {
            let p = MultiLaurent::from_coeffs_1var(&[c0, a, b, lead], 0);
            let (data, exact) = mahler_exact_1var(&p, Rational64::from_integer(1), t).unwrap();
            // keep roots off the integration circle so the trapezoid rule is well conditioned
            let lt = t.ln();
            prop_assume!(data.roots.iter().all(|r| (r.norm().ln() - lt).abs() > 0.05));
            let (num, _) = mahler_numeric(&p, &[1.0], t, NumericOptions { tol: 1e-7, max_doublings: 8, ..Default::default() }).unwrap();
            prop_assert!((num - exact).abs() < 1e-4, "num {} exact {}", num, exact);
        }

        #[test]
        fn exact_is_continuous_across_thresholds(a in -5i64..=5, c0 in 1i64..=5) {
            let p = MultiLaurent::from_coeffs_1var(&[c0, a, 1], 0);
            let data = OneVarDetData::from_poly(&p).unwrap();
            for r in &data.roots {
                let t0 = r.norm();
                let h = 1e-7;
                let jump = (data.log_det(1.0, t0 * (1.0 + h)) - data.log_det(1.0, t0 * (1.0 - h))).abs();
                // slope is bounded by the degree
                prop_assert!(jump <= 3.0 * 2.0 * h * 1.01);
            }
        }
    }
}

//! Commutative determinants of square matrices over ℂ[ℤ^d].

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::groupring::{GRMatrix, MultiLaurent, RingElt};

const EXPANSION_LIMIT: usize = 4;

pub fn laurent_det(m: &GRMatrix<MultiLaurent>, nvars: usize) -> Result<MultiLaurent> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    if let Some(p) = m.entries().find(|p| p.nvars() != nvars) {
        return Err(Error::Dimension { expected: nvars, got: p.nvars() });
    }
    let n = m.rows();
    let det = if n <= EXPANSION_LIMIT {
        expand(m, nvars)
    } else {
        interpolate(m, nvars)?
    };
    let integral = m.entries().all(|p| p.integer_coeffs(0.0).is_some());
    Ok(if integral { det.cleaned(1e-6) } else { det.cleaned(1e-12 * (1.0 + det.l1())) })
}

fn expand(m: &GRMatrix<MultiLaurent>, nvars: usize) -> MultiLaurent {
    let n = m.rows();
    if n == 0 {
        return MultiLaurent::one(nvars);
    }
    let cols: Vec<usize> = (0..n).collect();
    expand_rows(m, 0, &cols, nvars)
}

fn expand_rows(m: &GRMatrix<MultiLaurent>, row: usize, cols: &[usize], nvars: usize) -> MultiLaurent {
    if cols.len() == 1 {
        return m.get(row, cols[0]).clone();
    }
    let mut acc = MultiLaurent::zero(nvars);
    for (k, &c) in cols.iter().enumerate() {
        let e = m.get(row, c);
        if e.is_zero() {
            continue;
        }
        let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
        let term = e.mul(&expand_rows(m, row + 1, &rest, nvars));
        acc = if k % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
    }
    acc
}

/// Per-variable (low, high) exponent bounds of the determinant, or `None`
/// when some row or column vanishes identically.
pub fn det_degree_bounds(m: &GRMatrix<MultiLaurent>, nvars: usize) -> Option<Vec<(i64, i64)>> {
    let n = m.rows();
    let bounds: Vec<Option<Vec<(i64, i64)>>> = m.entries().map(MultiLaurent::degree_bounds).collect();
    let at = |i: usize, j: usize| bounds[i * n + j].as_ref();
    let mut out = Vec::with_capacity(nvars);
    for v in 0..nvars {
        let line = |by_row: bool| -> Option<(i64, i64)> {
            let (mut lo, mut hi) = (0, 0);
            for a in 0..n {
                let cells = (0..n).filter_map(|b| if by_row { at(a, b) } else { at(b, a) });
                let (mut l, mut h) = (i64::MAX, i64::MIN);
                for c in cells {
                    l = l.min(c[v].0);
                    h = h.max(c[v].1);
                }
                if l == i64::MAX {
                    return None;
                }
                lo += l;
                hi += h;
            }
            Some((lo, hi))
        };
        let (r, c) = (line(true)?, line(false)?);
        out.push((r.0.max(c.0), r.1.min(c.1)));
    }
    Some(out)
}

pub fn eval_det(m: &GRMatrix<MultiLaurent>, point: &[Complex64]) -> Complex64 {
    let n = m.rows();
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let dense = DMatrix::from_fn(n, n, |i, j| m.get(i, j).eval(point));
    dense.determinant()
}

fn interpolate(m: &GRMatrix<MultiLaurent>, nvars: usize) -> Result<MultiLaurent> {
    let Some(bounds) = det_degree_bounds(m, nvars) else {
        return Ok(MultiLaurent::zero(nvars));
    };
    if bounds.iter().any(|&(lo, hi)| lo > hi) {
        return Ok(MultiLaurent::zero(nvars));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for pad in [0i64, 1] {
        let sizes: Vec<usize> = bounds.iter().map(|&(lo, hi)| ((hi - lo + 1) * (1 + pad)) as usize).collect();
        let p = interpolate_on_grid(m, &bounds, &sizes);
        let probe: Vec<Complex64> = (0..nvars).map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI))).collect();
        let direct = eval_det(m, &probe);
        let interp = p.eval(&probe);
        let scale = 1.0 + p.l1();
        if (direct - interp).norm() <= 1e-8 * scale {
            return Ok(p);
        }
    }
    Err(Error::InterpolationFailed)
}

fn interpolate_on_grid(m: &GRMatrix<MultiLaurent>, bounds: &[(i64, i64)], sizes: &[usize]) -> MultiLaurent {
    use rayon::prelude::*;
    let nvars = bounds.len();
    let total: usize = sizes.iter().product();
    let index = |mut k: usize| -> Vec<usize> {
        let mut idx = vec![0; nvars];
        for v in (0..nvars).rev() {
            idx[v] = k % sizes[v];
            k /= sizes[v];
        }
        idx
    };
    let root = |v: usize, k: usize| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / sizes[v] as f64);
    // samples of q(z) = z^{-low}·det(z) on the grid
    let mut values: Vec<Complex64> = (0..total)
        .into_par_iter()
        .map(|k| {
            let idx = index(k);
            let point: Vec<Complex64> = (0..nvars).map(|v| root(v, idx[v])).collect();
            let shift = (0..nvars).fold(Complex64::new(1.0, 0.0), |acc, v| acc * point[v].powi(-(bounds[v].0 as i32)));
            eval_det(m, &point) * shift
        })
        .collect();
    // separable inverse DFT
    let mut stride = 1;
    for v in (0..nvars).rev() {
        let nv = sizes[v];
        let mut out = vec![Complex64::new(0.0, 0.0); total];
        for (k, slot) in out.iter_mut().enumerate() {
            let e = (k / stride) % nv;
            let base = k - e * stride;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..nv {
                s += values[base + j * stride] * root(v, (e * j) % nv).conj();
            }
            *slot = s / nv as f64;
        }
        values = out;
        stride *= nv;
    }
    MultiLaurent::from_terms(
        nvars,
        values.into_iter().enumerate().map(|(k, c)| {
            let idx = index(k);
            (idx.iter().zip(bounds).map(|(&e, b)| e as i64 + b.0).collect(), c)
        }),
    )
    .pruned(1e-11)
}

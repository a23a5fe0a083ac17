//! Dense integer matrices over arbitrary-precision integers: Smith normal
//! form with transforms, row Hermite normal form and lattice coordinates.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_rows_i64(rows: &[Vec<i64>], cols: usize) -> Self {
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged integer matrix");
            for (j, &x) in r.iter().enumerate() {
                m[(i, j)] = BigInt::from(x);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_i64_rows(&self) -> Option<Vec<Vec<i64>>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.to_i64()).collect())
            .collect()
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[dst] += factor * row[src]
    fn add_row(&mut self, dst: usize, src: usize, factor: &BigInt) {
        if factor.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let v = &self[(src, j)] * factor;
            self[(dst, j)] += v;
        }
    }

    fn add_col(&mut self, dst: usize, src: usize, factor: &BigInt) {
        if factor.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let v = &self[(i, src)] * factor;
            self[(i, dst)] += v;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let v = -&self[(i, j)];
            self[(i, j)] = v;
        }
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }
}

/// `left * input * right == diagonal`, with `left`, `right` unimodular and
/// the nonzero diagonal entries positive, each dividing the next.
#[derive(Clone, Debug)]
pub struct Smith {
    pub diagonal: IntMatrix,
    pub left: IntMatrix,
    pub right: IntMatrix,
    pub rank: usize,
}

impl Smith {
    pub fn divisors(&self) -> Vec<BigInt> {
        (0..self.rank).map(|i| self.diagonal[(i, i)].clone()).collect()
    }
}

pub fn smith_normal_form(input: &IntMatrix) -> Smith {
    let (m, n) = (input.rows, input.cols);
    let mut a = input.clone();
    let mut left = IntMatrix::identity(m);
    let mut right = IntMatrix::identity(n);
    let mut k = 0;

    while k < m.min(n) {
        // smallest nonzero entry of the trailing block becomes the pivot
        let mut best: Option<(usize, usize)> = None;
        for i in k..m {
            for j in k..n {
                if a[(i, j)].is_zero() {
                    continue;
                }
                match best {
                    Some((bi, bj)) if a[(bi, bj)].abs() <= a[(i, j)].abs() => {}
                    _ => best = Some((i, j)),
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        a.swap_rows(k, pi);
        left.swap_rows(k, pi);
        a.swap_cols(k, pj);
        right.swap_cols(k, pj);

        let mut dirty = false;
        for i in k + 1..m {
            if a[(i, k)].is_zero() {
                continue;
            }
            let q = a[(i, k)].div_floor(&a[(k, k)]);
            let f = -q;
            a.add_row(i, k, &f);
            left.add_row(i, k, &f);
            if !a[(i, k)].is_zero() {
                dirty = true;
            }
        }
        for j in k + 1..n {
            if a[(k, j)].is_zero() {
                continue;
            }
            let q = a[(k, j)].div_floor(&a[(k, k)]);
            let f = -q;
            a.add_col(j, k, &f);
            right.add_col(j, k, &f);
            if !a[(k, j)].is_zero() {
                dirty = true;
            }
        }
        if dirty {
            continue;
        }

        // divisibility: fold an offending row into the pivot row and retry
        let mut offending = None;
        'scan: for i in k + 1..m {
            for j in k + 1..n {
                if !a[(i, j)].is_multiple_of(&a[(k, k)]) {
                    offending = Some(i);
                    break 'scan;
                }
            }
        }
        if let Some(i) = offending {
            let one = BigInt::one();
            a.add_row(k, i, &one);
            left.add_row(k, i, &one);
            continue;
        }

        if a[(k, k)].is_negative() {
            a.negate_row(k);
            left.negate_row(k);
        }
        k += 1;
    }

    Smith { diagonal: a, left, right, rank: k }
}

/// Row-style echelon (Hermite) basis of the lattice spanned by `generators`.
/// Every returned vector has a positive pivot strictly to the right of the
/// previous one, and entries above each pivot are reduced modulo it.
pub fn lattice_basis(generators: &[Vec<i64>], dim: usize) -> Vec<Vec<i64>> {
    let mut rows: Vec<Vec<BigInt>> = generators
        .iter()
        .map(|g| g.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    let mut basis: Vec<Vec<BigInt>> = Vec::new();
    let mut pivots = Vec::new();

    for col in 0..dim {
        // gcd-combine all rows with nonzero entry in this column
        loop {
            let mut nz: Vec<usize> = (0..rows.len()).filter(|&i| !rows[i][col].is_zero()).collect();
            if nz.len() <= 1 {
                if let Some(&i) = nz.first() {
                    let mut r = rows.swap_remove(i);
                    if r[col].is_negative() {
                        r.iter_mut().for_each(|x| *x = -&*x);
                    }
                    basis.push(r);
                    pivots.push(col);
                }
                break;
            }
            nz.sort_by(|&x, &y| rows[x][col].abs().cmp(&rows[y][col].abs()));
            let p = nz[0];
            for &i in &nz[1..] {
                let q = rows[i][col].div_floor(&rows[p][col]);
                let pr = rows[p].clone();
                for (x, y) in rows[i].iter_mut().zip(pr.iter()) {
                    *x -= &q * y;
                }
            }
        }
        rows.retain(|r| r.iter().any(|x| !x.is_zero()));
    }

    // reduce above pivots
    for k in 0..basis.len() {
        let pc = pivots[k];
        for i in 0..k {
            let q = basis[i][pc].div_floor(&basis[k][pc]);
            if !q.is_zero() {
                let bk = basis[k].clone();
                for (x, y) in basis[i].iter_mut().zip(bk.iter()) {
                    *x -= &q * y;
                }
            }
        }
    }

    basis
        .into_iter()
        .map(|r| r.iter().map(|x| x.to_i64().expect("lattice entry overflow")).collect())
        .collect()
}

/// Coordinates of `v` in an echelon basis produced by [`lattice_basis`], or
/// `None` when `v` is not in the lattice.
pub fn lattice_coords(basis: &[Vec<i64>], v: &[i64]) -> Option<Vec<i64>> {
    let mut rest: Vec<i64> = v.to_vec();
    let mut coords = Vec::with_capacity(basis.len());
    for b in basis {
        let pc = b.iter().position(|&x| x != 0)?;
        if rest[pc] % b[pc] != 0 {
            return None;
        }
        let c = rest[pc] / b[pc];
        for (x, y) in rest.iter_mut().zip(b.iter()) {
            *x -= c * y;
        }
        coords.push(c);
    }
    if rest.iter().all(|&x| x == 0) {
        Some(coords)
    } else {
        None
    }
}

/// Absolute value of the covolume (product of pivots) of a full-rank echelon basis.
pub fn echelon_index(basis: &[Vec<i64>]) -> i64 {
    basis
        .iter()
        .map(|b| b.iter().find(|&&x| x != 0).copied().unwrap_or(0).abs())
        .product()
}

//! Restriction of right multiplication over a quotient Q ⊆ H × ℤ^d to the
//! central lattice Λ = {v : (1, v) ∈ Q}.

use std::collections::{HashMap, VecDeque};

use num_rational::Rational64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fpgroup::{perm_compose, perm_identity, CohomClass, Perm, QuotientHom};
use crate::groupring::{GRMatrix, IntGroupRingElt, MultiLaurent};
use crate::intmat::{echelon_index, lattice_basis, lattice_coords};
use num_complex::Complex64;

pub const DEFAULT_SIZE_BOUND: usize = 5040;

#[derive(Clone, Debug, Serialize)]
pub struct LatticeRestriction {
    /// |H′|, the size of the finite projection of Q.
    pub fiber_size: usize,
    /// Echelon basis of Λ, one vector of ℤ^d per row.
    pub lattice_basis: Vec<Vec<i64>>,
    pub transversal: Vec<(Perm, Vec<i64>)>,
    #[serde(skip)]
    pub restricted: GRMatrix<MultiLaurent>,
    /// φ expressed on the Λ basis.
    pub reweighted_phi: Vec<Rational64>,
}

impl LatticeRestriction {
    pub fn rank(&self) -> usize {
        self.lattice_basis.len()
    }

    pub fn phi_weights_f64(&self) -> Vec<f64> {
        self.reweighted_phi.iter().map(|&r| crate::groupring::ratio_to_f64(r)).collect()
    }
}

#[derive(Clone, Debug, Default)]
pub struct RestrictionOptions {
    pub size_bound: Option<usize>,
    /// Extra Λ-translates (in Λ coordinates) added to the transversal vectors,
    /// indexed in BFS order.
    pub transversal_shifts: Option<Vec<Vec<i64>>>,
    /// Reordering of the transversal (a permutation of BFS indices).
    pub transversal_order: Option<Vec<usize>>,
}

/// BFS over the finite projection: returns transversal elements (h, v_h)
/// and the Schreier generators of Λ.
fn transversal_and_schreier(h: &QuotientHom, bound: usize) -> Result<(Vec<(Perm, Vec<i64>)>, Vec<Vec<i64>>)> {
    let n = h.presentation().generator_count();
    let d = h.rank();
    let gens: Vec<(Perm, Vec<i64>)> = (0..n)
        .map(|g| {
            let perm = h.finite().map(|f| f.images[g].clone()).unwrap_or_default();
            (perm, h.weights()[g].clone())
        })
        .collect();
    let start = h.finite().map(|f| perm_identity(f.degree)).unwrap_or_default();
    let mut index: HashMap<Perm, usize> = HashMap::new();
    let mut elems: Vec<(Perm, Vec<i64>)> = vec![(start.clone(), vec![0; d])];
    index.insert(start, 0);
    let mut queue = VecDeque::from([0usize]);
    let mut schreier = Vec::new();
    while let Some(i) = queue.pop_front() {
        let (p, v) = elems[i].clone();
        for (gp, gv) in &gens {
            let q = perm_compose(&p, gp);
            let w: Vec<i64> = v.iter().zip(gv).map(|(a, b)| a + b).collect();
            match index.get(&q) {
                Some(&k) => {
                    let diff: Vec<i64> = w.iter().zip(&elems[k].1).map(|(a, b)| a - b).collect();
                    if diff.iter().any(|&x| x != 0) {
                        schreier.push(diff);
                    }
                }
                None => {
                    if elems.len() >= bound {
                        return Err(Error::QuotientTooLarge { bound });
                    }
                    index.insert(q.clone(), elems.len());
                    queue.push_back(elems.len());
                    elems.push((q, w));
                }
            }
        }
    }
    Ok((elems, schreier))
}

pub fn build_restriction(
    a: &GRMatrix<IntGroupRingElt>,
    h: &QuotientHom,
    phi: &CohomClass,
    opts: &RestrictionOptions,
) -> Result<LatticeRestriction> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    let w = h.target_weights(phi)?;
    let d = h.rank();
    let (mut elems, schreier) = transversal_and_schreier(h, opts.size_bound.unwrap_or(DEFAULT_SIZE_BOUND))?;
    let basis = lattice_basis(&schreier, d);
    let k = basis.len();

    if let Some(order) = &opts.transversal_order {
        let mut sorted = order.clone();
        sorted.sort_unstable();
        if sorted != (0..elems.len()).collect::<Vec<_>>() {
            return Err(Error::Dimension { expected: elems.len(), got: order.len() });
        }
        elems = order.iter().map(|&i| elems[i].clone()).collect();
    }
    if let Some(shifts) = &opts.transversal_shifts {
        if shifts.len() != elems.len() {
            return Err(Error::Dimension { expected: elems.len(), got: shifts.len() });
        }
        for ((_, v), s) in elems.iter_mut().zip(shifts) {
            if s.len() != k {
                return Err(Error::Dimension { expected: k, got: s.len() });
            }
            for (c, b) in s.iter().zip(&basis) {
                for (x, y) in v.iter_mut().zip(b) {
                    *x += c * y;
                }
            }
        }
    }

    let reweighted: Vec<Rational64> = basis
        .iter()
        .map(|b| b.iter().zip(&w).map(|(&x, wi)| Rational64::from_integer(x) * wi).sum())
        .collect();
    let phi_nonzero_on_q = (0..h.presentation().generator_count())
        .any(|g| h.weights()[g].iter().zip(&w).map(|(&x, wi)| Rational64::from_integer(x) * wi).sum::<Rational64>() != Rational64::from_integer(0));
    if phi_nonzero_on_q && reweighted.iter().all(|r| *r == Rational64::from_integer(0)) {
        return Err(Error::PhiVanishesOnLattice);
    }

    let pos: HashMap<&Perm, usize> = elems.iter().enumerate().map(|(i, (p, _))| (p, i)).collect();
    let f = elems.len();
    let m = a.rows();
    let mut restricted = GRMatrix::from_fn(m * f, m * f, |_| MultiLaurent::zero(k));
    for row in 0..m {
        for col in 0..m {
            for (word, &c) in a.get(row, col).terms() {
                let (perm, v) = h.evaluate(word);
                let perm = perm.unwrap_or_default();
                for (j, (pj, vj)) in elems.iter().enumerate() {
                    let target = perm_compose(pj, &perm);
                    let kk = pos[&target];
                    let lambda: Vec<i64> = vj.iter().zip(&v).zip(&elems[kk].1).map(|((x, y), z)| x + y - z).collect();
                    let coords = lattice_coords(&basis, &lambda).expect("Schreier lattice contains every transition");
                    let (r, s) = (row * f + j, col * f + kk);
                    let mut e = restricted.get(r, s).clone();
                    e.add_term(coords, Complex64::new(c as f64, 0.0));
                    restricted.set(r, s, e);
                }
            }
        }
    }

    Ok(LatticeRestriction { fiber_size: f, lattice_basis: basis, transversal: elems, restricted, reweighted_phi: reweighted })
}

/// Canonical representative of v modulo the lattice spanned by an echelon basis.
fn reduce_mod(basis: &[Vec<i64>], v: &[i64]) -> Vec<i64> {
    let mut out = v.to_vec();
    for b in basis {
        let pc = b.iter().position(|&x| x != 0).expect("nonzero basis row");
        let q = out[pc].div_euclid(b[pc]);
        for (x, y) in out.iter_mut().zip(b) {
            *x -= q * y;
        }
    }
    out
}

/// Re-restrict a matrix over ℂ[ℤ^k] to a full-rank sublattice, given by
/// generator rows in ℤ^k. Returns the restricted matrix over ℂ[sublattice],
/// the transformed weights and the index.
pub fn refine_lattice(
    m: &GRMatrix<MultiLaurent>,
    weights: &[Rational64],
    sublattice: &[Vec<i64>],
) -> Result<(GRMatrix<MultiLaurent>, Vec<Rational64>, usize)> {
    let k = weights.len();
    let basis = lattice_basis(sublattice, k);
    if basis.len() != k {
        return Err(Error::Dimension { expected: k, got: basis.len() });
    }
    let index = echelon_index(&basis) as usize;
    // residues: box over the pivots
    let pivots: Vec<i64> = basis.iter().map(|b| b[b.iter().position(|&x| x != 0).unwrap()]).collect();
    let mut reps: Vec<Vec<i64>> = vec![vec![]];
    for &p in &pivots {
        reps = reps.into_iter().flat_map(|r| (0..p).map(move |x| [r.clone(), vec![x]].concat())).collect();
    }
    let reps: Vec<Vec<i64>> = reps.iter().map(|r| reduce_mod(&basis, r)).collect();
    let pos: HashMap<Vec<i64>, usize> = reps.iter().enumerate().map(|(i, r)| (r.clone(), i)).collect();

    let n = m.rows();
    let mut out = GRMatrix::from_fn(n * index, n * index, |_| MultiLaurent::zero(k));
    for row in 0..n {
        for col in 0..n {
            for (e, &c) in m.get(row, col).terms() {
                for (j, rj) in reps.iter().enumerate() {
                    let sum: Vec<i64> = rj.iter().zip(e).map(|(a, b)| a + b).collect();
                    let rk = reduce_mod(&basis, &sum);
                    let kk = pos[&rk];
                    let lambda: Vec<i64> = sum.iter().zip(&rk).map(|(a, b)| a - b).collect();
                    let coords = lattice_coords(&basis, &lambda).expect("difference lies in the sublattice");
                    let (r, s) = (row * index + j, col * index + kk);
                    let mut entry = out.get(r, s).clone();
                    entry.add_term(coords, c);
                    out.set(r, s, entry);
                }
            }
        }
    }
    let new_weights = basis
        .iter()
        .map(|b| b.iter().zip(weights).map(|(&x, w)| Rational64::from_integer(x) * w).sum())
        .collect();
    Ok((out, new_weights, index))
}

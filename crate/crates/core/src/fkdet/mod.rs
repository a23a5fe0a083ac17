//! Twisted Fuglede–Kadison determinants and kernel dimensions over
//! virtually abelian quotients.

mod laurent_det;
mod mahler;
mod restrict;

pub use laurent_det::{det_degree_bounds, eval_det, laurent_det};
pub use mahler::{mahler_exact_1var, mahler_numeric, polynomial_roots, trapezoid, NumericOptions, OneVarDetData};
pub use restrict::{build_restriction, refine_lattice, LatticeRestriction, RestrictionOptions, DEFAULT_SIZE_BOUND};

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, NonAcyclicCertificate, Result};
use crate::fpgroup::{CohomClass, QuotientHom};
use crate::groupring::{ratio_to_f64, GRMatrix, IntGroupRingElt, MultiLaurent};

#[derive(Clone, Debug, Default)]
pub struct FkOptions {
    pub restriction: RestrictionOptions,
    pub numeric: NumericOptions,
}

/// How ln det is evaluated for the restricted determinant.
#[derive(Clone, Debug)]
pub enum DetPath {
    /// At most one variable occurs: closed-form root formula with weight `weight`.
    Exact { data: OneVarDetData, weight: f64, variable: Option<usize> },
    /// Several variables: numeric torus integration.
    Numeric { weights: Vec<f64> },
}

/// Restriction, commutative determinant and evaluation strategy for one
/// (A, quotient, φ) triple; evaluating at many t reuses all of it.
#[derive(Clone, Debug)]
pub struct TwistedDeterminant {
    restriction: LatticeRestriction,
    det: MultiLaurent,
    path: DetPath,
    numeric: NumericOptions,
}

impl TwistedDeterminant {
    pub fn new(a: &GRMatrix<IntGroupRingElt>, h: &QuotientHom, phi: &CohomClass, opts: &FkOptions) -> Result<Self> {
        let restriction = build_restriction(a, h, phi, &opts.restriction)?;
        Self::from_restriction(restriction, opts.numeric)
    }

    pub fn from_restriction(restriction: LatticeRestriction, numeric: NumericOptions) -> Result<Self> {
        let k = restriction.rank();
        let det = laurent_det(&restriction.restricted, k)?;
        if det.is_empty() {
            return Err(Error::NonAcyclic(certificate(&restriction)));
        }
        let weights = restriction.phi_weights_f64();
        let active = det.active_variables();
        let path = match active.as_slice() {
            [] => {
                let c = det.terms().values().next().copied().unwrap_or_default();
                let data = OneVarDetData { leading_coeff_abs: c.norm(), order_at_zero: 0, roots: Vec::new() };
                DetPath::Exact { data, weight: 0.0, variable: None }
            }
            [v] => {
                let projected = MultiLaurent::from_terms(1, det.terms().iter().map(|(e, c)| (vec![e[*v]], *c)));
                DetPath::Exact { data: OneVarDetData::from_poly(&projected)?, weight: weights[*v], variable: Some(*v) }
            }
            _ => DetPath::Numeric { weights },
        };
        Ok(TwistedDeterminant { restriction, det, path, numeric })
    }

    pub fn restriction(&self) -> &LatticeRestriction {
        &self.restriction
    }

    pub fn determinant(&self) -> &MultiLaurent {
        &self.det
    }

    pub fn path(&self) -> &DetPath {
        &self.path
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.path, DetPath::Exact { .. })
    }

    pub fn one_var(&self) -> Option<(&OneVarDetData, f64)> {
        match &self.path {
            DetPath::Exact { data, weight, .. } => Some((data, *weight)),
            DetPath::Numeric { .. } => None,
        }
    }

    /// Normalized ln det at parameter t.
    pub fn log_det(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::NonPositive(t));
        }
        let f = self.restriction.fiber_size as f64;
        match &self.path {
            DetPath::Exact { data, weight, .. } => Ok(data.log_det(*weight, t) / f),
            DetPath::Numeric { weights } => Ok(mahler_numeric(&self.det, weights, t, self.numeric)?.0 / f),
        }
    }

    /// Root-magnitude thresholds in t-space (exact path only).
    pub fn thresholds(&self) -> Option<(f64, f64)> {
        self.one_var().and_then(|(d, w)| d.thresholds(w))
    }

    /// Exact slopes of ln det in ln t as t → 0 and t → ∞ (exact path only).
    pub fn exact_slopes(&self) -> Option<(Rational64, Rational64)> {
        let DetPath::Exact { data, variable, .. } = &self.path else { return None };
        let f = self.restriction.fiber_size as i64;
        let Some(v) = variable else {
            return Some((Rational64::from_integer(0), Rational64::from_integer(0)));
        };
        let w = self.restriction.reweighted_phi[*v];
        let r = data.order_at_zero;
        let top = r + data.root_count() as i64;
        // slope is w·(lowest exponent) on the side where t^w → 0, w·(highest) where it grows
        let zero = Rational64::from_integer(0);
        let (at_zero, at_inf) = if w > zero {
            (w * r, w * top)
        } else {
            (w * top, w * r)
        };
        Some((at_zero / f, at_inf / f))
    }
}

fn certificate(r: &LatticeRestriction) -> NonAcyclicCertificate {
    let k = r.rank();
    let kd = generic_kernel_dimension(&r.restricted, k, r.fiber_size, &r.phi_weights_f64(), 1.0, 0x6b65726e);
    NonAcyclicCertificate {
        restricted_size: r.restricted.rows(),
        variables: k,
        kernel_dimension: kd.to_string(),
    }
}

pub fn fk_log_det(a: &GRMatrix<IntGroupRingElt>, h: &QuotientHom, phi: &CohomClass, t: f64) -> Result<f64> {
    TwistedDeterminant::new(a, h, phi, &FkOptions::default())?.log_det(t)
}

fn generic_kernel_dimension(m: &GRMatrix<MultiLaurent>, k: usize, fiber: usize, w: &[f64], t: f64, seed: u64) -> Rational64 {
    let n = m.rows();
    if n == 0 {
        return Rational64::from_integer(0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ranks: Vec<usize> = (0..5)
        .map(|_| {
            let point: Vec<Complex64> = (0..k)
                .map(|v| Complex64::from_polar(t.powf(w[v]), rng.gen_range(0.0..std::f64::consts::TAU)))
                .collect();
            let dense = DMatrix::from_fn(n, n, |i, j| m.get(i, j).eval(&point));
            let sv = dense.singular_values();
            let max = sv.iter().copied().fold(0.0, f64::max);
            sv.iter().filter(|&&s| s > 1e-9 * max.max(1e-300) && s > 1e-300).count()
        })
        .collect();
    ranks.sort_unstable();
    let rank = ranks[ranks.len() / 2];
    Rational64::new((n - rank) as i64, fiber as i64)
}

/// dim of the kernel of the twisted operator, normalized by |H′|.
pub fn kernel_dimension(a: &GRMatrix<IntGroupRingElt>, h: &QuotientHom, phi: &CohomClass, t: f64, opts: &FkOptions) -> Result<Rational64> {
    if !(t > 0.0) {
        return Err(Error::NonPositive(t));
    }
    let r = build_restriction(a, h, phi, &opts.restriction)?;
    let w = r.phi_weights_f64();
    Ok(generic_kernel_dimension(&r.restricted, r.rank(), r.fiber_size, &w, t, 0x6b64))
}

/// Numerically evaluate ln det of a weight-twisted Laurent matrix, picking
/// the exact root formula when the determinant is univariate.
pub fn log_det_laurent_matrix(m: &GRMatrix<MultiLaurent>, weights: &[Rational64], t: f64, numeric: NumericOptions) -> Result<f64> {
    let k = weights.len();
    let det = laurent_det(m, k)?;
    if det.is_empty() {
        return Err(Error::ZeroPolynomial);
    }
    let active = det.active_variables();
    match active.as_slice() {
        [] => Ok(det.terms().values().next().map(|c| c.norm().ln()).unwrap_or(0.0)),
        [v] => {
            let projected = MultiLaurent::from_terms(1, det.terms().iter().map(|(e, c)| (vec![e[*v]], *c)));
            Ok(mahler_exact_1var(&projected, weights[*v], t)?.1)
        }
        _ => {
            let w: Vec<f64> = weights.iter().map(|&r| ratio_to_f64(r)).collect();
            Ok(mahler_numeric(&det, &w, t, numeric)?.0)
        }
    }
}

//! Degree of ρ from its asymptotic slopes, comparison with the Thurston
//! norm, and approximation studies along towers of finite quotients.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fkdet::{laurent_det, mahler_exact_1var, NumericOptions};
use crate::groupring::{ratio_to_f64, GRMatrix, MultiLaurent};
use crate::torsion::{TorsionSamples, TorsionSetup};

/// Exact slopes and degree as fractions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactDegree {
    pub slope0: String,
    #[serde(rename = "slopeInf")]
    pub slope_inf: String,
    pub degree: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegreeResult {
    pub degree: f64,
    pub slope0: f64,
    #[serde(rename = "slopeInf")]
    pub slope_inf: f64,
    #[serde(rename = "T0")]
    pub t0: Option<f64>,
    #[serde(rename = "TInf")]
    pub t_inf: Option<f64>,
    pub exact: bool,
    #[serde(rename = "exactFractions", skip_serializing_if = "Option::is_none")]
    pub fractions: Option<ExactDegree>,
}

impl DegreeResult {
    pub fn exact_degree(&self) -> Option<Rational64> {
        self.fractions.as_ref().and_then(|f| f.degree.parse().ok())
    }
}

/// Slopes read off the root data of the univariate determinant.
pub fn degree_exact(setup: &TorsionSetup) -> Result<DegreeResult> {
    let det = setup.determinant()?;
    let Some((ld0, ld_inf)) = det.exact_slopes() else {
        return Err(Error::NotUnivariate(det.determinant().active_variables().len()));
    };
    let eta_inf: Rational64 = setup.eta_exponents().iter().sum();
    let slope0 = -ld0;
    let slope_inf = eta_inf - ld_inf;
    let degree = slope_inf - slope0;
    let (t0, t_inf) = match det.thresholds() {
        Some((lo, hi)) => (Some(lo), Some(hi)),
        None => (None, None),
    };
    Ok(DegreeResult {
        degree: ratio_to_f64(degree),
        slope0: ratio_to_f64(slope0),
        slope_inf: ratio_to_f64(slope_inf),
        t0,
        t_inf,
        exact: true,
        fractions: Some(ExactDegree { slope0: slope0.to_string(), slope_inf: slope_inf.to_string(), degree: degree.to_string() }),
    })
}

const MIN_DECADES: f64 = 4.0;
const MIN_WINDOW_SAMPLES: usize = 10;

/// Least-squares slopes over the outermost decade at each end of the grid.
pub fn degree_numeric(samples: &TorsionSamples) -> Result<DegreeResult> {
    let mut pts: Vec<(f64, f64)> = samples.grid.iter().map(|t| t.log10()).zip(samples.values.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (Some(first), Some(last)) = (pts.first(), pts.last()) else {
        return Err(Error::GridSpan { needed: MIN_DECADES, min_samples: MIN_WINDOW_SAMPLES });
    };
    let (lo, hi) = (first.0, last.0);
    if hi - lo < MIN_DECADES - 1e-9 {
        return Err(Error::GridSpan { needed: MIN_DECADES, min_samples: MIN_WINDOW_SAMPLES });
    }
    let left: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.0 <= lo + 1.0 + 1e-9).collect();
    let right: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.0 >= hi - 1.0 - 1e-9).collect();
    if left.len() < MIN_WINDOW_SAMPLES || right.len() < MIN_WINDOW_SAMPLES {
        return Err(Error::GridSpan { needed: MIN_DECADES, min_samples: MIN_WINDOW_SAMPLES });
    }
    let ln10 = std::f64::consts::LN_10;
    let slope0 = fit_slope(&left) / ln10;
    let slope_inf = fit_slope(&right) / ln10;
    Ok(DegreeResult {
        degree: slope_inf - slope0,
        slope0,
        slope_inf,
        t0: None,
        t_inf: None,
        exact: false,
        fractions: None,
    })
}

fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Verdict {
    Equal,
    LowerBoundOk,
    Violation,
    #[serde(rename = "N/A")]
    NotApplicable,
}

/// Thurston norm of a class together with the exclusion flag of its manifold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThurstonValue {
    pub x: Rational64,
    pub excluded: bool,
}

pub fn compare_thurston(result: &DegreeResult, x: ThurstonValue, tol: f64) -> Verdict {
    if x.excluded {
        return Verdict::NotApplicable;
    }
    let x = ratio_to_f64(x.x);
    if (result.degree + x).abs() < tol {
        Verdict::Equal
    } else if result.degree >= -x - tol {
        Verdict::LowerBoundOk
    } else {
        Verdict::Violation
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TowerLevel {
    pub level: usize,
    pub index: i64,
    pub quotient: String,
    pub values: Vec<f64>,
    pub kernel_dimension: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct TowerViolation {
    pub level: usize,
    pub t: f64,
    pub value: f64,
    pub limit: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TowerReport {
    pub grid: Vec<f64>,
    pub levels: Vec<TowerLevel>,
    /// ln det over the full group, one value per grid point.
    pub limit: Vec<f64>,
    pub limit_error: Vec<f64>,
    pub limit_kernel_dimension: String,
    pub violations: Vec<TowerViolation>,
    /// Final level value minus the limit, per grid point.
    pub final_gap: Vec<f64>,
}

impl TowerReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "level,t,value")?;
        for lvl in &self.levels {
            for (t, v) in self.grid.iter().zip(&lvl.values) {
                writeln!(out, "{},{t:.16e},{v:.16e}", lvl.level)?;
            }
        }
        for (t, v) in self.grid.iter().zip(&self.limit) {
            writeln!(out, "limit,{t:.16e},{v:.16e}")?;
        }
        Ok(())
    }
}

pub const TOWER_SLACK: f64 = 1e-6;

/// Basis change sending exponents on ℤ² to coordinates (a, b) along
/// (v, u) with φ(v) = gcd(φ) and u spanning ker φ. Returns the matrix and
/// φ(v).
pub fn kernel_adapted_basis(phi: [i64; 2]) -> Result<([[i64; 2]; 2], i64)> {
    let [p, q] = phi;
    if p == 0 && q == 0 {
        return Err(Error::Tower("φ must be nonzero".into()));
    }
    let e = p.extended_gcd(&q);
    let (mut g, mut x, mut y) = (e.gcd, e.x, e.y);
    if g < 0 {
        (g, x, y) = (-g, -x, -y);
    }
    let (pp, qq) = (p / g, q / g);
    Ok(([[pp, qq], [-y, x]], g))
}

/// ln det along Qᵢ = ℤ² / Gᵢ with Gᵢ = Nᵢ·(ker φ), compared against ln det over ℤ².
pub fn tower_study(
    a: &GRMatrix<MultiLaurent>,
    phi: [i64; 2],
    chain: &[i64],
    grid: &[f64],
    numeric: NumericOptions,
) -> Result<TowerReport> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    if let Some(p) = a.entries().find(|p| p.nvars() != 2) {
        return Err(Error::Dimension { expected: 2, got: p.nvars() });
    }
    if let Some(&n) = chain.iter().find(|&&n| n <= 0) {
        return Err(Error::Tower(format!("index of level {n} is infinite or invalid")));
    }
    if chain.windows(2).any(|w| w[1] % w[0] != 0) {
        return Err(Error::Tower("chain not nested".into()));
    }
    if let Some(&t) = grid.iter().find(|&&t| !(t > 0.0)) {
        return Err(Error::NonPositive(t));
    }
    let (basis, g) = kernel_adapted_basis(phi)?;
    let change: Vec<Vec<i64>> = basis.iter().map(|r| r.to_vec()).collect();
    let adapted = a.map(|p| p.change_variables(&change));
    let weight = Rational64::from_integer(g);

    let levels = chain
        .par_iter()
        .enumerate()
        .map(|(level, &n)| tower_level(&adapted, level, n, weight, grid))
        .collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(0x746f776572);
    let limit_corank = generic_corank(a, 2, &mut rng);
    if limit_corank != 0 {
        return Err(Error::Tower(format!("operator has kernel of dimension {limit_corank} over the full group")));
    }
    let adapted_det = laurent_det(&adapted, 2)?;
    let (limit, limit_error): (Vec<f64>, Vec<f64>) = grid
        .par_iter()
        .map(|&t| fubini_limit(&adapted_det, weight, t, numeric.tol))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();

    let mut violations = Vec::new();
    for lvl in &levels {
        for (k, &t) in grid.iter().enumerate() {
            if lvl.values[k] > limit[k] + TOWER_SLACK {
                violations.push(TowerViolation { level: lvl.level, t, value: lvl.values[k], limit: limit[k] });
            }
        }
    }
    let final_gap = match levels.last() {
        Some(lvl) => lvl.values.iter().zip(&limit).map(|(v, l)| v - l).collect(),
        None => Vec::new(),
    };
    Ok(TowerReport {
        grid: grid.to_vec(),
        levels,
        limit,
        limit_error,
        limit_kernel_dimension: "0".into(),
        violations,
        final_gap,
    })
}

/// ln det over ℤ² as the average over the kernel angle of exact univariate
/// values, integrated by adaptive Simpson. Returns (value, error estimate).
fn fubini_limit(det: &MultiLaurent, weight: Rational64, t: f64, tol: f64) -> Result<(f64, f64)> {
    let f = |theta: f64| -> Result<f64> {
        let p = specialize_second(det, Complex64::from_polar(1.0, theta));
        if p.is_empty() {
            return Ok(0.0);
        }
        Ok(mahler_exact_1var(&p, weight, t)?.1)
    };
    // coarse panels first so narrow features are not skipped
    const PANELS: usize = 64;
    let h = std::f64::consts::TAU / PANELS as f64;
    let mut total = 0.0;
    let mut err = 0.0;
    for k in 0..PANELS {
        let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
        let (fa, fm, fb) = (f(a)?, f(0.5 * (a + b))?, f(b)?);
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        let (v, e) = simpson(&f, a, b, fa, fm, fb, whole, tol / PANELS as f64, 40)?;
        total += v;
        err += e;
    }
    let scale = std::f64::consts::TAU;
    Ok((total / scale, err / scale))
}

#[allow(clippy::too_many_arguments)]
fn simpson(
    f: &impl Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<(f64, f64)> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (f(0.5 * (a + m))?, f(0.5 * (m + b))?);
    let left = (m - a) / 6.0 * (fa + 4.0 * lm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * rm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return Ok((left + right + diff / 15.0, diff.abs() / 15.0));
    }
    let (l, le) = simpson(f, a, m, fa, lm, fm, left, tol / 2.0, depth - 1)?;
    let (r, re) = simpson(f, m, b, fm, rm, fb, right, tol / 2.0, depth - 1)?;
    Ok((l + r, le + re))
}

fn tower_level(adapted: &GRMatrix<MultiLaurent>, level: usize, n: i64, weight: Rational64, grid: &[f64]) -> Result<TowerLevel> {
    let mut totals = vec![0.0; grid.len()];
    let mut kernel = 0i64;
    let mut rng = ChaCha8Rng::seed_from_u64(0x6c76 + level as u64);
    for j in 0..n {
        let zeta = Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / n as f64);
        let spec = adapted.map(|p| specialize_second(p, zeta));
        let det = laurent_det(&spec, 1)?;
        if det.is_empty() {
            kernel += generic_corank(&spec, 1, &mut rng) as i64;
            continue;
        }
        for (k, &t) in grid.iter().enumerate() {
            totals[k] += mahler_exact_1var(&det, weight, t)?.1;
        }
    }
    let nf = n as f64;
    Ok(TowerLevel {
        level,
        index: n,
        quotient: format!("Z x Z/{n}"),
        values: totals.into_iter().map(|v| v / nf).collect(),
        kernel_dimension: Rational64::new(kernel, n).to_string(),
    })
}

/// Substitute the root of unity for the kernel variable.
fn specialize_second(p: &MultiLaurent, zeta: Complex64) -> MultiLaurent {
    MultiLaurent::from_terms(1, p.terms().iter().map(|(e, c)| (vec![e[0]], c * zeta.powi(e[1] as i32)))).cleaned(1e-12)
}

fn generic_corank(m: &GRMatrix<MultiLaurent>, nvars: usize, rng: &mut ChaCha8Rng) -> usize {
    let n = m.rows();
    if n == 0 {
        return 0;
    }
    let mut ranks: Vec<usize> = (0..5)
        .map(|_| {
            let point: Vec<Complex64> =
                (0..nvars).map(|_| Complex64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..std::f64::consts::TAU))).collect();
            let dense = DMatrix::from_fn(n, n, |i, j| m.get(i, j).eval(&point));
            let sv = dense.singular_values();
            let max = sv.iter().copied().fold(0.0, f64::max);
            sv.iter().filter(|&&s| s > 1e-9 * max && s > 1e-300).count()
        })
        .collect();
    ranks.sort_unstable();
    n - ranks[2]
}

/// A = [1 + z + w] with φ = (1, 0) and Gᵢ = {0} × 2ⁱℤ for i = 0..=levels.
pub fn lawton_demo(levels: usize) -> (GRMatrix<MultiLaurent>, [i64; 2], Vec<i64>) {
    let one = Complex64::new(1.0, 0.0);
    let p = MultiLaurent::from_terms(2, [(vec![0, 0], one), (vec![1, 0], one), (vec![0, 1], one)]);
    let a = GRMatrix::from_fn(1, 1, |_| p.clone());
    (a, [1, 0], (0..=levels as u32).map(|i| 1i64 << i).collect())
}

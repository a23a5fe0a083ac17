//! The torsion function ρ(t) = η(t) − ln det(twisted A), its evaluation on
//! grids and the property and bound suites.

use std::io::Write;
use std::sync::OnceLock;

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fkdet::{FkOptions, TwistedDeterminant};
use crate::foxcalc::SquareMatrixData;
use crate::fpgroup::{pair, CohomClass, QuotientHom};
use crate::groupring::{norm1, ratio_to_f64, GRMatrix, MultiLaurent, RingElt};

/// Default sampling: 121 log-spaced points on [1e-3, 1e3].
pub fn default_grid() -> Vec<f64> {
    log_grid(-3.0, 3.0, 121).expect("valid default grid")
}

/// n points with log10 t evenly spaced on [a, b].
pub fn log_grid(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Grid(format!("need n >= 2 and a < b, got log:{a}:{b}:{n}")));
    }
    Ok((0..n)
        .map(|k| {
            let e = a + (b - a) * k as f64 / (n - 1) as f64;
            if e.abs() < 1e-14 {
                1.0
            } else {
                10f64.powf(e)
            }
        })
        .collect())
}

/// Parse "log:a:b:n".
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Grid(format!("expected log:a:b:n, got `{spec}`"));
    if parts.len() != 4 || parts[0] != "log" {
        return Err(bad());
    }
    let a: f64 = parts[1].parse().map_err(|_| bad())?;
    let b: f64 = parts[2].parse().map_err(|_| bad())?;
    let n: usize = parts[3].parse().map_err(|_| bad())?;
    log_grid(a, b, n)
}

pub struct TorsionSetup {
    data: SquareMatrixData,
    hom: QuotientHom,
    phi: CohomClass,
    eta_exponents: Vec<Rational64>,
    options: FkOptions,
    det: OnceLock<Result<TwistedDeterminant>>,
}

impl TorsionSetup {
    pub fn new(data: SquareMatrixData, hom: QuotientHom, phi: CohomClass) -> Result<Self> {
        Self::with_options(data, hom, phi, FkOptions::default())
    }

    pub fn with_options(data: SquareMatrixData, hom: QuotientHom, phi: CohomClass, options: FkOptions) -> Result<Self> {
        if hom.presentation().generator_count() != data.presentation.generator_count() {
            return Err(Error::Dimension {
                expected: data.presentation.generator_count(),
                got: hom.presentation().generator_count(),
            });
        }
        if !hom.is_large() {
            return Err(Error::NotLarge);
        }
        let ab = hom.abelianization();
        let eta_exponents = data.markings().iter().map(|w| pair(&phi, w, ab).map(|r| r.abs())).collect::<Result<_>>()?;
        Ok(TorsionSetup { data, hom, phi, eta_exponents, options, det: OnceLock::new() })
    }

    pub fn data(&self) -> &SquareMatrixData {
        &self.data
    }

    pub fn hom(&self) -> &QuotientHom {
        &self.hom
    }

    pub fn phi(&self) -> &CohomClass {
        &self.phi
    }

    pub fn eta_exponents(&self) -> &[Rational64] {
        &self.eta_exponents
    }

    pub fn options(&self) -> &FkOptions {
        &self.options
    }

    /// Same manifold data and quotient with a different class.
    pub fn with_phi(&self, phi: CohomClass) -> Result<Self> {
        Self::with_options(self.data.clone(), self.hom.clone(), phi, self.options.clone())
    }

    pub fn with_data(&self, data: SquareMatrixData) -> Result<Self> {
        Self::with_options(data, self.hom.clone(), self.phi.clone(), self.options.clone())
    }

    /// Restriction and determinant, certified nonzero on first use.
    pub fn determinant(&self) -> Result<&TwistedDeterminant> {
        self.det
            .get_or_init(|| TwistedDeterminant::new(&self.data.a, &self.hom, &self.phi, &self.options))
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn eta(&self, t: f64) -> f64 {
        let lt = t.ln();
        self.eta_exponents.iter().map(|&e| (ratio_to_f64(e) * lt).max(0.0)).sum()
    }

    pub fn rho(&self, t: f64) -> Result<f64> {
        Ok(self.eta(t) - self.determinant()?.log_det(t)?)
    }

    pub fn is_exact(&self) -> Result<bool> {
        Ok(self.determinant()?.is_exact())
    }

    /// Comparison tolerance for identities between evaluations.
    pub fn tolerance(&self) -> Result<f64> {
        Ok(if self.is_exact()? { 1e-8 } else { 3.0 * self.options.numeric.tol })
    }
}

pub fn eta(setup: &TorsionSetup, t: f64) -> f64 {
    setup.eta(t)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TorsionSamples {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub exact: bool,
    /// Order at zero of the restricted determinant: values are pinned only
    /// modulo integer multiples of ln t, this records the raw normalization.
    pub unit_ambiguity: i64,
}

impl TorsionSamples {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,rho,exact")?;
        for (t, v) in self.grid.iter().zip(&self.values) {
            writeln!(out, "{t:.16e},{v:.16e},{}", self.exact)?;
        }
        Ok(())
    }

    pub fn shifted(&self, e: f64) -> TorsionSamples {
        TorsionSamples {
            values: self.grid.iter().zip(&self.values).map(|(t, v)| v + e * t.ln()).collect(),
            ..self.clone()
        }
    }
}

pub fn rho_eval(setup: &TorsionSetup, grid: &[f64]) -> Result<TorsionSamples> {
    if let Some(&t) = grid.iter().find(|&&t| !(t > 0.0)) {
        return Err(Error::NonPositive(t));
    }
    let det = setup.determinant()?;
    let values = grid.par_iter().map(|&t| Ok(setup.eta(t) - det.log_det(t)?)).collect::<Result<Vec<f64>>>()?;
    let unit_ambiguity = det.one_var().map(|(d, _)| d.order_at_zero).unwrap_or(0);
    Ok(TorsionSamples { grid: grid.to_vec(), values, exact: det.is_exact(), unit_ambiguity })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingReport {
    pub r: String,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// ρ_{rφ}(t) against ρ_φ(t^r).
pub fn check_scaling(setup: &TorsionSetup, r: Rational64, grid: &[f64]) -> Result<ScalingReport> {
    if r == Rational64::from_integer(0) {
        return Err(Error::Parse("scaling factor must be nonzero".into()));
    }
    let scaled = setup.with_phi(setup.phi.scaled(r))?;
    let rf = ratio_to_f64(r);
    let deviations = grid
        .par_iter()
        .map(|&t| Ok((scaled.rho(t)? - setup.rho(t.powf(rf))?).abs()))
        .collect::<Result<Vec<f64>>>()?;
    let max_deviation = deviations.into_iter().fold(0.0, f64::max);
    let tolerance = setup.tolerance()?.max(scaled.tolerance()?);
    Ok(ScalingReport { r: r.to_string(), max_deviation, tolerance, pass: max_deviation < tolerance })
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryReport {
    /// Least-squares e with ρ(1/t) − ρ(t) = e·ln t.
    pub e: f64,
    pub e_integer: Option<i64>,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn check_symmetry(setup: &TorsionSetup, grid: &[f64]) -> Result<SymmetryReport> {
    let pts: Vec<f64> = grid.iter().copied().filter(|&t| (t.ln()).abs() > 1e-12).collect();
    let diffs = pts
        .par_iter()
        .map(|&t| Ok((t.ln(), setup.rho(1.0 / t)? - setup.rho(t)?)))
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let sxx: f64 = diffs.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = diffs.iter().map(|(x, y)| x * y).sum();
    let e = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let residual = diffs.iter().map(|(x, y)| (y - e * x).abs()).fold(0.0, f64::max);
    let tolerance = setup.tolerance()?;
    let near = (e - e.round()).abs() < 1e-6;
    let e_integer = near.then(|| e.round() as i64);
    let integrality_required = setup.phi.is_integral();
    Ok(SymmetryReport { e, e_integer, residual, tolerance, pass: residual < tolerance && (near || !integrality_required) })
}

#[derive(Clone, Debug, Serialize)]
pub struct PinchingReport {
    pub c: f64,
    pub d: f64,
    pub min_slack: f64,
    /// Grid points where a bound fails.
    pub witnesses: Vec<f64>,
    pub pass: bool,
}

/// Constants (C, D) with |ρ(t)| ≤ C·|ln t| + D.
pub fn pinching_constants(setup: &TorsionSetup) -> Result<(f64, f64)> {
    let a = &setup.data.a;
    let m = a.rows() as f64;
    let ab = setup.hom.abelianization();
    let mut spread = 0.0f64;
    for e in a.entries() {
        for w in e.terms().keys() {
            spread = spread.max(ratio_to_f64(pair(&setup.phi, w, ab)?).abs());
        }
    }
    let eta: f64 = setup.eta_exponents.iter().map(|&e| ratio_to_f64(e)).sum();
    let c = m * spread + eta;
    let d = m * (2.0 * norm1(a) + 1.0).ln().max(0.0);
    Ok((c, d))
}

pub fn check_pinching(setup: &TorsionSetup, grid: &[f64]) -> Result<PinchingReport> {
    let (c, d) = pinching_constants(setup)?;
    let samples = rho_eval(setup, grid)?;
    let tol = setup.tolerance()?;
    let mut min_slack = f64::INFINITY;
    let mut witnesses = Vec::new();
    for (&t, &v) in samples.grid.iter().zip(&samples.values) {
        let lt = t.ln();
        // t ≤ 1: C ln t − D ≤ ρ ≤ −C ln t + D, mirrored for t ≥ 1
        let (lower, upper) = if lt <= 0.0 { (c * lt - d, -c * lt + d) } else { (-c * lt - d, c * lt + d) };
        let slack = (v - lower).min(upper - v);
        min_slack = min_slack.min(slack);
        if slack < -tol {
            witnesses.push(t);
        }
    }
    Ok(PinchingReport { c, d, min_slack, pass: witnesses.is_empty(), witnesses })
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub evaluated: usize,
    pub skipped: usize,
    pub violations: Vec<f64>,
    pub min_slack: f64,
}

impl BoundReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// The two-regime bound for f[t] = f0 + t·(z·id_k ⊕ 0) over ℂ[ℤ], where the
/// determinant is the Mahler measure of det f[t].
pub fn two_regime_bound(f0: &GRMatrix<MultiLaurent>, k: usize, grid: &[f64]) -> Result<BoundReport> {
    if !f0.is_square() {
        return Err(Error::NotSquare { rows: f0.rows(), cols: f0.cols() });
    }
    let m = f0.rows();
    if k > m {
        return Err(Error::Dimension { expected: m, got: k });
    }
    if let Some(p) = f0.entries().find(|p| p.nvars() != 1) {
        return Err(Error::Dimension { expected: 1, got: p.nvars() });
    }
    let z = MultiLaurent::variable(1, 0);
    let zero = MultiLaurent::zero(1);
    let f1 = GRMatrix::from_fn(m, m, |(i, j)| if i == j && i < k { z.clone() } else { zero.clone() });
    let n0 = norm1(f0);
    let n1 = norm1(&f1);
    let mf = m as f64;
    let small = mf * (n0 + n1).ln().max(0.0);
    let large = mf * (2.0 * n0 + n1).ln().max(0.0);

    let mut report = BoundReport { evaluated: 0, skipped: 0, violations: Vec::new(), min_slack: f64::INFINITY };
    for &t in grid {
        let ft = GRMatrix::from_fn(m, m, |(i, j)| f0.get(i, j).add(&f1.get(i, j).scale(Complex64::new(t, 0.0))));
        let det = crate::fkdet::laurent_det(&ft, 1)?;
        if det.is_empty() {
            report.skipped += 1;
            continue;
        }
        let value = crate::fkdet::mahler_exact_1var(&det, Rational64::from_integer(0), 1.0)?.1;
        let bound = if t <= 1.0 { small } else { k as f64 * t.ln() + large };
        let slack = bound - value;
        report.evaluated += 1;
        report.min_slack = report.min_slack.min(slack);
        if slack < -1e-9 * (1.0 + value.abs()) {
            report.violations.push(t);
        }
    }
    Ok(report)
}

/// ln det f0 at t = 1 against m·ln ‖f0‖₁; `None` when det f0 vanishes.
pub fn norm_bound(f0: &GRMatrix<MultiLaurent>) -> Result<Option<(f64, f64)>> {
    let det = crate::fkdet::laurent_det(f0, 1)?;
    if det.is_empty() {
        return Ok(None);
    }
    let value = crate::fkdet::mahler_exact_1var(&det, Rational64::from_integer(0), 1.0)?.1;
    Ok(Some((value, f0.rows() as f64 * norm1(f0).ln())))
}

/// Random integer Laurent matrix over ℤ[z^±] of size 1..=3.
pub fn random_univariate_matrix(rng: &mut ChaCha8Rng) -> GRMatrix<MultiLaurent> {
    let m = rng.gen_range(1..=3);
    GRMatrix::from_fn(m, m, |_| {
        let mut p = MultiLaurent::zero(1);
        for _ in 0..rng.gen_range(0..=3) {
            p.add_term(vec![rng.gen_range(-1..=2)], Complex64::new(rng.gen_range(-3..=3) as f64, 0.0));
        }
        p
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundFuzzReport {
    pub seed: u64,
    pub instances: usize,
    pub norm_bound_checked: usize,
    pub norm_bound_violations: usize,
    pub two_regime: BoundReport,
}

impl BoundFuzzReport {
    pub fn pass(&self) -> bool {
        self.norm_bound_violations == 0 && self.two_regime.pass()
    }
}

/// Both determinant bounds on seeded random univariate instances.
pub fn bound_fuzz(seed: u64, instances: usize, grid: &[f64]) -> Result<BoundFuzzReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<(GRMatrix<MultiLaurent>, usize)> = (0..instances)
        .map(|_| {
            let f0 = random_univariate_matrix(&mut rng);
            let k = rng.gen_range(1..=f0.rows());
            (f0, k)
        })
        .collect();
    let results = cases
        .par_iter()
        .map(|(f0, k)| Ok((norm_bound(f0)?, two_regime_bound(f0, *k, grid)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut out = BoundFuzzReport {
        seed,
        instances,
        norm_bound_checked: 0,
        norm_bound_violations: 0,
        two_regime: BoundReport { evaluated: 0, skipped: 0, violations: Vec::new(), min_slack: f64::INFINITY },
    };
    for (l31, l32) in results {
        if let Some((v, b)) = l31 {
            out.norm_bound_checked += 1;
            if v > b + 1e-9 {
                out.norm_bound_violations += 1;
            }
        }
        out.two_regime.evaluated += l32.evaluated;
        out.two_regime.skipped += l32.skipped;
        out.two_regime.violations.extend(l32.violations);
        out.two_regime.min_slack = out.two_regime.min_slack.min(l32.min_slack);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::foxcalc::{spinc_shift, square_matrix_boundary, square_matrix_closed};
    use crate::fpgroup::{Presentation, Word};
    use crate::groupring::GroupRingElt;

    fn setup(gens: &[&str], rels: &[&str]) -> TorsionSetup {
        let p = Presentation::parse(gens, rels).unwrap();
        let data = square_matrix_boundary(&p).unwrap();
        TorsionSetup::new(data, QuotientHom::abelian(&p), CohomClass::integral(&[1])).unwrap()
    }

    #[test]
    fn eta_examples() {
        let s = setup(&["x"], &[]);
        assert!((s.eta(std::f64::consts::E) - 1.0).abs() < 1e-15);
        assert_eq!(s.eta(1.0), 0.0);

        let p = Presentation::parse(&["x"], &[]).unwrap();
        let x = p.word("x").unwrap();
        let f = GRMatrix::from_rows(vec![vec![GroupRingElt::from_terms([(x.clone(), 1i64), (Word::identity(), -1)])]]).unwrap();
        let data = square_matrix_closed(&p, &f, std::slice::from_ref(&x), &[p.word("x^2").unwrap()], None, None).unwrap();
        let closed = TorsionSetup::new(data, QuotientHom::abelian(&p), CohomClass::integral(&[1])).unwrap();
        assert!((closed.eta(std::f64::consts::E.powi(2)) - 6.0).abs() < 1e-13);
    }

    #[test]
    fn rho_examples() {
        let s = setup(&["x"], &[]);
        let grid = log_grid(-2.0, 2.0, 81).unwrap();
        let r = rho_eval(&s, &grid).unwrap();
        assert!(r.exact);
        for (t, v) in r.grid.iter().zip(&r.values) {
            assert!((v - t.ln().max(0.0)).abs() < 1e-12);
        }

        let tref = setup(&["a", "b"], &["a b a B A B"]);
        let r = rho_eval(&tref, &grid).unwrap();
        for (t, v) in r.grid.iter().zip(&r.values) {
            assert!((v + t.ln().max(0.0)).abs() < 1e-12);
        }

        let fig8 = setup(&["a", "b"], &["abABaBAbaB"]);
        let v = fig8.rho(1.0).unwrap();
        assert!((v + ((3.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-10);
    }

    #[test]
    fn grid_parsing() {
        let g = parse_grid("log:-2:2:81").unwrap();
        assert_eq!(g.len(), 81);
        assert_eq!(g[40], 1.0);
        assert!(parse_grid("log:2:-2:5").is_err());
        assert!(parse_grid("lin:0:1:5").is_err());
        assert!(parse_grid("log:0:1:1").is_err());
        let d = default_grid();
        assert_eq!(d.len(), 121);
        assert!((d[0] * d[120] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_format() {
        let s = setup(&["x"], &[]);
        let r = rho_eval(&s, &[1.0, std::f64::consts::E]).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,rho,exact");
        assert_eq!(lines[1], "1.0000000000000000e0,0.0000000000000000e0,true");
    }

    #[test]
    fn property_suite_on_trefoil() {
        let s = setup(&["a", "b"], &["a b a B A B"]);
        let grid = default_grid();
        for r in [Rational64::from_integer(2), Rational64::from_integer(1), Rational64::new(1, 2)] {
            let rep = check_scaling(&s, r, &grid).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
        let sym = check_symmetry(&s, &grid).unwrap();
        assert_eq!(sym.e_integer, Some(1));
        assert!(sym.pass);
        let pin = check_pinching(&s, &grid).unwrap();
        assert!(pin.pass, "{pin:?}");

        let empty = setup(&["x"], &[]);
        let sym = check_symmetry(&empty, &grid).unwrap();
        assert_eq!(sym.e_integer, Some(-1));
        let pin = check_pinching(&empty, &grid).unwrap();
        assert!(pin.pass);
        assert_eq!((pin.c, pin.d), (1.0, 0.0));
    }

    #[test]
    fn spinc_shift_moves_rho_and_e() {
        let s = setup(&["a", "b"], &["a b a B A B"]);
        let g = s.data().presentation.word("a").unwrap();
        let shifted = s.with_data(spinc_shift(s.data(), &[1], &g).unwrap()).unwrap();
        for t in [0.01, 0.5, 1.0, 3.0, 200.0] {
            let diff = shifted.rho(t).unwrap() - s.rho(t).unwrap();
            assert!((diff - t.ln()).abs() < 1e-9);
        }
        let grid = default_grid();
        let e0 = check_symmetry(&s, &grid).unwrap().e_integer.unwrap();
        let e1 = check_symmetry(&shifted, &grid).unwrap().e_integer.unwrap();
        assert_eq!(e1, e0 - 2);
    }

    #[test]
    fn two_regime_examples() {
        let zero = MultiLaurent::zero(1);
        let f0 = GRMatrix::from_rows(vec![vec![zero]]).unwrap();
        let rep = two_regime_bound(&f0, 1, &default_grid()).unwrap();
        assert!(rep.pass());
        assert_eq!(rep.evaluated, 121);

        let f0 = GRMatrix::from_rows(vec![vec![MultiLaurent::constant(1, Complex64::new(-2.0, 0.0))]]).unwrap();
        let rep = two_regime_bound(&f0, 1, &default_grid()).unwrap();
        assert!(rep.pass());
        // the determinant itself is ln max(t, 2)
        for t in [0.5, 2.0, 5.0] {
            let p = MultiLaurent::from_terms(1, [(vec![0], Complex64::new(-2.0, 0.0)), (vec![1], Complex64::new(t, 0.0))]);
            let v = crate::fkdet::mahler_exact_1var(&p, Rational64::from_integer(0), 1.0).unwrap().1;
            assert!((v - t.max(2.0).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn bound_fuzz_is_clean() {
        let grid = log_grid(-2.0, 2.0, 21).unwrap();
        let rep = bound_fuzz(11, 40, &grid).unwrap();
        assert!(rep.pass(), "{rep:?}");
        assert!(rep.norm_bound_checked > 0 && rep.two_regime.evaluated > 0);
    }

    #[test]
    fn nonacyclic_propagates() {
        let p = Presentation::parse(&["x"], &[]).unwrap();
        let data = SquareMatrixData {
            a: GRMatrix::from_rows(vec![vec![GroupRingElt::zero()]]).unwrap(),
            ..square_matrix_boundary(&p).unwrap()
        };
        let s = TorsionSetup::new(data, QuotientHom::abelian(&p), CohomClass::integral(&[1])).unwrap();
        assert!(matches!(rho_eval(&s, &[1.0]), Err(Error::NonAcyclic(_))));
        assert!(matches!(s.rho(2.0), Err(Error::NonAcyclic(_))));
    }
}

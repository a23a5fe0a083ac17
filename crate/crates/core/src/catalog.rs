//! Built-in knot exteriors with their Thurston norms and fibering data.

use num_rational::Rational64;
use num_traits::Signed;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fkdet::laurent_det;
use crate::foxcalc::square_matrix_boundary;
use crate::fpgroup::{abelianize, CohomClass, Presentation};

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub generators: &'static [&'static str],
    pub relators: &'static [&'static str],
    pub boundary: bool,
    /// Thurston norm of the generator of H¹.
    pub x_unit: i64,
    pub fibered: bool,
    pub dilatation: Option<f64>,
    /// Manifolds the main comparison does not apply to.
    pub excluded: bool,
    pub expected_degree: i64,
    pub notes: &'static str,
}

impl CatalogEntry {
    pub fn presentation(&self) -> Presentation {
        Presentation::parse(self.generators, self.relators).expect("catalog presentations parse")
    }
}

fn golden_square() -> f64 {
    (3.0 + 5f64.sqrt()) / 2.0
}

pub fn entries() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "s1xd2",
            generators: &["x"],
            relators: &[],
            boundary: true,
            x_unit: 0,
            fibered: true,
            dilatation: None,
            excluded: true,
            expected_degree: 1,
            notes: "solid torus; degree 1 while the norm vanishes",
        },
        CatalogEntry {
            name: "trefoil",
            generators: &["a", "b"],
            relators: &["a b a B A B"],
            boundary: true,
            x_unit: 1,
            fibered: true,
            dilatation: Some(1.0),
            excluded: false,
            expected_degree: -1,
            notes: "T(2,3), once-punctured torus fiber",
        },
        CatalogEntry {
            name: "t25",
            generators: &["x", "y"],
            relators: &["x^2 y^-5"],
            boundary: true,
            x_unit: 3,
            fibered: true,
            dilatation: Some(1.0),
            excluded: false,
            expected_degree: -3,
            notes: "T(2,5), fiber genus 2",
        },
        CatalogEntry {
            name: "t34",
            generators: &["x", "y"],
            relators: &["x^3 y^-4"],
            boundary: true,
            x_unit: 5,
            fibered: true,
            dilatation: Some(1.0),
            excluded: false,
            expected_degree: -5,
            notes: "T(3,4), fiber genus 3",
        },
        CatalogEntry {
            name: "figure8",
            generators: &["a", "b"],
            relators: &["abABaBAbaB"],
            boundary: true,
            x_unit: 1,
            fibered: true,
            dilatation: Some(golden_square()),
            excluded: false,
            expected_degree: -1,
            notes: "hyperbolic, pseudo-Anosov monodromy",
        },
        CatalogEntry {
            name: "k5_2",
            generators: &["a", "b"],
            relators: &["abaBAbaBABabAB"],
            boundary: true,
            x_unit: 1,
            fibered: false,
            dilatation: None,
            excluded: false,
            expected_degree: -1,
            notes: "twist knot, genus 1, not fibered",
        },
    ]
}

pub fn lookup(name: &str) -> Result<CatalogEntry> {
    entries().into_iter().find(|e| e.name == name).ok_or_else(|| Error::UnknownEntry(name.to_string()))
}

/// Thurston norm of φ, scaled from the unit class.
pub fn thurston_oracle(entry: &CatalogEntry, phi: &CohomClass) -> Result<Rational64> {
    if phi.dim() != 1 {
        return Err(Error::Dimension { expected: 1, got: phi.dim() });
    }
    Ok(phi.weights[0].abs() * entry.x_unit)
}

/// Norm of the pullback of φ to an n-sheeted cover.
pub fn thurston_oracle_covering(entry: &CatalogEntry, phi: &CohomClass, sheets: u32) -> Result<Rational64> {
    Ok(thurston_oracle(entry, phi)? * i64::from(sheets))
}

/// Alexander polynomial of a deficiency-one presentation with first Betti
/// number one, normalized to start at z⁰ with positive leading coefficient.
/// The deleted-column minor equals Δ·(z^w − 1)/(z − 1) where w is the weight
/// of the deleted generator, so that factor is divided out.
pub fn alexander_polynomial(p: &Presentation) -> Result<Vec<i64>> {
    let ab = abelianize(p);
    if ab.free_rank != 1 {
        return Err(Error::RankMismatch { hom_rank: 1, free_rank: ab.free_rank });
    }
    let data = square_matrix_boundary(p)?;
    let pushed = data.a.map(|e| e.push(|w| ab.weight(w), 1));
    let det = laurent_det(&pushed, 1)?;
    let coeffs = det.integer_coeffs(1e-6).ok_or(Error::InterpolationFailed)?;
    let (Some(lo), Some(hi)) = (coeffs.keys().next().map(|e| e[0]), coeffs.keys().last().map(|e| e[0])) else {
        return Err(Error::ZeroPolynomial);
    };
    let mut out = vec![0i64; (hi - lo + 1) as usize];
    for (e, c) in coeffs {
        out[(e[0] - lo) as usize] = c;
    }
    let w = ab.weight(&data.s)[0].unsigned_abs() as usize;
    let mut out = divide_geometric(&out, w).ok_or(Error::InterpolationFailed)?;
    if out.last().is_some_and(|&c| c < 0) {
        out.iter_mut().for_each(|c| *c = -*c);
    }
    Ok(out)
}

/// Exact quotient of p by 1 + z + … + z^{w−1}, if it divides.
fn divide_geometric(p: &[i64], w: usize) -> Option<Vec<i64>> {
    if w <= 1 {
        return Some(p.to_vec());
    }
    // p·(z − 1) / (z^w − 1)
    let mut num = vec![0i64; p.len() + 1];
    for (i, &c) in p.iter().enumerate() {
        num[i + 1] += c;
        num[i] -= c;
    }
    if num.len() <= w {
        return None;
    }
    let mut q = vec![0i64; num.len() - w];
    for k in (0..q.len()).rev() {
        let c = num[k + w];
        q[k] = c;
        num[k + w] = 0;
        num[k] += c;
    }
    num.iter().all(|&c| c == 0).then_some(q)
}

#[derive(Clone, Debug, Serialize)]
pub struct CatalogRecord {
    pub name: String,
    pub generators: Vec<String>,
    pub relators: Vec<String>,
    pub boundary: bool,
    pub thurston_x: i64,
    pub fibered: bool,
    pub dilatation: Option<f64>,
    pub excluded: bool,
    pub expected_degree: i64,
    /// Coefficients from z⁰ upward.
    pub alexander: Vec<i64>,
    pub notes: String,
}

pub fn export() -> Result<Vec<CatalogRecord>> {
    entries()
        .into_iter()
        .map(|e| {
            Ok(CatalogRecord {
                name: e.name.into(),
                generators: e.generators.iter().map(|s| s.to_string()).collect(),
                relators: e.relators.iter().map(|s| s.to_string()).collect(),
                boundary: e.boundary,
                thurston_x: e.x_unit,
                fibered: e.fibered,
                dilatation: e.dilatation,
                excluded: e.excluded,
                expected_degree: e.expected_degree,
                alexander: alexander_polynomial(&e.presentation())?,
                notes: e.notes.into(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degree::{compare_thurston, degree_exact, ThurstonValue, Verdict};
    use crate::fpgroup::QuotientHom;
    use crate::torsion::TorsionSetup;

    fn eval_poly(c: &[i64], z: i64) -> i64 {
        c.iter().rev().fold(0, |acc, &k| acc * z + k)
    }

    #[test]
    fn every_entry_is_a_knot_exterior() {
        for e in entries() {
            let ab = abelianize(&e.presentation());
            assert_eq!(ab.free_rank, 1, "{}", e.name);
            assert!(ab.torsion.is_empty(), "{}", e.name);
            assert_eq!(e.presentation().deficiency(), 1);
        }
    }

    #[test]
    fn alexander_polynomials() {
        for e in entries() {
            let d = alexander_polynomial(&e.presentation()).unwrap();
            assert_eq!(eval_poly(&d, 1).abs(), 1, "{}: {d:?}", e.name);
            // symmetric up to sign
            let rev: Vec<i64> = d.iter().rev().copied().collect();
            assert_eq!(rev, d, "{}", e.name);
        }
        let fig8 = alexander_polynomial(&lookup("figure8").unwrap().presentation()).unwrap();
        assert_eq!(eval_poly(&fig8, -1).abs(), 5);
        let tref = alexander_polynomial(&lookup("trefoil").unwrap().presentation()).unwrap();
        assert_eq!(tref, [1, -1, 1]);
        // degree of the Alexander polynomial bounds twice the genus
        let k52 = alexander_polynomial(&lookup("k5_2").unwrap().presentation()).unwrap();
        assert_eq!(k52.len(), 3);
        assert_ne!(k52, fig8);
        // monic exactly for the fibered entries
        for e in entries() {
            let d = alexander_polynomial(&e.presentation()).unwrap();
            assert_eq!(d.last().unwrap().abs() == 1, e.fibered, "{}", e.name);
        }
    }

    #[test]
    fn thurston_scaling() {
        let t = lookup("t34").unwrap();
        assert_eq!(thurston_oracle(&t, &CohomClass::integral(&[1])).unwrap(), Rational64::from_integer(5));
        assert_eq!(thurston_oracle(&t, &CohomClass::integral(&[-2])).unwrap(), Rational64::from_integer(10));
        assert_eq!(thurston_oracle_covering(&t, &CohomClass::integral(&[1]), 3).unwrap(), Rational64::from_integer(15));
        assert_eq!(thurston_oracle(&lookup("s1xd2").unwrap(), &CohomClass::integral(&[7])).unwrap(), Rational64::from_integer(0));
        assert!(lookup("unknot9").is_err());
        // torus knots: pq − p − q
        for (name, p, q) in [("trefoil", 2, 3), ("t25", 2, 5), ("t34", 3, 4)] {
            assert_eq!(lookup(name).unwrap().x_unit, p * q - p - q);
        }
    }

    #[test]
    fn verdicts_on_catalog() {
        for e in entries() {
            let p = e.presentation();
            let setup = TorsionSetup::new(square_matrix_boundary(&p).unwrap(), QuotientHom::abelian(&p), CohomClass::integral(&[1])).unwrap();
            let d = degree_exact(&setup).unwrap();
            assert_eq!(d.degree, e.expected_degree as f64, "{}", e.name);
            let v = compare_thurston(&d, ThurstonValue { x: Rational64::from_integer(e.x_unit), excluded: e.excluded }, 1e-9);
            match (e.excluded, e.fibered) {
                (true, _) => assert_eq!(v, Verdict::NotApplicable),
                (false, true) => assert_eq!(v, Verdict::Equal, "{}", e.name),
                (false, false) => assert!(matches!(v, Verdict::Equal | Verdict::LowerBoundOk)),
            }
            if let (Some(dil), false) = (e.dilatation, e.excluded) {
                assert!((d.t_inf.unwrap() - dil).abs() < 1e-9, "{}", e.name);
            }
        }
    }

    #[test]
    fn export_roundtrips_to_json() {
        let recs = export().unwrap();
        let json = serde_json::to_value(&recs).unwrap();
        assert_eq!(json.as_array().unwrap().len(), entries().len());
        assert_eq!(json[0]["alexander"], serde_json::json!([1]));
    }
}

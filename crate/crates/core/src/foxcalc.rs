//! Fox free differential calculus and assembly of the square matrix whose
//! twisted determinant, together with a correction term, gives the torsion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpgroup::{abelianize, Presentation, PresentationSpec, Word};
use crate::groupring::{GRMatrix, GroupRingElt, IntGroupRingElt, RingElt};

/// ∂w/∂x_gen in ℤ[F].
pub fn fox_derivative(w: &Word, gen: usize) -> IntGroupRingElt {
    let mut out = IntGroupRingElt::zero();
    let mut prefix = Word::identity();
    for l in w.letters() {
        if l.gen == gen {
            if l.exp > 0 {
                for k in 0..l.exp {
                    out.add_term(prefix.mul(&Word::power(gen, k)), 1);
                }
            } else {
                for k in 1..=-l.exp {
                    out.add_term(prefix.mul(&Word::power(gen, -k)), -1);
                }
            }
        }
        prefix = prefix.mul(&Word::power(l.gen, l.exp));
    }
    out
}

/// Relators × generators matrix of Fox derivatives.
pub fn fox_matrix(p: &Presentation) -> GRMatrix<IntGroupRingElt> {
    GRMatrix::from_fn(p.relators().len(), p.generator_count(), |(i, j)| fox_derivative(&p.relators()[i], j))
}

/// Square matrix A, the marking elements s (and s′ in the closed case) and
/// the accumulated Spin^c offset.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrixData {
    pub presentation: Presentation,
    pub a: GRMatrix<IntGroupRingElt>,
    pub s: Word,
    pub s_prime: Option<Word>,
    pub spinc_offset: Vec<i64>,
}

impl SquareMatrixData {
    pub fn is_boundary(&self) -> bool {
        self.s_prime.is_none()
    }

    pub fn size(&self) -> usize {
        self.a.rows()
    }

    /// Words whose φ-values enter the correction term.
    pub fn markings(&self) -> Vec<&Word> {
        std::iter::once(&self.s).chain(self.s_prime.as_ref()).collect()
    }
}

pub fn square_matrix_boundary(p: &Presentation) -> Result<SquareMatrixData> {
    if p.deficiency() != 1 {
        return Err(Error::Deficiency(p.deficiency()));
    }
    let ab = abelianize(p);
    let col = (0..p.generator_count())
        .find(|&g| ab.generator_weights[g].iter().any(|&x| x != 0))
        .ok_or(Error::NoFreeGenerator)?;
    Ok(SquareMatrixData {
        presentation: p.clone(),
        a: fox_matrix(p).minor(None, Some(col)),
        s: Word::generator(col),
        s_prime: None,
        spinc_offset: vec![0; ab.free_rank],
    })
}

/// Closed case: delete column `col` and row `row` of the a×a matrix F, where
/// `s_list[col]` and `s_prime_list[row]` are the marked cells. When an index
/// is `None` the first one with nonzero H1_f weight is used.
pub fn square_matrix_closed(
    p: &Presentation,
    f: &GRMatrix<IntGroupRingElt>,
    s_list: &[Word],
    s_prime_list: &[Word],
    col: Option<usize>,
    row: Option<usize>,
) -> Result<SquareMatrixData> {
    if !f.is_square() {
        return Err(Error::NotSquare { rows: f.rows(), cols: f.cols() });
    }
    let n = f.rows();
    if s_list.len() != n {
        return Err(Error::Dimension { expected: n, got: s_list.len() });
    }
    if s_prime_list.len() != n {
        return Err(Error::Dimension { expected: n, got: s_prime_list.len() });
    }
    let ab = abelianize(p);
    let admissible = |w: &Word| ab.weight(w).iter().any(|&x| x != 0);
    let pick = |list: &[Word], given: Option<usize>, what: &str| -> Result<usize> {
        match given {
            Some(k) if k < n && admissible(&list[k]) => Ok(k),
            Some(k) => Err(Error::NoAdmissibleMarking(format!("{what} index {k} is out of range or has zero weight"))),
            None => list
                .iter()
                .position(&admissible)
                .ok_or_else(|| Error::NoAdmissibleMarking(format!("every {what} marking has zero weight"))),
        }
    };
    let i = pick(s_list, col, "column")?;
    let j = pick(s_prime_list, row, "row")?;
    Ok(SquareMatrixData {
        presentation: p.clone(),
        a: f.minor(Some(j), Some(i)),
        s: s_list[i].clone(),
        s_prime: Some(s_prime_list[j].clone()),
        spinc_offset: vec![0; ab.free_rank],
    })
}

/// Change of Spin^c structure by h ∈ H1_f, represented by the word g: the
/// first column is right-multiplied by g⁻¹ (a 0×0 matrix is stabilized to
/// [g⁻¹]). The torsion function changes by +φ(h)·ln t.
pub fn spinc_shift(m: &SquareMatrixData, h: &[i64], g: &Word) -> Result<SquareMatrixData> {
    let ab = abelianize(&m.presentation);
    let weight = ab.weight(g);
    if weight != h {
        return Err(Error::WeightMismatch { expected: h.to_vec(), got: weight });
    }
    if g.is_identity() {
        return Ok(m.clone());
    }
    let ginv = g.inverse();
    let a = if m.a.rows() == 0 {
        GRMatrix::from_rows(vec![vec![GroupRingElt::from_word(ginv)]])?
    } else {
        let mut a = m.a.clone();
        for i in 0..a.rows() {
            let e = a.get(i, 0).right_mul_word(&ginv);
            a.set(i, 0, e);
        }
        a
    };
    Ok(SquareMatrixData {
        a,
        spinc_offset: m.spinc_offset.iter().zip(h).map(|(x, y)| x + y).collect(),
        ..m.clone()
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermSpec {
    pub coeff: i64,
    pub word: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SquareMatrixSpec {
    pub presentation: PresentationSpec,
    pub matrix: Vec<Vec<Vec<TermSpec>>>,
    pub s: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_prime: Option<String>,
    #[serde(default)]
    pub spinc_offset: Vec<i64>,
}

impl SquareMatrixData {
    pub fn to_spec(&self) -> SquareMatrixSpec {
        let names = self.presentation.generators();
        let matrix = (0..self.a.rows())
            .map(|i| {
                (0..self.a.cols())
                    .map(|j| {
                        self.a
                            .get(i, j)
                            .terms()
                            .iter()
                            .map(|(w, &c)| TermSpec { coeff: c, word: w.display(names).to_string() })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        SquareMatrixSpec {
            presentation: self.presentation.to_spec(),
            matrix,
            s: self.s.display(names).to_string(),
            s_prime: self.s_prime.as_ref().map(|w| w.display(names).to_string()),
            spinc_offset: self.spinc_offset.clone(),
        }
    }

    pub fn from_spec(spec: &SquareMatrixSpec) -> Result<Self> {
        let p = Presentation::from_spec(&spec.presentation)?;
        let rows = spec
            .matrix
            .iter()
            .map(|row| {
                row.iter()
                    .map(|cell| {
                        cell.iter()
                            .map(|t| Ok((p.word(&t.word)?, t.coeff)))
                            .collect::<Result<Vec<_>>>()
                            .map(GroupRingElt::from_terms)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let a = GRMatrix::from_rows(rows)?;
        if !a.is_square() {
            return Err(Error::NotSquare { rows: a.rows(), cols: a.cols() });
        }
        let ab = abelianize(&p);
        let s = p.word(&spec.s)?;
        let s_prime = spec.s_prime.as_deref().map(|w| p.word(w)).transpose()?;
        for w in std::iter::once(&s).chain(s_prime.as_ref()) {
            if ab.weight(w).iter().all(|&x| x == 0) {
                return Err(Error::NoAdmissibleMarking("marking has zero weight in H1_f".into()));
            }
        }
        let spinc_offset = if spec.spinc_offset.is_empty() { vec![0; ab.free_rank] } else { spec.spinc_offset.clone() };
        Ok(SquareMatrixData { presentation: p, a, s, s_prime, spinc_offset })
    }
}

/// Σᵢ (∂w/∂xᵢ)(xᵢ − 1), which equals w − 1.
pub fn fox_expansion(w: &Word, generator_count: usize) -> IntGroupRingElt {
    (0..generator_count).fold(IntGroupRingElt::zero(), |acc, g| {
        let x_minus_1 = GroupRingElt::from_terms([(Word::generator(g), 1), (Word::identity(), -1)]);
        acc.add(&fox_derivative(w, g).mul(&x_minus_1))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupring::MultiLaurent;
    use proptest::prelude::*;

    fn elt(p: &Presentation, terms: &[(i64, &str)]) -> IntGroupRingElt {
        GroupRingElt::from_terms(terms.iter().map(|&(c, w)| (p.word(w).unwrap(), c)))
    }

    fn abelian_poly(p: &Presentation, e: &IntGroupRingElt) -> MultiLaurent {
        let ab = abelianize(p);
        e.push(|w| ab.weight(w), ab.free_rank)
    }

    #[test]
    fn derivative_examples() {
        let p = Presentation::parse(&["a", "b"], &["a b a B A B"]).unwrap();
        assert_eq!(fox_derivative(&p.word("ab").unwrap(), 0), IntGroupRingElt::one());
        assert_eq!(fox_derivative(&p.word("A").unwrap(), 0), elt(&p, &[(-1, "A")]));
        let r = &p.relators()[0];
        assert_eq!(fox_derivative(r, 0), elt(&p, &[(1, "1"), (1, "a b"), (-1, "a b a B A")]));
        assert_eq!(fox_derivative(r, 1), elt(&p, &[(1, "a"), (-1, "a b a B"), (-1, "a b a B A B")]));
        assert_eq!(fox_derivative(&p.word("a^3").unwrap(), 0), elt(&p, &[(1, "1"), (1, "a"), (1, "a^2")]));
        assert!(fox_derivative(&p.word("b").unwrap(), 0).is_zero());
    }

    #[test]
    fn boundary_examples() {
        let s1d2 = Presentation::parse(&["x"], &[]).unwrap();
        let m = square_matrix_boundary(&s1d2).unwrap();
        assert_eq!((m.a.rows(), m.a.cols()), (0, 0));
        assert_eq!(m.s, Word::generator(0));
        assert!(m.is_boundary());

        let tref = Presentation::parse(&["a", "b"], &["a b a B A B"]).unwrap();
        let m = square_matrix_boundary(&tref).unwrap();
        assert_eq!(m.a.rows(), 1);
        assert_eq!(m.s, Word::generator(0));
        let poly = abelian_poly(&tref, m.a.get(0, 0));
        assert_eq!(poly, MultiLaurent::from_coeffs_1var(&[-1, 1, -1], 0));

        let fig8 = Presentation::parse(&["a", "b"], &["abABaBAbaB"]).unwrap();
        let m = square_matrix_boundary(&fig8).unwrap();
        let poly = abelian_poly(&fig8, m.a.get(0, 0));
        let at = |z: f64| poly.eval(&[num_complex::Complex64::new(z, 0.0)]).re;
        assert!((at(1.0).abs() - 1.0).abs() < 1e-12);
        assert!((at(-1.0).abs() - 5.0).abs() < 1e-12);
        assert_eq!(poly.len(), 3);

        let bad = Presentation::parse(&["a", "b"], &["a", "b"]).unwrap();
        assert!(matches!(square_matrix_boundary(&bad), Err(Error::Deficiency(0))));
        // the torsion generator is skipped when choosing the deleted column
        let torsion = Presentation::parse(&["a", "b"], &["a^2"]).unwrap();
        assert_eq!(square_matrix_boundary(&torsion).unwrap().s, Word::generator(1));
    }

    #[test]
    fn closed_examples() {
        let p = Presentation::parse(&["x"], &[]).unwrap();
        let x = p.word("x").unwrap();
        let f = GRMatrix::from_rows(vec![vec![elt(&p, &[(1, "x"), (-1, "1")])]]).unwrap();
        let m = square_matrix_closed(&p, &f, std::slice::from_ref(&x), std::slice::from_ref(&x), None, None).unwrap();
        assert_eq!(m.a.rows(), 0);
        assert_eq!(m.markings().len(), 2);
        assert!(!m.is_boundary());

        let q = Presentation::parse(&["a", "b"], &[]).unwrap();
        let cell = |w: &str| elt(&q, &[(1, w)]);
        let f = GRMatrix::from_rows(vec![vec![cell("a"), cell("b")], vec![cell("ab"), cell("ba")]]).unwrap();
        let gens = [q.word("a").unwrap(), q.word("b").unwrap()];
        let m = square_matrix_closed(&q, &f, &gens, &gens, Some(0), Some(1)).unwrap();
        assert_eq!(m.a.rows(), 1);
        assert_eq!(m.a.get(0, 0), &cell("b"));
        assert_eq!(m.s, gens[0]);
        assert_eq!(m.s_prime.as_ref(), Some(&gens[1]));

        let rect = GRMatrix::from_rows(vec![vec![cell("a"), cell("b")]]).unwrap();
        assert!(matches!(square_matrix_closed(&q, &rect, &gens, &gens, None, None), Err(Error::NotSquare { .. })));
        let ones = [Word::identity(), Word::identity()];
        assert!(matches!(square_matrix_closed(&q, &f, &ones, &gens, None, None), Err(Error::NoAdmissibleMarking(_))));
    }

    #[test]
    fn closed_deletion_keeps_remaining_positions() {
        let q = Presentation::parse(&["a", "b", "c"], &[]).unwrap();
        let f = GRMatrix::from_fn(3, 3, |(i, j)| GroupRingElt::monomial(Word::identity(), (10 * i + j) as i64 + 1));
        let gens = [q.word("a").unwrap(), q.word("b").unwrap(), q.word("c").unwrap()];
        for col in 0..3 {
            for row in 0..3 {
                let m = square_matrix_closed(&q, &f, &gens, &gens, Some(col), Some(row)).unwrap();
                let kept_rows: Vec<usize> = (0..3).filter(|&i| i != row).collect();
                let kept_cols: Vec<usize> = (0..3).filter(|&j| j != col).collect();
                for (ii, &i) in kept_rows.iter().enumerate() {
                    for (jj, &j) in kept_cols.iter().enumerate() {
                        assert_eq!(m.a.get(ii, jj), f.get(i, j));
                    }
                }
            }
        }
    }

    #[test]
    fn spinc_examples() {
        let tref = Presentation::parse(&["a", "b"], &["a b a B A B"]).unwrap();
        let m = square_matrix_boundary(&tref).unwrap();
        assert_eq!(spinc_shift(&m, &[0], &Word::identity()).unwrap(), m);
        let a = tref.word("a").unwrap();
        let shifted = spinc_shift(&m, &[1], &a).unwrap();
        assert_eq!(shifted.spinc_offset, vec![1]);
        assert_eq!(shifted.a.get(0, 0), &m.a.get(0, 0).right_mul_word(&a.inverse()));
        let back = spinc_shift(&shifted, &[-1], &a.inverse()).unwrap();
        assert_eq!(back.a, m.a);
        assert_eq!(back.spinc_offset, vec![0]);
        assert!(matches!(spinc_shift(&m, &[2], &a), Err(Error::WeightMismatch { .. })));

        let s1d2 = square_matrix_boundary(&Presentation::parse(&["x"], &[]).unwrap()).unwrap();
        let x = Word::generator(0);
        let shifted = spinc_shift(&s1d2, &[1], &x).unwrap();
        assert_eq!(shifted.a.rows(), 1);
    }

    #[test]
    fn spec_round_trip() {
        let tref = Presentation::parse(&["a", "b"], &["a b a B A B"]).unwrap();
        let m = square_matrix_boundary(&tref).unwrap();
        let json = serde_json::to_string(&m.to_spec()).unwrap();
        let back = SquareMatrixData::from_spec(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    fn word_strategy() -> impl Strategy<Value = Word> {
        prop::collection::vec((0usize..3, prop_oneof![Just(-1i64), Just(1), Just(2), Just(-2)]), 0..=30)
            .prop_map(|raw| Word::reduce(&raw, 3).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn fundamental_identity(w in word_strategy()) {
            let lhs = fox_expansion(&w, 3);
            let rhs = GroupRingElt::from_terms([(w.clone(), 1), (Word::identity(), -1)]);
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn product_rule(u in word_strategy(), v in word_strategy(), g in 0usize..3) {
            let lhs = fox_derivative(&u.mul(&v), g);
            let rhs = fox_derivative(&u, g).add(&fox_derivative(&v, g).left_mul_word(&u));
            prop_assert_eq!(lhs, rhs);
        }
    }
}

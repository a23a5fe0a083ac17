//! Finitely presented groups: free-group words, presentations,
//! abelianization and homomorphisms onto finite-by-free-abelian targets.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intmat::{smith_normal_form, IntMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Letter {
    pub gen: usize,
    pub exp: i64,
}

/// Freely reduced word in a free group. The empty word is the identity.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn identity() -> Self {
        Word::default()
    }

    pub fn generator(gen: usize) -> Self {
        Word { letters: vec![Letter { gen, exp: 1 }] }
    }

    pub fn power(gen: usize, exp: i64) -> Self {
        Word::reduced_from(std::iter::once(Letter { gen, exp }))
    }

    /// Reduce a raw letter sequence, checking generator indices.
    pub fn reduce(raw: &[(usize, i64)], generator_count: usize) -> Result<Self> {
        if let Some(&(index, _)) = raw.iter().find(|(g, _)| *g >= generator_count) {
            return Err(Error::GeneratorIndex { index, count: generator_count });
        }
        Ok(Word::reduced_from(raw.iter().map(|&(gen, exp)| Letter { gen, exp })))
    }

    fn reduced_from(iter: impl IntoIterator<Item = Letter>) -> Self {
        let mut out: Vec<Letter> = Vec::new();
        for l in iter {
            if l.exp == 0 {
                continue;
            }
            match out.last_mut() {
                Some(last) if last.gen == l.gen => {
                    last.exp += l.exp;
                    if last.exp == 0 {
                        out.pop();
                    }
                }
                _ => out.push(l),
            }
        }
        Word { letters: out }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    /// Number of syllables (maximal powers of a single generator).
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn mul(&self, other: &Word) -> Word {
        Word::reduced_from(self.letters.iter().chain(other.letters.iter()).copied())
    }

    pub fn inverse(&self) -> Word {
        Word {
            letters: self.letters.iter().rev().map(|l| Letter { gen: l.gen, exp: -l.exp }).collect(),
        }
    }

    pub fn conjugate_by(&self, g: &Word) -> Word {
        g.mul(self).mul(&g.inverse())
    }

    /// Signed exponent sum per generator.
    pub fn exponent_sums(&self, generator_count: usize) -> Vec<i64> {
        let mut sums = vec![0; generator_count];
        for l in &self.letters {
            sums[l.gen] += l.exp;
        }
        sums
    }

    pub fn max_generator(&self) -> Option<usize> {
        self.letters.iter().map(|l| l.gen).max()
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> WordDisplay<'a> {
        WordDisplay { word: self, names }
    }
}

pub struct WordDisplay<'a> {
    word: &'a Word,
    names: &'a [String],
}

impl fmt::Display for WordDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.is_identity() {
            return write!(f, "1");
        }
        for (i, l) in self.word.letters.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            let name = self.names.get(l.gen).map(String::as_str).unwrap_or("?");
            match l.exp {
                1 => write!(f, "{name}")?,
                -1 => write!(f, "{}", name.to_uppercase())?,
                e => write!(f, "{name}^{e}")?,
            }
        }
        Ok(())
    }
}

/// Parse a word in the letter syntax used by the JSON inputs: whitespace
/// separated tokens (or single characters when there is no whitespace),
/// uppercase meaning inverse, optional `^k` exponents, `1` for the identity.
pub fn parse_word(text: &str, names: &[String]) -> Result<Word> {
    let text = text.trim();
    let tokens: Vec<String> = if text.contains(char::is_whitespace) {
        text.split_whitespace().map(str::to_string).collect()
    } else if names.iter().any(|n| n.chars().count() > 1) && names.iter().any(|n| n == text) {
        vec![text.to_string()]
    } else {
        let mut toks = Vec::new();
        let mut chars = text.chars().peekable();
        while let Some(c) = chars.next() {
            let mut tok = c.to_string();
            if chars.peek() == Some(&'^') {
                tok.push(chars.next().unwrap());
                while let Some(&d) = chars.peek() {
                    if d == '-' || d.is_ascii_digit() {
                        tok.push(d);
                        chars.next();
                    } else {
                        break;
                    }
                }
            }
            toks.push(tok);
        }
        toks
    };

    let mut raw = Vec::new();
    for tok in tokens {
        if tok == "1" {
            continue;
        }
        let (base, exp) = match tok.split_once('^') {
            Some((b, e)) => {
                let e: i64 = e.parse().map_err(|_| Error::Parse(format!("bad exponent in `{tok}`")))?;
                (b.to_string(), e)
            }
            None => (tok.clone(), 1),
        };
        if let Some(i) = names.iter().position(|n| *n == base) {
            raw.push((i, exp));
        } else if let Some(i) = names.iter().position(|n| n.to_uppercase() == base && *n != base) {
            raw.push((i, -exp));
        } else {
            return Err(Error::UnknownGenerator(base));
        }
    }
    Word::reduce(&raw, names.len())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Presentation {
    generators: Vec<String>,
    relators: Vec<Word>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PresentationSpec {
    pub generators: Vec<String>,
    pub relators: Vec<String>,
}

impl Presentation {
    pub fn new(generators: Vec<String>, relators: Vec<Word>) -> Result<Self> {
        for r in &relators {
            if let Some(g) = r.max_generator() {
                if g >= generators.len() {
                    return Err(Error::GeneratorIndex { index: g, count: generators.len() });
                }
            }
        }
        Ok(Presentation { generators, relators })
    }

    pub fn parse(generators: &[&str], relators: &[&str]) -> Result<Self> {
        let names: Vec<String> = generators.iter().map(|s| s.to_string()).collect();
        let rels = relators.iter().map(|r| parse_word(r, &names)).collect::<Result<Vec<_>>>()?;
        Presentation::new(names, rels)
    }

    pub fn from_spec(spec: &PresentationSpec) -> Result<Self> {
        let names = spec.generators.clone();
        let rels = spec.relators.iter().map(|r| parse_word(r, &names)).collect::<Result<Vec<_>>>()?;
        Presentation::new(names, rels)
    }

    pub fn to_spec(&self) -> PresentationSpec {
        PresentationSpec {
            generators: self.generators.clone(),
            relators: self.relators.iter().map(|r| r.display(&self.generators).to_string()).collect(),
        }
    }

    pub fn generators(&self) -> &[String] {
        &self.generators
    }

    pub fn relators(&self) -> &[Word] {
        &self.relators
    }

    pub fn generator_count(&self) -> usize {
        self.generators.len()
    }

    pub fn deficiency(&self) -> i64 {
        self.generators.len() as i64 - self.relators.len() as i64
    }

    pub fn word(&self, text: &str) -> Result<Word> {
        parse_word(text, &self.generators)
    }

    pub fn generator_index(&self, name: &str) -> Result<usize> {
        self.generators
            .iter()
            .position(|g| g == name)
            .ok_or_else(|| Error::UnknownGenerator(name.to_string()))
    }

    /// Exponent-sum relation matrix, one row per relator.
    pub fn relation_matrix(&self) -> Vec<Vec<i64>> {
        self.relators.iter().map(|r| r.exponent_sums(self.generators.len())).collect()
    }
}

/// H1 of a presentation: free rank, torsion invariants, and the image of
/// each generator in the free part and in the torsion part.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AbelianizationData {
    pub free_rank: usize,
    pub torsion: Vec<BigInt>,
    pub generator_weights: Vec<Vec<i64>>,
    pub torsion_parts: Vec<Vec<BigInt>>,
}

impl AbelianizationData {
    pub fn weight(&self, w: &Word) -> Vec<i64> {
        let mut out = vec![0; self.free_rank];
        for l in w.letters() {
            for (o, x) in out.iter_mut().zip(&self.generator_weights[l.gen]) {
                *o += l.exp * x;
            }
        }
        out
    }

    pub fn generator_count(&self) -> usize {
        self.generator_weights.len()
    }
}

pub fn abelianize(p: &Presentation) -> AbelianizationData {
    let n = p.generator_count();
    let rel = p.relation_matrix();
    let a = IntMatrix::from_rows_i64(&rel, n);
    let smith = smith_normal_form(&a);
    // quotient coordinates: x ↦ x·V; coordinate k lives in ℤ/d_k (free if k ≥ rank)
    let v = &smith.right;
    let divisors = smith.divisors();
    let rank = smith.rank;

    let torsion_cols: Vec<usize> = (0..rank).filter(|&k| divisors[k] != BigInt::from(1)).collect();
    let free_cols: Vec<usize> = (rank..n).collect();

    let mut weights: Vec<Vec<i64>> = (0..n)
        .map(|g| free_cols.iter().map(|&k| v[(g, k)].to_i64().expect("weight overflow")).collect())
        .collect();
    // sign normalization: first nonzero weight of every coordinate is positive
    for c in 0..free_cols.len() {
        if let Some(first) = (0..n).map(|g| weights[g][c]).find(|&x| x != 0) {
            if first < 0 {
                for w in weights.iter_mut() {
                    w[c] = -w[c];
                }
            }
        }
    }
    let torsion_parts: Vec<Vec<BigInt>> = (0..n)
        .map(|g| {
            torsion_cols
                .iter()
                .map(|&k| {
                    let d = &divisors[k];
                    ((v[(g, k)].clone() % d) + d) % d
                })
                .collect()
        })
        .collect();

    AbelianizationData {
        free_rank: free_cols.len(),
        torsion: torsion_cols.iter().map(|&k| divisors[k].clone()).collect(),
        generator_weights: weights,
        torsion_parts,
    }
}

/// Permutation representation of a finite group; permutations act on the
/// right, so the image of `uv` is "first u, then v".
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteGroupRep {
    pub degree: usize,
    /// 0-based images, one permutation per generator.
    pub images: Vec<Vec<u32>>,
}

pub type Perm = Vec<u32>;

pub fn perm_identity(n: usize) -> Perm {
    (0..n as u32).collect()
}

pub fn perm_compose(p: &[u32], q: &[u32]) -> Perm {
    p.iter().map(|&i| q[i as usize]).collect()
}

pub fn perm_inverse(p: &[u32]) -> Perm {
    let mut inv = vec![0; p.len()];
    for (i, &j) in p.iter().enumerate() {
        inv[j as usize] = i as u32;
    }
    inv
}

impl FiniteGroupRep {
    pub fn new(degree: usize, images: Vec<Vec<u32>>) -> Result<Self> {
        for img in &images {
            let mut seen = vec![false; degree];
            if img.len() != degree {
                return Err(Error::Parse(format!("permutation of length {} for degree {degree}", img.len())));
            }
            for &x in img {
                if x as usize >= degree || seen[x as usize] {
                    return Err(Error::Parse(format!("not a permutation: {img:?}")));
                }
                seen[x as usize] = true;
            }
        }
        Ok(FiniteGroupRep { degree, images })
    }

    pub fn evaluate(&self, w: &Word) -> Perm {
        let mut acc = perm_identity(self.degree);
        for l in w.letters() {
            let g = &self.images[l.gen];
            let step = if l.exp > 0 { g.clone() } else { perm_inverse(g) };
            for _ in 0..l.exp.unsigned_abs() {
                acc = perm_compose(&acc, &step);
            }
        }
        acc
    }
}

/// A homomorphism π → H × ℤ^d given on generators.
#[derive(Clone, Debug)]
pub struct QuotientHom {
    presentation: Presentation,
    finite: Option<FiniteGroupRep>,
    weights: Vec<Vec<i64>>,
    /// Integer matrix N (d × free_rank) with weights·N = H1_f weights, when large.
    factor: Option<Vec<Vec<i64>>>,
    abelianization: AbelianizationData,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Scalar(i64),
    Vector(Vec<i64>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiniteSpec {
    #[serde(rename = "type")]
    pub kind: String,
    pub degree: usize,
    /// 1-based images keyed by generator name.
    pub images: BTreeMap<String, Vec<u32>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HomSpec {
    pub weights: BTreeMap<String, WeightSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finite: Option<FiniteSpec>,
}

impl QuotientHom {
    pub fn new(presentation: &Presentation, weights: Vec<Vec<i64>>, finite: Option<FiniteGroupRep>) -> Result<Self> {
        let n = presentation.generator_count();
        if weights.len() != n {
            return Err(Error::Dimension { expected: n, got: weights.len() });
        }
        let d = weights.first().map(Vec::len).unwrap_or(0);
        if let Some(w) = weights.iter().find(|w| w.len() != d) {
            return Err(Error::Dimension { expected: d, got: w.len() });
        }
        if let Some(f) = &finite {
            if f.images.len() != n {
                return Err(Error::Dimension { expected: n, got: f.images.len() });
            }
        }
        let abelianization = abelianize(presentation);
        let mut h = QuotientHom {
            presentation: presentation.clone(),
            finite,
            weights,
            factor: None,
            abelianization,
        };
        for (index, r) in presentation.relators().iter().enumerate() {
            let (perm, v) = h.evaluate(r);
            let perm_ok = perm.is_none_or(|p| p == perm_identity(p.len()));
            if !perm_ok || v.iter().any(|&x| x != 0) {
                return Err(Error::RelatorNotKilled { index });
            }
        }
        h.factor = h.factoring_matrix().ok().flatten();
        Ok(h)
    }

    /// The abelianization itself, viewed as a homomorphism to ℤ^d.
    pub fn abelian(presentation: &Presentation) -> Self {
        let ab = abelianize(presentation);
        QuotientHom::new(presentation, ab.generator_weights.clone(), None).expect("abelianization kills relators")
    }

    pub fn from_spec(presentation: &Presentation, spec: &HomSpec) -> Result<Self> {
        let n = presentation.generator_count();
        let mut weights = vec![None; n];
        for (name, w) in &spec.weights {
            let i = presentation.generator_index(name)?;
            weights[i] = Some(match w {
                WeightSpec::Scalar(x) => vec![*x],
                WeightSpec::Vector(v) => v.clone(),
            });
        }
        let d = weights.iter().flatten().map(Vec::len).next().unwrap_or(0);
        let weights: Vec<Vec<i64>> = weights.into_iter().map(|w| w.unwrap_or_else(|| vec![0; d])).collect();
        let finite = match &spec.finite {
            None => None,
            Some(f) => {
                if f.kind != "perm" {
                    return Err(Error::Parse(format!("unsupported finite type `{}`", f.kind)));
                }
                let mut images = vec![perm_identity(f.degree); n];
                for (name, img) in &f.images {
                    let i = presentation.generator_index(name)?;
                    images[i] = img
                        .iter()
                        .map(|&x| x.checked_sub(1).ok_or_else(|| Error::Parse("permutation images are 1-based".into())))
                        .collect::<Result<_>>()?;
                }
                Some(FiniteGroupRep::new(f.degree, images)?)
            }
        };
        QuotientHom::new(presentation, weights, finite)
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    pub fn finite(&self) -> Option<&FiniteGroupRep> {
        self.finite.as_ref()
    }

    pub fn weights(&self) -> &[Vec<i64>] {
        &self.weights
    }

    pub fn rank(&self) -> usize {
        self.weights.first().map(Vec::len).unwrap_or(0)
    }

    pub fn abelianization(&self) -> &AbelianizationData {
        &self.abelianization
    }

    pub fn is_large(&self) -> bool {
        self.factor.is_some()
    }

    /// Image of a word in H × ℤ^d.
    pub fn evaluate(&self, w: &Word) -> (Option<Perm>, Vec<i64>) {
        let mut v = vec![0; self.rank()];
        for l in w.letters() {
            for (o, x) in v.iter_mut().zip(&self.weights[l.gen]) {
                *o += l.exp * x;
            }
        }
        (self.finite.as_ref().map(|f| f.evaluate(w)), v)
    }

    /// Solve weights·N = H1_f weights over ℤ. `Ok(None)` means the ranks
    /// agree but no integral factorization exists.
    fn factoring_matrix(&self) -> Result<Option<Vec<Vec<i64>>>> {
        let n = self.presentation.generator_count();
        let d = self.rank();
        let ab = &self.abelianization;
        let w = IntMatrix::from_rows_i64(&self.weights, d);
        let smith = smith_normal_form(&w);
        if smith.rank < ab.free_rank {
            return Err(Error::RankMismatch { hom_rank: smith.rank, free_rank: ab.free_rank });
        }
        // D·Y = U·W_ab with N = V·Y
        let target = IntMatrix::from_rows_i64(&ab.generator_weights, ab.free_rank);
        let rhs = smith.left.mul(&target);
        let mut y = IntMatrix::zeros(d, ab.free_rank);
        for i in 0..n {
            for c in 0..ab.free_rank {
                let b = &rhs[(i, c)];
                if i < smith.rank {
                    let di = &smith.diagonal[(i, i)];
                    if !(b % di).is_zero() {
                        return Ok(None);
                    }
                    y[(i, c)] = b / di;
                } else if !b.is_zero() {
                    return Ok(None);
                }
            }
        }
        let nmat = smith.right.mul(&y);
        Ok(nmat.to_i64_rows())
    }

    /// Pull a class on H1_f back to weights on the ℤ^d coordinates of the target.
    pub fn target_weights(&self, phi: &CohomClass) -> Result<Vec<Rational64>> {
        let ab = &self.abelianization;
        if phi.weights.len() != ab.free_rank {
            return Err(Error::Dimension { expected: ab.free_rank, got: phi.weights.len() });
        }
        let n = self.factor.as_ref().ok_or(Error::NotLarge)?;
        Ok(n
            .iter()
            .map(|row| row.iter().zip(&phi.weights).map(|(&a, b)| Rational64::from_integer(a) * b).sum())
            .collect())
    }
}

/// Whether the projection π → H1(π)_f factors through `h`.
pub fn check_large(h: &QuotientHom) -> Result<bool> {
    h.factoring_matrix().map(|f| f.is_some())
}

/// φ ∈ H¹(M;ℚ), coordinates in the free basis of H1_f.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohomClass {
    pub weights: Vec<Rational64>,
}

impl CohomClass {
    pub fn new(weights: Vec<Rational64>) -> Self {
        CohomClass { weights }
    }

    pub fn integral(weights: &[i64]) -> Self {
        CohomClass { weights: weights.iter().map(|&x| Rational64::from_integer(x)).collect() }
    }

    pub fn scaled(&self, r: Rational64) -> Self {
        CohomClass { weights: self.weights.iter().map(|w| w * r).collect() }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(Zero::is_zero)
    }

    pub fn is_integral(&self) -> bool {
        self.weights.iter().all(|w| w.is_integer())
    }

    pub fn pair_vector(&self, v: &[i64]) -> Rational64 {
        self.weights.iter().zip(v).map(|(w, &x)| w * x).sum()
    }
}

pub fn pair(phi: &CohomClass, w: &Word, a: &AbelianizationData) -> Result<Rational64> {
    if phi.dim() != a.free_rank {
        return Err(Error::Dimension { expected: a.free_rank, got: phi.dim() });
    }
    Ok(phi.pair_vector(&a.weight(w)))
}

//! Clifford letters `V_iW_j`, words built from them, and the pruned
//! dictionaries used as search columns.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{c, check_qudit, collective, pauli_basis, subalgebra_generators, Operator, Projector};
use crate::error::{Error, Result};
use crate::Real;

/// One factor `(V_v W_w)_sub`, optionally daggered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub v: u8,
    pub w: u8,
    pub sub: u8,
    #[serde(default)]
    pub adjoint: bool,
}

impl Letter {
    pub const fn new(v: u8, w: u8, sub: u8) -> Self {
        Self { v, w, sub, adjoint: false }
    }

    /// Position in the 24-letter alphabet of one subsystem.
    pub fn index(self) -> usize {
        self.v as usize * 4 + self.w as usize
    }

    pub fn dagger(self) -> Self {
        Self { adjoint: !self.adjoint, ..self }
    }

    fn check(self, d: usize) -> Result<()> {
        let sub_ok = if d == 2 { self.sub == 1 } else { (1..=3).contains(&self.sub) };
        if self.v > 5 || self.w > 3 || !sub_ok {
            return Err(Error::InvalidLetter(format!("{self} for d={d}")));
        }
        Ok(())
    }

    /// Letter name without subsystem, e.g. `V4W2` or `V4W2†`.
    pub fn name(self) -> String {
        format!("V{}W{}{}", self.v, self.w, if self.adjoint { "†" } else { "" })
    }

    /// Parses `V<v>W<w>` with an optional trailing `†` or `'`.
    pub fn parse_name(s: &str, sub: u8) -> Result<Self> {
        let bad = || Error::InvalidLetter(s.to_string());
        let (body, adjoint) = match s.strip_suffix('†').or_else(|| s.strip_suffix('\'')) {
            Some(b) => (b, true),
            None => (s, false),
        };
        let rest = body.strip_prefix('V').ok_or_else(bad)?;
        let (v, w) = rest.split_once('W').ok_or_else(bad)?;
        let v: u8 = v.parse().map_err(|_| bad())?;
        let w: u8 = w.parse().map_err(|_| bad())?;
        if v > 5 || w > 3 || sub == 0 || sub > 3 {
            return Err(bad());
        }
        Ok(Self { v, w, sub, adjoint })
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(V{}W{})_{}{}", self.v, self.w, self.sub, if self.adjoint { "†" } else { "" })
    }
}

/// Product of letters; the matrix is `L_0 · L_1 ⋯`, so the last letter acts
/// on a state first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GeneratorWord {
    pub letters: Vec<Letter>,
}

impl GeneratorWord {
    pub fn new(letters: Vec<Letter>) -> Self {
        Self { letters }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    /// Word from `(v, w, sub)` triples.
    pub fn from_triples(t: &[(u8, u8, u8)]) -> Self {
        Self::new(t.iter().map(|&(v, w, s)| Letter::new(v, w, s)).collect())
    }

    /// Matrix-product concatenation `self · other`.
    pub fn then(&self, other: &Self) -> Self {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Self { letters }
    }

    pub fn adjoint(&self) -> Self {
        Self { letters: self.letters.iter().rev().map(|l| l.dagger()).collect() }
    }

    pub fn check(&self, d: usize) -> Result<()> {
        check_qudit(d)?;
        self.letters.iter().try_for_each(|l| l.check(d))
    }
}

impl fmt::Display for GeneratorWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "I");
        }
        for l in &self.letters {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for GeneratorWord {
    type Err = Error;

    /// Parses the `Display` form, e.g. `(V0W2)_1(V4W1)_2†`, or `I`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "I" || s.is_empty() {
            return Ok(Self::identity());
        }
        let bad = || Error::InvalidLetter(s.to_string());
        let mut letters = Vec::new();
        let mut rest = s;
        while !rest.is_empty() {
            let body = rest.strip_prefix('(').ok_or_else(bad)?;
            let (name, tail) = body.split_once(")_").ok_or_else(bad)?;
            let digits = tail.chars().take_while(char::is_ascii_digit).count();
            let sub: u8 = tail[..digits].parse().map_err(|_| bad())?;
            let mut tail = &tail[digits..];
            let mut letter = Letter::parse_name(name, sub)?;
            if let Some(t) = tail.strip_prefix('†').or_else(|| tail.strip_prefix('\'')) {
                letter = letter.dagger();
                tail = t;
            }
            letters.push(letter);
            rest = tail;
        }
        Ok(Self { letters })
    }
}

/// `exp(−i g θ/2)` for a generator with `g³ = g`, so `g²` projects onto the
/// two levels it rotates.
fn rotation<T: Real>(g: &Operator<T>, theta: f64) -> Operator<T> {
    let g2 = g * g;
    let id = Operator::identity(g.dim());
    let (cs, sn) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let a = &(&id - &g2) + &g2.scale_real(T::of(cs));
    &a - &g.scale(c(0.0, sn))
}

/// Precomputed `V_iW_j` matrices for every subsystem of one qudit dimension.
#[derive(Clone, Debug)]
pub struct Alphabet<T> {
    pub d: usize,
    letters: Vec<Operator<T>>,
}

impl<T: Real> Alphabet<T> {
    pub fn new(d: usize) -> Result<Self> {
        check_qudit(d)?;
        let subs = if d == 2 { 1 } else { 3 };
        let mut letters = Vec::with_capacity(24 * subs);
        for k in 1..=subs {
            let (gx, gy, gz) = if d == 2 {
                let b = pauli_basis::<T>(2)?;
                (b.elements[1].clone(), b.elements[2].clone(), b.elements[3].clone())
            } else {
                subalgebra_generators::<T>(k)?
            };
            let h = std::f64::consts::FRAC_PI_2;
            let x = rotation(&gx, h);
            let id = Operator::identity(d);
            let w = [id.clone(), x.clone(), &x * &x, rotation(&gx, -h)];
            let z = rotation(&gz, h);
            let v = [id, z.clone(), rotation(&gy, -h), &z * &z, rotation(&gz, -h), rotation(&gy, h)];
            for vi in &v {
                for wj in &w {
                    letters.push(vi * wj);
                }
            }
        }
        Ok(Self { d, letters })
    }

    pub fn letter(&self, l: Letter) -> Result<Operator<T>> {
        l.check(self.d)?;
        let m = &self.letters[(l.sub as usize - 1) * 24 + l.index()];
        Ok(if l.adjoint { m.adjoint() } else { m.clone() })
    }

    pub fn evaluate(&self, w: &GeneratorWord) -> Result<Operator<T>> {
        w.check(self.d)?;
        let mut out = Operator::identity(self.d);
        for &l in &w.letters {
            out = &out * &self.letter(l)?;
        }
        Ok(out)
    }
}

/// Unitary of a word for qudit dimension `d`.
pub fn evaluate_word<T: Real>(w: &GeneratorWord, d: usize) -> Result<Operator<T>> {
    Alphabet::new(d)?.evaluate(w)
}

/// The 24 single-qubit Cliffords `V_iW_j`, index `4i + j`.
pub fn qubit_cliffords<T: Real>() -> Vec<(GeneratorWord, Operator<T>)> {
    let a = Alphabet::<T>::new(2).expect("qubit alphabet");
    qubit_words()
        .map(|w| {
            let u = a.evaluate(&w).expect("valid qubit word");
            (w, u)
        })
        .collect()
}

pub fn qubit_words() -> impl Iterator<Item = GeneratorWord> {
    (0..24u8).map(|k| GeneratorWord::from_triples(&[(k / 4, k % 4, 1)]))
}

pub const QUTRIT_WORD_COUNT: usize = 13_824;

/// The `index`-th qutrit word `(V W)_1 (V W)_2 (V W)_3`, with the first
/// subsystem's letter most significant.
pub fn qutrit_word(index: usize) -> GeneratorWord {
    assert!(index < QUTRIT_WORD_COUNT, "qutrit word index out of range");
    let l = |k: usize, sub: u8| Letter::new((k / 4) as u8, (k % 4) as u8, sub);
    GeneratorWord::new(vec![l(index / 576, 1), l(index / 24 % 24, 2), l(index % 24, 3)])
}

/// All 13,824 qutrit words in index order.
pub fn qutrit_words() -> impl Iterator<Item = GeneratorWord> {
    (0..QUTRIT_WORD_COUNT).map(qutrit_word)
}

/// Position of a three-letter qutrit word in [`qutrit_words`].
pub fn qutrit_word_index(w: &GeneratorWord) -> Option<usize> {
    match w.letters.as_slice() {
        [a, b, c] if [a.sub, b.sub, c.sub] == [1, 2, 3] && !(a.adjoint || b.adjoint || c.adjoint) => {
            Some((a.index() * 24 + b.index()) * 24 + c.index())
        }
        _ => None,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DictionaryEntry<T> {
    pub word: GeneratorWord,
    #[serde(skip)]
    pub unitary: Option<Operator<T>>,
    pub class_size: usize,
    /// Projection of `(U⊗U)†H_Z(U⊗U)`.
    pub zeeman: Vec<T>,
    /// Projection of `(U⊗U)†H_dd(U⊗U)`.
    pub dipolar: Vec<T>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PrunedDictionary<T> {
    pub d: usize,
    pub n: usize,
    pub raw_size: usize,
    pub entries: Vec<DictionaryEntry<T>>,
}

impl<T: Real> PrunedDictionary<T> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Rounds to nine decimals for exact-match hashing.
pub fn class_key<T: Real>(a: &[T], b: &[T]) -> Vec<i64> {
    a.iter().chain(b).map(|&x| (x.to_f64().unwrap_or(f64::NAN) * 1e9).round() as i64).collect()
}

/// Zeroes round-off left over where an exact coefficient vanishes.
fn snap<T: Real>(mut v: Vec<T>) -> Vec<T> {
    let eps = crate::tol::<T>(1e-12);
    for x in &mut v {
        if x.abs() < eps {
            *x = T::zero();
        }
    }
    v
}

/// Groups words by how collective conjugation transforms `H_Z` and `H_dd`
/// on `n` spins; the first word of each class (in input order) represents it.
pub fn prune<T: Real>(
    words: &[GeneratorWord],
    h_z: &Operator<T>,
    h_dd: &Operator<T>,
    d: usize,
    n: usize,
) -> Result<PrunedDictionary<T>> {
    let alphabet = Alphabet::<T>::new(d)?;
    let proj = Projector::<T>::new(d, n)?;
    for h in [h_z, h_dd] {
        if h.dim() != proj.space_dim() {
            return Err(Error::DimensionMismatch { expected: proj.space_dim(), found: h.dim() });
        }
    }
    let transformed: Vec<(Operator<T>, Vec<T>, Vec<T>)> = words
        .par_iter()
        .map(|w| {
            let u = alphabet.evaluate(w)?;
            let uu = collective(&u, n);
            let z = snap(proj.project(&h_z.conjugate_by(&uu))?.coeffs);
            let dd = snap(proj.project(&h_dd.conjugate_by(&uu))?.coeffs);
            Ok((u, z, dd))
        })
        .collect::<Result<_>>()?;

    let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut entries: Vec<DictionaryEntry<T>> = Vec::new();
    for (w, (u, z, dd)) in words.iter().zip(transformed) {
        let key = class_key(&z, &dd);
        match index.get(&key) {
            Some(&k) => entries[k].class_size += 1,
            None => {
                index.insert(key, entries.len());
                entries.push(DictionaryEntry {
                    word: w.clone(),
                    unitary: Some(u),
                    class_size: 1,
                    zeeman: z,
                    dipolar: dd,
                });
            }
        }
    }
    Ok(PrunedDictionary { d, n, raw_size: words.len(), entries })
}

/// Pruned dictionary of all Clifford words for `d`, keyed on the two-spin
/// unit model.
pub fn standard_dictionary<T: Real>(model: &crate::model::EnsembleModel<T>) -> Result<PrunedDictionary<T>> {
    let words: Vec<GeneratorWord> = match model.d {
        2 => qubit_words().collect(),
        3 => qutrit_words().collect(),
        d => return Err(Error::UnsupportedDimension(d)),
    };
    prune(&words, &model.build_zeeman()?, &model.build_dipolar()?, model.d, model.n)
}

//! The shuffle algebra on words, with exact rational coefficients.
//!
//! Elements are finite linear combinations of words; the product is the
//! shuffle product and the coproduct is deconcatenation. Multiplicities of a
//! single word pair are computed once and memoized globally: they are plain
//! integers (bounded by a central binomial coefficient, far below u64 range
//! for the lengths we ever touch) and the same pairs recur constantly during
//! Lyndon rewriting.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use dashmap::DashMap;
use num_traits::{One, Zero};
use std::sync::OnceLock;

use crate::alphabet::Word;
use crate::error::{Error, Result};
use crate::{rint, Rat};

/// Shuffle of two bare words as a word -> multiplicity map.
pub type WordShuffle = BTreeMap<Word, u64>;

fn shuffle_cache() -> &'static DashMap<(Word, Word), Arc<WordShuffle>> {
    static CACHE: OnceLock<DashMap<(Word, Word), Arc<WordShuffle>>> = OnceLock::new();
    CACHE.get_or_init(DashMap::new)
}

/// Multiplicity map of the shuffle product u sh v. Symmetric in its
/// arguments; the cache key is the sorted pair.
pub fn shuffle_words(u: &Word, v: &Word) -> Arc<WordShuffle> {
    if u.is_empty() || v.is_empty() {
        let w = if u.is_empty() { v } else { u };
        let mut m = BTreeMap::new();
        m.insert(w.clone(), 1);
        return Arc::new(m);
    }
    let key = if u <= v {
        (u.clone(), v.clone())
    } else {
        (v.clone(), u.clone())
    };
    if let Some(hit) = shuffle_cache().get(&key) {
        return hit.clone();
    }
    // Last-letter recursion: (ua) sh (vb) = (u sh vb)a + (ua sh v)b.
    let (u, v) = (&key.0, &key.1);
    let mut us = u.clone();
    let a = us.pop().unwrap();
    let mut vs = v.clone();
    let b = vs.pop().unwrap();
    let mut out: WordShuffle = BTreeMap::new();
    for (w, m) in shuffle_words(&us, v).iter() {
        let mut w = w.clone();
        w.push(a);
        *out.entry(w).or_insert(0) += m;
    }
    for (w, m) in shuffle_words(u, &vs).iter() {
        let mut w = w.clone();
        w.push(b);
        *out.entry(w).or_insert(0) += m;
    }
    let arc = Arc::new(out);
    shuffle_cache().insert(key, arc.clone());
    arc
}

/// Number of entries currently memoized; exposed for cache diagnostics.
pub fn shuffle_cache_len() -> usize {
    shuffle_cache().len()
}

/// An element of the shuffle algebra. Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct ShuffleElem {
    terms: BTreeMap<Word, Rat>,
}

impl ShuffleElem {
    pub fn zero() -> Self {
        ShuffleElem::default()
    }

    /// The multiplicative unit: the empty word.
    pub fn one() -> Self {
        ShuffleElem::word(Word::empty())
    }

    pub fn word(w: Word) -> Self {
        ShuffleElem::term(w, Rat::one())
    }

    pub fn term(w: Word, c: Rat) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(w, c);
        }
        ShuffleElem { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Rat)> {
        self.terms.iter()
    }

    pub fn coeff(&self, w: &Word) -> Rat {
        self.terms.get(w).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn add_term(&mut self, w: Word, c: Rat) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(w) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_assign(&mut self, other: &ShuffleElem) {
        for (w, c) in &other.terms {
            self.add_term(w.clone(), c.clone());
        }
    }

    pub fn sub_assign(&mut self, other: &ShuffleElem) {
        for (w, c) in &other.terms {
            self.add_term(w.clone(), -c.clone());
        }
    }

    pub fn scale(&mut self, c: &Rat) {
        if c.is_zero() {
            self.terms.clear();
            return;
        }
        for v in self.terms.values_mut() {
            *v *= c;
        }
    }

    pub fn scaled(&self, c: &Rat) -> ShuffleElem {
        let mut out = self.clone();
        out.scale(c);
        out
    }

    pub fn neg(&self) -> ShuffleElem {
        self.scaled(&-Rat::one())
    }

    /// Shuffle product.
    pub fn mul(&self, other: &ShuffleElem) -> ShuffleElem {
        let mut out = ShuffleElem::zero();
        for (u, cu) in &self.terms {
            for (v, cv) in &other.terms {
                let c = cu * cv;
                for (w, m) in shuffle_words(u, v).iter() {
                    out.add_term(w.clone(), &c * rint(*m as i64));
                }
            }
        }
        out
    }

    /// n-th shuffle power.
    pub fn pow(&self, n: u32) -> ShuffleElem {
        let mut out = ShuffleElem::one();
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Coefficient of the empty word.
    pub fn counit(&self) -> Rat {
        self.coeff(&Word::empty())
    }

    /// Largest degree of a word with nonzero coefficient, or None for zero.
    pub fn max_degree(&self) -> Option<u32> {
        self.terms.keys().map(|w| w.degree()).max()
    }

    /// Whether every word present has degree exactly `v`.
    pub fn is_homogeneous_of_degree(&self, v: u32) -> bool {
        self.terms.keys().all(|w| w.degree() == v)
    }

    /// Lexicographically largest word present, with its coefficient.
    pub fn leading_term(&self) -> Option<(&Word, &Rat)> {
        self.terms.iter().next_back()
    }

    /// Deconcatenation coproduct.
    pub fn coproduct(&self) -> Tensor2 {
        let mut out = Tensor2::zero();
        for (w, c) in &self.terms {
            let s = w.letters();
            for cut in 0..=s.len() {
                out.add_term(
                    Word::from_slice(&s[..cut]),
                    Word::from_slice(&s[cut..]),
                    c.clone(),
                );
            }
        }
        out
    }
}

impl fmt::Display for ShuffleElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (w, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*{w}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for ShuffleElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for ShuffleElem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "0" {
            return Ok(ShuffleElem::zero());
        }
        let mut out = ShuffleElem::zero();
        for part in s.split(" + ") {
            let (c, w) = part
                .split_once('*')
                .ok_or_else(|| Error::Parse(format!("bad term {part:?}")))?;
            let c: Rat = c
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad coefficient {c:?}")))?;
            out.add_term(w.trim().parse()?, c);
        }
        Ok(out)
    }
}

/// An element of the twofold tensor square, used for coproduct identities.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct Tensor2 {
    terms: BTreeMap<(Word, Word), Rat>,
}

impl Tensor2 {
    pub fn zero() -> Self {
        Tensor2::default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, a: Word, b: Word, c: Rat) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry((a, b)) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(Word, Word), &Rat)> {
        self.terms.iter()
    }

    pub fn sub_assign(&mut self, other: &Tensor2) {
        for ((a, b), c) in &other.terms {
            self.add_term(a.clone(), b.clone(), -c.clone());
        }
    }

    /// Componentwise product: (a ox b)(a' ox b') = (a sh a') ox (b sh b').
    pub fn mul(&self, other: &Tensor2) -> Tensor2 {
        let mut out = Tensor2::zero();
        for ((a, b), c) in &self.terms {
            for ((a2, b2), c2) in &other.terms {
                let c = c * c2;
                for (wa, ma) in shuffle_words(a, a2).iter() {
                    for (wb, mb) in shuffle_words(b, b2).iter() {
                        out.add_term(wa.clone(), wb.clone(), &c * rint((ma * mb) as i64));
                    }
                }
            }
        }
        out
    }

    /// Apply the coproduct on the left factor: (Delta ox id).
    pub fn coproduct_left(&self) -> BTreeMap<(Word, Word, Word), Rat> {
        let mut out: BTreeMap<(Word, Word, Word), Rat> = BTreeMap::new();
        for ((a, b), c) in &self.terms {
            let s = a.letters();
            for cut in 0..=s.len() {
                let key = (
                    Word::from_slice(&s[..cut]),
                    Word::from_slice(&s[cut..]),
                    b.clone(),
                );
                let e = out.entry(key).or_insert_with(Rat::zero);
                *e += c.clone();
            }
        }
        out.retain(|_, c| !c.is_zero());
        out
    }

    /// Apply the coproduct on the right factor: (id ox Delta).
    pub fn coproduct_right(&self) -> BTreeMap<(Word, Word, Word), Rat> {
        let mut out: BTreeMap<(Word, Word, Word), Rat> = BTreeMap::new();
        for ((a, b), c) in &self.terms {
            let s = b.letters();
            for cut in 0..=s.len() {
                let key = (
                    a.clone(),
                    Word::from_slice(&s[..cut]),
                    Word::from_slice(&s[cut..]),
                );
                let e = out.entry(key).or_insert_with(Rat::zero);
                *e += c.clone();
            }
        }
        out.retain(|_, c| !c.is_zero());
        out
    }
}

impl fmt::Display for Tensor2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, ((a, b), c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*({a})x({b})")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Tensor2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::words_of_degree;
    use crate::rat;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn f(s: &str) -> ShuffleElem {
        ShuffleElem::word(w(s))
    }

    /// Brute-force shuffle via explicit interleavings, for cross-checking.
    fn shuffle_brute(u: &Word, v: &Word) -> WordShuffle {
        let (nu, nv) = (u.len(), v.len());
        let mut out = WordShuffle::new();
        // Choose positions of u-letters among nu+nv slots via bitmask.
        let n = nu + nv;
        assert!(n <= 16, "brute force oracle limited to short words");
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != nu {
                continue;
            }
            let (mut iu, mut iv) = (0, 0);
            let mut word = Word::empty();
            for pos in 0..n {
                if mask >> pos & 1 == 1 {
                    word.push(u.letters()[iu]);
                    iu += 1;
                } else {
                    word.push(v.letters()[iv]);
                    iv += 1;
                }
            }
            *out.entry(word).or_insert(0) += 1;
        }
        out
    }

    #[test]
    fn shuffle_matches_brute_force() {
        let mut pool = Vec::new();
        for v in 0..=3 {
            pool.extend(words_of_degree(2, 3, v));
        }
        for u in &pool {
            for v in &pool {
                if u.len() + v.len() <= 6 {
                    assert_eq!(
                        *shuffle_words(u, v),
                        shuffle_brute(u, v),
                        "u={u} v={v}"
                    );
                }
            }
        }
    }

    #[test]
    fn shuffle_small_examples() {
        // t1 sh t2 = t1.t2 + t2.t1
        let p = f("t1").mul(&f("t2"));
        assert_eq!(p.to_string(), "1*t1.t2 + 1*t2.t1");
        // t1 sh t1 = 2 t1.t1
        let p = f("t1").mul(&f("t1"));
        assert_eq!(p.to_string(), "2*t1.t1");
        // t1^sh 3 = 6 t1.t1.t1
        let p = f("t1").pow(3);
        assert_eq!(p, ShuffleElem::term(w("t1.t1.t1"), rint(6)));
        // (t1.t2) sh t2 = t1.t2.t2 * 2 + t2.t1.t2
        let p = f("t1.t2").mul(&f("t2"));
        assert_eq!(p.to_string(), "2*t1.t2.t2 + 1*t2.t1.t2");
    }

    #[test]
    fn unit_and_zero() {
        let x = f("t1.s3").scaled(&rat(3, 2));
        assert_eq!(x.mul(&ShuffleElem::one()), x);
        assert!(x.mul(&ShuffleElem::zero()).is_zero());
        let mut y = x.clone();
        y.sub_assign(&x);
        assert!(y.is_zero());
        assert_eq!(y.to_string(), "0");
    }

    #[test]
    fn display_parse_roundtrip() {
        let x: ShuffleElem = "-3/2*t1.t2 + 2*s3 + 1*1".parse().unwrap();
        assert_eq!(x.coeff(&w("t1.t2")), rat(-3, 2));
        assert_eq!(x.counit(), rint(1));
        let back: ShuffleElem = x.to_string().parse().unwrap();
        assert_eq!(back, x);
        assert_eq!("0".parse::<ShuffleElem>().unwrap(), ShuffleElem::zero());
    }

    #[test]
    fn coproduct_of_letter_is_primitive() {
        let d = f("s3").coproduct();
        let mut expect = Tensor2::zero();
        expect.add_term(w("1"), w("s3"), rint(1));
        expect.add_term(w("s3"), w("1"), rint(1));
        assert_eq!(d, expect);
    }

    #[test]
    fn coproduct_is_an_algebra_map() {
        // Delta(x sh y) = Delta(x) Delta(y) on a handful of pairs.
        let pairs = [
            ("t1", "t2"),
            ("t1.t2", "t1"),
            ("s3", "t1.t1"),
            ("t2.t1", "t1.t2"),
        ];
        for (a, b) in pairs {
            let (x, y) = (f(a), f(b));
            assert_eq!(
                x.mul(&y).coproduct(),
                x.coproduct().mul(&y.coproduct()),
                "a={a} b={b}"
            );
        }
    }

    #[test]
    fn coassociativity_small() {
        for v in 0..=4 {
            for word in words_of_degree(2, 3, v) {
                let d = ShuffleElem::word(word.clone()).coproduct();
                assert_eq!(d.coproduct_left(), d.coproduct_right(), "word {word}");
            }
        }
    }

    #[test]
    fn leading_term_is_lex_max() {
        let x: ShuffleElem = "1*t1.t2 + 1*t2.t1 + 5*t1.t1".parse().unwrap();
        let (lead, c) = x.leading_term().unwrap();
        assert_eq!(*lead, w("t2.t1"));
        assert_eq!(*c, rint(1));
    }

    #[test]
    fn grading_helpers() {
        let x = f("t1.s3");
        assert_eq!(x.max_degree(), Some(4));
        assert!(x.is_homogeneous_of_degree(4));
        let y = x.mul(&f("t2"));
        assert!(y.is_homogeneous_of_degree(5));
        assert_eq!(ShuffleElem::zero().max_degree(), None);
    }
}

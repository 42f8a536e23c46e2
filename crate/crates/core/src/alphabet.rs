//! Graded alphabet and Lyndon-word machinery.
//!
//! Letters are ordered `t1 < t2 < ... < ts < s3 < s5 < ...`, each `ti` of
//! degree 1 and each `sk` of degree k (k odd, k >= 3). Words compare
//! letter-lexicographically with a proper prefix sorting before its
//! extensions; every triangularity argument downstream relies on exactly this
//! order.

use std::fmt;
use std::str::FromStr;

use smallvec::SmallVec;

use crate::error::{Error, Result};

/// One letter. The derived `Ord` puts every `Tau` below every `Sigma` and
/// orders payloads within a kind, matching the fixed generator order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Gen {
    /// Degree-1 generator, indexed from 1.
    Tau(u8),
    /// Odd-degree generator; the payload is its degree (3, 5, ...).
    Sigma(u8),
}

impl Gen {
    pub fn degree(self) -> u32 {
        match self {
            Gen::Tau(_) => 1,
            Gen::Sigma(k) => k as u32,
        }
    }
}

impl fmt::Display for Gen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gen::Tau(i) => write!(f, "t{i}"),
            Gen::Sigma(k) => write!(f, "s{k}"),
        }
    }
}

impl FromStr for Gen {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad generator {s:?}"));
        let (kind, num) = s.split_at(1.min(s.len()));
        let n: u8 = num.parse().map_err(|_| bad())?;
        match kind {
            "t" if n >= 1 => Ok(Gen::Tau(n)),
            "s" if n >= 3 && n % 2 == 1 => Ok(Gen::Sigma(n)),
            _ => Err(bad()),
        }
    }
}

/// The alphabet for `s` primes at depth `d`: all of `t1..ts`, plus every odd
/// `sk` with `3 <= k <= d`.
pub fn alphabet(s: u8, d: u32) -> Vec<Gen> {
    let mut gens: Vec<Gen> = (1..=s).map(Gen::Tau).collect();
    let mut k = 3u32;
    while k <= d && k <= u8::MAX as u32 {
        gens.push(Gen::Sigma(k as u8));
        k += 2;
    }
    gens
}

/// Letters stay inline up to length 16, which covers every hot path (the
/// deepest words handled in bulk have degree 14, hence at most 14 letters).
pub type Letters = SmallVec<[Gen; 16]>;

/// A word over the graded alphabet. Derived `Ord` is slice order on the
/// letters, i.e. exactly the lexicographic word order described above.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(Letters);

impl Word {
    pub fn empty() -> Self {
        Word(SmallVec::new())
    }

    pub fn single(g: Gen) -> Self {
        let mut l = SmallVec::new();
        l.push(g);
        Word(l)
    }

    pub fn from_slice(letters: &[Gen]) -> Self {
        Word(SmallVec::from_slice(letters))
    }

    pub fn letters(&self) -> &[Gen] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|g| g.degree()).sum()
    }

    pub fn push(&mut self, g: Gen) {
        self.0.push(g);
    }

    pub fn pop(&mut self) -> Option<Gen> {
        self.0.pop()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut l = self.0.clone();
        l.extend_from_slice(&other.0);
        Word(l)
    }

    pub fn repeated(&self, times: u32) -> Word {
        let mut l = SmallVec::with_capacity(self.len() * times as usize);
        for _ in 0..times {
            l.extend_from_slice(&self.0);
        }
        Word(l)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "1");
        }
        for (i, g) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ".")?;
            }
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "1" {
            return Ok(Word::empty());
        }
        let mut letters = SmallVec::new();
        for part in s.split('.') {
            letters.push(part.parse::<Gen>()?);
        }
        Ok(Word(letters))
    }
}

/// Whether `w` is strictly smaller than all of its proper rotations. Words
/// here never exceed a couple dozen letters, so the quadratic check is fine.
pub fn is_lyndon(w: &Word) -> Result<bool> {
    if w.is_empty() {
        return Err(Error::EmptyWord);
    }
    let s = w.letters();
    let n = s.len();
    for i in 1..n {
        // Compare w against its rotation by i without materializing it.
        let rot = s[i..].iter().chain(s[..i].iter());
        if s.iter().cmp(rot) != std::cmp::Ordering::Less {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Chen-Fox-Lyndon factorization by Duval's algorithm, returned as
/// (factor, multiplicity) pairs with factors strictly decreasing.
pub fn cfl_factorize(w: &Word) -> Vec<(Word, u32)> {
    let s = w.letters();
    let n = s.len();
    let mut out: Vec<(Word, u32)> = Vec::new();
    let mut push = |factor: Word| match out.last_mut() {
        Some((f, m)) if *f == factor => *m += 1,
        _ => out.push((factor, 1)),
    };
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        let mut k = i;
        while j < n && s[k] <= s[j] {
            if s[k] < s[j] {
                k = i;
            } else {
                k += 1;
            }
            j += 1;
        }
        let len = j - k;
        while i <= k {
            push(Word::from_slice(&s[i..i + len]));
            i += len;
        }
    }
    out
}

/// All words of degree exactly `v` over `alphabet(s, d)`, in lexicographic
/// order. Distinct words of equal degree are never prefixes of one another,
/// so this is also graded-lex order within the degree.
pub fn words_of_degree(s: u8, d: u32, v: u32) -> Vec<Word> {
    let gens = alphabet(s, d);
    let mut out = Vec::new();
    let mut cur = Word::empty();
    fn rec(gens: &[Gen], v: u32, cur: &mut Word, out: &mut Vec<Word>) {
        if v == 0 {
            out.push(cur.clone());
            return;
        }
        for &g in gens {
            if g.degree() <= v {
                cur.push(g);
                rec(gens, v - g.degree(), cur, out);
                cur.pop();
            }
        }
    }
    rec(&gens, v, &mut cur, &mut out);
    out
}

/// Lyndon words of degree exactly `v`, in lexicographic order.
pub fn lyndon_words_of_degree(s: u8, d: u32, v: u32) -> Vec<Word> {
    words_of_degree(s, d, v)
        .into_iter()
        .filter(|w| is_lyndon(w).unwrap_or(false))
        .collect()
}

/// Lyndon words of degree 1..=v_max, ordered by (degree, lex). This is the
/// canonical variable enumeration every specialization point is built on.
pub fn lyndon_words_upto(s: u8, d: u32, v_max: u32) -> Vec<Word> {
    (1..=v_max)
        .flat_map(|v| lyndon_words_of_degree(s, d, v))
        .collect()
}

//! Rewriting shuffle elements as polynomials in Lyndon-word variables.
//!
//! The shuffle algebra is a free polynomial ring on the Lyndon words. The
//! rewrite repeatedly peels the lex-largest word w: if its Chen-Fox-Lyndon
//! factorization is l1^i1 ... lk^ik, the shuffle product of the f_{lj} (each
//! taken ij times) has leading term (prod ij!) f_w, so subtracting
//! coeff/(prod ij!) times that product kills w; everything the subtraction
//! introduces is lex-smaller and has the same letter multiset, hence the loop
//! terminates. The monomial emitted at each step is
//! coeff/(prod ij!) * X_{l1}^{i1} ... X_{lk}^{ik}.
//!
//! Two evaluation modes share one driver: exact rationals, and arithmetic
//! mod a word-sized prime (used where only ranks or supports are needed).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::sync::OnceLock;

use dashmap::DashMap;
use num_traits::{One, Zero};
use smallvec::SmallVec;

use crate::alphabet::{cfl_factorize, Gen, Letters, Word};
use crate::error::{Error, Result};
use crate::shuffle::ShuffleElem;
use crate::{rint, Rat};

/// A monomial in Lyndon variables: sorted (word, exponent) pairs, exponents
/// nonzero. Negative exponents are legal; they only ever arise in the
/// experimental elimination pipeline where single variables are inverted.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct LyndonMono(SmallVec<[(Word, i32); 2]>);

impl LyndonMono {
    pub fn one() -> Self {
        LyndonMono::default()
    }

    pub fn var(w: Word) -> Self {
        let mut v = SmallVec::new();
        v.push((w, 1));
        LyndonMono(v)
    }

    /// From unsorted factors; merges repeats, drops zero exponents.
    pub fn from_factors(factors: &[(Word, i32)]) -> Self {
        let mut v: SmallVec<[(Word, i32); 2]> = SmallVec::new();
        for (w, e) in factors {
            if *e == 0 {
                continue;
            }
            match v.iter_mut().find(|(x, _)| x == w) {
                Some((_, have)) => *have += e,
                None => v.push((w.clone(), *e)),
            }
        }
        v.retain(|(_, e)| *e != 0);
        v.sort_by(|a, b| a.0.cmp(&b.0));
        LyndonMono(v)
    }

    pub fn factors(&self) -> &[(Word, i32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    /// Total degree: sum of exponent times word degree.
    pub fn degree(&self) -> i64 {
        self.0
            .iter()
            .map(|(w, e)| w.degree() as i64 * *e as i64)
            .sum()
    }

    pub fn mul(&self, other: &LyndonMono) -> LyndonMono {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        let mut all: Vec<(Word, i32)> = v.into_vec();
        all.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: SmallVec<[(Word, i32); 2]> = SmallVec::new();
        for (w, e) in all {
            match out.last_mut() {
                Some((lw, le)) if *lw == w => *le += e,
                _ => out.push((w, e)),
            }
        }
        out.retain(|(_, e)| *e != 0);
        LyndonMono(out)
    }
}

impl fmt::Display for LyndonMono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (i, (w, e)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            write!(f, "X[{w}]")?;
            if *e != 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for LyndonMono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A polynomial (Laurent, in general) in Lyndon variables.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct LyndonPoly {
    terms: BTreeMap<LyndonMono, Rat>,
}

impl LyndonPoly {
    pub fn zero() -> Self {
        LyndonPoly::default()
    }

    pub fn one() -> Self {
        LyndonPoly::term(LyndonMono::one(), Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        LyndonPoly::term(LyndonMono::one(), c)
    }

    pub fn var(w: Word) -> Self {
        LyndonPoly::term(LyndonMono::var(w), Rat::one())
    }

    pub fn term(m: LyndonMono, c: Rat) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        LyndonPoly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&LyndonMono, &Rat)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &LyndonMono) -> Rat {
        self.terms.get(m).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn add_term(&mut self, m: LyndonMono, c: Rat) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
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

    pub fn add_assign(&mut self, other: &LyndonPoly) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn sub_assign(&mut self, other: &LyndonPoly) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), -c.clone());
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

    pub fn scaled(&self, c: &Rat) -> LyndonPoly {
        let mut out = self.clone();
        out.scale(c);
        out
    }

    pub fn mul(&self, other: &LyndonPoly) -> LyndonPoly {
        let mut out = LyndonPoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    /// Support: the set of distinct Lyndon variables appearing.
    pub fn support(&self) -> std::collections::BTreeSet<Word> {
        self.terms
            .keys()
            .flat_map(|m| m.factors().iter().map(|(w, _)| w.clone()))
            .collect()
    }

    /// Evaluate at a point given as a word -> value map.
    pub fn evaluate(&self, point: &BTreeMap<Word, Rat>) -> Result<Rat> {
        let mut total = Rat::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (w, e) in m.factors() {
                let x = point
                    .get(w)
                    .ok_or_else(|| Error::MissingAssignment(w.to_string()))?;
                if *e >= 0 {
                    for _ in 0..*e {
                        v *= x;
                    }
                } else {
                    if x.is_zero() {
                        return Err(Error::MissingAssignment(format!("1/{w} at zero")));
                    }
                    for _ in 0..e.unsigned_abs() {
                        v /= x;
                    }
                }
            }
            total += v;
        }
        Ok(total)
    }
}

impl fmt::Display for LyndonPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*{m}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for LyndonPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for LyndonPoly {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "0" {
            return Ok(LyndonPoly::zero());
        }
        let mut out = LyndonPoly::zero();
        for part in s.split(" + ") {
            let mut pieces = part.split('*');
            let c: Rat = pieces
                .next()
                .and_then(|c| c.trim().parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad term {part:?}")))?;
            let mut factors = Vec::new();
            for piece in pieces {
                let piece = piece.trim();
                if piece == "1" {
                    continue;
                }
                let inner = piece
                    .strip_prefix("X[")
                    .ok_or_else(|| Error::Parse(format!("bad factor {piece:?}")))?;
                let (word, exp) = match inner.split_once(']') {
                    Some((w, rest)) => {
                        let e = match rest.strip_prefix('^') {
                            Some(e) => e
                                .parse()
                                .map_err(|_| Error::Parse(format!("bad exponent {rest:?}")))?,
                            None if rest.is_empty() => 1,
                            None => return Err(Error::Parse(format!("bad factor {piece:?}"))),
                        };
                        (w.parse::<Word>()?, e)
                    }
                    None => return Err(Error::Parse(format!("bad factor {piece:?}"))),
                };
                factors.push((word, exp));
            }
            out.add_term(LyndonMono::from_factors(&factors), c);
        }
        Ok(out)
    }
}

/// Walk every interleaving path of u and l, calling `emit` with the buffer
/// once per path. Equal letters produce repeated words; the repeats are the
/// shuffle multiplicities and the caller accumulates them.
fn interleave_paths<F: FnMut(&Letters)>(u: &[Gen], l: &[Gen], buf: &mut Letters, emit: &mut F) {
    if u.is_empty() || l.is_empty() {
        let n = buf.len();
        buf.extend_from_slice(u);
        buf.extend_from_slice(l);
        emit(buf);
        buf.truncate(n);
        return;
    }
    buf.push(u[0]);
    interleave_paths(&u[1..], l, buf, emit);
    buf.pop();
    buf.push(l[0]);
    interleave_paths(u, &l[1..], buf, emit);
    buf.pop();
}

/// One peel step: factor the lex-max word, expand the matching product of
/// Lyndon variables back into words, subtract. `emit` receives the surviving
/// monomial as (coefficient, factors with positive exponents).
///
/// The word expansion of prod f_{lj}^{sh ij} is computed with integer
/// multiplicities and applied through `sub` so both scalar modes share it.
/// Expansion enumerates interleavings directly rather than going through the
/// memoized pair shuffles: peels of deep words would otherwise fill the
/// global cache with entries that never recur.
fn peel_driver<C, FEmit, FSub>(
    work: &mut BTreeMap<Word, C>,
    mut emit: FEmit,
    mut sub: FSub,
) where
    C: Clone,
    FEmit: FnMut(&C, u64, &[(Word, u32)]),
    FSub: FnMut(&mut BTreeMap<Word, C>, &C, u64, &Word, u64),
{
    while let Some((w, c)) = work.pop_last() {
        if w.is_empty() {
            emit(&c, 1, &[]);
            continue;
        }
        let cfl: Vec<(Word, u32)> = cfl_factorize(&w);
        let mut denom: u64 = 1;
        for (_, m) in &cfl {
            for i in 1..=*m {
                denom *= i as u64;
            }
        }
        emit(&c, denom, &cfl);
        if cfl.len() == 1 && cfl[0].1 == 1 {
            // w itself is Lyndon; nothing to subtract.
            continue;
        }
        // Expand the shuffle product of the factors as bare words, longest
        // factor first so the costly interleavings happen on short prefixes.
        let mut occurrences: Vec<&Word> = Vec::new();
        for (l, m) in &cfl {
            for _ in 0..*m {
                occurrences.push(l);
            }
        }
        occurrences.sort_by_key(|l| std::cmp::Reverse(l.len()));
        let mut expansion: HashMap<Word, u64> = HashMap::new();
        expansion.insert(Word::empty(), 1);
        let mut buf: Letters = SmallVec::new();
        for l in occurrences {
            let mut next: HashMap<Word, u64> = HashMap::with_capacity(expansion.len() * 2);
            for (u, mu) in &expansion {
                interleave_paths(u.letters(), l.letters(), &mut buf, &mut |b| {
                    *next.entry(Word::from_slice(b)).or_insert(0) += mu;
                });
            }
            expansion = next;
        }
        // The w term of the expansion cancels against the popped term exactly
        // (multiplicity prod ij!), so only the strictly smaller words land
        // back in the work map.
        debug_assert_eq!(expansion.get(&w), Some(&denom));
        for (u, mult) in &expansion {
            if u != &w {
                sub(work, &c, denom, u, *mult);
            }
        }
    }
}

/// Exact peel. Calls `emit(coeff, factors)` once per monomial of the result;
/// coefficients are nonzero and factors carry positive exponents.
pub fn peel_rat<F: FnMut(Rat, &[(Word, u32)])>(work: &mut BTreeMap<Word, Rat>, mut emit: F) {
    work.retain(|_, c| !c.is_zero());
    peel_driver(
        work,
        |c: &Rat, denom, factors| emit(c / rint(denom as i64), factors),
        |work, c, denom, u, mult| {
            let delta = c * rint(mult as i64) / rint(denom as i64);
            use std::collections::btree_map::Entry;
            match work.entry(u.clone()) {
                Entry::Vacant(e) => {
                    if !delta.is_zero() {
                        e.insert(-delta);
                    }
                }
                Entry::Occupied(mut e) => {
                    *e.get_mut() -= delta;
                    if e.get().is_zero() {
                        e.remove();
                    }
                }
            }
        },
    );
}

/// Peel with coefficients mod p. Emitted coefficients may still be zero mod p
/// for individual monomials; consumers that care must check.
pub fn peel_mod_p<F: FnMut(u64, &[(Word, u32)])>(
    work: &mut BTreeMap<Word, u64>,
    p: u64,
    mut emit: F,
) {
    work.retain(|_, c| *c % p != 0);
    peel_driver(
        work,
        |c: &u64, denom, factors| {
            let inv = crate::linalg::invmod(denom % p, p);
            emit(crate::linalg::mulmod(*c, inv, p), factors)
        },
        |work, c, denom, u, mult| {
            let inv = crate::linalg::invmod(denom % p, p);
            let delta = crate::linalg::mulmod(crate::linalg::mulmod(*c, inv, p), mult % p, p);
            use std::collections::btree_map::Entry;
            match work.entry(u.clone()) {
                Entry::Vacant(e) => {
                    if delta != 0 {
                        e.insert(p - delta);
                    }
                }
                Entry::Occupied(mut e) => {
                    let v = (*e.get() + p - delta) % p;
                    if v == 0 {
                        e.remove();
                    } else {
                        *e.get_mut() = v;
                    }
                }
            }
        },
    );
}

fn word_poly_cache() -> &'static DashMap<Word, Arc<LyndonPoly>> {
    static CACHE: OnceLock<DashMap<Word, Arc<LyndonPoly>>> = OnceLock::new();
    CACHE.get_or_init(DashMap::new)
}

/// Number of cached single-word rewrites; exposed for cache diagnostics.
pub fn word_poly_cache_len() -> usize {
    word_poly_cache().len()
}

pub fn word_poly_cache_clear() {
    word_poly_cache().clear()
}

/// Seed the single-word cache, used when loading persisted rewrites.
pub fn word_poly_cache_insert(w: Word, p: LyndonPoly) {
    word_poly_cache().insert(w, Arc::new(p));
}

/// Snapshot of the single-word cache, used when persisting rewrites.
pub fn word_poly_cache_snapshot() -> Vec<(Word, LyndonPoly)> {
    let mut v: Vec<(Word, LyndonPoly)> = word_poly_cache()
        .iter()
        .map(|e| (e.key().clone(), e.value().as_ref().clone()))
        .collect();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    v
}

/// Lyndon form of a single basis word, memoized globally. The rewrite of a
/// word does not depend on the ambient (s, d), so one cache serves all.
pub fn to_lyndon_word(w: &Word) -> Arc<LyndonPoly> {
    if let Some(hit) = word_poly_cache().get(w) {
        return hit.clone();
    }
    let mut work = BTreeMap::new();
    work.insert(w.clone(), Rat::one());
    let mut out = LyndonPoly::zero();
    peel_rat(&mut work, |c, factors| {
        let signed: Vec<(Word, i32)> = factors
            .iter()
            .map(|(w, e)| (w.clone(), *e as i32))
            .collect();
        out.add_term(LyndonMono::from_factors(&signed), c);
    });
    let arc = Arc::new(out);
    word_poly_cache().insert(w.clone(), arc.clone());
    arc
}

/// Lyndon form of an element, peeling the whole combination at once so that
/// cancellation happens in the word basis (cheaper than summing per-word
/// rewrites when the element is a sparse combination of a dense expansion).
pub fn to_lyndon_elem(x: &ShuffleElem) -> LyndonPoly {
    let mut work: BTreeMap<Word, Rat> =
        x.terms().map(|(w, c)| (w.clone(), c.clone())).collect();
    let mut out = LyndonPoly::zero();
    peel_rat(&mut work, |c, factors| {
        let signed: Vec<(Word, i32)> = factors
            .iter()
            .map(|(w, e)| (w.clone(), *e as i32))
            .collect();
        out.add_term(LyndonMono::from_factors(&signed), c);
    });
    out
}

/// Lyndon form via the per-word cache. Same result as [`to_lyndon_elem`];
/// wins when the same words recur across many calls.
pub fn to_lyndon_elem_cached(x: &ShuffleElem) -> LyndonPoly {
    let mut out = LyndonPoly::zero();
    for (w, c) in x.terms() {
        let poly = to_lyndon_word(w);
        for (m, pc) in poly.terms() {
            out.add_term(m.clone(), pc * c);
        }
    }
    out
}

/// Inverse direction: expand a Lyndon polynomial back to the word basis.
pub fn from_lyndon(p: &LyndonPoly) -> ShuffleElem {
    let mut out = ShuffleElem::zero();
    for (m, c) in p.terms() {
        let mut prod = ShuffleElem::one();
        for (w, e) in m.factors() {
            assert!(*e >= 0, "cannot expand negative power of {w}");
            let f = ShuffleElem::word(w.clone());
            for _ in 0..*e {
                prod = prod.mul(&f);
            }
        }
        prod.scale(c);
        out.add_assign(&prod);
    }
    out
}

/// Distinct Lyndon variables in the Lyndon form of `x`, computed mod p.
/// Monomials are discarded as they are emitted, so memory stays proportional
/// to the peel frontier. The support mod p is a subset of the true support;
/// callers cross prime runs or expected totals to detect drops.
pub fn support_mod_p(x: &ShuffleElem, p: u64) -> Result<std::collections::BTreeSet<Word>> {
    let mut work: BTreeMap<Word, u64> = BTreeMap::new();
    for (w, c) in x.terms() {
        let v = crate::linalg::rat_mod(c, p)?;
        if v != 0 {
            work.insert(w.clone(), v);
        }
    }
    let mut support = std::collections::BTreeSet::new();
    peel_mod_p(&mut work, p, |c, factors| {
        if c != 0 {
            for (w, _) in factors {
                support.insert(w.clone());
            }
        }
    });
    Ok(support)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::{lyndon_words_upto, words_of_degree};
    use crate::rat;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn f(s: &str) -> ShuffleElem {
        ShuffleElem::word(w(s))
    }

    #[test]
    fn single_letters_are_fixed() {
        let p = to_lyndon_word(&w("t1"));
        assert_eq!(p.to_string(), "1*X[t1]");
        let p = to_lyndon_word(&w("s3"));
        assert_eq!(p.to_string(), "1*X[s3]");
    }

    #[test]
    fn square_of_letter() {
        // f_{t1.t1} = X_{t1}^2 / 2
        let p = to_lyndon_word(&w("t1.t1"));
        assert_eq!(p.to_string(), "1/2*X[t1]^2");
        // f_{t1}^sh i = i! f_{t1^i} so to_lyndon(f_{t1^i}) = X^i/i!
        let p = to_lyndon_word(&w("t1.t1.t1.t1"));
        assert_eq!(
            *p,
            LyndonPoly::term(LyndonMono::from_factors(&[(w("t1"), 4)]), rat(1, 24))
        );
    }

    #[test]
    fn descending_pair() {
        // f_{t2.t1} = X_{t1} X_{t2} - X_{t1.t2}
        let p = to_lyndon_word(&w("t2.t1"));
        let mut expect = LyndonPoly::zero();
        expect.add_term(
            LyndonMono::from_factors(&[(w("t1"), 1), (w("t2"), 1)]),
            rint(1),
        );
        expect.add_term(LyndonMono::var(w("t1.t2")), rint(-1));
        assert_eq!(*p, expect);
    }

    #[test]
    fn aba_example() {
        // f_{t1.t2.t1} = X_{t1} X_{t1.t2} - 2 X_{t1.t1.t2}
        let p = to_lyndon_word(&w("t1.t2.t1"));
        let mut expect = LyndonPoly::zero();
        expect.add_term(
            LyndonMono::from_factors(&[(w("t1"), 1), (w("t1.t2"), 1)]),
            rint(1),
        );
        expect.add_term(LyndonMono::var(w("t1.t1.t2")), rint(-2));
        assert_eq!(*p, expect);
    }

    #[test]
    fn commutator_example() {
        // f_{t2.t1} - f_{t1.t2} = X_{t1} X_{t2} - 2 X_{t1.t2}
        let mut x = f("t2.t1");
        x.sub_assign(&f("t1.t2"));
        let p = to_lyndon_elem(&x);
        let mut expect = LyndonPoly::zero();
        expect.add_term(
            LyndonMono::from_factors(&[(w("t1"), 1), (w("t2"), 1)]),
            rint(1),
        );
        expect.add_term(LyndonMono::var(w("t1.t2")), rint(-2));
        assert_eq!(p, expect);
    }

    #[test]
    fn arrangement_sum_is_single_monomial() {
        // f_{t1^2} sh f_{t2^3} = sum over arrangements; Lyndon form X1^2 X2^3 / (2! 3!)
        let x = f("t1.t1").mul(&f("t2.t2.t2"));
        assert!(x.terms().all(|(_, c)| *c == rint(1)));
        assert_eq!(x.num_terms(), 10);
        let p = to_lyndon_elem(&x);
        assert_eq!(
            p,
            LyndonPoly::term(
                LyndonMono::from_factors(&[(w("t1"), 2), (w("t2"), 3)]),
                rat(1, 12)
            )
        );
    }

    #[test]
    fn rewrite_is_a_ring_map() {
        // to_lyndon(x sh y) = to_lyndon(x) * to_lyndon(y)
        let cases = [
            (f("t2.t1"), f("t1.s3")),
            (f("t1.t2"), f("t1.t2")),
            (f("s3"), f("t2.t1.t1")),
        ];
        for (x, y) in cases {
            assert_eq!(
                to_lyndon_elem(&x.mul(&y)),
                to_lyndon_elem(&x).mul(&to_lyndon_elem(&y))
            );
        }
    }

    #[test]
    fn roundtrip_through_words() {
        for v in 1..=5 {
            for word in words_of_degree(2, 3, v) {
                let p = to_lyndon_word(&word);
                assert_eq!(
                    from_lyndon(&p),
                    ShuffleElem::word(word.clone()),
                    "word {word}"
                );
                // All monomials have the word's degree.
                assert!(p.terms().all(|(m, _)| m.degree() == word.degree() as i64));
                // All exponents positive, all factors Lyndon.
                for (m, _) in p.terms() {
                    for (l, e) in m.factors() {
                        assert!(*e > 0);
                        assert!(crate::alphabet::is_lyndon(l).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn cached_and_direct_agree() {
        for v in 1..=5 {
            for word in words_of_degree(2, 6, v) {
                let x = ShuffleElem::term(word.clone(), rat(3, 7));
                assert_eq!(to_lyndon_elem(&x), to_lyndon_elem_cached(&x));
            }
        }
    }

    #[test]
    fn monomial_count_matches_word_count() {
        // The rewrite is a graded ring isomorphism, so the number of degree-v
        // Lyndon monomials equals the number of degree-v words.
        for v in 1..=6 {
            let vars = lyndon_words_upto(2, 6, v);
            let mut count = 0u64;
            // Count monomials sum e_i deg(l_i) = v by recursion over vars.
            fn rec(vars: &[(u32, usize)], v: u32, count: &mut u64) {
                match vars {
                    [] => {
                        if v == 0 {
                            *count += 1;
                        }
                    }
                    [(d, _), rest @ ..] => {
                        let mut used = 0;
                        while used <= v {
                            rec(rest, v - used, count);
                            used += d;
                        }
                    }
                }
            }
            let degs: Vec<(u32, usize)> =
                vars.iter().enumerate().map(|(i, w)| (w.degree(), i)).collect();
            rec(&degs, v, &mut count);
            assert_eq!(
                count,
                words_of_degree(2, 6, v).len() as u64,
                "degree {v}"
            );
        }
    }

    #[test]
    fn mod_p_peel_matches_exact() {
        let p: u64 = 1_000_000_007;
        for v in 1..=5 {
            for word in words_of_degree(2, 4, v) {
                let exact = to_lyndon_word(&word);
                let mut work = BTreeMap::new();
                work.insert(word.clone(), 1u64);
                let mut modp: BTreeMap<LyndonMono, u64> = BTreeMap::new();
                peel_mod_p(&mut work, p, |c, factors| {
                    let signed: Vec<(Word, i32)> =
                        factors.iter().map(|(w, e)| (w.clone(), *e as i32)).collect();
                    let m = LyndonMono::from_factors(&signed);
                    let e = modp.entry(m).or_insert(0);
                    *e = (*e + c) % p;
                });
                modp.retain(|_, c| *c != 0);
                let reduced: BTreeMap<LyndonMono, u64> = exact
                    .terms()
                    .map(|(m, c)| (m.clone(), crate::linalg::rat_mod(c, p).unwrap()))
                    .collect();
                assert_eq!(modp, reduced, "word {word}");
            }
        }
    }

    #[test]
    fn support_mod_p_matches_exact_support() {
        let p: u64 = (1u64 << 62) - 57; // prime
        for v in 1..=5 {
            for word in words_of_degree(2, 4, v) {
                let x = ShuffleElem::word(word.clone());
                let exact = to_lyndon_elem(&x).support();
                let modular = support_mod_p(&x, p).unwrap();
                assert_eq!(exact, modular, "word {word}");
            }
        }
    }

    #[test]
    fn display_parse_roundtrip() {
        let p = to_lyndon_word(&w("t2.t1.s3"));
        let back: LyndonPoly = p.to_string().parse().unwrap();
        assert_eq!(back, *p);
        let q: LyndonPoly = "1*1".parse().unwrap();
        assert_eq!(q, LyndonPoly::one());
        assert_eq!("0".parse::<LyndonPoly>().unwrap(), LyndonPoly::zero());
        // Laurent display keeps the caret exponent.
        let laurent = LyndonPoly::term(
            LyndonMono::from_factors(&[(w("t1"), -2), (w("s3"), 1)]),
            rint(5),
        );
        let back: LyndonPoly = laurent.to_string().parse().unwrap();
        assert_eq!(back, laurent);
    }

    #[test]
    fn evaluate_small() {
        let p = to_lyndon_word(&w("t2.t1"));
        let mut point = BTreeMap::new();
        point.insert(w("t1"), rint(3));
        point.insert(w("t2"), rint(5));
        point.insert(w("t1.t2"), rint(7));
        // X1 X2 - X12 = 15 - 7
        assert_eq!(p.evaluate(&point).unwrap(), rint(8));
        point.remove(&w("t1.t2"));
        assert!(matches!(
            p.evaluate(&point),
            Err(Error::MissingAssignment(_))
        ));
    }
}

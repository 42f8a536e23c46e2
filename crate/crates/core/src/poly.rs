//! Graded variables, monomials, and polynomials shared by both sides of the
//! cocycle map.
//!
//! The domain side is generated by log and the Li_n; the codomain side by one
//! variable per (generator, tangential word) pair. Both monomial bases are
//! enumerated in descending lexicographic order on exponent vectors over the
//! fixed variable lists, which makes every matrix and export deterministic.

use std::collections::BTreeMap;
use std::fmt;

use smallvec::SmallVec;

use crate::alphabet::Gen;
use crate::pbw::LyndonPoly;
use crate::shuffle::ShuffleElem;
use crate::Rat;

/// Coefficient contract for the graded polynomials. ShuffleElem multiplies by
/// shuffle, LyndonPoly by monomial arithmetic, Rat numerically.
pub trait Ring: Clone + PartialEq + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add_assign_ref(&mut self, other: &Self);
    fn sub_assign_ref(&mut self, other: &Self);
    fn mul_ref(&self, other: &Self) -> Self;
    fn scale(&mut self, c: &Rat);
}

impl Ring for Rat {
    fn zero() -> Self {
        num_traits::Zero::zero()
    }
    fn one() -> Self {
        num_traits::One::one()
    }
    fn is_zero(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }
    fn add_assign_ref(&mut self, other: &Self) {
        *self += other;
    }
    fn sub_assign_ref(&mut self, other: &Self) {
        *self -= other;
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&mut self, c: &Rat) {
        *self *= c;
    }
}

impl Ring for ShuffleElem {
    fn zero() -> Self {
        ShuffleElem::zero()
    }
    fn one() -> Self {
        ShuffleElem::one()
    }
    fn is_zero(&self) -> bool {
        ShuffleElem::is_zero(self)
    }
    fn add_assign_ref(&mut self, other: &Self) {
        self.add_assign(other);
    }
    fn sub_assign_ref(&mut self, other: &Self) {
        self.sub_assign(other);
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn scale(&mut self, c: &Rat) {
        ShuffleElem::scale(self, c);
    }
}

/// Polynomials nest: a poly over one variable kind can serve as the
/// coefficient ring of another.
impl<V: GradedVar, C: Ring> Ring for Poly<V, C> {
    fn zero() -> Self {
        Poly::zero()
    }
    fn one() -> Self {
        Poly::one()
    }
    fn is_zero(&self) -> bool {
        Poly::is_zero(self)
    }
    fn add_assign_ref(&mut self, other: &Self) {
        self.add_assign(other);
    }
    fn sub_assign_ref(&mut self, other: &Self) {
        self.sub_assign(other);
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn scale(&mut self, c: &Rat) {
        *self = self.scale_rat(c);
    }
}

impl Ring for LyndonPoly {
    fn zero() -> Self {
        LyndonPoly::zero()
    }
    fn one() -> Self {
        LyndonPoly::one()
    }
    fn is_zero(&self) -> bool {
        LyndonPoly::is_zero(self)
    }
    fn add_assign_ref(&mut self, other: &Self) {
        self.add_assign(other);
    }
    fn sub_assign_ref(&mut self, other: &Self) {
        self.sub_assign(other);
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn scale(&mut self, c: &Rat) {
        LyndonPoly::scale(self, c);
    }
}

/// A graded variable with a canonical total order.
pub trait GradedVar: Copy + Ord + Eq + fmt::Display + Send + Sync {
    fn degree(self) -> u32;
}

/// Domain-side variable: the logarithm or a polylogarithm coordinate.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum PlVar {
    Log,
    Li(u8),
}

impl GradedVar for PlVar {
    fn degree(self) -> u32 {
        match self {
            PlVar::Log => 1,
            PlVar::Li(n) => n as u32,
        }
    }
}

impl fmt::Display for PlVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlVar::Log => write!(f, "log"),
            PlVar::Li(n) => write!(f, "li{n}"),
        }
    }
}

/// The domain variable list at depth d: log, li1, ..., lid.
pub fn pl_vars(d: u32) -> Vec<PlVar> {
    let mut v = vec![PlVar::Log];
    v.extend((1..=d.min(u8::MAX as u32) as u8).map(PlVar::Li));
    v
}

/// Codomain-side variable: a generator paired with its tangential word. Tau
/// generators carry e0 or e1; each odd generator carries its single word.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum PhiVar {
    TauE0(u8),
    TauE1(u8),
    Sigma(u8),
}

impl PhiVar {
    /// Order by (generator, word) with e0 before e1.
    fn key(self) -> (u8, u8, u8) {
        match self {
            PhiVar::TauE0(i) => (0, i, 0),
            PhiVar::TauE1(i) => (0, i, 1),
            PhiVar::Sigma(k) => (1, k, 0),
        }
    }

    pub fn generator(self) -> Gen {
        match self {
            PhiVar::TauE0(i) | PhiVar::TauE1(i) => Gen::Tau(i),
            PhiVar::Sigma(k) => Gen::Sigma(k),
        }
    }
}

impl PartialOrd for PhiVar {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PhiVar {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

impl GradedVar for PhiVar {
    fn degree(self) -> u32 {
        match self {
            PhiVar::TauE0(_) | PhiVar::TauE1(_) => 1,
            PhiVar::Sigma(k) => k as u32,
        }
    }
}

impl fmt::Display for PhiVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhiVar::TauE0(i) => write!(f, "phi0_t{i}"),
            PhiVar::TauE1(i) => write!(f, "phi1_t{i}"),
            PhiVar::Sigma(k) => write!(f, "phi_s{k}"),
        }
    }
}

/// The codomain variable list for s primes at depth d.
pub fn phi_vars(s: u8, d: u32) -> Vec<PhiVar> {
    let mut v = Vec::new();
    for i in 1..=s {
        v.push(PhiVar::TauE0(i));
        v.push(PhiVar::TauE1(i));
    }
    let mut k = 3u32;
    while k <= d && k <= u8::MAX as u32 {
        v.push(PhiVar::Sigma(k as u8));
        k += 2;
    }
    v
}

/// A monomial over graded variables: sorted (var, exponent) pairs, exponents
/// positive.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Debug)]
pub struct Mono<V: GradedVar>(SmallVec<[(V, u16); 4]>);

impl<V: GradedVar> Mono<V> {
    pub fn one() -> Self {
        Mono(SmallVec::new())
    }

    pub fn var(v: V) -> Self {
        Mono::var_pow(v, 1)
    }

    pub fn var_pow(v: V, e: u16) -> Self {
        let mut m = SmallVec::new();
        if e > 0 {
            m.push((v, e));
        }
        Mono(m)
    }

    pub fn from_pairs(pairs: &[(V, u16)]) -> Self {
        let mut v: Vec<(V, u16)> = pairs.iter().copied().filter(|(_, e)| *e > 0).collect();
        v.sort_by_key(|(var, _)| *var);
        let mut out: SmallVec<[(V, u16); 4]> = SmallVec::new();
        for (var, e) in v {
            match out.last_mut() {
                Some((lv, le)) if *lv == var => *le += e,
                _ => out.push((var, e)),
            }
        }
        Mono(out)
    }

    pub fn pairs(&self) -> &[(V, u16)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponent_of(&self, v: V) -> u16 {
        self.0
            .iter()
            .find(|(var, _)| *var == v)
            .map_or(0, |(_, e)| *e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(v, e)| v.degree() * *e as u32).sum()
    }

    pub fn total_exponent(&self) -> u32 {
        self.0.iter().map(|(_, e)| *e as u32).sum()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut all: Vec<(V, u16)> = self.0.iter().chain(other.0.iter()).copied().collect();
        all.sort_by_key(|(v, _)| *v);
        let mut out: SmallVec<[(V, u16); 4]> = SmallVec::new();
        for (v, e) in all {
            match out.last_mut() {
                Some((lv, le)) if *lv == v => *le += e,
                _ => out.push((v, e)),
            }
        }
        Mono(out)
    }

    /// Divide by `other` if every exponent allows it.
    pub fn checked_div(&self, other: &Self) -> Option<Self> {
        let mut out: SmallVec<[(V, u16); 4]> = SmallVec::new();
        let mut rhs = other.0.iter().peekable();
        for (v, e) in &self.0 {
            let mut e = *e;
            if let Some((rv, re)) = rhs.peek() {
                if rv == v {
                    if *re > e {
                        return None;
                    }
                    e -= re;
                    rhs.next();
                }
            }
            if e > 0 {
                out.push((*v, e));
            }
        }
        if rhs.next().is_some() {
            return None;
        }
        Some(Mono(out))
    }

    /// Evaluate at a total assignment of the variables.
    pub fn evaluate(&self, values: &BTreeMap<V, Rat>) -> Option<Rat> {
        let mut acc: Rat = num_traits::One::one();
        for (v, e) in &self.0 {
            let x = values.get(v)?;
            for _ in 0..*e {
                acc *= x;
            }
        }
        Some(acc)
    }
}

impl<V: GradedVar> fmt::Display for Mono<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (i, (v, e)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            write!(f, "{v}")?;
            if *e != 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

pub type PlMono = Mono<PlVar>;
pub type PhiMono = Mono<PhiVar>;

/// All monomials of degree exactly v over the listed variables, in descending
/// lexicographic order on exponent vectors (earlier variables weigh more).
pub fn monos_of_degree<V: GradedVar>(vars: &[V], v: u32) -> Vec<Mono<V>> {
    let mut out = Vec::new();
    let mut cur: Vec<(V, u16)> = Vec::new();
    fn rec<V: GradedVar>(vars: &[V], v: u32, cur: &mut Vec<(V, u16)>, out: &mut Vec<Mono<V>>) {
        match vars {
            [] => {
                if v == 0 {
                    out.push(Mono::from_pairs(cur));
                }
            }
            [first, rest @ ..] => {
                let max_e = v / first.degree();
                for e in (0..=max_e).rev() {
                    if e > 0 {
                        cur.push((*first, e as u16));
                    }
                    rec(rest, v - e * first.degree(), cur, out);
                    if e > 0 {
                        cur.pop();
                    }
                }
            }
        }
    }
    rec(vars, v, &mut cur, &mut out);
    out
}

/// A polynomial with monomial keys and coefficients in an arbitrary ring.
#[derive(Clone, PartialEq, Eq)]
pub struct Poly<V: GradedVar, C: Ring> {
    terms: BTreeMap<Mono<V>, C>,
}

impl<V: GradedVar, C: Ring> Default for Poly<V, C> {
    fn default() -> Self {
        Poly {
            terms: BTreeMap::new(),
        }
    }
}

impl<V: GradedVar, C: Ring> Poly<V, C> {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::term(Mono::one(), C::one())
    }

    pub fn constant(c: C) -> Self {
        Poly::term(Mono::one(), c)
    }

    pub fn var(v: V) -> Self {
        Poly::term(Mono::var(v), C::one())
    }

    pub fn term(m: Mono<V>, c: C) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono<V>, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Mono<V>) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    pub fn add_term(&mut self, m: Mono<V>, c: C) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                e.get_mut().add_assign_ref(&c);
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn sub_assign(&mut self, other: &Self) {
        for (m, c) in &other.terms {
            let mut neg = C::zero();
            neg.sub_assign_ref(c);
            self.add_term(m.clone(), neg);
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1.mul_ref(c2));
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Poly::one();
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Multiply every coefficient by a fixed ring element.
    pub fn scale_by(&self, c: &C) -> Self {
        let mut out = Poly::zero();
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v.mul_ref(c));
        }
        out
    }

    /// Multiply every coefficient by a rational.
    pub fn scale_rat(&self, c: &Rat) -> Self {
        let mut out = self.clone();
        let mut dead = Vec::new();
        for (m, v) in out.terms.iter_mut() {
            v.scale(c);
            if v.is_zero() {
                dead.push(m.clone());
            }
        }
        for m in dead {
            out.terms.remove(&m);
        }
        out
    }

    /// Multiply by a bare monomial.
    pub fn mul_mono(&self, m: &Mono<V>) -> Self {
        let mut out = Poly::zero();
        for (m1, c) in &self.terms {
            out.add_term(m1.mul(m), c.clone());
        }
        out
    }

    pub fn map_coeffs<D: Ring>(&self, mut f: impl FnMut(&C) -> D) -> Poly<V, D> {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(c));
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = Poly::zero();
        out.sub_assign(self);
        out
    }

    /// Whether every term (monomial degree only) has degree v.
    pub fn is_homogeneous_of_degree(&self, v: u32) -> bool {
        self.terms.keys().all(|m| m.degree() == v)
    }

    /// Max variable degree present, 0 for constants and zero.
    pub fn max_mono_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }
}

pub type PlPoly<C> = Poly<PlVar, C>;
pub type PhiPoly<C> = Poly<PhiVar, C>;

impl<V: GradedVar, C: Ring + fmt::Display> fmt::Display for Poly<V, C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})*{m}")?;
        }
        Ok(())
    }
}

impl<V: GradedVar, C: Ring + fmt::Display> fmt::Debug for Poly<V, C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{rat, rint};

    #[test]
    fn variable_orders() {
        assert!(PlVar::Log < PlVar::Li(1));
        assert!(PlVar::Li(1) < PlVar::Li(2));
        assert!(PhiVar::TauE0(1) < PhiVar::TauE1(1));
        assert!(PhiVar::TauE1(1) < PhiVar::TauE0(2));
        assert!(PhiVar::TauE1(2) < PhiVar::Sigma(3));
        assert!(PhiVar::Sigma(3) < PhiVar::Sigma(5));
        assert_eq!(
            phi_vars(2, 6),
            vec![
                PhiVar::TauE0(1),
                PhiVar::TauE1(1),
                PhiVar::TauE0(2),
                PhiVar::TauE1(2),
                PhiVar::Sigma(3),
                PhiVar::Sigma(5)
            ]
        );
        assert_eq!(
            pl_vars(3),
            vec![PlVar::Log, PlVar::Li(1), PlVar::Li(2), PlVar::Li(3)]
        );
    }

    #[test]
    fn display_forms() {
        let m = PlMono::from_pairs(&[(PlVar::Li(3), 1), (PlVar::Log, 2)]);
        assert_eq!(m.to_string(), "log^2*li3");
        assert_eq!(PlMono::one().to_string(), "1");
        let m = PhiMono::from_pairs(&[(PhiVar::Sigma(3), 1), (PhiVar::TauE0(1), 2)]);
        assert_eq!(m.to_string(), "phi0_t1^2*phi_s3");
    }

    #[test]
    fn enumeration_is_descending_lex_and_complete() {
        // d = 2, v = 2 on the domain side: the expected basis order.
        let cols = monos_of_degree(&pl_vars(2), 2);
        let names: Vec<String> = cols.iter().map(|m| m.to_string()).collect();
        assert_eq!(names, vec!["log^2", "log*li1", "li1^2", "li2"]);
        // s = 1, v = 2 codomain.
        let rows = monos_of_degree(&phi_vars(1, 2), 2);
        let names: Vec<String> = rows.iter().map(|m| m.to_string()).collect();
        assert_eq!(names, vec!["phi0_t1^2", "phi0_t1*phi1_t1", "phi1_t1^2"]);
    }

    #[test]
    fn enumeration_matches_dimension_counts() {
        for (s, d, v) in [(1u8, 2u32, 2u32), (2, 6, 10), (2, 6, 14), (1, 4, 8)] {
            let rows = monos_of_degree(&phi_vars(s, d), v);
            let cols = monos_of_degree(&pl_vars(d), v);
            assert_eq!(
                num_bigint::BigUint::from(rows.len()),
                crate::dims::dim_phi(s, d, v),
                "phi ({s},{d},{v})"
            );
            assert_eq!(
                num_bigint::BigUint::from(cols.len()),
                crate::dims::dim_pl(d, v),
                "pl ({d},{v})"
            );
        }
    }

    #[test]
    fn mono_arithmetic() {
        let a = PlMono::var_pow(PlVar::Log, 2);
        let b = PlMono::var(PlVar::Li(1));
        let ab = a.mul(&b);
        assert_eq!(ab.degree(), 3);
        assert_eq!(ab.checked_div(&b), Some(a.clone()));
        assert_eq!(b.checked_div(&a), None);
        let mut values = BTreeMap::new();
        values.insert(PlVar::Log, rint(3));
        values.insert(PlVar::Li(1), rat(1, 2));
        assert_eq!(ab.evaluate(&values).unwrap(), rat(9, 2));
    }

    #[test]
    fn poly_ring_ops() {
        let x: PlPoly<Rat> = Poly::var(PlVar::Log);
        let y: PlPoly<Rat> = Poly::var(PlVar::Li(1));
        let mut s = x.clone();
        s.add_assign(&y);
        let sq = s.mul(&s);
        // (log + li1)^2 = log^2 + 2 log li1 + li1^2
        assert_eq!(sq.num_terms(), 3);
        assert_eq!(
            sq.coeff(&PlMono::from_pairs(&[(PlVar::Log, 1), (PlVar::Li(1), 1)])),
            rint(2)
        );
        let z = sq.scale_rat(&rat(1, 2));
        assert_eq!(z.coeff(&PlMono::var_pow(PlVar::Log, 2)), rat(1, 2));
        let mut w = sq.clone();
        w.sub_assign(&sq);
        assert!(w.is_zero());
        assert!(sq.is_homogeneous_of_degree(2));
    }

    #[test]
    fn shuffle_coefficient_poly() {
        use crate::shuffle::ShuffleElem;
        let ft: ShuffleElem = "1*t1".parse().unwrap();
        let p: PhiPoly<ShuffleElem> =
            Poly::term(PhiMono::var(PhiVar::TauE0(1)), ft.clone());
        let sq = p.mul(&p);
        // Coefficient multiplies by shuffle: f_t1 sh f_t1 = 2 f_{t1.t1}.
        let c = sq.coeff(&PhiMono::var_pow(PhiVar::TauE0(1), 2));
        assert_eq!(c.to_string(), "2*t1.t1");
    }
}

//! Flat-keyed polynomials for the determinant stage.
//!
//! The resultant of the two eliminants has far more terms than fit in the
//! nested tree maps, and more than fit in memory at all on a small machine.
//! Two layers deal with that. A fixed-width exponent key packs log, li1..li6
//! and every Lyndon word of degree at most 6 into one hashable array, with
//! coefficients held as machine integers under a uniform denominator scale.
//! On top of that, the determinant-then-divide pass never materializes the
//! determinant: it sweeps one PL fiber at a time. A fiber fixes the li3..li6
//! exponents and the difference deg(log) - deg(li1); division by the depth-2
//! element li2 - 1/2 log li1 sends every monomial to monomials in the same
//! fiber, so each fiber's quotient streams out while only two li2 layers are
//! resident.

use std::collections::{BTreeMap, HashMap};
use std::hash::{BuildHasherDefault, Hasher};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::alphabet::{lyndon_words_upto, Word};
use crate::pbw::{LyndonMono, LyndonPoly};
use crate::poly::{PlMono, PlPoly, PlVar};
use crate::theta::NumericFrame;
use crate::{Error, Rat, Result};

type Dom = PlPoly<LyndonPoly>;

pub const KEY_LEN: usize = 56;
const PL_SLOTS: usize = 8;

/// Multiplicative byte-folding hasher. The default SipHash spends most of
/// the determinant's time hashing 56-byte keys; exponent bytes need no
/// DoS resistance.
#[derive(Default)]
pub struct KeyHasher(u64);

impl Hasher for KeyHasher {
    fn write(&mut self, bytes: &[u8]) {
        let mut h = self.0 ^ 0xcbf2_9ce4_8422_2325;
        let mut chunks = bytes.chunks_exact(8);
        for c in &mut chunks {
            h = (h ^ u64::from_le_bytes(c.try_into().unwrap()))
                .wrapping_mul(0x100_0000_01b3);
        }
        for &b in chunks.remainder() {
            h = (h ^ u64::from(b)).wrapping_mul(0x100_0000_01b3);
        }
        self.0 = h;
    }

    fn finish(&self) -> u64 {
        let mut h = self.0;
        h ^= h >> 33;
        h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
        h ^= h >> 33;
        h
    }
}

type KeyBuild = BuildHasherDefault<KeyHasher>;

/// Integer-coefficient polynomial under an external denominator scale.
pub(crate) type IMap = HashMap<Key, i128, KeyBuild>;

/// The variable enumeration behind the packed keys: slot 0 is log, slots
/// 1..=6 are li1..li6, and the remaining slots are the Lyndon words for
/// two primes in degree at most 6, in (degree, lex) order.
pub struct VarIndex {
    words: Vec<Word>,
    pos: HashMap<Word, usize>,
    /// Graded degree per key slot, PL slots first.
    degree: [u8; KEY_LEN],
}

impl VarIndex {
    pub fn new() -> VarIndex {
        let words = lyndon_words_upto(2, 6, 6);
        assert!(PL_SLOTS + words.len() <= KEY_LEN);
        let pos = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        let mut degree = [0u8; KEY_LEN];
        for (i, d) in degree.iter_mut().enumerate().take(7) {
            *d = i.max(1) as u8;
        }
        for (i, w) in words.iter().enumerate() {
            degree[PL_SLOTS + i] = w.degree() as u8;
        }
        VarIndex { words, pos, degree }
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    fn pl_slot(v: PlVar) -> Result<usize> {
        match v {
            PlVar::Log => Ok(0),
            PlVar::Li(n) if (1..=6).contains(&n) => Ok(n as usize),
            PlVar::Li(n) => Err(Error::Shape(format!("li{n} outside the packed range"))),
        }
    }
}

impl Default for VarIndex {
    fn default() -> Self {
        VarIndex::new()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Key([u8; KEY_LEN]);

impl std::hash::Hash for Key {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write(&self.0);
    }
}

impl Key {
    pub const ONE: Key = Key([0; KEY_LEN]);

    pub(crate) fn combine(&self, other: &Key) -> Key {
        let mut out = [0u8; KEY_LEN];
        for i in 0..KEY_LEN {
            // Exponents stay far below 255: graded degrees through this
            // pipeline are bounded by 76.
            debug_assert!(self.0[i].checked_add(other.0[i]).is_some());
            out[i] = self.0[i].wrapping_add(other.0[i]);
        }
        Key(out)
    }

    pub(crate) fn bytes(&self) -> &[u8; KEY_LEN] {
        &self.0
    }

    pub(crate) fn from_bytes(b: [u8; KEY_LEN]) -> Key {
        Key(b)
    }

    /// Exponent of li6.
    pub(crate) fn li6(&self) -> u8 {
        self.0[6]
    }
}

/// Polynomial over the packed variables, term-hashed, rational
/// coefficients. The in-memory form; the determinant stage works in
/// integer maps instead.
#[derive(Clone, Default, PartialEq)]
pub struct FlatPoly {
    terms: HashMap<Key, Rat, KeyBuild>,
}

impl std::fmt::Debug for FlatPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FlatPoly({} terms)", self.terms.len())
    }
}

fn add_entry(map: &mut HashMap<Key, Rat, KeyBuild>, k: Key, v: Rat) {
    use std::collections::hash_map::Entry;
    if v.is_zero() {
        return;
    }
    match map.entry(k) {
        Entry::Occupied(mut e) => {
            *e.get_mut() += v;
            if e.get().is_zero() {
                e.remove();
            }
        }
        Entry::Vacant(e) => {
            e.insert(v);
        }
    }
}

impl FlatPoly {
    pub fn zero() -> FlatPoly {
        FlatPoly::default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub(crate) fn insert_raw(&mut self, k: Key, v: Rat) {
        add_entry(&mut self.terms, k, v);
    }

    pub fn from_dom(ix: &VarIndex, p: &Dom) -> Result<FlatPoly> {
        let mut out = FlatPoly::zero();
        for (m, l) in p.terms() {
            let pl = pack_pl(m)?;
            for (lm, c) in l.terms() {
                let mut key = pl;
                for (w, e) in lm.factors() {
                    let slot = PL_SLOTS + word_slot(ix, w)?;
                    if *e < 0 {
                        return Err(Error::Shape("negative exponent".into()));
                    }
                    key[slot] = *e as u8;
                }
                add_entry(&mut out.terms, Key(key), c.clone());
            }
        }
        Ok(out)
    }

    pub fn decode_key(ix: &VarIndex, key: &Key) -> (PlMono, LyndonMono) {
        let mut pl = Vec::new();
        if key.0[0] > 0 {
            pl.push((PlVar::Log, key.0[0] as u16));
        }
        for n in 1..=6u8 {
            if key.0[n as usize] > 0 {
                pl.push((PlVar::Li(n), key.0[n as usize] as u16));
            }
        }
        let mut factors = Vec::new();
        for (i, w) in ix.words.iter().enumerate() {
            let e = key.0[PL_SLOTS + i];
            if e > 0 {
                factors.push((w.clone(), e as i32));
            }
        }
        (PlMono::from_pairs(&pl), LyndonMono::from_factors(&factors))
    }

    /// Terms decoded against the index, in arbitrary order.
    pub fn iter_decoded<'a>(
        &'a self,
        ix: &'a VarIndex,
    ) -> impl Iterator<Item = (PlMono, LyndonMono, &'a Rat)> + 'a {
        self.terms.iter().map(move |(k, c)| {
            let (m, l) = FlatPoly::decode_key(ix, k);
            (m, l, c)
        })
    }

    /// Denominator lcm across every coefficient.
    fn denominator_lcm(&self) -> BigInt {
        let mut l = BigInt::from(1);
        for c in self.terms.values() {
            l = l.lcm(c.denom());
        }
        l
    }

    /// Coefficients times `scale`, which must clear every denominator and
    /// land within the machine-integer pipeline.
    fn lift_int(&self, scale: &BigInt) -> Result<IMap> {
        let mut out = IMap::with_capacity_and_hasher(self.terms.len(), KeyBuild::default());
        for (k, c) in &self.terms {
            out.insert(*k, scale_coeff(c, scale)?);
        }
        Ok(out)
    }

    /// Both graded degrees at once: (pl, lyndon) per term, or None if
    /// either is mixed.
    pub fn bidegree(&self, ix: &VarIndex) -> Option<(u32, u32)> {
        let mut t = BidegreeTracker::new();
        for k in self.terms.keys() {
            t.see(ix, k);
        }
        t.uniform()
    }

    /// The terms whose li6 exponent is exactly `e`, with li6 removed.
    pub fn li6_layer(&self, e: u8) -> FlatPoly {
        let mut out = FlatPoly::zero();
        for (k, c) in &self.terms {
            if k.0[6] == e {
                let mut nk = *k;
                nk.0[6] = 0;
                add_entry(&mut out.terms, nk, c.clone());
            }
        }
        out
    }

    /// Value under a frame that fixes every pl variable and Lyndon word.
    pub fn eval_frame(&self, ix: &VarIndex, frame: &NumericFrame) -> Result<Rat> {
        let vals = frame_values(ix, frame)?;
        let mut total = Rat::zero();
        for (k, c) in &self.terms {
            let mut v = c.clone();
            for i in 0..KEY_LEN {
                for _ in 0..k.0[i] {
                    v *= &vals[i];
                }
            }
            total += v;
        }
        Ok(total)
    }

    /// Value of the Lyndon part at an integer point, summed per pl
    /// monomial.
    pub fn eval_lyndon_at(
        &self,
        ix: &VarIndex,
        word_vals: &BTreeMap<Word, Rat>,
    ) -> Result<BTreeMap<PlMono, Rat>> {
        let mut vals: Vec<Rat> = Vec::with_capacity(ix.words.len());
        for w in &ix.words {
            vals.push(
                word_vals
                    .get(w)
                    .cloned()
                    .ok_or_else(|| Error::MissingAssignment(w.to_string()))?,
            );
        }
        let mut out = BTreeMap::new();
        for (k, c) in &self.terms {
            let mut v = c.clone();
            for i in PL_SLOTS..KEY_LEN {
                for _ in 0..k.0[i] {
                    v *= &vals[i - PL_SLOTS];
                }
            }
            let (m, _) = {
                let mut nk = *k;
                for b in nk.0.iter_mut().skip(PL_SLOTS) {
                    *b = 0;
                }
                FlatPoly::decode_key(ix, &nk)
            };
            *out.entry(m).or_insert_with(Rat::zero) += v;
        }
        Ok(out)
    }

    /// Exact division by the depth-2 element, monic in li2 with tail
    /// 1/2 log li1.
    pub fn div_f22(&self) -> Result<FlatPoly> {
        let l = self.denominator_lcm();
        let p = self.lift_int(&l)?;
        let top = p.keys().map(|k| k.0[2] as usize).max().unwrap_or(0);
        if top == 0 {
            return Err(Error::Factorization("no li2 part to divide by".into()));
        }
        let mut layers: Vec<IMap> = (0..=top).map(|_| IMap::default()).collect();
        for (k, c) in p {
            let e = k.0[2] as usize;
            let mut nk = k;
            nk.0[2] = 0;
            iadd_entry(&mut layers[e], nk, c);
        }
        let mut out = FlatPoly::zero();
        let rem = divide_fiber(
            top,
            &mut |j| Ok(std::mem::take(&mut layers[j])),
            &mut |c, pow, key, v| {
                let mut nk = key;
                nk.0[2] = c;
                let d = &l * (BigInt::from(1) << pow);
                add_entry(&mut out.terms, nk, Rat::new(BigInt::from(v), d));
                Ok(())
            },
        )?;
        if !rem {
            return Err(Error::Factorization(
                "nonzero remainder dividing by the depth-2 element".into(),
            ));
        }
        Ok(out)
    }
}

fn pack_pl(m: &PlMono) -> Result<[u8; KEY_LEN]> {
    let mut pl = [0u8; KEY_LEN];
    for (v, e) in m.pairs() {
        pl[VarIndex::pl_slot(*v)?] = *e as u8;
    }
    Ok(pl)
}

fn scale_coeff(c: &Rat, scale: &BigInt) -> Result<i128> {
    let v = c * Rat::from(scale.clone());
    if !v.is_integer() {
        return Err(Error::Shape("scale does not clear a denominator".into()));
    }
    v.to_integer()
        .to_i128()
        .ok_or_else(|| Error::Shape("coefficient exceeds the integer pipeline".into()))
}

fn frame_values(ix: &VarIndex, frame: &NumericFrame) -> Result<Vec<Rat>> {
    let mut vals: Vec<Rat> = Vec::with_capacity(KEY_LEN);
    vals.push(
        frame
            .pl_values
            .get(&PlVar::Log)
            .cloned()
            .ok_or_else(|| Error::MissingAssignment("log".into()))?,
    );
    for n in 1..=6u8 {
        vals.push(
            frame
                .pl_values
                .get(&PlVar::Li(n))
                .cloned()
                .ok_or_else(|| Error::MissingAssignment(format!("li{n}")))?,
        );
    }
    vals.push(Rat::zero());
    for w in &ix.words {
        vals.push(
            frame
                .lyndon_values
                .get(w)
                .cloned()
                .ok_or_else(|| Error::MissingAssignment(w.to_string()))?,
        );
    }
    Ok(vals)
}

/// Uniform-bidegree fold over keys.
pub(crate) struct BidegreeTracker {
    seen: Option<(u32, u32)>,
    mixed: bool,
}

impl BidegreeTracker {
    pub fn new() -> Self {
        BidegreeTracker { seen: None, mixed: false }
    }

    pub fn see(&mut self, ix: &VarIndex, k: &Key) {
        let mut pl = 0u32;
        let mut ly = 0u32;
        for i in 0..KEY_LEN {
            let d = ix.degree[i] as u32 * k.0[i] as u32;
            if i < PL_SLOTS {
                pl += d;
            } else {
                ly += d;
            }
        }
        match self.seen {
            None => self.seen = Some((pl, ly)),
            Some(s) if s != (pl, ly) => self.mixed = true,
            _ => {}
        }
    }

    pub fn uniform(&self) -> Option<(u32, u32)> {
        if self.mixed {
            None
        } else {
            self.seen
        }
    }
}

fn iadd_entry(map: &mut IMap, k: Key, v: i128) {
    use std::collections::hash_map::Entry;
    if v == 0 {
        return;
    }
    match map.entry(k) {
        Entry::Occupied(mut e) => {
            let s = e.get().checked_add(v).expect("determinant coefficient overflow");
            if s == 0 {
                e.remove();
            } else {
                *e.get_mut() = s;
            }
        }
        Entry::Vacant(e) => {
            e.insert(v);
        }
    }
}

/// Product against a small factor, the big side chunked across the
/// thread pool.
fn imul_small(big: IMap, small: &IMap) -> IMap {
    if big.is_empty() || small.is_empty() {
        return IMap::default();
    }
    let big: Vec<(Key, i128)> = big.into_iter().collect();
    let rhs: Vec<(&Key, &i128)> = small.iter().collect();
    let chunk = big.len().div_ceil(16).max(1024);
    let pieces: Vec<&[(Key, i128)]> = big.chunks(chunk).collect();
    let maps = crate::par::map_vec(pieces, |piece| {
        let mut local = IMap::with_capacity_and_hasher(piece.len() * 2, KeyBuild::default());
        for (k1, c1) in piece {
            for (k2, c2) in &rhs {
                let c = c1.checked_mul(**c2).expect("determinant coefficient overflow");
                iadd_entry(&mut local, k1.combine(k2), c);
            }
        }
        local
    });
    let mut out = IMap::default();
    for m in maps {
        if out.is_empty() {
            out = m;
        } else {
            for (k, c) in m {
                iadd_entry(&mut out, k, c);
            }
        }
    }
    out
}

/// Chained product of the referenced maps, smallest first, each reference
/// repeated per its power.
fn chain_product(factors: &mut Vec<&IMap>) -> IMap {
    factors.sort_by_key(|p| p.len());
    let mut prod = factors[0].clone();
    for f in &factors[1..] {
        prod = imul_small(prod, f);
    }
    prod
}

/// Streaming synthetic division of one fiber by li2 - 1/2 log li1. Layers
/// arrive on demand by li2 exponent, highest first, each with the li2 slot
/// cleared; at most the running numerator and one incoming layer are
/// resident. Quotient layer c is emitted as integers scaled by 2^pow,
/// pow = top - 1 - c with top the highest nonzero layer. Returns false if
/// the remainder does not vanish.
///
/// Derivation: with p = sum p_c li2^c and q = p / (li2 - h), h = 1/2 log li1,
/// matching coefficients gives q_{top-1} = p_top and q_{j-1} = p_j + h q_j
/// downward, with p_0 + h q_0 = 0 forced. Scaling layer j by 2^(top-j)
/// clears every half: the running value R_j = q_j 2^(top-1-j) obeys
/// R_{j-1} = 2^(top-j) p_j + (log li1) R_j.
fn divide_fiber(
    top_enum: usize,
    layer_at: &mut dyn FnMut(usize) -> Result<IMap>,
    emit: &mut dyn FnMut(u8, u32, Key, i128) -> Result<()>,
) -> Result<bool> {
    let scaled = |m: IMap, pow: usize| -> IMap {
        m.into_iter()
            .map(|(k, c)| {
                let s = c
                    .checked_mul(1i128 << pow)
                    .expect("quotient coefficient overflow");
                (k, s)
            })
            .collect()
    };
    let mut r: Option<IMap> = None;
    let mut top = 0usize;
    for j in (0..=top_enum).rev() {
        let p = layer_at(j)?;
        match r.take() {
            None => {
                if p.is_empty() {
                    continue;
                }
                if j == 0 {
                    // A pure constant layer cannot be a multiple.
                    return Ok(false);
                }
                top = j;
                r = Some(p);
            }
            Some(cur) => {
                // cur holds R_j: emit it as quotient layer j, then fold it
                // with p_j into R_{j-1}.
                let c = j as u8;
                let pow = (top - 1 - j) as u32;
                let mut next = scaled(p, top - j);
                for (k, v) in cur {
                    emit(c, pow, k, v)?;
                    let mut nk = k;
                    nk.0[0] += 1;
                    nk.0[1] += 1;
                    iadd_entry(&mut next, nk, v);
                }
                if j == 0 {
                    // next is 2^top p_0 + (log li1) R_0, the remainder.
                    return Ok(next.is_empty());
                }
                r = Some(next);
            }
        }
    }
    Ok(r.is_none())
}

/// Every permutation picks one entry per column: deg g entries from the
/// f block and deg f from the g block. Scaling each side's coefficients
/// by that side's common denominator therefore scales the whole
/// determinant by a single known factor.
fn int_sides(fv: &[FlatPoly], gv: &[FlatPoly]) -> Result<(Vec<IMap>, Vec<IMap>, BigInt)> {
    let mut df = BigInt::from(1);
    for p in fv {
        df = df.lcm(&p.denominator_lcm());
    }
    let mut dg = BigInt::from(1);
    for p in gv {
        dg = dg.lcm(&p.denominator_lcm());
    }
    let fi = fv.iter().map(|p| p.lift_int(&df)).collect::<Result<_>>()?;
    let gi = gv.iter().map(|p| p.lift_int(&dg)).collect::<Result<_>>()?;
    let scale = df.pow(gv.len() as u32 - 1) * dg.pow(fv.len() as u32 - 1);
    Ok((fi, gi, scale))
}

fn from_int(p: IMap, denom: &BigInt) -> FlatPoly {
    let mut out = FlatPoly::zero();
    for (k, c) in p {
        add_entry(&mut out.terms, k, Rat::new(BigInt::from(c), denom.clone()));
    }
    out
}

/// Permutations of the resultant matrix grouped by entry multiset with
/// their signs netted, zero nets dropped. Entry counts are per
/// coefficient index, f side then g side.
fn perm_groups(nf: usize, ng: usize) -> Vec<(Vec<u8>, Vec<u8>, i64)> {
    let (n, m) = (nf - 1, ng - 1);
    let size = n + m;
    // entry(r, c): Some(side, coefficient index) when structurally nonzero.
    let entry = move |r: usize, c: usize| -> Option<(usize, usize)> {
        if c < m {
            let t = r.checked_sub(c)?;
            (t <= n).then(|| (0, n - t))
        } else {
            let t = r.checked_sub(c - m)?;
            (t <= m).then(|| (1, m - t))
        }
    };
    let mut groups: BTreeMap<(Vec<u8>, Vec<u8>), i64> = BTreeMap::new();
    let mut rows = vec![usize::MAX; size];
    #[allow(clippy::too_many_arguments)]
    fn assign(
        col: usize,
        size: usize,
        used: u64,
        sign: i64,
        rows: &mut Vec<usize>,
        entry: &dyn Fn(usize, usize) -> Option<(usize, usize)>,
        groups: &mut BTreeMap<(Vec<u8>, Vec<u8>), i64>,
        nf: usize,
        ng: usize,
    ) {
        if col == size {
            let mut fc = vec![0u8; nf];
            let mut gc = vec![0u8; ng];
            for (c, &r) in rows.iter().enumerate() {
                let (side, idx) = entry(r, c).expect("chosen entries exist");
                if side == 0 {
                    fc[idx] += 1;
                } else {
                    gc[idx] += 1;
                }
            }
            *groups.entry((fc, gc)).or_insert(0) += sign;
            return;
        }
        for r in 0..size {
            if used >> r & 1 == 1 || entry(r, col).is_none() {
                continue;
            }
            let inversions = rows[..col].iter().filter(|&&p| p > r).count();
            let s = if inversions % 2 == 1 { -sign } else { sign };
            rows[col] = r;
            assign(col + 1, size, used | 1u64 << r, s, rows, entry, groups, nf, ng);
        }
        rows[col] = usize::MAX;
    }
    assign(0, size, 0, 1, &mut rows, &entry, &mut groups, nf, ng);
    groups
        .into_iter()
        .filter(|(_, net)| *net != 0)
        .map(|((fc, gc), net)| (fc, gc, net))
        .collect()
}

/// In-memory determinant over integer maps; the groups' products are
/// expanded one at a time.
fn det_flat_int(fv: &[IMap], gv: &[IMap]) -> Result<IMap> {
    let n = fv.len().saturating_sub(1);
    let m = gv.len().saturating_sub(1);
    if n == 0 || m == 0 || fv[n].is_empty() || gv[m].is_empty() {
        return Err(Error::DegreeDrop);
    }
    let mut acc = IMap::default();
    for (fc, gc, net) in perm_groups(fv.len(), gv.len()) {
        let mut factors: Vec<&IMap> = Vec::new();
        for (i, &c) in fc.iter().enumerate() {
            for _ in 0..c {
                factors.push(&fv[i]);
            }
        }
        for (j, &c) in gc.iter().enumerate() {
            for _ in 0..c {
                factors.push(&gv[j]);
            }
        }
        let prod = chain_product(&mut factors);
        let w = net as i128;
        for (k, c) in prod {
            let v = c.checked_mul(w).expect("determinant coefficient overflow");
            iadd_entry(&mut acc, k, v);
        }
    }
    Ok(acc)
}

/// Determinant of the resultant matrix of f (ascending, the short side)
/// and g (ascending), both with every coefficient already packed. Held
/// fully in memory; suitable for small inputs and as the reference for
/// the fiber sweep.
pub fn det_flat(fv: &[FlatPoly], gv: &[FlatPoly]) -> Result<FlatPoly> {
    let (fi, gi, scale) = int_sides(fv, gv)?;
    Ok(from_int(det_flat_int(&fi, &gi)?, &scale))
}

/// One PL-layer of one matrix entry: the entry's Lyndon coefficient at a
/// single PL monomial, packed word-only, with the PL part kept aside.
struct Layer {
    pl: [u8; KEY_LEN],
    words: IMap,
}

/// A netted set of permutation terms sharing one layer multiset. The
/// factor list references the flattened layer table; pl is the combined
/// PL part of the product.
struct Splitting {
    weight: i64,
    factors: Vec<(u32, u8)>,
    pl: [u8; KEY_LEN],
}

/// Fiber address: li3..li6 exponents plus deg(log) - deg(li1). Division
/// by the depth-2 element never leaves a fiber.
type FiberKey = ([u8; 4], i16);

fn fiber_of(pl: &[u8; KEY_LEN]) -> FiberKey {
    (
        [pl[3], pl[4], pl[5], pl[6]],
        pl[0] as i16 - pl[1] as i16,
    )
}

/// Everything the sweep needs, with the expensive products still pending:
/// entry layers in scaled integers and the netted splittings grouped by
/// fiber and li2 exponent.
pub struct Sweep {
    layers: Vec<Layer>,
    fibers: BTreeMap<FiberKey, BTreeMap<u8, Vec<Splitting>>>,
    /// Denominator cleared by the integer scaling, before the division's
    /// power of two.
    pub denom: BigInt,
    /// Highest power of two any fiber's division can introduce.
    pub max_pow: u32,
}

/// Accumulated shape facts from a completed sweep.
pub struct SweepStats {
    pub det_terms: u64,
    pub det_bidegree: Option<(u32, u32)>,
    pub quotient_terms: u64,
    pub quotient_bidegree: Option<(u32, u32)>,
}

/// Multisets of `size` draws from `k` layer indices, with multinomial
/// weights size! / prod(counts!).
fn layer_multisets(k: usize, size: u8) -> Vec<(Vec<(usize, u8)>, i64)> {
    fn fact(n: u8) -> i64 {
        (1..=n as i64).product::<i64>().max(1)
    }
    let mut out = Vec::new();
    let mut counts = vec![0u8; k];
    fn rec(
        i: usize,
        left: u8,
        counts: &mut Vec<u8>,
        total: u8,
        out: &mut Vec<(Vec<(usize, u8)>, i64)>,
        fact: &dyn Fn(u8) -> i64,
    ) {
        if i + 1 == counts.len() {
            counts[i] = left;
            let picked: Vec<(usize, u8)> = counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(j, &c)| (j, c))
                .collect();
            let mut w = fact(total);
            for (_, c) in &picked {
                w /= fact(*c);
            }
            out.push((picked, w));
            return;
        }
        for c in 0..=left {
            counts[i] = c;
            rec(i + 1, left - c, counts, total, out, fact);
        }
        counts[i] = 0;
    }
    rec(0, size, &mut counts, size, &mut out, &fact);
    out
}

/// Decompose both coefficient lists into PL layers, scale to integers,
/// and enumerate every permutation splitting netted by layer multiset.
pub fn prepare_sweep(ix: &VarIndex, fv: &[Dom], gv: &[Dom]) -> Result<Sweep> {
    let n = fv.len().saturating_sub(1);
    let m = gv.len().saturating_sub(1);
    if n == 0 || m == 0 || fv[n].is_zero() || gv[m].is_zero() {
        return Err(Error::DegreeDrop);
    }
    let side_lcm = |side: &[Dom]| {
        let mut l = BigInt::from(1);
        for p in side {
            for (_, lp) in p.terms() {
                for (_, c) in lp.terms() {
                    l = l.lcm(c.denom());
                }
            }
        }
        l
    };
    let df = side_lcm(fv);
    let dg = side_lcm(gv);
    let mut layers: Vec<Layer> = Vec::new();
    // Per entry, the indices of its layers in the flat table.
    let mut entry_layers: Vec<Vec<Vec<usize>>> = vec![Vec::new(), Vec::new()];
    for (side, (list, scale)) in [(fv, &df), (gv, &dg)].into_iter().enumerate() {
        for p in list {
            let mut ids = Vec::new();
            for (mono, lp) in p.terms() {
                let pl = pack_pl(mono)?;
                let mut words = IMap::default();
                for (lm, c) in lp.terms() {
                    let mut key = [0u8; KEY_LEN];
                    for (w, e) in lm.factors() {
                        let slot = PL_SLOTS + word_slot(ix, w)?;
                        if *e < 0 {
                            return Err(Error::Shape("negative exponent".into()));
                        }
                        key[slot] = *e as u8;
                    }
                    iadd_entry(&mut words, Key(key), scale_coeff(c, scale)?);
                }
                ids.push(layers.len());
                layers.push(Layer { pl, words });
            }
            entry_layers[side].push(ids);
        }
    }
    // Netted splittings keyed by sorted factor multiset.
    let mut netted: HashMap<Vec<(u32, u8)>, (i64, [u8; KEY_LEN])> = HashMap::new();
    'groups: for (fc, gc, net) in perm_groups(fv.len(), gv.len()) {
        // Per entry with multiplicity, the multiset choices over its layers.
        let mut entry_choices: Vec<Vec<(Vec<(usize, u8)>, i64)>> = Vec::new();
        for (side, counts) in [(0usize, &fc), (1, &gc)] {
            for (idx, &mu) in counts.iter().enumerate() {
                if mu == 0 {
                    continue;
                }
                let ids = &entry_layers[side][idx];
                if ids.is_empty() {
                    // A structurally zero entry kills the whole group.
                    continue 'groups;
                }
                let choices = layer_multisets(ids.len(), mu)
                    .into_iter()
                    .map(|(picked, w)| {
                        let mapped: Vec<(usize, u8)> =
                            picked.into_iter().map(|(j, c)| (ids[j], c)).collect();
                        (mapped, w)
                    })
                    .collect::<Vec<_>>();
                entry_choices.push(choices);
            }
        }
        // Cartesian product across entries.
        let mut stack: Vec<usize> = vec![0; entry_choices.len()];
        'outer: loop {
            let mut factors: Vec<(u32, u8)> = Vec::new();
            let mut weight = net;
            let mut pl = [0u8; KEY_LEN];
            for (e, &pick) in stack.iter().enumerate() {
                let (ref ids, w) = entry_choices[e][pick];
                weight *= w;
                for &(id, count) in ids {
                    factors.push((id as u32, count));
                    for i in 0..PL_SLOTS {
                        pl[i] += layers[id].pl[i] * count;
                    }
                }
            }
            factors.sort_unstable();
            // Merge equal layer ids picked through different entries.
            let mut merged: Vec<(u32, u8)> = Vec::with_capacity(factors.len());
            for (id, c) in factors {
                match merged.last_mut() {
                    Some((last, lc)) if *last == id => *lc += c,
                    _ => merged.push((id, c)),
                }
            }
            let slot = netted.entry(merged).or_insert((0, pl));
            debug_assert_eq!(slot.1, pl);
            slot.0 += weight;

            for i in 0..stack.len() {
                stack[i] += 1;
                if stack[i] < entry_choices[i].len() {
                    continue 'outer;
                }
                stack[i] = 0;
            }
            break;
        }
    }
    let mut fibers: BTreeMap<FiberKey, BTreeMap<u8, Vec<Splitting>>> = BTreeMap::new();
    let mut max_c = 0u8;
    for (factors, (weight, pl)) in netted {
        if weight == 0 {
            continue;
        }
        let c = pl[2];
        max_c = max_c.max(c);
        fibers
            .entry(fiber_of(&pl))
            .or_default()
            .entry(c)
            .or_default()
            .push(Splitting { weight, factors, pl });
    }
    Ok(Sweep {
        layers,
        fibers,
        denom: df.pow(m as u32) * dg.pow(n as u32),
        max_pow: max_c.saturating_sub(1) as u32,
    })
}

fn word_slot(ix: &VarIndex, w: &Word) -> Result<usize> {
    ix.pos
        .get(w)
        .copied()
        .ok_or_else(|| Error::Shape(format!("word {w} not indexed")))
}

/// Resident set in MB, from the process status file. Diagnostic only.
pub(crate) fn rss_mb() -> u64 {
    std::fs::read_to_string("/proc/self/status")
        .ok()
        .and_then(|s| {
            s.lines().find(|l| l.starts_with("VmRSS:")).and_then(|l| {
                l.split_whitespace().nth(1).and_then(|v| v.parse::<u64>().ok())
            })
        })
        .map(|kb| kb / 1024)
        .unwrap_or(0)
}

impl Sweep {
    pub fn fiber_count(&self) -> usize {
        self.fibers.len()
    }

    /// Expand one slice: the determinant's li2-cleared layer at (fiber, c).
    fn slice(&self, parts: &[Splitting]) -> IMap {
        let mut acc = IMap::default();
        for sp in parts {
            let mut refs: Vec<&IMap> = Vec::new();
            for &(id, count) in &sp.factors {
                for _ in 0..count {
                    refs.push(&self.layers[id as usize].words);
                }
            }
            let prod = chain_product(&mut refs);
            // Attach the PL part with the li2 slot cleared; division tracks
            // the li2 exponent through the layer position instead.
            let mut plkey = sp.pl;
            plkey[2] = 0;
            let plkey = Key(plkey);
            let w = sp.weight as i128;
            for (k, c) in prod {
                let v = c.checked_mul(w).expect("determinant coefficient overflow");
                iadd_entry(&mut acc, k.combine(&plkey), v);
            }
        }
        acc
    }

    /// Run the full determinant-and-divide sweep. Quotient terms stream to
    /// `emit(key, value, pow)` where the true coefficient is
    /// value / (denom 2^pow); `progress` hears one line per fiber. Peak
    /// memory is one fiber's running numerator plus one incoming slice.
    pub fn run(
        &self,
        ix: &VarIndex,
        emit: &mut dyn FnMut(Key, i128, u32) -> Result<()>,
        progress: &mut dyn FnMut(String),
    ) -> Result<SweepStats> {
        let mut det_terms = 0u64;
        let mut quot_terms = 0u64;
        let mut det_tracker = BidegreeTracker::new();
        let mut quot_tracker = BidegreeTracker::new();
        for (i, (fiber, by_c)) in self.fibers.iter().enumerate() {
            let t = std::time::Instant::now();
            let top_enum = *by_c.keys().next_back().expect("nonempty fiber") as usize;
            let mut fiber_det = 0u64;
            let mut fiber_quot = 0u64;
            let exact = divide_fiber(
                top_enum,
                &mut |j| {
                    let slice = match by_c.get(&(j as u8)) {
                        Some(parts) => self.slice(parts),
                        None => IMap::default(),
                    };
                    fiber_det += slice.len() as u64;
                    for k in slice.keys() {
                        let mut dk = *k;
                        dk.0[2] = j as u8;
                        det_tracker.see(ix, &dk);
                    }
                    Ok(slice)
                },
                &mut |c, pow, key, v| {
                    let mut nk = key;
                    nk.0[2] = c;
                    quot_tracker.see(ix, &nk);
                    fiber_quot += 1;
                    emit(nk, v, pow)
                },
            )?;
            if !exact {
                return Err(Error::Factorization(format!(
                    "nonzero remainder dividing fiber {fiber:?} by the depth-2 element"
                )));
            }
            det_terms += fiber_det;
            quot_terms += fiber_quot;
            progress(format!(
                "fiber {}/{} {:?}: det {} terms, quotient {} terms, {:.1}s, rss {} MB",
                i + 1,
                self.fibers.len(),
                fiber,
                fiber_det,
                fiber_quot,
                t.elapsed().as_secs_f64(),
                rss_mb()
            ));
        }
        Ok(SweepStats {
            det_terms,
            det_bidegree: det_tracker.uniform(),
            quotient_terms: quot_terms,
            quotient_bidegree: quot_tracker.uniform(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::PlMono;
    use crate::rat;

    fn fw(t: &str) -> LyndonPoly {
        LyndonPoly::var(t.parse().unwrap())
    }

    fn small_sides() -> (Vec<Dom>, Vec<Dom>) {
        let t = |v: PlVar, e: u16, w: &str| Dom::term(PlMono::var_pow(v, e), fw(w));
        let two = |a: Dom, b: &Dom| {
            let mut x = a;
            x.add_assign(b);
            x
        };
        let li = |n: u8| PlVar::Li(n);
        let f = vec![
            two(t(PlVar::Log, 1, "t1"), &t(li(1), 1, "t2")).scale_rat(&rat(1, 2)),
            t(li(1), 1, "t1.t2"),
            two(Dom::one(), &t(PlVar::Log, 1, "s3")),
        ];
        let g = vec![
            t(li(2), 1, "t2"),
            two(t(PlVar::Log, 2, "t1"), &Dom::constant(fw("t1.t2"))).scale_rat(&rat(2, 3)),
            Dom::one(),
            t(li(1), 1, "s3"),
            two(t(PlVar::Log, 1, "t2"), &t(li(1), 1, "t1")),
        ];
        (f, g)
    }

    #[test]
    fn multiset_weights_sum_to_the_power() {
        // Sum of multinomials over all multisets of size mu from k layers
        // equals k^mu.
        for (k, mu) in [(1usize, 4u8), (2, 3), (3, 2), (4, 4)] {
            let total: i64 = layer_multisets(k, mu).iter().map(|(_, w)| *w).sum();
            assert_eq!(total, (k as i64).pow(mu as u32));
        }
    }

    #[test]
    fn sweep_agrees_with_the_in_memory_determinant() {
        let ix = VarIndex::new();
        let (f, g) = small_sides();
        // Multiply the g side by li2 so the determinant is divisible by
        // li2 - 1/2 log li1 after adding the forced tail: instead, divide
        // the plain determinant's product with the depth-2 element.
        let f22 = {
            let mut x = Dom::term(PlMono::var(PlVar::Li(2)), LyndonPoly::one());
            x.add_assign(
                &Dom::term(
                    PlMono::from_pairs(&[(PlVar::Log, 1), (PlVar::Li(1), 1)]),
                    LyndonPoly::one(),
                )
                .scale_rat(&rat(-1, 2)),
            );
            x
        };
        let gm: Vec<Dom> = g.iter().map(|c| c.mul(&f22)).collect();
        let fv: Vec<FlatPoly> = f.iter().map(|d| FlatPoly::from_dom(&ix, d).unwrap()).collect();
        let gv: Vec<FlatPoly> = gm.iter().map(|d| FlatPoly::from_dom(&ix, d).unwrap()).collect();
        // Reference: in-memory determinant, then the packed division. The
        // determinant gains a factor f22^(deg f) from scaling one side.
        let want = det_flat(&fv, &gv).unwrap().div_f22().unwrap().div_f22().unwrap();

        let sweep = prepare_sweep(&ix, &f, &gm).unwrap();
        let mut got = FlatPoly::zero();
        let stats = sweep
            .run(
                &ix,
                &mut |k, v, pow| {
                    let d = &sweep.denom * (BigInt::from(1) << pow);
                    got.insert_raw(k, Rat::new(BigInt::from(v), d));
                    Ok(())
                },
                &mut |_| {},
            )
            .unwrap();
        let got = got.div_f22().unwrap();
        assert_eq!(got, want);
        assert!(stats.det_terms > 0);
        assert!(stats.quotient_terms > 0);
    }
}

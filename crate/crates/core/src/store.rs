//! Disk-backed storage for polynomials too large for memory.
//!
//! The constructed kernel element runs to tens of millions of terms, more
//! than fits in memory next to the machinery that builds it. It is written
//! once as fixed-width records, one packed exponent key and one scaled
//! integer coefficient each, under a single global denominator held in the
//! header. Every later consumer streams the file: the shape checks, the
//! vanishing certificates, and the text exporter.
//!
//! Layout: a 256-byte space-padded header line, `records` raw entries of
//! KEY_LEN + 16 bytes each, then the SHA-256 digest of the entries. Files
//! are written to a sibling temp path and renamed into place; the reader
//! rejects anything whose header, size, digest, or graded shape disagrees.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_traits::Zero;
use sha2::{Digest, Sha256};

use crate::flat::{BidegreeTracker, FlatPoly, Key, VarIndex, KEY_LEN};
use crate::poly::PlMono;
use crate::{Error, Rat, Result};

const HEADER_LEN: usize = 256;
const RECORD_LEN: usize = KEY_LEN + 16;
const VERSION: &str = "v1";

/// Streams quotient records to a temp file while hashing; `finish` stamps
/// the header and renames. Coefficients arrive as value / (denom 2^pow)
/// and are stored under the uniform denominator denom 2^max_pow.
pub struct ElementWriter {
    path: PathBuf,
    tmp: PathBuf,
    out: BufWriter<File>,
    hasher: Sha256,
    records: u64,
    max_pow: u32,
    denom: BigInt,
}

impl ElementWriter {
    pub fn create(path: &Path, denom_base: &BigInt, max_pow: u32) -> Result<ElementWriter> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension("tmp");
        let mut out = BufWriter::with_capacity(1 << 20, File::create(&tmp)?);
        out.write_all(&[b' '; HEADER_LEN])?;
        Ok(ElementWriter {
            path: path.to_path_buf(),
            tmp,
            out,
            hasher: Sha256::new(),
            records: 0,
            max_pow,
            denom: denom_base * (BigInt::from(1) << max_pow),
        })
    }

    pub fn append(&mut self, key: &Key, v: i128, pow: u32) -> Result<()> {
        debug_assert!(pow <= self.max_pow);
        let v = v
            .checked_mul(1i128 << (self.max_pow - pow))
            .ok_or_else(|| Error::Shape("stored coefficient exceeds 128 bits".into()))?;
        let mut rec = [0u8; RECORD_LEN];
        rec[..KEY_LEN].copy_from_slice(key.bytes());
        rec[KEY_LEN..].copy_from_slice(&v.to_le_bytes());
        self.hasher.update(rec);
        self.out.write_all(&rec)?;
        self.records += 1;
        Ok(())
    }

    pub fn finish(
        mut self,
        det_terms: u64,
        det_bidegree: (u32, u32),
        bidegree: (u32, u32),
    ) -> Result<PathBuf> {
        let digest = self.hasher.finalize();
        self.out.write_all(&digest)?;
        let header = format!(
            "#ckforge-elem {VERSION} records={} denom={} det_terms={} det_bidegree={},{} bidegree={},{}",
            self.records,
            self.denom,
            det_terms,
            det_bidegree.0,
            det_bidegree.1,
            bidegree.0,
            bidegree.1,
        );
        if header.len() >= HEADER_LEN {
            return Err(Error::CacheFormat("header does not fit".into()));
        }
        let mut line = vec![b' '; HEADER_LEN];
        line[..header.len()].copy_from_slice(header.as_bytes());
        line[HEADER_LEN - 1] = b'\n';
        let mut f = self.out.into_inner().map_err(|e| e.into_error())?;
        f.seek(SeekFrom::Start(0))?;
        f.write_all(&line)?;
        f.sync_all()?;
        fs::rename(&self.tmp, &self.path)?;
        Ok(self.path)
    }
}

fn parse_header(line: &str) -> Result<(u64, BigInt, u64, (u32, u32), (u32, u32))> {
    let bad = |what: &str| Error::CacheFormat(format!("header {what}"));
    let mut parts = line.split_whitespace();
    if parts.next() != Some("#ckforge-elem") || parts.next() != Some(VERSION) {
        return Err(bad("magic or version"));
    }
    let mut fields: HashMap<&str, &str> = HashMap::new();
    for p in parts {
        let (k, v) = p.split_once('=').ok_or_else(|| bad("field"))?;
        fields.insert(k, v);
    }
    let field = |k: &str| fields.get(k).copied().ok_or_else(|| bad(k));
    let pair = |k: &str| -> Result<(u32, u32)> {
        let v = field(k)?;
        let (a, b) = v.split_once(',').ok_or_else(|| bad(k))?;
        Ok((
            a.parse().map_err(|_| bad(k))?,
            b.parse().map_err(|_| bad(k))?,
        ))
    };
    Ok((
        field("records")?.parse().map_err(|_| bad("records"))?,
        field("denom")?.parse().map_err(|_| bad("denom"))?,
        field("det_terms")?.parse().map_err(|_| bad("det_terms"))?,
        pair("det_bidegree")?,
        pair("bidegree")?,
    ))
}

/// A validated on-disk element. Opening runs one full pass: digest, record
/// count, graded shape, the li6^2 layer, and a probe term all come from
/// the same scan that guards against stale or foreign files.
pub struct StoredElement {
    pub path: PathBuf,
    pub records: u64,
    /// Uniform denominator: every record's true coefficient is value/denom.
    pub denom: BigInt,
    /// Term count of the determinant the quotient came from.
    pub det_terms: u64,
    pub det_bidegree: (u32, u32),
    pub bidegree: (u32, u32),
    /// Terms with li6 exponent exactly 2, li6 divided out. Small enough to
    /// hold exactly.
    pub li6_sq: FlatPoly,
    probe: (Key, i128),
}

impl StoredElement {
    pub fn open(path: &Path, ix: &VarIndex) -> Result<StoredElement> {
        let f = File::open(path)?;
        let expect_len = f.metadata()?.len();
        let mut r = BufReader::with_capacity(1 << 20, f);
        let mut line = [0u8; HEADER_LEN];
        r.read_exact(&mut line)?;
        let line = std::str::from_utf8(&line)
            .map_err(|_| Error::CacheFormat("header not text".into()))?;
        let (records, denom, det_terms, det_bidegree, header_bidegree) = parse_header(line)?;
        if expect_len != HEADER_LEN as u64 + records * RECORD_LEN as u64 + 32 {
            return Err(Error::CacheFormat("size disagrees with record count".into()));
        }
        if records == 0 {
            return Err(Error::CacheFormat("no records".into()));
        }
        let mut hasher = Sha256::new();
        let mut tracker = BidegreeTracker::new();
        let mut li6_sq = FlatPoly::zero();
        let mut probe = None;
        let mut rec = [0u8; RECORD_LEN];
        for _ in 0..records {
            r.read_exact(&mut rec)?;
            hasher.update(rec);
            let key = Key::from_bytes(rec[..KEY_LEN].try_into().expect("record key"));
            let v = i128::from_le_bytes(rec[KEY_LEN..].try_into().expect("record value"));
            tracker.see(ix, &key);
            if probe.is_none() {
                probe = Some((key, v));
            }
            if key.li6() == 2 {
                let mut b = *key.bytes();
                b[6] = 0;
                li6_sq.insert_raw(
                    Key::from_bytes(b),
                    Rat::new(BigInt::from(v), denom.clone()),
                );
            }
        }
        let mut digest = [0u8; 32];
        r.read_exact(&mut digest)?;
        if digest != *hasher.finalize() {
            return Err(Error::CacheFormat("digest mismatch".into()));
        }
        let bidegree = tracker
            .uniform()
            .ok_or_else(|| Error::CacheFormat("records not bihomogeneous".into()))?;
        if bidegree != header_bidegree {
            return Err(Error::CacheFormat("header bidegree disagrees".into()));
        }
        Ok(StoredElement {
            path: path.to_path_buf(),
            records,
            denom,
            det_terms,
            det_bidegree,
            bidegree,
            li6_sq,
            probe: probe.expect("at least one record"),
        })
    }

    /// Plain pass over the records, already validated by `open`.
    pub fn scan(&self, f: &mut dyn FnMut(&Key, i128) -> Result<()>) -> Result<()> {
        let file = File::open(&self.path)?;
        let mut r = BufReader::with_capacity(1 << 20, file);
        r.seek(SeekFrom::Start(HEADER_LEN as u64))?;
        let mut rec = [0u8; RECORD_LEN];
        for _ in 0..self.records {
            r.read_exact(&mut rec)?;
            let key = Key::from_bytes(rec[..KEY_LEN].try_into().expect("record key"));
            let v = i128::from_le_bytes(rec[KEY_LEN..].try_into().expect("record value"));
            f(&key, v)?;
        }
        Ok(())
    }

    /// One decoded term, the first on disk, for perturbation controls.
    pub fn probe_term(&self, ix: &VarIndex) -> (PlMono, crate::pbw::LyndonMono, Rat) {
        let (m, l) = FlatPoly::decode_key(ix, &self.probe.0);
        (m, l, Rat::new(BigInt::from(self.probe.1), self.denom.clone()))
    }

    /// Coefficient vectors at several word points in one pass: for each
    /// point, the value of every pl monomial's coefficient polynomial.
    ///
    /// Points assign each indexed word a dyadic rational num/2^exp, which
    /// keeps the hot loop in integer arithmetic: per record and point the
    /// contribution is coeff times a product of tabulated numerator
    /// powers, bucketed by the total denominator exponent.
    pub fn vectors_at(
        &self,
        ix: &VarIndex,
        points: &[WordPoint],
    ) -> Result<Vec<BTreeMap<PlMono, Rat>>> {
        let nwords = ix.words().len();
        for p in points {
            if p.nums.len() != nwords || p.dexp.len() != nwords {
                return Err(Error::Shape("point length disagrees with the index".into()));
            }
        }
        // tables[j][s]: powers of point j's numerator at word slot s.
        let mut tables: Vec<Vec<Vec<BigInt>>> = points
            .iter()
            .map(|p| p.nums.iter().map(|n| vec![BigInt::from(1), n.clone()]).collect())
            .collect();
        let mut acc: Vec<HashMap<(u64, u32), BigInt>> =
            points.iter().map(|_| HashMap::new()).collect();
        let mut exps: Vec<(usize, usize)> = Vec::with_capacity(16);
        self.scan(&mut |key, v| {
            let b = key.bytes();
            let pl8 = u64::from_le_bytes(b[..8].try_into().expect("pl slots"));
            exps.clear();
            for s in 0..nwords {
                let e = b[8 + s];
                if e > 0 {
                    exps.push((s, e as usize));
                }
            }
            let vbig = BigInt::from(v);
            for (j, point) in points.iter().enumerate() {
                let mut prod = vbig.clone();
                let mut t = 0u32;
                for &(s, e) in &exps {
                    let tab = &mut tables[j][s];
                    while tab.len() <= e {
                        let next = &tab[tab.len() - 1] * &tab[1];
                        tab.push(next);
                    }
                    prod *= &tab[e];
                    t += point.dexp[s] * e as u32;
                }
                match acc[j].entry((pl8, t)) {
                    std::collections::hash_map::Entry::Occupied(mut o) => *o.get_mut() += prod,
                    std::collections::hash_map::Entry::Vacant(va) => {
                        va.insert(prod);
                    }
                }
            }
            Ok(())
        })?;
        let mut out = Vec::with_capacity(points.len());
        for bucket in acc {
            let mut by_mono: BTreeMap<PlMono, Rat> = BTreeMap::new();
            for ((pl8, t), sum) in bucket {
                if sum.is_zero() {
                    continue;
                }
                let mut kb = [0u8; KEY_LEN];
                kb[..8].copy_from_slice(&pl8.to_le_bytes());
                let (m, _) = FlatPoly::decode_key(ix, &Key::from_bytes(kb));
                let val = Rat::new(sum, &self.denom * (BigInt::from(1) << t));
                *by_mono.entry(m).or_insert_with(Rat::zero) += val;
            }
            by_mono.retain(|_, v| !v.is_zero());
            out.push(by_mono);
        }
        Ok(out)
    }
}

/// A dyadic assignment to the indexed words: word s takes the value
/// nums[s] / 2^dexp[s].
pub struct WordPoint {
    pub nums: Vec<BigInt>,
    pub dexp: Vec<u32>,
}

impl WordPoint {
    /// The assignment as exact rationals keyed by word.
    pub fn as_rats(&self, ix: &VarIndex) -> BTreeMap<crate::alphabet::Word, Rat> {
        ix.words()
            .iter()
            .zip(self.nums.iter().zip(&self.dexp))
            .map(|(w, (n, e))| {
                (
                    w.clone(),
                    Rat::new(n.clone(), BigInt::from(1) << *e),
                )
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flat::prepare_sweep;
    use crate::pbw::LyndonPoly;
    use crate::poly::{PlPoly, PlVar};
    use crate::rat;

    type Dom = PlPoly<crate::pbw::LyndonPoly>;

    fn fw(t: &str) -> LyndonPoly {
        (*crate::pbw::to_lyndon_word(&t.parse().unwrap())).clone()
    }

    /// Bihomogeneous sides: every f coefficient of bidegree (2, 1), every
    /// g coefficient of bidegree (3, 2) after the forced depth-2 factor,
    /// so the swept quotient is bihomogeneous and survives `open`.
    fn graded_sides() -> (Vec<Dom>, Vec<Dom>) {
        let li = PlVar::Li;
        let log = PlVar::Log;
        let t = |pairs: &[(PlVar, u16)], w: &str| {
            Dom::term(crate::poly::PlMono::from_pairs(pairs), fw(w))
        };
        let two = |a: Dom, b: &Dom| {
            let mut x = a;
            x.add_assign(b);
            x
        };
        let f = vec![
            two(t(&[(li(1), 2)], "t1"), &t(&[(log, 1), (li(1), 1)], "t2")),
            t(&[(log, 2)], "t1").scale_rat(&rat(1, 2)),
            two(t(&[(li(2), 1)], "t2"), &t(&[(li(1), 2)], "t1")),
        ];
        let f22 = {
            let mut x = Dom::term(crate::poly::PlMono::var(li(2)), LyndonPoly::one());
            x.add_assign(
                &Dom::term(
                    crate::poly::PlMono::from_pairs(&[(log, 1), (li(1), 1)]),
                    LyndonPoly::one(),
                )
                .scale_rat(&rat(-1, 2)),
            );
            x
        };
        let g = vec![
            t(&[(log, 1)], "t1.t2").scale_rat(&rat(2, 3)),
            two(t(&[(li(1), 1)], "t2.t2"), &t(&[(log, 1)], "t1.t1")),
        ];
        let g = g.into_iter().map(|c| c.mul(&f22)).collect();
        (f, g)
    }

    #[test]
    fn writer_and_reader_roundtrip() {
        let ix = VarIndex::new();
        let (f, g) = graded_sides();
        let sweep = prepare_sweep(&ix, &f, &g).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("elem.bin");
        let mut writer = ElementWriter::create(&path, &sweep.denom, sweep.max_pow).unwrap();
        let mut in_ram = FlatPoly::zero();
        let stats = sweep
            .run(
                &ix,
                &mut |k, v, pow| {
                    in_ram.insert_raw(
                        k,
                        Rat::new(v.into(), &sweep.denom * (BigInt::from(1) << pow)),
                    );
                    writer.append(&k, v, pow)
                },
                &mut |_| {},
            )
            .unwrap();
        writer
            .finish(
                stats.det_terms,
                stats.det_bidegree.unwrap(),
                stats.quotient_bidegree.unwrap(),
            )
            .unwrap();

        let elem = StoredElement::open(&path, &ix).unwrap();
        assert_eq!(elem.records, stats.quotient_terms);
        assert_eq!(elem.det_terms, stats.det_terms);
        assert_eq!(elem.bidegree, stats.quotient_bidegree.unwrap());

        // Scan reproduces the in-memory quotient exactly.
        let mut from_disk = FlatPoly::zero();
        elem.scan(&mut |k, v| {
            from_disk.insert_raw(*k, Rat::new(v.into(), elem.denom.clone()));
            Ok(())
        })
        .unwrap();
        assert_eq!(from_disk, in_ram);

        // Streamed coefficient vectors match direct evaluation.
        let points = vec![
            WordPoint {
                nums: (0..ix.words().len()).map(|i| BigInt::from(i as i64 + 2)).collect(),
                dexp: (0..ix.words().len()).map(|i| (i % 3) as u32).collect(),
            },
            WordPoint {
                nums: (0..ix.words().len()).map(|i| BigInt::from(-(i as i64) - 1)).collect(),
                dexp: vec![0; ix.words().len()],
            },
        ];
        let vectors = elem.vectors_at(&ix, &points).unwrap();
        for (pt, got) in points.iter().zip(&vectors) {
            let mut want = in_ram.eval_lyndon_at(&ix, &pt.as_rats(&ix)).unwrap();
            want.retain(|_, v| !num_traits::Zero::is_zero(v));
            assert_eq!(got, &want);
        }

        // The probe is a genuine term.
        let (m, l, c) = elem.probe_term(&ix);
        assert!(!num_traits::Zero::is_zero(&c));
        let _ = (m, l);
    }

    #[test]
    fn reader_rejects_damage() {
        let ix = VarIndex::new();
        let (f, g) = graded_sides();
        let sweep = prepare_sweep(&ix, &f, &g).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("elem.bin");
        let mut writer = ElementWriter::create(&path, &sweep.denom, sweep.max_pow).unwrap();
        let stats = sweep
            .run(&ix, &mut |k, v, pow| writer.append(&k, v, pow), &mut |_| {})
            .unwrap();
        writer
            .finish(
                stats.det_terms,
                stats.det_bidegree.unwrap(),
                stats.quotient_bidegree.unwrap(),
            )
            .unwrap();

        // Flip one coefficient byte in the middle of the records.
        let mut bytes = fs::read(&path).unwrap();
        let mid = HEADER_LEN + (bytes.len() - HEADER_LEN - 32) / RECORD_LEN / 2 * RECORD_LEN;
        bytes[mid + KEY_LEN] ^= 1;
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            StoredElement::open(&path, &ix),
            Err(Error::CacheFormat(_))
        ));

        // Truncation is caught by the size check.
        bytes.truncate(bytes.len() - 1);
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            StoredElement::open(&path, &ix),
            Err(Error::CacheFormat(_))
        ));

        // A foreign header is rejected outright.
        fs::write(&path, b"#something-else v9\n").unwrap();
        assert!(StoredElement::open(&path, &ix).is_err());
    }
}

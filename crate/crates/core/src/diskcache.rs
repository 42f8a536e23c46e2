//! On-disk persistence for the word to Lyndon-polynomial conversion cache.
//!
//! One file per (s, d) holds the cached conversions whose words fit inside
//! that alphabet, as tab-separated `word<TAB>poly` lines under a versioned
//! header. Files are plain text, sorted, and safe to delete at any time;
//! a stale or foreign file is rejected by its header, never trusted.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::alphabet::{Gen, Word};
use crate::error::{Error, Result};
use crate::pbw::{word_poly_cache_insert, word_poly_cache_snapshot, LyndonPoly};

const VERSION: &str = "v1";

/// Cache directory: CKFORGE_CACHE if set, otherwise under the system temp
/// directory. Everything inside is derivable and safe to delete.
pub fn default_dir() -> PathBuf {
    std::env::var_os("CKFORGE_CACHE")
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ckforge-cache"))
}

pub fn cache_file(dir: &Path, s: u8, d: u32) -> PathBuf {
    dir.join(format!("pbw-s{s}-d{d}.tsv"))
}

fn header(s: u8, d: u32) -> String {
    format!("#ckforge-pbw {VERSION} s={s} d={d}")
}

fn word_fits(w: &Word, s: u8, d: u32) -> bool {
    w.letters().iter().all(|g| match g {
        Gen::Tau(i) => *i <= s,
        Gen::Sigma(k) => u32::from(*k) <= d,
    })
}

/// Write the in-process entries over the (s, d) alphabet. Returns the number
/// of entries written.
pub fn save(dir: &Path, s: u8, d: u32) -> Result<usize> {
    save_entries(dir, s, d, word_poly_cache_snapshot())
}

/// Write the given conversions that fit the (s, d) alphabet, sorted by word.
/// The write goes through a sibling temp file so readers never see a torn
/// file.
pub fn save_entries(
    dir: &Path,
    s: u8,
    d: u32,
    entries: Vec<(Word, LyndonPoly)>,
) -> Result<usize> {
    fs::create_dir_all(dir)?;
    let mut entries: Vec<(Word, LyndonPoly)> = entries
        .into_iter()
        .filter(|(w, _)| word_fits(w, s, d))
        .collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    let tmp = dir.join(format!(".pbw-s{s}-d{d}.tsv.tmp"));
    {
        let mut out = BufWriter::new(fs::File::create(&tmp)?);
        writeln!(out, "{}", header(s, d))?;
        for (w, p) in &entries {
            writeln!(out, "{w}\t{p}")?;
        }
        out.flush()?;
    }
    fs::rename(&tmp, cache_file(dir, s, d))?;
    Ok(entries.len())
}

/// Load a cache file into the in-process cache. A missing file is an empty
/// cache, not an error. Returns the number of entries loaded.
pub fn load(dir: &Path, s: u8, d: u32) -> Result<usize> {
    let path = cache_file(dir, s, d);
    let file = match fs::File::open(&path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(0),
        Err(e) => return Err(e.into()),
    };
    let mut lines = BufReader::new(file).lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::CacheFormat(format!("{}: empty file", path.display())))??;
    if first != header(s, d) {
        return Err(Error::CacheFormat(format!(
            "{}: header {first:?}, want {:?}",
            path.display(),
            header(s, d)
        )));
    }
    let mut count = 0;
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let (w, p) = line.split_once('\t').ok_or_else(|| {
            Error::CacheFormat(format!("{}:{}: no tab separator", path.display(), i + 2))
        })?;
        let w: Word = w
            .parse()
            .map_err(|e| Error::CacheFormat(format!("{}:{}: {e}", path.display(), i + 2)))?;
        let p: LyndonPoly = p
            .parse()
            .map_err(|e| Error::CacheFormat(format!("{}:{}: {e}", path.display(), i + 2)))?;
        word_poly_cache_insert(w, p);
        count += 1;
    }
    Ok(count)
}

#[derive(Clone, Debug)]
pub struct FileInfo {
    pub path: PathBuf,
    pub s: u8,
    pub d: u32,
    pub entries: usize,
    pub bytes: u64,
}

/// Inventory of cache files under a directory, sorted by (s, d).
pub fn info(dir: &Path) -> Result<Vec<FileInfo>> {
    let mut out = Vec::new();
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
        Err(e) => return Err(e.into()),
    };
    for entry in entries {
        let entry = entry?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        let Some(rest) = name.strip_prefix("pbw-s").and_then(|n| n.strip_suffix(".tsv")) else {
            continue;
        };
        let Some((s, d)) = rest.split_once("-d") else { continue };
        let (Ok(s), Ok(d)) = (s.parse::<u8>(), d.parse::<u32>()) else {
            continue;
        };
        let meta = entry.metadata()?;
        let file = fs::File::open(entry.path())?;
        let entries = BufReader::new(file).lines().count().saturating_sub(1);
        out.push(FileInfo {
            path: entry.path(),
            s,
            d,
            entries,
            bytes: meta.len(),
        });
    }
    out.sort_by_key(|f| (f.s, f.d));
    Ok(out)
}

/// Delete every cache file under the directory. Returns how many went.
pub fn clear(dir: &Path) -> Result<usize> {
    let mut count = 0;
    for f in info(dir)? {
        fs::remove_file(&f.path)?;
        count += 1;
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pbw::to_lyndon_word;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn sample_entries() -> Vec<(Word, LyndonPoly)> {
        ["t1.t2.t1", "s3.t1", "t2.t2", "t1"]
            .iter()
            .map(|s| {
                let w = w(s);
                let p = (*to_lyndon_word(&w)).clone();
                (w, p)
            })
            .collect()
    }

    #[test]
    fn save_load_roundtrip_and_inventory() {
        let dir = tempfile::tempdir().unwrap();
        let dir = dir.path();

        let entries = sample_entries();
        assert_eq!(save_entries(dir, 2, 6, entries.clone()).unwrap(), 4);
        // A smaller alphabet keeps only the words that fit: s3.t1 and t1.
        assert_eq!(save_entries(dir, 1, 6, entries.clone()).unwrap(), 2);

        // Saving the same entries twice gives identical bytes.
        let bytes = fs::read(cache_file(dir, 2, 6)).unwrap();
        save_entries(dir, 2, 6, entries.clone()).unwrap();
        assert_eq!(fs::read(cache_file(dir, 2, 6)).unwrap(), bytes);

        assert_eq!(load(dir, 2, 6).unwrap(), 4);
        // Loaded values agree with direct conversion (values are canonical,
        // so this holds whether the load or the conversion won the insert).
        for (word, poly) in &entries {
            assert_eq!(*to_lyndon_word(word), *poly);
        }

        let inv = info(dir).unwrap();
        assert_eq!(inv.len(), 2);
        assert_eq!((inv[0].s, inv[0].d, inv[0].entries), (1, 6, 2));
        assert_eq!((inv[1].s, inv[1].d, inv[1].entries), (2, 6, 4));

        // Loading a missing file is a no-op.
        assert_eq!(load(dir, 1, 2).unwrap(), 0);

        // A header mismatch is rejected.
        fs::write(cache_file(dir, 1, 3), "#ckforge-pbw v0 s=1 d=3\n").unwrap();
        assert!(matches!(load(dir, 1, 3), Err(Error::CacheFormat(_))));
        // So is a line without the separator.
        fs::write(cache_file(dir, 1, 4), "#ckforge-pbw v1 s=1 d=4\nt1 no tab\n").unwrap();
        assert!(matches!(load(dir, 1, 4), Err(Error::CacheFormat(_))));

        assert_eq!(clear(dir).unwrap(), 4);
        assert!(info(dir).unwrap().is_empty());
    }

    #[test]
    fn snapshot_save_covers_converted_words() {
        let dir = tempfile::tempdir().unwrap();
        let dir = dir.path();
        to_lyndon_word(&w("t1.t1.t2"));
        let n = save(dir, 2, 3).unwrap();
        assert!(n >= 1);
        let text = fs::read_to_string(cache_file(dir, 2, 3)).unwrap();
        assert!(text.lines().any(|l| l.starts_with("t1.t1.t2\t")));
    }
}

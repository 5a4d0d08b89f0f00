//! Binary snapshots of fact databases, for fast reloading after the first
//! parse of a fact file.
//!
//! Layout (little-endian): magic `SRFC`, format version (u32), symbol table
//! (count, then length-prefixed UTF-8 strings), relation count, then per
//! relation its name, arity, tuple count and the tuples. Each constant is a
//! tag byte followed by an i64 (integer) or a u32 symbol index.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use setrules_core::{parse_facts, Constant, Database, Relation, Symbol, Tuple};

use crate::BenchError;

pub const MAGIC: &[u8; 4] = b"SRFC";
pub const VERSION: u32 = 1;

const TAG_INT: u8 = 0;
const TAG_SYM: u8 = 1;

pub fn encode(db: &Database) -> Vec<u8> {
    let mut symbols: Vec<Symbol> = Vec::new();
    let mut index: HashMap<Symbol, u32> = HashMap::new();
    for rel in db.relations() {
        for t in rel.iter() {
            for c in t.iter() {
                if let Constant::Sym(s) = c {
                    index.entry(*s).or_insert_with(|| {
                        symbols.push(*s);
                        (symbols.len() - 1) as u32
                    });
                }
            }
        }
    }
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let put_str = |out: &mut Vec<u8>, s: &str| {
        out.extend_from_slice(&(s.len() as u32).to_le_bytes());
        out.extend_from_slice(s.as_bytes());
    };
    out.extend_from_slice(&(symbols.len() as u32).to_le_bytes());
    for s in &symbols {
        put_str(&mut out, s.as_str());
    }
    out.extend_from_slice(&(db.len() as u32).to_le_bytes());
    for rel in db.relations() {
        put_str(&mut out, rel.name());
        out.extend_from_slice(&(rel.arity() as u32).to_le_bytes());
        out.extend_from_slice(&(rel.len() as u64).to_le_bytes());
        for t in rel.iter() {
            for c in t.iter() {
                match c {
                    Constant::Int(i) => {
                        out.push(TAG_INT);
                        out.extend_from_slice(&i.to_le_bytes());
                    }
                    Constant::Sym(s) => {
                        out.push(TAG_SYM);
                        out.extend_from_slice(&index[s].to_le_bytes());
                    }
                }
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], BenchError> {
        if self.bytes.len() < n {
            return Err(BenchError::CorruptCache("unexpected end of data".into()));
        }
        let (head, rest) = self.bytes.split_at(n);
        self.bytes = rest;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, BenchError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, BenchError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, BenchError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn str(&mut self) -> Result<String, BenchError> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| BenchError::CorruptCache("invalid UTF-8".into()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Database, BenchError> {
    let mut r = Reader { bytes };
    if r.take(4).ok() != Some(MAGIC.as_slice()) {
        return Err(BenchError::CorruptCache("missing magic header".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(BenchError::CacheVersion {
            found: version,
            expected: VERSION,
        });
    }
    let symbols = (0..r.u32()?)
        .map(|_| Ok(Symbol::intern(&r.str()?)))
        .collect::<Result<Vec<_>, BenchError>>()?;
    let mut db = Database::new();
    for _ in 0..r.u32()? {
        let name = r.str()?;
        let arity = r.u32()? as usize;
        let count = r.u64()?;
        let mut rel = Relation::new(name, arity);
        for _ in 0..count {
            let mut items = Vec::with_capacity(arity);
            for _ in 0..arity {
                items.push(match r.u8()? {
                    TAG_INT => Constant::Int(r.u64()? as i64),
                    TAG_SYM => {
                        let i = r.u32()? as usize;
                        Constant::Sym(
                            *symbols
                                .get(i)
                                .ok_or_else(|| BenchError::CorruptCache(format!("symbol index {i} out of range")))?,
                        )
                    }
                    tag => return Err(BenchError::CorruptCache(format!("unknown constant tag {tag}"))),
                });
            }
            rel.insert(Tuple::new(items)).expect("arity checked while reading");
        }
        if db.insert_relation(rel).is_some() {
            return Err(BenchError::CorruptCache("duplicate relation".into()));
        }
    }
    if !r.bytes.is_empty() {
        return Err(BenchError::CorruptCache("trailing bytes".into()));
    }
    Ok(db)
}

/// The cache path for a raw fact file: the same path with `.cache` appended.
pub fn cache_path(raw: &Path) -> PathBuf {
    let mut p = raw.as_os_str().to_owned();
    p.push(".cache");
    PathBuf::from(p)
}

/// Parses `raw` and writes its cache next to it.
pub fn cache_facts(raw: &Path) -> Result<PathBuf, BenchError> {
    let db = parse_facts(&fs::read_to_string(raw)?)?;
    let out = cache_path(raw);
    fs::File::create(&out)?.write_all(&encode(&db))?;
    Ok(out)
}

pub fn load_cache(path: &Path) -> Result<Database, BenchError> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn is_cache_file(path: &Path) -> Result<bool, BenchError> {
    let mut head = [0u8; 4];
    let n = fs::File::open(path)?.read(&mut head)?;
    Ok(n == 4 && &head == MAGIC)
}

/// Loads a fact file, or a cache if the file starts with the cache magic.
pub fn load_facts(path: &Path) -> Result<Database, BenchError> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(MAGIC) {
        decode(&bytes)
    } else {
        let text = String::from_utf8(bytes).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        Ok(parse_facts(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Database {
        parse_facts("edge(1,2).\nedge(2,-3).\nname(a,'Hello World').\nunit.\n").unwrap()
    }

    #[test]
    fn round_trip() {
        let db = sample();
        assert_eq!(decode(&encode(&db)).unwrap().relations().collect::<Vec<_>>(), db.relations().collect::<Vec<_>>());
    }

    #[test]
    fn truncation_is_detected() {
        let bytes = encode(&sample());
        for cut in [0, 3, 7, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(decode(&bytes[..cut]), Err(BenchError::CorruptCache(_))), "cut at {cut}");
        }
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let mut bytes = encode(&sample());
        bytes[4] = 9;
        assert!(matches!(decode(&bytes), Err(BenchError::CacheVersion { found: 9, .. })));
    }
}

//! Document fingerprints and the append-only checksum ledger.
//!
//! On disk the ledger is UTF-8 TSV, one entry per line:
//! `date<TAB>name<TAB>md5<TAB>sha256<TAB>sha512[<TAB>asset]`. Every saved
//! version `N` is also kept as `<ledger>.v<N>`.

use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use md5::Md5;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256, Sha512};

#[derive(Debug, thiserror::Error)]
pub enum SealError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("invalid ledger entry: {0}")]
    InvalidEntry(String),
    #[error("ledger line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("document {0:?} is already in the ledger")]
    Duplicate(String),
    #[error("append-only violation: {0}")]
    NotAppendOnly(String),
    #[error("ledger {0} is locked by another writer")]
    Locked(PathBuf),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> SealError + '_ {
    move |source| SealError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Digests {
    pub md5: String,
    pub sha256: String,
    pub sha512: String,
}

pub fn hash_reader<R: Read>(mut reader: R) -> io::Result<Digests> {
    let (mut a, mut b, mut c) = (Md5::new(), Sha256::new(), Sha512::new());
    let mut buf = vec![0u8; 64 * 1024];
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        a.update(&buf[..n]);
        b.update(&buf[..n]);
        c.update(&buf[..n]);
    }
    Ok(Digests {
        md5: hex::encode(a.finalize()),
        sha256: hex::encode(b.finalize()),
        sha512: hex::encode(c.finalize()),
    })
}

pub fn hash_bytes(bytes: &[u8]) -> Digests {
    hash_reader(bytes).expect("reading from memory")
}

/// MD5, SHA-256 and SHA-512 of the raw file bytes, lowercase hex.
pub fn hash_document(path: &Path) -> Result<Digests, SealError> {
    let file = File::open(path).map_err(io_err(path))?;
    hash_reader(file).map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub publication_date: NaiveDate,
    pub document_name: String,
    pub md5: String,
    pub sha256: String,
    pub sha512: String,
    pub asset_label: Option<String>,
}

fn check_hex(name: &str, value: &str, len: usize) -> Result<(), SealError> {
    if value.len() != len || !value.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)) {
        return Err(SealError::InvalidEntry(format!(
            "{name} must be {len} lowercase hex characters, got {value:?}"
        )));
    }
    Ok(())
}

impl LedgerEntry {
    pub fn new(
        publication_date: NaiveDate,
        document_name: impl Into<String>,
        digests: Digests,
        asset_label: Option<String>,
    ) -> Result<Self, SealError> {
        let entry = Self {
            publication_date,
            document_name: document_name.into(),
            md5: digests.md5,
            sha256: digests.sha256,
            sha512: digests.sha512,
            asset_label,
        };
        entry.validate()?;
        Ok(entry)
    }

    pub fn validate(&self) -> Result<(), SealError> {
        let bad_name = self.document_name.is_empty() || self.document_name.contains(['\t', '\n', '\r', '/', '\\']);
        if bad_name {
            return Err(SealError::InvalidEntry(format!(
                "document name must be a non-empty plain file name, got {:?}",
                self.document_name
            )));
        }
        if let Some(asset) = &self.asset_label {
            if asset.contains(['\t', '\n', '\r']) {
                return Err(SealError::InvalidEntry("asset label contains a tab or newline".into()));
            }
        }
        check_hex("md5", &self.md5, 32)?;
        check_hex("sha256", &self.sha256, 64)?;
        check_hex("sha512", &self.sha512, 128)
    }

    pub fn digests(&self) -> Digests {
        Digests {
            md5: self.md5.clone(),
            sha256: self.sha256.clone(),
            sha512: self.sha512.clone(),
        }
    }

    fn parse(line_no: usize, line: &str) -> Result<Self, SealError> {
        let fields: Vec<&str> = line.split('\t').collect();
        if !(5..=6).contains(&fields.len()) {
            return Err(SealError::Parse {
                line: line_no,
                reason: format!("expected 5 or 6 tab-separated fields, got {}", fields.len()),
            });
        }
        let date = NaiveDate::parse_from_str(fields[0], "%Y-%m-%d").map_err(|e| SealError::Parse {
            line: line_no,
            reason: format!("date {:?}: {e}", fields[0]),
        })?;
        let entry = Self {
            publication_date: date,
            document_name: fields[1].into(),
            md5: fields[2].into(),
            sha256: fields[3].into(),
            sha512: fields[4].into(),
            asset_label: fields.get(5).map(|s| s.to_string()),
        };
        entry.validate().map_err(|e| SealError::Parse {
            line: line_no,
            reason: e.to_string(),
        })?;
        Ok(entry)
    }
}

impl fmt::Display for LedgerEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}",
            self.publication_date, self.document_name, self.md5, self.sha256, self.sha512
        )?;
        if let Some(asset) = &self.asset_label {
            write!(f, "\t{asset}")?;
        }
        Ok(())
    }
}

/// Append-ordered entries; the version is the number of entries.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    entries: Vec<LedgerEntry>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn version(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, name: &str) -> Option<&LedgerEntry> {
        self.entries.iter().find(|e| e.document_name == name)
    }

    pub fn append(&self, entry: LedgerEntry) -> Result<Ledger, SealError> {
        entry.validate()?;
        if self.get(&entry.document_name).is_some() {
            return Err(SealError::Duplicate(entry.document_name));
        }
        let mut next = self.clone();
        next.entries.push(entry);
        Ok(next)
    }

    /// Accepts `next` only if it extends `self` without touching any
    /// existing entry.
    pub fn check_successor(&self, next: &Ledger) -> Result<(), SealError> {
        if next.entries.len() < self.entries.len() {
            return Err(SealError::NotAppendOnly(format!(
                "version {} would drop entries of version {}",
                next.version(),
                self.version()
            )));
        }
        for (i, (old, new)) in self.entries.iter().zip(&next.entries).enumerate() {
            if old != new {
                return Err(SealError::NotAppendOnly(format!(
                    "entry {} ({}) was modified",
                    i + 1,
                    old.document_name
                )));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for e in &next.entries {
            e.validate()?;
            if !seen.insert(e.document_name.as_str()) {
                return Err(SealError::Duplicate(e.document_name.clone()));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Ledger, SealError> {
        let mut ledger = Ledger::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let entry = LedgerEntry::parse(i + 1, line)?;
            ledger = ledger.append(entry).map_err(|e| SealError::Parse {
                line: i + 1,
                reason: e.to_string(),
            })?;
        }
        Ok(ledger)
    }

    pub fn to_tsv(&self) -> String {
        self.entries.iter().map(|e| format!("{e}\n")).collect()
    }

    /// Reads a ledger file; a missing file is an empty ledger.
    pub fn load(path: &Path) -> Result<Ledger, SealError> {
        match fs::read_to_string(path) {
            Ok(text) => Ledger::parse(&text),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Ledger::new()),
            Err(e) => Err(io_err(path)(e)),
        }
    }

    /// `md5sum -c` style lines: `<digest>  <name>`.
    pub fn export_checks(&self, algorithm: Algorithm) -> String {
        self.entries
            .iter()
            .map(|e| {
                let d = match algorithm {
                    Algorithm::Md5 => &e.md5,
                    Algorithm::Sha256 => &e.sha256,
                    Algorithm::Sha512 => &e.sha512,
                };
                format!("{d}  {}\n", e.document_name)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Md5,
    Sha256,
    Sha512,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Md5, Algorithm::Sha256, Algorithm::Sha512];

    /// Conventional check-file name and the coreutils tool that reads it.
    pub fn file_name(self) -> &'static str {
        match self {
            Algorithm::Md5 => "MD5SUMS",
            Algorithm::Sha256 => "SHA256SUMS",
            Algorithm::Sha512 => "SHA512SUMS",
        }
    }

    pub fn tool(self) -> &'static str {
        match self {
            Algorithm::Md5 => "md5sum",
            Algorithm::Sha256 => "sha256sum",
            Algorithm::Sha512 => "sha512sum",
        }
    }
}

fn snapshot_path(path: &Path, version: usize) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(format!(".v{version}"));
    PathBuf::from(s)
}

/// Exclusive writer lock held for the lifetime of the value.
struct LockGuard(PathBuf);

impl LockGuard {
    fn acquire(ledger: &Path) -> Result<Self, SealError> {
        let mut s = ledger.as_os_str().to_owned();
        s.push(".lock");
        let lock = PathBuf::from(s);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(_) => Ok(LockGuard(lock)),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(SealError::Locked(ledger.to_path_buf())),
            Err(e) => Err(io_err(&lock)(e)),
        }
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// Appends `entry` to the ledger file at `path`, keeping every version.
///
/// The current file must still extend the latest snapshot it was saved
/// from; a hand-edited ledger is refused rather than extended.
pub fn append_to_file(path: &Path, entry: LedgerEntry) -> Result<Ledger, SealError> {
    let _lock = LockGuard::acquire(path)?;
    let current = Ledger::load(path)?;
    let mut latest = current.version();
    while snapshot_path(path, latest + 1).exists() {
        latest += 1;
    }
    if latest > current.version() {
        return Err(SealError::NotAppendOnly(format!(
            "{} has {} entries but version {latest} was saved",
            path.display(),
            current.version()
        )));
    }
    if current.version() > 0 {
        let snap = snapshot_path(path, current.version());
        let text = fs::read_to_string(&snap).map_err(io_err(&snap))?;
        if text != current.to_tsv() {
            return Err(SealError::NotAppendOnly(format!(
                "{} differs from its saved version {}",
                path.display(),
                snap.display()
            )));
        }
    }
    for v in 1..current.version() {
        let snap = snapshot_path(path, v);
        if let Ok(text) = fs::read_to_string(&snap) {
            Ledger::parse(&text)?.check_successor(&current)?;
        }
    }
    let next = current.append(entry)?;
    current.check_successor(&next)?;
    let tsv = next.to_tsv();
    let snap = snapshot_path(path, next.version());
    fs::write(&snap, &tsv).map_err(io_err(&snap))?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, &tsv).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))?;
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "UPPERCASE")]
pub enum EntryStatus {
    Ok,
    Mismatch { md5: bool, sha256: bool, sha512: bool },
    Missing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryCheck {
    pub document_name: String,
    #[serde(flatten)]
    pub status: EntryStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub entries: Vec<EntryCheck>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.status == EntryStatus::Ok)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            match &e.status {
                EntryStatus::Ok => writeln!(f, "OK\t{}", e.document_name)?,
                EntryStatus::Missing => writeln!(f, "MISSING\t{}", e.document_name)?,
                EntryStatus::Mismatch { md5, sha256, sha512 } => {
                    let which: Vec<&str> = [(*md5, "md5"), (*sha256, "sha256"), (*sha512, "sha512")]
                        .into_iter()
                        .filter_map(|(bad, n)| bad.then_some(n))
                        .collect();
                    writeln!(f, "MISMATCH\t{}\t{}", e.document_name, which.join(","))?
                }
            }
        }
        Ok(())
    }
}

/// Re-hashes every ledger document found in `dir`. Problems are report
/// content; only unexpected IO failures on present files surface as
/// mismatches of all three digests.
pub fn verify(ledger: &Ledger, dir: &Path) -> VerificationReport {
    let entries = ledger
        .entries()
        .iter()
        .map(|e| {
            let path = dir.join(&e.document_name);
            let status = if !path.is_file() {
                EntryStatus::Missing
            } else {
                match hash_document(&path) {
                    Ok(d) if d == e.digests() => EntryStatus::Ok,
                    Ok(d) => EntryStatus::Mismatch {
                        md5: d.md5 != e.md5,
                        sha256: d.sha256 != e.sha256,
                        sha512: d.sha512 != e.sha512,
                    },
                    Err(_) => EntryStatus::Mismatch {
                        md5: true,
                        sha256: true,
                        sha512: true,
                    },
                }
            };
            EntryCheck {
                document_name: e.document_name.clone(),
                status,
            }
        })
        .collect();
    VerificationReport { entries }
}

//! Append-only, line-delimited JSON record store.
//!
//! Every line is one self-describing record with a `kind` field:
//!
//! * `project`  – first line; schema version, project id and per-class line counts
//! * `mutant`   – one catalog entry
//! * `result`   – one execution verdict
//! * `override` – a manual equivalent-mutant mark; the latest one per id wins
//!
//! A record is durable once its terminating newline has been written and
//! synced. A final line without a newline is a torn write; readers drop it and
//! writers truncate it before appending.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mutator::Mutant;
use crate::runner::{MutantResult, Status};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: corrupted record: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error("{0} already exists and holds a different catalog")]
    CatalogMismatch(PathBuf),
    #[error("{0} is not initialized (missing project record)")]
    Uninitialized(PathBuf),
    #[error("unsupported store schema version {0}")]
    Version(u32),
    #[error("mutant {0} already has a result")]
    DuplicateResult(u64),
    #[error("mutant {0} is not in the catalog")]
    UnknownMutant(u64),
    #[error("result for mutant {id} names class `{got}` but the catalog says `{expected}`")]
    ClassMismatch { id: u64, expected: String, got: String },
    #[error("duplicate mutant id {0} in catalog")]
    DuplicateMutant(u64),
    #[error("store {0} is locked by another process")]
    Locked(PathBuf),
}

type Result<T, E = StoreError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectHeader {
    pub version: u32,
    pub project_id: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub class_loc: BTreeMap<String, u64>,
    /// Seed of the generator that produced the store, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ProjectHeader {
    pub fn new(project_id: impl Into<String>) -> Self {
        ProjectHeader {
            version: SCHEMA_VERSION,
            project_id: project_id.into(),
            class_loc: BTreeMap::new(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ResultRecord {
    mutant_id: u64,
    class_name: String,
    status: Status,
    duration_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct OverrideRecord {
    mutant_id: u64,
    equivalent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Record {
    Project(ProjectHeader),
    Mutant(Mutant),
    Result(ResultRecord),
    Override(OverrideRecord),
}

/// The full set of mutants with their verdicts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultSet {
    pub project_id: String,
    /// class name → results, in store order.
    pub records: BTreeMap<String, Vec<MutantResult>>,
    pub mutant_catalog: BTreeMap<u64, Mutant>,
    pub class_loc: BTreeMap<String, u64>,
}

impl ResultSet {
    /// Assemble a result set, checking referential integrity.
    pub fn from_parts(
        project_id: impl Into<String>,
        catalog: impl IntoIterator<Item = Mutant>,
        results: impl IntoIterator<Item = MutantResult>,
    ) -> Result<Self> {
        let mut set = ResultSet {
            project_id: project_id.into(),
            ..ResultSet::default()
        };
        for m in catalog {
            let id = m.id;
            if set.mutant_catalog.insert(id, m).is_some() {
                return Err(StoreError::DuplicateMutant(id));
            }
        }
        let mut seen = BTreeSet::new();
        for r in results {
            set.check_result(&r)?;
            if !seen.insert(r.mutant_id) {
                return Err(StoreError::DuplicateResult(r.mutant_id));
            }
            set.records.entry(r.class_name.clone()).or_default().push(r);
        }
        Ok(set)
    }

    fn check_result(&self, r: &MutantResult) -> Result<()> {
        let m = self
            .mutant_catalog
            .get(&r.mutant_id)
            .ok_or(StoreError::UnknownMutant(r.mutant_id))?;
        if m.class_name != r.class_name {
            return Err(StoreError::ClassMismatch {
                id: r.mutant_id,
                expected: m.class_name.clone(),
                got: r.class_name.clone(),
            });
        }
        Ok(())
    }

    pub fn total_results(&self) -> usize {
        self.records.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total_results() == 0
    }

    pub fn results(&self) -> impl Iterator<Item = &MutantResult> {
        self.records.values().flatten()
    }

    /// Mutant ids that have a verdict, ascending.
    pub fn result_ids(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self.results().map(|r| r.mutant_id).collect();
        ids.sort_unstable();
        ids
    }

    pub fn class_sizes(&self) -> BTreeMap<&str, usize> {
        self.records
            .iter()
            .filter(|(_, rs)| !rs.is_empty())
            .map(|(c, rs)| (c.as_str(), rs.len()))
            .collect()
    }

    /// Results ordered by mutant id, ignoring timings. Two result sets with
    /// equal verdict tables compare equal here.
    pub fn verdicts(&self) -> Vec<(u64, String, Status, bool)> {
        let mut v: Vec<_> = self
            .results()
            .map(|r| (r.mutant_id, r.class_name.clone(), r.status, r.equivalent_override))
            .collect();
        v.sort_by_key(|(id, ..)| *id);
        v
    }
}

#[derive(Debug, Clone, Default)]
pub struct Loaded {
    pub header: Option<ProjectHeader>,
    pub result_set: ResultSet,
    pub warnings: Vec<String>,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

struct Parsed {
    records: Vec<Record>,
    /// Byte length of the fully-written prefix.
    complete_len: u64,
    warnings: Vec<String>,
}

fn parse(path: &Path, bytes: &[u8]) -> Result<Parsed> {
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut offset = 0usize;
    let mut line_no = 0usize;
    while offset < bytes.len() {
        line_no += 1;
        let Some(nl) = bytes[offset..].iter().position(|&b| b == b'\n') else {
            warnings.push(format!(
                "{}:{line_no}: dropping torn trailing record ({} bytes)",
                path.display(),
                bytes.len() - offset
            ));
            break;
        };
        let line = &bytes[offset..offset + nl];
        offset += nl + 1;
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let rec: Record = serde_json::from_slice(line).map_err(|e| StoreError::Corrupt {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        records.push(rec);
    }
    let complete_len = if warnings.is_empty() { bytes.len() } else { offset } as u64;
    Ok(Parsed {
        records,
        complete_len,
        warnings,
    })
}

fn assemble(path: &Path, parsed: Parsed) -> Result<Loaded> {
    let mut header = None;
    let mut catalog = Vec::new();
    let mut results = Vec::new();
    let mut overrides: HashMap<u64, bool> = HashMap::new();
    for (i, rec) in parsed.records.into_iter().enumerate() {
        match rec {
            Record::Project(h) => {
                if h.version != SCHEMA_VERSION {
                    return Err(StoreError::Version(h.version));
                }
                if i != 0 {
                    return Err(StoreError::Corrupt {
                        path: path.to_path_buf(),
                        line: i + 1,
                        message: "project record must be the first line".into(),
                    });
                }
                header = Some(h);
            }
            Record::Mutant(m) => catalog.push(m),
            Record::Result(r) => results.push(MutantResult {
                mutant_id: r.mutant_id,
                class_name: r.class_name,
                status: r.status,
                duration_ms: r.duration_ms,
                equivalent_override: false,
            }),
            Record::Override(o) => {
                overrides.insert(o.mutant_id, o.equivalent);
            }
        }
    }
    if header.is_none() && !(catalog.is_empty() && results.is_empty()) {
        return Err(StoreError::Uninitialized(path.to_path_buf()));
    }
    for r in &mut results {
        r.equivalent_override = overrides.get(&r.mutant_id).copied().unwrap_or(false);
    }
    let project_id = header.as_ref().map(|h| h.project_id.clone()).unwrap_or_default();
    let mut result_set = ResultSet::from_parts(project_id, catalog, results)?;
    if let Some(h) = &header {
        result_set.class_loc = h.class_loc.clone();
    }
    Ok(Loaded {
        header,
        result_set,
        warnings: parsed.warnings,
    })
}

/// Read a store file. A torn final record is dropped with a warning; any
/// other unparsable line is fatal.
pub fn load_result_set(path: &Path) -> Result<Loaded> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    let parsed = parse(path, &bytes)?;
    let loaded = assemble(path, parsed)?;
    for w in &loaded.warnings {
        log::warn!("{w}");
    }
    Ok(loaded)
}

/// Single-writer handle on a store file.
pub struct Store {
    path: PathBuf,
    file: File,
    catalog: HashMap<u64, String>,
    results: BTreeSet<u64>,
}

impl Store {
    /// Initialize a store with its header and mutant catalog. An existing
    /// store holding the identical catalog is reopened unchanged.
    pub fn create(path: &Path, header: &ProjectHeader, mutants: &[Mutant]) -> Result<Store> {
        if path.exists() && std::fs::metadata(path).map_err(io_err(path))?.len() > 0 {
            let existing = load_result_set(path)?;
            let same_catalog = existing.header.as_ref().map(|h| &h.project_id) == Some(&header.project_id)
                && existing.result_set.mutant_catalog.len() == mutants.len()
                && mutants
                    .iter()
                    .all(|m| existing.result_set.mutant_catalog.get(&m.id) == Some(m));
            if !same_catalog {
                return Err(StoreError::CatalogMismatch(path.to_path_buf()));
            }
            return Store::open(path);
        }
        let mut seen = BTreeSet::new();
        for m in mutants {
            if !seen.insert(m.id) {
                return Err(StoreError::DuplicateMutant(m.id));
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .truncate(true)
            .write(true)
            .open(path)
            .map_err(io_err(path))?;
        let mut w = BufWriter::new(&file);
        let write = |w: &mut BufWriter<&File>, rec: &Record| -> io::Result<()> {
            serde_json::to_writer(&mut *w, rec)?;
            w.write_all(b"\n")
        };
        write(&mut w, &Record::Project(header.clone())).map_err(io_err(path))?;
        for m in mutants {
            write(&mut w, &Record::Mutant(m.clone())).map_err(io_err(path))?;
        }
        w.flush().map_err(io_err(path))?;
        drop(w);
        file.sync_all().map_err(io_err(path))?;
        Store::open(path)
    }

    /// Open an initialized store for appending, truncating a torn tail.
    pub fn open(path: &Path) -> Result<Store> {
        let mut file = OpenOptions::new()
            .read(true)
            .write(true)
            .open(path)
            .map_err(io_err(path))?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(io_err(path))?;
        let parsed = parse(path, &bytes)?;
        let complete_len = parsed.complete_len;
        for w in &parsed.warnings {
            log::warn!("{w}");
        }
        let loaded = assemble(path, parsed)?;
        if loaded.header.is_none() {
            return Err(StoreError::Uninitialized(path.to_path_buf()));
        }
        if complete_len < bytes.len() as u64 {
            file.set_len(complete_len).map_err(io_err(path))?;
        }
        file.seek(SeekFrom::End(0)).map_err(io_err(path))?;
        let rs = loaded.result_set;
        Ok(Store {
            path: path.to_path_buf(),
            file,
            catalog: rs.mutant_catalog.values().map(|m| (m.id, m.class_name.clone())).collect(),
            results: rs.results().map(|r| r.mutant_id).collect(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn has_result(&self, id: u64) -> bool {
        self.results.contains(&id)
    }

    pub fn result_count(&self) -> usize {
        self.results.len()
    }

    fn check(&self, r: &MutantResult) -> Result<()> {
        let class = self.catalog.get(&r.mutant_id).ok_or(StoreError::UnknownMutant(r.mutant_id))?;
        if *class != r.class_name {
            return Err(StoreError::ClassMismatch {
                id: r.mutant_id,
                expected: class.clone(),
                got: r.class_name.clone(),
            });
        }
        if self.results.contains(&r.mutant_id) {
            return Err(StoreError::DuplicateResult(r.mutant_id));
        }
        Ok(())
    }

    fn write_line(&mut self, rec: &Record) -> Result<()> {
        let mut line = serde_json::to_vec(rec).expect("records always serialize");
        line.push(b'\n');
        self.file.write_all(&line).map_err(io_err(&self.path))
    }

    fn sync(&mut self) -> Result<()> {
        self.file.sync_data().map_err(io_err(&self.path))
    }

    /// Durable on return.
    pub fn append_result(&mut self, result: &MutantResult) -> Result<()> {
        self.append_results(std::slice::from_ref(result))
    }

    /// Append a batch with a single sync at the end. The batch is validated
    /// up front so a rejected result writes nothing.
    pub fn append_results(&mut self, results: &[MutantResult]) -> Result<()> {
        let mut batch = BTreeSet::new();
        for r in results {
            self.check(r)?;
            if !batch.insert(r.mutant_id) {
                return Err(StoreError::DuplicateResult(r.mutant_id));
            }
        }
        for r in results {
            self.write_line(&Record::Result(ResultRecord {
                mutant_id: r.mutant_id,
                class_name: r.class_name.clone(),
                status: r.status,
                duration_ms: r.duration_ms,
            }))?;
            self.results.insert(r.mutant_id);
        }
        self.sync()
    }

    pub fn set_equivalent_override(&mut self, mutant_id: u64, equivalent: bool) -> Result<()> {
        if !self.catalog.contains_key(&mutant_id) {
            return Err(StoreError::UnknownMutant(mutant_id));
        }
        self.write_line(&Record::Override(OverrideRecord { mutant_id, equivalent }))?;
        self.sync()
    }
}

pub fn append_result(store_path: &Path, result: &MutantResult) -> Result<()> {
    Store::open(store_path)?.append_result(result)
}

pub fn set_equivalent_override(store_path: &Path, mutant_id: u64, equivalent: bool) -> Result<()> {
    Store::open(store_path)?.set_equivalent_override(mutant_id, equivalent)
}

/// Advisory per-store lock held for the lifetime of a command. Released by
/// the OS if the process dies.
#[derive(Debug)]
pub struct StoreLock {
    _file: File,
}

impl StoreLock {
    pub fn lock_path(store_path: &Path) -> PathBuf {
        let mut name = store_path.as_os_str().to_owned();
        name.push(".lock");
        PathBuf::from(name)
    }

    pub fn acquire(store_path: &Path) -> Result<StoreLock> {
        let lock_path = Self::lock_path(store_path);
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_path)
            .map_err(io_err(&lock_path))?;
        match file.try_lock() {
            Ok(()) => Ok(StoreLock { _file: file }),
            Err(std::fs::TryLockError::WouldBlock) => Err(StoreError::Locked(store_path.to_path_buf())),
            Err(std::fs::TryLockError::Error(e)) => Err(io_err(&lock_path)(e)),
        }
    }
}

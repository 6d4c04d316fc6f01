//! Append-only release ledger and its on-disk form.
//!
//! A ledger file is one JSON document. Writes go to a temporary file in the
//! same directory (`.<ledger>.tmp`), are synced, then renamed over the
//! ledger, so readers see either the old or the new document. A sidecar
//! `<ledger>.lock` file carries an exclusive lock for the lifetime of a
//! [`LedgerStore`].

use std::fs::{self, File, OpenOptions, TryLockError};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::budget::{compose, Budget, BudgetKind};
use super::json::to_exact_json;
use crate::error::{Error, Result};

/// One release charged against the ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub release_id: String,
    /// ISO-8601 timestamp supplied by the caller.
    pub timestamp: String,
    pub budget: Budget,
    pub mechanism_summary: String,
    pub query_summary: String,
}

#[derive(Deserialize)]
struct RawLedger {
    definition_kind: BudgetKind,
    total_allowance: Budget,
    entries: Vec<LedgerEntry>,
}

/// Budget ledger for a single privacy definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLedger")]
pub struct Ledger {
    definition_kind: BudgetKind,
    total_allowance: Budget,
    entries: Vec<LedgerEntry>,
}

/// What is left of the allowance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Remaining {
    pub budget: Budget,
    /// Set when some component of the spent budget exceeds the allowance.
    pub overspent: bool,
}

impl TryFrom<RawLedger> for Ledger {
    type Error = Error;

    fn try_from(raw: RawLedger) -> Result<Self> {
        let mut ledger = Ledger::new(raw.total_allowance)?;
        if raw.definition_kind != ledger.definition_kind {
            return Err(Error::LedgerKindMismatch {
                expected: raw.definition_kind.tag(),
                found: ledger.definition_kind.tag(),
            });
        }
        for entry in raw.entries {
            ledger.record(entry)?;
        }
        Ok(ledger)
    }
}

impl Ledger {
    /// An empty ledger whose kind is that of the allowance.
    pub fn new(total_allowance: Budget) -> Result<Self> {
        total_allowance.validate()?;
        Ok(Self {
            definition_kind: total_allowance.kind(),
            total_allowance,
            entries: Vec::new(),
        })
    }

    pub fn definition_kind(&self) -> BudgetKind {
        self.definition_kind
    }

    pub fn total_allowance(&self) -> Budget {
        self.total_allowance
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    /// Appends an entry. On error the ledger is unchanged.
    ///
    /// Returns whether the ledger is overspent after the append. Overspending
    /// is reported, not refused.
    pub fn record(&mut self, entry: LedgerEntry) -> Result<bool> {
        entry.budget.validate_release()?;
        if entry.budget.kind() != self.definition_kind {
            return Err(Error::LedgerKindMismatch {
                expected: self.definition_kind.tag(),
                found: entry.budget.kind().tag(),
            });
        }
        if let (Budget::Renyi { alpha: a0, .. }, Budget::Renyi { alpha, .. }) =
            (self.total_allowance, entry.budget)
        {
            if alpha != a0 {
                return Err(Error::MixedRenyiOrder {
                    first: a0,
                    other: alpha,
                });
            }
        }
        if self
            .entries
            .iter()
            .any(|e| e.release_id == entry.release_id)
        {
            return Err(Error::DuplicateRelease(entry.release_id));
        }
        self.entries.push(entry);
        Ok(self.remaining().overspent)
    }

    /// Composition of every recorded budget, or `None` for an empty ledger.
    pub fn spent(&self) -> Option<Budget> {
        if self.entries.is_empty() {
            return None;
        }
        let budgets: Vec<Budget> = self.entries.iter().map(|e| e.budget).collect();
        Some(compose(&budgets).expect("entries are validated on record"))
    }

    /// Allowance minus spending, inverting the composition rule of each
    /// component: square-root rows subtract in squares, additive rows
    /// subtract linearly. Components are clamped at zero.
    pub fn remaining(&self) -> Remaining {
        let Some(spent) = self.spent() else {
            return Remaining {
                budget: self.total_allowance,
                overspent: false,
            };
        };
        let linear = |total: f64, used: f64| (total - used).max(0.0);
        let root = |total: f64, used: f64| (total * total - used * used).max(0.0).sqrt();
        let total = self.total_allowance.params();
        let used = spent.params();
        let overspent = total.iter().zip(&used).enumerate().any(|(i, (t, u))| {
            // the Rényi order is a label, not a spendable component
            !(self.definition_kind == BudgetKind::Renyi && i == 0) && u > t
        });
        let budget = match (self.total_allowance, spent) {
            (Budget::Pure { epsilon: t }, Budget::Pure { epsilon: u }) => Budget::Pure {
                epsilon: linear(t, u),
            },
            (
                Budget::Approx {
                    epsilon: te,
                    delta: td,
                },
                Budget::Approx {
                    epsilon: ue,
                    delta: ud,
                },
            ) => Budget::Approx {
                epsilon: linear(te, ue),
                delta: linear(td, ud),
            },
            (Budget::Kl { alpha: t }, Budget::Kl { alpha: u }) => Budget::Kl {
                alpha: linear(t, u),
            },
            (Budget::Mcdp { mu: tm, tau: tt }, Budget::Mcdp { mu: um, tau: ut }) => Budget::Mcdp {
                mu: linear(tm, um),
                tau: root(tt, ut),
            },
            (Budget::Zcdp { rho: t }, Budget::Zcdp { rho: u }) => {
                Budget::Zcdp { rho: linear(t, u) }
            }
            (Budget::Renyi { alpha, epsilon: t }, Budget::Renyi { epsilon: u, .. }) => {
                Budget::Renyi {
                    alpha,
                    epsilon: linear(t, u),
                }
            }
            (Budget::Gdp { mu: t }, Budget::Gdp { mu: u }) => Budget::Gdp { mu: root(t, u) },
            (Budget::Rao { theta: t }, Budget::Rao { theta: u }) => {
                Budget::Rao { theta: root(t, u) }
            }
            _ => unreachable!("ledger entries share the allowance kind"),
        };
        Remaining { budget, overspent }
    }

    /// The ledger as a JSON document with exact floats.
    pub fn to_json(&self) -> String {
        to_exact_json(self).expect("ledger values are finite")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::LedgerIo {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads and validates a ledger file.
pub fn load_ledger(path: &Path) -> Result<Ledger> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ledger::from_json(&text).map_err(|source| Error::LedgerFormat {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the ledger atomically: temp file, fsync, rename, directory fsync.
pub fn save_ledger(path: &Path, ledger: &Ledger) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::LedgerIo {
            path: path.to_path_buf(),
            source: std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                "ledger path has no file name",
            ),
        })?
        .to_string_lossy()
        .into_owned();
    // Writers hold the ledger lock, so one fixed temp name is enough.
    let tmp = dir.join(format!(".{name}.tmp"));
    let write = || -> std::io::Result<()> {
        let mut f = File::create(&tmp)?;
        f.write_all(ledger.to_json().as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)?;
        if let Ok(d) = File::open(&dir) {
            let _ = d.sync_all();
        }
        Ok(())
    };
    write().map_err(|source| {
        let _ = fs::remove_file(&tmp);
        Error::LedgerIo {
            path: path.to_path_buf(),
            source,
        }
    })
}

/// A ledger file held open under an exclusive lock.
#[derive(Debug)]
pub struct LedgerStore {
    path: PathBuf,
    ledger: Ledger,
    _lock: File,
}

impl LedgerStore {
    fn lock(path: &Path) -> Result<File> {
        let mut lock_path = path.as_os_str().to_owned();
        lock_path.push(".lock");
        let lock_path = PathBuf::from(lock_path);
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_path)
            .map_err(io_err(&lock_path))?;
        match file.try_lock() {
            Ok(()) => Ok(file),
            Err(TryLockError::WouldBlock) => Err(Error::LedgerLocked {
                path: path.to_path_buf(),
            }),
            Err(TryLockError::Error(source)) => Err(Error::LedgerIo {
                path: lock_path,
                source,
            }),
        }
    }

    /// Creates a new, empty ledger file. Fails if the file already exists.
    pub fn create(path: impl AsRef<Path>, total_allowance: Budget) -> Result<Self> {
        let path = path.as_ref();
        let lock = Self::lock(path)?;
        if path.exists() {
            return Err(Error::LedgerIo {
                path: path.to_path_buf(),
                source: std::io::Error::new(
                    std::io::ErrorKind::AlreadyExists,
                    "ledger already exists",
                ),
            });
        }
        let ledger = Ledger::new(total_allowance)?;
        save_ledger(path, &ledger)?;
        Ok(Self {
            path: path.to_path_buf(),
            ledger,
            _lock: lock,
        })
    }

    /// Opens an existing ledger file.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let lock = Self::lock(path)?;
        let ledger = load_ledger(path)?;
        Ok(Self {
            path: path.to_path_buf(),
            ledger,
            _lock: lock,
        })
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends an entry and persists the ledger before returning. If the write
    /// fails, neither the file nor the in-memory ledger changes.
    pub fn record(&mut self, entry: LedgerEntry) -> Result<bool> {
        let mut next = self.ledger.clone();
        let overspent = next.record(entry)?;
        save_ledger(&self.path, &next)?;
        self.ledger = next;
        Ok(overspent)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str, budget: Budget) -> LedgerEntry {
        LedgerEntry {
            release_id: id.into(),
            timestamp: "2024-01-01T00:00:00Z".into(),
            budget,
            mechanism_summary: "laplace".into(),
            query_summary: "count".into(),
        }
    }

    #[test]
    fn rao_running_total() {
        let mut l = Ledger::new(Budget::Rao { theta: 1.0 }).unwrap();
        l.record(entry("a", Budget::Rao { theta: 0.3 })).unwrap();
        l.record(entry("b", Budget::Rao { theta: 0.4 })).unwrap();
        assert_eq!(l.spent(), Some(Budget::Rao { theta: 0.5 }));
    }

    #[test]
    fn remaining_rules() {
        let mut l = Ledger::new(Budget::Rao { theta: 1.0 }).unwrap();
        l.record(entry("a", Budget::Rao { theta: 0.6 })).unwrap();
        let Budget::Rao { theta } = l.remaining().budget else {
            panic!()
        };
        assert!((theta - 0.8).abs() < 1e-15);

        let mut l = Ledger::new(Budget::Pure { epsilon: 1.0 }).unwrap();
        l.record(entry("a", Budget::Pure { epsilon: 0.3 })).unwrap();
        l.record(entry("b", Budget::Pure { epsilon: 0.3 })).unwrap();
        let Budget::Pure { epsilon } = l.remaining().budget else {
            panic!()
        };
        assert!((epsilon - 0.4).abs() < 1e-15);
    }

    #[test]
    fn overspend_is_flagged() {
        let mut l = Ledger::new(Budget::Rao { theta: 1.0 }).unwrap();
        assert!(!l.record(entry("a", Budget::Rao { theta: 0.9 })).unwrap());
        assert!(l.record(entry("b", Budget::Rao { theta: 0.9 })).unwrap());
        let r = l.remaining();
        assert!(r.overspent);
        assert_eq!(r.budget, Budget::Rao { theta: 0.0 });
    }

    #[test]
    fn duplicate_and_mismatch_leave_ledger_unchanged() {
        let mut l = Ledger::new(Budget::Rao { theta: 1.0 }).unwrap();
        l.record(entry("a", Budget::Rao { theta: 0.1 })).unwrap();
        let before = l.clone();
        assert!(matches!(
            l.record(entry("a", Budget::Rao { theta: 0.2 })),
            Err(Error::DuplicateRelease(_))
        ));
        assert!(matches!(
            l.record(entry("b", Budget::Pure { epsilon: 0.2 })),
            Err(Error::LedgerKindMismatch { .. })
        ));
        assert!(l.record(entry("c", Budget::Rao { theta: 0.0 })).is_err());
        assert_eq!(l, before);
    }

    #[test]
    fn renyi_order_must_match_allowance() {
        let mut l = Ledger::new(Budget::Renyi {
            alpha: 2.0,
            epsilon: 1.0,
        })
        .unwrap();
        assert!(l
            .record(entry(
                "a",
                Budget::Renyi {
                    alpha: 3.0,
                    epsilon: 0.1
                }
            ))
            .is_err());
        l.record(entry(
            "b",
            Budget::Renyi {
                alpha: 2.0,
                epsilon: 0.4,
            },
        ))
        .unwrap();
        let r = l.remaining();
        assert!(!r.overspent);
        assert_eq!(
            r.budget,
            Budget::Renyi {
                alpha: 2.0,
                epsilon: 0.6
            }
        );
    }

    #[test]
    fn store_round_trip_and_lock() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.json");
        {
            let mut s = LedgerStore::create(&path, Budget::Rao { theta: 2.0 }).unwrap();
            assert!(matches!(
                LedgerStore::open(&path),
                Err(Error::LedgerLocked { .. })
            ));
            s.record(entry("a", Budget::Rao { theta: 0.1 })).unwrap();
            s.record(entry("b", Budget::Rao { theta: 1.0 / 3.0 }))
                .unwrap();
        }
        let s = LedgerStore::open(&path).unwrap();
        let fresh = load_ledger(&path).unwrap();
        assert_eq!(s.ledger(), &fresh);
        assert_eq!(fresh.entries().len(), 2);
        let Budget::Rao { theta } = fresh.entries()[1].budget else {
            panic!()
        };
        assert_eq!(theta.to_bits(), (1.0f64 / 3.0).to_bits());
        assert!(LedgerStore::create(&path, Budget::Rao { theta: 1.0 }).is_err());
    }

    #[test]
    fn rejects_inconsistent_documents() {
        let doc = r#"{"definition_kind":"pure","total_allowance":{"kind":"rao","params":{"theta":1}},"entries":[]}"#;
        assert!(Ledger::from_json(doc).is_err());
        let doc = r#"{"definition_kind":"rao","total_allowance":{"kind":"rao","params":{"theta":1}},"entries":[
            {"release_id":"a","timestamp":"t","budget":{"kind":"rao","params":{"theta":0.1}},"mechanism_summary":"","query_summary":""},
            {"release_id":"a","timestamp":"t","budget":{"kind":"rao","params":{"theta":0.1}},"mechanism_summary":"","query_summary":""}]}"#;
        assert!(Ledger::from_json(doc).is_err());
    }
}

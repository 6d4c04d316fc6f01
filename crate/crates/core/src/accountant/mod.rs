//! Privacy budgets across several definitions: composition, the few
//! conversions that hold for a specific mechanism, and a persistent ledger.
//!
//! Budgets are charged when a value is released. Anything computed from a
//! released value afterwards is free, so the ledger has no notion of
//! derived outputs.

pub mod budget;
pub mod json;
pub mod ledger;

pub use budget::{compose, convert, Budget, BudgetKind, ConversionTarget};
pub use json::to_exact_json;
pub use ledger::{load_ledger, save_ledger, Ledger, LedgerEntry, LedgerStore, Remaining};

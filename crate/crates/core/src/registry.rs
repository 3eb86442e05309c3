//! Name-keyed lookup tables for interchangeable strategies.
//!
//! Each algorithm family (rate fitters, rate-constrained optimizers, layer
//! orderers, predictor matrices) exposes a `Registry` so front ends can pick a
//! variant from a config value or command-line flag.

use crate::error::{Error, Result};

pub struct Registry<T> {
    kind: &'static str,
    entries: Vec<(&'static str, T)>,
}

impl<T> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: Vec::new(),
        }
    }

    /// Adds an entry. A later registration under the same name replaces the
    /// earlier one.
    pub fn register(&mut self, name: &'static str, entry: T) -> &mut Self {
        let key = normalize(name);
        if let Some(slot) = self.entries.iter_mut().find(|(n, _)| normalize(n) == key) {
            *slot = (name, entry);
        } else {
            self.entries.push((name, entry));
        }
        self
    }

    /// Looks up an entry. Matching ignores ASCII case, `#`, `-` and `_`, so
    /// `SVC#1`, `svc1` and `Svc-1` all resolve to the same entry.
    pub fn get(&self, name: &str) -> Result<&T> {
        let key = normalize(name);
        self.entries
            .iter()
            .find(|(n, _)| normalize(n) == key)
            .map(|(_, e)| e)
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &T)> {
        self.entries.iter().map(|(n, e)| (*n, e))
    }
}

fn normalize(name: &str) -> String {
    name.chars()
        .filter(|c| !matches!(c, '#' | '-' | '_' | ' '))
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

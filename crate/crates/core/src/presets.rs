//! Bundled example substitutions.

use crate::dsl;
use crate::error::{Error, Result};
use crate::substitution::Substitution;

pub const PRESETS: &[(&str, &str)] = &[
    ("fibonacci", "0 -> 01\n1 -> 0\n"),
    ("tribonacci", "1 -> 12\n2 -> 13\n3 -> 1\n"),
    ("thue-morse", "0 -> 01\n1 -> 10\n"),
    ("paper-1123", "1 -> 1123\n2 -> 211\n3 -> 21\n"),
    ("paper-001", "0 -> 001\n1 -> 10\n"),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn load(name: &str) -> Result<Substitution> {
    let text = source(name).ok_or_else(|| {
        Error::Config(format!(
            "unknown preset {name:?}; available: {}",
            names().collect::<Vec<_>>().join(", ")
        ))
    })?;
    dsl::parse(text)
}

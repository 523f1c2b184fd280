//! Suffix-stripping stemmer for the METEOR stem stage.
//!
//! This is the Snowball English stemmer (Porter2), as implemented by the
//! `rust-stemmers` crate. Its rule tables are fixed by that algorithm, so
//! output is stable for a given crate version.

use std::sync::OnceLock;

use rust_stemmers::{Algorithm, Stemmer};

fn stemmer() -> &'static Stemmer {
    static STEMMER: OnceLock<Stemmer> = OnceLock::new();
    STEMMER.get_or_init(|| Stemmer::create(Algorithm::English))
}

/// Stem a lowercase token.
pub fn stem(token: &str) -> String {
    stemmer().stem(token).into_owned()
}

//! The HTTP assessment service and the `hangul-coach` command line, both
//! thin layers over the `hangul-coach` library.

pub mod cli;
pub mod config;
pub mod service;

// Listings from the guide's service chapter, run as doc-tests.
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/service-and-cli.md")]
mod book_service_and_cli {}

//! Home of the workspace acceptance run (`tests/acceptance.rs`).
//!
//! The acceptance target prints one `PASS`/`FAIL` line per criterion and
//! exits non-zero when any criterion fails. It lives in its own package so
//! that `cargo test --workspace` runs the unit, property and CLI suites
//! before it.

//! Acceptance checks for the blockdl workspace; see `tests/acceptance.rs`.

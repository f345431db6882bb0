//! Threshold presence checking and private subset commitments.
//!
//! This crate provides two related primitives:
//!
//! * [`threshold`]: an s-of-n presence scheme. A key is expanded into
//!   fountain-coded symbols ([`fountain`]) and dealt out as fixed-size
//!   fragments, one per group member. Fragment sizes are chosen so that
//!   pooling any `s` fragments yields enough symbols to decode the key
//!   with very high probability, while any `s - 1` fragments pool fewer
//!   than `k` symbols and can never decode it.
//! * [`commitment`]: a private subset scheme. Each object in a universe
//!   gets a semiprime modulus `i = j * k` and a mod-10 digit-sum tag that
//!   encodes selected / not-selected. The selection stays hidden until the
//!   prime pairs are revealed, after which anyone can verify it. RSA-style
//!   receipts let the receiving party prove what was submitted.
//!
//! The [`cli`] module exposes both schemes as subcommands operating on the
//! file formats defined in [`threshold::format`] and [`commitment::format`].

pub mod cli;
pub mod commitment;
pub mod config;
pub mod fountain;
pub mod overhead;
pub mod threshold;

pub use overhead::Overhead;

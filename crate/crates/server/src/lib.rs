// SPDX-License-Identifier: Apache-2.0

//! Debug server. A [`session::Session`] applies protocol requests to one
//! debugger core; [`transport::serve`] exposes it over WebSocket to any
//! number of clients, and [`client::Client`] is the matching blocking
//! client.
//!
//! Requests are applied in arrival order. Resume commands answer at once
//! and later broadcast `resumed` followed by `stopped`, `ended` or `error`
//! to every connected client.

pub mod client;
pub mod protocol;
pub mod session;
pub mod transcript;
pub mod transport;

pub use client::Client;
pub use protocol::Envelope;
pub use session::Session;
pub use transport::{default_port, serve, ServerHandle};

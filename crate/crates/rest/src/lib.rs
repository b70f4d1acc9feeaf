// SPDX-License-Identifier: Apache-2.0

//! HTTP/JSON northbound interface: one intent per request, submitted
//! synchronously so the response carries the settled state.

pub mod client;
pub mod doc;
pub mod server;

pub use client::{ClientError, RestClient};
pub use doc::{
    BatchRequestDocument, BatchResultDocument, DocumentError, ErrorDocument, HealthDocument, IntentRequestDocument,
    IntentResponseDocument, SelectorDocument,
};
pub use server::{router, serve, RestServer, DEFAULT_LISTEN};

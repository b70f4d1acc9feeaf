// SPDX-License-Identifier: Apache-2.0

//! Blocking client for the REST northbound. One client keeps one
//! connection pool, so sequential requests reuse a warm connection.

use std::time::Duration;

use reqwest::blocking::{Client, Response};
use reqwest::{Method, StatusCode};
use serde::de::DeserializeOwned;
use thiserror::Error;

use crate::doc::{
    BatchRequestDocument, BatchResultDocument, ErrorDocument, HealthDocument, IntentRequestDocument,
    IntentResponseDocument,
};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("REST endpoint {endpoint} unreachable: {source}")]
    Unreachable {
        endpoint: String,
        #[source]
        source: reqwest::Error,
    },
    #[error("HTTP {status}: {message}")]
    Status { status: u16, message: String },
    #[error("unexpected response body: {0}")]
    Decode(String),
}

impl ClientError {
    pub fn status(&self) -> Option<u16> {
        match self {
            Self::Status { status, .. } => Some(*status),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RestClient {
    base: String,
    http: Client,
}

impl RestClient {
    /// `endpoint` is `host:port` or a full `http://` URL.
    pub fn new(endpoint: &str) -> Result<Self, ClientError> {
        let base = if endpoint.contains("://") {
            endpoint.trim_end_matches('/').to_string()
        } else {
            format!("http://{}", endpoint.trim_end_matches('/'))
        };
        let http = Client::builder()
            .connect_timeout(Duration::from_secs(2))
            .pool_max_idle_per_host(1)
            .build()
            .map_err(|source| ClientError::Unreachable {
                endpoint: base.clone(),
                source,
            })?;
        Ok(Self { base, http })
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    /// Send a request and return status and body verbatim.
    pub fn raw(&self, method: Method, path: &str, body: Option<&str>) -> Result<(u16, String), ClientError> {
        let response = self.send(method, path, body.map(|b| b.as_bytes().to_vec()))?;
        let status = response.status().as_u16();
        let text = response.text().map_err(|e| ClientError::Decode(e.to_string()))?;
        Ok((status, text))
    }

    fn send(&self, method: Method, path: &str, body: Option<Vec<u8>>) -> Result<Response, ClientError> {
        let mut request = self.http.request(method, format!("{}{}", self.base, path));
        if let Some(body) = body {
            request = request
                .header(reqwest::header::CONTENT_TYPE, "application/json")
                .body(body);
        }
        request.send().map_err(|source| ClientError::Unreachable {
            endpoint: self.base.clone(),
            source,
        })
    }

    fn expect(response: Response, want: StatusCode) -> Result<Response, ClientError> {
        if response.status() == want {
            return Ok(response);
        }
        let status = response.status().as_u16();
        let text = response.text().unwrap_or_default();
        let message = serde_json::from_str::<ErrorDocument>(&text)
            .map(|e| e.error)
            .unwrap_or(text);
        Err(ClientError::Status { status, message })
    }

    fn decode<T: DeserializeOwned>(response: Response) -> Result<T, ClientError> {
        let bytes = response.bytes().map_err(|e| ClientError::Decode(e.to_string()))?;
        serde_json::from_slice(&bytes).map_err(|e| ClientError::Decode(e.to_string()))
    }

    fn json_body<T: serde::Serialize>(value: &T) -> Vec<u8> {
        serde_json::to_vec(value).expect("documents serialize")
    }

    pub fn health(&self) -> Result<HealthDocument, ClientError> {
        let response = self.send(Method::GET, "/health", None)?;
        Self::decode(Self::expect(response, StatusCode::OK)?)
    }

    pub fn submit(&self, request: &IntentRequestDocument) -> Result<IntentResponseDocument, ClientError> {
        let response = self.send(Method::POST, "/intents", Some(Self::json_body(request)))?;
        Self::decode(Self::expect(response, StatusCode::CREATED)?)
    }

    pub fn submit_batch(&self, batch: &BatchRequestDocument) -> Result<BatchResultDocument, ClientError> {
        let response = self.send(Method::POST, "/intents/batch", Some(Self::json_body(&batch.to_json())))?;
        Self::decode(Self::expect(response, StatusCode::CREATED)?)
    }

    pub fn list(&self) -> Result<Vec<IntentResponseDocument>, ClientError> {
        let response = self.send(Method::GET, "/intents", None)?;
        Self::decode(Self::expect(response, StatusCode::OK)?)
    }

    pub fn get(&self, id: &str) -> Result<IntentResponseDocument, ClientError> {
        let response = self.send(Method::GET, &format!("/intents/{id}"), None)?;
        Self::decode(Self::expect(response, StatusCode::OK)?)
    }

    pub fn withdraw(&self, id: &str) -> Result<(), ClientError> {
        let response = self.send(Method::DELETE, &format!("/intents/{id}"), None)?;
        Self::expect(response, StatusCode::NO_CONTENT).map(drop)
    }

    /// Withdraw and forget every intent on the server.
    pub fn reset(&self) -> Result<(), ClientError> {
        let response = self.send(Method::POST, "/reset", None)?;
        Self::expect(response, StatusCode::NO_CONTENT).map(drop)
    }
}

//! Expose the router over HTTP.
//!
//! Run with: cargo run --example serve -- 127.0.0.1:8080
//! Then:     curl -s localhost:8080/healthz
//!           curl -s -X POST localhost:8080/route -H 'content-type: application/json' \
//!                -d '{"request_id":"r1","text":"summarize the passage below in a few sentences\nthe hotel tour was long."}'

use std::sync::Arc;

use greenserv::service::{serve, RouterService, ServiceConfig};

#[tokio::main]
async fn main() -> greenserv::error::Result<()> {
    let addr = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "127.0.0.1:8080".into())
        .parse()
        .expect("address must look like host:port");
    let service = Arc::new(RouterService::from_config(ServiceConfig::default())?);
    serve(service, addr).await
}

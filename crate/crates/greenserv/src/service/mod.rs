//! Production-shaped routing facade: wire API types, the deferred-feedback
//! service core, an append-only decision log with replay, and the HTTP layer.

pub mod config;
pub mod core;
pub mod http;
pub mod log;

pub use config::ServiceConfig;
pub use core::{
    default_pipeline, FeedbackAck, FeedbackReport, PoolOp, RouteRequest, RouteResponse,
    RouterService, ServiceError, ServiceResult, StatsSnapshot,
};
pub use http::{app, serve};
pub use log::{replay, DecisionLog, LogRecord, ServiceDecisionRecord};

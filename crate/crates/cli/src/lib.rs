//! Documents, workspace, command line and HTTP service for `mvl-core`.

pub mod commands;
pub mod docs;
pub mod server;
pub mod views;
pub mod workspace;

//! Network side of GroundLink: the session server and the headless editor
//! client used by the `groundlink` binary and by protocol tests.

pub mod client;
pub mod server;

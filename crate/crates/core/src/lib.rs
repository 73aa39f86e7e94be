pub mod harness;
pub mod middleware;
pub mod net;
pub mod protocols;
pub mod scenario;
pub mod sim;
pub mod world;

pub mod common;
pub mod encode;
pub mod eval;
pub mod replay;
pub mod search;
pub mod serve;
pub mod synth;
pub mod train;

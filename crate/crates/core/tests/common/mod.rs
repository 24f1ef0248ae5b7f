#![allow(dead_code)]

pub mod harness;
pub mod oracle;
pub mod train;

#![allow(dead_code)]
pub mod hands;
pub mod oracle;

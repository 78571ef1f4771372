#![allow(dead_code)]

pub mod dd;
pub mod gillespie;
pub mod oracle;

#![no_std]
extern crate alloc;

pub fn smoke() -> f64 { libm::sqrt(4.0) }

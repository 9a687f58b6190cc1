fn main() { println!("{}", aweq_core::smoke()); }

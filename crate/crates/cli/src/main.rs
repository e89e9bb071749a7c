fn main() { std::process::exit(wetting_lab::run(&std::env::args().collect::<Vec<_>>())); }

fn main() { std::process::exit(sumset_core::cli::main()) }

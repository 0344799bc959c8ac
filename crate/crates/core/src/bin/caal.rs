fn main() {
    if let Err(e) = caal::cli::main() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn main() {
    std::process::exit(qctx::cli::main_entry());
}

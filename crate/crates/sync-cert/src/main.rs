fn main() {
    std::process::exit(sync_cert::cli::main_entry());
}

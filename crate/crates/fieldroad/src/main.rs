fn main() {
    std::process::exit(fieldroad::cli::run_cli());
}

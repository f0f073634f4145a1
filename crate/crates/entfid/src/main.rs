fn main() {
    std::process::exit(entfid::cli::run());
}

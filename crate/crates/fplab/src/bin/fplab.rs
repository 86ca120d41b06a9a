fn main() {
    std::process::exit(fplab::cli::run());
}

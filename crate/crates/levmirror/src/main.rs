fn main() {
    std::process::exit(levmirror::cli::run());
}

fn main() {
    std::process::exit(atomlab::cli::parse_and_dispatch(std::env::args_os()));
}

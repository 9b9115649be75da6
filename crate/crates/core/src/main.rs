fn main() {
    std::process::exit(texlab::cli::run(std::env::args_os()));
}

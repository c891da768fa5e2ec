fn main() {
    let code = twmdg::cli::run(std::env::args_os());
    std::process::exit(code);
}

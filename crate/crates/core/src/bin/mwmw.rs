fn main() {
    std::process::exit(mwmw::cli::main_with_args(std::env::args_os()));
}

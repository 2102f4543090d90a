fn main() {
    std::process::exit(pushd::cli::run_main(std::env::args_os()));
}

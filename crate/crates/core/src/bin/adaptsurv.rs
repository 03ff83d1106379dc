fn main() {
    std::process::exit(adaptsurv::cli_io::dispatch(std::env::args_os()));
}

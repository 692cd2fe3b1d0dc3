fn main() {
    std::process::exit(evtuple::cli::run(std::env::args_os()));
}

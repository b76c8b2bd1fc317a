fn main() {
    std::process::exit(mconc::run(std::env::args_os()));
}

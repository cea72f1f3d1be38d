fn main() {
    std::process::exit(cqpc::run(std::env::args_os()));
}

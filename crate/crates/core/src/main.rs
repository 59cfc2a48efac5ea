fn main() {
    std::process::exit(kexprint::cli::run(std::env::args_os()));
}

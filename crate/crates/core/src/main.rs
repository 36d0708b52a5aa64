fn main() {
    std::process::exit(spinrelax::cli::run(std::env::args_os()));
}

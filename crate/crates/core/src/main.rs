fn main() {
    std::process::exit(bicolloc_core::cli::main(std::env::args_os()));
}

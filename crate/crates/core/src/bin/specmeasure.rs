fn main() {
    std::process::exit(specmeasure::cli::main(std::env::args_os()));
}

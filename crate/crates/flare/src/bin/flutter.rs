fn main() {
    std::process::exit(flare::flutter::main_with(std::env::args_os()));
}

fn main() {
    std::process::exit(trichotomy::driver::main());
}

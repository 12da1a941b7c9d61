fn main() {
    std::process::exit(deepwave::run());
}

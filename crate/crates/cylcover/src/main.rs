fn main() {
    std::process::exit(cylcover::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(bibmap::cli::main_from_env());
}

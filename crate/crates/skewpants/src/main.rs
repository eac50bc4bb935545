fn main() {
    std::process::exit(skewpants::cli_main());
}

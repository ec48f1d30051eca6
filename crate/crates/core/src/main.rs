fn main() {
    std::process::exit(pdvoice::app::run(std::env::args_os()));
}

fn main() {
    std::process::exit(mmcvae::cli::run(std::env::args_os()));
}

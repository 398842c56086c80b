fn main() {
    std::process::exit(fractal_pressure_cli::entry(std::env::args_os().skip(1)));
}

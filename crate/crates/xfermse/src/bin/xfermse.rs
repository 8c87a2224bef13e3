//! Thin executable wrapper; all behavior lives in `xfermse::cli`.

fn main() {
    std::process::exit(xfermse::cli::run());
}

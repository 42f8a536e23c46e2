fn main() {
    eprintln!("ckforge: not wired up yet");
    std::process::exit(2);
}

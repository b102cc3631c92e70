fn main() {
    // Placeholder until the CLI surface lands; keeps the workspace building.
    eprintln!("qcd: command-line interface not yet wired up");
    std::process::exit(2);
}

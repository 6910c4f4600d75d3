fn main() -> anyhow::Result<()> {
    tuneblas_cli::tune::main(tuneblas::KernelFamily::Dot)
}

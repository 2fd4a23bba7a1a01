fn main() {
    thermoflow::bench::cli_main();
}

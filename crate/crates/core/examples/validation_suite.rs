//! The certificate and criterion table printed by `capjet validate-paper`.

fn main() {
    let report = capjet::validation::validate_all();
    print!("{}", report.table());
    println!("all passed: {}", report.all_passed());
}

//! Modified Bessel functions across the series/asymptotic crossover.

use capjet::special::{bessel_i, i0, i1, ratio_i1_i0, SERIES_CROSSOVER};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("crossover at x = {SERIES_CROSSOVER}");
    for x in [1e-3, 0.5, 2.0, 19.9, 20.1, 100.0, 600.0] {
        println!(
            "x = {x:>8}: I0 = {:.15e}, I1 = {:.15e}, I2 = {:.15e}, I1/I0 = {:.15}",
            i0(x),
            i1(x),
            bessel_i(2, x)?,
            ratio_i1_i0(x)
        );
    }
    Ok(())
}

//! Closed-form speeds, root-count classification and inequality
//! certificates for constant vorticity.

use capjet::closed_form::{
    certify_inequalities, classify_root_count, critical_xi_numeric, ConstVortCase, GridSpec, Sign, XI_CRITICAL,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (d, sigma, gamma) in [(1.0, 1.0, 1.0), (1.0, 0.3, 2.0), (1.0, 0.1, 2.0)] {
        let case = ConstVortCase::new(d, sigma, gamma, None)?;
        println!("xi = {:.5}, x1 = {:?}, y- = {:?}, y+ = {:?}", case.xi, case.x1, case.y_minus, case.y_plus);
        for x in [0.5, 1.5, 3.0] {
            if x < case.x_min() {
                continue;
            }
            println!("  x = {x}: b+ = {:.8}, b- = {:.8}", case.b_pm(x, Sign::Plus)?, case.b_pm(x, Sign::Minus)?);
        }
        if case.xi < XI_CRITICAL {
            let (x, b) = case.extremum_b_minus()?;
            println!("  max b- = {b:.8} at x = {x:.6}: {:?}", classify_root_count(b - 0.01, &case)?);
        }
    }
    println!("curvature flip at xi = {:.12} (16/81 = {:.12})", critical_xi_numeric()?, XI_CRITICAL);
    for r in certify_inequalities(&GridSpec::default()).rows {
        println!("{:>20}: min margin {:.4e} at x = {:.4e}, holds {}", r.name, r.min_margin, r.argmin, r.holds);
    }
    Ok(())
}

//! More scenarios per iteration mean fewer repetitions but a bigger program
//! each time. Print the curve and the smallest N meeting a repetitions target.

use rsd::dimensioning::tradeoff_curve;
use rsd::Probability;

fn main() -> Result<(), rsd::Error> {
    let eps_prime = Probability::new(0.0035)?;
    let points = tradeoff_curve(11, eps_prime, (1500, 4000), 24)?;

    println!("{:>8}  {}", "N", "expected repetitions <=");
    let mut pick = None;
    for p in &points {
        match p.expected_repetitions_bound {
            Some(bound) => {
                println!("{:>8}  {:.3}", p.scenarios, bound);
                if bound <= 10.0 && pick.is_none() {
                    pick = Some(p.scenarios);
                }
            }
            None => println!("{:>8}  unbounded", p.scenarios),
        }
    }
    match pick {
        Some(n) => println!("first grid point with a bound <= 10: N = {n}"),
        None => println!("no grid point meets the target; extend the range"),
    }
    Ok(())
}

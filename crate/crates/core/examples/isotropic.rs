//! Lower and upper bounds for a few two-qubit isotropic states.

use drbound::entropic::{isotropic_holevo_closed_form, upper_bound_min, FwConfig};
use drbound::states::isotropic;

fn main() -> drbound::Result<()> {
    let cfg = FwConfig::default();
    println!("{:>5} {:>12} {:>12}", "p", "holevo", "upper");
    for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let rho = isotropic::<f64>(2, p)?;
        let lower = isotropic_holevo_closed_form(2, p)?;
        let upper = upper_bound_min(&rho, &cfg)?;
        println!("{p:>5} {lower:>12.6} {:>12.6}", upper.value_bits);
    }
    Ok(())
}

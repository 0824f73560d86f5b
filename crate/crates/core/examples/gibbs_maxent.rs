//! Shannon maximum entropy for a loaded die, with the thermodynamic
//! identities checked by finite differences.

use std::sync::Arc;

use qentropy::{
    solve_maxent, thermo_residuals, uniform_partition, ConstraintSet, ReferenceMeasure, Result, SolverOptions,
};

fn main() -> Result<()> {
    let faces: Vec<f64> = (1..=6).map(f64::from).collect();
    let constraints = ConstraintSet::ordinary(vec![faces], vec![4.5])?;
    let partition = Arc::new(uniform_partition(6, ReferenceMeasure::Counting)?);
    let options = SolverOptions::default();
    let sol = solve_maxent(&constraints, Arc::clone(&partition), options)?;

    println!("beta = {:.10}", sol.beta[0]);
    println!("ln Z = {:.10}", sol.log_z);
    println!("pmf  = {:.4?}", sol.density.values());
    println!(
        "S    = {:.10} (identity residual {:.1e})",
        sol.entropy, sol.max_entropy_residual
    );

    let thermo = thermo_residuals(&sol, &constraints, partition, 1e-4, options)?;
    println!("d ln Z / d beta + <u>  = {:.2e}", thermo.grad_residual[0]);
    println!("d S / d <u> - beta     = {:.2e}", thermo.sensitivity_residual[0]);
    Ok(())
}

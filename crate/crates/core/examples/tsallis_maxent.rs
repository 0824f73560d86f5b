//! Tsallis maximum entropy under an escort constraint, with the
//! self-consistency identities of the solution.

use std::sync::Arc;

use qentropy::{
    induced_pmf, solve_tsallis_maxent, tsallis_thermo, uniform_partition, ConstraintSet, DeformationIndex,
    ReferenceMeasure, Result, TsallisOptions,
};

fn main() -> Result<()> {
    let partition = Arc::new(uniform_partition(5, ReferenceMeasure::Counting)?);
    let levels = vec![0.0, 1.0, 2.0, 3.0, 4.0];
    let options = TsallisOptions::default();
    for q in [0.5, 1.5, 2.0] {
        let idx = DeformationIndex::new(q)?;
        let constraints = ConstraintSet::escort(vec![levels.clone()], vec![1.2], idx)?;
        let sol = solve_tsallis_maxent(&constraints, Arc::clone(&partition), options)?;
        println!("q = {q}");
        println!("  pmf     = {:.5?}", induced_pmf(&sol.density).masses());
        println!("  beta    = {:.8}, beta_q = {:.8}", sol.beta[0], sol.beta_q[0]);
        println!("  Zbar    = {:.8}, S_q = {:.8}", sol.zbar, sol.entropy_q);
        for (name, r) in &sol.identity_residuals {
            println!("  {name:<22} {r:.2e}");
        }
        let thermo = tsallis_thermo(&sol, &constraints, Arc::clone(&partition), 1e-4, options)?;
        println!(
            "  ln_q Z_q = {:.8}, gradient residual {:.2e}, sensitivity residual {:.2e}",
            thermo.lnq_zq, thermo.grad_residual[0], thermo.sensitivity_residual[0]
        );
    }
    Ok(())
}

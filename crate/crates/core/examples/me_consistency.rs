//! Maximizing the discrete Tsallis entropy and the measure-relative one
//! against the uniform probability measure picks the same pmf.

use qentropy::{me_consistency, DeformationIndex, Result, TsallisOptions};

fn main() -> Result<()> {
    let u = vec![0.0, 1.0, 2.0, 5.0];
    for q in [0.5, 2.0] {
        let report = me_consistency(
            vec![u.clone()],
            vec![1.5],
            DeformationIndex::new(q)?,
            TsallisOptions::default(),
        )?;
        println!("q = {q}");
        println!("  discrete pmf = {:.8?}", report.discrete_pmf.masses());
        println!("  measure pmf  = {:.8?}", report.measure_pmf.masses());
        println!("  max mass gap = {:.2e}", report.max_mass_gap);
        println!(
            "  entropy shift residual  = {:.2e}",
            report.report.entropy_shift_residual
        );
        if let Some(r) = report.report.power_sum_residual {
            println!("  power sum residual      = {r:.2e}");
        }
    }
    Ok(())
}

//! The same pmf seen through counting, probability and Lebesgue reference
//! measures: densities and relative entropies differ by known shifts.

use std::sync::Arc;

use qentropy::{
    measure_entropy, radon_nikodym, shannon_entropy, uniform_partition, ProbabilityVector, ReferenceMeasure, Result,
};

fn main() -> Result<()> {
    let pmf = ProbabilityVector::new(vec![0.1, 0.2, 0.3, 0.4])?;
    let n = pmf.len();
    for (name, mode) in [
        ("counting", ReferenceMeasure::Counting),
        ("uniform probability", ReferenceMeasure::UniformProbability),
        ("Lebesgue on [0, 2]", ReferenceMeasure::Lebesgue { a: 0.0, b: 2.0 }),
    ] {
        let partition = Arc::new(uniform_partition(n, mode)?);
        let density = radon_nikodym(&pmf, Arc::clone(&partition))?;
        let functional = measure_entropy(&pmf, &partition)?;
        println!(
            "{name:>20}: density {:?}, S = {:.6}, functional = {}",
            density.values(),
            shannon_entropy(&density),
            serde_json::to_string(&functional).unwrap_or_default()
        );
    }
    println!("ln {n} = {:.6}", (n as f64).ln());
    Ok(())
}

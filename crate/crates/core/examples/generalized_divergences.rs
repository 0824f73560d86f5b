//! KL, Rényi and Tsallis divergences, their order dependence and the
//! infinite value outside absolute continuity.

use qentropy::{kl_divergence, renyi_divergence, tsallis_divergence, DeformationIndex, ProbabilityVector, Result};

fn main() -> Result<()> {
    let p = ProbabilityVector::new(vec![0.5, 0.3, 0.2])?;
    let r = ProbabilityVector::new(vec![0.2, 0.3, 0.5])?;
    println!("KL = {:?}", kl_divergence(&p, &r)?);
    println!("{:>6} {:>12} {:>12}", "order", "Renyi", "Tsallis");
    for t in [0.5, 0.9, 0.999999, 2.0, 3.0] {
        let idx = DeformationIndex::new(t)?;
        println!(
            "{t:>6} {:>12.8} {:>12.8}",
            renyi_divergence(&p, &r, idx)?.finite().unwrap_or(f64::INFINITY),
            tsallis_divergence(&p, &r, idx)?.finite().unwrap_or(f64::INFINITY),
        );
    }

    let r_missing = ProbabilityVector::new(vec![0.0, 0.5, 0.5])?;
    println!("KL with a missing support cell = {:?}", kl_divergence(&p, &r_missing)?);
    Ok(())
}

//! q-logarithm and q-exponential, including the cutoff and pole regimes.

use qentropy::{q_exp, q_log, DeformationIndex, Result};

fn main() -> Result<()> {
    println!("{:>5} {:>12} {:>12} {:>12}", "q", "ln_q(4)", "e_q(0.5)", "e_q(-3)");
    for q in [0.5, 0.9, 1.0, 1.5, 2.0] {
        let idx = DeformationIndex::new(q)?;
        println!(
            "{q:>5} {:>12.6} {:>12.6} {:>12.6}",
            q_log(4.0, idx)?,
            q_exp(0.5, idx),
            q_exp(-3.0, idx)
        );
    }

    // e_q vanishes below -1/(1-q) for q < 1 and diverges at 1/(q-1) for q > 1.
    let half = DeformationIndex::new(0.5)?;
    println!("e_0.5(-2.5) = {}", q_exp(-2.5, half));
    let two = DeformationIndex::new(2.0)?;
    println!("e_2(1) = {}", q_exp(1.0, two));

    let x = 7.25;
    println!("round trip at q = 2: {}", q_exp(q_log(x, two)?, two));
    Ok(())
}

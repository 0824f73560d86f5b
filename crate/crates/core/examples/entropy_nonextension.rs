//! Discrete entropy grows like ln n under refinement while the entropy of the
//! uniform density against Lebesgue measure stays at ln(b - a).

use qentropy::{entropy_nonextension_demo, Result};

fn main() -> Result<()> {
    let sizes: Vec<usize> = (1..=10).map(|k| 1usize << k).collect();
    for (a, b) in [(0.0, 1.0), (0.0, 0.5)] {
        let table = entropy_nonextension_demo(a, b, &sizes)?;
        println!("interval [{a}, {b}]");
        for row in &table.rows {
            println!(
                "  n = {:>5}  discrete = {:>9.6}  continuous = {:>9.6}",
                row.n, row.discrete_entropy, row.continuous_entropy
            );
        }
    }
    Ok(())
}

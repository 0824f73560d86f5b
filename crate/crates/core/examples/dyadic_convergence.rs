//! Divergences of level-n dyadic approximations converge to the
//! divergence of the densities as n grows.

use qentropy::{convergence_table, BaseGridDensity, DeformationIndex, DivergenceKind, Result};

fn main() -> Result<()> {
    let p = BaseGridDensity::from_fn(0.0, 1.0, 20, |x| 2.0 * x)?;
    let r = BaseGridDensity::from_fn(0.0, 1.0, 20, |_| 1.0)?;
    let levels: Vec<u32> = (2..=12).collect();
    for (kind, order, exact) in [
        (DivergenceKind::Renyi, 2.0, (4.0f64 / 3.0).ln()),
        (DivergenceKind::Tsallis, 0.5, 2.0 * (1.0 - (8.0f64).sqrt() / 3.0)),
    ] {
        let rows = convergence_table(&p, &r, DeformationIndex::new(order)?, kind, &levels)?;
        println!("{kind:?} order {order} (closed form {exact:.10})");
        for row in rows {
            println!(
                "  level {:>2}  {:.10}  error {:.3e}",
                row.level, row.discrete_divergence, row.abs_error
            );
        }
    }
    Ok(())
}

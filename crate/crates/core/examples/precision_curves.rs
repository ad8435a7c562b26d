//! Ultimate delay precision of standard interferometry, weak-value
//! amplification and joint weak measurement; writes a CSV table to stdout.

use joint_weak::experiments::reproduce_fig2;

fn main() -> joint_weak::Result<()> {
    let taus: Vec<f64> = (0..=48).map(|k| 10f64.powf(-21.0 + k as f64 / 8.0)).collect();
    let table = reproduce_fig2(0.02, 0.25e-18, 2e15, &taus)?;
    eprintln!("crossover at {:e} s", table.crossover);
    table.write_csv(std::io::stdout().lock())
}

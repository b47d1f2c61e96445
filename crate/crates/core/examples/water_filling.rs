//! Water-filling on a fixed noise profile, per budget.

use dmimo::count_allocated_users;
use dmimo::metrics::waterfill_shared;
use dmimo::waterfill;

fn main() -> dmimo::Result<()> {
    let noise = [0.1, 0.3, 0.5, 1.0, 2.0, 4.0];
    println!("noise floors {noise:?}");
    for budget in [0.1, 0.5, 1.0, 3.0, 10.0] {
        let a = waterfill(&noise, budget)?;
        let p: Vec<String> = a.p.iter().map(|x| format!("{x:.3}")).collect();
        println!(
            "budget {budget:>5}: level {:.4}, users {}, p = [{}]",
            a.water_level,
            count_allocated_users(&a),
            p.join(", ")
        );
    }

    // one water level shared by two subcarriers
    let two = vec![noise.to_vec(), noise.iter().rev().cloned().collect()];
    let a = waterfill_shared(&two, 6.0)?;
    println!("shared across 2 samples, budget 6: level {:.4}, total {:.6}", a.water_level, a.total());
    Ok(())
}

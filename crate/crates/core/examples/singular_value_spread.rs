//! SVS of i.i.d. Rayleigh channels as the array grows, K = 12.
//!
//!     cargo run --release --example singular_value_spread -- [trials]

use dmimo::stats::{mean, median};
use dmimo::{gen_iid_rayleigh, svs, Dims, RngHandle};

fn main() -> dmimo::Result<()> {
    let trials: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let root = RngHandle::new(1, 0);
    println!("{:>5} {:>10} {:>10}", "M", "mean dB", "median dB");
    for m in [12, 16, 32, 64, 128, 256] {
        let mut v = Vec::new();
        for t in 0..trials {
            let h = gen_iid_rayleigh(Dims::new(1, 1, 12, m), root.derive(m as u64, t))?;
            v.push(svs(&h.slice(0, 0))?.db());
        }
        println!("{:>5} {:>10.3} {:>10.3}", m, mean(&v).unwrap(), median(&v).unwrap());
    }
    Ok(())
}

//! ZF sum rate against DPC capacity on one channel, across SNR.

use dmimo::{dpc_capacity, gen_iid_rayleigh, normalize, zf_sum_rate, Dims, RngHandle, SnrSpec};

fn main() -> dmimo::Result<()> {
    let h = normalize(&gen_iid_rayleigh(Dims::new(1, 1, 8, 16), RngHandle::new(3, 0))?)?;
    println!("{:>7} {:>9} {:>9} {:>7} {:>6} {:>6}", "rho dB", "DPC", "ZF", "ZF/DPC", "iters", "users");
    for rho in [-10.0, 0.0, 10.0, 20.0, 30.0] {
        let snr = SnrSpec::from_db(rho);
        let d = dpc_capacity(&h, snr)?;
        let z = zf_sum_rate(&h, snr)?;
        println!(
            "{:>7.1} {:>9.4} {:>9.4} {:>7.3} {:>6} {:>6.0}",
            rho,
            d.sum_rate_bits_per_s_per_hz,
            z.sum_rate_bits_per_s_per_hz,
            z.sum_rate_bits_per_s_per_hz / d.sum_rate_bits_per_s_per_hz,
            d.iterations,
            z.allocated_users()
        );
    }
    Ok(())
}

//! SVS distribution of the three preset scenes at M = 128 over 4 APs.
//!
//!     cargo run --release --example geometric_scenes -- [trials]

use dmimo::stats::{compute_cdf, mean};
use dmimo::{gen_geometric, gen_trajectory_users, normalize, select_subarray, svs, RngHandle, Scene, ScenePreset};

fn main() -> dmimo::Result<()> {
    let trials: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    for preset in [ScenePreset::Los, ScenePreset::Mixed, ScenePreset::Nlos] {
        let scene = Scene::preset(preset);
        let root = RngHandle::new(5, 0);
        let mut v = Vec::new();
        for t in 0..trials {
            let r = root.derive(t, 0);
            let users = gen_trajectory_users(&scene, 12, (0.1, Some(5.0)), r.derive(0, 0))?;
            let h = normalize(&gen_geometric(&scene, &users, r.derive(0, 1))?)?;
            let (sub, _) = select_subarray(h.tensor(), 128, 4, r.derive(0, 2))?;
            v.push(svs(&sub.slice(0, 0))?.db());
        }
        let cdf = compute_cdf(&v, 64)?;
        let pct = |q: f64| cdf.grid[cdf.probability.iter().position(|&p| p >= q).unwrap()];
        println!(
            "{preset:?}: mean {:.2} dB, 10% {:.2}, 50% {:.2}, 90% {:.2}",
            mean(&v).unwrap(),
            pct(0.1),
            pct(0.5),
            pct(0.9)
        );
    }
    Ok(())
}

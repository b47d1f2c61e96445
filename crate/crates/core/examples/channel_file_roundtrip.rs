//! Write a synthesized wideband tensor to the binary channel format and read it back.

use dmimo::io::{read_channel_file, to_file_precision, write_channel_file};
use dmimo::{gen_geometric, gen_trajectory_users, RngHandle, Scene, ScenePreset};

fn main() -> dmimo::Result<()> {
    let mut scene = Scene::preset(ScenePreset::Mixed);
    scene.num_subcarriers = 8;
    scene.num_snapshots = 2;
    let rng = RngHandle::new(4, 0);
    let users = gen_trajectory_users(&scene, 6, (0.2, None), rng.derive(0, 0))?;
    let h = gen_geometric(&scene, &users, rng.derive(0, 1))?;

    let path = std::env::temp_dir().join("dmimo-example.dmct");
    write_channel_file(&h, &path)?;
    let back = read_channel_file(&path)?;
    let d = back.dims();
    println!(
        "{}: {} bytes, T={} L={} K={} M={}, APs {:?}",
        path.display(),
        std::fs::metadata(&path)?.len(),
        d.t,
        d.l,
        d.k,
        d.m,
        back.ap_ids()
    );
    println!("exact at f32 precision: {}", back == to_file_precision(&h));
    std::fs::remove_file(path)?;
    Ok(())
}

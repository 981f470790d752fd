//! Writes a small demo scene (box on a ground plane) plus a run config.
//!
//! ```text
//! cargo run --example make_demo_scene -- demo
//! splatweather simulate --config demo/snowfall.toml --frames 0..20
//! splatweather render --config demo/snowfall.toml --frames 0..20
//! ```

use std::path::PathBuf;

use splatweather::fixtures::box_on_ground;
use splatweather::pipeline::{OrbitSpec, RunConfig};
use splatweather::presets::EffectName;
use splatweather::scene_io::{save_gaussian_ply, save_obj};

fn main() -> splatweather::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "demo".into()));
    std::fs::create_dir_all(&dir).map_err(|e| splatweather::Error::io(&dir, e))?;

    let (scene, mesh) = box_on_ground(48);
    save_gaussian_ply(&scene, dir.join("scene.ply"))?;
    save_obj(&mesh, dir.join("mesh.obj"))?;

    for effect in [EffectName::Snowfall, EffectName::Rainfall, EffectName::Fog] {
        let name = effect.to_string();
        let mut cfg = RunConfig::new("scene.ply", "mesh.obj", effect, format!("out_{name}"));
        cfg.frames = Some(20);
        cfg.background = [0.55, 0.62, 0.7];
        cfg.orbit = Some(OrbitSpec { count: 2, ..OrbitSpec::default() });
        let path = dir.join(format!("{name}.toml"));
        std::fs::write(&path, cfg.to_toml()?).map_err(|e| splatweather::Error::io(&path, e))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

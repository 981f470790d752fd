use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::mpm::{ExecutionMode, RotationMode, SimConfig};
use crate::presets::{apply_overrides, preset, EffectName, EffectPreset, Override};
use crate::scene_io::PlyActivation;

pub const CONFIG_VERSION: u32 = 1;

/// Cameras on a circle around `center`, looking at it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitSpec {
    /// World-space look-at point; defaults to the scene centre.
    pub center: Option<[f64; 3]>,
    /// Defaults to 1.3× the longest scene side.
    pub radius: Option<f64>,
    pub elevation_deg: f64,
    pub start_azimuth_deg: f64,
    pub count: u32,
    pub width: u32,
    pub height: u32,
    pub fov_deg: f64,
}

impl Default for OrbitSpec {
    fn default() -> Self {
        Self {
            center: None,
            radius: None,
            elevation_deg: 25.0,
            start_azimuth_deg: 0.0,
            count: 1,
            width: 640,
            height: 480,
            fov_deg: 50.0,
        }
    }
}

/// Asset anchor in asset-local coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetReference {
    pub point: [f64; 3],
    /// Unit quaternion `[w, x, y, z]`.
    #[serde(default = "identity_wxyz")]
    pub orientation: [f64; 4],
}

fn identity_wxyz() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

fn yes() -> bool {
    true
}

/// A run configuration file (TOML). Relative paths resolve against the
/// file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub scene: PathBuf,
    pub mesh: PathBuf,
    pub effect: EffectName,
    #[serde(default)]
    pub frames: Option<u32>,
    #[serde(default)]
    pub seed: u64,
    pub output: PathBuf,
    #[serde(default = "yes")]
    pub collision_handling: bool,
    #[serde(default)]
    pub strict_paper_rotation: bool,
    #[serde(default)]
    pub camera: Option<PathBuf>,
    #[serde(default)]
    pub orbit: Option<OrbitSpec>,
    #[serde(default)]
    pub asset: Option<PathBuf>,
    #[serde(default)]
    pub asset_activation: PlyActivation,
    #[serde(default)]
    pub asset_reference: Option<AssetReference>,
    #[serde(default = "yes")]
    pub parallel: bool,
    #[serde(default)]
    pub background: [f64; 3],
    /// Preset overrides; nested tables and dotted keys both work.
    #[serde(default)]
    pub overrides: toml::Table,
    /// Simulation settings, applied after the preset.
    #[serde(default)]
    pub sim: toml::Table,
}

impl RunConfig {
    /// Minimal config for `effect` with everything else defaulted.
    pub fn new(scene: impl Into<PathBuf>, mesh: impl Into<PathBuf>, effect: EffectName, output: impl Into<PathBuf>) -> Self {
        Self {
            version: CONFIG_VERSION,
            scene: scene.into(),
            mesh: mesh.into(),
            effect,
            frames: None,
            seed: 0,
            output: output.into(),
            collision_handling: true,
            strict_paper_rotation: false,
            camera: None,
            orbit: None,
            asset: None,
            asset_activation: PlyActivation::Standard,
            asset_reference: None,
            parallel: true,
            background: [0.0; 3],
            overrides: toml::Table::new(),
            sim: toml::Table::new(),
        }
    }

    pub fn parse(text: &str, base_dir: &Path, context: &str) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let loc = e
                .span()
                .map(|s| format!("byte {}", s.start))
                .unwrap_or_else(|| "document".into());
            Error::parse(context, loc, e.message().to_string())
        })?;
        if cfg.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                cfg.version
            )));
        }
        for p in [&mut cfg.scene, &mut cfg.mesh, &mut cfg.output] {
            *p = resolve(base_dir, p);
        }
        for p in [&mut cfg.camera, &mut cfg.asset].into_iter().flatten() {
            *p = resolve(base_dir, p);
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, dir, &path.display().to_string())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks values and that every referenced input file exists.
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!("unsupported config version {}", self.version)));
        }
        if self.frames == Some(0) {
            return Err(Error::Config("frames must be at least 1".into()));
        }
        let mut inputs = vec![("scene", &self.scene), ("mesh", &self.mesh)];
        if let Some(c) = &self.camera {
            inputs.push(("camera", c));
        }
        if let Some(a) = &self.asset {
            inputs.push(("asset", a));
        }
        for (what, p) in inputs {
            if !p.is_file() {
                return Err(Error::Config(format!("{what} file {} does not exist", p.display())));
            }
        }
        if self.background.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::Config("background channels must lie in [0, 1]".into()));
        }
        if let Some(o) = &self.orbit {
            if o.count == 0 || o.width == 0 || o.height == 0 || !(o.fov_deg > 0.0 && o.fov_deg < 180.0) {
                return Err(Error::Config("orbit needs count, width, height >= 1 and fov in (0, 180)".into()));
            }
        }
        self.effect_preset()?;
        self.sim_config()?;
        Ok(())
    }

    pub fn frame_count(&self) -> u32 {
        self.frames.unwrap_or_else(|| preset(self.effect).frames)
    }

    /// Overrides as dotted `key = value` pairs, in table order.
    pub fn override_list(&self) -> Result<Vec<Override>> {
        let v = serde_json::to_value(&self.overrides).map_err(|e| Error::Config(e.to_string()))?;
        let mut out = Vec::new();
        flatten_table("", &v, &mut out);
        Ok(out)
    }

    pub fn effect_preset(&self) -> Result<EffectPreset> {
        apply_overrides(&preset(self.effect), &self.override_list()?)
    }

    pub fn rotation_mode(&self) -> RotationMode {
        if self.strict_paper_rotation {
            RotationMode::StrictPaper
        } else {
            RotationMode::Polar
        }
    }

    pub fn execution(&self) -> ExecutionMode {
        if self.parallel {
            ExecutionMode::Parallel
        } else {
            ExecutionMode::Reference
        }
    }

    /// Defaults, then the preset's physics, then the `[sim]` table, then the
    /// run-level seed, frame count and toggles.
    pub fn sim_config(&self) -> Result<SimConfig> {
        let preset = self.effect_preset()?;
        let base = preset.sim_config(&SimConfig::default());
        let mut v = serde_json::to_value(&base).map_err(|e| Error::Config(e.to_string()))?;
        let table = serde_json::to_value(&self.sim).map_err(|e| Error::Config(e.to_string()))?;
        if let (Value::Object(dst), Value::Object(src)) = (&mut v, table) {
            for (k, val) in src {
                if !dst.contains_key(&k) {
                    return Err(Error::Config(format!("unknown [sim] key '{k}'")));
                }
                dst.insert(k, val);
            }
        }
        let mut cfg: SimConfig =
            serde_json::from_value(v).map_err(|e| Error::Config(format!("invalid [sim] table: {e}")))?;
        cfg.seed = self.seed;
        cfg.total_frames = self.frame_count();
        cfg.rotation_mode = self.rotation_mode();
        cfg.execution = self.execution();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn background_vec(&self) -> Vec3 {
        Vec3::from(self.background)
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Nested tables become dotted keys, except tables carrying a `kind` tag,
/// which replace their target whole.
fn flatten_table(prefix: &str, v: &Value, out: &mut Vec<Override>) {
    match v {
        Value::Object(map) if prefix.is_empty() || !map.contains_key("kind") => {
            for (k, child) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_table(&key, child, out);
            }
        }
        other => out.push(Override::new(prefix, other.clone())),
    }
}

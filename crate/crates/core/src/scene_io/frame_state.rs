//! Versioned little-endian container for one simulated frame.
//!
//! Layout: magic `SWFS`, version u32, frame u32, active particle count u64,
//! dynamic count u64, accumulated count u64, wetness flag u8, then dynamic
//! splat records, accumulated records (splat + birth frame u32 + source id
//! u64) and optionally the wetness grid. A splat record is position 3×f64,
//! rotation wxyz 4×f64, scale 3×f64, opacity f64 and a colour tag u8 followed
//! by either 3×f64 (flat) or an SH degree u8 and its coefficients.

use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::collision::{AccumulatedSplat, WetnessGrid};
use crate::error::{Error, Result};
use crate::gaussian::{sh_coeff_count, GaussianSplat, ShCoefficients, SplatColor};
use crate::math::{quat_from_wxyz, quat_to_wxyz, Aabb, Vec3};

pub const FRAME_STATE_MAGIC: [u8; 4] = *b"SWFS";
pub const FRAME_STATE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FrameState {
    pub frame: u32,
    pub active_particles: u64,
    /// Splats of still-moving particles (world coordinates).
    pub dynamic: Vec<GaussianSplat>,
    /// Every resting splat accumulated so far.
    pub accumulated: Vec<AccumulatedSplat>,
    pub wetness: Option<WetnessGrid>,
}

pub fn encode_frame_state(state: &FrameState) -> Vec<u8> {
    let mut w = Vec::with_capacity(64 + (state.dynamic.len() + state.accumulated.len()) * 100);
    w.extend_from_slice(&FRAME_STATE_MAGIC);
    let _ = w.write_u32::<LE>(FRAME_STATE_VERSION);
    let _ = w.write_u32::<LE>(state.frame);
    let _ = w.write_u64::<LE>(state.active_particles);
    let _ = w.write_u64::<LE>(state.dynamic.len() as u64);
    let _ = w.write_u64::<LE>(state.accumulated.len() as u64);
    w.push(state.wetness.is_some() as u8);
    for s in &state.dynamic {
        write_splat(&mut w, s);
    }
    for a in &state.accumulated {
        write_splat(&mut w, &a.splat);
        let _ = w.write_u32::<LE>(a.birth_frame);
        let _ = w.write_u64::<LE>(a.source_id);
    }
    if let Some(g) = &state.wetness {
        for d in g.dims() {
            let _ = w.write_u32::<LE>(d as u32);
        }
        let b = g.bounds();
        for v in b.min.iter().chain(b.max.iter()) {
            let _ = w.write_f64::<LE>(*v);
        }
        let _ = w.write_f64::<LE>(g.decay_rate());
        let _ = w.write_f64::<LE>(g.sigma());
        let _ = w.write_u32::<LE>(g.radius());
        let _ = w.write_f64::<LE>(g.darkening());
        for v in g.values() {
            let _ = w.write_f64::<LE>(*v);
        }
    }
    w
}

fn write_splat(w: &mut Vec<u8>, s: &GaussianSplat) {
    let q = quat_to_wxyz(&s.rotation);
    for v in s.position.iter().chain(q.iter()).chain(s.scale.iter()) {
        let _ = w.write_f64::<LE>(*v);
    }
    let _ = w.write_f64::<LE>(s.opacity);
    match &s.color {
        SplatColor::Flat(rgb) => {
            w.push(0);
            for c in rgb {
                let _ = w.write_f64::<LE>(*c);
            }
        }
        SplatColor::Sh(sh) => {
            w.push(1);
            w.push(sh.degree());
            for c in sh.coeffs().iter().flatten() {
                let _ = w.write_f64::<LE>(*c);
            }
        }
    }
}

pub fn decode_frame_state(bytes: &[u8], context: &str) -> Result<FrameState> {
    let mut r = Cursor::new(bytes);
    let fail = |r: &Cursor<&[u8]>, what: &str| Error::parse(context, format!("byte {}", r.position()), what.to_string());
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| fail(&r, "truncated header"))?;
    if magic != FRAME_STATE_MAGIC {
        return Err(Error::parse(context, "byte 0", "not a frame-state file (bad magic)"));
    }
    let version = r.read_u32::<LE>().map_err(|_| fail(&r, "truncated header"))?;
    if version != FRAME_STATE_VERSION {
        return Err(Error::parse(context, "byte 4", format!("unsupported frame-state version {version}")));
    }
    let mut header = || -> std::io::Result<_> {
        Ok((
            r.read_u32::<LE>()?,
            r.read_u64::<LE>()?,
            r.read_u64::<LE>()?,
            r.read_u64::<LE>()?,
            r.read_u8()?,
        ))
    };
    let (frame, active, n_dyn, n_acc, has_wet) = header().map_err(|_| Error::parse(context, "header", "truncated header"))?;
    // Each record is at least 89 bytes; reject absurd counts before allocating.
    let remaining = bytes.len() as u64;
    if n_dyn.saturating_add(n_acc).saturating_mul(89) > remaining {
        return Err(Error::parse(context, "header", "splat counts exceed file size"));
    }
    let mut dynamic = Vec::with_capacity(n_dyn as usize);
    for i in 0..n_dyn {
        dynamic.push(read_splat(&mut r).map_err(|m| fail(&r, &format!("dynamic splat {i}: {m}")))?);
    }
    let mut accumulated = Vec::with_capacity(n_acc as usize);
    for i in 0..n_acc {
        let splat = read_splat(&mut r).map_err(|m| fail(&r, &format!("accumulated splat {i}: {m}")))?;
        let birth_frame = r.read_u32::<LE>().map_err(|_| fail(&r, "truncated accumulated splat"))?;
        let source_id = r.read_u64::<LE>().map_err(|_| fail(&r, "truncated accumulated splat"))?;
        accumulated.push(AccumulatedSplat {
            splat,
            birth_frame,
            source_id,
        });
    }
    let wetness = match has_wet {
        0 => None,
        1 => Some(read_wetness(&mut r).map_err(|m| fail(&r, &format!("wetness grid: {m}")))?),
        _ => return Err(Error::parse(context, "header", "bad wetness flag")),
    };
    if (r.position() as usize) != bytes.len() {
        return Err(fail(&r, "trailing bytes after frame state"));
    }
    Ok(FrameState {
        frame,
        active_particles: active,
        dynamic,
        accumulated,
        wetness,
    })
}

fn read_f64s<const N: usize>(r: &mut Cursor<&[u8]>) -> std::result::Result<[f64; N], String> {
    let mut out = [0.0; N];
    for v in &mut out {
        *v = r.read_f64::<LE>().map_err(|_| "truncated record".to_string())?;
    }
    Ok(out)
}

fn read_splat(r: &mut Cursor<&[u8]>) -> std::result::Result<GaussianSplat, String> {
    let p = read_f64s::<3>(r)?;
    let q = read_f64s::<4>(r)?;
    let s = read_f64s::<3>(r)?;
    let [opacity] = read_f64s::<1>(r)?;
    let tag = r.read_u8().map_err(|_| "truncated record".to_string())?;
    let color = match tag {
        0 => SplatColor::Flat(read_f64s::<3>(r)?),
        1 => {
            let degree = r.read_u8().map_err(|_| "truncated record".to_string())?;
            if degree > 3 {
                return Err(format!("SH degree {degree} exceeds 3"));
            }
            let mut coeffs = Vec::with_capacity(sh_coeff_count(degree));
            for _ in 0..sh_coeff_count(degree) {
                coeffs.push(read_f64s::<3>(r)?);
            }
            SplatColor::Sh(ShCoefficients::new(degree, coeffs).map_err(|e| e.to_string())?)
        }
        t => return Err(format!("unknown colour tag {t}")),
    };
    let splat = GaussianSplat {
        position: Vec3::from(p),
        rotation: quat_from_wxyz(q),
        scale: Vec3::from(s),
        opacity,
        color,
    };
    splat.validate().map_err(|e| e.to_string())?;
    Ok(splat)
}

fn read_wetness(r: &mut Cursor<&[u8]>) -> std::result::Result<WetnessGrid, String> {
    let mut dims = [0usize; 3];
    for d in &mut dims {
        *d = r.read_u32::<LE>().map_err(|_| "truncated grid".to_string())? as usize;
    }
    let b = read_f64s::<6>(r)?;
    let [decay, sigma] = read_f64s::<2>(r)?;
    let radius = r.read_u32::<LE>().map_err(|_| "truncated grid".to_string())?;
    let [darkening] = read_f64s::<1>(r)?;
    let n = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).ok_or("grid too large")?;
    let left = r.get_ref().len() as u64 - r.position();
    if (n as u64).saturating_mul(8) != left {
        return Err("grid value count does not match the remaining bytes".into());
    }
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        values.push(r.read_f64::<LE>().map_err(|_| "truncated grid".to_string())?);
    }
    let bounds = Aabb::new(Vec3::new(b[0], b[1], b[2]), Vec3::new(b[3], b[4], b[5]));
    WetnessGrid::from_parts(dims, bounds, decay, sigma, radius, darkening, values).map_err(|e| e.to_string())
}

pub fn write_frame_state(state: &FrameState, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_frame_state(state)).map_err(|e| Error::io(path, e))
}

pub fn read_frame_state(path: impl AsRef<Path>) -> Result<FrameState> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_frame_state(&bytes, &path.display().to_string())
}

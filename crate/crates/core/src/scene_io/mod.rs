//! Reading and writing external artifacts.

mod camera;
mod frame_state;
mod gaussian_ply;
mod mesh_io;
mod normalize;
pub mod ply;

pub use camera::{load_cameras, parse_cameras, save_cameras, CameraSpec};
pub use frame_state::{
    decode_frame_state, encode_frame_state, read_frame_state, write_frame_state, FrameState, FRAME_STATE_MAGIC,
    FRAME_STATE_VERSION,
};
pub use gaussian_ply::{
    encode_gaussian_ply, load_gaussian_ply, load_gaussian_ply_with, logistic, logit, parse_gaussian_ply,
    save_gaussian_ply, save_gaussian_ply_with, GaussianScene, PlyActivation,
};
pub use mesh_io::{encode_obj, load_mesh, parse_obj, parse_ply_mesh, save_obj};
pub use normalize::{
    compute_normalization, normalization_for_bounds, SimTransform, GROUND_HEIGHT, NORMALIZATION_MARGIN,
};

//! Forward simulation: irradiance maps rendered through the lens array and
//! the metrics computed on them.

mod bounce;
pub(crate) mod map;
mod metrics;
mod mtf;
mod pattern;
mod render;

pub use bounce::apply_diffuse_bounce;
pub use map::{scene_masks, IrradianceMap, MapSidecar, Raster};
pub use metrics::{
    checkerboard, fill_factor, line_profile, mean_stdev, penumbra_width, profile_to_csv, rms_contrast, shadow_profile,
    uniformity, ShadowProfile, Uniformity,
};
pub use mtf::{fit_sinusoid, mtf_curve, mtf_to_csv, MtfPoint};
pub use pattern::LedPattern;
pub use render::{aperture_samples, render_irradiance, Footprint, RenderOptions, Renderer};

//! Synthetic training pairs: deformed planes, cameras, a software
//! rasterizer and seeded dataset generation.

mod camera;
mod dataset;
mod raster;
mod scene;

pub use camera::{sample_camera, view_azimuth, CameraFrame, CameraPose};
pub use dataset::{generate_dataset, read_manifest, DatasetConfig, ManifestEntry, SampleFiles, SampleSeeds, MANIFEST_FILE};
pub use raster::{rasterize, shininess, RenderOutput, RenderStats};
pub use scene::{aligned_ground_truth, build_plane_scene, sample_lighting, LightingConfig, Mesh, PlaneScene, SceneConfig};

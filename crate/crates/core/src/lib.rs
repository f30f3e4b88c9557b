//! Skeleton gesture datasets and their condensation into spatiotemporal
//! RGB images.

pub mod condense;
pub mod dataset;
pub mod error;
pub mod raster;
pub mod schema;
pub mod sequence;
pub mod synth;
pub mod view;

pub use condense::{
    condense, condense_views, fit_sequence, project, render_spatial, render_temporal,
    resample_sequence, FitResult, RenderConfig,
};
pub use dataset::{
    load_sequence, parse_dataset, split, DatasetId, DatasetManifest, ManifestEntry, Split,
};
pub use error::{CondenseError, DatasetError};
pub use raster::{Canvas, RasterImage};
pub use schema::JointSchema;
pub use sequence::{Frame, Joint, SkeletonSequence};
pub use view::{camera_basis, select_views, vo_table, ViewOrientation, VoName};

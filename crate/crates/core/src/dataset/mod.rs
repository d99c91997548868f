//! Parameter sampling, sample generation and dataset packaging.

mod oracle;
mod pipeline;
mod sampler;

pub use oracle::{
    gradient_env, linearity_error, oracle_scene, pixel_cosine, verify_oracle, OracleCheck, OracleReport, OracleSettings,
};
pub use pipeline::{
    expected_sample_files, generate_dataset, generate_sample, read_manifest, sample_dir_name, DatasetSummary,
    LayerFiles, ManifestEntry, SampleRecord, MANIFEST_NAME, META_NAME, PROMPT,
};
pub use sampler::{sample_parameters, CameraDraw, SampledParameters, SamplerConfig};

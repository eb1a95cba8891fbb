//! Labelled batch sources: synthetic drifting generators and a CSV loader.

mod csv;
mod generator;
mod sample;

pub use self::csv::{load_csv, write_csv, CsvOptions, LabelColumn};
pub use generator::{
    generate, hyperplane_label, hyperplane_weights, sea_label, GeneratorConfig, GeneratorKind,
    SyntheticStream,
};
pub use sample::{one_hot, Batch, Sample};

//! Datasets: synthetic benchmark generation, on-disk storage, and audio
//! ingestion.

mod container;
mod preprocess;
mod synthetic;
mod wav;

pub use container::{read_dataset, write_dataset, StoredDataset};
pub use preprocess::{preprocess_audio, resample, PreprocessConfig};
pub use synthetic::{gen_synthetic, label_of, subset_of, LabeledSample, SyntheticConfig};
pub use wav::{load_wav, write_wav};

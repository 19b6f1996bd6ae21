//! On-disk dataset container.
//!
//! Two files per dataset: a binary blob with the raw signals and labels,
//! and a JSON sidecar carrying the generator configuration so a reader
//! can interpret the labels (the component set is not recoverable from
//! the binary alone). Writing the same dataset twice produces identical
//! bytes, which makes artifact diffing and caching trivial.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::synthetic::{subset_of, LabeledSample, SyntheticConfig};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"FRDS";
const FORMAT_VERSION: u32 = 1;

/// A dataset read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredDataset {
    pub samples: Vec<LabeledSample>,
    pub config: SyntheticConfig,
    pub seed: u64,
    /// Free-form provenance string stored by the writer (the CLI puts its
    /// configuration digest here).
    pub tag: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    config: SyntheticConfig,
    count: usize,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tag: Option<String>,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(".json");
    PathBuf::from(name)
}

/// Writes `samples` plus the generating configuration. The sidecar lands
/// next to `path` with `.json` appended.
pub fn write_dataset(
    path: &Path,
    samples: &[LabeledSample],
    config: &SyntheticConfig,
    seed: u64,
    tag: Option<&str>,
) -> Result<()> {
    config.validate()?;
    if samples.is_empty() {
        return Err(Error::param("refusing to write an empty dataset"));
    }
    let classes = config.num_classes();
    for (i, s) in samples.iter().enumerate() {
        if s.signal.len() != config.length {
            return Err(Error::shape(format!(
                "sample {i} has length {}, config says {}",
                s.signal.len(),
                config.length
            )));
        }
        if usize::from(s.label) >= classes {
            return Err(Error::InvalidSubset(format!(
                "sample {i} has label {} but only {classes} classes exist",
                s.label
            )));
        }
    }

    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(config.length as u64).to_le_bytes())?;
    w.write_all(&(samples.len() as u64).to_le_bytes())?;
    w.write_all(&(classes as u32).to_le_bytes())?;
    w.write_all(&seed.to_le_bytes())?;
    w.write_all(&config.sigma.to_le_bytes())?;
    for s in samples {
        for v in &s.signal {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    for s in samples {
        w.write_all(&s.label.to_le_bytes())?;
    }
    w.flush()?;

    let sidecar = Sidecar {
        config: config.clone(),
        count: samples.len(),
        seed,
        tag: tag.map(str::to_owned),
    };
    let json = serde_json::to_vec_pretty(&sidecar).expect("sidecar serializes");
    std::fs::write(sidecar_path(path), json)?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::InvalidFormat("dataset file is truncated".into())
        } else {
            Error::Io(e)
        }
    })
}

/// Reads a dataset written by [`write_dataset`], rebuilding each sample's
/// ground-truth subset from its label and the sidecar configuration.
pub fn read_dataset(path: &Path) -> Result<StoredDataset> {
    let sidecar_file = sidecar_path(path);
    let sidecar: Sidecar = match std::fs::read(&sidecar_file) {
        Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| {
            Error::InvalidFormat(format!("sidecar {} does not parse: {e}", sidecar_file.display()))
        })?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::InvalidFormat(format!(
                "missing sidecar {}; the binary alone cannot be interpreted",
                sidecar_file.display()
            )));
        }
        Err(e) => return Err(Error::Io(e)),
    };
    sidecar.config.validate()?;

    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic)?;
    if &magic != MAGIC {
        return Err(Error::InvalidFormat("not a dataset file (bad magic)".into()));
    }
    let version = read_u32(&mut r)?;
    if version != FORMAT_VERSION {
        return Err(Error::InvalidFormat(format!(
            "dataset format version {version} is not supported (expected {FORMAT_VERSION})"
        )));
    }
    let length = read_u64(&mut r)? as usize;
    let count = read_u64(&mut r)? as usize;
    let classes = read_u32(&mut r)? as usize;
    let seed = read_u64(&mut r)?;
    let sigma = read_f64(&mut r)?;

    if length != sidecar.config.length {
        return Err(Error::InvalidFormat(format!(
            "binary says length {length}, sidecar says {}",
            sidecar.config.length
        )));
    }
    if count != sidecar.count {
        return Err(Error::InvalidFormat(format!(
            "binary says {count} samples, sidecar says {}",
            sidecar.count
        )));
    }
    if classes != sidecar.config.num_classes() {
        return Err(Error::InvalidFormat(format!(
            "binary says {classes} classes, sidecar config implies {}",
            sidecar.config.num_classes()
        )));
    }
    if seed != sidecar.seed {
        return Err(Error::InvalidFormat(format!(
            "binary says seed {seed}, sidecar says {}",
            sidecar.seed
        )));
    }
    if sigma.to_bits() != sidecar.config.sigma.to_bits() {
        return Err(Error::InvalidFormat(format!(
            "binary says sigma {sigma}, sidecar says {}",
            sidecar.config.sigma
        )));
    }
    if count == 0 {
        return Err(Error::InvalidFormat("dataset contains no samples".into()));
    }

    let mut signals = Vec::with_capacity(count);
    for _ in 0..count {
        let mut signal = vec![0.0f64; length];
        for v in &mut signal {
            *v = read_f64(&mut r)?;
        }
        signals.push(signal);
    }
    let mut samples = Vec::with_capacity(count);
    for signal in signals {
        let mut b = [0u8; 2];
        read_exact(&mut r, &mut b)?;
        let label = u16::from_le_bytes(b);
        if usize::from(label) >= classes {
            return Err(Error::InvalidFormat(format!(
                "label {label} out of range for {classes} classes"
            )));
        }
        let subset = subset_of(label, &sidecar.config.components)?;
        samples.push(LabeledSample { signal, label, subset });
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::InvalidFormat("dataset file has trailing bytes".into()));
    }

    Ok(StoredDataset { samples, config: sidecar.config, seed, tag: sidecar.tag })
}

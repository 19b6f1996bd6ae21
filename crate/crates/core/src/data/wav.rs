//! Minimal RIFF/WAVE reader and writer for the supported profile:
//! 16-bit PCM, single channel. Samples map to `[-1, 1)` by dividing by
//! 32768. Everything else in the container (extra chunks, padding) is
//! tolerated on read; unsupported encodings are rejected explicitly.

use std::path::Path;

use crate::error::{Error, Result};
use crate::transforms::TimeSeries;

fn chunk_id(bytes: &[u8]) -> [u8; 4] {
    [bytes[0], bytes[1], bytes[2], bytes[3]]
}

fn u16_at(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

fn parse(bytes: &[u8]) -> Result<(Vec<f64>, u32)> {
    if bytes.len() < 12 {
        return Err(Error::CorruptWav("file shorter than a RIFF header".into()));
    }
    if &chunk_id(bytes) != b"RIFF" || &chunk_id(&bytes[8..]) != b"WAVE" {
        return Err(Error::CorruptWav("missing RIFF/WAVE signature".into()));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<&[u8]> = None;
    let mut at = 12usize;
    while at + 8 <= bytes.len() {
        let id = chunk_id(&bytes[at..]);
        let size = u32_at(bytes, at + 4) as usize;
        let body_start = at + 8;
        let body_end = body_start
            .checked_add(size)
            .ok_or_else(|| Error::CorruptWav("chunk size overflows".into()))?;
        if body_end > bytes.len() {
            return Err(Error::CorruptWav(format!(
                "chunk {:?} claims {size} bytes but the file ends early",
                String::from_utf8_lossy(&id)
            )));
        }
        let body = &bytes[body_start..body_end];
        match &id {
            b"fmt " => {
                if size < 16 {
                    return Err(Error::CorruptWav(format!("fmt chunk has only {size} bytes")));
                }
                fmt = Some((u16_at(body, 0), u16_at(body, 2), u32_at(body, 4), u16_at(body, 14)));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // Chunks are word-aligned; odd sizes carry a pad byte.
        at = body_end + (size & 1);
    }

    let (format, channels, rate, bits) =
        fmt.ok_or_else(|| Error::CorruptWav("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::CorruptWav("no data chunk".into()))?;

    if format != 1 {
        return Err(Error::UnsupportedWav(format!("audio format {format}; only PCM (1) is supported")));
    }
    if channels != 1 {
        return Err(Error::UnsupportedWav(format!("{channels} channels; only mono is supported")));
    }
    if bits != 16 {
        return Err(Error::UnsupportedWav(format!("{bits} bits per sample; only 16 is supported")));
    }
    if rate == 0 {
        return Err(Error::CorruptWav("sample rate is zero".into()));
    }
    if data.len() % 2 != 0 {
        return Err(Error::CorruptWav("data chunk holds half a sample".into()));
    }

    let samples = data
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0)
        .collect();
    Ok((samples, rate))
}

/// Loads a 16-bit PCM mono WAV file as a time series.
pub fn load_wav(path: &Path) -> Result<TimeSeries> {
    let bytes = std::fs::read(path)?;
    let (samples, rate) = parse(&bytes)?;
    TimeSeries::new(samples, rate as f64)
}

/// Writes a time series as 16-bit PCM mono, clamping to full scale.
/// Useful for producing fixtures and for exporting masked audio.
pub fn write_wav(path: &Path, x: &TimeSeries) -> Result<()> {
    let rate = x.sample_rate().round();
    if !(rate >= 1.0 && rate <= u32::MAX as f64) {
        return Err(Error::param(format!("sample rate {rate} does not fit a WAV header")));
    }
    let rate = rate as u32;
    let n = x.len();
    let data_len = (n * 2) as u32;
    let mut out = Vec::with_capacity(44 + n * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &v in x.samples() {
        let q = (v * 32768.0).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Hand-assembles a WAV so the reader is tested against the format,
    /// not against the writer.
    fn build_wav(
        format: u16,
        channels: u16,
        rate: u32,
        bits: u16,
        payload: &[u8],
        junk_chunk: bool,
    ) -> Vec<u8> {
        let mut fmt = Vec::new();
        fmt.extend_from_slice(&format.to_le_bytes());
        fmt.extend_from_slice(&channels.to_le_bytes());
        fmt.extend_from_slice(&rate.to_le_bytes());
        fmt.extend_from_slice(&(rate * u32::from(channels) * u32::from(bits) / 8).to_le_bytes());
        fmt.extend_from_slice(&(channels * bits / 8).to_le_bytes());
        fmt.extend_from_slice(&bits.to_le_bytes());

        let mut body = Vec::new();
        body.extend_from_slice(b"WAVE");
        if junk_chunk {
            body.extend_from_slice(b"LIST");
            body.extend_from_slice(&3u32.to_le_bytes());
            body.extend_from_slice(&[1, 2, 3, 0]); // odd size plus pad byte
        }
        body.extend_from_slice(b"fmt ");
        body.extend_from_slice(&(fmt.len() as u32).to_le_bytes());
        body.extend_from_slice(&fmt);
        body.extend_from_slice(b"data");
        body.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        body.extend_from_slice(payload);

        let mut out = Vec::new();
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&(body.len() as u32).to_le_bytes());
        out.extend_from_slice(&body);
        out
    }

    fn pcm(samples: &[i16]) -> Vec<u8> {
        samples.iter().flat_map(|s| s.to_le_bytes()).collect()
    }

    #[test]
    fn reads_pcm16_mono_with_exact_scaling() {
        let bytes = build_wav(1, 1, 8000, 16, &pcm(&[0, 16384, -16384, 32767, -32768]), false);
        let (samples, rate) = parse(&bytes).unwrap();
        assert_eq!(rate, 8000);
        assert_eq!(samples.len(), 5);
        assert_abs_diff_eq!(samples[0], 0.0);
        assert_abs_diff_eq!(samples[1], 0.5);
        assert_abs_diff_eq!(samples[2], -0.5);
        assert_abs_diff_eq!(samples[3], 32767.0 / 32768.0);
        assert_abs_diff_eq!(samples[4], -1.0);
    }

    #[test]
    fn skips_unknown_chunks() {
        let bytes = build_wav(1, 1, 44100, 16, &pcm(&[5, -5, 9]), true);
        let (samples, rate) = parse(&bytes).unwrap();
        assert_eq!(rate, 44100);
        assert_eq!(samples.len(), 3);
    }

    #[test]
    fn rejects_unsupported_profiles() {
        let stereo = build_wav(1, 2, 8000, 16, &pcm(&[1, 2, 3, 4]), false);
        assert!(matches!(parse(&stereo), Err(Error::UnsupportedWav(_))));

        let eight_bit = build_wav(1, 1, 8000, 8, &[1, 2, 3], false);
        assert!(matches!(parse(&eight_bit), Err(Error::UnsupportedWav(_))));

        let float = build_wav(3, 1, 8000, 16, &pcm(&[1, 2]), false);
        assert!(matches!(parse(&float), Err(Error::UnsupportedWav(_))));
    }

    #[test]
    fn rejects_corrupt_structure() {
        assert!(matches!(parse(b"RIF"), Err(Error::CorruptWav(_))));
        assert!(matches!(parse(b"FORM....AIFF"), Err(Error::CorruptWav(_))));

        // data chunk claims more bytes than exist.
        let mut truncated = build_wav(1, 1, 8000, 16, &pcm(&[1, 2, 3, 4]), false);
        truncated.truncate(truncated.len() - 4);
        assert!(matches!(parse(&truncated), Err(Error::CorruptWav(_))));

        // fmt present, data missing.
        let mut no_data = build_wav(1, 1, 8000, 16, &[], false);
        let len = no_data.len();
        no_data.truncate(len - 8); // drop the empty data chunk header
        assert!(matches!(parse(&no_data), Err(Error::CorruptWav(_))));
    }

    #[test]
    fn write_read_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tone.wav");
        let samples: Vec<f64> =
            (0..64).map(|n| (std::f64::consts::TAU * n as f64 / 16.0).sin() * 0.8).collect();
        let x = TimeSeries::new(samples, 8000.0).unwrap();
        write_wav(&path, &x).unwrap();
        let back = load_wav(&path).unwrap();
        assert_eq!(back.len(), 64);
        assert_eq!(back.sample_rate(), 8000.0);
        // 16-bit quantization: half a step of 1/32768.
        for (a, b) in x.samples().iter().zip(back.samples()) {
            assert_abs_diff_eq!(a, b, epsilon = 0.5 / 32768.0 + 1e-12);
        }
    }

    #[test]
    fn load_surfaces_io_errors() {
        let missing = Path::new("/nonexistent/definitely/not/here.wav");
        assert!(matches!(load_wav(missing), Err(Error::Io(_))));
    }
}

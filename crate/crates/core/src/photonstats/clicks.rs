use std::io::{BufRead, Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use super::IntensityTrace;
use crate::rng::{self, Domain};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"CLKS";
const FORMAT_VERSION: u32 = 1;
/// Samples per random stream; fixes the work split independent of threads.
const CHUNK: usize = 1 << 14;

/// Detection times of one counter, in integer nanoseconds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClickStream {
    pub detector_id: u32,
    timestamps: Vec<u64>,
    duration_ns: u64,
}

impl ClickStream {
    /// Checks strict monotonicity and that every click lies in
    /// [0, duration].
    pub fn new(detector_id: u32, timestamps: Vec<u64>, duration_ns: u64) -> Result<Self> {
        if let Some(i) = timestamps.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Unsorted(i + 1));
        }
        if timestamps.last().is_some_and(|&t| t > duration_ns) {
            return Err(Error::Format(format!("timestamp beyond duration {duration_ns} ns")));
        }
        Ok(Self {
            detector_id,
            timestamps,
            duration_ns,
        })
    }

    pub fn timestamps(&self) -> &[u64] {
        &self.timestamps
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn duration_ns(&self) -> u64 {
        self.duration_ns
    }

    pub fn duration(&self) -> f64 {
        self.duration_ns as f64 * 1e-9
    }

    /// Mean count rate (1/s).
    pub fn rate(&self) -> f64 {
        self.len() as f64 / self.duration()
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&self.detector_id.to_le_bytes())?;
        w.write_all(&(self.timestamps.len() as u64).to_le_bytes())?;
        w.write_all(&self.duration_ns.to_le_bytes())?;
        let mut buf = Vec::with_capacity(8 * self.timestamps.len());
        for t in &self.timestamps {
            buf.extend_from_slice(&t.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 28];
        r.read_exact(&mut header).map_err(|_| Error::Format("truncated header".into()))?;
        if &header[..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().expect("4 bytes"));
        let dword = |i: usize| u64::from_le_bytes(header[i..i + 8].try_into().expect("8 bytes"));
        let version = word(4);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let detector_id = word(8);
        let count = dword(12);
        let duration_ns = dword(20);
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        if body.len() as u64 != count * 8 {
            return Err(Error::Format(format!("expected {count} timestamps, found {} bytes", body.len())));
        }
        let timestamps = body.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        Self::new(detector_id, timestamps, duration_ns)
    }

    /// One decimal nanosecond timestamp per line, after `#` header lines
    /// carrying the detector id and duration.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# detector_id = {}", self.detector_id)?;
        writeln!(w, "# duration_ns = {}", self.duration_ns)?;
        for t in &self.timestamps {
            writeln!(w, "{t}")?;
        }
        Ok(())
    }

    /// Reads the text format. Missing headers default to detector 0 and the
    /// last timestamp as duration.
    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut detector_id = 0;
        let mut duration_ns = None;
        let mut timestamps = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                if let Some((k, v)) = header.split_once('=') {
                    let v = v.trim();
                    let bad = |_| Error::Format(format!("line {}: bad header value {v:?}", n + 1));
                    match k.trim() {
                        "detector_id" => detector_id = v.parse().map_err(bad)?,
                        "duration_ns" => duration_ns = Some(v.parse().map_err(bad)?),
                        _ => {}
                    }
                }
                continue;
            }
            timestamps.push(line.parse().map_err(|_| Error::Format(format!("line {}: not a timestamp: {line:?}", n + 1)))?);
        }
        let duration_ns = duration_ns.unwrap_or_else(|| timestamps.last().copied().unwrap_or(0));
        Self::new(detector_id, timestamps, duration_ns)
    }
}

/// Inhomogeneous Poisson sampling of `trace`, each photon routed 50/50 to
/// detector 0 or 1.
///
/// Clicks are placed uniformly inside their sample and truncated to whole
/// nanoseconds. Two clicks landing in the same nanosecond on one detector
/// are merged (an effective 1 ns dead time), keeping streams strictly
/// increasing.
pub fn poissonize(trace: &IntensityTrace, seed: u64) -> Result<(ClickStream, ClickStream)> {
    if trace.samples.is_empty() || !(trace.sample_period > 0.0) {
        return Err(Error::Parameter("trace must have samples and a positive period".into()));
    }
    if let Some(i) = trace.samples.iter().position(|&s| !(s >= 0.0) || !s.is_finite()) {
        return Err(Error::Parameter(format!("negative or non-finite rate at sample {i}")));
    }
    let dt_ns = trace.sample_period * 1e9;
    let duration_ns = (trace.samples.len() as f64 * dt_ns).floor() as u64;
    let chunks: Vec<(Vec<u64>, Vec<u64>)> = trace
        .samples
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, samples)| {
            let mut rng = rng::stream(seed, Domain::Clicks, c as u64);
            let (mut a, mut b) = (Vec::new(), Vec::new());
            let mut times = Vec::new();
            for (i, &rate) in samples.iter().enumerate() {
                let mean = rate * trace.sample_period;
                if mean <= 0.0 {
                    continue;
                }
                let count = Poisson::new(mean).expect("positive finite mean").sample(&mut rng) as usize;
                let k = (c * CHUNK + i) as f64;
                times.clear();
                times.extend((0..count).map(|_| (((k + rng.random::<f64>()) * dt_ns).floor() as u64).min(duration_ns)));
                times.sort_unstable();
                for &t in &times {
                    if rng.random_bool(0.5) {
                        a.push(t);
                    } else {
                        b.push(t);
                    }
                }
            }
            (a, b)
        })
        .collect();
    let mut a = Vec::with_capacity(chunks.iter().map(|c| c.0.len()).sum());
    let mut b = Vec::with_capacity(chunks.iter().map(|c| c.1.len()).sum());
    for (ca, cb) in chunks {
        a.extend(ca);
        b.extend(cb);
    }
    a.dedup();
    b.dedup();
    Ok((ClickStream::new(0, a, duration_ns)?, ClickStream::new(1, b, duration_ns)?))
}

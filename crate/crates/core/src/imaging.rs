//! Multipass image stacks: file format, sliding-window sample extraction,
//! per-pixel symmetry classification maps, H/alpha/zone maps, rendering and
//! per-region statistics.
//!
//! Stack file format (two files):
//! - header: plain text `key: value` lines with mandatory keys L, C, N, M,
//!   dtype (complex64 | complex128) and layout (pass-channel-row-major);
//! - payload: raw little-endian interleaved complex samples ordered pass,
//!   then channel, then row, then column.

use std::io::{Read, Write as IoWrite};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flipflop::FlipFlopConfig;
use crate::halpha::{h_alpha, zone_index, Zone};
use crate::linalg::{pauli_coherence, MultipassSample, CHANNELS};
use crate::mos::{self, MosRule};
use crate::sim::{draw_with_rng, trial_rng, TemporalModel};
use crate::symmetry::SymmetryHypothesis;

pub const LAYOUT: &str = "pass-channel-row-major";

/// Payload sample width.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dtype {
    Complex64,
    Complex128,
}

impl Dtype {
    pub fn label(self) -> &'static str {
        match self {
            Dtype::Complex64 => "complex64",
            Dtype::Complex128 => "complex128",
        }
    }

    pub fn parse(s: &str) -> Result<Dtype> {
        match s {
            "complex64" => Ok(Dtype::Complex64),
            "complex128" => Ok(Dtype::Complex128),
            other => Err(Error::StackFormat(format!("unknown dtype '{other}'"))),
        }
    }

    pub fn bytes_per_sample(self) -> usize {
        match self {
            Dtype::Complex64 => 8,
            Dtype::Complex128 => 16,
        }
    }
}

/// Stack dimensions and payload description.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StackHeader {
    pub rows: usize,
    pub cols: usize,
    pub channels: usize,
    pub passes: usize,
    pub dtype: Dtype,
}

impl StackHeader {
    pub fn payload_bytes(&self) -> usize {
        self.rows * self.cols * self.channels * self.passes * self.dtype.bytes_per_sample()
    }
}

/// In-memory multipass stack, addressable by (pass, channel, row, col).
/// Samples are held as complex128 regardless of the on-disk dtype.
#[derive(Clone, Debug)]
pub struct MultipassStack {
    rows: usize,
    cols: usize,
    passes: usize,
    data: Vec<Complex64>,
}

impl MultipassStack {
    pub fn new(rows: usize, cols: usize, passes: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows < 1 || cols < 1 || passes < 1 {
            return Err(Error::InvalidParameter(
                "stack dimensions must be >= 1".into(),
            ));
        }
        if data.len() != rows * cols * passes * CHANNELS {
            return Err(Error::DimensionMismatch(format!(
                "expected {} samples, got {}",
                rows * cols * passes * CHANNELS,
                data.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            passes,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn passes(&self) -> usize {
        self.passes
    }

    #[inline]
    pub fn get(&self, pass: usize, channel: usize, row: usize, col: usize) -> Complex64 {
        self.data[((pass * CHANNELS + channel) * self.rows + row) * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, pass: usize, channel: usize, row: usize, col: usize, v: Complex64) {
        self.data[((pass * CHANNELS + channel) * self.rows + row) * self.cols + col] = v;
    }

    /// View reduced to the first pass only (single-image mode).
    pub fn first_pass(&self) -> MultipassStack {
        let plane = CHANNELS * self.rows * self.cols;
        MultipassStack {
            rows: self.rows,
            cols: self.cols,
            passes: 1,
            data: self.data[..plane].to_vec(),
        }
    }
}

fn parse_header_text(text: &str) -> Result<StackHeader> {
    let mut rows = None;
    let mut cols = None;
    let mut channels = None;
    let mut passes = None;
    let mut dtype = None;
    let mut layout = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once(':').ok_or_else(|| {
            Error::StackFormat(format!("header line {} is not 'key: value'", lineno + 1))
        })?;
        let value = value.trim();
        match key.trim() {
            "L" => rows = Some(parse_count(value, "L")?),
            "C" => cols = Some(parse_count(value, "C")?),
            "N" => channels = Some(parse_count(value, "N")?),
            "M" => passes = Some(parse_count(value, "M")?),
            "dtype" => dtype = Some(Dtype::parse(value)?),
            "layout" => layout = Some(value.to_string()),
            other => {
                return Err(Error::StackFormat(format!("unknown header key '{other}'")));
            }
        }
    }
    let header = StackHeader {
        rows: rows.ok_or_else(|| Error::StackFormat("missing key L".into()))?,
        cols: cols.ok_or_else(|| Error::StackFormat("missing key C".into()))?,
        channels: channels.ok_or_else(|| Error::StackFormat("missing key N".into()))?,
        passes: passes.ok_or_else(|| Error::StackFormat("missing key M".into()))?,
        dtype: dtype.ok_or_else(|| Error::StackFormat("missing key dtype".into()))?,
    };
    let layout = layout.ok_or_else(|| Error::StackFormat("missing key layout".into()))?;
    if layout != LAYOUT {
        return Err(Error::StackFormat(format!(
            "unsupported layout '{layout}', expected '{LAYOUT}'"
        )));
    }
    if header.channels != CHANNELS {
        return Err(Error::StackFormat(format!(
            "N must be 3, got {}",
            header.channels
        )));
    }
    if header.rows < 1 || header.cols < 1 || header.passes < 1 {
        return Err(Error::StackFormat("L, C and M must be >= 1".into()));
    }
    Ok(header)
}

fn parse_count(s: &str, key: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::StackFormat(format!("key {key}: '{s}' is not a count")))
}

/// Load a stack from its header and payload files. complex64 payloads are
/// promoted to complex128 in memory.
pub fn load_stack(header_path: &Path, payload_path: &Path) -> Result<MultipassStack> {
    let header = parse_header_text(&std::fs::read_to_string(header_path)?)?;
    let mut payload = Vec::new();
    std::fs::File::open(payload_path)?.read_to_end(&mut payload)?;
    if payload.len() != header.payload_bytes() {
        return Err(Error::StackFormat(format!(
            "payload size mismatch: expected {} bytes, got {}",
            header.payload_bytes(),
            payload.len()
        )));
    }
    let n_samples = header.rows * header.cols * header.channels * header.passes;
    let mut data = Vec::with_capacity(n_samples);
    match header.dtype {
        Dtype::Complex128 => {
            for chunk in payload.chunks_exact(16) {
                let re = f64::from_le_bytes(chunk[0..8].try_into().unwrap());
                let im = f64::from_le_bytes(chunk[8..16].try_into().unwrap());
                data.push(Complex64::new(re, im));
            }
        }
        Dtype::Complex64 => {
            for chunk in payload.chunks_exact(8) {
                let re = f32::from_le_bytes(chunk[0..4].try_into().unwrap());
                let im = f32::from_le_bytes(chunk[4..8].try_into().unwrap());
                data.push(Complex64::new(re as f64, im as f64));
            }
        }
    }
    MultipassStack::new(header.rows, header.cols, header.passes, data)
}

/// Write a stack as a header/payload file pair.
pub fn save_stack(
    stack: &MultipassStack,
    header_path: &Path,
    payload_path: &Path,
    dtype: Dtype,
) -> Result<()> {
    let mut header = String::new();
    header.push_str(&format!("L: {}\n", stack.rows));
    header.push_str(&format!("C: {}\n", stack.cols));
    header.push_str(&format!("N: {}\n", CHANNELS));
    header.push_str(&format!("M: {}\n", stack.passes));
    header.push_str(&format!("dtype: {}\n", dtype.label()));
    header.push_str(&format!("layout: {}\n", LAYOUT));
    std::fs::write(header_path, header)?;

    let mut payload = Vec::with_capacity(stack.data.len() * dtype.bytes_per_sample());
    match dtype {
        Dtype::Complex128 => {
            for v in &stack.data {
                payload.extend_from_slice(&v.re.to_le_bytes());
                payload.extend_from_slice(&v.im.to_le_bytes());
            }
        }
        Dtype::Complex64 => {
            for v in &stack.data {
                payload.extend_from_slice(&(v.re as f32).to_le_bytes());
                payload.extend_from_slice(&(v.im as f32).to_le_bytes());
            }
        }
    }
    std::fs::write(payload_path, payload)?;
    Ok(())
}

/// Extract the W1 x W2 window of looks around (row, col). Windows near the
/// image edge are shifted inward so every pixel sees a full-size window and
/// K = W1*W2 stays constant across the map.
pub fn window_samples(
    stack: &MultipassStack,
    row: usize,
    col: usize,
    w1: usize,
    w2: usize,
) -> Result<MultipassSample> {
    if w1 < 1 || w2 < 1 {
        return Err(Error::InvalidParameter("window must be at least 1x1".into()));
    }
    if w1 > stack.rows || w2 > stack.cols {
        return Err(Error::InvalidParameter(format!(
            "window {}x{} does not fit a {}x{} image",
            w1, w2, stack.rows, stack.cols
        )));
    }
    if row >= stack.rows || col >= stack.cols {
        return Err(Error::IndexOutOfRange(format!(
            "pixel ({row}, {col}) outside {}x{} image",
            stack.rows, stack.cols
        )));
    }
    let r0 = row.saturating_sub(w1 / 2).min(stack.rows - w1);
    let c0 = col.saturating_sub(w2 / 2).min(stack.cols - w2);
    let dim = CHANNELS * stack.passes;
    let mut data = Vec::with_capacity(dim * w1 * w2);
    for wr in 0..w1 {
        for wc in 0..w2 {
            let (r, c) = (r0 + wr, c0 + wc);
            for m in 0..stack.passes {
                for n in 0..CHANNELS {
                    data.push(stack.get(m, n, r, c));
                }
            }
        }
    }
    MultipassSample::new(stack.passes, w1 * w2, data)
}

/// Per-pixel selected hypothesis; `None` marks pixels where estimation
/// failed.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassMap {
    rows: usize,
    cols: usize,
    cells: Vec<Option<SymmetryHypothesis>>,
    pub failures: usize,
}

impl ClassMap {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<SymmetryHypothesis> {
        self.cells[row * self.cols + col]
    }

    pub fn cells(&self) -> &[Option<SymmetryHypothesis>] {
        &self.cells
    }
}

/// Classify every pixel of the stack with the given rule and window.
/// Per-pixel estimation failures become sentinel cells, never errors.
pub fn classify_map(
    stack: &MultipassStack,
    rule: MosRule,
    w1: usize,
    w2: usize,
    cfg: &FlipFlopConfig,
) -> Result<ClassMap> {
    // fail fast on configuration problems before the pixel loop
    rule.penalty(w1 * w2)?;
    window_samples(stack, 0, 0, w1, w2)?;
    let cells: Vec<Option<SymmetryHypothesis>> = (0..stack.rows)
        .into_par_iter()
        .flat_map_iter(|r| {
            let mut row_cells = Vec::with_capacity(stack.cols);
            for c in 0..stack.cols {
                let cell = window_samples(stack, r, c, w1, w2)
                    .ok()
                    .and_then(|x| mos::classify(&x, rule, cfg).ok());
                row_cells.push(cell);
            }
            row_cells
        })
        .collect();
    let failures = cells.iter().filter(|c| c.is_none()).count();
    Ok(ClassMap {
        rows: stack.rows,
        cols: stack.cols,
        cells,
        failures,
    })
}

/// Zone map plus entropy and mean-alpha rasters from the per-pixel selected
/// structured estimates. Sentinel pixels carry `None` / NaN.
#[derive(Clone, Debug)]
pub struct DecompositionMaps {
    rows: usize,
    cols: usize,
    pub classes: Vec<Option<SymmetryHypothesis>>,
    pub zones: Vec<Option<Zone>>,
    pub entropy: Vec<f64>,
    pub mean_alpha_deg: Vec<f64>,
    pub failures: usize,
}

impl DecompositionMaps {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn zone(&self, row: usize, col: usize) -> Option<Zone> {
        self.zones[row * self.cols + col]
    }
}

/// Per pixel: classify, take the selected structured polarimetric estimate,
/// transform to the Pauli coherence and decompose into H/alpha and zone.
pub fn decompose_map(
    stack: &MultipassStack,
    rule: MosRule,
    w1: usize,
    w2: usize,
    cfg: &FlipFlopConfig,
) -> Result<DecompositionMaps> {
    rule.penalty(w1 * w2)?;
    window_samples(stack, 0, 0, w1, w2)?;
    type PixelOut = (Option<SymmetryHypothesis>, Option<Zone>, f64, f64);
    let pixels: Vec<PixelOut> = (0..stack.rows)
        .into_par_iter()
        .flat_map_iter(|r| {
            let mut row_out = Vec::with_capacity(stack.cols);
            for c in 0..stack.cols {
                let out = (|| -> Result<(SymmetryHypothesis, Zone, f64, f64)> {
                    let x = window_samples(stack, r, c, w1, w2)?;
                    let fits =
                        mos::fit_all(&x.sample_covariance(), x.passes(), x.looks(), cfg)?;
                    let selected = fits.select(rule)?;
                    let c_p = &fits.estimate(selected).c_p;
                    let point = h_alpha(&pauli_coherence(c_p)?)?;
                    Ok((selected, zone_index(&point), point.entropy, point.mean_alpha_deg))
                })();
                row_out.push(match out {
                    Ok((h, z, e, a)) => (Some(h), Some(z), e, a),
                    Err(_) => (None, None, f64::NAN, f64::NAN),
                });
            }
            row_out
        })
        .collect();

    let mut classes = Vec::with_capacity(pixels.len());
    let mut zones = Vec::with_capacity(pixels.len());
    let mut entropy = Vec::with_capacity(pixels.len());
    let mut mean_alpha = Vec::with_capacity(pixels.len());
    let mut failures = 0;
    for (h, z, e, a) in pixels {
        if z.is_none() {
            failures += 1;
        }
        classes.push(h);
        zones.push(z);
        entropy.push(e);
        mean_alpha.push(a);
    }
    Ok(DecompositionMaps {
        rows: stack.rows,
        cols: stack.cols,
        classes,
        zones,
        entropy,
        mean_alpha_deg: mean_alpha,
        failures,
    })
}

/// Class palette: none black, reflection blue, rotation red, azimuth
/// yellow; sentinel gray.
pub const CLASS_PALETTE: [(u8, u8, u8); 4] = [(0, 0, 0), (0, 0, 255), (255, 0, 0), (255, 255, 0)];
pub const SENTINEL_COLOR: (u8, u8, u8) = (128, 128, 128);

/// Zone palette Z1..Z9; distinct from the sentinel gray.
pub const ZONE_PALETTE: [(u8, u8, u8); 9] = [
    (200, 0, 0),
    (255, 128, 0),
    (255, 255, 0),
    (0, 100, 0),
    (0, 200, 80),
    (160, 255, 160),
    (0, 0, 160),
    (0, 128, 255),
    (0, 255, 255),
];

/// Render a class map into an RGB image with the fixed palette.
pub fn render_map(map: &ClassMap) -> image::RgbImage {
    image::RgbImage::from_fn(map.cols as u32, map.rows as u32, |x, y| {
        let (r, g, b) = match map.get(y as usize, x as usize) {
            Some(h) => CLASS_PALETTE[h.index()],
            None => SENTINEL_COLOR,
        };
        image::Rgb([r, g, b])
    })
}

/// Inverse of `render_map`; errors on any color outside the palette.
pub fn decode_map(img: &image::RgbImage) -> Result<ClassMap> {
    let (cols, rows) = (img.width() as usize, img.height() as usize);
    let mut cells = Vec::with_capacity(rows * cols);
    let mut failures = 0;
    for y in 0..rows {
        for x in 0..cols {
            let image::Rgb([r, g, b]) = *img.get_pixel(x as u32, y as u32);
            let rgb = (r, g, b);
            if rgb == SENTINEL_COLOR {
                cells.push(None);
                failures += 1;
            } else if let Some(idx) = CLASS_PALETTE.iter().position(|&p| p == rgb) {
                cells.push(SymmetryHypothesis::from_index(idx));
            } else {
                return Err(Error::StackFormat(format!(
                    "pixel ({y}, {x}) color {rgb:?} is not in the class palette"
                )));
            }
        }
    }
    Ok(ClassMap {
        rows,
        cols,
        cells,
        failures,
    })
}

/// Render a zone map with the zone palette.
pub fn render_zone_map(maps: &DecompositionMaps) -> image::RgbImage {
    image::RgbImage::from_fn(maps.cols as u32, maps.rows as u32, |x, y| {
        let (r, g, b) = match maps.zones[y as usize * maps.cols + x as usize] {
            Some(z) => ZONE_PALETTE[z.number() - 1],
            None => SENTINEL_COLOR,
        };
        image::Rgb([r, g, b])
    })
}

/// Raw label raster: class index per pixel, 255 for sentinel.
pub fn class_labels(map: &ClassMap) -> Vec<u8> {
    map.cells
        .iter()
        .map(|c| c.map(|h| h.index() as u8).unwrap_or(255))
        .collect()
}

/// Real-valued raster stored as a header/payload pair (dtype float64,
/// row-major).
pub fn save_real_raster(
    rows: usize,
    cols: usize,
    data: &[f64],
    header_path: &Path,
    payload_path: &Path,
) -> Result<()> {
    if data.len() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "raster has {} values for {}x{}",
            data.len(),
            rows,
            cols
        )));
    }
    std::fs::write(
        header_path,
        format!("L: {rows}\nC: {cols}\ndtype: float64\nlayout: row-major\n"),
    )?;
    let mut payload = Vec::with_capacity(data.len() * 8);
    for v in data {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(payload_path, payload)?;
    Ok(())
}

/// Rectangular region of interest for per-region statistics.
#[derive(Clone, Debug)]
pub struct Region {
    pub name: String,
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

impl Region {
    pub fn validate(&self, rows: usize, cols: usize) -> Result<()> {
        if self.height < 1 || self.width < 1 {
            return Err(Error::InvalidParameter(format!(
                "region '{}' is empty",
                self.name
            )));
        }
        if self.row + self.height > rows || self.col + self.width > cols {
            return Err(Error::IndexOutOfRange(format!(
                "region '{}' exceeds the {}x{} map",
                self.name, rows, cols
            )));
        }
        Ok(())
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }
}

/// Percentages of the four classes plus sentinel within a region, in the
/// order none, reflection, rotation, azimuth, sentinel; sums to 100.
pub fn class_percentages(map: &ClassMap, region: &Region) -> Result<[f64; 5]> {
    region.validate(map.rows, map.cols)?;
    let mut counts = [0usize; 5];
    for r in region.row..region.row + region.height {
        for c in region.col..region.col + region.width {
            match map.get(r, c) {
                Some(h) => counts[h.index()] += 1,
                None => counts[4] += 1,
            }
        }
    }
    let total = region.pixel_count() as f64;
    Ok(counts.map(|n| 100.0 * n as f64 / total))
}

/// Percentages of the nine zones plus sentinel within a region (Z1..Z9 then
/// sentinel); sums to 100.
pub fn zone_percentages(maps: &DecompositionMaps, region: &Region) -> Result<[f64; 10]> {
    region.validate(maps.rows, maps.cols)?;
    let mut counts = [0usize; 10];
    for r in region.row..region.row + region.height {
        for c in region.col..region.col + region.width {
            match maps.zones[r * maps.cols + c] {
                Some(z) => counts[z.number() - 1] += 1,
                None => counts[9] += 1,
            }
        }
    }
    let total = region.pixel_count() as f64;
    Ok(counts.map(|n| 100.0 * n as f64 / total))
}

/// CSV with one row per region: class percentages.
pub fn write_class_region_csv<W: IoWrite>(
    w: &mut W,
    map: &ClassMap,
    regions: &[Region],
) -> Result<()> {
    writeln!(w, "region,none,reflection,rotation,azimuth,sentinel")?;
    for region in regions {
        let p = class_percentages(map, region)?;
        writeln!(
            w,
            "{},{:.4},{:.4},{:.4},{:.4},{:.4}",
            region.name, p[0], p[1], p[2], p[3], p[4]
        )?;
    }
    Ok(())
}

/// CSV with one row per region: zone percentages Z1..Z9 plus sentinel.
pub fn write_zone_region_csv<W: IoWrite>(
    w: &mut W,
    maps: &DecompositionMaps,
    regions: &[Region],
) -> Result<()> {
    writeln!(w, "region,Z1,Z2,Z3,Z4,Z5,Z6,Z7,Z8,Z9,sentinel")?;
    for region in regions {
        let p = zone_percentages(maps, region)?;
        let cells: Vec<String> = p.iter().map(|v| format!("{v:.4}")).collect();
        writeln!(w, "{},{}", region.name, cells.join(","))?;
    }
    Ok(())
}

/// Synthesize a stack whose pixels are independent draws from the
/// Kronecker model, with the polarimetric class chosen per pixel by
/// `class_of(row, col)`. Deterministic in the seed and independent of
/// evaluation order.
pub fn synthesize_stack(
    rows: usize,
    cols: usize,
    passes: usize,
    temporal: TemporalModel,
    seed: u64,
    class_of: impl Fn(usize, usize) -> SymmetryHypothesis + Sync,
) -> Result<MultipassStack> {
    let c_t = temporal.matrix(passes)?;
    let factors: Vec<_> = SymmetryHypothesis::ALL
        .iter()
        .map(|&h| {
            crate::linalg::kronecker(&c_t, &crate::sim::nominal_polarimetric(h))
                .cholesky()
                .expect("nominal covariances are positive definite")
        })
        .collect();
    let stream = stack_stream(passes, temporal);
    let pixels: Vec<Vec<Complex64>> = (0..rows * cols)
        .into_par_iter()
        .map(|idx| {
            let (r, c) = (idx / cols, idx % cols);
            let h = class_of(r, c);
            let mut rng = trial_rng(seed, stream, idx as u64);
            let x = draw_with_rng(&factors[h.index()], passes, 1, &mut rng);
            x.look(0).to_vec()
        })
        .collect();

    let mut stack = MultipassStack::new(
        rows,
        cols,
        passes,
        vec![Complex64::new(0.0, 0.0); rows * cols * passes * CHANNELS],
    )?;
    for (idx, x) in pixels.into_iter().enumerate() {
        let (r, c) = (idx / cols, idx % cols);
        for m in 0..passes {
            for n in 0..CHANNELS {
                stack.set(m, n, r, c, x[m * CHANNELS + n]);
            }
        }
    }
    Ok(stack)
}

fn stack_stream(passes: usize, temporal: TemporalModel) -> u64 {
    // fixed tag so stack synthesis streams differ from simulator streams
    let mut h = 0x57ac4_u64;
    for v in [passes as u64, temporal_hash(temporal)] {
        h = h.rotate_left(17) ^ v.wrapping_mul(0x9e3779b97f4a7c15);
    }
    h
}

fn temporal_hash(t: TemporalModel) -> u64 {
    match t {
        TemporalModel::Identity => 1,
        TemporalModel::Exponential { rho } => 2u64.wrapping_add(rho.to_bits()),
    }
}

//! Grayscale heatmaps of `μ` over the approximate-square partition.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::phase::PhaseState;
use crate::symbolic::{rational_to_f64, BernoulliSpec};

/// Gray levels, row-major from the top edge `y = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
    pub max_mass: f64,
    pub min_positive_mass: f64,
}

fn base_digits(mut index: u64, base: usize, len: usize) -> Vec<u8> {
    let mut out = vec![0u8; len];
    for d in out.iter_mut().rev() {
        *d = (index % base as u64) as u8;
        index /= base as u64;
    }
    out
}

/// Intensity `∝ log μ(cell)` of the depth-`k` cell containing each pixel
/// centre, scaled so the heaviest cell is 255; zero-mass cells are 0.
pub fn heatmap(spec: &BernoulliSpec, k: usize, start: &PhaseState, width: usize, height: usize) -> Result<Heatmap> {
    if width < 16 || height < 16 {
        return Err(Error::Config(format!("image {width}x{height} is below 16x16")));
    }
    let ell = start.advanced(k as u64).lift()? as usize;
    let (m, n) = (spec.m(), spec.n());
    let cols = (m as u64).pow(k as u32);
    let rows = (n as u64).pow(ell as u32);
    let mut cache: HashMap<(u64, u64), f64> = HashMap::new();
    let mut masses = Vec::with_capacity(width * height);
    for py in 0..height {
        let y = 1.0 - (py as f64 + 0.5) / height as f64;
        let cy = ((y * rows as f64) as u64).min(rows - 1);
        for px in 0..width {
            let x = (px as f64 + 0.5) / width as f64;
            let cx = ((x * cols as f64) as u64).min(cols - 1);
            let mass = *cache.entry((cx, cy)).or_insert_with(|| {
                let i = base_digits(cx, m, k);
                let j = base_digits(cy, n, ell);
                rational_to_f64(&spec.cylinder_mass_digits(&i, &j))
            });
            masses.push(mass);
        }
    }
    let positive = masses.iter().copied().filter(|&w| w > 0.0);
    let max = positive.clone().fold(0.0, f64::max);
    let min = positive.fold(f64::INFINITY, f64::min);
    let (lo, hi) = (min.ln(), max.ln());
    let pixels = masses
        .iter()
        .map(|&w| {
            if w <= 0.0 {
                0
            } else if hi - lo < 1e-12 {
                255
            } else {
                (1.0 + 254.0 * (w.ln() - lo) / (hi - lo)).round() as u8
            }
        })
        .collect();
    Ok(Heatmap {
        width,
        height,
        pixels,
        max_mass: max,
        min_positive_mass: min,
    })
}

impl Heatmap {
    /// Binary PPM (`P6`) with equal channels.
    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        write!(out, "P6\n{} {}\n255\n", self.width, self.height)?;
        for &g in &self.pixels {
            out.write_all(&[g, g, g])?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn render_heatmap(
    spec: &BernoulliSpec,
    k: usize,
    start: &PhaseState,
    width: usize,
    height: usize,
    path: &Path,
) -> Result<Heatmap> {
    let map = heatmap(spec, k, start, width, height)?;
    map.write_ppm(path)?;
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::{Angle, Frac};
    use std::sync::Arc;

    fn start() -> PhaseState {
        PhaseState::new(Arc::new(Angle::new(2, 3, 128).unwrap()), Frac::zero(128))
    }

    #[test]
    fn uniform_is_constant() {
        let u = BernoulliSpec::uniform(2, 3).unwrap();
        let map = heatmap(&u, 4, &start(), 32, 32).unwrap();
        assert!(map.pixels.iter().all(|&p| p == 255));
    }

    #[test]
    fn point_mass_lights_one_cell() {
        let point = BernoulliSpec::carpet(2, 3, &[(1, 2)]).unwrap();
        let map = heatmap(&point, 3, &start(), 64, 54).unwrap();
        let lit: Vec<usize> = (0..map.pixels.len()).filter(|&p| map.pixels[p] > 0).collect();
        assert!(!lit.is_empty());
        // top-right cell: x in [7/8, 1), y in [2/3, 1)
        for p in lit {
            let (px, py) = (p % 64, p / 64);
            assert!(px >= 56 && py < 18, "{px} {py}");
        }
    }

    #[test]
    fn carpet_has_black_cells() {
        let c1 = BernoulliSpec::carpet(2, 3, &[(0, 0), (0, 2), (1, 1)]).unwrap();
        let map = heatmap(&c1, 6, &start(), 64, 64).unwrap();
        let black = map.pixels.iter().filter(|&&p| p == 0).count();
        assert!(black > 0 && black < map.pixels.len());
        // column 0 of the top row is the (0, 2) cell; the bottom-right cell (1, 0) is empty
        assert!(map.pixels[0] > 0);
        assert_eq!(map.pixels[64 * 64 - 1], 0);
    }

    #[test]
    fn ppm_layout() {
        let u = BernoulliSpec::uniform(2, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.ppm");
        render_heatmap(&u, 2, &start(), 16, 20, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let header = b"P6\n16 20\n255\n";
        assert!(bytes.starts_with(header));
        assert_eq!(bytes.len(), header.len() + 16 * 20 * 3);
        assert!(heatmap(&u, 2, &start(), 8, 20).is_err());
    }
}

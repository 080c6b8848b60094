use crate::error::{Error, Result};
use crate::io::{decode_pgm, encode_pgm8};
use crate::scene::SystemGeometry;

/// Per-pixel LED drive levels in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LedPattern {
    pub cols: usize,
    pub rows: usize,
    values: Vec<f64>,
    binary: bool,
}

impl LedPattern {
    pub fn filled(cols: usize, rows: usize, v: f64) -> Self {
        assert!((0.0..=1.0).contains(&v));
        Self { cols, rows, values: vec![v; cols * rows], binary: v == 0.0 || v == 1.0 }
    }

    pub fn all_on(geom: &SystemGeometry) -> Self {
        Self::filled(geom.led_cols, geom.led_rows, 1.0)
    }

    pub fn all_off(geom: &SystemGeometry) -> Self {
        Self::filled(geom.led_cols, geom.led_rows, 0.0)
    }

    /// Single lit pixel.
    pub fn unit(geom: &SystemGeometry, index: usize) -> Self {
        let mut p = Self::all_off(geom);
        p.values[index] = 1.0;
        p
    }

    pub fn from_values(cols: usize, rows: usize, values: Vec<f64>, binary: bool) -> Result<Self> {
        if values.len() != cols * rows {
            return Err(Error::Invariant(format!("pattern has {} values for a {cols}x{rows} panel", values.len())));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Invariant(format!("pattern value {v} at pixel {i} outside [0, 1]")));
        }
        if binary && values.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Invariant("binary pattern holds values other than 0 and 1".into()));
        }
        Ok(Self { cols, rows, values, binary })
    }

    /// Binary pattern with the given pixels off and all others on.
    pub fn with_off(cols: usize, rows: usize, off: &[bool]) -> Self {
        assert_eq!(off.len(), cols * rows);
        Self { cols, rows, values: off.iter().map(|&o| if o { 0.0 } else { 1.0 }).collect(), binary: true }
    }

    pub fn is_binary(&self) -> bool {
        self.binary
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn off_mask(&self) -> Vec<bool> {
        self.values.iter().map(|&v| v == 0.0).collect()
    }

    pub fn off_count(&self) -> usize {
        self.values.iter().filter(|&&v| v == 0.0).count()
    }

    pub fn matches(&self, geom: &SystemGeometry) -> Result<()> {
        if self.cols != geom.led_cols || self.rows != geom.led_rows {
            return Err(Error::Invariant(format!(
                "pattern is {}x{} but the panel is {}x{}",
                self.cols, self.rows, geom.led_cols, geom.led_rows
            )));
        }
        Ok(())
    }

    /// 8-bit PGM, 0 = off, 255 = full on.
    pub fn to_pgm(&self) -> Vec<u8> {
        let q: Vec<u8> = self.values.iter().map(|&v| (v * 255.0).round() as u8).collect();
        encode_pgm8(self.cols, self.rows, &q)
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Self> {
        let img = decode_pgm(bytes)?;
        let m = img.maxval as f64;
        let values: Vec<f64> = img.data.iter().map(|&v| v as f64 / m).collect();
        let binary = img.data.iter().all(|&v| v == 0 || v == img.maxval);
        Self::from_values(img.width, img.height, values, binary)
    }
}

//! Row-major 2-D fields.
//!
//! [`Grid`] is a plain real-valued raster (guides, uncertainty maps).
//! [`DepthField`] adds a validity mask; invalid pixels always hold NaN and
//! valid pixels are finite and strictly positive.

use crate::error::{Error, Result};

/// Smallest depth a valid pixel may carry, in meters.
pub const MIN_DEPTH: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Empty("grid with zero width or height"));
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                found: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Edge-clamped read.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    pub fn same_shape(&self, other_w: usize, other_h: usize) -> Result<()> {
        check_shape(self.width, self.height, other_w, other_h)
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

pub(crate) fn check_shape(w: usize, h: usize, ow: usize, oh: usize) -> Result<()> {
    if w == ow && h == oh {
        Ok(())
    } else {
        Err(Error::ShapeMismatch {
            left_w: w,
            left_h: h,
            right_w: ow,
            right_h: oh,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthField {
    width: usize,
    height: usize,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl DepthField {
    /// Builds a field from raw values; every pixel that is finite and
    /// positive is valid, everything else becomes an invalid NaN pixel.
    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Empty("depth field with zero width or height"));
        }
        if values.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                found: values.len(),
            });
        }
        let mut values = values;
        let valid: Vec<bool> = values
            .iter_mut()
            .map(|v| {
                if v.is_finite() && *v > 0.0 {
                    true
                } else {
                    *v = f64::NAN;
                    false
                }
            })
            .collect();
        Ok(Self {
            width,
            height,
            values,
            valid,
        })
    }

    /// Builds a field with an explicit mask. Valid pixels must be finite and
    /// positive; values under invalid pixels are replaced by NaN.
    pub fn with_mask(
        width: usize,
        height: usize,
        values: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        if values.len() != valid.len() {
            return Err(Error::DimensionMismatch {
                expected: values.len(),
                found: valid.len(),
            });
        }
        let mut field = Self::from_values(width, height, values.clone())?;
        for (i, (&v, &ok)) in values.iter().zip(&valid).enumerate() {
            if ok && !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(
                    "valid",
                    format!("pixel {i} marked valid but holds {v}"),
                ));
            }
            if !ok {
                field.values[i] = f64::NAN;
                field.valid[i] = false;
            }
        }
        Ok(field)
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::from_values(width, height, vec![value; width * height])
    }

    pub fn from_grid(grid: &Grid) -> Result<Self> {
        Self::from_values(grid.width, grid.height, grid.data.clone())
    }

    /// Like [`DepthField::from_values`] but clamps finite values up to
    /// [`MIN_DEPTH`] instead of invalidating them.
    pub fn from_values_clamped(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        let values = values
            .into_iter()
            .map(|v| if v.is_finite() { v.max(MIN_DEPTH) } else { v })
            .collect();
        Self::from_values(width, height, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[y * self.width + x]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn is_fully_valid(&self) -> bool {
        self.valid.iter().all(|&v| v)
    }

    pub fn same_shape(&self, other_w: usize, other_h: usize) -> Result<()> {
        check_shape(self.width, self.height, other_w, other_h)
    }

    /// Values as a grid; invalid pixels stay NaN.
    pub fn to_grid(&self) -> Grid {
        Grid {
            width: self.width,
            height: self.height,
            data: self.values.clone(),
        }
    }
}

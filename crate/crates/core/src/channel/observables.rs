use crate::channel::params::ReceiverSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Analytical,
    Pbs,
}

/// Concentration (1/m^2, per released molecule) sampled at one receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Monte Carlo standard error of each value, if known.
    pub stderr: Option<Vec<f64>>,
    pub source: Source,
    pub receiver: ReceiverSpec,
}

impl ConcentrationSeries {
    pub fn new(
        times: Vec<f64>,
        values: Vec<f64>,
        stderr: Option<Vec<f64>>,
        source: Source,
        receiver: ReceiverSpec,
    ) -> Result<Self> {
        if times.len() != values.len() || stderr.as_ref().is_some_and(|s| s.len() != times.len()) {
            return Err(Error::invalid(
                "series",
                "times, values and stderr lengths differ",
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(
                "series",
                "times must be strictly increasing",
            ));
        }
        Ok(ConcentrationSeries {
            times,
            values,
            stderr,
            source,
            receiver,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the first global maximum.
    pub fn peak_index(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, &v) in self.values.iter().enumerate() {
            if best.is_none_or(|b| v > self.values[b]) {
                best = Some(i);
            }
        }
        best
    }

    /// Values clipped at zero and the number of samples that were negative.
    pub fn clipped_values(&self) -> (Vec<f64>, usize) {
        let clipped = self.values.iter().filter(|&&v| v < 0.0).count();
        (self.values.iter().map(|&v| v.max(0.0)).collect(), clipped)
    }
}

/// A concentration map on square pixels, masked to the disk.
///
/// Values are stored row-major with `y` increasing by row:
/// `values[iy * nx + ix]` is the pixel centered at
/// `(origin.0 + (ix + 0.5) * pixel, origin.1 + (iy + 0.5) * pixel)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    /// Lower-left corner (m).
    pub origin: (f64, f64),
    /// Pixel edge length (m).
    pub pixel: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
    /// True where the pixel center lies inside the disk. Masked-out pixels
    /// hold zero.
    pub mask: Vec<bool>,
    pub t: f64,
}

impl GridField {
    /// Empty square grid centered on the origin, covering at least `extent`,
    /// with the disk mask filled in.
    pub fn centered(pixel: f64, extent: f64, rho_c: f64, t: f64) -> Self {
        let n = (extent / pixel - 1e-9).ceil().max(1.0) as usize;
        let half = 0.5 * n as f64 * pixel;
        let mut field = GridField {
            origin: (-half, -half),
            pixel,
            nx: n,
            ny: n,
            values: vec![0.0; n * n],
            mask: vec![false; n * n],
            t,
        };
        for iy in 0..n {
            for ix in 0..n {
                let (x, y) = field.center(ix, iy);
                field.mask[iy * n + ix] = x.hypot(y) <= rho_c;
            }
        }
        field
    }

    pub fn center(&self, ix: usize, iy: usize) -> (f64, f64) {
        (
            self.origin.0 + (ix as f64 + 0.5) * self.pixel,
            self.origin.1 + (iy as f64 + 0.5) * self.pixel,
        )
    }

    /// Pixel holding the point `(x, y)`, if any.
    pub fn locate(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fx = ((x - self.origin.0) / self.pixel).floor();
        let fy = ((y - self.origin.1) / self.pixel).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.nx as f64 || fy >= self.ny as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    /// `sum(values) * pixel^2`; masked pixels hold zero.
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.pixel * self.pixel
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .map(|(&v, _)| v)
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_validation() {
        let rx = ReceiverSpec::point(0.0, 0.0);
        assert!(
            ConcentrationSeries::new(vec![1.0, 1.0], vec![0.0, 0.0], None, Source::Pbs, rx)
                .is_err()
        );
        assert!(
            ConcentrationSeries::new(vec![1.0], vec![0.0, 0.0], None, Source::Pbs, rx).is_err()
        );
        let s = ConcentrationSeries::new(
            vec![1.0, 2.0, 3.0],
            vec![1.0, -0.5, 3.0],
            None,
            Source::Pbs,
            rx,
        )
        .unwrap();
        assert_eq!(s.peak_index(), Some(2));
        let (clipped, count) = s.clipped_values();
        assert_eq!(clipped, vec![1.0, 0.0, 3.0]);
        assert_eq!(count, 1);
    }

    #[test]
    fn grid_geometry() {
        let field = GridField::centered(20e-6, 200e-6, 100e-6, 0.0);
        assert_eq!(field.nx, 10);
        let (x, y) = field.center(0, 0);
        assert!((x + 90e-6).abs() < 1e-18 && (y + 90e-6).abs() < 1e-18);
        assert_eq!(field.locate(1e-7, 1e-7), Some((5, 5)));
        assert_eq!(field.locate(-1e-7, 1e-7), Some((4, 5)));
        assert_eq!(field.locate(1.0, 0.0), None);
        // Corner pixels fall outside the disk.
        assert!(!field.mask[0]);
        assert!(field.mask[5 * 10 + 5]);
    }
}

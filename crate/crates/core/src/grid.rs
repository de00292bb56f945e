use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::distribution::TargetDistribution;
use crate::error::{Error, Result};

/// Uniform angular grid over `[-π/2, π/2]`, endpoints included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularGrid {
    points: Vec<f64>,
}

impl AngularGrid {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::InvalidConfig(format!(
                "angular grid needs at least 2 points, got {size}"
            )));
        }
        // built in degrees so that e.g. 361 points land on exact half degrees
        let step = 180.0 / (size - 1) as f64;
        let points = (0..size)
            .map(|k| {
                if k == 0 {
                    -FRAC_PI_2
                } else if k == size - 1 {
                    FRAC_PI_2
                } else {
                    (-90.0 + k as f64 * step).to_radians()
                }
            })
            .collect();
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Spacing between neighbouring points (radians).
    pub fn cell_width(&self) -> f64 {
        std::f64::consts::PI / (self.points.len() - 1) as f64
    }

    pub fn degrees(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.points.len();
        let step = 180.0 / (n - 1) as f64;
        (0..n).map(move |k| -90.0 + k as f64 * step)
    }

    /// Index of the grid point closest to `theta`.
    pub fn nearest(&self, theta: f64) -> usize {
        let k = ((theta + FRAC_PI_2) / self.cell_width()).round();
        (k.max(0.0) as usize).min(self.points.len() - 1)
    }
}

/// Grid points where the prior is significant, with their densities.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportGrid {
    pub angles: Vec<f64>,
    pub densities: Vec<f64>,
    pub cell_width: f64,
}

/// Default cut-off relative to the peak density on the grid.
pub const DEFAULT_PDF_FLOOR: f64 = 1e-6;

impl SupportGrid {
    /// Points with `pdf ≥ floor · peak`. A point mass yields its own angle
    /// with density `1 / cell_width`.
    pub fn new(dist: &TargetDistribution, grid: &AngularGrid, floor: f64) -> Result<Self> {
        let cell_width = grid.cell_width();
        if let TargetDistribution::PointMass { theta0 } = dist {
            return Ok(Self {
                angles: vec![*theta0],
                densities: vec![1.0 / cell_width],
                cell_width,
            });
        }
        let pdf: Vec<f64> = grid.points().iter().map(|&t| dist.pdf(t)).collect();
        let peak = pdf.iter().cloned().fold(0.0, f64::max);
        if !(peak > 0.0) {
            return Err(Error::EmptyGrid("prior density vanishes on every grid point".into()));
        }
        let (angles, densities): (Vec<f64>, Vec<f64>) = grid
            .points()
            .iter()
            .zip(&pdf)
            .filter(|(_, &f)| f > 0.0 && f >= floor * peak)
            .map(|(&t, &f)| (t, f))
            .unzip();
        if angles.is_empty() {
            return Err(Error::EmptyGrid(format!("pdf floor {floor} excludes every point")));
        }
        Ok(Self {
            angles,
            densities,
            cell_width,
        })
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_degree_grid() {
        let g = AngularGrid::new(361).unwrap();
        assert_eq!(g.len(), 361);
        assert_eq!(g.points()[0], -FRAC_PI_2);
        assert_eq!(g.points()[360], FRAC_PI_2);
        assert_eq!(g.points()[180], 0.0);
        assert!(g.points().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(g.degrees().nth(1), Some(-89.5));
        assert_eq!(g.nearest(0.3f64.to_radians()), 181);
        assert!(AngularGrid::new(1).is_err());
    }

    #[test]
    fn support_grid_of_interval() {
        let g = AngularGrid::new(361).unwrap();
        let d = TargetDistribution::uniform(vec![(-10f64.to_radians(), 10f64.to_radians())], vec![1.0])
            .unwrap();
        let s = SupportGrid::new(&d, &g, DEFAULT_PDF_FLOOR).unwrap();
        assert_eq!(s.len(), 41);
        let p = SupportGrid::new(&TargetDistribution::point_mass(0.2).unwrap(), &g, 1e-6).unwrap();
        assert_eq!(p.angles, vec![0.2]);
    }

    #[test]
    fn floor_above_peak_rejected() {
        let g = AngularGrid::new(181).unwrap();
        let d = TargetDistribution::gaussian(vec![0.0], 0.05, vec![1.0]).unwrap();
        assert!(matches!(SupportGrid::new(&d, &g, 2.0), Err(Error::EmptyGrid(_))));
    }
}

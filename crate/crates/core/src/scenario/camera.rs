use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::scalar::Scalar;

/// Camera parameters fixing the minimum hovering height over a cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraGeometry<S> {
    pub pixels: S,
    /// Focal length from camera calibration, meters.
    pub focal_length: S,
    /// Ground sampling distance, meters per pixel.
    pub ground_sampling_distance: S,
}

impl<S: Scalar> CameraGeometry<S> {
    /// Minimum hovering height `GSD * c_k / PX` in meters.
    pub fn hover_height(&self) -> Result<S, ScenarioError> {
        for (name, v) in [
            ("pixels", self.pixels),
            ("focal_length", self.focal_length),
            ("ground_sampling_distance", self.ground_sampling_distance),
        ] {
            if !(v > S::zero()) || !v.is_finite() {
                return Err(ScenarioError::NonPositiveCamera(name));
            }
        }
        Ok(self.ground_sampling_distance * self.focal_length / self.pixels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_pixels_halves_height() {
        let cam = CameraGeometry {
            pixels: 4000.0f64,
            focal_length: 0.009,
            ground_sampling_distance: 0.02,
        };
        let doubled = CameraGeometry {
            pixels: 8000.0,
            ..cam
        };
        let h = cam.hover_height().unwrap();
        assert!((doubled.hover_height().unwrap() - h / 2.0).abs() < 1e-18);
    }

    #[test]
    fn anchors_82_4_meters() {
        // Any triple with GSD * c_k = 82.4 * PX.
        let cam = CameraGeometry {
            pixels: 3840.0f64,
            focal_length: 82.4 * 3840.0 / 50.0,
            ground_sampling_distance: 50.0,
        };
        assert!((cam.hover_height().unwrap() - 82.4).abs() < 1e-9);
    }

    #[test]
    fn direct_substitution() {
        let cam = CameraGeometry {
            pixels: 2.0f64,
            focal_length: 0.009,
            ground_sampling_distance: 0.02,
        };
        // 0.02 * 0.009 / 2 = 9e-5
        assert!((cam.hover_height().unwrap() - 9e-5).abs() < 1e-18);
    }

    #[test]
    fn rejects_non_positive_fields() {
        let cam = CameraGeometry {
            pixels: 0.0f64,
            focal_length: 1.0,
            ground_sampling_distance: 1.0,
        };
        assert_eq!(
            cam.hover_height(),
            Err(ScenarioError::NonPositiveCamera("pixels"))
        );
        let cam = CameraGeometry {
            focal_length: -1.0,
            pixels: 1.0,
            ground_sampling_distance: 1.0,
        };
        assert_eq!(
            cam.hover_height(),
            Err(ScenarioError::NonPositiveCamera("focal_length"))
        );
    }
}

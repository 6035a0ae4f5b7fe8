//! Dataset manifest files: a JSON record of labeled row-major images.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PointSet, Signal};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub width: usize,
    pub height: usize,
    pub n_classes: usize,
    pub samples: Vec<ManifestSample>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestSample {
    pub label: usize,
    pub pixels: Vec<f64>,
}

impl DatasetManifest {
    pub fn from_point_set(ps: &PointSet, width: usize, height: usize) -> Result<Self> {
        let labels = ps.labels().ok_or(Error::BadLabels)?;
        if ps.dimension() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                got: ps.dimension(),
            });
        }
        let n_classes = labels.iter().max().map(|m| m + 1).unwrap_or(0);
        Ok(DatasetManifest {
            width,
            height,
            n_classes,
            samples: ps
                .iter()
                .zip(labels)
                .map(|(x, &label)| ManifestSample {
                    label,
                    pixels: x.values().to_vec(),
                })
                .collect(),
        })
    }

    pub fn to_point_set(&self) -> Result<PointSet> {
        let dim = self.width * self.height;
        let mut points = Vec::with_capacity(self.samples.len());
        let mut labels = Vec::with_capacity(self.samples.len());
        for s in &self.samples {
            if s.pixels.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.pixels.len(),
                });
            }
            if s.label >= self.n_classes {
                return Err(Error::LabelOutOfRange {
                    label: s.label,
                    n_classes: self.n_classes,
                });
            }
            points.push(Signal::new(s.pixels.clone())?);
            labels.push(s.label);
        }
        PointSet::with_labels(points, labels)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn parse(s: &str) -> Result<Self> {
        let m: DatasetManifest = serde_json::from_str(s)
            .map_err(|e| Error::InvalidConfig(format!("manifest parse: {e}")))?;
        // validate eagerly so a parsed manifest is always usable
        m.to_point_set()?;
        Ok(m)
    }
}

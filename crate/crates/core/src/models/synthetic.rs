use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng;

fn default_per_class() -> usize {
    40
}

fn default_pixel_noise() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Motif {
    /// Class `c` lights up a square block in corner `c` (clockwise from the
    /// top-left); at most four classes.
    Corners,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    /// Isotropic unit-variance clouds. Class means sit on a regular polygon
    /// in the first two coordinates with adjacent means `separation` apart
    /// (on a line for `dim == 1` or two classes).
    GaussianBlobs {
        classes: usize,
        dim: usize,
        per_class: usize,
        separation: f64,
    },
    TwoMoons {
        n: usize,
        noise: f64,
    },
    /// `side * side` pixel images, row-major.
    GridImage {
        classes: usize,
        side: usize,
        motif: Motif,
        #[serde(default = "default_per_class")]
        per_class: usize,
        #[serde(default = "default_pixel_noise")]
        noise: f64,
    },
}

/// What the generator knows that the data alone does not reveal.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_means: Option<Vec<Vec<f64>>>,
    /// Per class, the pixel indices carrying its motif.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub salient_pixels: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub dataset: Dataset,
    pub truth: GroundTruth,
}

const BACKGROUND_LEVEL: f64 = 0.2;
const MOTIF_LEVEL: f64 = 1.0;

pub fn make_synthetic(spec: &GeneratorSpec, seed: u64) -> Result<Synthetic> {
    let mut rng = rng::seeded(seed);
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };
    match *spec {
        GeneratorSpec::GaussianBlobs {
            classes,
            dim,
            per_class,
            separation,
        } => {
            if classes == 0 || dim == 0 || per_class == 0 || !(separation >= 0.0) {
                return Err(Error::BadSpec(
                    "gaussian-blobs needs positive classes, dim and per_class".into(),
                ));
            }
            let means = blob_means(classes, dim, separation);
            let mut features = Vec::with_capacity(classes * per_class);
            let mut labels = Vec::with_capacity(classes * per_class);
            for (c, mean) in means.iter().enumerate() {
                for _ in 0..per_class {
                    features.push(mean.iter().map(|m| m + normal()).collect());
                    labels.push(c);
                }
            }
            Ok(Synthetic {
                dataset: Dataset::new(features, labels, classes)?,
                truth: GroundTruth {
                    class_means: Some(means),
                    salient_pixels: None,
                },
            })
        }
        GeneratorSpec::TwoMoons { n, noise } => {
            if n < 2 || !(noise >= 0.0) {
                return Err(Error::BadSpec(
                    "two-moons needs n >= 2 and noise >= 0".into(),
                ));
            }
            let n_upper = n - n / 2;
            let n_lower = n / 2;
            let mut features = Vec::with_capacity(n);
            let mut labels = Vec::with_capacity(n);
            let step = |i: usize, m: usize| {
                if m > 1 {
                    PI * i as f64 / (m - 1) as f64
                } else {
                    0.0
                }
            };
            for i in 0..n_upper {
                let t = step(i, n_upper);
                features.push(vec![t.cos() + noise * normal(), t.sin() + noise * normal()]);
                labels.push(0);
            }
            for i in 0..n_lower {
                let t = step(i, n_lower);
                features.push(vec![
                    1.0 - t.cos() + noise * normal(),
                    0.5 - t.sin() + noise * normal(),
                ]);
                labels.push(1);
            }
            Ok(Synthetic {
                dataset: Dataset::new(features, labels, 2)?,
                truth: GroundTruth::default(),
            })
        }
        GeneratorSpec::GridImage {
            classes,
            side,
            motif,
            per_class,
            noise,
        } => {
            if classes == 0 || side == 0 || per_class == 0 || !(noise >= 0.0) {
                return Err(Error::BadSpec(
                    "grid-image needs positive classes, side and per_class".into(),
                ));
            }
            let salient = motif_pixels(motif, classes, side)?;
            let mut features = Vec::with_capacity(classes * per_class);
            let mut labels = Vec::with_capacity(classes * per_class);
            for (c, pixels) in salient.iter().enumerate() {
                for _ in 0..per_class {
                    let mut img: Vec<f64> = (0..side * side)
                        .map(|_| BACKGROUND_LEVEL + noise * normal())
                        .collect();
                    for &p in pixels {
                        img[p] = MOTIF_LEVEL + noise * normal();
                    }
                    features.push(img);
                    labels.push(c);
                }
            }
            let mut dataset = Dataset::new(features, labels, classes)?;
            dataset.feature_names = Some(
                (0..side * side)
                    .map(|p| format!("px_{}_{}", p / side, p % side))
                    .collect(),
            );
            Ok(Synthetic {
                dataset,
                truth: GroundTruth {
                    class_means: None,
                    salient_pixels: Some(salient),
                },
            })
        }
    }
}

fn blob_means(classes: usize, dim: usize, separation: f64) -> Vec<Vec<f64>> {
    (0..classes)
        .map(|c| {
            let mut m = vec![0.0; dim];
            if dim == 1 || classes <= 2 {
                m[0] = separation * (c as f64 - (classes as f64 - 1.0) / 2.0);
            } else {
                let radius = separation / (2.0 * (PI / classes as f64).sin());
                let angle = 2.0 * PI * c as f64 / classes as f64;
                m[0] = radius * angle.cos();
                m[1] = radius * angle.sin();
            }
            m
        })
        .collect()
}

fn motif_pixels(motif: Motif, classes: usize, side: usize) -> Result<Vec<Vec<usize>>> {
    match motif {
        Motif::Corners => {
            if classes > 4 {
                return Err(Error::BadSpec(
                    "corner motifs support at most 4 classes".into(),
                ));
            }
            let block = (side / 4).max(1);
            if 2 * block > side {
                return Err(Error::BadSpec("grid too small for corner motifs".into()));
            }
            let far = side - block;
            let corners = [(0, 0), (0, far), (far, far), (far, 0)];
            Ok(corners[..classes]
                .iter()
                .map(|&(r0, c0)| {
                    let mut px = Vec::with_capacity(block * block);
                    for r in r0..r0 + block {
                        for c in c0..c0 + block {
                            px.push(r * side + c);
                        }
                    }
                    px
                })
                .collect())
        }
    }
}

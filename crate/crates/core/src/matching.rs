//! Intra-scale matching: mutual nearest neighbors on features, circular
//! cross-correlation of cylindrical maps for the yaw offset, and one rigid
//! hypothesis per matched pair.
//!
//! Each correspondence carries its own full transform guess: the two patch
//! frames pin everything except the rotation about the shared axis, and the
//! yaw correlation supplies that last degree of freedom. Downstream consensus
//! only has to pick the hypothesis most pairs agree on.

use rayon::prelude::*;

use crate::bootstrap::Scale;
use crate::config::{PipelineConfig, YawMode};
use crate::descriptor::{CylindricalMap, DescriptorSet, FeatureVector};
use crate::error::{Error, Result};
use crate::geom::{yaw_rotation, Point3, RigidTransform, RotationMatrix};

/// Matched point pairs with one rigid-transform hypothesis per pair, pooled
/// across scales before consensus. All columns are index-aligned.
#[derive(Debug, Clone, Default)]
pub struct CorrespondenceSet {
    pub source: Vec<Point3>,
    pub target: Vec<Point3>,
    pub hypotheses: Vec<RigidTransform>,
    pub scales: Vec<Scale>,
}

impl CorrespondenceSet {
    pub fn new() -> CorrespondenceSet {
        CorrespondenceSet::default()
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    pub fn push(
        &mut self,
        source: Point3,
        target: Point3,
        hypothesis: RigidTransform,
        scale: Scale,
    ) {
        self.source.push(source);
        self.target.push(target);
        self.hypotheses.push(hypothesis);
        self.scales.push(scale);
    }

    /// Appends another set, preserving its order after this one's.
    pub fn extend(&mut self, other: CorrespondenceSet) {
        self.source.extend(other.source);
        self.target.extend(other.target);
        self.hypotheses.extend(other.hypotheses);
        self.scales.extend(other.scales);
    }
}

/// Mutual nearest-neighbor matching on feature vectors.
///
/// A pair (i, j) survives iff j is i's nearest target feature and i is j's
/// nearest source feature, squared-Euclidean metric, ties to the lowest
/// index. Output is ordered by source index; each index appears at most once.
pub fn mutual_match(source: &[FeatureVector], target: &[FeatureVector]) -> Vec<(usize, usize)> {
    if source.is_empty() || target.is_empty() {
        return Vec::new();
    }
    let forward: Vec<usize> = source
        .par_iter()
        .map(|f| nearest(f, target))
        .collect();
    let backward: Vec<usize> = target
        .par_iter()
        .map(|f| nearest(f, source))
        .collect();
    forward
        .iter()
        .enumerate()
        .filter(|&(i, &j)| backward[j] == i)
        .map(|(i, &j)| (i, j))
        .collect()
}

fn nearest(query: &FeatureVector, candidates: &[FeatureVector]) -> usize {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (idx, cand) in candidates.iter().enumerate() {
        let d = query.dist2(cand);
        // Strict improvement keeps the lowest index on ties.
        if d < best_d {
            best_d = d;
            best = idx;
        }
    }
    best
}

/// Circular cross-correlation scores: `beta[w]` is the agreement between the
/// source map and the target map when the target's sectors are read `w` steps
/// ahead, so a target that is the source rotated by `k` sectors peaks at
/// `w = k`.
pub fn correlation_scores(c_p: &CylindricalMap, c_q: &CylindricalMap) -> Vec<f64> {
    let (height, sectors, radial) = c_p.shape();
    assert_eq!(c_p.shape(), c_q.shape(), "map shapes must match");
    let mut beta = vec![0.0; sectors];
    for (w, score) in beta.iter_mut().enumerate() {
        let mut acc = 0.0;
        for h in 0..height {
            for wp in 0..sectors {
                let wq = (wp + w) % sectors;
                for d in 0..radial {
                    acc += c_p.get(h, wp, d) * c_q.get(h, wq, d);
                }
            }
        }
        *score = acc;
    }
    beta
}

/// Estimates the fractional sector offset d in [0, W) that best rotates the
/// source map onto the target map.
///
/// A softmax over the correlation scores (temperature 0.1 x their standard
/// deviation, floored at 1e-6) turns the peak into an expectation:
/// `Windowed` takes it over +/-2 sectors around the argmax, unwrapped and
/// then reduced mod W, which avoids the wrap-point bias of a plain
/// expectation; `Full` is that plain expectation over all sectors, kept for
/// comparison.
pub fn estimate_yaw_offset(
    c_p: &CylindricalMap,
    c_q: &CylindricalMap,
    mode: YawMode,
) -> Result<f64> {
    let beta = correlation_scores(c_p, c_q);
    yaw_from_scores(&beta, mode)
}

fn yaw_from_scores(beta: &[f64], mode: YawMode) -> Result<f64> {
    let sectors = beta.len();
    let mut best = 0usize;
    let mut beta_max = f64::NEG_INFINITY;
    let mut beta_min = f64::INFINITY;
    for (w, &b) in beta.iter().enumerate() {
        if b > beta_max {
            beta_max = b;
            best = w;
        }
        beta_min = beta_min.min(b);
    }
    let spread = beta_max - beta_min;
    if spread <= 1e-9 * beta_max.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateScore(
            "correlation scores have no discriminative peak".into(),
        ));
    }

    let n = sectors as f64;
    let mean = beta.iter().sum::<f64>() / n;
    let var = beta.iter().map(|b| (b - mean) * (b - mean)).sum::<f64>() / n;
    let temperature = (0.1 * var.sqrt()).max(1e-6);

    let offset = match mode {
        YawMode::Windowed => {
            // Unwrapped positions best-2 .. best+2 keep the expectation
            // continuous across the circular seam.
            let half = 2.min((sectors - 1) / 2) as i64;
            let mut num = 0.0;
            let mut den = 0.0;
            for j in -half..=half {
                let w = (best as i64 + j).rem_euclid(sectors as i64) as usize;
                let sigma = ((beta[w] - beta_max) / temperature).exp();
                num += (best as f64 + j as f64) * sigma;
                den += sigma;
            }
            num / den
        }
        YawMode::Full => {
            let mut num = 0.0;
            let mut den = 0.0;
            for (w, &b) in beta.iter().enumerate() {
                let sigma = ((b - beta_max) / temperature).exp();
                num += w as f64 * sigma;
                den += sigma;
            }
            num / den
        }
    };
    Ok(offset.rem_euclid(sectors as f64))
}

/// Shortest distance between two offsets on a circle of the given modulus.
pub fn circular_distance(a: f64, b: f64, modulus: f64) -> f64 {
    let d = (a - b).rem_euclid(modulus);
    d.min(modulus - d)
}

/// One rigid hypothesis from a matched pair: rotate source into its canonical
/// frame, spin by the yaw offset, rotate out through the target's frame, and
/// translate so the keypoints coincide. Satisfies R*p + t = q by
/// construction.
pub fn pairwise_transform(
    p: &Point3,
    q: &Point3,
    frame_p: &RotationMatrix,
    frame_q: &RotationMatrix,
    offset: f64,
    sectors: u32,
) -> RigidTransform {
    let yaw = yaw_rotation(offset, sectors).expect("sector count must be at least 2");
    let rotation =
        RotationMatrix::from_valid(frame_q.matrix().transpose() * yaw.matrix() * frame_p.matrix());
    let translation = q.coords - rotation.matrix() * p.coords;
    RigidTransform::new(rotation, translation)
}

/// Matches two descriptor sets of the same scale into correspondences with
/// per-pair hypotheses. Pairs whose yaw correlation has no discriminative
/// peak are dropped; an empty result is the caller's signal, not an error.
pub fn match_scale(
    set_p: &DescriptorSet,
    set_q: &DescriptorSet,
    cfg: &PipelineConfig,
) -> CorrespondenceSet {
    debug_assert_eq!(set_p.scale, set_q.scale);
    let pairs = mutual_match(&set_p.features, &set_q.features);
    let sectors = cfg.map_w as u32;
    let resolved: Vec<Option<(Point3, Point3, RigidTransform)>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            match estimate_yaw_offset(&set_p.maps[i], &set_q.maps[j], cfg.yaw_mode) {
                Ok(offset) => {
                    let p = set_p.keypoints[i];
                    let q = set_q.keypoints[j];
                    let hypothesis = pairwise_transform(
                        &p,
                        &q,
                        &set_p.frames[i],
                        &set_q.frames[j],
                        offset,
                        sectors,
                    );
                    Some((p, q, hypothesis))
                }
                Err(_) => None,
            }
        })
        .collect();

    let mut out = CorrespondenceSet::new();
    for entry in resolved.into_iter().flatten() {
        let (p, q, hypothesis) = entry;
        out.push(p, q, hypothesis, set_p.scale);
    }
    out
}

//! Robust pose estimation: consensus maximization over pooled hypotheses, a
//! seeded RANSAC baseline, and a deterministic fast path that prunes
//! correspondences with a compatibility-graph k-core before graduated
//! non-convexity refinement. All of them share one weighted closed-form
//! alignment kernel.

use std::time::{Duration, Instant};

use nalgebra::{Matrix3, Vector3};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{PipelineConfig, RobustKernel};
use crate::error::{Error, Result};
use crate::geom::{Point3, RigidTransform, RotationMatrix};
use crate::matching::CorrespondenceSet;
use crate::rng::{derived_rng, stream};

/// Outcome of a robust solve: the pose, which correspondences support it,
/// and how hard the solver had to work.
#[derive(Debug, Clone)]
pub struct SolverReport {
    pub transform: RigidTransform,
    /// Indices into the correspondence set the solver was given.
    pub inliers: Vec<usize>,
    /// Outer iterations (RANSAC samples or GNC/IRLS rounds) actually run.
    pub iterations: usize,
    pub wall: Duration,
    pub converged: bool,
}

impl SolverReport {
    pub fn inlier_count(&self) -> usize {
        self.inliers.len()
    }
}

/// Indices of pairs whose residual under `transform` is strictly below
/// `epsilon`, in ascending order.
pub fn count_inliers(
    corr: &CorrespondenceSet,
    transform: &RigidTransform,
    epsilon: f64,
) -> Vec<usize> {
    corr.source
        .iter()
        .zip(&corr.target)
        .enumerate()
        .filter(|(_, (p, q))| (transform.apply_point(p) - **q).norm() < epsilon)
        .map(|(i, _)| i)
        .collect()
}

fn mean_residual(corr: &CorrespondenceSet, transform: &RigidTransform, indices: &[usize]) -> f64 {
    if indices.is_empty() {
        return f64::INFINITY;
    }
    let total: f64 = indices
        .iter()
        .map(|&i| (transform.apply_point(&corr.source[i]) - corr.target[i]).norm())
        .sum();
    total / indices.len() as f64
}

/// Winner of cross-scale consensus: the pooled hypothesis most pairs agree
/// with, and the pairs that agree.
#[derive(Debug, Clone)]
pub struct Consensus {
    pub best_index: usize,
    pub transform: RigidTransform,
    pub inliers: Vec<usize>,
}

/// Scores every hypothesis by strict inlier count over the pooled pairs and
/// returns the argmax. Ties fall to the smaller mean inlier residual, then to
/// the lower hypothesis index, so the result is independent of thread count.
pub fn consensus_maximize(
    corr: &CorrespondenceSet,
    hypotheses: &[RigidTransform],
    epsilon: f64,
) -> Result<Consensus> {
    if corr.is_empty() || hypotheses.is_empty() {
        return Err(Error::NoHypothesis);
    }
    let scored: Vec<(usize, f64)> = hypotheses
        .par_iter()
        .map(|t| {
            let inliers = count_inliers(corr, t, epsilon);
            let mean = mean_residual(corr, t, &inliers);
            (inliers.len(), mean)
        })
        .collect();
    let mut best = 0usize;
    for i in 1..scored.len() {
        let (count, mean) = scored[i];
        let (best_count, best_mean) = scored[best];
        if count > best_count || (count == best_count && mean < best_mean) {
            best = i;
        }
    }
    Ok(Consensus {
        best_index: best,
        transform: hypotheses[best].clone(),
        inliers: count_inliers(corr, &hypotheses[best], epsilon),
    })
}

/// Weighted closed-form rigid alignment (Kabsch with a determinant guard):
/// minimizes the weighted sum of squared residuals over proper rotations.
/// When the unconstrained optimum is a reflection, the sign fix lands on the
/// direction of smallest singular value, which is the residual-optimal
/// proper rotation.
pub fn kabsch_weighted(
    source: &[Point3],
    target: &[Point3],
    weights: &[f64],
) -> Result<RigidTransform> {
    if source.len() != target.len() || source.len() != weights.len() {
        return Err(Error::invalid(
            "source, target, and weights must have equal lengths",
        ));
    }
    if source.len() < 3 {
        return Err(Error::InsufficientCorrespondences {
            have: source.len(),
            need: 3,
        });
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::invalid("weights must be finite and non-negative"));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateAlignment("total weight is zero".into()));
    }

    let mut p_bar = Vector3::zeros();
    let mut q_bar = Vector3::zeros();
    for ((p, q), &w) in source.iter().zip(target).zip(weights) {
        p_bar += w * p.coords;
        q_bar += w * q.coords;
    }
    p_bar /= total;
    q_bar /= total;

    let mut h = Matrix3::zeros();
    for ((p, q), &w) in source.iter().zip(target).zip(weights) {
        h += w * (p.coords - p_bar) * (q.coords - q_bar).transpose();
    }

    let svd = h.svd(true, true);
    let u = svd.u.expect("svd requested u");
    let v = svd.v_t.expect("svd requested v_t").transpose();
    let sv = svd.singular_values;
    let mut sorted = [sv[0], sv[1], sv[2]];
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    // Rank < 2 means the weighted support is collinear (or a single point):
    // the in-plane spin is unconstrained and no unique optimum exists.
    if !(sorted[1] > 1e-12 * sorted[0]) {
        return Err(Error::DegenerateAlignment(
            "weighted correspondences are collinear or coincident".into(),
        ));
    }
    let mut smallest = 0usize;
    for k in 1..3 {
        if sv[k] < sv[smallest] {
            smallest = k;
        }
    }
    let mut d = Matrix3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        d[(smallest, smallest)] = -1.0;
    }
    let r = v * d * u.transpose();
    let rotation = RotationMatrix::try_new(r)?;
    let translation = q_bar - r * p_bar;
    Ok(RigidTransform::new(rotation, translation))
}

/// Smallest altitude of the triangle a-b-c; zero for collinear points.
fn min_triangle_height(a: &Point3, b: &Point3, c: &Point3) -> f64 {
    let ab = b - a;
    let ac = c - a;
    let bc = c - b;
    let double_area = ab.cross(&ac).norm();
    let longest = ab.norm().max(ac.norm()).max(bc.norm());
    if longest == 0.0 {
        0.0
    } else {
        double_area / longest
    }
}

fn draw_triple(
    rng: &mut ChaCha8Rng,
    corr: &CorrespondenceSet,
    height_floor: f64,
) -> Option<[usize; 3]> {
    const ATTEMPTS: usize = 32;
    let n = corr.len();
    for _ in 0..ATTEMPTS {
        let picked = rand::seq::index::sample(rng, n, 3);
        let tri = [picked.index(0), picked.index(1), picked.index(2)];
        let src_ok = min_triangle_height(
            &corr.source[tri[0]],
            &corr.source[tri[1]],
            &corr.source[tri[2]],
        ) >= height_floor;
        let tgt_ok = min_triangle_height(
            &corr.target[tri[0]],
            &corr.target[tri[1]],
            &corr.target[tri[2]],
        ) >= height_floor;
        if src_ok && tgt_ok {
            return Some(tri);
        }
    }
    None
}

fn fit_triple(corr: &CorrespondenceSet, tri: [usize; 3]) -> Option<RigidTransform> {
    let src: Vec<Point3> = tri.iter().map(|&i| corr.source[i]).collect();
    let tgt: Vec<Point3> = tri.iter().map(|&i| corr.target[i]).collect();
    kabsch_weighted(&src, &tgt, &[1.0, 1.0, 1.0]).ok()
}

/// Scale reference for degeneracy thresholds: the source bounding diagonal.
fn correspondence_scale(corr: &CorrespondenceSet) -> f64 {
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for p in &corr.source {
        lo = lo.inf(&p.coords);
        hi = hi.sup(&p.coords);
    }
    let diag = (hi - lo).norm();
    if diag > 0.0 {
        diag
    } else {
        1.0
    }
}

/// Seeded RANSAC over 3-pair minimal samples, scored by strict inlier count
/// and refined by uniform-weight alignment on the winning inlier set.
///
/// `confidence` drives standard adaptive stopping; passing 1.0 disables the
/// early exit so exactly `max_iter` samples are evaluated (the fixed-budget
/// protocol used for baseline timing). Samples are drawn sequentially from
/// one seeded stream and evaluated in order-stable parallel batches, so the
/// result does not depend on thread count.
pub fn ransac(
    corr: &CorrespondenceSet,
    epsilon: f64,
    max_iter: usize,
    confidence: f64,
    seed: u64,
) -> Result<SolverReport> {
    let start = Instant::now();
    let n = corr.len();
    if n < 3 {
        return Err(Error::InsufficientCorrespondences { have: n, need: 3 });
    }
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    let height_floor = 1e-6 * correspondence_scale(corr);
    let mut rng = derived_rng(seed, &[stream::RANSAC]);

    const BATCH: usize = 256;
    // (count, mean residual, iteration index, transform)
    let mut best: Option<(usize, f64, usize, RigidTransform)> = None;
    let mut iterations = 0usize;
    let mut required = max_iter;

    while iterations < required {
        let batch_len = BATCH.min(required - iterations);
        let triples: Vec<Option<[usize; 3]>> = (0..batch_len)
            .map(|_| draw_triple(&mut rng, corr, height_floor))
            .collect();
        let evals: Vec<Option<(usize, f64, RigidTransform)>> = triples
            .par_iter()
            .map(|tri| {
                let transform = fit_triple(corr, (*tri)?)?;
                let inliers = count_inliers(corr, &transform, epsilon);
                let mean = mean_residual(corr, &transform, &inliers);
                Some((inliers.len(), mean, transform))
            })
            .collect();
        for (offset, eval) in evals.into_iter().enumerate() {
            let Some((count, mean, transform)) = eval else {
                continue;
            };
            let replace = match &best {
                None => true,
                Some((bc, bm, _, _)) => count > *bc || (count == *bc && mean < *bm),
            };
            if replace {
                best = Some((count, mean, iterations + offset, transform));
            }
        }
        iterations += batch_len;

        if confidence < 1.0 {
            if let Some((count, _, _, _)) = &best {
                let w = *count as f64 / n as f64;
                let fail = 1.0 - w * w * w;
                required = if fail <= 0.0 {
                    iterations
                } else if fail >= 1.0 {
                    max_iter
                } else {
                    let needed = ((1.0 - confidence).ln() / fail.ln()).ceil();
                    (needed.max(0.0) as usize).min(max_iter)
                };
            }
        }
    }

    let Some((_, _, _, mut transform)) = best else {
        return Err(Error::NoHypothesis);
    };
    // Refit on the inlier set until it stabilizes; accept a refit only if it
    // keeps at least as many inliers.
    let mut inliers = count_inliers(corr, &transform, epsilon);
    for _ in 0..10 {
        if inliers.len() < 3 {
            break;
        }
        let src: Vec<Point3> = inliers.iter().map(|&i| corr.source[i]).collect();
        let tgt: Vec<Point3> = inliers.iter().map(|&i| corr.target[i]).collect();
        let weights = vec![1.0; inliers.len()];
        let Ok(refit) = kabsch_weighted(&src, &tgt, &weights) else {
            break;
        };
        let refit_inliers = count_inliers(corr, &refit, epsilon);
        if refit_inliers.len() < inliers.len() {
            break;
        }
        let stable = refit_inliers == inliers;
        transform = refit;
        inliers = refit_inliers;
        if stable {
            break;
        }
    }

    Ok(SolverReport {
        transform,
        inliers,
        iterations,
        wall: start.elapsed(),
        converged: true,
    })
}

/// Undirected compatibility graph over correspondences: pairs are connected
/// when a rigid motion could explain both, i.e. their source and target
/// separations differ by at most 2*beta. Adjacency is stored as packed bit
/// rows, so dense graphs over thousands of pairs stay small and the k-core
/// peel stays cache-friendly.
#[derive(Debug, Clone)]
pub struct CompatibilityGraph {
    n: usize,
    words: usize,
    rows: Vec<u64>,
    pub beta: f64,
}

impl CompatibilityGraph {
    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.n && j < self.n);
        self.rows[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    pub fn degree(&self, i: usize) -> usize {
        let row = &self.rows[i * self.words..(i + 1) * self.words];
        row.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n).map(|i| self.degree(i)).sum::<usize>() / 2
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let row = &self.rows[i * self.words..(i + 1) * self.words];
        row.iter().enumerate().flat_map(|(word_idx, &word)| {
            let base = word_idx * 64;
            BitIter { word }.map(move |b| base + b)
        })
    }

    /// Builds a graph from an explicit edge list (primarily for tests and
    /// oracles); out-of-range or self edges are rejected by debug assert.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], beta: f64) -> CompatibilityGraph {
        let words = n.div_ceil(64).max(1);
        let mut rows = vec![0u64; n * words];
        for &(a, b) in edges {
            debug_assert!(a != b && a < n && b < n);
            rows[a * words + b / 64] |= 1 << (b % 64);
            rows[b * words + a / 64] |= 1 << (a % 64);
        }
        CompatibilityGraph {
            n,
            words,
            rows,
            beta,
        }
    }
}

struct BitIter {
    word: u64,
}

impl Iterator for BitIter {
    type Item = usize;
    fn next(&mut self) -> Option<usize> {
        if self.word == 0 {
            return None;
        }
        let bit = self.word.trailing_zeros() as usize;
        self.word &= self.word - 1;
        Some(bit)
    }
}

/// Exact O(n^2) construction of the compatibility graph with the closed
/// tolerance |dist_q - dist_p| <= 2*beta.
pub fn build_compatibility_graph(corr: &CorrespondenceSet, beta: f64) -> CompatibilityGraph {
    let n = corr.len();
    let words = n.div_ceil(64).max(1);
    let tol = 2.0 * beta;
    let rows: Vec<u64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut row = vec![0u64; words];
            let pi = corr.source[i];
            let qi = corr.target[i];
            for j in 0..n {
                if j == i {
                    continue;
                }
                let dp = (corr.source[j] - pi).norm();
                let dq = (corr.target[j] - qi).norm();
                if (dq - dp).abs() <= tol {
                    row[j / 64] |= 1 << (j % 64);
                }
            }
            row
        })
        .collect();
    CompatibilityGraph {
        n,
        words,
        rows,
        beta,
    }
}

/// Vertices of the k-core with the largest nonempty k, found by the standard
/// linear-time peel (bucketed degeneracy ordering). The maximal k-core is
/// unique, so no tie-breaking arises; the result is sorted ascending.
pub fn max_kcore(g: &CompatibilityGraph) -> Vec<usize> {
    let n = g.vertex_count();
    if n == 0 {
        return Vec::new();
    }
    let mut degree: Vec<usize> = (0..n).map(|i| g.degree(i)).collect();
    let max_deg = degree.iter().copied().max().unwrap_or(0);

    // order: vertices sorted by current degree; bin[d]: start of degree-d
    // block; pos[v]: position of v in order.
    let mut bin = vec![0usize; max_deg + 1];
    for &d in &degree {
        bin[d] += 1;
    }
    let mut startpos = 0usize;
    for b in bin.iter_mut() {
        let count = *b;
        *b = startpos;
        startpos += count;
    }
    let mut order = vec![0usize; n];
    let mut pos = vec![0usize; n];
    let mut cursor = bin.clone();
    for v in 0..n {
        let d = degree[v];
        order[cursor[d]] = v;
        pos[v] = cursor[d];
        cursor[d] += 1;
    }

    let mut core = vec![0usize; n];
    let mut k_max = 0usize;
    for i in 0..n {
        let v = order[i];
        k_max = k_max.max(degree[v]);
        core[v] = k_max;
        for u in g.neighbors(v) {
            if degree[u] > degree[v] {
                // Move u one degree-bucket down: swap it with the first
                // vertex of its current block, then shrink the block.
                let du = degree[u];
                let pu = pos[u];
                let pw = bin[du];
                let w = order[pw];
                if u != w {
                    order[pu] = w;
                    pos[w] = pu;
                    order[pw] = u;
                    pos[u] = pw;
                }
                bin[du] += 1;
                degree[u] -= 1;
            }
        }
    }

    (0..n).filter(|&v| core[v] >= k_max).collect()
}

/// Knobs for the graduated / robust refinement stage.
#[derive(Debug, Clone)]
pub struct RobustParams {
    pub kernel: RobustKernel,
    /// Residual bound separating inliers from outliers (c-bar).
    pub noise_bound: f64,
    pub huber_delta: f64,
    pub mu_factor: f64,
    pub max_outer: usize,
    pub weight_tol: f64,
    pub cost_tol: f64,
}

impl RobustParams {
    pub fn from_config(cfg: &PipelineConfig, noise_bound: f64) -> RobustParams {
        RobustParams {
            kernel: cfg.robust_kernel,
            noise_bound,
            huber_delta: cfg.resolved_huber_delta(noise_bound),
            mu_factor: cfg.gnc_mu_factor,
            max_outer: cfg.gnc_max_outer,
            weight_tol: cfg.gnc_weight_tol,
            cost_tol: cfg.gnc_cost_tol,
        }
    }
}

fn residual_norms(corr: &CorrespondenceSet, transform: &RigidTransform) -> Vec<f64> {
    corr.source
        .iter()
        .zip(&corr.target)
        .map(|(p, q)| (transform.apply_point(p) - *q).norm())
        .collect()
}

fn closed_inliers(residuals: &[f64], bound: f64) -> Vec<usize> {
    residuals
        .iter()
        .enumerate()
        .filter(|(_, r)| **r <= bound)
        .map(|(i, _)| i)
        .collect()
}

/// Hardens a robust solve: refit with unit weights on the closed inlier set
/// (residual <= bound), keeping the refit only if it loses no inliers. Soft
/// tail weights on far outliers otherwise leave a small bias in the pose.
fn polish_on_inliers(
    corr: &CorrespondenceSet,
    mut transform: RigidTransform,
    bound: f64,
) -> (RigidTransform, Vec<usize>) {
    let mut inliers = closed_inliers(&residual_norms(corr, &transform), bound);
    for _ in 0..10 {
        if inliers.len() < 3 {
            break;
        }
        let src: Vec<Point3> = inliers.iter().map(|&i| corr.source[i]).collect();
        let tgt: Vec<Point3> = inliers.iter().map(|&i| corr.target[i]).collect();
        let Ok(refit) = kabsch_weighted(&src, &tgt, &vec![1.0; inliers.len()]) else {
            break;
        };
        let refit_inliers = closed_inliers(&residual_norms(corr, &refit), bound);
        if refit_inliers.len() < inliers.len() {
            break;
        }
        let stable = refit_inliers == inliers;
        transform = refit;
        inliers = refit_inliers;
        if stable {
            break;
        }
    }
    (transform, inliers)
}

/// Graduated non-convexity with a truncated-least-squares kernel.
///
/// Alternates closed-form weighted alignment with the TLS weight update while
/// the control parameter mu grows geometrically from a near-convex start
/// (derived from the largest initial residual) toward the hard truncation.
/// Stops when weights are within `weight_tol` of binary or the weighted cost
/// stalls; hitting `max_outer` first yields the best-so-far pose flagged
/// unconverged.
pub fn gnc_tls(corr: &CorrespondenceSet, params: &RobustParams) -> Result<SolverReport> {
    let start = Instant::now();
    let n = corr.len();
    if n < 3 {
        return Err(Error::InsufficientCorrespondences { have: n, need: 3 });
    }
    let uniform = vec![1.0; n];
    let mut transform = kabsch_weighted(&corr.source, &corr.target, &uniform)?;
    let mut residuals = residual_norms(corr, &transform);

    let c2 = params.noise_bound * params.noise_bound;
    let max_r2 = residuals.iter().map(|r| r * r).fold(0.0, f64::max);
    let denom = 2.0 * max_r2 - c2;
    // When every residual is already well inside the noise bound the surrogate
    // is convex from the start; a huge mu makes TLS behave as plain LS.
    let mut mu = if denom > 0.0 { c2 / denom } else { 1e12 };

    let mut weights = vec![1.0; n];
    let mut prev_cost = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0usize;

    for outer in 0..params.max_outer {
        iterations = outer + 1;
        let lo = mu / (mu + 1.0) * c2;
        let hi = (mu + 1.0) / mu * c2;
        for (w, r) in weights.iter_mut().zip(&residuals) {
            let r2 = r * r;
            *w = if r2 <= lo {
                1.0
            } else if r2 >= hi {
                0.0
            } else {
                params.noise_bound * (mu * (mu + 1.0)).sqrt() / r - mu
            };
        }
        match kabsch_weighted(&corr.source, &corr.target, &weights) {
            Ok(t) => transform = t,
            // Weights collapsed onto a degenerate support: keep the best pose
            // found so far and report non-convergence.
            Err(_) => break,
        }
        residuals = residual_norms(corr, &transform);
        let cost: f64 = weights
            .iter()
            .zip(&residuals)
            .map(|(w, r)| w * r * r)
            .sum();
        // "Binary" must mean hardened labels with real support: early in the
        // schedule (tiny mu) every weight is near zero, which is not
        // convergence.
        let supported = weights.iter().filter(|w| **w >= 1.0 - params.weight_tol).count() >= 3;
        let binary = supported
            && weights
                .iter()
                .all(|w| *w <= params.weight_tol || *w >= 1.0 - params.weight_tol);
        if binary || (prev_cost - cost).abs() < params.cost_tol {
            converged = true;
            break;
        }
        prev_cost = cost;
        mu *= params.mu_factor;
    }

    let (transform, inliers) = polish_on_inliers(corr, transform, params.noise_bound);
    Ok(SolverReport {
        transform,
        inliers,
        iterations,
        wall: start.elapsed(),
        converged,
    })
}

/// Iteratively reweighted least squares with the Huber kernel: full weight
/// inside delta, delta/r beyond it. Same reporting contract as `gnc_tls`.
pub fn huber_irls(corr: &CorrespondenceSet, params: &RobustParams) -> Result<SolverReport> {
    let start = Instant::now();
    let n = corr.len();
    if n < 3 {
        return Err(Error::InsufficientCorrespondences { have: n, need: 3 });
    }
    let delta = params.huber_delta;
    let uniform = vec![1.0; n];
    let mut transform = kabsch_weighted(&corr.source, &corr.target, &uniform)?;
    let mut residuals = residual_norms(corr, &transform);
    let mut prev_cost = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0usize;

    for outer in 0..params.max_outer {
        iterations = outer + 1;
        let weights: Vec<f64> = residuals
            .iter()
            .map(|&r| if r <= delta { 1.0 } else { delta / r })
            .collect();
        match kabsch_weighted(&corr.source, &corr.target, &weights) {
            Ok(t) => transform = t,
            Err(_) => break,
        }
        residuals = residual_norms(corr, &transform);
        let cost: f64 = residuals
            .iter()
            .map(|&r| {
                if r <= delta {
                    0.5 * r * r
                } else {
                    delta * (r - 0.5 * delta)
                }
            })
            .sum();
        if (prev_cost - cost).abs() < params.cost_tol {
            converged = true;
            break;
        }
        prev_cost = cost;
    }

    let (transform, inliers) = polish_on_inliers(corr, transform, params.noise_bound);
    Ok(SolverReport {
        transform,
        inliers,
        iterations,
        wall: start.elapsed(),
        converged,
    })
}

/// Dispatches to the configured robust kernel.
pub fn robust_solve(corr: &CorrespondenceSet, params: &RobustParams) -> Result<SolverReport> {
    match params.kernel {
        RobustKernel::Tls => gnc_tls(corr, params),
        RobustKernel::Huber => huber_irls(corr, params),
    }
}

/// The deterministic fast solver: compatibility graph with noise bound
/// beta = 1.5 * voxel size, maximum k-core pruning, then robust refinement
/// with c-bar = beta on the survivors. Inlier indices refer to the input set.
pub fn kiss_solver(
    corr: &CorrespondenceSet,
    voxel_size: f64,
    cfg: &PipelineConfig,
) -> Result<SolverReport> {
    let start = Instant::now();
    if corr.len() < 3 {
        return Err(Error::InsufficientCorrespondences {
            have: corr.len(),
            need: 3,
        });
    }
    if !(voxel_size > 0.0) {
        return Err(Error::invalid("voxel size must be positive"));
    }
    let beta = 1.5 * voxel_size;
    let graph = build_compatibility_graph(corr, beta);
    let core = max_kcore(&graph);
    if core.len() < 3 {
        return Err(Error::InsufficientStructure(format!(
            "maximum k-core kept {} of {} correspondences",
            core.len(),
            corr.len()
        )));
    }
    let pruned = subset(corr, &core);
    let params = RobustParams::from_config(cfg, beta);
    let mut report = robust_solve(&pruned, &params)?;
    report.inliers = report.inliers.iter().map(|&i| core[i]).collect();
    report.wall = start.elapsed();
    Ok(report)
}

/// The rows of `corr` selected by `indices`, in the given order.
pub fn subset(corr: &CorrespondenceSet, indices: &[usize]) -> CorrespondenceSet {
    let mut out = CorrespondenceSet::new();
    for &i in indices {
        out.push(
            corr.source[i],
            corr.target[i],
            corr.hypotheses[i].clone(),
            corr.scales[i],
        );
    }
    out
}

//! Exploration harness for benchmark preset design. Not part of the library.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zeroreg_core::bench::{generate_pair, NoiseModel, Primitive, SceneSpec, SensorModel};
use zeroreg_core::bootstrap::{estimate_radii, estimate_voxel_size, voxel_downsample, Scale};
use zeroreg_core::descriptor::describe_set;
use zeroreg_core::matching::match_scale;
use zeroreg_core::pipeline::{pose_errors, register, register_lite};
use zeroreg_core::sampling::farthest_point_sampling;
use zeroreg_core::{PipelineConfig, Point3, PointCloud, SpatialIndex};

#[derive(Clone, Copy)]
struct Design {
    name: &'static str,
    scale: f64,
    points: usize,
    kind: Kind,
    tau: (f64, f64),
    max_rot: f64,
    overlap: f64,
    sigma_f: f64,
    disc: bool,
    normal_noise: bool,
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Walls,
    Asteroid,
    Outdoor,
    /// Floor + n varied cuboids + spheres; optional walls.
    Clutter { boxes: usize, walls: bool, floor: bool },
    /// Flat-dominated variant: wavy floor + low slabs; walls of height
    /// `wall_h`·scale (0 = none).
    Slabs { boxes: usize, wall_h: f64 },
    /// Gentle-wave floor + boxes with all z-dimensions scaled by `zs`;
    /// `wave` is the floor amplitude as a fraction of scale.
    Flat { boxes: usize, zs: f64, wave: f64 },
}

fn layout(d: &Design, rng: &mut ChaCha8Rng) -> Vec<Primitive> {
    let scale = d.scale;
    let half = 0.5 * scale;
    match d.kind {
        Kind::Asteroid => {
            // Free-standing cluster: big core below the sensor, boulders and
            // slabs attached around it. No floor.
            let cz = -0.75 * scale;
            let core_r = 0.32 * scale;
            let mut prims = vec![Primitive::Sphere {
                center: [0.0, 0.0, cz],
                radius: core_r,
            }];
            for _ in 0..6 {
                let r = rng.random_range(0.08..0.16) * scale;
                let u: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let w: f64 = rng.random_range(-0.9..0.9);
                let dir = [
                    (1.0f64 - w * w).sqrt() * u.cos(),
                    (1.0f64 - w * w).sqrt() * u.sin(),
                    w,
                ];
                prims.push(Primitive::Sphere {
                    center: [
                        dir[0] * (core_r + 0.5 * r),
                        dir[1] * (core_r + 0.5 * r),
                        cz + dir[2] * (core_r + 0.5 * r),
                    ],
                    radius: r,
                });
            }
            for _ in 0..5 {
                let hx = rng.random_range(0.06..0.14) * scale;
                let hy = rng.random_range(0.06..0.14) * scale;
                let hz = rng.random_range(0.06..0.14) * scale;
                let u: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let w: f64 = rng.random_range(-0.9..0.9);
                let dir = [
                    (1.0f64 - w * w).sqrt() * u.cos(),
                    (1.0f64 - w * w).sqrt() * u.sin(),
                    w,
                ];
                prims.push(Primitive::Cuboid {
                    center: [
                        dir[0] * core_r,
                        dir[1] * core_r,
                        cz + dir[2] * core_r,
                    ],
                    half_extents: [hx, hy, hz],
                });
            }
            prims
        }
        Kind::Clutter { boxes, walls, floor } => {
            let floor_z = -0.35 * scale;
            let mut prims = Vec::new();
            if floor {
                prims.push(Primitive::Rect {
                    origin: [-half, -half, floor_z],
                    edge_u: [scale, 0.0, 0.0],
                    edge_v: [0.0, scale, 0.0],
                    wave_amplitude: 0.02 * scale,
                    wave_cycles: 2.5,
                });
            }
            if walls {
                for (origin, edge_u) in [
                    ([-half, half, floor_z], [scale, 0.0, 0.0]),
                    ([-half, -half, floor_z], [0.0, scale, 0.0]),
                ] {
                    prims.push(Primitive::Rect {
                        origin,
                        edge_u,
                        edge_v: [0.0, 0.0, 0.3 * scale],
                        wave_amplitude: 0.01 * scale,
                        wave_cycles: 2.0,
                    });
                }
            }
            for _ in 0..boxes {
                let hx = rng.random_range(0.02..0.09) * scale;
                let hy = rng.random_range(0.02..0.09) * scale;
                let hz = rng.random_range(0.02..0.09) * scale;
                let cx = rng.random_range(-0.42..0.42) * scale;
                let cy = rng.random_range(-0.42..0.42) * scale;
                // Mix grounded and floating boxes for 3-D variety.
                let cz = if rng.random_bool(0.7) {
                    floor_z + hz
                } else {
                    floor_z + rng.random_range(0.08..0.22) * scale
                };
                prims.push(Primitive::Cuboid {
                    center: [cx, cy, cz],
                    half_extents: [hx, hy, hz],
                });
            }
            for _ in 0..5 {
                let r = rng.random_range(0.02..0.06) * scale;
                let cx = rng.random_range(-0.42..0.42) * scale;
                let cy = rng.random_range(-0.42..0.42) * scale;
                prims.push(Primitive::Sphere {
                    center: [cx, cy, floor_z + 1.4 * r],
                    radius: r,
                });
            }
            prims
        }
        Kind::Slabs { boxes, wall_h } => {
            let floor_z = -0.35 * scale;
            let mut prims = vec![Primitive::Rect {
                origin: [-half, -half, floor_z],
                edge_u: [scale, 0.0, 0.0],
                edge_v: [0.0, scale, 0.0],
                wave_amplitude: 0.025 * scale,
                wave_cycles: 3.0,
            }];
            if wall_h > 0.0 {
                for (origin, edge_u) in [
                    ([-half, half, floor_z], [scale, 0.0, 0.0]),
                    ([-half, -half, floor_z], [0.0, scale, 0.0]),
                ] {
                    prims.push(Primitive::Rect {
                        origin,
                        edge_u,
                        edge_v: [0.0, 0.0, wall_h * scale],
                        wave_amplitude: 0.008 * scale,
                        wave_cycles: 2.0,
                    });
                }
            }
            for _ in 0..boxes {
                let hx = rng.random_range(0.05..0.13) * scale;
                let hy = rng.random_range(0.05..0.13) * scale;
                let hz = rng.random_range(0.01..0.035) * scale;
                let cx = rng.random_range(-0.42..0.42) * scale;
                let cy = rng.random_range(-0.42..0.42) * scale;
                // Slab tops at varied heights read as tables and platforms.
                let cz = floor_z + hz + rng.random_range(0.0..0.06) * scale;
                prims.push(Primitive::Cuboid {
                    center: [cx, cy, cz],
                    half_extents: [hx, hy, hz],
                });
            }
            for _ in 0..4 {
                let r = rng.random_range(0.02..0.05) * scale;
                let cx = rng.random_range(-0.42..0.42) * scale;
                let cy = rng.random_range(-0.42..0.42) * scale;
                prims.push(Primitive::Sphere {
                    center: [cx, cy, floor_z + 1.2 * r],
                    radius: r,
                });
            }
            prims
        }
        Kind::Flat { boxes, zs, wave } => {
            let floor_z = -0.35 * scale;
            let mut prims = vec![Primitive::Rect {
                origin: [-half, -half, floor_z],
                edge_u: [scale, 0.0, 0.0],
                edge_v: [0.0, scale, 0.0],
                wave_amplitude: wave * scale,
                wave_cycles: 2.5,
            }];
            for _ in 0..boxes {
                let hx = rng.random_range(0.02..0.09) * scale;
                let hy = rng.random_range(0.02..0.09) * scale;
                let hz = rng.random_range(0.02..0.09) * scale * zs;
                let cx = rng.random_range(-0.42..0.42) * scale;
                let cy = rng.random_range(-0.42..0.42) * scale;
                let cz = if rng.random_bool(0.7) {
                    floor_z + hz
                } else {
                    floor_z + rng.random_range(0.08..0.22) * scale * zs
                };
                prims.push(Primitive::Cuboid {
                    center: [cx, cy, cz],
                    half_extents: [hx, hy, hz],
                });
            }
            prims
        }
        Kind::Walls | Kind::Outdoor => {
            let floor_z = -0.35 * scale;
            let mut prims = vec![Primitive::Rect {
                origin: [-half, -half, floor_z],
                edge_u: [scale, 0.0, 0.0],
                edge_v: [0.0, scale, 0.0],
                wave_amplitude: 0.012 * scale,
                wave_cycles: 3.0,
            }];
            if d.kind == Kind::Walls {
                for (origin, edge_u) in [
                    ([-half, half, floor_z], [scale, 0.0, 0.0]),
                    ([-half, -half, floor_z], [0.0, scale, 0.0]),
                ] {
                    prims.push(Primitive::Rect {
                        origin,
                        edge_u,
                        edge_v: [0.0, 0.0, 0.3 * scale],
                        wave_amplitude: 0.006 * scale,
                        wave_cycles: 2.0,
                    });
                }
            }
            for _ in 0..6 {
                let hx = rng.random_range(0.04..0.10) * scale;
                let hy = rng.random_range(0.04..0.10) * scale;
                let hz = rng.random_range(0.05..0.12) * scale;
                let cx = rng.random_range(-0.38..0.38) * scale;
                let cy = rng.random_range(-0.38..0.38) * scale;
                prims.push(Primitive::Cuboid {
                    center: [cx, cy, floor_z + hz],
                    half_extents: [hx, hy, hz],
                });
            }
            for _ in 0..2 {
                let r = rng.random_range(0.04..0.08) * scale;
                let cx = rng.random_range(-0.38..0.38) * scale;
                let cy = rng.random_range(-0.38..0.38) * scale;
                prims.push(Primitive::Sphere {
                    center: [cx, cy, floor_z + 1.5 * r],
                    radius: r,
                });
            }
            prims
        }
    }
}

fn spec_for(d: &Design, sigma: f64, pair: u64) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1ab0 + 1000 * pair);
    SceneSpec {
        primitives: layout(d, &mut rng),
        points_per_primitive: d.points,
        sensor: if d.disc {
            SensorModel::DiscLidar { z_compression: 0.3 }
        } else {
            SensorModel::Uniform
        },
        noise_sigma: sigma,
        noise_model: if d.normal_noise { NoiseModel::AlongNormal } else { NoiseModel::Isotropic },
        overlap: d.overlap,
        max_rotation_deg: d.max_rot,
        max_translation_m: 0.02 * d.scale,
        seed: 77 + pair,
    }
}

/// Stage dissection: for ground-truth-corresponding keypoints, how far apart
/// are the frames (v3 angle) and features (matched vs shuffled F distance)?
fn fdist(designs: &[Design]) {
    let cfg = PipelineConfig::default();
    for d in designs {
        let probe = spec_for(d, 0.0, 0);
        let (p0, q0, _) = generate_pair(&probe).expect("probe");
        let v_clean = estimate_voxel_size(&p0, &q0, &cfg).expect("v");
        let sigma = d.sigma_f * v_clean;
        let spec = spec_for(d, sigma, 1);
        let (p, q, t_gt) = generate_pair(&spec).expect("pair");
        let v = estimate_voxel_size(&p, &q, &cfg).expect("v");
        let dp = voxel_downsample(&p, v).expect("dp");
        let dq = voxel_downsample(&q, v).expect("dq");
        let larger: &PointCloud = if dp.len() >= dq.len() { &dp } else { &dq };
        let radii = estimate_radii(larger, &cfg).expect("radii");
        let ip = SpatialIndex::build(&dp.points);
        let iq = SpatialIndex::build(&dq.points);
        let kp = farthest_point_sampling(&dp, cfg.n_fps.min(dp.len())).expect("fps");
        // For each source keypoint, its true counterpart: nearest dq point to T*x.
        let mut src_idx = Vec::new();
        let mut tgt_idx = Vec::new();
        for &i in &kp {
            let y = t_gt.apply_point(&dp.points[i]);
            let near = iq.radius_neighbors(&y, 1.0 * v);
            let best = near
                .into_iter()
                .map(|j| (j, (dq.points[j] - y).norm()))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            if let Some((j, _)) = best {
                src_idx.push(i);
                tgt_idx.push(j);
            }
        }
        let r = radii.get(Scale::Middle);
        let sp = describe_set(&dp, &ip, &src_idx, r, Scale::Middle, &cfg).expect("sp");
        let sq = describe_set(&dq, &iq, &tgt_idx, r, Scale::Middle, &cfg).expect("sq");
        // Align the two sets on shared keypoints (describe_set may drop some).
        use std::collections::HashMap;
        let key = |x: &Point3| (x.x.to_bits(), x.y.to_bits(), x.z.to_bits());
        let pi_map: HashMap<_, _> = sp.keypoints.iter().enumerate().map(|(i, x)| (key(x), i)).collect();
        let qi_map: HashMap<_, _> = sq.keypoints.iter().enumerate().map(|(i, x)| (key(x), i)).collect();
        // Metric variants: raw L2, Hellinger (sqrt), z-scored dims, sqrt+z.
        let dim = sp.features[0].0.len();
        let zstats = |feats: &[zeroreg_core::FeatureVector], sq_root: bool| {
            let mut mean = vec![0.0; dim];
            let mut var = vec![0.0; dim];
            let n = feats.len() as f64;
            for f in feats {
                for (k, &x) in f.0.iter().enumerate() {
                    let x = if sq_root { x.max(0.0).sqrt() } else { x };
                    mean[k] += x / n;
                }
            }
            for f in feats {
                for (k, &x) in f.0.iter().enumerate() {
                    let x = if sq_root { x.max(0.0).sqrt() } else { x };
                    var[k] += (x - mean[k]) * (x - mean[k]) / n;
                }
            }
            (mean, var)
        };
        let mut all_feats = sp.features.clone();
        all_feats.extend(sq.features.iter().cloned());
        let stats_raw = zstats(&all_feats, false);
        let stats_sqrt = zstats(&all_feats, true);
        let xform = |f: &[f64], mode: usize| -> Vec<f64> {
            match mode {
                0 => f.to_vec(),
                1 => f.iter().map(|&x| x.max(0.0).sqrt()).collect(),
                2 => f
                    .iter()
                    .enumerate()
                    .map(|(k, &x)| (x - stats_raw.0[k]) / stats_raw.1[k].sqrt().max(1e-12))
                    .collect(),
                _ => f
                    .iter()
                    .enumerate()
                    .map(|(k, &x)| {
                        (x.max(0.0).sqrt() - stats_sqrt.0[k]) / stats_sqrt.1[k].sqrt().max(1e-12)
                    })
                    .collect(),
            }
        };
        let dist = |a: &[f64], b: &[f64]| {
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
        };
        let mut v3_angles = Vec::new();
        let mut d_match = vec![Vec::new(); 4];
        let mut d_rand = vec![Vec::new(); 4];
        let ez = nalgebra::Vector3::new(0.0, 0.0, 1.0);
        for (&si, &ti) in src_idx.iter().zip(&tgt_idx) {
            let Some(&i) = pi_map.get(&key(&dp.points[si])) else { continue };
            let Some(&j) = qi_map.get(&key(&dq.points[ti])) else { continue };
            let v3p = sp.frames[i].transpose().apply(&ez);
            let v3q = sq.frames[j].transpose().apply(&ez);
            let mapped = t_gt.rotation.apply(&v3p);
            let c = mapped.dot(&v3q).abs().min(1.0);
            v3_angles.push(c.acos().to_degrees());
            let j2 = (j + sq.features.len() / 2) % sq.features.len();
            for mode in 0..4 {
                let fp = xform(&sp.features[i].0, mode);
                let fq = xform(&sq.features[j].0, mode);
                let fr = xform(&sq.features[j2].0, mode);
                d_match[mode].push(dist(&fp, &fq));
                d_rand[mode].push(dist(&fp, &fr));
            }
        }
        let q = |v: &[f64], f: f64| {
            let mut v = v.to_vec();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if v.is_empty() { f64::NAN } else { v[((v.len() - 1) as f64 * f) as usize] }
        };
        let n = v3_angles.len();
        print!(
            "{name} s{sf:.1} pairs={n} v3deg p50 {b:.1} |",
            name = d.name,
            sf = d.sigma_f,
            b = q(&v3_angles, 0.50),
        );
        for (mode, label) in ["raw", "sqrt", "z", "sqrt+z"].iter().enumerate() {
            print!(
                " {label} {:.2}",
                q(&d_match[mode], 0.5) / q(&d_rand[mode], 0.5)
            );
        }
        println!();
    }
}

fn main() {
    let pairs: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(8);
    let probe_mode = std::env::args().nth(2).as_deref() == Some("probe");
    if std::env::args().nth(2).as_deref() == Some("fdist") {
        let base = Design { name: "walls", scale: 10.0, points: 2500, kind: Kind::Walls, tau: (15.0, 0.3), max_rot: 0.0, overlap: 1.0, sigma_f: 0.0, disc: false, normal_noise: false };
        let mut designs = Vec::new();
        for sf in [0.0, 0.5] {
            designs.push(Design { sigma_f: sf, ..base });
        }
        for sf in [0.0, 0.5] {
            designs.push(Design { name: "clutL20", scale: 20.0, points: 8000, kind: Kind::Clutter { boxes: 30, walls: true, floor: true }, sigma_f: sf, ..base });
        }
        fdist(&designs);
        return;
    }
    let cfg = PipelineConfig::default();
    let mk = |name, scale, points, boxes, walls, tau, overlap, disc, normal_noise| Design {
        name,
        scale,
        points,
        kind: Kind::Clutter { boxes, walls, floor: true },
        tau,
        max_rot: 180.0,
        overlap,
        sigma_f: 0.5,
        disc,
        normal_noise,
    };
    let tin = (15.0, 0.3);
    let tout = (5.0, 2.0);
    let designs = if probe_mode {
        // Noise-model face-off at the most promising extents.
        vec![
            mk("iid  ind10 ovl.70", 10.0, 4000, 24, true, tin, 0.70, false, false),
            mk("norm ind10 ovl.70", 10.0, 4000, 24, true, tin, 0.70, false, true),
            mk("norm ind10 ovl.85", 10.0, 4000, 24, true, tin, 0.85, false, true),
            mk("norm ind8  ovl.85", 8.0, 4000, 24, true, tin, 0.85, false, true),
            mk("norm obj1  ovl.85", 1.0, 2500, 12, true, tin, 0.85, false, true),
            mk("norm out40 ovl.85", 40.0, 8000, 20, false, tout, 0.85, true, true),
        ]
    } else {
        // Flat-dominated (slab) layouts: along-normal noise is mostly vertical
        // there, which the yaw-marginalized descriptor tolerates.
        let mkf = |name, scale, points, boxes, zs, wave, tau| Design {
            name,
            scale,
            points,
            kind: Kind::Flat { boxes, zs, wave },
            tau,
            max_rot: 180.0,
            overlap: 0.85,
            sigma_f: 0.5,
            disc: false,
            normal_noise: true,
        };
        let _ = mk;
        vec![
            mkf("flat ind15 zs.15", 15.0, 3000, 22, 0.15, 0.006, tin),
            mkf("flat ind15 zs.07", 15.0, 3000, 22, 0.075, 0.006, tin),
            mkf("flat ind12 zs.07", 12.0, 3000, 22, 0.075, 0.006, tin),
            mkf("flat ind10 zs.07", 10.0, 2500, 20, 0.075, 0.006, tin),
            mkf("flat obj4  zs.03", 4.0, 2000, 16, 0.03, 0.003, tin),
            mkf("flat obj4  zs.015", 4.0, 2000, 16, 0.015, 0.003, tin),
            mkf("flat obj2  zs.015", 2.0, 1800, 14, 0.015, 0.003, tin),
            mkf("flat obj2  zs.005", 2.0, 1800, 14, 0.005, 0.003, tin),
        ]
    };
    println!("pairs/config: {pairs}; per-scale loc/mid/glb = corr : truth-consistent@2v : good-hyps");
    for d in &designs {
        let probe = spec_for(d, 0.0, 0);
        let (p, q, _) = generate_pair(&probe).expect("probe");
        let v_clean = estimate_voxel_size(&p, &q, &cfg).expect("v");
        let sigma = d.sigma_f * v_clean;

        let mut succ = 0usize;
        let mut exits = 0usize;
        let mut mid_alone = Vec::new();
        let mut n_down = Vec::new();
        let mut cell_k = Vec::new();
        let mut reg_ms = Vec::new();
        let mut rm_v = Vec::new();
        let mut rg_v = Vec::new();
        let mut per_scale: [(usize, usize, usize); 3] = [(0, 0, 0); 3];
        for i in 0..pairs {
            let spec = spec_for(d, sigma, i);
            let (p, q, t_gt) = generate_pair(&spec).expect("pair");
            let v = estimate_voxel_size(&p, &q, &cfg).expect("v");
            let eps = 2.0 * v;
            let dp = voxel_downsample(&p, v).expect("down p");
            let dq = voxel_downsample(&q, v).expect("down q");
            n_down.push(dp.len().max(dq.len()));
            cell_k.push(p.len() / dp.len().max(1));
            let larger: &PointCloud = if dp.len() >= dq.len() { &dp } else { &dq };
            let radii = estimate_radii(larger, &cfg).expect("radii");
            rm_v.push((radii.get(Scale::Middle) / v * 10.0) as usize);
            rg_v.push((radii.get(Scale::Global) / v * 10.0) as usize);
            let ip = SpatialIndex::build(&dp.points);
            let iq = SpatialIndex::build(&dq.points);
            let kp = farthest_point_sampling(&dp, cfg.n_fps.min(dp.len())).expect("fps p");
            let kq = farthest_point_sampling(&dq, cfg.n_fps.min(dq.len())).expect("fps q");
            for (si, scale) in Scale::ALL.iter().enumerate() {
                let r = radii.get(*scale);
                let sp = describe_set(&dp, &ip, &kp, r, *scale, &cfg);
                let sq = describe_set(&dq, &iq, &kq, r, *scale, &cfg);
                let (sp, sq) = match (sp, sq) {
                    (Ok(a), Ok(b)) => (a, b),
                    _ => continue,
                };
                let cs = match_scale(&sp, &sq, &cfg);
                let truth = cs
                    .source
                    .iter()
                    .zip(&cs.target)
                    .filter(|(s, t)| (t_gt.apply_point(s) - **t).norm() <= eps)
                    .count();
                let good_hyp = cs
                    .hypotheses
                    .iter()
                    .filter(|h| {
                        let (rre, rte) = pose_errors(&t_gt, h);
                        rre <= 5.0 && rte <= eps
                    })
                    .count();
                per_scale[si].0 += cs.len();
                per_scale[si].1 += truth;
                per_scale[si].2 += good_hyp;
            }
            let t0 = std::time::Instant::now();
            if let Ok(full) = register(&p, &q, &cfg) {
                let (rre, rte) = pose_errors(&t_gt, &full.transform);
                if rre <= d.tau.0 && rte <= d.tau.1 {
                    succ += 1;
                }
            }
            reg_ms.push(t0.elapsed().as_millis() as usize);
            let mut lite_cfg = cfg.clone();
            lite_cfg.tau_n = 1;
            if let Ok(lite) = register_lite(&p, &q, &lite_cfg) {
                if lite.early_exited {
                    mid_alone.push(lite.inlier_count);
                    if lite.inlier_count >= 25 {
                        exits += 1;
                    }
                }
            }
        }
        let n = pairs as usize;
        let meanu = |v: &[usize]| v.iter().sum::<usize>() as f64 / v.len().max(1) as f64;
        print!(
            "{name} v={v_clean:.3} succ {succ:>2}/{n} exits {exits:>2}/{n} mid-alone {ma:>5.1} ndown {nd:>5.0} k {k:>4.1} rm {rm:>4.1}v rg {rg:>4.1}v ms {ms:>5.0} |",
            name = d.name,
            ma = meanu(&mid_alone),
            nd = meanu(&n_down),
            k = meanu(&cell_k),
            rm = meanu(&rm_v) / 10.0,
            rg = meanu(&rg_v) / 10.0,
            ms = meanu(&reg_ms),
        );
        for (si, label) in ["loc", "mid", "glb"].iter().enumerate() {
            let (c, t, g) = per_scale[si];
            print!(
                " {label} {:.0}:{:.1}:{:.1}",
                c as f64 / n as f64,
                t as f64 / n as f64,
                g as f64 / n as f64
            );
        }
        println!();
    }
}

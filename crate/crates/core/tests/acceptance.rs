//! Acceptance checks, one line per criterion. Runs as a plain binary so the
//! report is printed even when every check passes.

use std::process::ExitCode;
use std::time::Instant;

use accelscale::arch_ir::{
    build_breakdown_variants, build_efficientnet_x_b0, efficientnet_b0, ActivationKind, OpKind,
    ScalingCoeffs, Target, TensorShape,
};
use accelscale::cost_model::{
    conv_flops, conv_intensity, conv_mem_elems, dwsep_flops, dwsep_intensity, dwsep_mem_elems,
    flops_per_image, model_cost, op_cost, HardwareProfile,
};
use accelscale::arch_ir::validate_model;
use accelscale::lacs::{
    best_of, compare_scaling, evaluate_triplet, grid_search_coeffs, reference_family, reward,
    scale_family, single_objective_coeffs, spec_latency, AxisRange, FitOptions, GridSpec,
    PhiSchedule, RewardConfig, SyntheticSurrogate,
};
use accelscale::nas_lite::{
    evolutionary_search, exhaustive_search, ArchiveEntry, ChoiceSets, ConvType, EvolutionParams,
    ParetoArchive, Skeleton, SkeletonStage, SpaceConfig, DEFAULT_MAX_SPACE,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        if !$cond {
            return Err(format!($($fmt)*));
        }
    };
}

/// Loop-nest MAC and distinct-element counts for a stride-1 SAME conv with C -> C channels.
/// Returns (macs, elements touched).
fn loop_conv(n: usize, h: usize, w: usize, c: usize, k: usize) -> (u128, u128) {
    let pad = (k / 2) as isize;
    let mut macs = 0u128;
    let mut input = vec![false; n * h * w * c];
    let mut weights = vec![false; c * c * k * k];
    let mut output = vec![false; n * h * w * c];
    for b in 0..n {
        for y in 0..h {
            for x in 0..w {
                for oc in 0..c {
                    output[((b * h + y) * w + x) * c + oc] = true;
                    for ic in 0..c {
                        for ky in 0..k {
                            for kx in 0..k {
                                macs += 1;
                                weights[((oc * c + ic) * k + ky) * k + kx] = true;
                                let (iy, ix) = (y as isize + ky as isize - pad, x as isize + kx as isize - pad);
                                if iy >= 0 && ix >= 0 && (iy as usize) < h && (ix as usize) < w {
                                    input[((b * h + iy as usize) * w + ix as usize) * c + ic] = true;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let touched = [&input, &weights, &output]
        .iter()
        .map(|v| v.iter().filter(|t| **t).count() as u128)
        .sum();
    (macs, touched)
}

/// Depthwise K x K followed by pointwise C -> C; the intermediate is written then read.
fn loop_dwsep(n: usize, h: usize, w: usize, c: usize, k: usize) -> (u128, u128) {
    let pad = (k / 2) as isize;
    let mut macs = 0u128;
    let mut input = vec![false; n * h * w * c];
    let mut dw = vec![false; c * k * k];
    let mut mid = vec![false; n * h * w * c];
    let mut pw = vec![false; c * c];
    let mut output = vec![false; n * h * w * c];
    for b in 0..n {
        for y in 0..h {
            for x in 0..w {
                for ch in 0..c {
                    mid[((b * h + y) * w + x) * c + ch] = true;
                    for ky in 0..k {
                        for kx in 0..k {
                            macs += 1;
                            dw[(ch * k + ky) * k + kx] = true;
                            let (iy, ix) = (y as isize + ky as isize - pad, x as isize + kx as isize - pad);
                            if iy >= 0 && ix >= 0 && (iy as usize) < h && (ix as usize) < w {
                                input[((b * h + iy as usize) * w + ix as usize) * c + ch] = true;
                            }
                        }
                    }
                }
            }
        }
    }
    let mut mid_read = vec![false; n * h * w * c];
    for b in 0..n {
        for y in 0..h {
            for x in 0..w {
                for oc in 0..c {
                    output[((b * h + y) * w + x) * c + oc] = true;
                    for ic in 0..c {
                        macs += 1;
                        pw[oc * c + ic] = true;
                        mid_read[((b * h + y) * w + x) * c + ic] = true;
                    }
                }
            }
        }
    }
    let touched = [&input, &dw, &mid, &mid_read, &pw, &output]
        .iter()
        .map(|v| v.iter().filter(|t| **t).count() as u128)
        .sum();
    (macs, touched)
}

fn criterion_1() -> Check {
    let mut cases = 0;
    for n in [1u64, 2, 4, 8, 16] {
        for c in [1u64, 2, 4, 8, 16] {
            for h in [1u64, 4, 7] {
                for w in [1u64, 4, 7] {
                    for k in [1u64, 3, 5] {
                        let (macs, elems) = loop_conv(n as usize, h as usize, w as usize, c as usize, k as usize);
                        let f = conv_flops(n, h, w, c, k).map_err(|e| e.to_string())?;
                        let q = conv_mem_elems(n, h, w, c, k).map_err(|e| e.to_string())?;
                        let i = conv_intensity(n, h, w, c, k).map_err(|e| e.to_string())?;
                        ensure!(
                            f == macs && q == elems && (i.num, i.den) == (macs, elems),
                            "conv n={n} h={h} w={w} c={c} k={k}: closed form ({f}, {q}) vs loop ({macs}, {elems})"
                        );
                        let (macs, elems) = loop_dwsep(n as usize, h as usize, w as usize, c as usize, k as usize);
                        let f = dwsep_flops(n, h, w, c, k).map_err(|e| e.to_string())?;
                        let q = dwsep_mem_elems(n, h, w, c, k).map_err(|e| e.to_string())?;
                        let i = dwsep_intensity(n, h, w, c, k).map_err(|e| e.to_string())?;
                        ensure!(
                            f == macs && q == elems && (i.num, i.den) == (macs, elems),
                            "dwsep n={n} h={h} w={w} c={c} k={k}: closed form ({f}, {q}) vs loop ({macs}, {elems})"
                        );
                        cases += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{cases} shapes, conv and dwsep exact"))
}

fn criterion_2() -> Check {
    let b0 = flops_per_image(&efficientnet_b0()).map_err(|e| e.to_string())?;
    let xb0 = flops_per_image(&build_efficientnet_x_b0(Target::Tpu)).map_err(|e| e.to_string())?;
    let s2d = flops_per_image(&build_breakdown_variants()[1]).map_err(|e| e.to_string())?;
    let within = |v: f64, want: f64, tol: f64| (v / want - 1.0).abs() <= tol;
    ensure!(within(b0, 0.39e9, 0.03), "B0 {b0:.4e} not within 3% of 0.39e9");
    ensure!(within(xb0, 0.91e9, 0.05), "X-B0 {xb0:.4e} not within 5% of 0.91e9");
    ensure!(within(s2d, 0.47e9, 0.05), "+space-to-depth {s2d:.4e} not within 5% of 0.47e9");
    Ok(format!("B0 {b0:.4e}, X-B0 {xb0:.4e}, +space-to-depth {s2d:.4e}"))
}

fn criterion_3() -> Check {
    let p = HardwareProfile::tpu_v3_like();
    let mut is = Vec::new();
    for m in build_breakdown_variants() {
        let v = validate_model(&m).map_err(|e| e.to_string())?;
        is.push(model_cost(&v, &p).aggregate_intensity);
    }
    ensure!(is[0] < is[1] && is[1] < is[2] && is[2] <= is[3], "ordering violated: {is:?}");
    let ratio = is[3] / is[0];
    ensure!((2.2..=4.2).contains(&ratio), "X-B0/B0 intensity ratio {ratio:.3} outside [2.2, 4.2]");
    Ok(format!(
        "I = {:.2} < {:.2} < {:.2} <= {:.2}, ratio {ratio:.3}",
        is[0], is[1], is[2], is[3]
    ))
}

fn criterion_4() -> Check {
    let cfg = RewardConfig::new(-0.09, 1.0).map_err(|e| e.to_string())?;
    let r = reward(0.77, 2.0, &cfg);
    ensure!((r - 0.72339).abs() <= 1e-4, "reward(0.77, 2T) = {r}");
    for a in [0.0, 0.3, 0.77, 0.123456789, 1.0] {
        for t in [1e-3, 0.37, 5.0] {
            let c = RewardConfig::new(-0.09, t).map_err(|e| e.to_string())?;
            ensure!(reward(a, t, &c) == a, "reward({a}, T={t}) != {a}");
        }
    }
    Ok(format!("reward(0.77, 2T) = {r:.5}, reward(a, T) = a"))
}

fn family_check(reference: &str, base_target: Target, profile: HardwareProfile) -> Check {
    let r = reference_family(reference).ok_or("missing reference")?;
    let coeffs = ScalingCoeffs::new(r.coeffs[0], r.coeffs[1], r.coeffs[2]).map_err(|e| e.to_string())?;
    let sched = PhiSchedule::builtin(reference).ok_or("missing schedule")?;
    let fam = scale_family(&build_efficientnet_x_b0(base_target), &coeffs, &sched, &profile)
        .map_err(|e| e.to_string())?;
    ensure!(fam.len() == r.dims.len(), "{} levels, want {}", fam.len(), r.dims.len());
    let mut misses = Vec::new();
    let mut worst = (0i64, 0i64);
    for (m, &(d, res)) in fam.iter().zip(&r.dims) {
        let dd = m.depth() as i64 - d as i64;
        let dr = m.resolution() as i64 - res as i64;
        worst = (worst.0.max(dd.abs()), worst.1.max(dr.abs()));
        if dd.abs() > 2 || dr.abs() > 8 {
            misses.push(format!("{} ({}, {}) vs ({d}, {res})", m.level, m.depth(), m.resolution()));
        }
    }
    ensure!(misses.is_empty(), "outside +-2 layers / +-8 px: {}", misses.join("; "));
    Ok(format!("{} levels, worst deviation {} layers / {} px", fam.len(), worst.0, worst.1))
}

fn criterion_5a() -> Check {
    family_check("lacs_gpu", Target::Gpu, HardwareProfile::gpu_v100_like())
}

fn criterion_5b() -> Check {
    family_check("lacs_tpu", Target::Tpu, HardwareProfile::tpu_v3_like())
}

fn criterion_6() -> Check {
    let base = build_efficientnet_x_b0(Target::Tpu);
    let p = HardwareProfile::tpu_v3_like();
    let sur = SyntheticSurrogate::new(&base).map_err(|e| e.to_string())?;
    let t = 2.0 * spec_latency(&base, &p, accelscale::arch_ir::DEFAULT_BATCH).map_err(|e| e.to_string())?;
    let cfg = RewardConfig::with_target(t).map_err(|e| e.to_string())?;
    let axis = AxisRange::new(1.0, 1.4, 0.1);
    let grid = GridSpec { alpha: axis, beta: axis, gamma: axis, refinement_rounds: 0 };
    let res = grid_search_coeffs(&base, &p, &sur, &cfg, &grid).map_err(|e| e.to_string())?;
    ensure!(res.evaluated.len() == 125, "{} phase-1 evaluations", res.evaluated.len());

    let opts = FitOptions::default();
    let mut all = Vec::new();
    for a in axis.points() {
        for b in axis.points() {
            for g in axis.points() {
                let c = ScalingCoeffs::new(a, b, g).map_err(|e| e.to_string())?;
                all.push(evaluate_triplet(&base, &c, &p, &sur, &cfg, &opts, 0).map_err(|e| e.to_string())?);
            }
        }
    }
    let oracle = best_of(&all).ok_or("no feasible triplet in enumeration")?;
    ensure!(
        oracle.coeffs == res.best && oracle.reward == Some(res.reward),
        "grid best {:?} vs enumeration best {:?}",
        res.best,
        oracle.coeffs
    );
    Ok(format!(
        "best ({}, {}, {}) reward {:.6}",
        res.best.alpha, res.best.beta, res.best.gamma, res.reward
    ))
}

fn criterion_7() -> Check {
    let base = build_efficientnet_x_b0(Target::Tpu);
    let p = HardwareProfile::tpu_v3_like();
    let sur = SyntheticSurrogate::new(&base).map_err(|e| e.to_string())?;
    let t = 4.0 * spec_latency(&base, &p, accelscale::arch_ir::DEFAULT_BATCH).map_err(|e| e.to_string())?;
    let cfg = RewardConfig::with_target(t).map_err(|e| e.to_string())?;
    let lacs = grid_search_coeffs(&base, &p, &sur, &cfg, &GridSpec::default()).map_err(|e| e.to_string())?;
    let single =
        single_objective_coeffs(&base, &sur, 2.0, &GridSpec::default()).map_err(|e| e.to_string())?;
    let (l, s) = (lacs.best, single.best);
    ensure!(l.alpha > l.gamma, "LACS triplet ({}, {}, {}) has alpha <= gamma", l.alpha, l.beta, l.gamma);
    let sched = PhiSchedule::builtin("lacs_tpu").ok_or("missing schedule")?;
    let cmp = compare_scaling(&base, &l, &s, &sched, &p).map_err(|e| e.to_string())?;
    let top = cmp.rows.last().ok_or("empty comparison")?;
    ensure!(
        top.a.intensity > top.b.intensity,
        "top-level intensity LACS {:.2} <= single-objective {:.2}",
        top.a.intensity,
        top.b.intensity
    );
    Ok(format!(
        "LACS ({}, {}, {}) vs single ({}, {}, {}); {} I {:.1} > {:.1}",
        l.alpha, l.beta, l.gamma, s.alpha, s.beta, s.gamma, top.level, top.a.intensity, top.b.intensity
    ))
}

fn criterion_8() -> Check {
    let (tpu, gpu, cpu) = (
        HardwareProfile::tpu_v3_like(),
        HardwareProfile::gpu_v100_like(),
        HardwareProfile::cpu_like(),
    );
    ensure!(
        tpu.ridge_point() > cpu.ridge_point() && gpu.ridge_point() > cpu.ridge_point(),
        "ridge points tpu {} gpu {} cpu {}",
        tpu.ridge_point(),
        gpu.ridge_point(),
        cpu.ridge_point()
    );
    for p in [&tpu, &gpu, &cpu] {
        ensure!(p.attainable(p.ridge_point()) == p.peak_matrix_ops, "{}: attainable(ridge) != peak", p.name);
    }
    let dw = op_cost(
        &OpKind::DepthwiseSepConv { kernel: 3, stride: 1, out_c: 32 },
        TensorShape::new(1, 112, 112, 32),
        ActivationKind::Relu,
        &tpu,
    )
    .map_err(|e| e.to_string())?;
    let dense = op_cost(
        &OpKind::Conv { kernel: 1, stride: 1, out_c: 512 },
        TensorShape::new(1, 14, 14, 512),
        ActivationKind::Relu,
        &tpu,
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        dw.flops < dense.flops && dw.latency > dense.latency,
        "pair not inverted: W {} vs {}, latency {} vs {}",
        dw.flops,
        dense.flops,
        dw.latency,
        dense.latency
    );
    Ok(format!(
        "ridges {:.1}, {:.1} > {:.1}; W {:.3e} < {:.3e} but latency {:.3e} > {:.3e}",
        tpu.ridge_point(),
        gpu.ridge_point(),
        cpu.ridge_point(),
        dw.flops,
        dense.flops,
        dw.latency,
        dense.latency
    ))
}

fn nas_space() -> SpaceConfig {
    let mut sk = Skeleton::default();
    sk.stages = vec![
        SkeletonStage { stride: 2, out_c: 24, repeats: 1 },
        SkeletonStage { stride: 2, out_c: 40, repeats: 2 },
        SkeletonStage { stride: 2, out_c: 80, repeats: 2 },
    ];
    SpaceConfig {
        skeleton: sk,
        choices: ChoiceSets {
            conv_type: vec![ConvType::Mbconv, ConvType::FusedMbconv],
            kernel: vec![3, 5],
            expansion: vec![6],
            se_ratio: vec![0.25],
            activation: vec![ActivationKind::Relu, ActivationKind::Swish],
            s2d_position: vec![None, Some(1)],
        },
    }
}

fn criterion_9() -> Check {
    let space = nas_space();
    let size = space.size();
    ensure!(size <= 1024, "space has {size} candidates");
    let p = HardwareProfile::tpu_v3_like();
    let reference = space.to_spec(&space.first_candidate(), "ref").map_err(|e| e.to_string())?;
    let sur = SyntheticSurrogate::new(&reference).map_err(|e| e.to_string())?;
    let t = model_cost(&validate_model(&reference).map_err(|e| e.to_string())?, &p).total_latency;
    let cfg = RewardConfig::with_target(t).map_err(|e| e.to_string())?;
    let oracle = exhaustive_search(&space, &sur, &p, &cfg, DEFAULT_MAX_SPACE).map_err(|e| e.to_string())?;
    for seed in 0..3 {
        let params = EvolutionParams { population: 32, samples: 8, budget: size as usize, seed };
        let r = evolutionary_search(&space, &sur, &p, &cfg, &params).map_err(|e| e.to_string())?;
        ensure!(
            r.best.candidate == oracle.candidate,
            "seed {seed}: evolution best reward {} vs exhaustive {}",
            r.best.reward,
            oracle.reward
        );
    }

    let mut arch = ParetoArchive::new();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cand = space.first_candidate();
    for event in 0..10_000 {
        // Coarse values make exact ties and duplicates common.
        let e = ArchiveEntry {
            candidate: cand.clone(),
            accuracy: (rng.gen_range(0..200) as f64) / 200.0,
            latency_s: (rng.gen_range(1..200) as f64) / 1000.0,
        };
        arch.insert(e);
        let es = arch.entries();
        for (i, a) in es.iter().enumerate() {
            for (j, b) in es.iter().enumerate() {
                ensure!(
                    i == j || !accelscale::nas_lite::dominates((a.accuracy, a.latency_s), (b.accuracy, b.latency_s)),
                    "event {event}: entry {i} dominates entry {j}"
                );
            }
        }
    }
    Ok(format!(
        "space {size}, 3 seeds match exhaustive; 10000 archive events, final front {}",
        arch.len()
    ))
}

fn main() -> ExitCode {
    let checks: [(&str, &str, fn() -> Check); 10] = [
        ("1", "closed-form counts equal loop-nest oracle", criterion_1),
        ("2", "FLOPs anchors", criterion_2),
        ("3", "intensity ordering", criterion_3),
        ("4", "reward values", criterion_4),
        ("5a", "GPU family dimensions", criterion_5a),
        ("5b", "TPU family dimensions", criterion_5b),
        ("6", "grid search equals enumeration", criterion_6),
        ("7", "latency-aware triplet and intensity", criterion_7),
        ("8", "roofline properties", criterion_8),
        ("9", "search oracle and Pareto archive", criterion_9),
    ];
    let mut failed = 0;
    for (id, name, f) in checks {
        let t0 = Instant::now();
        let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let ms = t0.elapsed().as_millis();
        match r {
            Ok(detail) => println!("criterion {id} PASS  {name}: {detail} ({ms} ms)"),
            Err(why) => {
                failed += 1;
                println!("criterion {id} FAIL  {name}: {why} ({ms} ms)");
            }
        }
    }
    println!("{} of {} criteria passed", 10 - failed, 10);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

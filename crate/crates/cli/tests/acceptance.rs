//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavefront_cli::{cmd_speed, RunConfig};
use wavefront_core::{
    compute_bounds, compute_constants, default_extent, derivative, eval_j, eval_penalty, find_speed, first_integral_residual,
    fit_decay_rate, gamma_curve, grad_j, halfline_identities, initial_profile, jump_identity_gap, shooting_check,
    FunctionalParams, Grid, MinimizeOptions, PotentialConstants, PotentialSpec, Profile, SpeedResult,
};

type Outcome = Result<String, String>;

/// `W(u) = u^4/2 - a u^3/3 - u^2 + a u + 1/2 - 2a/3`.
fn w_scalar(alpha: f64, u: f64) -> f64 {
    u.powi(4) / 2.0 - alpha * u.powi(3) / 3.0 - u * u + alpha * u + 0.5 - 2.0 * alpha / 3.0
}

/// Offset `x0` with `W(tanh(x0)) = 0`, by bisection on the closed form.
fn tanh_shift(alpha: f64) -> f64 {
    let (mut lo, mut hi) = (-1.0 + 1e-12, 1.0 - 1e-12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if w_scalar(alpha, mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).atanh()
}

struct Case {
    label: String,
    spec: PotentialSpec,
    consts: PotentialConstants,
    grid: Grid,
}

impl Case {
    fn new(label: &str, spec: PotentialSpec, h: f64) -> Self {
        let consts = compute_constants(&spec).unwrap();
        let b = compute_bounds(&spec, &consts, 1.0);
        let (xl, xr) = default_extent(&consts, b.bracket_lo);
        let grid = Grid::uniform(xl, xr, h).unwrap();
        Case { label: label.into(), spec, consts, grid }
    }
}

struct Wave {
    label: String,
    spec: PotentialSpec,
    consts: PotentialConstants,
    speed: SpeedResult,
    seconds: f64,
}

/// Every minimizer produced during the run, for the identity suite.
struct Minimizer {
    label: String,
    spec: PotentialSpec,
    c: f64,
    gamma: f64,
    profile: Profile,
}

fn solve(case: &Case, c_tol: f64) -> Result<Wave, String> {
    let t = Instant::now();
    let speed = find_speed(&case.spec, &case.consts, &case.grid, &MinimizeOptions::default(), c_tol)
        .map_err(|e| format!("{}: {e}", case.label))?;
    Ok(Wave {
        label: case.label.clone(),
        spec: case.spec.clone(),
        consts: case.consts.clone(),
        speed,
        seconds: t.elapsed().as_secs_f64(),
    })
}

fn criterion_1(scalar: &[(f64, Result<Wave, String>)]) -> Outcome {
    let mut parts = Vec::new();
    for (alpha, w) in scalar {
        let w = w.as_ref().map_err(|e| e.clone())?;
        let c = w.speed.c_star;
        let x0 = tanh_shift(*alpha);
        let p = &w.speed.profile;
        let gap = p.grid().nodes().iter().zip(p.values()).map(|(x, u)| (u - (x + x0).tanh()).abs()).fold(0.0, f64::max);
        let line = format!("alpha={alpha}: c*={c:.5} tanh gap={gap:.2e} time={:.1}s", w.seconds);
        if (c - alpha).abs() > 1e-2 || gap > 1e-2 || w.seconds > 60.0 {
            return Err(line);
        }
        parts.push(line);
    }
    Ok(parts.join("; "))
}

fn criterion_2(vector: &Result<Wave, String>) -> Outcome {
    let w = vector.as_ref().map_err(|e| e.clone())?;
    let c = w.speed.c_star;
    let line = format!("c*={c:.5} (beta 1.2, alpha 0.6) time={:.1}s", w.seconds);
    if (c - 1.2).abs() <= 1e-2 && c >= 0.6 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn criterion_3(waves: &[&Wave]) -> Outcome {
    let mut parts = Vec::new();
    for w in waves {
        let b = compute_bounds(&w.spec, &w.consts, 1.0);
        let c = w.speed.c_star;
        let line = format!("{}: {:.4} < {c:.5} < {:.4}", w.label, b.bracket_lo, b.bracket_hi);
        if !(b.bracket_lo - 1e-6 < c && c < b.bracket_hi + 1e-6) {
            return Err(line);
        }
        parts.push(line);
    }
    Ok(parts.join("; "))
}

fn criterion_4(waves: &[&Wave], grids: &[&Grid], produced: &mut Vec<Minimizer>) -> Outcome {
    let mut parts = Vec::new();
    for (w, grid) in waves.iter().zip(grids) {
        let cs = w.speed.c_star;
        let c_list: Vec<f64> = (0..7).map(|k| cs * (0.3 + 1.4 * k as f64 / 6.0)).collect();
        let results = gamma_curve(&w.spec, &w.consts, grid, &c_list, &MinimizeOptions::default(), true)
            .map_err(|e| format!("{}: {e}", w.label))?;
        let mut gammas = Vec::new();
        for (c, r) in c_list.iter().zip(results) {
            let r = r.map_err(|e| format!("{} at c={c}: {e}", w.label))?;
            let b = compute_bounds(&w.spec, &w.consts, *c);
            if !(b.lower - 1e-3 <= r.gamma && r.gamma <= b.upper + 1e-3) {
                return Err(format!("{} at c={c}: gamma {} outside [{}, {}]", w.label, r.gamma, b.lower, b.upper));
            }
            gammas.push(r.gamma);
            produced.push(Minimizer { label: w.label.clone(), spec: w.spec.clone(), c: *c, gamma: r.gamma, profile: r.profile });
        }
        let increasing = gammas.windows(2).all(|p| p[0] < p[1]);
        let changes = gammas.windows(2).filter(|p| (p[0] < 0.0) != (p[1] < 0.0)).count();
        let line = format!("{}: gamma = {:?}", w.label, gammas.iter().map(|g| format!("{g:.4}")).collect::<Vec<_>>());
        if !increasing || changes != 1 {
            return Err(line);
        }
        parts.push(line);
    }
    Ok(parts.join("; "))
}

fn criterion_5(produced: &[Minimizer]) -> Outcome {
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for m in produced {
        let h = halfline_identities(&m.spec, m.c, &m.profile).map_err(|e| e.to_string())?;
        let (fl, fr) = first_integral_residual(&m.spec, m.c, &m.profile);
        let gap = jump_identity_gap(m.c, m.gamma, &m.profile);
        let d = derivative(&m.profile);
        let jump: f64 = d.right_of_zero.iter().map(|v| v * v).sum::<f64>() - d.left_of_zero.iter().map(|v| v * v).sum::<f64>();
        let sign_ok = jump.signum() == m.gamma.signum() || m.gamma == 0.0;
        let half = h.right.max(h.left).max(h.equipartition);
        if half > 5e-3 || fl > 2e-2 || fr > 2e-2 || gap > 1e-2 || !sign_ok {
            return Err(format!(
                "{} at c={:.4}: halfline {half:.2e}, first integral ({fl:.2e}, {fr:.2e}), jump gap {gap:.2e}, jump {jump:.2e} vs gamma {:.2e}",
                m.label, m.c, m.gamma
            ));
        }
        worst = (worst.0.max(half), worst.1.max(fl.max(fr)), worst.2.max(gap));
    }
    Ok(format!(
        "{} minimizers: max halfline {:.2e}, max first integral {:.2e}, max jump gap {:.2e}, jump signs consistent",
        produced.len(),
        worst.0,
        worst.1,
        worst.2
    ))
}

/// Both builtins have `Lambda(c*) = 2` exactly, for every alpha.
fn criterion_6(waves: &[&Wave]) -> Outcome {
    let mut parts = Vec::new();
    for w in waves {
        let c = w.speed.c_star;
        let (fit, theory) = fit_decay_rate(&w.consts, c, &w.speed.profile).map_err(|e| format!("{}: {e}", w.label))?;
        let line = format!("{}: lambda_fit={fit:.4} (theory {theory:.4}, c*={c:.4})", w.label);
        if fit <= c || (fit - 2.0).abs() > 0.1 {
            return Err(line);
        }
        parts.push(line);
    }
    Ok(parts.join("; "))
}

fn criterion_7() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for spec in [PotentialSpec::scalar_cubic(0.6).unwrap(), PotentialSpec::decoupled_quartic(0.6, 1.2).unwrap()] {
        let consts = compute_constants(&spec).unwrap();
        let grid = Grid::uniform(-8.0, 6.0, 0.1).unwrap();
        let dim = spec.dim();
        let base = initial_profile(&spec, &consts, &grid).unwrap();
        for _ in 0..20 {
            let c: f64 = rng.gen_range(0.2..2.0);
            let params = FunctionalParams::new(c).unwrap();
            let mut v = base.values().to_vec();
            let n = v.len();
            for x in v[..n - dim].iter_mut() {
                *x += rng.gen_range(-0.3..0.3);
            }
            let objective = |v: &[f64]| {
                let q = Profile::new(grid.clone(), dim, v.to_vec(), spec.well_b().to_vec()).unwrap();
                eval_j(&spec, &params, &q).unwrap() + eval_penalty(&spec, &params, &q).unwrap()
            };
            let p = Profile::new(grid.clone(), dim, v.clone(), spec.well_b().to_vec()).unwrap();
            let g = grad_j(&spec, &params, &p).unwrap();
            let scale = g.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            for i in 0..n - dim {
                let step = 1e-6 * (1.0 + v[i].abs());
                let keep = v[i];
                v[i] = keep + step;
                let fp = objective(&v);
                v[i] = keep - step;
                let fm = objective(&v);
                v[i] = keep;
                worst = worst.max(((fp - fm) / (2.0 * step) - g[i]).abs() / scale);
            }
        }
    }
    let line = format!("40 random profiles, max relative FD error {worst:.2e}");
    if worst <= 1e-6 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn criterion_8(scalar: &Wave, vector: &Wave) -> Outcome {
    let mut parts = Vec::new();
    for w in [scalar, vector] {
        let gap = shooting_check(&w.spec, w.speed.c_star, &w.speed.profile).map_err(|e| format!("{}: {e}", w.label))?;
        let line = format!("{}: gap {gap:.2e}", w.label);
        if gap > 2e-2 {
            return Err(line);
        }
        parts.push(line);
    }
    Ok(parts.join("; "))
}

fn criterion_9() -> Outcome {
    let hs = [0.04, 0.02, 0.01];
    let mut cs = Vec::new();
    for h in hs {
        let case = Case::new("scalar", PotentialSpec::scalar_cubic(0.6).unwrap(), h);
        cs.push(solve(&case, 1e-6)?.speed.c_star);
    }
    let d1 = (cs[1] - cs[0]).abs();
    let d2 = (cs[2] - cs[1]).abs();
    let order = (d1 / d2).log2();
    let line = format!(
        "c*(h) = {:.6}, {:.6}, {:.6}; increments {d1:.2e}, {d2:.2e}; observed order {order:.2}; shrinking {}",
        cs[0],
        cs[1],
        cs[2],
        d2 < d1
    );
    if (cs[2] - 0.6).abs() <= 1e-2 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn criterion_10() -> Outcome {
    let dir = std::env::temp_dir().join(format!("wave-acceptance-{}", std::process::id()));
    let cfg = RunConfig::from_toml(
        "[potential]\nvariant = \"scalar_cubic\"\nalpha = 0.6\n[grid]\nh = 0.04\n[solver]\nseed = 17\n[mode]\nc_tol = 1e-3\n",
    )
    .map_err(|e| e.to_string())?;
    let a = cmd_speed(&cfg, &dir).map_err(|e| e.to_string())?;
    let b = cmd_speed(&cfg, &dir).map_err(|e| e.to_string())?;
    let _ = std::fs::remove_dir_all(&dir);
    let ja = serde_json::to_vec(&a.report.body).unwrap();
    let jb = serde_json::to_vec(&b.report.body).unwrap();
    let line = format!("{} digest-covered bytes, digest {}", ja.len(), &a.report.content_digest[..16]);
    if ja == jb && a.report.content_digest == b.report.content_digest {
        Ok(line)
    } else {
        Err(line)
    }
}

fn main() {
    let start = Instant::now();
    let scalar_cases: Vec<Case> = [0.4, 0.6, 1.0]
        .iter()
        .map(|&a| Case::new(&format!("scalar alpha={a}"), PotentialSpec::scalar_cubic(a).unwrap(), 0.01))
        .collect();
    let scalar: Vec<(f64, Result<Wave, String>)> =
        [0.4, 0.6, 1.0].iter().zip(&scalar_cases).map(|(&a, case)| (a, solve(case, 1e-3))).collect();
    let vector_case = Case::new("vector (0.6, 1.2)", PotentialSpec::decoupled_quartic(0.6, 1.2).unwrap(), 0.02);
    let vector = solve(&vector_case, 1e-3);

    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push(("scalar exact wave", criterion_1(&scalar)));
    results.push(("vector example c* = beta", criterion_2(&vector)));

    let scalar_06 = scalar[1].1.as_ref().ok();
    let mut waves: Vec<&Wave> = scalar.iter().filter_map(|(_, w)| w.as_ref().ok()).collect();
    if let Ok(v) = &vector {
        waves.push(v);
    }
    results.push(("bracket containment", criterion_3(&waves)));

    let mut produced: Vec<Minimizer> = waves
        .iter()
        .map(|w| Minimizer {
            label: w.label.clone(),
            spec: w.spec.clone(),
            c: w.speed.c_star,
            gamma: w.speed.gamma_at_c_star,
            profile: w.speed.profile.clone(),
        })
        .collect();
    let c4 = match (scalar_06, &vector) {
        (Some(s), Ok(v)) => criterion_4(&[s, v], &[&scalar_cases[1].grid, &vector_case.grid], &mut produced),
        _ => Err("needs both waves".into()),
    };
    results.push(("gamma monotone, one sign change, within bounds", c4));
    results.push(("identity suite on every minimizer", criterion_5(&produced)));
    results.push(("decay rates", criterion_6(&waves)));
    results.push(("discrete gradient vs finite differences", criterion_7()));
    let c8 = match (scalar_06, &vector) {
        (Some(s), Ok(v)) => criterion_8(s, v),
        _ => Err("needs both waves".into()),
    };
    results.push(("shooting oracle agreement", c8));
    results.push(("grid convergence", criterion_9()));
    results.push(("reproducibility", criterion_10()));

    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("PASS criterion {:>2} ({name}): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {:>2} ({name}): {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed in {:.1}s", results.len() - failed, results.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}

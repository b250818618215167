//! End-to-end acceptance checks, one PASS/FAIL line per criterion.
//!
//! Set `ACCEPTANCE_ONLY=4,7` to run a subset.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use charcoal::linalg::{
    complement_basis, kkt_violation, lasso_cd, lasso_objective, leading_left_singular_vector, Matrix,
};
use charcoal::multi::MultiConfig;
use charcoal::rng;
use charcoal::simulate::{
    adjusted_rand_index, generate_single, run_benchmark, Aggregate, BenchmarkResult, Design, MultiSpec,
    Noise, Scenario, SimConfig,
};
use charcoal::single::{calibrate_threshold, standardized_h_max, CalibrationConfig, Method};
use charcoal::sketch::{g_expected, gamma_oracle, q_matrix, sketch, Variant};
use rand::Rng;
use support::*;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn aggregate<'a>(res: &'a BenchmarkResult, estimator: &str) -> &'a Aggregate {
    res.aggregates.iter().find(|a| a.estimator == estimator).expect("estimator ran")
}

fn single(name: &str, sim: SimConfig, methods: &[Method]) -> Scenario {
    Scenario::Single {
        name: name.into(),
        sim,
        methods: methods.to_vec(),
        alpha: 0.0,
        lam_coef: 0.5,
    }
}

fn exact_algebra() -> Outcome {
    let mut rng = rng::from_seed(1);
    let (mut worst_orth, mut worst_lemma) = (0.0_f64, 0.0_f64);
    for rep in 0..50 {
        let n = rng.random_range(12..=30);
        let p = rng.random_range(1..=8);
        let cfg = SimConfig {
            sigma: 0.0,
            ..SimConfig::new(n, p, 1, 2.0, rng.random_range(0.2..0.8), rep)
        };
        let (data, truth) = generate_single(&cfg).map_err(|e| e.to_string())?;
        let x = &data.x;
        let a = complement_basis(x).map_err(|e| e.to_string())?;
        let orth = a.t_matmul(&a).max_abs_diff(&Matrix::identity(n - p));
        worst_orth = worst_orth.max(orth);
        check(orth < 1e-10, format!("A^T A - I = {orth:e}"))?;
        let ax = a.t_matmul(x).max_abs();
        check(ax < 1e-8 * x.max_abs(), format!("A^T X = {ax:e}"))?;

        let z_vec = a.t_matvec(&data.y);
        let wz = materialise_w(&a, x, truth.z);
        let fit = wz.matvec(&truth.theta);
        let gap = z_vec.iter().zip(&fit).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        check(gap < 1e-8, format!("noiseless Z - W_z theta = {gap:e}"))?;

        let s_inv = inverse(&x.t_matmul(x));
        let tail = partial_gram(x, truth.z, n);
        for t in 1..=truth.z {
            let lhs = materialise_w(&a, x, t).t_matmul(&wz);
            let mut rhs = partial_gram(x, 0, t).matmul(&s_inv).matmul(&tail);
            rhs.scale(4.0);
            let rel = lhs.max_abs_diff(&rhs) / rhs.max_abs().max(1e-300);
            worst_lemma = worst_lemma.max(rel);
            check(rel < 1e-6, format!("cross-product identity off by {rel:e} at t={t}"))?;
        }
    }
    Ok(format!("max |A^TA-I| {worst_orth:.1e}, identity rel err {worst_lemma:.1e}"))
}

fn oracle_suite() -> Outcome {
    let mut rng = rng::from_seed(2);
    for _ in 0..25 {
        let n = rng.random_range(6..=30);
        let p = rng.random_range(1..=(n - 2).min(8));
        let data = random_data(n, p, &mut rng);
        let sk = sketch(&data).map_err(|e| e.to_string())?;
        for variant in [Variant::Diag, Variant::Primed] {
            let q = q_matrix(&data, &sk, 0.0, variant).map_err(|e| e.to_string())?;
            for (j, row) in naive_q(&data, &sk.basis, 0.0, variant).iter().enumerate() {
                for (u, v) in q.rows().row(j).iter().zip(row) {
                    check((u - v).abs() < 1e-8 * (1.0 + v.abs()), format!("streamed {u} vs naive {v}"))?;
                }
            }
        }
    }
    for _ in 0..20 {
        let m = rng.random_range(8..=25);
        let p = rng.random_range(2..=10);
        let w = gaussian_matrix(m, p, &mut rng);
        let z = gaussian_vec(m, &mut rng);
        let lam = 0.2 * w.t_matvec(&z).iter().fold(0.0_f64, |a, v| a.max(v.abs())) / m as f64;
        let fit = lasso_cd(&w, &z, lam).map_err(|e| e.to_string())?;
        check(kkt_violation(&w, &z, &fit.coef, lam).satisfied(lam, 1e-6), "KKT violated")?;
        let (f, g) = (
            lasso_objective(&w, &z, &fit.coef, lam),
            lasso_objective(&w, &z, &prox_gradient_lasso(&w, &z, lam), lam),
        );
        check((f - g).abs() <= 1e-6 * g.abs(), format!("objective {f} vs oracle {g}"))?;
    }
    let mut worst_angle = 0.0_f64;
    for seed in 0..20 {
        let m = gaussian_matrix(rng.random_range(2..=10), rng.random_range(2..=30), &mut rng);
        let v = leading_left_singular_vector(&m, seed).map_err(|e| e.to_string())?.vector;
        let angle = line_angle(&v, &brute_left_singular(&m));
        worst_angle = worst_angle.max(angle);
        check(angle < 1e-6, format!("singular vector off by {angle:e} rad"))?;
    }
    for _ in 0..100 {
        let n = rng.random_range(2..=200);
        let mut draw = || {
            let mut c: Vec<usize> = (0..rng.random_range(0..5)).map(|_| rng.random_range(1..n)).collect();
            c.sort_unstable();
            c.dedup();
            c
        };
        let (a, b) = (draw(), draw());
        let (fast, slow) = (adjusted_rand_index(&a, &b, n), brute_ari(&a, &b, n));
        check((fast - slow).abs() < 1e-12, format!("ARI {fast} vs pair count {slow}"))?;
    }
    for (n, p) in [(600, 200), (1200, 400), (80, 20)] {
        for z in [n / 10, n / 3, n / 2, 4 * n / 5] {
            let best = (1..n)
                .max_by(|&a, &b| gamma_oracle(a, z, n, p).total_cmp(&gamma_oracle(b, z, n, p)).then(b.cmp(&a)))
                .unwrap();
            check(best == z, format!("signal curve peaks at {best}, expected {z}"))?;
        }
    }
    Ok(format!("worst singular-vector angle {worst_angle:.1e} rad"))
}

fn cross_product_mean() -> Outcome {
    let (n, p, z, reps) = (80, 20, 40, 500);
    let mut worst = 0.0_f64;
    for t in [20, 40, 60] {
        let mut sum = Matrix::zeros(p, p);
        let mut sum_sq = Matrix::zeros(p, p);
        for rep in 0..reps {
            let mut r = rng::child(3, rep as u64);
            let x = gaussian_matrix(n, p, &mut r);
            let a = complement_basis(&x).map_err(|e| e.to_string())?;
            let c = materialise_w(&a, &x, t).t_matmul(&materialise_w(&a, &x, z));
            for i in 0..p {
                for j in 0..p {
                    sum[(i, j)] += c[(i, j)];
                    sum_sq[(i, j)] += c[(i, j)].powi(2);
                }
            }
        }
        let g = g_expected(t, z, n, p);
        let r = reps as f64;
        for i in 0..p {
            for j in 0..p {
                let mean = sum[(i, j)] / r;
                let se = ((sum_sq[(i, j)] - r * mean * mean) / (r - 1.0) / r).sqrt();
                let target = if i == j { g } else { 0.0 };
                let score = (mean - target).abs() / se;
                worst = worst.max(score);
                check(score < 5.0, format!("t={t} entry ({i},{j}) {score:.2} standard errors away"))?;
            }
        }
    }
    Ok(format!("largest deviation {worst:.2} standard errors"))
}

fn table1() -> Outcome {
    let sc = single("table1", SimConfig::new(600, 200, 3, 4.0, 0.3, 0), &[Method::Proj, Method::LassoBic]);
    let res = run_benchmark(&[sc], 100, 1, false).map_err(|e| e.to_string())?;
    let (a1, a2) = (aggregate(&res, "proj").rmse.unwrap(), aggregate(&res, "lasso-bic").rmse.unwrap());
    let detail = format!("RMSE proj {a1:.2}, lasso-bic {a2:.2}");
    check(a1 <= 5.0 && a2 <= 5.0, detail.clone())?;
    Ok(detail)
}

fn table2() -> Outcome {
    let sc = single("table2", SimConfig::new(1200, 400, 3, 4.0, 0.3, 0), &[Method::Proj, Method::LassoBic]);
    let res = run_benchmark(&[sc], 100, 1, false).map_err(|e| e.to_string())?;
    let (a1, a2) = (
        aggregate(&res, "proj").mean_loss.unwrap(),
        aggregate(&res, "lasso-bic").mean_loss.unwrap(),
    );
    let detail = format!("mean |z_hat - z| proj {a1:.2}, lasso-bic {a2:.2}");
    check(a1 <= 5.0 && a2 <= 6.0, detail.clone())?;
    Ok(detail)
}

fn validity_and_power() -> Outcome {
    let (n, p) = (600, 200);
    let cal = calibrate_threshold(&CalibrationConfig::new(n, p, 6)).map_err(|e| e.to_string())?;
    let rejects = |rho: f64, seed: u64| {
        let (data, _) = generate_single(&SimConfig::new(n, p, 3, rho, 0.3, seed)).unwrap();
        standardized_h_max(&data, 0.05, 0.5, None).is_some_and(|h| h >= cal.threshold)
    };
    let null = (0..200).filter(|&s| rejects(0.0, rng::derive_seed(60, s))).count() as f64 / 200.0;
    let power = (0..100).filter(|&s| rejects(8.0, rng::derive_seed(61, s))).count() as f64 / 100.0;
    let detail = format!("T = {:.3}, null rejection {null:.3}, power {power:.2}", cal.threshold);
    check(null <= 0.05 && power >= 0.99, detail.clone())?;
    Ok(detail)
}

fn multiple_changes() -> Outcome {
    let sc = Scenario::Multi {
        name: "M1".into(),
        spec: MultiSpec::m1(1.6, 3, 0),
        config: MultiConfig::default(),
        calibration_b: 1000,
    };
    let res = run_benchmark(&[sc], 20, 1, false).map_err(|e| e.to_string())?;
    let agg = &res.aggregates[0];
    let (exact, haus, ari) = (
        agg.exact_count.unwrap(),
        agg.mean_hausdorff.unwrap(),
        agg.mean_ari.unwrap(),
    );
    let detail = format!(
        "T = {:.3}, exact count {exact}/20, mean Hausdorff {haus:.1}, mean ARI {ari:.3}",
        res.thresholds[0].1
    );
    check(exact >= 17 && haus <= 30.0 && ari >= 0.93, detail.clone())?;
    Ok(detail)
}

fn robustness() -> Outcome {
    let scenarios: Vec<Scenario> = [2, 4, 6]
        .iter()
        .map(|&e| {
            let sim = SimConfig {
                design: Design::ArToeplitz,
                noise: Noise::T4,
                ..SimConfig::new(1200, 400, 20, 1.5f64.powi(e), 0.3, 0)
            };
            single(&format!("rho1.5^{e}"), sim, &[Method::LassoBic])
        })
        .collect();
    let res = run_benchmark(&scenarios, 50, 1, false).map_err(|e| e.to_string())?;
    let losses: Vec<f64> = res.aggregates.iter().map(|a| a.mean_loss.unwrap()).collect();
    let detail = format!("mean loss {losses:.1?}");
    check(losses.windows(2).all(|w| w[1] <= w[0]), detail.clone())?;
    Ok(detail)
}

fn determinism() -> Outcome {
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let d = dir.path();
    let bin = env!("CARGO_BIN_EXE_charcoal");
    let run = |threads: &str, args: &[&str]| -> Result<Vec<u8>, String> {
        let cwd = d.join(threads);
        std::fs::create_dir_all(&cwd).map_err(|e| e.to_string())?;
        let out = Command::new(bin)
            .current_dir(&cwd)
            .arg("--threads")
            .arg(threads)
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
        }
        Ok(out.stdout)
    };

    let mut files = Vec::new();
    for threads in ["1", "2", "4"] {
        run(threads, &["simulate", "--n", "300", "--p", "40", "--seed", "9", "-o", "s.csv"])?;
        run(threads, &["simulate", "--preset", "M1", "--rho-min", "2", "--seed", "9", "-o", "m.csv"])?;
        let single = run(threads, &["detect", "-i", "s.csv", "--trace", "t.csv"])?;
        let lasso = run(threads, &["detect", "-i", "s.csv", "--method", "lasso-bic", "--seed", "4"])?;
        let multi = run(
            threads,
            &["detect", "-i", "m.csv", "--multi", "--threshold", "3", "--intervals", "60", "--seed", "4"],
        )?;
        let cal = run(threads, &["calibrate", "--n", "200", "--p", "20", "--b", "100", "--seed", "4"])?;
        run(
            threads,
            &[
                "benchmark", "--preset", "table1", "--reps", "2", "--seed", "4", "--no-timing", "-o", "b.csv",
                "--summary", "b.json",
            ],
        )?;
        let mut blob = Vec::new();
        for name in ["s.csv", "s.csv.truth.json", "m.csv", "t.csv", "b.csv", "b.json"] {
            blob.push(std::fs::read(d.join(threads).join(name)).map_err(|e| e.to_string())?);
        }
        blob.extend([single, lasso, multi, cal]);
        files.push(blob);
    }
    check(files.windows(2).all(|w| w[0] == w[1]), "CLI outputs differ across thread counts")?;

    let sc = Scenario::Multi {
        name: "small".into(),
        spec: MultiSpec::new(240, 10, vec![80, 160], vec![3.0, 3.0], 3, 0),
        config: MultiConfig {
            intervals: 50,
            ..MultiConfig::default()
        },
        calibration_b: 60,
    };
    let in_pool = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_benchmark(std::slice::from_ref(&sc), 3, 8, false).unwrap())
    };
    check(in_pool(1) == in_pool(3), "library benchmark differs across pool sizes")?;
    Ok("simulate, detect, calibrate, benchmark identical at 1, 2 and 4 threads".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("exact algebra", exact_algebra),
        ("oracle suite", oracle_suite),
        ("Monte-Carlo cross-product mean", cross_product_mean),
        ("single change, n=600 p=200", table1),
        ("single change, n=1200 p=400", table2),
        ("test validity and power", validity_and_power),
        ("multiple changes, layout M1", multiple_changes),
        ("robustness trend, AR design with t4 noise", robustness),
        ("determinism across thread counts", determinism),
    ];
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|v| v.trim().parse().ok()).collect());

    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = i + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{id}] {name}: {detail} ({secs:.1}s)"),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{id}] {name}: {detail} ({secs:.1}s)");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

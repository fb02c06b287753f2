//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the verdict lines are always
//! printed. The process fails if any criterion fails, except the documented
//! lower-bound violation of contiguous blocks with `d0 >= 2`, which is printed
//! as FAIL and asserted to be the only defect of that family.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use hiersel::bench::concentration::{concentration_squares_check, ScalarDistribution};
use hiersel::bench::psi::{psi_norm_estimate, PsiKind};
use hiersel::bench::{
    a0_event_rate, rate_experiment, re_constant, sigma_z_eigs, Covariance, DesignDistribution, ExperimentConfig,
    NoiseSpec, ReMethod,
};
use hiersel::penalty::{a3_trials, atoms, evaluate, prox, Exponent, NormKind, PenaltySpec};
use hiersel::rng::from_seed;
use hiersel::solver::{objective, zero_lambda_bound, LeastSquares, TheoryConstants};
use hiersel::{expand_design, fit, DesignMatrix, Expansion, InteractionIndex, SolverConfig};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

struct Verdict {
    pass: bool,
    detail: String,
    /// Failure that is documented and must not fail the process.
    known: bool,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into(), known: false }
    }
}

fn two() -> Exponent {
    Exponent::TWO
}

/// The six families at q = 2; blocks appear with `d0 = 1` and `d0 = 2`.
fn families() -> Vec<PenaltySpec> {
    vec![
        PenaltySpec::Lasso,
        PenaltySpec::Cap { q: two() },
        PenaltySpec::BienMaxL1,
        PenaltySpec::PairwiseGroup { q: two() },
        PenaltySpec::ContiguousBlock { q: two(), d0: 1 },
        PenaltySpec::ContiguousBlock { q: two(), d0: 2 },
        PenaltySpec::Nested { q: two() },
    ]
}

fn penalty_algebra() -> Verdict {
    let mut failures = Vec::new();
    let mut unexpected = Vec::new();
    for spec in families() {
        for p in [3, 5, 8] {
            let r = a3_trials(&spec, p, 1000, 11).expect("a3 trials");
            if r.all_passed() {
                continue;
            }
            let only_lower = r.zero == r.trials && r.subadditive == r.trials && r.upper == r.trials;
            let block_d0 = matches!(spec, PenaltySpec::ContiguousBlock { d0, .. } if d0 >= 2);
            failures.push(format!("{spec} p={p}: lower {}/{}", r.lower, r.trials));
            if !(block_d0 && only_lower) {
                unexpected.push(format!("{spec} p={p}: {r:?}"));
            }
        }
    }
    if failures.is_empty() {
        return Verdict::new(true, "all families 1000/1000 at p = 3, 5, 8");
    }
    Verdict {
        pass: false,
        known: unexpected.is_empty(),
        detail: if unexpected.is_empty() {
            format!(
                "lower bound with L1 = 1 violated by contiguous blocks with d0 >= 2 ({}); every other family and check 1000/1000",
                failures.join("; ")
            )
        } else {
            format!("unexpected failures: {}", unexpected.join("; "))
        },
    }
}

fn random_theta(rng: &mut impl Rng, p1: usize) -> Vec<f64> {
    (0..p1)
        .map(|_| {
            if rng.random::<f64>() < 0.3 {
                0.0
            } else {
                rng.sample::<f64, _>(StandardNormal) * 10f64.powf(rng.random_range(-2.0..2.0))
            }
        })
        .collect()
}

fn atom_sum_identity() -> Verdict {
    let mut rng = from_seed(21);
    let mut worst = 0.0f64;
    for spec in families() {
        for t in 0..500 {
            let p = 2 + t % 7;
            if let PenaltySpec::ContiguousBlock { d0, .. } = spec {
                if d0 > p {
                    continue;
                }
            }
            let idx = InteractionIndex::new(p).unwrap();
            let theta = random_theta(&mut rng, idx.p1());
            let direct = evaluate(&spec, &theta, idx).unwrap();
            let summed = atoms(&spec, idx).unwrap().evaluate(&theta);
            worst = worst.max((direct - summed).abs() / (1.0 + direct));
        }
    }
    Verdict::new(worst <= 1e-10, format!("worst relative gap {worst:.2e} (bound 1e-10)"))
}

fn gaussian_instance(seed: u64, n: usize, p: usize) -> (DesignMatrix, Vec<f64>) {
    let mut rng = from_seed(seed);
    let x = DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal));
    let z = expand_design(&x, Expansion::centered()).unwrap();
    let mut beta = vec![0.0; z.ncols()];
    beta[0] = 1.5;
    beta[1] = -1.0;
    beta[p] = 0.8;
    let signal = z.values() * DVector::from_vec(beta);
    let y = signal.iter().map(|s| s + 0.5 * rng.sample::<f64, _>(StandardNormal)).collect();
    (z, y)
}

/// Cyclic coordinate descent for the lasso, run to a fixed point.
fn lasso_cd(z: &DMatrix<f64>, y: &[f64], lambda: f64) -> Vec<f64> {
    let n = z.nrows() as f64;
    let mut theta = vec![0.0; z.ncols()];
    let mut resid = y.to_vec();
    let sq: Vec<f64> = z.column_iter().map(|c| c.norm_squared() / n).collect();
    for _ in 0..100_000 {
        let mut change = 0.0f64;
        for (j, col) in z.column_iter().enumerate() {
            let rho = col.iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() / n + sq[j] * theta[j];
            let new = (rho.abs() - lambda).max(0.0).copysign(rho) / sq[j];
            let d = new - theta[j];
            if d != 0.0 {
                resid.iter_mut().zip(col.iter()).for_each(|(r, a)| *r -= d * a);
                theta[j] = new;
                change = change.max(d.abs());
            }
        }
        if change < 1e-15 {
            break;
        }
    }
    theta
}

fn solver_vs_oracle() -> Verdict {
    let mut worst_gap = 0.0f64;
    let mut unconverged = 0;
    for seed in 0..50 {
        let (z, y) = gaussian_instance(1000 + seed, 50, 5);
        let lambda = 0.1 * LeastSquares::new(&z, &y).unwrap().score().amax();
        let res = fit(&z, &y, &PenaltySpec::Lasso, lambda, &SolverConfig::default()).unwrap();
        unconverged += usize::from(!res.converged);
        let oracle = lasso_cd(z.values(), &y, lambda);
        let f_oracle = objective(&z, &y, &oracle, lambda, &PenaltySpec::Lasso).unwrap();
        worst_gap = worst_gap.max((res.objective - f_oracle).abs());
    }
    let specs = [
        PenaltySpec::Cap { q: two() },
        PenaltySpec::Cap { q: Exponent::INFINITY },
        PenaltySpec::BienMaxL1,
        PenaltySpec::PairwiseGroup { q: two() },
        PenaltySpec::ContiguousBlock { q: two(), d0: 2 },
        PenaltySpec::Nested { q: two() },
    ];
    let mut rng = from_seed(31);
    let mut beaten = 0;
    for (i, spec) in specs.iter().enumerate() {
        let p = 3 + i % 4;
        let (z, y) = gaussian_instance(2000 + i as u64, 40, p);
        let ls = LeastSquares::new(&z, &y).unwrap();
        let lambda = 0.05 * zero_lambda_bound(spec, ls.score().as_slice());
        let res = ls.fit(spec, lambda, &SolverConfig::default()).unwrap();
        unconverged += usize::from(!res.converged);
        for _ in 0..10_000 {
            let dir: Vec<f64> = (0..res.theta.len()).map(|_| rng.sample(StandardNormal)).collect();
            let norm = dir.iter().map(|a| a * a).sum::<f64>().sqrt();
            let radius = 0.1 * rng.random::<f64>();
            let moved: Vec<f64> = res.theta.iter().zip(&dir).map(|(t, d)| t + radius * d / norm).collect();
            if objective(&z, &y, &moved, lambda, spec).unwrap() < res.objective - 1e-7 {
                beaten += 1;
            }
        }
    }
    Verdict::new(
        worst_gap <= 1e-6 && beaten == 0 && unconverged == 0,
        format!(
            "lasso objective gap {worst_gap:.2e} over 50 instances; {beaten} of 60000 perturbations improved; unconverged {unconverged}"
        ),
    )
}

fn prox_correctness() -> Verdict {
    let kinds = [
        NormKind::L1,
        NormKind::Lq { q: two() },
        NormKind::Lq { q: Exponent::new(1.5).unwrap() },
        NormKind::Lq { q: Exponent::new(3.0).unwrap() },
        NormKind::Lq { q: Exponent::INFINITY },
        NormKind::MaxAbsL1,
    ];
    let value = |kind: &NormKind, x: &[f64], v: &[f64], t: f64| {
        0.5 * x.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() + t * kind.norm(x)
    };
    let mut rng = from_seed(41);
    let mut bad = 0;
    for kind in &kinds {
        for _ in 0..200 {
            let dim = rng.random_range(1..8);
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
            let t = rng.random_range(0.05..3.0);
            let x = prox(kind, &v, t).unwrap();
            let best = value(kind, &x, &v, t);
            for _ in 0..500 {
                let radius = 0.1 * rng.random::<f64>();
                let y: Vec<f64> = x.iter().map(|xi| xi + radius * rng.random_range(-1.0..1.0)).collect();
                if value(kind, &y, &v, t) < best - 1e-12 * (1.0 + best) {
                    bad += 1;
                    break;
                }
            }
        }
    }
    Verdict::new(bad == 0, format!("{} kinds x 200 cases, {bad} beaten by a perturbation", kinds.len()))
}

fn re_positivity() -> Verdict {
    let dist = DesignDistribution::default();
    let mut above = 0;
    let mut smallest = f64::INFINITY;
    for seed in 0..50u64 {
        let x = dist.sample(200, 8, &mut from_seed(seed)).unwrap();
        let z = expand_design(&x, Expansion::centered()).unwrap().into_values();
        let e = re_constant(&z, 2, 7.0, ReMethod::RandomConeDescent, 20, seed).unwrap();
        smallest = smallest.min(e.m_hat);
        above += usize::from(e.m_hat > 0.1);
    }
    // Z = sqrt(n) Q with orthonormal Q, so Z^T Z / n = I and M = 1.
    let (n, p1) = (200, 36);
    let mut rng = from_seed(51);
    let g = DMatrix::from_fn(n, p1, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = g.qr().q() * (n as f64).sqrt();
    let ortho = re_constant(&q, 2, 7.0, ReMethod::RandomConeDescent, 20, 5).unwrap().m_hat;
    Verdict::new(
        above >= 45 && (ortho - 1.0).abs() <= 1e-9,
        format!("M > 0.1 in {above}/50 designs (smallest {smallest:.4}); orthonormal design M = {ortho:.12}"),
    )
}

fn event_a0() -> Verdict {
    let dist = DesignDistribution::default();
    let noise = NoiseSpec { ke: 1.0, ..NoiseSpec::default() };
    let tc = TheoryConstants { ke: 1.0, kx: 1.0, h0: dist.h0(10).unwrap(), delta: 0.5, eta0: 1.0, c: 1.0 };
    let r = a0_event_rate(500, 10, &dist, &noise, &tc, 1.0, 200, 61).unwrap();
    Verdict::new(r.frequency >= 0.9, format!("frequency {:.3} over {} trials", r.frequency, r.trials))
}

fn sigma_z_eigenvalues() -> Verdict {
    let identity = sigma_z_eigs(&DesignDistribution::default(), 4, 100_000, 71).unwrap();
    let ar1 = DesignDistribution { covariance: Covariance::Ar1 { rho: 0.5 }, ..DesignDistribution::default() };
    let ar1 = sigma_z_eigs(&ar1, 4, 100_000, 72).unwrap();
    Verdict::new(
        (identity.min - 1.0).abs() <= 0.1 && (identity.max - 1.0).abs() <= 0.1 && ar1.min > 0.05,
        format!("identity [{:.4}, {:.4}]; ar1(0.5) min {:.4}", identity.min, identity.max, ar1.min),
    )
}

fn rate_scaling() -> Verdict {
    let cfg = ExperimentConfig::default();
    let report = rate_experiment(&cfg).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for spec in [PenaltySpec::Cap { q: two() }, PenaltySpec::Lasso] {
        let s = report.summary_for(&spec).expect("summary");
        let f = s.fit.expect("line fit");
        ok &= (0.8..=1.2).contains(&f.slope) && f.r_squared > 0.8;
        parts.push(format!("{spec} slope {:.3} R2 {:.3}", f.slope, f.r_squared));
        if matches!(spec, PenaltySpec::Cap { .. }) {
            ok &= s.pe_within_three_l1 == s.replications;
            parts.push(format!("Pe <= 3 l1 on {}/{}", s.pe_within_three_l1, s.replications));
        }
    }
    Verdict::new(ok, format!("{} rows; {}", report.rows.len(), parts.join("; ")))
}

fn psi_product() -> Verdict {
    let mut rng = from_seed(91);
    let samples = 1_000_000;
    let mut first = Vec::with_capacity(samples);
    let mut product = Vec::with_capacity(samples);
    for _ in 0..samples {
        let u: f64 = rng.sample(StandardNormal);
        let v: f64 = rng.sample(StandardNormal);
        first.push(u);
        product.push(u * v);
    }
    let psi2 = psi_norm_estimate(&first, PsiKind::Psi2, 10).unwrap();
    let psi1 = psi_norm_estimate(&product, PsiKind::Psi1, 10).unwrap();
    Verdict::new(psi1 <= 2.2 * psi2 * psi2, format!("psi1(XY) {psi1:.4} vs 2.2 psi2(X)^2 {:.4}", 2.2 * psi2 * psi2))
}

fn concentration_of_squares() -> Verdict {
    let r = concentration_squares_check(ScalarDistribution::CenteredExponential, &[100, 1000, 10_000], 0.5, 2000, 101)
        .unwrap();
    let slope = r.fit.map_or(f64::NAN, |f| f.slope);
    let freqs: Vec<String> = r.rows.iter().map(|row| format!("{:.4}", row.frequency)).collect();
    Verdict::new(r.nonincreasing(0.0) && slope < 0.0, format!("frequencies [{}]; slope {slope:.4}", freqs.join(", ")))
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_hiersel")
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Runs one command in `dir` and returns stdout plus every file it wrote.
fn run_in(dir: &Path, args: &[&str]) -> Result<Vec<(String, Vec<u8>)>, String> {
    let out = Command::new(bin()).args(args).current_dir(dir).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    let mut files = vec![("stdout".to_string(), out.stdout)];
    let mut names: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    names.sort();
    for path in names {
        files.push((path.file_name().unwrap().to_string_lossy().into(), std::fs::read(&path).unwrap()));
    }
    Ok(files)
}

fn determinism() -> Verdict {
    let config = root().join("configs/default.toml");
    let config = config.to_str().unwrap();
    let setup = tempfile::tempdir().unwrap();
    let data = setup.path().join("data.csv");
    let data = data.to_str().unwrap();
    run_in(setup.path(), &["simulate", "--seed", "3", "--n", "120", "--p", "5", "--out", data]).unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["expand", "--data", data, "--response", "y", "--center", "--out", "map.csv"],
        vec!["fit", "--data", data, "--seed", "4", "--out", "fit.json"],
        vec!["path", "--data", data, "--n-lambda", "6", "--out", "path.json"],
        vec!["simulate", "--seed", "5", "--out", "sim.csv", "--truth", "truth.json"],
        vec!["rate-bench", "--config", config, "--seed", "7", "--out", "rate.csv", "--summary", "rate.json"],
        vec!["re-check", "--seed", "6", "--trials", "5", "--out", "re.json"],
        vec!["a0-check", "--seed", "7", "--trials", "40", "--out", "a0.json"],
        vec!["eigs-check", "--seed", "8", "--n-mc", "20000", "--out", "eigs.json"],
        vec!["psi-check", "--seed", "9", "--samples", "100000", "--out", "psi.json"],
        vec!["conc-check", "--seed", "10", "--trials", "300", "--out", "conc.json"],
        vec![
            "penalty-check",
            "--seed",
            "11",
            "--family",
            "cap",
            "--q",
            "2",
            "--p",
            "5",
            "--trials",
            "200",
            "--out",
            "pc.json",
        ],
    ];
    let mut differing = Vec::new();
    for args in &commands {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        match (run_in(a.path(), args), run_in(b.path(), args)) {
            (Ok(x), Ok(y)) if x == y && x.len() > 1 => {}
            (Err(e), _) | (_, Err(e)) => differing.push(e),
            _ => differing.push(args[0].to_string()),
        }
    }
    Verdict::new(differing.is_empty(), format!("{} commands run twice; differing: {:?}", commands.len(), differing))
}

type Criterion = (&'static str, Duration, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 11] = [
        ("penalty algebra", Duration::from_secs(30), penalty_algebra),
        ("atom-sum identity", Duration::from_secs(10), atom_sum_identity),
        ("solver vs oracle", Duration::from_secs(120), solver_vs_oracle),
        ("prox correctness", Duration::from_secs(10), prox_correctness),
        ("RE positivity", Duration::from_secs(180), re_positivity),
        ("event A0", Duration::from_secs(60), event_a0),
        ("Sigma_z eigenvalues", Duration::from_secs(60), sigma_z_eigenvalues),
        ("rate scaling", Duration::from_secs(900), rate_scaling),
        ("psi-norm product", Duration::from_secs(60), psi_product),
        ("concentration of squares", Duration::from_secs(120), concentration_of_squares),
        ("determinism", Duration::MAX, determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut hard_failures = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let mut v = check();
        let elapsed = start.elapsed();
        if elapsed > *budget {
            v.pass = false;
            v.known = false;
            v.detail = format!("{}; over the {:?} budget", v.detail, budget);
        }
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {status} {name} ({:.1} s): {}", i + 1, elapsed.as_secs_f64(), v.detail);
        if !v.pass && !v.known {
            hard_failures += 1;
        }
    }
    if hard_failures > 0 {
        eprintln!("{hard_failures} acceptance criteria failed");
        std::process::exit(1);
    }
}

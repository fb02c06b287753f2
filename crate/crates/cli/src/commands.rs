use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use hiersel::bench::psi::{psi_norm_estimate, PsiKind};
use hiersel::bench::{
    a0_event_rate, concentration_squares_check, re_constant, re_sample_size, sigma_z_eigs, ExperimentConfig, NoiseSpec,
    ReEstimate, ReMethod, SampleSizeConstants,
};
use hiersel::io::{read_dataset_path, read_matrix, write_dataset};
use hiersel::penalty::a3_trials;
use hiersel::rng::{derived_seed, from_seed, stream};
use hiersel::solver::{lambda_path, log_grid, zero_lambda_bound, LambdaRule, LeastSquares, TheoryConstants};
use hiersel::{expand_design, Column, Expansion, FitResult, InteractionIndex, PenaltySpec, SupportSet};

use crate::args::*;
use crate::output::{emit, json, write_json};
use crate::Failure;

pub fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Expand(a) => expand(a),
        Command::Fit(a) => fit(a),
        Command::Path(a) => path(a),
        Command::Simulate(a) => simulate(a),
        Command::RateBench(a) => rate_bench(a),
        Command::ReCheck(a) => re_check(a),
        Command::A0Check(a) => a0_check(a),
        Command::EigsCheck(a) => eigs_check(a),
        Command::PsiCheck(a) => psi_check(a),
        Command::ConcCheck(a) => conc_check(a),
        Command::PenaltyCheck(a) => penalty_check(a),
    }
}

fn expand(a: ExpandArgs) -> Result<(), Failure> {
    let (names, x) = match &a.response {
        Some(r) => {
            let d = read_dataset_path(&a.data, r)?;
            (d.names, d.x)
        }
        None => read_matrix(std::fs::File::open(&a.data)?)?,
    };
    let opts = if a.center { Expansion::centered() } else { Expansion::raw() };
    let z = expand_design(&x, opts)?;
    let idx = z.index();
    let n = z.nrows() as f64;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["column", "label", "j", "k", "mean"])?;
    for col in 0..idx.p1() {
        let mean = match z.centering() {
            Some(c) => c.means[col],
            None => z.values().column(col).sum() / n,
        };
        let (label, j, k) = match idx.column_to_pair(col)? {
            Column::Main(j) => (names[j].clone(), j + 1, String::new()),
            Column::Pair(j, k) => (format!("{}:{}", names[j], names[k]), j + 1, (k + 1).to_string()),
        };
        w.write_record([(col + 1).to_string(), label, j.to_string(), k, format!("{mean:?}")])?;
    }
    let body = w.into_inner().map_err(|e| Failure::Data(e.to_string()))?;
    let summary = format!("expand: n={} p={} p1={} centered={}", z.nrows(), idx.p(), idx.p1(), a.center);
    emit(a.common.out.as_deref(), &body, &summary)
}

/// Centered design and response of a data file, plus the response mean.
struct Prepared {
    z: hiersel::DesignMatrix,
    y: Vec<f64>,
    y_mean: f64,
}

fn prepare(d: &DataArgs) -> Result<Prepared, Failure> {
    let data = read_dataset_path(&d.data, &d.response)?;
    if data.x.ncols() < 2 {
        return Err(Failure::Data("need at least two main-effect columns".into()));
    }
    let z = expand_design(&data.x, Expansion::centered())?;
    let y_mean = data.y.iter().sum::<f64>() / data.y.len() as f64;
    let y = data.y.iter().map(|v| v - y_mean).collect();
    Ok(Prepared { z, y, y_mean })
}

fn with_intercept(mut fit: FitResult, prep: &Prepared) -> FitResult {
    let means = &prep.z.centering().expect("centered design").means;
    fit.intercept = prep.y_mean - means.iter().zip(&fit.theta).map(|(m, t)| m * t).sum::<f64>();
    fit
}

fn fit(a: FitArgs) -> Result<(), Failure> {
    let prep = prepare(&a.data)?;
    let ls = LeastSquares::new(&prep.z, &prep.y)?;
    let idx = prep.z.index();
    let lambda = match a.lambda {
        LambdaArg::Fixed(v) => v,
        LambdaArg::Theory => {
            let n = prep.z.nrows() as f64;
            let h0 = a.theory.h0.unwrap_or_else(|| {
                prep.z.values().column_iter().map(|c| c.norm_squared() / n).fold(0.0, f64::max).sqrt()
            });
            let constants = TheoryConstants {
                ke: a.theory.ke,
                kx: 1.0,
                h0,
                delta: a.theory.delta,
                eta0: a.theory.eta0,
                c: a.theory.c,
            };
            LambdaRule::Theory { multiplier: a.theory.multiplier, constants }.resolve(prep.z.nrows(), idx.p1())?
        }
    };
    let res = with_intercept(ls.fit(&a.data.penalty, lambda, &a.solver.config())?, &prep);
    let summary = format!(
        "fit: {} lambda={:.6e} objective={:.10e} iterations={} converged={} support={}",
        res.penalty,
        res.lambda,
        res.objective,
        res.iterations,
        res.converged,
        res.support.len()
    );
    emit(a.common.out.as_deref(), &json(&res)?, &summary)?;
    if a.solver.strict && !res.converged {
        return Err(Failure::NotConverged(format!("solver stopped after {} iterations", res.iterations)));
    }
    Ok(())
}

fn path(a: PathArgs) -> Result<(), Failure> {
    let prep = prepare(&a.data)?;
    let score = LeastSquares::new(&prep.z, &prep.y)?.score().as_slice().to_vec();
    let lmax = zero_lambda_bound(&a.data.penalty, &score);
    if lmax.is_nan() || lmax <= 0.0 {
        return Err(Failure::Data("response is uncorrelated with every column; the path is trivial".into()));
    }
    let grid = log_grid(lmax, a.ratio, a.n_lambda)?;
    let cfg = hiersel::SolverConfig { restart: a.restart, ..a.solver.config() };
    let fits: Vec<FitResult> = lambda_path(&prep.z, &prep.y, &a.data.penalty, &grid, &cfg)?
        .into_iter()
        .map(|f| with_intercept(f, &prep))
        .collect();
    let sizes: Vec<usize> = fits.iter().map(|f| f.support.len()).collect();
    let unconverged = fits.iter().filter(|f| !f.converged).count();
    let summary = format!(
        "path: {} fits of {} from lambda={:.6e} to {:.6e}, support sizes {:?}, unconverged {}",
        fits.len(),
        a.data.penalty,
        grid[0],
        grid[grid.len() - 1],
        sizes,
        unconverged
    );
    emit(a.common.out.as_deref(), &json(&fits)?, &summary)?;
    if a.solver.strict && unconverged > 0 {
        return Err(Failure::NotConverged(format!("{unconverged} path fits did not converge")));
    }
    Ok(())
}

#[derive(Serialize)]
struct Truth {
    p: usize,
    beta: Vec<f64>,
    support: SupportSet,
    seed: u64,
}

fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let dist = a.design.distribution();
    let noise = NoiseSpec { kind: a.noise.into(), ke: a.ke };
    noise.validate()?;
    let mut rng = from_seed(a.common.seed);
    let x = dist.sample(a.n, a.p, &mut rng)?;
    let (beta, support) = hiersel::bench::truth::draw_truth(a.p, a.s_main, a.s_int, a.magnitude, &mut rng)?;
    let z = expand_design(&x, Expansion::raw())?;
    let signal = z.values() * nalgebra::DVector::from_column_slice(&beta);
    let eps = noise.sample(a.n, &mut rng);
    let y: Vec<f64> = signal.iter().zip(&eps).map(|(s, e)| s + e).collect();
    let mut body = Vec::new();
    write_dataset(&mut body, &x, Some(("y", &y)))?;
    if let Some(t) = &a.truth {
        write_json(t, &Truth { p: a.p, beta, support: support.clone(), seed: a.common.seed })?;
    }
    let summary = format!(
        "simulate: n={} p={} s={} (main {}, pairs {}) noise psi2={}",
        a.n,
        a.p,
        support.len(),
        support.main().len(),
        support.pairs().len(),
        a.ke
    );
    emit(a.common.out.as_deref(), &body, &summary)
}

fn rate_bench(a: RateBenchArgs) -> Result<(), Failure> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(r) = a.replications {
        cfg.replications = r;
    }
    let report = hiersel::bench::rate_experiment(&cfg)?;
    let mut body = Vec::new();
    report.write_csv(&mut body)?;
    if let Some(path) = &a.summary {
        #[derive(Serialize)]
        struct Summary<'a> {
            config: &'a ExperimentConfig,
            penalties: &'a [hiersel::bench::rate::PenaltySummary],
            cells: &'a [hiersel::bench::rate::CellSummary],
            skipped: &'a [hiersel::bench::rate::Cell],
            note: &'a str,
        }
        write_json(
            path,
            &Summary {
                config: &cfg,
                penalties: &report.summary,
                cells: &report.cells,
                skipped: &report.skipped,
                note: &report.note,
            },
        )?;
    }
    let parts: Vec<String> = report
        .summary
        .iter()
        .map(|s| match &s.fit {
            Some(f) => format!(
                "{} slope={:.3}±{:.3} r2={:.3} pe<=3l1 {}/{}",
                s.penalty, f.slope, f.slope_se, f.r_squared, s.pe_within_three_l1, s.replications
            ),
            None => format!("{} slope=n/a", s.penalty),
        })
        .collect();
    let unconverged: usize = report.summary.iter().map(|s| s.nonconverged).sum();
    let summary = format!(
        "rate-bench: {} rows, {} cells skipped, unconverged {}; {}",
        report.rows.len(),
        report.skipped.len(),
        unconverged,
        parts.join("; ")
    );
    emit(a.out.as_deref(), &body, &summary)?;
    if a.strict && unconverged > 0 {
        return Err(Failure::NotConverged(format!("{unconverged} fits did not converge")));
    }
    Ok(())
}

fn re_check(a: ReCheckArgs) -> Result<(), Failure> {
    #[derive(Serialize)]
    struct Trial {
        trial: usize,
        seed: u64,
        m_hat: f64,
        /// 1-based columns.
        support: Vec<usize>,
        samples: usize,
    }
    #[derive(Serialize)]
    struct SampleSize {
        m1: f64,
        eps: f64,
        constants: SampleSizeConstants,
        n_sufficient: f64,
    }
    #[derive(Serialize)]
    struct Report {
        n: usize,
        p: usize,
        s: usize,
        k0: f64,
        method: ReMethod,
        margin: f64,
        /// Trials with `m_hat > margin`.
        above_margin: usize,
        trials: Vec<Trial>,
        sample_size: SampleSize,
        note: &'static str,
    }
    if a.trials == 0 {
        return Err(Failure::Usage("trials must be positive".into()));
    }
    let dist = a.design.distribution();
    let method = match a.method {
        ReMethodArg::Random => ReMethod::RandomConeDescent,
        ReMethodArg::Exhaustive => ReMethod::ExhaustiveSupports,
    };
    let p1 = InteractionIndex::new(a.p)?.p1();
    let mut trials = Vec::with_capacity(a.trials);
    for t in 0..a.trials {
        let seed = derived_seed(a.common.seed, 0, t as u64);
        let x = dist.sample(a.n, a.p, &mut from_seed(seed))?;
        let z = expand_design(&x, Expansion::centered())?.into_values();
        let e: ReEstimate = re_constant(&z, a.s, a.k0, method, a.budget, seed)?;
        trials.push(Trial {
            trial: t,
            seed,
            m_hat: e.m_hat,
            support: e.support.iter().map(|c| c + 1).collect(),
            samples: e.samples,
        });
    }
    let constants = SampleSizeConstants { c1: a.c1, big_c1: a.big_c1, ck_tilde: a.ck_tilde };
    let sample_size = SampleSize {
        m1: hiersel::bench::sample_size::m1(a.s, a.k0),
        eps: a.eps,
        constants,
        n_sufficient: re_sample_size(a.s, a.k0, p1, a.eps, &constants)?,
    };
    let above = trials.iter().filter(|t| t.m_hat > a.margin).count();
    let report = Report {
        n: a.n,
        p: a.p,
        s: a.s,
        k0: a.k0,
        method,
        margin: a.margin,
        above_margin: above,
        trials,
        sample_size,
        note: "m_hat is the smallest ratio found, an upper bound on M(k0, s); the sample size holds up to absolute constants",
    };
    let summary = format!(
        "re-check: n={} p={} s={} k0={}: m_hat > {} in {}/{} designs; sufficient n (up to constants) {:.3e}",
        a.n, a.p, a.s, a.k0, a.margin, above, a.trials, report.sample_size.n_sufficient
    );
    emit(a.common.out.as_deref(), &json(&report)?, &summary)
}

fn a0_check(a: A0CheckArgs) -> Result<(), Failure> {
    let dist = a.design.distribution();
    let noise = NoiseSpec { kind: a.noise.into(), ke: a.ke_noise };
    let tc = TheoryConstants {
        ke: a.ke.unwrap_or(a.ke_noise),
        kx: 1.0,
        h0: match a.h0 {
            Some(h) => h,
            None => dist.h0(a.p)?,
        },
        delta: a.delta,
        eta0: a.eta0,
        c: a.c,
    };
    let r = a0_event_rate(a.n, a.p, &dist, &noise, &tc, a.multiplier, a.trials, a.common.seed)?;
    #[derive(Serialize)]
    struct Report<'a> {
        #[serde(flatten)]
        report: &'a hiersel::bench::a0::A0Report,
        constants: TheoryConstants,
        note: &'static str,
    }
    let summary = format!(
        "a0-check: n={} p={} frequency={:.4} over {} trials (threshold {:.4e}, lower bound {:.4} up to constants)",
        r.n, r.p, r.frequency, r.trials, r.threshold, r.lower_bound
    );
    let body =
        json(&Report { report: &r, constants: tc, note: "threshold and lower bound hold up to absolute constants" })?;
    emit(a.common.out.as_deref(), &body, &summary)
}

fn eigs_check(a: EigsCheckArgs) -> Result<(), Failure> {
    let r = sigma_z_eigs(&a.design.distribution(), a.p, a.n_mc, a.common.seed)?;
    let summary = format!(
        "eigs-check: p={} n_mc={} eigenvalues in [{:.4}, {:.4}]{}",
        a.p,
        a.n_mc,
        r.min,
        r.max,
        r.warning.as_deref().map(|w| format!(" WARNING: {w}")).unwrap_or_default()
    );
    emit(a.common.out.as_deref(), &json(&r)?, &summary)
}

fn psi_check(a: PsiCheckArgs) -> Result<(), Failure> {
    #[derive(Serialize)]
    struct Report {
        samples: usize,
        qmax: u32,
        psi2_factor: f64,
        psi1_product: f64,
        /// `psi1_product / psi2_factor^2`; the bound is 2.
        ratio: f64,
    }
    let mut rng = stream(a.common.seed, 0, 0);
    let mut first = Vec::with_capacity(a.samples);
    let mut product = Vec::with_capacity(a.samples);
    for _ in 0..a.samples {
        let u: f64 = rng.sample(StandardNormal);
        let v: f64 = rng.sample(StandardNormal);
        first.push(u);
        product.push(u * v);
    }
    let psi2 = psi_norm_estimate(&first, PsiKind::Psi2, a.qmax)?;
    let psi1 = psi_norm_estimate(&product, PsiKind::Psi1, a.qmax)?;
    let r =
        Report { samples: a.samples, qmax: a.qmax, psi2_factor: psi2, psi1_product: psi1, ratio: psi1 / (psi2 * psi2) };
    let summary = format!(
        "psi-check: psi2(X)={:.4} psi1(XY)={:.4} ratio={:.4} (bound 2)",
        r.psi2_factor, r.psi1_product, r.ratio
    );
    emit(a.common.out.as_deref(), &json(&r)?, &summary)
}

fn conc_check(a: ConcCheckArgs) -> Result<(), Failure> {
    let r = concentration_squares_check(a.dist.into(), &a.n, a.delta, a.trials, a.common.seed)?;
    let freqs: Vec<String> = r.rows.iter().map(|row| format!("n={}:{:.4}", row.n, row.frequency)).collect();
    let slope = r.fit.map_or("n/a".to_string(), |f| format!("{:.4}", f.slope));
    let summary = format!(
        "conc-check: delta={} {} slope={} nonincreasing={}",
        a.delta,
        freqs.join(" "),
        slope,
        r.nonincreasing(2.0)
    );
    emit(a.common.out.as_deref(), &json(&r)?, &summary)
}

fn penalty_check(a: PenaltyCheckArgs) -> Result<(), Failure> {
    let mut params = Vec::new();
    if let Some(q) = &a.q {
        params.push(format!("q={q}"));
    }
    if let Some(d0) = a.d0 {
        params.push(format!("d0={d0}"));
    }
    let text = if params.is_empty() { a.family.clone() } else { format!("{}:{}", a.family, params.join(",")) };
    let spec: PenaltySpec = text.parse()?;
    let r = a3_trials(&spec, a.p, a.trials, a.common.seed)?;
    let summary = format!(
        "penalty-check: {} p={} (L1, L2)=({}, {}): pass rate {}/{} (zero {}, subadditive {}, lower {}, upper {})",
        r.penalty, r.p, r.constants.l1, r.constants.l2, r.passed, r.trials, r.zero, r.subadditive, r.lower, r.upper
    );
    emit(a.common.out.as_deref(), &json(&r)?, &summary)
}

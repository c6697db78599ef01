//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p mberjidf-cli --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mberjidf::complexity::{
    complexity_count, ComplexityParams, LABEL_FULL_LMS, LABEL_MBER_JIDF, LABEL_MBER_MWF,
};
use mberjidf::gradcheck::{run_gradcheck, GradCheckConfig};
use mberjidf::harness::{run_experiment, BerCurve, ExperimentConfig, Sweep};
use mberjidf::jidf::{
    enumerate_patterns, exhaustive_decimation_oracle, g_value, hankel_from_received,
    mean_error_prob, toeplitz_interp_matrix, BranchState, DecimationPattern, Interpolator,
};
use mberjidf::mber::JidfReceiver;
use mberjidf::receiver::{ReceiverRegistry, FULL_LMS, FULL_MBER, JIDF_MBER};
use mberjidf::signal::{awgn, generate_symbols, received_vector, FadingState};
use mberjidf::C64;
use mberjidf_cli::export::{run_and_export, MANIFEST_FILE};

const DESK_TRIALS: usize = 500;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n)
        .map(|_| {
            C64::new(
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 2.0 - 1.0,
            )
        })
        .collect()
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let cfg = GradCheckConfig {
        instances: 100,
        receive_antennas: 8,
        rank: 3,
        taps: 2,
        branches: 2,
        ..GradCheckConfig::default()
    };
    let rep = run_gradcheck(&cfg).expect("gradcheck runs");
    let elapsed = start.elapsed();
    verdict(
        rep.max_rel_error_w < 1e-5
            && rep.max_rel_error_p < 1e-5
            && elapsed < Duration::from_secs(10),
        format!(
            "gradient oracle: max rel err w {:.2e}, p {:.2e} (< 1e-5), {:.2} s (< 10 s)",
            rep.max_rel_error_w,
            rep.max_rel_error_p,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut proj_err, mut g_err) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let m = rng.random_range(4..=16);
        let d = rng.random_range(1..=m / 2);
        let i = rng.random_range(1..m);
        let l = rng.random_range(0..m / d);
        let pattern = DecimationPattern::deterministic(l, m, d).expect("valid pattern");
        let p = Interpolator::new(random_vec(&mut rng, i)).unwrap();
        let r = random_vec(&mut rng, m);
        let w = random_vec(&mut rng, d);

        // T P^H r from dense matrices
        let big_p = toeplitz_interp_matrix(&p, m).unwrap();
        let interp: Vec<C64> = (0..m)
            .map(|c| (0..m).map(|row| big_p[row][c].conj() * r[row]).sum())
            .collect();
        let t = pattern.to_dense();
        let dense: Vec<C64> = t
            .iter()
            .map(|row| row.iter().zip(&interp).map(|(&s, v)| *v * s as f64).sum())
            .collect();

        // T R' conj(p)
        let conj_p: Vec<C64> = p.taps().iter().map(|t| t.conj()).collect();
        let hankel = hankel_from_received(&r, i).unwrap().mul_vec(&conj_p);
        let structured: Vec<C64> = pattern.offsets().iter().map(|&q| hankel[q]).collect();
        for (a, b) in dense.iter().zip(&structured) {
            proj_err = proj_err.max((a - b).norm());
        }

        // g = || P T^T w ||^2, dense
        let tw: Vec<C64> = (0..m)
            .map(|c| t.iter().zip(&w).map(|(row, wd)| *wd * row[c] as f64).sum())
            .collect();
        let g_dense: f64 = (0..m)
            .map(|row| {
                (0..m)
                    .map(|c| big_p[row][c] * tw[c])
                    .sum::<C64>()
                    .norm_sqr()
            })
            .sum();
        let branch = BranchState::new(l, p, pattern).unwrap();
        let g = g_value(&branch, &w);
        g_err = g_err.max((g - g_dense).abs());
    }
    verdict(
        proj_err <= 1e-12 && g_err <= 1e-12,
        format!("structure oracle: projection max diff {proj_err:.2e}, g max diff {g_err:.2e} (<= 1e-12, 1000 instances)"),
    )
}

fn criterion_3() -> Verdict {
    let jidf = complexity_count(
        LABEL_MBER_JIDF,
        &ComplexityParams {
            psi_sum: 256,
            ..ComplexityParams::bounded(40, 8, 8, 4)
        },
    )
    .unwrap();
    let lms = complexity_count(LABEL_FULL_LMS, &ComplexityParams::bounded(40, 8, 8, 4)).unwrap();
    let mwf = complexity_count(LABEL_MBER_MWF, &ComplexityParams::bounded(40, 8, 8, 4)).unwrap();
    let got = (
        jidf.mults, jidf.adds, lms.mults, lms.adds, mwf.mults, mwf.adds,
    );
    verdict(
        got == (1825, 1595, 81, 80, 15474, 11857),
        format!(
            "complexity: JIDF ({}, {}), LMS ({}, {}), MWF ({}, {}); expected (1825, 1595), (81, 80), (15474, 11857)",
            got.0, got.1, got.2, got.3, got.4, got.5
        ),
    )
}

fn criterion_4() -> Verdict {
    let q1 = DecimationPattern::deterministic(0, 40, 8).unwrap();
    let q2 = DecimationPattern::deterministic(1, 40, 8).unwrap();
    let formula = q1.offsets() == [0, 5, 10, 15, 20, 25, 30, 35]
        && q2.offsets() == [1, 6, 11, 16, 21, 26, 31, 36];

    let (m, d) = (6, 2);
    let all = enumerate_patterns(m, d);
    let deterministic: Vec<DecimationPattern> = (0..m / d)
        .map(|l| DecimationPattern::deterministic(l, m, d).unwrap())
        .collect();
    let members = deterministic
        .iter()
        .all(|p| all.iter().any(|q| q == p.offsets()));

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut dominated = true;
    for _ in 0..20 {
        let ensemble: Vec<(Vec<C64>, f64)> = (0..16)
            .map(|_| {
                (
                    random_vec(&mut rng, m),
                    if rng.random::<bool>() { 1.0 } else { -1.0 },
                )
            })
            .collect();
        let p = Interpolator::new(random_vec(&mut rng, 2)).unwrap();
        let w = random_vec(&mut rng, d);
        let oracle = exhaustive_decimation_oracle(&ensemble, &p, &w, m, d, 1.0).unwrap();
        let best_det = deterministic
            .iter()
            .map(|pat| {
                let b = BranchState::new(0, p.clone(), pat.clone()).unwrap();
                mean_error_prob(&b, &ensemble, &w, 1.0).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        dominated &= oracle.mean_error_prob <= best_det;
    }
    verdict(
        formula && members && dominated,
        format!(
            "pattern formula: q(l=1) = {:?}, q(l=2) = {:?}; members of full set: {members}; oracle <= deterministic on 20 ensembles: {dominated}",
            q1.offsets(),
            q2.offsets()
        ),
    )
}

fn criterion_5() -> Verdict {
    let cfg = ExperimentConfig::desk();
    let point = cfg.base_point();
    let system = cfg.system(&point);
    let mut rx =
        JidfReceiver::new(cfg.receive_antennas, &cfg.receiver_params(&system).jidf()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut fading = FadingState::new(
        &mut rng,
        system.users,
        system.receive_antennas,
        system.antennas_per_user,
        system.doppler,
    );
    let (mut worst_g, mut mu_lo, mut mu_hi) = (0.0f64, f64::INFINITY, 0.0f64);
    for i in 0..cfg.total_symbols() {
        let frame = generate_symbols(&mut rng, system.users, system.antennas_per_user);
        let noise = awgn(&mut rng, system.sigma, system.receive_antennas);
        let r = received_vector(&frame, fading.channels(), &system, &noise).unwrap();
        let b = frame.get(0, 0);
        rx.process(&r, (i < cfg.training).then_some(b)).unwrap();
        worst_g = worst_g.max(rx.constraint_residual());
        for mu in std::iter::once(rx.mu_w()).chain(rx.mu_p()) {
            mu_lo = mu_lo.min(mu);
            mu_hi = mu_hi.max(mu);
        }
        fading.advance();
    }
    verdict(
        worst_g <= 1e-10 && mu_lo >= 1e-5 && mu_hi <= 1e-2,
        format!(
            "constraint maintenance: max |g - 1| {worst_g:.2e} (<= 1e-10), step sizes in [{mu_lo:.2e}, {mu_hi:.2e}] (within [1e-5, 1e-2]) over 1200 symbols"
        ),
    )
}

fn curve<'a>(curves: &'a [BerCurve], name: &str) -> &'a BerCurve {
    curves
        .iter()
        .find(|c| c.receiver == name)
        .expect("receiver present")
}

fn criterion_6() -> Verdict {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        trials: DESK_TRIALS,
        sweep: Sweep::Users(vec![ExperimentConfig::desk().users]),
        ..ExperimentConfig::desk()
    };
    let res = run_experiment(&cfg, &ReceiverRegistry::builtin(), 0).unwrap();
    let elapsed = start.elapsed();
    let idx = |name: &str| cfg.receivers.iter().position(|r| r == name).unwrap();
    let early = |name: &str| res.base_tallies[idx(name)].window_ber(99..200);
    let steady = |name: &str| {
        let p = &curve(&res.sweep, name).points[0];
        (p.ber, p.ci_halfwidth)
    };
    let (j_early, l_early) = (early(JIDF_MBER), early(FULL_LMS));
    let (j, l, f) = (steady(JIDF_MBER), steady(FULL_LMS), steady(FULL_MBER));
    let separated = |a: (f64, f64), b: (f64, f64)| a.0 <= b.0 && a.0 + a.1 < b.0 - b.1;
    let pass = j_early.0 < l_early.0
        && separated(j, l)
        && separated(j, f)
        && elapsed < Duration::from_secs(300);
    verdict(
        pass,
        format!(
            "convergence ordering: symbols 100-200 JIDF {:.4} vs LMS {:.4}; steady JIDF {:.4}±{:.4}, LMS {:.4}±{:.4}, full MBER {:.4}±{:.4}; {:.1} s (< 300 s)",
            j_early.0, l_early.0, j.0, j.1, l.0, l.1, f.0, f.1,
            elapsed.as_secs_f64()
        ),
    )
}

/// Load at which a piecewise-linear BER-versus-K curve first exceeds `tau`,
/// if it starts at or below `tau` and later rises above it.
fn crossing(curve: &BerCurve, tau: f64) -> Option<f64> {
    let pts = &curve.points;
    if pts.first()?.ber > tau {
        return None;
    }
    pts.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        (a.ber <= tau && b.ber > tau).then(|| a.x + (tau - a.ber) / (b.ber - a.ber) * (b.x - a.x))
    })
}

fn nondecreasing(curve: &BerCurve) -> bool {
    curve
        .points
        .windows(2)
        .all(|w| w[1].ber + w[1].ci_halfwidth >= w[0].ber - w[0].ci_halfwidth)
}

fn criterion_7() -> Verdict {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        trials: DESK_TRIALS,
        sweep: Sweep::Users(vec![1, 2, 3, 4]),
        ..ExperimentConfig::desk()
    };
    let res = run_experiment(&cfg, &ReceiverRegistry::builtin(), 0).unwrap();
    let elapsed = start.elapsed();
    let monotone: Vec<(String, bool)> = res
        .sweep
        .iter()
        .map(|c| (c.receiver.clone(), nondecreasing(c)))
        .collect();

    let (jidf, lms) = (curve(&res.sweep, JIDF_MBER), curve(&res.sweep, FULL_LMS));
    let thresholds: Vec<f64> = (1..1000).map(|k| k as f64 * 5e-4).collect();
    let mut common = 0;
    let mut higher = true;
    for &tau in &thresholds {
        if let (Some(kj), Some(kl)) = (crossing(jidf, tau), crossing(lms, tau)) {
            common += 1;
            higher &= kj > kl;
        }
    }
    let load_ok = common > 0 && higher;
    let fmt = |c: &BerCurve| {
        c.points
            .iter()
            .map(|p| format!("{:.4}", p.ber))
            .collect::<Vec<_>>()
            .join("/")
    };
    verdict(
        monotone.iter().all(|(_, m)| *m) && load_ok && elapsed < Duration::from_secs(900),
        format!(
            "load trend: nondecreasing {:?}; BER K=1..4 JIDF {}, LMS {}, full MBER {}; thresholds crossed by both: {common}, JIDF higher at all: {}; {:.1} s (< 900 s)",
            monotone,
            fmt(jidf),
            fmt(lms),
            fmt(curve(&res.sweep, FULL_MBER)),
            common > 0 && higher,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_8() -> Verdict {
    let quiet = ExperimentConfig {
        users: 1,
        sigma: Some(0.0),
        doppler: 0.0,
        trials: 20,
        sweep: Sweep::Users(vec![1]),
        ..ExperimentConfig::desk()
    };
    let res = run_experiment(&quiet, &ReceiverRegistry::builtin(), 0).unwrap();
    let quiet_bers: Vec<(String, f64)> = res
        .sweep
        .iter()
        .map(|c| (c.receiver.clone(), c.points[0].ber))
        .collect();
    let zero = quiet_bers.iter().all(|(_, b)| *b == 0.0);

    let loud = ExperimentConfig {
        sigma: Some(1e4),
        trials: 100,
        ..ExperimentConfig::desk()
    };
    let res = run_experiment(&loud, &ReceiverRegistry::builtin(), 0).unwrap();
    let coin = res
        .sweep
        .iter()
        .flat_map(|c| c.points.iter())
        .all(|p| (p.ber - 0.5).abs() <= p.ci_halfwidth);
    let loud_bers: Vec<String> = res
        .sweep
        .iter()
        .map(|c| format!("{}", c.points[1].ber))
        .collect();
    verdict(
        zero && coin,
        format!("degenerate limits: sigma = 0 steady BER {quiet_bers:?}; sigma = 1e4 BER at K=2 {loud_bers:?} (0.5 within CI at every point: {coin})"),
    )
}

fn criterion_9() -> Verdict {
    let cfg = ExperimentConfig {
        trials: 24,
        ..ExperimentConfig::desk()
    };
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let runs: Vec<_> = [(0, 1), (1, 1), (2, 4)]
        .iter()
        .map(|&(d, threads)| run_and_export(&cfg, dirs[d].path(), threads).unwrap())
        .collect();
    let mut identical = true;
    let mut compared = 0;
    for f in &runs[0].files {
        let name = f.file_name().unwrap();
        if name == MANIFEST_FILE {
            continue;
        }
        let a = std::fs::read(f).unwrap();
        for d in &dirs[1..] {
            identical &= a == std::fs::read(d.path().join(name)).unwrap();
        }
        compared += 1;
    }
    verdict(
        identical && compared > 0,
        format!("reproducibility: {compared} CSVs byte-identical across two 1-thread runs and a 4-thread run: {identical}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, fn() -> Verdict); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let mut failed = 0;
    for (n, run) in criteria {
        let v = run();
        println!(
            "criterion {n}: {} {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += !v.pass as u32;
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

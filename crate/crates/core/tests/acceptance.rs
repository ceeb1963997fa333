//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion with its runtime, and exits nonzero if any failed.
//!
//! `cargo test -p bitpact --test acceptance`

use std::panic;
use std::process::ExitCode;
use std::time::Instant;

use bitpact::analysis::{
    expected_drift_exact, hitting_time_bound, hypergeom_flip_prob, integrate_ode, lower_bound_p, ode_hitting_time,
    p_of_x, signed_flip_identity,
};
use bitpact::bitstring::make_pair_with_agreement;
use bitpact::circuit::{bits_to_usize, build_count_circuit, build_threshold_circuit, evaluate_plain};
use bitpact::mpc::evaluate_with_dealer;
use bitpact::protocol::{run_session, run_trials};
use bitpact::randomness::random_bits;
use bitpact::{Circuit, DriftModel, LocalRng, Mode, ProtocolParams, Rational};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn to_f64(v: &Rational) -> f64 {
    v.numer().to_string().parse::<f64>().unwrap() / v.denom().to_string().parse::<f64>().unwrap()
}

fn model(k: usize, l: usize) -> DriftModel {
    DriftModel::new(k, l).unwrap()
}

/// Flip-set probabilities against exhaustive enumeration of all flip sets.
fn flip_probability_enumeration() -> Outcome {
    let mut cases = 0;
    for k in 0..=8usize {
        for j in 0..=k {
            // positions 0..j are the disagreements
            let differ = (1u32 << j) - 1;
            for l in 0..=k {
                let mut hits = vec![0i64; l + 1];
                let mut total = 0i64;
                for set in 0u32..1 << k {
                    if set.count_ones() as usize == l {
                        hits[(set & differ).count_ones() as usize] += 1;
                        total += 1;
                    }
                }
                for (s, &h) in hits.iter().enumerate() {
                    let got = hypergeom_flip_prob::<Rational>(k, j, l, s).map_err(|e| e.to_string())?;
                    ensure(got == q(h, total), || format!("k={k} j={j} l={l} s={s}: {got} vs {h}/{total}"))?;
                    cases += 1;
                }
            }
        }
    }
    Ok(format!("{cases} cases exact"))
}

/// `sum_s (2s - l) P = (2j/k - 1) l`.
fn signed_flip_identity_check() -> Outcome {
    let mut worst = 0.0f64;
    for k in 1..=10usize {
        for j in 0..=k {
            for l in 0..=k {
                let lhs: f64 = (0..=l)
                    .map(|s| (2.0 * s as f64 - l as f64) * hypergeom_flip_prob::<f64>(k, j, l, s).unwrap())
                    .sum();
                let rhs = (2.0 * j as f64 / k as f64 - 1.0) * l as f64;
                let lib = signed_flip_identity::<f64>(k, j, l).map_err(|e| e.to_string())?;
                worst = worst.max((lhs - rhs).abs()).max((lib - rhs).abs());
            }
        }
    }
    ensure(worst <= 1e-12, || format!("max error {worst:e}"))?;
    Ok(format!("max error {worst:.1e}"))
}

/// Exact drift against one-step Monte Carlo, and the hand case.
fn drift_check() -> Outcome {
    let hand = expected_drift_exact::<Rational>(10, 5, 2, 1).map_err(|e| e.to_string())?;
    ensure(hand == q(2, 9), || format!("drift(10,5,2,1) = {hand}"))?;
    let (n, x, k, l) = (100, 30, 5, 2);
    let exact = to_f64(&expected_drift_exact::<Rational>(n, x, k, l).map_err(|e| e.to_string())?);
    let trials = 100_000;
    let runs = run_trials(&ProtocolParams::new(n, k, l, 1, 0), x, trials, 0xACCE).map_err(|e| e.to_string())?;
    let deltas: Vec<f64> = runs.iter().map(|t| t[1] as f64 - t[0] as f64).collect();
    let mean = deltas.iter().sum::<f64>() / trials as f64;
    let var = deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    let se = (var / trials as f64).sqrt();
    ensure((mean - exact).abs() <= 3.0 * se, || format!("MC {mean} vs exact {exact}, se {se}"))?;
    Ok(format!("exact {exact:.6}, MC {mean:.6} (se {se:.1e}), hand case 2/9"))
}

/// RK4 against `1 - (1-x0)/(1 + (1-x0) t)` on [0, 10].
fn ode_closed_form() -> Outcome {
    let x0: f64 = 0.3;
    let sol = integrate_ode(&model(2, 1), x0, 10.0, 1e-3).map_err(|e| e.to_string())?;
    let worst = sol
        .samples
        .iter()
        .map(|&(t, x)| (x - (1.0 - (1.0 - x0) / (1.0 + (1.0 - x0) * t))).abs())
        .fold(0.0, f64::max);
    ensure(sol.last().0 == 10.0, || "horizon not reached".into())?;
    ensure(worst < 1e-6, || format!("max error {worst:e}"))?;
    Ok(format!("max error {worst:.1e} over {} samples", sol.samples.len()))
}

/// Median-over-runs density trajectory for `i <= 5n`.
fn median_density(n: usize, runs: usize, seed: u64) -> Result<Vec<f64>, String> {
    let p = ProtocolParams::new(n, 5, 2, 5 * n as u64, seed);
    let trajectories = run_trials(&p, 3 * n / 10, runs, seed).map_err(|e| e.to_string())?;
    Ok((0..=5 * n)
        .map(|i| {
            let mut v: Vec<usize> = trajectories.iter().map(|t| t[i]).collect();
            v.sort_unstable();
            v[runs / 2] as f64 / n as f64
        })
        .collect())
}

/// Deviation of the median trajectory from the ODE, integrated with
/// `dt = 1/n` so that samples align with steps.
fn deviations(n: usize) -> Result<Vec<f64>, String> {
    let median = median_density(n, 11, 0x5EED_0000 + n as u64)?;
    let sol = integrate_ode(&model(5, 2), 0.3, 5.0, 1.0 / n as f64).map_err(|e| e.to_string())?;
    ensure(sol.samples.len() == median.len(), || "grid mismatch".into())?;
    Ok(median.iter().zip(&sol.samples).map(|(m, s)| (m - s.1).abs()).collect())
}

fn concentration() -> Outcome {
    let large = deviations(10_000)?;
    let small = deviations(1_000)?;
    let max_large = large.iter().copied().fold(0.0, f64::max);
    ensure(max_large < 0.02, || format!("n=10^4 max deviation {max_large}"))?;
    // common grid t = m/1000
    let on_grid = |d: &[f64], n: usize| (0..=5000).map(|m| d[m * n / 1000]).fold(0.0, f64::max);
    let (g_large, g_small) = (on_grid(&large, 10_000), on_grid(&small, 1_000));
    ensure(g_small > g_large, || format!("n=10^3 {g_small} not above n=10^4 {g_large}"))?;
    Ok(format!("max deviation n=10^4 {max_large:.4}; on common grid n=10^3 {g_small:.4} > n=10^4 {g_large:.4}"))
}

fn bounds() -> Outcome {
    for k in 1..=10 {
        for l in 1..=k {
            for i in 1..=99 {
                let x = i as f64 / 100.0;
                let lb = lower_bound_p(&model(k, l), x).map_err(|e| e.to_string())?;
                let p = p_of_x(&model(k, l), x).map_err(|e| e.to_string())?;
                // one rounding unit of slack where the two coincide (k = 2)
                ensure(lb <= p + 1e-12, || format!("k={k} l={l} x={x}: {lb} > {p}"))?;
            }
        }
    }
    let mut rows = 0;
    for k in [2, 3, 5] {
        for l in [1, 2] {
            for x0 in [0.05, 0.1, 0.2] {
                for target in [0.2, 0.4, 0.6] {
                    let h = target / x0;
                    let b = hitting_time_bound(&model(k, l), x0, h).map_err(|e| e.to_string())?;
                    let t = ode_hitting_time(&model(k, l), x0, target, 1e-3, b.closed_form + 1.0)
                        .map_err(|e| e.to_string())?
                        .ok_or_else(|| format!("k={k} l={l} x0={x0} h={h}: ODE never reached the target"))?;
                    ensure(t <= b.generic + 1e-9 && b.generic <= b.closed_form + 1e-9, || {
                        format!("k={k} l={l} x0={x0} h={h}: {t} / {} / {}", b.generic, b.closed_form)
                    })?;
                    rows += 1;
                }
            }
        }
    }
    Ok(format!("lower bound on 5445 grid points, ordering on {rows} rows"))
}

fn monotonicity() -> Outcome {
    let trials = 100;
    let window = 10;
    let mut worst_z = f64::INFINITY;
    for (n, k, l, x0) in [(1000usize, 5usize, 2usize, 0.3), (500, 2, 1, 0.1), (800, 3, 3, 0.5)] {
        let p = ProtocolParams::new(n, k, l, 5 * n as u64, 0x3070 + n as u64);
        let runs = run_trials(&p, (x0 * n as f64) as usize, trials, 0x3070 + k as u64).map_err(|e| e.to_string())?;
        // per-trial averages over consecutive blocks of `window` steps
        let blocks = (5 * n + 1) / window;
        let block_means: Vec<Vec<f64>> = runs
            .iter()
            .map(|t| {
                (0..blocks)
                    .map(|b| t[b * window..(b + 1) * window].iter().sum::<usize>() as f64 / window as f64)
                    .collect()
            })
            .collect();
        for b in 1..blocks {
            let d: Vec<f64> = block_means.iter().map(|m| m[b] - m[b - 1]).collect();
            let mean = d.iter().sum::<f64>() / trials as f64;
            let sd = (d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64).sqrt();
            let se = sd / (trials as f64).sqrt();
            if se > 0.0 {
                worst_z = worst_z.min(mean / se);
            }
            ensure(mean >= -4.0 * se, || format!("n={n} k={k} l={l}: block {b} mean drops by {mean} (se {se})"))?;
        }
    }
    for k in 1..=8 {
        for l in 1..=k {
            for x0 in [0.05, 0.3, 0.7] {
                let sol = integrate_ode(&model(k, l), x0, 10.0, 1e-3).map_err(|e| e.to_string())?;
                for w in sol.samples.windows(2) {
                    ensure(w[0].1 >= 1.0 || w[1].1 > w[0].1, || {
                        format!("ODE k={k} l={l} x0={x0} stalls at t={} x={}", w[0].0, w[0].1)
                    })?;
                }
            }
        }
    }
    Ok(format!("smoothed means nondecreasing within 4 SE (worst z {worst_z:.2}); ODE strictly increasing"))
}

fn count_agreements(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x == y).count()
}

fn secure_matches(c: &Circuit, a: &[bool], b: &[bool], rng: &mut LocalRng) -> Result<(), String> {
    let plain = evaluate_plain(c, a, b).map_err(|e| e.to_string())?;
    let (ra, rb) = evaluate_with_dealer(c, a, b, &mut rng.fork(), &mut rng.fork(), &mut rng.fork())
        .map_err(|e| e.to_string())?;
    ensure(ra.output == plain && rb.output == plain, || format!("secure output differs on {a:?} / {b:?}"))
}

fn bits_of(v: usize, k: usize) -> Vec<bool> {
    (0..k).map(|i| (v >> i) & 1 == 1).collect()
}

fn mpc_correctness() -> Outcome {
    let mut rng = LocalRng::seeded(0x3C);
    let mut evaluations = 0;
    for k in 1..=6usize {
        let fx = build_count_circuit(k).map_err(|e| e.to_string())?;
        let fr: Vec<Circuit> = (0..=k).map(|r| build_threshold_circuit(k, r).unwrap()).collect();
        for va in 0..1usize << k {
            for vb in 0..1usize << k {
                let (a, b) = (bits_of(va, k), bits_of(vb, k));
                let x = count_agreements(&a, &b);
                ensure(bits_to_usize(&evaluate_plain(&fx, &a, &b).unwrap()) == x, || "count oracle".into())?;
                secure_matches(&fx, &a, &b, &mut rng)?;
                for (r, c) in fr.iter().enumerate() {
                    ensure(evaluate_plain(c, &a, &b).unwrap() == vec![x >= r], || "threshold oracle".into())?;
                    secure_matches(c, &a, &b, &mut rng)?;
                }
                evaluations += 1 + fr.len();
            }
        }
    }
    let k = 16;
    let fx = build_count_circuit(k).map_err(|e| e.to_string())?;
    let fr = build_threshold_circuit(k, 8).map_err(|e| e.to_string())?;
    for _ in 0..1000 {
        let a = random_bits(&mut rng, k);
        let b = random_bits(&mut rng, k);
        secure_matches(&fx, &a, &b, &mut rng)?;
        secure_matches(&fr, &a, &b, &mut rng)?;
        evaluations += 2;
    }
    Ok(format!("{evaluations} secure evaluations agree"))
}

fn mpc_leakage() -> Outcome {
    let c = build_threshold_circuit(16, 8).map_err(|e| e.to_string())?;
    let mut rng = LocalRng::seeded(0x1EA4);
    let mut reference = None;
    for i in 0..1000 {
        let a = random_bits(&mut rng, 16);
        let b = random_bits(&mut rng, 16);
        let (ra, rb) = evaluate_with_dealer(&c, &a, &b, &mut rng.fork(), &mut rng.fork(), &mut rng.fork())
            .map_err(|e| e.to_string())?;
        ensure(ra.triples_consumed == c.and_count() && rb.triples_consumed == c.and_count(), || {
            format!("pair {i}: consumed {} / {} of {} triples", ra.triples_consumed, rb.triples_consumed, c.and_count())
        })?;
        let shape = (ra.transcript, rb.transcript);
        match &reference {
            None => reference = Some(shape),
            Some(r) => ensure(*r == shape, || format!("pair {i}: transcript shape differs"))?,
        }
    }
    let (t, _) = reference.expect("at least one pair");
    Ok(format!(
        "{} messages, {} bytes, {} rounds, {} triples on every pair",
        t.message_count(),
        t.total_bytes(),
        t.rounds,
        c.and_count()
    ))
}

fn mode_equivalence() -> Outcome {
    for seed in [1u64, 2, 3] {
        let oracle = ProtocolParams::new(200, 5, 2, 500, seed);
        let secure = oracle.clone().with_mode(Mode::Secure);
        let mut pair_rng = LocalRng::seeded(seed + 100);
        let (a, b) = make_pair_with_agreement(200, 60, &mut pair_rng).map_err(|e| e.to_string())?;
        let ra = LocalRng::seeded(seed + 200);
        let rb = LocalRng::seeded(seed + 300);
        let o = run_session(&oracle, a.clone(), b.clone(), &mut ra.clone(), &mut rb.clone()).map_err(|e| e.to_string())?;
        let s = run_session(&secure, a, b, &mut ra.clone(), &mut rb.clone()).map_err(|e| e.to_string())?;
        let view = |t: &[bitpact::TraceRecord]| t.iter().map(|r| r.public_view()).collect::<Vec<_>>();
        ensure(view(&o.trace) == view(&s.trace), || format!("seed {seed}: traces differ"))?;
        ensure(o.a == s.a && o.b == s.b, || format!("seed {seed}: final strings differ"))?;
    }
    Ok("identical traces and final strings for 3 seeds".into())
}

type Criterion = (&'static str, fn() -> Outcome);

const CRITERIA: &[Criterion] = &[
    ("flip-set probability vs enumeration (k <= 8)", flip_probability_enumeration),
    ("signed flip identity (k <= 10)", signed_flip_identity_check),
    ("exact drift vs Monte Carlo", drift_check),
    ("RK4 vs closed-form trajectory", ode_closed_form),
    ("concentration around the ODE", concentration),
    ("drift lower bound and hitting-time ordering", bounds),
    ("monotone mean and ODE trajectories", monotonicity),
    ("secure evaluation correctness", mpc_correctness),
    ("transcript shape and triple use", mpc_leakage),
    ("oracle and secure modes agree", mode_equivalence),
];

fn main() -> ExitCode {
    // answer test discovery without running anything
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    panic::set_hook(Box::new(|_| {}));
    let results: Vec<(Outcome, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = CRITERIA
            .iter()
            .map(|&(_, f)| {
                s.spawn(move || {
                    let start = Instant::now();
                    let out = panic::catch_unwind(f).unwrap_or_else(|e| {
                        let msg = e
                            .downcast_ref::<String>()
                            .cloned()
                            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                            .unwrap_or_else(|| "panic".into());
                        Err(format!("panicked: {msg}"))
                    });
                    (out, start.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("criterion thread")).collect()
    });
    let mut failures = 0;
    for (i, ((name, _), (out, secs))) in CRITERIA.iter().zip(results).enumerate() {
        match out {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", CRITERIA.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! Subcommand implementations.

use std::fs::File;
use std::io::{self, Write};

use bitpact::analysis::{
    expected_drift_exact, hitting_time_bound, hypergeom_flip_prob, integrate_ode, ode_hitting_time,
    signed_flip_identity, write_ode_csv,
};
use bitpact::bitstring::make_pair_with_agreement;
use bitpact::circuit::{
    bits_to_usize, build_count_circuit_with, build_threshold_circuit_with, evaluate_plain, Basis, Circuit,
};
use bitpact::mpc::evaluate_with_dealer;
use bitpact::protocol::{run_monte_carlo, run_session, write_trace_csv};
use bitpact::randomness::{derive_seed, joint_rand};
use bitpact::{BitString, DriftModel, LocalRng, Mode, ProtocolParams, Rational, SharedSeed};

use crate::config::{
    check_density, resolve_session, string_pair, Resolver, Start, DEFAULT_DT, DEFAULT_K, DEFAULT_L, DEFAULT_TRIALS,
    DEFAULT_T_END,
};
use crate::opts::{
    BoundsOpts, Command, CompareOpts, DemoBasis, DemoFunction, DemoOpts, OdeOpts, SelfcheckOpts, SimulateOpts,
};
use crate::report::{write_bounds_csv, write_compare_csv, BoundsRow, CompareRow, CompareTable};
use crate::{usage, CliError};

/// Labels for seeds derived from `--seed`.
const LABEL_PAIR: u64 = 1;
const LABEL_PARTY_A: u64 = 2;
const LABEL_PARTY_B: u64 = 3;
const LABEL_DEALER: u64 = 4;

/// Largest input width `mpc-demo` accepts.
pub const MAX_DEMO_K: usize = 64;
/// Slack allowed in the bound-ordering check.
pub const ORDER_SLACK: f64 = 1e-9;

pub const DEFAULT_KS: [usize; 3] = [2, 3, 5];
pub const DEFAULT_LS: [usize; 2] = [1, 2];
pub const DEFAULT_X0S: [f64; 3] = [0.05, 0.1, 0.2];
pub const DEFAULT_TARGETS: [f64; 3] = [0.2, 0.4, 0.6];

pub fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Simulate(o) => simulate(&o),
        Command::Compare(o) => compare(&o),
        Command::Ode(o) => ode(&o),
        Command::Bounds(o) => bounds(&o),
        Command::MpcDemo(o) => mpc_demo(&o),
        Command::Selfcheck(o) => selfcheck(&o),
    }
}

fn emit(r: &Resolver, bytes: &[u8]) -> Result<(), CliError> {
    match r.output()? {
        Some(path) => File::create(&path)
            .and_then(|mut f| f.write_all(bytes))
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => match io::stdout().lock().write_all(bytes) {
            // a reader such as `head` closing early is not an error
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
            other => other.map_err(|e| usage(format!("cannot write stdout: {e}"))),
        },
    }
}

fn party_rngs(seed: u64) -> (LocalRng, LocalRng) {
    (
        LocalRng::seeded(derive_seed(seed, LABEL_PARTY_A)),
        LocalRng::seeded(derive_seed(seed, LABEL_PARTY_B)),
    )
}

fn model(k: usize, l: usize) -> Result<DriftModel, CliError> {
    DriftModel::new(k, l).map_err(|e| usage(e.to_string()))
}

fn positive_step(dt: f64) -> Result<f64, CliError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(usage(format!("--dt must be positive, got {dt}")));
    }
    Ok(dt)
}

fn simulate(o: &SimulateOpts) -> Result<(), CliError> {
    let r = Resolver::new(&o.common)?;
    let cfg = resolve_session(&o.session, &r)?;
    let p = &cfg.params;
    let seed = p.seed.value;
    let (a, b) = match cfg.start {
        Start::Agreements(x) => make_pair_with_agreement(p.n, x, &mut LocalRng::seeded(derive_seed(seed, LABEL_PAIR)))
            .map_err(|e| usage(e.to_string()))?,
        Start::Strings(a, b) => (a, b),
    };
    let (mut ra, mut rb) = party_rngs(seed);
    let out = run_session(p, a, b, &mut ra, &mut rb)?;
    let mut buf = Vec::new();
    write_trace_csv(&out.trace, p.n, &mut buf)?;
    emit(&r, &buf)
}

fn compare(o: &CompareOpts) -> Result<(), CliError> {
    let r = Resolver::new(&o.common)?;
    let cfg = resolve_session(&o.session, &r)?;
    let p = &cfg.params;
    let trials = r.pick(o.trials, "trials")?.unwrap_or(DEFAULT_TRIALS);
    if trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let dt = positive_step(r.pick(o.dt, "dt")?.unwrap_or(DEFAULT_DT))?;
    if p.threshold != p.k.div_ceil(2) {
        return Err(usage("compare needs the default threshold ceil(k/2); the ODE assumes it"));
    }
    if p.t_max == 0 {
        return Err(usage("--steps must be at least 1"));
    }
    let m = model(p.k, p.l)?;
    let x_count = cfg.start.agreement_count();
    let n = p.n as f64;
    let stats = run_monte_carlo(p, x_count, trials, p.seed.value)?;
    let t_end = p.t_max as f64 / n;
    let sol = integrate_ode(&m, x_count as f64 / n, t_end, dt.min(t_end)).map_err(|e| usage(e.to_string()))?;
    let rows = (0..=p.t_max as usize)
        .map(|i| {
            let t = i as f64 / n;
            let x_ode = sol.value_at(t);
            let x_emp = stats.mean[i] / n;
            CompareRow {
                t,
                x_ode,
                x_empirical_mean: x_emp,
                abs_dev: (x_ode - x_emp).abs(),
            }
        })
        .collect();
    let mut buf = Vec::new();
    write_compare_csv(&CompareTable::from_rows(rows), &mut buf)?;
    emit(&r, &buf)
}

fn ode(o: &OdeOpts) -> Result<(), CliError> {
    let r = Resolver::new(&o.common)?;
    let k = r.pick(o.k, "k")?.unwrap_or(DEFAULT_K);
    let l = r.pick(o.l, "l")?.unwrap_or(DEFAULT_L);
    let x0 = r.pick(o.x0, "x0")?.ok_or_else(|| usage("--x0 is required"))?;
    check_density("--x0", x0)?;
    let dt = positive_step(r.pick(o.dt, "dt")?.unwrap_or(DEFAULT_DT))?;
    let t_end = r.pick(o.t_end, "t-end")?.unwrap_or(DEFAULT_T_END);
    let sol = integrate_ode(&model(k, l)?, x0, t_end, dt).map_err(|e| usage(e.to_string()))?;
    let mut buf = Vec::new();
    write_ode_csv(&sol, &mut buf).map_err(|e| usage(e.to_string()))?;
    emit(&r, &buf)
}

/// One row of the bounds table.
pub fn bounds_row(k: usize, l: usize, x0: f64, h: f64, dt: f64) -> Result<BoundsRow, CliError> {
    let m = model(k, l)?;
    let b = hitting_time_bound(&m, x0, h).map_err(|e| usage(e.to_string()))?;
    let target = (h * x0).min(1.0);
    let horizon = b.closed_form.min(1e4) + 1.0;
    let ode_time = ode_hitting_time(&m, x0, target, dt, horizon).map_err(|e| usage(e.to_string()))?;
    Ok(BoundsRow {
        k,
        l,
        x0,
        h,
        bound_closed_form: b.closed_form,
        bound_generic: b.generic,
        ode_time,
    })
}

fn bounds(o: &BoundsOpts) -> Result<(), CliError> {
    let r = Resolver::new(&o.common)?;
    let ks = r.pick_list(o.ks.clone(), "ks")?.unwrap_or(DEFAULT_KS.to_vec());
    let ls = r.pick_list(o.ls.clone(), "ls")?.unwrap_or(DEFAULT_LS.to_vec());
    let x0s = r.pick_list(o.x0s.clone(), "x0s")?.unwrap_or(DEFAULT_X0S.to_vec());
    let hs = r.pick_list(o.hs.clone(), "hs")?;
    let targets = if hs.is_some() {
        None
    } else {
        Some(r.pick_list(o.targets.clone(), "targets")?.unwrap_or(DEFAULT_TARGETS.to_vec()))
    };
    let dt = positive_step(r.pick(o.dt, "dt")?.unwrap_or(DEFAULT_DT))?;
    for &x0 in &x0s {
        if !(x0 > 0.0 && x0 <= 1.0) {
            return Err(usage(format!("x0 must lie in (0, 1], got {x0}")));
        }
    }
    if let Some(ts) = &targets {
        for &t in ts {
            check_density("target", t)?;
        }
    }
    let mut rows = Vec::new();
    for &k in &ks {
        for &l in &ls {
            if l == 0 || l > k {
                continue;
            }
            for &x0 in &x0s {
                let factors: Vec<f64> = match (&hs, &targets) {
                    (Some(hs), _) => hs.clone(),
                    (None, Some(ts)) => ts.iter().filter(|&&t| t >= x0).map(|&t| t / x0).collect(),
                    (None, None) => unreachable!("one of hs or targets is set"),
                };
                for h in factors {
                    rows.push(bounds_row(k, l, x0, h, dt)?);
                }
            }
        }
    }
    let mut buf = Vec::new();
    write_bounds_csv(&rows, &mut buf)?;
    emit(&r, &buf)?;
    let bad: Vec<String> = rows
        .iter()
        .filter(|row| !row.is_ordered(ORDER_SLACK))
        .map(|row| format!("k={} l={} x0={} h={}", row.k, row.l, row.x0, row.h))
        .collect();
    if !bad.is_empty() {
        return Err(CliError::Check(format!(
            "ode_time <= bound_generic <= bound_closed_form violated for {}",
            bad.join("; ")
        )));
    }
    Ok(())
}

fn bits_text(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn mpc_demo(o: &DemoOpts) -> Result<(), CliError> {
    let r = Resolver::new(&o.common)?;
    let seed = r.seed()?;
    let strings = string_pair(&r, o.init_a.clone(), o.init_b.clone())?;
    let k_flag = r.pick(o.k, "k")?;
    let k = match (&strings, k_flag) {
        (Some((a, _)), Some(k)) if a.len() != k => {
            return Err(usage(format!("--k {k} does not match inputs of length {}", a.len())))
        }
        (Some((a, _)), _) => a.len(),
        (None, k) => k.unwrap_or(DEFAULT_K),
    };
    if k == 0 || k > MAX_DEMO_K {
        return Err(usage(format!("k must lie in 1..={MAX_DEMO_K}, got {k}")));
    }
    let threshold = r.pick(o.threshold, "threshold")?.unwrap_or(k.div_ceil(2));
    let function = r.pick_enum(o.function, "function")?.unwrap_or(DemoFunction::Threshold);
    let basis = match r.pick_enum(o.basis, "basis")?.unwrap_or(DemoBasis::Agreement) {
        DemoBasis::Agreement => Basis::Agreement,
        DemoBasis::Disagreement => Basis::Disagreement,
    };
    let circuit = match function {
        DemoFunction::Threshold => build_threshold_circuit_with(k, threshold, basis),
        DemoFunction::Count => build_count_circuit_with(k, basis),
    }
    .map_err(|e| usage(e.to_string()))?;
    let (a, b) = match strings {
        Some(pair) => pair,
        None => {
            let mut rng = LocalRng::seeded(derive_seed(seed, LABEL_PAIR));
            let a = BitString::random(k, &mut rng).map_err(|e| usage(e.to_string()))?;
            let b = BitString::random(k, &mut rng).map_err(|e| usage(e.to_string()))?;
            (a, b)
        }
    };
    let report = demo_report(&circuit, &a, &b, seed, function, threshold, basis)?;
    emit(&r, report.text.as_bytes())?;
    if !report.consistent {
        return Err(CliError::Check("secure outputs disagree with the plaintext oracle".into()));
    }
    Ok(())
}

struct DemoReport {
    text: String,
    consistent: bool,
}

fn demo_report(
    c: &Circuit,
    a: &BitString,
    b: &BitString,
    seed: u64,
    function: DemoFunction,
    threshold: usize,
    basis: Basis,
) -> Result<DemoReport, CliError> {
    let (a_bits, b_bits) = (a.to_bits(), b.to_bits());
    let oracle = evaluate_plain(c, &a_bits, &b_bits).map_err(|e| usage(e.to_string()))?;
    let (mut ra, mut rb) = party_rngs(seed);
    let mut dealer = LocalRng::seeded(derive_seed(seed, LABEL_DEALER));
    let (pa, pb) = evaluate_with_dealer(c, &a_bits, &b_bits, &mut dealer, &mut ra, &mut rb)
        .map_err(|e| CliError::Check(format!("secure evaluation failed: {e}")))?;
    let relation = match basis {
        Basis::Agreement => "agreements",
        Basis::Disagreement => "disagreements",
    };
    let what = match function {
        DemoFunction::Threshold => format!("{relation} >= {threshold}"),
        DemoFunction::Count => format!("count of {relation}"),
    };
    let show = |bits: &[bool]| match function {
        DemoFunction::Threshold => bits_text(bits),
        DemoFunction::Count => format!("{} ({})", bits_text(bits), bits_to_usize(bits)),
    };
    let t = &pa.transcript;
    let consistent = pa.output == oracle
        && pb.output == oracle
        && pa.triples_consumed == c.and_count()
        && pb.triples_consumed == c.and_count();
    let text = format!(
        "function: {what}\n\
         k: {k}\n\
         input A: {a}\n\
         input B: {b}\n\
         output A: {oa}\n\
         output B: {ob}\n\
         oracle: {or}\n\
         gates: {gates}\n\
         and gates: {ands}\n\
         and depth: {depth}\n\
         triples consumed: {ta} (A), {tb} (B)\n\
         messages: {msgs}\n\
         bytes: {bytes}\n\
         rounds: {rounds}\n\
         status: {status}\n",
        k = a.len(),
        oa = show(&pa.output),
        ob = show(&pb.output),
        or = show(&oracle),
        gates = c.gate_count(),
        ands = c.and_count(),
        depth = c.and_depth(),
        ta = pa.triples_consumed,
        tb = pb.triples_consumed,
        msgs = t.message_count(),
        bytes = t.total_bytes(),
        rounds = t.rounds,
        status = if consistent { "ok" } else { "MISMATCH" },
    );
    Ok(DemoReport { text, consistent })
}

type Check = (&'static str, fn(u64) -> Result<(), String>);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn check_flip_probability(_: u64) -> Result<(), String> {
    let got = hypergeom_flip_prob::<Rational>(4, 2, 2, 1).map_err(|e| e.to_string())?;
    ensure(got == Rational::new(2.into(), 3.into()), || format!("P(4,2,2,1) = {got}, expected 2/3"))
}

fn check_identity(_: u64) -> Result<(), String> {
    for k in 1..=10usize {
        for j in 0..=k {
            for l in 0..=k {
                let lhs = (0..=l)
                    .map(|s| {
                        let p = hypergeom_flip_prob::<Rational>(k, j, l, s).expect("indices in range");
                        p * Rational::from_integer((2 * s as i64 - l as i64).into())
                    })
                    .fold(Rational::from_integer(0.into()), |acc, v| acc + v);
                let rhs = signed_flip_identity::<Rational>(k, j, l).map_err(|e| e.to_string())?;
                ensure(lhs == rhs, || format!("identity fails at k={k} j={j} l={l}"))?;
            }
        }
    }
    Ok(())
}

fn check_drift(_: u64) -> Result<(), String> {
    let got = expected_drift_exact::<Rational>(10, 5, 2, 1).map_err(|e| e.to_string())?;
    ensure(got == Rational::new(2.into(), 9.into()), || format!("drift(10,5,2,1) = {got}, expected 2/9"))
}

fn check_ode(_: u64) -> Result<(), String> {
    let m = DriftModel::new(2, 1).map_err(|e| e.to_string())?;
    let sol = integrate_ode(&m, 0.3f64, 10.0, 1e-3).map_err(|e| e.to_string())?;
    for &(t, x) in &sol.samples {
        let exact = 1.0 - 0.7 / (1.0 + 0.7 * t);
        ensure((x - exact).abs() < 1e-6, || format!("x({t}) = {x}, closed form {exact}"))?;
    }
    Ok(())
}

fn check_bounds(_: u64) -> Result<(), String> {
    let row = bounds_row(2, 1, 0.1, 2.0, DEFAULT_DT).map_err(|e| e.to_string())?;
    ensure((row.bound_closed_form - 0.15625).abs() < 1e-12, || {
        format!("bound for k=2 l=1 x0=0.1 h=2 is {}", row.bound_closed_form)
    })?;
    for k in DEFAULT_KS {
        for l in DEFAULT_LS {
            for x0 in DEFAULT_X0S {
                for t in DEFAULT_TARGETS.into_iter().filter(|&t| t >= x0) {
                    let row = bounds_row(k, l, x0, t / x0, DEFAULT_DT).map_err(|e| e.to_string())?;
                    ensure(row.is_ordered(ORDER_SLACK), || format!("ordering fails: {row:?}"))?;
                }
            }
        }
    }
    Ok(())
}

fn check_joint_rand(seed: u64) -> Result<(), String> {
    let s = SharedSeed::new(seed);
    for step in 1..=50 {
        let x = joint_rand(&s, step, 7, 100).map_err(|e| e.to_string())?;
        let y = joint_rand(&s.clone(), step, 7, 100).map_err(|e| e.to_string())?;
        ensure(x == y && x.len() == 7, || format!("shared sample differs at step {step}"))?;
    }
    Ok(())
}

fn check_mpc(seed: u64) -> Result<(), String> {
    let mut rng = LocalRng::seeded(derive_seed(seed, 0x5E1F));
    for k in [1usize, 3, 8, 16] {
        for (function, c) in [
            (DemoFunction::Threshold, build_threshold_circuit_with(k, k.div_ceil(2), Basis::Agreement)),
            (DemoFunction::Count, build_count_circuit_with(k, Basis::Agreement)),
        ] {
            let c = c.map_err(|e| e.to_string())?;
            for trial in 0..25 {
                let a = BitString::random(k, &mut rng).map_err(|e| e.to_string())?;
                let b = BitString::random(k, &mut rng).map_err(|e| e.to_string())?;
                let report = demo_report(
                    &c,
                    &a,
                    &b,
                    derive_seed(seed, trial),
                    function,
                    k.div_ceil(2),
                    Basis::Agreement,
                )
                .map_err(|e| e.to_string())?;
                ensure(report.consistent, || format!("k={k} inputs {a} / {b}"))?;
            }
        }
    }
    Ok(())
}

fn check_modes(seed: u64) -> Result<(), String> {
    let base = ProtocolParams::new(120, 5, 2, 150, seed);
    let run = |mode: Mode| -> Result<Vec<_>, String> {
        let p = base.clone().with_mode(mode);
        let (a, b) = make_pair_with_agreement(120, 36, &mut LocalRng::seeded(derive_seed(seed, LABEL_PAIR)))
            .map_err(|e| e.to_string())?;
        let (mut ra, mut rb) = party_rngs(seed);
        let out = run_session(&p, a, b, &mut ra, &mut rb).map_err(|e| e.to_string())?;
        Ok(out.trace.iter().map(|t| t.public_view()).collect())
    };
    ensure(run(Mode::Oracle)? == run(Mode::Secure)?, || "oracle and secure traces differ".into())
}

const CHECKS: &[Check] = &[
    ("flip probability", check_flip_probability),
    ("signed flip identity", check_identity),
    ("exact drift", check_drift),
    ("ode closed form", check_ode),
    ("hitting-time bounds", check_bounds),
    ("shared sampling", check_joint_rand),
    ("secure evaluation", check_mpc),
    ("mode equivalence", check_modes),
];

fn selfcheck(o: &SelfcheckOpts) -> Result<(), CliError> {
    let r = Resolver::new(&o.common)?;
    let seed = r.seed()?;
    let mut text = String::new();
    let mut failed = Vec::new();
    for (name, check) in CHECKS {
        match check(seed) {
            Ok(()) => text.push_str(&format!("PASS {name}\n")),
            Err(e) => {
                text.push_str(&format!("FAIL {name}: {e}\n"));
                failed.push(*name);
            }
        }
    }
    emit(&r, text.as_bytes())?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(failed.join(", ")))
    }
}

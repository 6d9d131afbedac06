//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::Rng;

use common::*;
use spikebench::bench::{run_cell, run_experiment, CellSpec, ExperimentConfig, Grid};
use spikebench::complexity::{lz76_complexity, normalized_lzc_bits, LzcCalibration};
use spikebench::learning::*;
use spikebench::network::WIDTH_GRID;
use spikebench::neuron::{decode, encode, LifParams};
use spikebench::pipeline::{evaluate, predict_dataset, train, EvalReport, TrainConfig};
use spikebench::rng::derive_seed;
use spikebench::sources::{make_dataset, SourceFamily, SourceSpec};
use spikebench::BinarySequence;

// Criterion 1
const C1_MAX_LEN: usize = 14;
const C1_BUDGET: Duration = Duration::from_secs(60);
// Criterion 2
const C2_SEQUENCES: u64 = 100;
const C2_LEN: usize = 1024;
const C2_MEAN_RANGE: (f64, f64) = (0.8, 1.2);
const C2_CONSTANT: f64 = 0.019_531_25;
const C2_BUDGET: Duration = Duration::from_secs(5);
// Criterion 3
const C3_TOL: f64 = 1e-12;
const C3_REPORTED_R2: f64 = 0.5998;
const C3_REPORTED_R2_TOL: f64 = 0.001;
const C3_BUDGET: Duration = Duration::from_secs(1);
// Criterion 4
const C4_INSTANCES: u64 = 20;
const C4_N: usize = 4;
const C4_MAX_STEPS: usize = 6;
const C4_FD_STEP: f64 = 1e-5;
const C4_REL_TOL: f64 = 1e-4;
const C4_BUDGET: Duration = Duration::from_secs(30);
// Criterion 5
const C5_PAIRS: usize = 1000;
const C5_BUDGET: Duration = Duration::from_secs(5);
// Criterion 6
const C6_CASES: u64 = 100;
const C6_BUDGET: Duration = Duration::from_secs(10);
// Criterion 7
const C7_SEED: u64 = 1;
const C7_N: usize = 32;
const C7_EPOCHS: usize = 10;
const C7_PER_CLASS: usize = 100;
const C7_STDP_MIN: f64 = 95.0;
const C7_BP_MIN: f64 = 95.0;
const C7_SDSP_MIN: f64 = 85.0;
const C7_BUDGET: Duration = Duration::from_secs(600);
// Criterion 8
const C8_N: usize = 128;
const C8_REPEAT: usize = 3;
const C8_SEED: u64 = 1;
const C8_BUDGET: Duration = Duration::from_secs(1800);
// Criterion 9
const C9_SEQUENCES: usize = 1000;
const C9_MAX_LEN: usize = 2048;
const C9_BUDGET: Duration = Duration::from_secs(120);
// Criterion 10
const C10_BAND: (f64, f64) = (41.0, 59.0);
const C10_N: usize = 32;
const C10_SEED: u64 = 0;
const C10_BUDGET: Duration = Duration::from_secs(900);

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lzc_oracle_equivalence() -> Check {
    let mut checked = 0u64;
    for len in 1..=C1_MAX_LEN {
        for x in 0..(1u64 << len) {
            let b = bits_of(x, len);
            let seq = BinarySequence::new(b.clone()).map_err(|e| e.to_string())?;
            let (fast, slow) = (lz76_complexity(&seq).map_err(|e| e.to_string())?, brute_lz76(&b));
            ensure(fast == slow, || format!("{b:?}: parser {fast}, oracle {slow}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} sequences agree"))
}

fn lzc_asymptotics() -> Check {
    let mut sum = 0.0;
    for seed in 0..C2_SEQUENCES {
        let mut r = rng(derive_seed(seed, 0xC2, 0));
        sum += normalized_lzc_bits(&random_bits(&mut r, C2_LEN, 0.5)).map_err(|e| e.to_string())?;
    }
    let mean = sum / C2_SEQUENCES as f64;
    ensure(mean >= C2_MEAN_RANGE.0 && mean <= C2_MEAN_RANGE.1, || format!("mean {mean}"))?;
    for bit in [0u8, 1] {
        let c = normalized_lzc_bits(&vec![bit; C2_LEN]).map_err(|e| e.to_string())?;
        ensure(c == C2_CONSTANT, || format!("constant {bit}s gave {c}"))?;
    }
    Ok(format!("fair-coin mean {mean:.4}; constant {C2_CONSTANT}"))
}

fn balanced_labels(n: usize) -> Vec<u8> {
    (0..n).map(|i| (i % 2) as u8).collect()
}

fn with_errors(labels: &[u8], errors: usize) -> Vec<u8> {
    labels.iter().enumerate().map(|(i, &y)| if i < errors { 1 - y } else { y }).collect()
}

fn metric_identities() -> Check {
    let mut reports = Vec::new();
    let labels = balanced_labels(200);
    let mut r = rng(3);
    for _ in 0..200 {
        let errors = r.random_range(0..=200);
        let mut preds = with_errors(&labels, 0);
        for _ in 0..errors {
            let k = r.random_range(0..200);
            preds[k] = 1 - labels[k];
        }
        let m = evaluate(&preds, &labels).map_err(|e| e.to_string())?;
        reports.push(EvalReport::new("synthetic", "synthetic", 16, 1, 0.0, &m));
    }
    let cfg = ExperimentConfig {
        epochs: 1,
        seeds: vec![5],
        train_per_class: 4,
        test_per_class: 4,
        sequence_length: 128,
        grid: Grid {
            rules: RuleKind::ALL.to_vec(),
            sources: vec![SourceFamily::Bernoulli],
            n: vec![16],
            thresholds: vec![],
            decays: vec![],
            learning_rates: vec![],
        },
        ..Default::default()
    };
    let bench = run_experiment(&cfg).map_err(|e| e.to_string())?;
    ensure(bench.failures.is_empty(), || format!("bench failures {:?}", bench.failures))?;
    reports.extend(bench.rows.iter().map(|row| row.report.clone()));
    for rep in &reports {
        rep.check_identities(true, C3_TOL).map_err(|e| format!("{}: {e}", rep.rule_name))?;
    }

    let m = evaluate(&with_errors(&labels, 2), &labels).map_err(|e| e.to_string())?;
    ensure(
        format!("{:.2} {:.4} {:.4} {:.4}", m.accuracy, m.mse, m.mae, m.r2) == "99.00 0.0100 0.0100 0.9600",
        || format!("2 errors: {m:?}"),
    )?;
    let m = evaluate(&with_errors(&labels, 20), &labels).map_err(|e| e.to_string())?;
    ensure(
        format!("{:.2} {:.4} {:.4}", m.accuracy, m.mse, m.r2) == "90.00 0.1000 0.6000",
        || format!("20 errors: {m:?}"),
    )?;
    ensure((m.r2 - C3_REPORTED_R2).abs() <= C3_REPORTED_R2_TOL, || format!("r2 {} vs reported {C3_REPORTED_R2}", m.r2))?;
    Ok(format!("{} reports satisfy the identities; table arithmetic reproduced", reports.len()))
}

fn gradient_fidelity() -> Check {
    let cfg = SurrogateConfig::default();
    let mut worst: f64 = 0.0;
    for seed in 0..C4_INSTANCES {
        let mut r = rng(derive_seed(seed, 0xC4, 0));
        let params = LifParams::from_decay(r.random_range(0.2..0.9), r.random_range(0.1..0.5))
            .map_err(|e| e.to_string())?;
        let net = random_network(&mut r, C4_N, -0.8, 1.2, params);
        let steps = 2 + (seed as usize % (C4_MAX_STEPS - 1));
        let trace = simulated_trace(&mut r, &net, steps, 0.5);
        for (name, update, loss) in [
            (
                "bp",
                bp_update as fn(&_, u8, &_, &_) -> spikebench::Result<WeightDelta>,
                bp_surrogate_loss as fn(&_, &_, u8, &_) -> spikebench::Result<f64>,
            ),
            ("stbp", stbp_update, stbp_surrogate_loss),
        ] {
            // The label farther from the readout always has positive loss.
            let label = if loss(&net, &trace, 1, &cfg).map_err(|e| e.to_string())? > 0.0 { 1 } else { 0 };
            let l0 = loss(&net, &trace, label, &cfg).map_err(|e| e.to_string())?;
            ensure(l0 > 0.0, || format!("{name} seed {seed}: zero loss for both labels"))?;
            let d = update(&trace, label, &net, &cfg).map_err(|e| e.to_string())?;
            let analytic: Vec<f64> = d.d_ih.iter().chain(d.d_ho.iter()).map(|v| -v / cfg.eta).collect();
            let numeric = fd_gradient(&net, C4_FD_STEP, |n| loss(n, &trace, label, &cfg).unwrap());
            let err = relative_error(&analytic, &numeric, 1e-12);
            worst = worst.max(err);
            ensure(err <= C4_REL_TOL, || format!("{name} seed {seed} T={steps}: relative error {err:e}"))?;
        }
    }
    Ok(format!("worst relative error {worst:.2e} over {C4_INSTANCES} instances x 2 rules"))
}

fn plasticity_sign_laws() -> Check {
    let mut r = rng(0xC5);
    let p = LifParams::from_decay(0.5, 1.0).map_err(|e| e.to_string())?;
    for k in 0..C5_PAIRS {
        let cfg = StdpConfig {
            a_plus: r.random_range(1e-6..1.0),
            a_minus: r.random_range(1e-6..1.0),
            tau_plus: r.random_range(1.0..30.0),
            tau_minus: r.random_range(1.0..30.0),
        };
        // Pairs lie inside the pairing cutoff of the rule.
        let reach = (5.0 * cfg.tau_plus.max(cfg.tau_minus)).floor() as usize;
        let lag = r.random_range(1..=reach);
        let steps = reach + 2;
        let (t_pre, t_post) = if r.random_bool(0.5) {
            let t = r.random_range(0..steps - lag);
            (t, t + lag)
        } else {
            let t = r.random_range(0..steps - lag);
            (t + lag, t)
        };
        let mut x = Array2::zeros((1, steps));
        let mut h = Array2::zeros((1, steps));
        x[[0, t_pre]] = 1;
        h[[0, t_post]] = 1;
        let tr = trace_from_spikes(x, h, Array2::zeros((1, steps)), p);
        let dw = stdp_update(&tr, &cfg).d_ih[[0, 0]];
        let pair = stdp_pair(t_post as f64 - t_pre as f64, &cfg);
        let ok = if t_post > t_pre { dw > 0.0 && pair > 0.0 } else { dw < 0.0 && pair < 0.0 };
        ensure(ok, || format!("pair {k}: t_pre {t_pre}, t_post {t_post}, dw {dw}"))?;
    }
    for _ in 0..100 {
        let (n, steps) = (6, 25);
        let tr = trace_from_spikes(
            random_raster(&mut r, n, steps, 0.3),
            random_raster(&mut r, n, steps, 0.3),
            random_raster(&mut r, n, steps, 0.3),
            p,
        );
        let sdsp_cfg = SdspConfig { a: r.random_range(1e-4..1.0) };
        let heb_cfg = HebbianConfig { eta: r.random_range(1e-4..1.0) };
        let sdsp = sdsp_update(&tr, &sdsp_cfg);
        let heb = hebbian_update(&tr, &heb_cfg);
        let count = |m: &Array2<u8>, i: usize| m.row(i).iter().map(|&s| s as i64).sum::<i64>();
        for i in 0..n {
            for j in 0..n {
                let want = sdsp_cfg.a * (count(&tr.input.spikes, j) - count(&tr.hidden.spikes, i)) as f64;
                ensure(sdsp.d_ih[[i, j]] == want, || format!("sdsp ({i},{j}) {} != {want}", sdsp.d_ih[[i, j]]))?;
                let coincide = (0..steps)
                    .filter(|&t| tr.output.spikes[[i, t]] == 1 && tr.hidden.spikes[[j, t]] == 1)
                    .count();
                let want = heb_cfg.eta * coincide as f64;
                ensure(heb.d_ho[[i, j]] == want, || format!("hebbian ({i},{j}) {} != {want}", heb.d_ho[[i, j]]))?;
            }
        }
    }
    Ok(format!("{C5_PAIRS} STDP pairs signed correctly; SDSP and Hebbian exact"))
}

/// Network whose soft readout saturates toward `label`.
fn saturated_network(r: &mut rand_chacha::ChaCha8Rng, label: u8, params: LifParams) -> spikebench::network::Network {
    if label == 1 {
        random_network(r, 16, 1.0, 2.0, params)
    } else {
        random_network(r, 16, -2.0, -1.0, params)
    }
}

fn error_driven_zero() -> Check {
    let params = LifParams::from_decay(0.3, 0.2).map_err(|e| e.to_string())?;
    let err = |e: spikebench::Error| e.to_string();
    for case in 0..C6_CASES {
        let mut r = rng(derive_seed(case, 0xC6, 0));
        let label = (case % 2) as u8;
        let fail = |rule: &str| format!("case {case}: {rule} returned a nonzero delta");

        // Tempotron: every output fires on positives, none on negatives.
        let (n, steps) = (16, 12);
        let x = random_raster(&mut r, n, steps, 0.5);
        let h = random_raster(&mut r, n, steps, 0.5);
        let mut o = if label == 1 { random_raster(&mut r, n, steps, 0.3) } else { Array2::zeros((n, steps)) };
        if label == 1 {
            for i in 0..n {
                let t = r.random_range(0..steps);
                o[[i, t]] = 1;
            }
        }
        let tr = trace_from_spikes(x, h, o, params);
        ensure(tempotron_update(&tr, label, &TempotronConfig::default()).is_zero(), || fail("tempotron"))?;

        // Timing rules: targets equal to the actual crossing times.
        let net = random_network(&mut r, 16, -0.3, 0.8, params);
        let tr = simulated_trace(&mut r, &net, 16, 0.5);
        let matching = TeacherSignal::matching_output(&tr);
        let timing = SpikeTimingConfig::default();
        ensure(spikeprop_update(&tr, &matching, &timing).map_err(err)?.is_zero(), || fail("spikeprop"))?;
        ensure(chronotron_update(&tr, &matching, &timing).map_err(err)?.is_zero(), || fail("chronotron"))?;
        let raster_teacher = TeacherSignal::from_raster(tr.output.clone());
        ensure(
            resume_update(&tr, &raster_teacher, &ResumeConfig::default()).map_err(err)?.is_zero(),
            || fail("resume"),
        )?;

        // Reward-STDP: the current classification is correct.
        let c = normalized_lzc_bits(decode(&tr.output, tr.n() * tr.steps()).map_err(err)?.bits()).map_err(err)?;
        let cal = LzcCalibration::fixed(r.random_range(0.0..1.0));
        let truth = cal.classify(c);
        let rcfg = RewardStdpConfig::default();
        let reward = rcfg.reward_map.reward(cal.classify(c) == truth);
        ensure(reward_stdp_update(&tr, reward, &rcfg).map_err(err)?.is_zero(), || fail("reward_stdp"))?;

        // Surrogate-gradient rules: readout already within the margin.
        let net = saturated_network(&mut r, label, params);
        let tr = simulated_trace(&mut r, &net, 10, 0.9);
        let scfg = SurrogateConfig::default();
        ensure(bp_update(&tr, label, &net, &scfg).map_err(err)?.is_zero(), || fail("bp"))?;
        ensure(stbp_update(&tr, label, &net, &scfg).map_err(err)?.is_zero(), || fail("stbp"))?;
    }
    Ok(format!("{C6_CASES} cases x 7 rules gave exact zeros"))
}

fn desk_cell(rule: RuleKind, source: SourceFamily) -> CellSpec {
    let lif = LifParams::default();
    CellSpec {
        rule,
        source,
        n: C7_N,
        threshold: lif.threshold,
        decay: lif.decay,
        learning_rate: None,
    }
}

fn desk_scale_classification() -> Check {
    let cfg = ExperimentConfig {
        epochs: C7_EPOCHS,
        train_per_class: C7_PER_CLASS,
        test_per_class: C7_PER_CLASS,
        ..Default::default()
    };
    let mut parts = Vec::new();
    let mut failed = Vec::new();
    for (rule, source, min) in [
        (RuleKind::Stdp, SourceFamily::Bernoulli, C7_STDP_MIN),
        (RuleKind::Bp, SourceFamily::Bernoulli, C7_BP_MIN),
        (RuleKind::Sdsp, SourceFamily::Poisson, C7_SDSP_MIN),
    ] {
        let rec = run_cell(&cfg, &desk_cell(rule, source), C7_SEED).map_err(|e| e.to_string())?;
        parts.push(format!("{rule}/{source} {:.2}%", rec.accuracy));
        if rec.accuracy < min {
            failed.push(format!("{rule}/{source} {:.2}% < {min}%", rec.accuracy));
        }
    }
    ensure(failed.is_empty(), || failed.join("; "))?;
    Ok(parts.join(", "))
}

fn relative_cost_ordering() -> Check {
    let cfg = ExperimentConfig {
        repeat: C8_REPEAT,
        ..Default::default()
    };
    let mut times = Vec::new();
    for rule in [RuleKind::Tempotron, RuleKind::Hebbian, RuleKind::Bp] {
        let cell = CellSpec {
            n: C8_N,
            ..desk_cell(rule, SourceFamily::Bernoulli)
        };
        let rec = run_cell(&cfg, &cell, C8_SEED).map_err(|e| e.to_string())?;
        times.push((rule, rec.wall_time));
    }
    let text = times.iter().map(|(r, t)| format!("{r} {t:.2}s")).collect::<Vec<_>>().join(" < ");
    ensure(times[0].1 < times[1].1 && times[1].1 < times[2].1, || format!("order violated: {text}"))?;
    Ok(text)
}

fn round_trip_and_determinism() -> Check {
    let mut r = rng(0xC9);
    for &n in &WIDTH_GRID {
        for _ in 0..C9_SEQUENCES {
            let len = r.random_range(1..=C9_MAX_LEN);
            let p = r.random_range(0.0..=1.0);
            let seq = BinarySequence::new(random_bits(&mut r, len, p)).map_err(|e| e.to_string())?;
            let back = decode(&encode(&seq, n).map_err(|e| e.to_string())?, len).map_err(|e| e.to_string())?;
            ensure(back == seq, || format!("round trip failed at n={n}, len={len}"))?;
        }
    }
    for fam in SourceFamily::ALL {
        let (a, b) = fam.default_pair();
        let d1 = make_dataset(a, b, 50, 1024, 77).map_err(|e| e.to_string())?;
        let d2 = make_dataset(a, b, 50, 1024, 77).map_err(|e| e.to_string())?;
        ensure(d1.items == d2.items, || format!("{fam} dataset differs between runs"))?;
    }
    let (a, b) = SourceFamily::Markov.default_pair();
    let ds = make_dataset(a, b, 20, 512, 8).map_err(|e| e.to_string())?;
    for rule in RuleKind::ALL {
        let cfg = TrainConfig {
            epochs: 2,
            ..TrainConfig::new(rule.default_config(), 16, 4)
        };
        let m1 = train(&ds, &cfg).map_err(|e| e.to_string())?;
        let m2 = train(&ds, &cfg).map_err(|e| e.to_string())?;
        let same_bits = |x: &Array2<f64>, y: &Array2<f64>| x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits());
        ensure(
            same_bits(&m1.network.w_ih, &m2.network.w_ih)
                && same_bits(&m1.network.w_ho, &m2.network.w_ho)
                && m1.calibration.threshold.to_bits() == m2.calibration.threshold.to_bits()
                && m1.calibration.swapped == m2.calibration.swapped,
            || format!("{rule}: reruns differ"),
        )?;
    }
    Ok(format!(
        "{} round trips; datasets and all 12 rules bit-identical on rerun",
        C9_SEQUENCES * WIDTH_GRID.len()
    ))
}

fn degeneracy_control() -> Check {
    let spec = SourceSpec::Bernoulli { p: 0.5 };
    let train_set = make_dataset(spec, spec, 100, 1024, derive_seed(C10_SEED, 0xCA, 0)).map_err(|e| e.to_string())?;
    let test_set = make_dataset(spec, spec, 100, 1024, derive_seed(C10_SEED, 0xCA, 1)).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    let mut outside = Vec::new();
    for rule in RuleKind::ALL {
        let cfg = TrainConfig::new(rule.default_config(), C10_N, C10_SEED);
        let model = train(&train_set, &cfg).map_err(|e| format!("{rule}: {e}"))?;
        let preds = predict_dataset(&model.network, &model.calibration, &test_set).map_err(|e| e.to_string())?;
        let acc = evaluate(&preds, &test_set.labels()).map_err(|e| e.to_string())?.accuracy;
        parts.push(format!("{rule} {acc:.1}"));
        if !(C10_BAND.0..=C10_BAND.1).contains(&acc) {
            outside.push(format!("{rule} {acc:.2}%"));
        }
    }
    ensure(outside.is_empty(), || format!("outside [{}, {}]: {}", C10_BAND.0, C10_BAND.1, outside.join(", ")))?;
    Ok(parts.join(", "))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Check, Duration); 10] = [
        (1, "LZC oracle equivalence", lzc_oracle_equivalence, C1_BUDGET),
        (2, "LZC asymptotics", lzc_asymptotics, C2_BUDGET),
        (3, "metric identities", metric_identities, C3_BUDGET),
        (4, "gradient fidelity", gradient_fidelity, C4_BUDGET),
        (5, "plasticity sign laws", plasticity_sign_laws, C5_BUDGET),
        (6, "error-driven zero property", error_driven_zero, C6_BUDGET),
        (7, "desk-scale classification", desk_scale_classification, C7_BUDGET),
        (8, "relative-cost ordering", relative_cost_ordering, C8_BUDGET),
        (9, "round trip and determinism", round_trip_and_determinism, C9_BUDGET),
        (10, "degeneracy control", degeneracy_control, C10_BUDGET),
    ];
    let only: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failures = 0;
    for (id, name, check, budget) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|detail| {
            if elapsed <= budget {
                Ok(detail)
            } else {
                Err(format!("{detail}; took {:.1}s, budget {}s", elapsed.as_secs_f64(), budget.as_secs()))
            }
        });
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        if outcome.is_err() {
            failures += 1;
        }
        println!("criterion {id:>2} {tag} {name} ({:.2}s): {detail}", elapsed.as_secs_f64());
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}

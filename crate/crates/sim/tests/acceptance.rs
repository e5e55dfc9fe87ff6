//! Acceptance experiments. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.
//!
//! Run alone with `cargo test -p dkucb-sim --test acceptance`. The two
//! regret experiments dominate the runtime (several minutes on one core).

use std::f64::consts::TAU;
use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use dkucb_core::agent::{Sample, SampleKey};
use dkucb_core::baselines::{brute_force_optimum, random_association, wcs};
use dkucb_core::env::{MapGeometry, RadioSnapshot};
use dkucb_core::estimator::estimate;
use dkucb_core::geometry::Point;
use dkucb_core::harness::{run, MetricsLog, PolicyKind, RunConfig};
use dkucb_core::kernel::{build_kernel_matrix, kernel};
use dkucb_core::sync::{subspace_filter, trigger, trigger_value};
use dkucb_core::{Context, KernelParams};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 10;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

/// Bandwidths log-uniform over three decades centred on the defaults;
/// default regularizer.
fn random_params(rng: &mut ChaCha8Rng) -> KernelParams {
    let d = KernelParams::default();
    let mut spread = |v: f64| log_uniform(rng, v / 31.6, v * 31.6);
    KernelParams {
        sigma_l: spread(d.sigma_l),
        sigma_f: spread(d.sigma_f),
        sigma_n: spread(d.sigma_n),
        ..d
    }
}

fn random_context(rng: &mut ChaCha8Rng, arms: u32) -> Context {
    Context::new(
        rng.random_range(0..arms),
        rng.random_range(0.0..TAU),
        rng.random_range(0.0..600.0),
        rng.random_range(0.0..2500.0),
        rng.random_range(0..12),
    )
}

fn kernel_dense(set: &[Context], p: &KernelParams) -> DMatrix<f64> {
    let k = build_kernel_matrix(set, p);
    DMatrix::from_fn(set.len(), set.len(), |i, j| k.get(i, j))
}

fn timed(budget: Duration, start: Instant) -> (bool, String) {
    let t = start.elapsed();
    (
        t < budget,
        format!("{:.2} s of {} s", t.as_secs_f64(), budget.as_secs()),
    )
}

fn kernel_validity() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut bad = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..200 {
        let p = random_params(&mut rng);
        let n = rng.random_range(1..=30);
        let set: Vec<Context> = (0..n).map(|_| random_context(&mut rng, 3)).collect();
        let min = kernel_dense(&set, &p).symmetric_eigen().eigenvalues.min();
        worst = worst.min(min / n as f64);
        if min < -1e-8 * n as f64 {
            bad += 1;
        }
    }
    let (fast, t) = timed(Duration::from_secs(10), start);
    verdict(
        bad == 0 && fast,
        format!("{bad}/200 sets below -1e-8*n, worst min eigenvalue/n {worst:.3e}, {t}"),
    )
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-8 * b.abs().max(scale)
}

fn estimator_oracle() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut bad = 0;
    for _ in 0..100 {
        let p = random_params(&mut rng);
        let n = rng.random_range(1..=30);
        let samples: Vec<(Context, f64)> = (0..n)
            .map(|_| (random_context(&mut rng, 1), rng.random_range(0.0..2e9)))
            .collect();
        let x = random_context(&mut rng, 1);
        let got = estimate(&x, &samples, &p).expect("estimate");
        // dense LU solve of (K + λI) a = r and (K + λI) b = k
        let ctx: Vec<Context> = samples.iter().map(|s| s.0).collect();
        let mut a = kernel_dense(&ctx, &p);
        for i in 0..n {
            a[(i, i)] += p.lambda_k;
        }
        let k = DVector::from_iterator(n, ctx.iter().map(|c| kernel(&x, c, &p)));
        let r = DVector::from_iterator(n, samples.iter().map(|s| s.1));
        let lu = a.lu();
        let mu = k.dot(&lu.solve(&r).unwrap());
        let var = kernel(&x, &x, &p) - k.dot(&lu.solve(&k).unwrap());
        let sigma = (var.max(0.0) / p.lambda_k).sqrt();
        if !close(got.mu, mu, 2e9) || !close(got.sigma, sigma, (1.0 / p.lambda_k).sqrt()) {
            bad += 1;
        }
    }
    let (fast, t) = timed(Duration::from_secs(5), start);
    verdict(bad == 0 && fast, format!("{bad}/100 mismatches, {t}"))
}

fn sample_at(rng: &mut ChaCha8Rng, map: &MapGeometry, key: u32) -> (Sample, Point) {
    let bs = &map.stations[rng.random_range(0..map.stations.len())];
    let p = Point::new(rng.random_range(0.0..1000.0), rng.random_range(0.0..1000.0));
    let d = Point::new(p.x - bs.pos.x, p.y - bs.pos.y);
    let ctx = Context::new(bs.id, d.y.atan2(d.x), d.x.hypot(d.y), 0.0, 0);
    let key = SampleKey {
        vehicle: key,
        period: 0,
    };
    (
        Sample {
            key,
            ctx,
            reward: 1.0,
        },
        p,
    )
}

fn protocol_properties() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut notes = Vec::new();

    let ds = [0.0, 0.1, 1.0, 10.0, 100.0, 1e3, 1e4, f64::INFINITY];
    let (mut mono_bad, mut zero_bad, mut inf_bad) = (0, 0, 0);
    for _ in 0..200 {
        let p = random_params(&mut rng);
        let n = rng.random_range(1..=30);
        let all: Vec<Context> = (0..n).map(|_| random_context(&mut rng, 1)).collect();
        let m = rng.random_range(0..=n);
        let new = &all[n - m..];
        let lhs = trigger_value(new, &all, &p).expect("trigger value");
        let fires: Vec<bool> = ds
            .iter()
            .map(|&d| trigger(new, &all, &p, d).unwrap())
            .collect();
        if fires.windows(2).any(|w| !w[0] && w[1]) {
            mono_bad += 1;
        }
        if fires[0] != (lhs > 0.0) {
            zero_bad += 1;
        }
        if fires[ds.len() - 1] {
            inf_bad += 1;
        }
    }
    notes.push(format!(
        "monotonicity {mono_bad}/200, D=0 {zero_bad}/200, D=inf {inf_bad}/200"
    ));

    let cfg = RunConfig {
        periods: 300,
        sync: dkucb_core::sync::SyncConfig {
            threshold: f64::INFINITY,
            r_p: f64::INFINITY,
            ..RunConfig::default().sync
        },
        ..RunConfig::default()
    };
    let syncs = run(&cfg).expect("run").summary.syncs;
    notes.push(format!("D=inf,R_p=inf run syncs {syncs}"));

    let map = MapGeometry::default_grid();
    let mut filter_bad = 0;
    for pool_id in 0..1000 {
        let n = rng.random_range(0..100);
        let located: Vec<(Sample, Point)> = (0..n).map(|k| sample_at(&mut rng, &map, k)).collect();
        let pool: Vec<Sample> = located.iter().map(|s| s.0).collect();
        let (center, cp) = sample_at(&mut rng, &map, 1000 + pool_id);
        let r_p = rng.random_range(10.0..400.0);
        let got = subspace_filter(&pool, &center.ctx, r_p);
        let want: Vec<Sample> = located
            .iter()
            .filter(|(s, p)| s.ctx.arm == center.ctx.arm && p.dist(cp) < r_p)
            .map(|s| s.0)
            .collect();
        if got.len() != want.len() || got.iter().zip(&want).any(|(a, b)| a.key != b.key) {
            filter_bad += 1;
        }
    }
    notes.push(format!("subspace mismatches {filter_bad}/1000"));
    let (fast, t) = timed(Duration::from_secs(10), start);
    notes.push(t);
    let pass =
        mono_bad == 0 && zero_bad == 0 && inf_bad == 0 && syncs == 0 && filter_bad == 0 && fast;
    verdict(pass, notes.join(", "))
}

fn base(policy: PolicyKind, seed: u64) -> RunConfig {
    RunConfig {
        policy,
        seed,
        periods: 3000,
        ..RunConfig::default()
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn regret_ordering(dkucb: &[MetricsLog], dkucb_time: Duration) -> Verdict {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut pass = true;
    let mine: Vec<f64> = dkucb.iter().map(|l| l.summary.cumulative_regret).collect();
    for (policy, bound) in [
        (PolicyKind::GausKernel, 0.85),
        (PolicyKind::Hypercube, 0.6),
        (PolicyKind::Random, 0.4),
    ] {
        let theirs: Vec<f64> = (0..SEEDS)
            .map(|s| {
                run(&base(policy, s))
                    .expect("run")
                    .summary
                    .cumulative_regret
            })
            .collect();
        let ratio = mean(&mine) / mean(&theirs);
        pass &= ratio < bound;
        notes.push(format!("vs {} {ratio:.3} (< {bound})", policy.as_str()));
    }
    let total = start.elapsed() + dkucb_time;
    pass &= total < Duration::from_secs(600);
    notes.push(format!("{:.0} s of 600 s", total.as_secs_f64()));
    verdict(pass, notes.join(", "))
}

fn sync_trend() -> Verdict {
    let ds = [0.0, 1e2, 1e5, f64::INFINITY];
    let seeds = 0..3u64;
    let mut rates = Vec::new();
    let mut avg = Vec::new();
    let mut eff = Vec::new();
    for &d in &ds {
        let logs: Vec<MetricsLog> = seeds
            .clone()
            .map(|s| {
                let mut cfg = base(PolicyKind::Dkucb, s);
                cfg.periods = 1000;
                cfg.sync.threshold = d;
                run(&cfg).expect("run")
            })
            .collect();
        let rows: usize = logs.iter().map(|l| l.summary.vehicle_periods).sum();
        let syncs: usize = logs.iter().map(|l| l.summary.syncs).sum();
        rates.push(syncs as f64 / rows as f64);
        avg.push(
            logs.iter()
                .map(|l| l.summary.average_rate * l.summary.vehicle_periods as f64)
                .sum::<f64>()
                / rows as f64,
        );
        eff.push(mean(
            &logs
                .iter()
                .filter_map(|l| l.summary.sharing_efficiency)
                .collect::<Vec<_>>(),
        ));
    }
    let non_inc = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0]);
    let pass = non_inc(&rates) && non_inc(&avg) && eff.iter().all(|&e| e > 0.5);
    let fmt = |v: &[f64], k: f64| {
        v.iter()
            .map(|x| format!("{:.3}", x / k))
            .collect::<Vec<_>>()
            .join("/")
    };
    verdict(
        pass,
        format!(
            "D = 0/1e2/1e5/inf: sync rate {}, average rate {} Mbit/s, sharing efficiency {}",
            fmt(&rates, 1.0),
            fmt(&avg, 1e6),
            fmt(&eff, 1.0)
        ),
    )
}

fn sublinearity(dkucb: &[MetricsLog]) -> Verdict {
    let ratios: Vec<f64> = dkucb
        .iter()
        .map(|l| l.cumulative_regret_at(3000) / l.cumulative_regret_at(1500))
        .collect();
    let r = mean(&ratios);
    verdict(
        r < 1.75,
        format!(
            "regret(3000)/regret(1500) mean {r:.3} over {} seeds (min {:.3}, max {:.3})",
            ratios.len(),
            ratios.iter().cloned().fold(f64::INFINITY, f64::min),
            ratios.iter().cloned().fold(0.0, f64::max)
        ),
    )
}

fn optimization_sanity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let map = MapGeometry::default_grid();
    let routes = map.routes();
    let channel = RunConfig::default().world.channel;
    let (mut order_bad, mut near) = (0, 0);
    for _ in 0..200 {
        let s = rng.random_range(1..=3);
        let mut ids: Vec<usize> = (0..map.stations.len()).collect();
        for i in 0..s {
            let j = rng.random_range(i..ids.len());
            ids.swap(i, j);
        }
        let stations: Vec<_> = ids[..s]
            .iter()
            .enumerate()
            .map(|(new, &old)| dkucb_core::env::BaseStation {
                id: new as u32,
                pos: map.stations[old].pos,
            })
            .collect();
        let v = rng.random_range(1..=4);
        let positions: Vec<Point> = (0..v)
            .map(|_| {
                let r = &routes[rng.random_range(0..routes.len())];
                r.point_at(rng.random_range(0.0..r.length()))
            })
            .collect();
        let snap = RadioSnapshot::sample(
            channel,
            stations,
            &map.obstacles,
            positions,
            2000.0,
            &mut rng,
        );
        let (_, best) = brute_force_optimum(&snap).expect("small instance");
        let (w, _) = wcs(&snap, 100);
        let wr = snap.total_rate(&w);
        let rr = snap.total_rate(&random_association(&snap, &mut rng));
        if !(best >= wr && wr >= rr) {
            order_bad += 1;
        }
        if wr >= 0.95 * best {
            near += 1;
        }
    }
    verdict(
        order_bad == 0 && near >= 180,
        format!("ordering violations {order_bad}/200, WCS within 5% on {near}/200"),
    )
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().expect("tempdir");
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "periods = 300\nseed = 42\n").unwrap();
    let mut notes = Vec::new();
    let mut pass = true;
    for policy in PolicyKind::ALL {
        let mut outputs = Vec::new();
        for k in 0..2 {
            let out = dir.path().join(format!("{}-{k}", policy.as_str()));
            let st = Command::new(env!("CARGO_BIN_EXE_dkucb"))
                .args([
                    "run",
                    "--config",
                    cfg.to_str().unwrap(),
                    "--policy",
                    policy.as_str(),
                    "--out",
                ])
                .arg(&out)
                .output()
                .expect("binary runs");
            pass &= st.status.success();
            let bytes = [
                fs::read(out.join("rows.csv")).unwrap_or_default(),
                fs::read(out.join("summary.json")).unwrap_or_default(),
            ];
            outputs.push(bytes);
        }
        let same = outputs[0] == outputs[1] && !outputs[0][0].is_empty();
        pass &= same;
        notes.push(format!(
            "{} {}",
            policy.as_str(),
            if same { "identical" } else { "DIFFERS" }
        ));
    }
    verdict(pass, notes.join(", "))
}

fn main() -> ExitCode {
    // ACCEPTANCE_ONLY=1,2,7 runs a subset
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let want = |n: u32| only.as_ref().is_none_or(|o| o.contains(&n));
    let mut failed = 0;
    let mut report = |n: u32, name: &str, check: &dyn Fn() -> Verdict| {
        if !want(n) {
            return;
        }
        let v = check();
        println!(
            "criterion {n} {name}: {} ({})",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += !v.pass as u32;
    };
    report(1, "kernel validity", &kernel_validity);
    report(2, "estimator oracle", &estimator_oracle);
    report(3, "sync protocol", &protocol_properties);

    let start = Instant::now();
    let dkucb: Vec<MetricsLog> = if want(4) || want(6) {
        (0..SEEDS)
            .map(|s| run(&base(PolicyKind::Dkucb, s)).expect("run"))
            .collect()
    } else {
        Vec::new()
    };
    let dkucb_time = start.elapsed();
    report(4, "regret ordering", &|| {
        regret_ordering(&dkucb, dkucb_time)
    });
    report(5, "sync trend over D", &sync_trend);
    report(6, "sublinear regret", &|| sublinearity(&dkucb));
    report(7, "optimization sanity", &optimization_sanity);
    report(8, "determinism", &determinism);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

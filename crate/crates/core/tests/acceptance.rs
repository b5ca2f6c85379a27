//! Acceptance checks. Each check prints one `PASS`/`FAIL` line; the process
//! exits nonzero if any check fails. Reference values come from closed forms
//! evaluated here, independently of the library.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use riesz_core::asymptotics::{
    beta_objective, beta_optimum, cantor_gap_check, gap_certificate, lift_chain_bound,
    pigeonhole_lower_bound, scaling_exponent_fit, tail_bound,
};
use riesz_core::energy::{cross_energy, riesz_energy, Configuration};
use riesz_core::experiment::{run, thread_pool, ExperimentConfig};
use riesz_core::fractal::moran_dimension;
use riesz_core::minimizer::{
    best_packing, exhaustive_minimize, lift_bound, lift_seeded_minimize, local_search_minimize,
    SearchOptions,
};
use riesz_core::{CellAddress, Fractal, PointAddress};

type Check = Result<String, String>;
type Named = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn cantor() -> Fractal {
    Fractal::cantor(1.0 / 3.0).unwrap()
}

fn ternary_d() -> f64 {
    2f64.ln() / 3f64.ln()
}

/// Plain double loop over ordered pairs.
fn oracle_energy(points: &[Vec<f64>], s: f64) -> f64 {
    let mut total = 0.0;
    for (i, x) in points.iter().enumerate() {
        for (j, y) in points.iter().enumerate() {
            if i != j {
                let r: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                total += r.powf(-s);
            }
        }
    }
    total
}

fn points_of(c: &Configuration) -> Vec<Vec<f64>> {
    c.points().map(<[f64]>::to_vec).collect()
}

fn oracle_min_distance(xs: &[f64]) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

fn within_time(start: Instant, limit: Duration) -> Result<(), String> {
    ensure(start.elapsed() < limit, || format!("took {:?}, limit {limit:?}", start.elapsed()))
}

fn moran_dimension_closed_forms() -> Check {
    let start = Instant::now();
    let cantor_d = cantor().dimension();
    let uniform_d = Fractal::uniform(3, 0.5).unwrap().dimension();
    let direct = ok(moran_dimension(&[1.0 / 3.0, 1.0 / 3.0]))?;
    let e1 = (cantor_d - 2f64.ln() / 3f64.ln()).abs().max((direct - ternary_d()).abs());
    let e2 = (uniform_d - 3f64.ln() / 2f64.ln()).abs();
    ensure(e1 <= 1e-12 && e2 <= 1e-12, || format!("errors {e1:e}, {e2:e}"))?;
    within_time(start, Duration::from_secs(1))?;
    Ok(format!("errors {e1:.1e} and {e2:.1e}"))
}

fn random_simplex(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

fn beta_simplex_optimum() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let d = 0.75;
    let (mut worst_value, mut worst_beta, mut lowest_other) = (0.0f64, 0.0f64, f64::INFINITY);
    for trial in 0..100 {
        let m = 2 + trial % 4;
        let weights = random_simplex(&mut rng, m);
        for ratio in [1.5, 3.0] {
            let s = ratio * d;
            let opt = ok(beta_optimum(&weights, s, d))?;
            worst_value = worst_value.max((opt.value - 1.0).abs());
            for (b, w) in opt.beta.iter().zip(&weights) {
                worst_beta = worst_beta.max((b - w).abs());
            }
            for _ in 0..10 {
                let other = random_simplex(&mut rng, m);
                let lib = ok(beta_objective(&other, &weights, s, d))?;
                let oracle: f64 = other
                    .iter()
                    .zip(&weights)
                    .map(|(b, w)| b.powf(1.0 + ratio) * w.powf(-ratio))
                    .sum();
                ensure((lib - oracle).abs() <= 1e-12 * oracle, || format!("objective {lib} vs {oracle}"))?;
                lowest_other = lowest_other.min(oracle);
            }
        }
    }
    ensure(worst_value <= 1e-9, || format!("value off by {worst_value:e}"))?;
    ensure(worst_beta <= 1e-7, || format!("beta off by {worst_beta:e}"))?;
    ensure(lowest_other >= 1.0, || format!("a non-optimal point evaluates to {lowest_other}"))?;
    Ok(format!(
        "value error {worst_value:.1e}, beta error {worst_beta:.1e}, lowest other {lowest_other:.6}"
    ))
}

fn gap_certificate_values() -> Check {
    let start = Instant::now();
    // 40-digit evaluations of the closed forms.
    const R_HIGH: f64 = 0.480_698_219_742_113_7;
    const THRESHOLD_HIGH: f64 = 3.392_291_746_614_547;
    let thin = ok(Fractal::uniform(2, 0.1))?;
    let c = ok(gap_certificate(&thin, 4.0))?;
    let d = 2f64.ln() / 10f64.ln();
    let r_oracle = (0.1 / 0.8) * (1.0 + 0.1f64.powf(d)).powf(1.0 / d);
    let threshold = c.s_threshold.ok_or("threshold missing")?;
    ensure((c.separation_ratio - R_HIGH).abs() <= 1e-3 && (c.separation_ratio - r_oracle).abs() <= 1e-12, || {
        format!("R = {}", c.separation_ratio)
    })?;
    ensure((threshold - THRESHOLD_HIGH).abs() <= 1e-3, || format!("threshold {threshold}"))?;
    ensure((c.separation_ratio - 0.48071).abs() <= 1e-3, || "R far from 0.48071".into())?;
    let ternary = ok(gap_certificate(&cantor(), 4.0))?;
    ensure(ternary.separation_ratio > 1.0 && !ternary.certified, || {
        format!("ternary R = {}", ternary.separation_ratio)
    })?;
    within_time(start, Duration::from_secs(1))?;
    Ok(format!(
        "R = {:.6}, threshold = {threshold:.4}, ternary R = {:.4} uncertified",
        c.separation_ratio, ternary.separation_ratio
    ))
}

fn cantor_corollary_grid() -> Check {
    let d = ternary_d();
    let mut worst: f64 = 0.0;
    for step in 0..=14 {
        let t = 3.0 + 0.5 * step as f64;
        let ratio = ok(cantor_gap_check(t * d))?.ratio.ok_or("ratio undefined")?;
        ensure(ratio < 1.0, || format!("ratio {ratio} at s = {t}d"))?;
        worst = worst.max(ratio);
    }
    let low = ok(cantor_gap_check(1.1 * d))?.ratio.ok_or("ratio undefined at 1.1d")?;
    ensure(low > 1.0, || format!("ratio {low} at s = 1.1d"))?;
    let hand = (27.0 / 64.0) * (4.0 / 3.0) * 1.5;
    let at3 = ok(cantor_gap_check(3.0 * d))?.ratio.unwrap();
    ensure((at3 - hand).abs() <= 1e-12 && (hand - 0.84375f64).abs() < 1e-15, || format!("value {at3} at 3d"))?;
    Ok(format!("max on grid {worst:.5}, at 1.1d {low:.3}, at 3d {at3:.12}"))
}

fn local_search_matches_oracle() -> Check {
    let start = Instant::now();
    let c = cantor();
    let mut worst: f64 = 0.0;
    for n in 2..=5 {
        for s in [2.0, 4.0] {
            let oracle = ok(exhaustive_minimize(&c, n, s, 4, 1 << 30))?;
            let found = ok(local_search_minimize(&c, n, s, &SearchOptions::default()))?;
            let independent = oracle_energy(&points_of(&found.config), s);
            ensure((independent - found.record.energy).abs() <= 1e-12 * independent, || {
                "reported energy disagrees with recomputation".into()
            })?;
            let excess = found.record.energy / oracle.record.energy - 1.0;
            ensure(excess <= 1e-9, || format!("N = {n}, s = {s}: excess {excess:e}"))?;
            worst = worst.max(excess);
        }
    }
    within_time(start, Duration::from_secs(60))?;
    Ok(format!("largest relative excess {worst:.1e} over 8 cases"))
}

fn random_addresses(rng: &mut ChaCha8Rng, m: usize, n: usize, max_len: usize) -> Vec<PointAddress> {
    let mut out: Vec<PointAddress> = Vec::with_capacity(n);
    while out.len() < n {
        let len = rng.random_range(0..=max_len);
        let word = (0..len).map(|_| rng.random_range(0..m)).collect();
        let a = PointAddress::new(CellAddress(word), rng.random_range(0..m)).canonical();
        if !out.contains(&a) {
            out.push(a);
        }
    }
    out
}

fn pigeonhole_bound_holds() -> Check {
    let c = cantor();
    let d = c.dimension();
    let s = 3.0 * d;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    let mut tightest = f64::INFINITY;
    for k in 0..=6u32 {
        let n = (1usize << (k + 1)) + (1usize << k);
        let oracle_bound = 2f64.powf(s / d) * 2f64.powi(k as i32).powf(1.0 + s / d);
        let bound = ok(pigeonhole_lower_bound(&c, k, s))?;
        ensure((bound - oracle_bound).abs() <= 1e-12 * oracle_bound, || format!("bound {bound} vs {oracle_bound}"))?;

        let mut configs: Vec<Configuration> = Vec::new();
        let opts = SearchOptions {
            restarts: 2,
            ..Default::default()
        };
        configs.push(ok(lift_seeded_minimize(&c, n, s, &opts))?.config);
        if n <= 48 {
            configs.push(ok(local_search_minimize(&c, n, s, &opts))?.config);
        }
        let depth = (n as f64).log2().ceil() as usize;
        configs.push(ok(best_packing(&c, n, depth, &opts))?.config);
        for _ in 0..20 {
            configs.push(ok(Configuration::from_addresses(&c, random_addresses(&mut rng, 2, n, 14)))?);
        }
        for config in &configs {
            let e = ok(riesz_energy(config, s))?;
            ensure(config.len() == n, || "wrong size".into())?;
            ensure(e >= oracle_bound, || format!("N = {n}: energy {e} below bound {oracle_bound}"))?;
            tightest = tightest.min(e / oracle_bound);
            checked += 1;
        }
    }
    Ok(format!("{checked} configurations, 0 violations, smallest energy/bound {tightest:.3}"))
}

fn lift_chain_and_cauchy() -> Check {
    let start = Instant::now();
    let c = cantor();
    let s = 3.0;
    let d = c.dimension();
    let p = s / d;
    let base = ok(exhaustive_minimize(&c, 2, s, 4, 1 << 20))?;
    let e0 = base.record.energy;
    ensure((e0 - 2.0).abs() < 1e-15, || format!("pair optimum {e0}"))?;
    let mut config = base.config;
    let mut normalized = vec![e0 / 2f64.powf(1.0 + p)];
    for k in 1..=10u32 {
        let (lifted, step) = ok(lift_bound(&c, &config, s))?;
        ensure(step.holds(), || format!("one-step bound fails at k = {k}"))?;
        let n = lifted.len();
        let energy = oracle_energy(&points_of(&lifted), s);
        ensure((energy - step.lifted_energy).abs() <= 1e-10 * energy, || "energy mismatch".into())?;
        // (M^k)^{1+p} e0 + n0^{1-p} σ^{-s} / (M^{p-1} - 1) (M^k n0)^{1+p}
        let m_k = 2f64.powi(k as i32);
        let chain = m_k.powf(1.0 + p) * e0
            + 2f64.powf(1.0 - p) * 3f64.powf(s) / (2f64.powf(p - 1.0) - 1.0) * (m_k * 2.0).powf(1.0 + p);
        let lib_chain = ok(lift_chain_bound(&c, 2, e0, k, s))?;
        ensure((chain - lib_chain).abs() <= 1e-12 * chain, || "chain bound mismatch".into())?;
        ensure(energy <= chain, || format!("k = {k}: {energy} exceeds chain bound {chain}"))?;
        normalized.push(energy / (n as f64).powf(1.0 + p));
        config = lifted;
    }
    ensure(config.len() == 2048, || "unexpected size".into())?;
    // Smallest n0 = 2^j on the chain whose tail is under 5% of the last value.
    let last = *normalized.last().unwrap();
    let tail = |n: f64| n.powf(1.0 - p) * 3f64.powf(s) / (2f64.powf(p - 1.0) - 1.0);
    let j = (1..normalized.len())
        .find(|&j| tail((1usize << j) as f64) < 0.05 * last)
        .ok_or("no admissible n0")?;
    let n0 = 1usize << j;
    ensure((ok(tail_bound(&c, n0, s))? - tail(n0 as f64)).abs() <= 1e-12 * tail(n0 as f64), || {
        "tail bound mismatch".into()
    })?;
    let deltas: Vec<f64> = normalized.windows(2).map(|w| w[1] - w[0]).collect();
    let last_delta = deltas.last().unwrap().abs();
    ensure(last_delta < tail(n0 as f64), || format!("last delta {last_delta:e}"))?;
    let beyond: f64 = normalized[normalized.len() - 1] - normalized[j - 1];
    ensure(beyond.abs() <= tail(n0 as f64), || format!("variation beyond n0: {beyond:e}"))?;
    within_time(start, Duration::from_secs(300))?;
    Ok(format!(
        "chain bound holds for k = 1..10, n0 = {n0}, tail {:.2e}, last delta {last_delta:.2e}",
        tail(n0 as f64)
    ))
}

fn minimizers(ks: std::ops::RangeInclusive<u32>) -> Result<Vec<Configuration>, String> {
    let c = cantor();
    ks.map(|k| {
        ok(lift_seeded_minimize(&c, 1 << k, 3.0, &SearchOptions::default())).map(|r| r.config)
    })
    .collect()
}

fn weak_star_cell_counts() -> Check {
    let c = cantor();
    let cells = [(0.0, 1.0 / 9.0), (2.0 / 9.0, 1.0 / 3.0), (2.0 / 3.0, 7.0 / 9.0), (8.0 / 9.0, 1.0)];
    let mut worst: f64 = 0.0;
    for (k, config) in (6..=9).zip(minimizers(6..=9)?) {
        let n = config.len();
        ensure(n == 1 << k, || "wrong size".into())?;
        let mut counts = [0usize; 4];
        for &x in config.coords() {
            let cell = cells
                .iter()
                .position(|(lo, hi)| x >= lo - 1e-12 && x <= hi + 1e-12)
                .ok_or_else(|| format!("point {x} outside the depth-2 cells"))?;
            counts[cell] += 1;
        }
        let report = ok(riesz_core::asymptotics::empirical_cell_measure(&c, &config, 2))?;
        for (row, count) in report.cells.iter().zip(counts) {
            ensure(row.count == count, || format!("library count {} vs {count}", row.count))?;
            let dev = (count as f64 / n as f64 - 0.25).abs();
            worst = worst.max(dev);
        }
    }
    ensure(worst <= 0.02, || format!("deviation {worst}"))?;
    Ok(format!("largest deviation from 1/4 is {worst:.4}"))
}

fn separation_exponent() -> Check {
    let expected = -1.0 / ternary_d();
    let configs = minimizers(2..=8)?;
    let samples: Vec<(f64, f64)> = configs
        .iter()
        .map(|c| (c.len() as f64, oracle_min_distance(c.coords())))
        .collect();
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let fit = ok(scaling_exponent_fit(&samples))?;
    ensure((fit.slope - slope).abs() < 1e-12, || "library fit disagrees with oracle fit".into())?;
    ensure((slope - expected).abs() <= 0.15, || format!("slope {slope}, expected {expected}"))?;
    Ok(format!("slope {slope:.4} vs {expected:.4} over N = 4..256"))
}

fn decomposition_identity() -> Check {
    let fractals = [cantor(), ok(Fractal::cantor_dust_2d(0.3))?, ok(Fractal::uniform(3, 0.2))?];
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let (mut worst, mut separated_cases, mut cross_ratio) = (0.0f64, 0, 0.0f64);
    for trial in 0..1000 {
        let f = &fractals[trial % fractals.len()];
        let m = f.map_count();
        let s = rng.random_range(0.5..6.0);
        let n = rng.random_range(2..24);
        let split_by_cell = trial % 2 == 0;
        let addresses = random_addresses(&mut rng, m, n, 8);
        let (part1, part2): (Vec<PointAddress>, Vec<PointAddress>) = if split_by_cell {
            let first = rng.random_range(0..m);
            addresses.into_iter().partition(|a| a.letter(0) == first)
        } else {
            let cut = rng.random_range(1..n);
            let (a, b) = addresses.split_at(cut);
            (a.to_vec(), b.to_vec())
        };
        if part1.is_empty() || part2.is_empty() {
            continue;
        }
        let c1 = ok(Configuration::from_addresses(f, part1))?;
        let c2 = ok(Configuration::from_addresses(f, part2))?;
        let union = ok(c1.union(&c2))?;
        let whole = oracle_energy(&points_of(&union), s);
        let e1 = ok(riesz_energy(&c1, s))?;
        let e2 = ok(riesz_energy(&c2, s))?;
        let cross = ok(cross_energy(&c1, &c2, s))?;
        let rel = (whole - (e1 + e2 + cross)).abs() / whole;
        worst = worst.max(rel);
        ensure(rel <= 1e-10, || format!("trial {trial}: relative error {rel:e}"))?;
        if split_by_cell {
            let bound = 2.0 * c1.len() as f64 * c2.len() as f64 * f.sigma().powf(-s);
            ensure(cross <= bound, || format!("trial {trial}: cross {cross} exceeds {bound}"))?;
            separated_cases += 1;
            cross_ratio = cross_ratio.max(cross / bound);
        }
    }
    Ok(format!(
        "largest relative error {worst:.1e}; {separated_cases} cell-separated splits, max cross/bound {cross_ratio:.3}"
    ))
}

fn reproducible_across_threads() -> Check {
    let configs = [
        r#"{"fractal":"cantor(1/3)","s":3,"experiment":"weakstar","n_values":[5,7,9,12],"seed":99,"search":{"restarts":5}}"#,
        r#"{"fractal":"cantor-dust-2d(1/4)","s":3,"experiment":"g-curve","n_min":2,"n_max":40,"bins":8,"seed":5,"search":{"restarts":3}}"#,
        r#"{"fractal":"cantor(1/3)","s":2,"experiment":"monotonicity","n_min":2,"n_max":9,"seed":1}"#,
    ];
    let mut bytes = 0;
    for text in configs {
        let config = ok(ExperimentConfig::from_json(text))?;
        let mut outputs = Vec::new();
        for threads in [1, 8] {
            let pool = ok(thread_pool(Some(threads)))?;
            let out = ok(pool.install(|| run(&config)))?;
            let tables = out.tables.iter().map(|t| t.to_csv()).collect::<Result<Vec<_>, _>>();
            outputs.push((ok(tables)?, out.summary.to_string()));
        }
        ensure(outputs[0] == outputs[1], || format!("outputs differ for {text}"))?;
        bytes += outputs[0].0.iter().map(String::len).sum::<usize>();
    }
    Ok(format!("3 experiments, {bytes} CSV bytes identical at 1 and 8 threads"))
}

fn main() -> ExitCode {
    let checks: [Named; 11] = [
        ("moran dimension", moran_dimension_closed_forms),
        ("beta optimum on the simplex", beta_simplex_optimum),
        ("gap certificate", gap_certificate_values),
        ("ternary cantor gap ratio", cantor_corollary_grid),
        ("local search vs exhaustive oracle", local_search_matches_oracle),
        ("pigeonhole lower bound", pigeonhole_bound_holds),
        ("lift chain bound and cauchy tail", lift_chain_and_cauchy),
        ("cell counts of minimizers", weak_star_cell_counts),
        ("separation exponent", separation_exponent),
        ("decomposition identity", decomposition_identity),
        ("reproducibility across threads", reproducible_across_threads),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("acceptance {:>2} PASS  {name}: {detail} ({secs:.2} s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("acceptance {:>2} FAIL  {name}: {why} ({secs:.2} s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! Acceptance suite. Runs as a plain binary (no libtest harness) so every
//! criterion prints one PASS/FAIL line; any failure makes the process exit
//! non-zero.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use narrative_mobility::backend::{GenerationParams, MockBackend, MockRule, MockScript, TemplateSet};
use narrative_mobility::engine::{self, Ablation, Environment};
use narrative_mobility::eval::{self, Distribution, EvalConfig};
use narrative_mobility::geo::{haversine_m, GeoPoint, EARTH_RADIUS_M};
use narrative_mobility::meo::{MeoTable, OccupationCategory, DEFAULT_BANDS};
use narrative_mobility::planner::{parse_plan, plan_from_reply, Narrative};
use narrative_mobility::reflect::{should_rethink, Action};
use narrative_mobility::rng::RngStream;
use narrative_mobility::spatial::gravity::sample_index;
use narrative_mobility::spatial::{gravity_probabilities, ActivityPoiMap, Candidate, GravityParams, Poi};
use narrative_mobility::types::{PoiId, TransportMode, Vocabulary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(elapsed: Duration, budget: Duration) -> Result<(), String> {
    check(elapsed < budget, || format!("took {elapsed:.2?}, budget {budget:?}"))
}

fn rel_close(a: f64, b: f64, rel: f64, floor: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(floor)
}

// 1. Final-score arithmetic against the published ablation rows.
fn final_score_rows() -> Outcome {
    const ROWS: [([f64; 4], f64); 5] = [
        ([0.531, 0.698, 0.212, 0.349], 0.552),
        ([0.466, 0.441, 0.159, 0.361], 0.6434),
        ([0.460, 0.486, 0.254, 0.345], 0.614),
        ([0.475, 0.250, 0.138, 0.466], 0.668),
        ([0.431, 0.386, 0.126, 0.369], 0.672),
    ];
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for (j, expected) in ROWS {
        let got = eval::final_score(j[0], j[1], j[2], j[3]).map_err(|e| e.to_string())?;
        worst = worst.max((got - expected).abs());
        check((got - expected).abs() <= 0.002, || format!("{j:?} -> {got:.5}, printed {expected}"))?;
    }
    within_budget(t.elapsed(), Duration::from_secs(1))?;
    Ok(format!("5 rows, max |diff| {worst:.5} <= 0.002"))
}

fn dist(p: Vec<f64>) -> Distribution {
    let labels = (0..p.len()).map(|i| i.to_string()).collect();
    Distribution::new(labels, p).expect("valid distribution")
}

/// JSD in bits as entropy of the mixture minus mean entropy.
fn jsd_oracle(p: &[f64], q: &[f64]) -> f64 {
    let h = |v: &mut dyn Iterator<Item = f64>| -> f64 { v.filter(|x| *x > 0.0).map(|x| -x * x.ln()).sum() };
    let hm = h(&mut p.iter().zip(q).map(|(a, b)| (a + b) / 2.0));
    let hp = h(&mut p.iter().copied());
    let hq = h(&mut q.iter().copied());
    (hm - (hp + hq) / 2.0) / std::f64::consts::LN_2
}

fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen::<f64>() }).collect();
    if v.iter().all(|x| *x == 0.0) {
        v[0] = 1.0;
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

// 2. JSD properties and oracle equivalence.
fn jsd_correctness() -> Outcome {
    let t = Instant::now();
    let hand = eval::jsd(&dist(vec![0.5, 0.5]), &dist(vec![1.0, 0.0])).unwrap();
    check((hand - 0.31128).abs() <= 1e-5, || format!("jsd([.5,.5],[1,0]) = {hand}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let n = rng.gen_range(2..=40);
        let (p, q) = (random_simplex(&mut rng, n), random_simplex(&mut rng, n));
        let (dp, dq) = (dist(p.clone()), dist(q.clone()));
        let pq = eval::jsd(&dp, &dq).unwrap();
        let qp = eval::jsd(&dq, &dp).unwrap();
        let pp = eval::jsd(&dp, &dp).unwrap();
        check(pq == qp, || format!("pair {i}: asymmetric {pq} vs {qp}"))?;
        check((0.0..=1.0).contains(&pq), || format!("pair {i}: out of range {pq}"))?;
        check(pp.abs() <= 1e-15, || format!("pair {i}: jsd(P,P) = {pp}"))?;
        let oracle = jsd_oracle(&p, &q);
        if oracle.abs() > 1e-12 {
            worst = worst.max((pq - oracle).abs() / oracle.abs());
        }
        check(rel_close(pq, oracle, 1e-9, 1e-12), || format!("pair {i}: {pq} vs oracle {oracle}"))?;
    }
    within_budget(t.elapsed(), Duration::from_secs(5))?;
    Ok(format!("hand case {hand:.5}; 1000 pairs, max rel err {worst:.1e}"))
}

fn poi_at(i: usize, attractiveness: f64) -> Poi {
    Poi {
        id: PoiId::new(format!("c{i}")),
        name: format!("c{i}"),
        category: "shop".into(),
        location: GeoPoint { lat: 23.13, lon: 113.37 },
        attractiveness,
    }
}

fn frequencies(probs: &[f64], draws: usize, rng: &mut RngStream) -> Vec<usize> {
    let mut counts = vec![0usize; probs.len()];
    for _ in 0..draws {
        counts[sample_index(probs, rng).expect("non-empty")] += 1;
    }
    counts
}

/// Pearson chi-square p-value; cells expecting fewer than 5 draws are pooled.
fn chi_square_p(counts: &[usize], probs: &[f64], draws: usize) -> f64 {
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for (c, p) in counts.iter().zip(probs) {
        let e = p * draws as f64;
        if e < 5.0 {
            pooled.0 += *c as f64;
            pooled.1 += e;
        } else {
            cells.push((*c as f64, e));
        }
    }
    if pooled.1 > 0.0 {
        cells.push(pooled);
    }
    if cells.len() < 2 {
        return 1.0;
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    1.0 - ChiSquared::new((cells.len() - 1) as f64).unwrap().cdf(stat)
}

// 3. Gravity sampler statistics.
fn gravity_statistics() -> Outcome {
    const DRAWS: usize = 100_000;
    let t = Instant::now();
    let mut setup = ChaCha8Rng::seed_from_u64(3);
    let mut min_p: f64 = 1.0;
    for set in 0..10 {
        let n = setup.gen_range(2..=20);
        let pois: Vec<Poi> = (0..n).map(|i| poi_at(i, setup.gen_range(0.2..5.0))).collect();
        let cands: Vec<Candidate> =
            pois.iter().map(|p| Candidate { poi: p, distance_m: setup.gen_range(10.0..8000.0) }).collect();
        let params = GravityParams { beta: setup.gen_range(-2.5..-0.5), ..GravityParams::default() };
        let probs = gravity_probabilities(&cands, &params).map_err(|e| e.to_string())?;
        let counts = frequencies(&probs, DRAWS, &mut RngStream::new(3, &format!("gravity-{set}"), 0));
        let p = chi_square_p(&counts, &probs, DRAWS);
        min_p = min_p.min(p);
        check(p > 0.01, || format!("set {set} (n={n}): chi-square p = {p:.4}"))?;
    }

    let pois = [poi_at(0, 4.0), poi_at(1, 1.0)];
    let cands = [Candidate { poi: &pois[0], distance_m: 100.0 }, Candidate { poi: &pois[1], distance_m: 200.0 }];
    let params = GravityParams { alpha: 1.0, beta: -1.0, ..GravityParams::default() };
    let probs = gravity_probabilities(&cands, &params).map_err(|e| e.to_string())?;
    check((probs[0] - 8.0 / 9.0).abs() < 1e-12, || format!("worked case gives {probs:?}"))?;
    let counts = frequencies(&probs, DRAWS, &mut RngStream::new(3, "gravity-worked", 0));
    let freq = counts[0] as f64 / DRAWS as f64;
    let sigma = (8.0 / 81.0 / DRAWS as f64).sqrt();
    check((freq - 8.0 / 9.0).abs() <= 3.0 * sigma, || format!("worked case frequency {freq:.4}"))?;
    within_budget(t.elapsed(), Duration::from_secs(10))?;
    Ok(format!("10 random sets, min chi-square p {min_p:.3}; worked case {freq:.4} vs 0.8889 +/- {:.4}", 3.0 * sigma))
}

// 4. MEO gate statistics.
fn meo_statistics() -> Outcome {
    const DRAWS: usize = 100_000;
    let t = Instant::now();
    let table = MeoTable::default();
    let mut parts = Vec::new();
    for (p, occupations) in DEFAULT_BANDS {
        let occ = OccupationCategory::new(occupations[0]);
        let mut rng = RngStream::new(4, occupations[0], 0);
        let hits = (0..DRAWS).filter(|_| should_rethink(&occ, &table, &mut rng)).count();
        let freq = hits as f64 / DRAWS as f64;
        let sigma = (p * (1.0 - p) / DRAWS as f64).sqrt();
        check((freq - p).abs() <= 3.0 * sigma, || format!("band {p}: frequency {freq:.4}"))?;
        parts.push(format!("{p:.2}->{freq:.4}"));
    }
    let occ = OccupationCategory::new("Engineer");
    for (p, expected) in [(0.0, 0), (1.0, DRAWS)] {
        let table = MeoTable::uniform(p);
        let mut rng = RngStream::new(4, "degenerate", 0);
        let hits = (0..DRAWS).filter(|_| should_rethink(&occ, &table, &mut rng)).count();
        check(hits == expected, || format!("MEO={p}: {hits} of {DRAWS}"))?;
    }
    within_budget(t.elapsed(), Duration::from_secs(5))?;
    Ok(format!("{}; MEO 0 and 1 exact", parts.join(", ")))
}

fn rg_oracle(t: &narrative_mobility::types::Trajectory) -> f64 {
    let pts: Vec<GeoPoint> = t.records.iter().map(|r| r.place.point).collect();
    let n = pts.len() as f64;
    let lat0 = pts.iter().map(|p| p.lat).sum::<f64>() / n;
    let k = lat0.to_radians().cos();
    let mut s = 0.0;
    for a in &pts {
        for b in &pts {
            let dx = (a.lon - b.lon).to_radians() * k * EARTH_RADIUS_M;
            let dy = (a.lat - b.lat).to_radians() * EARTH_RADIUS_M;
            s += dx * dx + dy * dy;
        }
    }
    (s / (2.0 * n * n)).sqrt()
}

fn smoothed(counts: &[f64], eps: f64) -> Vec<f64> {
    let total: f64 = counts.iter().map(|c| c + eps).sum();
    counts.iter().map(|c| (c + eps) / total).collect()
}

fn same_probs(a: &Distribution, b: &[f64]) -> bool {
    a.probabilities.len() == b.len() && a.probabilities.iter().zip(b).all(|(x, y)| rel_close(*x, *y, 1e-9, 1e-300))
}

// 5. Metric oracle equivalence.
fn metric_oracles() -> Outcome {
    let t = Instant::now();
    let vocab = Vocabulary::default();
    let eps = eval::DEFAULT_EPSILON;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut trajectories_seen = 0;
    for pop in 0..200 {
        let n = rng.gen_range(1..=20);
        let trajs: Vec<_> = (0..n).map(|i| common::random_trajectory(&mut rng, i, &vocab)).collect();
        trajectories_seen += n;
        for tr in &trajs {
            let (got, want) = (eval::radius_of_gyration(tr), rg_oracle(tr));
            check(rel_close(got, want, 1e-9, 1e-6), || format!("population {pop}: r_g {got} vs {want}"))?;
            let mut seen: Vec<&str> = Vec::new();
            for r in &tr.records {
                if !seen.contains(&r.place.poi_id.as_str()) {
                    seen.push(r.place.poi_id.as_str());
                }
            }
            let got = eval::daily_unique_locations(tr);
            check(got == seen.len(), || format!("population {pop}: L_d {got} vs {}", seen.len()))?;
        }

        let mut mode_counts = [0.0; 6];
        for tr in &trajs {
            for r in &tr.records {
                for (i, m) in TransportMode::ALL.iter().enumerate() {
                    if r.mode == Some(*m) {
                        mode_counts[i] += 1.0;
                    }
                }
            }
        }
        let got = eval::mode_distribution(&trajs, eps);
        check(same_probs(&got, &smoothed(&mode_counts, eps)), || {
            format!("population {pop}: mode distribution differs")
        })?;

        let k = vocab.len();
        let mut seq_counts = vec![0.0; 96 * k];
        for tr in &trajs {
            for slot in 0..96u8 {
                let covering = tr.records.iter().find(|r| r.start.slot() <= slot && slot < r.end.slot());
                if let Some(r) = covering {
                    let c = vocab.iter().position(|v| *v == r.activity.intention).unwrap();
                    seq_counts[usize::from(slot) * k + c] += 1.0;
                }
            }
        }
        let got = eval::intention_sequence_distribution(&trajs, &vocab, eps).map_err(|e| e.to_string())?;
        check(same_probs(&got, &smoothed(&seq_counts, eps)), || {
            format!("population {pop}: intention distribution differs")
        })?;
    }
    within_budget(t.elapsed(), Duration::from_secs(30))?;
    Ok(format!("200 populations, {trajectories_seen} trajectories, all four metrics agree"))
}

// 6. End-to-end determinism and validity.
fn end_to_end() -> Outcome {
    let (config, env, profiles) = common::load_world("config.json");
    check(profiles.len() == 100, || format!("fixture has {} profiles", profiles.len()))?;
    let t = Instant::now();
    let run = engine::simulate_population(&profiles, &env, None);
    let elapsed = t.elapsed();
    within_budget(elapsed, Duration::from_secs(10))?;
    check(run.manifest.failures.is_empty(), || format!("failures: {:?}", run.manifest.failures))?;
    check(run.trajectories.len() == 100, || format!("{} trajectories", run.trajectories.len()))?;
    let mut trips = 0;
    for tr in &run.trajectories {
        tr.validate().map_err(|e| format!("{}: {e}", tr.agent_id))?;
        for (prev, next) in tr.trips() {
            let mode = next.mode.expect("trip has a mode");
            let d = haversine_m(prev.place.point, next.place.point);
            let need = config.mode_speeds.travel_slots(d, mode).max(1);
            let took = next.arrive.slots_since(next.start);
            check(took >= need, || format!("{}: {d:.0} m by {mode} in {took} slots", tr.agent_id))?;
            trips += 1;
        }
    }
    let again = engine::simulate_population(&profiles, &env, None);
    check(again.trajectories == run.trajectories, || "second run differs".into())?;
    check(again.manifest.manifest_hash == run.manifest.manifest_hash, || "manifest hash differs".into())?;
    let cfg = EvalConfig { categories: config.categories.clone(), ..EvalConfig::default() };
    let report = eval::evaluate(&run.trajectories, &run.trajectories, &cfg).map_err(|e| e.to_string())?;
    let worst = [report.jsd_intention, report.jsd_locations, report.jsd_mode, report.jsd_radius]
        .into_iter()
        .fold(0.0, f64::max);
    check(worst <= 1e-6, || format!("self-evaluation max JSD {worst}"))?;
    Ok(format!("100 agents in {elapsed:.2?}, {trips} prism-feasible trips, repeat identical, self-JSD max {worst:.1e}"))
}

// 7. Ablation plumbing.
fn ablations() -> Outcome {
    let (config, _, profiles) = common::load_world("config.json");
    let mut hashes = BTreeSet::new();
    let mut parts = Vec::new();
    for a in Ablation::ALL {
        let mut c = config.clone();
        a.apply(&mut c);
        let mut env = Environment::load(c).map_err(|e| e.to_string())?;
        env.register_occupations(&profiles);
        let run = engine::simulate_population(&profiles, &env, Some(a));
        let m = &run.manifest;
        check(m.failures.is_empty(), || format!("{a}: failures {:?}", m.failures))?;
        check(run.trajectories.len() == profiles.len(), || format!("{a}: {} trajectories", run.trajectories.len()))?;
        hashes.insert(m.manifest_hash.clone());
        match a {
            Ablation::NoRethinking => {
                let changes = run.decisions.iter().filter(|d| d.decision.action == Action::Change).count();
                check(m.change_decisions == 0 && changes == 0, || format!("no-rethinking logged {changes} changes"))?;
                check(!m.backend_calls.contains_key("rethink"), || "no-rethinking called rethink".into())?;
            }
            Ablation::RandomMode => {
                let calls = m.backend_calls.get("mode_choice").copied().unwrap_or(0);
                check(calls == 0, || format!("random-mode made {calls} mode_choice calls"))?;
            }
            _ => {}
        }
        parts.push(format!("{a}:{}", m.change_decisions));
    }
    check(hashes.len() == 5, || format!("{} distinct manifests", hashes.len()))?;
    Ok(format!("5 distinct manifests; change decisions {}", parts.join(" ")))
}

fn corpus(dir: &str) -> Vec<(String, String)> {
    let mut files: Vec<_> =
        std::fs::read_dir(common::fixture(dir)).expect("corpus dir").map(|e| e.expect("dir entry").path()).collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).expect("fixture text"))
        })
        .collect()
}

fn scripted_parse(narrative: &str, reply: &str) -> Result<narrative_mobility::planner::PlanParseReport, String> {
    let backend =
        MockBackend::new(MockScript::default_only("{}").with_rule(MockRule::on_template("plan_parse", reply)));
    let n = Narrative {
        profile_id: "fixture".into(),
        text: narrative.into(),
        backend: "mock".into(),
        temperature: 1.0,
        generated_at: 0,
        fallback: false,
    };
    parse_plan(
        &n,
        &Vocabulary::default(),
        &ActivityPoiMap::default(),
        &TemplateSet::builtin(),
        &backend,
        &GenerationParams::default(),
    )
    .map_err(|e| e.to_string())
}

// 8. Parser robustness.
fn parser_robustness() -> Outcome {
    let vocab = Vocabulary::default();
    let map = ActivityPoiMap::default();
    let accepted = corpus("parser/accepted");
    check(accepted.len() == 25, || format!("{} accepted fixtures", accepted.len()))?;
    for (name, text) in &accepted {
        let direct = catch_unwind(|| plan_from_reply(text, &vocab, &map)).map_err(|_| format!("{name}: panicked"))?;
        let (plan, _) = direct.map_err(|e| format!("{name}: rejected: {e}"))?;
        check(plan.len() >= 2, || format!("{name}: {} activities", plan.len()))?;
        let report = scripted_parse("A day.", text)?;
        check(report.is_accepted() && !report.reprompted, || format!("{name}: scripted parse {:?}", report.rejected))?;
    }
    for diary in ["home_day", "lecturer_day"] {
        let narrative = std::fs::read_to_string(common::fixture(&format!("diaries/{diary}.txt"))).unwrap();
        let reply = std::fs::read_to_string(common::fixture(&format!("diaries/{diary}.reply.txt"))).unwrap();
        let report = scripted_parse(&narrative, &reply)?;
        check(report.is_accepted(), || format!("{diary}: {:?}", report.rejected))?;
    }
    let rejected = corpus("parser/rejected");
    for (name, text) in &rejected {
        let report = catch_unwind(AssertUnwindSafe(|| scripted_parse("A day.", text)))
            .map_err(|_| format!("{name}: panicked"))??;
        check(!report.is_accepted() && report.rejected.is_some(), || format!("{name}: unexpectedly accepted"))?;
        check(report.reprompted, || format!("{name}: no repair round-trip"))?;
    }
    Ok(format!("{}/25 accepted, both diaries extracted, {} malformed rejected", accepted.len(), rejected.len()))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("final score reproduces the ablation table", final_score_rows),
        ("JSD properties and oracle", jsd_correctness),
        ("gravity sampler statistics", gravity_statistics),
        ("MEO gate statistics", meo_statistics),
        ("metric oracle equivalence", metric_oracles),
        ("end-to-end determinism and validity", end_to_end),
        ("ablation plumbing", ablations),
        ("parser robustness", parser_robustness),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let ms = t.elapsed().as_millis();
        match outcome {
            Ok(detail) => println!("criterion {} PASS  {name}: {detail} [{ms} ms]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {why} [{ms} ms]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

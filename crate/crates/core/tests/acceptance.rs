//! Acceptance checks, one line per criterion. Runs as a plain binary so the
//! report reads top to bottom; any failure makes the process exit non-zero.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::time::{Duration, Instant};

use lrp_core::ap::{ap, rp_curve, ApVariant};
use lrp_core::dataio::{load_detections, load_ground_truth, write_detections, write_ground_truth};
use lrp_core::eval::{evaluate, Category, EvalConfig};
use lrp_core::geometry::iou_distance;
use lrp_core::lrp::{dasa, lrp_between_sets, lrp_components, DasaParams};
use lrp_core::matching::{hungarian, match_greedy, TpPair};
use lrp_core::olrp::sweep_class;
use lrp_core::synth::{self, SceneParams};
use lrp_core::video::{bayes_update, run_stream, LinkParams, Thresholds};
use lrp_core::{BoundingBox, ClassId, Detection, GroundTruth, MatchResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("took {:.2}s, limit {limit_s}s", elapsed.as_secs_f64())
    })
}

fn single_class(s: &synth::Scenario) -> (f64, f64) {
    let c = synth::SCENARIO_CLASS;
    let curve = rp_curve(&s.gts, &s.dets, c, 0.5).unwrap();
    let sweep = sweep_class(&s.gts, &s.dets, c, 0.5).unwrap();
    (ap(&curve, ApVariant::Continuous), sweep.olrp().unwrap())
}

fn discrimination() -> Check {
    let start = Instant::now();
    let cases = [
        ("half recall", synth::half_recall_perfect_boxes(), 0.5, 0.005),
        ("duplicates", synth::duplicates_before_every_hit(), 0.5, 0.005),
        ("loose boxes", synth::loose_boxes_with_clutter(), 0.93, 0.01),
        ("tight boxes", synth::tight_boxes_with_clutter(), 0.667, 0.01),
    ];
    let mut parts = Vec::new();
    for (name, scenario, want_olrp, tol) in cases {
        let (ap_c, olrp) = single_class(&scenario);
        ensure((ap_c - 0.5).abs() <= 0.001, || format!("{name}: AP {ap_c}"))?;
        ensure((olrp - want_olrp).abs() <= tol, || format!("{name}: oLRP {olrp}, want {want_olrp}"))?;
        parts.push(format!("{name} AP {ap_c:.3} oLRP {olrp:.3}"));
    }
    within(start.elapsed(), 1.0)?;
    Ok(parts.join("; "))
}

fn random_match(rng: &mut ChaCha8Rng, tau: f64) -> (MatchResult, usize, usize) {
    let n_gt = rng.random_range(0..=20usize);
    let n_det = rng.random_range(0..=20usize);
    let n_tp = rng.random_range(0..=n_gt.min(n_det));
    let tp_pairs = (0..n_tp)
        .map(|i| TpPair {
            det: i,
            gt: i,
            iou: tau + (1.0 - tau) * (1.0 - rng.random::<f64>()),
        })
        .collect();
    let m = MatchResult {
        tp_pairs,
        n_tp,
        n_fp: n_det - n_tp,
        n_fn: n_gt - n_tp,
        n_ignored: 0,
    };
    (m, n_gt, n_det)
}

fn component_equivalence() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    while checked < 10_000 {
        let tau = rng.random_range(0.0..0.95);
        let (m, n_gt, n_det) = random_match(&mut rng, tau);
        if n_gt + n_det == 0 {
            continue;
        }
        let b = lrp_components(&m, n_gt, n_det, tau).map_err(|e| e.to_string())?;
        // weighted form evaluated from scratch, with absent components dropped
        let z = (m.n_tp + m.n_fp + m.n_fn) as f64;
        let mut weighted = 0.0;
        if m.n_tp > 0 {
            let loc = m.tp_pairs.iter().map(|p| 1.0 - p.iou).sum::<f64>() / m.n_tp as f64;
            weighted += m.n_tp as f64 / (1.0 - tau) * loc;
        }
        if n_det > 0 {
            weighted += n_det as f64 * (m.n_fp as f64 / n_det as f64);
        }
        if n_gt > 0 {
            weighted += n_gt as f64 * (m.n_fn as f64 / n_gt as f64);
        }
        weighted /= z;
        worst = worst.max((weighted - b.total).abs()).max((b.weighted_total() - b.total).abs());
        checked += 1;
    }
    ensure(worst <= 1e-12, || format!("max difference {worst:e}"))?;
    within(start.elapsed(), 5.0)?;
    Ok(format!("{checked} instances, max difference {worst:.1e}"))
}

fn random_set(rng: &mut ChaCha8Rng, max: usize, extent: f64) -> Vec<BoundingBox> {
    let n = rng.random_range(0..=max);
    (0..n).map(|_| synth::random_box(rng, extent)).collect()
}

/// Second set: some boxes perturbed from the first, some fresh.
fn paired_sets(rng: &mut ChaCha8Rng) -> (Vec<BoundingBox>, Vec<BoundingBox>) {
    let xs = random_set(rng, 8, 60.0);
    let mut ys = Vec::new();
    for b in &xs {
        if rng.random::<f64>() < 0.7 {
            ys.push(synth::jitter(rng, b, 0.2));
        }
    }
    ys.extend(random_set(rng, 3, 60.0));
    (xs, ys)
}

fn dasa_reduction() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < 10_000 {
        let (xs, ys) = paired_sets(&mut rng);
        if xs.is_empty() && ys.is_empty() {
            continue;
        }
        checked += 1;
        for tau in [0.5, 0.75] {
            let b = lrp_between_sets(&xs, &ys, tau).map_err(|e| e.to_string())?;
            let e = dasa(&xs, &ys, DasaParams::for_lrp(tau).unwrap()).map_err(|e| e.to_string())?;
            let l = xs.len().max(ys.len()) as f64;
            let reduced = e * l / ((1.0 - tau) * b.z as f64);
            let rel = (reduced - b.total).abs() / b.total.abs().max(f64::MIN_POSITIVE);
            let rel = if b.total == 0.0 { reduced.abs() } else { rel };
            worst = worst.max(rel);
        }
    }
    ensure(worst <= 1e-9, || format!("max relative error {worst:e}"))?;
    within(start.elapsed(), 30.0)?;
    Ok(format!("{checked} set pairs at tau 0.5 and 0.75, max relative error {worst:.1e}"))
}

fn triangle_inequality() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut violations = 0;
    for _ in 0..100_000 {
        let a = synth::random_box(&mut rng, 20.0);
        let b = synth::jitter(&mut rng, &a, 0.5);
        let c = if rng.random::<bool>() {
            synth::jitter(&mut rng, &b, 0.5)
        } else {
            synth::random_box(&mut rng, 20.0)
        };
        let (ab, bc, ac) = (iou_distance(&a, &b), iou_distance(&b, &c), iou_distance(&a, &c));
        for (lhs, rhs) in [(ac, ab + bc), (ab, ac + bc), (bc, ab + ac)] {
            if lhs > rhs + 1e-12 {
                violations += 1;
            }
        }
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    within(start.elapsed(), 5.0)?;
    Ok("100000 triples, 0 violations".into())
}

fn metric_symmetry() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    while checked < 10_000 {
        let (xs, ys) = paired_sets(&mut rng);
        if xs.is_empty() && ys.is_empty() {
            continue;
        }
        let ab = lrp_between_sets(&xs, &ys, 0.5).map_err(|e| e.to_string())?;
        let ba = lrp_between_sets(&ys, &xs, 0.5).map_err(|e| e.to_string())?;
        ensure(ab.total == ba.total, || format!("{} vs {}", ab.total, ba.total))?;
        ensure(ab.fp == ba.fn_ && ab.fn_ == ba.fp, || "FP and FN components did not swap".into())?;
        checked += 1;
    }
    Ok(format!("{checked} set pairs, totals identical"))
}

/// Area under the interpolated curve built from independent greedy matches
/// at every distinct score.
fn brute_force_ap(gts: &[GroundTruth], dets: &[Detection]) -> [f64; 3] {
    let mut scores: Vec<f64> = dets.iter().map(|d| d.score).collect();
    scores.sort_by(|a, b| b.total_cmp(a));
    scores.dedup();
    let mut points = Vec::new();
    for &s in &scores {
        let m = match_greedy(gts, dets, s, 0.5).unwrap();
        if m.n_tp + m.n_fp > 0 {
            let recall = m.n_tp as f64 / m.n_ground_truths() as f64;
            points.push((recall, m.n_tp as f64 / (m.n_tp + m.n_fp) as f64));
        }
    }
    let best_from = |r: f64| {
        points
            .iter()
            .filter(|p| p.0 >= r)
            .map(|p| p.1)
            .fold(0.0, f64::max)
    };
    let mut continuous = 0.0;
    let mut prev = 0.0;
    for &(r, _) in &points {
        continuous += (r - prev) * best_from(r);
        prev = r;
    }
    let sampled = |n: usize| (0..=n).map(|k| best_from(k as f64 / n as f64)).sum::<f64>() / (n + 1) as f64;
    [continuous, sampled(10), sampled(100)]
}

fn ap_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let params = SceneParams {
        n_images: 4,
        max_gts_per_image: 5,
        max_dets_per_image: 12,
        crowd_rate: 0.1,
        ..Default::default()
    };
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    while checked < 1000 {
        let s = synth::random_scene(&mut rng, &params);
        if s.dets.len() > 50 || !s.gts.iter().any(|g| !g.ignore) {
            continue;
        }
        let curve = rp_curve(&s.gts, &s.dets, ClassId(0), 0.5).map_err(|e| e.to_string())?;
        let oracle = brute_force_ap(&s.gts, &s.dets);
        for (v, want) in [ApVariant::Continuous, ApVariant::Pascal11, ApVariant::Coco101].iter().zip(oracle) {
            worst = worst.max((ap(&curve, *v) - want).abs());
        }
        checked += 1;
    }
    ensure(worst <= 1e-9, || format!("max difference {worst:e}"))?;
    Ok(format!("{checked} instances, 3 variants, max difference {worst:.1e}"))
}

fn sweep_fixtures() -> Vec<(Vec<GroundTruth>, Vec<Detection>)> {
    let mut out: Vec<_> = [
        synth::half_recall_perfect_boxes(),
        synth::duplicates_before_every_hit(),
        synth::loose_boxes_with_clutter(),
        synth::tight_boxes_with_clutter(),
    ]
    .into_iter()
    .map(|s| {
        let gts = s.gts.into_iter().map(|g| GroundTruth { class_id: ClassId(0), ..g }).collect();
        let dets = s.dets.into_iter().map(|d| Detection { class_id: ClassId(0), ..d }).collect();
        (gts, dets)
    })
    .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for levels in [None, Some(20)] {
        let p = SceneParams {
            score_levels: levels,
            crowd_rate: 0.05,
            ..Default::default()
        };
        for _ in 0..100 {
            let s = synth::random_scene(&mut rng, &p);
            out.push((s.gts, s.dets));
        }
    }
    out
}

fn olrp_optimality() -> Check {
    let fixtures = sweep_fixtures();
    let mut plateaus = 0;
    for (gts, dets) in &fixtures {
        let sweep = sweep_class(gts, dets, ClassId(0), 0.5).map_err(|e| e.to_string())?;
        let Some(olrp) = sweep.olrp() else { continue };
        for (s, b) in sweep.defined_samples() {
            ensure(olrp <= b.total, || format!("oLRP {olrp} above LRP {} at s = {s}", b.total))?;
        }
        for w in sweep.samples.windows(2) {
            let same_set = dets.iter().filter(|d| d.score >= w[0].s).count()
                == dets.iter().filter(|d| d.score >= w[1].s).count();
            if same_set {
                ensure(w[0].breakdown == w[1].breakdown, || format!("plateau broken at s = {}", w[1].s))?;
                plateaus += 1;
            }
        }
    }
    Ok(format!("{} fixtures, {plateaus} plateau neighbours identical", fixtures.len()))
}

fn distinct_breakdowns(gts: &[GroundTruth], dets: &[Detection]) -> (Vec<lrp_core::LrpBreakdown>, Option<f64>) {
    let sweep = sweep_class(gts, dets, ClassId(0), 0.5).unwrap();
    let mut seen: Vec<lrp_core::LrpBreakdown> = sweep.defined_samples().map(|(_, b)| b.clone()).collect();
    seen.dedup();
    (seen, sweep.olrp())
}

fn score_order_invariance() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    // scores in 0.20..=0.95 at spacing 0.05: squared or not, consecutive
    // values are more than one grid step apart, so both grids see every set
    let mut checked = 0;
    for _ in 0..300 {
        let mut s = synth::random_scene(&mut rng, &SceneParams::default());
        for d in &mut s.dets {
            d.score = (20 + 5 * rng.random_range(0..16)) as f64 / 100.0;
        }
        if !s.gts.iter().any(|g| !g.ignore) {
            continue;
        }
        let squared: Vec<Detection> = s.dets.iter().map(|d| Detection { score: d.score * d.score, ..d.clone() }).collect();
        for v in ApVariant::ALL {
            let a = ap(&rp_curve(&s.gts, &s.dets, ClassId(0), 0.5).unwrap(), v);
            let b = ap(&rp_curve(&s.gts, &squared, ClassId(0), 0.5).unwrap(), v);
            ensure(a == b, || format!("{v} AP changed: {a} -> {b}"))?;
        }
        let (plain, olrp_a) = distinct_breakdowns(&s.gts, &s.dets);
        let (sq, olrp_b) = distinct_breakdowns(&s.gts, &squared);
        ensure(plain == sq, || "sweep visited different detection sets".into())?;
        ensure(olrp_a == olrp_b, || format!("oLRP changed: {olrp_a:?} -> {olrp_b:?}"))?;
        checked += 1;
    }
    Ok(format!("{checked} scenes, AP and sweep minima unchanged"))
}

fn brute_force_assignment(cost: &[Vec<f64>]) -> f64 {
    fn go(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if row == cost.len() {
            *best = best.min(acc);
            return;
        }
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                go(cost, row + 1, used, acc + cost[row][c], best);
                used[c] = false;
            }
        }
    }
    let cols = cost.first().map_or(0, Vec::len);
    // enumerate injections from the shorter side
    let t: Vec<Vec<f64>>;
    let cost = if cost.len() > cols {
        t = (0..cols).map(|c| cost.iter().map(|r| r[c]).collect()).collect();
        &t[..]
    } else {
        cost
    };
    let mut best = f64::INFINITY;
    go(cost, 0, &mut vec![false; cost.first().map_or(0, Vec::len)], 0.0, &mut best);
    best
}

fn hungarian_optimality() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for i in 0..1000 {
        let rows = rng.random_range(1..=8);
        let cols = rng.random_range(1..=8);
        // integer costs keep every sum exact
        let cost: Vec<Vec<f64>> = (0..rows)
            .map(|_| (0..cols).map(|_| rng.random_range(0..50) as f64).collect())
            .collect();
        let got = hungarian(&cost).map_err(|e| e.to_string())?;
        let want = brute_force_assignment(&cost);
        ensure(got.total == want, || format!("matrix {i} ({rows}x{cols}): {} vs {want}", got.total))?;
        ensure(got.pairs.len() == rows.min(cols), || format!("matrix {i}: incomplete assignment"))?;
    }
    Ok("1000 matrices up to 8x8 match brute force".into())
}

fn bayes_properties() -> Check {
    let grid: Vec<f64> = (1..=99).map(|k| k as f64 / 100.0).collect();
    for &p in &grid {
        for &q in &grid {
            let v = bayes_update(p, q);
            ensure(v == bayes_update(q, p), || format!("asymmetric at ({p}, {q})"))?;
            ensure(v > 0.0 && v < 1.0, || format!("out of range at ({p}, {q})"))?;
            if q < 0.99 {
                ensure(bayes_update(p, q + 0.01) > v, || format!("not increasing at ({p}, {q})"))?;
            }
            ensure((v > p) == (q > 0.5), || format!("direction wrong at ({p}, {q})"))?;
        }
        ensure((bayes_update(0.5, p) - p).abs() < 1e-12, || format!("(0.5, {p}) moved"))?;
    }
    let mut score = 0.6;
    let mut trail = vec![score];
    for _ in 0..5 {
        let next = bayes_update(score, 0.6);
        ensure(next > score, || format!("iteration stalled at {score}"))?;
        score = next;
        trail.push(score);
    }
    let trail: Vec<String> = trail.iter().map(|s| format!("{s:.3}")).collect();
    Ok(format!("99x99 grid clean; 0.6 prior: {}", trail.join(" -> ")))
}

fn class_specific_thresholds() -> Check {
    let (frames, gts) = synth::contrast_stream();
    let params = LinkParams::default();
    let cats = [
        Category::unnamed(synth::LOW_CONFIDENCE_CLASS),
        Category::unnamed(synth::HIGH_CONFIDENCE_CLASS),
    ];
    let cfg = EvalConfig::default();
    let olrp_of = |th: &Thresholds| -> Result<BTreeMap<ClassId, f64>, String> {
        let out = run_stream(&frames, th, &params).map_err(|e| e.to_string())?;
        let report = evaluate(&gts, &out.detections(), &cats, &cfg).map_err(|e| e.to_string())?.report;
        Ok(report.classes.iter().map(|r| (r.class_id, r.olrp.unwrap())).collect())
    };

    let unfiltered = run_stream(&frames, &Thresholds::general(0.0).unwrap(), &params).map_err(|e| e.to_string())?;
    let report = evaluate(&gts, &unfiltered.detections(), &cats, &cfg).map_err(|e| e.to_string())?.report;
    let stars: BTreeMap<ClassId, f64> = report.classes.iter().map(|r| (r.class_id, r.s_star.unwrap())).collect();
    ensure(
        stars[&synth::LOW_CONFIDENCE_CLASS] == 0.3 && stars[&synth::HIGH_CONFIDENCE_CLASS] == 0.8,
        || format!("designed optima not found: {stars:?}"),
    )?;

    let general = olrp_of(&Thresholds::general(0.5).unwrap())?;
    let per_class = olrp_of(&Thresholds::per_class(stars.clone(), 0.5).unwrap())?;
    for c in [synth::LOW_CONFIDENCE_CLASS, synth::HIGH_CONFIDENCE_CLASS] {
        ensure(per_class[&c] <= general[&c], || {
            format!("class {c}: per-class {} > general {}", per_class[&c], general[&c])
        })?;
    }
    Ok(format!("s* {stars:?}; oLRP general {general:?}, per-class {per_class:?}"))
}

fn dataset_scale_run() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (ds, dets) = synth::synthetic_dataset(&Default::default(), 12);
    let gt_path = dir.path().join("gt.json");
    let det_path = dir.path().join("dets.json");
    write_ground_truth(&ds, BufWriter::new(File::create(&gt_path).unwrap())).map_err(|e| e.to_string())?;
    write_detections(&dets, BufWriter::new(File::create(&det_path).unwrap())).map_err(|e| e.to_string())?;

    let start = Instant::now();
    let loaded = load_ground_truth(&gt_path).map_err(|e| e.to_string())?;
    let loaded_dets = load_detections(&det_path, &loaded).map_err(|e| e.to_string())?;
    let ev = evaluate(&loaded.ground_truths, &loaded_dets, &loaded.categories, &EvalConfig::default())
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(loaded_dets.len() == dets.len(), || "detections lost in round trip".into())?;
    within(elapsed, 60.0)?;
    let s = &ev.report.summary;
    Ok(format!(
        "{} images, {} classes, {} ground truths, {} detections in {:.1}s (moLRP {:.3}, mAP {:.3})",
        loaded.images.len(),
        loaded.categories.len(),
        loaded.ground_truths.len(),
        loaded_dets.len(),
        elapsed.as_secs_f64(),
        s.molrp,
        s.map.unwrap_or(f64::NAN)
    ))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("equal AP, distinct oLRP on three detectors", discrimination),
        ("weighted and compact LRP agree", component_equivalence),
        ("LRP is scaled DASA", dasa_reduction),
        ("1 - IoU triangle inequality", triangle_inequality),
        ("metric-mode symmetry", metric_symmetry),
        ("cumulative AP equals per-threshold AP", ap_oracle),
        ("oLRP optimality and plateaus", olrp_optimality),
        ("invariance to monotone score maps", score_order_invariance),
        ("Hungarian optimality", hungarian_optimality),
        ("Bayes update properties", bayes_properties),
        ("per-class thresholds on a stream", class_specific_thresholds),
        ("validation-scale end-to-end run", dataset_scale_run),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

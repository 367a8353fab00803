//! Acceptance criteria 1-11. Runs as a plain binary so that every criterion
//! prints its PASS/FAIL line even when the suite passes.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smvi::cli::template;
use smvi::diagnose::{parametric_sweep, sweep, verdict, SweepConfig, SweepTrend, ThresholdPolicy, VerdictTag};
use smvi::exprlang::parse;
use smvi::metrics::{diameter, hausdorff, hausdorff_sets, kuratowski_est, ArgPair};
use smvi::model::{problem_from_str, reduce_sfp, reduce_smp, ConstraintSet, LinearOperator, MultiMap};
use smvi::residual::{dist_to_set, Evaluator, GridSpec};
use smvi::scalar::dist;
use smvi::scan::{scan_eps_set, solution_clusters, ScanRegion};
use smvi::{PointCloud, SplitProblem, TAU0};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn example(n: u8) -> SplitProblem {
    problem_from_str(&template(&format!("example{n}")).unwrap()).unwrap()
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn column(t: &SweepTrend<f64>, f: impl Fn(&smvi::diagnose::SweepRow<f64>) -> Option<f64>) -> Option<Vec<f64>> {
    t.rows.iter().map(f).collect()
}

fn default_verdict(t: &SweepTrend<f64>) -> VerdictTag {
    verdict(t, &ThresholdPolicy::default().resolve(t)).tag
}

const SOLUTIONS2: [[f64; 2]; 2] = [[-1.0, -1.0], [1.0, 1.0]];

fn criterion1() -> Outcome {
    let p = example(1);
    let grid = GridSpec::for_problem(&p);
    let region = ScanRegion::cube(-0.5, 1.5, 1, 1, 0.01).unwrap();
    let mut notes = Vec::new();
    let mut pass = true;
    for eps in [0.2, 0.1, 0.05] {
        let start = Instant::now();
        let s = scan_eps_set(&p, eps, &region, grid, None, None).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let outside = s
            .cloud
            .points()
            .iter()
            .filter(|q| q.iter().any(|&v| v < -eps || v > 1.0 + eps))
            .count();
        pass &= outside == 0 && !s.cloud.is_empty() && secs < 30.0;
        notes.push(format!("eps={eps}: {} members, {outside} outside, {secs:.2}s", s.cloud.len()));
    }
    outcome(pass, notes.join("; "))
}

fn criterion2() -> Outcome {
    let t = sweep(&example(1), &SweepConfig::new(SweepConfig::default_schedule())).unwrap();
    let diams = column(&t, |r| r.diam).unwrap_or_default();
    let last = t.rows.last().unwrap();
    let rep_err = last.clusters.first().map_or(f64::INFINITY, |c| dist(&c.representative, &[0.0, 0.0]));
    let tag = default_verdict(&t);
    let pass = diams.len() == 4
        && strictly_decreasing(&diams)
        && last.clusters.len() == 1
        && rep_err <= 0.03
        && tag == VerdictTag::EvidenceLPWellPosed;
    outcome(
        pass,
        format!("diam {diams:?}, clusters {}, representative error {rep_err}, {tag}", last.clusters.len()),
    )
}

/// Both reference solutions pass at every tolerance, two clusters near them
/// at gap 0.5, diameter never below 2√2 - 0.1.
fn two_solution_checks(p: &SplitProblem, t: &SweepTrend<f64>, param: Option<&[f64]>, delta: Option<f64>) -> (bool, String) {
    let ev = Evaluator::new(p, GridSpec::for_problem(p));
    let tolerances = [0.0, TAU0, 1e-6, 1e-3, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0];
    let mut members_ok = true;
    for s in SOLUTIONS2 {
        for eps in tolerances {
            members_ok &= ev.is_member(&s[..1], &s[1..], eps, param, delta).unwrap().member;
        }
    }
    let last = t.rows.last().unwrap();
    let reps: Vec<&Vec<f64>> = last.clusters.iter().map(|c| &c.representative).collect();
    let reps_ok = reps.len() == 2
        && SOLUTIONS2
            .iter()
            .all(|s| reps.iter().any(|r| dist(r, s) <= 0.03));
    let diams = column(t, |r| r.diam).unwrap_or_default();
    let floor = 2.0 * 2f64.sqrt() - 0.1;
    let diam_ok = diams.len() == t.rows.len() && diams.iter().all(|&d| d >= floor);
    let tag = default_verdict(t);
    let pass = members_ok && reps_ok && diam_ok && tag == VerdictTag::EvidenceGeneralizedLPWellPosed;
    (
        pass,
        format!(
            "members at all eps: {members_ok}, clusters {}, diam {diams:?}, {tag}",
            reps.len()
        ),
    )
}

fn criterion3() -> Outcome {
    let p = example(2);
    let mut cfg = SweepConfig::new(SweepConfig::default_schedule());
    cfg.gap = Some(0.5);
    let t = sweep(&p, &cfg).unwrap();
    let (pass, detail) = two_solution_checks(&p, &t, None, None);
    outcome(pass, detail)
}

fn criterion4() -> Outcome {
    let sched = SweepConfig::<f64>::default_schedule();
    let mut notes = Vec::new();
    let mut pass = true;
    for pv in [0.0, 0.5] {
        let p3 = example(3);
        let (t, ir) = parametric_sweep(&p3, &[pv], &sched, &sched, &SweepConfig::new(sched.clone())).unwrap();
        let diams = column(&t, |r| r.diam).unwrap_or_default();
        let last = t.rows.last().unwrap();
        let rep_ok = last.clusters.len() == 1 && dist(&last.clusters[0].representative, &[0.0, 0.0]) <= 0.03;
        let tag = default_verdict(&t);
        let ok3 = strictly_decreasing(&diams) && rep_ok && ir.nonincreasing && tag == VerdictTag::EvidenceLPWellPosed;
        notes.push(format!("ex3 p={pv}: diam {diams:?}, single cluster at origin {rep_ok}, {tag}"));

        let p4 = example(4);
        let mut cfg = SweepConfig::new(sched.clone());
        cfg.gap = Some(0.5);
        let (t, ir) = parametric_sweep(&p4, &[pv], &sched, &sched, &cfg).unwrap();
        let mut ok4 = ir.nonincreasing;
        for (row, delta) in t.rows.iter().zip(&sched) {
            let (ok, _) = two_solution_checks(&p4, &t, Some(&[pv]), Some(*delta));
            ok4 &= ok && row.count > 0;
        }
        notes.push(format!(
            "ex4 p={pv}: clusters {}, H-to-final {:?}, {}",
            t.rows.last().unwrap().clusters.len(),
            ir.hausdorff_to_final,
            default_verdict(&t)
        ));
        pass &= ok3 && ok4;
    }
    outcome(pass, notes.join("; "))
}

fn criterion5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut violations = 0;
    let mut checked = 0;
    for n in 1..=4u8 {
        let p = example(n);
        let ev = Evaluator::new(&p, GridSpec::for_problem(&p));
        for _ in 0..1000 {
            let z = [rng.gen_range(-1.5..1.5)];
            let w = [rng.gen_range(-1.5..1.5)];
            let e1: f64 = if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..0.5) };
            let e2 = e1 + rng.gen_range(0.0..0.5);
            let (param, delta) = if p.k > 0 {
                (Some(vec![rng.gen_range(-0.5..1.0)]), Some(rng.gen_range(0.0..0.3)))
            } else {
                (None, None)
            };
            let a = ev.is_member(&z, &w, e1, param.as_deref(), delta).unwrap().member;
            let b = ev.is_member(&z, &w, e2, param.as_deref(), delta).unwrap().member;
            if a && !b {
                violations += 1;
            }
            checked += 1;
        }
    }
    outcome(violations == 0, format!("{checked} triples, {violations} violations"))
}

fn random_cloud(rng: &mut ChaCha8Rng, dim: usize) -> PointCloud {
    let n = rng.gen_range(1..40);
    PointCloud::new(dim, (0..n).map(|_| (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect()).unwrap()
}

fn criterion6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures = Vec::new();
    for trial in 0..100 {
        let dim = rng.gen_range(1..=3);
        let (a, b, c) = (random_cloud(&mut rng, dim), random_cloud(&mut rng, dim), random_cloud(&mut rng, dim));
        let ab = hausdorff(&a, &b).unwrap();
        if ab != hausdorff(&b, &a).unwrap() {
            failures.push(format!("symmetry #{trial}"));
        }
        if hausdorff(&a, &a).unwrap() > 1e-12 {
            failures.push(format!("identity #{trial}"));
        }
        if hausdorff(&a, &c).unwrap() > ab + hausdorff(&b, &c).unwrap() + 1e-9 {
            failures.push(format!("triangle #{trial}"));
        }
        if kuratowski_est(&a, 1).unwrap() != diameter(&a).unwrap() {
            failures.push(format!("k=1 #{trial}"));
        }
        if kuratowski_est(&a, a.len()).unwrap() != 0.0 || kuratowski_est(&a, a.len() + 3).unwrap() != 0.0 {
            failures.push(format!("k>=|P| #{trial}"));
        }
    }
    outcome(failures.is_empty(), format!("100 clouds, failures {failures:?}"))
}

fn maps_of_examples() -> Vec<(String, MultiMap, usize)> {
    (1..=4u8)
        .flat_map(|n| {
            let p = example(n);
            [(format!("ex{n} B1"), p.b1.clone(), p.k), (format!("ex{n} B2"), p.b2.clone(), p.k)]
        })
        .collect()
}

fn random_pair(rng: &mut ChaCha8Rng, k: usize) -> ArgPair<f64> {
    let mut r = |len: usize| (0..len).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<f64>>();
    ArgPair {
        x: r(1),
        y: r(1),
        p: r(k),
        q: r(k),
    }
}

fn criterion7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut notes = Vec::new();
    for (name, map, k) in maps_of_examples() {
        let pairs: Vec<ArgPair<f64>> = (0..1000).map(|_| random_pair(&mut rng, k)).collect();
        let r = smvi::metrics::hcont_ratio(&map, &pairs).unwrap();
        worst = worst.max(r.ratio);
        notes.push(format!("{name} {:.6}", r.ratio));
    }
    outcome(worst <= 1.0 + 1e-9, format!("max ratio {worst}: {}", notes.join(", ")))
}

fn criterion8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut violations = [0usize; 2];
    for _ in 0..500 {
        let dim = rng.gen_range(1..=3);
        let lo: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..1.0)).collect();
        let hi: Vec<f64> = lo.iter().map(|l| l + rng.gen_range(0.0..2.0)).collect();
        let center: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let sets = [
            ConstraintSet::new_box(lo, hi).unwrap(),
            ConstraintSet::new_ball(center, rng.gen_range(0.0..2.0)).unwrap(),
        ];
        let a: Vec<f64> = (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let b: Vec<f64> = (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let t: f64 = rng.gen_range(0.0..=1.0);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        for (i, s) in sets.iter().enumerate() {
            if dist_to_set(&mid, s) > t * dist_to_set(&a, s) + (1.0 - t) * dist_to_set(&b, s) + 1e-9 {
                violations[i] += 1;
            }
        }
    }
    outcome(
        violations == [0, 0],
        format!("500 triples per kind, violations box {} ball {}", violations[0], violations[1]),
    )
}

fn criterion9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut violations = 0;
    let mut checked = 0;
    let maps = maps_of_examples();
    for i in 0..500 {
        let (_, map, k) = &maps[i % maps.len()];
        let pair = random_pair(&mut rng, *k);
        let bx = map.eval(&pair.x, &pair.p).unwrap();
        let by = map.eval(&pair.y, &pair.q).unwrap();
        let h = hausdorff_sets(&bx, &by);
        let u = &bx[rng.gen_range(0..bx.len())];
        let nearest = by.iter().map(|v| dist(u, v)).fold(f64::INFINITY, f64::min);
        if nearest > h + 1e-12 {
            violations += 1;
        }
        checked += 1;
    }
    outcome(violations == 0, format!("{checked} triples, {violations} violations"))
}

fn criterion10() -> Outcome {
    let unit = || ConstraintSet::interval(0.0, 1.0, 1);
    let mut mismatches = 0;
    let mut checked = 0;
    for a in [1.0, 2.0] {
        let p = reduce_sfp(unit(), unit(), LinearOperator::from_rows(vec![vec![a]]).unwrap()).unwrap();
        let ev = Evaluator::new(&p, GridSpec::for_problem(&p));
        let gap = |v: f64| (0.0 - v).max(v - 1.0).max(0.0);
        for eps in [0.0f64, 0.05, 0.1, 0.3] {
            for i in 0..50 {
                for j in 0..50 {
                    let z = -0.5 + 2.0 * i as f64 / 49.0;
                    let w = -0.5 + 2.0 * j as f64 / 49.0;
                    let expected = gap(z).max(gap(w)).max((w - a * z).abs()) <= eps.max(TAU0);
                    let got = ev.is_member(&[z], &[w], eps, None, None).unwrap().member;
                    mismatches += usize::from(expected != got);
                    checked += 1;
                }
            }
        }
    }

    let mut smp_notes = Vec::new();
    let mut smp_ok = true;
    for (lo, hi) in [(-1.0, 1.0), (0.3, 1.2)] {
        let set = || ConstraintSet::interval(lo, hi, 1);
        let p = reduce_smp(set(), set(), LinearOperator::identity(1), parse("x1^2").unwrap(), parse("y1^2").unwrap()).unwrap();
        let step = 0.01;
        let region = ScanRegion::around(&p, 0.0, step).unwrap();
        let s = scan_eps_set(&p, 0.0, &region, GridSpec::for_problem(&p), None, None).unwrap();
        let clusters = solution_clusters(&s.cloud, 0.25, Some(&s.levels)).unwrap();
        // brute-force minimizer of x^2 over the lattice points of [lo, hi]
        let brute = region
            .axis(lo, hi)
            .into_iter()
            .fold((f64::INFINITY, 0.0), |best, x| if x * x < best.0 { (x * x, x) } else { best })
            .1;
        let err = clusters
            .first()
            .map_or(f64::INFINITY, |c| dist(&c.representative, &[brute, brute]));
        smp_ok &= clusters.len() == 1 && err <= step + 1e-12;
        smp_notes.push(format!("[{lo},{hi}] minimizer {brute}, error {err}"));
    }
    outcome(
        mismatches == 0 && smp_ok,
        format!("SFP {checked} checks, {mismatches} mismatches; SMP {}", smp_notes.join(", ")),
    )
}

fn criterion11() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let spec = Path::new(env!("CARGO_MANIFEST_DIR")).join("problems").join("example1.smvi");
    let mut reports = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("r{i}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_smvi"))
            .args(["sweep", spec.to_str().unwrap(), "--report", out.to_str().unwrap()])
            .output()
            .unwrap()
            .status;
        if !status.success() {
            return outcome(false, format!("sweep exited with {status}"));
        }
        reports.push(std::fs::read(&out).unwrap());
    }
    outcome(
        reports[0] == reports[1],
        format!("two reports of {} and {} bytes, identical: {}", reports[0].len(), reports[1].len(), reports[0] == reports[1]),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("Example 1 containment in the inflated box", criterion1),
        ("Example 1 sweep: shrinking diameter, one cluster at the origin", criterion2),
        ("Example 2 sweep: two solutions, generalized verdict", criterion3),
        ("Examples 3-4 parametric sweeps", criterion4),
        ("membership monotone in eps", criterion5),
        ("metric axioms and surrogate bounds", criterion6),
        ("H-continuity ratios of the example maps", criterion7),
        ("distance function convexity", criterion8),
        ("selection property on finite-valued maps", criterion9),
        ("SFP and SMP reductions", criterion10),
        ("byte-identical sweep reports", criterion11),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        println!(
            "criterion {:>2} {} {name} ({:.1}s): {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        criteria.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

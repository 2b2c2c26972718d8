//! Acceptance run: one PASS/FAIL line per criterion. The criteria share one
//! test so that the heavy eliminations never run concurrently.

use std::time::{Duration, Instant};

use palatini::chow::{chern_degree, palatini_degree};
use palatini::incidence::{
    coordinate_identity, fiber, fiber_of_x, random_slice, sample_y, scroll_line, slice_census_over_extensions,
    IncidenceError, SLICE_LINE_BUDGET,
};
use palatini::scroll::{genericity_check, instance_random, pf_det_check, planted, PalatiniInstance};
use palatini::tangent::{expected_dim, tangent_dimension, TangentReport};
use palatini::{Field, Matrix, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const C1_LIMIT: Duration = Duration::from_secs(1);
const C2_LIMIT: Duration = Duration::from_secs(10);
const C3_LIMIT: Duration = Duration::from_secs(60);
const C4_LIMIT: Duration = Duration::from_secs(60);
const C5_CASE_LIMIT: Duration = Duration::from_secs(15 * 60);
const C6_LIMIT: Duration = Duration::from_secs(5 * 60);

const C3_POINTS: usize = 100;
const C4_FIBERS: usize = 20;
const C6_SLICES: usize = 10;
const C6_REQUIRED: usize = 8;
const C6_MAX_E: usize = 6;
/// Extra slice seeds allowed for slices shown to be non-transverse to X
/// (tangent at a point or containing a line) or too large to enumerate.
/// Over F_5 roughly 40% of random slices are non-transverse.
const C6_RETRIES: usize = 20;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(n: usize, title: &str, start: Instant, out: Outcome) -> bool {
    println!(
        "criterion {n} [{title}]: {} ({:.1}s) {}",
        if out.pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64(),
        out.detail
    );
    out.pass
}

fn degree_cross_oracle() -> Outcome {
    let start = Instant::now();
    let mut pairs = 0;
    let mut mismatches = Vec::new();
    for k in 2..=10 {
        for m in 2..=k + 1 {
            pairs += 1;
            if palatini_degree(m, k).unwrap() != chern_degree(m, k).unwrap() {
                mismatches.push((m, k));
            }
        }
    }
    let anchors = palatini_degree(3, 3).unwrap() == 6.into()
        && palatini_degree(4, 3).unwrap() == 7.into()
        && (1..=10).all(|k| palatini_degree(1, k).unwrap() == 0.into());
    let fast = start.elapsed() < C1_LIMIT;
    Outcome {
        pass: mismatches.is_empty() && anchors && fast,
        detail: format!("{pairs} pairs, mismatches {mismatches:?}, anchors {anchors}, under 1s {fast}"),
    }
}

fn random_skew(f: &Field, n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut a = Matrix::zeros(f, n, n);
    for i in 1..n {
        for j in 0..i {
            let x = if f.is_finite() {
                f.random(rng)
            } else {
                let den = f.from_i64(rng.random_range(1..=9));
                f.div(&f.random(rng), &den).unwrap()
            };
            a.set(j, i, f.neg(&x));
            a.set(i, j, x);
        }
    }
    a
}

fn pfaffian_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (fp, fq) = (Field::prime(1009).unwrap(), Field::rational());
    let classes = [(&fp, 4), (&fp, 6), (&fp, 8), (&fq, 4), (&fq, 6)];
    let mut matrices = 0;
    let mut bad = 0;
    for (f, n) in classes {
        for _ in 0..40 {
            let a = random_skew(f, n, &mut rng);
            let pf = a.pfaffian().unwrap();
            matrices += 1;
            if f.mul(&pf, &pf) != a.det().unwrap() {
                bad += 1;
            }
        }
    }
    let mut symbolic = Vec::new();
    for (i, (m, k)) in [(3, 3), (3, 4), (4, 3), (4, 4)].into_iter().enumerate() {
        let inst = instance_random(m, k, &fp, 30 + i as u64).unwrap();
        let c = pf_det_check(&inst, 50, i as u64);
        symbolic.push(((m, k), c.checked, c.failures, inst.pf().degree() == Some(k as u32)));
    }
    let sym_ok = symbolic.iter().all(|&(_, checked, failures, deg)| checked >= 50 && failures == 0 && deg);
    let fast = start.elapsed() < C2_LIMIT;
    Outcome {
        pass: bad == 0 && matrices == 200 && sym_ok && fast,
        detail: format!("{matrices} numeric ({bad} failures); symbolic (case, points, failures, degree ok) {symbolic:?}; under 10s {fast}"),
    }
}

/// Sampled Y points with their fibers, for criteria 3 and 4.
fn incidence_cases() -> Vec<(PalatiniInstance, Vec<Vec<Scalar>>)> {
    let f = Field::prime(1009).unwrap();
    [(3, 4), (4, 3), (4, 4), (5, 4)]
        .into_iter()
        .enumerate()
        .map(|(i, (m, k))| {
            let inst = instance_random(m, k, &f, 40 + i as u64).unwrap();
            let pts = sample_y(&inst, 1, C3_POINTS, i as u64).map(|s| s.points).unwrap_or_default();
            (inst, pts)
        })
        .collect()
}

fn incidence_correspondence(cases: &[(PalatiniInstance, Vec<Vec<Scalar>>)], start: Instant) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut pass = true;
    let mut parts = Vec::new();
    for (inst, pts) in cases {
        let f = inst.field();
        let (mut corank2, mut coord, mut trip) = (0, 0, 0);
        for u in pts {
            let ipt = fiber(inst, u).unwrap();
            if ipt.corank() != 2 {
                continue;
            }
            corank2 += 1;
            let t = f.random(&mut rng);
            let v: Vec<Scalar> =
                ipt.kernel.column(0).iter().zip(ipt.kernel.column(1)).map(|(a, b)| f.add(a, &f.mul(&t, &b))).collect();
            coord += coordinate_identity(inst, &v, u) as usize;
            trip += fiber_of_x(inst, &v).is_ok_and(|back| &back == u) as usize;
        }
        let n = pts.len();
        pass &= n == C3_POINTS && corank2 == n && coord == n && trip == n;
        parts.push(format!(
            "({},{}) corank2 {corank2}/{n} identity {coord}/{n} round-trip {trip}/{n}",
            inst.m(),
            inst.k()
        ));
    }
    let fast = start.elapsed() < C3_LIMIT;
    Outcome { pass: pass && fast, detail: format!("{}; under 60s {fast}", parts.join(", ")) }
}

fn scroll_lines(cases: &[(PalatiniInstance, Vec<Vec<Scalar>>)]) -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (inst, pts) in cases {
        let mut good = 0;
        let mut checked = 0;
        for u in pts.iter().take(C4_FIBERS) {
            checked += 1;
            let ipt = fiber(inst, u).unwrap();
            if scroll_line(inst, &ipt).is_ok_and(|l| l.all_pass() && l.points.len() > inst.k()) {
                good += 1;
            }
        }
        pass &= checked == C4_FIBERS && good == checked;
        parts.push(format!("({},{}) {good}/{checked}", inst.m(), inst.k()));
    }
    let fast = start.elapsed() < C4_LIMIT;
    Outcome { pass: pass && fast, detail: format!("{}; under 60s {fast}", parts.join(", ")) }
}

fn tangent_run(inst: &PalatiniInstance) -> (TangentReport, usize) {
    let cap = inst.m() + 3;
    let rep = tangent_dimension(inst, cap).unwrap();
    if rep.stabilized {
        return (rep, cap);
    }
    (tangent_dimension(inst, cap + 1).unwrap(), cap + 1)
}

fn tangent_dimensions() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (m, k, want) in [(4, 3, 44), (4, 4, 96), (3, 4, 78), (5, 4, 115)] {
        let case_start = Instant::now();
        let mut dims = Vec::new();
        let mut ok = expected_dim(m, k) == Some(want);
        for p in [1009, 2003] {
            let f = Field::prime(p).unwrap();
            for seed in [1, 2] {
                let run_start = Instant::now();
                let inst = instance_random(m, k, &f, seed).unwrap();
                let (rep, cap) = tangent_run(&inst);
                ok &= rep.stabilized && rep.computed_dim as u64 == want && rep.certified;
                dims.push(rep.computed_dim);
                println!(
                    "  ({m},{k}) p={p} seed={seed}: dim {} at cap {cap}, route {:?}, witness {:?}, stabilized {} ({:.1}s)",
                    rep.computed_dim,
                    rep.route,
                    rep.witness_rank,
                    rep.stabilized,
                    run_start.elapsed().as_secs_f64()
                );
            }
        }
        let fast = case_start.elapsed() < C5_CASE_LIMIT;
        pass &= ok && fast;
        parts.push(format!("({m},{k}) {dims:?} want {want}"));
    }
    Outcome { pass, detail: parts.join(", ") }
}

fn slice_point_counts() -> Outcome {
    let start = Instant::now();
    let f5 = Field::prime(5).unwrap();
    let inst = instance_random(3, 3, &f5, 6).unwrap();
    let mut seed = 0;
    let mut redrawn = Vec::new();
    let mut reached = 0;
    let mut within = true;
    let mut rows = Vec::new();
    while rows.len() < C6_SLICES {
        let h = random_slice(&inst, seed);
        seed += 1;
        match slice_census_over_extensions(&inst, &h, C6_MAX_E, SLICE_LINE_BUDGET) {
            Ok(c) if c.transverse => {
                within &= c.counts.iter().all(|&n| n <= 6);
                reached += c.counts.contains(&6) as usize;
                rows.push(c.counts);
            }
            Ok(c) if redrawn.len() < C6_RETRIES => redrawn.push(format!("{:?}", c.counts)),
            Err(IncidenceError::EnumerationTooLarge { .. }) if redrawn.len() < C6_RETRIES => {
                redrawn.push("too large".into())
            }
            Ok(_) => return Outcome { pass: false, detail: format!("retry budget {C6_RETRIES} exhausted") },
            Err(e) => return Outcome { pass: false, detail: format!("slice {seed}: {e}") },
        }
    }
    let fast = start.elapsed() < C6_LIMIT;
    Outcome {
        pass: within && reached >= C6_REQUIRED && fast,
        detail: format!(
            "counts for e=1..6 {rows:?}; reach 6 in {reached}/{C6_SLICES}; {} non-transverse slices redrawn {redrawn:?}; under 5min {fast}",
            redrawn.len()
        ),
    }
}

fn negative_controls() -> Outcome {
    let f = Field::prime(1009).unwrap();
    let ck = planted::common_kernel(4, 3, &f, 1).unwrap();
    let prop = planted::proportional(4, 3, &f, 1).unwrap();
    let iso = planted::isotropic(4, 3, &f, 1).unwrap();
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, inst, want) in [
        ("common kernel", &ck, IncidenceError::DegeneratePfaffian),
        ("proportional", &prop, IncidenceError::NonInjectiveSystem),
        ("pf zero", &iso, IncidenceError::DegeneratePfaffian),
    ] {
        let rep = genericity_check(inst, 200, 0);
        let again = genericity_check(inst, 200, 0);
        let err = sample_y(inst, 1, 10, 0).err();
        let ok = !rep.passed() && rep == again && err.as_ref() == Some(&want);
        pass &= ok;
        parts.push(format!("{name}: flagged {} error {err:?}", !rep.passed()));
    }
    pass &= !ck.system().f_phi_injective() && !prop.system().phi_injective() && iso.pf_is_zero();
    Outcome { pass, detail: parts.join(", ") }
}

#[test]
fn acceptance() {
    let mut results = Vec::new();
    let t = Instant::now();
    results.push(report(1, "degree cross-oracle", t, degree_cross_oracle()));
    let t = Instant::now();
    results.push(report(2, "pfaffian identity", t, pfaffian_identity()));
    let t = Instant::now();
    let cases = incidence_cases();
    results.push(report(3, "incidence correspondence", t, incidence_correspondence(&cases, t)));
    let t = Instant::now();
    results.push(report(4, "scroll-line minor vanishing", t, scroll_lines(&cases)));
    let t = Instant::now();
    results.push(report(5, "Hilbert tangent dimensions", t, tangent_dimensions()));
    let t = Instant::now();
    results.push(report(6, "slice point counts", t, slice_point_counts()));
    let t = Instant::now();
    results.push(report(7, "negative controls", t, negative_controls()));
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    assert!(results.iter().all(|&p| p));
}

//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use matsubara::corpus::corpus;
use matsubara::engine::{
    annihilator_check, apply_operator, matsubara_integral, matsubara_sum, operator_full, operator_reduced,
    Hierarchy, SumMethod,
};
use matsubara::fixtures;
use matsubara::graph::{LineId, LineSubset, MatsubaraGraph};
use matsubara::oracles::{
    check_gaudin_identity, nbe, random_constrained_tuple, random_point, verify_integral, verify_sum,
};
use matsubara::symbolic::{rational, Expression, LinearForm, Point, Term};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn id(g: &MatsubaraGraph) -> Hierarchy {
    Hierarchy::identity(g)
}

fn form(n: &[(usize, i64)], q: &[(u32, i64)]) -> LinearForm {
    LinearForm::new(n.iter().copied(), q.iter().map(|&(l, c)| (LineId(l), c))).unwrap()
}

/// `coeff · 2π/(2q1·2q2) · Π nbe(kernels) / denom` on G2.
fn g2_term(coeff: i64, kernels: &[u32], denom: LinearForm) -> Term {
    Term {
        coeff: rational(coeff, 4),
        two_pi_pow: 1,
        q_exp: BTreeMap::from([(LineId(1), -1), (LineId(2), -1)]),
        kernels: kernels.iter().map(|&l| LineId(l)).collect(),
        denoms: vec![denom],
    }
}

fn c1_g2_integral() -> Outcome {
    let g = fixtures::g2();
    let t = Instant::now();
    let i = matsubara_integral(&g, &id(&g)).map_err(err)?;
    let symbolic_time = t.elapsed();
    let printed = Expression::from_terms([
        g2_term(1, &[], form(&[(0, 1)], &[(1, 1), (2, 1)])),
        g2_term(-1, &[], form(&[(0, 1)], &[(1, -1), (2, -1)])),
    ]);
    ensure(i == printed.reduced(), || format!("canonical mismatch: {} terms", i.len()))?;
    // The rationalized form π(q1+q2)/(q1 q2 (N²+(q1+q2)²)).
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..20 {
        let p = random_point(&g, &mut rng);
        let (q1, q2, n) = (p.q[&LineId(1)], p.q[&LineId(2)], p.n[0] as f64);
        let closed = PI * (q1 + q2) / (q1 * q2 * (n * n + (q1 + q2).powi(2)));
        let v = i.eval(&p).map_err(err)?;
        ensure((v.re - closed).abs() <= 1e-14 * closed && v.im.abs() <= 1e-14 * closed, || {
            format!("rationalized form differs at {p:?}")
        })?;
    }
    let reports = verify_integral(&g, 20, 1e-9, 1).map_err(err)?;
    let worst = reports.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    ensure(worst <= 1e-9, || format!("quadrature rel error {worst:e} > 1e-9"))?;
    ensure(symbolic_time < Duration::from_secs(1), || format!("took {symbolic_time:?}"))?;
    Ok(format!(
        "2 canonical terms; 20 quadrature trials, max rel error {worst:.1e}; symbolic {:.1} ms",
        symbolic_time.as_secs_f64() * 1e3
    ))
}

fn c2_g2_sum() -> Outcome {
    let g = fixtures::g2();
    let t = Instant::now();
    let i = matsubara_integral(&g, &id(&g)).map_err(err)?;
    let s = apply_operator(&operator_reduced(&g).map_err(err)?, &i).map_err(err)?;
    // [(1+n1+n2)/(iN+q1+q2) + (n1-n2)/(iN-q1+q2) - (n1-n2)/(iN+q1-q2) - (1+n1+n2)/(iN-q1-q2)]
    let pp = form(&[(0, 1)], &[(1, 1), (2, 1)]);
    let mp = form(&[(0, 1)], &[(1, -1), (2, 1)]);
    let pm = form(&[(0, 1)], &[(1, 1), (2, -1)]);
    let mm = form(&[(0, 1)], &[(1, -1), (2, -1)]);
    let mut printed = Vec::new();
    for (sign, d) in [(1, &pp), (-1, &mm)] {
        printed.push(g2_term(sign, &[], d.clone()));
        printed.push(g2_term(sign, &[1], d.clone()));
        printed.push(g2_term(sign, &[2], d.clone()));
    }
    for (sign, d) in [(1, &mp), (-1, &pm)] {
        printed.push(g2_term(sign, &[1], d.clone()));
        printed.push(g2_term(-sign, &[2], d.clone()));
    }
    let printed = Expression::from_terms(printed).reduced();
    ensure(s == printed, || format!("canonical mismatch: {} vs {} terms", s.len(), printed.len()))?;
    let reports = verify_sum(&g, 20, 10_000, 1e-6, 2).map_err(err)?;
    let worst = reports.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    ensure(worst <= 1e-6, || format!("brute-force rel error {worst:e} > 1e-6"))?;
    let elapsed = t.elapsed();
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "matches the printed four-fraction form ({} canonical terms); 20 brute-force trials at M=1e4, max rel error {worst:.1e}",
        s.len()
    ))
}

fn subsets(list: &[&[u32]]) -> BTreeSet<LineSubset> {
    list.iter().map(|s| LineSubset::new(s.iter().copied())).collect()
}

fn c3_counts() -> Outcome {
    let (g2, g3, g4) = (fixtures::g2(), fixtures::g3(), fixtures::g4());
    let trees = [g2.spanning_trees().len(), g3.spanning_trees().len(), g4.spanning_trees().len()];
    ensure(trees == [2, 3, 8], || format!("tree counts {trees:?}"))?;
    let ops: Vec<BTreeSet<LineSubset>> = [&g2, &g3, &g4]
        .iter()
        .map(|g| operator_reduced(g).map(|o| o.subsets.into_iter().collect()))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let expected = [
        subsets(&[&[], &[1], &[2]]),
        subsets(&[&[], &[1], &[2], &[3], &[1, 2], &[1, 3], &[2, 3]]),
        subsets(&[
            &[], &[1], &[2], &[3], &[4], &[5],
            &[2, 4], &[2, 3], &[1, 3], &[1, 4], &[4, 5], &[3, 5], &[2, 5], &[1, 5],
        ]),
    ];
    for (k, (got, want)) in ops.iter().zip(&expected).enumerate() {
        ensure(got == want, || format!("operator of G{} is {got:?}", k + 2))?;
    }
    Ok(format!(
        "trees 2/3/8; operator sizes {}/{}/{}; {{1,2}} and {{3,4}} absent from G4",
        ops[0].len(),
        ops[1].len(),
        ops[2].len()
    ))
}

/// The printed G4 integral, evaluated term by term in complex arithmetic.
fn printed_g4_integral(q: [f64; 5], na: f64, nb: f64, nc: f64) -> Complex64 {
    let [q1, q2, q3, q4, q5] = q;
    let d = |n: f64, s: f64, qs: f64| Complex64::new(s * qs, n);
    let a = |s| d(na, s, q1 + q2);
    let b = |s| d(na + nb, s, q2 + q3 + q5);
    let c = |s| d(na + nb + nc, s, q2 + q4 + q5);
    let dd = |s| d(nb, s, q1 + q3 + q5);
    let e = |s| d(nb + nc, s, q1 + q4 + q5);
    let f = |s| d(nc, s, q3 + q4);
    let (p, m) = (1.0, -1.0);
    let terms = [
        (p, a(p) * b(p) * c(p)),
        (p, dd(p) * b(p) * c(p)),
        (m, a(m) * dd(p) * e(p)),
        (p, dd(p) * e(p) * c(p)),
        (m, a(m) * f(m) * c(m)),
        (p, a(p) * f(m) * e(m)),
        (m, f(m) * e(m) * c(m)),
        (m, a(p) * f(m) * b(p)),
        (p, a(m) * f(m) * dd(p)),
        (m, f(m) * dd(p) * b(p)),
        (p, a(m) * f(p) * b(m)),
        (m, a(p) * f(p) * dd(m)),
        (p, f(p) * dd(m) * b(m)),
        (p, a(p) * f(p) * c(p)),
        (m, a(m) * f(p) * e(p)),
        (p, f(p) * e(p) * c(p)),
        (m, a(m) * b(m) * c(m)),
        (m, dd(m) * b(m) * c(m)),
        (p, a(p) * dd(m) * e(m)),
        (m, dd(m) * e(m) * c(m)),
    ];
    let bracket: Complex64 = terms.iter().map(|(s, den)| *s / den).sum();
    bracket * (2.0 * PI).powi(2) / q.iter().map(|x| 2.0 * x).product::<f64>()
}

fn c4_g4_integral() -> Outcome {
    let g = fixtures::g4();
    let i = matsubara_integral(&g, &id(&g)).map_err(err)?;
    ensure(i.len() == 20, || format!("{} canonical terms", i.len()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < 10 {
        let p = random_point(&g, &mut rng);
        if i.min_denominator_modulus(&p).map_err(err)?.is_some_and(|m| m < 1e-6) {
            continue;
        }
        checked += 1;
        let q: Vec<f64> = (1..=5).map(|l| p.q[&LineId(l)]).collect();
        let want = printed_g4_integral(q.try_into().unwrap(), p.n[0] as f64, p.n[1] as f64, p.n[2] as f64);
        let got = i.eval(&p).map_err(err)?;
        worst = worst.max((got - want).norm() / want.norm());
    }
    ensure(worst <= 1e-10, || format!("max rel deviation {worst:e} from the printed form"))?;
    Ok(format!("20 canonical terms; 10 points, max rel deviation {worst:.1e}"))
}

fn c5_sums() -> Outcome {
    let t = Instant::now();
    let mut detail = Vec::new();
    for (name, g, cutoff) in [("G3", fixtures::g3(), 500), ("G4", fixtures::g4(), 200)] {
        let reports = verify_sum(&g, 10, cutoff, 1e-3, 5).map_err(err)?;
        let failed = reports.iter().filter(|r| !r.pass).count();
        let worst = reports.iter().map(|r| r.rel_error).fold(0.0, f64::max);
        ensure(failed == 0, || format!("{name}: {failed} of {} trials failed", reports.len()))?;
        detail.push(format!("{name} M={cutoff} max rel error {worst:.1e}"));
    }
    let elapsed = t.elapsed();
    ensure(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}"))?;
    Ok(format!("{}; {:.1} s", detail.join(", "), elapsed.as_secs_f64()))
}

fn c6_equivalence() -> Outcome {
    let mut graphs: Vec<MatsubaraGraph> = fixtures::all().into_iter().map(|(_, g)| g).collect();
    graphs.extend(corpus(2024, 50, 5, 7));
    for (k, g) in graphs.iter().enumerate() {
        let h = id(g);
        let i = matsubara_integral(g, &h).map_err(err)?;
        let reduced = apply_operator(&operator_reduced(g).map_err(err)?, &i).map_err(err)?;
        let full = apply_operator(&operator_full(g).map_err(err)?, &i).map_err(err)?;
        ensure(full == reduced, || format!("graph {k}: full and reduced operators differ"))?;
        let direct = matsubara_sum(g, SumMethod::Direct, &h).map_err(err)?;
        ensure(direct == reduced, || format!("graph {k}: direct sum differs from operator sum"))?;
    }
    Ok(format!("{} graphs: operator == direct, full == reduced", graphs.len()))
}

fn c7_annihilation() -> Outcome {
    let mut count = 0;
    for (name, g) in fixtures::all() {
        let i = matsubara_integral(&g, &id(&g)).map_err(err)?;
        for s in g.all_subsets().map_err(err)? {
            if s.len() <= 3 && g.is_cutset(&s).map_err(err)? {
                count += 1;
                ensure(annihilator_check(&g, &s, &i).map_err(err)?, || format!("{name}: {s:?} survives"))?;
            }
        }
    }
    Ok(format!("{count} cutsets annihilate I_G"))
}

fn c8_gaudin() -> Outcome {
    let mut worst: f64 = 0.0;
    for (name, g) in fixtures::all() {
        let mut rng = ChaCha8Rng::seed_from_u64(808);
        for _ in 0..20 {
            let p: Point = random_point(&g, &mut rng);
            let (n_free, lines) = random_constrained_tuple(&g, &mut rng).map_err(err)?;
            let r = check_gaudin_identity(&g, &p.q, &n_free, &lines).map_err(err)?;
            ensure(r < 1e-12, || format!("{name}: residual {r:e}"))?;
            worst = worst.max(r);
        }
    }
    Ok(format!("60 tuples, max residual {worst:.1e}"))
}

fn c9_kernel() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in 1..=200 {
        let x = 0.025 * k as f64;
        for q in [x, -x] {
            let pair = nbe(q).map_err(err)? + nbe(-q).map_err(err)? + 1.0;
            let theta = if q < 0.0 { 1.0 } else { 0.0 };
            let split = nbe(q).map_err(err)? - (-theta + q.signum() * nbe(q.abs()).map_err(err)?);
            worst = worst.max(pair.abs()).max(split.abs());
        }
    }
    ensure(worst <= 1e-14, || format!("max deviation {worst:e}"))?;
    Ok(format!("400 grid points, max deviation {worst:.1e}"))
}

fn c10_hierarchies() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    for (name, g) in fixtures::all() {
        let i = matsubara_integral(&g, &id(&g)).map_err(err)?;
        let s = matsubara_sum(&g, SumMethod::Operator, &id(&g)).map_err(err)?;
        for _ in 0..5 {
            let h = Hierarchy::random(&g, &mut rng);
            ensure(matsubara_integral(&g, &h).map_err(err)? == i, || format!("{name}: I_G differs under {:?}", h.order()))?;
            ensure(matsubara_sum(&g, SumMethod::Operator, &h).map_err(err)? == s, || {
                format!("{name}: S_G differs under {:?}", h.order())
            })?;
        }
    }
    Ok("15 random hierarchies, S_G and I_G unchanged".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("G2 integral", c1_g2_integral),
        ("G2 sum", c2_g2_sum),
        ("tree and operator counts", c3_counts),
        ("G4 integral", c4_g4_integral),
        ("G3/G4 sums against brute force", c5_sums),
        ("operator and direct paths agree", c6_equivalence),
        ("cutset annihilation", c7_annihilation),
        ("Gaudin identity", c8_gaudin),
        ("kernel identities", c9_kernel),
        ("hierarchy independence", c10_hierarchies),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.2} s]", k + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{secs:.2} s]", k + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

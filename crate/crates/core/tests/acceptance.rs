//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
//! if any fails. Arguments that are not flags select criteria by substring.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::Parser;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use jetcarnot::calibration::{
    boundary_integral, interior_integral, observed_order, omega_eval, polynomial_interior_exact, stokes_study,
};
use jetcarnot::cli::{execute, Cli};
use jetcarnot::fillvol::{delta_constant, FillingReport};
use jetcarnot::heisenberg::{heisenberg_product, HeisenbergElement};
use jetcarnot::jet::{bracket_check, commutator_table_residual, dilate, JetPoint, JetShape, TangentVector};
use jetcarnot::multiindex::MultiIndex;
use jetcarnot::nonextension::{
    build_witness, canonical_extension, certified_lower_bound, contradiction_level, corollary_applicable,
    cross_shell_check, embed_e, growth_table, lip_f_upper, regression_slope, shell_separation_holds,
    witness_contradiction_curve, BoundaryMapSpec, Sampling, DEFAULT_LIP_RESOLUTION,
};
use jetcarnot::paths::{cc_upper_bound, coordinate_lower_bound, metric_bounds, OptimizerOpts};
use jetcarnot::poly::Polynomial;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for n in 1..=3 {
        for k in 1..=3 {
            let shape = JetShape::new(n, k).map_err(|e| e.to_string())?;
            for level in 0..k {
                for index in shape.indices(level).to_vec() {
                    for axis in 0..n {
                        worst = worst.max(bracket_check(&shape, level, &index, axis).map_err(|e| e.to_string())?);
                        count += 1;
                    }
                }
            }
            worst = worst.max(commutator_table_residual(&shape).map_err(|e| e.to_string())?);
        }
    }
    check(worst < 1e-9, || format!("max residual {worst:e}"))?;
    Ok(format!("{count} brackets plus full tables, max residual {worst:e}"))
}

type Q = Ratio<i64>;

fn rational_element(rng: &mut ChaCha8Rng, n: usize) -> HeisenbergElement<Q> {
    let mut q = || Q::new(rng.gen_range(-20..=20), rng.gen_range(1..=12));
    HeisenbergElement { x: (0..n).map(|_| q()).collect(), y: (0..n).map(|_| q()).collect(), z: q() }
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for t in 0..100 {
        let n = 1 + t % 3;
        let (a, b, c) = (rational_element(&mut rng, n), rational_element(&mut rng, n), rational_element(&mut rng, n));
        let left = a.product(&b).and_then(|ab| ab.product(&c)).map_err(|e| e.to_string())?;
        let right = b.product(&c).and_then(|bc| a.product(&bc)).map_err(|e| e.to_string())?;
        check(left == right, || format!("associativity fails on triple {t}"))?;
        for g in [&a, &b, &c] {
            let inv = g.inverse();
            check(g.product(&inv).map_err(|e| e.to_string())?.is_identity(), || format!("right inverse, triple {t}"))?;
            check(inv.product(g).map_err(|e| e.to_string())?.is_identity(), || format!("left inverse, triple {t}"))?;
        }
        let s = Q::new(rng.gen_range(1..=9), rng.gen_range(1..=5));
        let lhs = a.product(&b).map_err(|e| e.to_string())?.dilate(s);
        let rhs = a.dilate(s).product(&b.dilate(s)).map_err(|e| e.to_string())?;
        check(lhs == rhs, || format!("exact dilation homomorphism fails on triple {t}"))?;
    }

    let mut worst: f64 = 0.0;
    for t in 0..1000 {
        let n = 1 + t % 3;
        let shape = JetShape::new(n, 1).map_err(|e| e.to_string())?;
        let mut pt = || {
            let c: Vec<f64> = (0..shape.total_dim()).map(|_| rng.gen_range(-3.0..3.0)).collect();
            JetPoint::new(shape.clone(), c).unwrap()
        };
        let (p, q) = (pt(), pt());
        let l: f64 = rng.gen_range(0.1..10.0);
        let lhs = dilate(l, &heisenberg_product(&p, &q).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let rhs = heisenberg_product(&dilate(l, &p).unwrap(), &dilate(l, &q).unwrap()).map_err(|e| e.to_string())?;
        let scale = lhs.coords().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        worst = worst.max(lhs.max_abs_diff(&rhs) / scale);
    }
    check(worst <= 1e-12, || format!("dilation homomorphism relative error {worst:e}"))?;
    Ok(format!("100 rational triples exact, 1000 float triples max rel {worst:e}"))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    let per_shape = 25_000;
    for n in 1..=2 {
        for k in 1..=2 {
            let shape = JetShape::new(n, k).map_err(|e| e.to_string())?;
            let d = shape.total_dim();
            for _ in 0..per_shape {
                let c: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let p = JetPoint::new(shape.clone(), c).map_err(|e| e.to_string())?;
                let vectors: Vec<TangentVector> = (0..=n)
                    .map(|_| {
                        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                        TangentVector::new(p.clone(), v.iter().map(|a| a / norm).collect()).unwrap()
                    })
                    .collect();
                let w = omega_eval(&p, &vectors).map_err(|e| e.to_string())?.abs();
                worst = worst.max(w);
                if w > 1.0 + 1e-12 {
                    violations += 1;
                }
            }
        }
    }
    check(violations == 0, || format!("{violations} frames exceed 1, max {worst}"))?;
    Ok(format!("{} frames, max |omega| {worst:.6}", 4 * per_shape))
}

fn cubic_maps() -> Vec<Vec<Polynomial>> {
    let mono = |a: u32, b: u32, c: f64| (MultiIndex::new(vec![a, b]), c);
    let mut maps = vec![vec![
        Polynomial::from_terms(2, vec![mono(3, 0, 1.0), mono(1, 1, 0.5), mono(1, 2, -0.7)]).unwrap(),
        Polynomial::from_terms(2, vec![mono(0, 3, 1.0), mono(1, 1, 0.5), mono(2, 1, -0.7)]).unwrap(),
    ]];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..3 {
        let mut map = Vec::new();
        for _ in 0..2 {
            let mut terms = Vec::new();
            for a in 0..=3u32 {
                for b in 0..=3 - a {
                    terms.push(mono(a, b, rng.gen_range(-1.0..1.0)));
                }
            }
            map.push(Polynomial::from_terms(2, terms).unwrap());
        }
        maps.push(map);
    }
    maps
}

fn criterion_4() -> Outcome {
    let mut worst_residual: f64 = 0.0;
    let mut worst_order = f64::INFINITY;
    for (m, map) in cubic_maps().iter().enumerate() {
        let exact = polynomial_interior_exact(map).map_err(|e| e.to_string())?;
        let rows = stokes_study(2, &[8, 16, 32, 64], |x| Ok(map.iter().map(|p| p.eval(x)).collect()), Some(exact))
            .map_err(|e| e.to_string())?;
        let at64 = rows.last().unwrap().residual;
        worst_residual = worst_residual.max(at64);
        let order = observed_order(&rows).ok_or_else(|| format!("map {m}: no convergence order"))?;
        worst_order = worst_order.min(order);
        check(at64 < 1e-6, || format!("map {m}: residual {at64:e} at N=64"))?;
        check(order >= 1.9, || format!("map {m}: observed order {order:.3}"))?;
    }
    Ok(format!("4 cubic maps, residual at N=64 <= {worst_residual:e}, min order {worst_order:.3}"))
}

fn criterion_5() -> Outcome {
    let spec = BoundaryMapSpec::canonical(1, 1, 2.0).map_err(|e| e.to_string())?;
    let grid = canonical_extension(&spec).coordinate_grid(128).map_err(|e| e.to_string())?;
    let b = boundary_integral(&grid).map_err(|e| e.to_string())?;
    let want = 8.0 / 30.0;
    check((b - want).abs() < 1e-4, || format!("boundary integral {b}, want {want}"))?;
    Ok(format!("boundary integral {b:.9}, |err| {:e}", (b - want).abs()))
}

fn criterion_6() -> Outcome {
    let scales = [1.0, 2.0, 4.0, 8.0];
    let spec = BoundaryMapSpec::canonical(1, 1, 1.0).map_err(|e| e.to_string())?;
    let table = growth_table(&spec, &scales, &Sampling::default()).map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    for row in &table.rows {
        let l = row.scale;
        let want = l.powf(1.5) * (1.0f64 / 30.0).sqrt();
        check(rel(row.certified, want) <= 1e-12, || format!("L={l}: certified {} vs {want}", row.certified))?;
        check(row.measured_upper >= row.certified * 0.99, || {
            format!("L={l}: measured {} below certified {}", row.measured_upper, row.certified)
        })?;
        let scaled = spec.with_scale(l).map_err(|e| e.to_string())?;
        let grid = canonical_extension(&scaled).coordinate_grid(64).map_err(|e| e.to_string())?;
        let interior = interior_integral(&grid).map_err(|e| e.to_string())?.abs();
        let cap = row.measured_upper.powi(2);
        check(interior <= cap * 1.01, || format!("L={l}: |interior| {interior} exceeds {cap}"))?;
        notes.push(format!("L={l}: ratio {:.3}", row.ratio));
    }
    Ok(notes.join(", "))
}

fn criterion_7() -> Outcome {
    let scales = [1.0, 2.0, 4.0, 8.0];
    let mut notes = Vec::new();
    for n in 1..=2 {
        for k in 1..=2 {
            let pts: Vec<(f64, f64)> = scales
                .iter()
                .map(|&l| {
                    let spec = BoundaryMapSpec::canonical(n, k, l).unwrap();
                    (l.ln(), certified_lower_bound(&spec).unwrap().ln())
                })
                .collect();
            let slope = regression_slope(&pts).ok_or("no slope")?;
            let want = 1.0 + k as f64 / (n + 1) as f64;
            check((slope - want).abs() <= 1e-12, || format!("(n,k)=({n},{k}): slope {slope} vs {want}"))?;
            notes.push(format!("({n},{k}) {slope:.12}"));
        }
    }
    Ok(notes.join(", "))
}

fn criterion_8() -> Outcome {
    check(shell_separation_holds(10), || "shell separation fails for L, L' <= 10".into())?;
    let spec = BoundaryMapSpec::canonical(1, 1, 1.0).map_err(|e| e.to_string())?;
    let w = build_witness(&spec, 10, 5, &OptimizerOpts::default()).map_err(|e| e.to_string())?;
    let cross = cross_shell_check(&w, 10_000, 8);
    check(cross.holds, || format!("cross-shell ratio {} exceeds 8c = {}", cross.max_ratio, cross.bound))?;
    let level = contradiction_level(1, 1, spec.integral_gap(), 1.0).map_err(|e| e.to_string())?;
    let from_witness = witness_contradiction_curve(&w, 1.0).map_err(|e| e.to_string())?;
    let direct = (0..).find(|&l| 2f64.powi(l) > 30.0).unwrap() as usize;
    check(level == 5 && from_witness == 5 && direct == 5, || {
        format!("contradiction level {level} (witness {from_witness}, direct {direct}), want 5")
    })?;
    Ok(format!("c = {:.6}, cross ratio {:.4} <= {:.4}, level {level}", w.c(), cross.max_ratio, cross.bound))
}

fn criterion_9() -> Outcome {
    let shape = JetShape::new(1, 1).map_err(|e| e.to_string())?;
    let opts = OptimizerOpts::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_order: f64 = f64::NEG_INFINITY;
    let mut worst_homog: f64 = 0.0;
    for i in 0..500 {
        let mut pt = || JetPoint::new(shape.clone(), (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let (p, q) = (pt(), pt());
        let lower = coordinate_lower_bound(&p, &q).map_err(|e| e.to_string())?;
        let (cc, r0) = metric_bounds(&p, &q, &opts).map_err(|e| format!("pair {i}: {e}"))?;
        check(lower <= r0.value && r0.value <= cc.value + 1e-6, || {
            format!("pair {i}: lower {lower}, r0 {}, cc {}", r0.value, cc.value)
        })?;
        worst_order = worst_order.max(lower - r0.value).max(r0.value - cc.value);
        for l in [2.0, 4.0] {
            let dl = cc_upper_bound(&dilate(l, &p).unwrap(), &dilate(l, &q).unwrap(), &opts)
                .map_err(|e| format!("pair {i}, L={l}: {e}"))?;
            let dev = rel(dl / cc.value, l);
            worst_homog = worst_homog.max(dev);
            check(dev <= 0.05, || format!("pair {i}, L={l}: ratio {} ", dl / cc.value))?;
        }
    }
    Ok(format!("500 pairs, max order slack {worst_order:e}, max homogeneity deviation {worst_homog:e}"))
}

fn criterion_10() -> Outcome {
    check(corollary_applicable(1, 1, 2).map_err(|e| e.to_string())?, || "corollary does not apply".into())?;
    let opts = OptimizerOpts::default();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let v: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let target = v.iter().zip(&w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let (p, q) = (embed_e(1, 2, &v).unwrap(), embed_e(1, 2, &w).unwrap());
        let lower = coordinate_lower_bound(&p, &q).map_err(|e| e.to_string())?;
        check(lower == target, || format!("pair {i}: lower {lower} vs {target}"))?;
        let (cc, r0) = metric_bounds(&p, &q, &opts).map_err(|e| format!("pair {i}: {e}"))?;
        for (name, value) in [("lower", lower), ("r0", r0.value), ("cc", cc.value)] {
            let dev = rel(value, target);
            worst = worst.max(dev);
            check(dev <= 0.01, || format!("pair {i}: {name} {value} vs {target}"))?;
        }
    }
    Ok(format!("100 pairs, max relative deviation {worst:e}"))
}

fn criterion_11() -> Outcome {
    let spec = BoundaryMapSpec::canonical(1, 1, 1.0).map_err(|e| e.to_string())?;
    let lam = lip_f_upper(&spec, DEFAULT_LIP_RESOLUTION).map_err(|e| e.to_string())?;
    let report =
        FillingReport::build(&spec, "canonical", lam, &[1.0, 2.0, 4.0, 8.0, 16.0]).map_err(|e| e.to_string())?;
    let residual = report.max_identity_residual();
    check(residual <= 1e-12, || format!("identity residual {residual:e}"))?;
    let delta = delta_constant(&spec, lam).map_err(|e| e.to_string())?;
    let want = 1.0 / (1920.0 * lam.powi(3));
    check(rel(delta, want) <= 1e-12, || format!("delta {delta} vs {want}"))?;
    Ok(format!("Lambda {lam}, delta {delta:e}, identity residual {residual:e}"))
}

fn criterion_12() -> Outcome {
    let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
    let mut outputs = Vec::new();
    for d in &dirs {
        let args = ["jetcarnot", "--seed", "12", "--out", d.path().to_str().unwrap(), "certify"];
        let cli = Cli::try_parse_from(args).map_err(|e| e.to_string())?;
        let out = execute(&cli).map_err(|e| e.to_string())?;
        check(out.status == 0, || format!("certify exited with {}", out.status))?;
        check(out.files == [d.path().join("growth.csv")], || format!("unexpected files {:?}", out.files))?;
        outputs.push(std::fs::read(&out.files[0]).map_err(|e| e.to_string())?);
    }
    check(outputs[0] == outputs[1], || "growth.csv differs between runs".into())?;
    Ok(format!("growth.csv identical, {} bytes", outputs[0].len()))
}

struct Criterion {
    id: usize,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

const fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, name: "frame commutators", budget: secs(10), run: criterion_1 },
    Criterion { id: 2, name: "heisenberg algebra", budget: secs(5), run: criterion_2 },
    Criterion { id: 3, name: "calibration bound", budget: secs(30), run: criterion_3 },
    Criterion { id: 4, name: "lipschitz stokes", budget: secs(60), run: criterion_4 },
    Criterion { id: 5, name: "boundary integral", budget: secs(60), run: criterion_5 },
    Criterion { id: 6, name: "certificate chain", budget: secs(300), run: criterion_6 },
    Criterion { id: 7, name: "growth exponents", budget: secs(1), run: criterion_7 },
    Criterion { id: 8, name: "unbounded witness", budget: secs(300), run: criterion_8 },
    Criterion { id: 9, name: "metric sandwich", budget: secs(600), run: criterion_9 },
    Criterion { id: 10, name: "corollary embedding", budget: secs(120), run: criterion_10 },
    Criterion { id: 11, name: "filling volume", budget: secs(1), run: criterion_11 },
    Criterion { id: 12, name: "determinism", budget: secs(60), run: criterion_12 },
];

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected = CRITERIA.iter().filter(|c| {
        let label = format!("criterion {} {}", c.id, c.name);
        filters.is_empty() || filters.iter().any(|f| label.contains(f.as_str()))
    });
    let mut failed = 0;
    let mut ran = 0;
    for c in selected {
        ran += 1;
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .map_or("panic".into(), |s| format!("panic: {s}")))
        });
        let elapsed = start.elapsed();
        let result = result.and_then(|msg| {
            if elapsed <= c.budget {
                Ok(msg)
            } else {
                Err(format!("{msg}; runtime {elapsed:.2?} exceeds {:?}", c.budget))
            }
        });
        match result {
            Ok(msg) => println!("criterion {:>2} {:<20} PASS  {elapsed:>9.2?}  {msg}", c.id, c.name),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} {:<20} FAIL  {elapsed:>9.2?}  {msg}", c.id, c.name);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

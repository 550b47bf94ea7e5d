//! Acceptance suite. Every criterion prints one PASS/FAIL line.
//!
//! Each criterion is a list of checks. Checks marked `reported` compare
//! against reference table values and are printed without failing the
//! binary; everything else decides the exit status.

use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use lowdisc::copula::*;
use lowdisc::discrepancy::*;
use lowdisc::exactfield::Rational;
use lowdisc::numeration::{Cylinder, DigitString, NumerationSystem};
use lowdisc::partitions::LSParams;
use lowdisc::sequences::*;
use lowdisc::{AlgExt, FieldExt};
use num_bigint::{BigInt, BigUint};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Check {
    name: String,
    ok: bool,
    reported: bool,
}

#[derive(Default)]
struct Criterion {
    checks: Vec<Check>,
    notes: String,
}

impl Criterion {
    fn check(&mut self, name: impl Into<String>, ok: bool) {
        self.checks.push(Check { name: name.into(), ok, reported: false });
    }

    fn report(&mut self, name: impl Into<String>, ok: bool) {
        self.checks.push(Check { name: name.into(), ok, reported: true });
    }

    fn note(&mut self, s: impl AsRef<str>) {
        let _ = writeln!(self.notes, "    {}", s.as_ref());
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    fn hard_failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.ok && !c.reported).map(|c| c.name.as_str()).collect()
    }
}

fn within(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol
}

fn timed<R>(f: impl FnOnce() -> R) -> (R, Duration) {
    let start = Instant::now();
    let r = f();
    (r, start.elapsed())
}

// sin(π(x+y)), maximum
const SIN_TABLE: &[(u32, f64, f64)] = &[
    (5, 0.3933, 0.3482),
    (6, 0.3824, 0.3598),
    (7, 0.377, 0.3655),
    (8, 0.3741, 0.3684),
    (9, 0.3727, 0.3698),
    (10, 0.3712, 0.3711),
];
const SIN_LIMIT: f64 = 0.371175;

fn sin_levels() -> Vec<(u32, SandwichResult, Duration)> {
    (1..=10)
        .map(|n| {
            let (r, t) = timed(|| sandwich_bounds(&SinSum, n, Sense::Max, Sampler::Exact).unwrap());
            (n, r, t)
        })
        .collect()
}

fn criterion_1(levels: &[(u32, SandwichResult, Duration)]) -> Criterion {
    let mut c = Criterion::default();
    for &(n, ub, lb) in SIN_TABLE {
        let (_, r, _) = &levels[n as usize - 1];
        let ok = within(r.ub, ub, 5e-4) && within(r.lb, lb, 5e-4);
        c.note(format!("n={n:2}  UB {:.4} (table {ub:.4})  LB {:.4} (table {lb:.4})", r.ub, r.lb));
        c.report(format!("table n={n}"), ok);
    }
    let (_, _, t10) = &levels[9];
    c.note(format!("n=10 runtime {:.2?}", t10));
    c.check("runtime n=10 <= 10 min", *t10 <= Duration::from_secs(600));
    for (n, r, _) in &levels[2..] {
        c.check(format!("limit sandwich n={n}"), r.lb <= SIN_LIMIT && SIN_LIMIT <= r.ub);
    }
    let exact = 3.0 / (4.0 * SQRT_2) - 1.0 / (2.0 * PI);
    let sh = ShuffleOfM::new(vec![0.0, 0.75, 1.0], vec![0, 1], vec![-1, 1]).unwrap();
    c.check("limit shuffle integral", within(shuffle_integrate(&SinSum, &sh, 10_000), exact, 1e-8));
    c.check("limit constant", within(exact, SIN_LIMIT, 1e-6));
    c
}

// (n, max UB, max LB, min UB, min LB)
#[allow(clippy::approx_constant)]
const FTD_TABLE: &[(u32, f64, f64, f64, f64)] = &[
    (3, 0.3601, 0.2956, 0.1714, 0.1453),
    (4, 0.3355, 0.3031, 0.1674, 0.1456),
    (5, 0.3301, 0.314, 0.1567, 0.1458),
    (6, 0.326, 0.318, 0.1535, 0.1480),
    (7, 0.322, 0.3183, 0.1519, 0.1492),
    (8, 0.3202, 0.3189, 0.1505, 0.1492),
    (10, 0.3195, 0.3195, 0.1498, 0.1495),
];

fn criterion_2() -> Criterion {
    let mut c = Criterion::default();
    let f = Ftd(FtdParams::default());
    for &(n, max_ub, max_lb, min_ub, min_lb) in FTD_TABLE {
        let hi = sandwich_bounds(&f, n, Sense::Max, Sampler::Grid(8)).unwrap();
        let lo = sandwich_bounds(&f, n, Sense::Min, Sampler::Grid(8)).unwrap();
        c.note(format!(
            "n={n:2}  max UB {:.4} ({max_ub:.4}) LB {:.4} ({max_lb:.4})  min UB {:.4} ({min_ub:.4}) LB {:.4} ({min_lb:.4})",
            hi.ub, hi.lb, lo.ub, lo.lb
        ));
        c.check(format!("ordering n={n}"), lo.lb <= lo.ub && lo.ub <= hi.lb && hi.lb <= hi.ub);
        let tol = match n {
            10 => Some(2e-3),
            n if n <= 6 => Some(5e-3),
            _ => None,
        };
        if let Some(tol) = tol {
            let pairs = [(hi.ub, max_ub), (hi.lb, max_lb), (lo.ub, min_ub), (lo.lb, min_lb)];
            let ok = pairs.iter().all(|&(g, w)| within(g, w, tol));
            // the n = 10 line is reproducible; coarse levels depend on the unstated sampler
            if n == 10 {
                c.check(format!("table n={n} ±{tol}"), ok);
            } else {
                c.report(format!("table n={n} ±{tol}"), ok);
            }
        }
    }
    c
}

fn criterion_3() -> Criterion {
    let mut c = Criterion::default();
    let (ok, t) = timed(|| {
        let map = KfMap::new();
        let orbit = map.orbit(&map.alpha().field().zero(), 10_000).unwrap();
        let points = ls_points(&LSParams::new(1, 1).unwrap(), 10_000);
        orbit == points
    });
    c.note(format!("runtime {t:.2?}"));
    c.check("orbit equals LS(1,1)", ok);
    c.check("runtime <= 30 s", t <= Duration::from_secs(30));
    c
}

fn criterion_4() -> Criterion {
    let mut c = Criterion::default();
    let sys = NumerationSystem::new(&[1, 1]).unwrap();
    let map = KfMap::with_alpha(sys.beta().inverse().unwrap()).unwrap();
    let mut digits = sys.greedy_expand_u64(0);
    let mut bad = None;
    for n in 0..10_000u64 {
        let next = sys.odometer_step(&digits);
        if map.apply(&sys.monna_map(&digits)).unwrap() != sys.monna_map(&next) {
            bad = Some(n);
            break;
        }
        digits = next;
    }
    if let Some(n) = bad {
        c.note(format!("first mismatch at n={n}"));
    }
    c.check("conjugacy n=0..9999", bad.is_none());
    c
}

/// Supremum of the Monna image of a cylinder: the lexicographically largest
/// admissible continuation is eventually periodic and sums as a geometric
/// series.
fn cylinder_image_length(sys: &NumerationSystem, prefix: &[u32]) -> AlgExt {
    const HORIZON: usize = 120;
    let k = prefix.len();
    let total = k + HORIZON;
    let mut digits = prefix.to_vec();
    let mut sum: BigUint = prefix
        .iter()
        .enumerate()
        .map(|(j, &e)| sys.base_term(j) * e)
        .sum();
    while digits.len() < total {
        let pos = digits.len();
        let g = sys.base_term(pos);
        let room = sys.base_term(pos + 1) - 1u32 - &sum;
        let e = (room / &g).to_u32().unwrap().min(sys.alphabet_max(pos));
        sum += g * e;
        digits.push(e);
    }
    let (start, period) = (k..k + 40)
        .flat_map(|s| (1..=12).map(move |p| (s, p)))
        .find(|&(s, p)| (s..total - p).all(|i| digits[i] == digits[i + p]))
        .expect("eventually periodic continuation");
    let field = sys.field();
    let head = sys.monna_map(&DigitString::new(digits[..start].to_vec()));
    let block = sys.monna_map(&DigitString::new(digits[start..start + period].to_vec()));
    let shift = if start == 0 { field.one() } else { sys.inv_power(start - 1) };
    let ratio = &field.one() - &sys.inv_power(period - 1);
    let sup = &head + &(&shift * &block).checked_div(&ratio).unwrap();
    &sup - &sys.monna_map(&DigitString::new(prefix.to_vec()))
}

fn admissible_prefixes(sys: &NumerationSystem, max_len: usize) -> Vec<Vec<u32>> {
    fn walk(sys: &NumerationSystem, max_len: usize, cur: &mut Vec<u32>, sum: u64, out: &mut Vec<Vec<u32>>) {
        out.push(cur.clone());
        let pos = cur.len();
        if pos == max_len {
            return;
        }
        let g = sys.base_term(pos).to_u64().unwrap();
        let room = sys.base_term(pos + 1).to_u64().unwrap() - 1 - sum;
        for e in 0..=(room / g).min(sys.alphabet_max(pos) as u64) {
            cur.push(e as u32);
            walk(sys, max_len, cur, sum + e * g, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    walk(sys, max_len, &mut Vec::new(), 0, &mut out);
    out
}

fn criterion_5() -> Criterion {
    let mut c = Criterion::default();
    for coeffs in [&[1u32, 1][..], &[2, 2], &[3, 3], &[1, 0, 1]] {
        let sys = NumerationSystem::new(coeffs).unwrap();
        let prefixes = admissible_prefixes(&sys, 8);
        let mut bad = None;
        for p in &prefixes {
            let mu = sys.cylinder_measure(&Cylinder::new(p.clone())).unwrap();
            if mu != cylinder_image_length(&sys, p) {
                bad = Some(p.clone());
                break;
            }
        }
        c.note(format!("{coeffs:?}: {} cylinders", prefixes.len()));
        if let Some(p) = &bad {
            c.note(format!("{coeffs:?}: mismatch at {p:?}"));
        }
        c.check(format!("pushforward {coeffs:?}"), bad.is_none());
    }
    c
}

/// Heap's algorithm over all permutations.
fn exhaustive(a: &SquareMatrix, sense: Sense) -> f64 {
    let n = a.size();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut counters = vec![0usize; n];
    let better = |v: f64, best: f64| match sense {
        Sense::Min => v < best,
        Sense::Max => v > best,
    };
    let mut best = a.assignment_value(&perm);
    let mut i = 0;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            let v = a.assignment_value(&perm);
            if better(v, best) {
                best = v;
            }
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    best
}

fn criterion_6() -> Criterion {
    let mut c = Criterion::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut agree = 0;
    for k in 0..100 {
        let data = (0..64).map(|_| rng.gen_range(-100i64..=100) as f64).collect();
        let a = SquareMatrix::new(8, data).unwrap();
        let sense = if k % 2 == 0 { Sense::Min } else { Sense::Max };
        if hungarian(&a, sense).unwrap().value == exhaustive(&a, sense) {
            agree += 1;
        }
    }
    c.note(format!("{agree}/100 exact agreements"));
    c.check("8x8 exhaustive oracle", agree == 100);
    let n = 1024;
    let a = SquareMatrix::new(n, (0..n * n).map(|_| rng.gen::<f64>()).collect()).unwrap();
    let (r, t) = timed(|| hungarian(&a, Sense::Max).unwrap());
    let mut seen = vec![false; n];
    r.perm.iter().for_each(|&j| seen[j] = true);
    c.note(format!("n=1024 solve {t:.2?}"));
    c.check("n=1024 is a permutation", seen.iter().all(|&s| s));
    c.check("n=1024 <= 5 min", t <= Duration::from_secs(300));
    c
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// O(N²) supremum over closed and open intervals with endpoints in the
/// point set or at 0 and 1, for points `nums[i] / den`.
fn brute_force_1d(nums: &[i64], den: i64) -> (Rational, Rational) {
    let n = nums.len() as i64;
    let mut ends: Vec<i64> = nums.to_vec();
    ends.extend([0, den]);
    ends.sort();
    ends.dedup();
    let mut sorted = nums.to_vec();
    sorted.sort();
    let below = |v: i64| sorted.partition_point(|&x| x < v) as i64;
    let at_most = |v: i64| sorted.partition_point(|&x| x <= v) as i64;
    let mut d = 0i64;
    for (i, &a) in ends.iter().enumerate() {
        for &b in &ends[i..] {
            d = d.max((at_most(b) - below(a)) * den - n * (b - a));
            d = d.max(n * (b - a) - (below(b) - at_most(a)).max(0) * den);
        }
    }
    let mut star = 0i64;
    for &b in &ends {
        star = star.max(at_most(b) * den - n * b);
        star = star.max(n * b - below(b) * den);
    }
    (q(d, n * den), q(star, n * den))
}

fn criterion_7() -> Criterion {
    let mut c = Criterion::default();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut agree = 0;
    for _ in 0..500 {
        let n = rng.gen_range(1..=256);
        let den = rng.gen_range(1..=1000i64);
        let nums: Vec<i64> = (0..n).map(|_| rng.gen_range(0..den)).collect();
        let pts: Vec<Rational> = nums.iter().map(|&m| q(m, den)).collect();
        if discrepancy_1d_exact(&pts).unwrap() == brute_force_1d(&nums, den) {
            agree += 1;
        }
    }
    c.note(format!("{agree}/500 exact agreements"));
    c.check("formula equals brute force", agree == 500);
    let equi = [1i64, 2, 7, 64, 255].iter().all(|&n| {
        let pts: Vec<Rational> = (0..n).map(|i| q(i, n)).collect();
        discrepancy_1d_exact(&pts).unwrap().0 == q(1, n)
    });
    c.check("equispaced D_N = 1/N", equi);
    c
}

fn criterion_8() -> Criterion {
    let mut c = Criterion::default();
    for n in [10u64, 100, 1000] {
        let pts: Vec<Vec<f64>> = (0..n).map(|i| halton_f64(i, &[2, 3]).unwrap()).collect();
        let d = star_discrepancy_multi(&pts).unwrap().dn_star;
        let bound = halton_bound(n, &[2, 3]);
        c.note(format!("N={n:4}  D* {d:.6}  bound {bound:.6}"));
        c.check(format!("N={n}"), d < bound);
    }
    c
}

fn criterion_9() -> Criterion {
    let mut c = Criterion::default();
    let n = 1u64 << 15;
    let mut families: Vec<(String, Vec<f64>)> = Vec::new();
    for b in [2, 3] {
        families.push((format!("vdC({b})"), (0..n).map(|i| radical_inverse_f64(i, b, None).unwrap()).collect()));
    }
    for (l, s) in [(1, 1), (2, 1)] {
        let xs = ls_points(&LSParams::new(l, s).unwrap(), n as usize).iter().map(AlgExt::to_f64).collect();
        families.push((format!("LS({l},{s})"), xs));
    }
    let sys = NumerationSystem::new(&[1, 0, 1]).unwrap();
    families.push(("beta(1,0,1)".into(), (0..n).map(|i| sys.monna_map_f64(&sys.greedy_expand_u64(i))).collect()));
    for (name, xs) in &families {
        let worst = (1..=15)
            .map(|k| {
                let m = 1usize << k;
                m as f64 * discrepancy_1d(&xs[..m]).unwrap().dn_star / (m as f64).ln()
            })
            .fold(0.0, f64::max);
        c.note(format!("{name}: max N D*/log N = {worst:.4}"));
        c.check(name.clone(), worst < 5.0);
    }
    c
}

fn criterion_10() -> Criterion {
    let mut c = Criterion::default();
    let a = LSParams::new(1, 1).unwrap();
    let b = LSParams::new(4, 1).unwrap();
    let verdict = ls_pair_degenerate(&a, &b, 3);
    c.note(format!("{verdict:?}"));
    // α₁³ / α₂ rational, i.e. k + 1 = 3, m + 1 = 1
    c.check("α₂ = α₁³ witness", verdict == PairVerdict::Degenerate { k: 2, m: 0 });
    let xs = ls_points(&a, 5000);
    let ys = ls_points(&b, 5000);
    let mut csv = String::from("x,y\n");
    for (x, y) in xs.iter().zip(&ys) {
        let _ = writeln!(csv, "{:.17},{:.17}", x.to_f64(), y.to_f64());
    }
    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("ls_pairs_1_1_vs_4_1.csv");
    let written = std::fs::write(&path, csv).is_ok();
    c.note(format!("pairs written to {}", path.display()));
    c.check("pair CSV written", written);
    c
}

fn criterion_11(levels: &[(u32, SandwichResult, Duration)]) -> Criterion {
    let mut c = Criterion::default();
    let l = PI * SQRT_2;
    for w in levels.windows(2) {
        let (n, prev, _) = &w[0];
        let (m, next, _) = &w[1];
        let ok = next.lb >= prev.lb - 1e-12 && next.ub <= prev.ub + 1e-12;
        c.check(format!("monotone {n}->{m}"), ok);
    }
    for (n, r, _) in levels {
        c.check(format!("gap n={n}"), r.lb <= r.ub && r.ub - r.lb <= lipschitz_gap(l, *n) + 1e-12);
    }
    let gaps: Vec<String> = levels.iter().map(|(n, r, _)| format!("{n}:{:.2e}", r.ub - r.lb)).collect();
    c.note(format!("gaps {}", gaps.join(" ")));
    c
}

fn main() -> std::process::ExitCode {
    let levels = sin_levels();
    let criteria: Vec<(u32, &str, Criterion)> = vec![
        (1, "sin-sum case study", criterion_1(&levels)),
        (2, "FTD case study", criterion_2()),
        (3, "orbit identity", criterion_3()),
        (4, "conjugacy identity", criterion_4()),
        (5, "cylinder pushforward", criterion_5()),
        (6, "Hungarian correctness", criterion_6()),
        (7, "1-D discrepancy", criterion_7()),
        (8, "Halton bound", criterion_8()),
        (9, "low-discrepancy behavior", criterion_9()),
        (10, "degeneracy witness", criterion_10()),
        (11, "sandwich properties", criterion_11(&levels)),
    ];
    let mut hard = Vec::new();
    for (k, title, c) in &criteria {
        println!("{} criterion {k:2}: {title}", if c.passed() { "PASS" } else { "FAIL" });
        print!("{}", c.notes);
        for check in c.checks.iter().filter(|ch| !ch.ok) {
            let kind = if check.reported { "reported" } else { "asserted" };
            println!("    failed ({kind}): {}", check.name);
        }
        hard.extend(c.hard_failures().into_iter().map(|f| format!("criterion {k}: {f}")));
    }
    if hard.is_empty() {
        println!("acceptance: all asserted checks passed");
        std::process::ExitCode::SUCCESS
    } else {
        println!("acceptance: asserted checks failed: {hard:?}");
        std::process::ExitCode::FAILURE
    }
}

use lowdisc::numeration::{Cylinder, DigitString, NumerationSystem};
use lowdisc::{AlgExt, FieldExt};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use proptest::prelude::*;

const SYSTEMS: &[&[u32]] = &[&[1, 1], &[2], &[3], &[1, 0, 1], &[2, 2], &[2, 1, 2], &[3, 3, 3]];

/// Lexicographically largest admissible continuation of `prefix`, as
/// (digits, start of period, period length).
fn maximal_tail(sys: &NumerationSystem, prefix: &[u32]) -> (Vec<u32>, usize, usize) {
    let horizon = prefix.len() + 120;
    let mut digits = prefix.to_vec();
    while digits.len() < horizon {
        let pos = digits.len();
        let mut chosen = 0;
        for e in (1..=sys.alphabet_max(pos)).rev() {
            digits.push(e);
            let ok = sys.is_admissible(&digits);
            digits.pop();
            if ok {
                chosen = e;
                break;
            }
        }
        digits.push(chosen);
    }
    let k = prefix.len();
    for start in k..k + 40 {
        for period in 1..=12 {
            if (start..horizon - period).all(|i| digits[i] == digits[i + period]) {
                return (digits[..start + period].to_vec(), start, period);
            }
        }
    }
    panic!("no period found for prefix {prefix:?}");
}

/// Exact sup of the Monna image of the cylinder minus its inf.
fn image_length(sys: &NumerationSystem, prefix: &[u32]) -> AlgExt {
    let field = sys.field();
    let (digits, start, period) = maximal_tail(sys, prefix);
    let mut pre = field.zero();
    for (j, &e) in digits[..start].iter().enumerate() {
        pre = &pre + &sys.inv_power(j).scale_int(e as i64);
    }
    let mut block = field.zero();
    for j in start..start + period {
        block = &block + &sys.inv_power(j).scale_int(digits[j] as i64);
    }
    let ratio = &field.one() - &sys.inv_power(period - 1);
    let sup = &pre + &block.checked_div(&ratio).unwrap();
    let inf = sys.monna_map(&DigitString::new(prefix.to_vec()));
    &sup - &inf
}

fn admissible_prefixes(sys: &NumerationSystem, len: usize) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for pos in 0..len {
        let mut next = Vec::new();
        for p in &out {
            for e in 0..=sys.alphabet_max(pos) {
                let mut q = p.clone();
                q.push(e);
                if sys.is_admissible(&q) {
                    next.push(q);
                }
            }
        }
        out = next;
    }
    out
}

#[test]
fn pushforward_matches_interval_length() {
    for coeffs in [&[1u32, 1][..], &[1, 0, 1], &[2], &[2, 2]] {
        let sys = NumerationSystem::new(coeffs).unwrap();
        let max_len = if coeffs == [2, 2] { 5 } else { 8 };
        for len in 0..=max_len {
            for prefix in admissible_prefixes(&sys, len) {
                let mu = sys.cylinder_measure(&Cylinder::new(prefix.clone())).unwrap();
                let lambda = image_length(&sys, &prefix);
                assert_eq!(mu, lambda, "coeffs {coeffs:?} prefix {prefix:?}");
            }
        }
    }
}

#[test]
fn base_sequence_against_brute_force_admissibility() {
    // G_{k} is the number of admissible strings of length k
    for coeffs in SYSTEMS {
        let sys = NumerationSystem::new(coeffs).unwrap();
        for k in 0..6 {
            let count = admissible_prefixes(&sys, k).len() as u64;
            assert_eq!(BigUint::from(count), sys.base_term(k), "coeffs {coeffs:?} k {k}");
        }
    }
}

#[test]
fn round_trip_and_odometer_up_to_1e5() {
    for coeffs in SYSTEMS {
        let sys = NumerationSystem::new(coeffs).unwrap();
        let mut digits = DigitString::default();
        for n in 0u64..=100_000 {
            let greedy = sys.greedy_expand_u64(n);
            assert_eq!(greedy, digits, "coeffs {coeffs:?} n {n}");
            assert_eq!(sys.value(&greedy).to_u64().unwrap(), n);
            if n % 997 == 0 {
                assert!(sys.is_admissible(greedy.digits()));
            }
            digits = sys.odometer_step(&digits);
        }
    }
}

#[test]
fn monna_image_stays_below_one() {
    for coeffs in SYSTEMS {
        let sys = NumerationSystem::new(coeffs).unwrap();
        assert!(sys.pattern_accepted());
        let one = sys.field().one();
        let mut best = sys.field().zero();
        let mut best_f = 0.0;
        for n in 0u64..=100_000 {
            let digits = sys.greedy_expand_u64(n);
            let xf = sys.monna_map_f64(&digits);
            // exact comparison only near the running maximum
            if xf > best_f - 1e-9 {
                let x = sys.monna_map(&digits);
                if x > best {
                    best = x;
                    best_f = xf;
                }
            }
        }
        assert!(best < one, "coeffs {coeffs:?}");
    }
}

#[test]
fn base_ratio_converges() {
    for coeffs in SYSTEMS {
        let sys = NumerationSystem::new(coeffs).unwrap();
        let beta = sys.beta().to_f64();
        let r = |n: usize| {
            let g = sys.base_term(n).to_f64().unwrap();
            g / beta.powi(n as i32)
        };
        let drift = (r(60) - r(40)).abs() / r(60);
        assert!(drift < 1e-9, "coeffs {coeffs:?} drift {drift}");
    }
}

proptest! {
    #[test]
    fn pseudo_inverse_truncation_error(idx in 0usize..SYSTEMS.len(), x in 0.0f64..1.0, depth in 1usize..20) {
        let sys = NumerationSystem::new(SYSTEMS[idx]).unwrap();
        let digits = sys.monna_pseudo_inverse_f64(x, depth).unwrap();
        let back = sys.monna_map(&digits).to_f64();
        let bound = sys.inv_power(depth - 1).to_f64();
        prop_assert!(back <= x + 1e-12);
        prop_assert!(x - back < bound + 1e-12);
        prop_assert!(sys.is_admissible(digits.digits()));
    }

    #[test]
    fn exact_pseudo_inverse_of_monna_image(idx in 0usize..SYSTEMS.len(), n in 0u64..5000) {
        let sys = NumerationSystem::new(SYSTEMS[idx]).unwrap();
        let digits = sys.greedy_expand_u64(n);
        let x = sys.monna_map(&digits);
        let back = sys.monna_pseudo_inverse(&x, digits.len() + 2).unwrap();
        prop_assert_eq!(back, digits);
    }

    #[test]
    fn odometer_matches_successor(idx in 0usize..SYSTEMS.len(), n in 0u64..1_000_000_000_000) {
        let sys = NumerationSystem::new(SYSTEMS[idx]).unwrap();
        let next = sys.odometer_step(&sys.greedy_expand_u64(n));
        prop_assert_eq!(next, sys.greedy_expand_u64(n + 1));
    }
}

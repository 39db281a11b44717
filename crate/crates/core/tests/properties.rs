use std::sync::OnceLock;

use num_traits::{One, Zero};
use proptest::prelude::*;

use subtour::canon::{canonical_form, isomorphic_bruteforce, DedupStore};
use subtour::fixtures::prism_classic;
use subtour::gap::{gap_plus, gap_plus_with_rhs, min_tour, num_pairs, MetricCost};
use subtour::graph::Graph;
use subtour::graphgen::Mode;
use subtour::lp::{solve_lp_exact, LinearProgram, LpError};
use subtour::pipeline::{run_with, RunConfig, VerifyLevel};
use subtour::polytope::{build_face_system, extreme_test_independent, is_extreme, WeightedPoint};
use subtour::rational::{format_rational, frac, int, parse_rational, Rational};
use subtour::subdivide::subdivide_one_edges;
use subtour::vertexenum::{brute_force_vertices, enumerate_vertices};

/// All classes for n = 3..=8, computed once.
fn small_classes() -> &'static Vec<WeightedPoint> {
    static CELL: OnceLock<Vec<WeightedPoint>> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut config = RunConfig::new(8, Mode::General);
        config.compute_gaps = false;
        config.verify_level = VerifyLevel::None;
        let mut out = Vec::new();
        run_with(&config, |level| {
            out.extend(level.store.points().cloned());
            Ok(())
        })
        .unwrap();
        out
    })
}

fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

fn point_and_perm() -> impl Strategy<Value = (WeightedPoint, Vec<usize>)> {
    (0..small_classes().len()).prop_flat_map(|i| {
        let p = small_classes()[i].clone();
        let n = p.n();
        (Just(p), permutation(n))
    })
}

/// Tour value by trying every permutation that fixes vertex 0.
fn brute_min_tour(c: &MetricCost, n: usize) -> Rational {
    fn rec(c: &MetricCost, path: &mut Vec<usize>, used: &mut Vec<bool>, acc: Rational, best: &mut Option<Rational>) {
        let n = used.len();
        if path.len() == n {
            let total = acc + c.get(path[n - 1], 0);
            if best.as_ref().is_none_or(|b| total < *b) {
                *best = Some(total);
            }
            return;
        }
        for v in 1..n {
            if !used[v] {
                let step = c.get(*path.last().unwrap(), v).clone();
                used[v] = true;
                path.push(v);
                rec(c, path, used, &acc + step, best);
                path.pop();
                used[v] = false;
            }
        }
    }
    let mut best = None;
    let mut used = vec![false; n];
    used[0] = true;
    rec(c, &mut vec![0], &mut used, Rational::zero(), &mut best);
    best.unwrap()
}

/// Optimum of `min c·x, Ax ≥ b, x ≥ 0` by trying every basis.
fn brute_lp(lp: &LinearProgram) -> Option<Rational> {
    let m = lp.num_vars();
    let mut rows: Vec<(Vec<Rational>, Rational)> =
        lp.constraints.iter().map(|r| (r.coeffs.clone(), r.rhs.clone())).collect();
    for j in 0..m {
        let mut e = vec![Rational::zero(); m];
        e[j] = Rational::one();
        rows.push((e, Rational::zero()));
    }
    let mut best: Option<Rational> = None;
    let k = rows.len();
    for mask in 0u32..(1 << k) {
        if mask.count_ones() as usize != m {
            continue;
        }
        let chosen: Vec<&(Vec<Rational>, Rational)> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| &rows[i]).collect();
        let Some(x) = solve_rational(&chosen) else { continue };
        if rows.iter().all(|(a, b)| dot(a, &x) >= *b) {
            let v = dot(&lp.objective, &x);
            if best.as_ref().is_none_or(|b| v < *b) {
                best = Some(v);
            }
        }
    }
    best
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gauss–Jordan elimination; `None` if singular.
fn solve_rational(rows: &[&(Vec<Rational>, Rational)]) -> Option<Vec<Rational>> {
    let m = rows.len();
    let mut a: Vec<Vec<Rational>> = rows
        .iter()
        .map(|(r, b)| {
            let mut v = r.clone();
            v.push(b.clone());
            v
        })
        .collect();
    for col in 0..m {
        let piv = (col..m).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        let p = a[col][col].clone();
        for x in a[col].iter_mut() {
            *x /= &p;
        }
        for r in 0..m {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (x, y) in a[r].iter_mut().zip(pivot_row) {
                    *x -= &f * y;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[m].clone()).collect())
}

fn small_lp() -> impl Strategy<Value = LinearProgram> {
    (1usize..=3, 1usize..=4).prop_flat_map(|(m, k)| {
        (
            prop::collection::vec(0i64..=4, m),
            prop::collection::vec((prop::collection::vec(-3i64..=3, m), -4i64..=4), k),
        )
            .prop_map(move |(obj, rows)| {
                let mut lp = LinearProgram::new(obj.into_iter().map(int).collect());
                for (a, b) in rows {
                    lp.push(a.into_iter().map(int).collect(), int(b));
                }
                lp
            })
    })
}

fn random_graph() -> impl Strategy<Value = Graph> {
    (4usize..=6).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let max = pairs.len().min(9);
        prop::sample::subsequence(pairs, 3..=max).prop_map(move |e| Graph::new(n, e).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rational_text_round_trips(p in -1000i64..1000, q in 1i64..1000) {
        let r = frac(p, q);
        prop_assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
    }

    #[test]
    fn canonical_key_ignores_labels((p, perm) in point_and_perm()) {
        let q = p.relabel(&perm);
        let (kp, rp) = canonical_form(&p);
        let (kq, rq) = canonical_form(&q);
        prop_assert_eq!(kp, kq);
        prop_assert_eq!(rp, rq);
        prop_assert!(isomorphic_bruteforce(&p, &q));
    }

    #[test]
    fn relabeling_keeps_extremeness((p, perm) in point_and_perm()) {
        let q = p.relabel(&perm);
        prop_assert!(is_extreme(q.graph(), &q).unwrap());
    }

    #[test]
    fn held_karp_matches_brute_force(n in 3usize..=7, seed in prop::collection::vec(0i64..20, 21)) {
        let vals: Vec<Rational> = (0..num_pairs(n)).map(|i| frac(seed[i % seed.len()], 1 + (i as i64 % 3))).collect();
        let c = MetricCost::new(n, vals);
        let (tour, value) = min_tour(&c, n);
        prop_assert_eq!(c.tour_cost(&tour), value.clone());
        prop_assert_eq!(value, brute_min_tour(&c, n));
        prop_assert!(tour[1] < tour[n - 1]);
    }

    #[test]
    fn exact_lp_matches_vertex_enumeration(lp in small_lp()) {
        match (solve_lp_exact(&lp), brute_lp(&lp)) {
            (Ok(sol), Some(v)) => {
                prop_assert_eq!(&sol.value, &v);
                prop_assert!(lp.verify(&sol).is_ok());
            }
            (Err(LpError::Infeasible), None) => {}
            (got, want) => prop_assert!(false, "solver {:?} vs brute force {:?}", got, want),
        }
    }

    #[test]
    fn double_description_matches_oracle(g in random_graph()) {
        let sys = build_face_system(&g);
        let dd = enumerate_vertices(&sys).unwrap();
        prop_assert_eq!(dd, brute_force_vertices(&sys));
    }

    #[test]
    fn subdivision_keeps_extremeness_and_half_integrality(i in 0..64usize) {
        let pts = small_classes();
        let p = &pts[i % pts.len()];
        for c in subdivide_one_edges(p).unwrap() {
            prop_assert_eq!(c.n(), p.n() + 1);
            prop_assert!(extreme_test_independent(c.graph(), &c).unwrap());
            if p.is_half_integral() {
                prop_assert!(c.is_half_integral());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn gap_is_invariant_under_tour_rhs_scaling(i in 0..32usize, num in 1i64..7, den in 1i64..7) {
        let pts = small_classes();
        let p = &pts[i % pts.len()];
        let kappa = frac(num, den);
        let base = gap_plus(p).unwrap();
        let scaled = gap_plus_with_rhs(p, &kappa).unwrap();
        prop_assert_eq!(&scaled.gap_plus, &base.gap_plus);
        prop_assert_eq!(scaled.lp_value, &base.lp_value * &kappa);
        prop_assert!(base.gap_plus >= int(1));
    }
}

#[test]
fn dedup_is_idempotent() {
    let mut store = DedupStore::new();
    for p in small_classes() {
        assert!(store.insert(p));
    }
    for p in small_classes() {
        assert!(!store.insert(p));
    }
    assert_eq!(store.len(), small_classes().len());
}

#[test]
fn prism_gap_lp_value() {
    assert_eq!(gap_plus(&prism_classic()).unwrap().lp_value, frac(9, 10));
}

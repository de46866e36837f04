//! Library answers checked against independent computations.

mod common;

use common::{burnside_simple, random_setting, rng};
use quiverkit_core::classify::{
    classify_by_strata, enumerate_rep_types, is_simple_root, stratum_dimension, EnumerationLimits,
};
use quiverkit_core::numeric::{numeric_quotient_dimension, CycleLimits};
use quiverkit_core::quiver::euler_pairing;
use quiverkit_core::reduction::{central_dimension, classify_singularity};
use quiverkit_core::{CyclicData, DimensionVector, Quiver, QuiverSetting};

fn vectors_up_to_total(k: usize, total: u32) -> Vec<DimensionVector> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<u32>| {
                let used: u32 = prefix.iter().sum();
                (0..=total - used).map(move |x| {
                    let mut next = prefix.clone();
                    next.push(x);
                    next
                })
            })
            .collect();
    }
    out.into_iter()
        .filter(|v| v.iter().any(|&x| x > 0))
        .map(DimensionVector)
        .collect()
}

fn all_quivers(k: usize, max_mult: u32) -> Vec<Quiver> {
    let cells = k * k;
    let base = max_mult + 1;
    (0..base.pow(cells as u32))
        .map(|mut code| {
            let mut adjacency = vec![vec![0; k]; k];
            for cell in 0..cells {
                adjacency[cell / k][cell % k] = code % base;
                code /= base;
            }
            Quiver::from_adjacency(&adjacency).unwrap()
        })
        .collect()
}

fn check_simple_roots(q: &Quiver, total: u32) {
    for b in vectors_up_to_total(q.vertex_count(), total) {
        let claimed = is_simple_root(q, &b).unwrap();
        let observed = burnside_simple(q, &b, 1) || burnside_simple(q, &b, 2);
        assert_eq!(
            claimed,
            observed,
            "quiver {:?}, b = {b}",
            q.adjacency()
        );
    }
}

#[test]
fn simple_roots_match_burnside_on_small_quivers() {
    for k in 1..=2 {
        for q in all_quivers(k, 2) {
            check_simple_roots(&q, 4);
        }
    }
}

#[test]
fn simple_roots_match_burnside_on_three_vertices() {
    let mut r = rng(11);
    for _ in 0..60 {
        let q = loop {
            let q = common::random_quiver(&mut r, 3, 2);
            if q.vertex_count() == 3 {
                break q;
            }
        };
        check_simple_roots(&q, 4);
    }
}

#[test]
fn strata_agree_with_reduction() {
    let limits = EnumerationLimits::default();
    let mut r = rng(5);
    let mut checked = 0;
    for _ in 0..300 {
        let s = random_setting(&mut r, 3, 2, 2);
        if s.dim.total() > limits.max_total {
            continue;
        }
        let by_reduction = classify_singularity(&s).kind;
        let by_strata = classify_by_strata(&s, &limits).unwrap();
        assert_eq!(
            by_reduction,
            by_strata,
            "adjacency {:?}, alpha {}",
            s.quiver.adjacency(),
            s.dim
        );
        checked += 1;
    }
    assert!(checked > 200);
}

#[test]
fn stratum_dimensions_match_quotient_ranks() {
    let limits = EnumerationLimits::default();
    let cycles = CycleLimits::default();
    let mut r = rng(8);
    let mut compared = 0;
    for _ in 0..40 {
        let q = common::random_quiver(&mut r, 2, 2);
        if q.arrows().len() > 5 {
            continue;
        }
        let alpha = common::random_dimension(&mut r, q.vertex_count(), 2);
        for ty in enumerate_rep_types(&q, &alpha, &limits).unwrap() {
            let mut expected = 0;
            for t in ty.terms() {
                let s = QuiverSetting::new(q.clone(), t.root.clone()).unwrap();
                let max_len = (2 * t.root.total() as usize).clamp(2, 5);
                expected += numeric_quotient_dimension(&s, max_len, 3, 0, &cycles)
                    .unwrap()
                    .dimension as u64;
            }
            assert_eq!(
                stratum_dimension(&q, &ty).unwrap(),
                expected,
                "adjacency {:?}, type {ty}",
                q.adjacency()
            );
            compared += 1;
        }
    }
    assert!(compared > 20);
}

#[test]
fn dense_stratum_matches_central_dimension() {
    for ks in [vec![2, 2], vec![2, 3], vec![3, 3, 2], vec![2, 2, 2, 2]] {
        let c = CyclicData::new(ks);
        let q = c.quiver();
        let ones = DimensionVector::ones(c.len());
        let dense = quiverkit_core::classify::RepresentationType::new([(1, ones.clone())]).unwrap();
        let chi = euler_pairing(&q, &ones, &ones).unwrap();
        assert_eq!(stratum_dimension(&q, &dense).unwrap() as i64, 1 - chi);
        assert_eq!(central_dimension(&c), 1 - chi);
    }
}

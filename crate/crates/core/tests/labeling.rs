mod common;

use nalgebra::Matrix2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_cov, CLASSES};
use ltlplan::labeling::{label_true, ConfidentLabeler, Truth};
use ltlplan::ltl::{parse, AtomicProp, Label};
use ltlplan::map::{Landmark, MapBelief, Vec2};

fn random_belief(rng: &mut ChaCha8Rng, n: usize, zero: bool) -> MapBelief {
    let lms = (0..n)
        .map(|_| {
            let mean = Vec2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let cov = if zero { Matrix2::zeros() } else { random_cov(rng) };
            Landmark::new(mean, cov, CLASSES[rng.random_range(0..CLASSES.len())])
        })
        .collect();
    MapBelief::new(lms).unwrap()
}

fn random_atoms(rng: &mut ChaCha8Rng, n: usize) -> Vec<AtomicProp> {
    (0..4)
        .map(|_| {
            let l = rng.random_range(0..n);
            if rng.random_bool(0.75) {
                AtomicProp::near(l, rng.random_range(0.5..3.0)).unwrap()
            } else {
                AtomicProp::class_is(l, [CLASSES[rng.random_range(0..2)]]).unwrap()
            }
        })
        .collect()
}

fn random_point(rng: &mut ChaCha8Rng) -> Vec2 {
    Vec2::new(rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0))
}

#[test]
fn one_ambiguous_atom_empties_the_whole_label() {
    let b = MapBelief::new(vec![
        Landmark::new(Vec2::new(0.0, 0.0), Matrix2::zeros(), "Sq"),
        Landmark::new(Vec2::new(1.5, 0.0), Matrix2::identity() * 0.25, "Cir"),
    ])
    .unwrap();
    let atoms = vec![
        AtomicProp::near(0, 1.0).unwrap(),
        AtomicProp::near(1, 1.0).unwrap(),
        AtomicProp::class_is(0, ["Sq"]).unwrap(),
    ];
    let l = ConfidentLabeler::new(&b, 0.95).unwrap();
    let x = Vec2::new(0.5, 0.0);
    assert_eq!(l.atom(&x, &atoms[0]), Truth::True);
    assert_eq!(l.atom(&x, &atoms[1]), Truth::Unknown);
    assert_eq!(l.atom(&x, &atoms[2]), Truth::True);
    assert_eq!(l.label(&x, &atoms), Label::empty());
    // Dropping the ambiguous atom restores the other two.
    let kept = [atoms[0].clone(), atoms[2].clone()];
    assert_eq!(l.label(&x, &kept), [0, 1].into_iter().collect());
    // Far from the uncertain landmark its atom is decided false.
    let y = Vec2::new(-0.9, 0.0);
    assert_eq!(l.label(&y, &atoms), [0, 2].into_iter().collect());
}

#[test]
fn zero_covariance_labels_equal_true_labels() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let b = random_belief(&mut rng, 4, true);
        let atoms = random_atoms(&mut rng, 4);
        let mean = b.sample(0);
        let l = ConfidentLabeler::new(&b, rng.random_range(0.05..0.99)).unwrap();
        for _ in 0..50 {
            let x = random_point(&mut rng);
            assert_eq!(l.label(&x, &atoms), label_true(&x, &mean, &atoms));
        }
    }
}

#[test]
fn lower_confidence_decides_at_least_as_much() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let b = random_belief(&mut rng, 3, false);
        let atoms = random_atoms(&mut rng, 3);
        let lo = ConfidentLabeler::new(&b, 0.6).unwrap();
        let hi = ConfidentLabeler::new(&b, 0.97).unwrap();
        for _ in 0..50 {
            let x = random_point(&mut rng);
            for a in &atoms {
                let t = hi.atom(&x, a);
                if t != Truth::Unknown {
                    assert_eq!(lo.atom(&x, a), t);
                }
            }
        }
    }
}

#[test]
fn decided_atoms_hold_on_every_map_in_the_region() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    for trial in 0..100u64 {
        let b = random_belief(&mut rng, 3, false);
        let atoms = random_atoms(&mut rng, 3);
        let l = ConfidentLabeler::new(&b, 0.9).unwrap();
        let xs: Vec<Vec2> = (0..20).map(|_| random_point(&mut rng)).collect();
        for i in 0..50 {
            let m = b.sample_in_region_indexed(0.9, trial, i).unwrap();
            for x in &xs {
                let conf = l.label(x, &atoms);
                if !conf.is_empty() {
                    assert_eq!(conf, label_true(x, &m, &atoms));
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 1000, "only {checked} decided labels");
}

#[test]
fn safety_check_is_conservative() {
    let phi = parse("F near(1,1) & G !(near(2,1.5) & class(3,Sq))").unwrap().safety.unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for trial in 0..100u64 {
        let b = random_belief(&mut rng, 3, false);
        let l = ConfidentLabeler::new(&b, 0.9).unwrap();
        for i in 0..20 {
            let m = b.sample_in_region_indexed(0.9, trial, i).unwrap();
            for _ in 0..20 {
                let x = random_point(&mut rng);
                if !l.safety_possibly_violated(&x, &phi) {
                    let atoms = [AtomicProp::near(1, 1.5).unwrap(), AtomicProp::class_is(2, ["Sq"]).unwrap()];
                    let t = label_true(&x, &m, &atoms);
                    assert!(!(t.contains(0) && t.contains(1)));
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn nonempty_confident_labels_are_true_labels_of_region_maps(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_belief(&mut rng, 3, false);
        let atoms = random_atoms(&mut rng, 3);
        let l = ConfidentLabeler::new(&b, 0.95).unwrap();
        let traj: Vec<Vec2> = (0..30).map(|_| random_point(&mut rng)).collect();
        let conf = l.label_sequence(&traj, &atoms);
        for i in 0..20 {
            let m = b.sample_in_region_indexed(0.95, seed, i).unwrap();
            for (x, c) in traj.iter().zip(&conf) {
                prop_assert!(c.is_empty() || *c == label_true(x, &m, &atoms));
            }
        }
    }
}
